//! Mirror-source Monte-Carlo simulator.
//!
//! Brute-force counterpart of the closed-form model: every image source of
//! the transmitter is enumerated with its exact bounce count, attenuated by
//! `A^B` and free-space spreading, and binned by delay. Averaging over random
//! placements estimates the power delay spectrum without the mean-bounce
//! approximation the closed form relies on.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::measurement::{PdpTrace, Scale};
use crate::model::{bounce_matrix, DistanceCondition, PdsParams, RoomGeometry};

/// Realizations handled by one work item. Fixed so that results do not
/// depend on the thread count.
const CHUNK: usize = 512;
const MAX_DIRECTION_TRIES: usize = 1_000;
const MAX_RECEIVER_TRIES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSource {
    pub position: [f64; 3],
    pub bounces: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    /// Transmitter and receiver independently uniform in the room.
    Uniform,
    /// Receiver uniform, transmitter uniform on the sphere of radius `d`
    /// around it (restricted to the room). NLOS drops the direct image.
    FixedDistance(DistanceCondition),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_realizations: usize,
    pub bin_width: f64,
    pub max_delay: f64,
    pub rng_seed: u64,
    pub placement: Placement,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(Error::param(
                "simulate.realizations",
                0.0,
                "must be positive",
            ));
        }
        if !(self.bin_width.is_finite() && self.bin_width > 0.0) {
            return Err(Error::param(
                "simulate.bin_width",
                self.bin_width,
                "must be positive",
            ));
        }
        if !(self.max_delay.is_finite() && self.max_delay > self.bin_width) {
            return Err(Error::param(
                "simulate.max_delay",
                self.max_delay,
                "must exceed the bin width",
            ));
        }
        let ratio = self.max_delay / self.bin_width;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(Error::param(
                "simulate.max_delay",
                self.max_delay,
                "must be an integer multiple of the bin width",
            ));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        (self.max_delay / self.bin_width).round() as usize
    }
}

/// Co-channel and cross-channel PDP estimates from one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub co: PdpTrace,
    pub cross: PdpTrace,
}

/// One-axis images: `(coordinate, bounces)` within `reach` of `[0, length]`.
fn axis_images(length: f64, x: f64, reach: f64) -> Vec<(f64, u32, f64)> {
    let p_max = ((reach + 2.0 * length) / (2.0 * length)).ceil() as i64 + 1;
    let mut out = Vec::new();
    for p in -p_max..=p_max {
        let base = 2.0 * p as f64 * length;
        for (coord, bounces) in [
            (base + x, (2 * p).unsigned_abs() as u32),
            (base - x, (2 * p - 1).unsigned_abs() as u32),
        ] {
            let gap = if coord < 0.0 {
                -coord
            } else if coord > length {
                coord - length
            } else {
                0.0
            };
            if gap <= reach {
                out.push((coord, bounces, gap * gap));
            }
        }
    }
    out
}

fn images_into(room: &RoomGeometry, tx: [f64; 3], reach: f64, out: &mut Vec<ImageSource>) {
    let [lx, ly, lz] = room.dims();
    let xs = axis_images(lx, tx[0], reach);
    let ys = axis_images(ly, tx[1], reach);
    let zs = axis_images(lz, tx[2], reach);
    let r2 = reach * reach;
    out.clear();
    for &(x, bx, gx) in &xs {
        for &(y, by, gy) in &ys {
            if gx + gy > r2 {
                continue;
            }
            for &(z, bz, gz) in &zs {
                if gx + gy + gz <= r2 {
                    out.push(ImageSource {
                        position: [x, y, z],
                        bounces: bx + by + bz,
                    });
                }
            }
        }
    }
}

/// Every image of `tx` lying within `reach` of the room, so no arrival with
/// delay up to `reach / c` is missed for any receiver inside the room.
///
/// Per axis, images sit at `2pL + x` (`|2p|` bounces) and `2pL - x`
/// (`|2p - 1|` bounces).
pub fn enumerate_images(room: &RoomGeometry, tx: [f64; 3], reach: f64) -> Result<Vec<ImageSource>> {
    if !room.contains(tx) {
        return Err(Error::OutsideRoom(tx));
    }
    if !(reach.is_finite() && reach > 0.0) {
        return Err(Error::param("reach", reach, "must be positive"));
    }
    let mut out = Vec::new();
    images_into(room, tx, reach, &mut out);
    Ok(out)
}

fn open_unit(rng: &mut impl Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn uniform_point(room: &RoomGeometry, rng: &mut impl Rng) -> [f64; 3] {
    room.dims().map(|l| open_unit(rng) * l)
}

fn unit_vector(rng: &mut impl Rng) -> [f64; 3] {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

/// Draws `(tx, rx)` for one realization.
fn draw_placement(
    room: &RoomGeometry,
    placement: &Placement,
    rng: &mut impl Rng,
) -> Result<([f64; 3], [f64; 3])> {
    match placement {
        Placement::Uniform => {
            let tx = uniform_point(room, rng);
            let rx = uniform_point(room, rng);
            Ok((tx, rx))
        }
        Placement::FixedDistance(cond) => {
            let d = cond.distance();
            for _ in 0..MAX_RECEIVER_TRIES {
                let rx = uniform_point(room, rng);
                for _ in 0..MAX_DIRECTION_TRIES {
                    let u = unit_vector(rng);
                    let tx = [rx[0] + d * u[0], rx[1] + d * u[1], rx[2] + d * u[2]];
                    if room.contains(tx) {
                        return Ok((tx, rx));
                    }
                }
            }
            Err(Error::NoPlacement(d))
        }
    }
}

/// `μ_rᵀ A^B μ_t` for the co and cross receivers, `B = 0..=max`, by
/// repeated multiplication.
fn gain_table(p: &PdsParams, max_bounces: usize) -> Vec<(f64, f64)> {
    let a = bounce_matrix(&p.material);
    let mt = p.mu_t.as_array();
    let mr = p.mu_r.as_array();
    let mx = p.mu_r.swapped().as_array();
    let mut v = mt;
    let mut out = Vec::with_capacity(max_bounces + 1);
    for _ in 0..=max_bounces {
        out.push((mr[0] * v[0] + mr[1] * v[1], mx[0] * v[0] + mx[1] * v[1]));
        v = [
            a[0][0] * v[0] + a[0][1] * v[1],
            a[1][0] * v[0] + a[1][1] * v[1],
        ];
    }
    out
}

fn max_bounces(room: &RoomGeometry, reach: f64) -> usize {
    room.dims()
        .iter()
        .map(|&l| 2 * (((reach + 2.0 * l) / (2.0 * l)).ceil() as usize + 1) + 1)
        .sum()
}

/// Estimates the co- and cross-channel PDP by averaging binned image-source
/// arrivals over random placements.
///
/// The co channel uses `(μ_t, μ_r)`, the cross channel `(μ_t, swapped μ_r)`.
/// Bins are left-closed; arrivals at or beyond `max_delay` are dropped.
/// Bin values are power per realization per second of delay. The output is
/// bit-identical for a fixed seed regardless of `exec`.
pub fn simulate_pdp(p: &PdsParams, cfg: &SimConfig, exec: Execution) -> Result<SimOutput> {
    cfg.validate()?;
    let room = p.room;
    if let Placement::FixedDistance(cond) = cfg.placement {
        if cond.distance() >= room.diagonal() {
            return Err(Error::NoPlacement(cond.distance()));
        }
    }
    let c = p.speed_of_light();
    let reach = c * cfg.max_delay + room.diagonal();
    let gains = gain_table(p, max_bounces(&room, reach));
    let n_bins = cfg.n_bins();
    let lambda2 = p.wavelength() * p.wavelength();
    let drop_direct = matches!(cfg.placement, Placement::FixedDistance(cond) if !cond.los);

    let n_chunks = cfg.n_realizations.div_ceil(CHUNK);
    let partials = exec.map_chunks(n_chunks, |chunk| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut co = vec![0.0; n_bins];
        let mut cross = vec![0.0; n_bins];
        let mut images = Vec::new();
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(cfg.n_realizations);
        for realization in start..end {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            rng.set_stream(realization as u64);
            let (tx, rx) = draw_placement(&room, &cfg.placement, &mut rng)?;
            images_into(&room, tx, reach, &mut images);
            for img in &images {
                if drop_direct && img.bounces == 0 {
                    continue;
                }
                let d2 = (img.position[0] - rx[0]).powi(2)
                    + (img.position[1] - rx[1]).powi(2)
                    + (img.position[2] - rx[2]).powi(2);
                let tau = d2.sqrt() / c;
                if tau >= cfg.max_delay {
                    continue;
                }
                let bin = (tau / cfg.bin_width) as usize;
                if bin >= n_bins {
                    continue;
                }
                let spread = lambda2 / (4.0 * PI * d2);
                let (g_co, g_cross) = gains[img.bounces as usize];
                co[bin] += g_co * spread;
                cross[bin] += g_cross * spread;
            }
        }
        Ok((co, cross))
    });

    let mut co = vec![0.0; n_bins];
    let mut cross = vec![0.0; n_bins];
    for part in partials {
        let (pc, px) = part?;
        for (acc, v) in co.iter_mut().zip(pc) {
            *acc += v;
        }
        for (acc, v) in cross.iter_mut().zip(px) {
            *acc += v;
        }
    }
    let norm = 1.0 / (cfg.n_realizations as f64 * cfg.bin_width);
    co.iter_mut().for_each(|v| *v *= norm);
    cross.iter_mut().for_each(|v| *v *= norm);
    let first = 0.5 * cfg.bin_width;
    Ok(SimOutput {
        co: PdpTrace::new(first, cfg.bin_width, co, Scale::Linear)?,
        cross: PdpTrace::new(first, cfg.bin_width, cross, Scale::Linear)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PolGain, WallMaterial};

    fn room() -> RoomGeometry {
        RoomGeometry::new(3.0, 4.0, 3.0).unwrap()
    }

    fn params(g: f64, gamma: f64) -> PdsParams {
        let v = PolGain::vertical();
        PdsParams::new(room(), WallMaterial::new(g, gamma).unwrap(), v, v, 5e-3).unwrap()
    }

    #[test]
    fn zeroth_image_is_the_source() {
        let tx = [1.0, 2.5, 0.7];
        let images = enumerate_images(&room(), tx, 5.0).unwrap();
        let direct: Vec<_> = images.iter().filter(|i| i.bounces == 0).collect();
        assert_eq!(direct.len(), 1);
        assert_eq!(direct[0].position, tx);
    }

    #[test]
    fn first_odd_image_is_single_bounce() {
        let images = axis_images(3.0, 1.0, 5.0);
        assert!(images.contains(&(-1.0, 1, 1.0)));
        assert!(images.contains(&(5.0, 1, 4.0)));
        assert!(images.contains(&(7.0, 2, 16.0)));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            enumerate_images(&room(), [0.0, 1.0, 1.0], 1.0),
            Err(Error::OutsideRoom(_))
        ));
        assert!(enumerate_images(&room(), [3.5, 1.0, 1.0], 1.0).is_err());
        assert!(enumerate_images(&room(), [1.0, 1.0, 1.0], 0.0).is_err());
        let cfg = SimConfig {
            n_realizations: 10,
            bin_width: 1e-9,
            max_delay: 1e-9,
            rng_seed: 0,
            placement: Placement::Uniform,
        };
        assert!(simulate_pdp(&params(0.4, 0.04), &cfg, Execution::Sequential).is_err());
        let cfg = SimConfig {
            max_delay: 10e-9,
            placement: Placement::FixedDistance(DistanceCondition::new(6.0, true).unwrap()),
            ..cfg
        };
        assert!(matches!(
            simulate_pdp(&params(0.4, 0.04), &cfg, Execution::Sequential),
            Err(Error::NoPlacement(_))
        ));
    }

    #[test]
    fn no_leakage_means_no_cross_power() {
        let cfg = SimConfig {
            n_realizations: 200,
            bin_width: 1e-9,
            max_delay: 20e-9,
            rng_seed: 7,
            placement: Placement::Uniform,
        };
        let out = simulate_pdp(&params(0.4, 0.0), &cfg, Execution::Sequential).unwrap();
        assert!(out.cross.values().iter().all(|&v| v == 0.0));
        assert!(out.co.values().iter().any(|&v| v > 0.0));
    }

    #[test]
    fn nlos_gate_is_empty() {
        let cond = DistanceCondition::new(1.8, false).unwrap();
        let cfg = SimConfig {
            n_realizations: 500,
            bin_width: 1e-9,
            max_delay: 20e-9,
            rng_seed: 3,
            placement: Placement::FixedDistance(cond),
        };
        let p = params(0.4, 0.04);
        let out = simulate_pdp(&p, &cfg, Execution::Sequential).unwrap();
        let onset = cond.delay(p.speed_of_light());
        for (tau, v) in out.co.delays().zip(out.co.values()) {
            if tau + 0.5e-9 <= onset {
                assert_eq!(*v, 0.0, "bin at {tau}");
            }
        }
        assert!(out.co.values().iter().any(|&v| v > 0.0));
    }

    #[test]
    fn execution_strategy_does_not_change_results() {
        let cfg = SimConfig {
            n_realizations: 1500,
            bin_width: 1e-9,
            max_delay: 15e-9,
            rng_seed: 11,
            placement: Placement::Uniform,
        };
        let p = params(0.4, 0.04);
        let a = simulate_pdp(&p, &cfg, Execution::Sequential).unwrap();
        let b = simulate_pdp(&p, &cfg, Execution::ParallelWith { workers: 3 }).unwrap();
        assert_eq!(a, b);
    }
}
