//! Mirror-source oracle checked against geometry and an independent
//! semi-analytic expectation of the exact bounce statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roomem::{
    enumerate_images, simulate_pdp, Execution, PdsParams, Placement, PolGain, RoomGeometry,
    SimConfig, WallMaterial,
};

fn room() -> RoomGeometry {
    RoomGeometry::new(3.0, 4.0, 3.0).unwrap()
}

fn params(g: f64, gamma: f64, mu_t: PolGain, mu_r: PolGain) -> PdsParams {
    PdsParams::new(
        room(),
        WallMaterial::new(g, gamma).unwrap(),
        mu_t,
        mu_r,
        5e-3,
    )
    .unwrap()
}

fn uniform_config(n: usize, max_ns: f64, seed: u64) -> SimConfig {
    SimConfig {
        n_realizations: n,
        bin_width: 1e-9,
        max_delay: max_ns * 1e-9,
        rng_seed: seed,
        placement: Placement::Uniform,
    }
}

fn point_in(room: &RoomGeometry, rng: &mut impl Rng) -> [f64; 3] {
    room.dims().map(|l| rng.random_range(0.01..0.99) * l)
}

/// Planes `x = kL` strictly between `a` and `b`.
fn planes_between(a: f64, b: f64, l: f64) -> u32 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let first = (lo / l).floor() as i64 + 1;
    let last = (hi / l).ceil() as i64 - 1;
    (last - first + 1).max(0) as u32
}

#[test]
fn bounce_counts_equal_wall_crossings() {
    let r = room();
    let dims = r.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let tx = point_in(&r, &mut rng);
        let images = enumerate_images(&r, tx, 40.0).unwrap();
        for _ in 0..100 {
            let img = images[rng.random_range(0..images.len())];
            let rx = point_in(&r, &mut rng);
            let crossings: u32 = (0..3)
                .map(|k| planes_between(rx[k], img.position[k], dims[k]))
                .sum();
            assert_eq!(crossings, img.bounces, "{img:?} seen from {rx:?}");
        }
    }
}

#[test]
fn image_count_matches_volume_ratio() {
    let r = room();
    let radius = 10.0 * r.volume().cbrt();
    let expect = 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3) / r.volume();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let tx = point_in(&r, &mut rng);
        let rx = point_in(&r, &mut rng);
        let count = enumerate_images(&r, tx, radius)
            .unwrap()
            .iter()
            .filter(|i| {
                let d2: f64 = (0..3).map(|k| (i.position[k] - rx[k]).powi(2)).sum();
                d2 < radius * radius
            })
            .count() as f64;
        assert!((count / expect - 1.0).abs() < 0.05, "{count} vs {expect}");
    }
}

#[test]
fn fixed_seed_is_reproducible_across_execution() {
    let p = params(0.4, 0.04, PolGain::vertical(), PolGain::vertical());
    let cfg = uniform_config(3000, 30.0, 99);
    let a = simulate_pdp(&p, &cfg, Execution::Sequential).unwrap();
    let b = simulate_pdp(&p, &cfg, Execution::Parallel).unwrap();
    let c = simulate_pdp(&p, &cfg, Execution::ParallelWith { workers: 2 }).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let other = simulate_pdp(&p, &uniform_config(3000, 30.0, 100), Execution::Sequential).unwrap();
    assert_ne!(a.co.values(), other.co.values());
}

/// Expected `(co, cross)` PDP under uniform placement, with the bounce count
/// per axis being the floor or ceiling of `|Δ|/L`. Spherical average over a
/// Fibonacci lattice, bin average by midpoints.
fn expected_bin(p: &PdsParams, lo: f64, hi: f64) -> (f64, f64) {
    const DIRS: usize = 4000;
    const SUB: usize = 6;
    let dims = p.room.dims();
    let g = p.material.g();
    let gr = g * p.material.mixing_eigenvalue();
    let c = p.speed_of_light();
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mt = p.mu_t.as_array();
    let mr = p.mu_r.as_array();
    let mx = p.mu_r.swapped().as_array();
    let (mut co, mut cross) = (0.0, 0.0);
    for s in 0..SUB {
        let tau = lo + (s as f64 + 0.5) * (hi - lo) / SUB as f64;
        let (mut e1, mut e2) = (0.0, 0.0);
        for i in 0..DIRS {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / DIRS as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            let dir = [rho * phi.cos(), rho * phi.sin(), z];
            let (mut f1, mut f2) = (1.0, 1.0);
            for k in 0..3 {
                let q = (c * tau * dir[k]).abs() / dims[k];
                let n = q.floor();
                let f = q - n;
                f1 *= (1.0 - f) * g.powf(n) + f * g.powf(n + 1.0);
                f2 *= (1.0 - f) * gr.powf(n) + f * gr.powf(n + 1.0);
            }
            e1 += f1;
            e2 += f2;
        }
        e1 /= DIRS as f64;
        e2 /= DIRS as f64;
        let m = [
            [(e1 + e2) / 2.0, (e1 - e2) / 2.0],
            [(e1 - e2) / 2.0, (e1 + e2) / 2.0],
        ];
        let gain = |r: [f64; 2]| {
            (0..2)
                .map(|i| (0..2).map(|j| r[i] * m[i][j] * mt[j]).sum::<f64>())
                .sum::<f64>()
        };
        co += gain(mr);
        cross += gain(mx);
    }
    let scale = c * p.wavelength().powi(2) / p.room.volume() / SUB as f64;
    (co * scale, cross * scale)
}

fn check_against_expectation(p: &PdsParams, n: usize, tol_db: f64) {
    let cfg = uniform_config(n, 30.0, 2024);
    let sim = simulate_pdp(p, &cfg, Execution::Parallel).unwrap();
    for bin in 2..30 {
        let lo = bin as f64 * 1e-9;
        let (eco, ecross) = expected_bin(p, lo, lo + 1e-9);
        let dco = 10.0 * (sim.co.values()[bin] / eco).log10();
        let dcross = 10.0 * (sim.cross.values()[bin] / ecross).log10();
        assert!(dco.abs() < tol_db, "co bin {bin}: {dco} dB");
        assert!(dcross.abs() < tol_db, "cross bin {bin}: {dcross} dB");
    }
}

#[test]
fn matches_exact_bounce_expectation() {
    let v = PolGain::vertical();
    check_against_expectation(&params(0.4, 0.04, v, v), 20_000, 0.5);
}

#[test]
fn matches_exact_bounce_expectation_mixed_antennas() {
    let mu_t = PolGain::lossless(0.1).unwrap();
    let mu_r = PolGain::new(0.7, 0.2).unwrap();
    check_against_expectation(&params(0.3, 0.1, mu_t, mu_r), 20_000, 0.5);
}

#[test]
fn block_energy_decreases() {
    let v = PolGain::vertical();
    let p = params(0.4, 0.04, v, v);
    let sim = simulate_pdp(&p, &uniform_config(10_000, 40.0, 3), Execution::Parallel).unwrap();
    let blocks: Vec<f64> = (0..8)
        .map(|b| {
            (5 * b..5 * b + 5)
                .map(|i| sim.co.values()[i] + sim.cross.values()[i])
                .sum()
        })
        .collect();
    for w in blocks.windows(2) {
        assert!(w[1] < w[0], "{blocks:?}");
    }
}

#[test]
fn standard_error_shrinks_with_realizations() {
    let v = PolGain::vertical();
    let p = params(0.4, 0.04, v, v);
    let runs = |n: usize, seed0: u64| -> Vec<Vec<f64>> {
        (0..8)
            .map(|k| {
                let sim =
                    simulate_pdp(&p, &uniform_config(n, 20.0, seed0 + k), Execution::Parallel)
                        .unwrap();
                sim.co.values()[2..20].to_vec()
            })
            .collect()
    };
    let rel_var = |set: &[Vec<f64>]| -> f64 {
        let bins = set[0].len();
        (0..bins)
            .map(|b| {
                let xs: Vec<f64> = set.iter().map(|r| r[b]).collect();
                let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>()
                    / ((xs.len() - 1) as f64 * mean * mean)
            })
            .sum::<f64>()
            / bins as f64
    };
    let small = rel_var(&runs(2000, 1000));
    let large = rel_var(&runs(4000, 2000));
    let ratio = (large / small).sqrt();
    assert!(
        (ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.15,
        "{ratio}"
    );
}
