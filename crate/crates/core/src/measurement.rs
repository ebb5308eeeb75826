//! Observation model and PDP trace utilities.
//!
//! A sounder observes the PDS convolved with the squared magnitude of the
//! transmitted pulse, on top of a white noise floor:
//! `P_y(τ) = ∫ P(τ - t) |s(t)|² dt + P_noise`.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{direct_spike, pds, DistanceCondition, PdsParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Db,
}

/// Uniform delay grid `start + i·step`, `i < len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl DelayGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !start.is_finite() {
            return Err(Error::param("grid.start", start, "must be finite"));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::param("grid.step", step, "must be positive"));
        }
        if len == 0 {
            return Err(Error::Invalid("delay grid is empty".into()));
        }
        Ok(Self { start, step, len })
    }

    /// Grid covering `[start, stop]` inclusive (up to rounding of the last step).
    pub fn spanning(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(stop > start) {
            return Err(Error::param("grid.stop", stop, "must exceed grid start"));
        }
        let n = ((stop - start) / step * (1.0 + 1e-12)).floor() as usize + 1;
        Self::new(start, step, n)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn at(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn delays(&self) -> impl DoubleEndedIterator<Item = f64> + ExactSizeIterator + '_ {
        (0..self.len).map(|i| self.at(i))
    }

    pub fn same_as(&self, other: &DelayGrid) -> bool {
        let tol = 1e-9 * self.step;
        self.len == other.len
            && (self.start - other.start).abs() <= tol
            && (self.step - other.step).abs() <= 1e-9 * self.step
    }
}

/// Power versus delay on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PdpTrace {
    grid: DelayGrid,
    values: Vec<f64>,
    scale: Scale,
}

impl PdpTrace {
    pub fn new(start: f64, step: f64, values: Vec<f64>, scale: Scale) -> Result<Self> {
        let grid = DelayGrid::new(start, step, values.len())?;
        Self::on_grid(grid, values, scale)
    }

    pub fn on_grid(grid: DelayGrid, values: Vec<f64>, scale: Scale) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} delays",
                values.len(),
                grid.len()
            )));
        }
        match scale {
            Scale::Linear => {
                if let Some((i, &v)) = values
                    .iter()
                    .enumerate()
                    .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
                {
                    return Err(Error::Invalid(format!(
                        "linear power at sample {i} is {v}, must be finite and non-negative"
                    )));
                }
            }
            Scale::Db => {
                if let Some((i, &v)) = values
                    .iter()
                    .enumerate()
                    .find(|(_, v)| v.is_nan() || **v == f64::INFINITY)
                {
                    return Err(Error::Invalid(format!("dB power at sample {i} is {v}")));
                }
            }
        }
        Ok(Self {
            grid,
            values,
            scale,
        })
    }

    /// Builds a trace from explicit delays, checking that they are uniformly
    /// spaced to within `rel_tol` of the step.
    pub fn from_delays(
        delays: &[f64],
        values: Vec<f64>,
        scale: Scale,
        rel_tol: f64,
    ) -> Result<Self> {
        if delays.len() < 2 {
            return Err(Error::Invalid("a trace needs at least two delays".into()));
        }
        let n = delays.len();
        let step = (delays[n - 1] - delays[0]) / (n - 1) as f64;
        if !(step > 0.0) {
            return Err(Error::Invalid("delays must be strictly increasing".into()));
        }
        for (i, &d) in delays.iter().enumerate() {
            let expect = delays[0] + i as f64 * step;
            if (d - expect).abs() > rel_tol * step {
                return Err(Error::Invalid(format!(
                    "delay at sample {i} is {d:e}, breaks uniform spacing {step:e}"
                )));
            }
        }
        Self::new(delays[0], step, values, scale)
    }

    pub fn grid(&self) -> &DelayGrid {
        &self.grid
    }

    pub fn delays(&self) -> impl DoubleEndedIterator<Item = f64> + ExactSizeIterator + '_ {
        self.grid.delays()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseKind {
    Boxcar,
    Gaussian,
}

/// Transmitted pulse with unit energy `∫|s(t)|² dt = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseShape {
    pub kind: PulseKind,
    bandwidth: f64,
}

impl PulseShape {
    pub fn new(kind: PulseKind, bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::param(
                "pulse.bandwidth",
                bandwidth,
                "must be positive",
            ));
        }
        Ok(Self { kind, bandwidth })
    }

    pub fn boxcar(bandwidth: f64) -> Result<Self> {
        Self::new(PulseKind::Boxcar, bandwidth)
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Largest grid step that resolves the pulse.
    pub fn max_step(&self) -> f64 {
        1.0 / (4.0 * self.bandwidth)
    }

    /// Gaussian standard deviation matched to the -3 dB width.
    pub fn gaussian_sigma(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * self.bandwidth * 0.3)
    }

    /// `|s(t)|²` averaged over each grid cell centered on `k·step`, for
    /// `k = -half..=half`, scaled so that `Σ taps · step = 1`.
    pub fn taps(&self, step: f64) -> (Vec<f64>, usize) {
        let cell = |k: i64| (k as f64 - 0.5) * step..(k as f64 + 0.5) * step;
        let (half, mut taps): (i64, Vec<f64>) = match self.kind {
            PulseKind::Boxcar => {
                let w = 0.5 / self.bandwidth;
                let half = (w / step + 0.5).ceil() as i64;
                let taps = (-half..=half)
                    .map(|k| {
                        let c = cell(k);
                        let overlap = (c.end.min(w) - c.start.max(-w)).max(0.0);
                        overlap * self.bandwidth / step
                    })
                    .collect();
                (half, taps)
            }
            PulseKind::Gaussian => {
                let sigma = self.gaussian_sigma();
                let normal = Normal::new(0.0, sigma).expect("sigma is positive");
                let half = (6.0 * sigma / step).ceil() as i64;
                let taps = (-half..=half)
                    .map(|k| {
                        let c = cell(k);
                        (normal.cdf(c.end) - normal.cdf(c.start)) / step
                    })
                    .collect();
                (half, taps)
            }
        };
        let energy: f64 = taps.iter().sum::<f64>() * step;
        taps.iter_mut().for_each(|t| *t /= energy);
        (taps, half as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservationParams {
    pub pulse: PulseShape,
    noise_power: f64,
}

impl ObservationParams {
    pub fn new(pulse: PulseShape, noise_power: f64) -> Result<Self> {
        if !(noise_power.is_finite() && noise_power >= 0.0) {
            return Err(Error::param(
                "noise_power",
                noise_power,
                "must be non-negative",
            ));
        }
        Ok(Self { pulse, noise_power })
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn with_noise_power(self, noise_power: f64) -> Result<Self> {
        Self::new(self.pulse, noise_power)
    }
}

/// Diffuse density on the grid, with any LOS spike deposited as a discrete
/// impulse split linearly between its two neighbouring samples.
fn density_on_grid(grid: &DelayGrid, p: &PdsParams, cond: Option<&DistanceCondition>) -> Vec<f64> {
    let onset = cond.map_or(0.0, |c| c.delay(p.speed_of_light()));
    let mut dens: Vec<f64> = grid
        .delays()
        .map(|tau| if tau >= onset { pds(tau, p) } else { 0.0 })
        .collect();
    if let Some(spike) = cond.and_then(|c| direct_spike(p, c)) {
        let pos = (spike.delay - grid.start()) / grid.step();
        if pos >= 0.0 {
            let j = pos.floor() as usize;
            let frac = pos - j as f64;
            let w = spike.weight / grid.step();
            if j < dens.len() {
                dens[j] += w * (1.0 - frac);
            }
            if j + 1 < dens.len() {
                dens[j + 1] += w * frac;
            }
        }
    }
    dens
}

fn convolve(dens: &[f64], taps: &[f64], half: usize, step: f64) -> Vec<f64> {
    let n = dens.len();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &t) in taps.iter().enumerate() {
            // sample i - (k - half)
            let j = i as isize + half as isize - k as isize;
            if j >= 0 && (j as usize) < n {
                acc += t * dens[j as usize];
            }
        }
        *o = acc * step;
    }
    out
}

/// Observed (band-limited, noisy) PDS sampled on `grid`, linear scale.
pub fn observed_pds(
    grid: &DelayGrid,
    p: &PdsParams,
    cond: Option<&DistanceCondition>,
    obs: &ObservationParams,
) -> Result<PdpTrace> {
    let limit = obs.pulse.max_step();
    if grid.step() > limit * (1.0 + 1e-12) {
        return Err(Error::GridTooCoarse {
            step: grid.step(),
            limit,
        });
    }
    let dens = density_on_grid(grid, p, cond);
    let (taps, half) = obs.pulse.taps(grid.step());
    let mut out = convolve(&dens, &taps, half, grid.step());
    out.iter_mut().for_each(|v| *v += obs.noise_power);
    PdpTrace::on_grid(*grid, out, Scale::Linear)
}

/// Sample-wise mean of linear-scale realizations, optionally returned in dB.
pub fn average_pdp(realizations: &[PdpTrace], output: Scale) -> Result<PdpTrace> {
    let first = realizations
        .first()
        .ok_or_else(|| Error::Invalid("no realizations to average".into()))?;
    let mut acc = vec![0.0; first.len()];
    for (r, trace) in realizations.iter().enumerate() {
        if trace.scale != Scale::Linear {
            return Err(Error::Invalid(format!("realization {r} is not linear")));
        }
        if !trace.grid.same_as(&first.grid) {
            return Err(Error::GridMismatch(format!("realization {r}")));
        }
        for (a, v) in acc.iter_mut().zip(&trace.values) {
            *a += v;
        }
    }
    let n = realizations.len() as f64;
    acc.iter_mut().for_each(|v| *v /= n);
    let mean = PdpTrace::on_grid(first.grid, acc, Scale::Linear)?;
    db_linear_convert(&mean, output)
}

pub fn to_db(v: f64) -> f64 {
    10.0 * v.log10()
}

pub fn from_db(v: f64) -> f64 {
    10f64.powf(v / 10.0)
}

/// Converts between linear power and dB, sample-wise.
pub fn db_linear_convert(trace: &PdpTrace, target: Scale) -> Result<PdpTrace> {
    let values = match (trace.scale, target) {
        (a, b) if a == b => trace.values.clone(),
        (Scale::Linear, Scale::Db) => trace
            .values
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                if value > 0.0 {
                    Ok(to_db(value))
                } else {
                    Err(Error::NonPositiveLinear { index, value })
                }
            })
            .collect::<Result<_>>()?,
        _ => trace.values.iter().map(|&v| from_db(v)).collect(),
    };
    PdpTrace::on_grid(trace.grid, values, target)
}
