//! Nonlinear least-squares estimation of `(g, γ, ξ, P_noise)` from average
//! co- and cross-polar PDPs in dB.
//!
//! The co channel is modeled with `μ_t = μ_r = [1-ξ, ξ]` and the cross
//! channel with `μ_r = [ξ, 1-ξ]`. Both are passed through the observation
//! model and compared with the measurements sample by sample in dB. The
//! optimizer works on unconstrained coordinates: a scaled logit for `g`, `γ`
//! and `ξ` and a natural log for `P_noise`.

pub mod lm;
pub mod simplex;

use std::ops::Range;

use crate::error::{Error, Result};
use crate::measurement::{
    db_linear_convert, observed_pds, to_db, DelayGrid, ObservationParams, PdpTrace, PulseShape,
    Scale,
};
use crate::model::{
    cpr, mixing_constant, mixing_time, reverberation_time, DistanceCondition, PdsParams, PolGain,
    RoomGeometry, WallMaterial, SPEED_OF_LIGHT,
};
use crate::transform::Interval;

pub use lm::{Minimum, StopRule};

const N_PARAMS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    pub g: f64,
    pub gamma: f64,
    pub xi: f64,
    pub noise_power: f64,
}

impl FitParams {
    pub fn material(&self) -> Result<WallMaterial> {
        WallMaterial::new(self.g, self.gamma)
    }
}

/// Open intervals for the bounded parameters. `P_noise` is only required to
/// be positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub g: Interval,
    pub gamma: Interval,
    pub xi: Interval,
}

impl Default for Bounds {
    fn default() -> Self {
        let unit = Interval { lo: 0.0, hi: 1.0 };
        Self {
            g: unit,
            gamma: unit,
            xi: unit,
        }
    }
}

impl Bounds {
    pub fn new(g: (f64, f64), gamma: (f64, f64), xi: (f64, f64)) -> Result<Self> {
        let check = |field: &'static str, (lo, hi): (f64, f64)| -> Result<Interval> {
            match Interval::new(lo, hi) {
                Some(iv) if lo >= 0.0 && hi <= 1.0 => Ok(iv),
                _ => Err(Error::param(
                    field,
                    lo,
                    "bounds must satisfy 0 <= lo < hi <= 1",
                )),
            }
        };
        Ok(Self {
            g: check("fit.bounds.g", g)?,
            gamma: check("fit.bounds.gamma", gamma)?,
            xi: check("fit.bounds.xi", xi)?,
        })
    }

    fn check(&self, p: &FitParams) -> Result<()> {
        if !self.g.contains_open(p.g) {
            return Err(Error::param("g", p.g, "outside the fit bounds"));
        }
        if !self.gamma.contains_open(p.gamma) {
            return Err(Error::param("gamma", p.gamma, "outside the fit bounds"));
        }
        if !self.xi.contains_open(p.xi) {
            return Err(Error::param("xi", p.xi, "outside the fit bounds"));
        }
        if !(p.noise_power.is_finite() && p.noise_power > 0.0) {
            return Err(Error::param(
                "noise_power",
                p.noise_power,
                "must be positive",
            ));
        }
        Ok(())
    }

    fn to_unbounded(&self, p: &FitParams) -> [f64; N_PARAMS] {
        [
            self.g.to_unbounded(p.g),
            self.gamma.to_unbounded(p.gamma),
            self.xi.to_unbounded(p.xi),
            p.noise_power.ln(),
        ]
    }

    fn to_bounded(&self, u: &[f64]) -> FitParams {
        FitParams {
            g: self.g.to_bounded(u[0]),
            gamma: self.gamma.to_bounded(u[1]),
            xi: self.xi.to_bounded(u[2]),
            noise_power: u[3].exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitMethod {
    #[default]
    LevenbergMarquardt,
    NelderMead,
}

#[derive(Debug, Clone)]
pub struct FitProblem {
    pub room: RoomGeometry,
    wavelength: f64,
    speed_of_light: f64,
    pub cond: DistanceCondition,
    pub pulse: PulseShape,
    co: PdpTrace,
    cross: PdpTrace,
    window: Option<(f64, f64)>,
    initial: Option<FitParams>,
    pub bounds: Bounds,
    pub method: FitMethod,
}

impl FitProblem {
    /// `co` and `cross` are measured average PDPs in dB on one grid.
    pub fn new(
        room: RoomGeometry,
        wavelength: f64,
        cond: DistanceCondition,
        pulse: PulseShape,
        co: PdpTrace,
        cross: PdpTrace,
    ) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::param("wavelength", wavelength, "must be positive"));
        }
        if co.scale() != Scale::Db || cross.scale() != Scale::Db {
            return Err(Error::Invalid("measured traces must be in dB".into()));
        }
        if !co.grid().same_as(cross.grid()) {
            return Err(Error::GridMismatch("co and cross traces".into()));
        }
        Ok(Self {
            room,
            wavelength,
            speed_of_light: SPEED_OF_LIGHT,
            cond,
            pulse,
            co,
            cross,
            window: None,
            initial: None,
            bounds: Bounds::default(),
            method: FitMethod::default(),
        })
    }

    pub fn with_speed_of_light(mut self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::param("speed_of_light", c, "must be positive"));
        }
        self.speed_of_light = c;
        Ok(self)
    }

    /// Restricts the residuals to delays in `[start, stop]`.
    pub fn with_window(mut self, start: f64, stop: f64) -> Result<Self> {
        let grid = self.grid();
        let last = grid.at(grid.len() - 1);
        if !(stop > start) || start > last || stop < grid.start() {
            return Err(Error::Invalid(format!(
                "fit window [{start:e}, {stop:e}] s does not overlap the grid [{:e}, {last:e}] s",
                grid.start()
            )));
        }
        self.window = Some((start, stop));
        Ok(self)
    }

    pub fn with_initial(mut self, initial: FitParams) -> Self {
        self.initial = Some(initial);
        self
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_method(mut self, method: FitMethod) -> Self {
        self.method = method;
        self
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn speed_of_light(&self) -> f64 {
        self.speed_of_light
    }

    pub fn grid(&self) -> &DelayGrid {
        self.co.grid()
    }

    pub fn co_trace(&self) -> &PdpTrace {
        &self.co
    }

    pub fn cross_trace(&self) -> &PdpTrace {
        &self.cross
    }

    pub fn window_indices(&self) -> Range<usize> {
        let grid = self.grid();
        match self.window {
            None => 0..grid.len(),
            Some((start, stop)) => {
                let tol = 1e-9 * grid.step();
                let first = grid
                    .delays()
                    .position(|t| t >= start - tol)
                    .unwrap_or(grid.len());
                let end = grid
                    .delays()
                    .rposition(|t| t <= stop + tol)
                    .map_or(0, |i| i + 1);
                first..end.max(first)
            }
        }
    }

    /// Explicit initial guess, or `g = 0.5, γ = 0.05, ξ = 0.05` with the
    /// noise floor estimated from the tail of the co trace.
    pub fn initial_guess(&self) -> FitParams {
        self.initial.unwrap_or_else(|| FitParams {
            g: 0.5,
            gamma: 0.05,
            xi: 0.05,
            noise_power: tail_floor(&self.co).unwrap_or(1e-12),
        })
    }

    fn pds_params(&self, p: &FitParams, cross_channel: bool) -> Result<PdsParams> {
        let mu = PolGain::lossless(p.xi)?;
        let mu_r = if cross_channel { mu.swapped() } else { mu };
        PdsParams::new(self.room, p.material()?, mu, mu_r, self.wavelength)?
            .with_speed_of_light(self.speed_of_light)
    }
}

/// Median of the last 10 % of a dB trace, in linear units.
fn tail_floor(trace: &PdpTrace) -> Option<f64> {
    let n = trace.len();
    let tail = (n / 10).max(1);
    let mut vals: Vec<f64> = trace.values()[n - tail..]
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    if vals.is_empty() {
        return None;
    }
    vals.sort_by(f64::total_cmp);
    let m = vals.len() / 2;
    let median = if vals.len() % 2 == 1 {
        vals[m]
    } else {
        0.5 * (vals[m - 1] + vals[m])
    };
    Some(10f64.powf(median / 10.0))
}

/// Modeled co- and cross-channel observations on the problem grid, linear.
pub fn model_traces(
    params: &FitParams,
    problem: &FitProblem,
    cond: &DistanceCondition,
) -> Result<(PdpTrace, PdpTrace)> {
    let obs = ObservationParams::new(problem.pulse, params.noise_power)?;
    let grid = problem.grid();
    let co = observed_pds(grid, &problem.pds_params(params, false)?, Some(cond), &obs)?;
    let cross = observed_pds(grid, &problem.pds_params(params, true)?, Some(cond), &obs)?;
    Ok((co, cross))
}

/// dB residuals over the fit window: co samples followed by cross samples.
/// Samples whose measurement is not finite are skipped.
pub fn residual(params: &FitParams, problem: &FitProblem) -> Result<Vec<f64>> {
    problem.bounds.check(params)?;
    residual_unchecked(params, problem)
}

fn residual_unchecked(params: &FitParams, problem: &FitProblem) -> Result<Vec<f64>> {
    let (co, cross) = model_traces(params, problem, &problem.cond)?;
    let window = problem.window_indices();
    let mut out = Vec::with_capacity(2 * window.len());
    for (model, measured) in [(&co, &problem.co), (&cross, &problem.cross)] {
        for i in window.clone() {
            let m = measured.values()[i];
            if m.is_finite() {
                out.push(to_db(model.values()[i]) - m);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub g: f64,
    pub gamma: f64,
    pub xi: f64,
    pub noise_power: f64,
    pub reverberation_time: f64,
    pub mixing_time: f64,
    pub mixing_constant: f64,
    /// CPR of the co-channel antenna pair `μ_t = μ_r = [1-ξ, ξ]`.
    pub cpr: f64,
    pub residual_rms_db: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The cross trace never rises 3 dB above its floor, so `γ` and `ξ` are
    /// poorly constrained.
    pub weakly_identified: bool,
    pub objective_history: Vec<f64>,
}

impl FitResult {
    pub fn params(&self) -> FitParams {
        FitParams {
            g: self.g,
            gamma: self.gamma,
            xi: self.xi,
            noise_power: self.noise_power,
        }
    }

    /// Fills in the derived quantities for `params` from the closed forms.
    fn derive(params: FitParams, room: &RoomGeometry, c: f64) -> Result<Self> {
        let material = params.material()?;
        let mu = PolGain::lossless(params.xi)?;
        let p = PdsParams::new(*room, material, mu, mu, 1.0)?.with_speed_of_light(c)?;
        Ok(Self {
            g: params.g,
            gamma: params.gamma,
            xi: params.xi,
            noise_power: params.noise_power,
            reverberation_time: reverberation_time(room, &material, c),
            mixing_time: mixing_time(room, &material, c),
            mixing_constant: mixing_constant(&material),
            cpr: cpr(&p),
            residual_rms_db: f64::NAN,
            iterations: 0,
            converged: false,
            weakly_identified: false,
            objective_history: Vec::new(),
        })
    }

    /// A result carrying `params` and their derived values, without fit
    /// diagnostics.
    pub fn from_params(params: FitParams, room: &RoomGeometry, c: f64) -> Result<Self> {
        Self::derive(params, room, c)
    }
}

/// A bounded coordinate this far out in logit space sits on its bound.
const PINNED_LOGIT: f64 = 12.0;

/// Starting fractions of the `γ` and `ξ` intervals tried when the first
/// optimum is pinned to a bound.
const RESTART_FRACTIONS: [f64; 3] = [0.01, 0.05, 0.2];

fn pinned(u: &[f64]) -> bool {
    u[..3].iter().any(|v| v.abs() > PINNED_LOGIT)
}

fn weakly_identified(problem: &FitProblem) -> bool {
    let Some(floor) = tail_floor(&problem.cross) else {
        return true;
    };
    let peak = problem
        .window_indices()
        .map(|i| problem.cross.values()[i])
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    peak <= to_db(floor) + 3.0
}

pub fn fit(problem: &FitProblem) -> Result<FitResult> {
    fit_with(problem, StopRule::default())
}

pub fn fit_with(problem: &FitProblem, rule: StopRule) -> Result<FitResult> {
    let initial = problem.initial_guess();
    problem.bounds.check(&initial)?;
    let usable = problem
        .window_indices()
        .map(|i| {
            problem.co.values()[i].is_finite() as usize
                + problem.cross.values()[i].is_finite() as usize
        })
        .sum::<usize>();
    if usable <= N_PARAMS {
        return Err(Error::DegenerateWindow {
            samples: usable,
            params: N_PARAMS,
        });
    }

    let bounds = problem.bounds;
    let objective = |u: &[f64]| residual_unchecked(&bounds.to_bounded(u), problem);
    let run = |start: &FitParams| -> Result<Minimum> {
        let x0 = bounds.to_unbounded(start);
        match problem.method {
            FitMethod::LevenbergMarquardt => lm::minimize(objective, &x0, rule),
            FitMethod::NelderMead => simplex::minimize(objective, &x0, rule),
        }
    };
    let mut min = run(&initial)?;
    if pinned(&min.x) {
        for gamma in RESTART_FRACTIONS {
            for xi in RESTART_FRACTIONS {
                let start = FitParams {
                    gamma: bounds.gamma.lo + gamma * (bounds.gamma.hi - bounds.gamma.lo),
                    xi: bounds.xi.lo + xi * (bounds.xi.hi - bounds.xi.lo),
                    ..initial
                };
                let candidate = run(&start)?;
                if candidate.objective < min.objective {
                    min = candidate;
                }
            }
        }
    }

    let mut params = bounds.to_bounded(&min.x);
    // ξ and 1-ξ give identical traces.
    if params.xi > 0.5 && bounds.xi.contains_open(1.0 - params.xi) {
        params.xi = 1.0 - params.xi;
    }
    let mut result = FitResult::derive(params, &problem.room, problem.speed_of_light)?;
    result.residual_rms_db = (min.objective / usable as f64).sqrt();
    result.iterations = min.iterations;
    result.converged = min.converged;
    result.weakly_identified = weakly_identified(problem);
    result.objective_history = min.history;
    Ok(result)
}

/// Observed co- and cross-channel traces predicted from fitted parameters
/// under a new distance/LOS condition, on the problem grid. `noise_power`
/// overrides the fitted floor.
pub fn predict(
    result: &FitResult,
    problem: &FitProblem,
    cond: &DistanceCondition,
    noise_power: Option<f64>,
) -> Result<(PdpTrace, PdpTrace)> {
    let mut params = result.params();
    if let Some(n) = noise_power {
        params.noise_power = n;
    }
    model_traces(&params, problem, cond)
}

/// Converts a pair of linear traces to dB, e.g. to build synthetic problems.
pub fn to_db_pair(pair: (PdpTrace, PdpTrace)) -> Result<(PdpTrace, PdpTrace)> {
    Ok((
        db_linear_convert(&pair.0, Scale::Db)?,
        db_linear_convert(&pair.1, Scale::Db)?,
    ))
}
