//! The four subcommands as library functions. Each writes its CSV and
//! returns a key/value report for standard output.

use std::fmt;
use std::path::Path;

use roomem::{
    cpr, cpr_distance, fit, mixing_constant, observed_pds, pds, pds_asymptote, pds_conditional,
    predict, simulate_pdp, DelayGrid, DistanceCondition, Execution, FitProblem, FitResult,
    PdsParams, Placement, PolGain, SimConfig,
};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::table::{lin_to_db, sig6, write_table};

/// Ordered `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report(pub Vec<(String, String)>);

impl Report {
    fn push(&mut self, key: &str, value: impl Into<String>) {
        self.0.push((key.to_string(), value.into()));
    }

    fn number(&mut self, key: &str, v: f64) {
        self.push(
            key,
            if v.is_finite() {
                sig6(v)
            } else {
                format!("{v}")
            },
        );
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.0 {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// Co-channel parameters `(μ_t, μ_r)` and the cross channel with `μ_r`
/// swapped.
fn channel_params(cfg: &RunConfig, command: &str) -> CliResult<(PdsParams, PdsParams)> {
    let (mu_t, mu_r) = cfg.antennas(command)?;
    let co = PdsParams::new(
        cfg.room()?,
        cfg.material(command)?,
        mu_t,
        mu_r,
        cfg.wavelength()?,
    )?
    .with_speed_of_light(cfg.speed_of_light()?)?;
    let cross = co.with_antennas(mu_t, mu_r.swapped());
    Ok((co, cross))
}

fn time_constants(report: &mut Report, p: &PdsParams) {
    report.number("reverberation_time_ns", p.reverberation_time() * 1e9);
    report.number("mixing_time_ns", p.mixing_time() * 1e9);
    report.number("mixing_constant", mixing_constant(&p.material));
    report.number("cpr_db", lin_to_db(cpr(p)));
}

/// Closed-form (or observed, with `[observation]`) curves on the grid.
pub fn eval(cfg: &RunConfig, out: &Path) -> CliResult<Report> {
    let (p_co, p_cross) = channel_params(cfg, "eval")?;
    let grid = cfg.grid("eval")?;
    let link = cfg.link()?;
    let channel = |p: &PdsParams| -> CliResult<Vec<f64>> {
        Ok(match cfg.observation()? {
            Some(obs) => observed_pds(&grid, p, link.as_ref(), &obs)?.into_values(),
            None => grid
                .delays()
                .map(|tau| match &link {
                    Some(cond) => pds_conditional(tau, p, cond).density,
                    None => pds(tau, p),
                })
                .collect(),
        })
    };
    let co = channel(&p_co)?;
    let cross = channel(&p_cross)?;
    let total: Vec<f64> = co.iter().zip(&cross).map(|(a, b)| a + b).collect();
    let asymptote: Vec<f64> = grid.delays().map(|tau| pds_asymptote(tau, &p_co)).collect();

    let delays_ns: Vec<f64> = grid.delays().map(|d| d * 1e9).collect();
    let db = |v: &[f64]| v.iter().map(|&x| lin_to_db(x)).collect::<Vec<_>>();
    write_table(
        out,
        &["delay_ns", "co_db", "cross_db", "total_db", "asymptote_db"],
        &delays_ns,
        &[db(&co), db(&cross), db(&total), db(&asymptote)],
    )?;

    let mut report = Report::default();
    time_constants(&mut report, &p_co);
    if let Some(cond) = link {
        report.number("cpr_distance_db", lin_to_db(cpr_distance(&p_co, &cond)));
        if let Some(spike) = pds_conditional(0.0, &p_co, &cond).spike {
            report.number("direct_delay_ns", spike.delay * 1e9);
            report.number("direct_weight", spike.weight);
        }
    }
    Ok(report)
}

/// Model density a simulated bin should estimate: the bin average of the
/// (gated) density plus any LOS spike falling inside the bin.
fn model_bins(p: &PdsParams, cfg: &SimConfig) -> Vec<f64> {
    const NODES: usize = 65;
    let w = cfg.bin_width;
    let cond = match cfg.placement {
        Placement::Uniform => None,
        Placement::FixedDistance(c) => Some(c),
    };
    let density = |tau: f64| match &cond {
        Some(c) => pds_conditional(tau, p, c).density,
        None => pds(tau, p),
    };
    (0..cfg.n_bins())
        .map(|k| {
            let lo = k as f64 * w;
            let h = w / (NODES - 1) as f64;
            let mut s = 0.5 * (density(lo) + density(lo + w));
            for i in 1..NODES - 1 {
                s += density(lo + i as f64 * h);
            }
            let mut v = s * h / w;
            if let Some(spike) = cond.and_then(|c| pds_conditional(0.0, p, &c).spike) {
                if spike.delay >= lo && spike.delay < lo + w {
                    v += spike.weight / w;
                }
            }
            v
        })
        .collect()
}

/// Largest `|simulated − model|` in dB over bins whose centre lies in
/// `[from, to]`.
pub fn max_deviation_db(sim: &[f64], model: &[f64], bin_width: f64, from: f64, to: f64) -> f64 {
    sim.iter()
        .zip(model)
        .enumerate()
        .filter(|(k, _)| {
            let centre = (*k as f64 + 0.5) * bin_width;
            centre >= from && centre <= to
        })
        .map(|(_, (&s, &m))| (lin_to_db(s) - lin_to_db(m)).abs())
        .fold(0.0, f64::max)
}

/// Mirror-source simulation beside the bin-averaged model.
pub fn simulate(cfg: &RunConfig, out: &Path, exec: Execution) -> CliResult<Report> {
    let (p_co, p_cross) = channel_params(cfg, "simulate")?;
    let sim_cfg = cfg.sim_config("simulate")?;
    let sim = simulate_pdp(&p_co, &sim_cfg, exec)?;
    let co_model = model_bins(&p_co, &sim_cfg);
    let cross_model = model_bins(&p_cross, &sim_cfg);

    let centres: Vec<f64> = sim.co.delays().map(|d| d * 1e9).collect();
    let db = |v: &[f64]| v.iter().map(|&x| lin_to_db(x)).collect::<Vec<_>>();
    write_table(
        out,
        &[
            "delay_ns",
            "co_sim_db",
            "cross_sim_db",
            "co_model_db",
            "cross_model_db",
        ],
        &centres,
        &[
            db(sim.co.values()),
            db(sim.cross.values()),
            db(&co_model),
            db(&cross_model),
        ],
    )?;

    let mut report = Report::default();
    report.push("realizations", sim_cfg.n_realizations.to_string());
    report.push("seed", sim_cfg.rng_seed.to_string());
    report.push("bins", sim_cfg.n_bins().to_string());
    time_constants(&mut report, &p_co);
    let to = (5.0 * p_co.reverberation_time()).min(sim_cfg.max_delay);
    let w = sim_cfg.bin_width;
    report.number(
        "max_co_deviation_db",
        max_deviation_db(sim.co.values(), &co_model, w, 2e-9, to),
    );
    report.number(
        "max_cross_deviation_db",
        max_deviation_db(sim.cross.values(), &cross_model, w, 2e-9, to),
    );
    Ok(report)
}

/// Measured trace location and optional value column.
#[derive(Debug, Clone, Copy)]
pub struct TraceSource<'a> {
    pub path: &'a Path,
    pub column: Option<&'a str>,
}

fn fit_report(r: &FitResult) -> Report {
    let mut report = Report::default();
    report.push("g", format!("{:.6}", r.g));
    report.push("gamma", format!("{:.6}", r.gamma));
    report.push("xi", format!("{:.6}", r.xi));
    report.push("noise_power", format!("{:.6e}", r.noise_power));
    report.number("reverberation_time_ns", r.reverberation_time * 1e9);
    report.number("mixing_time_ns", r.mixing_time * 1e9);
    report.number("mixing_constant", r.mixing_constant);
    report.number("cpr_db", lin_to_db(r.cpr));
    report.push("residual_rms_db", format!("{:.4}", r.residual_rms_db));
    report.push("iterations", r.iterations.to_string());
    report.push("converged", r.converged.to_string());
    report.push("weakly_identified", r.weakly_identified.to_string());
    report
}

/// Fits measured co/cross traces and writes the fitted curves beside them.
/// Non-convergence is reported in the result, not as an error.
pub fn fit_traces(
    cfg: &RunConfig,
    co: TraceSource<'_>,
    cross: TraceSource<'_>,
    out: &Path,
) -> CliResult<(Report, FitResult)> {
    let cond: DistanceCondition = cfg
        .link()?
        .ok_or_else(|| CliError::Config("[link] section is required for fit".into()))?;
    let obs = cfg
        .observation()?
        .ok_or_else(|| CliError::Config("[observation] section is required for fit".into()))?;
    let settings = cfg.fit_settings()?;
    let co_trace = crate::table::read_trace(co.path, co.column)?;
    let cross_trace = crate::table::read_trace(cross.path, cross.column)?;
    if !co_trace.grid().same_as(cross_trace.grid()) {
        return Err(CliError::input(
            cross.path,
            format!("delay grid differs from {}", co.path.display()),
        ));
    }
    let mut problem = FitProblem::new(
        cfg.room()?,
        cfg.wavelength()?,
        cond,
        obs.pulse,
        co_trace,
        cross_trace,
    )?
    .with_speed_of_light(cfg.speed_of_light()?)?
    .with_bounds(settings.bounds)
    .with_method(settings.method);
    if let Some((a, b)) = settings.window {
        problem = problem.with_window(a, b)?;
    }
    if let Some(initial) = settings.initial {
        problem = problem.with_initial(initial);
    }
    let result = fit(&problem)?;

    let (model_co, model_cross) = predict(&result, &problem, &cond, None)?;
    let mu = PolGain::lossless(result.xi)?;
    let p = PdsParams::new(
        problem.room,
        result.params().material()?,
        mu,
        mu,
        problem.wavelength(),
    )?
    .with_speed_of_light(problem.speed_of_light())?;
    let grid: &DelayGrid = problem.grid();
    let db = |v: &[f64]| v.iter().map(|&x| lin_to_db(x)).collect::<Vec<_>>();
    let total: Vec<f64> = model_co
        .values()
        .iter()
        .zip(model_cross.values())
        .map(|(a, b)| a + b)
        .collect();
    let asymptote: Vec<f64> = grid.delays().map(|tau| pds_asymptote(tau, &p)).collect();
    let delays_ns: Vec<f64> = grid.delays().map(|d| d * 1e9).collect();
    write_table(
        out,
        &[
            "delay_ns",
            "co_db",
            "cross_db",
            "total_db",
            "asymptote_db",
            "co_measured_db",
            "cross_measured_db",
        ],
        &delays_ns,
        &[
            db(model_co.values()),
            db(model_cross.values()),
            db(&total),
            db(&asymptote),
            problem.co_trace().values().to_vec(),
            problem.cross_trace().values().to_vec(),
        ],
    )?;

    Ok((fit_report(&result), result))
}

/// Distance-conditioned CPR for NLOS and LOS links over `[cpr] distances_m`.
pub fn cpr_sweep(cfg: &RunConfig, out: &Path) -> CliResult<Report> {
    let (p, _) = channel_params(cfg, "cpr")?;
    let distances = cfg.cpr_distances("cpr")?;
    let mut nlos = Vec::with_capacity(distances.len());
    let mut los = Vec::with_capacity(distances.len());
    for &d in &distances {
        nlos.push(lin_to_db(cpr_distance(
            &p,
            &DistanceCondition::new(d, false)?,
        )));
        los.push(lin_to_db(cpr_distance(
            &p,
            &DistanceCondition::new(d, true)?,
        )));
    }
    write_table(
        out,
        &["d_m", "cpr_nlos_db", "cpr_los_db"],
        &distances,
        &[nlos, los],
    )?;

    let mut report = Report::default();
    time_constants(&mut report, &p);
    report.number("prefactor_db", lin_to_db(p.antenna_prefactor()));
    Ok(report)
}
