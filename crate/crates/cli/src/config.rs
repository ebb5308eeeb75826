//! Run configuration: a TOML document with one table per concern.
//!
//! ```toml
//! [room]
//! dimensions_m = [3.0, 4.0, 3.0]
//!
//! [radio]
//! wavelength_m = 5e-3        # or frequency_hz
//!
//! [material]
//! g = 0.4
//! gamma = 0.04
//!
//! [antennas]
//! xi = 0.0                   # or mu_t = [..], mu_r = [..]
//!
//! [grid]
//! start_ns = 0.0
//! stop_ns = 100.0
//! step_ns = 0.25
//! ```
//!
//! Optional tables: `link`, `observation`, `simulate`, `fit`, `cpr`. Unknown
//! keys are rejected.

use std::path::Path;

use roomem::{
    Bounds, DelayGrid, DistanceCondition, FitMethod, FitParams, ObservationParams, Placement,
    PolGain, PulseKind, PulseShape, RoomGeometry, SimConfig, WallMaterial, SPEED_OF_LIGHT,
};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub speed_of_light: Option<f64>,
    pub room: RoomSection,
    pub radio: RadioSection,
    pub material: Option<MaterialSection>,
    pub antennas: Option<AntennaSection>,
    pub link: Option<LinkSection>,
    pub observation: Option<ObservationSection>,
    pub grid: Option<GridSection>,
    pub simulate: Option<SimulateSection>,
    pub fit: Option<FitSection>,
    pub cpr: Option<CprSection>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RoomSection {
    pub dimensions_m: [f64; 3],
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub frequency_hz: Option<f64>,
    pub wavelength_m: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub g: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AntennaSection {
    pub xi: Option<f64>,
    pub mu_t: Option<[f64; 2]>,
    pub mu_r: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LinkSection {
    pub distance_m: f64,
    #[serde(default)]
    pub los: bool,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PulseName {
    Boxcar,
    Gaussian,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ObservationSection {
    pub pulse: PulseName,
    pub bandwidth_hz: f64,
    #[serde(default)]
    pub noise_power: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub start_ns: f64,
    pub stop_ns: f64,
    pub step_ns: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum PlacementName {
    #[default]
    Uniform,
    /// Fixed transmitter-receiver distance taken from `[link]`.
    Link,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub realizations: usize,
    pub seed: u64,
    pub bin_width_ns: f64,
    pub max_delay_ns: f64,
    #[serde(default)]
    pub placement: PlacementName,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    #[default]
    Lm,
    NelderMead,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub g: f64,
    pub gamma: f64,
    pub xi: f64,
    pub noise_power: f64,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    #[serde(default = "unit")]
    pub g: [f64; 2],
    #[serde(default = "unit")]
    pub gamma: [f64; 2],
    #[serde(default = "unit")]
    pub xi: [f64; 2],
}

fn unit() -> [f64; 2] {
    [0.0, 1.0]
}

#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default)]
    pub method: MethodName,
    pub initial: Option<InitialSection>,
    pub bounds: Option<BoundsSection>,
    pub window_ns: Option<[f64; 2]>,
    #[serde(default)]
    pub strict: bool,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CprSection {
    pub distances_m: Vec<f64>,
}

/// Validated fit settings.
#[derive(Debug, Clone, PartialEq)]
pub struct FitSettings {
    pub method: FitMethod,
    pub initial: Option<FitParams>,
    pub bounds: Bounds,
    pub window: Option<(f64, f64)>,
    pub strict: bool,
}

fn invalid(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {reason}"))
}

fn core<T>(field: &str, r: roomem::Result<T>) -> CliResult<T> {
    r.map_err(|e| invalid(field, e))
}

fn missing(section: &str, command: &str) -> CliError {
    CliError::Config(format!("[{section}] section is required for {command}"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks every section that is present.
    pub fn validate(&self) -> CliResult<()> {
        self.speed_of_light()?;
        self.room()?;
        self.wavelength()?;
        if self.material.is_some() {
            self.material("validation")?;
        }
        if self.antennas.is_some() {
            self.antennas("validation")?;
        }
        self.link()?;
        self.observation()?;
        if self.grid.is_some() {
            self.grid("validation")?;
        }
        if self.simulate.is_some() {
            self.sim_config("validation")?;
        }
        self.fit_settings()?;
        if self.cpr.is_some() {
            self.cpr_distances("validation")?;
        }
        Ok(())
    }

    pub fn speed_of_light(&self) -> CliResult<f64> {
        match self.speed_of_light {
            None => Ok(SPEED_OF_LIGHT),
            Some(c) if c.is_finite() && c > 0.0 => Ok(c),
            Some(c) => Err(invalid("speed_of_light", format!("{c} must be positive"))),
        }
    }

    pub fn room(&self) -> CliResult<RoomGeometry> {
        let [x, y, z] = self.room.dimensions_m;
        core("room.dimensions_m", RoomGeometry::new(x, y, z))
    }

    pub fn wavelength(&self) -> CliResult<f64> {
        let c = self.speed_of_light()?;
        match (self.radio.frequency_hz, self.radio.wavelength_m) {
            (Some(f), None) if f.is_finite() && f > 0.0 => Ok(c / f),
            (Some(f), None) => Err(invalid(
                "radio.frequency_hz",
                format!("{f} must be positive"),
            )),
            (None, Some(l)) if l.is_finite() && l > 0.0 => Ok(l),
            (None, Some(l)) => Err(invalid(
                "radio.wavelength_m",
                format!("{l} must be positive"),
            )),
            _ => Err(invalid(
                "radio",
                "exactly one of frequency_hz and wavelength_m must be given",
            )),
        }
    }

    pub fn material(&self, command: &str) -> CliResult<WallMaterial> {
        let m = self
            .material
            .as_ref()
            .ok_or_else(|| missing("material", command))?;
        core("material", WallMaterial::new(m.g, m.gamma))
    }

    /// `(μ_t, μ_r)`.
    pub fn antennas(&self, command: &str) -> CliResult<(PolGain, PolGain)> {
        let a = self
            .antennas
            .as_ref()
            .ok_or_else(|| missing("antennas", command))?;
        match (a.xi, a.mu_t, a.mu_r) {
            (Some(xi), None, None) => {
                let mu = core("antennas.xi", PolGain::lossless(xi))?;
                Ok((mu, mu))
            }
            (None, Some(t), Some(r)) => Ok((
                core("antennas.mu_t", PolGain::new(t[0], t[1]))?,
                core("antennas.mu_r", PolGain::new(r[0], r[1]))?,
            )),
            _ => Err(invalid("antennas", "give either xi or both mu_t and mu_r")),
        }
    }

    pub fn link(&self) -> CliResult<Option<DistanceCondition>> {
        self.link
            .as_ref()
            .map(|l| {
                core(
                    "link.distance_m",
                    DistanceCondition::new(l.distance_m, l.los),
                )
            })
            .transpose()
    }

    pub fn observation(&self) -> CliResult<Option<ObservationParams>> {
        let Some(o) = &self.observation else {
            return Ok(None);
        };
        let kind = match o.pulse {
            PulseName::Boxcar => PulseKind::Boxcar,
            PulseName::Gaussian => PulseKind::Gaussian,
        };
        let pulse = core(
            "observation.bandwidth_hz",
            PulseShape::new(kind, o.bandwidth_hz),
        )?;
        core(
            "observation.noise_power",
            ObservationParams::new(pulse, o.noise_power),
        )
        .map(Some)
    }

    pub fn grid(&self, command: &str) -> CliResult<DelayGrid> {
        let g = self.grid.as_ref().ok_or_else(|| missing("grid", command))?;
        if !(g.step_ns.is_finite() && g.step_ns > 0.0) {
            return Err(invalid(
                "grid.step_ns",
                format!("{} must be positive", g.step_ns),
            ));
        }
        if !g.start_ns.is_finite() {
            return Err(invalid("grid.start_ns", "must be finite"));
        }
        if !(g.stop_ns.is_finite() && g.stop_ns > g.start_ns) {
            return Err(invalid(
                "grid.stop_ns",
                format!("{} must exceed start_ns", g.stop_ns),
            ));
        }
        let grid = core(
            "grid",
            DelayGrid::spanning(g.start_ns * 1e-9, g.stop_ns * 1e-9, g.step_ns * 1e-9),
        )?;
        if let Some(obs) = self.observation()? {
            if grid.step() > obs.pulse.max_step() * (1.0 + 1e-12) {
                return Err(invalid(
                    "grid.step_ns",
                    format!(
                        "{} exceeds the pulse limit {} ns (quarter of 1/bandwidth)",
                        g.step_ns,
                        obs.pulse.max_step() * 1e9
                    ),
                ));
            }
        }
        Ok(grid)
    }

    pub fn sim_config(&self, command: &str) -> CliResult<SimConfig> {
        let s = self
            .simulate
            .as_ref()
            .ok_or_else(|| missing("simulate", command))?;
        let placement =
            match s.placement {
                PlacementName::Uniform => Placement::Uniform,
                PlacementName::Link => Placement::FixedDistance(self.link()?.ok_or_else(|| {
                    invalid("simulate.placement", "\"link\" needs a [link] section")
                })?),
            };
        let cfg = SimConfig {
            n_realizations: s.realizations,
            bin_width: s.bin_width_ns * 1e-9,
            max_delay: s.max_delay_ns * 1e-9,
            rng_seed: s.seed,
            placement,
        };
        core("simulate", cfg.validate())?;
        if let Placement::FixedDistance(cond) = placement {
            if cond.distance() >= self.room()?.diagonal() {
                return Err(invalid(
                    "link.distance_m",
                    "must be shorter than the room diagonal",
                ));
            }
        }
        Ok(cfg)
    }

    pub fn fit_settings(&self) -> CliResult<FitSettings> {
        let f = self.fit.clone().unwrap_or_default();
        let bounds = match &f.bounds {
            None => Bounds::default(),
            Some(b) => core(
                "fit.bounds",
                Bounds::new(
                    (b.g[0], b.g[1]),
                    (b.gamma[0], b.gamma[1]),
                    (b.xi[0], b.xi[1]),
                ),
            )?,
        };
        let initial = f.initial.as_ref().map(|i| FitParams {
            g: i.g,
            gamma: i.gamma,
            xi: i.xi,
            noise_power: i.noise_power,
        });
        if let Some(p) = &initial {
            for (name, v, iv) in [
                ("fit.initial.g", p.g, bounds.g),
                ("fit.initial.gamma", p.gamma, bounds.gamma),
                ("fit.initial.xi", p.xi, bounds.xi),
            ] {
                if !iv.contains_open(v) {
                    return Err(invalid(
                        name,
                        format!("{v} lies outside ({}, {})", iv.lo, iv.hi),
                    ));
                }
            }
            if !(p.noise_power.is_finite() && p.noise_power > 0.0) {
                return Err(invalid("fit.initial.noise_power", "must be positive"));
            }
        }
        let window = match f.window_ns {
            None => None,
            Some([a, b]) if a.is_finite() && b.is_finite() && b > a => Some((a * 1e-9, b * 1e-9)),
            Some(_) => {
                return Err(invalid(
                    "fit.window_ns",
                    "needs finite [start, stop] with stop > start",
                ))
            }
        };
        Ok(FitSettings {
            method: match f.method {
                MethodName::Lm => FitMethod::LevenbergMarquardt,
                MethodName::NelderMead => FitMethod::NelderMead,
            },
            initial,
            bounds,
            window,
            strict: f.strict,
        })
    }

    pub fn cpr_distances(&self, command: &str) -> CliResult<Vec<f64>> {
        let c = self.cpr.as_ref().ok_or_else(|| missing("cpr", command))?;
        if c.distances_m.is_empty() {
            return Err(invalid("cpr.distances_m", "must not be empty"));
        }
        for &d in &c.distances_m {
            if !(d.is_finite() && d > 0.0) {
                return Err(invalid("cpr.distances_m", format!("{d} must be positive")));
            }
        }
        Ok(c.distances_m.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[room]
dimensions_m = [3.0, 4.0, 3.0]
[radio]
wavelength_m = 5e-3
[material]
g = 0.4
gamma = 0.04
[antennas]
xi = 0.1
[grid]
start_ns = 0.0
stop_ns = 50.0
step_ns = 0.5
"#;

    fn err(text: &str) -> String {
        match RunConfig::from_toml(text) {
            Err(CliError::Config(msg)) => msg,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn base_config_parses() {
        let cfg = RunConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.wavelength().unwrap(), 5e-3);
        assert_eq!(cfg.grid("eval").unwrap().len(), 101);
        assert!(cfg.link().unwrap().is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let msg = err(&BASE.replace("gamma = 0.04", "gamma = 0.04\nroughness = 1"));
        assert!(msg.contains("roughness"), "{msg}");
    }

    #[test]
    fn frequency_and_wavelength_are_exclusive() {
        let msg = err(&BASE.replace(
            "wavelength_m = 5e-3",
            "wavelength_m = 5e-3\nfrequency_hz = 6e10",
        ));
        assert!(msg.contains("radio"), "{msg}");
        let msg = err(&BASE.replace("wavelength_m = 5e-3", ""));
        assert!(msg.contains("radio"), "{msg}");
    }

    #[test]
    fn frequency_converts_with_configured_speed() {
        let text = format!(
            "speed_of_light = 3e8\n{}",
            BASE.replace("wavelength_m = 5e-3", "frequency_hz = 6e10")
        );
        let cfg = RunConfig::from_toml(&text).unwrap();
        assert!((cfg.wavelength().unwrap() - 5e-3).abs() < 1e-15);
    }

    #[test]
    fn invalid_values_name_their_field() {
        for (from, to, field) in [
            ("g = 0.4", "g = 1.4", "material"),
            ("xi = 0.1", "xi = 1.5", "antennas.xi"),
            (
                "dimensions_m = [3.0, 4.0, 3.0]",
                "dimensions_m = [3.0, -4.0, 3.0]",
                "room.dimensions_m",
            ),
            ("step_ns = 0.5", "step_ns = 0.0", "grid.step_ns"),
            ("stop_ns = 50.0", "stop_ns = -1.0", "grid.stop_ns"),
        ] {
            let msg = err(&BASE.replace(from, to));
            assert!(msg.starts_with(field), "{field}: {msg}");
        }
    }

    #[test]
    fn antenna_forms() {
        let text = BASE.replace("xi = 0.1", "mu_t = [1.0, 0.0]\nmu_r = [0.5, 0.5]");
        let (t, r) = RunConfig::from_toml(&text)
            .unwrap()
            .antennas("eval")
            .unwrap();
        assert_eq!(t.as_array(), [1.0, 0.0]);
        assert_eq!(r.as_array(), [0.5, 0.5]);
        let msg = err(&BASE.replace("xi = 0.1", "xi = 0.1\nmu_t = [1.0, 0.0]"));
        assert!(msg.starts_with("antennas"), "{msg}");
    }

    #[test]
    fn coarse_grid_rejected_by_pulse() {
        let text = format!("{BASE}\n[observation]\npulse = \"boxcar\"\nbandwidth_hz = 1e9\n");
        let msg = err(&text);
        assert!(msg.starts_with("grid.step_ns"), "{msg}");
    }

    #[test]
    fn simulate_and_fit_sections() {
        let text = format!(
            "{BASE}\n[link]\ndistance_m = 1.8\n[simulate]\nrealizations = 10\nseed = 1\nbin_width_ns = 1.0\nmax_delay_ns = 30.0\nplacement = \"link\"\n[fit]\nmethod = \"nelder-mead\"\nwindow_ns = [5.0, 40.0]\n"
        );
        let cfg = RunConfig::from_toml(&text).unwrap();
        assert!(matches!(
            cfg.sim_config("simulate").unwrap().placement,
            Placement::FixedDistance(_)
        ));
        let fit = cfg.fit_settings().unwrap();
        assert_eq!(fit.method, FitMethod::NelderMead);
        assert!(!fit.strict);

        let msg = err(&text.replace("max_delay_ns = 30.0", "max_delay_ns = 30.5"));
        assert!(msg.starts_with("simulate"), "{msg}");
        let msg = err(&text.replace("window_ns = [5.0, 40.0]", "window_ns = [5.0, 1.0]"));
        assert!(msg.starts_with("fit.window_ns"), "{msg}");
    }

    #[test]
    fn initial_guess_must_sit_inside_bounds() {
        let text = format!(
            "{BASE}\n[fit.bounds]\ng = [0.2, 0.6]\n[fit.initial]\ng = 0.7\ngamma = 0.1\nxi = 0.1\nnoise_power = 1e-12\n"
        );
        let msg = err(&text);
        assert!(msg.starts_with("fit.initial.g"), "{msg}");
    }

    #[test]
    fn missing_sections_reported_per_command() {
        let cfg =
            RunConfig::from_toml(&BASE.replace("[material]\ng = 0.4\ngamma = 0.04", "")).unwrap();
        match cfg.material("eval") {
            Err(CliError::Config(msg)) => {
                assert!(msg.contains("[material]") && msg.contains("eval"))
            }
            other => panic!("{other:?}"),
        }
    }
}
