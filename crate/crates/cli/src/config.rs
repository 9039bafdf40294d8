//! Experiment configuration: a preset name plus a flat bag of numeric
//! overrides. The on-disk form is one `key value` pair per line with `#`
//! comments, the same shape embedded in checkpoints, so a config can be
//! reproduced or diffed with nothing fancier than a text editor.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Bounded shear on the torus: exponential decay plus mixing-scale
    /// stagnation, with a rate-stability cross-check at doubled horizon.
    MainTheorem,
    /// Alternating-shear schedule contracting H^-1 geometrically.
    Mixer,
    /// Pullback-plus-heat cascade: super-exponential decay, collapsing
    /// mixing scale, closed-form cross-check.
    Pulsed,
    /// Confined 1D operator: eigenvalues, two-grid gate, decay witness.
    Model1d,
    /// Couette mode versus a bounded torus run: the classification split.
    CouetteContrast,
    /// Gradient-ratio growth against the dissipation bound on a seeded
    /// random datum.
    AppendixRatio,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::MainTheorem,
        Preset::Mixer,
        Preset::Pulsed,
        Preset::Model1d,
        Preset::CouetteContrast,
        Preset::AppendixRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::MainTheorem => "main-theorem",
            Preset::Mixer => "mixer",
            Preset::Pulsed => "pulsed",
            Preset::Model1d => "model-1d",
            Preset::CouetteContrast => "couette-contrast",
            Preset::AppendixRatio => "appendix-ratio",
        }
    }
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            CliError::Config(format!(
                "unknown preset '{s}' (expected one of: {})",
                Preset::ALL.map(Preset::name).join(", ")
            ))
        })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fully resolved run parameters. Every field has a preset-specific default
/// and can be overridden by `--set key=value` or a config file; presets
/// ignore keys that do not apply to them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    /// Diffusivity of the torus solver.
    pub mu: f64,
    /// Splitting step of the torus solver.
    pub dt: f64,
    /// Horizon of the run.
    pub t_total: f64,
    /// Spectral band of the torus solver.
    pub band: i64,
    /// Physical-grid oversampling factor of the torus solver.
    pub oversample: usize,
    /// Band-edge mass fraction that aborts a torus run.
    pub tail_tol: f64,
    /// Sampling cadence of the torus solver, in steps.
    pub sample_every: usize,
    /// Step count for the mixer schedule and the pulsed cascade.
    pub n_steps: u32,
    /// Heat time per pulse in the cascade.
    pub tau: f64,
    /// Bisection tolerance of the mixer schedule.
    pub step_tol: f64,
    /// Half-width of the 1D grid.
    pub grid_half_width: f64,
    /// Point count of the 1D grid (odd).
    pub grid_points: usize,
    /// Time step of the 1D evolution.
    pub cn_dt: f64,
    /// Mixing-scale floor for the stagnation verdict. Zero (the default)
    /// selects the preset's convention: the library floor for torus runs,
    /// a tenth of the initial mixing scale for the cascade (whose point is
    /// to fall through any fixed floor).
    pub stagnation_floor: f64,
    /// RNG seed for presets with randomized initial data.
    pub seed: u64,
    /// If set, stop the run here, leaving a resumable checkpoint.
    pub stop_at: Option<f64>,
    /// Emit plot.svg alongside the CSV.
    pub plot: bool,
}

impl ExperimentConfig {
    pub fn defaults(preset: Preset) -> Self {
        let base = ExperimentConfig {
            preset,
            mu: 1.0,
            dt: 1e-3,
            t_total: 4.0,
            band: 64,
            oversample: 2,
            tail_tol: 1e-6,
            sample_every: 10,
            n_steps: 3,
            tau: 1.0,
            step_tol: 1e-10,
            grid_half_width: 12.0,
            grid_points: 2401,
            cn_dt: 1e-3,
            stagnation_floor: 0.0,
            seed: 7,
            stop_at: None,
            plot: true,
        };
        match preset {
            Preset::MainTheorem => base,
            Preset::Mixer => base,
            Preset::Pulsed => ExperimentConfig { n_steps: 20, ..base },
            Preset::Model1d => base,
            Preset::CouetteContrast => ExperimentConfig { band: 32, ..base },
            Preset::AppendixRatio => {
                ExperimentConfig { mu: 0.25, t_total: 6.0, ..base }
            }
        }
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |what: &str| {
            CliError::Config(format!("invalid value '{value}' for {key}: expected {what}"))
        };
        let f = || value.parse::<f64>().map_err(|_| bad("a number"));
        match key {
            "mu" => self.mu = f()?,
            "dt" => self.dt = f()?,
            "T" => self.t_total = f()?,
            "band" => self.band = value.parse().map_err(|_| bad("an integer"))?,
            "oversample" => self.oversample = value.parse().map_err(|_| bad("an integer"))?,
            "tail_tol" => self.tail_tol = f()?,
            "sample_every" => self.sample_every = value.parse().map_err(|_| bad("an integer"))?,
            "n_steps" => self.n_steps = value.parse().map_err(|_| bad("an integer"))?,
            "tau" => self.tau = f()?,
            "step_tol" => self.step_tol = f()?,
            "L" => self.grid_half_width = f()?,
            "N" => self.grid_points = value.parse().map_err(|_| bad("an integer"))?,
            "cn_dt" => self.cn_dt = f()?,
            "stagnation_floor" => self.stagnation_floor = f()?,
            "seed" => self.seed = value.parse().map_err(|_| bad("an integer"))?,
            "stop_at" => self.stop_at = Some(f()?),
            "plot" => {
                self.plot = match value {
                    "1" | "true" => true,
                    "0" | "false" => false,
                    _ => return Err(bad("0/1")),
                }
            }
            _ => {
                return Err(CliError::Config(format!("unknown config key '{key}'")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(CliError::Config(msg.to_string()))
            }
        };
        check(self.mu > 0.0 && self.mu.is_finite(), "mu must be positive")?;
        check(self.dt > 0.0 && self.dt.is_finite(), "dt must be positive")?;
        check(self.t_total >= self.dt, "T must be at least dt")?;
        check(self.band >= 4, "band must be at least 4")?;
        check(self.oversample >= 2, "oversample must be at least 2")?;
        check(
            self.tail_tol > 0.0 && self.tail_tol < 1.0,
            "tail_tol must be in (0, 1)",
        )?;
        check(self.sample_every >= 1, "sample_every must be at least 1")?;
        check(self.n_steps >= 1, "n_steps must be at least 1")?;
        check(self.tau >= 0.0, "tau must be nonnegative")?;
        check(self.step_tol > 0.0, "step_tol must be positive")?;
        check(self.grid_half_width > 0.0, "L must be positive")?;
        check(
            self.grid_points >= 3 && self.grid_points % 2 == 1,
            "N must be odd and at least 3",
        )?;
        check(self.cn_dt > 0.0, "cn_dt must be positive")?;
        check(self.stagnation_floor >= 0.0, "stagnation_floor must be nonnegative")?;
        if let Some(s) = self.stop_at {
            // Range versus the horizon is preset-specific (the cascades
            // count steps, the solvers count time) and checked at run time.
            check(s > 0.0 && s.is_finite(), "stop_at must be positive")?;
        }
        Ok(())
    }

    /// The flat text form, one key per line, in a fixed order so identical
    /// configs serialize identically.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("preset {}\n", self.preset));
        out.push_str(&format!("mu {:.16e}\n", self.mu));
        out.push_str(&format!("dt {:.16e}\n", self.dt));
        out.push_str(&format!("T {:.16e}\n", self.t_total));
        out.push_str(&format!("band {}\n", self.band));
        out.push_str(&format!("oversample {}\n", self.oversample));
        out.push_str(&format!("tail_tol {:.16e}\n", self.tail_tol));
        out.push_str(&format!("sample_every {}\n", self.sample_every));
        out.push_str(&format!("n_steps {}\n", self.n_steps));
        out.push_str(&format!("tau {:.16e}\n", self.tau));
        out.push_str(&format!("step_tol {:.16e}\n", self.step_tol));
        out.push_str(&format!("L {:.16e}\n", self.grid_half_width));
        out.push_str(&format!("N {}\n", self.grid_points));
        out.push_str(&format!("cn_dt {:.16e}\n", self.cn_dt));
        out.push_str(&format!("stagnation_floor {:.16e}\n", self.stagnation_floor));
        out.push_str(&format!("seed {}\n", self.seed));
        if let Some(s) = self.stop_at {
            out.push_str(&format!("stop_at {:.16e}\n", s));
        }
        out.push_str(&format!("plot {}\n", if self.plot { 1 } else { 0 }));
        out
    }

    /// Parses the flat text form. Lines are `key value`; blank lines and
    /// `#` comments are skipped. The preset line must come first so the
    /// remaining keys land on the right defaults.
    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut config: Option<ExperimentConfig> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once(char::is_whitespace).ok_or_else(|| {
                CliError::Config(format!("config line {}: expected 'key value'", idx + 1))
            })?;
            let value = value.trim();
            if key == "preset" {
                if config.is_some() {
                    return Err(CliError::Config(format!(
                        "config line {}: duplicate preset line",
                        idx + 1
                    )));
                }
                config = Some(ExperimentConfig::defaults(value.parse()?));
            } else {
                let cfg = config.as_mut().ok_or_else(|| {
                    CliError::Config(format!(
                        "config line {}: '{key}' before the preset line",
                        idx + 1
                    ))
                })?;
                cfg.set(key, value)?;
            }
        }
        config.ok_or_else(|| CliError::Config("config has no preset line".into()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        ExperimentConfig::from_text(&text)
    }
}

/// Splits a `key=value` argument from `--set`.
pub fn parse_override(arg: &str) -> Result<(&str, &str), CliError> {
    arg.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| CliError::Config(format!("override '{arg}' is not of the form key=value")))
}
