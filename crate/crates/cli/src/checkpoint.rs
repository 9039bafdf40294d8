//! Versioned structured-text checkpoints. The grammar is line-oriented:
//!
//! ```text
//! SHEARLAB-CKPT v1
//! elapsed <t>
//! config-begin
//! <flat config lines>
//! config-end
//! state <kind>
//! <kind-specific lines>
//! state-end
//! ```
//!
//! Amplitudes are decimal with 17 significant digits, which round-trips
//! every f64 bit-exactly; loading rebuilds states through their validating
//! constructors, so a checkpoint can never smuggle in a broken invariant.

use std::fmt::Write as _;
use std::path::Path;

use shearlab_core::confined::{Grid1D, Profile1D};
use shearlab_core::mixer::MixerState;
use shearlab_core::pulsed::{ModeLog, PulsedState};
use shearlab_core::spectral::{Complex64, SpectralField2D, Wavevector, YSpectrum};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const SCHEMA: &str = "SHEARLAB-CKPT v1";

/// Serialized state of whichever module the preset drives.
#[derive(Debug, Clone)]
pub enum ModuleState {
    Field(SpectralField2D),
    Mixer(MixerState),
    Pulsed(PulsedState),
    Profile(Profile1D),
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: ExperimentConfig,
    pub elapsed: f64,
    pub state: ModuleState,
}

fn push_complex(out: &mut String, prefix: &str, a: Complex64) {
    let _ = writeln!(out, "{prefix} {:.16e} {:.16e}", a.re, a.im);
}

pub fn render(ckpt: &Checkpoint) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SCHEMA}");
    let _ = writeln!(out, "elapsed {:.16e}", ckpt.elapsed);
    let _ = writeln!(out, "config-begin");
    out.push_str(&ckpt.config.to_text());
    let _ = writeln!(out, "config-end");
    match &ckpt.state {
        ModuleState::Field(field) => {
            let _ = writeln!(out, "state field");
            let _ = writeln!(out, "band {}", field.band());
            let _ = writeln!(out, "dropped {:.16e}", field.dropped_l2_sq());
            for (k, a) in field.modes() {
                push_complex(&mut out, &format!("mode {} {}", k.kx, k.ky), a);
            }
        }
        ModuleState::Mixer(state) => {
            let _ = writeln!(out, "state mixer");
            let _ = writeln!(out, "step {}", state.step);
            for (l, c) in state.f.iter() {
                push_complex(&mut out, &format!("f {l}"), c);
            }
            for (l, c) in state.g.iter() {
                push_complex(&mut out, &format!("g {l}"), c);
            }
        }
        ModuleState::Pulsed(state) => {
            let _ = writeln!(out, "state pulsed");
            let _ = writeln!(out, "step {}", state.step());
            for (k, m) in state.modes() {
                let _ = writeln!(
                    out,
                    "mode {} {} {:.16e} {:.16e}",
                    k.kx, k.ky, m.log_mag, m.phase
                );
            }
        }
        ModuleState::Profile(profile) => {
            let _ = writeln!(out, "state profile1d");
            let _ = writeln!(out, "half_width {:.16e}", profile.grid().half_width());
            let _ = writeln!(out, "points {}", profile.grid().len());
            for v in profile.values() {
                let _ = writeln!(out, "v {v:.16e}");
            }
        }
    }
    let _ = writeln!(out, "state-end");
    out
}

pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<(), CliError> {
    std::fs::write(path, render(ckpt))
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// Line-cursor over the checkpoint text; every error it produces carries
/// the 1-based line number.
struct Cursor<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    current: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { lines: text.lines().enumerate(), current: 0 }
    }

    fn next(&mut self) -> Result<&'a str, CliError> {
        match self.lines.next() {
            Some((idx, line)) => {
                self.current = idx + 1;
                Ok(line)
            }
            None => Err(self.err_at(self.current + 1, "unexpected end of file")),
        }
    }

    fn err(&self, message: impl Into<String>) -> CliError {
        self.err_at(self.current, message)
    }

    fn err_at(&self, line: usize, message: impl Into<String>) -> CliError {
        CliError::Parse { line, message: message.into() }
    }
}

fn parse_f64(cursor: &Cursor<'_>, s: &str) -> Result<f64, CliError> {
    s.parse().map_err(|_| cursor.err(format!("bad float '{s}'")))
}

fn parse_int<T: std::str::FromStr>(cursor: &Cursor<'_>, s: &str) -> Result<T, CliError> {
    s.parse().map_err(|_| cursor.err(format!("bad integer '{s}'")))
}

pub fn parse(text: &str) -> Result<Checkpoint, CliError> {
    let mut cursor = Cursor::new(text);

    let header = cursor.next()?.trim();
    if header != SCHEMA {
        if let Some(version) = header.strip_prefix("SHEARLAB-CKPT ") {
            return Err(CliError::SchemaMismatch {
                found: version.trim().to_string(),
                expected: "v1".to_string(),
            });
        }
        return Err(cursor.err(format!("expected header '{SCHEMA}', found '{header}'")));
    }

    let elapsed_line = cursor.next()?;
    let elapsed = match elapsed_line.split_once(' ') {
        Some(("elapsed", v)) => parse_f64(&cursor, v.trim())?,
        _ => return Err(cursor.err("expected 'elapsed <t>'")),
    };

    if cursor.next()?.trim() != "config-begin" {
        return Err(cursor.err("expected 'config-begin'"));
    }
    let mut config_text = String::new();
    loop {
        let line = cursor.next()?;
        if line.trim() == "config-end" {
            break;
        }
        config_text.push_str(line);
        config_text.push('\n');
    }
    let config = ExperimentConfig::from_text(&config_text)
        .map_err(|e| cursor.err(format!("embedded config: {e}")))?;

    let state_line = cursor.next()?;
    let kind = match state_line.split_once(' ') {
        Some(("state", k)) => k.trim(),
        _ => return Err(cursor.err("expected 'state <kind>'")),
    };

    // Collect the body lines up to state-end, tracking their line numbers
    // so constructor failures can still point at the file.
    let mut body: Vec<(usize, Vec<&str>)> = Vec::new();
    loop {
        let line = cursor.next()?;
        if line.trim() == "state-end" {
            break;
        }
        body.push((cursor.current, line.split_whitespace().collect()));
    }

    let field_err = |line: usize, e: &dyn std::fmt::Display| CliError::Parse {
        line,
        message: e.to_string(),
    };

    let state = match kind {
        "field" => {
            let mut band: Option<i64> = None;
            let mut dropped = 0.0;
            let mut modes: Vec<(Wavevector, Complex64)> = Vec::new();
            let mut last_line = cursor.current;
            for (lineno, tokens) in &body {
                last_line = *lineno;
                let at = |msg: &str| cursor.err_at(*lineno, msg.to_string());
                match tokens.as_slice() {
                    ["band", b] => band = Some(parse_int(&cursor, b)?),
                    ["dropped", d] => dropped = parse_f64(&cursor, d)?,
                    ["mode", kx, ky, re, im] => modes.push((
                        Wavevector::new(parse_int(&cursor, kx)?, parse_int(&cursor, ky)?),
                        Complex64::new(parse_f64(&cursor, re)?, parse_f64(&cursor, im)?),
                    )),
                    _ => return Err(at("expected 'band', 'dropped', or 'mode kx ky re im'")),
                }
            }
            let band = band.ok_or_else(|| cursor.err("field state lacks a band line"))?;
            let field = SpectralField2D::from_full_modes(band, modes, dropped)
                .map_err(|e| field_err(last_line, &e))?;
            ModuleState::Field(field)
        }
        "mixer" => {
            let mut step: u32 = 0;
            let mut f: Vec<(i64, Complex64)> = Vec::new();
            let mut g: Vec<(i64, Complex64)> = Vec::new();
            let mut last_line = cursor.current;
            for (lineno, tokens) in &body {
                last_line = *lineno;
                let at = |msg: &str| cursor.err_at(*lineno, msg.to_string());
                match tokens.as_slice() {
                    ["step", s] => step = parse_int(&cursor, s)?,
                    ["f", l, re, im] => f.push((
                        parse_int(&cursor, l)?,
                        Complex64::new(parse_f64(&cursor, re)?, parse_f64(&cursor, im)?),
                    )),
                    ["g", l, re, im] => g.push((
                        parse_int(&cursor, l)?,
                        Complex64::new(parse_f64(&cursor, re)?, parse_f64(&cursor, im)?),
                    )),
                    _ => return Err(at("expected 'step', 'f l re im', or 'g l re im'")),
                }
            }
            let f = YSpectrum::from_full_pairs(f).map_err(|e| field_err(last_line, &e))?;
            let g = YSpectrum::from_full_pairs(g).map_err(|e| field_err(last_line, &e))?;
            let mut state = MixerState::new(f, g).map_err(|e| field_err(last_line, &e))?;
            state.step = step;
            ModuleState::Mixer(state)
        }
        "pulsed" => {
            let mut step: u32 = 0;
            let mut modes: Vec<(Wavevector, ModeLog)> = Vec::new();
            let mut last_line = cursor.current;
            for (lineno, tokens) in &body {
                last_line = *lineno;
                let at = |msg: &str| cursor.err_at(*lineno, msg.to_string());
                match tokens.as_slice() {
                    ["step", s] => step = parse_int(&cursor, s)?,
                    ["mode", kx, ky, lm, ph] => modes.push((
                        Wavevector::new(parse_int(&cursor, kx)?, parse_int(&cursor, ky)?),
                        ModeLog {
                            log_mag: parse_f64(&cursor, lm)?,
                            phase: parse_f64(&cursor, ph)?,
                        },
                    )),
                    _ => return Err(at("expected 'step' or 'mode kx ky log_mag phase'")),
                }
            }
            let state = PulsedState::from_modes(modes, step)
                .map_err(|e| field_err(last_line, &e))?;
            ModuleState::Pulsed(state)
        }
        "profile1d" => {
            let mut half_width: Option<f64> = None;
            let mut points: Option<usize> = None;
            let mut values: Vec<f64> = Vec::new();
            let mut last_line = cursor.current;
            for (lineno, tokens) in &body {
                last_line = *lineno;
                let at = |msg: &str| cursor.err_at(*lineno, msg.to_string());
                match tokens.as_slice() {
                    ["half_width", w] => half_width = Some(parse_f64(&cursor, w)?),
                    ["points", n] => points = Some(parse_int(&cursor, n)?),
                    ["v", x] => values.push(parse_f64(&cursor, x)?),
                    _ => return Err(at("expected 'half_width', 'points', or 'v x'")),
                }
            }
            let half_width =
                half_width.ok_or_else(|| cursor.err("profile state lacks half_width"))?;
            let points = points.ok_or_else(|| cursor.err("profile state lacks points"))?;
            let grid =
                Grid1D::new(half_width, points).map_err(|e| field_err(last_line, &e))?;
            let profile =
                Profile1D::new(grid, values).map_err(|e| field_err(last_line, &e))?;
            ModuleState::Profile(profile)
        }
        other => {
            return Err(cursor.err(format!("unknown state kind '{other}'")));
        }
    };

    Ok(Checkpoint { config, elapsed, state })
}

pub fn load(path: &Path) -> Result<Checkpoint, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}
