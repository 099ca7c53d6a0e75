//! Line-oriented `key = value` configuration.
//!
//! ```text
//! # global keys first
//! horizon_us = 120
//! gamma31 = 2
//!
//! [pulse]
//! role = D
//! channel = P
//! t_start_us = 9.5
//! duration_us = 1
//! area_pi = 0.1
//! ```
//!
//! Global keys and their defaults:
//!
//! | key            | default | meaning                                  |
//! |----------------|---------|------------------------------------------|
//! | `horizon_us`   | 120     | simulated time span                      |
//! | `fwhm_khz`     | 340     | Gaussian FWHM of the inhomogeneous line  |
//! | `span_khz`     | 800     | full width of the detuning grid          |
//! | `n_groups`     | 161     | odd number of detuning groups            |
//! | `Gamma31`      | 0       | population decay 3→1 (kHz)               |
//! | `Gamma32`      | 0       | population decay 3→2 (kHz)               |
//! | `gamma31`      | 0       | extra ρ13 dephasing (kHz)                |
//! | `gamma32`      | 0       | extra ρ23 dephasing (kHz)                |
//! | `gamma21`      | 0       | spin ρ12 dephasing (kHz)                 |
//! | `dt_pulse_ns`  | 1       | step inside pulses                       |
//! | `dt_free_ns`   | 10      | step between pulses                      |
//! | `sample_stride`| 5       | sample every k free steps                |
//! | `threshold`    | 0.1     | echo detection threshold fraction        |
//!
//! Pulse keys: `role` (D, bitK, R1, R2, B1, B2), `channel` (P or C; implied
//! by the role when omitted), `t_start_us`, `duration_us`, `area_pi`
//! (required), `phase_rad` (default 0), `envelope` (only `rect`).
//! Unknown keys are errors.

use std::fmt::Write as _;

use super::{Channel, DecayRates, Envelope, Pulse, PulseSequence, Role, Validation};
use crate::dynamics::RunParams;
use crate::ensemble::EnsembleSpec;
use crate::{Error, Result};

pub const DEFAULT_HORIZON_US: f64 = 120.0;
pub const DEFAULT_THRESHOLD: f64 = 0.1;

/// Fully resolved simulation inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub sequence: PulseSequence,
    pub rates: DecayRates,
    pub ensemble: EnsembleSpec,
    pub params: RunParams,
    /// Echo detection threshold as a fraction of the largest out-of-pulse |P|.
    pub threshold: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            sequence: PulseSequence::new(Vec::new(), DEFAULT_HORIZON_US),
            rates: DecayRates::zero(),
            ensemble: EnsembleSpec::default(),
            params: RunParams::default(),
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl Config {
    /// Semantic checks beyond sequence structure.
    pub fn check(&self) -> Result<Validation> {
        self.rates.validate()?;
        self.ensemble.validate()?;
        self.params.validate()?;
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::config(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        let v = self.sequence.validate();
        if let Some(bad) = v.violations().next() {
            return Err(Error::config(bad.message.clone()));
        }
        Ok(v)
    }

    /// Overwrite one numeric key. `path` is a global key (`gamma31`) or
    /// `<role>.<pulse key>` (`B2.area_pi`).
    pub fn set_numeric(&mut self, path: &str, value: f64) -> Result<()> {
        if let Some((role, key)) = path.split_once('.') {
            let role: Role = role.parse()?;
            let pulse = self
                .sequence
                .role_mut(role)
                .ok_or_else(|| Error::config(format!("no pulse with role {role}")))?;
            match key {
                "t_start_us" => pulse.t_start_us = value,
                "duration_us" => pulse.duration_us = value,
                "area_pi" => pulse.area_pi = value,
                "phase_rad" => pulse.phase_rad = value,
                other => {
                    return Err(Error::config(format!(
                        "unknown numeric pulse key '{other}'"
                    )))
                }
            }
            self.sequence.sort();
            return Ok(());
        }
        set_global(self, path, value)
    }
}

fn as_count(key: &str, value: f64) -> Result<usize> {
    if value.fract() != 0.0 || value < 0.0 || !value.is_finite() {
        return Err(Error::config(format!(
            "{key} must be a non-negative integer, got {value}"
        )));
    }
    Ok(value as usize)
}

fn set_global(cfg: &mut Config, key: &str, value: f64) -> Result<()> {
    match key {
        "horizon_us" => cfg.sequence.horizon_us = value,
        "fwhm_khz" => cfg.ensemble.fwhm_khz = value,
        "span_khz" => cfg.ensemble.span_khz = value,
        "n_groups" => cfg.ensemble.n_groups = as_count(key, value)?,
        "Gamma31" => cfg.rates.pop31_khz = value,
        "Gamma32" => cfg.rates.pop32_khz = value,
        "gamma31" => cfg.rates.deph31_khz = value,
        "gamma32" => cfg.rates.deph32_khz = value,
        "gamma21" => cfg.rates.deph21_khz = value,
        "dt_pulse_ns" => cfg.params.dt_pulse_ns = value,
        "dt_free_ns" => cfg.params.dt_free_ns = value,
        "sample_stride" => cfg.params.sample_stride = as_count(key, value)?,
        "threshold" => cfg.threshold = value,
        other => return Err(Error::config(format!("unknown key '{other}'"))),
    }
    Ok(())
}

#[derive(Default)]
struct PulseDraft {
    line: usize,
    role: Option<Role>,
    channel: Option<Channel>,
    t_start_us: Option<f64>,
    duration_us: Option<f64>,
    area_pi: Option<f64>,
    phase_rad: Option<f64>,
    envelope: Envelope,
}

impl PulseDraft {
    fn finish(self) -> Result<Pulse> {
        let missing = |k: &str| Error::Syntax {
            line: self.line,
            msg: format!("[pulse] block is missing '{k}'"),
        };
        let channel = match (self.channel, self.role) {
            (Some(c), _) => c,
            (None, Some(Role::B1 | Role::B2)) => Channel::C,
            (None, Some(_)) => Channel::P,
            (None, None) => return Err(missing("channel")),
        };
        Ok(Pulse {
            channel,
            t_start_us: self.t_start_us.ok_or_else(|| missing("t_start_us"))?,
            duration_us: self.duration_us.ok_or_else(|| missing("duration_us"))?,
            area_pi: self.area_pi.ok_or_else(|| missing("area_pi"))?,
            phase_rad: self.phase_rad.unwrap_or(0.0),
            role: self.role,
            envelope: self.envelope,
        })
    }
}

fn parse_number(line: usize, key: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>().map_err(|_| Error::Syntax {
        line,
        msg: format!("value of '{key}' is not a number: '{raw}'"),
    })
}

/// Parse configuration text. Structural violations are errors; notices and
/// warnings come back alongside the config.
pub fn parse_config(text: &str) -> Result<(Config, Validation)> {
    let mut cfg = Config::default();
    let mut pulses = Vec::new();
    let mut current: Option<PulseDraft> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            if content != "[pulse]" {
                return Err(Error::Syntax {
                    line,
                    msg: format!("unknown section '{content}'"),
                });
            }
            if let Some(draft) = current.take() {
                pulses.push(draft.finish()?);
            }
            current = Some(PulseDraft {
                line,
                ..PulseDraft::default()
            });
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Syntax {
                line,
                msg: format!("expected 'key = value', found '{content}'"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::Syntax {
                line,
                msg: "empty key or value".into(),
            });
        }

        let at_line = |e: Error| match e {
            Error::Config(msg) => Error::Syntax { line, msg },
            other => other,
        };

        match current.as_mut() {
            Some(draft) => match key {
                "role" => draft.role = Some(value.parse().map_err(at_line)?),
                "channel" => draft.channel = Some(value.parse().map_err(at_line)?),
                "envelope" => draft.envelope = value.parse().map_err(at_line)?,
                "t_start_us" => draft.t_start_us = Some(parse_number(line, key, value)?),
                "duration_us" => draft.duration_us = Some(parse_number(line, key, value)?),
                "area_pi" => draft.area_pi = Some(parse_number(line, key, value)?),
                "phase_rad" => draft.phase_rad = Some(parse_number(line, key, value)?),
                other => {
                    return Err(Error::Syntax {
                        line,
                        msg: format!("unknown pulse key '{other}'"),
                    })
                }
            },
            None => {
                let v = parse_number(line, key, value)?;
                set_global(&mut cfg, key, v).map_err(at_line)?;
            }
        }
    }
    if let Some(draft) = current.take() {
        pulses.push(draft.finish()?);
    }

    let horizon = cfg.sequence.horizon_us;
    cfg.sequence = PulseSequence {
        pulses,
        horizon_us: horizon,
    };
    let validation = cfg.check()?;
    cfg.sequence.sort();
    Ok((cfg, validation))
}

/// Render a config in the format accepted by [`parse_config`]. Floats use
/// the shortest representation that parses back to the same value.
pub fn serialize_config(cfg: &Config) -> String {
    let mut out = String::new();
    let r = &cfg.rates;
    let e = &cfg.ensemble;
    let p = &cfg.params;
    let _ = writeln!(out, "horizon_us = {}", cfg.sequence.horizon_us);
    let _ = writeln!(out, "fwhm_khz = {}", e.fwhm_khz);
    let _ = writeln!(out, "span_khz = {}", e.span_khz);
    let _ = writeln!(out, "n_groups = {}", e.n_groups);
    let _ = writeln!(out, "Gamma31 = {}", r.pop31_khz);
    let _ = writeln!(out, "Gamma32 = {}", r.pop32_khz);
    let _ = writeln!(out, "gamma31 = {}", r.deph31_khz);
    let _ = writeln!(out, "gamma32 = {}", r.deph32_khz);
    let _ = writeln!(out, "gamma21 = {}", r.deph21_khz);
    let _ = writeln!(out, "dt_pulse_ns = {}", p.dt_pulse_ns);
    let _ = writeln!(out, "dt_free_ns = {}", p.dt_free_ns);
    let _ = writeln!(out, "sample_stride = {}", p.sample_stride);
    let _ = writeln!(out, "threshold = {}", cfg.threshold);
    for pulse in &cfg.sequence.pulses {
        out.push_str("\n[pulse]\n");
        if let Some(role) = pulse.role {
            let _ = writeln!(out, "role = {role}");
        }
        let _ = writeln!(out, "channel = {}", pulse.channel);
        let _ = writeln!(out, "t_start_us = {}", pulse.t_start_us);
        let _ = writeln!(out, "duration_us = {}", pulse.duration_us);
        let _ = writeln!(out, "area_pi = {}", pulse.area_pi);
        let _ = writeln!(out, "phase_rad = {}", pulse.phase_rad);
        let _ = writeln!(out, "envelope = {}", pulse.envelope);
    }
    out
}
