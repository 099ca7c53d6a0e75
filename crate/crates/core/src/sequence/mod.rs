//! Control pulses, sequence validation, and the locking-pair phase rule.
//!
//! Channel `P` drives |1⟩–|3⟩ (data and rephasing pulses), channel `C`
//! drives |2⟩–|3⟩ (the optical locking pair). All envelopes are
//! rectangular.

mod config;

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

pub use config::{parse_config, serialize_config, Config, DEFAULT_HORIZON_US, DEFAULT_THRESHOLD};

/// Tolerance used when comparing pulse edges, in μs.
pub const EDGE_TOL_US: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Probe transition |1⟩–|3⟩.
    P,
    /// Control transition |2⟩–|3⟩.
    C,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::P => "P",
            Channel::C => "C",
        })
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "p" => Ok(Channel::P),
            "C" | "c" => Ok(Channel::C),
            other => Err(Error::config(format!(
                "unknown channel '{other}' (expected P or C)"
            ))),
        }
    }
}

/// Label attached to a pulse so the analytic predictors know its function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// Single data pulse.
    D,
    /// Data bit `k` of a multi-bit stream.
    Bit(u32),
    R1,
    R2,
    B1,
    B2,
}

impl Role {
    pub fn is_data(self) -> bool {
        matches!(self, Role::D | Role::Bit(_))
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::D => f.write_str("D"),
            Role::Bit(k) => write!(f, "bit{k}"),
            Role::R1 => f.write_str("R1"),
            Role::R2 => f.write_str("R2"),
            Role::B1 => f.write_str("B1"),
            Role::B2 => f.write_str("B2"),
        }
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "D" => Role::D,
            "R1" => Role::R1,
            "R2" => Role::R2,
            "B1" => Role::B1,
            "B2" => Role::B2,
            _ => match s.strip_prefix("bit").map(str::parse::<u32>) {
                Some(Ok(k)) => Role::Bit(k),
                _ => return Err(Error::config(format!("unknown role '{s}'"))),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Envelope {
    #[default]
    Rect,
}

impl FromStr for Envelope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rect" => Ok(Envelope::Rect),
            other => Err(Error::config(format!(
                "unsupported envelope '{other}' (only rect)"
            ))),
        }
    }
}

impl fmt::Display for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("rect")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    pub channel: Channel,
    pub t_start_us: f64,
    pub duration_us: f64,
    /// Pulse area in units of π.
    pub area_pi: f64,
    pub phase_rad: f64,
    pub role: Option<Role>,
    pub envelope: Envelope,
}

impl Pulse {
    pub fn new(channel: Channel, t_start_us: f64, duration_us: f64, area_pi: f64) -> Self {
        Pulse {
            channel,
            t_start_us,
            duration_us,
            area_pi,
            phase_rad: 0.0,
            role: None,
            envelope: Envelope::Rect,
        }
    }

    /// Build a pulse positioned by its center time, which is the timing
    /// reference used by the echo predictors.
    pub fn centered(channel: Channel, t_center_us: f64, duration_us: f64, area_pi: f64) -> Self {
        Pulse::new(
            channel,
            t_center_us - 0.5 * duration_us,
            duration_us,
            area_pi,
        )
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = Some(role);
        self
    }

    pub fn t_end_us(&self) -> f64 {
        self.t_start_us + self.duration_us
    }

    pub fn t_center_us(&self) -> f64 {
        self.t_start_us + 0.5 * self.duration_us
    }

    /// Half-open activity interval `[start, end)`.
    pub fn active_at(&self, t_us: f64) -> bool {
        t_us >= self.t_start_us && t_us < self.t_end_us()
    }

    /// Angular Rabi amplitude in rad/μs. Panics only if the pulse was
    /// constructed with a non-positive duration, which validation rejects.
    pub fn rabi(&self) -> f64 {
        area_to_rabi(self.area_pi, self.duration_us).expect("pulse duration must be positive")
    }
}

/// Angular Rabi amplitude (rad/μs) of a rectangular pulse with the given area
/// (in units of π) and duration.
pub fn area_to_rabi(area_pi: f64, duration_us: f64) -> Result<f64> {
    if !(duration_us > 0.0) || !duration_us.is_finite() {
        return Err(Error::config(format!(
            "pulse duration must be positive, got {duration_us} us"
        )));
    }
    let rabi = area_pi * PI / duration_us;
    if !rabi.is_finite() {
        return Err(Error::config("Rabi amplitude is not finite"));
    }
    Ok(rabi)
}

/// Decay rates in kHz, read as rates of `value · 10³ s⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecayRates {
    /// Population decay |3⟩→|1⟩.
    pub pop31_khz: f64,
    /// Population decay |3⟩→|2⟩.
    pub pop32_khz: f64,
    /// Extra dephasing of ρ13.
    pub deph31_khz: f64,
    /// Extra dephasing of ρ23.
    pub deph32_khz: f64,
    /// Dephasing of the spin coherence ρ12.
    pub deph21_khz: f64,
}

impl DecayRates {
    pub fn zero() -> Self {
        DecayRates::default()
    }

    /// Pure optical dephasing on both optical coherences.
    pub fn optical_dephasing(khz: f64) -> Self {
        DecayRates {
            deph31_khz: khz,
            deph32_khz: khz,
            ..DecayRates::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("Gamma31", self.pop31_khz),
            ("Gamma32", self.pop32_khz),
            ("gamma31", self.deph31_khz),
            ("gamma32", self.deph32_khz),
            ("gamma21", self.deph21_khz),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(format!("negative rate: {name} = {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub pulses: Vec<Pulse>,
    pub horizon_us: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Severity {
    /// Blocks a simulation.
    Violation,
    /// Permitted but unusual.
    Warning,
    /// Informational; the input was adjusted or is trivially empty.
    Notice,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

/// Result of [`PulseSequence::validate`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Validation {
    pub diagnostics: Vec<Diagnostic>,
}

impl Validation {
    fn push(&mut self, severity: Severity, message: String) {
        self.diagnostics.push(Diagnostic { severity, message });
    }

    pub fn is_ok(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn violations(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Violation)
    }

    pub fn has_message(&self, needle: &str) -> bool {
        self.diagnostics.iter().any(|d| d.message.contains(needle))
    }
}

impl PulseSequence {
    /// Build a sequence, sorting pulses by start time.
    pub fn new(mut pulses: Vec<Pulse>, horizon_us: f64) -> Self {
        sort_pulses(&mut pulses);
        PulseSequence { pulses, horizon_us }
    }

    pub fn is_sorted(&self) -> bool {
        self.pulses
            .windows(2)
            .all(|w| w[0].t_start_us <= w[1].t_start_us)
    }

    pub fn sort(&mut self) {
        sort_pulses(&mut self.pulses);
    }

    /// Check the structural rules of a sequence. Never fails; all findings
    /// come back as diagnostics.
    pub fn validate(&self) -> Validation {
        let mut v = Validation::default();
        if self.pulses.is_empty() {
            v.push(Severity::Notice, "no pulses".into());
        }
        if !(self.horizon_us > 0.0) || !self.horizon_us.is_finite() {
            v.push(
                Severity::Violation,
                format!("horizon must be positive, got {}", self.horizon_us),
            );
        }
        if !self.is_sorted() {
            v.push(
                Severity::Notice,
                "pulses not sorted by start time; auto-sorted".into(),
            );
        }

        for (i, p) in self.pulses.iter().enumerate() {
            let label = pulse_label(i, p);
            if !(p.duration_us > 0.0) || !p.duration_us.is_finite() {
                v.push(
                    Severity::Violation,
                    format!("{label}: non-positive duration {}", p.duration_us),
                );
                continue;
            }
            if !(p.area_pi >= 0.0) || !p.area_pi.is_finite() {
                v.push(
                    Severity::Violation,
                    format!("{label}: negative or non-finite area {}", p.area_pi),
                );
            }
            if !p.phase_rad.is_finite() {
                v.push(Severity::Violation, format!("{label}: non-finite phase"));
            }
            if p.t_start_us < 0.0 {
                v.push(Severity::Violation, format!("{label}: starts before t = 0"));
            }
            if p.t_end_us() > self.horizon_us + EDGE_TOL_US {
                v.push(
                    Severity::Violation,
                    format!(
                        "{label}: exceeds horizon ({} > {} us)",
                        p.t_end_us(),
                        self.horizon_us
                    ),
                );
            }
        }

        let mut sorted: Vec<(usize, &Pulse)> = self.pulses.iter().enumerate().collect();
        sorted.sort_by(|a, b| cmp_start(a.1, b.1));
        for (ia, (i, a)) in sorted.iter().enumerate() {
            for (j, b) in sorted.iter().skip(ia + 1) {
                if b.t_start_us >= a.t_end_us() - EDGE_TOL_US {
                    break;
                }
                let (la, lb) = (pulse_label(*i, a), pulse_label(*j, b));
                if a.channel == b.channel {
                    v.push(
                        Severity::Violation,
                        format!("same-channel overlap: {la} and {lb}"),
                    );
                } else {
                    v.push(
                        Severity::Warning,
                        format!("cross-channel overlap: {la} and {lb}"),
                    );
                }
            }
        }

        let mut seen = Vec::new();
        for p in &self.pulses {
            if let Some(r) = p.role {
                if seen.contains(&r) {
                    v.push(Severity::Violation, format!("duplicate role {r}"));
                } else {
                    seen.push(r);
                }
                let expected = if matches!(r, Role::B1 | Role::B2) {
                    Channel::C
                } else {
                    Channel::P
                };
                if p.channel != expected {
                    v.push(
                        Severity::Violation,
                        format!("role {r} must be on channel {expected}"),
                    );
                }
            }
        }
        v
    }

    pub fn role(&self, role: Role) -> Option<&Pulse> {
        self.pulses.iter().find(|p| p.role == Some(role))
    }

    pub fn role_mut(&mut self, role: Role) -> Option<&mut Pulse> {
        self.pulses.iter_mut().find(|p| p.role == Some(role))
    }

    /// Center time of the pulse carrying `role`, or a configuration error.
    pub fn role_time(&self, role: Role) -> Result<f64> {
        self.role(role)
            .map(Pulse::t_center_us)
            .ok_or_else(|| Error::config(format!("missing role {role}")))
    }

    /// Data pulses (`D` and `bitK`) in time order.
    pub fn data_pulses(&self) -> Vec<&Pulse> {
        let mut v: Vec<&Pulse> = self
            .pulses
            .iter()
            .filter(|p| p.role.is_some_and(Role::is_data))
            .collect();
        v.sort_by(|a, b| cmp_start(a, b));
        v
    }

    /// Sum of the angular Rabi amplitudes (with carrier phase) of every pulse
    /// on `channel` active at `t_us`.
    pub(crate) fn drive_at(&self, channel: Channel, t_us: f64) -> num_complex::Complex64 {
        self.pulses
            .iter()
            .filter(|p| p.channel == channel && p.active_at(t_us))
            .map(|p| num_complex::Complex64::from_polar(p.rabi(), -p.phase_rad))
            .sum()
    }
}

fn pulse_label(i: usize, p: &Pulse) -> String {
    match p.role {
        Some(r) => format!("pulse {i} ({r})"),
        None => format!("pulse {i}"),
    }
}

fn cmp_start(a: &Pulse, b: &Pulse) -> Ordering {
    a.t_start_us.total_cmp(&b.t_start_us)
}

fn sort_pulses(pulses: &mut [Pulse]) {
    pulses.sort_by(cmp_start);
}

/// Phase picked up by the optical coherence from a B1–B2 locking pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LockingShift {
    pub shift_rad: f64,
    /// True when the shift is an integer multiple of 2π.
    pub locked: bool,
    /// The multiple `n` of 2π, when locked.
    pub n: Option<i64>,
}

/// Each π of transfer area between |3⟩ and |2⟩ contributes π/2 of phase, so
/// the pair shifts the coherence by `(θ_B1 + θ_B2)·π/2`. The pair leaves the
/// coherence unchanged iff that shift is a multiple of 2π.
pub fn locking_phase_shift(theta_b1_pi: f64, theta_b2_pi: f64) -> LockingShift {
    let shift_rad = (theta_b1_pi + theta_b2_pi) * PI / 2.0;
    let turns = shift_rad / TAU;
    let n = turns.round();
    let locked = (shift_rad - n * TAU).abs() <= 1e-9;
    LockingShift {
        shift_rad,
        locked,
        n: locked.then_some(n as i64),
    }
}
