//! Symbolic bookkeeping of the optical coherence phase of one detuning
//! group, used as an oracle for the integrated dynamics.
//!
//! In the rotating frame `ρ13` always turns as `exp(+iΔt)` between pulses;
//! what the pulses change is the reference time `a` and the constant `c` in
//! `arg ρ13 = Δ·(t − a) + c`:
//!
//! * data pulse at `T_D` (phase φ): `a = T_D`, `c = π/2 + φ` (weak-pulse
//!   absorption coherence is `+i·θ/2`);
//! * rephasing π pulse at `T_R` (phase φ) conjugates: `a → 2T_R − a`,
//!   `c → −c + 2φ`;
//! * B1 at `T_B1` moves the coherence into ρ12, which carries
//!   `Δ·(T_B1 − a) + c + θ_B1·π/2 − φ_B1` and does not evolve;
//! * B2 at `T_B2` returns it: `a → a + (T_B2 − T_B1)`,
//!   `c → c + (θ_B1 + θ_B2)·π/2 + φ_B2 − φ_B1`.
//!
//! The δ-dependent part vanishes at `t = a`; after at least one conjugation
//! that instant is an echo. Before it the accumulated phase unwinds
//! (rephasing, sign −), after it the phase grows again (dephasing, sign +).

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::echoes::{Character, EXCLUSION_US};
use crate::dynamics::{detuning_to_angular, integrate_group, DensityMatrix, RunParams};
use crate::sequence::{Channel, DecayRates, PulseSequence, Role};
use crate::{Error, Result};

/// Largest data area (in units of π) for which [`ledger_vs_simulation`] is
/// meaningful.
pub const PERTURBATIVE_AREA_PI: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evolution {
    /// No coherence yet.
    Idle,
    /// Accumulated phase grows, `exp(+iΔτ)`.
    Dephasing,
    /// Accumulated phase unwinds toward an echo, `exp(−iΔτ)`.
    Rephasing,
    /// Coherence parked in the spin state.
    Frozen,
}

impl Evolution {
    /// `+1` for dephasing, `−1` for rephasing.
    pub fn sign(self) -> Option<i8> {
        match self {
            Evolution::Dephasing => Some(1),
            Evolution::Rephasing => Some(-1),
            _ => None,
        }
    }
}

/// Where the bulk of the population sits during an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    GroundCoherent,
    ExcitedCoherent,
    SpinShelved,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub t_begin_us: f64,
    pub t_end_us: f64,
    pub evolution: Evolution,
    pub location: Location,
    /// Constant part of the tracked phase (of ρ13, or of ρ12 when frozen).
    pub constant_phase_rad: f64,
    /// Reference time `a` of `Δ·(t − a)`; for frozen entries the detuned part
    /// is held at its value at `t_begin`.
    pub reference_us: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictedEcho {
    /// `E1`, `E2`, ... in time order.
    pub label: String,
    pub t_us: f64,
    /// `arg ρ13` at the echo instant.
    pub closure_phase_rad: f64,
    /// Closure phase measured from the emissive axis (`−π/2`), wrapped to
    /// `(−π, π]`: even multiples of π are emissive, odd ones absorptive.
    pub excess_phase_rad: f64,
    pub character: Character,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerReport {
    pub delta_khz: f64,
    pub entries: Vec<LedgerEntry>,
    pub echoes: Vec<PredictedEcho>,
}

impl LedgerReport {
    pub fn entry_at(&self, t_us: f64) -> Option<&LedgerEntry> {
        self.entries
            .iter()
            .find(|e| t_us >= e.t_begin_us && t_us < e.t_end_us)
            .or_else(|| self.entries.last().filter(|e| t_us == e.t_end_us))
    }

    /// Predicted phase at `t_us`: of ρ13, or of ρ12 while frozen. `None`
    /// before the data pulse.
    pub fn phase_at(&self, t_us: f64) -> Option<f64> {
        let e = self.entry_at(t_us)?;
        let w = detuning_to_angular(self.delta_khz);
        match e.evolution {
            Evolution::Idle => None,
            Evolution::Frozen => Some(w * (e.t_begin_us - e.reference_us) + e.constant_phase_rad),
            _ => Some(w * (t_us - e.reference_us) + e.constant_phase_rad),
        }
    }

    /// Sequence of evolution signs over non-idle, non-frozen intervals, with
    /// consecutive repeats collapsed.
    pub fn sign_chain(&self) -> Vec<i8> {
        let mut out: Vec<i8> = Vec::new();
        for s in self.entries.iter().filter_map(|e| e.evolution.sign()) {
            if out.last() != Some(&s) {
                out.push(s);
            }
        }
        out
    }
}

/// Wrap to `(−π, π]`.
pub(crate) fn wrap(x: f64) -> f64 {
    let y = x - TAU * (x / TAU).round();
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Data { phase: f64 },
    Rephase { phase: f64 },
    LockStart { area_pi: f64, phase: f64 },
    LockEnd { area_pi: f64, phase: f64 },
}

struct State {
    reference: f64,
    constant: f64,
    location: Location,
    before_lock: Location,
    /// (B1 time, B1 area, B1 phase) while shelved.
    lock: Option<(f64, f64, f64)>,
    conjugations: usize,
    started: bool,
}

/// Build the phase ledger of the group detuned by `delta_khz` for the pulse
/// labelled `D`. Requires D and R1; B1/B2 must come as a pair.
pub fn phase_ledger(seq: &PulseSequence, delta_khz: f64) -> Result<LedgerReport> {
    let data = seq
        .role(Role::D)
        .ok_or_else(|| Error::config("missing role D"))?;
    seq.role(Role::R1)
        .ok_or_else(|| Error::config("missing role R1"))?;
    if seq.role(Role::B1).is_some() != seq.role(Role::B2).is_some() {
        return Err(Error::config("B1 and B2 must both be present"));
    }

    let mut ops: Vec<(f64, Op)> = vec![(
        data.t_center_us(),
        Op::Data {
            phase: data.phase_rad,
        },
    )];
    for p in &seq.pulses {
        let op = match p.role {
            Some(Role::R1 | Role::R2) => Op::Rephase { phase: p.phase_rad },
            Some(Role::B1) => Op::LockStart {
                area_pi: p.area_pi,
                phase: p.phase_rad,
            },
            Some(Role::B2) => Op::LockEnd {
                area_pi: p.area_pi,
                phase: p.phase_rad,
            },
            _ => continue,
        };
        if p.t_center_us() < data.t_center_us() {
            return Err(Error::config(format!(
                "{} precedes the data pulse",
                p.role.unwrap()
            )));
        }
        ops.push((p.t_center_us(), op));
    }
    ops.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let (Some(b1), Some(b2)) = (seq.role(Role::B1), seq.role(Role::B2)) {
        if b2.t_center_us() <= b1.t_center_us() {
            return Err(Error::config("B2 must follow B1"));
        }
    }

    let mut st = State {
        reference: 0.0,
        constant: 0.0,
        location: Location::GroundCoherent,
        before_lock: Location::GroundCoherent,
        lock: None,
        conjugations: 0,
        started: false,
    };
    let mut entries = Vec::new();
    let mut echoes = Vec::new();
    let mut t = 0.0;
    let horizon = seq.horizon_us;

    let close = |st: &State,
                 from: f64,
                 to: f64,
                 entries: &mut Vec<LedgerEntry>,
                 echoes: &mut Vec<PredictedEcho>| {
        if to <= from {
            return;
        }
        if !st.started {
            entries.push(LedgerEntry {
                t_begin_us: from,
                t_end_us: to,
                evolution: Evolution::Idle,
                location: st.location,
                constant_phase_rad: 0.0,
                reference_us: 0.0,
            });
            return;
        }
        if let Some((t_b1, area, phase)) = st.lock {
            entries.push(LedgerEntry {
                t_begin_us: from,
                t_end_us: to,
                evolution: Evolution::Frozen,
                location: Location::SpinShelved,
                constant_phase_rad: st.constant + area * FRAC_PI_2 - phase,
                reference_us: st.reference + (from - t_b1),
            });
            return;
        }
        let mut push = |a: f64, b: f64, evolution| {
            entries.push(LedgerEntry {
                t_begin_us: a,
                t_end_us: b,
                evolution,
                location: st.location,
                constant_phase_rad: st.constant,
                reference_us: st.reference,
            })
        };
        let focus = st.reference;
        if focus > from && focus < to {
            push(from, focus, Evolution::Rephasing);
            push(focus, to, Evolution::Dephasing);
            if st.conjugations > 0 {
                let excess = wrap(st.constant + FRAC_PI_2);
                echoes.push(PredictedEcho {
                    label: format!("E{}", echoes.len() + 1),
                    t_us: focus,
                    closure_phase_rad: st.constant,
                    excess_phase_rad: excess,
                    character: if excess.cos() > 0.0 {
                        Character::Emissive
                    } else {
                        Character::Absorptive
                    },
                });
            }
        } else if focus >= to {
            push(from, to, Evolution::Rephasing);
        } else {
            push(from, to, Evolution::Dephasing);
        }
    };

    for (t_op, op) in ops {
        let t_op = t_op.min(horizon);
        close(&st, t, t_op, &mut entries, &mut echoes);
        t = t_op;
        match op {
            Op::Data { phase } => {
                st.started = true;
                st.reference = t_op;
                st.constant = FRAC_PI_2 + phase;
            }
            Op::Rephase { phase } => {
                st.reference = 2.0 * t_op - st.reference;
                st.constant = -st.constant + 2.0 * phase;
                st.conjugations += 1;
                st.location = match st.location {
                    Location::GroundCoherent => Location::ExcitedCoherent,
                    Location::ExcitedCoherent => Location::GroundCoherent,
                    Location::SpinShelved => Location::SpinShelved,
                };
            }
            Op::LockStart { area_pi, phase } => {
                st.before_lock = st.location;
                st.location = Location::SpinShelved;
                st.lock = Some((t_op, area_pi, phase));
            }
            Op::LockEnd { area_pi, phase } => {
                if let Some((t_b1, area_b1, phase_b1)) = st.lock.take() {
                    st.reference += t_op - t_b1;
                    st.constant += (area_b1 + area_pi) * FRAC_PI_2 + phase - phase_b1;
                }
                st.location = st.before_lock;
            }
        }
    }
    close(&st, t, horizon, &mut entries, &mut echoes);

    Ok(LedgerReport {
        delta_khz,
        entries,
        echoes,
    })
}

/// Point-by-point comparison of the ledger against a full integration.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerComparison {
    /// `(t, predicted, simulated)` phases at interval midpoints.
    pub points: Vec<(f64, f64, f64)>,
    pub max_discrepancy_rad: f64,
}

/// Integrate the group (zero decay, default steps) and compare the phase of
/// the data-induced coherence at each ledger interval midpoint with the
/// ledger prediction, modulo 2π. Frozen intervals compare the spin coherence
/// ρ12; midpoints within a pulse exclusion window are skipped.
///
/// Off resonance a π pulse leaves a residual coherence of order `Δ/Ω`, which
/// is as large as a weak data coherence. The comparison therefore uses the
/// difference between runs with and without the data pulse, which isolates
/// the part linear in the data field.
pub fn ledger_vs_simulation(seq: &PulseSequence, delta_khz: f64) -> Result<LedgerComparison> {
    let data = seq
        .role(Role::D)
        .ok_or_else(|| Error::config("missing role D"))?;
    if data.area_pi > PERTURBATIVE_AREA_PI + 1e-12 {
        return Err(Error::Argument(format!(
            "data area {}pi exceeds the perturbative limit {}pi",
            data.area_pi, PERTURBATIVE_AREA_PI
        )));
    }
    let report = phase_ledger(seq, delta_khz)?;
    let run = |s: &PulseSequence| {
        integrate_group(
            delta_khz,
            s,
            &DecayRates::zero(),
            &RunParams::default(),
            &DensityMatrix::ground(),
        )
    };
    let traj = run(seq)?;
    let mut dark = seq.clone();
    dark.pulses.retain(|p| p.role != Some(Role::D));
    let reference = run(&dark)?;

    let near_pulse = |t: f64| {
        seq.pulses
            .iter()
            .any(|p| t >= p.t_start_us - EXCLUSION_US && t <= p.t_end_us() + EXCLUSION_US)
    };
    let mut points = Vec::new();
    for e in report
        .entries
        .iter()
        .filter(|e| e.evolution != Evolution::Idle)
    {
        let mid = 0.5 * (e.t_begin_us + e.t_end_us);
        if near_pulse(mid) {
            continue;
        }
        let i = traj
            .times_us
            .partition_point(|&t| t < mid)
            .min(traj.times_us.len() - 1);
        let t = traj.times_us[i];
        let Some(predicted) = report.phase_at(t) else {
            continue;
        };
        let (s, r) = (&traj.samples[i], &reference.samples[i]);
        let simulated = if e.evolution == Evolution::Frozen {
            (s.rho12 - r.rho12).arg()
        } else {
            (s.rho13 - r.rho13).arg()
        };
        points.push((t, wrap(predicted), simulated));
    }
    let max_discrepancy_rad = points
        .iter()
        .map(|(_, p, s)| wrap(s - p).abs())
        .fold(0.0, f64::max);
    Ok(LedgerComparison {
        points,
        max_discrepancy_rad,
    })
}

/// Whether every P-channel pulse with a rephasing role has an odd-π area,
/// which the conjugation rule assumes.
pub fn rephasing_areas_are_pi(seq: &PulseSequence) -> bool {
    seq.pulses
        .iter()
        .filter(|p| p.channel == Channel::P && matches!(p.role, Some(Role::R1 | Role::R2)))
        .all(|p| ((p.area_pi - 1.0) / 2.0).fract().abs() < 1e-9)
}
