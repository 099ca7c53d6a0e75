use std::fmt;

use crate::ensemble::EnsembleSignal;
use crate::sequence::{PulseSequence, Role};
use crate::{Error, Result};

/// Guard added on both sides of every pulse when searching for echoes.
pub const EXCLUSION_US: f64 = 0.2;

/// Tolerance when comparing bit spacings with echo spacings.
const SPACING_TOL_US: f64 = 0.5;

/// Emissive/absorptive classification. The data pulse's own absorption
/// transient has `Im P > 0`, so that sign is "absorptive".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Character {
    Absorptive,
    Emissive,
}

impl Character {
    pub fn from_im_sign(im_sign: i8) -> Self {
        if im_sign > 0 {
            Character::Absorptive
        } else {
            Character::Emissive
        }
    }
}

impl fmt::Display for Character {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Character::Absorptive => "absorptive",
            Character::Emissive => "emissive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoEvent {
    /// Peak time, refined by a parabola through the three samples around the
    /// maximum.
    pub t_us: f64,
    /// |P| at the refined peak.
    pub amplitude: f64,
    /// Sign of Im P at the peak sample (−1, 0, +1).
    pub im_sign: i8,
    /// `⟨ρ33⟩ − ⟨ρ11⟩ > 0` at the peak sample.
    pub inverted: bool,
    pub sample_index: usize,
}

impl EchoEvent {
    pub fn character(&self) -> Character {
        Character::from_im_sign(self.im_sign)
    }

    /// Amplitude carrying the sign of Im P.
    pub fn signed_amplitude(&self) -> f64 {
        self.amplitude * f64::from(self.im_sign)
    }
}

fn excluded(seq: &PulseSequence, t: f64) -> bool {
    seq.pulses
        .iter()
        .any(|p| t >= p.t_start_us - EXCLUSION_US && t <= p.t_end_us() + EXCLUSION_US)
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Local maxima of |P| outside the pulse exclusion windows that exceed
/// `threshold_fraction` of the largest out-of-window |P|.
pub fn detect_echoes(
    signal: &EnsembleSignal,
    seq: &PulseSequence,
    threshold_fraction: f64,
) -> Vec<EchoEvent> {
    let n = signal.len();
    if n < 3 {
        return Vec::new();
    }
    let amp: Vec<f64> = signal.polarization.iter().map(|p| p.norm()).collect();
    let free: Vec<bool> = signal.times_us.iter().map(|&t| !excluded(seq, t)).collect();
    let max_free = amp
        .iter()
        .zip(&free)
        .filter(|(_, &f)| f)
        .fold(0.0f64, |m, (&a, _)| m.max(a));
    if max_free <= 0.0 {
        return Vec::new();
    }
    let floor = threshold_fraction * max_free;

    let mut events = Vec::new();
    for i in 1..n - 1 {
        let (a, b, c) = (amp[i - 1], amp[i], amp[i + 1]);
        if !free[i] || !(b > a && b >= c && b > floor) {
            continue;
        }
        let (t0, t1, t2) = (
            signal.times_us[i - 1],
            signal.times_us[i],
            signal.times_us[i + 1],
        );
        let (mut t_us, mut amplitude) = (t1, b);
        let curv = a - 2.0 * b + c;
        let h = 0.5 * (t2 - t0);
        if curv < 0.0 && ((t1 - t0) - (t2 - t1)).abs() < 1e-9 {
            let x = 0.5 * (a - c) / curv;
            t_us = t1 + x * h;
            amplitude = b - 0.25 * (a - c) * x;
        }
        events.push(EchoEvent {
            t_us,
            amplitude,
            im_sign: sign(signal.polarization[i].im),
            inverted: signal.rho33[i] - signal.rho11[i] > 0.0,
            sample_index: i,
        });
    }
    events
}

/// `w(t) = ⟨ρ33⟩ − ⟨ρ11⟩`; positive means inversion on the echo transition.
pub fn inversion_profile(signal: &EnsembleSignal) -> Vec<f64> {
    signal
        .rho33
        .iter()
        .zip(&signal.rho11)
        .map(|(a, b)| a - b)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// After the locking pair (or R1) and before R2.
    E1,
    /// After R2.
    E2,
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowKind::E1 => "E1",
            WindowKind::E2 => "E2",
        })
    }
}

/// Open time interval in which echoes of one kind are expected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoWindow {
    pub kind: WindowKind,
    pub start_us: f64,
    pub end_us: f64,
}

impl EchoWindow {
    pub fn for_sequence(seq: &PulseSequence, kind: WindowKind) -> Result<Self> {
        let end_of = |r: Role| seq.role(r).map(|p| p.t_end_us());
        let r2 = seq.role(Role::R2);
        match kind {
            WindowKind::E1 => {
                let start = end_of(Role::B2)
                    .or_else(|| end_of(Role::R1))
                    .ok_or_else(|| Error::config("missing role R1"))?;
                let end = r2.map_or(seq.horizon_us, |p| p.t_start_us);
                Ok(EchoWindow {
                    kind,
                    start_us: start,
                    end_us: end,
                })
            }
            WindowKind::E2 => {
                let r2 = r2.ok_or_else(|| Error::config("missing role R2"))?;
                Ok(EchoWindow {
                    kind,
                    start_us: r2.t_end_us(),
                    end_us: seq.horizon_us,
                })
            }
        }
    }

    pub fn contains(&self, t_us: f64) -> bool {
        t_us > self.start_us && t_us < self.end_us
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderVerdict {
    /// Echoes keep the bit order.
    Same,
    /// Latest bit echoes first.
    Reversed,
    /// The bit spacing pattern is a palindrome, so both orders fit.
    Ambiguous,
    /// Echo spacings match neither order.
    Unordered,
}

impl fmt::Display for OrderVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderVerdict::Same => "same",
            OrderVerdict::Reversed => "reversed",
            OrderVerdict::Ambiguous => "ambiguous",
            OrderVerdict::Unordered => "unordered",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub verdict: OrderVerdict,
    /// `(bit index, event)` pairs, bits in time order.
    pub matches: Vec<(usize, EchoEvent)>,
    /// `max/min − 1` over the matched echo amplitudes.
    pub amplitude_spread: f64,
}

fn spacings(ts: &[f64]) -> Vec<f64> {
    ts.windows(2).map(|w| w[1] - w[0]).collect()
}

fn spacing_match(a: &[f64], b: impl Iterator<Item = f64>) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= SPACING_TOL_US)
}

/// Decide whether the echoes inside `window` keep or reverse the order of
/// the data bits. Order is read from the spacing pattern, which the empty
/// slot in a bit stream makes asymmetric. Bits are matched to events by rank
/// according to the verdict.
pub fn check_order(
    bit_times_us: &[f64],
    events: &[EchoEvent],
    window: &EchoWindow,
) -> Result<OrderReport> {
    let mut bits = bit_times_us.to_vec();
    bits.sort_by(f64::total_cmp);
    let mut inside: Vec<EchoEvent> = events
        .iter()
        .copied()
        .filter(|e| window.contains(e.t_us))
        .collect();
    inside.sort_by(|a, b| a.t_us.total_cmp(&b.t_us));

    if bits.len() != inside.len() || bits.is_empty() {
        let ev: Vec<String> = inside.iter().map(|e| format!("{:.3}", e.t_us)).collect();
        return Err(Error::Detection(format!(
            "{} window ({:.3}..{:.3} us): {} bits {:?} but {} events [{}]",
            window.kind,
            window.start_us,
            window.end_us,
            bits.len(),
            bits,
            inside.len(),
            ev.join(", ")
        )));
    }

    let n = bits.len();
    let bit_gaps = spacings(&bits);
    let ev_times: Vec<f64> = inside.iter().map(|e| e.t_us).collect();
    let ev_gaps = spacings(&ev_times);
    let same = spacing_match(&bit_gaps, ev_gaps.iter().copied());
    let reversed = spacing_match(&bit_gaps, ev_gaps.iter().rev().copied());
    let verdict = match (n, same, reversed) {
        (1, _, _) => OrderVerdict::Same,
        (_, true, true) => OrderVerdict::Ambiguous,
        (_, true, false) => OrderVerdict::Same,
        (_, false, true) => OrderVerdict::Reversed,
        (_, false, false) => OrderVerdict::Unordered,
    };
    let matches = (0..n)
        .map(|i| {
            let j = if verdict == OrderVerdict::Reversed {
                n - 1 - i
            } else {
                i
            };
            (i, inside[j])
        })
        .collect();
    let (lo, hi) = inside.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), e| {
        (lo.min(e.amplitude), hi.max(e.amplitude))
    });
    Ok(OrderReport {
        verdict,
        matches,
        amplitude_spread: hi / lo - 1.0,
    })
}
