//! Rotating-frame Hamiltonian, relaxation, and fixed-step RK4 integration of
//! each atom group's density matrix.
//!
//! Frame: both optical carriers are resonant with the δ = 0 group and the
//! detuning sits on the shared excited level |3⟩, so free evolution gives
//! `ρ13 ∝ exp(+i 2π δ t)` and leaves the spin coherence ρ12 untouched.
//! Configured kHz values are converted here and nowhere else: detunings by
//! `2π·10⁻³` to rad/μs, rates by `10⁻³` to μs⁻¹.

mod matrix;

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::ensemble::{reduce_signal, AtomGroup, EnsembleSignal};
use crate::sequence::{Channel, DecayRates, PulseSequence, EDGE_TOL_US};
use crate::{Error, Result};

pub use matrix::Mat3;

pub const TRACE_TOL: f64 = 1e-8;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Largest Rabi rotation (rad) taken in one step inside a pulse. Above this
/// the fixed-step scheme drifts out of the positive cone on multi-π pulses.
pub const MAX_ROTATION_PER_STEP: f64 = 0.02;

/// Detuning in kHz to angular frequency in rad/μs.
pub fn detuning_to_angular(delta_khz: f64) -> f64 {
    TAU * delta_khz * 1e-3
}

/// Rate in kHz (`value · 10³ s⁻¹`) to μs⁻¹.
pub fn rate_to_per_us(khz: f64) -> f64 {
    khz * 1e-3
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunParams {
    /// Step inside pulses.
    pub dt_pulse_ns: f64,
    /// Step between pulses.
    pub dt_free_ns: f64,
    /// Samples are emitted every `sample_stride · dt_free`.
    pub sample_stride: usize,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            dt_pulse_ns: 1.0,
            dt_free_ns: 10.0,
            sample_stride: 5,
        }
    }
}

impl RunParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_pulse_ns > 0.0 && self.dt_free_ns > 0.0) {
            return Err(Error::config("step sizes must be positive"));
        }
        if self.dt_pulse_ns > self.dt_free_ns {
            return Err(Error::config(format!(
                "dt_pulse_ns ({}) must not exceed dt_free_ns ({})",
                self.dt_pulse_ns, self.dt_free_ns
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::config("sample_stride must be at least 1"));
        }
        Ok(())
    }

    pub fn sample_interval_us(&self) -> f64 {
        self.sample_stride as f64 * self.dt_free_ns * 1e-3
    }

    /// Same sample grid with both steps halved.
    pub fn halved(&self) -> Self {
        RunParams {
            dt_pulse_ns: self.dt_pulse_ns / 2.0,
            dt_free_ns: self.dt_free_ns / 2.0,
            sample_stride: self.sample_stride * 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(pub Mat3);

impl DensityMatrix {
    /// `|1⟩⟨1|`
    pub fn ground() -> Self {
        DensityMatrix(Mat3::unit(0, 0))
    }

    /// `|ψ⟩⟨ψ|` for an amplitude vector, normalized here.
    pub fn pure(amplitudes: [Complex64; 3]) -> Self {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let a = amplitudes.map(|x| x / norm);
        let mut m = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = a[i] * a[j].conj();
            }
        }
        DensityMatrix(m)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn check(&self, t_us: f64) -> Result<()> {
        let m = &self.0;
        if m.0
            .iter()
            .flatten()
            .any(|x| !x.re.is_finite() || !x.im.is_finite())
        {
            return Err(numerical(t_us, "non-finite density matrix entry"));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(numerical(t_us, format!("trace drifted to {tr}")));
        }
        let h = m.hermiticity_error();
        if h > HERMITICITY_TOL {
            return Err(numerical(t_us, format!("hermiticity error {h:e}")));
        }
        if !m.is_positive_within(POSITIVITY_TOL) {
            return Err(numerical(t_us, "negative eigenvalue below -1e-8"));
        }
        Ok(())
    }

    fn sample(&self) -> Sample {
        let m = &self.0;
        Sample {
            rho11: m[(0, 0)].re,
            rho22: m[(1, 1)].re,
            rho33: m[(2, 2)].re,
            rho12: m[(0, 1)],
            rho13: m[(0, 2)],
            rho23: m[(1, 2)],
        }
    }
}

fn numerical(t_us: f64, what: impl Into<String>) -> Error {
    Error::Numerical {
        t_us,
        delta_khz: None,
        what: what.into(),
    }
}

/// Populations and upper-triangle coherences at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sample {
    pub rho11: f64,
    pub rho22: f64,
    pub rho33: f64,
    pub rho12: Complex64,
    pub rho13: Complex64,
    pub rho23: Complex64,
}

impl Sample {
    pub fn to_density(&self) -> DensityMatrix {
        let mut m = Mat3::zero();
        m[(0, 0)] = self.rho11.into();
        m[(1, 1)] = self.rho22.into();
        m[(2, 2)] = self.rho33.into();
        m[(0, 1)] = self.rho12;
        m[(1, 0)] = self.rho12.conj();
        m[(0, 2)] = self.rho13;
        m[(2, 0)] = self.rho13.conj();
        m[(1, 2)] = self.rho23;
        m[(2, 1)] = self.rho23.conj();
        DensityMatrix(m)
    }

    pub fn population_sum(&self) -> f64 {
        self.rho11 + self.rho22 + self.rho33
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times_us: Vec<f64>,
    pub samples: Vec<Sample>,
    /// Largest `‖ρ − ρ†‖` seen after any step, before re-symmetrization.
    pub max_hermiticity_drift: f64,
}

/// `H/ħ` in rad/μs at `t_us` for a group detuned by `delta_khz`.
pub fn hamiltonian_at(t_us: f64, delta_khz: f64, seq: &PulseSequence) -> Mat3 {
    let mut h = drive_matrix(seq, t_us);
    h[(2, 2)] += detuning_to_angular(delta_khz);
    h
}

/// Coupling part of the Hamiltonian: `(Ω_P/2) e^{-iφ}|3⟩⟨1| + (Ω_C/2) e^{-iφ}|3⟩⟨2| + h.c.`
fn drive_matrix(seq: &PulseSequence, t_us: f64) -> Mat3 {
    let p = seq.drive_at(Channel::P, t_us) * 0.5;
    let c = seq.drive_at(Channel::C, t_us) * 0.5;
    let mut h = Mat3::zero();
    h[(2, 0)] = p;
    h[(0, 2)] = p.conj();
    h[(2, 1)] = c;
    h[(1, 2)] = c.conj();
    h
}

/// Decay rates converted to μs⁻¹, with the lifetime contribution folded into
/// the optical coherence damping.
#[derive(Debug, Clone, Copy)]
struct Relaxation {
    pop31: f64,
    pop32: f64,
    damp13: f64,
    damp23: f64,
    damp12: f64,
}

impl Relaxation {
    fn new(r: &DecayRates) -> Self {
        let pop31 = rate_to_per_us(r.pop31_khz);
        let pop32 = rate_to_per_us(r.pop32_khz);
        let half_life = 0.5 * (pop31 + pop32);
        Relaxation {
            pop31,
            pop32,
            damp13: rate_to_per_us(r.deph31_khz) + half_life,
            damp23: rate_to_per_us(r.deph32_khz) + half_life,
            damp12: rate_to_per_us(r.deph21_khz),
        }
    }

    fn is_zero(&self) -> bool {
        self.pop31 == 0.0
            && self.pop32 == 0.0
            && self.damp13 == 0.0
            && self.damp23 == 0.0
            && self.damp12 == 0.0
    }
}

fn rhs(rho: &Mat3, h: &Mat3, relax: &Relaxation) -> Mat3 {
    let comm = h.commutator(rho);
    let mut d = Mat3::zero();
    let i = Complex64::new(0.0, 1.0);
    for a in 0..3 {
        for b in 0..3 {
            d[(a, b)] = -i * comm[(a, b)];
        }
    }
    if relax.is_zero() {
        return d;
    }
    let r33 = rho[(2, 2)];
    d[(0, 0)] += r33 * relax.pop31;
    d[(1, 1)] += r33 * relax.pop32;
    d[(2, 2)] -= r33 * (relax.pop31 + relax.pop32);
    for (a, b, g) in [
        (0, 2, relax.damp13),
        (1, 2, relax.damp23),
        (0, 1, relax.damp12),
    ] {
        d[(a, b)] -= rho[(a, b)] * g;
        d[(b, a)] -= rho[(b, a)] * g;
    }
    d
}

/// `dρ/dt = −i[H, ρ] + relaxation`. Population leaves |3⟩ at `Γ31 + Γ32`
/// and feeds |1⟩ and |2⟩; ρ13 and ρ23 damp at `γ + (Γ31+Γ32)/2`, ρ12 at
/// `γ21`.
pub fn lindblad_rhs(rho: &DensityMatrix, h: &Mat3, rates: &DecayRates) -> Mat3 {
    rhs(&rho.0, h, &Relaxation::new(rates))
}

fn rk4_step(rho: &Mat3, h: &Mat3, relax: &Relaxation, dt: f64) -> Mat3 {
    let k1 = rhs(rho, h, relax);
    let k2 = rhs(&rho.add_scaled(&k1, 0.5 * dt), h, relax);
    let k3 = rhs(&rho.add_scaled(&k2, 0.5 * dt), h, relax);
    let k4 = rhs(&rho.add_scaled(&k3, dt), h, relax);
    let mut incr = k1;
    incr = incr.add_scaled(&k2, 2.0);
    incr = incr.add_scaled(&k3, 2.0);
    incr += k4;
    rho.add_scaled(&incr, dt / 6.0)
}

/// Stretch of constant drive integrated with a fixed step.
#[derive(Debug, Clone)]
struct Segment {
    t0: f64,
    dt: f64,
    steps: usize,
    drive: Mat3,
    /// Time of the sample emitted at the segment end, if any.
    sample_at_end: Option<f64>,
}

/// Step plan shared by every group of a run: breakpoints at pulse edges and
/// sample times, at most `dt_pulse` inside pulses and `dt_free` elsewhere.
#[derive(Debug, Clone)]
struct Timeline {
    segments: Vec<Segment>,
}

impl Timeline {
    fn new(seq: &PulseSequence, params: &RunParams) -> Result<Self> {
        params.validate()?;
        let horizon = seq.horizon_us;
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::config(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let interval = params.sample_interval_us();
        let n_samples = (horizon / interval + 1e-9).floor() as usize + 1;

        // (time, is_sample)
        let mut marks: Vec<(f64, bool)> = (0..n_samples)
            .map(|k| (k as f64 * interval, true))
            .collect();
        for p in &seq.pulses {
            for t in [p.t_start_us, p.t_end_us()] {
                if t > 0.0 && t < horizon {
                    marks.push((t, false));
                }
            }
        }
        marks.push((horizon, false));
        marks.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut points: Vec<(f64, bool)> = Vec::with_capacity(marks.len());
        for (t, is_sample) in marks {
            match points.last_mut() {
                Some(last) if (t - last.0).abs() <= EDGE_TOL_US => {
                    // keep the sample's exact time when merging with an edge
                    if is_sample && !last.1 {
                        *last = (t, true);
                    }
                }
                _ => points.push((t, is_sample)),
            }
        }

        let dt_pulse = params.dt_pulse_ns * 1e-3;
        let dt_free = params.dt_free_ns * 1e-3;
        let mut segments = Vec::with_capacity(points.len());
        for w in points.windows(2) {
            let (t0, t1) = (w[0].0, w[1].0);
            let mid = 0.5 * (t0 + t1);
            let in_pulse = seq.pulses.iter().any(|p| p.active_at(mid));
            let drive = drive_matrix(seq, mid);
            let dt_max = if in_pulse {
                // Strong pulses get a proportionally finer step so that the
                // Rabi rotation per step stays bounded.
                let rabi = 2.0 * (drive[(2, 0)].norm_sqr() + drive[(2, 1)].norm_sqr()).sqrt();
                let refine = (rabi * dt_pulse / MAX_ROTATION_PER_STEP).ceil().max(1.0);
                dt_pulse / refine
            } else {
                dt_free
            };
            let len = t1 - t0;
            let steps = ((len / dt_max) - 1e-6).ceil().max(1.0) as usize;
            segments.push(Segment {
                t0,
                dt: len / steps as f64,
                steps,
                drive,
                sample_at_end: w[1].1.then_some(t1),
            });
        }
        Ok(Timeline { segments })
    }

    fn integrate(
        &self,
        delta_khz: f64,
        relax: &Relaxation,
        rho0: &DensityMatrix,
    ) -> Result<Trajectory> {
        rho0.check(0.0)?;
        let detuning = detuning_to_angular(delta_khz);
        let n = self
            .segments
            .iter()
            .filter(|s| s.sample_at_end.is_some())
            .count()
            + 1;
        let mut times = Vec::with_capacity(n);
        let mut samples = Vec::with_capacity(n);
        times.push(0.0);
        samples.push(rho0.sample());

        let mut rho = rho0.0;
        let mut max_drift: f64 = 0.0;
        for seg in &self.segments {
            let mut h = seg.drive;
            h[(2, 2)] += detuning;
            for _ in 0..seg.steps {
                rho = rk4_step(&rho, &h, relax, seg.dt);
                max_drift = max_drift.max(rho.hermiticity_error());
                rho.symmetrize();
            }
            let t_end = seg.t0 + seg.dt * seg.steps as f64;
            if max_drift > HERMITICITY_TOL {
                return Err(numerical(t_end, format!("hermiticity drift {max_drift:e}")));
            }
            if let Some(ts) = seg.sample_at_end {
                let state = DensityMatrix(rho);
                state.check(ts)?;
                times.push(ts);
                samples.push(state.sample());
            }
        }
        Ok(Trajectory {
            times_us: times,
            samples,
            max_hermiticity_drift: max_drift,
        })
    }
}

/// Integrate one detuning group over the whole sequence.
pub fn integrate_group(
    delta_khz: f64,
    seq: &PulseSequence,
    rates: &DecayRates,
    params: &RunParams,
    rho0: &DensityMatrix,
) -> Result<Trajectory> {
    rates.validate()?;
    let timeline = Timeline::new(seq, params)?;
    timeline
        .integrate(delta_khz, &Relaxation::new(rates), rho0)
        .map_err(|e| e.with_delta(delta_khz))
}

/// Integrate every group from `|1⟩⟨1|` and reduce to the ensemble signal.
/// Groups run in parallel; results are joined in group order.
pub fn simulate_ensemble(
    groups: &[AtomGroup],
    seq: &PulseSequence,
    rates: &DecayRates,
    params: &RunParams,
) -> Result<(Vec<Trajectory>, EnsembleSignal)> {
    rates.validate()?;
    let timeline = Timeline::new(seq, params)?;
    let relax = Relaxation::new(rates);
    let rho0 = DensityMatrix::ground();
    let trajectories = groups
        .par_iter()
        .map(|g| {
            timeline
                .integrate(g.delta_khz, &relax, &rho0)
                .map_err(|e| e.with_delta(g.delta_khz))
        })
        .collect::<Result<Vec<_>>>()?;
    let signal = reduce_signal(&trajectories, groups)?;
    Ok((trajectories, signal))
}
