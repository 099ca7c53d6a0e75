//! Inhomogeneous line discretization and ensemble reduction.

use num_complex::Complex64;

use crate::dynamics::Trajectory;
use crate::{Error, Result};

/// Gaussian line sampled on a uniform detuning grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub fwhm_khz: f64,
    /// Full width of the grid, `[-span/2, +span/2]`.
    pub span_khz: f64,
    /// Odd, so that δ = 0 is a grid point.
    pub n_groups: usize,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            fwhm_khz: 340.0,
            span_khz: 800.0,
            n_groups: 161,
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_groups < 3 || self.n_groups.is_multiple_of(2) {
            return Err(Error::config(format!(
                "n_groups must be odd and at least 3, got {}",
                self.n_groups
            )));
        }
        if !(self.span_khz > 0.0 && self.span_khz.is_finite()) {
            return Err(Error::config(format!(
                "span_khz must be positive, got {}",
                self.span_khz
            )));
        }
        if !(self.fwhm_khz > 0.0 && self.fwhm_khz.is_finite()) {
            return Err(Error::config(format!(
                "fwhm_khz must be positive, got {}",
                self.fwhm_khz
            )));
        }
        Ok(())
    }

    pub fn spacing_khz(&self) -> f64 {
        self.span_khz / (self.n_groups - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomGroup {
    pub delta_khz: f64,
    pub weight: f64,
}

/// Uniform grid over the span with normalized Gaussian weights. The grid is
/// built from integer offsets around the center so that `δ_{-k} = -δ_k`
/// holds exactly.
pub fn build_ensemble(spec: &EnsembleSpec) -> Result<Vec<AtomGroup>> {
    spec.validate()?;
    let half = (spec.n_groups - 1) / 2;
    let step = spec.spacing_khz();
    let k = 4.0 * std::f64::consts::LN_2 / (spec.fwhm_khz * spec.fwhm_khz);
    let mut groups: Vec<AtomGroup> = (0..spec.n_groups)
        .map(|i| {
            let offset = i as f64 - half as f64;
            let delta_khz = offset * step;
            AtomGroup {
                delta_khz,
                weight: (-k * delta_khz * delta_khz).exp(),
            }
        })
        .collect();
    let total: f64 = groups.iter().map(|g| g.weight).sum();
    for g in &mut groups {
        g.weight /= total;
    }
    Ok(groups)
}

/// Weighted macroscopic observables on the shared sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSignal {
    pub times_us: Vec<f64>,
    /// `P(t) = Σ_k w_k ρ13_k(t)`.
    pub polarization: Vec<Complex64>,
    pub rho11: Vec<f64>,
    pub rho22: Vec<f64>,
    pub rho33: Vec<f64>,
}

impl EnsembleSignal {
    pub fn len(&self) -> usize {
        self.times_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_us.is_empty()
    }

    /// Index of the sample closest to `t_us`.
    pub fn index_near(&self, t_us: f64) -> Option<usize> {
        if self.times_us.is_empty() {
            return None;
        }
        let i = self.times_us.partition_point(|&t| t < t_us);
        let candidates = [i.saturating_sub(1), i.min(self.times_us.len() - 1)];
        candidates.into_iter().min_by(|&a, &b| {
            (self.times_us[a] - t_us)
                .abs()
                .total_cmp(&(self.times_us[b] - t_us).abs())
        })
    }
}

/// Sum per-group trajectories with their weights. Summation runs in group
/// order (ascending δ) so the result does not depend on how the groups were
/// computed.
pub fn reduce_signal(trajectories: &[Trajectory], groups: &[AtomGroup]) -> Result<EnsembleSignal> {
    if trajectories.len() != groups.len() {
        return Err(Error::Shape(format!(
            "{} trajectories for {} groups",
            trajectories.len(),
            groups.len()
        )));
    }
    let Some(first) = trajectories.first() else {
        return Err(Error::Shape("no trajectories to reduce".into()));
    };
    let times = first.times_us.clone();
    for (k, tr) in trajectories.iter().enumerate() {
        if tr.times_us != times || tr.samples.len() != times.len() {
            return Err(Error::Shape(format!(
                "trajectory {k} has a different sample grid"
            )));
        }
    }

    let n = times.len();
    let mut out = EnsembleSignal {
        times_us: times,
        polarization: vec![Complex64::new(0.0, 0.0); n],
        rho11: vec![0.0; n],
        rho22: vec![0.0; n],
        rho33: vec![0.0; n],
    };
    for (tr, g) in trajectories.iter().zip(groups) {
        for (i, s) in tr.samples.iter().enumerate() {
            out.polarization[i] += s.rho13 * g.weight;
            out.rho11[i] += s.rho11 * g.weight;
            out.rho22[i] += s.rho22 * g.weight;
            out.rho33[i] += s.rho33 * g.weight;
        }
    }
    Ok(out)
}
