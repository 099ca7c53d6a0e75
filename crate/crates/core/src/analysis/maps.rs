//! Per-group views of the optical coherence: detuning-time maps and
//! `(u, v)` paths.

use std::fmt;
use std::str::FromStr;

use crate::dynamics::{Sample, Trajectory};
use crate::ensemble::AtomGroup;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapComponent {
    Re13,
    Im13,
    Rho33,
}

impl MapComponent {
    pub const ALL: [MapComponent; 3] =
        [MapComponent::Re13, MapComponent::Im13, MapComponent::Rho33];

    fn pick(self, s: &Sample) -> f64 {
        match self {
            MapComponent::Re13 => s.rho13.re,
            MapComponent::Im13 => s.rho13.im,
            MapComponent::Rho33 => s.rho33,
        }
    }
}

impl fmt::Display for MapComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MapComponent::Re13 => "re13",
            MapComponent::Im13 => "im13",
            MapComponent::Rho33 => "rho33",
        })
    }
}

impl FromStr for MapComponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "re13" => Ok(MapComponent::Re13),
            "im13" => Ok(MapComponent::Im13),
            "rho33" => Ok(MapComponent::Rho33),
            other => Err(Error::Argument(format!(
                "unknown map component '{other}' (re13, im13, rho33)"
            ))),
        }
    }
}

/// One row per detuning group, one column per sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceMap {
    pub component: MapComponent,
    pub deltas_khz: Vec<f64>,
    pub times_us: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
}

pub fn coherence_map(
    trajectories: &[Trajectory],
    groups: &[AtomGroup],
    component: MapComponent,
) -> Result<CoherenceMap> {
    if trajectories.len() != groups.len() {
        return Err(Error::Shape(format!(
            "{} trajectories for {} groups",
            trajectories.len(),
            groups.len()
        )));
    }
    let times = trajectories
        .first()
        .map(|t| t.times_us.clone())
        .unwrap_or_default();
    let mut rows = Vec::with_capacity(groups.len());
    for (i, tr) in trajectories.iter().enumerate() {
        if tr.times_us != times {
            return Err(Error::Shape(format!(
                "trajectory {i} has a different time grid"
            )));
        }
        rows.push(tr.samples.iter().map(|s| component.pick(s)).collect());
    }
    Ok(CoherenceMap {
        component,
        deltas_khz: groups.iter().map(|g| g.delta_khz).collect(),
        times_us: times,
        rows,
    })
}

/// Real and imaginary parts of the 1–3 coherence: `u = Re ρ13`,
/// `v = Im ρ13`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UvPoint {
    pub t_us: f64,
    pub u: f64,
    pub v: f64,
}

pub fn uv_trajectory(traj: &Trajectory) -> Vec<UvPoint> {
    traj.times_us
        .iter()
        .zip(&traj.samples)
        .map(|(&t_us, s)| UvPoint {
            t_us,
            u: s.rho13.re,
            v: s.rho13.im,
        })
        .collect()
}
