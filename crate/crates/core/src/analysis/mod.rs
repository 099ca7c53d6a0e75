//! Echo detection, analytic predictors, and the phase-ledger oracle.

mod echoes;
mod ledger;
mod maps;
mod timing;

pub use echoes::{
    check_order, detect_echoes, inversion_profile, Character, EchoEvent, EchoWindow, OrderReport,
    OrderVerdict, WindowKind, EXCLUSION_US,
};
pub use ledger::{
    ledger_vs_simulation, phase_ledger, rephasing_areas_are_pi, Evolution, LedgerComparison,
    LedgerEntry, LedgerReport, Location, PredictedEcho, PERTURBATIVE_AREA_PI,
};
pub use maps::{coherence_map, uv_trajectory, CoherenceMap, MapComponent, UvPoint};
pub use timing::{
    eq1_intensities, predict_echo_times, predict_for_data, EchoPrediction, Eq1Params,
};
