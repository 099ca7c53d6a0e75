use crate::sequence::{PulseSequence, Role};
use crate::{Error, Result};

/// Analytic echo times, using pulse centers as timing references.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoPrediction {
    pub t_data_us: f64,
    /// Locking interval `T = T_B2 − T_B1` (zero without a locking pair).
    pub locking_interval_us: f64,
    /// `2·T_R1 − T_D + T`
    pub t_e1_us: f64,
    /// Mirror of E1 about R2: `2·T_R2 − T_E1`.
    pub t_e2_chain_us: Option<f64>,
    /// Printed relation `2·T_R2 − (T_R1 + T_D + T)`.
    pub t_e2_printed_us: Option<f64>,
}

impl EchoPrediction {
    /// Whether the two E2 relations coincide within 1e-9 μs. `None` without R2.
    pub fn agree(&self) -> Option<bool> {
        match (self.t_e2_chain_us, self.t_e2_printed_us) {
            (Some(a), Some(b)) => Some((a - b).abs() <= 1e-9),
            _ => None,
        }
    }
}

/// Predict echo times for the pulse labelled `D`.
pub fn predict_echo_times(seq: &PulseSequence) -> Result<EchoPrediction> {
    predict_for_data(seq, seq.role_time(Role::D)?)
}

/// Predict echo times for a data pulse centered at `t_data_us`. R1 is
/// required; B1 and B2 must both be present or both absent; R2 is optional.
pub fn predict_for_data(seq: &PulseSequence, t_data_us: f64) -> Result<EchoPrediction> {
    let t_r1 = seq.role_time(Role::R1)?;
    let locking_interval_us = match (seq.role(Role::B1), seq.role(Role::B2)) {
        (Some(b1), Some(b2)) => b2.t_center_us() - b1.t_center_us(),
        (None, None) => 0.0,
        (None, Some(_)) => return Err(Error::config("missing role B1")),
        (Some(_), None) => return Err(Error::config("missing role B2")),
    };
    let t_e1_us = 2.0 * t_r1 - t_data_us + locking_interval_us;
    let t_r2 = seq.role(Role::R2).map(|p| p.t_center_us());
    Ok(EchoPrediction {
        t_data_us,
        locking_interval_us,
        t_e1_us,
        t_e2_chain_us: t_r2.map(|r2| 2.0 * r2 - t_e1_us),
        t_e2_printed_us: t_r2.map(|r2| 2.0 * r2 - (t_r1 + t_data_us + locking_interval_us)),
    })
}

/// Parameters of the echo intensity relation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eq1Params {
    /// Input data intensity.
    pub i0: f64,
    /// Optical intensity decay time τ; may be infinite.
    pub tau_us: f64,
    /// Spin-dephasing decay factor α.
    pub alpha: f64,
}

/// Echo intensities `(I_E1, I_E2)` with `I_E1 = I0·exp(−(T_E1−T_D)/τ − α)` and
/// `I_E2 = I_E1·exp(−(T_E2−T_E1)/τ)`.
pub fn eq1_intensities(p: &Eq1Params, t_d: f64, t_e1: f64, t_e2: f64) -> Result<(f64, f64)> {
    if !(p.i0 >= 0.0) || !(p.tau_us > 0.0) || !(p.alpha >= 0.0) {
        return Err(Error::Argument(format!(
            "need I0 >= 0, tau > 0, alpha >= 0; got {p:?}"
        )));
    }
    if !(t_d < t_e1 && t_e1 < t_e2) {
        return Err(Error::Argument(format!(
            "times must satisfy T_D < T_E1 < T_E2, got {t_d}, {t_e1}, {t_e2}"
        )));
    }
    let i_e1 = p.i0 * (-(t_e1 - t_d) / p.tau_us - p.alpha).exp();
    let i_e2 = i_e1 * (-(t_e2 - t_e1) / p.tau_us).exp();
    Ok((i_e1, i_e2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{Channel, Pulse};

    fn seq(t_d: f64, t_r1: f64, t_b1: f64, t_b2: f64, t_r2: f64) -> PulseSequence {
        PulseSequence::new(
            vec![
                Pulse::centered(Channel::P, t_d, 1.0, 0.1).with_role(Role::D),
                Pulse::centered(Channel::P, t_r1, 0.1, 1.0).with_role(Role::R1),
                Pulse::centered(Channel::C, t_b1, 0.1, 1.0).with_role(Role::B1),
                Pulse::centered(Channel::C, t_b2, 0.1, 1.0).with_role(Role::B2),
                Pulse::centered(Channel::P, t_r2, 0.1, 1.0).with_role(Role::R2),
            ],
            130.0,
        )
    }

    #[test]
    fn reference_timings() {
        let p = predict_echo_times(&seq(10.0, 20.0, 22.0, 62.0, 90.0)).unwrap();
        assert!((p.locking_interval_us - 40.0).abs() < 1e-12);
        assert!((p.t_e1_us - 70.0).abs() < 1e-12);
        assert!((p.t_e2_chain_us.unwrap() - 110.0).abs() < 1e-12);
        assert!((p.t_e2_printed_us.unwrap() - 110.0).abs() < 1e-12);
        assert_eq!(p.agree(), Some(true));
    }

    #[test]
    fn zero_locking_interval_is_two_pulse_echo() {
        let p = predict_echo_times(&seq(10.0, 20.0, 22.0, 22.1, 90.0)).unwrap();
        assert!((p.locking_interval_us - 0.1).abs() < 1e-12);
        let s = PulseSequence::new(
            vec![
                Pulse::centered(Channel::P, 10.0, 1.0, 0.1).with_role(Role::D),
                Pulse::centered(Channel::P, 20.0, 0.1, 1.0).with_role(Role::R1),
            ],
            50.0,
        );
        let p = predict_echo_times(&s).unwrap();
        assert_eq!(p.t_e1_us, 30.0);
        assert_eq!(p.t_e2_chain_us, None);
        assert_eq!(p.agree(), None);
    }

    #[test]
    fn formulas_diverge_off_the_reference_regime() {
        let p = predict_echo_times(&seq(5.0, 20.0, 22.0, 62.0, 90.0)).unwrap();
        assert!((p.t_e1_us - 75.0).abs() < 1e-12);
        assert!((p.t_e2_chain_us.unwrap() - 105.0).abs() < 1e-12);
        assert!((p.t_e2_printed_us.unwrap() - 115.0).abs() < 1e-12);
        assert_eq!(p.agree(), Some(false));
    }

    #[test]
    fn missing_roles() {
        let mut s = seq(10.0, 20.0, 22.0, 62.0, 90.0);
        s.pulses.retain(|p| p.role != Some(Role::B1));
        assert!(matches!(predict_echo_times(&s), Err(Error::Config(_))));
        s.pulses.retain(|p| p.role != Some(Role::R1));
        assert!(matches!(predict_echo_times(&s), Err(Error::Config(_))));
    }

    #[test]
    fn eq1_examples() {
        let lossless = Eq1Params {
            i0: 2.0,
            tau_us: f64::INFINITY,
            alpha: 0.0,
        };
        assert_eq!(
            eq1_intensities(&lossless, 10.0, 70.0, 110.0).unwrap(),
            (2.0, 2.0)
        );

        let p = Eq1Params {
            i0: 1.0,
            tau_us: 250.0,
            alpha: 0.0,
        };
        let (e1, e2) = eq1_intensities(&p, 10.0, 70.0, 110.0).unwrap();
        assert!((e1 - (-0.24f64).exp()).abs() < 1e-15);
        assert!((e2 - (-0.40f64).exp()).abs() < 1e-15);
        assert!((e1 - 0.7866).abs() < 1e-4 && (e2 - 0.6703).abs() < 1e-4);

        assert!(matches!(
            eq1_intensities(&p, 70.0, 10.0, 110.0),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            eq1_intensities(&p, 10.0, 70.0, 70.0),
            Err(Error::Argument(_))
        ));
    }

    proptest::proptest! {
        #[test]
        fn eq1_depends_only_on_differences(
            t_d in 0.0f64..50.0, d1 in 0.1f64..80.0, d2 in 0.1f64..80.0, shift in -20.0f64..200.0,
            tau in 1.0f64..1000.0, alpha in 0.0f64..3.0,
        ) {
            let p = Eq1Params { i0: 1.3, tau_us: tau, alpha };
            let a = eq1_intensities(&p, t_d, t_d + d1, t_d + d1 + d2).unwrap();
            let b = eq1_intensities(&p, t_d + shift, t_d + shift + d1, t_d + shift + d1 + d2).unwrap();
            proptest::prop_assert!((a.0 - b.0).abs() <= 1e-12 * a.0.max(1e-300));
            proptest::prop_assert!((a.1 - b.1).abs() <= 1e-12 * a.1.max(1e-300));
            // closed form for E2
            let direct = 1.3 * (-(d1 + d2) / tau - alpha).exp();
            proptest::prop_assert!((a.1 - direct).abs() <= 1e-12 * direct.max(1e-300));
        }
    }
}
