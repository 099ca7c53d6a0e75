//! Whole-simulation properties: symmetry, convergence in the group count,
//! timing against the analytic predictor and the locking-pair phase rule.

use photon_echo::analysis::{
    check_order, detect_echoes, predict_echo_times, uv_trajectory, EchoWindow, OrderVerdict,
    WindowKind,
};
use photon_echo::cli::{execute, scenario, sweep, window_event, RunOutput, ScenarioId};
use photon_echo::sequence::{Channel, Config, Pulse, PulseSequence, Role};
use proptest::prelude::*;

fn e1_e2(
    cfg: &Config,
    out: &RunOutput,
) -> (
    photon_echo::analysis::EchoEvent,
    photon_echo::analysis::EchoEvent,
) {
    (
        window_event(cfg, &out.events, WindowKind::E1).expect("E1"),
        window_event(cfg, &out.events, WindowKind::E2).expect("E2"),
    )
}

#[test]
fn mirrored_groups_are_conjugate_partners() {
    let cfg = scenario(ScenarioId::Fig2);
    let out = execute(&cfg).unwrap();
    let n = out.groups.len();
    for i in 0..n / 2 {
        let (a, b) = (&out.trajectories[i], &out.trajectories[n - 1 - i]);
        assert_eq!(out.groups[i].delta_khz, -out.groups[n - 1 - i].delta_khz);
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert!((sa.rho13 + sb.rho13.conj()).norm() <= 1e-10);
            assert!((sa.rho33 - sb.rho33).abs() <= 1e-10);
        }
        // (u, v) paths mirror across the v axis
        for (pa, pb) in uv_trajectory(a).iter().zip(uv_trajectory(b).iter()) {
            assert!((pa.u + pb.u).abs() <= 1e-10 && (pa.v - pb.v).abs() <= 1e-10);
        }
    }
    for p in &out.signal.polarization {
        assert!(p.re.abs() <= 1e-10);
    }
}

#[test]
fn coherence_bounded_by_populations() {
    let cfg = scenario(ScenarioId::Fig1);
    let out = execute(&cfg).unwrap();
    for tr in &out.trajectories {
        for (p, s) in uv_trajectory(tr).iter().zip(&tr.samples) {
            assert!(p.u * p.u + p.v * p.v <= s.rho11 * s.rho33 + 1e-8);
        }
    }
}

#[test]
fn doubling_the_group_count_barely_moves_the_echoes() {
    let coarse_cfg = scenario(ScenarioId::Fig2);
    let mut fine_cfg = coarse_cfg.clone();
    fine_cfg.ensemble.n_groups = 321;
    let coarse = e1_e2(&coarse_cfg, &execute(&coarse_cfg).unwrap());
    let fine = e1_e2(&fine_cfg, &execute(&fine_cfg).unwrap());
    for (a, b) in [(coarse.0, fine.0), (coarse.1, fine.1)] {
        assert!(
            (a.amplitude - b.amplitude).abs() / b.amplitude < 0.01,
            "{a:?} vs {b:?}"
        );
        assert!((a.t_us - b.t_us).abs() < 0.05);
    }
}

#[test]
fn second_rephasing_recovers_the_first_echo() {
    let cfg = scenario(ScenarioId::Fig2);
    let (e1, e2) = e1_e2(&cfg, &execute(&cfg).unwrap());
    assert!(e2.amplitude >= 0.95 * e1.amplitude);
    assert_eq!(e1.im_sign, -e2.im_sign);
}

#[test]
fn data_alone_gives_no_echo() {
    let cfg = Config {
        sequence: PulseSequence::new(
            vec![Pulse::centered(Channel::P, 10.0, 1.0, 0.1).with_role(Role::D)],
            60.0,
        ),
        ..Config::default()
    };
    let out = execute(&cfg).unwrap();
    assert!(out.events.is_empty(), "{:?}", out.events);
    assert!(detect_echoes(&out.signal, &cfg.sequence, 0.1).is_empty());
}

#[test]
fn locking_area_sweep_alternates_character() {
    let rows = sweep(
        &scenario(ScenarioId::Fig1),
        "B2.area_pi",
        &[1.0, 3.0, 5.0, 7.0],
    )
    .unwrap();
    let signs: Vec<f64> = rows
        .iter()
        .map(|r| r.e1.expect("E1").signed_amplitude().signum())
        .collect();
    // shift (1 + θ_B2)·π/2: π and 3π absorb, 2π and 4π emit
    assert_eq!(signs, vec![1.0, -1.0, 1.0, -1.0]);
    assert!(rows.iter().all(|r| r.e2.is_none()));
}

#[test]
fn later_b2_delays_both_echoes() {
    let mut cfg = scenario(ScenarioId::Fig2);
    cfg.sequence.horizon_us = 140.0;
    let starts: Vec<f64> = [42.0, 52.0, 62.0].iter().map(|t| t - 0.05).collect();
    let rows = sweep(&cfg, "B2.t_start_us", &starts).unwrap();
    for (r, t_b2) in rows.iter().zip([42.0, 52.0, 62.0]) {
        let t_e1 = 2.0 * 20.0 - 10.0 + (t_b2 - 22.0);
        let t_e2 = 2.0 * 90.0 - t_e1;
        let (e1, e2) = (r.e1.expect("E1"), r.e2.expect("E2"));
        assert!((e1.t_us - t_e1).abs() <= 0.1, "{} vs {t_e1}", e1.t_us);
        assert!((e2.t_us - t_e2).abs() <= 0.1, "{} vs {t_e2}", e2.t_us);
    }
}

#[test]
fn weaker_bits_flatten_the_second_echoes() {
    let mut cfg = scenario(ScenarioId::Fig3Blue);
    for p in cfg
        .sequence
        .pulses
        .iter_mut()
        .filter(|p| p.role.is_some_and(|r| r.is_data()))
    {
        p.area_pi = 0.05;
    }
    // the R-pulse free-decay humps do not shrink with the bits
    cfg.threshold = 0.4;
    let out = execute(&cfg).unwrap();
    let bits: Vec<f64> = cfg
        .sequence
        .data_pulses()
        .iter()
        .map(|p| p.t_center_us())
        .collect();
    let w2 = EchoWindow::for_sequence(&cfg.sequence, WindowKind::E2).unwrap();
    let r = check_order(&bits, &out.events, &w2).unwrap();
    assert_eq!(r.verdict, OrderVerdict::Same);
    // the spread is second order in the bit area: about 4.9% at 0.1π
    assert!(r.amplitude_spread < 0.02, "spread {}", r.amplitude_spread);
}

#[test]
fn dephasing_ratio_decays_along_the_first_echoes() {
    let blue_cfg = scenario(ScenarioId::Fig3Blue);
    let red_cfg = scenario(ScenarioId::Fig3Red);
    let bits: Vec<f64> = blue_cfg
        .sequence
        .data_pulses()
        .iter()
        .map(|p| p.t_center_us())
        .collect();
    let w1 = EchoWindow::for_sequence(&blue_cfg.sequence, WindowKind::E1).unwrap();
    let blue = check_order(&bits, &execute(&blue_cfg).unwrap().events, &w1).unwrap();
    let red = check_order(&bits, &execute(&red_cfg).unwrap().events, &w1).unwrap();
    assert_eq!(red.verdict, OrderVerdict::Reversed);

    let mut ratio: Vec<(f64, f64)> = blue
        .matches
        .iter()
        .zip(&red.matches)
        .map(|((_, b), (_, r))| (r.t_us, r.amplitude / b.amplitude))
        .collect();
    ratio.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in ratio.windows(2) {
        assert!(w[1].1 < w[0].1, "{ratio:?}");
    }
    // the optical coherence decays at γ = 2 kHz in amplitude, i.e. 2e-3 per μs
    let slope = (ratio[2].1.ln() - ratio[0].1.ln()) / (ratio[2].0 - ratio[0].0);
    assert!((slope + 2.0 * 2e-3).abs() < 0.2 * 4e-3, "slope {slope}");
}

fn timing_config(t_d: f64, locking: f64, t_r2: f64) -> Config {
    let t_r1 = 2.0 * t_d;
    Config {
        threshold: 0.2,
        sequence: PulseSequence::new(
            vec![
                Pulse::centered(Channel::P, t_d, 1.0, 0.1).with_role(Role::D),
                Pulse::centered(Channel::P, t_r1, 0.1, 1.0).with_role(Role::R1),
                Pulse::centered(Channel::C, t_r1 + 2.0, 0.1, 1.0).with_role(Role::B1),
                Pulse::centered(Channel::C, t_r1 + 2.0 + locking, 0.1, 1.0).with_role(Role::B2),
                Pulse::centered(Channel::P, t_r2, 0.1, 1.0).with_role(Role::R2),
            ],
            0.0,
        ),
        ..Config::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4, ..ProptestConfig::default() })]

    #[test]
    fn simulated_echoes_follow_the_predictor(t_d in 5.0f64..12.0, locking in 20.0f64..40.0, gap in 8.0f64..20.0) {
        let mut cfg = timing_config(t_d, locking, 0.0);
        let pred = predict_echo_times(&cfg.sequence).unwrap();
        let t_r2 = pred.t_e1_us + gap;
        cfg = timing_config(t_d, locking, t_r2);
        let pred = predict_echo_times(&cfg.sequence).unwrap();
        prop_assert_eq!(pred.agree(), Some(true));
        let t_e2 = pred.t_e2_chain_us.unwrap();
        cfg.sequence.horizon_us = (t_e2 + 10.0).ceil();

        let out = execute(&cfg).unwrap();
        let (e1, e2) = e1_e2(&cfg, &out);
        prop_assert!((e1.t_us - pred.t_e1_us).abs() <= 0.1, "E1 {} vs {}", e1.t_us, pred.t_e1_us);
        prop_assert!((e2.t_us - t_e2).abs() <= 0.1, "E2 {} vs {}", e2.t_us, t_e2);
        prop_assert!(e1.inverted && !e2.inverted);
    }
}
