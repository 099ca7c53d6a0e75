//! Command-line front end: config-driven runs, figure presets, analytic
//! prediction and parameter sweeps.
//!
//! Exit codes: 0 on success, 2 for configuration or argument errors, 3 when
//! the integrator breaches a density-matrix invariant.

mod output;
mod scenario;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    coherence_map, detect_echoes, predict_echo_times, predict_for_data, uv_trajectory, EchoEvent,
    EchoWindow, MapComponent, WindowKind,
};
use crate::dynamics::{simulate_ensemble, Trajectory};
use crate::ensemble::{build_ensemble, AtomGroup, EnsembleSignal};
use crate::sequence::{
    locking_phase_shift, parse_config, serialize_config, Config, Role, Severity,
};
use crate::{Error, Result};

pub use output::{num, write_cohmap, write_echoes, write_signal, write_sweep, write_uv, SweepRow};
pub use scenario::{scenario, ScenarioId};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Largest distance (μs) between a detected echo and a predicted echo time
/// for the echo to be attributed to that data pulse.
pub const MATCH_TOL_US: f64 = 0.5;

const SCENARIO_HELP: &str = "\
Presets (pulse times are centers): D 0.1pi, 1 us at 10 us; R1 pi at 20 us; \
B1 pi at 22 us; B2 at 62 us; R2 pi at 90 us; control pulses 0.1 us; \
161 groups over 800 kHz with 340 kHz FWHM; 120 us horizon.
  fig1      B2 = 3pi, no R2
  fig2      B2 = pi, with R2
  fig3blue  fig2 with data bits at 2, 6, (10 empty), 14 us instead of D
  fig3red   fig3blue with 2 kHz optical dephasing
The B1/B2 times give a 40 us locking interval and keep E1 (70 us) clear of B2.";

#[derive(Debug, Parser)]
#[command(
    name = "photon-echo",
    version,
    about = "Photon echoes in a three-level ensemble under double rephasing and optical locking"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: GlobalOpts,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Directory for CSV outputs (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Step inside pulses, ns.
    #[arg(long, global = true)]
    pub dt_pulse_ns: Option<f64>,
    /// Step between pulses, ns.
    #[arg(long, global = true)]
    pub dt_free_ns: Option<f64>,
    /// Echo detection threshold as a fraction of the largest out-of-pulse |P|.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Also write the detuning-time map of one component (re13, im13, rho33).
    #[arg(long, global = true, value_parser = parse_component)]
    pub cohmap: Option<MapComponent>,
    /// Also write the (u, v) path of the group nearest this detuning, kHz.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub uv: Option<f64>,
    /// Print the resolved configuration and exit without simulating.
    #[arg(long, global = true)]
    pub dump_config: bool,
}

fn parse_component(s: &str) -> std::result::Result<MapComponent, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a configuration file.
    Run { config: PathBuf },
    /// Simulate a built-in preset: fig1, fig2, fig3blue, fig3red.
    #[command(long_about = SCENARIO_HELP)]
    Scenario { id: String },
    /// Print analytic echo times and the locking-pair phase for a configuration.
    Predict { config: PathBuf },
    /// Re-run a configuration once per value of one numeric key, e.g. `B2.area_pi`.
    Sweep {
        config: PathBuf,
        param: String,
        #[arg(allow_negative_numbers = true)]
        values: Vec<f64>,
    },
}

/// Everything a simulation produces that the outputs draw on.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub groups: Vec<AtomGroup>,
    pub trajectories: Vec<Trajectory>,
    pub signal: EnsembleSignal,
    pub events: Vec<EchoEvent>,
    /// Role label of the data pulse each event is attributed to.
    pub matched: Vec<Option<String>>,
}

/// Simulate a configuration and detect its echoes.
pub fn execute(cfg: &Config) -> Result<RunOutput> {
    if cfg.sequence.pulses.is_empty() {
        return Err(Error::config("no pulses"));
    }
    cfg.check()?;
    let groups = build_ensemble(&cfg.ensemble)?;
    let (trajectories, signal) =
        simulate_ensemble(&groups, &cfg.sequence, &cfg.rates, &cfg.params)?;
    let events = detect_echoes(&signal, &cfg.sequence, cfg.threshold);
    let matched = events.iter().map(|e| attribute(cfg, e.t_us)).collect();
    Ok(RunOutput {
        groups,
        trajectories,
        signal,
        events,
        matched,
    })
}

/// Label of the data pulse whose predicted E1 or E2 lies nearest `t_us`.
fn attribute(cfg: &Config, t_us: f64) -> Option<String> {
    let mut best: Option<(f64, Role)> = None;
    for p in cfg.sequence.data_pulses() {
        let Ok(pred) = predict_for_data(&cfg.sequence, p.t_center_us()) else {
            continue;
        };
        for t in [Some(pred.t_e1_us), pred.t_e2_chain_us]
            .into_iter()
            .flatten()
        {
            let d = (t - t_us).abs();
            if d <= MATCH_TOL_US && best.is_none_or(|(b, _)| d < b) {
                best = p.role.map(|r| (d, r));
            }
        }
    }
    best.map(|(_, r)| r.to_string())
}

/// Strongest detected event inside the E1 or E2 window.
pub fn window_event(cfg: &Config, events: &[EchoEvent], kind: WindowKind) -> Option<EchoEvent> {
    let window = EchoWindow::for_sequence(&cfg.sequence, kind).ok()?;
    events
        .iter()
        .filter(|e| window.contains(e.t_us))
        .copied()
        .max_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
}

/// Files written for one run.
pub fn write_run(out: &RunOutput, opts: &GlobalOpts) -> Result<Vec<PathBuf>> {
    let dir = prepare_dir(&opts.out_dir)?;
    let mut written = vec![
        output::emit(&dir, "signal.csv", |w| write_signal(w, &out.signal))?,
        output::emit(&dir, "echoes.csv", |w| {
            write_echoes(w, &out.events, &out.matched)
        })?,
    ];
    if let Some(component) = opts.cohmap {
        let map = coherence_map(&out.trajectories, &out.groups, component)?;
        written.push(output::emit(
            &dir,
            &format!("cohmap_{component}.csv"),
            |w| write_cohmap(w, &map),
        )?);
    }
    if let Some(delta) = opts.uv {
        let (i, g) = out
            .groups
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1.delta_khz - delta)
                    .abs()
                    .total_cmp(&(b.1.delta_khz - delta).abs())
            })
            .ok_or_else(|| Error::config("empty ensemble"))?;
        let points = uv_trajectory(&out.trajectories[i]);
        written.push(output::emit(
            &dir,
            &format!("uv_{}.csv", g.delta_khz),
            |w| write_uv(w, &points),
        )?);
    }
    Ok(written)
}

fn prepare_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| {
        Error::config(format!(
            "output directory {} is not writable: {e}",
            dir.display()
        ))
    })?;
    Ok(dir.to_path_buf())
}

/// Run one simulation per value of `param`, in input order.
pub fn sweep(cfg: &Config, param: &str, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Argument("empty value list".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut c = cfg.clone();
        c.set_numeric(param, value)?;
        let out = execute(&c)?;
        rows.push(SweepRow {
            value,
            e1: window_event(&c, &out.events, WindowKind::E1),
            e2: window_event(&c, &out.events, WindowKind::E2),
        });
    }
    Ok(rows)
}

/// Human-readable prediction report.
pub fn predict_report(cfg: &Config) -> Result<String> {
    let seq = &cfg.sequence;
    let mut lines = Vec::new();
    let data = seq.data_pulses();
    if data.is_empty() {
        predict_echo_times(seq)?;
    }
    for p in data {
        let pred = predict_for_data(seq, p.t_center_us())?;
        let label = p.role.map(|r| r.to_string()).unwrap_or_default();
        lines.push(format!("data {label} at {} us", pred.t_data_us));
        lines.push(format!("  T_E1 = {} us", pred.t_e1_us));
        match (pred.t_e2_chain_us, pred.t_e2_printed_us) {
            (Some(chain), Some(printed)) => {
                lines.push(format!("  T_E2 (mirror about R2) = {chain} us"));
                lines.push(format!("  T_E2 (2T_R2 - (T_R1 + T_D + T)) = {printed} us"));
                lines.push(format!("  agree = {}", pred.agree().unwrap_or(false)));
            }
            _ => lines.push("  T_E2: no R2".into()),
        }
    }
    match (seq.role(Role::B1), seq.role(Role::B2)) {
        (Some(b1), Some(b2)) => {
            let s = locking_phase_shift(b1.area_pi, b2.area_pi);
            let status = match s.n {
                Some(n) => format!("locking satisfied, n = {n}"),
                None => "not locking".into(),
            };
            lines.push(format!(
                "B-pair shift = {} rad ({} pi), {status}",
                s.shift_rad,
                s.shift_rad / std::f64::consts::PI
            ));
        }
        _ => lines.push("no B-pair".into()),
    }
    Ok(lines.join("\n"))
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

fn load(path: &Path, stderr: &mut dyn Write) -> Result<Config> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    let (cfg, validation) = parse_config(&text)?;
    for d in &validation.diagnostics {
        if d.severity != Severity::Violation {
            let _ = writeln!(stderr, "note: {}", d.message);
        }
    }
    Ok(cfg)
}

fn apply_overrides(cfg: &mut Config, opts: &GlobalOpts) {
    if let Some(v) = opts.dt_pulse_ns {
        cfg.params.dt_pulse_ns = v;
    }
    if let Some(v) = opts.dt_free_ns {
        cfg.params.dt_free_ns = v;
    }
    if let Some(v) = opts.threshold {
        cfg.threshold = v;
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let opts = &cli.opts;
    let mut cfg = match &cli.command {
        Command::Run { config } | Command::Predict { config } | Command::Sweep { config, .. } => {
            load(config, stderr)?
        }
        Command::Scenario { id } => scenario(id.parse()?),
    };
    apply_overrides(&mut cfg, opts);
    if opts.dump_config {
        cfg.check()?;
        write!(stdout, "{}", serialize_config(&cfg))?;
        return Ok(());
    }

    match &cli.command {
        Command::Run { .. } | Command::Scenario { .. } => {
            let out = execute(&cfg)?;
            let files = write_run(&out, opts)?;
            for (e, m) in out.events.iter().zip(&out.matched) {
                writeln!(
                    stdout,
                    "echo at {:.3} us  |P| = {:.4e}  im_sign = {:+}  inverted = {}  from = {}",
                    e.t_us,
                    e.amplitude,
                    e.im_sign,
                    e.inverted,
                    m.as_deref().unwrap_or("-")
                )?;
            }
            for f in files {
                writeln!(stdout, "wrote {}", f.display())?;
            }
        }
        Command::Predict { .. } => {
            writeln!(stdout, "{}", predict_report(&cfg)?)?;
        }
        Command::Sweep { param, values, .. } => {
            let rows = sweep(&cfg, param, values)?;
            let dir = prepare_dir(&opts.out_dir)?;
            let path = output::emit(&dir, "sweep.csv", |w| write_sweep(w, &rows))?;
            writeln!(stdout, "wrote {}", path.display())?;
        }
    }
    Ok(())
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = main_with(
            std::iter::once("photon-echo").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn unknown_scenario_is_exit_2() {
        let (code, _, err) = call(&["scenario", "fig9"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("unknown scenario"));
    }

    #[test]
    fn dump_config_roundtrips() {
        for id in ScenarioId::ALL {
            let (code, out, _) = call(&["scenario", &id.to_string(), "--dump-config"]);
            assert_eq!(code, 0);
            let (back, _) = parse_config(&out).unwrap();
            assert_eq!(back, scenario(id));
        }
    }

    #[test]
    fn overrides_apply_before_dump() {
        let (code, out, _) = call(&[
            "scenario",
            "fig2",
            "--dump-config",
            "--threshold",
            "0.3",
            "--dt-free-ns",
            "5",
        ]);
        assert_eq!(code, 0);
        let (back, _) = parse_config(&out).unwrap();
        assert_eq!(back.threshold, 0.3);
        assert_eq!(back.params.dt_free_ns, 5.0);
    }

    #[test]
    fn bad_override_is_exit_2() {
        let (code, _, err) = call(&["scenario", "fig2", "--dump-config", "--threshold", "2"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("threshold"));
        let (code, _, _) = call(&["scenario", "fig2", "--cohmap", "rho22"]);
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn predict_reports() {
        let fig2 = predict_report(&scenario(ScenarioId::Fig2)).unwrap();
        assert!(fig2.contains("T_E1 = 70 us"));
        assert!(fig2.contains("= 110 us"));
        assert!(fig2.contains("agree = true"));
        assert!(fig2.contains("(1 pi), not locking"));
        let fig1 = predict_report(&scenario(ScenarioId::Fig1)).unwrap();
        assert!(fig1.contains("(2 pi), locking satisfied, n = 1"));
        assert!(fig1.contains("no R2"));
        let bits = predict_report(&scenario(ScenarioId::Fig3Blue)).unwrap();
        assert_eq!(bits.matches("T_E1").count(), 3);
    }

    #[test]
    fn negative_numbers_are_values_not_flags() {
        let cli = Cli::try_parse_from([
            "photon-echo",
            "sweep",
            "a.cfg",
            "D.phase_rad",
            "-1.5",
            "2",
            "--uv",
            "-20",
        ])
        .unwrap();
        match cli.command {
            Command::Sweep { values, .. } => assert_eq!(values, vec![-1.5, 2.0]),
            other => panic!("{other:?}"),
        }
        assert_eq!(cli.opts.uv, Some(-20.0));
    }

    #[test]
    fn empty_sweep_rejected() {
        let err = sweep(&scenario(ScenarioId::Fig2), "B2.area_pi", &[]).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_CONFIG);
        let err = sweep(&scenario(ScenarioId::Fig2), "B7.area_pi", &[1.0]).unwrap_err();
        assert_eq!(exit_code(&err), EXIT_CONFIG);
    }

    #[test]
    fn empty_config_has_no_pulses() {
        let err = execute(&Config::default()).unwrap_err();
        assert!(err.to_string().contains("no pulses"));
        assert_eq!(exit_code(&err), EXIT_CONFIG);
    }

    #[test]
    fn numerical_errors_map_to_exit_3() {
        let e = Error::Numerical {
            t_us: 1.0,
            delta_khz: None,
            what: "trace".into(),
        };
        assert_eq!(exit_code(&e), EXIT_NUMERICAL);
    }
}
