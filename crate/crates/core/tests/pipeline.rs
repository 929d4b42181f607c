use std::f64::consts::TAU;

use ionphase::atomic_response::phase_j_equal;
use ionphase::heterodyne::simulate_histogram;
use ionphase::phase_estimation::{differential_phase, fit_cosine};
use ionphase::pipeline::{
    emit_csv, parse_config, parse_config_str, read_sweep_csv, simulate_sweep, sweep_csv_string, theory_curve,
    SWEEP_CSV_HEADER,
};
use ionphase::{Detuning, Error, HeterodyneConfig};

const GAMMA: f64 = TAU * 19.6e6;

#[test]
fn injected_half_linewidth_phase_is_recovered() {
    let c = HeterodyneConfig {
        instrumental_phase: 0.5,
        ..HeterodyneConfig::default()
    };
    let truth = phase_j_equal(0.137, Detuning::from_linewidths(-0.5, GAMMA).unwrap(), GAMMA).unwrap();
    let bright = simulate_histogram(&c, c.instrumental_phase + truth, 100).unwrap();
    let dark = simulate_histogram(&c.dark_run(), c.instrumental_phase, 101).unwrap();
    let m = differential_phase(
        &fit_cosine(&bright, c.beat_frequency).unwrap(),
        &fit_cosine(&dark, c.beat_frequency).unwrap(),
    );
    assert!((m.differential.to_degrees() - 2.74).abs() < 3.0 * m.stderr.to_degrees(), "{m}");
    assert!(m.stderr.to_degrees() < 0.5);
}

#[test]
fn high_statistics_sweep_tracks_theory() {
    let c = parse_config_str("detuning_grid = -3:0.5:3\nduration_s = 100\nseed = 3").unwrap();
    let rows = simulate_sweep(&c).unwrap();
    assert_eq!(rows.len(), 13);
    let outside = rows
        .iter()
        .filter(|r| (r.simulated_phase.unwrap() - r.theory_phase_central).abs() > 3.0 * r.simulated_stderr.unwrap())
        .count();
    assert!(outside <= 1, "{outside} of 13 rows outside 3σ");
    for r in &rows {
        assert!(r.flags.is_empty());
    }
}

#[test]
fn theory_does_not_depend_on_seed() {
    let a = parse_config_str("seed = 1").unwrap();
    let b = parse_config_str("seed = 987654321").unwrap();
    assert_eq!(theory_curve(&a).unwrap(), theory_curve(&b).unwrap());
}

#[test]
fn theory_curve_is_antisymmetric_on_symmetric_grid() {
    let c = parse_config_str("detuning_grid = -3:0.25:3").unwrap();
    let rows = theory_curve(&c).unwrap();
    assert_eq!(rows.len(), 25);
    for (lo, hi) in rows.iter().zip(rows.iter().rev()) {
        assert!((lo.theory_deg() + hi.theory_deg()).abs() < 1e-9);
        assert!((lo.theory_lo_deg() + hi.theory_hi_deg()).abs() < 1e-9);
        assert!(lo.theory_lo_deg() <= lo.theory_deg() && lo.theory_deg() <= lo.theory_hi_deg());
    }
    let peak = rows.iter().map(|r| r.theory_deg()).fold(0.0, f64::max);
    assert!(peak > 2.7 && peak < 3.0);
}

#[test]
fn motion_rows_flagged_but_complete() {
    let c = parse_config_str("detuning_grid = -1:0.5:1\nduration_s = 1\ncorrections = motion,saturation").unwrap();
    let rows = simulate_sweep(&c).unwrap();
    for r in &rows {
        assert_eq!(r.flags.no_cooling, r.detuning >= 0.0);
        assert!(r.theory_phase_central.is_finite());
        assert!(r.simulated_phase.is_some());
    }
    let csv = sweep_csv_string(&rows);
    assert!(csv.starts_with(SWEEP_CSV_HEADER));
    assert_eq!(csv.lines().filter(|l| l.ends_with("no_cooling")).count(), 3);
}

#[test]
fn csv_round_trips_through_a_file() {
    let c = parse_config_str("detuning_grid = -1, 0, 1\nduration_s = 0.5").unwrap();
    let rows = simulate_sweep(&c).unwrap();
    let path = std::env::temp_dir().join(format!("ionphase-sweep-{}.csv", std::process::id()));
    emit_csv(&rows, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let back = read_sweep_csv(&text).unwrap();
    assert_eq!(back.len(), 3);
    for (r, b) in rows.iter().zip(&back) {
        assert!((r.theory_deg() - b.theory_deg).abs() < 1e-8 * r.theory_deg().abs().max(1.0));
        assert_eq!(r.sim_deg().is_some(), b.sim_deg.is_some());
    }
}

#[test]
fn config_errors_are_reported() {
    assert!(matches!(parse_config_str("no_such_key = 1"), Err(Error::Parse { .. })));
    assert!(matches!(parse_config_str("coupling_central = 1.2"), Err(e) if e.is_validation()));
    assert!(matches!(parse_config_str("trigger_frequency_mhz = 7"), Err(e) if e.is_validation()));
    let missing = parse_config(std::path::Path::new("/nonexistent/ionphase.conf"));
    assert!(matches!(missing, Err(Error::Io { .. })));
}
