use std::fmt;

use rayon::prelude::*;

use crate::atomic_response::{phase, phase_two_level, LevelModel};
use crate::Detuning;
use crate::coupling_budget::{build_budget, BudgetOptions, GeometrySource, MotionModel, PhysicalConstants, SaturationModel};
use crate::error::{Error, Result};
use crate::heterodyne::simulate_histogram;
use crate::phase_estimation::{differential_phase, fit_cosine, sideband_reference_correction, PhaseMeasurement};

use super::config::{Corrections, ExperimentConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RowFlags {
    /// Motion correction requested at a non-red detuning; the ion is treated as at rest.
    pub no_cooling: bool,
    /// One of the fits had an amplitude consistent with zero.
    pub low_visibility: bool,
    /// Simulation or fit failed; simulation columns are empty.
    pub fit_failed: bool,
}

impl RowFlags {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

impl fmt::Display for RowFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = [
            (self.no_cooling, "no_cooling"),
            (self.low_visibility, "low_visibility"),
            (self.fit_failed, "fit_failed"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, n)| *n)
        .collect();
        f.write_str(&names.join(";"))
    }
}

/// One detuning of a sweep. Phases in rad.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub detuning_gamma: f64,
    /// rad/s.
    pub detuning: f64,
    pub theory_phase_central: f64,
    pub theory_phase_low: f64,
    pub theory_phase_high: f64,
    pub simulated_phase: Option<f64>,
    pub simulated_stderr: Option<f64>,
    pub flags: RowFlags,
}

impl SweepRow {
    pub fn theory_deg(&self) -> f64 {
        self.theory_phase_central.to_degrees()
    }

    pub fn theory_lo_deg(&self) -> f64 {
        self.theory_phase_low.to_degrees()
    }

    pub fn theory_hi_deg(&self) -> f64 {
        self.theory_phase_high.to_degrees()
    }

    pub fn sim_deg(&self) -> Option<f64> {
        self.simulated_phase.map(f64::to_degrees)
    }

    pub fn sim_err_deg(&self) -> Option<f64> {
        self.simulated_stderr.map(f64::to_degrees)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RunTag {
    Bright = 0,
    Dark = 1,
}

/// Seed for one acquisition, mixed from the master seed, grid index and run tag.
pub fn derive_seed(master: u64, index: usize, bright: bool) -> u64 {
    let tag = if bright { RunTag::Bright } else { RunTag::Dark } as u64;
    splitmix64(splitmix64(master) ^ ((index as u64) << 1 | tag))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn budget_options(config: &ExperimentConfig, g: f64, corrections: Corrections, delta: Detuning) -> (BudgetOptions<f64>, bool) {
    let mut no_cooling = false;
    let motion = if corrections.motion {
        if delta.value() < 0.0 {
            MotionModel::DopplerCooled {
                trap_frequencies: config.motion.trap_frequencies,
                excess_factor: config.motion.temperature_excess,
            }
        } else {
            no_cooling = true;
            MotionModel::AtRest
        }
    } else {
        MotionModel::AtRest
    };
    let saturation = if corrections.saturation {
        config.saturation_model
    } else {
        SaturationModel::Off
    };
    (
        BudgetOptions {
            source: GeometrySource::Direct(g),
            motion,
            saturation,
        },
        no_cooling,
    )
}

struct TheoryPoint {
    row: SweepRow,
    g_effective: f64,
}

fn theory_point(config: &ExperimentConfig, delta: Detuning) -> Result<TheoryPoint> {
    let gamma = config.linewidth();
    let model = config.level_model()?;
    let constants = PhysicalConstants::codata();
    let (c, u) = (config.coupling_central, config.coupling_uncertainty);

    let mut flags = RowFlags::default();
    let mut evaluate = |g: f64| -> Result<(f64, f64)> {
        let (options, no_cooling) = budget_options(config, g, config.corrections, delta);
        flags.no_cooling |= no_cooling;
        let budget = build_budget(&config.beam, &config.transition, &options, delta, &constants)?;
        Ok((phase(model, budget.g_effective, delta, gamma)?, budget.g_effective))
    };
    let annotate = |e: Error| Error::AtDetuning {
        detuning_gamma: delta.in_linewidths(gamma),
        source: Box::new(e),
    };
    let (central, g_effective) = evaluate(c).map_err(annotate)?;
    let (below, _) = evaluate(c - u).map_err(annotate)?;
    let (above, _) = evaluate(c + u).map_err(annotate)?;

    Ok(TheoryPoint {
        row: SweepRow {
            detuning_gamma: delta.in_linewidths(gamma),
            detuning: delta.value(),
            theory_phase_central: central,
            theory_phase_low: below.min(above),
            theory_phase_high: below.max(above),
            simulated_phase: None,
            simulated_stderr: None,
            flags,
        },
        g_effective,
    })
}

/// Phase versus detuning at the central coupling and at its ±1σ band edges.
/// Simulation columns are left empty.
pub fn theory_curve(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    config
        .detuning_grid
        .iter()
        .map(|&d| theory_point(config, d).map(|p| p.row))
        .collect()
}

/// Phase the sideband at `Δ − ω_rf` picks up.
fn sideband_phase(config: &ExperimentConfig, model: LevelModel, g: f64, delta: Detuning) -> Result<f64> {
    let gamma = config.linewidth();
    let omega = config.heterodyne.beat_frequency;
    match model {
        LevelModel::JEqual => sideband_reference_correction(g, delta, omega, gamma),
        LevelModel::TwoLevel => phase_two_level(g, Detuning::new(delta.value() - omega)?, gamma),
    }
}

/// Simulated bright and dark acquisitions at one grid point, fitted and differenced.
fn simulate_point(config: &ExperimentConfig, index: usize, point: TheoryPoint) -> Result<SweepRow> {
    let TheoryPoint { mut row, g_effective } = point;
    let delta = Detuning::new(row.detuning)?;
    let model = config.level_model()?;
    let het = &config.heterodyne;

    let sideband = if config.corrections.sideband_reference {
        Some(sideband_phase(config, model, g_effective, delta)?)
    } else {
        None
    };
    let bright_phase = het.instrumental_phase + row.theory_phase_central - sideband.unwrap_or(0.0);
    let dark_phase = het.instrumental_phase;

    let measure = || -> Result<PhaseMeasurement<f64>> {
        let bright = simulate_histogram(het, bright_phase, derive_seed(config.seed, index, true))?;
        let dark = simulate_histogram(&het.dark_run(), dark_phase, derive_seed(config.seed, index, false))?;
        let m = differential_phase(
            &fit_cosine(&bright, het.beat_frequency)?,
            &fit_cosine(&dark, het.beat_frequency)?,
        );
        Ok(match sideband {
            Some(p) => m.with_sideband_correction(p),
            None => m,
        })
    };
    match measure() {
        Ok(m) => {
            row.simulated_phase = Some(m.differential);
            row.simulated_stderr = Some(m.stderr);
            row.flags.low_visibility = m.degraded;
        }
        Err(_) => row.flags.fit_failed = true,
    }
    Ok(row)
}

/// Theory plus a simulated heterodyne measurement at every grid point.
///
/// Grid points run in parallel on the current rayon pool; each uses seeds
/// derived from the master seed and its grid index, so the output does not
/// depend on the number of threads. A failed simulation only flags its row.
pub fn simulate_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    config
        .detuning_grid
        .par_iter()
        .enumerate()
        .map(|(i, &d)| simulate_point(config, i, theory_point(config, d)?))
        .collect()
}
