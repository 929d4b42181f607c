//! Experiment configuration: a flat `key = value` text file with `#` comments.
//!
//! Every key is optional; omitted keys take the values of the ¹⁷⁴Yb⁺
//! experiment. Unknown keys are rejected.
//!
//! | key                      | unit / form                         | default        |
//! |--------------------------|-------------------------------------|----------------|
//! | `wavelength_nm`          | nm                                  | 369.5          |
//! | `linewidth_mhz`          | Γ/2π in MHz                         | 19.6           |
//! | `j_lower_x2`             | 2J                                  | 1              |
//! | `j_upper_x2`             | 2J′                                 | 1              |
//! | `mass_amu`               | u                                   | 174            |
//! | `coupling_central`       | G                                   | 0.137          |
//! | `coupling_uncertainty`   | ±G                                  | 0.014          |
//! | `mode_area_m2`           | m²                                  | σ/(4G)         |
//! | `axial_waist_nm`         | nm                                  | 369.5          |
//! | `overlap`                | η                                   | 1              |
//! | `solid_angle_weight`     | f_Ω                                 | 0.5            |
//! | `saturation`             | S                                   | 0.1            |
//! | `saturation_reference`   | `resonance` or `probe`              | resonance      |
//! | `radial_trap_khz`        | kHz                                 | 480            |
//! | `axial_trap_khz`         | kHz                                 | 1025           |
//! | `temperature_excess`     | factor over the Doppler temperature | 1.5            |
//! | `detuning_grid`          | Γ; `start:step:stop` or `a, b, ...` | -3:0.25:3      |
//! | `beat_frequency_mhz`     | ω_rf/2π in MHz                      | 400            |
//! | `trigger_frequency_mhz`  | MHz                                 | 10             |
//! | `bin_width_ps`           | ps                                  | 100            |
//! | `duration_s`             | s                                   | 10             |
//! | `mean_rate`              | bright-run counts/s                 | 5e4            |
//! | `dark_rate`              | dark-run counts/s                   | 5e4            |
//! | `visibility`             | V                                   | 0.5            |
//! | `instrumental_phase_rad` | rad                                 | 0.5            |
//! | `background_rate`        | counts/s                            | 0              |
//! | `seed`                   | integer                             | 1              |
//! | `corrections`            | `none` or list of `motion`, `saturation`, `sideband_reference` | none |
//!
//! The default mode area uses the ideal two-level cross section, so that the
//! geometric coupling derived from it equals `coupling_central`.

use std::f64::consts::TAU;
use std::path::Path;
use std::str::FromStr;

use crate::atomic_response::{resonant_cross_section_two_level, LevelModel};
use crate::coupling_budget::{SaturationModel, ATOMIC_MASS_UNIT};
use crate::error::{Error, Result};
use crate::heterodyne::HeterodyneConfig;
use crate::{BeamGeometry, Detuning, Transition};

/// Which optional physical effects a sweep models.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Corrections {
    /// Thermal motion at the Doppler temperature of the probe detuning.
    pub motion: bool,
    /// Weak-drive saturation of the coherent response.
    pub saturation: bool,
    /// Phase picked up by the 400 MHz sideband, modeled and then compensated.
    pub sideband_reference: bool,
}

impl Corrections {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn all() -> Self {
        Self {
            motion: true,
            saturation: true,
            sideband_reference: true,
        }
    }
}

impl FromStr for Corrections {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut c = Corrections::none();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match item {
                "none" => {}
                "all" => c = Corrections::all(),
                "motion" => c.motion = true,
                "saturation" => c.saturation = true,
                "sideband_reference" | "sideband" => c.sideband_reference = true,
                other => return Err(format!("unknown correction `{other}`")),
            }
        }
        Ok(c)
    }
}

impl std::fmt::Display for Corrections {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<&str> = [
            (self.motion, "motion"),
            (self.saturation, "saturation"),
            (self.sideband_reference, "sideband_reference"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, n)| *n)
        .collect();
        if names.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&names.join(","))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionConfig {
    /// rad/s along `[x, y, z]`; z is the trap axis along the optical axis.
    pub trap_frequencies: [f64; 3],
    /// Ion temperature over the Doppler temperature at the probe detuning.
    pub temperature_excess: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub transition: Transition,
    pub beam: BeamGeometry,
    pub motion: MotionConfig,
    pub saturation_model: SaturationModel,
    pub coupling_central: f64,
    pub coupling_uncertainty: f64,
    pub detuning_grid: Vec<Detuning>,
    pub heterodyne: HeterodyneConfig,
    pub seed: u64,
    pub corrections: Corrections,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ConfigBuilder::default()
            .finish()
            .expect("built-in defaults are valid")
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.transition.validate()?;
        self.beam.validate()?;
        self.heterodyne.validate()?;
        self.level_model()?;
        let (c, u) = (self.coupling_central, self.coupling_uncertainty);
        if !(u >= 0.0) || !(c - u >= 0.0) || !(c + u <= 1.0) {
            return Err(Error::Configuration(format!(
                "coupling {c} ± {u} must stay within [0, 1]"
            )));
        }
        if self.detuning_grid.is_empty() {
            return Err(Error::Configuration("detuning grid is empty".into()));
        }
        if self.detuning_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Configuration("detuning grid must be sorted".into()));
        }
        if self.motion.trap_frequencies.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Configuration("trap frequencies must be positive".into()));
        }
        if !(self.motion.temperature_excess > 0.0) {
            return Err(Error::Configuration("temperature excess must be positive".into()));
        }
        Ok(())
    }

    /// The phase formula matching the transition's angular momenta.
    pub fn level_model(&self) -> Result<LevelModel> {
        let t = &self.transition;
        if t.is_j_equal() {
            Ok(LevelModel::JEqual)
        } else if t.degeneracy_ratio() == num_rational::Ratio::from_integer(3) {
            Ok(LevelModel::TwoLevel)
        } else {
            Err(Error::Configuration(format!(
                "unsupported transition 2J = {}, 2J' = {}: need J = J' or J' = J + 1 with (2J'+1)/(2J+1) = 3",
                t.j_lower_x2, t.j_upper_x2
            )))
        }
    }

    pub fn linewidth(&self) -> f64 {
        self.transition.linewidth
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let mut b = ConfigBuilder::default();
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            key: line.to_owned(),
            message: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        b.set(key, value).map_err(|message| Error::Parse {
            line: line_no,
            key: key.to_owned(),
            message,
        })?;
    }
    b.finish()
}

#[derive(Clone, Debug)]
struct ConfigBuilder {
    wavelength_nm: f64,
    linewidth_mhz: f64,
    j_lower_x2: u32,
    j_upper_x2: u32,
    mass_amu: f64,
    coupling_central: f64,
    coupling_uncertainty: f64,
    mode_area_m2: Option<f64>,
    axial_waist_nm: Option<f64>,
    overlap: f64,
    solid_angle_weight: f64,
    saturation: f64,
    saturation_reference: SaturationModel,
    radial_trap_khz: f64,
    axial_trap_khz: f64,
    temperature_excess: f64,
    detuning_grid: Vec<f64>,
    beat_frequency_mhz: f64,
    trigger_frequency_mhz: f64,
    bin_width_ps: f64,
    duration_s: f64,
    mean_rate: f64,
    dark_rate: f64,
    visibility: f64,
    instrumental_phase_rad: f64,
    background_rate: f64,
    seed: u64,
    corrections: Corrections,
}

impl Default for ConfigBuilder {
    fn default() -> Self {
        Self {
            wavelength_nm: 369.5,
            linewidth_mhz: 19.6,
            j_lower_x2: 1,
            j_upper_x2: 1,
            mass_amu: 174.0,
            coupling_central: 0.137,
            coupling_uncertainty: 0.014,
            mode_area_m2: None,
            axial_waist_nm: None,
            overlap: 1.0,
            solid_angle_weight: 0.5,
            saturation: 0.1,
            saturation_reference: SaturationModel::ResonanceReferenced,
            radial_trap_khz: 480.0,
            axial_trap_khz: 1025.0,
            temperature_excess: 1.5,
            detuning_grid: parse_grid("-3:0.25:3").expect("default grid"),
            beat_frequency_mhz: 400.0,
            trigger_frequency_mhz: 10.0,
            bin_width_ps: 100.0,
            duration_s: 10.0,
            mean_rate: 5e4,
            dark_rate: 5e4,
            visibility: 0.5,
            instrumental_phase_rad: 0.5,
            background_rate: 0.0,
            seed: 1,
            corrections: Corrections::none(),
        }
    }
}

impl ConfigBuilder {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "wavelength_nm" => self.wavelength_nm = num(value)?,
            "linewidth_mhz" => self.linewidth_mhz = num(value)?,
            "j_lower_x2" => self.j_lower_x2 = int(value)?,
            "j_upper_x2" => self.j_upper_x2 = int(value)?,
            "mass_amu" => self.mass_amu = num(value)?,
            "coupling_central" => self.coupling_central = num(value)?,
            "coupling_uncertainty" => self.coupling_uncertainty = num(value)?,
            "mode_area_m2" => self.mode_area_m2 = Some(num(value)?),
            "axial_waist_nm" => self.axial_waist_nm = Some(num(value)?),
            "overlap" => self.overlap = num(value)?,
            "solid_angle_weight" => self.solid_angle_weight = num(value)?,
            "saturation" => self.saturation = num(value)?,
            "saturation_reference" => {
                self.saturation_reference = match value {
                    "resonance" => SaturationModel::ResonanceReferenced,
                    "probe" => SaturationModel::ProbeReferenced,
                    other => return Err(format!("expected `resonance` or `probe`, got `{other}`")),
                }
            }
            "radial_trap_khz" => self.radial_trap_khz = num(value)?,
            "axial_trap_khz" => self.axial_trap_khz = num(value)?,
            "temperature_excess" => self.temperature_excess = num(value)?,
            "detuning_grid" => self.detuning_grid = parse_grid(value)?,
            "beat_frequency_mhz" => self.beat_frequency_mhz = num(value)?,
            "trigger_frequency_mhz" => self.trigger_frequency_mhz = num(value)?,
            "bin_width_ps" => self.bin_width_ps = num(value)?,
            "duration_s" => self.duration_s = num(value)?,
            "mean_rate" => self.mean_rate = num(value)?,
            "dark_rate" => self.dark_rate = num(value)?,
            "visibility" => self.visibility = num(value)?,
            "instrumental_phase_rad" => self.instrumental_phase_rad = num(value)?,
            "background_rate" => self.background_rate = num(value)?,
            "seed" => self.seed = value.parse().map_err(|e| format!("invalid seed `{value}`: {e}"))?,
            "corrections" => self.corrections = value.parse()?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    fn finish(self) -> Result<ExperimentConfig> {
        let transition = Transition {
            wavelength: self.wavelength_nm * 1e-9,
            linewidth: TAU * self.linewidth_mhz * 1e6,
            j_lower_x2: self.j_lower_x2,
            j_upper_x2: self.j_upper_x2,
            mass: self.mass_amu * ATOMIC_MASS_UNIT,
        };
        transition.validate()?;
        let mode_area = match self.mode_area_m2 {
            Some(a) => a,
            None if self.coupling_central > 0.0 => {
                resonant_cross_section_two_level(transition.wavelength)? / (4.0 * self.coupling_central)
            }
            None => {
                return Err(Error::Configuration(
                    "mode_area_m2 must be given when coupling_central is 0".into(),
                ))
            }
        };
        let beam = BeamGeometry {
            mode_area,
            overlap: self.overlap,
            solid_angle_weight: self.solid_angle_weight,
            saturation: self.saturation,
            axial_waist: self.axial_waist_nm.unwrap_or(self.wavelength_nm) * 1e-9,
        };
        let detuning_grid = self
            .detuning_grid
            .iter()
            .map(|&m| Detuning::from_linewidths(m, transition.linewidth))
            .collect::<Result<Vec<_>>>()?;
        let config = ExperimentConfig {
            transition,
            beam,
            motion: MotionConfig {
                trap_frequencies: [
                    TAU * self.radial_trap_khz * 1e3,
                    TAU * self.radial_trap_khz * 1e3,
                    TAU * self.axial_trap_khz * 1e3,
                ],
                temperature_excess: self.temperature_excess,
            },
            saturation_model: self.saturation_reference,
            coupling_central: self.coupling_central,
            coupling_uncertainty: self.coupling_uncertainty,
            detuning_grid,
            heterodyne: HeterodyneConfig {
                beat_frequency: TAU * self.beat_frequency_mhz * 1e6,
                trigger_frequency: self.trigger_frequency_mhz * 1e6,
                bin_width: self.bin_width_ps * 1e-12,
                duration: self.duration_s,
                mean_rate: self.mean_rate,
                dark_rate: self.dark_rate,
                visibility: self.visibility,
                instrumental_phase: self.instrumental_phase_rad,
                background_rate: self.background_rate,
            },
            seed: self.seed,
            corrections: self.corrections,
        };
        config.validate()?;
        Ok(config)
    }
}

fn num(value: &str) -> Result<f64, String> {
    let v: f64 = value.parse().map_err(|_| format!("invalid number `{value}`"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("value `{value}` is not finite"))
    }
}

fn int(value: &str) -> Result<u32, String> {
    value.parse().map_err(|_| format!("invalid non-negative integer `{value}`"))
}

/// Expands `start:step:stop` (inclusive) or a comma-separated list, in units of Γ.
pub fn parse_grid(value: &str) -> Result<Vec<f64>, String> {
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').map(str::trim).collect();
        let [start, step, stop] = parts[..] else {
            return Err("range must be `start:step:stop`".into());
        };
        let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
        if !(step > 0.0) {
            return Err("range step must be positive".into());
        }
        if stop < start {
            return Err("range stop must not be below start".into());
        }
        let intervals = ((stop - start) / step + 1e-9).floor() as usize;
        if intervals > 1_000_000 {
            return Err("range has too many points".into());
        }
        Ok((0..=intervals).map(|i| start + i as f64 * step).collect())
    } else {
        let values = value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(num)
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err("empty grid".into());
        }
        Ok(values)
    }
}
