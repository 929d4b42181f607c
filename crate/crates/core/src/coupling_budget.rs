//! Effective coupling efficiency `G` and the corrections that reduce it.
//!
//! `G` starts from the focusing geometry (mode area or mode overlap), then is
//! multiplied by a motion factor (thermal wavepacket averaging the focal
//! field) and a weak-drive saturation factor.

use crate::atomic_response::{resonant_cross_section_two_level, Detuning, Transition};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// CODATA 2018 reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// CODATA 2018 Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// CODATA 2018 atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalConstants<T> {
    pub hbar: T,
    pub boltzmann: T,
    pub atomic_mass_unit: T,
}

impl<T: Scalar> PhysicalConstants<T> {
    pub fn codata() -> Self {
        Self {
            hbar: T::lit(HBAR),
            boltzmann: T::lit(BOLTZMANN),
            atomic_mass_unit: T::lit(ATOMIC_MASS_UNIT),
        }
    }
}

impl<T: Scalar> Default for PhysicalConstants<T> {
    fn default() -> Self {
        Self::codata()
    }
}

/// Focusing geometry and drive strength of the probe beam.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamGeometry<T> {
    /// Effective mode area A in m².
    pub mode_area: T,
    /// Overlap η of the incident mode with the dipole field.
    pub overlap: T,
    /// Dipole-weighted fraction of the full solid angle covered by the optic.
    pub solid_angle_weight: T,
    /// On-resonance saturation parameter S.
    pub saturation: T,
    /// Focal waist along the optical axis in m.
    pub axial_waist: T,
}

impl<T: Scalar> BeamGeometry<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.mode_area > T::zero() && self.mode_area.is_finite()) {
            return Err(Error::domain("mode area", self.mode_area.as_f64(), "must be positive"));
        }
        unit("overlap", self.overlap)?;
        unit("solid angle weight", self.solid_angle_weight)?;
        if !(self.saturation >= T::zero() && self.saturation.is_finite()) {
            return Err(Error::domain("saturation", self.saturation.as_f64(), "must be non-negative"));
        }
        if !(self.axial_waist > T::zero() && self.axial_waist.is_finite()) {
            return Err(Error::domain("axial waist", self.axial_waist.as_f64(), "must be positive"));
        }
        Ok(())
    }

    /// Transverse waist of a round Gaussian focus with this mode area, from `A = π·w²/2`.
    pub fn radial_waist(&self) -> T {
        (T::lit(2.0) * self.mode_area / T::PI()).sqrt()
    }

    /// Waists along the trap axes `[x, y, z]`, with z along the optical axis.
    pub fn focal_waists(&self) -> [T; 3] {
        let w = self.radial_waist();
        [w, w, self.axial_waist]
    }
}

/// Temperature and trap frequencies of the ion, with the derived rms extents.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionState<T> {
    /// K.
    pub temperature: T,
    /// rad/s, one per trap axis `[x, y, z]`.
    pub trap_frequencies: [T; 3],
    /// rms thermal wavepacket widths in m.
    pub extents: [T; 3],
}

impl<T: Scalar> MotionState<T> {
    pub fn at_rest(trap_frequencies: [T; 3]) -> Self {
        Self {
            temperature: T::zero(),
            trap_frequencies,
            extents: [T::zero(); 3],
        }
    }

    pub fn thermal(temperature: T, mass: T, trap_frequencies: [T; 3], constants: &PhysicalConstants<T>) -> Result<Self> {
        if temperature == T::zero() {
            return Ok(Self::at_rest(trap_frequencies));
        }
        let mut extents = [T::zero(); 3];
        for (extent, &omega) in extents.iter_mut().zip(&trap_frequencies) {
            *extent = thermal_extent(temperature, mass, omega, constants)?;
        }
        Ok(Self {
            temperature,
            trap_frequencies,
            extents,
        })
    }

    /// Recomputes the extents from the temperature and checks they agree.
    pub fn validate(&self, mass: T, constants: &PhysicalConstants<T>) -> Result<()> {
        let expected = Self::thermal(self.temperature, mass, self.trap_frequencies, constants)?;
        let tol = T::lit(1e3) * T::epsilon();
        for (got, want) in self.extents.iter().zip(&expected.extents) {
            if (*got - *want).abs() > tol * want.abs() {
                return Err(Error::Configuration(format!(
                    "motion extents {got} m inconsistent with temperature (expected {want} m)"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingBudget<T> {
    /// Motion- and saturation-free coupling.
    pub g_geometry: T,
    pub motion_factor: T,
    pub saturation_factor: T,
    pub g_effective: T,
}

impl<T: Scalar> CouplingBudget<T> {
    /// Resonant scattering ratio R = 4G of the effective coupling.
    pub fn scattering_ratio(&self) -> T {
        scattering_ratio(self.g_effective)
    }
}

/// Where the geometric coupling comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeometrySource<T> {
    /// A measured or assumed coupling value, used as is.
    Direct(T),
    /// `σ/(4A)` from the beam's mode area and the ideal two-level cross section.
    ModeArea,
    /// `η²·f_Ω` from the beam's overlap and solid-angle weight.
    Overlap,
}

/// How ion motion enters the budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MotionModel<T> {
    AtRest,
    Fixed(MotionState<T>),
    /// Temperature set by Doppler cooling at the probe detuning, times an excess factor.
    DopplerCooled { trap_frequencies: [T; 3], excess_factor: T },
}

/// Which detuning the saturation parameter is quoted at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SaturationModel {
    #[default]
    Off,
    /// S is the on-resonance value, reduced by the Lorentzian off resonance.
    ResonanceReferenced,
    /// S is already the value at the probe detuning.
    ProbeReferenced,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BudgetOptions<T> {
    pub source: GeometrySource<T>,
    pub motion: MotionModel<T>,
    pub saturation: SaturationModel,
}

/// `G = σ/(4A)`; fails for foci tighter than the free-space minimum `σ/4`.
pub fn coupling_from_mode_area<T: Scalar>(sigma: T, mode_area: T) -> Result<T> {
    if !(sigma >= T::zero()) {
        return Err(Error::domain("cross section", sigma.as_f64(), "must be non-negative"));
    }
    if !(mode_area > T::zero()) || mode_area < sigma / T::lit(4.0) {
        return Err(Error::domain(
            "mode area",
            mode_area.as_f64(),
            "must be at least a quarter of the cross section",
        ));
    }
    Ok(sigma / (T::lit(4.0) * mode_area))
}

/// `G = η²·f_Ω`.
pub fn coupling_from_overlap<T: Scalar>(overlap: T, solid_angle_weight: T) -> Result<T> {
    unit("overlap", overlap)?;
    unit("solid angle weight", solid_angle_weight)?;
    Ok(overlap * overlap * solid_angle_weight)
}

/// `R = 4G`.
pub fn scattering_ratio<T: Scalar>(g: T) -> T {
    T::lit(4.0) * g
}

/// Doppler-cooling temperature `(ħΓ/4k_B)·(Γ/(2|Δ|) + 2|Δ|/Γ)`.
///
/// Minimal (`ħΓ/2k_B`) at Δ = −Γ/2; diverges towards resonance.
pub fn doppler_temperature<T: Scalar>(delta: Detuning<T>, gamma: T, constants: &PhysicalConstants<T>) -> Result<T> {
    if !(gamma > T::zero()) {
        return Err(Error::domain("linewidth", gamma.as_f64(), "must be positive"));
    }
    let d = delta.value();
    if !(d < T::zero()) {
        return Err(Error::NoCooling { detuning: d.as_f64() });
    }
    let x = T::lit(2.0) * d.abs() / gamma;
    Ok(constants.hbar * gamma / (T::lit(4.0) * constants.boltzmann) * (T::one() / x + x))
}

/// Classical rms position spread `sqrt(k_B·T/(m·ω²))` of a thermal oscillator.
pub fn thermal_extent<T: Scalar>(temperature: T, mass: T, trap_frequency: T, constants: &PhysicalConstants<T>) -> Result<T> {
    for (name, v) in [("temperature", temperature), ("mass", mass), ("trap frequency", trap_frequency)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::domain(name, v.as_f64(), "must be positive"));
        }
    }
    Ok((constants.boltzmann * temperature / mass).sqrt() / trap_frequency)
}

/// Field-amplitude reduction from averaging a Gaussian focus over a Gaussian
/// position distribution: `Π (1 + 2σ²/w²)^(−1/2)` over the three axes.
pub fn motion_averaged_coupling<T: Scalar>(extents: [T; 3], focal_waists: [T; 3]) -> Result<T> {
    let mut factor = T::one();
    for (&s, &w) in extents.iter().zip(&focal_waists) {
        if !(w > T::zero()) {
            return Err(Error::domain("focal waist", w.as_f64(), "must be positive"));
        }
        if !(s >= T::zero()) {
            return Err(Error::domain("thermal extent", s.as_f64(), "must be non-negative"));
        }
        let r = s / w;
        factor = factor / (T::one() + T::lit(2.0) * r * r).sqrt();
    }
    Ok(factor)
}

/// On-resonance S reduced by the Lorentzian at the given detuning.
pub fn effective_saturation<T: Scalar>(saturation: T, delta: Detuning<T>, gamma: T) -> T {
    let x = T::lit(2.0) * delta.value() / gamma;
    saturation / (T::one() + x * x)
}

/// `g / (1 + s_eff)` with `s_eff = S/(1 + 4Δ²/Γ²)`.
pub fn saturation_scaled_coupling<T: Scalar>(g: T, saturation: T, delta: Detuning<T>, gamma: T) -> T {
    g / (T::one() + effective_saturation(saturation, delta, gamma))
}

/// Temperature used for the motion correction at a given probe detuning.
pub fn probe_temperature<T: Scalar>(
    delta: Detuning<T>,
    gamma: T,
    excess_factor: T,
    constants: &PhysicalConstants<T>,
) -> Result<T> {
    Ok(excess_factor * doppler_temperature(delta, gamma, constants)?)
}

/// Composes geometry, motion and saturation into a [`CouplingBudget`].
pub fn build_budget<T: Scalar>(
    beam: &BeamGeometry<T>,
    transition: &Transition<T>,
    options: &BudgetOptions<T>,
    delta: Detuning<T>,
    constants: &PhysicalConstants<T>,
) -> Result<CouplingBudget<T>> {
    beam.validate()?;
    transition.validate()?;

    let g_geometry = match options.source {
        GeometrySource::Direct(g) => {
            unit("coupling", g)?;
            g
        }
        GeometrySource::ModeArea => {
            let sigma = resonant_cross_section_two_level(transition.wavelength)?;
            coupling_from_mode_area(sigma, beam.mode_area)?
        }
        GeometrySource::Overlap => coupling_from_overlap(beam.overlap, beam.solid_angle_weight)?,
    };

    let motion = match options.motion {
        MotionModel::AtRest => None,
        MotionModel::Fixed(state) => Some(state),
        MotionModel::DopplerCooled {
            trap_frequencies,
            excess_factor,
        } => {
            let t = probe_temperature(delta, transition.linewidth, excess_factor, constants)?;
            Some(MotionState::thermal(t, transition.mass, trap_frequencies, constants)?)
        }
    };
    let motion_factor = match motion {
        Some(state) => motion_averaged_coupling(state.extents, beam.focal_waists())?,
        None => T::one(),
    };

    let s_eff = match options.saturation {
        SaturationModel::Off => T::zero(),
        SaturationModel::ResonanceReferenced => effective_saturation(beam.saturation, delta, transition.linewidth),
        SaturationModel::ProbeReferenced => beam.saturation,
    };
    let saturation_factor = T::one() / (T::one() + s_eff);

    Ok(CouplingBudget {
        g_geometry,
        motion_factor,
        saturation_factor,
        g_effective: g_geometry * motion_factor * saturation_factor,
    })
}

fn unit<T: Scalar>(quantity: &'static str, value: T) -> Result<()> {
    if value >= T::zero() && value <= T::one() {
        Ok(())
    } else {
        Err(Error::domain(quantity, value.as_f64(), "must lie in [0, 1]"))
    }
}
