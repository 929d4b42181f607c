//! Resonant scattering cross sections and the elastic phase shift imprinted
//! on a weak coherent beam by a single atom.
//!
//! All phase formulas share the complex Lorentzian factor
//! `(1 + i·2Δ/Γ) / (1 + 4Δ²/Γ²)` and evaluate `arg(1 − k·kernel)` for a
//! model-dependent strength `k`:
//!
//! | model            | strength `k` |
//! |------------------|--------------|
//! | two-level atom   | `2G`         |
//! | mode-area form   | `σ/(2A)`     |
//! | `J = J′` line    | `2G/3`       |
//!
//! Saturation is neglected throughout; see [`crate::coupling_budget`] for the
//! weak-drive correction of `G`.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::scalar::{arg, Scalar};

/// Parameters of an optical transition.
///
/// Angular momenta are stored doubled so half-integer values stay integers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition<T> {
    /// Resonance wavelength λ in m.
    pub wavelength: T,
    /// Spontaneous emission rate Γ in rad/s.
    pub linewidth: T,
    /// 2J of the lower level.
    pub j_lower_x2: u32,
    /// 2J′ of the upper level.
    pub j_upper_x2: u32,
    /// Mass of the scatterer in kg.
    pub mass: T,
}

impl<T: Scalar> Transition<T> {
    pub fn new(wavelength: T, linewidth: T, j_lower_x2: u32, j_upper_x2: u32, mass: T) -> Result<Self> {
        let t = Self {
            wavelength,
            linewidth,
            j_lower_x2,
            j_upper_x2,
            mass,
        };
        t.validate()?;
        Ok(t)
    }

    /// S½ ↔ P½ line of ¹⁷⁴Yb⁺: 369.5 nm, Γ = 2π·19.6 MHz, mass 174 u.
    pub fn ytterbium_ion() -> Self {
        let two_pi = T::PI() + T::PI();
        Self {
            wavelength: T::lit(369.5e-9),
            linewidth: two_pi * T::lit(19.6e6),
            j_lower_x2: 1,
            j_upper_x2: 1,
            mass: T::lit(174.0) * T::lit(crate::coupling_budget::ATOMIC_MASS_UNIT),
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("wavelength", self.wavelength)?;
        positive("linewidth", self.linewidth)?;
        positive("mass", self.mass)?;
        Ok(())
    }

    /// Exact degeneracy factor (2J′+1)/(2J+1).
    pub fn degeneracy_ratio(&self) -> Ratio<u32> {
        Ratio::new(self.j_upper_x2 + 1, self.j_lower_x2 + 1)
    }

    /// Whether upper and lower level share the same total angular momentum.
    pub fn is_j_equal(&self) -> bool {
        self.j_lower_x2 == self.j_upper_x2
    }
}

/// Laser minus atomic resonance angular frequency, in rad/s. Negative is red.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct Detuning<T>(T);

impl<T: Scalar> Detuning<T> {
    pub fn new(rad_per_s: T) -> Result<Self> {
        if !rad_per_s.is_finite() {
            return Err(Error::domain("detuning", rad_per_s.as_f64(), "must be finite"));
        }
        Ok(Self(rad_per_s))
    }

    /// Detuning given as a multiple of the linewidth.
    pub fn from_linewidths(multiple: T, linewidth: T) -> Result<Self> {
        Self::new(multiple * linewidth)
    }

    pub fn zero() -> Self {
        Self(T::zero())
    }

    pub fn value(self) -> T {
        self.0
    }

    pub fn in_linewidths(self, linewidth: T) -> T {
        self.0 / linewidth
    }

    pub fn abs(self) -> Self {
        Self(self.0.abs())
    }
}

impl<T: Scalar> std::ops::Neg for Detuning<T> {
    type Output = Self;

    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl<T: Scalar> std::ops::Sub for Detuning<T> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

/// Complex Lorentzian response `(1 + i·2Δ/Γ)/(1 + 4Δ²/Γ²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexResponse<T> {
    pub re: T,
    pub im: T,
}

impl<T: Scalar> ComplexResponse<T> {
    pub fn norm_sqr(&self) -> T {
        self.re * self.re + self.im * self.im
    }
}

/// Level structure used by [`max_phase_over_detuning`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelModel {
    TwoLevel,
    JEqual,
}

impl LevelModel {
    fn strength<T: Scalar>(self, g: T) -> T {
        match self {
            LevelModel::TwoLevel => g + g,
            LevelModel::JEqual => (g + g) / T::lit(3.0),
        }
    }
}

/// Location and size of the largest phase magnitude over all detunings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseExtremum<T> {
    /// Magnitude |Δ| where |Δφ| peaks (the peak value is attained at both signs).
    pub detuning: Detuning<T>,
    /// Peak |Δφ| in rad.
    pub phase: T,
}

/// `3λ²/(2π)`, the cross section of an ideal two-level atom.
pub fn resonant_cross_section_two_level<T: Scalar>(wavelength: T) -> Result<T> {
    positive("wavelength", wavelength)?;
    Ok(cross_section(wavelength, Ratio::new(3, 1)))
}

/// `λ²/(2π) · (2J′+1)/(2J+1)`.
pub fn resonant_cross_section<T: Scalar>(transition: &Transition<T>) -> Result<T> {
    transition.validate()?;
    Ok(cross_section(transition.wavelength, transition.degeneracy_ratio()))
}

fn cross_section<T: Scalar>(wavelength: T, ratio: Ratio<u32>) -> T {
    let base = wavelength * wavelength / (T::PI() + T::PI());
    base * T::from_u32(*ratio.numer()).unwrap() / T::from_u32(*ratio.denom()).unwrap()
}

/// Scattered photon rate `(σ/A)·γ_inc`. May exceed the incident rate.
pub fn scattering_rate<T: Scalar>(sigma: T, mode_area: T, incident_rate: T) -> Result<T> {
    non_negative("cross section", sigma)?;
    positive("mode area", mode_area)?;
    non_negative("incident rate", incident_rate)?;
    Ok(sigma / mode_area * incident_rate)
}

pub fn lorentzian_kernel<T: Scalar>(delta: Detuning<T>, gamma: T) -> Result<ComplexResponse<T>> {
    positive("linewidth", gamma)?;
    let x = (delta.value() + delta.value()) / gamma;
    let denom = T::one() + x * x;
    Ok(ComplexResponse {
        re: T::one() / denom,
        im: x / denom,
    })
}

/// Two-level phase shift `arg(1 − 2G·kernel)` in `(−π, π]`.
///
/// At `G = 0.5, Δ = 0` the response vanishes and [`Error::SingularPoint`] is
/// returned.
pub fn phase_two_level<T: Scalar>(g: T, delta: Detuning<T>, gamma: T) -> Result<T> {
    unit_interval("coupling", g)?;
    phase_for_strength(LevelModel::TwoLevel.strength(g), g, delta, gamma)
}

/// Phase shift written in terms of cross section and mode area, `arg(1 − σ/(2A)·kernel)`.
///
/// On resonance this is exactly 0 for `A > σ/2` and exactly π for `A < σ/2`.
pub fn phase_from_mode_area<T: Scalar>(sigma: T, mode_area: T, delta: Detuning<T>, gamma: T) -> Result<T> {
    non_negative("cross section", sigma)?;
    positive("mode area", mode_area)?;
    if mode_area < sigma / T::lit(4.0) {
        return Err(Error::domain(
            "mode area",
            mode_area.as_f64(),
            "must be at least a quarter of the cross section",
        ));
    }
    let strength = sigma / (mode_area + mode_area);
    phase_for_strength(strength, strength / T::lit(2.0), delta, gamma)
}

/// Phase shift on a `J = J′` transition, `arg(1 − (2G/3)·kernel)`.
///
/// Identical to [`phase_two_level`] at `G/3`. The response never vanishes.
pub fn phase_j_equal<T: Scalar>(g: T, delta: Detuning<T>, gamma: T) -> Result<T> {
    unit_interval("coupling", g)?;
    phase_for_strength(LevelModel::JEqual.strength(g), g, delta, gamma)
}

/// Phase for the given model; dispatches to [`phase_two_level`] or [`phase_j_equal`].
pub fn phase<T: Scalar>(model: LevelModel, g: T, delta: Detuning<T>, gamma: T) -> Result<T> {
    match model {
        LevelModel::TwoLevel => phase_two_level(g, delta, gamma),
        LevelModel::JEqual => phase_j_equal(g, delta, gamma),
    }
}

fn phase_for_strength<T: Scalar>(strength: T, g: T, delta: Detuning<T>, gamma: T) -> Result<T> {
    let kernel = lorentzian_kernel(delta, gamma)?;
    let re = T::one() - strength * kernel.re;
    let im = -(strength * kernel.im);
    if re == T::zero() && im == T::zero() {
        return Err(Error::SingularPoint {
            coupling: g.as_f64(),
            detuning: delta.value().as_f64(),
        });
    }
    Ok(arg(re, im))
}

/// Largest |Δφ| over all detunings, located by a golden-section search.
///
/// For the two-level model with `G > 0.5` the maximum is π on resonance. At
/// exactly `G = 0.5` the supremum π/2 is approached as Δ → 0 but not attained;
/// it is reported at Δ = 0.
pub fn max_phase_over_detuning<T: Scalar>(g: T, model: LevelModel, gamma: T) -> Result<PhaseExtremum<T>> {
    unit_interval("coupling", g)?;
    positive("linewidth", gamma)?;
    let strength = model.strength(g);
    if strength == T::zero() {
        return Ok(PhaseExtremum {
            detuning: Detuning::zero(),
            phase: T::zero(),
        });
    }
    if strength > T::one() {
        return Ok(PhaseExtremum {
            detuning: Detuning::zero(),
            phase: T::PI(),
        });
    }
    if strength == T::one() {
        return Ok(PhaseExtremum {
            detuning: Detuning::zero(),
            phase: T::FRAC_PI_2(),
        });
    }

    // |Δφ| as a function of x = 2Δ/Γ ≥ 0 is unimodal with its peak at
    // x = sqrt(1 − k) ≤ 1, so [0, 2] brackets it.
    let magnitude = |x: T| -> T {
        let delta = Detuning(x * gamma / T::lit(2.0));
        phase_for_strength(strength, g, delta, gamma)
            .map(|p| p.abs())
            .unwrap_or(T::zero())
    };
    let x = golden_section_max(magnitude, T::zero(), T::lit(2.0));
    Ok(PhaseExtremum {
        detuning: Detuning(x * gamma / T::lit(2.0)),
        phase: magnitude(x),
    })
}

fn golden_section_max<T: Scalar>(f: impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..200 {
        if hi - lo <= T::epsilon() * (T::one() + hi.abs()) {
            break;
        }
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        }
    }
    (lo + hi) / T::lit(2.0)
}

fn positive<T: Scalar>(quantity: &'static str, value: T) -> Result<()> {
    if value > T::zero() && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(quantity, value.as_f64(), "must be positive and finite"))
    }
}

fn non_negative<T: Scalar>(quantity: &'static str, value: T) -> Result<()> {
    if value >= T::zero() && value.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(quantity, value.as_f64(), "must be non-negative and finite"))
    }
}

fn unit_interval<T: Scalar>(quantity: &'static str, value: T) -> Result<()> {
    if value >= T::zero() && value <= T::one() {
        Ok(())
    } else {
        Err(Error::domain(quantity, value.as_f64(), "must lie in [0, 1]"))
    }
}
