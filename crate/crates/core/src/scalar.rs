//! Scalar abstraction shared by the physics and fitting code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point type the toolkit can compute with (`f32` or `f64`).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for the supported types.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Converts an integer count.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable")
    }

    /// Lossy view used for error reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle<T: Scalar>(angle: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    let mut a = angle - two_pi * ((angle + pi) / two_pi).floor();
    // `a` is now in [-π, π); fold the lower endpoint onto +π.
    if a <= -pi {
        a = a + two_pi;
    }
    if a > pi {
        a = a - two_pi;
    }
    a
}

/// Argument of a complex number in `(-π, π]`, with negative reals mapped to +π
/// and non-negative reals to +0, regardless of the sign of a zero imaginary part.
pub fn arg<T: Scalar>(re: T, im: T) -> T {
    if im == T::zero() {
        if re < T::zero() {
            T::PI()
        } else {
            T::zero()
        }
    } else {
        im.atan2(re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_keeps_range() {
        assert_eq!(wrap_angle(0.25_f64), 0.25);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(6.0_f64) - (6.0 - 2.0 * PI)).abs() < 1e-15);
        assert!((wrap_angle(-7.0_f64) - (-7.0 + 2.0 * PI)).abs() < 1e-15);
        assert!((wrap_angle(3.0_f32 * std::f32::consts::PI) - std::f32::consts::PI).abs() < 1e-5);
    }

    #[test]
    fn arg_of_negative_real_is_plus_pi() {
        assert_eq!(arg(-0.2_f64, 0.0), PI);
        assert_eq!(arg(-0.2_f64, -0.0), PI);
        assert_eq!(arg(1.0_f64, -0.0), 0.0);
        assert!(arg(1.0_f64, -0.0).is_sign_positive());
        assert_eq!(arg(0.0_f64, 1.0), PI / 2.0);
    }
}
