//! Floating-point scalar abstraction shared by every numeric module.

use core::fmt::{Debug, Display};
use core::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the calibration math is written against: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle<T: Real>(angle: T) -> T {
    let two_pi = T::TAU();
    let mut a = angle % two_pi;
    if a <= -T::PI() {
        a = a + two_pi;
    } else if a > T::PI() {
        a = a - two_pi;
    }
    a
}

pub fn deg_to_rad<T: Real>(deg: T) -> T {
    deg.to_radians()
}

pub fn rad_to_deg<T: Real>(rad: T) -> T {
    rad.to_degrees()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    compensation: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), compensation: T::zero() }
    }

    pub fn add(&mut self, value: T) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation = self.compensation + ((self.sum - t) + value);
        } else {
            self.compensation = self.compensation + ((value - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.compensation
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_lands_in_half_open_interval() {
        let pi = std::f64::consts::PI;
        assert!((wrap_angle(370f64.to_radians()) - 10f64.to_radians()).abs() < 1e-12);
        assert_eq!(wrap_angle(pi), pi);
        assert!((wrap_angle(-pi) - pi).abs() < 1e-15);
        assert!((wrap_angle(3.0 * pi) - pi).abs() < 1e-12);
        assert!((wrap_angle(-0.25f64) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::<f64>::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn degree_round_trip() {
        for d in [-179.9f64, -45.0, 0.0, 22.9, 173.3] {
            let r = deg_to_rad(d);
            assert!((deg_to_rad(rad_to_deg(r)) - r).abs() < 1e-12);
        }
    }
}
