//! Binary floating point at 4096 bits, for replaying trajectories past the
//! point where double-precision rounding has been amplified to order one.

use std::ops::{Add, Div, Mul, Neg, Sub};

use dashu_float::ops::SquareRoot;
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use lorentz_core::Real;

pub const BITS: usize = 4096;

#[derive(Clone, Debug, PartialEq, PartialOrd)]
pub struct Big(FBig<HalfEven>);

macro_rules! big_op {
    ($tr:ident, $f:ident) => {
        impl $tr for Big {
            type Output = Big;
            fn $f(self, rhs: Big) -> Big {
                Big($tr::$f(self.0, rhs.0))
            }
        }
    };
}
big_op!(Add, add);
big_op!(Sub, sub);
big_op!(Mul, mul);
big_op!(Div, div);

impl Neg for Big {
    type Output = Big;
    fn neg(self) -> Big {
        Big(-self.0)
    }
}

impl Real for Big {
    fn from_f64(x: f64) -> Self {
        Big(FBig::try_from(x).expect("finite input").with_precision(BITS).value())
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }

    fn sqrt(&self) -> Self {
        Big(self.0.sqrt())
    }

    fn floor_i64(&self) -> i64 {
        i64::try_from(self.0.floor().to_int().value()).expect("cell index fits in i64")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carries_more_than_double_precision() {
        let third = Big::from_f64(1.0) / Big::from_f64(3.0);
        let back = third.clone() * Big::from_f64(3.0) - Big::from_f64(1.0);
        assert_eq!(back.to_f64(), 0.0);
        assert_eq!(Big::from_f64(2.0).sqrt().to_f64(), 2f64.sqrt());
        assert_eq!(Big::from_f64(-1.5).floor_i64(), -2);
    }
}
