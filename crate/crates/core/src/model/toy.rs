//! The one-dimensional verification function `f(x) = 0.1 x + cos x`.

use crate::error::{Error, Result};

/// Upper end of the toy input range, `11 pi / 3`.
pub const TOY_UPPER: f64 = 11.0 * std::f64::consts::PI / 3.0;

pub fn toy_1d(x: f64) -> Result<f64> {
    if !(0.0..=TOY_UPPER).contains(&x) {
        return Err(Error::Domain(format!("toy input x = {x} outside [0, 11pi/3]")));
    }
    Ok(0.1 * x + x.cos())
}

/// Maps a scaled coordinate in `[-1, 1]` onto the toy range.
pub fn toy_from_scaled(c: f64) -> f64 {
    0.5 * (c + 1.0) * TOY_UPPER
}

pub fn toy_to_scaled(x: f64) -> f64 {
    2.0 * x / TOY_UPPER - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn reference_values() {
        assert_eq!(toy_1d(0.0).unwrap(), 1.0);
        assert!((toy_1d(PI).unwrap() - (0.1 * PI - 1.0)).abs() < 1e-15);
        assert!((toy_1d(TOY_UPPER).unwrap() - (0.1 * TOY_UPPER + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn out_of_range() {
        assert!(toy_1d(-0.1).is_err());
        assert!(toy_1d(TOY_UPPER + 1e-9).is_err());
    }

    #[test]
    fn scaling_roundtrip() {
        assert_eq!(toy_from_scaled(-1.0), 0.0);
        assert!((toy_from_scaled(1.0) - TOY_UPPER).abs() < 1e-15);
        assert!((toy_to_scaled(toy_from_scaled(0.37)) - 0.37).abs() < 1e-14);
    }
}
