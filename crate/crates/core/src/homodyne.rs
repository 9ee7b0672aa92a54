//! Weak-local-oscillator homodyne detection of squeezing.
//!
//! The fluorescence is mixed with a weak local oscillator and the
//! equal-time intensity correlation is compared with its long-time limit:
//!
//! ```text
//! ΔG⁽²²⁾ = −(I_fl² + I_lo ⟨:(ΔE)²:⟩) / 4
//! ```
//!
//! A positive value certifies a negative normally ordered variance.
//! Intensities are in units of `|χ|²`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomodyneError {
    #[error("intensity `{name}` must be finite and non-negative, got {value}")]
    BadIntensity { name: &'static str, value: f64 },
    #[error("variance must be finite, got {0}")]
    BadVariance(f64),
    #[error("variance {0} is not negative; no local-oscillator intensity reveals squeezing")]
    NoSqueezing(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodynePrediction {
    pub i_fl: f64,
    pub i_lo: f64,
    pub variance: f64,
    pub delta_g22: f64,
}

impl HomodynePrediction {
    pub fn new(i_fl: f64, i_lo: f64, variance: f64) -> Result<Self, HomodyneError> {
        Ok(Self { i_fl, i_lo, variance, delta_g22: delta_g22(i_fl, i_lo, variance)? })
    }

    pub fn squeezing_detected(&self) -> bool {
        squeezing_detected(self.delta_g22)
    }
}

fn check_intensity(name: &'static str, value: f64) -> Result<(), HomodyneError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(HomodyneError::BadIntensity { name, value })
    }
}

pub fn delta_g22(i_fl: f64, i_lo: f64, variance: f64) -> Result<f64, HomodyneError> {
    check_intensity("i_fl", i_fl)?;
    check_intensity("i_lo", i_lo)?;
    if !variance.is_finite() {
        return Err(HomodyneError::BadVariance(variance));
    }
    Ok(-(i_fl * i_fl + i_lo * variance) / 4.0)
}

pub fn squeezing_detected(delta_g22: f64) -> bool {
    delta_g22 > 0.0
}

/// Local-oscillator intensity at which `ΔG⁽²²⁾` vanishes; above it
/// squeezing is detected.
pub fn min_lo_intensity(i_fl: f64, variance: f64) -> Result<f64, HomodyneError> {
    check_intensity("i_fl", i_fl)?;
    if !variance.is_finite() {
        return Err(HomodyneError::BadVariance(variance));
    }
    if variance >= 0.0 {
        return Err(HomodyneError::NoSqueezing(variance));
    }
    Ok(i_fl * i_fl / variance.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coherent_level_and_no_oscillator() {
        assert_eq!(delta_g22(3.0, 7.0, 0.0).unwrap(), -9.0 / 4.0);
        assert_eq!(delta_g22(1.0, 0.0, -0.4).unwrap(), -0.25);
    }

    #[test]
    fn squeezed_signal_is_positive() {
        let g = delta_g22(1.0, 10.0, -0.236).unwrap();
        assert!((g - 0.34).abs() < 1e-15);
        assert!(squeezing_detected(g));
        assert!(!squeezing_detected(-0.25));
        assert!(!squeezing_detected(0.0));
    }

    #[test]
    fn detection_thresholds() {
        assert_eq!(min_lo_intensity(1.0, -0.25).unwrap(), 4.0);
        assert_eq!(min_lo_intensity(1.0, -0.125).unwrap(), 8.0);
        assert_eq!(min_lo_intensity(1.0, 0.1), Err(HomodyneError::NoSqueezing(0.1)));
        assert!(matches!(min_lo_intensity(-1.0, -0.1), Err(HomodyneError::BadIntensity { name: "i_fl", .. })));
    }

    #[test]
    fn negative_intensity_rejected() {
        assert!(matches!(delta_g22(1.0, -2.0, 0.0), Err(HomodyneError::BadIntensity { name: "i_lo", .. })));
    }

    proptest! {
        #[test]
        fn zero_at_threshold(i_fl in 0.01..10.0f64, v in -0.25..-1e-3f64) {
            let lo = min_lo_intensity(i_fl, v).unwrap();
            let g = delta_g22(i_fl, lo, v).unwrap();
            prop_assert!(g.abs() <= 1e-15 * i_fl * i_fl);
        }

        #[test]
        fn monotone_in_oscillator_iff_squeezed(i_fl in 0.0..5.0f64, v in -0.25..1.0f64, a in 0.0..50.0f64, d in 0.1..50.0f64) {
            let g1 = delta_g22(i_fl, a, v).unwrap();
            let g2 = delta_g22(i_fl, a + d, v).unwrap();
            prop_assert_eq!(g2 > g1, v < 0.0);
        }

        #[test]
        fn threshold_scales_inversely_with_squeezing(i_fl in 0.1..10.0f64) {
            let cavity = min_lo_intensity(i_fl, -0.236).unwrap();
            let free = min_lo_intensity(i_fl, -0.125).unwrap();
            prop_assert!((cavity / free - 0.125 / 0.236).abs() < 1e-15);
        }
    }
}
