//! Lowest-order gravitational redshift, `ε = g·Δh/c²`, applied as a common
//! fractional shift to both clock transitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DoubleWord;
use crate::qutrit::ClockFrequencies;

/// Shifts at or above this magnitude are outside the first-order regime.
pub const MAX_PHYSICAL_SHIFT: f64 = 1e-3;

/// Limit for exaggerated shifts in dimensionless (scaled) runs.
pub const MAX_SCALED_SHIFT: f64 = 1e-1;

/// `c²` rounded to `9×10¹⁶` m²/s², as in back-of-envelope estimates.
pub const ROUNDED_C_SQUARED: f64 = 9e16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedshiftContext {
    g: f64,
    delta_h: f64,
}

impl RedshiftContext {
    /// `g` in m/s² (positive), `delta_h` in metres (either sign).
    pub fn new(g: f64, delta_h: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "g must be positive, got {g}"
            )));
        }
        if !delta_h.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "delta_h must be finite, got {delta_h}"
            )));
        }
        Ok(Self { g, delta_h })
    }

    /// Standard surface gravity 9.8 m/s² with the given height.
    pub fn earth_surface(delta_h: f64) -> Result<Self> {
        Self::new(9.8, delta_h)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn delta_h(&self) -> f64 {
        self.delta_h
    }
}

/// `c²`, exact in double-word form.
pub fn speed_of_light_squared() -> DoubleWord {
    let c = DoubleWord::SPEED_OF_LIGHT.hi();
    DoubleWord::from_product(c, c)
}

/// `ε = g·Δh/c²` with exact `c`.
pub fn redshift_factor(ctx: &RedshiftContext) -> DoubleWord {
    DoubleWord::from_product(ctx.g, ctx.delta_h) / speed_of_light_squared()
}

/// `g·Δh/(9×10¹⁶)`, the estimate with `c²` rounded to one figure.
pub fn redshift_factor_rounded(ctx: &RedshiftContext) -> f64 {
    ctx.g * ctx.delta_h / ROUNDED_C_SQUARED
}

fn scale(freqs: &ClockFrequencies, eps: DoubleWord) -> Result<ClockFrequencies> {
    let k = DoubleWord::ONE + eps;
    ClockFrequencies::from_extended(freqs.f1() * k, freqs.beat() * k)
}

/// Multiplies both clock frequencies, and so the beat, by `1 + ε`.
/// Requires `|ε| < 10⁻³`.
pub fn shift_frequencies(freqs: &ClockFrequencies, eps: DoubleWord) -> Result<ClockFrequencies> {
    let e = eps.to_f64();
    if !(e.abs() < MAX_PHYSICAL_SHIFT) {
        return Err(Error::ShiftTooLarge {
            eps: e,
            limit: MAX_PHYSICAL_SHIFT,
        });
    }
    scale(freqs, eps)
}

/// [`shift_frequencies`] for dimensionless runs with exaggerated shifts,
/// `|ε| < 0.1`.
pub fn shift_frequencies_scaled(freqs: &ClockFrequencies, eps: f64) -> Result<ClockFrequencies> {
    if !(eps.abs() < MAX_SCALED_SHIFT) {
        return Err(Error::ShiftTooLarge {
            eps,
            limit: MAX_SCALED_SHIFT,
        });
    }
    scale(freqs, DoubleWord::from_f64(eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_metre_at_earth_surface() {
        let ctx = RedshiftContext::new(9.8, 1.0).unwrap();
        let eps = redshift_factor(&ctx).to_f64();
        assert!((eps - 1.090_397_054_932_546e-16).abs() < 1e-30);
        // two significant figures
        assert_eq!(format!("{eps:.1e}"), "1.1e-16");
        let rounded = redshift_factor_rounded(&ctx);
        assert_eq!(format!("{rounded:.3e}"), "1.089e-16");
    }

    #[test]
    fn sign_symmetry_and_zero() {
        let up = redshift_factor(&RedshiftContext::new(9.8, 1.0).unwrap());
        let down = redshift_factor(&RedshiftContext::new(9.8, -1.0).unwrap());
        assert_eq!(up, -down);
        assert_eq!(
            redshift_factor(&RedshiftContext::new(9.8, 0.0).unwrap()).to_f64(),
            0.0
        );
    }

    #[test]
    fn context_validation() {
        assert!(RedshiftContext::new(0.0, 1.0).is_err());
        assert!(RedshiftContext::new(9.8, f64::NAN).is_err());
        assert!(RedshiftContext::new(9.8, -3.0).is_ok());
    }

    #[test]
    fn c_squared_is_exact() {
        let c2 = speed_of_light_squared();
        // 299792458² = 89875517873681764 needs 57 bits
        assert_eq!(c2.hi(), 89_875_517_873_681_760.0);
        assert_eq!(c2.lo(), 4.0);
    }

    #[test]
    fn shifted_beat() {
        let f = ClockFrequencies::new(1.0, 1.25).unwrap();
        let s = shift_frequencies(&f, DoubleWord::from_f64(4e-4)).unwrap();
        assert!((s.beat_hz() - 0.2501).abs() < 1e-16);
        let same = shift_frequencies(&f, DoubleWord::ZERO).unwrap();
        assert_eq!(same, f);
    }

    #[test]
    fn large_shift_rejected() {
        let f = ClockFrequencies::new(1.0, 1.25).unwrap();
        assert!(shift_frequencies(&f, DoubleWord::from_f64(1e-3)).is_err());
        assert!(shift_frequencies_scaled(&f, 0.05).is_ok());
        assert!(shift_frequencies_scaled(&f, 0.1).is_err());
    }
}
