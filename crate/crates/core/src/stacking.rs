//! Detectability of the redshift through the visibility modulation.
//!
//! A fractional shift `ε` moves the first visibility null by only
//! `ε/Δf` seconds, but the shift grows linearly with the null index. Over a
//! coherence time `τ` there are `τ·Δf` modulation periods, so the total time
//! shift at the end is `τ·ε`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fringe;
use crate::numerics::DoubleWord;
use crate::qutrit::{ClockFrequencies, ExtendedPhase};
use crate::redshift::{self, RedshiftContext};
use crate::sequence::{self, Preparation, RamseySequence};

/// Samples per modulation period used when tracking nulls by simulation.
pub const TRACKING_SAMPLES_PER_PERIOD: usize = 16;

/// Closing phases per fringe when tracking nulls by simulation.
pub const TRACKING_PHASES: usize = 8;

/// Agreement expected between null tracking and `n·ε`, in periods.
pub const NULL_TRACKING_TOLERANCE: f64 = 5e-4;

const MAX_TRACKED_SAMPLES: usize = 20_000_000;

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive, got {x}"
        )))
    }
}

/// Number of modulation periods inside the coherence time, `τ·Δf`.
pub fn stacking_gain(tau_s: f64, delta_f_hz: f64) -> Result<f64> {
    check_positive("tau_s", tau_s)?;
    check_positive("delta_f_hz", delta_f_hz)?;
    Ok(tau_s * delta_f_hz)
}

/// Accumulated time shift over `τ` as a fraction of `τ`, `τ·g·Δh/c²`.
pub fn total_signal(tau_s: f64, ctx: &RedshiftContext) -> Result<DoubleWord> {
    check_positive("tau_s", tau_s)?;
    Ok(redshift::redshift_factor(ctx).mul_f64(tau_s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StackingReport {
    pub n_periods: u64,
    pub eps: f64,
    /// Null shift contributed by one period, `ε/Δf` seconds.
    pub per_period_shift_s: f64,
    /// `n·ε`, in modulation periods.
    pub cumulative_shift_periods: f64,
    /// `τ·ε` with `τ = n/Δf`, present when `ε` came from a redshift context.
    pub total_signal: Option<f64>,
}

/// Closed-form null shift after `n` modulation periods.
pub fn stacked_null_shift(n: u64, eps: f64, delta_f_hz: f64) -> Result<StackingReport> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    check_positive("delta_f_hz", delta_f_hz)?;
    Ok(StackingReport {
        n_periods: n,
        eps,
        per_period_shift_s: eps / delta_f_hz,
        cumulative_shift_periods: n as f64 * eps,
        total_signal: None,
    })
}

/// [`stacked_null_shift`] with `ε = g·Δh/c²`, also carrying the total signal
/// over the `n/Δf` seconds spanned.
pub fn stacked_null_shift_for(
    n: u64,
    ctx: &RedshiftContext,
    delta_f_hz: f64,
) -> Result<StackingReport> {
    let eps = redshift::redshift_factor(ctx);
    let mut report = stacked_null_shift(n, eps.to_f64(), delta_f_hz)?;
    let tau = n as f64 / delta_f_hz;
    report.total_signal = Some(total_signal(tau, ctx)?.to_f64());
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StackingVerification {
    /// `n·ε`, in periods.
    pub predicted: f64,
    /// Delay accumulated between null 1 and null `n + 1`, in modulation
    /// periods of the shifted curve.
    pub simulated: f64,
    pub discrepancy: f64,
    /// Delay of the first null, periods. First order: `ε/2`.
    pub first_null_delay: f64,
    /// Null `n + 1` on the unshifted and shifted curves, seconds.
    pub null_unshifted_s: f64,
    pub null_shifted_s: f64,
}

/// Tracks nulls on simulated unshifted and shifted visibility curves in
/// dimensionless units and compares the delay stacked up over `n` modulation
/// periods (null 1 to null `n + 1`) with `n·ε`.
///
/// Nulls are counted from `t = 0`, so shifts beyond one period stay
/// unambiguous.
pub fn verify_stacking_by_simulation(
    eps: f64,
    delta_f_hz: f64,
    n: usize,
) -> Result<StackingVerification> {
    check_positive("delta_f_hz", delta_f_hz)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let base = ClockFrequencies::new(delta_f_hz, 2.0 * delta_f_hz)?;
    let shifted = redshift::shift_frequencies_scaled(&base, eps)?;

    // Both curves need null n + 1 plus a quarter period of rise after it.
    let slowest_beat = delta_f_hz * (1.0 + eps.min(0.0));
    let t_end = (n as f64 + 1.25) / slowest_beat;
    let samples = ((t_end * delta_f_hz) * TRACKING_SAMPLES_PER_PERIOD as f64).ceil() as usize + 1;
    if samples > MAX_TRACKED_SAMPLES {
        return Err(Error::InsufficientSpan {
            span_periods: (MAX_TRACKED_SAMPLES / TRACKING_SAMPLES_PER_PERIOD) as f64,
            required: n as f64,
        });
    }
    let dt = t_end / (samples - 1) as f64;
    let grid: Vec<f64> = (0..samples).map(|i| i as f64 * dt).collect();

    let track = |freqs: ClockFrequencies| -> Result<(f64, f64)> {
        let template = RamseySequence::new(Preparation::Tripod, 0.0, freqs)?;
        let curve = sequence::visibility_curve(&template, &grid, TRACKING_PHASES)?;
        let nulls = fringe::find_nulls(&curve, n + 1)?;
        let times = nulls.require_all()?;
        Ok((times[0], times[n]))
    };
    let (a, b) = rayon::join(|| track(base), || track(shifted));
    let ((first_u, last_u), (first_s, last_s)) = (a?, b?);
    let shifted_beat = shifted.beat_hz();
    let first_null_delay = (first_u - first_s) * shifted_beat;
    let simulated = (last_u - last_s) * shifted_beat - first_null_delay;
    let predicted = n as f64 * eps;
    Ok(StackingVerification {
        predicted,
        simulated,
        discrepancy: simulated - predicted,
        first_null_delay,
        null_unshifted_s: last_u,
        null_shifted_s: last_s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedStackingCheck {
    pub eps: f64,
    /// `ε` recovered from the ratio of the two runs' accumulated beat phase.
    pub eps_from_phase: f64,
    /// `ε` recovered from the delay of the last null before `τ`.
    pub eps_from_null: f64,
    /// Index of that null, counted from `t = 0`.
    pub null_index: u64,
    /// Delay of that null, seconds.
    pub null_shift_s: f64,
    /// `τ·ε`.
    pub total_signal: f64,
    pub relative_error: f64,
}

/// Physical-scale check in double-word arithmetic: two runs of length `τ`
/// with clock frequencies `freqs` and `freqs·(1 + ε)`.
///
/// Each run's beat phase is the difference of the two arms' accumulated
/// optical phases, so the `10⁻¹⁶` effect is read from quantities of order
/// `10¹⁵` cycles.
pub fn verify_stacking_extended(
    freqs: &ClockFrequencies,
    eps: DoubleWord,
    tau_s: f64,
) -> Result<ExtendedStackingCheck> {
    check_positive("tau_s", tau_s)?;
    let shifted = redshift::shift_frequencies(freqs, eps)?;
    let tau = DoubleWord::from_f64(tau_s);

    let beat_phase = |f: &ClockFrequencies| {
        let arm1 = ExtendedPhase::accumulated(f.f1(), tau);
        let arm2 = ExtendedPhase::accumulated(f.f2(), tau);
        (arm2 - arm1).cycles()
    };
    let cycles_ref = beat_phase(freqs);
    let cycles_shift = beat_phase(&shifted);
    let eps_from_phase = (cycles_shift / cycles_ref - DoubleWord::ONE).to_f64();

    // Null m sits where the beat phase reaches m − ½ cycles.
    let beat_ref = cycles_ref / tau;
    let beat_shift = cycles_shift / tau;
    let (whole, _) = (cycles_ref.add_f64(0.5)).split_integer();
    let m = whole.to_f64();
    if m < 1.0 {
        return Err(Error::InsufficientSpan {
            span_periods: cycles_ref.to_f64(),
            required: 0.5,
        });
    }
    let k = DoubleWord::from_f64(m - 0.5);
    let t_ref = k / beat_ref;
    let t_shift = k / beat_shift;
    let delay = t_ref - t_shift;
    let eps_from_null = (delay / t_shift).to_f64();
    let e = eps.to_f64();
    Ok(ExtendedStackingCheck {
        eps: e,
        eps_from_phase,
        eps_from_null,
        null_index: m as u64,
        null_shift_s: delay.to_f64(),
        total_signal: eps.mul_f64(tau_s).to_f64(),
        relative_error: if e != 0.0 {
            ((eps_from_null - e) / e).abs().max(((eps_from_phase - e) / e).abs())
        } else {
            eps_from_null.abs().max(eps_from_phase.abs())
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gain_is_product() {
        assert_eq!(stacking_gain(1.0, 1000.0).unwrap(), 1000.0);
        assert_eq!(stacking_gain(1.0, 1.0).unwrap(), 1.0);
        assert!(stacking_gain(0.0, 1.0).is_err());
        assert!(stacking_gain(1.0, -1.0).is_err());
    }

    #[test]
    fn gain_times_per_period_shift_is_total_signal() {
        let ctx = RedshiftContext::new(9.8, 1.0).unwrap();
        let (tau, df) = (1.0, 1e9);
        let eps = redshift::redshift_factor(&ctx);
        let gain = DoubleWord::from_f64(stacking_gain(tau, df).unwrap());
        let per_period = eps / DoubleWord::from_f64(df);
        let total = total_signal(tau, &ctx).unwrap();
        let rel = ((gain * per_period - total) / total).abs().to_f64();
        assert!(rel < 1e-30, "{rel:e}");
    }

    #[test]
    fn total_signal_values() {
        let one = total_signal(1.0, &RedshiftContext::new(9.8, 1.0).unwrap()).unwrap();
        assert_eq!(format!("{:.1e}", one.to_f64()), "1.1e-16");
        let ten = total_signal(10.0, &RedshiftContext::new(9.8, 1.0).unwrap()).unwrap();
        assert_eq!(format!("{:.1e}", ten.to_f64()), "1.1e-15");
        assert_abs_diff_eq!(ten.to_f64(), 10.0 * one.to_f64(), epsilon = 1e-30);
        let flat = total_signal(1.0, &RedshiftContext::new(9.8, 0.0).unwrap()).unwrap();
        assert_eq!(flat.to_f64(), 0.0);
    }

    #[test]
    fn closed_form_shift() {
        let r = stacked_null_shift(1000, 4e-4, 1.0).unwrap();
        assert_abs_diff_eq!(r.cumulative_shift_periods, 0.4, epsilon = 1e-12);
        let r1 = stacked_null_shift(1, 4e-4, 1.0).unwrap();
        assert_abs_diff_eq!(r1.cumulative_shift_periods, 4e-4, epsilon = 1e-18);
        let wrap = stacked_null_shift(2500, 4e-4, 1.0).unwrap();
        assert_abs_diff_eq!(wrap.cumulative_shift_periods, 1.0, epsilon = 1e-12);
        assert!(stacked_null_shift(0, 4e-4, 1.0).is_err());
    }

    #[test]
    fn report_from_context_carries_signal() {
        let ctx = RedshiftContext::new(9.8, 1.0).unwrap();
        let r = stacked_null_shift_for(1_000_000_000, &ctx, 1e9).unwrap();
        let s = r.total_signal.unwrap();
        assert!((s - 1.090_397_054_932_546e-16).abs() < 1e-28);
    }

    #[test]
    fn zero_shift_simulation_agrees() {
        let v = verify_stacking_by_simulation(0.0, 1.0, 20).unwrap();
        assert_abs_diff_eq!(v.discrepancy, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn short_stack_simulation() {
        let v = verify_stacking_by_simulation(1e-2, 1.0, 30).unwrap();
        assert!(v.discrepancy.abs() < NULL_TRACKING_TOLERANCE, "{v:?}");
    }

    #[test]
    fn extended_path_recovers_tiny_shift() {
        let freqs = ClockFrequencies::new(429e12, 429e12 + 1e9).unwrap();
        let eps = redshift::redshift_factor(&RedshiftContext::new(9.8, 1.0).unwrap());
        let chk = verify_stacking_extended(&freqs, eps, 1.0).unwrap();
        assert!(chk.relative_error < 1e-2, "{chk:?}");
        assert_eq!(chk.null_index, 1_000_000_000);
    }
}
