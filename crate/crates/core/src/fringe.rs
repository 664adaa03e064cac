//! Fringe fitting, visibility metrics, null location and beat estimation.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::{self, LmOptions, Residuals};
use crate::qutrit::{ClockFrequencies, Level};
use crate::sequence::{FringeDataset, VisibilityCurve};

/// Phase scans shorter than this cannot pin down offset, amplitude and phase
/// with any redundancy.
pub const MIN_FRINGE_POINTS: usize = 8;

/// Upper clamp for amplitude-normalized visibility.
pub const VISIBILITY_CLAMP: f64 = 1.0 + 1e-6;

/// Half-width of the null refinement window, in modulation periods.
pub const NULL_WINDOW_PERIODS: f64 = 0.2;

/// `offset + amplitude·cos(φ − phase0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase0: f64,
    pub rms_residual: f64,
}

impl FringeFit {
    pub fn eval(&self, phase: f64) -> f64 {
        self.offset + self.amplitude * (phase - self.phase0).cos()
    }

    /// Fitted curve maximum and minimum, clipped to `[0, 1]`.
    pub fn extrema(&self) -> (f64, f64) {
        (
            (self.offset + self.amplitude).min(1.0),
            (self.offset - self.amplitude).max(0.0),
        )
    }
}

fn check_distinct(phases: &[f64]) -> Result<()> {
    let mut sorted: Vec<f64> = phases.iter().map(|p| p.rem_euclid(TAU)).collect();
    sorted.sort_by(f64::total_cmp);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
    let dup = sorted.windows(2).any(|w| close(w[0], w[1]))
        || (sorted.len() > 1 && close(sorted[0] + TAU, sorted[sorted.len() - 1]));
    if dup {
        Err(Error::RankDeficient)
    } else {
        Ok(())
    }
}

/// Linear least squares of `a + b·cos φ + c·sin φ` on raw samples.
pub fn fit_harmonic(phases: &[f64], values: &[f64]) -> Result<FringeFit> {
    if phases.len() != values.len() {
        return Err(Error::InvalidArgument(format!(
            "{} phases but {} values",
            phases.len(),
            values.len()
        )));
    }
    if phases.len() < MIN_FRINGE_POINTS {
        return Err(Error::TooFewPhases {
            got: phases.len(),
            min: MIN_FRINGE_POINTS,
        });
    }
    check_distinct(phases)?;
    let n = phases.len();
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => phases[i].cos(),
        _ => phases[i].sin(),
    });
    let y = DVector::from_column_slice(values);
    let x = lsq::linear_least_squares(&design, &y)?;
    let (a, b, c) = (x[0], x[1], x[2]);
    let resid = &design * &x - &y;
    Ok(FringeFit {
        offset: a,
        amplitude: b.hypot(c),
        phase0: c.atan2(b),
        rms_residual: (resid.norm_squared() / n as f64).sqrt(),
    })
}

/// Fits the single-harmonic fringe of one output channel.
pub fn fit_fringe(data: &FringeDataset, channel: Level) -> Result<FringeFit> {
    fit_harmonic(&data.phases(), &data.channel(channel))
}

/// Fringe amplitude over the reference (t = 0) amplitude, clamped to
/// `[0, 1 + 10⁻⁶]`.
pub fn visibility_amp(fit: &FringeFit, reference_amplitude: f64) -> Result<f64> {
    if !(reference_amplitude > 0.0 && reference_amplitude.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "reference amplitude must be positive, got {reference_amplitude}"
        )));
    }
    Ok((fit.amplitude / reference_amplitude).clamp(0.0, VISIBILITY_CLAMP))
}

/// Michelson contrast `(P_max − P_min)/(P_max + P_min)` of the fitted curve.
pub fn visibility_minmax(data: &FringeDataset, channel: Level) -> Result<f64> {
    Ok(minmax_from_fit(&fit_fringe(data, channel)?))
}

pub fn minmax_from_fit(fit: &FringeFit) -> f64 {
    let (hi, lo) = fit.extrema();
    if hi + lo > 0.0 {
        ((hi - lo) / (hi + lo)).max(0.0)
    } else {
        0.0
    }
}

/// Two-path reference model of the ground-state population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBeatModel {
    delta_f_hz: f64,
    carrier_hz: f64,
}

impl AnalyticBeatModel {
    pub fn new(delta_f_hz: f64, carrier_hz: f64) -> Result<Self> {
        if !(delta_f_hz > 0.0 && delta_f_hz.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "beat frequency must be positive, got {delta_f_hz}"
            )));
        }
        Ok(Self {
            delta_f_hz,
            carrier_hz,
        })
    }

    /// Beat `f2 − f1`, carrier at the mean clock frequency.
    pub fn from_frequencies(freqs: &ClockFrequencies) -> Self {
        Self {
            delta_f_hz: freqs.beat_hz(),
            carrier_hz: freqs.mean_hz(),
        }
    }

    pub fn delta_f_hz(&self) -> f64 {
        self.delta_f_hz
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    /// `|cos(π·Δf·t)|`.
    pub fn visibility(&self, t: f64) -> f64 {
        (PI * self.delta_f_hz * t).cos().abs()
    }

    /// Population with the carrier phase taken as `2π·carrier·t`.
    pub fn population_with_carrier(&self, t: f64) -> f64 {
        analytic_population(t, self, TAU * self.carrier_hz * t)
    }
}

/// `½·[1 + cos(π·Δf·t)·cos(phase)]`.
pub fn analytic_population(t: f64, model: &AnalyticBeatModel, phase: f64) -> f64 {
    0.5 * (1.0 + (PI * model.delta_f_hz * t).cos() * phase.cos())
}

/// Nulls located by [`find_nulls`]. `times` may be shorter than
/// `requested`; missing nulls are never invented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSearch {
    pub times: Vec<f64>,
    pub requested: usize,
    /// Period estimate used to size the refinement windows.
    pub period_estimate: Option<f64>,
}

impl NullSearch {
    pub fn is_complete(&self) -> bool {
        self.times.len() >= self.requested
    }

    /// Errors unless `requested` nulls were found.
    pub fn require_all(&self) -> Result<&[f64]> {
        if self.is_complete() {
            Ok(&self.times)
        } else {
            Err(Error::TooFewNulls {
                found: self.times.len(),
                requested: self.requested,
            })
        }
    }
}

/// Indices of sampled troughs, one per genuine null. Candidates not
/// separated by a real peak (at least twice the deeper trough) are merged.
fn trough_indices(v: &[f64]) -> Vec<usize> {
    let n = v.len();
    let mut kept: Vec<usize> = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(v[i] <= v[i - 1] && v[i] < v[i + 1]) {
            continue;
        }
        match kept.last().copied() {
            None => {
                let rise = v[..i].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if rise > 2.0 * v[i] {
                    kept.push(i);
                }
            }
            Some(k) => {
                let peak = v[k..=i].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if peak > 2.0 * v[k].max(v[i]) {
                    kept.push(i);
                } else if v[i] < v[k] {
                    *kept.last_mut().unwrap() = i;
                }
            }
        }
    }
    // A trough at the end needs a rise after it as well.
    if let Some(&k) = kept.last() {
        let after = v[k..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if after <= 2.0 * v[k] {
            kept.pop();
        }
    }
    kept
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

fn period_from_troughs(t: &[f64], v: &[f64], troughs: &[usize]) -> Option<f64> {
    match troughs.len() {
        0 => None,
        1 => {
            // Half a period separates a null from the neighbouring peak.
            let k = troughs[0];
            let (before, after) = (&v[..k], &v[k + 1..]);
            let arg_max = |s: &[f64], off: usize| {
                s.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i + off)
            };
            let mut halves = Vec::new();
            if let Some(i) = arg_max(before, 0) {
                halves.push(t[k] - t[i]);
            }
            if let Some(i) = arg_max(after, k + 1) {
                halves.push(t[i] - t[k]);
            }
            halves
                .into_iter()
                .filter(|h| *h > 0.0)
                .min_by(f64::total_cmp)
                .map(|h| 2.0 * h)
        }
        _ => Some(median(
            troughs.windows(2).map(|w| t[w[1]] - t[w[0]]).collect(),
        )),
    }
}

/// Squared visibility near a null: `(A + B·(t − t_c))·sin²(π f (t − t_n))`.
/// Squaring removes the kink of `|sin|` at the null. Parameters are
/// `[A, t_n]`, then `B` if `with_slope`, then `f` unless it is held fixed.
struct NullModel<'a> {
    t: &'a [f64],
    y: &'a [f64],
    center: f64,
    with_slope: bool,
    fixed_f: Option<f64>,
}

impl NullModel<'_> {
    fn unpack(&self, p: &[f64]) -> (f64, f64, f64, f64) {
        let slope = if self.with_slope { p[2] } else { 0.0 };
        let f = self.fixed_f.unwrap_or_else(|| p[p.len() - 1]);
        (p[0], p[1], slope, f)
    }
}

impl Residuals for NullModel<'_> {
    fn n_params(&self) -> usize {
        2 + self.with_slope as usize + self.fixed_f.is_none() as usize
    }

    fn n_points(&self) -> usize {
        self.t.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        let (amp, tn, slope, f) = self.unpack(p);
        for (i, &t) in self.t.iter().enumerate() {
            let env = amp + slope * (t - self.center);
            out[i] = env * (PI * f * (t - tn)).sin().powi(2) - self.y[i];
        }
    }

    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        let (amp, tn, slope, f) = self.unpack(p);
        let last = self.n_params() - 1;
        for (i, &t) in self.t.iter().enumerate() {
            let env = amp + slope * (t - self.center);
            let (s, c) = (PI * f * (t - tn)).sin_cos();
            let (s2, ds2) = (s * s, 2.0 * s * c);
            jac[(i, 0)] = s2;
            jac[(i, 1)] = -env * ds2 * PI * f;
            if self.with_slope {
                jac[(i, 2)] = (t - self.center) * s2;
            }
            if self.fixed_f.is_none() {
                jac[(i, last)] = env * ds2 * PI * (t - tn);
            }
        }
    }
}

/// Vertex of the parabola through three points.
fn parabola_vertex(t: [f64; 3], y: [f64; 3]) -> Option<f64> {
    let d1 = (y[1] - y[0]) / (t[1] - t[0]);
    let d2 = (y[2] - y[1]) / (t[2] - t[1]);
    let a = (d2 - d1) / (t[2] - t[0]);
    if a > 0.0 {
        Some(0.5 * (t[0] + t[1]) - d1 / (2.0 * a))
    } else {
        None
    }
}

fn refine_null(t: &[f64], v: &[f64], k: usize, period: f64) -> Result<f64> {
    let half = NULL_WINDOW_PERIODS * period;
    let lo = t.partition_point(|&x| x < t[k] - half);
    let hi = t.partition_point(|&x| x <= t[k] + half);
    let (tw, vw) = (&t[lo..hi], &v[lo..hi]);
    let y: Vec<f64> = vw.iter().map(|x| x * x).collect();

    let mut tn0 = t[k];
    if k > 0 && k + 1 < t.len() {
        let yy = [v[k - 1].powi(2), v[k].powi(2), v[k + 1].powi(2)];
        if let Some(x) = parabola_vertex([t[k - 1], t[k], t[k + 1]], yy) {
            if (x - t[k]).abs() < t[k + 1] - t[k - 1] {
                tn0 = x;
            }
        }
    }
    let f0 = 1.0 / period;
    // Amplitude from the point that sits furthest up the flank.
    let (i_far, _) = tw
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, (PI * f0 * (x - tn0)).sin().powi(2)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::InvalidArgument("empty null window".into()))?;
    let s2 = (PI * f0 * (tw[i_far] - tn0)).sin().powi(2);
    let a0 = if s2 > 0.0 { y[i_far] / s2 } else { 1.0 };

    if tw.len() < 3 {
        return Ok(tn0);
    }
    let with_slope = tw.len() >= 6;
    let fit = |fixed_f: Option<f64>| -> Result<Option<f64>> {
        let model = NullModel {
            t: tw,
            y: &y,
            center: t[k],
            with_slope,
            fixed_f,
        };
        let mut p0 = vec![a0, tn0];
        if with_slope {
            p0.push(0.0);
        }
        if fixed_f.is_none() {
            p0.push(f0);
        }
        let sol = match lsq::levenberg_marquardt(&model, &p0, &LmOptions::default()) {
            Ok(sol) => sol,
            Err(Error::NonConvergence { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let (_, tn, _, f) = model.unpack(&sol.params);
        let sane = tn.is_finite() && (tn - t[k]).abs() <= half && (f / f0 - 1.0).abs() < 0.25;
        Ok(sane.then_some(tn))
    };
    // With noisy data the local curvature cannot separate A from f, and the
    // free fit can run off along that valley; then hold f at the global
    // estimate.
    if let Some(tn) = fit(None)? {
        return Ok(tn);
    }
    fit(Some(f0))?.ok_or(Error::NonConvergence {
        iterations: LmOptions::default().max_iterations,
        cost: f64::NAN,
        last_step: f64::NAN,
    })
}

/// Locates up to `max_count` visibility nulls in time order, counting from
/// the start of the curve. Each sampled trough is refined by a local fit of
/// `cos²(π·Δf·(t − t₀))` to the squared visibility over ±20 % of a
/// modulation period.
pub fn find_nulls(curve: &VisibilityCurve, max_count: usize) -> Result<NullSearch> {
    let t = curve.times();
    let v = curve.visibilities();
    if t.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 curve points, got {}",
            t.len()
        )));
    }
    let troughs = trough_indices(&v);
    let Some(period) = period_from_troughs(&t, &v, &troughs) else {
        return Ok(NullSearch {
            times: Vec::new(),
            requested: max_count,
            period_estimate: None,
        });
    };
    let spacing = median(t.windows(2).map(|w| w[1] - w[0]).collect());
    if period / spacing < 7.99 {
        return Err(Error::InvalidArgument(format!(
            "curve has {:.2} samples per modulation period, at least 8 required",
            period / spacing
        )));
    }
    let times = troughs
        .iter()
        .take(max_count)
        .map(|&k| refine_null(&t, &v, k, period))
        .collect::<Result<Vec<_>>>()?;
    Ok(NullSearch {
        times,
        requested: max_count,
        period_estimate: Some(period),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatEstimate {
    pub delta_f_hz: f64,
    pub stderr: f64,
    /// Fitted coherence time; `None` when the decay was held at zero.
    pub tau_s: Option<f64>,
    pub tau_stderr: Option<f64>,
    pub rms_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatFitOptions {
    /// Fit the exponential envelope `e^{−t/τ}`; otherwise τ = ∞.
    pub fit_decay: bool,
    pub max_iterations: usize,
}

impl Default for BeatFitOptions {
    fn default() -> Self {
        Self {
            fit_decay: false,
            max_iterations: 200,
        }
    }
}

/// `|cos(π f t)|·e^{−γ t}`.
struct BeatModel<'a> {
    t: &'a [f64],
    v: &'a [f64],
    fit_decay: bool,
}

impl Residuals for BeatModel<'_> {
    fn n_params(&self) -> usize {
        if self.fit_decay {
            2
        } else {
            1
        }
    }

    fn n_points(&self) -> usize {
        self.t.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        let gamma = if self.fit_decay { p[1] } else { 0.0 };
        for (i, &t) in self.t.iter().enumerate() {
            out[i] = (PI * p[0] * t).cos().abs() * (-gamma * t).exp() - self.v[i];
        }
    }

    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        let gamma = if self.fit_decay { p[1] } else { 0.0 };
        for (i, &t) in self.t.iter().enumerate() {
            let (s, c) = (PI * p[0] * t).sin_cos();
            let env = (-gamma * t).exp();
            let sign = if c > 0.0 {
                1.0
            } else if c < 0.0 {
                -1.0
            } else {
                0.0
            };
            jac[(i, 0)] = -sign * s * PI * t * env;
            if self.fit_decay {
                jac[(i, 1)] = -t * c.abs() * env;
            }
        }
    }
}

/// Coarse beat frequency from the spacing of the sampled troughs.
pub fn initial_beat_guess(curve: &VisibilityCurve) -> Option<f64> {
    let t = curve.times();
    let v = curve.visibilities();
    let troughs = trough_indices(&v);
    if troughs.len() >= 2 {
        let first = t[troughs[0]];
        let last = t[*troughs.last().unwrap()];
        Some((troughs.len() - 1) as f64 / (last - first))
    } else {
        period_from_troughs(&t, &v, &troughs).map(|p| 1.0 / p)
    }
}

/// Nonlinear least-squares estimate of `Δf` from a visibility curve, with a
/// heteroscedasticity-consistent standard error.
pub fn estimate_beat(curve: &VisibilityCurve, opts: &BeatFitOptions) -> Result<BeatEstimate> {
    let t = curve.times();
    let v = curve.visibilities();
    let f0 = initial_beat_guess(curve).ok_or(Error::InsufficientSpan {
        span_periods: 0.0,
        required: 2.0,
    })?;
    let span = t[t.len() - 1] - t[0];
    if span * f0 < 2.0 * (1.0 - 1e-3) {
        return Err(Error::InsufficientSpan {
            span_periods: span * f0,
            required: 2.0,
        });
    }

    let model = BeatModel {
        t: &t,
        v: &v,
        fit_decay: opts.fit_decay,
    };
    // Scan ±5 % around the trough estimate before handing over to LM;
    // |cos| has side minima at harmonics of the true beat.
    let cost_at = |f: f64| -> f64 {
        t.iter()
            .zip(v.iter())
            .map(|(&x, &y)| ((PI * f * x).cos().abs() - y).powi(2))
            .sum()
    };
    let steps = 400;
    let best = (0..=steps)
        .map(|i| f0 * (0.95 + 0.1 * i as f64 / steps as f64))
        .min_by(|a, b| cost_at(*a).total_cmp(&cost_at(*b)))
        .unwrap_or(f0);

    let mut p0 = vec![best];
    if opts.fit_decay {
        p0.push(0.0);
    }
    let lm = LmOptions {
        max_iterations: opts.max_iterations,
        ..LmOptions::default()
    };
    let sol = lsq::levenberg_marquardt(&model, &p0, &lm)?;
    let cov = sol.sandwich_covariance();
    let stderr = cov.as_ref().map_or(f64::NAN, |c| c[(0, 0)].max(0.0).sqrt());
    let (tau_s, tau_stderr) = if opts.fit_decay {
        let gamma = sol.params[1];
        let g_err = cov.as_ref().map_or(f64::NAN, |c| c[(1, 1)].max(0.0).sqrt());
        let tau = if gamma > 0.0 { 1.0 / gamma } else { f64::INFINITY };
        (Some(tau), Some(g_err * tau * tau))
    } else {
        (None, None)
    };
    Ok(BeatEstimate {
        delta_f_hz: sol.params[0],
        stderr,
        tau_s,
        tau_stderr,
        rms_residual: (2.0 * sol.cost / t.len() as f64).sqrt(),
        iterations: sol.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn synthetic(n: usize, f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        let ph: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
        let y = ph.iter().map(|&p| f(p)).collect();
        (ph, y)
    }

    #[test]
    fn recovers_generated_harmonic() {
        let (ph, y) = synthetic(64, |p| 0.4 + 0.3 * (p - 1.0).cos());
        let fit = fit_harmonic(&ph, &y).unwrap();
        assert_abs_diff_eq!(fit.offset, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.amplitude, 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.phase0, 1.0, epsilon = 1e-12);
        assert!(fit.rms_residual < 1e-12);
    }

    #[test]
    fn constant_has_zero_amplitude() {
        let (ph, y) = synthetic(16, |_| 0.5);
        let fit = fit_harmonic(&ph, &y).unwrap();
        assert_abs_diff_eq!(fit.amplitude, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.offset, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn duplicate_phases_rejected() {
        let mut ph: Vec<f64> = (0..8).map(|k| k as f64 * 0.5).collect();
        ph[3] = ph[2];
        let y = vec![0.5; 8];
        assert_eq!(fit_harmonic(&ph, &y), Err(Error::RankDeficient));
        // 0 and 2π are the same point on the circle
        let mut ph: Vec<f64> = (0..8).map(|k| k as f64 * 0.5).collect();
        ph[7] = TAU;
        assert_eq!(fit_harmonic(&ph, &y), Err(Error::RankDeficient));
    }

    #[test]
    fn too_few_points_rejected() {
        let (ph, y) = synthetic(7, |p| p.cos());
        assert!(matches!(
            fit_harmonic(&ph, &y),
            Err(Error::TooFewPhases { got: 7, .. })
        ));
    }

    #[test]
    fn visibility_amp_values() {
        let fit = |a| FringeFit {
            offset: 0.5,
            amplitude: a,
            phase0: 0.0,
            rms_residual: 0.0,
        };
        assert_eq!(visibility_amp(&fit(0.5), 0.5).unwrap(), 1.0);
        assert_eq!(visibility_amp(&fit(0.0), 0.5).unwrap(), 0.0);
        assert_eq!(visibility_amp(&fit(0.9), 0.5).unwrap(), VISIBILITY_CLAMP);
        assert!(visibility_amp(&fit(0.1), 0.0).is_err());
    }

    #[test]
    fn minmax_from_offset_law() {
        // tripod model: offset (1 + c²)/4, amplitude c/2
        for (c, expected) in [(1.0, 1.0), (0.0, 0.0), (0.5, 0.8)] {
            let fit = FringeFit {
                offset: (1.0 + c * c) / 4.0,
                amplitude: c / 2.0,
                phase0: 0.3,
                rms_residual: 0.0,
            };
            assert_abs_diff_eq!(minmax_from_fit(&fit), expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn analytic_population_values() {
        let m = AnalyticBeatModel::new(2.0, 100.0).unwrap();
        assert_eq!(analytic_population(0.0, &m, 0.0), 1.0);
        assert_abs_diff_eq!(analytic_population(0.25, &m, 0.7), 0.5, epsilon = 1e-15);
        // revival at t = 1/Δf: cos(π·Δf·t) = −1 inverts the fringe
        assert_abs_diff_eq!(analytic_population(0.5, &m, 0.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(analytic_population(0.5, &m, PI), 1.0, epsilon = 1e-15);
        assert!(AnalyticBeatModel::new(0.0, 1.0).is_err());
    }

    fn overlap_curve(df: f64, t_end: f64, n: usize) -> VisibilityCurve {
        let t: Vec<f64> = (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect();
        let v = t.iter().map(|&x| (PI * df * x).cos().abs()).collect::<Vec<_>>();
        VisibilityCurve::from_samples(&t, &v).unwrap()
    }

    #[test]
    fn nulls_of_unit_beat() {
        let curve = overlap_curve(1.0, 3.0, 301);
        let nulls = find_nulls(&curve, 3).unwrap();
        assert!(nulls.is_complete());
        for (got, want) in nulls.times.iter().zip([0.5, 1.5, 2.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-9);
        }
    }

    #[test]
    fn nulls_off_grid() {
        // Nulls fall between samples.
        let curve = overlap_curve(1.037, 4.0, 97);
        let nulls = find_nulls(&curve, 10).unwrap();
        assert!(!nulls.is_complete());
        assert_eq!(nulls.times.len(), 4);
        for (k, got) in nulls.times.iter().enumerate() {
            assert_abs_diff_eq!(*got, (k as f64 + 0.5) / 1.037, epsilon = 1e-9);
        }
        assert!(nulls.require_all().is_err());
    }

    #[test]
    fn flat_curve_has_no_nulls() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let curve = VisibilityCurve::from_samples(&t, &vec![1.0; 50]).unwrap();
        let nulls = find_nulls(&curve, 3).unwrap();
        assert!(nulls.times.is_empty());
    }

    #[test]
    fn undersampled_curve_rejected() {
        let curve = overlap_curve(1.0, 6.0, 31);
        assert!(find_nulls(&curve, 3).is_err());
    }

    #[test]
    fn beat_recovered_noiseless() {
        let curve = overlap_curve(1.0, 3.0, 601);
        let est = estimate_beat(&curve, &BeatFitOptions::default()).unwrap();
        assert!((est.delta_f_hz - 1.0).abs() < 1e-9);
    }

    #[test]
    fn beat_and_decay_recovered() {
        let t: Vec<f64> = (0..800).map(|i| i as f64 * 0.01).collect();
        let v: Vec<f64> = t
            .iter()
            .map(|&x| (PI * 0.8 * x).cos().abs() * (-x / 5.0).exp())
            .collect();
        let curve = VisibilityCurve::from_samples(&t, &v).unwrap();
        let opts = BeatFitOptions {
            fit_decay: true,
            ..Default::default()
        };
        let est = estimate_beat(&curve, &opts).unwrap();
        assert!((est.delta_f_hz - 0.8).abs() < 1e-9);
        assert!((est.tau_s.unwrap() - 5.0).abs() < 1e-7);
    }

    #[test]
    fn short_curve_rejected() {
        let curve = overlap_curve(1.0, 1.2, 121);
        assert!(matches!(
            estimate_beat(&curve, &BeatFitOptions::default()),
            Err(Error::InsufficientSpan { .. })
        ));
    }
}
