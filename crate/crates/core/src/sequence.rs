//! Ramsey sequences on the qutrit: prepare, precess, close with a scanned
//! phase, read out.
//!
//! The closing pulses are the exact inverse of the preparation, applied in
//! reverse order, with one extra drive phase `φ` common to both fields. At
//! zero interrogation time and `φ = 0` every atom returns to `|g⟩`.
//!
//! Scanning `φ` at fixed interrogation time stands in for scanning time
//! through the optical carrier: the carrier phase `2π·f̄·t` ends up in the
//! fitted fringe phase.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fringe::{self, FringeFit, MIN_FRINGE_POINTS};
use crate::noise::{self, NoiseConfig};
use crate::numerics::DoubleWord;
use crate::qutrit::{
    self, apply_arm_phases, arm_phases, ClockFrequencies, DensityMatrix3, Level, Populations,
    PulseSpec, QutritState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preparation {
    /// Populations `(½, ¼, ¼)`.
    #[default]
    Tripod,
    /// Two π/2 pulses, populations `(¼, ½, ¼)`.
    DoublePiHalf,
}

impl Preparation {
    pub fn pulses(self) -> [PulseSpec; 2] {
        match self {
            Preparation::Tripod => qutrit::tripod_pulses(),
            Preparation::DoublePiHalf => qutrit::double_pi_half_pulses(),
        }
    }

    /// Closing pulses for scan phase `phase`, in application order.
    pub fn closing_pulses(self, phase: f64) -> [PulseSpec; 2] {
        let [a, b] = self.pulses();
        [b.shifted(phase).inverse(), a.shifted(phase).inverse()]
    }

    pub fn prepare(self) -> QutritState {
        self.pulses()
            .iter()
            .fold(QutritState::ground(), |s, p| qutrit::apply_pulse_unchecked(&s, p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamseySequence {
    pub prep: Preparation,
    pub interrogation_s: f64,
    pub closing_phase: f64,
    pub freqs: ClockFrequencies,
}

impl RamseySequence {
    pub fn new(prep: Preparation, interrogation_s: f64, freqs: ClockFrequencies) -> Result<Self> {
        let seq = Self {
            prep,
            interrogation_s,
            closing_phase: 0.0,
            freqs,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn tripod(interrogation_s: f64, freqs: ClockFrequencies) -> Result<Self> {
        Self::new(Preparation::Tripod, interrogation_s, freqs)
    }

    pub fn with_interrogation(&self, interrogation_s: f64) -> Self {
        Self {
            interrogation_s,
            ..*self
        }
    }

    pub fn with_closing_phase(&self, closing_phase: f64) -> Self {
        Self {
            closing_phase,
            ..*self
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.interrogation_s >= 0.0 && self.interrogation_s.is_finite()) {
            return Err(Error::NegativeTime {
                what: "interrogation time",
                value: self.interrogation_s,
            });
        }
        if !self.closing_phase.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "closing phase must be finite, got {}",
                self.closing_phase
            )));
        }
        Ok(())
    }
}

/// Prepared and precessed state, before the closing pulses.
fn precessed(seq: &RamseySequence) -> QutritState {
    let (th1, th2) = arm_phases(&seq.freqs, DoubleWord::from_f64(seq.interrogation_s));
    apply_arm_phases(&seq.prep.prepare(), th1, th2)
}

fn close(state: &QutritState, prep: Preparation, phase: f64) -> QutritState {
    prep.closing_pulses(phase)
        .iter()
        .fold(*state, |s, p| qutrit::apply_pulse_unchecked(&s, p))
}

/// Noiseless output probabilities `(p_g, p_c1, p_c2)`.
pub fn run_sequence(seq: &RamseySequence) -> Result<[f64; 3]> {
    seq.validate()?;
    Ok(close(&precessed(seq), seq.prep, seq.closing_phase).populations())
}

/// Output probabilities with dephasing and clock decay acting during the
/// free evolution. Trap loss is not included; see
/// [`noise::trap_survival`].
pub fn run_sequence_decohered(seq: &RamseySequence, cfg: &NoiseConfig) -> Result<[f64; 3]> {
    seq.validate()?;
    let rho = DensityMatrix3::from_pure(&precessed(seq));
    let rho = noise::apply_decoherence(&rho, seq.interrogation_s, cfg);
    let rho = seq
        .prep
        .closing_pulses(seq.closing_phase)
        .iter()
        .fold(rho, |r, p| r.apply_pulse(p));
    Ok(rho.populations())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub phase_rad: f64,
    pub populations: [f64; 3],
}

/// Output populations across a closing-phase scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeDataset {
    interrogation_s: f64,
    points: Vec<FringePoint>,
    shot_counts: Option<Vec<[u64; 3]>>,
}

fn check_phases(points: &[FringePoint]) -> Result<()> {
    for p in points {
        if !(0.0..TAU).contains(&p.phase_rad) {
            return Err(Error::InvalidDataset(format!(
                "phase {} outside [0, 2π)",
                p.phase_rad
            )));
        }
    }
    if points.windows(2).any(|w| w[1].phase_rad <= w[0].phase_rad) {
        return Err(Error::InvalidDataset(
            "phases must be strictly increasing".into(),
        ));
    }
    Ok(())
}

impl FringeDataset {
    /// Exact-probability dataset; each triple must sum to 1 within 10⁻¹².
    pub fn new(interrogation_s: f64, points: Vec<FringePoint>) -> Result<Self> {
        check_phases(&points)?;
        for p in &points {
            let s: f64 = p.populations.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidDataset(format!(
                    "probabilities at phase {} sum to {s}",
                    p.phase_rad
                )));
            }
        }
        Ok(Self {
            interrogation_s,
            points,
            shot_counts: None,
        })
    }

    /// Shot-sampled dataset; populations are the observed frequencies.
    pub fn from_counts(interrogation_s: f64, phases: &[f64], counts: Vec<[u64; 3]>) -> Result<Self> {
        if phases.len() != counts.len() {
            return Err(Error::InvalidDataset(format!(
                "{} phases but {} count triples",
                phases.len(),
                counts.len()
            )));
        }
        let points: Vec<FringePoint> = phases
            .iter()
            .zip(counts.iter())
            .map(|(&phase_rad, c)| {
                let n = c.iter().sum::<u64>();
                let populations = if n == 0 {
                    [0.0; 3]
                } else {
                    c.map(|k| k as f64 / n as f64)
                };
                FringePoint {
                    phase_rad,
                    populations,
                }
            })
            .collect();
        check_phases(&points)?;
        Ok(Self {
            interrogation_s,
            points,
            shot_counts: Some(counts),
        })
    }

    pub fn interrogation_s(&self) -> f64 {
        self.interrogation_s
    }

    pub fn points(&self) -> &[FringePoint] {
        &self.points
    }

    pub fn shot_counts(&self) -> Option<&[[u64; 3]]> {
        self.shot_counts.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.phase_rad).collect()
    }

    pub fn channel(&self, level: Level) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.populations[level.index()])
            .collect()
    }
}

/// `n` equally spaced phases on `[0, 2π)`, starting at 0.
pub fn scan_phases(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

fn check_scan(n_phases: usize) -> Result<()> {
    if n_phases < MIN_FRINGE_POINTS {
        return Err(Error::TooFewPhases {
            got: n_phases,
            min: MIN_FRINGE_POINTS,
        });
    }
    Ok(())
}

/// Noiseless fringe over `n_phases` closing phases.
pub fn phase_scan(seq: &RamseySequence, n_phases: usize) -> Result<FringeDataset> {
    check_scan(n_phases)?;
    seq.validate()?;
    let open = precessed(seq);
    let points = scan_phases(n_phases)
        .into_iter()
        .map(|phase_rad| FringePoint {
            phase_rad,
            populations: close(&open, seq.prep, phase_rad).populations(),
        })
        .collect();
    FringeDataset::new(seq.interrogation_s, points)
}

/// Fringe with dephasing and clock decay (no shot noise).
pub fn phase_scan_decohered(
    seq: &RamseySequence,
    n_phases: usize,
    cfg: &NoiseConfig,
) -> Result<FringeDataset> {
    check_scan(n_phases)?;
    let points = scan_phases(n_phases)
        .into_iter()
        .map(|phase_rad| {
            run_sequence_decohered(&seq.with_closing_phase(phase_rad), cfg).map(|populations| {
                FringePoint {
                    phase_rad,
                    populations,
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FringeDataset::new(seq.interrogation_s, points)
}

/// Fringe measured with `cfg.atoms_per_point()` atoms per phase. Point `k`
/// of replicate `r` draws from stream `(cfg.seed(), k, r)`.
pub fn phase_scan_sampled(
    seq: &RamseySequence,
    n_phases: usize,
    cfg: &NoiseConfig,
    replicate: u32,
) -> Result<FringeDataset> {
    let exact = if cfg.decoheres() {
        phase_scan_decohered(seq, n_phases, cfg)?
    } else {
        phase_scan(seq, n_phases)?
    };
    let counts = exact
        .points()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let mut rng = noise::shot_stream(cfg.seed(), k as u32, replicate);
            let n = noise::surviving_atoms(seq.interrogation_s, cfg, &mut rng);
            noise::sample_shots(p.populations, n, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    FringeDataset::from_counts(seq.interrogation_s, &exact.phases(), counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityPoint {
    pub t_s: f64,
    pub visibility: f64,
    pub fit_residual: f64,
}

/// Visibility against interrogation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityCurve {
    entries: Vec<VisibilityPoint>,
}

impl VisibilityCurve {
    /// Times must be strictly increasing and visibilities finite and
    /// non-negative. Curves built by [`visibility_curve`] also stay below
    /// `1 + 10⁻⁶`; externally supplied (noisy) curves may exceed 1.
    pub fn new(entries: Vec<VisibilityPoint>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDataset("empty visibility curve".into()));
        }
        if entries.windows(2).any(|w| w[1].t_s <= w[0].t_s) {
            return Err(Error::InvalidDataset(
                "times must be strictly increasing".into(),
            ));
        }
        if let Some(e) = entries
            .iter()
            .find(|e| !(e.visibility >= 0.0 && e.visibility.is_finite() && e.t_s.is_finite()))
        {
            return Err(Error::InvalidDataset(format!(
                "bad visibility {} at t = {}",
                e.visibility, e.t_s
            )));
        }
        Ok(Self { entries })
    }

    pub fn from_samples(t: &[f64], v: &[f64]) -> Result<Self> {
        if t.len() != v.len() {
            return Err(Error::InvalidDataset(format!(
                "{} times but {} visibilities",
                t.len(),
                v.len()
            )));
        }
        Self::new(
            t.iter()
                .zip(v)
                .map(|(&t_s, &visibility)| VisibilityPoint {
                    t_s,
                    visibility,
                    fit_residual: 0.0,
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[VisibilityPoint] {
        &self.entries
    }

    pub fn times(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.t_s).collect()
    }

    pub fn visibilities(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.visibility).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Ground-channel fringe amplitude of the noiseless sequence at `t = 0`.
pub fn reference_amplitude(template: &RamseySequence, n_phases: usize) -> Result<f64> {
    let data = phase_scan(&template.with_interrogation(0.0), n_phases)?;
    Ok(fringe::fit_fringe(&data, Level::Ground)?.amplitude)
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "time grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn curve_from<F>(t_grid: &[f64], reference: f64, scan: F) -> Result<VisibilityCurve>
where
    F: Fn(f64) -> Result<FringeDataset> + Sync,
{
    let entries = t_grid
        .par_iter()
        .map(|&t| {
            let at = |e: Error| Error::FitAt {
                t,
                source: Box::new(e),
            };
            let data = scan(t).map_err(at)?;
            let fit: FringeFit = fringe::fit_fringe(&data, Level::Ground).map_err(at)?;
            Ok(VisibilityPoint {
                t_s: t,
                visibility: fringe::visibility_amp(&fit, reference).map_err(at)?,
                fit_residual: fit.rms_residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    VisibilityCurve::new(entries)
}

/// Amplitude-normalized visibility at each time of `t_grid`.
pub fn visibility_curve(
    template: &RamseySequence,
    t_grid: &[f64],
    n_phases: usize,
) -> Result<VisibilityCurve> {
    check_grid(t_grid)?;
    let reference = reference_amplitude(template, n_phases)?;
    curve_from(t_grid, reference, |t| {
        phase_scan(&template.with_interrogation(t), n_phases)
    })
}

/// [`visibility_curve`] with dephasing and clock decay.
pub fn visibility_curve_decohered(
    template: &RamseySequence,
    t_grid: &[f64],
    n_phases: usize,
    cfg: &NoiseConfig,
) -> Result<VisibilityCurve> {
    check_grid(t_grid)?;
    let reference = reference_amplitude(template, n_phases)?;
    curve_from(t_grid, reference, |t| {
        phase_scan_decohered(&template.with_interrogation(t), n_phases, cfg)
    })
}

/// Visibility of one shot-sampled fringe, normalized by the noiseless
/// reference amplitude.
pub fn sampled_visibility(
    seq: &RamseySequence,
    n_phases: usize,
    cfg: &NoiseConfig,
    replicate: u32,
    reference: f64,
) -> Result<f64> {
    let data = phase_scan_sampled(seq, n_phases, cfg, replicate)?;
    let fit = fringe::fit_fringe(&data, Level::Ground)?;
    fringe::visibility_amp(&fit, reference)
}

/// [`sampled_visibility`] for replicates `0..replicates`, evaluated in
/// parallel. Results are in replicate order.
pub fn visibility_replicates(
    seq: &RamseySequence,
    n_phases: usize,
    cfg: &NoiseConfig,
    replicates: u32,
    reference: f64,
) -> Result<Vec<f64>> {
    (0..replicates)
        .into_par_iter()
        .map(|r| sampled_visibility(seq, n_phases, cfg, r, reference))
        .collect()
}

/// Mean and sample standard deviation.
pub fn mean_and_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qutrit::clock_overlap;
    use approx::assert_abs_diff_eq;

    fn freqs() -> ClockFrequencies {
        ClockFrequencies::new(1.0, 1.25).unwrap()
    }

    #[test]
    fn immediate_reversal_restores_ground() {
        let seq = RamseySequence::tripod(0.0, freqs()).unwrap();
        let p = run_sequence(&seq).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[2], 0.0, epsilon = 1e-15);

        let seq = RamseySequence::new(Preparation::DoublePiHalf, 0.0, freqs()).unwrap();
        assert_abs_diff_eq!(run_sequence(&seq).unwrap()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_time_fringe_closed_form() {
        // At t = 0 the ground amplitude is ⟨ψ₀|ψ₀ with arms rotated by φ⟩
        // = ½ + ½e^{−iφ}, so P_g = (1 + cos φ)/2.
        let seq = RamseySequence::tripod(0.0, freqs()).unwrap();
        let data = phase_scan(&seq, 64).unwrap();
        for p in data.points() {
            assert_abs_diff_eq!(p.populations[0], 0.5 * (1.0 + p.phase_rad.cos()), epsilon = 1e-12);
        }
    }

    #[test]
    fn orthogonal_clocks_flatten_fringe() {
        // Δf·t = ½
        let seq = RamseySequence::tripod(2.0, freqs()).unwrap();
        let data = phase_scan(&seq, 32).unwrap();
        let g = data.channel(Level::Ground);
        let first = g[0];
        for x in g {
            assert_abs_diff_eq!(x, first, epsilon = 1e-12);
        }
    }

    #[test]
    fn scan_mean_equals_offset() {
        let seq = RamseySequence::tripod(0.77, freqs()).unwrap();
        let data = phase_scan(&seq, 40).unwrap();
        let g = data.channel(Level::Ground);
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        let c = clock_overlap(&freqs(), 0.77);
        assert_abs_diff_eq!(mean, (1.0 + c * c) / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn scan_needs_eight_phases() {
        let seq = RamseySequence::tripod(0.0, freqs()).unwrap();
        assert!(matches!(phase_scan(&seq, 7), Err(Error::TooFewPhases { .. })));
        assert!(phase_scan(&seq, 8).is_ok());
    }

    #[test]
    fn negative_time_rejected() {
        assert!(RamseySequence::tripod(-1.0, freqs()).is_err());
        let seq = RamseySequence::tripod(0.0, freqs()).unwrap();
        assert!(run_sequence(&seq.with_interrogation(f64::NAN)).is_err());
    }

    #[test]
    fn decohered_path_matches_pure_without_channels() {
        let seq = RamseySequence::tripod(1.3, freqs())
            .unwrap()
            .with_closing_phase(0.4);
        let a = run_sequence(&seq).unwrap();
        let b = run_sequence_decohered(&seq, &NoiseConfig::default()).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(a[i], b[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn visibility_curve_at_origin() {
        let seq = RamseySequence::tripod(0.0, freqs()).unwrap();
        let curve = visibility_curve(&seq, &[0.0], 16).unwrap();
        assert_abs_diff_eq!(curve.entries()[0].visibility, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn grid_validation() {
        let seq = RamseySequence::tripod(0.0, freqs()).unwrap();
        assert!(visibility_curve(&seq, &[], 16).is_err());
        assert!(visibility_curve(&seq, &[0.0, 0.0], 16).is_err());
        let err = visibility_curve(&seq, &[-1.0], 16).unwrap_err();
        assert!(matches!(err, Error::FitAt { t, .. } if t == -1.0));
    }

    #[test]
    fn dataset_validation() {
        let good = FringePoint {
            phase_rad: 0.0,
            populations: [1.0, 0.0, 0.0],
        };
        let bad_sum = FringePoint {
            phase_rad: 1.0,
            populations: [0.5, 0.0, 0.0],
        };
        assert!(FringeDataset::new(0.0, vec![good, bad_sum]).is_err());
        assert!(FringeDataset::new(0.0, vec![good, good]).is_err());
        let out_of_range = FringePoint {
            phase_rad: TAU,
            ..good
        };
        assert!(FringeDataset::new(0.0, vec![out_of_range]).is_err());
    }

    #[test]
    fn sampled_scan_counts_sum_to_atoms() {
        let seq = RamseySequence::tripod(0.3, freqs()).unwrap();
        let cfg = NoiseConfig::shots(500, 9).unwrap();
        let data = phase_scan_sampled(&seq, 16, &cfg, 0).unwrap();
        for c in data.shot_counts().unwrap() {
            assert_eq!(c.iter().sum::<u64>(), 500);
        }
        let again = phase_scan_sampled(&seq, 16, &cfg, 0).unwrap();
        assert_eq!(data, again);
        let other = phase_scan_sampled(&seq, 16, &cfg, 1).unwrap();
        assert_ne!(data, other);
    }
}
