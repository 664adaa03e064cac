//! One pipeline per mode. Each returns its data tables and a JSON summary;
//! nothing here touches the filesystem.

use clockinterf::fringe::{self, BeatEstimate, BeatFitOptions, FringeFit};
use clockinterf::lsq;
use clockinterf::noise::{self, NoiseConfig};
use clockinterf::qutrit::{clock_overlap, ClockFrequencies, Level};
use clockinterf::redshift;
use clockinterf::sequence::{
    self, FringeDataset, RamseySequence, VisibilityCurve, VisibilityPoint,
};
use clockinterf::stacking;
use clockinterf::Error as CoreError;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Mode, Resolved, RunConfig, Units};
use crate::error::{stage, CliError};
use crate::output::{Cell, Table};

pub struct Outcome {
    pub tables: Vec<Table>,
    pub summary: Value,
}

pub fn dispatch(mode: Mode, cfg: &RunConfig, r: &Resolved) -> Result<Outcome, CliError> {
    match mode {
        Mode::Fringe => fringe_mode(cfg, r),
        Mode::Visibility => visibility_mode(cfg, r),
        Mode::RedshiftCompare => redshift_compare(cfg, r),
        Mode::Stack => stack_mode(cfg, r),
        Mode::Montecarlo => montecarlo(cfg, r),
    }
}

fn sampled(cfg: &RunConfig) -> bool {
    cfg.noise.atoms_per_point.is_some()
}

fn template(cfg: &RunConfig, freqs: ClockFrequencies) -> Result<RamseySequence, CliError> {
    RamseySequence::new(cfg.preparation, 0.0, freqs).map_err(stage("sequence"))
}

fn exact_scan(seq: &RamseySequence, n: usize, noise: &NoiseConfig) -> clockinterf::Result<FringeDataset> {
    if noise.decoheres() {
        sequence::phase_scan_decohered(seq, n, noise)
    } else {
        sequence::phase_scan(seq, n)
    }
}

fn fit_json(fit: &FringeFit) -> Value {
    json!({
        "offset": fit.offset,
        "amplitude": fit.amplitude,
        "phase0_rad": fit.phase0,
        "rms_residual": fit.rms_residual,
    })
}

fn beat_json(b: &BeatEstimate) -> Value {
    json!({
        "delta_f": b.delta_f_hz,
        "stderr": b.stderr,
        "tau_s": b.tau_s,
        "tau_stderr": b.tau_stderr,
        "rms_residual": b.rms_residual,
        "iterations": b.iterations,
    })
}

fn freqs_json(f: &ClockFrequencies) -> Value {
    json!({ "f1": f.f1_hz(), "f2": f.f2_hz(), "beat": f.beat_hz() })
}

fn fringe_mode(cfg: &RunConfig, r: &Resolved) -> Result<Outcome, CliError> {
    let base = template(cfg, r.freqs)?;
    let seq = base.with_interrogation(cfg.interrogation_s);
    let data = if sampled(cfg) {
        sequence::phase_scan_sampled(&seq, cfg.n_phases, &r.noise, 0)
    } else {
        exact_scan(&seq, cfg.n_phases, &r.noise)
    }
    .map_err(stage("sequence"))?;

    let mut columns = vec!["phase_rad", "p_g", "p_c1", "p_c2"];
    if sampled(cfg) {
        columns.extend(["n_g", "n_c1", "n_c2"]);
    }
    let mut table = Table::new("fringe", "fringe", &columns);
    for (k, p) in data.points().iter().enumerate() {
        let mut row = vec![Cell::Float(p.phase_rad)];
        row.extend(p.populations.iter().map(|&x| Cell::Float(x)));
        if let Some(counts) = data.shot_counts() {
            row.extend(counts[k].iter().map(|&n| Cell::Count(n)));
        }
        table.push(row);
    }

    let fit = fringe::fit_fringe(&data, Level::Ground).map_err(stage("fringe"))?;
    let reference = sequence::reference_amplitude(&base, cfg.n_phases).map_err(stage("sequence"))?;
    let summary = json!({
        "interrogation_s": cfg.interrogation_s,
        "frequencies": freqs_json(&r.freqs),
        "fit": fit_json(&fit),
        "visibility_amp": fringe::visibility_amp(&fit, reference).map_err(stage("fringe"))?,
        "visibility_minmax": fringe::minmax_from_fit(&fit),
        "clock_overlap": clock_overlap(&r.freqs, cfg.interrogation_s),
        "trap_survival": noise::trap_survival(cfg.interrogation_s, &r.noise),
    });
    Ok(Outcome {
        tables: vec![table],
        summary,
    })
}

/// Visibility curve over the configured grid. With shot noise, grid point
/// `i` is replicate `i` of the sampling streams.
fn curve_for(cfg: &RunConfig, r: &Resolved, freqs: ClockFrequencies) -> Result<VisibilityCurve, CliError> {
    let base = template(cfg, freqs)?;
    let grid = cfg.grid();
    let n = cfg.n_phases;
    if !sampled(cfg) {
        return if r.noise.decoheres() {
            sequence::visibility_curve_decohered(&base, &grid, n, &r.noise)
        } else {
            sequence::visibility_curve(&base, &grid, n)
        }
        .map_err(stage("sequence"));
    }
    let reference = sequence::reference_amplitude(&base, n).map_err(stage("sequence"))?;
    let entries = grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let data = sequence::phase_scan_sampled(&base.with_interrogation(t), n, &r.noise, i as u32)?;
            let fit = fringe::fit_fringe(&data, Level::Ground)?;
            Ok(VisibilityPoint {
                t_s: t,
                visibility: fringe::visibility_amp(&fit, reference)?,
                fit_residual: fit.rms_residual,
            })
        })
        .collect::<clockinterf::Result<Vec<_>>>()
        .map_err(stage("sequence"))?;
    VisibilityCurve::new(entries).map_err(stage("sequence"))
}

fn curve_table(name: &str, curve: &VisibilityCurve) -> Table {
    let mut table = Table::new(name, "visibility", &["t_s", "visibility", "residual"]);
    for e in curve.entries() {
        table.push(vec![
            Cell::Float(e.t_s),
            Cell::Float(e.visibility),
            Cell::Float(e.fit_residual),
        ]);
    }
    table
}

fn beat_options(r: &Resolved) -> BeatFitOptions {
    BeatFitOptions {
        fit_decay: r.noise.decoheres(),
        ..BeatFitOptions::default()
    }
}

/// Beat fit, or a note when the curve is too short for one.
fn try_beat(curve: &VisibilityCurve, r: &Resolved) -> Result<Result<BeatEstimate, String>, CliError> {
    match fringe::estimate_beat(curve, &beat_options(r)) {
        Ok(b) => Ok(Ok(b)),
        Err(e @ CoreError::InsufficientSpan { .. }) => Ok(Err(e.to_string())),
        Err(e) => Err(stage("fringe")(e)),
    }
}

fn nulls_json(curve: &VisibilityCurve, freqs: &ClockFrequencies) -> Result<Value, CliError> {
    let t = curve.times();
    let span_periods = t[t.len() - 1] * freqs.beat_hz();
    let expected = if span_periods >= 0.5 {
        (span_periods - 0.5).floor() as usize + 1
    } else {
        0
    };
    match fringe::find_nulls(curve, expected) {
        Ok(found) => Ok(json!({
            "times_s": found.times,
            "requested": found.requested,
            "period_estimate_s": found.period_estimate,
        })),
        Err(CoreError::InvalidArgument(msg)) => Ok(json!({ "skipped": msg })),
        Err(e) => Err(stage("fringe")(e)),
    }
}

fn visibility_mode(cfg: &RunConfig, r: &Resolved) -> Result<Outcome, CliError> {
    let curve = curve_for(cfg, r, r.freqs)?;
    let beat = match try_beat(&curve, r)? {
        Ok(b) => beat_json(&b),
        Err(note) => json!({ "skipped": note }),
    };
    let summary = json!({
        "frequencies": freqs_json(&r.freqs),
        "modulation_period_s": r.freqs.modulation_period_s(),
        "points": curve.len(),
        "nulls": nulls_json(&curve, &r.freqs)?,
        "beat": beat,
    });
    Ok(Outcome {
        tables: vec![curve_table("visibility", &curve)],
        summary,
    })
}

fn require_eps(r: &Resolved, mode: Mode) -> Result<clockinterf::numerics::DoubleWord, CliError> {
    r.eps.ok_or_else(|| {
        CliError::Config(crate::config::ConfigIssue {
            path: "eps".into(),
            message: format!("mode {mode} needs `eps` or `redshift`"),
        })
    })
}

fn shifted_freqs(cfg: &RunConfig, r: &Resolved, eps: clockinterf::numerics::DoubleWord) -> Result<ClockFrequencies, CliError> {
    match cfg.units {
        Units::Physical => redshift::shift_frequencies(&r.freqs, eps),
        Units::Scaled => redshift::shift_frequencies_scaled(&r.freqs, eps.to_f64()),
    }
    .map_err(stage("redshift"))
}

fn eps_json(r: &Resolved, eps: clockinterf::numerics::DoubleWord) -> Value {
    json!({
        "value": eps.to_f64(),
        "value_lo": eps.lo(),
        "rounded_c_squared": r.redshift.map(|ctx| redshift::redshift_factor_rounded(&ctx)),
        "g": r.redshift.map(|ctx| ctx.g()),
        "delta_h_m": r.redshift.map(|ctx| ctx.delta_h()),
    })
}

fn check_tau(cfg: &RunConfig, r: &Resolved) -> f64 {
    cfg.stack
        .tau_s
        .unwrap_or(cfg.stack.n_periods as f64 / r.freqs.beat_hz())
}

fn redshift_compare(cfg: &RunConfig, r: &Resolved) -> Result<Outcome, CliError> {
    let eps = require_eps(r, Mode::RedshiftCompare)?;
    let shifted = shifted_freqs(cfg, r, eps)?;
    let (reference, moved) = rayon::join(|| curve_for(cfg, r, r.freqs), || curve_for(cfg, r, shifted));
    let (reference, moved) = (reference?, moved?);

    let beats = match (try_beat(&reference, r)?, try_beat(&moved, r)?) {
        (Ok(a), Ok(b)) => {
            let ratio = b.delta_f_hz / a.delta_f_hz;
            let ratio_stderr = ratio * ((a.stderr / a.delta_f_hz).powi(2) + (b.stderr / b.delta_f_hz).powi(2)).sqrt();
            json!({
                "reference": beat_json(&a),
                "shifted": beat_json(&b),
                "beat_ratio": ratio,
                "beat_ratio_stderr": ratio_stderr,
                "eps_from_beats": ratio - 1.0,
            })
        }
        (Err(note), _) | (_, Err(note)) => json!({ "skipped": note }),
    };
    let expected_ratio = 1.0 + eps.to_f64();
    let extended = match cfg.units {
        Units::Physical => {
            let check = stacking::verify_stacking_extended(&r.freqs, eps, check_tau(cfg, r))
                .map_err(stage("stacking"))?;
            serde_json::to_value(check).expect("serializable")
        }
        Units::Scaled => Value::Null,
    };
    let ratio_exact = (shifted.beat() / r.freqs.beat()).to_f64();
    let summary = json!({
        "units": cfg.units,
        "eps": eps_json(r, eps),
        "frequencies": freqs_json(&r.freqs),
        "shifted_frequencies": freqs_json(&shifted),
        "expected_ratio": expected_ratio,
        "beat_ratio_exact": ratio_exact,
        "beats": beats,
        "extended_precision": extended,
    });
    Ok(Outcome {
        tables: vec![
            curve_table("visibility_reference", &reference),
            curve_table("visibility_shifted", &moved),
        ],
        summary,
    })
}

fn stack_mode(cfg: &RunConfig, r: &Resolved) -> Result<Outcome, CliError> {
    let eps = require_eps(r, Mode::Stack)?;
    let df = r.freqs.beat_hz();
    let n = cfg.stack.n_periods;
    let report = match r.redshift {
        Some(ctx) => stacking::stacked_null_shift_for(n, &ctx, df),
        None => stacking::stacked_null_shift(n, eps.to_f64(), df),
    }
    .map_err(stage("stacking"))?;
    let tau = check_tau(cfg, r);
    let gain = stacking::stacking_gain(tau, df).map_err(stage("stacking"))?;

    let verification = match cfg.units {
        Units::Scaled => {
            let v = stacking::verify_stacking_by_simulation(eps.to_f64(), df, n as usize)
                .map_err(stage("stacking"))?;
            json!({ "simulation": v })
        }
        Units::Physical => {
            let v = stacking::verify_stacking_extended(&r.freqs, eps, tau)
                .map_err(stage("stacking"))?;
            json!({ "extended_precision": v })
        }
    };

    let mut table = Table::new(
        "stack",
        "stack",
        &["n_periods", "cumulative_shift_periods", "null_shift_s"],
    );
    let mut checkpoints: Vec<u64> = (1..=10).map(|k| (k * n).div_ceil(10)).collect();
    checkpoints.insert(0, 1);
    checkpoints.dedup();
    for k in checkpoints {
        let row = stacking::stacked_null_shift(k, eps.to_f64(), df).map_err(stage("stacking"))?;
        table.push(vec![
            Cell::Count(k),
            Cell::Float(row.cumulative_shift_periods),
            Cell::Float(row.cumulative_shift_periods / df),
        ]);
    }

    let summary = json!({
        "units": cfg.units,
        "eps": eps_json(r, eps),
        "frequencies": freqs_json(&r.freqs),
        "report": report,
        "tau_s": tau,
        "stacking_gain": gain,
        "required_fractional_resolution": tau * eps.to_f64(),
        "verification": verification,
    });
    Ok(Outcome {
        tables: vec![table],
        summary,
    })
}

fn montecarlo(cfg: &RunConfig, r: &Resolved) -> Result<Outcome, CliError> {
    let base = template(cfg, r.freqs)?;
    let seq = base.with_interrogation(cfg.interrogation_s);
    let reference = sequence::reference_amplitude(&base, cfg.n_phases).map_err(stage("sequence"))?;
    let spec = &cfg.montecarlo;

    let mut table = Table::new("montecarlo", "montecarlo", &["atoms", "replicate", "visibility"]);
    let mut rows = Vec::new();
    let mut spreads = Vec::new();
    for &atoms in &spec.atoms {
        let noise = r
            .noise
            .with_atoms(atoms, cfg.seed)
            .map_err(stage("noise"))?;
        let values = sequence::visibility_replicates(&seq, cfg.n_phases, &noise, spec.replicates, reference)
            .map_err(stage("sequence"))?;
        for (k, v) in values.iter().enumerate() {
            table.push(vec![Cell::Count(atoms), Cell::Count(k as u64), Cell::Float(*v)]);
        }
        let (mean, stddev) = sequence::mean_and_stddev(&values);
        spreads.push(stddev);
        rows.push(json!({ "atoms": atoms, "mean_visibility": mean, "stderr": stddev }));
    }
    let atoms: Vec<f64> = spec.atoms.iter().map(|&a| a as f64).collect();
    let slope = lsq::loglog_slope(&atoms, &spreads).ok();
    let summary = json!({
        "interrogation_s": cfg.interrogation_s,
        "replicates": spec.replicates,
        "reference_amplitude": reference,
        "by_atoms": rows,
        "stderr_loglog_slope": slope,
    });
    Ok(Outcome {
        tables: vec![table],
        summary,
    })
}
