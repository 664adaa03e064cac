//! Internal clock interferometry on a three-level atom.
//!
//! Two optical clock transitions share one ground state. A Ramsey sequence
//! splits the atom into three paths (ground, clock 1, clock 2), lets the two
//! clock arms precess at their own frequencies and recombines them with a
//! scanned closing phase. The ground-state fringe loses and regains contrast
//! at the beat frequency `Δf = f2 − f1`. A gravitational redshift scales both
//! clock frequencies, and therefore the beat, by `1 + g·Δh/c²`; the shift of
//! the visibility nulls grows with every modulation period.
//!
//! Modules:
//!
//! - [`qutrit`]: states, pulses, free precession, clock overlap.
//! - [`sequence`]: Ramsey runs, phase scans, visibility curves.
//! - [`fringe`]: fringe fits, visibility metrics, null finding, beat fits.
//! - [`redshift`]: `g·Δh/c²` and frequency scaling.
//! - [`noise`]: projection noise and decoherence channels.
//! - [`stacking`]: null-shift accumulation and detectability.
//! - [`numerics`]: double-word arithmetic behind the extended-precision paths.
//!
//! ```
//! use clockinterf::prelude::*;
//!
//! let freqs = ClockFrequencies::new(1.0, 1.25)?;
//! let template = RamseySequence::tripod(0.0, freqs)?;
//! let curve = visibility_curve(&template, &[0.0, 1.0, 2.0], 16)?;
//! let v = curve.visibilities();
//! assert!((v[1] - clock_overlap(&freqs, 1.0)).abs() < 1e-9);
//! assert!(v[2] < 1e-9); // Δf·t = ½: the clocks are orthogonal
//! # Ok::<(), clockinterf::Error>(())
//! ```

pub mod error;
pub mod fringe;
pub mod lsq;
pub mod noise;
pub mod numerics;
pub mod qutrit;
pub mod redshift;
pub mod sequence;
pub mod stacking;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::fringe::{
        analytic_population, estimate_beat, find_nulls, fit_fringe, visibility_amp,
        visibility_minmax, AnalyticBeatModel, BeatEstimate, BeatFitOptions, FringeFit,
        NullSearch,
    };
    pub use crate::noise::{apply_decoherence, sample_shots, shot_stream, NoiseConfig};
    pub use crate::numerics::DoubleWord;
    pub use crate::qutrit::{
        clock_overlap, free_evolve, populations, tripod_split, two_level_pulse,
        ClockFrequencies, DensityMatrix3, ExtendedPhase, Level, Populations, PulseSpec,
        QutritState, Transition,
    };
    pub use crate::redshift::{redshift_factor, shift_frequencies, RedshiftContext};
    pub use crate::sequence::{
        phase_scan, run_sequence, visibility_curve, FringeDataset, Preparation,
        RamseySequence, VisibilityCurve,
    };
    pub use crate::stacking::{
        stacked_null_shift, stacking_gain, total_signal, verify_stacking_by_simulation,
        StackingReport,
    };
}

// Every guide chapter runs as a doctest so the book cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/qutrit.md")]
    mod qutrit {}
    #[doc = include_str!("../../../book/src/sequences.md")]
    mod sequences {}
    #[doc = include_str!("../../../book/src/visibility.md")]
    mod visibility {}
    #[doc = include_str!("../../../book/src/redshift.md")]
    mod redshift {}
    #[doc = include_str!("../../../book/src/stacking.md")]
    mod stacking {}
    #[doc = include_str!("../../../book/src/noise.md")]
    mod noise {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
