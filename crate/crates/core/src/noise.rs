//! Quantum projection noise and coherence-time limits.
//!
//! Shot noise is a multinomial draw over the three output ports. Random
//! streams are counter based: a ChaCha generator keyed by the run seed, with
//! the stream number built from `(replicate, scan point)`. Any point can be
//! regenerated on its own, in any order, on any thread.
//!
//! Decoherence acts during free evolution as two independent exponential
//! channels (ground–clock dephasing and clock → ground decay). Trap loss does
//! not touch the state; it only thins the atom number.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::qutrit::{DensityMatrix3, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    atoms_per_point: u64,
    seed: u64,
    tau_coherence_s: f64,
    tau_clock_s: f64,
    tau_trap_s: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            atoms_per_point: 1,
            seed: 0,
            tau_coherence_s: f64::INFINITY,
            tau_clock_s: f64::INFINITY,
            tau_trap_s: f64::INFINITY,
        }
    }
}

fn check_lifetime(name: &'static str, tau: f64) -> Result<f64> {
    if tau > 0.0 && !tau.is_nan() {
        Ok(tau)
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive or infinite, got {tau}"
        )))
    }
}

impl NoiseConfig {
    /// Finite atom number, no decoherence.
    pub fn shots(atoms_per_point: u64, seed: u64) -> Result<Self> {
        Self::default().with_atoms(atoms_per_point, seed)
    }

    pub fn with_atoms(mut self, atoms_per_point: u64, seed: u64) -> Result<Self> {
        if atoms_per_point == 0 {
            return Err(Error::InvalidArgument(
                "atoms_per_point must be at least 1".into(),
            ));
        }
        self.atoms_per_point = atoms_per_point;
        self.seed = seed;
        Ok(self)
    }

    /// Lifetimes in seconds; `f64::INFINITY` disables a channel.
    pub fn with_lifetimes(mut self, coherence_s: f64, clock_s: f64, trap_s: f64) -> Result<Self> {
        self.tau_coherence_s = check_lifetime("tau_coherence_s", coherence_s)?;
        self.tau_clock_s = check_lifetime("tau_clock_s", clock_s)?;
        self.tau_trap_s = check_lifetime("tau_trap_s", trap_s)?;
        Ok(self)
    }

    pub fn dephasing(tau_coherence_s: f64) -> Result<Self> {
        Self::default().with_lifetimes(tau_coherence_s, f64::INFINITY, f64::INFINITY)
    }

    pub fn atoms_per_point(&self) -> u64 {
        self.atoms_per_point
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tau_coherence_s(&self) -> f64 {
        self.tau_coherence_s
    }

    pub fn tau_clock_s(&self) -> f64 {
        self.tau_clock_s
    }

    pub fn tau_trap_s(&self) -> f64 {
        self.tau_trap_s
    }

    /// True when some channel acts on the internal state.
    pub fn decoheres(&self) -> bool {
        self.tau_coherence_s.is_finite() || self.tau_clock_s.is_finite()
    }
}

/// Random stream for one scan point of one replicate.
pub fn shot_stream(seed: u64, point_index: u32, replicate: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(replicate) << 32) | u64::from(point_index));
    rng
}

/// Multinomial draw of `n` atoms over `(g, c1, c2)`.
pub fn sample_shots<R: Rng + ?Sized>(probs: [f64; 3], n: u64, rng: &mut R) -> Result<[u64; 3]> {
    if probs.iter().any(|p| *p < -1e-12 || !p.is_finite()) {
        return Err(Error::InvalidProbabilities {
            probs,
            reason: "negative or non-finite entry",
        });
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidProbabilities {
            probs,
            reason: "entries do not sum to 1",
        });
    }
    let p = probs.map(|x| x.max(0.0));
    let binomial = |n: u64, q: f64, rng: &mut R| -> Result<u64> {
        let q = q.clamp(0.0, 1.0);
        Binomial::new(n, q)
            .map(|d| d.sample(rng))
            .map_err(|e| Error::InvalidArgument(e.to_string()))
    };
    let n_g = binomial(n, p[0], rng)?;
    let rest = 1.0 - p[0];
    let n_c1 = if rest > 0.0 {
        binomial(n - n_g, p[1] / rest, rng)?
    } else {
        0
    };
    Ok([n_g, n_c1, n - n_g - n_c1])
}

/// Fraction of atoms still trapped after `t`.
pub fn trap_survival(t: f64, cfg: &NoiseConfig) -> f64 {
    (-t / cfg.tau_trap_s).exp()
}

/// Number of atoms left after trap loss, drawn binomially.
pub fn surviving_atoms<R: Rng + ?Sized>(t: f64, cfg: &NoiseConfig, rng: &mut R) -> u64 {
    let n = cfg.atoms_per_point;
    if cfg.tau_trap_s.is_infinite() {
        return n;
    }
    Binomial::new(n, trap_survival(t, cfg).clamp(0.0, 1.0))
        .map(|d| d.sample(rng))
        .unwrap_or(n)
}

/// Applies dephasing and clock-state decay accumulated over `t`.
pub fn apply_decoherence(rho: &DensityMatrix3, t: f64, cfg: &NoiseConfig) -> DensityMatrix3 {
    let decay = 1.0 - (-t / cfg.tau_clock_s).exp();
    let keep = 1.0 - decay;
    let dephase = (-t / cfg.tau_coherence_s).exp();
    let m = rho.matrix();
    let mut out = Matrix3::<C64>::zeros();

    // Amplitude damping, Kraus K0 = diag(1, √keep, √keep), Kk = √decay |g⟩⟨k|.
    let sk = keep.sqrt();
    out[(0, 0)] = m[(0, 0)] + C64::from(decay) * (m[(1, 1)] + m[(2, 2)]);
    for k in 1..3 {
        out[(0, k)] = m[(0, k)] * sk * dephase;
        out[(k, 0)] = m[(k, 0)] * sk * dephase;
        for l in 1..3 {
            out[(k, l)] = m[(k, l)] * keep;
        }
    }
    DensityMatrix3::from_matrix_unchecked(out)
}
