//! Three-level atom: one ground state `|g⟩` shared by two optical clock
//! transitions `|g⟩ ↔ |c1⟩` and `|g⟩ ↔ |c2⟩`.
//!
//! Pulses are ideal and instantaneous. Free evolution is diagonal in the bare
//! basis, with the clock arms picking up phase `2π·f·t`. That phase is formed
//! in double-word arithmetic and reduced modulo 2π only at the end, so runs
//! spanning 10¹⁵ optical cycles keep their fractional phase.

use std::f64::consts::{PI, TAU};

use nalgebra::{Complex, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DoubleWord;

pub type C64 = Complex<f64>;

/// Operations reject states whose squared norm is further than this from 1.
pub const NORM_TOLERANCE: f64 = 1e-9;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Index of a basis level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Ground,
    Clock1,
    Clock2,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Ground, Level::Clock1, Level::Clock2];

    #[inline]
    pub const fn index(self) -> usize {
        match self {
            Level::Ground => 0,
            Level::Clock1 => 1,
            Level::Clock2 => 2,
        }
    }
}

/// Pure state of the qutrit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QutritState {
    amps: [C64; 3],
}

impl QutritState {
    /// Builds a state from raw amplitudes `(ground, clock 1, clock 2)`.
    /// No normalization check is made here; operations check on entry.
    pub const fn new(amp_g: C64, amp_c1: C64, amp_c2: C64) -> Self {
        Self {
            amps: [amp_g, amp_c1, amp_c2],
        }
    }

    /// `|g⟩`.
    pub const fn ground() -> Self {
        Self::new(ONE, ZERO, ZERO)
    }

    pub fn basis(level: Level) -> Self {
        let mut amps = [ZERO; 3];
        amps[level.index()] = ONE;
        Self { amps }
    }

    /// Scales the amplitudes to unit norm.
    pub fn normalized(amp_g: C64, amp_c1: C64, amp_c2: C64) -> Result<Self> {
        let s = Self::new(amp_g, amp_c1, amp_c2);
        let n = s.norm_sqr();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        let k = 1.0 / n.sqrt();
        Ok(Self::new(amp_g * k, amp_c1 * k, amp_c2 * k))
    }

    #[inline]
    pub fn amp_g(&self) -> C64 {
        self.amps[0]
    }

    #[inline]
    pub fn amp_c1(&self) -> C64 {
        self.amps[1]
    }

    #[inline]
    pub fn amp_c2(&self) -> C64 {
        self.amps[2]
    }

    #[inline]
    pub fn amplitudes(&self) -> [C64; 3] {
        self.amps
    }

    #[inline]
    pub fn amp(&self, level: Level) -> C64 {
        self.amps[level.index()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE || !n.is_finite() {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        Ok(())
    }

    /// Multiplies every clock-arm amplitude by `e^{-iφ}`. Equivalent to
    /// advancing both drive fields by the common phase `φ`.
    pub fn rotate_clock_arms(&self, phase: f64) -> Self {
        let r = C64::from_polar(1.0, -phase);
        Self::new(self.amps[0], self.amps[1] * r, self.amps[2] * r)
    }
}

/// Optical transition addressed by a pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transition {
    /// `|g⟩ ↔ |c1⟩`, clock 1.
    GroundClock1,
    /// `|g⟩ ↔ |c2⟩`, clock 2.
    GroundClock2,
}

impl Transition {
    #[inline]
    pub const fn excited(self) -> Level {
        match self {
            Transition::GroundClock1 => Level::Clock1,
            Transition::GroundClock2 => Level::Clock2,
        }
    }
}

/// Resonant rotation of one transition by `angle` about the equatorial axis
/// at azimuth `phase`. Maps `|g⟩ → cos(θ/2)|g⟩ − i·e^{iφ}·sin(θ/2)|k⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    transition: Transition,
    angle: f64,
    phase: f64,
}

impl PulseSpec {
    /// Requires `angle ∈ [0, 2π]` and `phase ∈ [0, 2π)`.
    pub fn new(transition: Transition, angle: f64, phase: f64) -> Result<Self> {
        if !(0.0..=TAU).contains(&angle) || !(0.0..TAU).contains(&phase) {
            return Err(Error::InvalidPulse { angle, phase });
        }
        Ok(Self {
            transition,
            angle,
            phase,
        })
    }

    /// Same as [`PulseSpec::new`] but reduces `phase` into `[0, 2π)` first.
    pub fn with_wrapped_phase(transition: Transition, angle: f64, phase: f64) -> Result<Self> {
        Self::new(transition, angle, wrap_phase(phase))
    }

    #[inline]
    pub fn transition(&self) -> Transition {
        self.transition
    }

    #[inline]
    pub fn angle(&self) -> f64 {
        self.angle
    }

    #[inline]
    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// The pulse that undoes this one: same angle, phase advanced by π.
    pub fn inverse(&self) -> Self {
        Self {
            transition: self.transition,
            angle: self.angle,
            phase: wrap_phase(self.phase + PI),
        }
    }

    /// The same pulse with its drive phase advanced by `extra`.
    pub fn shifted(&self, extra: f64) -> Self {
        Self {
            transition: self.transition,
            angle: self.angle,
            phase: wrap_phase(self.phase + extra),
        }
    }

    /// 2×2 block `[[u_gg, u_gk], [u_kg, u_kk]]` on `(g, k)`.
    fn block(&self) -> [[C64; 2]; 2] {
        let (s, c) = (0.5 * self.angle).sin_cos();
        let e = C64::from_polar(1.0, self.phase);
        let mi = C64::new(0.0, -1.0);
        [
            [C64::new(c, 0.0), mi * e.conj() * s],
            [mi * e * s, C64::new(c, 0.0)],
        ]
    }

    /// Full 3×3 unitary in the `(g, c1, c2)` basis.
    pub fn unitary(&self) -> Matrix3<C64> {
        let b = self.block();
        let k = self.transition.excited().index();
        let mut u = Matrix3::identity();
        u[(0, 0)] = b[0][0];
        u[(0, k)] = b[0][1];
        u[(k, 0)] = b[1][0];
        u[(k, k)] = b[1][1];
        u
    }
}

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(TAU);
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Applies a resonant pulse. The spectator clock amplitude is untouched.
pub fn two_level_pulse(state: &QutritState, pulse: &PulseSpec) -> Result<QutritState> {
    state.check_normalized()?;
    Ok(apply_pulse_unchecked(state, pulse))
}

pub(crate) fn apply_pulse_unchecked(state: &QutritState, pulse: &PulseSpec) -> QutritState {
    let b = pulse.block();
    let k = pulse.transition.excited().index();
    let g = state.amps[0];
    let e = state.amps[k];
    let mut amps = state.amps;
    amps[0] = b[0][0] * g + b[0][1] * e;
    amps[k] = b[1][0] * g + b[1][1] * e;
    QutritState { amps }
}

/// Second tripod angle, `2·arcsin(1/√3)`: moves a third of the remaining
/// ground population into clock 2.
pub fn tripod_second_angle() -> f64 {
    2.0 * (1.0 / 3f64.sqrt()).asin()
}

/// Preparation pulses producing populations `(½, ¼, ¼)` from `|g⟩`.
pub fn tripod_pulses() -> [PulseSpec; 2] {
    [
        PulseSpec {
            transition: Transition::GroundClock1,
            angle: PI / 3.0,
            phase: 0.0,
        },
        PulseSpec {
            transition: Transition::GroundClock2,
            angle: tripod_second_angle(),
            phase: 0.0,
        },
    ]
}

/// A π/2 pulse on each transition in turn; populations `(¼, ½, ¼)` from `|g⟩`.
pub fn double_pi_half_pulses() -> [PulseSpec; 2] {
    [
        PulseSpec {
            transition: Transition::GroundClock1,
            angle: PI / 2.0,
            phase: 0.0,
        },
        PulseSpec {
            transition: Transition::GroundClock2,
            angle: PI / 2.0,
            phase: 0.0,
        },
    ]
}

fn check_pure_ground(state: &QutritState) -> Result<()> {
    state.check_normalized()?;
    if (state.amps[0].norm_sqr() - 1.0).abs() > 1e-12 {
        return Err(Error::NotGroundState);
    }
    Ok(())
}

/// Splits `|g⟩` into the three-path superposition with populations
/// `(½, ¼, ¼)` on `(g, c1, c2)`.
pub fn tripod_split(state: &QutritState) -> Result<QutritState> {
    check_pure_ground(state)?;
    Ok(tripod_pulses()
        .iter()
        .fold(*state, |s, p| apply_pulse_unchecked(&s, p)))
}

/// Two sequential π/2 pulses, for comparison against [`tripod_split`].
pub fn double_pi_half_split(state: &QutritState) -> Result<QutritState> {
    check_pure_ground(state)?;
    Ok(double_pi_half_pulses()
        .iter()
        .fold(*state, |s, p| apply_pulse_unchecked(&s, p)))
}

/// The two clock transition frequencies.
///
/// Stored as clock 1 plus the beat `f2 − f1`, both in double-word precision,
/// so that scaling by `1 + ε` keeps the beat exact even when `f/Δf ~ 10⁶`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockFrequencies {
    f1: DoubleWord,
    beat: DoubleWord,
}

impl ClockFrequencies {
    /// Requires `f2_hz > f1_hz > 0`.
    pub fn new(f1_hz: f64, f2_hz: f64) -> Result<Self> {
        if !(f1_hz > 0.0 && f2_hz > f1_hz && f2_hz.is_finite()) {
            return Err(Error::FrequencyOrder {
                f1: f1_hz,
                f2: f2_hz,
            });
        }
        Ok(Self {
            f1: DoubleWord::from_f64(f1_hz),
            beat: DoubleWord::from_difference(f2_hz, f1_hz),
        })
    }

    /// From clock 1 and the beat, both extended precision.
    pub fn from_extended(f1_hz: DoubleWord, beat_hz: DoubleWord) -> Result<Self> {
        if !(f1_hz.hi() > 0.0 && beat_hz.hi() > 0.0 && f1_hz.is_finite() && beat_hz.is_finite())
        {
            return Err(Error::FrequencyOrder {
                f1: f1_hz.to_f64(),
                f2: (f1_hz + beat_hz).to_f64(),
            });
        }
        Ok(Self { f1: f1_hz, beat: beat_hz })
    }

    #[inline]
    pub fn f1(&self) -> DoubleWord {
        self.f1
    }

    #[inline]
    pub fn f2(&self) -> DoubleWord {
        self.f1 + self.beat
    }

    #[inline]
    pub fn beat(&self) -> DoubleWord {
        self.beat
    }

    #[inline]
    pub fn f1_hz(&self) -> f64 {
        self.f1.to_f64()
    }

    #[inline]
    pub fn f2_hz(&self) -> f64 {
        self.f2().to_f64()
    }

    /// `Δf = f2 − f1`.
    #[inline]
    pub fn beat_hz(&self) -> f64 {
        self.beat.to_f64()
    }

    /// Mean of the two clock frequencies; the fringe carrier.
    pub fn mean_hz(&self) -> f64 {
        (self.f1 + self.beat.mul_f64(0.5)).to_f64()
    }

    /// Visibility modulation period `1/Δf`.
    pub fn modulation_period_s(&self) -> f64 {
        self.beat.recip().to_f64()
    }
}

/// Accumulated phase in radians, held as a double-word `hi + lo`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExtendedPhase(DoubleWord);

impl ExtendedPhase {
    pub const ZERO: Self = Self(DoubleWord::ZERO);

    pub fn from_radians(radians: DoubleWord) -> Self {
        Self(radians)
    }

    pub fn from_cycles(cycles: DoubleWord) -> Self {
        Self(cycles * DoubleWord::TAU)
    }

    /// Phase `2π·f·t` accumulated at frequency `freq_hz` over `duration_s`.
    pub fn accumulated(freq_hz: DoubleWord, duration_s: DoubleWord) -> Self {
        Self::from_cycles(freq_hz * duration_s)
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.0.hi()
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.0.lo()
    }

    #[inline]
    pub fn radians(&self) -> DoubleWord {
        self.0
    }

    pub fn cycles(&self) -> DoubleWord {
        self.0 / DoubleWord::TAU
    }

    /// Phase modulo 2π, in `[0, 2π)`.
    pub fn reduced(&self) -> f64 {
        reduce_cycles(self.cycles())
    }
}

impl std::ops::Add for ExtendedPhase {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        Self(self.0 + other.0)
    }
}

impl std::ops::Sub for ExtendedPhase {
    type Output = Self;

    fn sub(self, other: Self) -> Self {
        Self(self.0 - other.0)
    }
}

/// Drops whole cycles and returns the remaining fraction as radians in
/// `[0, 2π)`.
pub fn reduce_cycles(cycles: DoubleWord) -> f64 {
    let (_, frac) = cycles.split_integer();
    wrap_phase((frac * DoubleWord::TAU).to_f64())
}

fn check_duration(duration_s: DoubleWord) -> Result<()> {
    if !(duration_s.hi() >= 0.0) || !duration_s.is_finite() {
        return Err(Error::NegativeTime {
            what: "free evolution duration",
            value: duration_s.to_f64(),
        });
    }
    Ok(())
}

/// Reduced phases `(θ1, θ2)` accumulated by the two clock arms.
pub fn arm_phases(freqs: &ClockFrequencies, duration_s: DoubleWord) -> (f64, f64) {
    (
        reduce_cycles(freqs.f1() * duration_s),
        reduce_cycles(freqs.f2() * duration_s),
    )
}

/// Free precession: `c1 → c1·e^{−2πi·f1·t}`, `c2 → c2·e^{−2πi·f2·t}`.
pub fn free_evolve(
    state: &QutritState,
    duration_s: f64,
    freqs: &ClockFrequencies,
) -> Result<QutritState> {
    free_evolve_extended(state, DoubleWord::from_f64(duration_s), freqs)
}

/// [`free_evolve`] with an extended-precision duration.
pub fn free_evolve_extended(
    state: &QutritState,
    duration_s: DoubleWord,
    freqs: &ClockFrequencies,
) -> Result<QutritState> {
    check_duration(duration_s)?;
    let (th1, th2) = arm_phases(freqs, duration_s);
    Ok(apply_arm_phases(state, th1, th2))
}

pub(crate) fn apply_arm_phases(state: &QutritState, th1: f64, th2: f64) -> QutritState {
    let a = state.amps;
    QutritState::new(
        a[0],
        a[1] * C64::from_polar(1.0, -th1),
        a[2] * C64::from_polar(1.0, -th2),
    )
}

/// Diagonal free-evolution unitary.
pub fn free_evolution_unitary(freqs: &ClockFrequencies, duration_s: f64) -> Result<Matrix3<C64>> {
    let d = DoubleWord::from_f64(duration_s);
    check_duration(d)?;
    let (th1, th2) = arm_phases(freqs, d);
    Ok(Matrix3::from_diagonal(&nalgebra::Vector3::new(
        ONE,
        C64::from_polar(1.0, -th1),
        C64::from_polar(1.0, -th2),
    )))
}

/// Magnitude of the overlap between the two equatorial clock states after
/// time `t`: `|cos(π·Δf·t)|`.
pub fn clock_overlap(freqs: &ClockFrequencies, t: f64) -> f64 {
    clock_overlap_extended(freqs, DoubleWord::from_f64(t))
}

pub fn clock_overlap_extended(freqs: &ClockFrequencies, t: DoubleWord) -> f64 {
    // |cos(π x)| has period 1 in x = Δf·t.
    let (_, frac) = (freqs.beat() * t).split_integer();
    (PI * frac.to_f64()).cos().abs()
}

/// 3×3 density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix3 {
    rho: Matrix3<C64>,
}

impl DensityMatrix3 {
    /// Wraps a matrix after checking Hermiticity and unit trace within
    /// `tol`.
    pub fn new(rho: Matrix3<C64>, tol: f64) -> Result<Self> {
        let dm = Self { rho };
        let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let tr = dm.trace();
        if herm > tol || (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "not a density matrix: hermiticity defect {herm:e}, trace {tr}"
            )));
        }
        Ok(dm)
    }

    pub fn from_pure(state: &QutritState) -> Self {
        let v = nalgebra::Vector3::from(state.amps);
        Self {
            rho: v * v.adjoint(),
        }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            rho: Matrix3::from_diagonal_element(C64::new(1.0 / 3.0, 0.0)),
        }
    }

    pub(crate) fn from_matrix_unchecked(rho: Matrix3<C64>) -> Self {
        Self { rho }
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.rho
    }

    #[inline]
    pub fn element(&self, row: Level, col: Level) -> C64 {
        self.rho[(row.index(), col.index())]
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// `U ρ U†`.
    pub fn evolve(&self, u: &Matrix3<C64>) -> Self {
        Self {
            rho: u * self.rho * u.adjoint(),
        }
    }

    pub fn apply_pulse(&self, pulse: &PulseSpec) -> Self {
        self.evolve(&pulse.unitary())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self.rho - self.rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let h = (self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        let eig = nalgebra::SymmetricEigen::new(h);
        let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }
}

/// Diagonal measurement probabilities `(p_g, p_c1, p_c2)`.
pub trait Populations {
    fn populations(&self) -> [f64; 3];
}

impl Populations for QutritState {
    fn populations(&self) -> [f64; 3] {
        self.amps.map(|a| a.norm_sqr())
    }
}

impl Populations for DensityMatrix3 {
    fn populations(&self) -> [f64; 3] {
        [self.rho[(0, 0)].re, self.rho[(1, 1)].re, self.rho[(2, 2)].re]
    }
}

/// Free-function form of [`Populations::populations`].
pub fn populations<P: Populations + ?Sized>(state: &P) -> [f64; 3] {
    state.populations()
}
