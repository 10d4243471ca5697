//! Four-wave-mixing atom-photon entanglement.
//!
//! The atom is modelled by the cycle |1⟩ → |2⟩ → |3⟩ → |4⟩ → |1⟩ plus the
//! spectator qubit state |0⟩ and an inert dump level collecting decayed
//! population. The cavity mode is truncated to zero or one photon, giving a
//! 12-dimensional state space indexed by `2 * level + photons`.

mod dynamics;
mod optimize;
mod phase;

pub use dynamics::{simulate_protocol, ChannelWeights, FwmResult, SimOptions};
pub use optimize::{
    choose_operating_point, detuned_scan, optimize_detuned, optimize_pulses, peak_population, sweep_timing,
    write_sweep_csv, DetunedPoint, DetunedSearch, OptimizeOutcome, Param, Stage, TimingPoint,
};
pub use phase::{default_beams, phase_mismatch, Beam, PhaseMismatch};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::TWO_PI;

pub const LEVELS: usize = 6;
pub const DIM: usize = 2 * LEVELS;
/// Index of the dump level, which no coherent term touches.
pub const DUMP: usize = 5;

pub const fn index(level: usize, photons: usize) -> usize {
    2 * level + photons
}

pub type Matrix = [[Complex64; DIM]; DIM];
pub type State = [Complex64; DIM];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FwmError {
    #[error("invalid {name} = {value}: {constraint}")]
    Invalid { name: &'static str, value: f64, constraint: &'static str },
    #[error("time step {dt:e} s does not resolve the fastest rate {rate:e} rad/s (need dt <= {max:e} s)")]
    GridTooCoarse { dt: f64, rate: f64, max: f64 },
    #[error("state norm grew to {norm} at t = {time:e} s; integrator unstable")]
    NormGrowth { time: f64, norm: f64 },
    #[error("outcoupling factor {0} exceeds 1")]
    OutcouplingAboveOne(f64),
}

/// Decay channels, couplings and detuning of the five-level scheme, all in rad/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LevelScheme {
    /// Unit for Rabi frequencies and pulse timing (the ³P₁ decay rate, γ).
    pub gamma_unit: f64,
    /// |2⟩ → ¹S₀ decay.
    pub gamma_2: f64,
    /// |4⟩ → ¹S₀ decay.
    pub gamma_4: f64,
    /// |3⟩ → ³P₁ decay.
    pub gamma_3_p1: f64,
    /// |3⟩ → ³P₂ decay.
    pub gamma_3_p2: f64,
    pub g34: f64,
    pub kappa_int: f64,
    pub kappa_ext: f64,
    /// Detuning δ of |4⟩; zero for the resonant scheme.
    pub detuning: f64,
}

impl Default for LevelScheme {
    fn default() -> Self {
        LevelScheme {
            gamma_unit: TWO_PI * 180e3,
            gamma_2: TWO_PI * 182e3,
            gamma_4: TWO_PI * 182e3,
            gamma_3_p1: TWO_PI * 318e3,
            gamma_3_p2: TWO_PI * 48e3,
            g34: TWO_PI * 1.532_27e6,
            kappa_int: TWO_PI * 153.74e3,
            kappa_ext: TWO_PI * 307.48e3,
            detuning: 0.0,
        }
    }
}

impl LevelScheme {
    /// Take g34 and the cavity linewidths from a cavity analysis.
    pub fn with_cavity(self, report: &crate::cavity::CavityReport) -> Self {
        LevelScheme {
            g34: report.coupling.g,
            kappa_int: report.mode.kappa_int,
            kappa_ext: report.mode.kappa_ext,
            ..self
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa_int + self.kappa_ext
    }

    pub fn gamma_3(&self) -> f64 {
        self.gamma_3_p1 + self.gamma_3_p2
    }

    pub fn validate(&self) -> Result<(), FwmError> {
        let rates = [
            ("gamma_unit", self.gamma_unit),
            ("gamma_2", self.gamma_2),
            ("gamma_4", self.gamma_4),
            ("gamma_3_p1", self.gamma_3_p1),
            ("gamma_3_p2", self.gamma_3_p2),
            ("g34", self.g34),
            ("kappa_int", self.kappa_int),
            ("kappa_ext", self.kappa_ext),
        ];
        for (name, value) in rates {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(FwmError::Invalid { name, value, constraint: "must be finite and >= 0" });
            }
        }
        if !(self.gamma_unit > 0.0) {
            return Err(FwmError::Invalid { name: "gamma_unit", value: self.gamma_unit, constraint: "must be > 0" });
        }
        if !self.detuning.is_finite() {
            return Err(FwmError::Invalid { name: "detuning", value: self.detuning, constraint: "must be finite" });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Pulse {
    /// Gaussian with peak Rabi frequency `peak` (rad/s), cut off beyond ±3 FWHM.
    Gaussian { peak: f64, center: f64, fwhm: f64 },
    /// Flat top with linear ramps; `length` includes both ramps.
    RampedFlat { peak: f64, start: f64, length: f64, ramp: f64 },
}

impl Pulse {
    pub fn off() -> Self {
        Pulse::Gaussian { peak: 0.0, center: 0.0, fwhm: 1e-9 }
    }

    pub fn peak(&self) -> f64 {
        match *self {
            Pulse::Gaussian { peak, .. } | Pulse::RampedFlat { peak, .. } => peak,
        }
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        match *self {
            Pulse::Gaussian { peak, center, fwhm } => {
                let x = (t - center) / fwhm;
                if x.abs() > 3.0 {
                    0.0
                } else {
                    peak * (-4.0 * std::f64::consts::LN_2 * x * x).exp()
                }
            }
            Pulse::RampedFlat { peak, start, length, ramp } => {
                let x = t - start;
                if x <= 0.0 || x >= length {
                    0.0
                } else if x < ramp {
                    peak * x / ramp
                } else if x > length - ramp {
                    peak * (length - x) / ramp
                } else {
                    peak
                }
            }
        }
    }

    /// Support of the envelope.
    pub fn span(&self) -> (f64, f64) {
        match *self {
            Pulse::Gaussian { center, fwhm, .. } => (center - 3.0 * fwhm, center + 3.0 * fwhm),
            Pulse::RampedFlat { start, length, .. } => (start, start + length),
        }
    }

    pub fn shifted(&self, dt: f64) -> Self {
        match *self {
            Pulse::Gaussian { peak, center, fwhm } => Pulse::Gaussian { peak, center: center + dt, fwhm },
            Pulse::RampedFlat { peak, start, length, ramp } => {
                Pulse::RampedFlat { peak, start: start + dt, length, ramp }
            }
        }
    }

    fn validate(&self, name: &'static str) -> Result<(), FwmError> {
        let bad = |value, constraint| Err(FwmError::Invalid { name, value, constraint });
        match *self {
            Pulse::Gaussian { peak, center, fwhm } => {
                if !(peak >= 0.0 && peak.is_finite()) {
                    return bad(peak, "peak must be finite and >= 0");
                }
                if !(fwhm > 0.0 && fwhm.is_finite()) {
                    return bad(fwhm, "fwhm must be finite and > 0");
                }
                if !center.is_finite() {
                    return bad(center, "center must be finite");
                }
            }
            Pulse::RampedFlat { peak, start, length, ramp } => {
                if !(peak >= 0.0 && peak.is_finite()) {
                    return bad(peak, "peak must be finite and >= 0");
                }
                if !start.is_finite() {
                    return bad(start, "start must be finite");
                }
                if !(ramp > 0.0 && length >= 2.0 * ramp && length.is_finite()) {
                    return bad(length, "need ramp > 0 and length >= 2 * ramp");
                }
            }
        }
        Ok(())
    }
}

/// Classical drives of one protocol run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSchedule {
    pub omega12: Pulse,
    /// Constant Ω23, rad/s.
    pub omega23: f64,
    pub omega41: Pulse,
    /// Relative timing δ in units of 1/γ: Ω41 is delayed by δ/γ.
    #[serde(default)]
    pub timing: f64,
}

impl DriveSchedule {
    /// Gaussian pulses of the resonant scheme with peaks {13.2γ, 23.0γ} and FWHM {116, 58} ns.
    pub fn resonant(scheme: &LevelScheme) -> Self {
        let g = scheme.gamma_unit;
        let c12 = 3.0 * 116e-9;
        DriveSchedule {
            omega12: Pulse::Gaussian { peak: 13.2 * g, center: c12, fwhm: 116e-9 },
            omega23: 10.0 * g,
            omega41: Pulse::Gaussian { peak: 23.0 * g, center: c12 + RESONANT_DELAY, fwhm: 58e-9 },
            timing: 0.0,
        }
    }

    /// Ramped-flat pulses of the detuned scheme: Ω12 65 ns with 20 ns ramps,
    /// Ω41 starting as Ω12 ends.
    pub fn detuned(omega12: f64, omega23: f64, omega41: f64, length41: f64) -> Self {
        DriveSchedule {
            omega12: Pulse::RampedFlat { peak: omega12, start: 0.0, length: 65e-9, ramp: 20e-9 },
            omega23,
            omega41: Pulse::RampedFlat { peak: omega41, start: 65e-9, length: length41, ramp: 20e-9 },
            timing: 0.0,
        }
    }

    /// Ω41 with the timing offset applied.
    pub fn effective_omega41(&self, scheme: &LevelScheme) -> Pulse {
        self.omega41.shifted(self.timing / scheme.gamma_unit)
    }

    pub fn validate(&self) -> Result<(), FwmError> {
        self.omega12.validate("omega12")?;
        self.omega41.validate("omega41")?;
        if !(self.omega23 >= 0.0 && self.omega23.is_finite()) {
            return Err(FwmError::Invalid {
                name: "omega23",
                value: self.omega23,
                constraint: "must be finite and >= 0",
            });
        }
        if !self.timing.is_finite() {
            return Err(FwmError::Invalid { name: "timing", value: self.timing, constraint: "must be finite" });
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.omega12.peak() == 0.0 && self.omega41.peak() == 0.0
    }
}

/// Delay of the Ω41 centre after the Ω12 centre at δ = 0 (the return-transfer optimum).
pub const RESONANT_DELAY: f64 = 177e-9;

/// Fraction of cavity photons that reach the fiber.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcoupling {
    /// κ_ext / (κ_int + κ_ext).
    #[default]
    RatioTotal,
    /// κ_ext / κ_int, as printed with the success formula.
    RatioInt,
    /// η_coll = 1 − κ_int/κ_ext, the mirror collection efficiency.
    EtaColl,
}

impl Outcoupling {
    pub fn factor(self, scheme: &LevelScheme) -> Result<f64, FwmError> {
        let (ki, ke) = (scheme.kappa_int, scheme.kappa_ext);
        let eta = match self {
            Outcoupling::RatioTotal => {
                if ki + ke > 0.0 {
                    ke / (ki + ke)
                } else {
                    0.0
                }
            }
            Outcoupling::RatioInt => {
                if ke == 0.0 {
                    0.0
                } else {
                    ke / ki
                }
            }
            Outcoupling::EtaColl => {
                if ke == 0.0 {
                    0.0
                } else {
                    (1.0 - ki / ke).max(0.0)
                }
            }
        };
        if eta > 1.0 {
            return Err(FwmError::OutcouplingAboveOne(eta));
        }
        Ok(eta)
    }
}

/// Nonzero entries of a 12×12 operator.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Sparse {
    len: usize,
    entries: [(u8, u8, Complex64); 32],
}

impl Sparse {
    fn new() -> Self {
        Sparse { len: 0, entries: [(0, 0, Complex64::new(0.0, 0.0)); 32] }
    }

    fn push(&mut self, i: usize, j: usize, v: Complex64) {
        if v != Complex64::new(0.0, 0.0) {
            self.entries[self.len] = (i as u8, j as u8, v);
            self.len += 1;
        }
    }

    fn hermitian_pair(&mut self, i: usize, j: usize, v: f64) {
        self.push(i, j, Complex64::new(v, 0.0));
        self.push(j, i, Complex64::new(v, 0.0));
    }

    fn entries(&self) -> &[(u8, u8, Complex64)] {
        &self.entries[..self.len]
    }

    /// out = −i · self · psi
    pub(crate) fn evolve(&self, psi: &State, out: &mut State) {
        *out = [Complex64::new(0.0, 0.0); DIM];
        for &(i, j, v) in self.entries() {
            out[i as usize] += v * psi[j as usize];
        }
        for o in out.iter_mut() {
            *o = Complex64::new(o.im, -o.re);
        }
    }

    /// out = −i · self† · psi
    pub(crate) fn evolve_adjoint(&self, psi: &State, out: &mut State) {
        *out = [Complex64::new(0.0, 0.0); DIM];
        for &(i, j, v) in self.entries() {
            out[j as usize] += v.conj() * psi[i as usize];
        }
        for o in out.iter_mut() {
            *o = Complex64::new(o.im, -o.re);
        }
    }

    /// self · m
    pub(crate) fn mul_left(&self, m: &Matrix) -> Matrix {
        let mut out = [[Complex64::new(0.0, 0.0); DIM]; DIM];
        for &(i, j, v) in self.entries() {
            for k in 0..DIM {
                out[i as usize][k] += v * m[j as usize][k];
            }
        }
        out
    }

    /// m · self†
    pub(crate) fn mul_right_adjoint(&self, m: &Matrix) -> Matrix {
        let mut out = [[Complex64::new(0.0, 0.0); DIM]; DIM];
        for &(i, j, v) in self.entries() {
            let vc = v.conj();
            for k in 0..DIM {
                out[k][j as usize] += m[k][i as usize] * vc;
            }
        }
        out
    }

    pub(crate) fn to_dense(self) -> Matrix {
        let mut m = [[Complex64::new(0.0, 0.0); DIM]; DIM];
        for &(i, j, v) in self.entries() {
            m[i as usize][j as usize] += v;
        }
        m
    }
}

/// Hermitian part H(t) as sparse entries.
pub(crate) fn hamiltonian_sparse(scheme: &LevelScheme, drives: &DriveSchedule, omega41: &Pulse, t: f64) -> Sparse {
    let mut h = Sparse::new();
    let o12 = drives.omega12.amplitude(t);
    let o41 = omega41.amplitude(t);
    for n in 0..2 {
        h.hermitian_pair(index(1, n), index(2, n), o12);
        h.hermitian_pair(index(2, n), index(3, n), drives.omega23);
        h.hermitian_pair(index(4, n), index(1, n), o41);
    }
    h.hermitian_pair(index(3, 0), index(4, 1), scheme.g34);
    for n in 0..2 {
        h.push(index(4, n), index(4, n), Complex64::new(scheme.detuning, 0.0));
    }
    h
}

/// H(t) − (i/2) Σ L†L over all decay channels and cavity loss.
pub(crate) fn effective_sparse(scheme: &LevelScheme, drives: &DriveSchedule, omega41: &Pulse, t: f64) -> Sparse {
    let mut h = hamiltonian_sparse(scheme, drives, omega41, t);
    for level in 0..LEVELS {
        let atomic = match level {
            2 => scheme.gamma_2,
            3 => scheme.gamma_3(),
            4 => scheme.gamma_4,
            _ => 0.0,
        };
        for n in 0..2 {
            if level == DUMP {
                continue;
            }
            let rate = atomic + scheme.kappa() * n as f64;
            h.push(index(level, n), index(level, n), Complex64::new(0.0, -0.5 * rate));
        }
    }
    h
}

/// H(t) = Ω12|1⟩⟨2| + Ω23|2⟩⟨3| + g34 a|3⟩⟨4| + Ω41|4⟩⟨1| + δ|4⟩⟨4| + h.c. on the 12-dimensional space.
pub fn build_hamiltonian(scheme: &LevelScheme, drives: &DriveSchedule, t: f64) -> Matrix {
    hamiltonian_sparse(scheme, drives, &drives.effective_omega41(scheme), t).to_dense()
}

/// Non-Hermitian effective Hamiltonian H(t) − (i/2) Σ L†L.
pub fn build_effective_hamiltonian(scheme: &LevelScheme, drives: &DriveSchedule, t: f64) -> Matrix {
    effective_sparse(scheme, drives, &drives.effective_omega41(scheme), t).to_dense()
}
