//! Closed-form single-link rates for multiplexed heralded entanglement.
//!
//! Rates are ordinary frequencies in Hz (attempts per second), lengths in km.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::SPEED_OF_LIGHT;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("invalid {name} = {value}: {constraint}")]
    Invalid { name: &'static str, value: f64, constraint: &'static str },
    #[error("success probability is zero; the expected number of attempts diverges")]
    InfiniteAttempts,
}

fn check(name: &'static str, value: f64, ok: bool, constraint: &'static str) -> Result<(), LinkError> {
    if ok && !value.is_nan() {
        Ok(())
    } else {
        Err(LinkError::Invalid { name, value, constraint })
    }
}

/// Rates of the constituent steps of one multiplexed attempt.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepRates {
    /// Cooling and optical pumping, Hz.
    pub init: f64,
    /// π/2 rotation, Hz.
    pub half_pi: f64,
    /// π rotation, Hz.
    pub pi: f64,
    /// Per-atom four-wave-mixing rate; a full attempt spends 2N/`fwm` seconds on it.
    pub fwm: f64,
    /// Refractive index of the fiber.
    pub refractive_index: f64,
}

impl Default for StepRates {
    fn default() -> Self {
        StepRates { init: 10e3, half_pi: 100e3, pi: 50e3, fwm: 200e3, refractive_index: 1.4 }
    }
}

impl StepRates {
    pub fn validate(&self) -> Result<(), LinkError> {
        for (name, v) in [
            ("init", self.init),
            ("half_pi", self.half_pi),
            ("pi", self.pi),
            ("fwm", self.fwm),
            ("refractive_index", self.refractive_index),
        ] {
            check(name, v, v > 0.0 && v.is_finite(), "must be finite and > 0")?;
        }
        Ok(())
    }

    /// Speed of light in the fiber, m/s.
    pub fn fiber_speed(&self) -> f64 {
        SPEED_OF_LIGHT / self.refractive_index
    }

    /// Round-trip signalling time 2L/c for a link of `length_km`, s.
    pub fn comm_time(&self, length_km: f64) -> f64 {
        2.0 * length_km * 1e3 / self.fiber_speed()
    }

    /// Time spent on qubit rotations in one attempt, 1/Γ_π/2 + 1/Γ_π
    /// (equal to 3/Γ_π/2 when Γ_π = Γ_π/2 / 2).
    pub fn rotation_time(&self) -> f64 {
        1.0 / self.half_pi + 1.0 / self.pi
    }

    pub fn fwm_time(&self, atoms: u32) -> f64 {
        2.0 * atoms as f64 / self.fwm
    }

    /// Duration of one multiplexed attempt, s.
    pub fn attempt_time(&self, length_km: f64, atoms: u32) -> f64 {
        1.0 / self.init + self.rotation_time() + self.fwm_time(atoms) + self.comm_time(length_km)
    }
}

/// Attempt rate Γ_link(L, N), Hz.
pub fn attempt_rate(length_km: f64, atoms: u32, rates: &StepRates) -> f64 {
    1.0 / rates.attempt_time(length_km, atoms)
}

/// Fraction of an attempt spent on rotations and four-wave mixing.
pub fn duty_cycle(length_km: f64, atoms: u32, rates: &StepRates) -> f64 {
    (rates.rotation_time() + rates.fwm_time(atoms)) / rates.attempt_time(length_km, atoms)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub length_km: f64,
    pub atoms: u32,
    pub eta_fwm: f64,
    pub eta_fiber: f64,
    pub eta_det: f64,
    pub attenuation_length_km: f64,
    pub bell_pairs: u32,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            length_km: 100.0,
            atoms: 1,
            eta_fwm: 0.364,
            eta_fiber: 0.9,
            eta_det: 0.9,
            attenuation_length_km: 20.7,
            bell_pairs: 1,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<(), LinkError> {
        check(
            "length_km",
            self.length_km,
            self.length_km >= 0.0 && self.length_km.is_finite(),
            "must be finite and >= 0",
        )?;
        check("atoms", self.atoms as f64, self.atoms >= 1, "must be >= 1")?;
        check("bell_pairs", self.bell_pairs as f64, self.bell_pairs >= 1, "must be >= 1")?;
        for (name, v) in [("eta_fwm", self.eta_fwm), ("eta_fiber", self.eta_fiber), ("eta_det", self.eta_det)] {
            check(name, v, (0.0..=1.0).contains(&v), "must lie in [0, 1]")?;
        }
        check("attenuation_length_km", self.attenuation_length_km, self.attenuation_length_km > 0.0, "must be > 0")
    }

    pub fn with_length(self, length_km: f64) -> Self {
        LinkConfig { length_km, ..self }
    }

    pub fn with_atoms(self, atoms: u32) -> Self {
        LinkConfig { atoms, ..self }
    }

    pub fn with_bell_pairs(self, bell_pairs: u32) -> Self {
        LinkConfig { bell_pairs, ..self }
    }

    pub fn transmission(&self) -> f64 {
        (-self.length_km / self.attenuation_length_km).exp()
    }
}

/// Probability p(L) that a given pair of atoms at adjacent nodes is heralded.
pub fn pair_probability(cfg: &LinkConfig) -> f64 {
    let per_side = cfg.eta_fwm * cfg.eta_fiber * cfg.eta_det;
    0.25 * per_side * per_side * cfg.transmission()
}

/// P(X >= k) for X ~ Binomial(n, p).
///
/// Terms are accumulated in log space and summed with Neumaier compensation,
/// starting from the larger end so that tiny p and large n neither underflow
/// nor cancel.
pub fn binomial_tail(n: u32, k: u32, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    // When the upper tail is the bigger half, compute its complement instead.
    let mean = n as f64 * p;
    if (k as f64) <= mean {
        let lower = lower_sum(n, k - 1, p);
        return (1.0 - lower).clamp(0.0, 1.0);
    }
    upper_sum(n, k, p).clamp(0.0, 1.0)
}

fn ln_binom_pmf(n: u32, i: u32, ln_p: f64, ln_q: f64) -> f64 {
    ln_choose(n, i) + i as f64 * ln_p + (n - i) as f64 * ln_q
}

/// ln C(n, k) via a running sum of logs; exact enough for n in the thousands.
pub fn ln_choose(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut acc = Neumaier::default();
    for i in 0..k {
        acc.add(((n - i) as f64).ln() - ((i + 1) as f64).ln());
    }
    acc.sum()
}

fn upper_sum(n: u32, k: u32, p: f64) -> f64 {
    let (ln_p, ln_q) = (p.ln(), (-p).ln_1p());
    sum_log_terms((k..=n).map(|i| ln_binom_pmf(n, i, ln_p, ln_q)))
}

fn lower_sum(n: u32, k_max: u32, p: f64) -> f64 {
    let (ln_p, ln_q) = (p.ln(), (-p).ln_1p());
    sum_log_terms((0..=k_max).map(|i| ln_binom_pmf(n, i, ln_p, ln_q)))
}

fn sum_log_terms<I: Iterator<Item = f64>>(terms: I) -> f64 {
    let logs: Vec<f64> = terms.collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut acc = Neumaier::default();
    for l in logs {
        acc.add((l - peak).exp());
    }
    acc.sum() * peak.exp()
}

#[derive(Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Probability P_mux that at least B of the N atom pairs are heralded in one attempt.
pub fn mux_probability(cfg: &LinkConfig) -> f64 {
    binomial_tail(cfg.atoms, cfg.bell_pairs, pair_probability(cfg))
}

/// Γ_mux = Γ_link · P_mux, Hz.
pub fn mux_rate(cfg: &LinkConfig, rates: &StepRates) -> f64 {
    attempt_rate(cfg.length_km, cfg.atoms, rates) * mux_probability(cfg)
}

/// Mean number of multiplexed attempts until success, 1/P_mux.
pub fn expected_attempts(cfg: &LinkConfig) -> Result<f64, LinkError> {
    let p = mux_probability(cfg);
    if p > 0.0 {
        Ok(1.0 / p)
    } else {
        Err(LinkError::InfiniteAttempts)
    }
}

/// Full analytic summary of one link configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkSummary {
    pub attempt_rate: f64,
    pub pair_probability: f64,
    pub mux_probability: f64,
    pub expected_attempts: f64,
    pub rate: f64,
    pub duty_cycle: f64,
}

pub fn summarize(cfg: &LinkConfig, rates: &StepRates) -> Result<LinkSummary, LinkError> {
    cfg.validate()?;
    rates.validate()?;
    let p_mux = mux_probability(cfg);
    Ok(LinkSummary {
        attempt_rate: attempt_rate(cfg.length_km, cfg.atoms, rates),
        pair_probability: pair_probability(cfg),
        mux_probability: p_mux,
        expected_attempts: if p_mux > 0.0 { 1.0 / p_mux } else { f64::INFINITY },
        rate: mux_rate(cfg, rates),
        duty_cycle: duty_cycle(cfg.length_km, cfg.atoms, rates),
    })
}
