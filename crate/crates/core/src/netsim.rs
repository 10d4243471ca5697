//! Monte Carlo estimation of entanglement-distribution rates.
//!
//! Every multiplexed link attempt is a Bernoulli trial with success
//! probability P_mux, so the number of attempts until success is geometric.
//! Links and repeater chains are simulated by sampling those attempt counts
//! and combining the resulting link times with the two-group barrier
//! structure of the repeater protocol.
//!
//! Each trial draws from its own ChaCha stream (`set_stream(trial_index)` on a
//! generator keyed by the master seed), and trial times are reduced in index
//! order, so results do not depend on how trials are scheduled across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::link::{attempt_rate, binomial_tail, pair_probability, LinkConfig, LinkError, StepRates};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("success probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("link success probability is zero (segment {length_km} km, {atoms} atoms); time to success diverges")]
    DivergingTime { length_km: f64, atoms: u32 },
    #[error("{bell_pairs} Bell pairs need more atoms than the {atoms} available per node")]
    AtomBudget { bell_pairs: u32, atoms: u32 },
    #[error("invalid {name} = {value}: {constraint}")]
    Invalid { name: &'static str, value: f64, constraint: &'static str },
    #[error("threshold {threshold} Hz is not crossed in [{lo} km, {hi} km] (rates {rate_lo} Hz, {rate_hi} Hz)")]
    Bracket { threshold: f64, lo: f64, hi: f64, rate_lo: f64, rate_hi: f64 },
    #[error(transparent)]
    Link(#[from] LinkError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometricMethod {
    /// ⌈ln U / ln(1 − p)⌉ from one uniform draw.
    #[default]
    InverseTransform,
    /// Count Bernoulli(p) events until the first success.
    BernoulliCounting,
}

/// Draw M ~ Geometric(p) on {1, 2, ...}.
pub fn sample_geometric<R: Rng + ?Sized>(p: f64, rng: &mut R, method: GeometricMethod) -> Result<u64, NetError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(NetError::InvalidProbability(p));
    }
    if p == 1.0 {
        return Ok(1);
    }
    Ok(match method {
        GeometricMethod::InverseTransform => {
            // u in (0, 1]
            let u = 1.0 - rng.random::<f64>();
            let m = (u.ln() / (-p).ln_1p()).ceil();
            if m < 1.0 {
                1
            } else if m >= u64::MAX as f64 {
                u64::MAX
            } else {
                m as u64
            }
        }
        GeometricMethod::BernoulliCounting => {
            let mut m = 1;
            while !rng.random_bool(p) {
                m += 1;
            }
            m
        }
    })
}

/// Generator for one trial: the master seed selects the key, the trial index the stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Mean time to success from Q independent trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub mean_time: f64,
    /// 1 / `mean_time`, Hz.
    pub rate: f64,
    /// RMS deviation of the trial times about their mean.
    pub rms_deviation: f64,
    pub trials: u32,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial_times: Option<Vec<f64>>,
}

impl RateEstimate {
    fn from_times(times: Vec<f64>, seed: u64, keep: bool) -> Self {
        let q = times.len() as f64;
        let mean_time = times.iter().sum::<f64>() / q;
        let var = times.iter().map(|t| (t - mean_time).powi(2)).sum::<f64>() / q;
        RateEstimate {
            mean_time,
            rate: 1.0 / mean_time,
            rms_deviation: var.sqrt(),
            trials: times.len() as u32,
            seed,
            trial_times: keep.then_some(times),
        }
    }

    /// Standard error of `mean_time`.
    pub fn standard_error(&self) -> f64 {
        self.rms_deviation / (self.trials as f64).sqrt()
    }

    /// Standard error of `rate`, by first-order propagation through 1/t.
    pub fn rate_standard_error(&self) -> f64 {
        self.standard_error() / (self.mean_time * self.mean_time)
    }
}

/// How the ladder of B sequential Bell pairs interacts with the group barrier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderBarrier {
    /// Every rung is a full Group 1 / Group 2 round: the network waits for
    /// all links to finish pair b before any link starts pair b + 1.
    #[default]
    PerRung,
    /// Each link climbs its whole ladder independently; each group waits for
    /// its slowest link's B-th pair.
    PerLink,
}

/// One rung of a link ladder: a multiplexed attempt with a fixed atom budget.
#[derive(Clone, Copy, Debug)]
struct Rung {
    attempt_rate: f64,
    success: f64,
}

impl Rung {
    fn new(template: &LinkConfig, length_km: f64, atoms: u32, rates: &StepRates) -> Result<Self, NetError> {
        let cfg = template.with_length(length_km).with_atoms(atoms);
        let success = binomial_tail(atoms, 1, pair_probability(&cfg));
        if !(success > 0.0) {
            return Err(NetError::DivergingTime { length_km, atoms });
        }
        Ok(Rung { attempt_rate: attempt_rate(length_km, atoms, rates), success })
    }

    fn sample<R: Rng>(&self, rng: &mut R, method: GeometricMethod) -> f64 {
        // success > 0 was checked on construction
        let m = sample_geometric(self.success, rng, method).unwrap_or(u64::MAX);
        m as f64 / self.attempt_rate
    }
}

/// Rungs for one link with `offset` atoms per node already holding stored pairs.
fn ladder(
    template: &LinkConfig,
    length_km: f64,
    atoms: u32,
    bell_pairs: u32,
    offset: u32,
    rates: &StepRates,
) -> Result<Vec<Rung>, NetError> {
    if bell_pairs + offset > atoms {
        return Err(NetError::AtomBudget { bell_pairs: bell_pairs + offset, atoms });
    }
    (0..bell_pairs).map(|b| Rung::new(template, length_km, atoms - b - offset, rates)).collect()
}

fn run_trials<F>(trials: u32, seed: u64, keep: bool, trial: F) -> RateEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let times: Vec<f64> = (0..trials as u64).into_par_iter().map(|i| trial(&mut trial_rng(seed, i))).collect();
    RateEstimate::from_times(times, seed, keep)
}

/// Shared Monte Carlo controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub trials: u32,
    pub seed: u64,
    pub sampler: GeometricMethod,
    pub keep_trial_times: bool,
}

impl McSettings {
    pub fn new(trials: u32, seed: u64) -> Self {
        McSettings { trials, seed, sampler: GeometricMethod::default(), keep_trial_times: false }
    }

    fn validate(&self) -> Result<(), NetError> {
        if self.trials == 0 {
            return Err(NetError::Invalid { name: "trials", value: 0.0, constraint: "must be >= 1" });
        }
        Ok(())
    }
}

/// Single link: B sequential multiplexed successes, the b-th using N − (b − 1) atoms.
pub fn simulate_single_link(cfg: &LinkConfig, rates: &StepRates, mc: &McSettings) -> Result<RateEstimate, NetError> {
    cfg.validate()?;
    rates.validate()?;
    mc.validate()?;
    let rungs = ladder(cfg, cfg.length_km, cfg.atoms, cfg.bell_pairs, 0, rates)?;
    let method = mc.sampler;
    Ok(run_trials(mc.trials, mc.seed, mc.keep_trial_times, |rng| rungs.iter().map(|r| r.sample(rng, method)).sum()))
}

/// Sampled attempt counts M for a single B = 1 link (the quantity compared against 1/P_mux).
pub fn sample_attempt_counts(cfg: &LinkConfig, mc: &McSettings) -> Result<Vec<u64>, NetError> {
    cfg.validate()?;
    mc.validate()?;
    let p = crate::link::mux_probability(cfg);
    if !(p > 0.0) {
        return Err(NetError::DivergingTime { length_km: cfg.length_km, atoms: cfg.atoms });
    }
    (0..mc.trials as u64).into_par_iter().map(|i| sample_geometric(p, &mut trial_rng(mc.seed, i), mc.sampler)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// End-to-end length L, km.
    pub total_length_km: f64,
    /// Nesting level m: the chain has 2^m segments of length L / 2^m.
    pub nesting: u32,
    pub atoms: u32,
    pub bell_pairs: u32,
    /// Qubit coherence time T2, s.
    pub t2: f64,
    pub ladder: LadderBarrier,
    /// Efficiencies and attenuation; its length, atom and pair fields are ignored.
    pub link: LinkConfig,
    pub rates: StepRates,
    pub mc: McSettings,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            total_length_km: 1000.0,
            nesting: 4,
            atoms: 200,
            bell_pairs: 1,
            t2: 1.0,
            ladder: LadderBarrier::default(),
            link: LinkConfig::default(),
            rates: StepRates::default(),
            mc: McSettings::new(5000, 0),
        }
    }
}

impl NetworkConfig {
    pub fn segment_length_km(&self) -> f64 {
        self.total_length_km / 2f64.powi(self.nesting as i32)
    }

    /// Links per group, 2^(m−1).
    pub fn links_per_group(&self) -> usize {
        1usize << self.nesting.saturating_sub(1)
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if !(self.total_length_km > 0.0 && self.total_length_km.is_finite()) {
            return Err(NetError::Invalid {
                name: "total_length_km",
                value: self.total_length_km,
                constraint: "must be finite and > 0",
            });
        }
        if self.nesting > 20 {
            return Err(NetError::Invalid { name: "nesting", value: self.nesting as f64, constraint: "must be <= 20" });
        }
        if self.bell_pairs == 0 {
            return Err(NetError::Invalid { name: "bell_pairs", value: 0.0, constraint: "must be >= 1" });
        }
        if !(self.t2 > 0.0) {
            return Err(NetError::Invalid { name: "t2", value: self.t2, constraint: "must be > 0" });
        }
        self.link.validate()?;
        self.rates.validate()?;
        self.mc.validate()
    }

    fn segment_link(&self) -> LinkConfig {
        self.link.with_length(self.segment_length_km()).with_atoms(self.atoms).with_bell_pairs(self.bell_pairs)
    }
}

/// Two-group repeater chain with B = 1 (or the ladder when `bell_pairs` > 1).
///
/// Group 1 links use N atoms per node; Group 2 links use N − 1 because one
/// atom per node already holds a Group 1 pair. `nesting = 0` is a single link.
pub fn simulate_network(cfg: &NetworkConfig) -> Result<RateEstimate, NetError> {
    cfg.validate()?;
    if cfg.nesting == 0 {
        return simulate_single_link(&cfg.segment_link(), &cfg.rates, &cfg.mc);
    }
    let seg = cfg.segment_length_km();
    let (n, b) = (cfg.atoms, cfg.bell_pairs);
    // Group 1 link: b-th pair with N − (b−1) atoms; Group 2 link: N − b.
    let group1 = ladder(&cfg.link, seg, n, b, 0, &cfg.rates)?;
    let group2 = ladder(&cfg.link, seg, n, b, 1, &cfg.rates)?;
    let links = cfg.links_per_group();
    let method = cfg.mc.sampler;
    let mc = cfg.mc;
    let est = match cfg.ladder {
        LadderBarrier::PerRung => run_trials(mc.trials, mc.seed, mc.keep_trial_times, |rng| {
            let mut total = 0.0;
            for (r1, r2) in group1.iter().zip(&group2) {
                total += slowest(links, || r1.sample(rng, method));
                total += slowest(links, || r2.sample(rng, method));
            }
            total
        }),
        LadderBarrier::PerLink => run_trials(mc.trials, mc.seed, mc.keep_trial_times, |rng| {
            let g1 = slowest(links, || group1.iter().map(|r| r.sample(rng, method)).sum());
            let g2 = slowest(links, || group2.iter().map(|r| r.sample(rng, method)).sum());
            g1 + g2
        }),
    };
    Ok(est)
}

/// Multi-Bell-pair network; identical to [`simulate_network`], which already
/// handles `bell_pairs > 1`, but rejects an insufficient atom budget up front.
pub fn simulate_multibell_network(cfg: &NetworkConfig) -> Result<RateEstimate, NetError> {
    let needed = if cfg.nesting == 0 { cfg.bell_pairs } else { cfg.bell_pairs + 1 };
    if needed > cfg.atoms {
        return Err(NetError::AtomBudget { bell_pairs: needed, atoms: cfg.atoms });
    }
    simulate_network(cfg)
}

fn slowest<F: FnMut() -> f64>(links: usize, mut sample: F) -> f64 {
    (0..links).map(|_| sample()).fold(0.0, f64::max)
}

/// Closed-form ladder rate for one link: the inverse of the summed expected
/// rung times Σ_b 1 / (Γ_link · P_mux) with N − (b − 1) atoms on rung b.
pub fn ladder_rate(cfg: &LinkConfig, rates: &StepRates) -> Result<f64, NetError> {
    cfg.validate()?;
    rates.validate()?;
    let rungs = ladder(cfg, cfg.length_km, cfg.atoms, cfg.bell_pairs, 0, rates)?;
    Ok(1.0 / rungs.iter().map(|r| 1.0 / (r.attempt_rate * r.success)).sum::<f64>())
}

/// Rate below which stored pairs decohere faster than they are produced: B·2^m/(2π T2).
pub fn coherence_threshold(nesting: u32, bell_pairs: u32, t2: f64) -> f64 {
    bell_pairs as f64 * 2f64.powi(nesting as i32) / (std::f64::consts::TAU * t2)
}

/// Direct transmission of photon pairs from a source at `source_rate` Hz over
/// fiber with `attenuation_db_per_km` loss.
pub fn direct_photon_rate(length_km: f64, source_rate: f64, attenuation_db_per_km: f64) -> f64 {
    source_rate * 10f64.powf(-attenuation_db_per_km * length_km / 10.0)
}

/// Bisect for the distance at which `rate_at(L)` falls to `threshold`.
///
/// `rate_at(lo)` must exceed the threshold and `rate_at(hi)` must not. The
/// returned distance is the midpoint of the final bracket, whose width is at
/// most `resolution_km`.
pub fn find_max_distance<F>(
    mut rate_at: F,
    threshold: f64,
    lo: f64,
    hi: f64,
    resolution_km: f64,
) -> Result<f64, NetError>
where
    F: FnMut(f64) -> Result<f64, NetError>,
{
    let (mut lo, mut hi) = (lo, hi);
    let rate_lo = rate_at(lo)?;
    let rate_hi = rate_at(hi)?;
    if !(rate_lo > threshold && rate_hi <= threshold) {
        return Err(NetError::Bracket { threshold, lo, hi, rate_lo, rate_hi });
    }
    while hi - lo > resolution_km {
        let mid = 0.5 * (lo + hi);
        if rate_at(mid)? > threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest network length whose simulated rate stays above its coherence threshold.
pub fn max_network_distance(base: &NetworkConfig, lo: f64, hi: f64, resolution_km: f64) -> Result<f64, NetError> {
    let threshold = coherence_threshold(base.nesting, base.bell_pairs, base.t2);
    find_max_distance(
        |l| simulate_multibell_network(&NetworkConfig { total_length_km: l, ..*base }).map(|e| e.rate),
        threshold,
        lo,
        hi,
        resolution_km,
    )
}
