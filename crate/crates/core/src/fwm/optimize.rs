use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dynamics::{forward_peak, max_step};
use super::{simulate_protocol, DriveSchedule, FwmError, LevelScheme, Pulse, SimOptions};

/// A tunable coordinate of a [`DriveSchedule`]. Rabi frequencies are
/// expressed in units of γ and times in ns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Omega12Peak,
    /// FWHM of a Gaussian or total length of a ramped pulse.
    Omega12Width,
    Omega23,
    Omega41Peak,
    Omega41Width,
    /// Centre of a Gaussian or start of a ramped pulse.
    Omega41Time,
}

fn width_mut(p: &mut Pulse) -> &mut f64 {
    match p {
        Pulse::Gaussian { fwhm, .. } => fwhm,
        Pulse::RampedFlat { length, .. } => length,
    }
}

fn time_mut(p: &mut Pulse) -> &mut f64 {
    match p {
        Pulse::Gaussian { center, .. } => center,
        Pulse::RampedFlat { start, .. } => start,
    }
}

fn peak_mut(p: &mut Pulse) -> &mut f64 {
    match p {
        Pulse::Gaussian { peak, .. } | Pulse::RampedFlat { peak, .. } => peak,
    }
}

impl Param {
    fn unit(self, scheme: &LevelScheme) -> f64 {
        match self {
            Param::Omega12Peak | Param::Omega23 | Param::Omega41Peak => scheme.gamma_unit,
            Param::Omega12Width | Param::Omega41Width | Param::Omega41Time => 1e-9,
        }
    }

    fn slot(self, d: &mut DriveSchedule) -> &mut f64 {
        match self {
            Param::Omega12Peak => peak_mut(&mut d.omega12),
            Param::Omega12Width => width_mut(&mut d.omega12),
            Param::Omega23 => &mut d.omega23,
            Param::Omega41Peak => peak_mut(&mut d.omega41),
            Param::Omega41Width => width_mut(&mut d.omega41),
            Param::Omega41Time => time_mut(&mut d.omega41),
        }
    }

    /// Value in optimizer units.
    pub fn get(self, scheme: &LevelScheme, d: &DriveSchedule) -> f64 {
        let mut d = *d;
        *self.slot(&mut d) / self.unit(scheme)
    }

    pub fn set(self, scheme: &LevelScheme, d: &mut DriveSchedule, value: f64) {
        *self.slot(d) = value * self.unit(scheme);
    }
}

/// What an optimization stage maximizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stage {
    /// Peak coherent population of `level` with Ω41 switched off.
    Transfer { level: usize },
    /// Probability of emitting a photon and returning to |1⟩.
    Return,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOutcome {
    pub schedule: DriveSchedule,
    /// Objective at `schedule`; `None` when no evaluation was allowed.
    pub objective: Option<f64>,
    pub evaluations: usize,
    /// False when the budget ran out before the local search converged.
    pub converged: bool,
}

/// Peak coherent population of `level` during a run of `window` seconds.
pub fn peak_population(scheme: &LevelScheme, drives: &DriveSchedule, level: usize, window: f64) -> f64 {
    forward_peak(scheme, drives, level, max_step(scheme, drives).min(1e-9), window)
}

fn objective(scheme: &LevelScheme, d: &DriveSchedule, stage: &Stage, options: &SimOptions) -> f64 {
    match *stage {
        Stage::Transfer { level } => {
            let off = DriveSchedule { omega41: Pulse::off(), ..*d };
            let (start, end) = d.omega12.span();
            peak_population(scheme, &off, level, end - start + 300e-9)
        }
        Stage::Return => match simulate_protocol(scheme, d, &SimOptions { track_jump_branch: false, ..*options }) {
            Ok(r) => r.return_probability,
            Err(_) => f64::NEG_INFINITY,
        },
    }
}

struct Problem<'a> {
    scheme: &'a LevelScheme,
    start: DriveSchedule,
    stage: Stage,
    params: &'a [(Param, f64, f64)],
    options: &'a SimOptions,
}

impl Problem<'_> {
    fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.params).map(|(v, &(_, lo, hi))| v.clamp(lo, hi)).collect()
    }

    fn schedule(&self, x: &[f64]) -> DriveSchedule {
        let mut d = self.start;
        for (&(p, _, _), &v) in self.params.iter().zip(x) {
            p.set(self.scheme, &mut d, v);
        }
        d
    }

    fn value(&self, x: &[f64]) -> f64 {
        objective(self.scheme, &self.schedule(x), &self.stage, self.options)
    }

    /// Evaluate in parallel, results in input order.
    fn values(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        xs.par_iter().map(|x| self.value(x)).collect()
    }
}

/// Two-phase local optimizer: a coordinate-wise grid refinement followed by a
/// bounded Nelder-Mead polish. Each entry of `params` is (parameter, lower,
/// upper) in optimizer units; `budget` caps the number of objective evaluations.
pub fn optimize_pulses(
    scheme: &LevelScheme,
    start: &DriveSchedule,
    stage: Stage,
    params: &[(Param, f64, f64)],
    budget: usize,
    options: &SimOptions,
) -> Result<OptimizeOutcome, FwmError> {
    scheme.validate()?;
    start.validate()?;
    for &(p, lo, hi) in params {
        if !(lo <= hi && lo.is_finite() && hi.is_finite()) {
            return Err(FwmError::Invalid { name: "optimizer bounds", value: lo, constraint: "need finite lo <= hi" });
        }
        let _ = p;
    }
    if budget == 0 || params.is_empty() {
        return Ok(OptimizeOutcome { schedule: *start, objective: None, evaluations: 0, converged: budget > 0 });
    }
    let problem = Problem { scheme, start: *start, stage, params, options };
    let mut x = problem.clamp(&params.iter().map(|&(p, _, _)| p.get(scheme, start)).collect::<Vec<_>>());
    let mut best = problem.value(&x);
    let mut used = 1;

    // coordinate grid refinement: the first sweep spans each full range, later
    // sweeps narrow around the incumbent
    let mut half_frac = 0.5;
    'rounds: for round in 0..3 {
        let points = if round == 0 { 9 } else { 5 };
        for (i, &(_, lo, hi)) in params.iter().enumerate() {
            if used + points > budget {
                break 'rounds;
            }
            let half = half_frac * (hi - lo);
            let center = if round == 0 { 0.5 * (lo + hi) } else { x[i] };
            let trial: Vec<Vec<f64>> = (0..points)
                .map(|k| {
                    let mut t = x.clone();
                    t[i] = (center - half + 2.0 * half * k as f64 / (points - 1) as f64).clamp(lo, hi);
                    t
                })
                .collect();
            let vals = problem.values(&trial);
            used += points;
            for (t, v) in trial.into_iter().zip(vals) {
                if v > best {
                    best = v;
                    x = t;
                }
            }
        }
        half_frac *= 0.3;
    }

    let (x, best, converged, used) = nelder_mead(&problem, x, best, used, budget);
    Ok(OptimizeOutcome { schedule: problem.schedule(&x), objective: Some(best), evaluations: used, converged })
}

fn nelder_mead(
    problem: &Problem,
    x0: Vec<f64>,
    f0: f64,
    mut used: usize,
    budget: usize,
) -> (Vec<f64>, f64, bool, usize) {
    let n = x0.len();
    let mut simplex = vec![(x0.clone(), -f0)];
    let steps: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let (_, lo, hi) = problem.params[i];
            let step = 0.05 * (hi - lo).max(1e-6);
            let mut v = x0.clone();
            v[i] = if v[i] + step <= hi { v[i] + step } else { v[i] - step };
            v
        })
        .collect();
    if used + n > budget {
        return (x0, f0, false, used);
    }
    for (v, f) in steps.iter().cloned().zip(problem.values(&steps)) {
        simplex.push((v, -f));
    }
    used += n;
    let cost = |x: &[f64], used: &mut usize| {
        *used += 1;
        -problem.value(x)
    };
    let mut converged = false;
    while used < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let size = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread.abs() < 1e-7 && size < 1e-3 {
            converged = true;
            break;
        }
        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / n as f64).collect();
        let toward = |s: f64| -> Vec<f64> {
            let pt: Vec<f64> = centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + s * (w - c)).collect();
            problem.clamp(&pt)
        };
        let xr = toward(-1.0);
        let fr = cost(&xr, &mut used);
        if fr < simplex[0].1 {
            let xe = toward(-2.0);
            let fe = cost(&xe, &mut used);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = toward(-0.5);
                let fc = cost(&xc, &mut used);
                (xc, fc)
            } else {
                let xc = toward(0.5);
                let fc = cost(&xc, &mut used);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                let shrunk: Vec<Vec<f64>> = simplex[1..]
                    .iter()
                    .map(|(v, _)| v.iter().zip(&best).map(|(a, b)| b + 0.5 * (a - b)).collect())
                    .collect();
                let vals = problem.values(&shrunk);
                used += n;
                for (slot, (v, f)) in simplex[1..].iter_mut().zip(shrunk.into_iter().zip(vals)) {
                    *slot = (v, -f);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    if !converged {
        log::warn!("pulse optimization stopped at the evaluation budget ({budget}) before converging");
    }
    (x, -f, converged, used)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingPoint {
    /// Relative timing δ, units of 1/γ.
    pub delta: f64,
    pub fidelity: Option<f64>,
    pub success: f64,
}

/// Fidelity and success probability as Ω41 is shifted by δ/γ.
pub fn sweep_timing(
    scheme: &LevelScheme,
    drives: &DriveSchedule,
    deltas: &[f64],
    options: &SimOptions,
) -> Result<Vec<TimingPoint>, FwmError> {
    if let Some(&bad) = deltas.iter().find(|d| !d.is_finite()) {
        return Err(FwmError::Invalid { name: "delta", value: bad, constraint: "must be finite" });
    }
    let opts = SimOptions { track_jump_branch: false, ..*options };
    deltas
        .par_iter()
        .map(|&delta| {
            let r = simulate_protocol(scheme, &DriveSchedule { timing: delta, ..*drives }, &opts)?;
            Ok(TimingPoint { delta, fidelity: r.heralded_fidelity, success: r.success_probability })
        })
        .collect()
}

/// Point with the smallest |δ| whose fidelity reaches `min_fidelity`.
pub fn choose_operating_point(curve: &[TimingPoint], min_fidelity: f64) -> Option<TimingPoint> {
    curve
        .iter()
        .filter(|p| p.fidelity.is_some_and(|f| f >= min_fidelity))
        .min_by(|a, b| a.delta.abs().total_cmp(&b.delta.abs()))
        .copied()
}

pub fn write_sweep_csv<W: Write>(out: W, curve: &[TimingPoint]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta", "fidelity", "success"])?;
    for p in curve {
        let f = p.fidelity.map(|f| f.to_string()).unwrap_or_default();
        w.write_record([p.delta.to_string(), f, p.success.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Settings for optimizing the detuned scheme at each detuning.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetunedSearch {
    /// Upper bound on Ω12, units of γ.
    pub omega12_max: f64,
    /// Upper bound on Ω23, units of γ. Without it the |3⟩-transfer stage
    /// drives Ω23 up until the |2⟩-|3⟩ splitting detunes the Raman return.
    pub omega23_max: f64,
    /// Upper bound on Ω41, units of γ.
    pub omega41_max: f64,
    /// Allowed Ω41 lengths, ns.
    pub length41: (f64, f64),
    /// Evaluation budget per stage.
    pub budget: usize,
    /// Window cap used while optimizing; the reported point uses the caller's options.
    pub search_window: f64,
}

impl Default for DetunedSearch {
    fn default() -> Self {
        DetunedSearch {
            omega12_max: 80.0,
            omega23_max: 20.0,
            omega41_max: 150.0,
            length41: (300.0, 500.0),
            budget: 120,
            search_window: 3e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetunedPoint {
    /// Detuning of |4⟩, rad/s.
    pub detuning: f64,
    pub schedule: DriveSchedule,
    /// Peak |3⟩ population reached by the first stage.
    pub transfer: f64,
    pub fidelity: Option<f64>,
    pub success: f64,
}

/// Two-stage optimization of the detuned scheme at one detuning: Ω12 (65 ns
/// with 20 ns ramps) and Ω23 maximize the peak |3⟩ population, then the Ω41
/// amplitude and length maximize the return probability.
pub fn optimize_detuned(
    scheme: &LevelScheme,
    detuning: f64,
    search: &DetunedSearch,
    options: &SimOptions,
) -> Result<DetunedPoint, FwmError> {
    let s = LevelScheme { detuning, ..*scheme };
    let g = s.gamma_unit;
    let start =
        DriveSchedule::detuned(20.0 * g, 10.0 * g, 10.0 * g, 0.5 * (search.length41.0 + search.length41.1) * 1e-9);
    let fast = SimOptions { max_window: search.search_window, track_jump_branch: false, ..*options };
    let stage1 = optimize_pulses(
        &s,
        &start,
        Stage::Transfer { level: 3 },
        &[(Param::Omega12Peak, 1.0, search.omega12_max), (Param::Omega23, 1.0, search.omega23_max)],
        search.budget,
        &fast,
    )?;
    let stage2 = optimize_pulses(
        &s,
        &stage1.schedule,
        Stage::Return,
        &[(Param::Omega41Peak, 1.0, search.omega41_max), (Param::Omega41Width, search.length41.0, search.length41.1)],
        search.budget,
        &fast,
    )?;
    let r = simulate_protocol(&s, &stage2.schedule, options)?;
    Ok(DetunedPoint {
        detuning,
        schedule: stage2.schedule,
        transfer: stage1.objective.unwrap_or(f64::NAN),
        fidelity: r.heralded_fidelity,
        success: r.success_probability,
    })
}

/// [`optimize_detuned`] over several detunings, in input order.
pub fn detuned_scan(
    scheme: &LevelScheme,
    detunings: &[f64],
    search: &DetunedSearch,
    options: &SimOptions,
) -> Result<Vec<DetunedPoint>, FwmError> {
    detunings.par_iter().map(|&d| optimize_detuned(scheme, d, search, options)).collect()
}
