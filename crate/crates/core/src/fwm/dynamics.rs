use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{effective_sparse, index, DriveSchedule, FwmError, LevelScheme, Matrix, Outcoupling, Sparse, State, DIM};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

// accumulator slots
const DUMP_2: usize = 0;
const DUMP_4: usize = 1;
const D3_P1: usize = 2;
const D3_P2: usize = 3;
const CAV_EXT: usize = 4;
const CAV_INT: usize = 5;
const SECOND_EXT: usize = 6;
const HERALD_EXT: usize = 7;
const N_ACC: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimOptions {
    /// Fixed step; `None` picks min(1 ns, 0.02 / fastest rate).
    pub dt: Option<f64>,
    pub outcoupling: Outcoupling,
    /// Photons emitted after this time do not herald.
    pub herald_until: Option<f64>,
    /// The window is extended until every excited population is below this.
    pub settle_tolerance: f64,
    /// Hard cap on the window length after the first pulse starts, s.
    pub max_window: f64,
    /// Propagate the jump branch as a density matrix to obtain the
    /// two-photon weight and an independent fidelity.
    pub track_jump_branch: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            dt: None,
            outcoupling: Outcoupling::default(),
            herald_until: None,
            settle_tolerance: 1e-6,
            max_window: 20e-6,
            track_jump_branch: true,
        }
    }
}

/// Integrated probability that left the coherent manifold through each channel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelWeights {
    pub dump_2: f64,
    pub dump_4: f64,
    pub decay_3_p1: f64,
    pub decay_3_p2: f64,
    pub cavity_ext: f64,
    pub cavity_int: f64,
}

impl ChannelWeights {
    fn from_acc(acc: &[f64; N_ACC]) -> Self {
        ChannelWeights {
            dump_2: acc[DUMP_2],
            dump_4: acc[DUMP_4],
            decay_3_p1: acc[D3_P1],
            decay_3_p2: acc[D3_P2],
            cavity_ext: acc[CAV_EXT],
            cavity_int: acc[CAV_INT],
        }
    }

    pub fn total(&self) -> f64 {
        self.dump_2 + self.dump_4 + self.decay_3_p1 + self.decay_3_p2 + self.cavity_ext + self.cavity_int
    }

    pub fn cavity(&self) -> f64 {
        self.cavity_ext + self.cavity_int
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FwmResult {
    /// η_out · P_return: photon in the fiber with the atom back in |1⟩.
    pub success_probability: f64,
    /// P_return / P_emit over heralding photons; `None` when no photon is emitted.
    pub heralded_fidelity: Option<f64>,
    /// κ ∫⟨a†a⟩ dt over the heralding window.
    pub emission_probability: f64,
    /// Probability that a heralding photon is emitted and the atom ends in |1⟩.
    pub return_probability: f64,
    pub outcoupling_factor: f64,
    /// Fidelity from the density-matrix jump branch, when tracked.
    pub jump_branch_fidelity: Option<f64>,
    /// Probability of a second κ_ext emission after the heralding one, when tracked.
    pub two_photon_weight: Option<f64>,
    pub channels: ChannelWeights,
    /// Coherent population of levels 0..4 at the end of the window.
    pub final_populations: [f64; 5],
    /// Largest deviation of (coherent + channel weights) from 1.
    pub norm_defect: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    /// κ_ext ⟨a†a⟩ at each time, rad/s.
    pub photon_waveform: Vec<f64>,
    /// Coherent populations of levels 0..4 at each time.
    pub populations: Vec<[f64; 5]>,
    /// False when the window hit `max_window` before the excited states emptied.
    pub settled: bool,
}

impl FwmResult {
    /// Simpson integral of the photon waveform.
    pub fn waveform_integral(&self) -> f64 {
        simpson(&self.photon_waveform, self.dt)
    }
}

/// Largest coupling or rate in the problem, rad/s.
pub fn fastest_rate(scheme: &LevelScheme, drives: &DriveSchedule) -> f64 {
    [
        scheme.g34,
        scheme.kappa(),
        scheme.detuning.abs(),
        scheme.gamma_2,
        scheme.gamma_4,
        scheme.gamma_3(),
        drives.omega12.peak(),
        drives.omega41.peak(),
        drives.omega23,
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub fn max_step(scheme: &LevelScheme, drives: &DriveSchedule) -> f64 {
    0.02 / fastest_rate(scheme, drives)
}

#[derive(Clone)]
struct Y {
    psi: State,
    acc: [f64; N_ACC],
    rho: Option<Box<Matrix>>,
}

impl Y {
    /// self + h * k
    fn axpy(&self, h: f64, k: &Y) -> Y {
        let mut out = self.clone();
        for (o, d) in out.psi.iter_mut().zip(&k.psi) {
            *o += d * h;
        }
        for (o, d) in out.acc.iter_mut().zip(&k.acc) {
            *o += d * h;
        }
        if let (Some(r), Some(dr)) = (out.rho.as_mut(), k.rho.as_ref()) {
            for (row, drow) in r.iter_mut().zip(dr.iter()) {
                for (o, d) in row.iter_mut().zip(drow) {
                    *o += d * h;
                }
            }
        }
        out
    }
}

fn lower(psi: &State) -> State {
    let mut out = [ZERO; DIM];
    for level in 0..super::LEVELS {
        out[index(level, 0)] = psi[index(level, 1)];
    }
    out
}

fn level_pop(psi: &State, level: usize) -> f64 {
    psi[index(level, 0)].norm_sqr() + psi[index(level, 1)].norm_sqr()
}

fn photon_number(psi: &State) -> f64 {
    (0..super::LEVELS).map(|l| psi[index(l, 1)].norm_sqr()).sum()
}

struct Rhs<'a> {
    scheme: &'a LevelScheme,
    herald_until: f64,
}

impl Rhs<'_> {
    fn eval(&self, h: &Sparse, t: f64, y: &Y) -> Y {
        let s = self.scheme;
        let mut dpsi = [ZERO; DIM];
        h.evolve(&y.psi, &mut dpsi);
        let n = photon_number(&y.psi);
        let herald = if t <= self.herald_until { 1.0 } else { 0.0 };
        let mut acc = [0.0; N_ACC];
        acc[DUMP_2] = s.gamma_2 * level_pop(&y.psi, 2);
        acc[DUMP_4] = s.gamma_4 * level_pop(&y.psi, 4);
        let p3 = level_pop(&y.psi, 3);
        acc[D3_P1] = s.gamma_3_p1 * p3;
        acc[D3_P2] = s.gamma_3_p2 * p3;
        acc[CAV_EXT] = s.kappa_ext * n;
        acc[CAV_INT] = s.kappa_int * n;
        acc[HERALD_EXT] = s.kappa_ext * n * herald;
        let rho = y.rho.as_ref().map(|r| {
            acc[SECOND_EXT] = s.kappa_ext * (0..super::LEVELS).map(|l| r[index(l, 1)][index(l, 1)].re).sum::<f64>();
            let left = h.mul_left(r);
            let right = h.mul_right_adjoint(r);
            let jumped = lower(&y.psi);
            let src = s.kappa_ext * herald;
            let mut d = Box::new([[ZERO; DIM]; DIM]);
            for i in 0..DIM {
                for j in 0..DIM {
                    let c = left[i][j] - right[i][j];
                    d[i][j] = Complex64::new(c.im, -c.re) + jumped[i] * jumped[j].conj() * src;
                }
            }
            d
        });
        Y { psi: dpsi, acc, rho }
    }
}

fn rk4_step(rhs: &Rhs, hs: [&Sparse; 3], t: f64, dt: f64, y: &Y) -> Y {
    let k1 = rhs.eval(hs[0], t, y);
    let k2 = rhs.eval(hs[1], t + 0.5 * dt, &y.axpy(0.5 * dt, &k1));
    let k3 = rhs.eval(hs[1], t + 0.5 * dt, &y.axpy(0.5 * dt, &k2));
    let k4 = rhs.eval(hs[2], t + dt, &y.axpy(dt, &k3));
    let mut out = y.axpy(dt / 6.0, &k1);
    out = out.axpy(dt / 3.0, &k2);
    out = out.axpy(dt / 3.0, &k3);
    out.axpy(dt / 6.0, &k4)
}

fn adjoint_step(hs: [&Sparse; 3], h: f64, chi: &State) -> State {
    let f = |hm: &Sparse, v: &State| {
        let mut out = [ZERO; DIM];
        hm.evolve_adjoint(v, &mut out);
        out
    };
    let add = |a: &State, s: f64, b: &State| {
        let mut out = *a;
        for (o, d) in out.iter_mut().zip(b) {
            *o += d * s;
        }
        out
    };
    let k1 = f(hs[0], chi);
    let k2 = f(hs[1], &add(chi, 0.5 * h, &k1));
    let k3 = f(hs[1], &add(chi, 0.5 * h, &k2));
    let k4 = f(hs[2], &add(chi, h, &k3));
    let mut out = *chi;
    for i in 0..DIM {
        out[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
    }
    out
}

/// Composite Simpson rule on uniformly spaced samples; the trapezoid rule
/// closes an odd final interval.
pub(crate) fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    let even = if (n - 1) % 2 == 0 { n } else { n - 1 };
    let mut s = 0.0;
    for i in (0..even - 1).step_by(2) {
        s += f[i] + 4.0 * f[i + 1] + f[i + 2];
    }
    s *= h / 3.0;
    if even != n {
        s += 0.5 * h * (f[n - 2] + f[n - 1]);
    }
    s
}

/// Run the heralded protocol from |1⟩ ⊗ |0 photons⟩.
///
/// The no-jump state evolves under H − (i/2)ΣL†L. The heralded branch is the
/// first-order jump expansion: a photon leaves the cavity at time τ and the
/// lowered state continues without further jumps to the end of the window.
/// Its overlap with |1⟩ at the end is obtained from costates
/// χ_m(τ) = U(T, τ)†|1, m⟩ integrated backwards.
pub fn simulate_protocol(
    scheme: &LevelScheme,
    drives: &DriveSchedule,
    options: &SimOptions,
) -> Result<FwmResult, FwmError> {
    scheme.validate()?;
    drives.validate()?;
    if !(options.settle_tolerance > 0.0) {
        return Err(FwmError::Invalid {
            name: "settle_tolerance",
            value: options.settle_tolerance,
            constraint: "must be > 0",
        });
    }
    let eta = options.outcoupling.factor(scheme)?;
    let limit = max_step(scheme, drives);
    let dt = match options.dt {
        Some(dt) => {
            if !(dt > 0.0) {
                return Err(FwmError::Invalid { name: "dt", value: dt, constraint: "must be > 0" });
            }
            if dt > limit * (1.0 + 1e-12) {
                return Err(FwmError::GridTooCoarse { dt, rate: fastest_rate(scheme, drives), max: limit });
            }
            dt
        }
        None => limit.min(1e-9),
    };

    let omega41 = drives.effective_omega41(scheme);
    let (s12, e12) = drives.omega12.span();
    let (s41, e41) = omega41.span();
    let t0 = s12.min(s41);
    let pulses_end = e12.max(e41);
    let rhs = Rhs { scheme, herald_until: options.herald_until.unwrap_or(f64::INFINITY) };
    let h_at = |t: f64| effective_sparse(scheme, drives, &omega41, t);

    let mut y =
        Y { psi: [ZERO; DIM], acc: [0.0; N_ACC], rho: options.track_jump_branch.then(|| Box::new([[ZERO; DIM]; DIM])) };
    y.psi[index(1, 0)] = Complex64::new(1.0, 0.0);

    let mut states = vec![y.psi];
    let mut populations = vec![coherent_pops(&y.psi)];
    let mut norm_defect = 0.0f64;
    let max_steps = (options.max_window / dt).ceil() as usize;
    let mut step = 0usize;
    let mut settled = true;
    let mut h0 = h_at(t0);
    loop {
        let t = t0 + step as f64 * dt;
        if t >= pulses_end && step % 2 == 0 && excited(&y.psi) < options.settle_tolerance {
            break;
        }
        if step >= max_steps && step % 2 == 0 {
            settled = false;
            break;
        }
        let hm = h_at(t + 0.5 * dt);
        let h1 = h_at(t + dt);
        y = rk4_step(&rhs, [&h0, &hm, &h1], t, dt, &y);
        h0 = h1;
        step += 1;
        let norm: f64 = y.psi.iter().map(|c| c.norm_sqr()).sum();
        if !(norm <= 1.0 + 1e-9) {
            return Err(FwmError::NormGrowth { time: t + dt, norm });
        }
        let channels: f64 = y.acc[..=CAV_INT].iter().sum();
        norm_defect = norm_defect.max((norm + channels - 1.0).abs());
        states.push(y.psi);
        populations.push(coherent_pops(&y.psi));
    }

    let times: Vec<f64> = (0..states.len()).map(|k| t0 + k as f64 * dt).collect();
    let herald_until = rhs.herald_until;
    let gate = |t: f64| if t <= herald_until { 1.0 } else { 0.0 };
    let kappa = scheme.kappa();

    // costates, backwards from the end of the window
    let last = states.len() - 1;
    let mut good = vec![0.0; states.len()];
    for m in 0..2 {
        let mut chi = [ZERO; DIM];
        chi[index(1, m)] = Complex64::new(1.0, 0.0);
        let mut h_hi = h_at(times[last]);
        for k in (0..=last).rev() {
            let lowered = lower(&states[k]);
            let overlap: Complex64 = chi.iter().zip(&lowered).map(|(c, l)| c.conj() * l).sum();
            good[k] += overlap.norm_sqr();
            if k > 0 {
                let hm = h_at(times[k] - 0.5 * dt);
                let h_lo = h_at(times[k - 1]);
                chi = adjoint_step([&h_hi, &hm, &h_lo], -dt, &chi);
                h_hi = h_lo;
            }
        }
    }
    let return_density: Vec<f64> = good.iter().zip(&times).map(|(g, &t)| kappa * g * gate(t)).collect();
    let emission_density: Vec<f64> =
        states.iter().zip(&times).map(|(s, &t)| kappa * photon_number(s) * gate(t)).collect();
    let return_probability = simpson(&return_density, dt);
    let emission_probability = simpson(&emission_density, dt);
    let heralded_fidelity =
        (emission_probability > 1e-14).then(|| (return_probability / emission_probability).min(1.0));

    let (jump_branch_fidelity, two_photon_weight) = match &y.rho {
        Some(r) => {
            let back = r[index(1, 0)][index(1, 0)].re + r[index(1, 1)][index(1, 1)].re;
            let heralds = y.acc[HERALD_EXT];
            ((heralds > 1e-14).then(|| back / heralds), Some(y.acc[SECOND_EXT]))
        }
        None => (None, None),
    };

    let photon_waveform = states.iter().map(|s| scheme.kappa_ext * photon_number(s)).collect();
    let final_populations = *populations.last().expect("at least the initial state");
    Ok(FwmResult {
        success_probability: eta * return_probability,
        heralded_fidelity,
        emission_probability,
        return_probability,
        outcoupling_factor: eta,
        jump_branch_fidelity,
        two_photon_weight,
        channels: ChannelWeights::from_acc(&y.acc),
        final_populations,
        norm_defect,
        dt,
        times,
        photon_waveform,
        populations,
        settled,
    })
}

fn coherent_pops(psi: &State) -> [f64; 5] {
    let mut p = [0.0; 5];
    for (level, v) in p.iter_mut().enumerate() {
        *v = level_pop(psi, level);
    }
    p
}

/// Population outside the ground levels, including any cavity photon.
fn excited(psi: &State) -> f64 {
    level_pop(psi, 2)
        + level_pop(psi, 3)
        + level_pop(psi, 4)
        + psi[index(0, 1)].norm_sqr()
        + psi[index(1, 1)].norm_sqr()
}

/// Forward no-jump run without costates; returns the peak coherent population of `level`.
pub(crate) fn forward_peak(scheme: &LevelScheme, drives: &DriveSchedule, level: usize, dt: f64, window: f64) -> f64 {
    let omega41 = drives.effective_omega41(scheme);
    let t0 = drives.omega12.span().0.min(omega41.span().0);
    let rhs = Rhs { scheme, herald_until: f64::INFINITY };
    let mut y = Y { psi: [ZERO; DIM], acc: [0.0; N_ACC], rho: None };
    y.psi[index(1, 0)] = Complex64::new(1.0, 0.0);
    let steps = (window / dt).ceil() as usize;
    let mut peak = 0.0f64;
    let mut h0 = effective_sparse(scheme, drives, &omega41, t0);
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let hm = effective_sparse(scheme, drives, &omega41, t + 0.5 * dt);
        let h1 = effective_sparse(scheme, drives, &omega41, t + dt);
        y = rk4_step(&rhs, [&h0, &hm, &h1], t, dt, &y);
        h0 = h1;
        peak = peak.max(level_pop(&y.psi, level));
    }
    peak
}

#[cfg(test)]
mod tests {
    use super::super::Pulse;
    use super::*;

    fn quick() -> SimOptions {
        SimOptions { track_jump_branch: false, ..Default::default() }
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let h = 0.1;
        let f: Vec<f64> = (0..=10).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson(&f, h) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn empty_drives_give_no_herald() {
        let s = LevelScheme::default();
        let d =
            DriveSchedule { omega12: Pulse::off(), omega23: 10.0 * s.gamma_unit, omega41: Pulse::off(), timing: 0.0 };
        let r = simulate_protocol(&s, &d, &quick()).unwrap();
        assert_eq!(r.success_probability, 0.0);
        assert_eq!(r.heralded_fidelity, None);
        assert!((r.final_populations[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_cavity_gives_zero_success() {
        let s = LevelScheme { kappa_ext: 0.0, ..Default::default() };
        let r = simulate_protocol(&s, &DriveSchedule::resonant(&s), &quick()).unwrap();
        assert_eq!(r.success_probability, 0.0);
        assert!(r.photon_waveform.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn coarse_grid_rejected() {
        let s = LevelScheme::default();
        let o = SimOptions { dt: Some(5e-9), ..quick() };
        assert!(matches!(simulate_protocol(&s, &DriveSchedule::resonant(&s), &o), Err(FwmError::GridTooCoarse { .. })));
    }

    #[test]
    fn lossless_evolution_is_unitary() {
        let s = LevelScheme {
            gamma_2: 0.0,
            gamma_4: 0.0,
            gamma_3_p1: 0.0,
            gamma_3_p2: 0.0,
            kappa_int: 0.0,
            kappa_ext: 0.0,
            ..Default::default()
        };
        let o = SimOptions { max_window: 2e-6, ..quick() };
        let r = simulate_protocol(&s, &DriveSchedule::resonant(&s), &o).unwrap();
        for p in &r.populations {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn waveform_matches_channel_weight() {
        let s = LevelScheme::default();
        let r = simulate_protocol(&s, &DriveSchedule::resonant(&s), &quick()).unwrap();
        assert!(r.settled);
        assert!((r.waveform_integral() - r.channels.cavity_ext).abs() < 1e-6);
        assert!(r.norm_defect < 1e-6);
    }
}
