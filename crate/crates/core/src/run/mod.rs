//! Batch runner behind the `atomnet` binary: builds the sweep grid for a
//! subcommand or figure, evaluates rows in parallel and returns an ordered
//! table with reproducibility metadata.

pub mod config;
pub mod output;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use config::{parse_config, Config, ConfigError, ParsedConfig, Sweep};
pub use output::{Cell, Report, Row, Status, Table};

use crate::cavity;
use crate::fwm::{self, Param, SimOptions};
use crate::link::{self, LinkConfig};
use crate::netsim::{self, McSettings, NetError, NetworkConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig2,
    Fig3d,
    Fig4,
    Fig5b,
    Fig6a,
    Fig6b,
    #[value(name = "figS3")]
    FigS3,
    #[value(name = "figS4")]
    FigS4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Cavity,
    Fwm,
    Link,
    Network,
    Sweep(Figure),
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::Cavity => "cavity".into(),
            Command::Fwm => "fwm".into(),
            Command::Link => "link".into(),
            Command::Network => "network".into(),
            Command::Sweep(f) => format!("sweep --figure {}", figure_name(*f)),
        }
    }
}

fn figure_name(f: Figure) -> &'static str {
    match f {
        Figure::Fig2 => "fig2",
        Figure::Fig3d => "fig3d",
        Figure::Fig4 => "fig4",
        Figure::Fig5b => "fig5b",
        Figure::Fig6a => "fig6a",
        Figure::Fig6b => "fig6b",
        Figure::FigS3 => "figS3",
        Figure::FigS4 => "figS4",
    }
}

/// Command-line overrides; each replaces the corresponding sweep of every section.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub length_km: Option<Vec<f64>>,
    pub atoms: Option<Vec<u32>>,
    pub nesting: Option<Vec<u32>>,
    pub bell_pairs: Option<Vec<u32>>,
    pub trials: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub config: ParsedConfig,
    pub overrides: Overrides,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
}

/// Seed for row `index`, derived from the run seed so rows are independent of evaluation order.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(index.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

fn range(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    // Snap to 1e-9 so grid values print without accumulated rounding noise.
    (0..=n).map(|i| ((start + step * i as f64) * 1e9).round() / 1e9).collect()
}

const FIG4_ATOMS: [u32; 6] = [10, 20, 50, 100, 150, 200];

/// Apply the figure preset, then the command-line overrides.
fn effective_config(command: Command, base: &Config, o: &Overrides) -> Config {
    let mut c = base.clone();
    if let Command::Sweep(f) = command {
        match f {
            Figure::Fig2 => {
                c.link.length_km = range(0.0, 200.0, 10.0).into();
                c.link.n_atoms = vec![1, 100].into();
                c.link.bell_pairs = Sweep::One(1);
            }
            Figure::Fig3d => c.fwm.timing = range(-0.3, 0.1, 0.01).into(),
            Figure::Fig4 => {
                c.link.length_km = range(0.0, 300.0, 10.0).into();
                c.link.n_atoms = FIG4_ATOMS.to_vec().into();
                c.link.bell_pairs = Sweep::One(1);
            }
            Figure::Fig5b => {
                c.network.length_km = range(100.0, 2000.0, 100.0).into();
                c.network.nesting = vec![2, 3, 4].into();
                c.network.n_atoms = FIG4_ATOMS.to_vec().into();
                c.network.bell_pairs = Sweep::One(1);
            }
            Figure::Fig6a => {
                c.network.length_km = range(100.0, 2000.0, 100.0).into();
                c.network.nesting = Sweep::One(4);
                c.network.n_atoms = vec![100, 150, 200].into();
                c.network.bell_pairs = vec![1, 2, 5].into();
            }
            Figure::Fig6b => {
                c.link.length_km = Sweep::One(50.0);
                c.link.n_atoms = FIG4_ATOMS.to_vec().into();
                c.link.bell_pairs = (1..=40).collect::<Vec<u32>>().into();
            }
            Figure::FigS3 => {}
            Figure::FigS4 => {
                c.link.length_km = Sweep::One(100.0);
                c.link.n_atoms = vec![1, 10, 50, 100, 200].into();
                c.link.bell_pairs = Sweep::One(1);
                c.link.trials = 10_000;
            }
        }
    }
    if let Some(s) = o.seed {
        c.seed = s;
    }
    if let Some(l) = &o.length_km {
        c.link.length_km = l.clone().into();
        c.network.length_km = l.clone().into();
    }
    if let Some(n) = &o.atoms {
        c.link.n_atoms = n.clone().into();
        c.network.n_atoms = n.clone().into();
    }
    if let Some(m) = &o.nesting {
        c.network.nesting = m.clone().into();
    }
    if let Some(b) = &o.bell_pairs {
        c.link.bell_pairs = b.clone().into();
        c.network.bell_pairs = b.clone().into();
    }
    if let Some(q) = o.trials {
        c.link.trials = q;
        c.network.trials = q;
    }
    c
}

pub fn run(spec: &RunSpec) -> Result<Report, RunError> {
    let cfg = effective_config(spec.command, &spec.config.config, &spec.overrides);
    cfg.validate()?;
    let table = match spec.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| RunError::Pool(e.to_string()))?
            .install(|| build_table(spec.command, &cfg)),
        None => build_table(spec.command, &cfg),
    };
    let cfg_json = config_json(&toml::Value::try_from(&cfg).expect("config serializes")).to_string();
    let mut hasher = Sha256::new();
    hasher.update(spec.command.name().as_bytes());
    hasher.update(cfg_json.as_bytes());
    let config_sha256 = format!("{:x}", hasher.finalize());
    let mut metadata = vec![
        ("tool".to_string(), format!("atomnet {}", env!("CARGO_PKG_VERSION"))),
        ("command".to_string(), spec.command.name()),
        ("seed".to_string(), cfg.seed.to_string()),
        ("config_sha256".to_string(), config_sha256),
        ("overrides".to_string(), serde_json::to_string(&spec.overrides).expect("overrides serialize")),
    ];
    metadata.push(("effective_config".to_string(), cfg_json));
    // Keys replaced by a figure preset or override are no longer defaults.
    let effective = config::flattened(&cfg);
    for (k, v, source) in &spec.config.defaults_used {
        if !effective.iter().any(|(ek, ev)| ek == k && ev == v) {
            continue;
        }
        metadata.push((format!("default {k}"), format!("{v} ({source})")));
    }
    Ok(Report { metadata, table })
}

/// JSON view of a config that keeps infinities, which plain JSON numbers cannot hold.
fn config_json(v: &toml::Value) -> serde_json::Value {
    use serde_json::Value as J;
    match v {
        toml::Value::Float(f) if !f.is_finite() => J::String(f.to_string()),
        toml::Value::Float(f) => J::from(*f),
        toml::Value::Integer(i) => J::from(*i),
        toml::Value::Boolean(b) => J::from(*b),
        toml::Value::String(s) => J::from(s.as_str()),
        toml::Value::Datetime(d) => J::String(d.to_string()),
        toml::Value::Array(a) => J::Array(a.iter().map(config_json).collect()),
        toml::Value::Table(t) => J::Object(t.iter().map(|(k, v)| (k.clone(), config_json(v))).collect()),
    }
}

fn build_table(command: Command, cfg: &Config) -> Table {
    match command {
        Command::Cavity => cavity_table(cfg),
        Command::Fwm | Command::Sweep(Figure::Fig3d) => fwm_table(cfg),
        Command::Link => link_table(cfg, false),
        Command::Sweep(Figure::Fig4) => link_table(cfg, true),
        Command::Network | Command::Sweep(Figure::Fig5b) | Command::Sweep(Figure::Fig6a) => network_table(cfg),
        Command::Sweep(Figure::Fig2) => timing_table(cfg),
        Command::Sweep(Figure::Fig6b) => ladder_table(cfg),
        Command::Sweep(Figure::FigS3) => detuned_table(cfg),
        Command::Sweep(Figure::FigS4) => sampling_table(cfg),
    }
}

fn ok(cells: Vec<Cell>) -> Row {
    Row { status: Status::Ok, message: String::new(), cells }
}

fn failed(e: impl ToString, cells: Vec<Cell>) -> Row {
    Row { status: Status::Error, message: e.to_string(), cells }
}

fn omitted(why: impl ToString, cells: Vec<Cell>) -> Row {
    Row { status: Status::Omitted, message: why.to_string(), cells }
}

/// Evaluate rows in parallel, logging one line per row, returned in grid order.
fn rows<T: Sync, F: Fn(usize, &T) -> Row + Sync>(grid: &[T], f: F) -> Vec<Row> {
    grid.par_iter()
        .enumerate()
        .map(|(i, p)| {
            let row = f(i, p);
            log::info!("row {i}: {:?} {}", row.status, row.message);
            row
        })
        .collect()
}

fn cavity_table(cfg: &Config) -> Table {
    let columns = vec![
        "stability",
        "waist_m",
        "rayleigh_range_m",
        "mode_volume_m3",
        "fsr_hz",
        "kappa_int_2pi_hz",
        "kappa_ext_2pi_hz",
        "eta_coll",
        "dipole_cm",
        "g_2pi_hz",
        "cooperativity",
        "p_cavity",
        "eta_extract",
    ];
    let row = match cavity::analyze(&cfg.cavity, &cfg.transition) {
        Ok(r) => {
            let tau = crate::constants::TWO_PI;
            ok(vec![
                r.stability.into(),
                r.mode.waist.into(),
                r.mode.rayleigh_range.into(),
                r.mode.mode_volume.into(),
                r.mode.fsr.into(),
                (r.mode.kappa_int / tau).into(),
                (r.mode.kappa_ext / tau).into(),
                r.mode.eta_coll.into(),
                r.dipole.into(),
                (r.coupling.g / tau).into(),
                r.coupling.cooperativity.into(),
                r.coupling.p_cavity.into(),
                r.coupling.eta_extract.into(),
            ])
        }
        Err(e) => failed(e, vec![]),
    };
    Table { columns, rows: vec![row] }
}

fn fwm_table(cfg: &Config) -> Table {
    let columns = vec![
        "delta",
        "fidelity",
        "success",
        "emission_probability",
        "return_probability",
        "two_photon_weight",
        "norm_defect",
    ];
    let f = &cfg.fwm;
    let drives = f.drives();
    let grid = f.timing.values();
    let rows = rows(&grid, |_, &delta| {
        let d = fwm::DriveSchedule { timing: delta, ..drives };
        match fwm::simulate_protocol(&f.scheme, &d, &f.options) {
            Ok(r) => {
                let mut row = ok(vec![
                    delta.into(),
                    r.heralded_fidelity.into(),
                    r.success_probability.into(),
                    r.emission_probability.into(),
                    r.return_probability.into(),
                    r.two_photon_weight.into(),
                    r.norm_defect.into(),
                ]);
                if r.heralded_fidelity.is_none() {
                    row.message = "no herald".into();
                }
                if !r.settled {
                    row.message = "window cap reached before excited states emptied".into();
                }
                row
            }
            Err(e) => failed(e, vec![delta.into()]),
        }
    });
    Table { columns, rows }
}

fn link_grid(cfg: &Config) -> Vec<LinkConfig> {
    let t = cfg.link.template();
    let mut grid = Vec::new();
    for l in cfg.link.length_km.values() {
        for n in cfg.link.n_atoms.values() {
            for b in cfg.link.bell_pairs.values() {
                grid.push(t.with_length(l).with_atoms(n).with_bell_pairs(b));
            }
        }
    }
    grid
}

fn link_table(cfg: &Config, simulate: bool) -> Table {
    let mut columns = vec![
        "length_km",
        "n_atoms",
        "bell_pairs",
        "attempt_rate_hz",
        "duty_cycle",
        "pair_probability",
        "mux_probability",
        "expected_attempts",
        "rate_hz",
    ];
    if simulate {
        columns.extend(["sim_rate_hz", "sim_rate_se_hz", "seed"]);
    }
    let grid = link_grid(cfg);
    let rows = rows(&grid, |i, c| {
        let key: Vec<Cell> = vec![c.length_km.into(), c.atoms.into(), c.bell_pairs.into()];
        if c.bell_pairs > c.atoms {
            return omitted("B > N", key);
        }
        let s = match link::summarize(c, &cfg.rates) {
            Ok(s) => s,
            Err(e) => return failed(e, key),
        };
        let mut cells = key.clone();
        cells.extend([
            s.attempt_rate.into(),
            s.duty_cycle.into(),
            s.pair_probability.into(),
            s.mux_probability.into(),
            s.expected_attempts.into(),
            s.rate.into(),
        ]);
        if simulate {
            let seed = derive_seed(cfg.seed, i as u64);
            let mc = McSettings { sampler: cfg.link.sampler, ..McSettings::new(cfg.link.trials, seed) };
            match netsim::simulate_single_link(&c.with_bell_pairs(1), &cfg.rates, &mc) {
                Ok(e) => cells.extend([e.rate.into(), e.rate_standard_error().into(), seed.into()]),
                Err(e) => return failed(e, cells),
            }
        }
        ok(cells)
    });
    Table { columns, rows }
}

fn timing_table(cfg: &Config) -> Table {
    let columns =
        vec!["length_km", "n_atoms", "init_s", "rotation_s", "fwm_s", "comm_s", "attempt_time_s", "duty_cycle"];
    let r = &cfg.rates;
    let grid = link_grid(cfg);
    let rows = rows(&grid, |_, c| {
        ok(vec![
            c.length_km.into(),
            c.atoms.into(),
            (1.0 / r.init).into(),
            r.rotation_time().into(),
            r.fwm_time(c.atoms).into(),
            r.comm_time(c.length_km).into(),
            r.attempt_time(c.length_km, c.atoms).into(),
            link::duty_cycle(c.length_km, c.atoms, r).into(),
        ])
    });
    Table { columns, rows }
}

fn network_table(cfg: &Config) -> Table {
    let columns = vec![
        "length_km",
        "nesting",
        "n_atoms",
        "bell_pairs",
        "segment_km",
        "rate_hz",
        "rate_se_hz",
        "mean_time_s",
        "rms_s",
        "coherence_hz",
        "direct_rate_hz",
        "seed",
    ];
    let n = &cfg.network;
    let mut grid = Vec::new();
    for l in n.length_km.values() {
        for m in n.nesting.values() {
            for atoms in n.n_atoms.values() {
                for b in n.bell_pairs.values() {
                    grid.push((l, m, atoms, b));
                }
            }
        }
    }
    let rows = rows(&grid, |i, &(l, m, atoms, b)| {
        let seed = derive_seed(cfg.seed, i as u64);
        let net = NetworkConfig {
            total_length_km: l,
            nesting: m,
            atoms,
            bell_pairs: b,
            t2: n.t2,
            ladder: n.ladder,
            link: cfg.link.template(),
            rates: cfg.rates,
            mc: McSettings { sampler: n.sampler, ..McSettings::new(n.trials, seed) },
        };
        let mut cells: Vec<Cell> = vec![l.into(), m.into(), atoms.into(), b.into(), net.segment_length_km().into()];
        match netsim::simulate_multibell_network(&net) {
            Ok(e) => {
                cells.extend([
                    e.rate.into(),
                    e.rate_standard_error().into(),
                    e.mean_time.into(),
                    e.rms_deviation.into(),
                    netsim::coherence_threshold(m, b, n.t2).into(),
                    netsim::direct_photon_rate(l, cfg.direct.source_rate, cfg.direct.attenuation_db_per_km).into(),
                    seed.into(),
                ]);
                ok(cells)
            }
            Err(e @ NetError::AtomBudget { .. }) => omitted(e, cells),
            Err(e) => failed(e, cells),
        }
    });
    Table { columns, rows }
}

fn ladder_table(cfg: &Config) -> Table {
    let columns =
        vec!["length_km", "n_atoms", "bell_pairs", "rate_hz", "sim_rate_hz", "sim_rate_se_hz", "coherence_hz", "seed"];
    let grid = link_grid(cfg);
    let rows = rows(&grid, |i, c| {
        let mut cells: Vec<Cell> = vec![c.length_km.into(), c.atoms.into(), c.bell_pairs.into()];
        if c.bell_pairs > c.atoms {
            return omitted("B > N", cells);
        }
        let seed = derive_seed(cfg.seed, i as u64);
        let mc = McSettings { sampler: cfg.link.sampler, ..McSettings::new(cfg.link.trials, seed) };
        let analytic = match netsim::ladder_rate(c, &cfg.rates) {
            Ok(r) => r,
            Err(e) => return failed(e, cells),
        };
        match netsim::simulate_single_link(c, &cfg.rates, &mc) {
            Ok(e) => {
                cells.extend([
                    analytic.into(),
                    e.rate.into(),
                    e.rate_standard_error().into(),
                    netsim::coherence_threshold(0, c.bell_pairs, cfg.network.t2).into(),
                    seed.into(),
                ]);
                ok(cells)
            }
            Err(e) => failed(e, cells),
        }
    });
    Table { columns, rows }
}

fn detuned_table(cfg: &Config) -> Table {
    let columns = vec![
        "detuning_g34",
        "omega12_gamma",
        "omega23_gamma",
        "omega41_gamma",
        "length41_ns",
        "transfer",
        "fidelity",
        "success",
    ];
    let f = &cfg.fwm;
    let rows = rows(&f.detunings_g34, |_, &dg| {
        let opts = SimOptions { ..f.options };
        match fwm::optimize_detuned(&f.scheme, dg * f.scheme.g34, &f.search, &opts) {
            Ok(p) => {
                let s = fwm::LevelScheme { detuning: p.detuning, ..f.scheme };
                let d = &p.schedule;
                ok(vec![
                    dg.into(),
                    Param::Omega12Peak.get(&s, d).into(),
                    Param::Omega23.get(&s, d).into(),
                    Param::Omega41Peak.get(&s, d).into(),
                    Param::Omega41Width.get(&s, d).into(),
                    p.transfer.into(),
                    p.fidelity.into(),
                    p.success.into(),
                ])
            }
            Err(e) => failed(e, vec![dg.into()]),
        }
    });
    Table { columns, rows }
}

fn sampling_table(cfg: &Config) -> Table {
    let columns = vec![
        "length_km",
        "n_atoms",
        "trials",
        "mean_attempts",
        "rms_attempts",
        "se_attempts",
        "expected_attempts",
        "z_score",
        "seed",
    ];
    let grid = link_grid(cfg);
    let rows = rows(&grid, |i, c| {
        let seed = derive_seed(cfg.seed, i as u64);
        let mc = McSettings { sampler: cfg.link.sampler, ..McSettings::new(cfg.link.trials, seed) };
        let mut cells: Vec<Cell> = vec![c.length_km.into(), c.atoms.into(), cfg.link.trials.into()];
        let draws = match netsim::sample_attempt_counts(c, &mc) {
            Ok(d) => d,
            Err(e) => return failed(e, cells),
        };
        let q = draws.len() as f64;
        let mean = draws.iter().map(|&m| m as f64).sum::<f64>() / q;
        let rms = (draws.iter().map(|&m| (m as f64 - mean).powi(2)).sum::<f64>() / q).sqrt();
        let se = rms / q.sqrt();
        let expected = 1.0 / link::mux_probability(c);
        cells.extend([
            mean.into(),
            rms.into(),
            se.into(),
            expected.into(),
            ((mean - expected) / se).into(),
            seed.into(),
        ]);
        ok(cells)
    });
    Table { columns, rows }
}
