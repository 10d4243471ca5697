//! TOML configuration with one section per module.
//!
//! Every key is optional; missing keys take the defaults of the library
//! types. Keys marked as sweepable accept a scalar or a list, and a run
//! iterates over the Cartesian product of all lists.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cavity::{CavityGeometry, TransitionSpec};
use crate::fwm::{DetunedSearch, DriveSchedule, LevelScheme, SimOptions};
use crate::link::{LinkConfig, StepRates};
use crate::netsim::{GeometricMethod, LadderBarrier};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config key `{key}` = {value}: {constraint}")]
    Invalid { key: String, value: String, constraint: String },
}

fn invalid(key: &str, value: impl ToString, constraint: impl ToString) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), value: value.to_string(), constraint: constraint.to_string() }
}

/// A scalar or a list of values to sweep over.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Sweep<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Sweep::One(v) => vec![v.clone()],
            Sweep::Many(v) => v.clone(),
        }
    }
}

impl<T> From<Vec<T>> for Sweep<T> {
    fn from(v: Vec<T>) -> Self {
        Sweep::Many(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkSection {
    pub length_km: Sweep<f64>,
    pub n_atoms: Sweep<u32>,
    pub bell_pairs: Sweep<u32>,
    pub eta_fwm: f64,
    pub eta_fiber: f64,
    pub eta_det: f64,
    pub attenuation_length_km: f64,
    /// Monte Carlo trials for single-link estimates.
    pub trials: u32,
    pub sampler: GeometricMethod,
}

impl Default for LinkSection {
    fn default() -> Self {
        let l = LinkConfig::default();
        LinkSection {
            length_km: Sweep::One(l.length_km),
            n_atoms: Sweep::One(l.atoms),
            bell_pairs: Sweep::One(l.bell_pairs),
            eta_fwm: l.eta_fwm,
            eta_fiber: l.eta_fiber,
            eta_det: l.eta_det,
            attenuation_length_km: l.attenuation_length_km,
            trials: 1000,
            sampler: GeometricMethod::default(),
        }
    }
}

impl LinkSection {
    /// Efficiencies and attenuation; length, atoms and pairs come from the sweep grid.
    pub fn template(&self) -> LinkConfig {
        LinkConfig {
            eta_fwm: self.eta_fwm,
            eta_fiber: self.eta_fiber,
            eta_det: self.eta_det,
            attenuation_length_km: self.attenuation_length_km,
            ..LinkConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub length_km: Sweep<f64>,
    pub nesting: Sweep<u32>,
    pub n_atoms: Sweep<u32>,
    pub bell_pairs: Sweep<u32>,
    pub trials: u32,
    /// Qubit coherence time T2, s.
    pub t2: f64,
    pub ladder: LadderBarrier,
    pub sampler: GeometricMethod,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            length_km: Sweep::One(1000.0),
            nesting: Sweep::One(4),
            n_atoms: Sweep::One(200),
            bell_pairs: Sweep::One(1),
            trials: 5000,
            t2: 1.0,
            ladder: LadderBarrier::default(),
            sampler: GeometricMethod::default(),
        }
    }
}

/// Direct photon-pair distribution used as a comparison curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DirectSection {
    pub source_rate: f64,
    pub attenuation_db_per_km: f64,
}

impl Default for DirectSection {
    fn default() -> Self {
        DirectSection { source_rate: 10e9, attenuation_db_per_km: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FwmSection {
    pub scheme: LevelScheme,
    /// Defaults to the resonant Gaussian schedule.
    pub drives: Option<DriveSchedule>,
    pub options: SimOptions,
    /// Relative timings δ (units of 1/γ) for the `fwm` subcommand.
    pub timing: Sweep<f64>,
    /// Detunings of |4⟩ in units of g34 for the detuned-scheme scan.
    pub detunings_g34: Vec<f64>,
    pub search: DetunedSearch,
}

impl Default for FwmSection {
    fn default() -> Self {
        FwmSection {
            scheme: LevelScheme::default(),
            drives: None,
            options: SimOptions::default(),
            timing: Sweep::One(0.0),
            detunings_g34: vec![2.0, 4.0, 8.0, 16.0, 32.0],
            search: DetunedSearch::default(),
        }
    }
}

impl FwmSection {
    pub fn drives(&self) -> DriveSchedule {
        self.drives.unwrap_or_else(|| DriveSchedule::resonant(&self.scheme))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub cavity: CavityGeometry,
    pub transition: TransitionSpec,
    pub rates: StepRates,
    pub link: LinkSection,
    pub network: NetworkSection,
    pub direct: DirectSection,
    pub fwm: FwmSection,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            cavity: CavityGeometry::default(),
            transition: TransitionSpec::default(),
            rates: StepRates::default(),
            link: LinkSection::default(),
            network: NetworkSection::default(),
            direct: DirectSection::default(),
            fwm: FwmSection::default(),
        }
    }
}

/// Source of each default, by key prefix (longest match wins).
const DEFAULT_SOURCES: &[(&str, &str)] = &[
    ("seed", "tool default"),
    ("cavity", "cavity design values"),
    ("transition", "¹⁷¹Yb ³P₁ F=1/2 ↔ ³D₂ F'=3/2 line at 1480 nm"),
    ("rates", "single-link step-rate table"),
    ("link", "single-link rate pipeline"),
    ("link.attenuation_length_km", "fiber attenuation at 1480 nm"),
    ("link.trials", "single-link Monte Carlo trial count"),
    ("network", "repeater-network study settings"),
    ("network.t2", "conservative qubit coherence estimate"),
    ("direct", "direct photon-pair comparison at 1550 nm"),
    ("fwm.scheme", "level-scheme decay rates and cavity coupling"),
    ("fwm.drives", "resonant Gaussian pulse design"),
    ("fwm.options", "integrator and outcoupling settings"),
    ("fwm", "four-wave-mixing study settings"),
];

pub fn default_source(key: &str) -> &'static str {
    DEFAULT_SOURCES
        .iter()
        .filter(|(prefix, _)| key == *prefix || key.starts_with(&format!("{prefix}.")))
        .max_by_key(|(prefix, _)| prefix.len())
        .map(|(_, source)| *source)
        .unwrap_or("tool default")
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<(String, String)>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Every leaf of `config` as (dotted key, TOML value).
pub fn flattened(config: &Config) -> Vec<(String, String)> {
    let mut out = Vec::new();
    flatten("", &toml::Value::try_from(config).expect("config serializes"), &mut out);
    out
}

/// A parsed configuration plus the keys that took their default value.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedConfig {
    pub config: Config,
    /// (key, value, source) for every key not given explicitly.
    pub defaults_used: Vec<(String, String, &'static str)>,
}

pub fn parse_config(text: &str) -> Result<ParsedConfig, ConfigError> {
    let config: Config = toml::from_str(text)?;
    let explicit: toml::Table = toml::from_str(text)?;
    let mut given = Vec::new();
    flatten("", &toml::Value::Table(explicit), &mut given);
    let defaults_used = flattened(&Config::default())
        .into_iter()
        .filter(|(k, _)| !given.iter().any(|(g, _)| g == k || k.starts_with(&format!("{g}."))))
        .map(|(k, v)| {
            let source = default_source(&k);
            (k, v, source)
        })
        .collect();
    config.validate()?;
    Ok(ParsedConfig { config, defaults_used })
}

fn check<T: ToString>(key: &str, value: T, ok: bool, constraint: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(key, value, constraint))
    }
}

fn check_sweep<T: Copy + ToString>(
    key: &str,
    sweep: &Sweep<T>,
    ok: impl Fn(T) -> bool,
    constraint: &str,
) -> Result<(), ConfigError> {
    let values = sweep.values();
    if values.is_empty() {
        return Err(invalid(key, "[]", "sweep list must not be empty"));
    }
    for v in values {
        check(key, v, ok(v), constraint)?;
    }
    Ok(())
}

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite_pos = |v: f64| v > 0.0 && v.is_finite();
        let c = &self.cavity;
        check(
            "cavity.radius_of_curvature",
            c.radius_of_curvature,
            finite_pos(c.radius_of_curvature),
            "must be finite and > 0",
        )?;
        check("cavity.mirror_spacing", c.mirror_spacing, finite_pos(c.mirror_spacing), "must be finite and > 0")?;
        check("cavity.finesse_intrinsic", c.finesse_intrinsic, c.finesse_intrinsic > 0.0, "must be > 0")?;
        check(
            "cavity.finesse_extrinsic",
            c.finesse_extrinsic,
            finite_pos(c.finesse_extrinsic),
            "must be finite and > 0",
        )?;
        check(
            "cavity.finesse_extrinsic",
            c.finesse_extrinsic,
            c.finesse_extrinsic <= c.finesse_intrinsic,
            "must not exceed cavity.finesse_intrinsic",
        )?;
        let t = &self.transition;
        check("transition.wavelength", t.wavelength, finite_pos(t.wavelength), "must be finite and > 0")?;
        check("transition.decay_rate", t.decay_rate, finite_pos(t.decay_rate), "must be finite and > 0")?;

        let r = &self.rates;
        for (key, v) in [
            ("rates.init", r.init),
            ("rates.half_pi", r.half_pi),
            ("rates.pi", r.pi),
            ("rates.fwm", r.fwm),
            ("rates.refractive_index", r.refractive_index),
        ] {
            check(key, v, finite_pos(v), "must be finite and > 0")?;
        }

        let l = &self.link;
        check_sweep("link.length_km", &l.length_km, |v| v >= 0.0 && v.is_finite(), "must be finite and >= 0")?;
        check_sweep("link.n_atoms", &l.n_atoms, |v| v >= 1, "must be >= 1")?;
        check_sweep("link.bell_pairs", &l.bell_pairs, |v| v >= 1, "must be >= 1")?;
        for (key, v) in [("link.eta_fwm", l.eta_fwm), ("link.eta_fiber", l.eta_fiber), ("link.eta_det", l.eta_det)] {
            check(key, v, (0.0..=1.0).contains(&v), "must lie in [0, 1]")?;
        }
        check(
            "link.attenuation_length_km",
            l.attenuation_length_km,
            finite_pos(l.attenuation_length_km),
            "must be finite and > 0",
        )?;
        check("link.trials", l.trials, l.trials >= 1, "must be >= 1")?;

        let n = &self.network;
        check_sweep("network.length_km", &n.length_km, finite_pos, "must be finite and > 0")?;
        check_sweep("network.nesting", &n.nesting, |m| m <= 20, "must be <= 20")?;
        check_sweep("network.n_atoms", &n.n_atoms, |v| v >= 1, "must be >= 1")?;
        check_sweep("network.bell_pairs", &n.bell_pairs, |v| v >= 1, "must be >= 1")?;
        check("network.trials", n.trials, n.trials >= 1, "must be >= 1")?;
        check("network.t2", n.t2, finite_pos(n.t2), "must be finite and > 0")?;

        let d = &self.direct;
        check("direct.source_rate", d.source_rate, finite_pos(d.source_rate), "must be finite and > 0")?;
        check(
            "direct.attenuation_db_per_km",
            d.attenuation_db_per_km,
            d.attenuation_db_per_km >= 0.0 && d.attenuation_db_per_km.is_finite(),
            "must be finite and >= 0",
        )?;

        let f = &self.fwm;
        f.scheme.validate().map_err(|e| invalid("fwm.scheme", "", e))?;
        f.drives().validate().map_err(|e| invalid("fwm.drives", "", e))?;
        check_sweep("fwm.timing", &f.timing, f64::is_finite, "must be finite")?;
        for &dg in &f.detunings_g34 {
            check("fwm.detunings_g34", dg, dg.is_finite(), "must be finite")?;
        }
        check("fwm.search.budget", f.search.budget, f.search.budget >= 1, "must be >= 1")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_all_defaults() {
        let p = parse_config("").unwrap();
        assert_eq!(p.config, Config::default());
        assert!(p.defaults_used.iter().any(|(k, v, _)| k == "rates.init" && v == "10000.0"));
        assert!(p.defaults_used.iter().any(|(k, v, _)| k == "link.eta_fwm" && v == "0.364"));
        assert_eq!(default_source("rates.init"), "single-link step-rate table");
        assert_eq!(default_source("link.attenuation_length_km"), "fiber attenuation at 1480 nm");
    }

    #[test]
    fn explicit_keys_are_not_reported_as_defaults() {
        let p = parse_config("seed = 9\n[link]\neta_fwm = 0.4\n").unwrap();
        assert_eq!(p.config.seed, 9);
        assert!(!p.defaults_used.iter().any(|(k, _, _)| k == "link.eta_fwm" || k == "seed"));
        assert!(p.defaults_used.iter().any(|(k, _, _)| k == "link.eta_det"));
    }

    #[test]
    fn out_of_range_efficiency_names_the_key() {
        let err = parse_config("[link]\neta_fwm = 1.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("link.eta_fwm") && msg.contains("[0, 1]"), "{msg}");
    }

    #[test]
    fn unknown_key_rejected() {
        let msg = parse_config("[link]\neta_fmw = 0.3\n").unwrap_err().to_string();
        assert!(msg.contains("eta_fmw"), "{msg}");
    }

    #[test]
    fn type_mismatch_rejected() {
        let msg = parse_config("[network]\nt2 = \"long\"\n").unwrap_err().to_string();
        assert!(msg.contains("t2"), "{msg}");
    }

    #[test]
    fn sweep_lists() {
        let p = parse_config("[link]\nn_atoms = [10, 20, 50, 100, 150, 200]\nlength_km = 50\n").unwrap();
        assert_eq!(p.config.link.n_atoms.values(), vec![10, 20, 50, 100, 150, 200]);
        assert_eq!(p.config.link.length_km.values(), vec![50.0]);
        assert!(parse_config("[link]\nn_atoms = []\n").is_err());
    }

    #[test]
    fn nested_fwm_tables() {
        let text = "[fwm.scheme]\ndetuning = 1e7\n[fwm.options]\noutcoupling = \"eta_coll\"\n";
        let p = parse_config(text).unwrap();
        assert_eq!(p.config.fwm.scheme.detuning, 1e7);
        assert_eq!(p.config.fwm.options.outcoupling, crate::fwm::Outcoupling::EtaColl);
    }
}
