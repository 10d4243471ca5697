//! Fabry-Perot cavity mode parameters and atom-cavity coupling.
//!
//! Lengths are in metres, angular frequencies in rad/s, ordinary frequencies
//! in Hz. Every quantity is a closed-form function of the mirror geometry,
//! the two finesses and the atomic transition.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angular::{AngularError, HalfInt, RacahTable};
use crate::constants::{EPSILON_0, HBAR, SPEED_OF_LIGHT, TWO_PI};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CavityError {
    #[error("unstable cavity: stability parameter G = {g} has G^2 >= 1")]
    Unstable { g: f64 },
    #[error("invalid {name} = {value}: {constraint}")]
    Invalid { name: &'static str, value: f64, constraint: &'static str },
    #[error("extrinsic finesse {f_ext} exceeds intrinsic finesse {f_int}; collection efficiency would be negative")]
    NegativeCollection { f_int: f64, f_ext: f64 },
    #[error(transparent)]
    Angular(#[from] AngularError),
}

fn positive(name: &'static str, value: f64) -> Result<f64, CavityError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CavityError::Invalid { name, value, constraint: "must be finite and > 0" })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CavityGeometry {
    /// Mirror radius of curvature R.
    pub radius_of_curvature: f64,
    /// Mirror spacing ℓ.
    pub mirror_spacing: f64,
    /// Finesse from mirror losses; `f64::INFINITY` is a loss-free cavity.
    pub finesse_intrinsic: f64,
    /// Finesse associated with the outcoupling mirror.
    pub finesse_extrinsic: f64,
}

impl Default for CavityGeometry {
    fn default() -> Self {
        CavityGeometry {
            radius_of_curvature: 5e-3,
            mirror_spacing: 9.75e-3,
            finesse_intrinsic: 1e5,
            finesse_extrinsic: 5e4,
        }
    }
}

impl CavityGeometry {
    pub fn validate(&self) -> Result<(), CavityError> {
        positive("radius_of_curvature", self.radius_of_curvature)?;
        positive("mirror_spacing", self.mirror_spacing)?;
        positive("finesse_extrinsic", self.finesse_extrinsic)?;
        // an infinite intrinsic finesse is a loss-free cavity
        if !(self.finesse_intrinsic > 0.0) {
            return Err(CavityError::Invalid {
                name: "finesse_intrinsic",
                value: self.finesse_intrinsic,
                constraint: "must be > 0",
            });
        }
        Ok(())
    }
}

/// 𝒢 = 1 − ℓ/R.
pub fn stability(geometry: &CavityGeometry) -> f64 {
    1.0 - geometry.mirror_spacing / geometry.radius_of_curvature
}

/// Fundamental Gaussian mode size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeGeometry {
    pub waist: f64,
    pub rayleigh_range: f64,
    pub mode_volume: f64,
}

pub fn mode_geometry(geometry: &CavityGeometry, wavelength: f64) -> Result<ModeGeometry, CavityError> {
    geometry.validate()?;
    positive("wavelength", wavelength)?;
    let g = stability(geometry);
    if g * g >= 1.0 {
        return Err(CavityError::Unstable { g });
    }
    let ell = geometry.mirror_spacing;
    let a = wavelength * ell / TWO_PI;
    let waist = (a * a * (1.0 + g) / (1.0 - g)).powf(0.25);
    Ok(ModeGeometry {
        waist,
        rayleigh_range: std::f64::consts::PI * waist * waist / wavelength,
        mode_volume: std::f64::consts::FRAC_PI_4 * waist * waist * ell,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linewidths {
    /// Free spectral range, Hz.
    pub fsr: f64,
    pub kappa_int: f64,
    pub kappa_ext: f64,
    pub kappa_total: f64,
    pub eta_coll: f64,
}

pub fn linewidths(geometry: &CavityGeometry) -> Result<Linewidths, CavityError> {
    geometry.validate()?;
    let (f_int, f_ext) = (geometry.finesse_intrinsic, geometry.finesse_extrinsic);
    if f_ext > f_int {
        return Err(CavityError::NegativeCollection { f_int, f_ext });
    }
    let fsr = SPEED_OF_LIGHT / (2.0 * geometry.mirror_spacing);
    let kappa_int = TWO_PI * fsr / f_int;
    let kappa_ext = TWO_PI * fsr / f_ext;
    Ok(Linewidths { fsr, kappa_int, kappa_ext, kappa_total: kappa_int + kappa_ext, eta_coll: 1.0 - f_ext / f_int })
}

/// All derived parameters of the principal cavity mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityMode {
    pub waist: f64,
    pub rayleigh_range: f64,
    pub mode_volume: f64,
    pub fsr: f64,
    pub kappa_int: f64,
    pub kappa_ext: f64,
    pub kappa_total: f64,
    pub eta_coll: f64,
}

impl CavityMode {
    pub fn new(geometry: &CavityGeometry, wavelength: f64) -> Result<Self, CavityError> {
        let m = mode_geometry(geometry, wavelength)?;
        let l = linewidths(geometry)?;
        Ok(CavityMode {
            waist: m.waist,
            rayleigh_range: m.rayleigh_range,
            mode_volume: m.mode_volume,
            fsr: l.fsr,
            kappa_int: l.kappa_int,
            kappa_ext: l.kappa_ext,
            kappa_total: l.kappa_total,
            eta_coll: l.eta_coll,
        })
    }
}

/// Dipole transition between a lower level (J, F) and an upper level (J', F')
/// of an atom with nuclear spin I.
///
/// The defaults describe the ¹⁷¹Yb ³P₁ (F = 1/2) ↔ ³D₂ (F' = 3/2) line at 1480 nm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransitionSpec {
    pub wavelength: f64,
    /// Partial decay rate of the upper level on this line, rad/s.
    pub decay_rate: f64,
    pub j_lower: HalfInt,
    pub j_upper: HalfInt,
    pub f_lower: HalfInt,
    pub f_upper: HalfInt,
    pub nuclear_spin: HalfInt,
}

impl Default for TransitionSpec {
    fn default() -> Self {
        TransitionSpec {
            wavelength: 1480e-9,
            decay_rate: TWO_PI * 318e3,
            j_lower: HalfInt::integer(1),
            j_upper: HalfInt::integer(2),
            f_lower: HalfInt::from_doubled(1),
            f_upper: HalfInt::from_doubled(3),
            nuclear_spin: HalfInt::from_doubled(1),
        }
    }
}

impl TransitionSpec {
    pub fn angular_frequency(&self) -> f64 {
        TWO_PI * SPEED_OF_LIGHT / self.wavelength
    }

    /// {J J' 1; F' F I}
    pub fn six_j(&self, table: &RacahTable) -> Result<f64, CavityError> {
        Ok(table.wigner_6j(
            self.j_lower,
            self.j_upper,
            HalfInt::integer(1),
            self.f_upper,
            self.f_lower,
            self.nuclear_spin,
        )?)
    }
}

/// Hyperfine-resolved dipole matrix element, C m.
///
/// D² = 3π ε₀ ħ c³ Γ / ω³ · {J J' 1; F' F I}² (2F'+1)(2J'+1).
pub fn dipole_matrix_element(t: &TransitionSpec) -> Result<f64, CavityError> {
    dipole_matrix_element_with(t, &RacahTable::default())
}

pub fn dipole_matrix_element_with(t: &TransitionSpec, table: &RacahTable) -> Result<f64, CavityError> {
    positive("wavelength", t.wavelength)?;
    if !(t.decay_rate >= 0.0) {
        return Err(CavityError::Invalid { name: "decay_rate", value: t.decay_rate, constraint: "must be >= 0" });
    }
    let omega = t.angular_frequency();
    let six_j = t.six_j(table)?;
    let reduced = 3.0 * std::f64::consts::PI * EPSILON_0 * HBAR * SPEED_OF_LIGHT.powi(3) / omega.powi(3) * t.decay_rate;
    let angular = six_j * six_j * t.f_upper.multiplicity() as f64 * t.j_upper.multiplicity() as f64;
    Ok((reduced * angular).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    /// Single-photon coupling g, rad/s.
    pub g: f64,
    pub cooperativity: f64,
    /// Probability of emission into the cavity mode, C/(C+1).
    pub p_cavity: f64,
    pub eta_extract: f64,
}

pub fn coupling_and_cooperativity(
    dipole: f64,
    mode: &CavityMode,
    omega: f64,
    gamma: f64,
) -> Result<Coupling, CavityError> {
    positive("mode_volume", mode.mode_volume)?;
    positive("kappa_total", mode.kappa_total)?;
    positive("decay_rate", gamma)?;
    let g = dipole / HBAR * (HBAR * omega / (2.0 * EPSILON_0 * mode.mode_volume)).sqrt();
    let cooperativity = g * g / (mode.kappa_total * gamma);
    let p_cavity = cooperativity / (cooperativity + 1.0);
    Ok(Coupling { g, cooperativity, p_cavity, eta_extract: p_cavity * mode.eta_coll })
}

/// Everything derived from one geometry + transition pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavityReport {
    pub stability: f64,
    pub mode: CavityMode,
    pub dipole: f64,
    pub coupling: Coupling,
}

pub fn analyze(geometry: &CavityGeometry, transition: &TransitionSpec) -> Result<CavityReport, CavityError> {
    let mode = CavityMode::new(geometry, transition.wavelength)?;
    let dipole = dipole_matrix_element(transition)?;
    let coupling = coupling_and_cooperativity(dipole, &mode, transition.angular_frequency(), transition.decay_rate)?;
    Ok(CavityReport { stability: stability(geometry), mode, dipole, coupling })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geom(r: f64, l: f64) -> CavityGeometry {
        CavityGeometry { radius_of_curvature: r, mirror_spacing: l, ..Default::default() }
    }

    #[test]
    fn stability_values() {
        assert_relative_eq!(stability(&CavityGeometry::default()), -0.95, epsilon = 1e-12);
        assert_eq!(stability(&geom(5e-3, 5e-3)), 0.0);
        assert_relative_eq!(stability(&geom(5e-3, 10e-3)), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn mode_geometry_matches_high_precision_oracle() {
        // 30-digit evaluation of the closed-form expressions.
        let m = mode_geometry(&CavityGeometry::default(), 1480e-9).unwrap();
        assert_relative_eq!(m.waist, 1.917_684_153_833_253e-5, max_relative = 1e-12);
        assert_relative_eq!(m.mode_volume, 2.816_103_784_902_778e-12, max_relative = 1e-12);
        assert_relative_eq!(m.rayleigh_range, 7.806_247_497_997_998e-4, max_relative = 1e-12);
    }

    #[test]
    fn confocal_waist_and_wavelength_scaling() {
        let g = geom(5e-3, 5e-3);
        let m = mode_geometry(&g, 1e-6).unwrap();
        assert_relative_eq!(m.waist, (1e-6 * 5e-3 / TWO_PI).sqrt(), max_relative = 1e-14);
        let m2 = mode_geometry(&g, 2e-6).unwrap();
        assert_relative_eq!(m2.waist / m.waist, 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn unstable_geometry_rejected() {
        assert!(matches!(mode_geometry(&geom(5e-3, 10e-3), 1e-6), Err(CavityError::Unstable { .. })));
        assert!(matches!(mode_geometry(&geom(5e-3, 12e-3), 1e-6), Err(CavityError::Unstable { .. })));
        assert!(mode_geometry(&geom(5e-3, 0.0), 1e-6).is_err());
    }

    #[test]
    fn linewidth_values() {
        let l = linewidths(&CavityGeometry::default()).unwrap();
        assert_relative_eq!(l.kappa_int / TWO_PI, 154e3, max_relative = 2e-3);
        assert_relative_eq!(l.kappa_ext / TWO_PI, 307e3, max_relative = 2e-3);
        assert_relative_eq!(l.fsr, 15.4e9, max_relative = 2e-3);
        assert_relative_eq!(l.eta_coll, 0.5, epsilon = 1e-15);
        assert_relative_eq!(l.kappa_total, l.kappa_int + l.kappa_ext);
    }

    #[test]
    fn lossless_outcoupling_limit() {
        let g = CavityGeometry { finesse_intrinsic: f64::INFINITY, ..Default::default() };
        let l = linewidths(&g).unwrap();
        assert_eq!(l.kappa_int, 0.0);
        assert_eq!(l.eta_coll, 1.0);
    }

    #[test]
    fn over_coupled_mirror_rejected() {
        let g = CavityGeometry { finesse_extrinsic: 2e5, ..Default::default() };
        assert!(matches!(linewidths(&g), Err(CavityError::NegativeCollection { .. })));
    }

    #[test]
    fn dipole_element_matches_reported_value() {
        let d = dipole_matrix_element(&TransitionSpec::default()).unwrap();
        assert_relative_eq!(d, 1.96e-29, max_relative = 5e-3);
    }

    #[test]
    fn dipole_scaling_and_zero_rate() {
        let t = TransitionSpec::default();
        let d = dipole_matrix_element(&t).unwrap();
        let t4 = TransitionSpec { decay_rate: 4.0 * t.decay_rate, ..t };
        assert_relative_eq!(dipole_matrix_element(&t4).unwrap(), 2.0 * d, max_relative = 1e-14);
        let t0 = TransitionSpec { decay_rate: 0.0, ..t };
        assert_eq!(dipole_matrix_element(&t0).unwrap(), 0.0);
    }

    #[test]
    fn forbidden_hyperfine_pair_gives_zero_dipole() {
        // F = 1/2 in J = 1 cannot reach F' = 5/2 with a rank-1 operator.
        let t = TransitionSpec { f_upper: HalfInt::from_doubled(5), ..Default::default() };
        assert_eq!(dipole_matrix_element(&t).unwrap(), 0.0);
    }

    #[test]
    fn free_space_limit() {
        let mut mode = CavityMode::new(&CavityGeometry::default(), 1480e-9).unwrap();
        mode.mode_volume = 1e30;
        let t = TransitionSpec::default();
        let c = coupling_and_cooperativity(2e-29, &mode, t.angular_frequency(), t.decay_rate).unwrap();
        assert!(c.g < 1e-3 && c.cooperativity < 1e-12 && c.p_cavity < 1e-12);
    }
}
