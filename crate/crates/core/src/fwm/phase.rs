use serde::{Deserialize, Serialize};

use crate::constants::TWO_PI;

/// A plane wave in the plane of the beams.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub wavelength: f64,
    /// Direction of the wavevector, rad.
    pub angle: f64,
}

impl Beam {
    fn k(&self) -> [f64; 2] {
        let k = TWO_PI / self.wavelength;
        [k * self.angle.cos(), k * self.angle.sin()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseMismatch {
    /// |k12 + k23 − k34 − k41|, rad/m.
    pub delta_k: f64,
    /// Δk · L.
    pub xi: f64,
}

/// Mismatch of the four-wave cycle for beams `[k12, k23, k34, k41]` over an overlap length.
///
/// Wavevectors enter as the momentum each leg deposits on the atom, so a
/// counter-propagating Ω41 beam driving the downward |4⟩ → |1⟩ leg appears
/// with the same direction as Ω12.
pub fn phase_mismatch(beams: [Beam; 4], overlap_length: f64) -> PhaseMismatch {
    let [k12, k23, k34, k41] = beams.map(|b| b.k());
    let dx = k12[0] + k23[0] - k34[0] - k41[0];
    let dy = k12[1] + k23[1] - k34[1] - k41[1];
    let delta_k = dx.hypot(dy);
    PhaseMismatch { delta_k, xi: delta_k * overlap_length }
}

/// Ω12 and Ω41 at 556 nm, Ω23 and the cavity photon at 1480 nm crossing at 45°.
pub fn default_beams() -> [Beam; 4] {
    let quarter = std::f64::consts::FRAC_PI_4;
    [
        Beam { wavelength: 556e-9, angle: 0.0 },
        Beam { wavelength: 1480e-9, angle: std::f64::consts::FRAC_PI_2 },
        Beam { wavelength: 1480e-9, angle: std::f64::consts::FRAC_PI_2 + quarter },
        Beam { wavelength: 556e-9, angle: 0.0 },
    ]
}
