//! Physical constants (SI) and frequency-unit helpers.

use std::f64::consts::TAU;

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Atomic mass unit [kg].
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Elementary charge [C].
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Vacuum permittivity [F/m].
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Coulomb constant e^2 / (4 pi eps0) [J m].
pub const COULOMB_E2: f64 =
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (4.0 * std::f64::consts::PI * EPSILON_0);

/// Isotope mass of 171Yb [amu].
pub const YB171_AMU: f64 = 170.936_323;

/// Hz -> rad/s.
#[inline]
pub fn hz_to_angular(hz: f64) -> f64 {
    TAU * hz
}

/// rad/s -> Hz.
#[inline]
pub fn angular_to_hz(w: f64) -> f64 {
    w / TAU
}

/// Characteristic Coulomb length of an ion chain,
/// `l = (e^2 / (4 pi eps0 M w^2))^(1/3)` for axial angular frequency `w`.
pub fn chain_length_scale(mass_kg: f64, axial_angular: f64) -> f64 {
    (COULOMB_E2 / (mass_kg * axial_angular * axial_angular)).cbrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angular_round_trip() {
        let f = 4.1351e6;
        assert!((angular_to_hz(hz_to_angular(f)) - f).abs() < 1e-6);
    }

    #[test]
    fn length_scale_magnitude() {
        // Yb chain at nu_A = 0.713 MHz: the scale sits in the few-micron range.
        let l = chain_length_scale(YB171_AMU * AMU, hz_to_angular(0.713e6));
        assert!(l > 1e-6 && l < 20e-6, "l = {l}");
    }
}
