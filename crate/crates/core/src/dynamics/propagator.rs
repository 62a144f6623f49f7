//! State-vector propagators behind a common interface.
//!
//! Two interchangeable routes are registered by name: `eigen` diagonalizes
//! the dense real-symmetric Hamiltonian (the reference path, up to 10 spins)
//! and `rk45` integrates the Schroedinger equation matrix-free with an
//! adaptive Dormand-Prince stepper (cross-check path, up to 14 spins). The
//! two must agree pointwise; the acceptance suite enforces 1e-8.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;

use super::operator::{apply_hamiltonian, dense_hamiltonian};
use super::SpinState;
use crate::target::TargetHamiltonian;
use crate::{Error, Result};

/// Largest spin count of the dense-eigendecomposition route.
pub const EIGEN_MAX_SPINS: usize = 10;
/// Largest spin count of any dense-state route.
pub const MAX_SPINS: usize = 14;

/// Exact evolution `psi(t) = exp(-i H t) psi0` sampled at the given times.
pub trait Propagator {
    fn name(&self) -> &'static str;
    fn evolve(
        &self,
        h: &TargetHamiltonian,
        psi0: &SpinState,
        times: &[f64],
    ) -> Result<Vec<SpinState>>;
}

fn validate(h: &TargetHamiltonian, psi0: &SpinState, times: &[f64], max: usize) -> Result<()> {
    if h.n_spins > max {
        return Err(Error::DimensionOverflow {
            n_spins: h.n_spins,
            max,
        });
    }
    let dim = 1usize << h.n_spins;
    if psi0.amplitudes.len() != dim {
        return Err(Error::DimensionMismatch {
            state: psi0.amplitudes.len(),
            expected: dim,
        });
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidModel(
            "times must be sorted ascending and nonnegative".into(),
        ));
    }
    Ok(())
}

/// Dense eigendecomposition route.
pub struct EigenPropagator;

impl Propagator for EigenPropagator {
    fn name(&self) -> &'static str {
        "eigen"
    }

    fn evolve(
        &self,
        h: &TargetHamiltonian,
        psi0: &SpinState,
        times: &[f64],
    ) -> Result<Vec<SpinState>> {
        validate(h, psi0, times, EIGEN_MAX_SPINS)?;
        let dense = dense_hamiltonian(h);
        let eig = dense.symmetric_eigen();
        // Project once: c = V^T psi0.
        let vt_psi =
            eig.eigenvectors.transpose().map(|v| Complex64::new(v, 0.0)) * &psi0.amplitudes;
        let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            if t == 0.0 {
                out.push(psi0.clone());
                continue;
            }
            let phased = DVector::from_fn(vt_psi.len(), |k, _| {
                let phase = Complex64::new(0.0, -eig.eigenvalues[k] * t).exp();
                phase * vt_psi[k]
            });
            out.push(SpinState {
                n_spins: h.n_spins,
                amplitudes: &v * phased,
            });
        }
        Ok(out)
    }
}

/// Adaptive Dormand-Prince RK5(4) on `d psi/dt = -i H psi`, matrix-free.
pub struct AdaptiveRkPropagator {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for AdaptiveRkPropagator {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
        }
    }
}

// Dormand-Prince coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl AdaptiveRkPropagator {
    fn step(
        &self,
        h: &TargetHamiltonian,
        y: &DVector<Complex64>,
        k1: &DVector<Complex64>,
        dt: f64,
        scratch: &mut DVector<Complex64>,
    ) -> (DVector<Complex64>, f64, DVector<Complex64>) {
        let minus_i = Complex64::new(0.0, -1.0);
        let mut ks: Vec<DVector<Complex64>> = Vec::with_capacity(7);
        ks.push(k1.clone());
        for stage in 0..6 {
            let mut arg = y.clone();
            for (j, k) in ks.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    arg.axpy(Complex64::new(a * dt, 0.0), k, Complex64::new(1.0, 0.0));
                }
            }
            apply_hamiltonian(h, &arg, scratch);
            ks.push(scratch.map(|v| minus_i * v));
        }
        let mut y5 = y.clone();
        let mut err = DVector::from_element(y.len(), Complex64::new(0.0, 0.0));
        for (j, k) in ks.iter().enumerate() {
            if B5[j] != 0.0 {
                y5.axpy(Complex64::new(B5[j] * dt, 0.0), k, Complex64::new(1.0, 0.0));
            }
            let d = (B5[j] - B4[j]) * dt;
            if d != 0.0 {
                err.axpy(Complex64::new(d, 0.0), k, Complex64::new(1.0, 0.0));
            }
        }
        // Weighted rms error.
        let mut acc = 0.0;
        for (e, v) in err.iter().zip(y5.iter()) {
            let scale = self.atol + self.rtol * v.norm();
            let r = e.norm() / scale;
            acc += r * r;
        }
        let err_norm = (acc / y.len() as f64).sqrt();
        // FSAL: k7 is the derivative at the new point.
        (y5, err_norm, ks.pop().unwrap())
    }
}

impl Propagator for AdaptiveRkPropagator {
    fn name(&self) -> &'static str {
        "rk45"
    }

    fn evolve(
        &self,
        h: &TargetHamiltonian,
        psi0: &SpinState,
        times: &[f64],
    ) -> Result<Vec<SpinState>> {
        validate(h, psi0, times, MAX_SPINS)?;
        let minus_i = Complex64::new(0.0, -1.0);
        let dim = psi0.amplitudes.len();
        let mut scratch = DVector::from_element(dim, Complex64::new(0.0, 0.0));

        let mut y = psi0.amplitudes.clone();
        apply_hamiltonian(h, &y, &mut scratch);
        let mut deriv = scratch.map(|v| minus_i * v);

        // Initial step from the derivative scale.
        let rate = deriv.norm().max(1e-12);
        let mut dt = (0.01 / rate).min(1e-2 / rate.max(1.0)).max(1e-18);

        let mut t = 0.0;
        let mut out = Vec::with_capacity(times.len());
        for &target in times {
            while t < target {
                let step_dt = dt.min(target - t);
                let (y5, err, k_last) = self.step(h, &y, &deriv, step_dt, &mut scratch);
                if err <= 1.0 {
                    t += step_dt;
                    y = y5;
                    deriv = k_last;
                    let grow = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
                    dt = step_dt * grow.clamp(0.2, 5.0);
                } else {
                    dt = step_dt * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                }
                if dt < 1e-16 * target.max(1.0) {
                    return Err(Error::InvalidModel(
                        "adaptive step collapsed; tolerances too tight for this system".into(),
                    ));
                }
            }
            out.push(SpinState {
                n_spins: h.n_spins,
                amplitudes: y.clone(),
            });
        }
        Ok(out)
    }
}

/// Name-keyed registry of propagators.
pub struct PropagatorRegistry {
    propagators: BTreeMap<&'static str, Box<dyn Propagator + Send + Sync>>,
}

impl PropagatorRegistry {
    pub fn new() -> Self {
        Self {
            propagators: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::new();
        r.register(Box::new(EigenPropagator));
        r.register(Box::new(AdaptiveRkPropagator::default()));
        r
    }

    pub fn register(&mut self, p: Box<dyn Propagator + Send + Sync>) {
        self.propagators.insert(p.name(), p);
    }

    pub fn get(&self, name: &str) -> Result<&(dyn Propagator + Send + Sync)> {
        self.propagators
            .get(name)
            .map(|p| p.as_ref())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: "propagator",
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.propagators.keys().copied().collect()
    }
}

impl Default for PropagatorRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::{schwinger_hamiltonian, SchwingerParams};

    #[test]
    fn registry_resolves_both_routes() {
        let r = PropagatorRegistry::builtin();
        assert_eq!(r.names(), vec!["eigen", "rk45"]);
        assert!(r.get("eigen").is_ok());
        assert!(matches!(
            r.get("magnus"),
            Err(Error::UnknownStrategy { .. })
        ));
    }

    #[test]
    fn zero_hamiltonian_leaves_state_fixed() {
        let h = TargetHamiltonian::zero(3);
        let psi0 = SpinState::basis_state(3, 5).unwrap();
        for prop in [
            &EigenPropagator as &dyn Propagator,
            &AdaptiveRkPropagator::default(),
        ] {
            let states = prop.evolve(&h, &psi0, &[0.0, 1.0, 10.0]).unwrap();
            for s in states {
                assert!((s.amplitudes[5] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn single_spin_field_accumulates_relative_phase() {
        // H = -1/2 B sz: amplitudes pick up e^{-i(-B/2)t} and e^{-i(B/2)t},
        // a relative phase e^{iBt} between the two basis states.
        let b = 0.8;
        let mut h = TargetHamiltonian::zero(1);
        h.bz[0] = b;
        let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let psi0 = SpinState::new(1, DVector::from_vec(vec![amp, amp])).unwrap();
        let t = 2.1;
        let states = EigenPropagator.evolve(&h, &psi0, &[t]).unwrap();
        let ratio = states[0].amplitudes[0] / states[0].amplitudes[1];
        let expected = Complex64::new(0.0, b * t).exp();
        assert!((ratio - expected).norm() < 1e-10);
    }

    #[test]
    fn routes_agree_on_schwinger_dynamics() {
        let p = SchwingerParams::new(4, 0.6, 0.1).unwrap();
        let h = schwinger_hamiltonian(&p).unwrap();
        let psi0 = SpinState::staggered_vacuum(4);
        let times: Vec<f64> = (1..=10).map(|k| k as f64 * 2.0).collect();
        let a = EigenPropagator.evolve(&h, &psi0, &times).unwrap();
        let b = AdaptiveRkPropagator::default()
            .evolve(&h, &psi0, &times)
            .unwrap();
        for (sa, sb) in a.iter().zip(&b) {
            let dist = (&sa.amplitudes - &sb.amplitudes).norm();
            assert!(dist < 1e-8, "routes disagree by {dist}");
        }
    }

    #[test]
    fn eigen_rejects_oversized_systems() {
        let h = TargetHamiltonian::zero(11);
        let psi0 = SpinState::basis_state(11, 0).unwrap();
        match EigenPropagator.evolve(&h, &psi0, &[1.0]) {
            Err(Error::DimensionOverflow {
                max: EIGEN_MAX_SPINS,
                ..
            }) => {}
            other => panic!("expected overflow, got {other:?}"),
        }
    }
}
