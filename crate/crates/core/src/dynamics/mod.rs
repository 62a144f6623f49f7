//! Exact state-vector dynamics: spin states, vacuum-persistence series, and
//! perturbed-Hamiltonian ensemble bands.

pub mod operator;
mod propagator;

pub use operator::{apply_hamiltonian, dense_hamiltonian, staggered_vacuum_index, total_sz};
pub use propagator::{
    AdaptiveRkPropagator, EigenPropagator, Propagator, PropagatorRegistry, EIGEN_MAX_SPINS,
    MAX_SPINS,
};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::target::TargetHamiltonian;
use crate::{Error, Result};

/// Normalized state vector over the sz product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    pub n_spins: usize,
    pub amplitudes: DVector<Complex64>,
}

impl SpinState {
    /// Wrap an amplitude vector, enforcing dimension 2^n and unit norm to
    /// 1e-10.
    pub fn new(n_spins: usize, amplitudes: DVector<Complex64>) -> Result<Self> {
        let dim = 1usize << n_spins;
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch {
                state: amplitudes.len(),
                expected: dim,
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidModel(format!("state norm is {norm}, not 1")));
        }
        Ok(Self {
            n_spins,
            amplitudes,
        })
    }

    /// Product basis state with the given index.
    pub fn basis_state(n_spins: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_spins;
        if index >= dim {
            return Err(Error::DimensionMismatch {
                state: index,
                expected: dim,
            });
        }
        let mut amplitudes = DVector::from_element(dim, Complex64::new(0.0, 0.0));
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_spins,
            amplitudes,
        })
    }

    /// The staggered vacuum |down up down up ...> (zero net charge, zero
    /// cumulative field).
    pub fn staggered_vacuum(n_spins: usize) -> Self {
        Self::basis_state(n_spins, staggered_vacuum_index(n_spins)).unwrap()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// |<self|other>|^2.
    pub fn overlap_squared(&self, other: &Self) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.amplitudes.iter().zip(other.amplitudes.iter()) {
            acc += a.conj() * b;
        }
        acc.norm_sqr()
    }

    /// <self| H |self>.
    pub fn energy(&self, h: &TargetHamiltonian) -> f64 {
        let mut hx = DVector::from_element(self.amplitudes.len(), Complex64::new(0.0, 0.0));
        apply_hamiltonian(h, &self.amplitudes, &mut hx);
        self.amplitudes
            .iter()
            .zip(hx.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

/// A labeled time series of a scalar observable.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    /// Sample times; units follow the Hamiltonian handed to the propagator.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Evolve a state with the preferred route for its size: dense
/// eigendecomposition up to [`EIGEN_MAX_SPINS`], the adaptive integrator
/// beyond that (up to [`MAX_SPINS`]).
pub fn evolve_state(
    h: &TargetHamiltonian,
    psi0: &SpinState,
    times: &[f64],
) -> Result<Vec<SpinState>> {
    if h.n_spins <= EIGEN_MAX_SPINS {
        EigenPropagator.evolve(h, psi0, times)
    } else {
        AdaptiveRkPropagator::default().evolve(h, psi0, times)
    }
}

/// Vacuum-persistence amplitude series: VPA(t) = |<psi0|psi(t)>|^2.
pub fn vpa_series(
    psi0: &SpinState,
    states: &[SpinState],
    times: &[f64],
) -> Result<ObservableSeries> {
    if states.len() != times.len() {
        return Err(Error::InvalidModel(
            "one state per sample time required".into(),
        ));
    }
    let values = states
        .iter()
        .map(|s| {
            if s.amplitudes.len() != psi0.amplitudes.len() {
                return Err(Error::DimensionMismatch {
                    state: s.amplitudes.len(),
                    expected: psi0.amplitudes.len(),
                });
            }
            Ok(psi0.overlap_squared(s))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ObservableSeries {
        times: times.to_vec(),
        values,
    })
}

/// Central curve and spread band of a filtered Hamiltonian ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleBand {
    pub times: Vec<f64>,
    /// Pointwise mean over the retained members.
    pub central: Vec<f64>,
    /// central -/+ one sample standard deviation.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Indices (into the input list) of the retained Hamiltonians.
    pub retained: Vec<usize>,
}

impl EnsembleBand {
    pub fn width(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    /// Mean band width over an index range.
    pub fn mean_width(&self, range: std::ops::Range<usize>) -> f64 {
        let len = range.len().max(1) as f64;
        range.map(|k| self.width(k)).sum::<f64>() / len
    }
}

/// Evolve every Hamiltonian whose beyond-nearest-neighbor metric
/// `sum_{|i-j|>=2} Jxx_ij^2` passes the filter, and summarize the VPA curves
/// as mean and +/- one sample standard deviation. Retaining a single member
/// yields a zero-width band; an empty retained set is an error.
pub fn ensemble_band(
    hamiltonians: &[TargetHamiltonian],
    filter_threshold: f64,
    psi0: &SpinState,
    times: &[f64],
    propagator: &dyn Propagator,
) -> Result<EnsembleBand> {
    let retained: Vec<usize> = hamiltonians
        .iter()
        .enumerate()
        .filter(|(_, h)| TargetHamiltonian::non_nearest_metric(&h.jxx) <= filter_threshold)
        .map(|(k, _)| k)
        .collect();
    if retained.is_empty() {
        return Err(Error::EmptyEnsemble {
            threshold: filter_threshold,
        });
    }

    let mut curves = Vec::with_capacity(retained.len());
    for &k in &retained {
        let states = propagator.evolve(&hamiltonians[k], psi0, times)?;
        curves.push(vpa_series(psi0, &states, times)?.values);
    }

    let m = retained.len() as f64;
    let mut central = Vec::with_capacity(times.len());
    let mut lower = Vec::with_capacity(times.len());
    let mut upper = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let mean = curves.iter().map(|c| c[k]).sum::<f64>() / m;
        let std = if retained.len() > 1 {
            (curves
                .iter()
                .map(|c| (c[k] - mean) * (c[k] - mean))
                .sum::<f64>()
                / (m - 1.0))
                .sqrt()
        } else {
            0.0
        };
        central.push(mean);
        lower.push(mean - std);
        upper.push(mean + std);
    }
    Ok(EnsembleBand {
        times: times.to_vec(),
        central,
        lower,
        upper,
        retained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::{schwinger_hamiltonian, SchwingerParams};

    fn schwinger(n: usize, x: f64, mu: f64) -> TargetHamiltonian {
        schwinger_hamiltonian(&SchwingerParams::new(n, x, mu).unwrap()).unwrap()
    }

    #[test]
    fn vpa_starts_at_one() {
        let h = schwinger(4, 0.6, 0.1);
        let psi0 = SpinState::staggered_vacuum(4);
        let times = [0.0, 1.0, 5.0];
        let states = evolve_state(&h, &psi0, &times).unwrap();
        let vpa = vpa_series(&psi0, &states, &times).unwrap();
        assert_eq!(vpa.values[0], 1.0);
        assert!(vpa
            .values
            .iter()
            .all(|&v| (-1e-10..=1.0 + 1e-10).contains(&v)));
    }

    #[test]
    fn zero_hopping_freezes_the_vacuum() {
        // x = 0 leaves the Hamiltonian diagonal: a product state only picks
        // up a phase and the VPA stays pinned at 1.
        let h = schwinger(4, 0.0, 0.3);
        let psi0 = SpinState::staggered_vacuum(4);
        let times: Vec<f64> = (0..=50).map(|k| k as f64 * 2.0).collect();
        let states = evolve_state(&h, &psi0, &times).unwrap();
        let vpa = vpa_series(&psi0, &states, &times).unwrap();
        for &v in &vpa.values {
            assert!((v - 1.0).abs() < 1e-10, "VPA drifted to {v}");
        }
    }

    #[test]
    fn hopping_depletes_the_vacuum() {
        let h = schwinger(4, 0.6, 0.1);
        let psi0 = SpinState::staggered_vacuum(4);
        let times: Vec<f64> = (1..=40).map(|k| k as f64 * 0.5).collect();
        let states = evolve_state(&h, &psi0, &times).unwrap();
        let vpa = vpa_series(&psi0, &states, &times).unwrap();
        assert!(vpa.values.iter().any(|&v| v < 0.9), "no depletion seen");
    }

    #[test]
    fn unitarity_energy_and_charge_conserved() {
        let h = schwinger(6, 0.6, 0.1);
        let psi0 = SpinState::staggered_vacuum(6);
        let e0 = psi0.energy(&h);
        let z0 = total_sz(&psi0.amplitudes, 6);
        let times: Vec<f64> = (1..=20).map(|k| k as f64 * 1.3).collect();
        let states = evolve_state(&h, &psi0, &times).unwrap();
        for s in &states {
            assert!((s.norm() - 1.0).abs() < 1e-10);
            let e = s.energy(&h);
            assert!(
                (e - e0).abs() <= 1e-9 * e0.abs().max(1.0),
                "energy {e} vs {e0}"
            );
            assert!((total_sz(&s.amplitudes, 6) - z0).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_shift_leaves_vpa_unchanged() {
        // The direct form is the split form plus a multiple of the identity;
        // evolving under either gives the same VPA.
        let h = schwinger(4, 0.6, 0.1);
        let p = SchwingerParams::new(4, 0.6, 0.1).unwrap();
        let direct = crate::target::schwinger_direct(&p).unwrap().to_dense();
        let split = dense_hamiltonian(&h);
        let shift = (direct.clone() - &split)[(0, 0)];
        assert!(shift != 0.0);

        let psi0 = SpinState::staggered_vacuum(4);
        let times: Vec<f64> = (1..=10).map(|k| k as f64 * 1.1).collect();

        // Eigen-evolve both dense forms directly.
        let evolve_dense = |m: &nalgebra::DMatrix<f64>| -> Vec<f64> {
            let eig = m.clone().symmetric_eigen();
            let vt =
                eig.eigenvectors.transpose().map(|v| Complex64::new(v, 0.0)) * &psi0.amplitudes;
            times
                .iter()
                .map(|&t| {
                    let phased = DVector::from_fn(vt.len(), |k, _| {
                        Complex64::new(0.0, -eig.eigenvalues[k] * t).exp() * vt[k]
                    });
                    let psi = eig.eigenvectors.map(|x| Complex64::new(x, 0.0)) * phased;
                    let overlap: Complex64 = psi0
                        .amplitudes
                        .iter()
                        .zip(psi.iter())
                        .map(|(a, b)| a.conj() * b)
                        .sum();
                    overlap.norm_sqr()
                })
                .collect()
        };
        let vpa_split = evolve_dense(&split);
        let vpa_direct = evolve_dense(&direct);
        for (a, b) in vpa_split.iter().zip(&vpa_direct) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn identical_members_give_zero_band() {
        let h = schwinger(4, 0.6, 0.1);
        let hs = vec![h.clone(), h.clone(), h];
        let psi0 = SpinState::staggered_vacuum(4);
        let times: Vec<f64> = (0..=5).map(|k| k as f64).collect();
        let band = ensemble_band(&hs, 1e30, &psi0, &times, &EigenPropagator).unwrap();
        assert_eq!(band.retained.len(), 3);
        for k in 0..times.len() {
            assert!(band.width(k) < 1e-12);
        }
    }

    #[test]
    fn empty_filter_is_an_error() {
        let mut h = schwinger(4, 0.6, 0.1);
        h.jxx[(0, 2)] = 0.5;
        h.jxx[(2, 0)] = 0.5;
        let psi0 = SpinState::staggered_vacuum(4);
        match ensemble_band(&[h], 1e-6, &psi0, &[0.0, 1.0], &EigenPropagator) {
            Err(Error::EmptyEnsemble { .. }) => {}
            other => panic!("expected empty ensemble, got {other:?}"),
        }
    }

    #[test]
    fn norm_validation_rejects_bad_states() {
        let v = DVector::from_vec(vec![Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0)]);
        assert!(SpinState::new(1, v).is_err());
    }
}
