//! Spin-1/2 operator machinery over the sz product basis.
//!
//! Basis convention: bit `i` (little-endian) of a state index is ion `i+1`;
//! a clear bit means sz = +1. All coupling-matrix Hamiltonians are real
//! symmetric in this basis (the sy sy matrix elements are products of two
//! imaginary units).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::target::TargetHamiltonian;

/// sz eigenvalue of ion `i` (0-based) in basis state `s`.
#[inline]
pub fn sz_eigenvalue(s: usize, i: usize) -> f64 {
    if s & (1 << i) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Staggered vacuum pattern: sz = +1 on odd 1-based sites, -1 on even sites,
/// the zero-charge state whose cumulative-field diagonal vanishes.
pub fn staggered_vacuum_index(n: usize) -> usize {
    (0..n).filter(|i| i % 2 == 1).map(|i| 1usize << i).sum()
}

/// Dense real-symmetric matrix of a coupling-matrix Hamiltonian.
pub fn dense_hamiltonian(h: &TargetHamiltonian) -> DMatrix<f64> {
    let n = h.n_spins;
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for s in 0..dim {
        // Diagonal: sz sz couplings and the longitudinal field.
        let mut diag = 0.0;
        for i in 0..n {
            let zi = sz_eigenvalue(s, i);
            diag -= 0.5 * h.bz[i] * zi;
            for j in (i + 1)..n {
                diag += h.jzz[(i, j)] * zi * sz_eigenvalue(s, j);
            }
        }
        m[(s, s)] = diag;

        for i in 0..n {
            // Transverse field: -Bx sx.
            if h.bx[i] != 0.0 {
                m[(s ^ (1 << i), s)] += -h.bx[i];
            }
            for j in (i + 1)..n {
                let flipped = s ^ (1 << i) ^ (1 << j);
                // sx sx contributes +1; sy sy contributes -1 when the two bits
                // agree and +1 when they differ.
                let same = ((s >> i) & 1) == ((s >> j) & 1);
                let yy = if same { -1.0 } else { 1.0 };
                let amp = h.jxx[(i, j)] + yy * h.jyy[(i, j)];
                if amp != 0.0 {
                    m[(flipped, s)] += amp;
                }
            }
        }
    }
    m
}

/// Matrix-free `out = H x` for complex state vectors.
pub fn apply_hamiltonian(
    h: &TargetHamiltonian,
    x: &DVector<Complex64>,
    out: &mut DVector<Complex64>,
) {
    let n = h.n_spins;
    let dim = 1usize << n;
    debug_assert_eq!(x.len(), dim);
    out.fill(Complex64::new(0.0, 0.0));
    for s in 0..dim {
        let amp = x[s];
        if amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut diag = 0.0;
        for i in 0..n {
            let zi = sz_eigenvalue(s, i);
            diag -= 0.5 * h.bz[i] * zi;
            for j in (i + 1)..n {
                diag += h.jzz[(i, j)] * zi * sz_eigenvalue(s, j);
            }
        }
        out[s] += diag * amp;
        for i in 0..n {
            if h.bx[i] != 0.0 {
                out[s ^ (1 << i)] += -h.bx[i] * amp;
            }
            for j in (i + 1)..n {
                let same = ((s >> i) & 1) == ((s >> j) & 1);
                let yy = if same { -1.0 } else { 1.0 };
                let coupling = h.jxx[(i, j)] + yy * h.jyy[(i, j)];
                if coupling != 0.0 {
                    out[s ^ (1 << i) ^ (1 << j)] += coupling * amp;
                }
            }
        }
    }
}

/// Expectation of the total sz operator.
pub fn total_sz(x: &DVector<Complex64>, n: usize) -> f64 {
    x.iter()
        .enumerate()
        .map(|(s, a)| {
            let z: f64 = (0..n).map(|i| sz_eigenvalue(s, i)).sum();
            z * a.norm_sqr()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::{schwinger_direct, schwinger_hamiltonian, SchwingerParams};

    #[test]
    fn dense_matrix_is_symmetric() {
        let p = SchwingerParams::new(4, 0.6, 0.1).unwrap();
        let h = schwinger_hamiltonian(&p).unwrap();
        let m = dense_hamiltonian(&h);
        for a in 0..16 {
            for b in 0..16 {
                assert_eq!(m[(a, b)], m[(b, a)]);
            }
        }
    }

    #[test]
    fn apply_matches_dense() {
        let p = SchwingerParams::new(4, 0.6, 0.1).unwrap();
        let mut h = schwinger_hamiltonian(&p).unwrap();
        for i in 0..4 {
            h.bx[i] = 0.3 * (i as f64 + 1.0);
        }
        let m = dense_hamiltonian(&h);
        let x = DVector::from_fn(16, |s, _| {
            Complex64::new((s as f64).sin(), (s as f64 * 0.7).cos())
        });
        let mut out = DVector::from_element(16, Complex64::new(0.0, 0.0));
        apply_hamiltonian(&h, &x, &mut out);
        let dense = m.map(|v| Complex64::new(v, 0.0)) * &x;
        for s in 0..16 {
            assert!((out[s] - dense[s]).norm() < 1e-12 * dense[s].norm().max(1.0));
        }
    }

    #[test]
    fn split_and_direct_forms_differ_by_identity() {
        for (n, x, mu, epsilon0) in [
            (2usize, 0.0, 0.0, 0.0),
            (4, 0.6, 0.1, 0.0),
            (4, 6.0, 1.0, 0.0),
            (4, 0.6, 0.1, 0.3),
            (6, 1.0, 0.5, -0.2),
        ] {
            let p = SchwingerParams {
                n_sites: n,
                x,
                mu,
                epsilon0,
            };
            let split = dense_hamiltonian(&schwinger_hamiltonian(&p).unwrap());
            let direct = schwinger_direct(&p).unwrap().to_dense();
            let dim = 1usize << n;
            let diff = &direct - &split;
            let shift = diff[(0, 0)];
            for a in 0..dim {
                for b in 0..dim {
                    let expect = if a == b { shift } else { 0.0 };
                    assert!(
                        (diff[(a, b)] - expect).abs() < 1e-10,
                        "N={n}: diff[{a},{b}] = {}",
                        diff[(a, b)]
                    );
                }
            }
        }
    }

    #[test]
    fn schwinger_commutes_with_total_sz() {
        // Block structure: no matrix element connects different sz sectors.
        let p = SchwingerParams::new(4, 6.0, 1.0).unwrap();
        let m = dense_hamiltonian(&schwinger_hamiltonian(&p).unwrap());
        for a in 0..16usize {
            for b in 0..16usize {
                if m[(a, b)] != 0.0 {
                    let za: i32 = (0..4).map(|i| sz_eigenvalue(a, i) as i32).sum();
                    let zb: i32 = (0..4).map(|i| sz_eigenvalue(b, i) as i32).sum();
                    assert_eq!(za, zb, "element ({a},{b}) breaks charge conservation");
                }
            }
        }
    }

    #[test]
    fn staggered_vacuum_is_ground_state_at_zero_hopping() {
        let p = SchwingerParams::new(6, 0.0, 0.7).unwrap();
        let m = dense_hamiltonian(&schwinger_hamiltonian(&p).unwrap());
        let vac = staggered_vacuum_index(6);
        let vac_energy = m[(vac, vac)];
        for s in 0..(1usize << 6) {
            assert!(
                m[(s, s)] >= vac_energy - 1e-12,
                "state {s} undercuts the vacuum"
            );
        }
    }
}
