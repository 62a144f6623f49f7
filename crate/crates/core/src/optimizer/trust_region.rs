//! Dense Levenberg-Marquardt least squares with Nielsen damping updates.
//!
//! The fit problems in this crate are small (tens of parameters) and
//! overparametrized, so a damped Gauss-Newton step with an adaptive
//! trust-region parameter reaches zero-residual solutions at quadratic rate.

use nalgebra::{DMatrix, DVector};

/// Residual/Jacobian callbacks of a least-squares problem.
pub trait LeastSquares {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the max |residual| drops below this.
    pub residual_tol: f64,
    /// Stop when the gradient infinity norm drops below this.
    pub gradient_tol: f64,
    /// Stop when the step is this small relative to the iterate.
    pub step_tol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            residual_tol: 1e-14,
            gradient_tol: 1e-15,
            step_tol: 1e-15,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub x: DVector<f64>,
    pub max_abs_residual: f64,
    pub iterations: usize,
}

/// Minimize `|r(x)|^2` starting from `x0`.
pub fn minimize<P: LeastSquares>(problem: &P, x0: DVector<f64>, opts: &LmOptions) -> LmOutcome {
    let mut x = x0;
    let mut r = problem.residuals(&x);
    let mut cost = r.norm_squared();

    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut iterations = 0;

    for _ in 0..opts.max_iterations {
        iterations += 1;
        if r.amax() < opts.residual_tol {
            break;
        }
        let jac = problem.jacobian(&x);
        let grad = jac.transpose() * &r;
        if grad.amax() < opts.gradient_tol {
            break;
        }
        let jtj = jac.transpose() * &jac;

        // Damped normal equations; scale damping with the diagonal so the
        // step is invariant under parameter rescaling.
        let mut accepted = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            let floor = 1e-12 * jtj.diagonal().amax().max(1e-300);
            for k in 0..a.nrows() {
                a[(k, k)] += lambda * (jtj[(k, k)] + floor);
            }
            let step = match a.clone().cholesky() {
                Some(chol) => chol.solve(&(-&grad)),
                None => match a.lu().solve(&(-&grad)) {
                    Some(s) => s,
                    None => {
                        lambda *= nu;
                        nu *= 2.0;
                        continue;
                    }
                },
            };
            let trial = &x + &step;
            let r_trial = problem.residuals(&trial);
            let cost_trial = r_trial.norm_squared();

            // Gain ratio of actual to predicted decrease.
            let predicted = (step.transpose()
                * (lambda
                    * step
                        .clone()
                        .component_mul(&jtj.diagonal().add_scalar(floor))
                    - &grad))[0];
            let rho = if predicted.abs() > 0.0 {
                (cost - cost_trial) / predicted
            } else {
                0.0
            };

            if cost_trial < cost {
                let small_step = step.amax() < opts.step_tol * (x.amax() + opts.step_tol);
                x = trial;
                r = r_trial;
                cost = cost_trial;
                lambda *= f64::max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0).powi(3));
                lambda = lambda.max(1e-16);
                nu = 2.0;
                accepted = true;
                if small_step {
                    return LmOutcome {
                        x,
                        max_abs_residual: r.amax(),
                        iterations,
                    };
                }
                break;
            }
            lambda *= nu;
            nu *= 2.0;
            if lambda > 1e16 {
                break;
            }
        }
        if !accepted {
            break;
        }
    }

    LmOutcome {
        x,
        max_abs_residual: r.amax(),
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Himmelblau's function as a two-residual system; all four roots are
    /// exact zeros of the residual.
    struct Himmelblau;

    impl LeastSquares for Himmelblau {
        fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
            DVector::from_vec(vec![x[0] * x[0] + x[1] - 11.0, x[0] + x[1] * x[1] - 7.0])
        }
        fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 2, &[2.0 * x[0], 1.0, 1.0, 2.0 * x[1]])
        }
    }

    #[test]
    fn himmelblau_roots_to_machine_precision() {
        for start in [[1.0, 1.0], [-2.0, 3.0], [-4.0, -4.0], [4.0, -2.0]] {
            let out = minimize(
                &Himmelblau,
                DVector::from_row_slice(&start),
                &LmOptions::default(),
            );
            assert!(out.max_abs_residual < 1e-12, "start {start:?}: {out:?}");
        }
    }

    /// Quadratic-in-pairs structure matching the coupling fit: residuals
    /// r_k = x_i x_j - t_k over all pairs, with a planted solution.
    struct PairProducts {
        targets: Vec<(usize, usize, f64)>,
        n: usize,
    }

    impl LeastSquares for PairProducts {
        fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
            DVector::from_iterator(
                self.targets.len(),
                self.targets.iter().map(|&(i, j, t)| x[i] * x[j] - t),
            )
        }
        fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
            let mut jac = DMatrix::zeros(self.targets.len(), self.n);
            for (row, &(i, j, _)) in self.targets.iter().enumerate() {
                jac[(row, i)] += x[j];
                jac[(row, j)] += x[i];
            }
            jac
        }
    }

    #[test]
    fn planted_pair_products_recovered() {
        let truth = [1.3, -0.4, 2.2, 0.9];
        let mut targets = Vec::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                targets.push((i, j, truth[i] * truth[j]));
            }
        }
        let problem = PairProducts { targets, n: 4 };
        let out = minimize(
            &problem,
            DVector::from_row_slice(&[1.0, 1.0, 1.0, 1.0]),
            &LmOptions::default(),
        );
        assert!(out.max_abs_residual < 1e-12, "{out:?}");
    }
}
