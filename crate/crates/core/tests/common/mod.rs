//! Shared test oracles: adaptive numerical quadrature of the evolution-
//! exponent integrands, independent of the closed-form antiderivatives the
//! library uses.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spinforge::magnus::kernels;

/// Adaptive Simpson quadrature over [a, b] for a complex integrand.
pub fn adaptive_simpson<F: Fn(f64) -> Complex64 + Copy>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Complex64 {
    fn simpson(a: f64, fa: Complex64, b: f64, fb: Complex64, fm: Complex64) -> Complex64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> Complex64>(
        f: &F,
        a: f64,
        fa: Complex64,
        b: f64,
        fb: Complex64,
        fm: Complex64,
        whole: Complex64,
        tol: f64,
        depth: u32,
    ) -> Complex64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        // Converged, at the roundoff floor of the local magnitudes, or out
        // of depth.
        let floor =
            1e-15 * (left.norm() + right.norm() + (b - a) * (fa.norm() + fb.norm() + fm.norm()));
        if depth == 0 || delta.norm() < 15.0 * tol || delta.norm() < floor {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return Complex64::new(0.0, 0.0);
    }
    // Pre-split so oscillations cannot alias through the first few levels.
    let n0 = 32;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n0 {
        let x0 = a + (b - a) * k as f64 / n0 as f64;
        let x1 = a + (b - a) * (k + 1) as f64 / n0 as f64;
        let fa = f(x0);
        let fb = f(x1);
        let fm = f(0.5 * (x0 + x1));
        let whole = simpson(x0, fa, x1, fb, fm);
        acc += recurse(&f, x0, fa, x1, fb, fm, whole, tol / n0 as f64, 22);
    }
    acc
}

fn two_lines_eval(lines: &kernels::TwoLines, s: f64) -> Complex64 {
    lines.0.coeff * Complex64::new(0.0, lines.0.freq * s).exp()
        + lines.1.coeff * Complex64::new(0.0, lines.1.freq * s).exp()
}

/// Test-local antiderivative of e^{i v s} over [0, u], written independently
/// of the library kernels. Verified against [`adaptive_simpson`] by the
/// one-dimensional oracle tests; the nested oracles below build on it so the
/// outer integral is the only quadrature layer.
fn exp_antideriv(v: f64, u: f64) -> Complex64 {
    let phase = v * u;
    if phase.abs() < 1e-3 {
        // u (1 + i v u / 2 - (v u)^2 / 6 - i (v u)^3 / 24)
        let z = Complex64::new(0.0, phase);
        u * (Complex64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0)
    } else {
        (Complex64::new(0.0, phase).exp() - 1.0) / Complex64::new(0.0, v)
    }
}

fn two_lines_antideriv(lines: &kernels::TwoLines, u: f64) -> Complex64 {
    lines.0.coeff * exp_antideriv(lines.0.freq, u) + lines.1.coeff * exp_antideriv(lines.1.freq, u)
}

/// Quadrature version of `TwoLines::integral`.
pub fn integral_quad(lines: &kernels::TwoLines, t: f64, tol: f64) -> Complex64 {
    adaptive_simpson(|s| two_lines_eval(lines, s), 0.0, t, tol)
}

/// Quadrature version of `nested_antisym_single`:
/// Int dt2 Int_0^{t2} dt1 [f(t1) - f(t2)], outer integral by quadrature.
pub fn nested_antisym_single_quad(lines: &kernels::TwoLines, t: f64, tol: f64) -> Complex64 {
    adaptive_simpson(
        |t2| two_lines_antideriv(lines, t2) - t2 * two_lines_eval(lines, t2),
        0.0,
        t,
        tol,
    )
}

/// Quadrature version of `nested_antisym_pair`:
/// Int dt2 Int_0^{t2} dt1 [g(t2) h(t1) - h(t2) g(t1)].
pub fn nested_antisym_pair_quad(
    g: &kernels::TwoLines,
    h: &kernels::TwoLines,
    t: f64,
    tol: f64,
) -> Complex64 {
    adaptive_simpson(
        |t2| {
            two_lines_eval(g, t2) * two_lines_antideriv(h, t2)
                - two_lines_eval(h, t2) * two_lines_antideriv(g, t2)
        },
        0.0,
        t,
        tol,
    )
}

/// Quadrature version of `commutator_kernel`:
/// Int dt2 Int_0^{t2} dt1 w(mu_a t2) w(mu_b t1) sin(w (t2 - t1)).
pub fn commutator_kernel_quad(
    mu_a: f64,
    mu_b: f64,
    w: f64,
    sin_type: bool,
    t: f64,
    tol: f64,
) -> Complex64 {
    let envelope = |mu: f64, s: f64| {
        if sin_type {
            (mu * s).sin()
        } else {
            (mu * s).cos()
        }
    };
    // Inner primitives Int w(mu_b t1) cos(w t1) and Int w(mu_b t1) sin(w t1)
    // as sums of exponential antiderivatives.
    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, -0.5); // 1/(2i)
    let wb_coeffs: [(Complex64, f64); 2] = if sin_type {
        [(half_i, mu_b), (-half_i, -mu_b)]
    } else {
        [(half, mu_b), (half, -mu_b)]
    };
    let inner = |trig_plus: bool, u: f64| -> Complex64 {
        // cos(w t1) = (e^{iw} + e^{-iw})/2; sin(w t1) = (e^{iw} - e^{-iw})/2i
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, v) in wb_coeffs {
            if trig_plus {
                acc += c * half * (exp_antideriv(v + w, u) + exp_antideriv(v - w, u));
            } else {
                acc += c * half_i * (exp_antideriv(v + w, u) - exp_antideriv(v - w, u));
            }
        }
        acc
    };
    adaptive_simpson(
        |t2| {
            envelope(mu_a, t2)
                * ((w * t2).sin() * inner(true, t2) - (w * t2).cos() * inner(false, t2))
        },
        0.0,
        t,
        tol,
    )
}

fn rel_err(closed: Complex64, quad: Complex64, scale: f64) -> f64 {
    (closed - quad).norm() / quad.norm().max(scale)
}

/// Run `n` random draws comparing every closed-form kernel against adaptive
/// quadrature; returns the worst relative error. Frequencies and times enter
/// only through their phase products, so unit-scale draws cover the same
/// regimes as the physical designs. A tenth of the draws sit near the
/// degenerate-denominator branch.
pub fn quadrature_draws(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for k in 0..n {
        let t = rng.gen_range(0.3..2.5);
        let w_a = rng.gen_range(1.0..25.0);
        let w_b = rng.gen_range(1.0..25.0);
        let mu_a = if k % 10 == 0 {
            // Near-degenerate: beatnote almost on the mode frequency.
            w_a + rng.gen_range(-1e-4..1e-4)
        } else {
            rng.gen_range(2.0..40.0)
        };
        let mu_b = rng.gen_range(2.0..40.0);
        let sin_type = k % 2 == 0;

        let lines_a = if sin_type {
            kernels::sin_lines(mu_a, w_a)
        } else {
            kernels::cos_lines(mu_a, w_a)
        };
        let lines_b = kernels::sin_lines(mu_b, w_b);
        let qtol = 1e-12;

        let scale = t;
        worst = worst.max(rel_err(
            lines_a.integral(t),
            integral_quad(&lines_a, t, qtol),
            scale,
        ));
        worst = worst.max(rel_err(
            kernels::nested_antisym_single(&lines_a, t),
            nested_antisym_single_quad(&lines_a, t, qtol),
            scale * t,
        ));
        worst = worst.max(rel_err(
            kernels::nested_antisym_pair(&lines_a, &lines_b, t),
            nested_antisym_pair_quad(&lines_a, &lines_b, t, qtol),
            scale * t,
        ));
        worst = worst.max(rel_err(
            kernels::commutator_kernel(mu_a, mu_b, w_a, sin_type, t),
            commutator_kernel_quad(mu_a, mu_b, w_a, sin_type, t, qtol),
            scale * t,
        ));
    }
    worst
}
