//! Closed-form antiderivatives of the exponential products appearing in the
//! second-order evolution exponent.
//!
//! Everything reduces to three primitives over [0, t]:
//!
//! * `j1(v, t)   = Int e^{ivs} ds`
//! * `jn(n, v, t)= Int s^n e^{ivs} ds`
//! * `kk(va, vb, t) = Int_0^t dt2 e^{i va t2} Int_0^{t2} dt1 e^{i vb t1}`
//!
//! Near-degenerate frequencies switch to series expansions. The branch is
//! taken on the phase advance |v t| < 0.5 rad, where the direct forms start
//! losing digits to cancellation and the series converges in a handful of
//! terms; any sub-hertz frequency at experimental times (sub-second) lands in
//! this branch automatically.

use num_complex::Complex64;

/// Phase advance below which the series branch is taken [rad].
pub const DEGENERATE_PHASE: f64 = 0.5;

#[inline]
fn series_branch(v: f64, t: f64) -> bool {
    (v * t).abs() < DEGENERATE_PHASE
}

/// e^{ix} - 1 without cancellation: (-2 sin^2(x/2), sin x).
#[inline]
fn expm1_i(x: f64) -> Complex64 {
    let half = 0.5 * x;
    Complex64::new(-2.0 * half.sin() * half.sin(), x.sin())
}

/// Int_0^t e^{ivs} ds.
pub fn j1(v: f64, t: f64) -> Complex64 {
    if series_branch(v, t) {
        // t * sum_r (ivt)^r / (r+1)!
        let z = Complex64::new(0.0, v * t);
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for r in 1..=24 {
            term *= z / (r as f64 + 1.0);
            sum += term;
            if term.norm() < 1e-20 * sum.norm() {
                break;
            }
        }
        t * sum
    } else {
        expm1_i(v * t) / Complex64::new(0.0, v)
    }
}

/// Int_0^t s^n e^{ivs} ds.
pub fn jn(n: u32, v: f64, t: f64) -> Complex64 {
    if series_branch(v, t) {
        // t^{n+1} sum_r (ivt)^r / (r! (n+r+1))
        let z = Complex64::new(0.0, v * t);
        let mut pow = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(1.0 / (n as f64 + 1.0), 0.0);
        for r in 1..=30 {
            pow *= z / r as f64;
            let term = pow / (n as f64 + r as f64 + 1.0);
            sum += term;
            if term.norm() < 1e-20 * sum.norm() {
                break;
            }
        }
        t.powi(n as i32 + 1) * sum
    } else if n == 0 {
        j1(v, t)
    } else {
        // Int s^n e^{ivs} = (t^n e^{ivt} - n Int s^{n-1} e^{ivs}) / (iv)
        let e = Complex64::new(0.0, v * t).exp();
        (t.powi(n as i32) * e - n as f64 * jn(n - 1, v, t)) / Complex64::new(0.0, v)
    }
}

/// Nested kernel Int_0^t dt2 e^{i va t2} Int_0^{t2} dt1 e^{i vb t1}.
pub fn kk(va: f64, vb: f64, t: f64) -> Complex64 {
    if series_branch(vb, t) {
        // Inner integral expanded: sum_r (i vb)^r t2^{r+1} / (r+1)!
        let mut coeff = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for r in 0..=24 {
            let term = coeff * jn(r + 1, va, t);
            sum += term;
            coeff *= Complex64::new(0.0, vb) / (r as f64 + 2.0);
            if term.norm() < 1e-20 * sum.norm().max(1e-300) {
                break;
            }
        }
        sum
    } else {
        (j1(va + vb, t) - j1(va, t)) / Complex64::new(0.0, vb)
    }
}

/// One oscillator line `coeff * e^{i freq s}`.
#[derive(Debug, Clone, Copy)]
pub struct Line {
    pub coeff: Complex64,
    pub freq: f64,
}

/// Two-line decomposition of the drive factors:
/// sin-type `sin(mu s) e^{iw s} = (e^{i(mu+w)s} - e^{-i(mu-w)s}) / 2i`,
/// cos-type `cos(mu s) e^{iw s} = (e^{i(mu+w)s} + e^{-i(mu-w)s}) / 2`.
#[derive(Debug, Clone, Copy)]
pub struct TwoLines(pub Line, pub Line);

pub fn sin_lines(mu: f64, w: f64) -> TwoLines {
    let c = Complex64::new(0.0, -0.5); // 1/(2i)
    TwoLines(
        Line {
            coeff: c,
            freq: mu + w,
        },
        Line {
            coeff: -c,
            freq: -(mu - w),
        },
    )
}

pub fn cos_lines(mu: f64, w: f64) -> TwoLines {
    let c = Complex64::new(0.5, 0.0);
    TwoLines(
        Line {
            coeff: c,
            freq: mu + w,
        },
        Line {
            coeff: c,
            freq: -(mu - w),
        },
    )
}

impl TwoLines {
    fn lines(&self) -> [Line; 2] {
        [self.0, self.1]
    }

    /// Int_0^t f(s) ds.
    pub fn integral(&self, t: f64) -> Complex64 {
        self.lines().iter().map(|l| l.coeff * j1(l.freq, t)).sum()
    }
}

/// Int_0^t dt2 Int_0^{t2} dt1 [f(t1) - f(t2)].
pub fn nested_antisym_single(f: &TwoLines, t: f64) -> Complex64 {
    f.lines()
        .iter()
        .map(|l| l.coeff * (kk(0.0, l.freq, t) - jn(1, l.freq, t)))
        .sum()
}

/// Int_0^t dt2 Int_0^{t2} dt1 [g(t2) h(t1) - h(t2) g(t1)].
pub fn nested_antisym_pair(g: &TwoLines, h: &TwoLines, t: f64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for lg in g.lines() {
        for lh in h.lines() {
            sum += lg.coeff * lh.coeff * (kk(lg.freq, lh.freq, t) - kk(lh.freq, lg.freq, t));
        }
    }
    sum
}

/// Int_0^t dt2 Int_0^{t2} dt1 w(mu_a t2) w(mu_b t1) sin(w (t2 - t1)), the
/// same-pair commutator kernel. `sin_type` picks sin vs cos drive envelopes.
pub fn commutator_kernel(mu_a: f64, mu_b: f64, w: f64, sin_type: bool, t: f64) -> Complex64 {
    // w(mu t) decomposed as two bare exponential lines (no mode factor).
    let bare = |mu: f64| -> [Line; 2] {
        if sin_type {
            let c = Complex64::new(0.0, -0.5);
            [
                Line { coeff: c, freq: mu },
                Line {
                    coeff: -c,
                    freq: -mu,
                },
            ]
        } else {
            let c = Complex64::new(0.5, 0.0);
            [
                Line { coeff: c, freq: mu },
                Line {
                    coeff: c,
                    freq: -mu,
                },
            ]
        }
    };
    let a = bare(mu_a);
    let b = bare(mu_b);
    let half_i = Complex64::new(0.0, -0.5); // 1/(2i)
    let mut sum = Complex64::new(0.0, 0.0);
    for la in a {
        for lb in b {
            // sin(w(t2-t1)) = [e^{iw t2}e^{-iw t1} - e^{-iw t2}e^{iw t1}] / 2i
            sum += la.coeff
                * lb.coeff
                * half_i
                * (kk(la.freq + w, lb.freq - w, t) - kk(la.freq - w, lb.freq + w, t));
        }
    }
    sum
}

/// Secular (DC) rate of [`commutator_kernel`]: the kernel tends to
/// `-w t / (2 (mu_a^2 - w^2))` when mu_a = mu_b, and stays bounded otherwise.
pub fn commutator_secular_rate(mu: f64, w: f64) -> f64 {
    -w / (2.0 * (mu * mu - w * w))
}
