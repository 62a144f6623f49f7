//! Second-order evolution-exponent validator.
//!
//! The exponent of the full laser-ion evolution operator, truncated at
//! O(eta^2, eta B), decomposes per spin axis into
//!
//! * first-order phonon-creation coefficients `alpha` (one per ion and mode),
//! * field-commutator corrections that grow with the longitudinal field,
//! * cross-pair two-phonon coefficients `beta` (per ion and mode pair),
//! * the pure field phase `gamma_z`,
//! * same-pair c-number coefficients `chi` whose imaginary parts grow
//!   linearly in time with slope -J/2, defining the effective couplings.
//!
//! Every nested time integral is evaluated in closed form via the kernels in
//! [`kernels`]; independent numerical quadrature of the same integrands is
//! exercised in the test suite. Coefficients are reported in the convention
//! where the exponent is `sum (slot * op - h.c.)` for the phonon slots; the
//! `chi` slots multiply symmetric spin pairs directly, so an unordered pair
//! (i, j) carries `2 chi_ij`.

pub mod kernels;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coupling::{DriveSetup, LaserDrive, PairLabel};
use crate::{Error, Result};
use kernels::{
    commutator_kernel, cos_lines, nested_antisym_pair, nested_antisym_single, sin_lines, TwoLines,
};

/// Drive envelope type per pair: pairs I and III beat as sin, pair II as cos.
fn is_sin(pair: PairLabel) -> bool {
    !matches!(pair, PairLabel::II)
}

fn pair_lines(pair: PairLabel, mu: f64, w: f64) -> TwoLines {
    if is_sin(pair) {
        sin_lines(mu, w)
    } else {
        cos_lines(mu, w)
    }
}

/// All second-order exponent coefficients at one evaluation time.
#[derive(Debug, Clone)]
pub struct MagnusTerms {
    pub evaluation_time: f64,
    /// sigma_x phonon-creation coefficients per (ion, mode): the pair-I
    /// first-order term plus the field-commutator piece.
    pub alpha_x: DMatrix<Complex64>,
    /// sigma_y analogue (pair II plus field piece).
    pub alpha_y: DMatrix<Complex64>,
    /// sigma_z analogue (pair III only).
    pub alpha_z: DMatrix<Complex64>,
    /// Field-commutator pieces alone; zero when bz = 0.
    pub bfield_x: DMatrix<Complex64>,
    pub bfield_y: DMatrix<Complex64>,
    /// Pure field phase slot, i Bz t / 4 per ion.
    pub gamma_z: DVector<Complex64>,
    /// Cross-pair two-phonon coefficients; `beta_x[i][(m, n)]` couples
    /// sigma_x of ion i to modes (m, n) of the two partner branches.
    pub beta_x: Vec<DMatrix<Complex64>>,
    pub beta_y: Vec<DMatrix<Complex64>>,
    pub beta_z: Vec<DMatrix<Complex64>>,
    /// Same-pair c-number coefficients (symmetric, zero diagonal).
    pub chi_x: DMatrix<Complex64>,
    pub chi_y: DMatrix<Complex64>,
    pub chi_z: DMatrix<Complex64>,
}

fn first_order(
    drive: &LaserDrive,
    eta: &DMatrix<f64>,
    modes: &[f64],
    prefactor: Complex64,
    t: f64,
) -> DMatrix<Complex64> {
    let n = drive.n_ions();
    let amps = drive.effective_amplitudes();
    let mut out = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (m, &w) in modes.iter().enumerate() {
        let mut integrals = Vec::with_capacity(drive.n_beatnotes());
        for &mu in &drive.beatnotes {
            integrals.push(pair_lines(drive.pair, mu, w).integral(t));
        }
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, integral) in integrals.iter().enumerate() {
                let a = amps[(k, i)];
                if a != 0.0 {
                    acc += a * integral;
                }
            }
            out[(m, i)] = prefactor * eta[(m, i)] * 0.5 * acc;
        }
    }
    // Stored ion-major like the couplings: transpose to (ion, mode).
    out.transpose()
}

fn bfield_correction(
    drive: &LaserDrive,
    eta: &DMatrix<f64>,
    modes: &[f64],
    bz: &DVector<f64>,
    prefactor: Complex64,
    t: f64,
) -> DMatrix<Complex64> {
    let n = drive.n_ions();
    let amps = drive.effective_amplitudes();
    let mut out = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    if bz.iter().all(|&b| b == 0.0) {
        return out;
    }
    for (m, &w) in modes.iter().enumerate() {
        let mut nested = Vec::with_capacity(drive.n_beatnotes());
        for &mu in &drive.beatnotes {
            nested.push(nested_antisym_single(&pair_lines(drive.pair, mu, w), t));
        }
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, value) in nested.iter().enumerate() {
                let a = amps[(k, i)];
                if a != 0.0 {
                    acc += a * value;
                }
            }
            out[(i, m)] = prefactor * bz[i] * eta[(m, i)] * 0.25 * acc;
        }
    }
    out
}

fn cross_pair(
    drive_a: &LaserDrive,
    eta_a: &DMatrix<f64>,
    modes_a: &[f64],
    drive_b: &LaserDrive,
    eta_b: &DMatrix<f64>,
    modes_b: &[f64],
    prefactor: Complex64,
    t: f64,
) -> Vec<DMatrix<Complex64>> {
    let n = drive_a.n_ions();
    let wa = drive_a.effective_amplitudes();
    let wb = drive_b.effective_amplitudes();
    let na = modes_a.len();
    let nb = modes_b.len();

    // Nested antisymmetric integrals per (tone_a, mode_a, tone_b, mode_b).
    let mut table =
        vec![Complex64::new(0.0, 0.0); drive_a.n_beatnotes() * na * drive_b.n_beatnotes() * nb];
    let idx = |ka: usize, m: usize, kb: usize, nn: usize| {
        ((ka * na + m) * drive_b.n_beatnotes() + kb) * nb + nn
    };
    for (ka, &mua) in drive_a.beatnotes.iter().enumerate() {
        for (m, &wm) in modes_a.iter().enumerate() {
            let ga = pair_lines(drive_a.pair, mua, wm);
            for (kb, &mub) in drive_b.beatnotes.iter().enumerate() {
                for (nn, &wn) in modes_b.iter().enumerate() {
                    let gb = pair_lines(drive_b.pair, mub, wn);
                    table[idx(ka, m, kb, nn)] = nested_antisym_pair(&ga, &gb, t);
                }
            }
        }
    }

    (0..n)
        .map(|i| {
            DMatrix::from_fn(na, nb, |m, nn| {
                let mut acc = Complex64::new(0.0, 0.0);
                for ka in 0..drive_a.n_beatnotes() {
                    let aa = wa[(ka, i)];
                    if aa == 0.0 {
                        continue;
                    }
                    for kb in 0..drive_b.n_beatnotes() {
                        let ab = wb[(kb, i)];
                        if ab != 0.0 {
                            acc += aa * ab * table[idx(ka, m, kb, nn)];
                        }
                    }
                }
                prefactor * eta_a[(m, i)] * eta_b[(nn, i)] * 0.25 * acc
            })
        })
        .collect()
}

fn same_pair_chi(
    drive: &LaserDrive,
    eta: &DMatrix<f64>,
    modes: &[f64],
    t: f64,
) -> DMatrix<Complex64> {
    let n = drive.n_ions();
    let amps = drive.effective_amplitudes();
    let tones = drive.n_beatnotes();
    let sin_type = is_sin(drive.pair);

    // Kernel per (tone_a, tone_b, mode).
    let mut table = vec![Complex64::new(0.0, 0.0); tones * tones * modes.len()];
    for ka in 0..tones {
        for kb in 0..tones {
            for (m, &w) in modes.iter().enumerate() {
                table[(ka * tones + kb) * modes.len() + m] =
                    commutator_kernel(drive.beatnotes[ka], drive.beatnotes[kb], w, sin_type, t);
            }
        }
    }

    let mut chi = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    let half_i = Complex64::new(0.0, 0.5); // i/2
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for ka in 0..tones {
                for kb in 0..tones {
                    // Symmetrized amplitude weight keeps chi_ij = chi_ji exact.
                    let weight = amps[(ka, i)] * amps[(kb, j)] + amps[(ka, j)] * amps[(kb, i)];
                    if weight == 0.0 {
                        continue;
                    }
                    let mut mode_sum = Complex64::new(0.0, 0.0);
                    for (m, _) in modes.iter().enumerate() {
                        mode_sum +=
                            eta[(m, i)] * eta[(m, j)] * table[(ka * tones + kb) * modes.len() + m];
                    }
                    acc += weight * mode_sum;
                }
            }
            let value = half_i * acc;
            chi[(i, j)] = value;
            chi[(j, i)] = value;
        }
    }
    chi
}

/// Evaluate every exponent coefficient at time `t` for the three drives and
/// longitudinal field (all in rad/s).
pub fn magnus_terms(
    setup: &DriveSetup,
    drives: [&LaserDrive; 3],
    bz: &DVector<f64>,
    t: f64,
) -> Result<MagnusTerms> {
    if t < 0.0 {
        return Err(Error::InvalidModel(
            "evaluation time must be nonnegative".into(),
        ));
    }
    let [d1, d2, d3] = drives;
    for (d, expect) in drives
        .iter()
        .zip([PairLabel::I, PairLabel::II, PairLabel::III])
    {
        if d.pair != expect {
            return Err(Error::BranchMismatch(format!(
                "drives must be passed in pair order I, II, III; found {}",
                d.pair.as_str()
            )));
        }
    }
    let n = setup.n_ions();
    if bz.len() != n {
        return Err(Error::InvalidModel(format!(
            "bz has {} entries for {} ions",
            bz.len(),
            n
        )));
    }
    let wt: Vec<f64> = setup.transverse.frequencies.clone();
    let wa: Vec<f64> = setup.axial.frequencies.clone();
    let eta1 = &setup.eta[0].values;
    let eta2 = &setup.eta[1].values;
    let eta3 = &setup.eta[2].values;

    let one = Complex64::new(1.0, 0.0);
    let i_unit = Complex64::new(0.0, 1.0);

    // First-order drive terms.
    let direct_x = first_order(d1, eta1, &wt, one, t);
    let direct_y = first_order(d2, eta2, &wa, i_unit, t);
    let alpha_z = first_order(d3, eta3, &wt, one, t);

    // Field-commutator corrections: [H_B, H_II] feeds sigma_x on the axial
    // modes, [H_B, H_I] feeds sigma_y on the transverse modes.
    let bfield_x = bfield_correction(d2, eta2, &wa, bz, i_unit, t);
    let bfield_y = bfield_correction(d1, eta1, &wt, bz, -one, t);

    let alpha_x = &direct_x + &bfield_x;
    let alpha_y = &direct_y + &bfield_y;

    let gamma_z = DVector::from_fn(n, |i, _| Complex64::new(0.0, 0.25 * bz[i] * t));

    // Cross-pair two-phonon terms; the sigma_y one carries -i/4, the other
    // two -1/4 (the quarter lives in `cross_pair`).
    let beta_x = cross_pair(d2, eta2, &wa, d3, eta3, &wt, -one, t);
    let beta_y = cross_pair(d1, eta1, &wt, d3, eta3, &wt, -i_unit, t);
    let beta_z = cross_pair(d1, eta1, &wt, d2, eta2, &wa, -one, t);

    let chi_x = same_pair_chi(d1, eta1, &wt, t);
    let chi_y = same_pair_chi(d2, eta2, &wa, t);
    let chi_z = same_pair_chi(d3, eta3, &wt, t);

    Ok(MagnusTerms {
        evaluation_time: t,
        alpha_x,
        alpha_y,
        alpha_z,
        bfield_x,
        bfield_y,
        gamma_z,
        beta_x,
        beta_y,
        beta_z,
        chi_x,
        chi_y,
        chi_z,
    })
}

/// Linear-slope extraction of couplings from a chi series.
#[derive(Debug, Clone)]
pub struct SlopeFit {
    /// Couplings from J_ij = -2 d Im(chi_ij)/dt [rad/s].
    pub j: DMatrix<f64>,
    /// Largest rms deviation of Im(chi) from the fitted line, relative to the
    /// fitted span; measures the oscillatory contamination.
    pub max_relative_residual: f64,
    /// False when the window is shorter than ten beat periods of the
    /// smallest detuning (fit likely biased).
    pub window_ok: bool,
}

/// Least-squares slope of Im(chi_ij) over the time grid. `min_detuning`
/// (rad/s), when supplied, sets the window-adequacy flag.
pub fn extract_j_from_chi(
    times: &[f64],
    chis: &[DMatrix<Complex64>],
    min_detuning: Option<f64>,
) -> Result<SlopeFit> {
    if times.len() < 3 || times.len() != chis.len() {
        return Err(Error::InvalidModel(
            "slope extraction needs matching time and sample lists (>= 3 points)".into(),
        ));
    }
    let n = chis[0].nrows();
    let len = times.len() as f64;
    let t_mean = times.iter().sum::<f64>() / len;
    let t_var: f64 = times.iter().map(|&t| (t - t_mean) * (t - t_mean)).sum();
    if t_var == 0.0 {
        return Err(Error::InvalidModel(
            "slope extraction needs a spread of times".into(),
        ));
    }

    let mut j = DMatrix::zeros(n, n);
    let mut max_rel = 0.0_f64;
    for a in 0..n {
        for b in (a + 1)..n {
            let ys: Vec<f64> = chis.iter().map(|c| c[(a, b)].im).collect();
            let y_mean = ys.iter().sum::<f64>() / len;
            let cov: f64 = times
                .iter()
                .zip(&ys)
                .map(|(&t, &y)| (t - t_mean) * (y - y_mean))
                .sum();
            let slope = cov / t_var;
            let intercept = y_mean - slope * t_mean;
            let rms = (times
                .iter()
                .zip(&ys)
                .map(|(&t, &y)| {
                    let r = y - slope * t - intercept;
                    r * r
                })
                .sum::<f64>()
                / len)
                .sqrt();
            let span = slope.abs() * (times[times.len() - 1] - times[0]);
            if span > 0.0 {
                max_rel = max_rel.max(rms / span);
            }
            j[(a, b)] = -2.0 * slope;
            j[(b, a)] = -2.0 * slope;
        }
    }

    let window = times[times.len() - 1] - times[0];
    let window_ok = match min_detuning {
        Some(d) if d > 0.0 => window >= 10.0 / d,
        _ => true,
    };
    Ok(SlopeFit {
        j,
        max_relative_residual: max_rel,
        window_ok,
    })
}

/// One labeled time series of the contribution report.
#[derive(Debug, Clone)]
pub struct PanelSeries {
    /// Panel letter a..i.
    pub panel: char,
    /// Series label, e.g. "chi_x i=1 j=2" (indices 1-based).
    pub label: String,
    pub values: Vec<Complex64>,
}

/// Exponent contributions on the motional ground state, organized into the
/// nine standard panels:
///
/// (a) first-order drive terms; (b)-(d) same-pair commutators for the x, y, z
/// axes whose imaginary parts grow linearly; (e)-(g) cross-pair two-phonon
/// terms; (h) field-commutator terms (the dominant unbounded error when
/// bz != 0); (i) the pure field phase.
#[derive(Debug, Clone)]
pub struct ContributionReport {
    pub times: Vec<f64>,
    pub series: Vec<PanelSeries>,
}

pub fn contribution_report(
    setup: &DriveSetup,
    drives: [&LaserDrive; 3],
    bz: &DVector<f64>,
    times: &[f64],
) -> Result<ContributionReport> {
    let n = setup.n_ions();
    let snapshots: Vec<MagnusTerms> = times
        .iter()
        .map(|&t| magnus_terms(setup, drives, bz, t))
        .collect::<Result<_>>()?;

    let mut series: Vec<PanelSeries> = Vec::new();
    let mut push = |panel: char, label: String, values: Vec<Complex64>| {
        series.push(PanelSeries {
            panel,
            label,
            values,
        });
    };

    for i in 0..n {
        for m in 0..n {
            for (name, pick) in [("alpha_x", 0usize), ("alpha_y", 1), ("alpha_z", 2)] {
                let values: Vec<Complex64> = snapshots
                    .iter()
                    .map(|s| match pick {
                        0 => s.alpha_x[(i, m)] - s.bfield_x[(i, m)],
                        1 => s.alpha_y[(i, m)] - s.bfield_y[(i, m)],
                        _ => s.alpha_z[(i, m)],
                    })
                    .collect();
                push('a', format!("{name} i={} m={}", i + 1, m + 1), values);
            }
        }
    }

    for (panel, field) in [('b', 0usize), ('c', 1), ('d', 2)] {
        let name = ["chi_x", "chi_y", "chi_z"][field];
        for i in 0..n {
            for j in (i + 1)..n {
                let values = snapshots
                    .iter()
                    .map(|s| match field {
                        0 => s.chi_x[(i, j)],
                        1 => s.chi_y[(i, j)],
                        _ => s.chi_z[(i, j)],
                    })
                    .collect();
                push(panel, format!("{name} i={} j={}", i + 1, j + 1), values);
            }
        }
    }

    for (panel, field) in [('e', 2usize), ('f', 1), ('g', 0)] {
        let name = ["beta_x", "beta_y", "beta_z"][2 - field];
        for i in 0..n {
            for m in 0..n {
                for nn in 0..n {
                    let values: Vec<Complex64> = snapshots
                        .iter()
                        .map(|s| match field {
                            2 => s.beta_z[i][(m, nn)],
                            1 => s.beta_y[i][(m, nn)],
                            _ => s.beta_x[i][(m, nn)],
                        })
                        .collect();
                    if values.iter().all(|v| v.norm() == 0.0) {
                        continue;
                    }
                    push(
                        panel,
                        format!("{name} i={} m={} n={}", i + 1, m + 1, nn + 1),
                        values,
                    );
                }
            }
        }
    }

    for i in 0..n {
        for m in 0..n {
            let vx: Vec<Complex64> = snapshots.iter().map(|s| s.bfield_x[(i, m)]).collect();
            if vx.iter().any(|v| v.norm() > 0.0) {
                push('h', format!("bfield_x i={} m={}", i + 1, m + 1), vx);
            }
            let vy: Vec<Complex64> = snapshots.iter().map(|s| s.bfield_y[(i, m)]).collect();
            if vy.iter().any(|v| v.norm() > 0.0) {
                push('h', format!("bfield_y i={} m={}", i + 1, m + 1), vy);
            }
        }
    }

    for i in 0..n {
        let values: Vec<Complex64> = snapshots.iter().map(|s| s.gamma_z[i]).collect();
        push('i', format!("gamma_z i={}", i + 1), values);
    }

    Ok(ContributionReport {
        times: times.to_vec(),
        series,
    })
}

/// First-order exponent amplitude bound: max |alpha| (field corrections
/// included) over a seeded random sample of times.
#[derive(Debug, Clone)]
pub struct FirstOrderBound {
    pub max_abs: f64,
    pub limit: f64,
    pub seed: u64,
    pub times: Vec<f64>,
}

impl FirstOrderBound {
    pub fn ok(&self) -> bool {
        self.max_abs <= self.limit
    }
}

/// Default cap on first-order exponent amplitudes.
pub const FIRST_ORDER_LIMIT: f64 = 0.5;
/// Default number of random sample times.
pub const FIRST_ORDER_SAMPLES: usize = 32;

/// Sample the first-order amplitudes at `n_times` random times in
/// (0, max_time] and compare against `FIRST_ORDER_LIMIT`.
pub fn first_order_bound(
    setup: &DriveSetup,
    drives: [&LaserDrive; 3],
    bz: &DVector<f64>,
    max_time: f64,
    n_times: usize,
    seed: u64,
) -> Result<FirstOrderBound> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<f64> = (0..n_times.max(1))
        .map(|_| rng.gen_range(0.0..1.0) * max_time)
        .collect();
    let mut max_abs = 0.0_f64;
    for &t in &times {
        let terms = magnus_terms(setup, drives, bz, t)?;
        for v in terms
            .alpha_x
            .iter()
            .chain(terms.alpha_y.iter())
            .chain(terms.alpha_z.iter())
        {
            max_abs = max_abs.max(v.norm());
        }
    }
    Ok(FirstOrderBound {
        max_abs,
        limit: FIRST_ORDER_LIMIT,
        seed,
        times,
    })
}
