//! Inverse problem: beatnote schedules and per-ion Rabi amplitudes that
//! realize a requested coupling matrix, plus the validity-condition checker.

mod trust_region;

pub use trust_region::{LeastSquares, LmOptions, LmOutcome};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coupling::{
    self, coupling_matrix, DriveSetup, LaserDrive, PairLabel, RESONANCE_TOLERANCE,
};
use crate::ion_chain::{Branch, NormalModeSet};
use crate::units;
use crate::{Error, Result};

/// Beatnote comb anchored to the mode spectrum: one tone per adjacent mode
/// pair, offset by the fraction `f_s` of the local mode spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningSchedule {
    pub f_s: f64,
    pub branch: Branch,
    /// N-1 beatnotes [rad/s].
    pub beatnotes: Vec<f64>,
}

/// Beatnotes `mu_k = w_k + f_s (w_k - w_{k+1})` on the transverse branch; on
/// the axial branch the comb anchors from the low-frequency (center-of-mass)
/// end instead, `mu_j = w_j + f_s (w_{j-1} - w_j)` for j = N..2.
pub fn detuning_schedule(modes: &NormalModeSet, f_s: f64) -> Result<DetuningSchedule> {
    let n = modes.frequencies.len();
    if n < 2 {
        return Err(Error::InvalidModel(
            "detuning schedule needs at least two modes".into(),
        ));
    }
    let w = &modes.frequencies;
    let beatnotes: Vec<f64> = match modes.branch {
        Branch::Transverse => (0..n - 1).map(|k| w[k] + f_s * (w[k] - w[k + 1])).collect(),
        Branch::Axial => {
            // Reversed indexing, starting beside the COM mode at index N-1.
            (1..n)
                .rev()
                .map(|j| w[j] + f_s * (w[j - 1] - w[j]))
                .collect()
        }
    };
    for &mu in &beatnotes {
        for (m, &wm) in w.iter().enumerate() {
            if (mu - wm).abs() < RESONANCE_TOLERANCE {
                return Err(Error::ResonantBeatnote {
                    beatnote_hz: units::angular_to_hz(mu),
                    mode: m + 1,
                    mode_hz: units::angular_to_hz(wm),
                    tolerance_hz: units::angular_to_hz(RESONANCE_TOLERANCE),
                });
            }
        }
    }
    Ok(DetuningSchedule {
        f_s,
        branch: modes.branch,
        beatnotes,
    })
}

/// Constraint outcome attached to a [`FitReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintFlags {
    /// Per-ion Rabi budget satisfied (always true when no budget applies).
    pub budget_ok: bool,
    /// The budget that was enforced [rad/s], if any.
    pub budget_limit: Option<f64>,
}

/// Result record of a calibration or fit. The residual matrix is recomputed
/// from the returned drive through the forward map, never taken from
/// optimizer internals.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// J_achieved - J_target [rad/s].
    pub residual: DMatrix<f64>,
    /// Couplings of the returned drive [rad/s].
    pub achieved: DMatrix<f64>,
    pub max_abs_residual: f64,
    /// Sum of Rabi magnitudes at each ion [rad/s].
    pub rabi_budget_per_ion: Vec<f64>,
    pub flags: ConstraintFlags,
    pub iterations: usize,
    /// Base seed of the multistart draw (0 for deterministic procedures).
    pub seed: u64,
    /// Restart that produced the winning drive.
    pub restart_index: usize,
}

impl FitReport {
    fn from_drive(
        drive: &LaserDrive,
        modes: &NormalModeSet,
        recoil: f64,
        target: &DMatrix<f64>,
        flags: ConstraintFlags,
        iterations: usize,
        seed: u64,
        restart_index: usize,
    ) -> Result<Self> {
        let achieved = coupling_matrix(drive, modes, recoil)?;
        let residual = &achieved - target;
        let max_abs_residual = residual.amax();
        let rabi_budget_per_ion = (0..drive.n_ions())
            .map(|i| drive.rabi.column(i).iter().map(|w| w.abs()).sum())
            .collect();
        Ok(Self {
            residual,
            achieved,
            max_abs_residual,
            rabi_budget_per_ion,
            flags,
            iterations,
            seed,
            restart_index,
        })
    }

    /// Largest beyond-nearest-neighbor coupling relative to the largest
    /// nearest-neighbor one.
    pub fn contamination(&self) -> f64 {
        let n = self.achieved.nrows();
        let mut nn: f64 = 0.0;
        let mut far: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                if j == i + 1 {
                    nn = nn.max(self.achieved[(i, j)].abs());
                } else {
                    far = far.max(self.achieved[(i, j)].abs());
                }
            }
        }
        if nn == 0.0 {
            return 0.0;
        }
        far / nn
    }

    /// Largest relative spread among nearest-neighbor couplings.
    pub fn nearest_neighbor_spread(&self) -> f64 {
        let n = self.achieved.nrows();
        let bonds: Vec<f64> = (0..n - 1).map(|i| self.achieved[(i, i + 1)]).collect();
        let max = bonds.iter().cloned().fold(f64::MIN, f64::max);
        let min = bonds.iter().cloned().fold(f64::MAX, f64::min);
        if max == 0.0 {
            return 0.0;
        }
        (max - min).abs() / max.abs()
    }
}

const CALIBRATION_MAX_SWEEPS: usize = 200;

/// Single-beatnote calibration: per-ion amplitudes making every
/// nearest-neighbor coupling exactly `jnn_target`, at the cost of small
/// residual couplings beyond nearest neighbors.
///
/// Fixed-point iteration: a bond-exact multiplicative sweep sets each
/// amplitude from its left neighbor, then the free overall profile parameter
/// is rebalanced toward the most uniform amplitude vector; the pair converges
/// in a few sweeps. Coupling signs are absorbed into per-tone phase flips.
pub fn calibrate_single_detuning(
    jnn_target: f64,
    modes: &NormalModeSet,
    recoil: f64,
    mu: f64,
    pair: PairLabel,
) -> Result<(LaserDrive, FitReport)> {
    let n = modes.n_ions();
    if n < 2 {
        return Err(Error::InvalidModel(
            "calibration needs at least two ions".into(),
        ));
    }
    if jnn_target == 0.0 {
        return Err(Error::InvalidModel(
            "nearest-neighbor target must be nonzero".into(),
        ));
    }
    let kernel = recoil * coupling::mode_kernel(modes, mu);
    for i in 0..n - 1 {
        if kernel[(i, i + 1)] == 0.0 {
            return Err(Error::CalibrationDiverged {
                iterations: 0,
                spread: f64::INFINITY,
            });
        }
    }

    let mut w = DVector::from_element(n, (jnn_target / kernel[(0, 1)]).abs().sqrt());
    let mut iterations = 0;
    let mut converged = false;
    while iterations < CALIBRATION_MAX_SWEEPS {
        iterations += 1;
        for i in 0..n - 1 {
            w[i + 1] = jnn_target / (kernel[(i, i + 1)] * w[i]);
        }
        // Shift the free log-profile parameter toward the most uniform
        // amplitude vector; the parity pattern keeps every bond exact.
        let gamma = -(0..n)
            .map(|i| {
                if i % 2 == 0 {
                    w[i].abs().ln()
                } else {
                    -w[i].abs().ln()
                }
            })
            .sum::<f64>()
            / n as f64;
        if gamma.abs() < 1e-14 {
            converged = true;
            break;
        }
        w[0] *= gamma.exp();
    }
    if !converged {
        let spread = (0..n - 1)
            .map(|i| (w[i] * w[i + 1] * kernel[(i, i + 1)] - jnn_target).abs())
            .fold(0.0, f64::max);
        return Err(Error::CalibrationDiverged { iterations, spread });
    }

    let signed = DMatrix::from_fn(1, n, |_, i| w[i]);
    let drive = LaserDrive::from_signed(pair, vec![mu], signed)?;

    let mut target = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        target[(i, i + 1)] = jnn_target;
        target[(i + 1, i)] = jnn_target;
    }
    let flags = ConstraintFlags {
        budget_ok: true,
        budget_limit: None,
    };
    let report = FitReport::from_drive(&drive, modes, recoil, &target, flags, iterations, 0, 0)?;
    Ok((drive, report))
}

/// Multistart settings of [`fit_multifrequency`].
#[derive(Debug, Clone, Copy)]
pub struct FitConstraints {
    /// Per-ion sum of Rabi magnitudes [rad/s].
    pub budget: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitConstraints {
    fn default() -> Self {
        Self {
            budget: units::hz_to_angular(2.0e6),
            restarts: 16,
            seed: 1,
        }
    }
}

struct CouplingFit<'a> {
    /// Recoil-scaled mode kernels, one per beatnote.
    kernels: &'a [DMatrix<f64>],
    target: &'a DMatrix<f64>,
    pairs: &'a [(usize, usize)],
    n_ions: usize,
}

impl CouplingFit<'_> {
    fn amplitude(&self, x: &DVector<f64>, tone: usize, ion: usize) -> f64 {
        x[tone * self.n_ions + ion]
    }
}

impl LeastSquares for CouplingFit<'_> {
    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.pairs.len(),
            self.pairs.iter().map(|&(i, j)| {
                let mut jij = 0.0;
                for (k, g) in self.kernels.iter().enumerate() {
                    jij += self.amplitude(x, k, i) * self.amplitude(x, k, j) * g[(i, j)];
                }
                jij - self.target[(i, j)]
            }),
        )
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.pairs.len(), x.len());
        for (row, &(i, j)) in self.pairs.iter().enumerate() {
            for (k, g) in self.kernels.iter().enumerate() {
                jac[(row, k * self.n_ions + i)] = g[(i, j)] * self.amplitude(x, k, j);
                jac[(row, k * self.n_ions + j)] = g[(i, j)] * self.amplitude(x, k, i);
            }
        }
        jac
    }
}

/// Fit per-ion, per-beatnote amplitudes so the engineered couplings match
/// `target` (upper triangle), under the per-ion Rabi budget.
///
/// The target is normalized internally, so scaling the target by s^2 scales
/// the fitted amplitudes by s. Restarts draw nonnegative random initial
/// amplitudes from a seeded generator; the best feasible result wins, with
/// ties broken by restart order.
pub fn fit_multifrequency(
    target: &DMatrix<f64>,
    modes: &NormalModeSet,
    recoil: f64,
    schedule: &DetuningSchedule,
    constraints: &FitConstraints,
    pair: PairLabel,
) -> Result<(LaserDrive, FitReport)> {
    let n = modes.n_ions();
    if target.nrows() != n || target.ncols() != n {
        return Err(Error::InvalidModel(format!(
            "target matrix is {}x{} for {} ions",
            target.nrows(),
            target.ncols(),
            n
        )));
    }
    if schedule.branch != modes.branch {
        return Err(Error::BranchMismatch(format!(
            "schedule was built on the {} branch, modes are {}",
            schedule.branch.as_str(),
            modes.branch.as_str()
        )));
    }
    let scale = target.amax();
    if scale == 0.0 {
        let drive = LaserDrive::new(
            pair,
            schedule.beatnotes.clone(),
            DMatrix::zeros(schedule.beatnotes.len(), n),
        )?;
        let flags = ConstraintFlags {
            budget_ok: true,
            budget_limit: Some(constraints.budget),
        };
        let report =
            FitReport::from_drive(&drive, modes, recoil, target, flags, 0, constraints.seed, 0)?;
        return Ok((drive, report));
    }

    let normalized = target / scale;
    let kernels: Vec<DMatrix<f64>> = schedule
        .beatnotes
        .iter()
        .map(|&mu| recoil * coupling::mode_kernel(modes, mu))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let problem = CouplingFit {
        kernels: &kernels,
        target: &normalized,
        pairs: &pairs,
        n_ions: n,
    };

    // Amplitude scale where a unit-normalized coupling needs O(1) products.
    let g_max = kernels.iter().map(|g| g.amax()).fold(0.0, f64::max);
    if g_max == 0.0 {
        return Err(Error::InvalidModel("all mode kernels vanish".into()));
    }
    let w0 = (1.0 / g_max).sqrt();
    let budget_normalized = constraints.budget / scale.sqrt();

    let opts = LmOptions::default();
    let mut best: Option<(f64, usize, LmOutcome)> = None;
    for restart in 0..constraints.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(
            constraints
                .seed
                .wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        let x0 = DVector::from_fn(schedule.beatnotes.len() * n, |_, _| {
            w0 * rng.gen_range(0.2..1.2)
        });
        let outcome = trust_region::minimize(&problem, x0, &opts);

        let feasible = (0..n).all(|i| {
            let sum: f64 = (0..schedule.beatnotes.len())
                .map(|k| outcome.x[k * n + i].abs())
                .sum();
            sum <= budget_normalized * (1.0 + 1e-12)
        });
        let score = if feasible {
            outcome.max_abs_residual
        } else {
            f64::INFINITY
        };
        let better = match &best {
            None => true,
            Some((best_score, _, _)) => score < *best_score,
        };
        if better {
            best = Some((score, restart, outcome));
        }
    }

    let (score, restart_index, outcome) = best.unwrap();
    if !score.is_finite() {
        let best_residual = outcome.max_abs_residual * scale;
        return Err(Error::Infeasible {
            restarts: constraints.restarts,
            best_residual,
        });
    }

    let root = scale.sqrt();
    let signed = DMatrix::from_fn(schedule.beatnotes.len(), n, |k, i| {
        outcome.x[k * n + i] * root
    });
    let drive = LaserDrive::from_signed(pair, schedule.beatnotes.clone(), signed)?;
    let budget_ok = drive.max_ion_budget() <= constraints.budget * (1.0 + 1e-12);
    let flags = ConstraintFlags {
        budget_ok,
        budget_limit: Some(constraints.budget),
    };
    let report = FitReport::from_drive(
        &drive,
        modes,
        recoil,
        target,
        flags,
        outcome.iterations,
        constraints.seed,
        restart_index,
    )?;
    Ok((drive, report))
}

/// Documented thresholds of the validity-condition report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintThresholds {
    /// Max |eta Omega / (mu - w)|: spin-phonon entanglement stays perturbative.
    pub spin_phonon_max: f64,
    /// Max |eta^(2p-2) (mu - w) / (mu - p w)| for p = 2, 3.
    pub sideband_max: f64,
    /// Min |mu| / max |Omega|: beatnotes stay far from the carrier.
    pub carrier_margin_min: f64,
    /// Max |Bz| / min |eta Omega| over the spin-flip pairs.
    pub bz_ratio_max: f64,
}

impl Default for ConstraintThresholds {
    fn default() -> Self {
        Self {
            spin_phonon_max: 0.5,
            sideband_max: 0.05,
            // Keeps the off-resonant carrier excitation amplitude Omega/mu
            // below 1/2 even for the power-hungry axial drive.
            carrier_margin_min: 2.0,
            bz_ratio_max: 0.5,
        }
    }
}

/// Worst-case validity ratios of one drive.
#[derive(Debug, Clone)]
pub struct DriveConstraintSummary {
    pub pair: PairLabel,
    pub worst_spin_phonon: f64,
    pub worst_sideband_p2: f64,
    pub worst_sideband_p3: f64,
    /// min |mu| / max |Omega|; infinite for a silent drive.
    pub carrier_margin: f64,
}

/// Report of every validity condition; report-only, the caller decides how to
/// treat violations.
#[derive(Debug, Clone)]
pub struct ConstraintReport {
    pub drives: Vec<DriveConstraintSummary>,
    /// max |Bz| / min |eta Omega| over pairs I and II.
    pub bz_ratio: f64,
    pub thresholds: ConstraintThresholds,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        let t = &self.thresholds;
        self.bz_ratio <= t.bz_ratio_max
            && self.drives.iter().all(|d| {
                d.worst_spin_phonon <= t.spin_phonon_max
                    && d.worst_sideband_p2 <= t.sideband_max
                    && d.worst_sideband_p3 <= t.sideband_max
                    && d.carrier_margin >= t.carrier_margin_min
            })
    }

    pub fn worst_sideband(&self) -> f64 {
        self.drives
            .iter()
            .map(|d| d.worst_sideband_p2.max(d.worst_sideband_p3))
            .fold(0.0, f64::max)
    }
}

/// Evaluate the validity ratios of a set of drives against the chain setup.
pub fn check_constraints(
    setup: &DriveSetup,
    drives: &[&LaserDrive],
    bz: &DVector<f64>,
    thresholds: ConstraintThresholds,
) -> ConstraintReport {
    let n_ions = setup.n_ions();
    let mut summaries = Vec::with_capacity(drives.len());
    // Dominant |eta Omega| per ion on each spin-flip pair; the field must be
    // small against the coupling that actually drives each ion.
    let mut flip_strength = vec![[0.0_f64; 2]; n_ions];

    for drive in drives {
        let modes = setup.modes(drive.pair);
        let eta = &setup.eta_for(drive.pair).values;
        let amps = drive.effective_amplitudes();
        let n = drive.n_ions();

        let mut spin_phonon = 0.0_f64;
        let mut p2 = 0.0_f64;
        let mut p3 = 0.0_f64;
        let mut carrier: f64 = f64::INFINITY;
        for (k, &mu) in drive.beatnotes.iter().enumerate() {
            let max_amp = (0..n).map(|i| amps[(k, i)].abs()).fold(0.0, f64::max);
            if max_amp == 0.0 {
                continue;
            }
            carrier = carrier.min(mu.abs() / max_amp);
            for (m, &w) in modes.frequencies.iter().enumerate() {
                let delta = mu - w;
                for i in 0..n {
                    let eo = (eta[(m, i)] * amps[(k, i)]).abs();
                    if eo > 0.0 {
                        spin_phonon = spin_phonon.max(eo / delta.abs());
                        match drive.pair {
                            PairLabel::I => flip_strength[i][0] = flip_strength[i][0].max(eo),
                            PairLabel::II => flip_strength[i][1] = flip_strength[i][1].max(eo),
                            PairLabel::III => {}
                        }
                    }
                }
                let eta_max = (0..n).map(|i| eta[(m, i)].abs()).fold(0.0, f64::max);
                let r2 = eta_max.powi(2) * delta.abs() / (mu - 2.0 * w).abs();
                let r3 = eta_max.powi(4) * delta.abs() / (mu - 3.0 * w).abs();
                p2 = p2.max(r2);
                p3 = p3.max(r3);
            }
        }
        summaries.push(DriveConstraintSummary {
            pair: drive.pair,
            worst_spin_phonon: spin_phonon,
            worst_sideband_p2: p2,
            worst_sideband_p3: p3,
            carrier_margin: carrier,
        });
    }

    // A silent spin-flip pair commutes with the field and adds no error, so
    // only active pairs enter the comparison.
    let mut bz_ratio = 0.0_f64;
    for i in 0..n_ions.min(bz.len()) {
        let b = bz[i].abs();
        if b == 0.0 {
            continue;
        }
        let active = flip_strength[i].iter().copied().filter(|&s| s > 0.0);
        if let Some(strength) = active.fold(None::<f64>, |acc, s| Some(acc.map_or(s, |a| a.min(s))))
        {
            bz_ratio = bz_ratio.max(b / strength);
        }
    }

    ConstraintReport {
        drives: summaries,
        bz_ratio,
        thresholds,
    }
}
