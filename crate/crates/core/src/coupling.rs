//! Forward map from laser drives and normal modes to the effective Heisenberg
//! model: spin-spin coupling matrices, recoil frequencies, and the
//! detuning-shift realization of a longitudinal field.
//!
//! For a Raman pair with beatnotes `mu_k` and per-ion amplitudes `W_k^(i)`
//! addressing a mode branch `{w_m, b_m}` the engineered coupling is
//!
//! ```text
//! J_ij = sum_k W_k^(i) W_k^(j) R sum_m b_m^(i) b_m^(j) / (mu_k^2 - w_m^2)
//! ```
//!
//! with recoil `R = hbar dk^2 / 2M`. One beatnote recovers the
//! single-frequency form exactly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::ion_chain::{Branch, NormalModeSet};
use crate::target::TargetHamiltonian;
use crate::units;
use crate::{Error, Result};

/// Raman pair label. Pairs I and III address the two transverse mode branches
/// (spin x and z axes); pair II addresses the axial branch (spin y).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairLabel {
    I,
    II,
    III,
}

impl PairLabel {
    /// Mode branch this pair couples to.
    pub fn branch(self) -> Branch {
        match self {
            PairLabel::I | PairLabel::III => Branch::Transverse,
            PairLabel::II => Branch::Axial,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PairLabel::I => "I",
            PairLabel::II => "II",
            PairLabel::III => "III",
        }
    }
}

/// Default Pauli weights (alpha0, alpha1, alpha2, alpha3) of the
/// spin-dependent force.
pub const DEFAULT_PAULI_WEIGHTS: [f64; 4] = [0.0, 0.5, 0.0, 0.25];

/// Beatnotes closer than this to any mode are rejected [rad/s].
pub const RESONANCE_TOLERANCE: f64 = 2.0 * PI * 100.0;

/// One bichromatic Raman drive: a set of beatnotes with per-ion amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserDrive {
    pub pair: PairLabel,
    /// Beatnote frequencies [rad/s], one per tone set.
    pub beatnotes: Vec<f64>,
    /// Rabi magnitudes [rad/s]; row = beatnote, column = ion. Nonnegative.
    pub rabi: DMatrix<f64>,
    /// Per-tone sign flags (+1/-1), realized as pi offsets of the tone phase
    /// pair; they carry the sign freedom of the fitted couplings.
    pub phase_flips: DMatrix<f64>,
    /// Per-ion phase offsets (dphi, dphi') of the red/blue detuned tones.
    pub phases: Vec<(f64, f64)>,
    /// Spin-dependent-force weights (alpha0..alpha3).
    pub pauli_weights: [f64; 4],
    /// Permit a nonzero identity weight alpha0 on pair III.
    pub allow_bias: bool,
}

impl LaserDrive {
    /// Drive with default phases and Pauli weights. `rabi` rows are beatnotes.
    pub fn new(pair: PairLabel, beatnotes: Vec<f64>, rabi: DMatrix<f64>) -> Result<Self> {
        if rabi.nrows() != beatnotes.len() {
            return Err(Error::InvalidModel(format!(
                "rabi matrix has {} rows for {} beatnotes",
                rabi.nrows(),
                beatnotes.len()
            )));
        }
        if rabi.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidModel(
                "Rabi magnitudes must be nonnegative".into(),
            ));
        }
        let n_ions = rabi.ncols();
        let phases = match pair {
            PairLabel::I => vec![(0.0, PI); n_ions],
            _ => vec![(0.0, 0.0); n_ions],
        };
        let phase_flips = DMatrix::from_element(rabi.nrows(), n_ions, 1.0);
        Ok(Self {
            pair,
            beatnotes,
            rabi,
            phase_flips,
            phases,
            pauli_weights: DEFAULT_PAULI_WEIGHTS,
            allow_bias: false,
        })
    }

    /// Drive built from signed amplitudes: magnitudes go to `rabi`, signs to
    /// `phase_flips`.
    pub fn from_signed(pair: PairLabel, beatnotes: Vec<f64>, signed: DMatrix<f64>) -> Result<Self> {
        let rabi = signed.map(f64::abs);
        let flips = signed.map(|w| if w < 0.0 { -1.0 } else { 1.0 });
        let mut drive = Self::new(pair, beatnotes, rabi)?;
        drive.phase_flips = flips;
        Ok(drive)
    }

    /// Zero drive on `n_ions` ions with a single placeholder beatnote.
    pub fn zero(pair: PairLabel, n_ions: usize, beatnote: f64) -> Self {
        Self::new(pair, vec![beatnote], DMatrix::zeros(1, n_ions)).unwrap()
    }

    pub fn n_ions(&self) -> usize {
        self.rabi.ncols()
    }

    pub fn n_beatnotes(&self) -> usize {
        self.beatnotes.len()
    }

    /// Signed effective amplitudes entering the coupling formulas: Rabi
    /// magnitude times sign flag, scaled by the Pauli weight relative to the
    /// canonical scheme (2 alpha1 for pairs I/II, 4 alpha3 for pair III).
    pub fn effective_amplitudes(&self) -> DMatrix<f64> {
        let weight = match self.pair {
            PairLabel::I | PairLabel::II => 2.0 * self.pauli_weights[1],
            PairLabel::III => 4.0 * self.pauli_weights[3],
        };
        let mut w = self.rabi.component_mul(&self.phase_flips);
        w *= weight;
        w
    }

    /// Largest per-ion sum of Rabi magnitudes [rad/s].
    pub fn max_ion_budget(&self) -> f64 {
        (0..self.n_ions())
            .map(|i| self.rabi.column(i).iter().map(|w| w.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn check_bias(&self) -> Result<()> {
        if self.pair == PairLabel::III && self.pauli_weights[0] != 0.0 && !self.allow_bias {
            return Err(Error::BiasWeight(self.pauli_weights[0]));
        }
        Ok(())
    }
}

/// Recoil frequency `R = hbar dk^2 / 2M` [rad/s].
pub fn recoil_frequency(delta_k: f64, mass: f64) -> f64 {
    units::HBAR * delta_k * delta_k / (2.0 * mass)
}

/// Chain-plus-beam context shared by the inverse problem and the validator:
/// both mode branches with their Lamb-Dicke matrices and recoils per pair.
#[derive(Debug, Clone)]
pub struct DriveSetup {
    pub trap: crate::ion_chain::TrapConfig,
    pub geometry: crate::ion_chain::BeamGeometry,
    pub transverse: NormalModeSet,
    pub axial: NormalModeSet,
    /// Lamb-Dicke matrices in pair order (I, II, III).
    pub eta: [crate::ion_chain::LambDickeMatrix; 3],
    /// Recoil frequencies in pair order [rad/s].
    pub recoil: [f64; 3],
}

impl DriveSetup {
    pub fn new(
        trap: &crate::ion_chain::TrapConfig,
        geometry: &crate::ion_chain::BeamGeometry,
    ) -> Result<Self> {
        use crate::ion_chain::{lamb_dicke_matrix, normal_modes};
        let transverse = normal_modes(trap, Branch::Transverse)?;
        let axial = normal_modes(trap, Branch::Axial)?;
        let dk = [
            geometry.delta_k_i(),
            geometry.delta_k_ii(),
            geometry.delta_k_iii(),
        ];
        let eta = [
            lamb_dicke_matrix(&transverse, dk[0], trap.ion_mass)?,
            lamb_dicke_matrix(&axial, dk[1], trap.ion_mass)?,
            lamb_dicke_matrix(&transverse, dk[2], trap.ion_mass)?,
        ];
        let recoil = [
            recoil_frequency(dk[0], trap.ion_mass),
            recoil_frequency(dk[1], trap.ion_mass),
            recoil_frequency(dk[2], trap.ion_mass),
        ];
        Ok(Self {
            trap: trap.clone(),
            geometry: geometry.clone(),
            transverse,
            axial,
            eta,
            recoil,
        })
    }

    pub fn n_ions(&self) -> usize {
        self.trap.n_ions
    }

    pub fn modes(&self, pair: PairLabel) -> &NormalModeSet {
        match pair.branch() {
            Branch::Transverse => &self.transverse,
            Branch::Axial => &self.axial,
        }
    }

    pub fn recoil_for(&self, pair: PairLabel) -> f64 {
        match pair {
            PairLabel::I => self.recoil[0],
            PairLabel::II => self.recoil[1],
            PairLabel::III => self.recoil[2],
        }
    }

    pub fn eta_for(&self, pair: PairLabel) -> &crate::ion_chain::LambDickeMatrix {
        match pair {
            PairLabel::I => &self.eta[0],
            PairLabel::II => &self.eta[1],
            PairLabel::III => &self.eta[2],
        }
    }

    /// Coupling matrix of a drive against the matching branch and recoil.
    pub fn coupling_of(&self, drive: &LaserDrive) -> Result<DMatrix<f64>> {
        coupling_matrix(drive, self.modes(drive.pair), self.recoil_for(drive.pair))
    }
}

/// Check every beatnote keeps a safe distance from every mode.
fn check_resonances(beatnotes: &[f64], modes: &NormalModeSet, tol: f64) -> Result<()> {
    for &mu in beatnotes {
        for (m, &w) in modes.frequencies.iter().enumerate() {
            if (mu.abs() - w).abs() < tol {
                return Err(Error::ResonantBeatnote {
                    beatnote_hz: units::angular_to_hz(mu),
                    mode: m + 1,
                    mode_hz: units::angular_to_hz(w),
                    tolerance_hz: units::angular_to_hz(tol),
                });
            }
        }
    }
    Ok(())
}

/// Mode-sum kernel S_ij(mu) = sum_m b_m^(i) b_m^(j) / (mu^2 - w_m^2).
pub fn mode_kernel(modes: &NormalModeSet, mu: f64) -> DMatrix<f64> {
    let n = modes.n_ions();
    let mut s = DMatrix::zeros(n, n);
    for m in 0..n {
        let w = modes.frequencies[m];
        let d = 1.0 / (mu * mu - w * w);
        for i in 0..n {
            let bi = modes.eigenvectors[(m, i)];
            // Upper triangle only; mirrored below for exact symmetry.
            for j in i..n {
                s[(i, j)] += d * (bi * modes.eigenvectors[(m, j)]);
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            s[(i, j)] = s[(j, i)];
        }
    }
    s
}

/// Engineered spin-spin coupling matrix of one drive [rad/s].
///
/// The drive's pair must address the branch of `modes`; beatnotes resonant
/// with a mode (within [`RESONANCE_TOLERANCE`]) are rejected since the
/// coupling diverges there. The diagonal is zeroed.
pub fn coupling_matrix(
    drive: &LaserDrive,
    modes: &NormalModeSet,
    recoil: f64,
) -> Result<DMatrix<f64>> {
    if drive.pair.branch() != modes.branch {
        return Err(Error::BranchMismatch(format!(
            "pair {} must address {} modes, got {}",
            drive.pair.as_str(),
            drive.pair.branch().as_str(),
            modes.branch.as_str()
        )));
    }
    if drive.n_ions() != modes.n_ions() {
        return Err(Error::InvalidModel(format!(
            "drive addresses {} ions but the mode set has {}",
            drive.n_ions(),
            modes.n_ions()
        )));
    }
    drive.check_bias()?;
    check_resonances(&drive.beatnotes, modes, RESONANCE_TOLERANCE)?;

    let n = drive.n_ions();
    let w = drive.effective_amplitudes();
    let mut j = DMatrix::zeros(n, n);
    for (k, &mu) in drive.beatnotes.iter().enumerate() {
        let kernel = mode_kernel(modes, mu);
        for i in 0..n {
            for l in (i + 1)..n {
                j[(i, l)] += (w[(k, i)] * w[(k, l)]) * recoil * kernel[(i, l)];
            }
        }
    }
    for i in 0..n {
        for l in 0..i {
            j[(i, l)] = j[(l, i)];
        }
    }
    Ok(j)
}

/// Effective Heisenberg model assembled from the three drives plus the
/// requested longitudinal field, with the drive parameters kept as provenance.
#[derive(Debug, Clone)]
pub struct EffectiveModel {
    pub hamiltonian: TargetHamiltonian,
    /// Drives that produced the model, in pair order (I, II, III).
    pub drives: [LaserDrive; 3],
}

/// Assemble the full effective model. Pair I and III must be given the
/// transverse mode set, pair II the axial one; `recoils` are the three recoil
/// frequencies in pair order and `bz` is the per-ion field [rad/s].
pub fn effective_hamiltonian(
    drives: &[LaserDrive; 3],
    transverse: &NormalModeSet,
    axial: &NormalModeSet,
    recoils: [f64; 3],
    bz: &DVector<f64>,
) -> Result<EffectiveModel> {
    let labels = [PairLabel::I, PairLabel::II, PairLabel::III];
    for (drive, expect) in drives.iter().zip(labels) {
        if drive.pair != expect {
            return Err(Error::BranchMismatch(format!(
                "drives must be passed in pair order I, II, III; found {}",
                drive.pair.as_str()
            )));
        }
    }
    let n = drives[0].n_ions();
    if bz.len() != n {
        return Err(Error::InvalidModel(format!(
            "bz has {} entries for {} ions",
            bz.len(),
            n
        )));
    }

    let jxx = coupling_matrix(&drives[0], transverse, recoils[0])?;
    let jyy = coupling_matrix(&drives[1], axial, recoils[1])?;
    let jzz = coupling_matrix(&drives[2], transverse, recoils[2])?;

    let mut hamiltonian = TargetHamiltonian::zero(n);
    hamiltonian.jxx = jxx;
    hamiltonian.jyy = jyy;
    hamiltonian.jzz = jzz;
    hamiltonian.bz = bz.clone();

    Ok(EffectiveModel {
        hamiltonian,
        drives: drives.clone(),
    })
}

/// Red/blue beatnote pairs after the per-ion asymmetric shift that realizes a
/// longitudinal field without extra beams.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedBeatnotes {
    /// `per_ion[i][k]` = (red, blue) beatnotes [rad/s] of tone `k` at ion `i`:
    /// red shifts to `mu + Bz_i`, blue to `mu - Bz_i`.
    pub per_ion: Vec<Vec<(f64, f64)>>,
    /// max_i |Bz_i| / min over (tone, mode) of |mu - w|; the shift scheme
    /// assumes this stays well below 1.
    pub shift_to_detuning_ratio: f64,
}

/// Per-ion detuning shifts `mu -> mu +/- Bz_i` for pairs I and II. Pair III
/// keeps its beatnotes and is rejected here.
pub fn bz_detuning_shifts(
    drive: &LaserDrive,
    bz: &DVector<f64>,
    modes: &NormalModeSet,
) -> Result<ShiftedBeatnotes> {
    if drive.pair == PairLabel::III {
        return Err(Error::ShiftOnPairIii);
    }
    if bz.len() != drive.n_ions() {
        return Err(Error::InvalidModel(format!(
            "bz has {} entries for {} ions",
            bz.len(),
            drive.n_ions()
        )));
    }
    let min_detuning = drive
        .beatnotes
        .iter()
        .flat_map(|&mu| modes.frequencies.iter().map(move |&w| (mu.abs() - w).abs()))
        .fold(f64::INFINITY, f64::min);
    let max_bz = bz.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let per_ion = (0..drive.n_ions())
        .map(|i| {
            drive
                .beatnotes
                .iter()
                .map(|&mu| (mu + bz[i], mu - bz[i]))
                .collect()
        })
        .collect();
    Ok(ShiftedBeatnotes {
        per_ion,
        shift_to_detuning_ratio: max_bz / min_detuning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ion_chain::{self, ChainModel, TrapConfig};
    use crate::units::{AMU, YB171_AMU};
    use std::f64::consts::TAU;

    fn yb_trap(n: usize) -> TrapConfig {
        TrapConfig::new(n, 4.1351e6, 0.713e6, YB171_AMU * AMU, ChainModel::Harmonic).unwrap()
    }

    fn transverse(n: usize) -> NormalModeSet {
        ion_chain::normal_modes(&yb_trap(n), Branch::Transverse).unwrap()
    }

    #[test]
    fn recoil_zero_and_quadratic() {
        let mass = YB171_AMU * AMU;
        assert_eq!(recoil_frequency(0.0, mass), 0.0);
        let r1 = recoil_frequency(1.0e7, mass);
        let r2 = recoil_frequency(2.0e7, mass);
        assert!((r2 - 4.0 * r1).abs() < 1e-9 * r2);
    }

    #[test]
    fn recoil_consistent_with_lamb_dicke() {
        // R * b_m^2 = eta_m^2 * w_m at every (mode, ion).
        let trap = yb_trap(4);
        let k = TAU / 355e-9;
        let geom = ion_chain::beam_geometry_from_chi(0.1767, k).unwrap();
        let modes = transverse(4);
        let eta = ion_chain::lamb_dicke_matrix(&modes, geom.delta_k_i(), trap.ion_mass).unwrap();
        let r = recoil_frequency(geom.delta_k_i(), trap.ion_mass);
        for m in 0..4 {
            for i in 0..4 {
                let lhs = eta.values[(m, i)].powi(2) * modes.frequencies[m];
                let rhs = r * modes.eigenvectors[(m, i)].powi(2);
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()));
            }
        }
    }

    #[test]
    fn zero_amplitudes_give_zero_matrix() {
        let modes = transverse(4);
        let drive = LaserDrive::zero(PairLabel::I, 4, modes.frequencies[0] - TAU * 830e3);
        let j = coupling_matrix(&drive, &modes, 1.0e5).unwrap();
        assert!(j.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_ion_single_beatnote_matches_hand_sum() {
        let modes = transverse(2);
        let mu = modes.frequencies[0] - TAU * 500e3;
        let omega = TAU * 200e3;
        let recoil = 1.1e5;
        let drive =
            LaserDrive::new(PairLabel::I, vec![mu], DMatrix::from_element(1, 2, omega)).unwrap();
        let j = coupling_matrix(&drive, &modes, recoil).unwrap();
        // b_1 = (1,1)/sqrt(2), b_2 = (1,-1)/sqrt(2).
        let expected = omega
            * omega
            * recoil
            * (0.5 / (mu * mu - modes.frequencies[0].powi(2))
                - 0.5 / (mu * mu - modes.frequencies[1].powi(2)));
        assert!((j[(0, 1)] - expected).abs() < 1e-12 * expected.abs());
        assert_eq!(j[(0, 1)], j[(1, 0)]);
    }

    #[test]
    fn single_beatnote_equals_explicit_single_frequency_form() {
        // The general multi-beatnote sum with one entry must be bit-identical
        // to the single-frequency expression evaluated directly.
        let modes = transverse(4);
        let mu = modes.frequencies[0] - TAU * 830e3;
        let recoil = 0.9e5;
        let amps = [1.3e5, 2.2e5, 0.8e5, 1.9e5];
        let rabi = DMatrix::from_fn(1, 4, |_, i| amps[i]);
        let drive = LaserDrive::new(PairLabel::I, vec![mu], rabi).unwrap();
        let j = coupling_matrix(&drive, &modes, recoil).unwrap();
        for i in 0..4 {
            for l in (i + 1)..4 {
                let mut sum = 0.0;
                for m in 0..4 {
                    let w = modes.frequencies[m];
                    sum += 1.0 / (mu * mu - w * w)
                        * (modes.eigenvectors[(m, i)] * modes.eigenvectors[(m, l)]);
                }
                assert_eq!(j[(i, l)], (amps[i] * amps[l]) * recoil * sum);
                assert_eq!(j[(l, i)], j[(i, l)]);
            }
        }
    }

    #[test]
    fn uniform_drive_below_band_is_nearest_neighbor_dominated() {
        let modes = transverse(4);
        let mu = modes.frequencies[0] - TAU * 830e3;
        let drive = LaserDrive::new(
            PairLabel::I,
            vec![mu],
            DMatrix::from_element(1, 4, TAU * 300e3),
        )
        .unwrap();
        let j = coupling_matrix(&drive, &modes, 1.1e5).unwrap();
        // Nearest-neighbor couplings dominate every longer-range element...
        let min_nn = j[(0, 1)].abs().min(j[(1, 2)].abs()).min(j[(2, 3)].abs());
        let max_far = j[(0, 2)].abs().max(j[(0, 3)].abs()).max(j[(1, 3)].abs());
        assert!(min_nn > 10.0 * max_far, "nn = {min_nn}, far = {max_far}");
        // ...and their strength declines away from the chain center.
        assert!(j[(1, 2)].abs() > j[(0, 1)].abs());
        assert!((j[(0, 1)] - j[(2, 3)]).abs() < 1e-9 * j[(0, 1)].abs());
    }

    #[test]
    fn couplings_scale_quadratically_with_amplitude() {
        let modes = transverse(4);
        let mu = modes.frequencies[0] - TAU * 830e3;
        let rabi = DMatrix::from_fn(1, 4, |_, i| TAU * (50e3 + 20e3 * i as f64));
        let d1 = LaserDrive::new(PairLabel::I, vec![mu], rabi.clone()).unwrap();
        let d3 = LaserDrive::new(PairLabel::I, vec![mu], 3.0 * rabi).unwrap();
        let j1 = coupling_matrix(&d1, &modes, 1.1e5).unwrap();
        let j3 = coupling_matrix(&d3, &modes, 1.1e5).unwrap();
        for (a, b) in j1.iter().zip(j3.iter()) {
            assert!((9.0 * a - b).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn far_detuned_couplings_vanish_by_mode_completeness() {
        let modes = transverse(4);
        let mu = 100.0 * modes.frequencies[0];
        let omega = TAU * 300e3;
        let drive =
            LaserDrive::new(PairLabel::I, vec![mu], DMatrix::from_element(1, 4, omega)).unwrap();
        let recoil = 1.1e5;
        let j = coupling_matrix(&drive, &modes, recoil).unwrap();
        let scale = omega * omega * recoil / (mu * mu);
        for i in 0..4 {
            for l in 0..4 {
                if i != l {
                    assert!(j[(i, l)].abs() / scale < 1e-3, "J[{i}{l}] = {}", j[(i, l)]);
                }
            }
        }
    }

    #[test]
    fn resonant_beatnote_rejected_naming_mode() {
        let modes = transverse(4);
        let drive = LaserDrive::new(
            PairLabel::I,
            vec![modes.frequencies[1]],
            DMatrix::from_element(1, 4, 1.0e5),
        )
        .unwrap();
        match coupling_matrix(&drive, &modes, 1.0e5) {
            Err(Error::ResonantBeatnote { mode: 2, .. }) => {}
            other => panic!("expected resonance on mode 2, got {other:?}"),
        }
    }

    #[test]
    fn branch_mismatch_rejected() {
        let axial = ion_chain::normal_modes(&yb_trap(4), Branch::Axial).unwrap();
        let drive = LaserDrive::zero(PairLabel::I, 4, axial.frequencies[0] + TAU * 1e6);
        assert!(matches!(
            coupling_matrix(&drive, &axial, 1.0e5),
            Err(Error::BranchMismatch(_))
        ));
    }

    #[test]
    fn bias_weight_on_pair_iii_refused_without_override() {
        let modes = transverse(4);
        let mu = modes.frequencies[0] + TAU * 100e3;
        let mut drive =
            LaserDrive::new(PairLabel::III, vec![mu], DMatrix::from_element(1, 4, 1.0e5)).unwrap();
        drive.pauli_weights[0] = 0.1;
        assert!(matches!(
            coupling_matrix(&drive, &modes, 1.0e5),
            Err(Error::BiasWeight(_))
        ));
        drive.allow_bias = true;
        assert!(coupling_matrix(&drive, &modes, 1.0e5).is_ok());
    }

    #[test]
    fn detuning_shifts_split_red_and_blue() {
        let modes = transverse(4);
        let mu = modes.frequencies[0] - TAU * 830e3;
        let drive =
            LaserDrive::new(PairLabel::I, vec![mu], DMatrix::from_element(1, 4, 1.0e5)).unwrap();

        let zero = DVector::zeros(4);
        let unshifted = bz_detuning_shifts(&drive, &zero, &modes).unwrap();
        assert!(unshifted.per_ion.iter().all(|t| t[0] == (mu, mu)));
        assert_eq!(unshifted.shift_to_detuning_ratio, 0.0);

        let bz = DVector::from_vec(vec![3.0, 0.0, 2.0, -1.0]) * TAU * 100.0;
        let shifted = bz_detuning_shifts(&drive, &bz, &modes).unwrap();
        assert_eq!(shifted.per_ion[0][0], (mu + bz[0], mu - bz[0]));
        assert_eq!(shifted.per_ion[1][0], (mu, mu));
        assert_eq!(shifted.per_ion[3][0], (mu + bz[3], mu - bz[3]));

        // Uniform field shifts every ion identically.
        let uniform = DVector::from_element(4, TAU * 50.0);
        let u = bz_detuning_shifts(&drive, &uniform, &modes).unwrap();
        assert!(u.per_ion.iter().all(|t| t == &u.per_ion[0]));
    }

    #[test]
    fn pair_iii_shift_rejected() {
        let modes = transverse(4);
        let drive = LaserDrive::zero(PairLabel::III, 4, modes.frequencies[0] + TAU * 100e3);
        let bz = DVector::zeros(4);
        assert!(matches!(
            bz_detuning_shifts(&drive, &bz, &modes),
            Err(Error::ShiftOnPairIii)
        ));
    }

    #[test]
    fn effective_model_assembles_all_pairs() {
        let trap = yb_trap(4);
        let t = transverse(4);
        let a = ion_chain::normal_modes(&trap, Branch::Axial).unwrap();
        let drives = [
            LaserDrive::zero(PairLabel::I, 4, t.frequencies[0] - TAU * 830e3),
            LaserDrive::zero(PairLabel::II, 4, a.frequencies[3] + TAU * 3160e3),
            LaserDrive::zero(PairLabel::III, 4, t.frequencies[0] + TAU * 100e3),
        ];
        let bz = DVector::from_vec(vec![3.0, 0.0, 2.0, -1.0]);
        let model = effective_hamiltonian(&drives, &t, &a, [1.0e5; 3], &bz).unwrap();
        assert_eq!(model.hamiltonian.bz, bz);
        assert!(model.hamiltonian.jxx.iter().all(|&v| v == 0.0));
        model.hamiltonian.validate().unwrap();
    }
}
