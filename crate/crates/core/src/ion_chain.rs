//! Ion-chain statics: equilibrium positions, normal-mode spectra and
//! eigenvectors for the transverse and axial branches, Lamb-Dicke parameters,
//! and Raman-beam geometry.
//!
//! All chain mechanics is solved in the dimensionless length unit
//! `l = (e^2 / (4 pi eps0 M wz^2))^(1/3)` set by the axial confinement, so the
//! equilibrium solve is scale-free. Mode frequencies are returned in rad/s,
//! sorted descending; with that convention the transverse center-of-mass mode
//! is mode 1 and the axial center-of-mass mode is mode N.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::units;
use crate::{Error, Result};

/// Axial arrangement model of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainModel {
    /// Ions in a common harmonic axial well; positions from force balance.
    Harmonic,
    /// Equally-spaced chain with the given spacing in meters. Stands in for
    /// anharmonic axial confinement that is not modeled explicitly.
    Equispaced { spacing: f64 },
}

/// Static trap parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    pub n_ions: usize,
    /// Transverse confinement frequency nu^T [Hz].
    pub nu_transverse_hz: f64,
    /// Axial confinement frequency nu^A [Hz].
    pub nu_axial_hz: f64,
    /// Ion mass [kg].
    pub ion_mass: f64,
    pub chain_model: ChainModel,
}

impl TrapConfig {
    pub fn new(
        n_ions: usize,
        nu_transverse_hz: f64,
        nu_axial_hz: f64,
        ion_mass: f64,
        chain_model: ChainModel,
    ) -> Result<Self> {
        if n_ions == 0 {
            return Err(Error::InvalidTrap("n_ions must be at least 1".into()));
        }
        if !(nu_axial_hz > 0.0) || !(nu_transverse_hz > nu_axial_hz) {
            return Err(Error::InvalidTrap(format!(
                "need nu_transverse > nu_axial > 0 for a stable linear chain, got nu_T = {nu_transverse_hz} Hz, nu_A = {nu_axial_hz} Hz"
            )));
        }
        if !(ion_mass > 0.0) {
            return Err(Error::InvalidTrap(format!(
                "mass must be positive, got {ion_mass} kg"
            )));
        }
        if let ChainModel::Equispaced { spacing } = chain_model {
            if !(spacing > 0.0) {
                return Err(Error::InvalidTrap(format!(
                    "spacing must be positive, got {spacing} m"
                )));
            }
        }
        Ok(Self {
            n_ions,
            nu_transverse_hz,
            nu_axial_hz,
            ion_mass,
            chain_model,
        })
    }

    /// Axial angular frequency wz = 2 pi nu^A [rad/s].
    pub fn omega_axial(&self) -> f64 {
        units::hz_to_angular(self.nu_axial_hz)
    }

    /// Transverse angular frequency 2 pi nu^T [rad/s].
    pub fn omega_transverse(&self) -> f64 {
        units::hz_to_angular(self.nu_transverse_hz)
    }

    /// Chain length unit [m].
    pub fn length_scale(&self) -> f64 {
        units::chain_length_scale(self.ion_mass, self.omega_axial())
    }
}

/// Normal-mode branch label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Transverse,
    Axial,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Transverse => "transverse",
            Branch::Axial => "axial",
        }
    }
}

/// One branch of the chain's normal modes.
///
/// `frequencies` are angular [rad/s], strictly positive, sorted descending.
/// Row `m` of `eigenvectors` is the (orthonormal) eigenvector of mode `m`;
/// column `i` is ion `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalModeSet {
    pub branch: Branch,
    pub frequencies: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl NormalModeSet {
    pub fn n_ions(&self) -> usize {
        self.eigenvectors.ncols()
    }

    /// Max deviation of B B^T from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.n_ions();
        let gram = &self.eigenvectors * self.eigenvectors.transpose();
        let mut defect = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((gram[(i, j)] - target).abs());
            }
        }
        defect
    }
}

/// Dimensionless equilibrium gradient: u_i - sum_j sign(u_i - u_j) / (u_i - u_j)^2.
fn equilibrium_gradient(u: &DVector<f64>) -> DVector<f64> {
    let n = u.len();
    let mut g = u.clone();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = u[i] - u[j];
            g[i] -= d.signum() / (d * d);
        }
    }
    g
}

/// Hessian of the dimensionless potential about positions `u`.
fn equilibrium_hessian(u: &DVector<f64>) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 1.0;
        for j in 0..n {
            if i == j {
                continue;
            }
            let c = 2.0 / (u[i] - u[j]).abs().powi(3);
            diag += c;
            h[(i, j)] = -c;
        }
        h[(i, i)] = diag;
    }
    h
}

const EQUILIBRIUM_TOL: f64 = 1e-12;
const EQUILIBRIUM_MAX_ITER: usize = 200;

/// Dimensionless harmonic-chain equilibrium via damped Newton iteration
/// from an equispaced initial guess.
fn dimensionless_equilibrium(n: usize) -> Result<DVector<f64>> {
    if n == 1 {
        return Ok(DVector::from_element(1, 0.0));
    }
    // Empirical minimum-spacing estimate keeps the initial guess close enough
    // for undamped steps on small chains and damped steps on long ones.
    let spacing = 2.018 / (n as f64).powf(0.559);
    let mut u = DVector::from_fn(n, |i, _| (i as f64 - (n as f64 - 1.0) / 2.0) * spacing);

    let mut residual = f64::INFINITY;
    for _ in 0..EQUILIBRIUM_MAX_ITER {
        let g = equilibrium_gradient(&u);
        residual = g.amax();
        if residual < EQUILIBRIUM_TOL {
            return Ok(u);
        }
        let h = equilibrium_hessian(&u);
        let step = h.lu().solve(&g).ok_or(Error::EquilibriumDiverged {
            iterations: EQUILIBRIUM_MAX_ITER,
            residual,
        })?;

        // Backtrack until the gradient norm decreases and the ion ordering is kept.
        let g0 = g.norm_squared();
        let mut alpha = 1.0;
        loop {
            let trial = &u - alpha * &step;
            let ordered = trial.as_slice().windows(2).all(|w| w[0] < w[1]);
            if ordered && equilibrium_gradient(&trial).norm_squared() < g0 {
                u = trial;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-8 {
                return Err(Error::EquilibriumDiverged {
                    iterations: EQUILIBRIUM_MAX_ITER,
                    residual,
                });
            }
        }
    }
    Err(Error::EquilibriumDiverged {
        iterations: EQUILIBRIUM_MAX_ITER,
        residual,
    })
}

/// Dimensionless positions for either chain model (unit: `trap.length_scale()`).
fn dimensionless_positions(trap: &TrapConfig) -> Result<DVector<f64>> {
    match trap.chain_model {
        ChainModel::Harmonic => dimensionless_equilibrium(trap.n_ions),
        ChainModel::Equispaced { spacing } => {
            let s = spacing / trap.length_scale();
            let n = trap.n_ions;
            Ok(DVector::from_fn(n, |i, _| {
                (i as f64 - (n as f64 - 1.0) / 2.0) * s
            }))
        }
    }
}

/// Axial equilibrium positions [m], sorted ascending.
///
/// The harmonic model solves the force balance between the axial well and the
/// pairwise Coulomb repulsion; the equispaced model returns the exact
/// arithmetic progression centered at 0.
pub fn equilibrium_positions(trap: &TrapConfig) -> Result<Vec<f64>> {
    let u = dimensionless_positions(trap)?;
    let l = trap.length_scale();
    Ok(u.iter().map(|ui| ui * l).collect())
}

/// Normal modes of the requested branch.
///
/// The axial branch diagonalizes `A_ij` with unit COM stiffness and attractive
/// Coulomb off-diagonals; the transverse branch uses the stiffness ratio
/// `(nu_T/nu_A)^2` with the repulsive sign. Frequencies come out descending,
/// so the transverse COM sits at index 0 and the axial COM at index N-1.
pub fn normal_modes(trap: &TrapConfig, branch: Branch) -> Result<NormalModeSet> {
    let u = dimensionless_positions(trap)?;
    let n = trap.n_ions;
    let beta2 = (trap.nu_transverse_hz / trap.nu_axial_hz).powi(2);

    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = match branch {
            Branch::Axial => 1.0,
            Branch::Transverse => beta2,
        };
        for j in 0..n {
            if i == j {
                continue;
            }
            let inv3 = 1.0 / (u[i] - u[j]).abs().powi(3);
            match branch {
                Branch::Axial => {
                    diag += 2.0 * inv3;
                    m[(i, j)] = -2.0 * inv3;
                }
                Branch::Transverse => {
                    diag -= inv3;
                    m[(i, j)] = inv3;
                }
            }
        }
        m[(i, i)] = diag;
    }

    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    // Descending frequency.
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let omega_z = trap.omega_axial();
    let mut frequencies = Vec::with_capacity(n);
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (row, &k) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[k];
        if lambda <= 0.0 {
            return Err(Error::UnstableChain {
                branch: branch.as_str(),
                mode: row + 1,
                lambda,
            });
        }
        frequencies.push(omega_z * lambda.sqrt());
        let v = eig.eigenvectors.column(k);
        // Deterministic sign: component sum positive, falling back to the
        // first component of significant magnitude for antisymmetric modes.
        let sum: f64 = v.iter().sum();
        let sign = if sum.abs() > 1e-9 {
            sum.signum()
        } else {
            let lead = v.iter().find(|c| c.abs() > 1e-9).copied().unwrap_or(1.0);
            lead.signum()
        };
        for i in 0..n {
            eigenvectors[(row, i)] = sign * v[i];
        }
    }

    Ok(NormalModeSet {
        branch,
        frequencies,
        eigenvectors,
    })
}

/// Threshold above which the Lamb-Dicke expansion is considered strained.
pub const LAMB_DICKE_STRAIN: f64 = 0.2;

/// Per-ion, per-mode Lamb-Dicke parameters.
#[derive(Debug, Clone)]
pub struct LambDickeMatrix {
    /// Row m = mode, column i = ion: eta_m^(i).
    pub values: DMatrix<f64>,
    /// Largest |eta|; above [`LAMB_DICKE_STRAIN`] the regime is strained.
    pub max_abs: f64,
}

impl LambDickeMatrix {
    pub fn strained(&self) -> bool {
        self.max_abs > LAMB_DICKE_STRAIN
    }
}

/// eta_m^(i) = sqrt(hbar dk^2 / (2 M w_m)) b_m^(i).
pub fn lamb_dicke_matrix(
    modes: &NormalModeSet,
    delta_k: f64,
    mass: f64,
) -> Result<LambDickeMatrix> {
    let n = modes.n_ions();
    let mut values = DMatrix::zeros(n, n);
    let mut max_abs = 0.0_f64;
    for m in 0..n {
        let w = modes.frequencies[m];
        if w <= 0.0 {
            return Err(Error::ZeroModeFrequency(m + 1));
        }
        let scale = (units::HBAR * delta_k * delta_k / (2.0 * mass * w)).sqrt();
        for i in 0..n {
            let eta = scale * modes.eigenvectors[(m, i)];
            values[(m, i)] = eta;
            max_abs = max_abs.max(eta.abs());
        }
    }
    Ok(LambDickeMatrix { values, max_abs })
}

/// Mode-independent Lamb-Dicke scale sqrt(hbar dk^2 / (2 M w)).
pub fn lamb_dicke_scale(delta_k: f64, mass: f64, omega: f64) -> f64 {
    (units::HBAR * delta_k * delta_k / (2.0 * mass * omega)).sqrt()
}

/// Raman-beam geometry: the individual beams run along (xi, xi, chi) and the
/// three global beams mirror one component each, so the net wavevector
/// differences point along X (pair I), Z (pair II) and Y (pair III).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamGeometry {
    pub xi: f64,
    pub chi: f64,
    /// Single-beam wavenumber k [rad/m].
    pub carrier_wavenumber: f64,
    /// Delta-k vectors for pairs I, II, III [rad/m].
    pub delta_k: [[f64; 3]; 3],
    /// Angle between the individual beam and each global beam [deg].
    pub angles_deg: [f64; 3],
}

impl BeamGeometry {
    /// |Delta k| for pair I (along X).
    pub fn delta_k_i(&self) -> f64 {
        2.0 * self.xi * self.carrier_wavenumber
    }
    /// |Delta k| for pair II (along Z).
    pub fn delta_k_ii(&self) -> f64 {
        2.0 * self.chi * self.carrier_wavenumber
    }
    /// |Delta k| for pair III (along Y).
    pub fn delta_k_iii(&self) -> f64 {
        2.0 * self.xi * self.carrier_wavenumber
    }
}

/// Build the beam geometry from the axial projection alone, solving
/// `xi = sqrt((1 - chi^2)/2)` so the unit-vector constraint holds exactly.
pub fn beam_geometry_from_chi(chi: f64, carrier_wavenumber: f64) -> Result<BeamGeometry> {
    if !(chi.abs() < 1.0) {
        return Err(Error::DegenerateGeometry(format!(
            "|chi| = {} leaves xi imaginary or zero",
            chi.abs()
        )));
    }
    let xi = ((1.0 - chi * chi) / 2.0).sqrt();
    beam_geometry(xi, chi, carrier_wavenumber)
}

/// Build the beam geometry, enforcing the unit-vector constraint
/// 2 xi^2 + chi^2 = 1 to 1e-9.
pub fn beam_geometry(xi: f64, chi: f64, carrier_wavenumber: f64) -> Result<BeamGeometry> {
    let defect = (2.0 * xi * xi + chi * chi - 1.0).abs();
    if defect > 1e-9 {
        return Err(Error::BeamNormalization(defect));
    }
    if xi == 0.0 {
        return Err(Error::DegenerateGeometry(
            "xi = 0 leaves pairs I and III with zero net wavevector (no transverse coupling)"
                .into(),
        ));
    }
    let k = carrier_wavenumber;
    let delta_k = [
        [2.0 * xi * k, 0.0, 0.0],
        [0.0, 0.0, 2.0 * chi * k],
        [0.0, 2.0 * xi * k, 0.0],
    ];
    // Individual beam n = (xi, xi, chi); global beams flip one component.
    let cos_i = chi * chi;
    let cos_ii = 2.0 * xi * xi - chi * chi;
    let angles_deg = [
        cos_i.clamp(-1.0, 1.0).acos().to_degrees(),
        cos_ii.clamp(-1.0, 1.0).acos().to_degrees(),
        cos_i.clamp(-1.0, 1.0).acos().to_degrees(),
    ];
    Ok(BeamGeometry {
        xi,
        chi,
        carrier_wavenumber,
        delta_k,
        angles_deg,
    })
}
