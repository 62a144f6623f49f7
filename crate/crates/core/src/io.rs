//! File formats: JSON schemas for configs and reports, CSV writers for
//! plot-ready series, and deterministic artifact metadata.
//!
//! Frequencies in files are plain Hz (or kHz where named); conversion to
//! angular rad/s happens here, at the parse boundary, and nowhere else.
//! CSV uses '.' decimals, comma delimiters, one header row, and floats pinned
//! to 17 significant digits so identical runs produce byte-identical files.

use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::coupling::{LaserDrive, PairLabel};
use crate::dynamics::EnsembleBand;
use crate::ion_chain::{ChainModel, NormalModeSet, TrapConfig};
use crate::magnus::ContributionReport;
use crate::optimizer::{ConstraintReport, FitReport};
use crate::target::TargetHamiltonian;
use crate::units;
use crate::{Error, Result};

/// Schema version stamped into every artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Float formatting pinned to 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// FNV-1a 64-bit hash, used to fingerprint configurations.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Provenance header embedded in every artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl ArtifactMeta {
    pub fn new(config_bytes: &[u8], seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: format!("{:016x}", fnv1a(config_bytes)),
            seed,
        }
    }

    /// Comment line for CSV artifacts.
    pub fn csv_header(&self) -> String {
        format!(
            "# schema_version={} tool_version={} config_hash={} seed={}",
            self.schema_version, self.tool_version, self.config_hash, self.seed
        )
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn json_err(path: &Path, source: serde_json::Error) -> Error {
    Error::Json {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| json_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| json_err(path, e))?;
    write_text(path, &(text + "\n"))
}

/// On-disk trap description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrapConfigFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub n_ions: usize,
    pub nu_transverse_hz: f64,
    pub nu_axial_hz: f64,
    pub ion_mass_amu: f64,
    pub chain_model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing_um: Option<f64>,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

impl TrapConfigFile {
    pub fn to_trap(&self) -> Result<TrapConfig> {
        let chain_model = match self.chain_model.as_str() {
            "harmonic" => ChainModel::Harmonic,
            "equispaced" => {
                let spacing = self.spacing_um.ok_or_else(|| {
                    Error::Config("equispaced chain_model needs spacing_um".into())
                })?;
                ChainModel::Equispaced {
                    spacing: spacing * 1e-6,
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown chain_model \"{other}\" (harmonic | equispaced)"
                )))
            }
        };
        TrapConfig::new(
            self.n_ions,
            self.nu_transverse_hz,
            self.nu_axial_hz,
            self.ion_mass_amu * units::AMU,
            chain_model,
        )
    }

    pub fn from_trap(trap: &TrapConfig) -> Self {
        let (chain_model, spacing_um) = match trap.chain_model {
            ChainModel::Harmonic => ("harmonic".to_string(), None),
            ChainModel::Equispaced { spacing } => ("equispaced".to_string(), Some(spacing * 1e6)),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            n_ions: trap.n_ions,
            nu_transverse_hz: trap.nu_transverse_hz,
            nu_axial_hz: trap.nu_axial_hz,
            ion_mass_amu: trap.ion_mass / units::AMU,
            chain_model,
            spacing_um,
        }
    }
}

/// On-disk drive description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaserDriveFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub pair: String,
    pub beatnotes_hz: Vec<f64>,
    /// Row per beatnote, column per ion.
    pub rabi_khz: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_flips: Option<Vec<Vec<f64>>>,
    /// Per-ion (dphi, dphi') of the red/blue tones [rad].
    pub phases: Vec<(f64, f64)>,
    pub pauli_weights: [f64; 4],
    #[serde(default)]
    pub allow_bias: bool,
}

fn matrix_to_rows(m: &DMatrix<f64>, scale: f64) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)] * scale).collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<f64>], scale: f64) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c] * scale))
}

impl LaserDriveFile {
    pub fn to_drive(&self) -> Result<LaserDrive> {
        let pair = match self.pair.as_str() {
            "I" => PairLabel::I,
            "II" => PairLabel::II,
            "III" => PairLabel::III,
            other => {
                return Err(Error::Config(format!(
                    "unknown pair \"{other}\" (I | II | III)"
                )))
            }
        };
        let beatnotes = self
            .beatnotes_hz
            .iter()
            .map(|&f| units::hz_to_angular(f))
            .collect();
        let rabi = rows_to_matrix(&self.rabi_khz, units::hz_to_angular(1e3))?;
        let mut drive = LaserDrive::new(pair, beatnotes, rabi)?;
        if let Some(flips) = &self.phase_flips {
            let m = rows_to_matrix(flips, 1.0)?;
            if m.shape() != drive.phase_flips.shape() {
                return Err(Error::Config("phase_flips shape mismatch".into()));
            }
            if m.iter().any(|&v| v != 1.0 && v != -1.0) {
                return Err(Error::Config("phase_flips entries must be +1 or -1".into()));
            }
            drive.phase_flips = m;
        }
        if self.phases.len() == drive.n_ions() {
            drive.phases = self.phases.clone();
        } else if !self.phases.is_empty() {
            return Err(Error::Config(
                "phases must list one (dphi, dphi') pair per ion".into(),
            ));
        }
        drive.pauli_weights = self.pauli_weights;
        drive.allow_bias = self.allow_bias;
        Ok(drive)
    }

    pub fn from_drive(drive: &LaserDrive) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            pair: drive.pair.as_str().to_string(),
            beatnotes_hz: drive
                .beatnotes
                .iter()
                .map(|&w| units::angular_to_hz(w))
                .collect(),
            rabi_khz: matrix_to_rows(&drive.rabi, 1.0 / units::hz_to_angular(1e3)),
            phase_flips: Some(matrix_to_rows(&drive.phase_flips, 1.0)),
            phases: drive.phases.clone(),
            pauli_weights: drive.pauli_weights,
            allow_bias: drive.allow_bias,
        }
    }
}

/// On-disk target Hamiltonian (matrices row-major, model units).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetHamiltonianFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub n_spins: usize,
    pub jxx: Vec<f64>,
    pub jyy: Vec<f64>,
    pub jzz: Vec<f64>,
    pub bz: Vec<f64>,
    pub bx: Vec<f64>,
}

fn flat(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows())
        .flat_map(|r| (0..m.ncols()).map(move |c| m[(r, c)]))
        .collect()
}

fn unflat(v: &[f64], n: usize) -> Result<DMatrix<f64>> {
    if v.len() != n * n {
        return Err(Error::Config(format!(
            "matrix needs {} entries, got {}",
            n * n,
            v.len()
        )));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| v[r * n + c]))
}

impl TargetHamiltonianFile {
    pub fn to_hamiltonian(&self) -> Result<TargetHamiltonian> {
        let n = self.n_spins;
        if self.bz.len() != n || self.bx.len() != n {
            return Err(Error::Config(
                "field vectors must have n_spins entries".into(),
            ));
        }
        let h = TargetHamiltonian {
            n_spins: n,
            jxx: unflat(&self.jxx, n)?,
            jyy: unflat(&self.jyy, n)?,
            jzz: unflat(&self.jzz, n)?,
            bz: DVector::from_vec(self.bz.clone()),
            bx: DVector::from_vec(self.bx.clone()),
        };
        h.validate()?;
        Ok(h)
    }

    pub fn from_hamiltonian(h: &TargetHamiltonian) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n_spins: h.n_spins,
            jxx: flat(&h.jxx),
            jyy: flat(&h.jyy),
            jzz: flat(&h.jzz),
            bz: h.bz.iter().copied().collect(),
            bx: h.bx.iter().copied().collect(),
        }
    }
}

/// Coupling-matrix CSV: one row per ion, comma-separated columns.
pub fn matrix_to_csv(meta: &ArtifactMeta, label: &str, m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    out.push_str(&meta.csv_header());
    out.push('\n');
    let cols: Vec<String> = (1..=m.ncols()).map(|c| format!("{label}_{c}")).collect();
    out.push_str(&cols.join(","));
    out.push('\n');
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| fmt_float(m[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Mode-set CSV: one row per mode, `frequency_hz, b_1..b_N`.
pub fn modes_to_csv(meta: &ArtifactMeta, modes: &NormalModeSet) -> String {
    let n = modes.n_ions();
    let mut out = String::new();
    out.push_str(&meta.csv_header());
    out.push('\n');
    out.push_str("frequency_hz");
    for i in 1..=n {
        out.push_str(&format!(",b_{i}"));
    }
    out.push('\n');
    for m in 0..n {
        out.push_str(&fmt_float(units::angular_to_hz(modes.frequencies[m])));
        for i in 0..n {
            out.push(',');
            out.push_str(&fmt_float(modes.eigenvectors[(m, i)]));
        }
        out.push('\n');
    }
    out
}

/// Parse a mode-set CSV produced by [`modes_to_csv`] (or hand-written with
/// the same columns) back into a [`NormalModeSet`].
pub fn modes_from_csv(text: &str, branch: crate::ion_chain::Branch) -> Result<NormalModeSet> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("frequency_hz") {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| tok.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Config(format!("bad mode CSV row \"{line}\": {e}")))?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n + 1) {
        return Err(Error::Config(format!(
            "mode CSV must be N rows of frequency_hz plus N eigenvector entries, got {n} rows"
        )));
    }
    let frequencies: Vec<f64> = rows.iter().map(|r| units::hz_to_angular(r[0])).collect();
    if frequencies.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::Config(
            "mode frequencies must be strictly descending".into(),
        ));
    }
    let eigenvectors = DMatrix::from_fn(n, n, |m, i| rows[m][i + 1]);
    let set = NormalModeSet {
        branch,
        frequencies,
        eigenvectors,
    };
    if set.orthonormality_defect() > 1e-9 {
        return Err(Error::Config("eigenvector rows are not orthonormal".into()));
    }
    Ok(set)
}

/// VPA series CSV: `t,vpa`.
pub fn vpa_to_csv(meta: &ArtifactMeta, time_label: &str, times: &[f64], values: &[f64]) -> String {
    let mut out = String::new();
    out.push_str(&meta.csv_header());
    out.push('\n');
    out.push_str(&format!("{time_label},vpa\n"));
    for (t, v) in times.iter().zip(values) {
        out.push_str(&format!("{},{}\n", fmt_float(*t), fmt_float(*v)));
    }
    out
}

/// Ensemble band CSV: `t,central,lower,upper`.
pub fn band_to_csv(meta: &ArtifactMeta, time_label: &str, band: &EnsembleBand) -> String {
    let mut out = String::new();
    out.push_str(&meta.csv_header());
    out.push('\n');
    out.push_str(&format!("{time_label},central,lower,upper\n"));
    for k in 0..band.times.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(band.times[k]),
            fmt_float(band.central[k]),
            fmt_float(band.lower[k]),
            fmt_float(band.upper[k])
        ));
    }
    out
}

/// Contribution-report CSV: `t_ms,panel,series,re,im`.
pub fn panels_to_csv(meta: &ArtifactMeta, report: &ContributionReport) -> String {
    let mut out = String::new();
    out.push_str(&meta.csv_header());
    out.push('\n');
    out.push_str("t_ms,panel,series,re,im\n");
    for series in &report.series {
        for (t, v) in report.times.iter().zip(&series.values) {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_float(t * 1e3),
                series.panel,
                series.label,
                fmt_float(v.re),
                fmt_float(v.im)
            ));
        }
    }
    out
}

/// Serializable fit report (frequencies in Hz, amplitudes in kHz).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReportFile {
    pub schema_version: u32,
    pub max_abs_residual_hz: f64,
    pub residual_hz: Vec<f64>,
    pub achieved_hz: Vec<f64>,
    pub rabi_budget_per_ion_khz: Vec<f64>,
    pub budget_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_limit_khz: Option<f64>,
    pub contamination: f64,
    pub nearest_neighbor_spread: f64,
    pub iterations: usize,
    pub seed: u64,
    pub restart_index: usize,
}

impl FitReportFile {
    pub fn from_report(report: &FitReport) -> Self {
        let to_hz = 1.0 / units::hz_to_angular(1.0);
        Self {
            schema_version: SCHEMA_VERSION,
            max_abs_residual_hz: report.max_abs_residual * to_hz,
            residual_hz: flat(&(&report.residual * to_hz)),
            achieved_hz: flat(&(&report.achieved * to_hz)),
            rabi_budget_per_ion_khz: report
                .rabi_budget_per_ion
                .iter()
                .map(|&w| w * to_hz / 1e3)
                .collect(),
            budget_ok: report.flags.budget_ok,
            budget_limit_khz: report.flags.budget_limit.map(|b| b * to_hz / 1e3),
            contamination: report.contamination(),
            nearest_neighbor_spread: report.nearest_neighbor_spread(),
            iterations: report.iterations,
            seed: report.seed,
            restart_index: report.restart_index,
        }
    }
}

/// Serializable constraint report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintReportFile {
    pub schema_version: u32,
    pub passed: bool,
    pub bz_ratio: f64,
    pub drives: Vec<DriveConstraintFile>,
    pub thresholds: ThresholdsFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriveConstraintFile {
    pub pair: String,
    pub worst_spin_phonon: f64,
    pub worst_sideband_p2: f64,
    pub worst_sideband_p3: f64,
    pub carrier_margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdsFile {
    pub spin_phonon_max: f64,
    pub sideband_max: f64,
    pub carrier_margin_min: f64,
    pub bz_ratio_max: f64,
}

impl ConstraintReportFile {
    pub fn from_report(report: &ConstraintReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            passed: report.passed(),
            bz_ratio: report.bz_ratio,
            drives: report
                .drives
                .iter()
                .map(|d| DriveConstraintFile {
                    pair: d.pair.as_str().to_string(),
                    worst_spin_phonon: d.worst_spin_phonon,
                    worst_sideband_p2: d.worst_sideband_p2,
                    worst_sideband_p3: d.worst_sideband_p3,
                    carrier_margin: d.carrier_margin,
                })
                .collect(),
            thresholds: ThresholdsFile {
                spin_phonon_max: report.thresholds.spin_phonon_max,
                sideband_max: report.thresholds.sideband_max,
                carrier_margin_min: report.thresholds.carrier_margin_min,
                bz_ratio_max: report.thresholds.bz_ratio_max,
            },
        }
    }
}

/// Write a string artifact, creating parent directories as needed.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    let mut file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ion_chain::{normal_modes, Branch};
    use crate::units::YB171_AMU;

    fn trap_file() -> TrapConfigFile {
        TrapConfigFile {
            schema_version: 1,
            n_ions: 4,
            nu_transverse_hz: 4.1351e6,
            nu_axial_hz: 0.713e6,
            ion_mass_amu: YB171_AMU,
            chain_model: "harmonic".into(),
            spacing_um: None,
        }
    }

    #[test]
    fn trap_round_trip() {
        let trap = trap_file().to_trap().unwrap();
        let back = TrapConfigFile::from_trap(&trap);
        assert_eq!(back.n_ions, 4);
        assert!((back.ion_mass_amu - YB171_AMU).abs() < 1e-9);
        assert_eq!(back.chain_model, "harmonic");
    }

    #[test]
    fn unknown_chain_model_rejected() {
        let mut f = trap_file();
        f.chain_model = "quartic".into();
        assert!(matches!(f.to_trap(), Err(Error::Config(_))));
    }

    #[test]
    fn drive_round_trip_preserves_signs() {
        let signed = DMatrix::from_row_slice(2, 3, &[1.0e5, -2.0e5, 3.0e5, -0.5e5, 0.0, 2.5e5]);
        let drive =
            LaserDrive::from_signed(PairLabel::II, vec![1.0e6, 2.0e6], signed.clone()).unwrap();
        let file = LaserDriveFile::from_drive(&drive);
        let back = file.to_drive().unwrap();
        assert_eq!(back.pair, PairLabel::II);
        let eff_a = drive.effective_amplitudes();
        let eff_b = back.effective_amplitudes();
        for (a, b) in eff_a.iter().zip(eff_b.iter()) {
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn hamiltonian_file_round_trip() {
        let p = crate::target::SchwingerParams::new(4, 6.0, 1.0).unwrap();
        let h = crate::target::schwinger_hamiltonian(&p).unwrap();
        let file = TargetHamiltonianFile::from_hamiltonian(&h);
        let back = file.to_hamiltonian().unwrap();
        assert_eq!(back.jzz, h.jzz);
        assert_eq!(back.bz, h.bz);
    }

    #[test]
    fn modes_csv_round_trip() {
        let trap = trap_file().to_trap().unwrap();
        let modes = normal_modes(&trap, Branch::Transverse).unwrap();
        let meta = ArtifactMeta::new(b"test", 0);
        let csv = modes_to_csv(&meta, &modes);
        let back = modes_from_csv(&csv, Branch::Transverse).unwrap();
        for m in 0..4 {
            assert!((back.frequencies[m] - modes.frequencies[m]).abs() < 1e-6);
            for i in 0..4 {
                assert!((back.eigenvectors[(m, i)] - modes.eigenvectors[(m, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn artifacts_are_byte_stable() {
        let meta = ArtifactMeta::new(b"same-config", 7);
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.25, 1.25, 0.0]);
        let a = matrix_to_csv(&meta, "jxx", &m);
        let b = matrix_to_csv(&meta, "jxx", &m);
        assert_eq!(a, b);
        assert!(a.starts_with("# schema_version=1"));
        assert!(a.contains("seed=7"));
    }

    #[test]
    fn fnv_hash_is_stable() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
    }
}
