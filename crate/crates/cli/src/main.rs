//! Command-line front end: wire configs to the library modules and emit
//! plot-ready CSV/JSON artifacts.
//!
//! Exit codes: 0 on success, 2 when a design is infeasible or a validity
//! constraint is violated (artifacts are still written), 1 on any other
//! error.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spinforge::coupling::{DriveSetup, LaserDrive};
use spinforge::design::{
    design_target, ensemble_offsets, schwinger_xx_ensemble, DesignScheme, TargetDesign,
    ENSEMBLE_MAX_KHZ, ENSEMBLE_MIN_KHZ,
};
use spinforge::dynamics::{
    ensemble_band, vpa_series, AdaptiveRkPropagator, EigenPropagator, Propagator,
    PropagatorRegistry, SpinState, EIGEN_MAX_SPINS,
};
use spinforge::io::{
    self, ArtifactMeta, ConstraintReportFile, FitReportFile, LaserDriveFile, TargetHamiltonianFile,
    TrapConfigFile,
};
use spinforge::ion_chain::{beam_geometry_from_chi, Branch, TrapConfig};
use spinforge::magnus::{contribution_report, first_order_bound, FIRST_ORDER_SAMPLES};
use spinforge::optimizer::{check_constraints, ConstraintThresholds, FitConstraints};
use spinforge::raman::{
    optimal_detuning, raman_rabi_rates, raman_rabi_sum, spontaneous_emission_rate,
    stark_shift_difference, Polarization, Populations, QubitState, RamanSetting,
};
use spinforge::target::{TargetHamiltonian, TargetRegistry};
use spinforge::units;

#[derive(Parser)]
#[command(
    name = "spinforge",
    version,
    about = "Design and validate engineered spin Hamiltonians on trapped-ion chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute normal modes and export them as CSV.
    Modes(ModesArgs),
    /// Solve the inverse problem: drives realizing a target Hamiltonian.
    Design(DesignArgs),
    /// Evaluate the evolution-exponent contributions and validity checks of a design.
    Validate(ValidateArgs),
    /// Evolve a target Hamiltonian and emit vacuum-persistence series.
    Evolve(EvolveArgs),
    /// Polarization/detuning report for the spin-dependent force.
    Raman(RamanArgs),
    /// Bundle design checks and a quick evolution into one summary.
    Report(ReportArgs),
}

#[derive(Args, Clone, Serialize)]
struct ChainArgs {
    /// Trap description JSON; built-in Yb-chain defaults when omitted.
    #[arg(long)]
    trap: Option<PathBuf>,
    /// Ion count for the built-in trap.
    #[arg(long, alias = "N", default_value_t = 4)]
    n: usize,
    /// Axial projection chi of the beam geometry.
    #[arg(long, default_value_t = 0.1767)]
    chi: f64,
    /// Raman carrier wavelength [nm].
    #[arg(long, default_value_t = 355.0)]
    wavelength_nm: f64,
    /// Transverse mode set CSV overriding the computed one.
    #[arg(long)]
    transverse_csv: Option<PathBuf>,
    /// Axial mode set CSV overriding the computed one.
    #[arg(long)]
    axial_csv: Option<PathBuf>,
}

impl ChainArgs {
    fn trap_config(&self) -> spinforge::Result<TrapConfig> {
        match &self.trap {
            Some(path) => io::read_json::<TrapConfigFile>(path)?.to_trap(),
            None => TrapConfig::new(
                self.n,
                4.1351e6,
                0.713e6,
                units::YB171_AMU * units::AMU,
                spinforge::ion_chain::ChainModel::Harmonic,
            ),
        }
    }

    fn setup(&self) -> spinforge::Result<DriveSetup> {
        let trap = self.trap_config()?;
        let geometry = beam_geometry_from_chi(self.chi, TAU / (self.wavelength_nm * 1e-9))?;
        let mut setup = DriveSetup::new(&trap, &geometry)?;
        if let Some(path) = &self.transverse_csv {
            setup.transverse = io::modes_from_csv(&read_text(path)?, Branch::Transverse)?;
        }
        if let Some(path) = &self.axial_csv {
            setup.axial = io::modes_from_csv(&read_text(path)?, Branch::Axial)?;
        }
        Ok(setup)
    }
}

fn read_text(path: &Path) -> spinforge::Result<String> {
    std::fs::read_to_string(path).map_err(|e| spinforge::Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[derive(Args, Clone, Serialize)]
struct TargetArgs {
    /// Target model name (see the registry: schwinger, xy2d, z2-ising).
    #[arg(long, default_value = "schwinger")]
    target: String,
    /// Hopping strength x (schwinger).
    #[arg(long, default_value_t = 6.0)]
    x: f64,
    /// Staggered mass mu (schwinger).
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    mu: f64,
    /// Background flux (schwinger).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    epsilon0: f64,
    /// Lattice extents (xy2d).
    #[arg(long, default_value_t = 4)]
    lx: usize,
    #[arg(long, default_value_t = 4)]
    ly: usize,
    /// Hopping scale h (xy2d).
    #[arg(long, default_value_t = 1.0)]
    hopping: f64,
    /// Site-lattice side L (z2-ising; spins live on the (L-1)^2 dual grid).
    #[arg(long, default_value_t = 5)]
    l: usize,
    /// Transverse-field strength lambda (z2-ising).
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    lambda: f64,
    /// 2D -> 1D linearization (xy2d, z2-ising).
    #[arg(long, default_value = "row_major")]
    ordering: String,
}

impl TargetArgs {
    fn build(&self, n_ions: usize) -> spinforge::Result<TargetHamiltonian> {
        let registry = TargetRegistry::builtin();
        let params = match self.target.as_str() {
            "xy2d" => serde_json::json!({
                "lx": self.lx,
                "ly": self.ly,
                "hopping": self.hopping,
                "ordering": self.ordering,
            }),
            "z2-ising" => serde_json::json!({
                "l": self.l,
                "lambda": self.lambda,
                "ordering": self.ordering,
            }),
            // Default to the Schwinger parameter set; unknown names fall
            // through to the registry for a listing of valid choices.
            _ => serde_json::json!({
                "n_sites": n_ions,
                "x": self.x,
                "mu": self.mu,
                "epsilon0": self.epsilon0,
            }),
        };
        registry.build(&self.target, &params)
    }
}

fn out_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os("SPINFORGE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

#[derive(Args, Serialize)]
struct ModesArgs {
    #[command(flatten)]
    chain: ChainArgs,
    /// Branch to export: transverse, axial, or both.
    #[arg(long, default_value = "both")]
    branch: String,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct DesignArgs {
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    model: TargetArgs,
    /// Beatnote scheme: single (one tone per pair) or multi (comb).
    #[arg(long, default_value = "multi")]
    scheme: String,
    /// Comb offset fraction f_s of the local mode spacing (multi scheme).
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    fs: f64,
    /// Single-scheme offsets from the anchor modes [kHz].
    #[arg(long, default_value_t = -830.0, allow_hyphen_values = true)]
    offset_xx_khz: f64,
    #[arg(long, default_value_t = 3160.0, allow_hyphen_values = true)]
    offset_yy_khz: f64,
    #[arg(long, default_value_t = 100.0, allow_hyphen_values = true)]
    offset_zz_khz: f64,
    /// Physical energy per model unit [Hz].
    #[arg(long, default_value_t = 5.0)]
    unit_hz: f64,
    /// Per-ion sum of Rabi magnitudes [MHz].
    #[arg(long, default_value_t = 2.0)]
    budget_mhz: f64,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ValidateArgs {
    /// Design bundle produced by `design`.
    #[arg(long)]
    design: PathBuf,
    /// Evaluation window for the contribution panels [ms].
    #[arg(long, default_value_t = 1.0)]
    tmax_ms: f64,
    /// Number of samples across the window.
    #[arg(long, default_value_t = 120)]
    steps: usize,
    /// Random sample times of the first-order bound.
    #[arg(long, default_value_t = FIRST_ORDER_SAMPLES)]
    bound_samples: usize,
    #[arg(long, default_value_t = 11)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
enum PropagatorChoice {
    Auto,
    Eigen,
    Rk45,
}

#[derive(Args, Serialize)]
struct EvolveArgs {
    #[command(flatten)]
    chain: ChainArgs,
    #[command(flatten)]
    model: TargetArgs,
    /// Initial state: "staggered-vacuum", a basis index "index:K", or a JSON
    /// amplitude file "file:PATH" with [re, im] pairs.
    #[arg(long, default_value = "staggered-vacuum")]
    state: String,
    /// Final time in model units (1 / model energy unit).
    #[arg(long, default_value_t = 100.0)]
    tmax: f64,
    /// Number of steps; the grid has steps + 1 points including t = 0.
    #[arg(long, default_value_t = 200)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = PropagatorChoice::Auto)]
    propagator: PropagatorChoice,
    /// Evolve an ensemble of this many inexact-coupling Hamiltonians.
    #[arg(long, default_value_t = 0)]
    ensemble: usize,
    /// Beyond-nearest-neighbor filter threshold (model units squared).
    #[arg(long, default_value_t = 1e-4)]
    threshold: f64,
    /// Calibration offset range generating the ensemble [kHz].
    #[arg(long, default_value_t = ENSEMBLE_MIN_KHZ)]
    ensemble_min_khz: f64,
    #[arg(long, default_value_t = ENSEMBLE_MAX_KHZ)]
    ensemble_max_khz: f64,
    #[arg(long, default_value_t = 13)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct RamanArgs {
    /// Detuning as a fraction of the fine-structure splitting.
    #[arg(long, default_value_t = std::f64::consts::SQRT_2 - 1.0, allow_hyphen_values = true)]
    delta_ratio: f64,
    /// Red-beam polarization "minus,pi,plus"; balanced direction when omitted.
    #[arg(long)]
    pol_r: Option<String>,
    /// Blue-beam polarization "minus,pi,plus".
    #[arg(long)]
    pol_b: Option<String>,
    #[arg(long, default_value_t = 17)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ReportArgs {
    #[arg(long)]
    design: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    tmax_ms: f64,
    #[arg(long, default_value_t = 19)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

/// Bundle tying a design run together; the input of `validate` and `report`.
#[derive(Serialize, serde::Deserialize)]
struct DesignBundle {
    meta: ArtifactMeta,
    trap: TrapConfigFile,
    chi: f64,
    wavelength_nm: f64,
    unit_hz: f64,
    target_name: String,
    target: TargetHamiltonianFile,
    bz_hz: Vec<f64>,
    drives: Vec<LaserDriveFile>,
    reports: Vec<FitReportFile>,
    shift_to_detuning_ratio: f64,
}

fn main() -> ExitCode {
    // Usage problems exit 1; code 2 is reserved for constraint violations.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            e.exit()
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Modes(args) => run_modes(args),
        Command::Design(args) => run_design(args),
        Command::Validate(args) => run_validate(args),
        Command::Evolve(args) => run_evolve(args),
        Command::Raman(args) => run_raman(args),
        Command::Report(args) => run_report(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(spinforge::Error::Infeasible {
            restarts,
            best_residual,
        }) => {
            eprintln!(
                "infeasible: no drive satisfies the constraints after {restarts} restarts (best residual {best_residual:.3e} rad/s)"
            );
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(1)
        }
    }
}

fn meta_for<T: Serialize>(config: &T, seed: u64) -> ArtifactMeta {
    let canonical = serde_json::to_vec(config).unwrap_or_default();
    ArtifactMeta::new(&canonical, seed)
}

fn run_modes(args: ModesArgs) -> spinforge::Result<u8> {
    let setup = args.chain.setup()?;
    let meta = meta_for(&args, 0);
    let dir = out_dir(&args.out);
    let branches: Vec<Branch> = match args.branch.as_str() {
        "transverse" => vec![Branch::Transverse],
        "axial" => vec![Branch::Axial],
        "both" => vec![Branch::Transverse, Branch::Axial],
        other => {
            return Err(spinforge::Error::Config(format!(
                "unknown branch \"{other}\" (transverse | axial | both)"
            )))
        }
    };
    for branch in branches {
        let modes = match branch {
            Branch::Transverse => &setup.transverse,
            Branch::Axial => &setup.axial,
        };
        let path = dir.join(format!("modes_{}.csv", branch.as_str()));
        io::write_text(&path, &io::modes_to_csv(&meta, modes))?;
        println!(
            "{}: {} modes, top {:.6} MHz, bottom {:.6} MHz -> {}",
            branch.as_str(),
            modes.frequencies.len(),
            units::angular_to_hz(modes.frequencies[0]) / 1e6,
            units::angular_to_hz(*modes.frequencies.last().unwrap()) / 1e6,
            path.display()
        );
    }
    Ok(0)
}

fn write_design_artifacts(
    dir: &Path,
    meta: &ArtifactMeta,
    bundle: &DesignBundle,
    target: &TargetHamiltonian,
    design: &TargetDesign,
) -> spinforge::Result<()> {
    io::write_json(&dir.join("design.json"), bundle)?;
    for (name, drive) in ["drive_i", "drive_ii", "drive_iii"]
        .iter()
        .zip(&design.drives)
    {
        io::write_json(
            &dir.join(format!("{name}.json")),
            &LaserDriveFile::from_drive(drive),
        )?;
    }
    for (name, report) in ["fit_xx", "fit_yy", "fit_zz"].iter().zip(&design.reports) {
        io::write_json(
            &dir.join(format!("{name}.json")),
            &FitReportFile::from_report(report),
        )?;
    }
    io::write_json(
        &dir.join("target.json"),
        &TargetHamiltonianFile::from_hamiltonian(target),
    )?;
    for (label, m) in [
        ("jxx", &target.jxx),
        ("jyy", &target.jyy),
        ("jzz", &target.jzz),
    ] {
        io::write_text(
            &dir.join(format!("target_{label}.csv")),
            &io::matrix_to_csv(meta, label, m),
        )?;
    }
    Ok(())
}

fn run_design(args: DesignArgs) -> spinforge::Result<u8> {
    let setup = args.chain.setup()?;
    let target = args.model.build(setup.n_ions())?;
    let scheme = match args.scheme.as_str() {
        "multi" => DesignScheme::Multi { f_s: args.fs },
        "single" => DesignScheme::Single {
            offset_xx: units::hz_to_angular(args.offset_xx_khz * 1e3),
            offset_yy: units::hz_to_angular(args.offset_yy_khz * 1e3),
            offset_zz: units::hz_to_angular(args.offset_zz_khz * 1e3),
        },
        other => {
            return Err(spinforge::Error::Config(format!(
                "unknown scheme \"{other}\" (single | multi)"
            )))
        }
    };
    let constraints = FitConstraints {
        budget: units::hz_to_angular(args.budget_mhz * 1e6),
        restarts: args.restarts,
        seed: args.seed,
    };
    let unit = units::hz_to_angular(args.unit_hz);
    let design = design_target(&setup, &target, unit, &scheme, &constraints)?;
    let meta = meta_for(&args, args.seed);

    let bundle = DesignBundle {
        meta: meta.clone(),
        trap: TrapConfigFile::from_trap(&setup.trap),
        chi: args.chain.chi,
        wavelength_nm: args.chain.wavelength_nm,
        unit_hz: args.unit_hz,
        target_name: args.model.target.clone(),
        target: TargetHamiltonianFile::from_hamiltonian(&target),
        bz_hz: design.bz.iter().map(|&b| units::angular_to_hz(b)).collect(),
        drives: design
            .drives
            .iter()
            .map(LaserDriveFile::from_drive)
            .collect(),
        reports: design
            .reports
            .iter()
            .map(FitReportFile::from_report)
            .collect(),
        shift_to_detuning_ratio: design
            .shifts
            .iter()
            .map(|s| s.shift_to_detuning_ratio)
            .fold(0.0, f64::max),
    };
    let dir = out_dir(&args.out);
    write_design_artifacts(&dir, &meta, &bundle, &target, &design)?;

    if target.bx.amax() > 0.0 {
        println!(
            "note: the transverse field (max {:.3} model units) is applied through carrier rotations, not a sideband drive",
            target.bx.amax()
        );
    }
    for (label, report) in ["xx", "yy", "zz"].iter().zip(&design.reports) {
        let scale = report.achieved.amax().max(f64::MIN_POSITIVE);
        println!(
            "J{label}: residual {:.3e} Hz ({:.1e} relative), worst ion budget {:.1} kHz",
            units::angular_to_hz(report.max_abs_residual),
            report.max_abs_residual / scale,
            report
                .rabi_budget_per_ion
                .iter()
                .cloned()
                .fold(0.0, f64::max)
                / TAU
                / 1e3,
        );
    }
    println!("design written to {}", dir.display());
    Ok(0)
}

fn load_bundle(path: &Path) -> spinforge::Result<(DesignBundle, DriveSetup, Vec<LaserDrive>)> {
    let bundle: DesignBundle = io::read_json(path)?;
    let trap = bundle.trap.to_trap()?;
    let geometry = beam_geometry_from_chi(bundle.chi, TAU / (bundle.wavelength_nm * 1e-9))?;
    let setup = DriveSetup::new(&trap, &geometry)?;
    let drives: Vec<LaserDrive> = bundle
        .drives
        .iter()
        .map(|d| d.to_drive())
        .collect::<spinforge::Result<_>>()?;
    if drives.len() != 3 {
        return Err(spinforge::Error::Config(
            "design bundle must carry three drives".into(),
        ));
    }
    Ok((bundle, setup, drives))
}

fn run_validate(args: ValidateArgs) -> spinforge::Result<u8> {
    let (bundle, setup, drives) = load_bundle(&args.design)?;
    let bz = nalgebra::DVector::from_iterator(
        bundle.bz_hz.len(),
        bundle.bz_hz.iter().map(|&f| units::hz_to_angular(f)),
    );
    let meta = meta_for(&args, args.seed);
    let dir = out_dir(&args.out);

    let drive_refs = [&drives[0], &drives[1], &drives[2]];
    let steps = args.steps.max(1);
    let times: Vec<f64> = (0..=steps)
        .map(|k| k as f64 * args.tmax_ms * 1e-3 / steps as f64)
        .collect();
    let report = contribution_report(&setup, drive_refs, &bz, &times)?;
    io::write_text(&dir.join("panels.csv"), &io::panels_to_csv(&meta, &report))?;

    let constraints = check_constraints(
        &setup,
        &[&drives[0], &drives[1], &drives[2]],
        &bz,
        ConstraintThresholds::default(),
    );
    io::write_json(
        &dir.join("constraints.json"),
        &ConstraintReportFile::from_report(&constraints),
    )?;

    let bound = first_order_bound(
        &setup,
        drive_refs,
        &bz,
        args.tmax_ms * 1e-3,
        args.bound_samples,
        args.seed,
    )?;
    #[derive(Serialize)]
    struct BoundFile {
        schema_version: u32,
        max_abs: f64,
        limit: f64,
        ok: bool,
        seed: u64,
        n_times: usize,
    }
    io::write_json(
        &dir.join("first_order_bound.json"),
        &BoundFile {
            schema_version: io::SCHEMA_VERSION,
            max_abs: bound.max_abs,
            limit: bound.limit,
            ok: bound.ok(),
            seed: bound.seed,
            n_times: bound.times.len(),
        },
    )?;

    println!(
        "constraints {}; worst sideband {:.3e}; first-order amplitude {:.3e} (limit {})",
        if constraints.passed() {
            "passed"
        } else {
            "VIOLATED"
        },
        constraints.worst_sideband(),
        bound.max_abs,
        bound.limit
    );
    println!("validation artifacts in {}", dir.display());
    Ok(if constraints.passed() && bound.ok() {
        0
    } else {
        2
    })
}

fn parse_state(spec: &str, n: usize) -> spinforge::Result<SpinState> {
    if spec == "staggered-vacuum" {
        return Ok(SpinState::staggered_vacuum(n));
    }
    if let Some(k) = spec.strip_prefix("index:") {
        let index: usize = k
            .parse()
            .map_err(|_| spinforge::Error::Config(format!("bad basis index \"{k}\"")))?;
        return SpinState::basis_state(n, index);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let pairs: Vec<[f64; 2]> = io::read_json(Path::new(path))?;
        let amplitudes = nalgebra::DVector::from_iterator(
            pairs.len(),
            pairs
                .iter()
                .map(|p| num_complex::Complex64::new(p[0], p[1])),
        );
        return SpinState::new(n, amplitudes);
    }
    Err(spinforge::Error::Config(format!(
        "unknown state \"{spec}\" (staggered-vacuum | index:K | file:PATH)"
    )))
}

fn run_evolve(args: EvolveArgs) -> spinforge::Result<u8> {
    let setup = args.chain.setup()?;
    let target = args.model.build(setup.n_ions())?;
    let psi0 = parse_state(&args.state, target.n_spins)?;
    let times: Vec<f64> = if args.tmax <= 0.0 {
        vec![0.0]
    } else {
        let steps = args.steps.max(1);
        (0..=steps)
            .map(|k| k as f64 * args.tmax / steps as f64)
            .collect()
    };
    let registry = PropagatorRegistry::builtin();
    let propagator: &dyn Propagator = match args.propagator {
        PropagatorChoice::Eigen => registry.get("eigen")?,
        PropagatorChoice::Rk45 => registry.get("rk45")?,
        PropagatorChoice::Auto => {
            if target.n_spins <= EIGEN_MAX_SPINS {
                registry.get("eigen")?
            } else {
                registry.get("rk45")?
            }
        }
    };

    let meta = meta_for(&args, args.seed);
    let dir = out_dir(&args.out);
    let states = propagator.evolve(&target, &psi0, &times)?;
    let vpa = vpa_series(&psi0, &states, &times)?;
    io::write_text(
        &dir.join("vpa.csv"),
        &io::vpa_to_csv(&meta, "t", &times, &vpa.values),
    )?;
    println!(
        "vpa: {} samples, final value {:.6} -> {}",
        vpa.values.len(),
        vpa.values.last().unwrap(),
        dir.join("vpa.csv").display()
    );

    if args.ensemble > 0 {
        if args.model.target != "schwinger" {
            return Err(spinforge::Error::Config(
                "ensemble evolution is defined for the schwinger target".into(),
            ));
        }
        let params = spinforge::target::SchwingerParams {
            n_sites: setup.n_ions(),
            x: args.model.x,
            mu: args.model.mu,
            epsilon0: args.model.epsilon0,
        };
        let offsets = ensemble_offsets(args.ensemble, args.ensemble_min_khz, args.ensemble_max_khz);
        let family = schwinger_xx_ensemble(&setup, &params, units::hz_to_angular(5.0), &offsets)?;
        let band = ensemble_band(&family, args.threshold, &psi0, &times, propagator)?;
        io::write_text(&dir.join("band.csv"), &io::band_to_csv(&meta, "t", &band))?;
        println!(
            "band: {} of {} members retained, final width {:.3e}",
            band.retained.len(),
            family.len(),
            band.width(times.len() - 1)
        );
    }
    Ok(0)
}

fn parse_polarization(
    spec: &Option<String>,
    fallback: Polarization,
) -> spinforge::Result<Polarization> {
    match spec {
        None => Ok(fallback),
        Some(text) => {
            let parts: Vec<f64> = text
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| {
                    spinforge::Error::Config(format!("bad polarization \"{text}\": {e}"))
                })?;
            if parts.len() != 3 {
                return Err(spinforge::Error::Config(
                    "polarization needs three components \"minus,pi,plus\"".into(),
                ));
            }
            Polarization::from_reals(parts[0], parts[1], parts[2])
        }
    }
}

fn run_raman(args: RamanArgs) -> spinforge::Result<u8> {
    let pol_r = parse_polarization(&args.pol_r, Polarization::balanced_red())?;
    let pol_b = parse_polarization(&args.pol_b, Polarization::balanced_blue())?;
    let omega_f = 1.0;
    let setting = RamanSetting::new(args.delta_ratio * omega_f, omega_f)?;

    let shift = stark_shift_difference(&pol_r, &pol_b, &setting)?;
    let emission = spontaneous_emission_rate(&pol_r, &pol_b, &setting, Populations::default())?;
    let rates = raman_rabi_rates(&pol_r, &pol_b, &setting)?;
    let sum_up = raman_rabi_sum(&pol_r, &pol_b, &setting, QubitState::Up)?;
    let sum_down = raman_rabi_sum(&pol_r, &pol_b, &setting, QubitState::Down)?;
    let best = optimal_detuning(&pol_r, &pol_b, omega_f)?;

    #[derive(Serialize)]
    struct RamanReport {
        schema_version: u32,
        meta: ArtifactMeta,
        delta_over_omega_f: f64,
        stark_shift_difference: f64,
        spontaneous_emission_rate: f64,
        rabi_up: [f64; 2],
        rabi_down: [f64; 2],
        force_balanced: bool,
        sum_rabi_up: [f64; 2],
        sum_rabi_down: [f64; 2],
        optimal_detuning_over_omega_f: f64,
    }
    let meta = meta_for(&args, args.seed);
    let report = RamanReport {
        schema_version: io::SCHEMA_VERSION,
        meta,
        delta_over_omega_f: args.delta_ratio,
        stark_shift_difference: shift,
        spontaneous_emission_rate: emission,
        rabi_up: [rates.up.re, rates.up.im],
        rabi_down: [rates.down.re, rates.down.im],
        force_balanced: rates.force_balanced,
        sum_rabi_up: [sum_up.re, sum_up.im],
        sum_rabi_down: [sum_down.re, sum_down.im],
        optimal_detuning_over_omega_f: best,
    };
    let dir = out_dir(&args.out);
    io::write_json(&dir.join("raman.json"), &report)?;
    println!(
        "stark diff {shift:.3e}, emission {emission:.3e}, force balanced: {}, optimal detuning {best:.6} omega_F",
        rates.force_balanced
    );
    Ok(0)
}

fn run_report(args: ReportArgs) -> spinforge::Result<u8> {
    let (bundle, setup, drives) = load_bundle(&args.design)?;
    let bz = nalgebra::DVector::from_iterator(
        bundle.bz_hz.len(),
        bundle.bz_hz.iter().map(|&f| units::hz_to_angular(f)),
    );
    let constraints = check_constraints(
        &setup,
        &[&drives[0], &drives[1], &drives[2]],
        &bz,
        ConstraintThresholds::default(),
    );
    let bound = first_order_bound(
        &setup,
        [&drives[0], &drives[1], &drives[2]],
        &bz,
        args.tmax_ms * 1e-3,
        FIRST_ORDER_SAMPLES,
        args.seed,
    )?;

    let target = bundle.target.to_hamiltonian()?;
    let psi0 = SpinState::staggered_vacuum(target.n_spins);
    let times: Vec<f64> = (0..=50).map(|k| k as f64 * 2.0).collect();
    let states = if target.n_spins <= EIGEN_MAX_SPINS {
        EigenPropagator.evolve(&target, &psi0, &times)?
    } else {
        AdaptiveRkPropagator::default().evolve(&target, &psi0, &times)?
    };
    let vpa = vpa_series(&psi0, &states, &times)?;

    #[derive(Serialize)]
    struct Summary {
        schema_version: u32,
        meta: ArtifactMeta,
        target_name: String,
        fit_max_residual_hz: f64,
        constraints_passed: bool,
        worst_sideband: f64,
        first_order_max: f64,
        first_order_ok: bool,
        vpa_final: f64,
        vpa_min: f64,
    }
    let meta = meta_for(&args, args.seed);
    let summary = Summary {
        schema_version: io::SCHEMA_VERSION,
        meta,
        target_name: bundle.target_name.clone(),
        fit_max_residual_hz: bundle
            .reports
            .iter()
            .map(|r| r.max_abs_residual_hz)
            .fold(0.0, f64::max),
        constraints_passed: constraints.passed(),
        worst_sideband: constraints.worst_sideband(),
        first_order_max: bound.max_abs,
        first_order_ok: bound.ok(),
        vpa_final: *vpa.values.last().unwrap(),
        vpa_min: vpa.values.iter().cloned().fold(f64::MAX, f64::min),
    };
    let dir = out_dir(&args.out);
    io::write_json(&dir.join("summary.json"), &summary)?;
    println!("summary written to {}", dir.join("summary.json").display());
    Ok(if summary.constraints_passed && summary.first_order_ok {
        0
    } else {
        2
    })
}
