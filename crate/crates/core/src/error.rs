//! Crate error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid trap configuration: {0}")]
    InvalidTrap(String),

    #[error("equilibrium solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    EquilibriumDiverged { iterations: usize, residual: f64 },

    #[error("unstable chain: mode {mode} of the {branch} branch has non-positive squared frequency {lambda:.6e}")]
    UnstableChain {
        branch: &'static str,
        mode: usize,
        lambda: f64,
    },

    #[error("beam geometry violates 2*xi^2 + chi^2 = 1 by {0:.3e}")]
    BeamNormalization(f64),

    #[error("degenerate beam geometry: {0}")]
    DegenerateGeometry(String),

    #[error("zero mode frequency in Lamb-Dicke evaluation (mode {0})")]
    ZeroModeFrequency(usize),

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("beatnote {beatnote_hz:.6} Hz is resonant with mode {mode} at {mode_hz:.6} Hz (|detuning| < {tolerance_hz:.3} Hz)")]
    ResonantBeatnote {
        beatnote_hz: f64,
        mode: usize,
        mode_hz: f64,
        tolerance_hz: f64,
    },

    #[error("drive/mode branch mismatch: {0}")]
    BranchMismatch(String),

    #[error("pair III carries no spin-flip term; detuning shifts apply to pairs I and II only")]
    ShiftOnPairIii,

    #[error(
        "identity Pauli weight alpha0 = {0} would induce a bias field; pass allow_bias to override"
    )]
    BiasWeight(f64),

    #[error("calibration diverged after {iterations} iterations; last max spread {spread:.3e}")]
    CalibrationDiverged { iterations: usize, spread: f64 },

    #[error(
        "no feasible drive found after {restarts} restarts; best residual {best_residual:.6e}"
    )]
    Infeasible { restarts: usize, best_residual: f64 },

    #[error("dimension overflow: {n_spins} spins need a 2^{n_spins} state vector; reduce the spin count to at most {max}")]
    DimensionOverflow { n_spins: usize, max: usize },

    #[error("state/Hamiltonian dimension mismatch: state has {state} amplitudes, operator acts on {expected}")]
    DimensionMismatch { state: usize, expected: usize },

    #[error("empty ensemble: no Hamiltonian satisfies the filter threshold {threshold:.3e}")]
    EmptyEnsemble { threshold: f64 },

    #[error("argument {name} = {value} is not an integer or half-integer")]
    NotHalfInteger { name: &'static str, value: f64 },

    #[error("half-integer parity mismatch: {0}")]
    ParityMismatch(String),

    #[error("detuning {delta:.6e} rad/s sits on a pole of the Raman response (0 or omega_F = {omega_f:.6e})")]
    RamanPole { delta: f64, omega_f: f64 },

    #[error("unknown {kind} \"{name}\"; available: {available}")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("JSON error at {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("I/O error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
