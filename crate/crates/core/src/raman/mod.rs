//! Raman-beam atomic physics for the spin-dependent force: dipole matrix
//! elements, differential Stark shift, spontaneous emission, and the
//! polarization/detuning solution that makes the force on the two qubit
//! states equal and opposite (removing the identity Pauli weight).
//!
//! The qubit is the 171Yb+ hyperfine pair up = |F=0, mF=0>, down =
//! |F=1, mF=-1> in the 2S_1/2 manifold, driven through the 2P_1/2 manifold
//! (detuning Delta) and 2P_3/2 (Delta - omega_F). The line constants c0 and
//! gamma are taken equal for both P manifolds, so every check here is
//! ratio-based.

pub mod wigner;

pub use wigner::{wigner_3j, wigner_3j_f64, wigner_6j, wigner_6j_f64, HalfInt};

use num_complex::Complex64;

use crate::{Error, Result};

/// Polarization on the spherical basis (sigma-, pi, sigma+), normalized on
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarization {
    pub minus: Complex64,
    pub pi: Complex64,
    pub plus: Complex64,
}

impl Polarization {
    pub fn new(minus: Complex64, pi: Complex64, plus: Complex64) -> Result<Self> {
        let norm = (minus.norm_sqr() + pi.norm_sqr() + plus.norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidModel(
                "polarization vector must be nonzero".into(),
            ));
        }
        Ok(Self {
            minus: minus / norm,
            pi: pi / norm,
            plus: plus / norm,
        })
    }

    pub fn from_reals(minus: f64, pi: f64, plus: f64) -> Result<Self> {
        Self::new(
            Complex64::new(minus, 0.0),
            Complex64::new(pi, 0.0),
            Complex64::new(plus, 0.0),
        )
    }

    /// Component for the spherical index q in {-1, 0, +1}.
    pub fn component(&self, q: i32) -> Complex64 {
        match q {
            -1 => self.minus,
            0 => self.pi,
            1 => self.plus,
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// The force-balancing blue-beam direction (-1, sqrt(2 + 3/sqrt(2)), 1),
    /// normalized.
    pub fn balanced_blue() -> Self {
        let mid = (2.0 + 3.0 / std::f64::consts::SQRT_2).sqrt();
        Self::from_reals(-1.0, mid, 1.0).unwrap()
    }

    /// The force-balancing red-beam direction (1, sqrt(2 + 3/sqrt(2)), 1),
    /// normalized.
    pub fn balanced_red() -> Self {
        let mid = (2.0 + 3.0 / std::f64::consts::SQRT_2).sqrt();
        Self::from_reals(1.0, mid, 1.0).unwrap()
    }
}

/// Detuning and line parameters of the Raman pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanSetting {
    /// Detuning from the 2P_1/2 manifold [rad/s].
    pub delta: f64,
    /// Fine-structure splitting between 2P_1/2 and 2P_3/2 [rad/s].
    pub omega_f: f64,
    /// Phase difference between the blue and red beams [rad].
    pub delta_phi: f64,
    /// Line-strength constant (common to both P manifolds).
    pub c0: f64,
    /// Linewidth constant [rad/s] (common to both P manifolds).
    pub gamma: f64,
}

impl RamanSetting {
    /// Detuning at which the closed-form rates hold, (sqrt(2)-1) omega_F.
    pub fn magic_detuning(omega_f: f64) -> f64 {
        (std::f64::consts::SQRT_2 - 1.0) * omega_f
    }

    pub fn new(delta: f64, omega_f: f64) -> Result<Self> {
        let s = Self {
            delta,
            omega_f,
            delta_phi: 0.0,
            c0: 1.0,
            gamma: 1.0,
        };
        s.check_poles()?;
        Ok(s)
    }

    pub fn check_poles(&self) -> Result<()> {
        let scale = self.omega_f.abs().max(1.0);
        if self.delta.abs() < 1e-12 * scale || (self.delta - self.omega_f).abs() < 1e-12 * scale {
            return Err(Error::RamanPole {
                delta: self.delta,
                omega_f: self.omega_f,
            });
        }
        Ok(())
    }
}

/// Ground-state populations entering the emission-rate average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Populations {
    pub up: f64,
    pub down: f64,
}

impl Default for Populations {
    fn default() -> Self {
        Self { up: 0.5, down: 0.5 }
    }
}

/// Hyperfine dipole matrix element
/// `<alpha' F' m'| d.e_q |alpha F m>` decomposed per spherical component:
/// phase (-1)^(J'+I-m'), sqrt((2F+1)(2F'+1)), a 6j recoupling, a 3j
/// projection, times the reduced element. Zero unless m' = m + q.
#[allow(clippy::too_many_arguments)]
pub fn dipole_matrix_element(
    f_prime: HalfInt,
    m_prime: HalfInt,
    f: HalfInt,
    m: HalfInt,
    q: i32,
    j_prime: HalfInt,
    j: HalfInt,
    nuclear_spin: HalfInt,
    reduced_element: f64,
) -> Result<f64> {
    if !(-1..=1).contains(&q) {
        return Err(Error::InvalidModel(format!(
            "polarization index q = {q} not in -1..=1"
        )));
    }
    let six = wigner_6j(j_prime, f_prime, nuclear_spin, f, j, HalfInt::from(1))?;
    let three = wigner_3j(f, HalfInt::from(1), f_prime, m, HalfInt::from(q), -m_prime)?;
    if six == 0.0 || three == 0.0 {
        return Ok(0.0);
    }
    let phase_twice = j_prime.twice() + nuclear_spin.twice() - m_prime.twice();
    if phase_twice % 2 != 0 {
        return Err(Error::ParityMismatch(
            "J' + I - m' must be an integer for a physical element".into(),
        ));
    }
    let sign = if (phase_twice / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    let scale = ((f.twice() as f64 + 1.0) * (f_prime.twice() as f64 + 1.0)).sqrt();
    Ok(sign * scale * six * three * reduced_element)
}

/// One 171Yb+ ground state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitState {
    /// |F=0, mF=0>.
    Up,
    /// |F=1, mF=-1>.
    Down,
}

impl QubitState {
    fn quantum_numbers(self) -> (HalfInt, HalfInt) {
        match self {
            QubitState::Up => (HalfInt::from(0), HalfInt::from(0)),
            QubitState::Down => (HalfInt::from(1), HalfInt::from(-1)),
        }
    }
}

const NUCLEAR_SPIN_TWICE: i32 = 1;
const GROUND_J_TWICE: i32 = 1;

struct ExcitedManifold {
    j_twice: i32,
    f_twice_values: [i32; 2],
    /// Energy denominator as a multiple pair (delta, delta - omega_f).
    uses_fine_split: bool,
}

const MANIFOLDS: [ExcitedManifold; 2] = [
    ExcitedManifold {
        j_twice: 1,
        f_twice_values: [0, 2],
        uses_fine_split: false,
    },
    ExcitedManifold {
        j_twice: 3,
        f_twice_values: [2, 4],
        uses_fine_split: true,
    },
];

/// `<F' m'| d.e |F m>` summed over the spherical components of `pol`,
/// absorption direction (ground to excited).
fn coupling_element(
    pol: &Polarization,
    f_prime: HalfInt,
    m_prime: HalfInt,
    f: HalfInt,
    m: HalfInt,
    j_prime: HalfInt,
    reduced: f64,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for q in -1..=1 {
        let c = pol.component(q);
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let el = dipole_matrix_element(
            f_prime,
            m_prime,
            f,
            m,
            q,
            j_prime,
            HalfInt::from_twice(GROUND_J_TWICE),
            HalfInt::from_twice(NUCLEAR_SPIN_TWICE),
            reduced,
        )?;
        acc += c * el;
    }
    Ok(acc)
}

/// Visit every excited hyperfine level: callback gets (J', F', m',
/// denominator detuning, reduced element).
fn for_each_excited<Fold>(setting: &RamanSetting, mut fold: Fold) -> Result<()>
where
    Fold: FnMut(HalfInt, HalfInt, HalfInt, f64, f64) -> Result<()>,
{
    for manifold in &MANIFOLDS {
        let detuning = if manifold.uses_fine_split {
            setting.delta - setting.omega_f
        } else {
            setting.delta
        };
        let reduced = (setting.c0 * (manifold.j_twice as f64 + 1.0) * setting.gamma).sqrt();
        for &tf in &manifold.f_twice_values {
            let f_prime = HalfInt::from_twice(tf);
            let mut tm = -tf;
            while tm <= tf {
                fold(
                    HalfInt::from_twice(manifold.j_twice),
                    f_prime,
                    HalfInt::from_twice(tm),
                    detuning,
                    reduced,
                )?;
                tm += 2;
            }
        }
    }
    Ok(())
}

/// Two-photon Raman Rabi rate of one qubit state from the explicit sum over
/// excited hyperfine levels: `(e^{i dphi}/4) sum_i <g|d.e_r|i><i|d.e_b|g> /
/// Delta_i`. Both legs are evaluated in the absorption form, so complex
/// polarizations should be passed pre-conjugated where a conjugate is meant.
pub fn raman_rabi_sum(
    pol_r: &Polarization,
    pol_b: &Polarization,
    setting: &RamanSetting,
    state: QubitState,
) -> Result<Complex64> {
    setting.check_poles()?;
    let (f, m) = state.quantum_numbers();
    let mut acc = Complex64::new(0.0, 0.0);
    for_each_excited(setting, |j_prime, f_prime, m_prime, detuning, reduced| {
        let up_leg = coupling_element(pol_r, f_prime, m_prime, f, m, j_prime, reduced)?;
        if up_leg != Complex64::new(0.0, 0.0) {
            let down_leg = coupling_element(pol_b, f_prime, m_prime, f, m, j_prime, reduced)?;
            acc += up_leg * down_leg / detuning;
        }
        Ok(())
    })?;
    let phase = Complex64::new(0.0, setting.delta_phi).exp();
    Ok(phase / 4.0 * acc)
}

/// Stark shift of one qubit state from the explicit sum:
/// `1/4 sum_beams sum_i |<g|d.e|i>|^2 / Delta_i`.
pub fn stark_shift_sum(
    pol_r: &Polarization,
    pol_b: &Polarization,
    setting: &RamanSetting,
    state: QubitState,
) -> Result<f64> {
    setting.check_poles()?;
    let (f, m) = state.quantum_numbers();
    let mut acc = 0.0;
    for pol in [pol_r, pol_b] {
        for_each_excited(setting, |j_prime, f_prime, m_prime, detuning, reduced| {
            let el = coupling_element(pol, f_prime, m_prime, f, m, j_prime, reduced)?;
            acc += el.norm_sqr() / detuning;
            Ok(())
        })?;
    }
    Ok(acc / 4.0)
}

/// Differential Stark shift, closed form:
/// `c0 gamma omega_F / (12 Delta (Delta - omega_F)) *
///  (|b-|^2 + |r-|^2 - |b+|^2 - |r+|^2)`.
pub fn stark_shift_difference(
    pol_r: &Polarization,
    pol_b: &Polarization,
    setting: &RamanSetting,
) -> Result<f64> {
    setting.check_poles()?;
    let balance = pol_b.minus.norm_sqr() + pol_r.minus.norm_sqr()
        - pol_b.plus.norm_sqr()
        - pol_r.plus.norm_sqr();
    Ok(setting.c0 * setting.gamma * setting.omega_f
        / (12.0 * setting.delta * (setting.delta - setting.omega_f))
        * balance)
}

/// Spontaneous-emission rate under the Stark-balance condition, closed form:
/// `c0 gamma^2 (2 + |r0|^2 + |b0|^2) / (12 sqrt((1+|r0|^2)(1+|b0|^2)))
///  * [1/Delta^2 + 2/(Delta - omega_F)^2]`.
///
/// The rate is independent of the ground-state populations once the balance
/// condition holds; they are accepted for interface completeness and checked
/// for normalization.
pub fn spontaneous_emission_rate(
    pol_r: &Polarization,
    pol_b: &Polarization,
    setting: &RamanSetting,
    populations: Populations,
) -> Result<f64> {
    setting.check_poles()?;
    if (populations.up + populations.down - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidModel(
            "ground-state populations must sum to 1".into(),
        ));
    }
    let r0 = pol_r.pi.norm_sqr();
    let b0 = pol_b.pi.norm_sqr();
    let prefactor = setting.c0 * setting.gamma * setting.gamma * (2.0 + r0 + b0)
        / (12.0 * ((1.0 + r0) * (1.0 + b0)).sqrt());
    let lorentzians = 1.0 / (setting.delta * setting.delta)
        + 2.0 / ((setting.delta - setting.omega_f) * (setting.delta - setting.omega_f));
    Ok(prefactor * lorentzians)
}

/// The pair of closed-form Raman Rabi rates at the magic detuning
/// `Delta = (sqrt(2)-1) omega_F`:
///
/// `Omega(down) = -gamma (b0 r0* + b- r-* + b+ r+*) / (12 omega_F)`
/// `Omega(up)   =  gamma (-2 b0 r0* + (2+3 sqrt 2) b+ r+* - 3(2+sqrt 2) b- r-*)
///                / (24 omega_F)`
#[derive(Debug, Clone, Copy)]
pub struct RabiRates {
    pub up: Complex64,
    pub down: Complex64,
    /// True when Omega(down) = -Omega(up) to 1e-10 relative: the
    /// spin-dependent forces are balanced and the identity weight vanishes.
    pub force_balanced: bool,
}

pub fn raman_rabi_rates(
    pol_r: &Polarization,
    pol_b: &Polarization,
    setting: &RamanSetting,
) -> Result<RabiRates> {
    setting.check_poles()?;
    let sqrt2 = std::f64::consts::SQRT_2;
    let overlap = pol_b.pi * pol_r.pi.conj()
        + pol_b.minus * pol_r.minus.conj()
        + pol_b.plus * pol_r.plus.conj();
    let down = -setting.gamma * overlap / (12.0 * setting.omega_f);
    let up = setting.gamma
        * (-2.0 * pol_b.pi * pol_r.pi.conj()
            + (2.0 + 3.0 * sqrt2) * pol_b.plus * pol_r.plus.conj()
            - 3.0 * (2.0 + sqrt2) * pol_b.minus * pol_r.minus.conj())
        / (24.0 * setting.omega_f);
    let force_balanced = if up.norm() > 0.0 {
        (up + down).norm() / up.norm() < 1e-10
    } else {
        down.norm() == 0.0
    };
    Ok(RabiRates {
        up,
        down,
        force_balanced,
    })
}

/// Detuning in (0, omega_F) minimizing the spontaneous emission per unit of
/// spin-dependent force `R_SE(Delta) / |Omega_up(Delta) - Omega_down(Delta)|`,
/// found by golden-section search.
pub fn optimal_detuning(pol_r: &Polarization, pol_b: &Polarization, omega_f: f64) -> Result<f64> {
    if omega_f <= 0.0 {
        return Err(Error::InvalidModel("omega_F must be positive".into()));
    }
    let objective = |delta: f64| -> Result<f64> {
        let setting = RamanSetting {
            delta,
            omega_f,
            delta_phi: 0.0,
            c0: 1.0,
            gamma: 1.0,
        };
        let rate = spontaneous_emission_rate(pol_r, pol_b, &setting, Populations::default())?;
        let up = raman_rabi_sum(pol_r, pol_b, &setting, QubitState::Up)?;
        let down = raman_rabi_sum(pol_r, pol_b, &setting, QubitState::Down)?;
        let force = (up - down).norm();
        if force == 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok(rate / force)
    };

    let golden = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut lo = 1e-4 * omega_f;
    let mut hi = (1.0 - 1e-4) * omega_f;
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = objective(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = objective(x2)?;
        }
        if (hi - lo) < 1e-12 * omega_f {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
