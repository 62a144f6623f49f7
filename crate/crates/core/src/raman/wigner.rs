//! Wigner 3j and 6j symbols from the Racah sum in exact rational arithmetic.
//!
//! Angular momenta are half-integers carried as doubled integers. Factorial
//! ratios are accumulated as big rationals and converted to floating point
//! only at the end, so moderate j (\u{2264} 20) evaluates without catastrophic
//! cancellation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::{Error, Result};

/// Integer or half-integer stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i32);

impl HalfInt {
    /// From the doubled value: `HalfInt::from_twice(3)` is 3/2.
    pub const fn from_twice(twice: i32) -> Self {
        Self(twice)
    }

    /// From a float that must be an integer or half-integer.
    pub fn from_f64(value: f64) -> Result<Self> {
        let twice = 2.0 * value;
        if (twice - twice.round()).abs() > 1e-9 || !twice.is_finite() {
            return Err(Error::NotHalfInteger {
                name: "value",
                value,
            });
        }
        Ok(Self(twice.round() as i32))
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl From<i32> for HalfInt {
    fn from(v: i32) -> Self {
        Self(2 * v)
    }
}

impl std::ops::Neg for HalfInt {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

fn factorial(n: i32) -> BigInt {
    debug_assert!(n >= 0);
    let mut acc = BigInt::one();
    for k in 2..=n as i64 {
        acc *= k;
    }
    acc
}

/// Triangle coefficient Delta(a, b, c) as an exact rational; None when the
/// triangle rule fails or the perimeter is not an integer.
fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> Option<BigRational> {
    let t1 = a.twice() + b.twice() - c.twice();
    let t2 = a.twice() - b.twice() + c.twice();
    let t3 = -a.twice() + b.twice() + c.twice();
    let p = a.twice() + b.twice() + c.twice();
    if t1 < 0 || t2 < 0 || t3 < 0 || p % 2 != 0 {
        return None;
    }
    let num = factorial(t1 / 2) * factorial(t2 / 2) * factorial(t3 / 2);
    let den = factorial(p / 2 + 1);
    Some(BigRational::new(num, den))
}

fn check_projection(j: HalfInt, m: HalfInt) -> Result<()> {
    if (j.twice() - m.twice()) % 2 != 0 {
        return Err(Error::ParityMismatch(format!(
            "m = {} has different integer/half-integer character than j = {}",
            m.value(),
            j.value()
        )));
    }
    Ok(())
}

/// Signed square-root value `sign(sum) * |sum| * sqrt(pref)` as f64.
fn to_float(pref: &BigRational, sum: &BigRational) -> f64 {
    let sum_f = sum.to_f64().unwrap_or(0.0);
    let pref_f = pref.to_f64().unwrap_or(0.0);
    sum_f * pref_f.sqrt()
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3).
///
/// Returns 0 whenever a selection rule fails (m-sum, triangle, |m| > j);
/// mismatched integer/half-integer projections are an error.
pub fn wigner_3j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> Result<f64> {
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        check_projection(j, m)?;
        if j.twice() < 0 {
            return Err(Error::NotHalfInteger {
                name: "j",
                value: j.value(),
            });
        }
    }
    if m1.twice() + m2.twice() + m3.twice() != 0 {
        return Ok(0.0);
    }
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        if m.twice().abs() > j.twice() {
            return Ok(0.0);
        }
    }
    let Some(tri) = triangle(j1, j2, j3) else {
        return Ok(0.0);
    };

    // Prefactor under the square root.
    let mut pref = tri;
    for (j, m) in [(j1, m1), (j2, m2), (j3, m3)] {
        pref *= BigRational::from_integer(
            factorial((j.twice() + m.twice()) / 2) * factorial((j.twice() - m.twice()) / 2),
        );
    }

    // Racah sum over k.
    let a1 = (j1.twice() + j2.twice() - j3.twice()) / 2;
    let a2 = (j1.twice() - m1.twice()) / 2;
    let a3 = (j2.twice() + m2.twice()) / 2;
    let b1 = (j3.twice() - j2.twice() + m1.twice()) / 2;
    let b2 = (j3.twice() - j1.twice() - m2.twice()) / 2;
    let k_min = 0.max(-b1).max(-b2);
    let k_max = a1.min(a2).min(a3);
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = factorial(k)
            * factorial(a1 - k)
            * factorial(a2 - k)
            * factorial(a3 - k)
            * factorial(b1 + k)
            * factorial(b2 + k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }

    // Phase (-1)^(j1 - j2 - m3).
    let phase_exp = (j1.twice() - j2.twice() - m3.twice()) / 2;
    let sign = if phase_exp.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    };
    Ok(sign * to_float(&pref, &sum))
}

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}.
///
/// Returns 0 when any of the four triads violates the triangle rule.
pub fn wigner_6j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> Result<f64> {
    for j in [j1, j2, j3, j4, j5, j6] {
        if j.twice() < 0 {
            return Err(Error::NotHalfInteger {
                name: "j",
                value: j.value(),
            });
        }
    }
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    let mut pref = BigRational::one();
    for (a, b, c) in triads {
        match triangle(a, b, c) {
            Some(t) => pref *= t,
            None => return Ok(0.0),
        }
    }

    let s1 = (j1.twice() + j2.twice() + j3.twice()) / 2;
    let s2 = (j1.twice() + j5.twice() + j6.twice()) / 2;
    let s3 = (j4.twice() + j2.twice() + j6.twice()) / 2;
    let s4 = (j4.twice() + j5.twice() + j3.twice()) / 2;
    let t1 = (j1.twice() + j2.twice() + j4.twice() + j5.twice()) / 2;
    let t2 = (j2.twice() + j3.twice() + j5.twice() + j6.twice()) / 2;
    let t3 = (j3.twice() + j1.twice() + j6.twice() + j4.twice()) / 2;

    let k_min = s1.max(s2).max(s3).max(s4);
    let k_max = t1.min(t2).min(t3);
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let num = factorial(k + 1);
        let den = factorial(k - s1)
            * factorial(k - s2)
            * factorial(k - s3)
            * factorial(k - s4)
            * factorial(t1 - k)
            * factorial(t2 - k)
            * factorial(t3 - k);
        let term = BigRational::new(num, den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Ok(to_float(&pref, &sum))
}

/// Convenience wrappers taking plain floats (validated to half-integers).
pub fn wigner_3j_f64(j: [f64; 3], m: [f64; 3]) -> Result<f64> {
    wigner_3j(
        HalfInt::from_f64(j[0])?,
        HalfInt::from_f64(j[1])?,
        HalfInt::from_f64(j[2])?,
        HalfInt::from_f64(m[0])?,
        HalfInt::from_f64(m[1])?,
        HalfInt::from_f64(m[2])?,
    )
}

pub fn wigner_6j_f64(j: [f64; 6]) -> Result<f64> {
    wigner_6j(
        HalfInt::from_f64(j[0])?,
        HalfInt::from_f64(j[1])?,
        HalfInt::from_f64(j[2])?,
        HalfInt::from_f64(j[3])?,
        HalfInt::from_f64(j[4])?,
        HalfInt::from_f64(j[5])?,
    )
}
