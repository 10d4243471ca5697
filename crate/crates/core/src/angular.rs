//! Exact angular-momentum recoupling coefficients.
//!
//! Angular momenta are carried as doubled integers (`2j`) so that half-integer
//! values stay exact. The 6-j symbol is evaluated with the Racah single-sum
//! formula in arbitrary-precision rational arithmetic and only converted to
//! floating point at the very end.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AngularError {
    #[error("{0} is not a non-negative half-integer")]
    NotHalfInteger(f64),
    #[error("argument 2j = {doubled} exceeds the factorial table limit 2j_max = {limit}")]
    TableLimit { doubled: u32, limit: u32 },
}

/// A non-negative half-integer stored as `2j`. Serializes as a plain number (`1.5`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HalfInt(u32);

impl TryFrom<f64> for HalfInt {
    type Error = AngularError;

    fn try_from(j: f64) -> Result<Self, AngularError> {
        HalfInt::from_f64(j)
    }
}

impl From<HalfInt> for f64 {
    fn from(j: HalfInt) -> f64 {
        j.value()
    }
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub const fn from_doubled(twice: u32) -> Self {
        HalfInt(twice)
    }

    pub const fn integer(j: u32) -> Self {
        HalfInt(2 * j)
    }

    /// Accepts `f64` values that are exact multiples of 1/2.
    pub fn from_f64(j: f64) -> Result<Self, AngularError> {
        let twice = 2.0 * j;
        if !j.is_finite() || j < 0.0 || twice.fract() != 0.0 || twice > u32::MAX as f64 {
            return Err(AngularError::NotHalfInteger(j));
        }
        Ok(HalfInt(twice as u32))
    }

    pub const fn doubled(self) -> u32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// Multiplicity `2j + 1`.
    pub const fn multiplicity(self) -> u32 {
        self.0 + 1
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Triangle rule on doubled momenta: |a-b| <= c <= a+b and a+b+c even.
pub fn triangle(a: u32, b: u32, c: u32) -> bool {
    let (a, b, c) = (a as i64, b as i64, c as i64);
    c >= (a - b).abs() && c <= a + b && (a + b + c) % 2 == 0
}

/// A value `sign * sqrt(radicand)` with an exact rational radicand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedSqrt {
    pub negative: bool,
    pub radicand: BigRational,
}

impl SignedSqrt {
    pub fn zero() -> Self {
        SignedSqrt { negative: false, radicand: BigRational::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.radicand.is_zero()
    }

    /// The exact square of the value.
    pub fn square(&self) -> &BigRational {
        &self.radicand
    }

    pub fn to_f64(&self) -> f64 {
        let r = ratio_to_f64(&self.radicand).sqrt();
        if self.negative {
            -r
        } else {
            r
        }
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a scaled division when either side overflows f64.
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Factorials `0!..=n_max!` as exact big integers.
#[derive(Clone, Debug)]
pub struct RacahTable {
    max_doubled: u32,
    factorials: Vec<BigInt>,
}

impl Default for RacahTable {
    /// Table covering every argument up to j = 40.
    fn default() -> Self {
        Self::new(HalfInt::integer(40))
    }
}

impl RacahTable {
    pub fn new(j_max: HalfInt) -> Self {
        let max_doubled = j_max.doubled();
        // The largest factorial in a 6-j Racah sum is (a+b+d+e+1)! <= (2 j_max + 1)! in j units;
        // with doubled arguments that is (2*max_doubled + 1)!.
        let n = 2 * max_doubled as usize + 2;
        let mut factorials = Vec::with_capacity(n + 1);
        let mut acc = BigInt::one();
        factorials.push(acc.clone());
        for k in 1..=n {
            acc *= k;
            factorials.push(acc.clone());
        }
        RacahTable { max_doubled, factorials }
    }

    pub fn j_max(&self) -> HalfInt {
        HalfInt(self.max_doubled)
    }

    fn fact(&self, n: i64) -> &BigInt {
        &self.factorials[n as usize]
    }

    fn check(&self, args: &[HalfInt]) -> Result<(), AngularError> {
        for a in args {
            if a.0 > self.max_doubled {
                return Err(AngularError::TableLimit { doubled: a.0, limit: self.max_doubled });
            }
        }
        Ok(())
    }

    /// Squared triangle coefficient Δ(abc)² = (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)! on doubled inputs.
    fn delta_sq(&self, a: u32, b: u32, c: u32) -> BigRational {
        let (a, b, c) = (a as i64, b as i64, c as i64);
        let num = self.fact((a + b - c) / 2) * self.fact((a - b + c) / 2) * self.fact((-a + b + c) / 2);
        let den = self.fact((a + b + c) / 2 + 1).clone();
        BigRational::new(num, den)
    }

    /// Exact Wigner 6-j symbol
    ///
    /// ```text
    /// ⎧j1 j2 j3⎫
    /// ⎩j4 j5 j6⎭
    /// ```
    pub fn wigner_6j_exact(
        &self,
        j1: HalfInt,
        j2: HalfInt,
        j3: HalfInt,
        j4: HalfInt,
        j5: HalfInt,
        j6: HalfInt,
    ) -> Result<SignedSqrt, AngularError> {
        self.check(&[j1, j2, j3, j4, j5, j6])?;
        let (a, b, c, d, e, f) = (j1.0, j2.0, j3.0, j4.0, j5.0, j6.0);
        if !(triangle(a, b, c) && triangle(a, e, f) && triangle(d, b, f) && triangle(d, e, c)) {
            return Ok(SignedSqrt::zero());
        }
        let (a, b, c, d, e, f) = (a as i64, b as i64, c as i64, d as i64, e as i64, f as i64);
        let tri = [(a + b + c) / 2, (a + e + f) / 2, (d + b + f) / 2, (d + e + c) / 2];
        let quad = [(a + b + d + e) / 2, (a + c + d + f) / 2, (b + c + e + f) / 2];
        let t_min = *tri.iter().max().unwrap();
        let t_max = *quad.iter().min().unwrap();

        let mut sum = BigRational::zero();
        for t in t_min..=t_max {
            let mut den = BigInt::one();
            for &x in &tri {
                den *= self.fact(t - x);
            }
            for &y in &quad {
                den *= self.fact(y - t);
            }
            let term = BigRational::new(self.fact(t + 1).clone(), den);
            if t % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        let deltas = self.delta_sq(j1.0, j2.0, j3.0)
            * self.delta_sq(j1.0, j5.0, j6.0)
            * self.delta_sq(j4.0, j2.0, j6.0)
            * self.delta_sq(j4.0, j5.0, j3.0);
        let negative = sum.is_negative();
        let radicand = &sum * &sum * deltas;
        Ok(SignedSqrt { negative: negative && !radicand.is_zero(), radicand })
    }

    pub fn wigner_6j(
        &self,
        j1: HalfInt,
        j2: HalfInt,
        j3: HalfInt,
        j4: HalfInt,
        j5: HalfInt,
        j6: HalfInt,
    ) -> Result<f64, AngularError> {
        Ok(self.wigner_6j_exact(j1, j2, j3, j4, j5, j6)?.to_f64())
    }
}

/// 6-j symbol from six `f64` half-integers using the default table.
pub fn wigner6j(j: [f64; 6]) -> Result<f64, AngularError> {
    let h: Vec<HalfInt> = j.iter().map(|&x| HalfInt::from_f64(x)).collect::<Result<_, _>>()?;
    let max = h.iter().copied().max().unwrap_or(HalfInt::ZERO);
    let table = if max.doubled() <= 80 { RacahTable::default() } else { RacahTable::new(max) };
    table.wigner_6j(h[0], h[1], h[2], h[3], h[4], h[5])
}
