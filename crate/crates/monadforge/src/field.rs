//! Exact scalar arithmetic: arbitrary-precision rationals and odd prime fields.
//!
//! Everything downstream (rings, section models, the cohomology engine) is
//! generic over [`Field`]. Fields are small context objects carried by value;
//! elements do not know their field.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Debug;

use crate::error::Error;

/// A field of exact scalars. No floating point anywhere.
pub trait Field: Clone + Send + Sync + 'static {
    type Elem: Clone + PartialEq + Debug + Send + Sync + 'static;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_i64(&self, n: i64) -> Self::Elem;
    /// `a/b` with `b` nonzero; used by the polynomial parser.
    fn from_ratio(&self, num: i64, den: i64) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    /// Multiplicative inverse of a nonzero element. Panics on zero input;
    /// callers pivot on nonzero entries only.
    fn inv(&self, a: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn is_one(&self, a: &Self::Elem) -> bool;
    /// Uniform-ish sample for probabilistic point checks.
    fn sample<R: Rng>(&self, rng: &mut R) -> Self::Elem;
    /// Short human-readable name for reports, e.g. `QQ` or `F_32003`.
    fn name(&self) -> String;

    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.mul(a, &self.inv(b))
    }

    /// `acc += c * x`, the inner loop of every elimination.
    fn fma(&self, acc: &Self::Elem, c: &Self::Elem, x: &Self::Elem) -> Self::Elem {
        self.add(acc, &self.mul(c, x))
    }

    fn pow(&self, a: &Self::Elem, mut e: u64) -> Self::Elem {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }
}

/// The rational numbers, exact via `BigRational`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Rationals;

impl Field for Rationals {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn from_i64(&self, n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }
    fn from_ratio(&self, num: i64, den: i64) -> BigRational {
        assert!(den != 0, "zero denominator");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn inv(&self, a: &BigRational) -> BigRational {
        assert!(!a.is_zero(), "inverse of zero");
        a.recip()
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn is_one(&self, a: &BigRational) -> bool {
        a.is_one()
    }
    fn sample<R: Rng>(&self, rng: &mut R) -> BigRational {
        // Small integers keep point-evaluation arithmetic cheap.
        self.from_i64(rng.gen_range(-97..=97))
    }
    fn name(&self) -> String {
        "QQ".into()
    }
}

/// The prime field `F_p` for an odd prime `p < 2^62`, elements stored reduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    /// Rejects composites and the prime 2 (quadric normal forms and spinor
    /// factorizations assume characteristic != 2).
    pub fn new(p: u64) -> Result<Self, Error> {
        if p == 2 {
            return Err(Error::BadField(
                "characteristic 2 is not supported (quadrics need char != 2)".into(),
            ));
        }
        if p < 2 || !is_prime_u64(p) {
            return Err(Error::BadField(format!("{p} is not prime")));
        }
        if p >= 1 << 62 {
            return Err(Error::BadField(format!("prime {p} too large (need < 2^62)")));
        }
        Ok(PrimeField { p })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    fn reduce_i64(&self, n: i64) -> u64 {
        // p < 2^62, so the cast to i64 is lossless.
        n.rem_euclid(self.p as i64) as u64
    }
}

impl Field for PrimeField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn from_i64(&self, n: i64) -> u64 {
        self.reduce_i64(n)
    }
    fn from_ratio(&self, num: i64, den: i64) -> u64 {
        let d = self.reduce_i64(den);
        assert!(d != 0, "denominator divisible by p");
        self.mul(&self.reduce_i64(num), &self.inv(&d))
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 * *b as u128) % self.p as u128) as u64
    }
    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.p - a
        }
    }
    fn inv(&self, a: &u64) -> u64 {
        assert!(*a != 0, "inverse of zero");
        // Fermat: p is prime.
        self.pow(a, self.p - 2)
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn is_one(&self, a: &u64) -> bool {
        *a == 1 % self.p
    }
    fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        rng.gen_range(0..self.p)
    }
    fn name(&self) -> String {
        format!("F_{}", self.p)
    }
}

/// Runtime field selection, as it appears in monad files and CLI flags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldSpec {
    Rational,
    Prime { p: u64 },
}

impl FieldSpec {
    pub fn validate(&self) -> Result<(), Error> {
        match self {
            FieldSpec::Rational => Ok(()),
            FieldSpec::Prime { p } => PrimeField::new(*p).map(|_| ()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            FieldSpec::Rational => "QQ".into(),
            FieldSpec::Prime { p } => format!("F_{p}"),
        }
    }
}

impl Default for FieldSpec {
    fn default() -> Self {
        // Default working field for the CLI; rationals are opt-in because
        // intermediate coefficient blowup is expected.
        FieldSpec::Prime { p: 32003 }
    }
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a, m);
        }
        a = mulmod(a, a, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0u32;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_basics() {
        let f = PrimeField::new(32003).unwrap();
        let a = f.from_i64(-5);
        assert_eq!(a, 32003 - 5);
        assert_eq!(f.mul(&a, &f.inv(&a)), 1);
        assert_eq!(f.from_ratio(1, 2), f.inv(&f.from_i64(2)));
        assert_eq!(f.add(&f.from_i64(32000), &f.from_i64(10)), 7);
    }

    #[test]
    fn rejects_bad_fields() {
        assert!(PrimeField::new(2).is_err());
        assert!(PrimeField::new(91).is_err());
        assert!(PrimeField::new(32003).is_ok());
        assert!(PrimeField::new((1 << 61) + 20 * 2 + 1 - 1).is_err()); // composite
    }

    #[test]
    fn miller_rabin_agrees_with_trial_division() {
        let naive = |n: u64| n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0);
        for n in 0..2000 {
            assert_eq!(is_prime_u64(n), naive(n), "n = {n}");
        }
        assert!(is_prime_u64(32003));
        assert!(is_prime_u64(101_111));
    }

    #[test]
    fn rational_ratio() {
        let q = Rationals;
        let half = q.from_ratio(1, 2);
        assert_eq!(q.add(&half, &half), q.one());
    }
}
