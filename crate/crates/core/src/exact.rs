//! Exact probability and entropy arithmetic.
//!
//! Probabilities of cylinder events under the uniform product measure are
//! always of the form `count / a^w`. [`ExactProb`] keeps that shape
//! uncollapsed (canonicalized only by dividing out exact factors of `a`),
//! so every downstream equality check is a check on integers.
//!
//! Entropies of such distributions are rational combinations of logarithms
//! of primes: `-p log p` with `p = c / a^w` contributes
//! `p * (w log a - log c)`, and both `a` and `c` factor into primes.
//! [`ExactLogSum`] stores the coefficient of `log q` for each prime `q`,
//! which makes entropy equalities decidable (the logs of distinct primes
//! are linearly independent over the rationals).

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign};

use num_rational::Ratio;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::types::Modulus;

/// Exact rational with full reduction, used for aggregates (sums of
/// probabilities, cone averages) that leave the `count / a^w` shape.
pub type Rational = Ratio<i128>;

/// Render a rational as `p/q` (or just `p` when the denominator is 1).
pub fn rational_to_string(r: &Rational) -> String {
    if r.denom() == &1 {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact probability `count / a^w` under the uniform product measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactProb {
    count: u128,
    base: u32,
    w: u32,
}

impl ExactProb {
    /// Build `count / base^w` and canonicalize by dividing out factors of
    /// the base common to numerator and denominator.
    pub fn new(count: u128, base: Modulus, w: u32) -> Self {
        let mut p = ExactProb {
            count,
            base: base.get(),
            w,
        };
        p.canonicalize();
        p
    }

    pub fn zero(base: Modulus) -> Self {
        ExactProb {
            count: 0,
            base: base.get(),
            w: 0,
        }
    }

    pub fn one(base: Modulus) -> Self {
        ExactProb {
            count: 1,
            base: base.get(),
            w: 0,
        }
    }

    fn canonicalize(&mut self) {
        if self.count == 0 {
            self.w = 0;
            return;
        }
        let b = self.base as u128;
        while self.w > 0 && self.count.is_multiple_of(b) {
            self.count /= b;
            self.w -= 1;
        }
    }

    #[inline]
    pub fn count(&self) -> u128 {
        self.count
    }

    #[inline]
    pub fn base(&self) -> u32 {
        self.base
    }

    /// Exponent of the (canonical) power-of-`a` denominator.
    #[inline]
    pub fn exponent(&self) -> u32 {
        self.w
    }

    pub fn is_zero(&self) -> bool {
        self.count == 0
    }

    /// Product of two probabilities over the same base.
    pub fn mul(&self, other: &ExactProb) -> Result<ExactProb> {
        debug_assert_eq!(self.base, other.base);
        let count = self
            .count
            .checked_mul(other.count)
            .ok_or(Error::Overflow("ExactProb::mul"))?;
        Ok(ExactProb::new(
            count,
            Modulus::new(self.base as u64).expect("base already validated"),
            self.w + other.w,
        ))
    }

    pub fn to_rational(&self) -> Rational {
        let denom = (self.base as i128)
            .checked_pow(self.w)
            .expect("canonical denominator fits i128");
        Rational::new(self.count as i128, denom)
    }

    pub fn to_f64(&self) -> f64 {
        self.count as f64 / (self.base as f64).powi(self.w as i32)
    }

    /// Render as `count/a^w` (`0`, `1`, and `c/a` handled plainly).
    pub fn render(&self) -> String {
        if self.count == 0 {
            return "0".to_string();
        }
        match self.w {
            0 => format!("{}", self.count),
            1 => format!("{}/{}", self.count, self.base),
            _ => format!("{}/{}^{}", self.count, self.base, self.w),
        }
    }
}

impl fmt::Display for ExactProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Prime factorization of a small integer, as (prime, multiplicity) pairs.
pub fn factorize(mut n: u128) -> Vec<(u64, u32)> {
    debug_assert!(n > 0);
    let mut out = Vec::new();
    let mut d: u128 = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d as u64, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n as u64, 1));
    }
    out
}

/// An exact value of the form `sum_q alpha_q * ln(q)` over primes `q`
/// with rational coefficients. Zero coefficients are not stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExactLogSum {
    terms: BTreeMap<u64, Rational>,
}

impl ExactLogSum {
    pub fn zero() -> Self {
        ExactLogSum::default()
    }

    /// `coeff * ln(n)` for a positive integer `n` (expanded over the
    /// prime factorization of `n`).
    pub fn log_of(n: u128, coeff: Rational) -> Self {
        let mut s = ExactLogSum::zero();
        s.add_log_of(n, coeff);
        s
    }

    pub fn add_log_of(&mut self, n: u128, coeff: Rational) {
        if coeff.is_zero() || n == 1 {
            return;
        }
        for (p, e) in factorize(n) {
            let c = coeff * Rational::from_integer(e as i128);
            let entry = self.terms.entry(p).or_insert_with(Rational::zero);
            *entry += c;
            if entry.is_zero() {
                self.terms.remove(&p);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient_of(&self, prime: u64) -> Rational {
        self.terms.get(&prime).cloned().unwrap_or_else(Rational::zero)
    }

    /// If the value equals `q * ln(base)` for a rational `q`, return `q`.
    pub fn as_multiple_of_ln(&self, base: u32) -> Option<Rational> {
        let base_ln = ExactLogSum::log_of(base as u128, Rational::from_integer(1));
        if self.is_zero() {
            return Some(Rational::zero());
        }
        let (&p0, _) = base_ln.terms.iter().next()?;
        let q = self.coefficient_of(p0) / base_ln.coefficient_of(p0);
        let mut scaled = ExactLogSum::zero();
        for (&p, c) in &base_ln.terms {
            scaled.terms.insert(p, c * q);
        }
        if scaled == *self {
            Some(q)
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(&p, c)| ratio_to_f64(c) * (p as f64).ln())
            .sum()
    }
}

impl Add for ExactLogSum {
    type Output = ExactLogSum;
    fn add(mut self, rhs: ExactLogSum) -> ExactLogSum {
        self += rhs;
        self
    }
}

impl AddAssign for ExactLogSum {
    fn add_assign(&mut self, rhs: ExactLogSum) {
        for (p, c) in rhs.terms {
            let entry = self.terms.entry(p).or_insert_with(Rational::zero);
            *entry += c;
            if entry.is_zero() {
                self.terms.remove(&p);
            }
        }
    }
}

/// Shannon entropy in nats, exactly, of a distribution given as counts
/// over a common denominator `base^w`. Zero counts are ignored.
///
/// `-sum p ln p` with `p = c / base^w` is
/// `sum (c / base^w) * (w ln base - ln c)`.
pub fn entropy_of_counts(counts: impl Iterator<Item = u128>, base: Modulus, w: u32) -> ExactLogSum {
    let denom = (base.get() as i128)
        .checked_pow(w)
        .expect("denominator fits i128");
    let mut h = ExactLogSum::zero();
    let mut grouped: BTreeMap<u128, u128> = BTreeMap::new();
    for c in counts {
        if c > 0 {
            *grouped.entry(c).or_insert(0) += 1;
        }
    }
    for (c, mult) in grouped {
        let p = Rational::new((c * mult) as i128, denom);
        h.add_log_of((base.get() as u128).pow(w), p);
        h.add_log_of(c, -p);
    }
    h
}

fn ratio_to_f64(r: &Rational) -> f64 {
    // numerators and denominators stay far below 2^53 in this crate, so
    // the two conversions and the division are exactly rounded
    *r.numer() as f64 / *r.denom() as f64
}

/// Render a rational-coefficient entropy to f64 nats; `None`-safe helper
/// for aggregates built from [`Rational`].
pub fn rational_to_f64(r: &Rational) -> f64 {
    ratio_to_f64(r)
}

/// Absolute value of a rational difference.
pub fn abs_diff(x: Rational, y: Rational) -> Rational {
    (x - y).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(a: u64) -> Modulus {
        Modulus::new(a).unwrap()
    }

    #[test]
    fn exact_prob_canonicalizes_base_factors() {
        // 2/2^3 -> 1/2^2
        let p = ExactProb::new(2, m(2), 3);
        assert_eq!((p.count(), p.exponent()), (1, 2));
        // 4/6^2 has no common factor 6 and stays put
        let q = ExactProb::new(4, m(6), 2);
        assert_eq!((q.count(), q.exponent()), (4, 2));
        // 0 normalizes its exponent away
        let z = ExactProb::new(0, m(3), 5);
        assert_eq!((z.count(), z.exponent()), (0, 0));
        // a^w / a^w = 1
        let one = ExactProb::new(8, m(2), 3);
        assert_eq!((one.count(), one.exponent()), (1, 0));
    }

    #[test]
    fn exact_prob_render() {
        assert_eq!(ExactProb::new(1, m(2), 4).render(), "1/2^4");
        assert_eq!(ExactProb::new(3, m(2), 1).render(), "3/2");
        assert_eq!(ExactProb::new(0, m(2), 4).render(), "0");
        assert_eq!(ExactProb::new(16, m(2), 4).render(), "1");
    }

    #[test]
    fn factorize_small() {
        assert_eq!(factorize(12), vec![(2, 2), (3, 1)]);
        assert_eq!(factorize(97), vec![(97, 1)]);
        assert_eq!(factorize(1), vec![]);
    }

    #[test]
    fn entropy_uniform_is_log_of_size() {
        // 8 atoms of 1/8 each: H = 3 ln 2
        let h = entropy_of_counts((0..8).map(|_| 1u128), m(2), 3);
        assert_eq!(
            h.as_multiple_of_ln(2),
            Some(Rational::from_integer(3)),
            "uniform 8-atom entropy must be 3 ln 2"
        );
        assert!((h.to_f64() - 3.0 * std::f64::consts::LN_2).abs() < 1e-14);
    }

    #[test]
    fn entropy_with_non_power_counts() {
        // {3/4, 1/4}: H = 2 ln 2 - (3/4) ln 3
        let h = entropy_of_counts([3u128, 1].into_iter(), m(2), 2);
        assert_eq!(h.coefficient_of(2), Rational::from_integer(2));
        assert_eq!(h.coefficient_of(3), Rational::new(-3, 4));
        assert_eq!(h.as_multiple_of_ln(2), None);
        let expected = 2.0 * (2f64).ln() - 0.75 * (3f64).ln();
        assert!((h.to_f64() - expected).abs() < 1e-14);
    }

    #[test]
    fn log_sum_base_multiples() {
        // 5 ln 4 = 10 ln 2
        let s = ExactLogSum::log_of(4, Rational::from_integer(5));
        assert_eq!(s.as_multiple_of_ln(2), Some(Rational::from_integer(10)));
        assert_eq!(s.as_multiple_of_ln(4), Some(Rational::from_integer(5)));
        // ln 6 in base 2 is not rational
        let t = ExactLogSum::log_of(6, Rational::from_integer(1));
        assert_eq!(t.as_multiple_of_ln(2), None);
        assert_eq!(t.as_multiple_of_ln(6), Some(Rational::from_integer(1)));
    }
}
