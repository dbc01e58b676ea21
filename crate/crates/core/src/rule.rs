//! Linear local rules over Z_a.
//!
//! A rule is a coefficient vector `c[-r], ..., c[r]` acting by
//! `y[i] = sum_d c[d] * x[i+d] (mod a)`. The dependency span tracked for
//! window bookkeeping is the tight support `[min_dep, max_dep]` of the
//! nonzero coefficients, not `[-r, r]`; the declared radius is kept for
//! the entropy formula.

use crate::error::{Error, Result};
use crate::types::Modulus;

fn gcd(mut x: u64, mut y: u64) -> u64 {
    while y != 0 {
        let t = x % y;
        x = y;
        y = t;
    }
    x
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalRule {
    modulus: Modulus,
    radius: u32,
    /// Coefficients reduced mod a, indexed by offset `-radius ..= radius`.
    coeffs: Vec<u8>,
    min_dep: i64,
    max_dep: i64,
    left_invertible: bool,
    right_invertible: bool,
    one_sided: bool,
}

impl LocalRule {
    /// Validate and build a rule from the alphabet size and the raw
    /// coefficient list `c[-r], ..., c[r]` (odd length, r >= 1).
    pub fn new(a: u64, raw_coeffs: &[i64]) -> Result<Self> {
        let modulus = Modulus::new(a)?;
        let len = raw_coeffs.len();
        if len < 3 || len.is_multiple_of(2) {
            return Err(Error::BadCoeffLength { len });
        }
        let radius = (len / 2) as u32;
        let a64 = modulus.get() as i64;
        let coeffs: Vec<u8> = raw_coeffs
            .iter()
            .map(|&c| (c.rem_euclid(a64)) as u8)
            .collect();

        let first_nonzero = coeffs.iter().position(|&c| c != 0);
        let last_nonzero = coeffs.iter().rposition(|&c| c != 0);
        let (first, last) = match (first_nonzero, last_nonzero) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::AllZeroRule { a: modulus.get() }),
        };
        let min_dep = first as i64 - radius as i64;
        let max_dep = last as i64 - radius as i64;

        let left_invertible = gcd(coeffs[0] as u64, a) == 1;
        let right_invertible = gcd(coeffs[len - 1] as u64, a) == 1;
        let one_sided = min_dep >= 0;

        Ok(LocalRule {
            modulus,
            radius,
            coeffs,
            min_dep,
            max_dep,
            left_invertible,
            right_invertible,
            one_sided,
        })
    }

    /// Parse the rule literal `a=<int>;coeffs=<c>,...,<c>` (whitespace-free).
    pub fn parse(literal: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("rule literal {literal:?}: {msg}"));
        let (a_part, c_part) = literal
            .split_once(';')
            .ok_or_else(|| bad("expected `a=<int>;coeffs=<list>`"))?;
        let a_str = a_part
            .strip_prefix("a=")
            .ok_or_else(|| bad("missing `a=` prefix"))?;
        let a: u64 = a_str
            .parse()
            .map_err(|_| bad("alphabet size is not an integer"))?;
        let coeff_str = c_part
            .strip_prefix("coeffs=")
            .ok_or_else(|| bad("missing `coeffs=` prefix"))?;
        let coeffs: Vec<i64> = coeff_str
            .split(',')
            .map(|s| s.parse::<i64>().map_err(|_| bad("bad coefficient")))
            .collect::<Result<_>>()?;
        LocalRule::new(a, &coeffs)
    }

    /// Render back to the canonical literal form.
    pub fn to_literal(&self) -> String {
        let coeffs: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        format!("a={};coeffs={}", self.modulus.get(), coeffs.join(","))
    }

    #[inline]
    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    #[inline]
    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Coefficient at offset `d` (zero outside `-r ..= r`).
    #[inline]
    pub fn coeff(&self, d: i64) -> u8 {
        let idx = d + self.radius as i64;
        if idx < 0 || idx >= self.coeffs.len() as i64 {
            0
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// Coefficients over the tight dependency span, lowest offset first.
    pub fn dep_coeffs(&self) -> &[u8] {
        let lo = (self.min_dep + self.radius as i64) as usize;
        let hi = (self.max_dep + self.radius as i64) as usize;
        &self.coeffs[lo..=hi]
    }

    #[inline]
    pub fn min_dep(&self) -> i64 {
        self.min_dep
    }

    #[inline]
    pub fn max_dep(&self) -> i64 {
        self.max_dep
    }

    /// Width of the tight dependency span minus one, i.e. how many cells a
    /// window shrinks by per application.
    #[inline]
    pub fn shrink_per_step(&self) -> usize {
        (self.max_dep - self.min_dep) as usize
    }

    #[inline]
    pub fn left_invertible(&self) -> bool {
        self.left_invertible
    }

    #[inline]
    pub fn right_invertible(&self) -> bool {
        self.right_invertible
    }

    /// Both extreme coefficients (at the declared radius) are units mod a.
    #[inline]
    pub fn both_ends_invertible(&self) -> bool {
        self.left_invertible && self.right_invertible
    }

    #[inline]
    pub fn one_sided(&self) -> bool {
        self.one_sided
    }

    /// Offsets `d` with an odd coefficient; only meaningful for a = 2,
    /// where these are exactly the dependencies of the rule.
    pub fn odd_offsets(&self) -> Vec<i64> {
        (self.min_dep..=self.max_dep)
            .filter(|&d| self.coeff(d) % 2 == 1)
            .collect()
    }

    /// Coefficients of the m-fold composition: the returned pair
    /// `(offset, k)` satisfies `(T^m x)[j] = sum_t k[t] * x[j + offset + t]`.
    ///
    /// Entries can vanish mod a at the ends for non-invertible rules; the
    /// vector still spans the full conservative interval
    /// `[m*min_dep, m*max_dep]`.
    pub fn composition_coeffs(&self, m: u64) -> (i64, Vec<u8>) {
        let a = self.modulus.get() as u64;
        if m == 0 {
            return (0, vec![1]);
        }
        let base: Vec<u8> = self.dep_coeffs().to_vec();
        let mut acc: Vec<u8> = base.clone();
        for _ in 1..m {
            let mut next = vec![0u8; acc.len() + base.len() - 1];
            for (i, &x) in acc.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                for (j, &y) in base.iter().enumerate() {
                    let v = next[i + j] as u64 + x as u64 * y as u64;
                    next[i + j] = (v % a) as u8;
                }
            }
            acc = next;
        }
        (m as i64 * self.min_dep, acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_two_sided_binary_rule() {
        // additive two-sided rule over Z_2
        let r = LocalRule::new(2, &[1, 0, 1]).unwrap();
        assert_eq!(r.radius(), 1);
        assert!(r.left_invertible());
        assert!(r.right_invertible());
        assert!(!r.one_sided());
        assert_eq!((r.min_dep(), r.max_dep()), (-1, 1));
    }

    #[test]
    fn validate_rejects_all_zero() {
        assert_eq!(
            LocalRule::new(2, &[0, 0, 0]).unwrap_err(),
            Error::AllZeroRule { a: 2 }
        );
        // reduction can zero everything out
        assert_eq!(
            LocalRule::new(2, &[2, 4, 6]).unwrap_err(),
            Error::AllZeroRule { a: 2 }
        );
    }

    #[test]
    fn validate_one_sided_non_invertible() {
        let r = LocalRule::new(4, &[0, 1, 2]).unwrap();
        assert_eq!(r.radius(), 1);
        assert!(r.one_sided());
        assert!(!r.right_invertible(), "gcd(2,4)=2");
        assert!(!r.left_invertible(), "gcd(0,4)=4");
        assert_eq!((r.min_dep(), r.max_dep()), (0, 1));
    }

    #[test]
    fn validate_rejects_bad_shapes() {
        assert!(matches!(
            LocalRule::new(1, &[1, 0, 1]),
            Err(Error::BadAlphabet { a: 1 })
        ));
        assert!(matches!(
            LocalRule::new(2, &[1, 1]),
            Err(Error::BadCoeffLength { len: 2 })
        ));
        assert!(matches!(
            LocalRule::new(2, &[1]),
            Err(Error::BadCoeffLength { len: 1 })
        ));
    }

    #[test]
    fn negative_coeffs_reduce_mod_a() {
        let r = LocalRule::new(3, &[-1, 0, 4]).unwrap();
        assert_eq!(r.coeff(-1), 2);
        assert_eq!(r.coeff(0), 0);
        assert_eq!(r.coeff(1), 1);
    }

    #[test]
    fn literal_round_trip() {
        let r = LocalRule::parse("a=2;coeffs=1,0,1").unwrap();
        assert_eq!(r.to_literal(), "a=2;coeffs=1,0,1");
        let s = LocalRule::parse("a=4;coeffs=0,1,2").unwrap();
        assert_eq!(s.to_literal(), "a=4;coeffs=0,1,2");
        assert!(LocalRule::parse("a=2,coeffs=1,0,1").is_err());
        assert!(LocalRule::parse("coeffs=1,0,1").is_err());
        assert!(LocalRule::parse("a=2;coeffs=1,x,1").is_err());
    }

    #[test]
    fn composition_coeffs_match_binomials_for_additive_rule() {
        // one-sided rule y[i] = x[i] + x[i+1] over Z_2: m-fold composition
        // has binomial coefficients mod 2
        let r = LocalRule::new(2, &[0, 1, 1]).unwrap();
        let (off, k) = r.composition_coeffs(4);
        assert_eq!(off, 0);
        assert_eq!(k, vec![1, 0, 0, 0, 1]); // C(4,l) mod 2
        let (off0, k0) = r.composition_coeffs(0);
        assert_eq!((off0, k0), (0, vec![1]));
    }

    #[test]
    fn composition_can_collapse_mod_composite() {
        // (1 + 2*shift)^2 = 1 mod 4
        let r = LocalRule::new(4, &[0, 1, 2]).unwrap();
        let (off, k) = r.composition_coeffs(2);
        assert_eq!(off, 0);
        assert_eq!(k, vec![1, 0, 0]);
    }
}
