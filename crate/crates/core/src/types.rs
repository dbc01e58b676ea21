//! Small shared domain types: the symbol alphabet, closed integer
//! intervals of cell coordinates, and lattice indices of the action.

use std::fmt;

use crate::error::{Error, Result};

/// Alphabet / ring size `a` of the symbol ring Z_a.
///
/// Symbols are stored one per byte, which caps `a` at 255.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Modulus(u32);

impl Modulus {
    pub fn new(a: u64) -> Result<Self> {
        if !(2..=255).contains(&a) {
            return Err(Error::BadAlphabet { a });
        }
        Ok(Modulus(a as u32))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn reduce(self, v: u64) -> u8 {
        (v % self.0 as u64) as u8
    }

    #[inline]
    pub fn add(self, x: u8, y: u8) -> u8 {
        let s = x as u32 + y as u32;
        if s >= self.0 {
            (s - self.0) as u8
        } else {
            s as u8
        }
    }

    /// True iff the alphabet size is prime.
    pub fn is_prime(self) -> bool {
        let n = self.0;
        if n < 4 {
            return n >= 2;
        }
        if n.is_multiple_of(2) {
            return false;
        }
        let mut d = 3;
        while d * d <= n {
            if n.is_multiple_of(d) {
                return false;
            }
            d += 2;
        }
        true
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Closed interval `[lo, hi]` of cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub fn new(lo: i64, hi: i64) -> Self {
        debug_assert!(hi >= lo, "inverted interval [{lo},{hi}]");
        Interval { lo, hi }
    }

    #[inline]
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    #[inline]
    pub fn contains(&self, i: i64) -> bool {
        self.lo <= i && i <= self.hi
    }

    #[inline]
    pub fn contains_interval(&self, other: Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn translate(&self, by: i64) -> Interval {
        Interval::new(self.lo + by, self.hi + by)
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Lattice index `(m, n)` of the action: `m` iterations of the automaton
/// composed with `n` applications of the shift. The automaton exponent is
/// unsigned because the automaton is generally not invertible; the shift
/// exponent may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionIndex {
    pub m: u64,
    pub n: i64,
}

impl ActionIndex {
    pub const IDENTITY: ActionIndex = ActionIndex { m: 0, n: 0 };

    pub fn new(m: u64, n: i64) -> Self {
        ActionIndex { m, n }
    }
}

impl fmt::Display for ActionIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.m, self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modulus_rejects_out_of_range() {
        assert!(Modulus::new(1).is_err());
        assert!(Modulus::new(0).is_err());
        assert!(Modulus::new(256).is_err());
        assert_eq!(Modulus::new(2).unwrap().get(), 2);
    }

    #[test]
    fn modulus_primality() {
        let primes = [2u64, 3, 5, 7, 11, 13, 251];
        let composites = [4u64, 6, 9, 15, 255];
        for p in primes {
            assert!(Modulus::new(p).unwrap().is_prime(), "{p}");
        }
        for c in composites {
            assert!(!Modulus::new(c).unwrap().is_prime(), "{c}");
        }
    }

    #[test]
    fn interval_basics() {
        let i = Interval::new(-2, 3);
        assert_eq!(i.len(), 6);
        assert!(i.contains(-2) && i.contains(3) && !i.contains(4));
        assert_eq!(i.hull(Interval::new(5, 6)), Interval::new(-2, 6));
        assert_eq!(i.translate(2), Interval::new(0, 5));
    }
}
