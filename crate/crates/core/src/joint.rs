//! Exhaustive enumeration over source-cell assignments, shared by the
//! event-measure and join-partition machinery.
//!
//! The enumerator walks every assignment of symbols to a fixed list of
//! source cells and evaluates a set of observables, each the image of the
//! assignment under an action restricted to a target interval. Images
//! are computed by actual window stepping (not by precomposed linear
//! forms), which keeps this route independent of the field-algebra route
//! it is cross-checked against.
//!
//! Enumeration is data-parallel over assignment ranges when the
//! `parallel` feature is enabled; all outputs are integer counts merged
//! commutatively, so parallel and sequential results are identical.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::rule::LocalRule;
use crate::types::{ActionIndex, Interval};
use crate::window::needed_support;

/// `base^exp` as u128, or an overflow error.
pub(crate) fn pow_checked(base: u32, exp: u32) -> Result<u128> {
    (base as u128)
        .checked_pow(exp)
        .ok_or(Error::Overflow("alphabet power"))
}

/// One observed image: the action applied to the source, restricted to a
/// target interval.
#[derive(Debug, Clone)]
struct Observable {
    steps: u64,
    target_len: usize,
    /// Positions (into the cell list) of the support interval's cells,
    /// lowest coordinate first.
    support_positions: Vec<usize>,
}

/// Exhaustive assignment enumerator over an explicit cell list.
#[derive(Debug, Clone)]
pub struct Enumerator {
    a: u32,
    coeffs: Vec<u8>,
    shrink: usize,
    cells: Vec<i64>,
    observables: Vec<Observable>,
    target_lens: Vec<usize>,
    total: u128,
}

impl Enumerator {
    /// Build an enumerator for `targets := [(act, interval)]` over the
    /// given source cells. Every cell of every observable's support must
    /// be present in `cells`; the assignment space `a^cells.len()` must
    /// fit the budget.
    pub fn new(
        rule: &LocalRule,
        targets: &[(ActionIndex, Interval)],
        cells: Vec<i64>,
        budget: u64,
    ) -> Result<Self> {
        let a = rule.modulus().get();
        debug_assert!(cells.windows(2).all(|w| w[0] < w[1]), "cells sorted+distinct");
        let total = pow_checked(a, cells.len() as u32)?;
        if total > budget as u128 {
            return Err(Error::BudgetExceeded {
                needed: total,
                budget,
            });
        }
        let mut observables = Vec::with_capacity(targets.len());
        for &(act, target) in targets {
            let support = needed_support(target, act, rule);
            let support_positions = support
                .iter()
                .map(|coord| {
                    cells
                        .binary_search(&coord)
                        .map_err(|_| Error::Parse(format!("cell {coord} missing from enumeration set")))
                })
                .collect::<Result<Vec<_>>>()?;
            observables.push(Observable {
                steps: act.m,
                target_len: target.len(),
                support_positions,
            });
        }
        let target_lens = observables.iter().map(|o| o.target_len).collect();
        Ok(Enumerator {
            a,
            coeffs: rule.dep_coeffs().to_vec(),
            shrink: rule.shrink_per_step(),
            cells,
            observables,
            target_lens,
            total,
        })
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[i64] {
        &self.cells
    }

    pub fn assignment_count(&self) -> u128 {
        self.total
    }

    /// Per-observable label lengths, in declaration order.
    pub fn target_lens(&self) -> &[usize] {
        &self.target_lens
    }

    fn label_len(&self) -> usize {
        self.target_lens.iter().sum()
    }

    /// Evaluate observable `oi` on an assignment; the result occupies
    /// `buf[..target_len]`.
    #[inline]
    fn eval_observable<'b>(&self, oi: usize, assignment: &[u8], buf: &'b mut Vec<u8>) -> &'b [u8] {
        let obs = &self.observables[oi];
        buf.clear();
        buf.extend(obs.support_positions.iter().map(|&p| assignment[p]));
        let mut len = buf.len();
        for _ in 0..obs.steps {
            let out_len = len - self.shrink;
            for s in 0..out_len {
                let mut acc = 0u32;
                for (t, &c) in self.coeffs.iter().enumerate() {
                    acc += c as u32 * buf[s + t] as u32;
                }
                buf[s] = (acc % self.a) as u8;
            }
            len = out_len;
        }
        &buf[..obs.target_len]
    }

    fn seed_digits(&self, mut index: u128) -> Vec<u8> {
        let mut digits = vec![0u8; self.cells.len()];
        for d in digits.iter_mut() {
            *d = (index % self.a as u128) as u8;
            index /= self.a as u128;
        }
        digits
    }

    #[inline]
    fn advance_digits(&self, digits: &mut [u8]) {
        for d in digits.iter_mut() {
            *d += 1;
            if (*d as u32) < self.a {
                return;
            }
            *d = 0;
        }
    }

    fn count_range(&self, start: u128, end: u128, expected: &[&[u8]]) -> u128 {
        let mut digits = self.seed_digits(start);
        let mut buf = Vec::new();
        let mut count = 0u128;
        let mut t = start;
        while t < end {
            let ok = (0..self.observables.len())
                .all(|oi| self.eval_observable(oi, &digits, &mut buf) == expected[oi]);
            if ok {
                count += 1;
            }
            self.advance_digits(&mut digits);
            t += 1;
        }
        count
    }

    fn histogram_range(&self, start: u128, end: u128) -> HashMap<Vec<u8>, u64> {
        let mut digits = self.seed_digits(start);
        let mut buf = Vec::new();
        let mut label = vec![0u8; self.label_len()];
        let mut map: HashMap<Vec<u8>, u64> = HashMap::new();
        let mut t = start;
        while t < end {
            let mut at = 0;
            for oi in 0..self.observables.len() {
                let out = self.eval_observable(oi, &digits, &mut buf);
                label[at..at + out.len()].copy_from_slice(out);
                at += out.len();
            }
            match map.get_mut(label.as_slice()) {
                Some(c) => *c += 1,
                None => {
                    map.insert(label.clone(), 1);
                }
            }
            self.advance_digits(&mut digits);
            t += 1;
        }
        map
    }

    /// Number of assignments whose every observable matches the expected
    /// symbol pattern.
    pub fn count_matching(&self, expected: &[&[u8]]) -> u128 {
        debug_assert_eq!(expected.len(), self.observables.len());
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let ranges = split_ranges(self.total);
            if ranges.len() > 1 {
                return ranges
                    .into_par_iter()
                    .map(|(s, e)| self.count_range(s, e, expected))
                    .sum();
            }
        }
        self.count_matching_seq(expected)
    }

    /// Sequential reference path for [`Self::count_matching`].
    pub fn count_matching_seq(&self, expected: &[&[u8]]) -> u128 {
        self.count_range(0, self.total, expected)
    }

    /// Joint distribution of observable labels: for each concatenated
    /// label, the number of assignments producing it.
    pub fn label_histogram(&self) -> BTreeMap<Vec<u8>, u128> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let ranges = split_ranges(self.total);
            if ranges.len() > 1 {
                return ranges
                    .into_par_iter()
                    .map(|(s, e)| self.histogram_range(s, e))
                    .reduce(HashMap::new, |mut acc, part| {
                        for (k, v) in part {
                            *acc.entry(k).or_insert(0) += v;
                        }
                        acc
                    })
                    .into_iter()
                    .map(|(k, v)| (k, v as u128))
                    .collect();
            }
        }
        self.label_histogram_seq()
    }

    /// Sequential reference path for [`Self::label_histogram`].
    pub fn label_histogram_seq(&self) -> BTreeMap<Vec<u8>, u128> {
        self.histogram_range(0, self.total)
            .into_iter()
            .map(|(k, v)| (k, v as u128))
            .collect()
    }
}

/// Split `[0, total)` into contiguous ranges sized for the thread pool;
/// tiny workloads stay in one piece.
#[cfg(feature = "parallel")]
fn split_ranges(total: u128) -> Vec<(u128, u128)> {
    const MIN_CHUNK: u128 = 1 << 12;
    let threads = rayon::current_num_threads() as u128;
    let want = threads * 8;
    let chunks = (total / MIN_CHUNK).clamp(1, want).max(1);
    let size = total.div_ceil(chunks);
    let mut out = Vec::new();
    let mut start = 0;
    while start < total {
        let end = (start + size).min(total);
        out.push((start, end));
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    
    use crate::window::{apply_action, WindowConfig};

    fn rule90() -> LocalRule {
        LocalRule::new(2, &[1, 0, 1]).unwrap()
    }

    /// Oracle: evaluate an observable by building a real window and
    /// applying the action through the public stepping API.
    fn oracle_label(
        rule: &LocalRule,
        cells: &[i64],
        digits: &[u8],
        act: ActionIndex,
        target: Interval,
    ) -> Vec<u8> {
        let support = needed_support(target, act, rule);
        let symbols: Vec<u8> = support
            .iter()
            .map(|c| digits[cells.binary_search(&c).unwrap()])
            .collect();
        let w = WindowConfig::new(support.lo, symbols, rule.modulus()).unwrap();
        let image = apply_action(&w, act, rule).unwrap();
        target
            .iter()
            .map(|i| image.symbol_at(i).unwrap())
            .collect()
    }

    #[test]
    fn histogram_matches_stepping_oracle() {
        let rule = rule90();
        let targets = vec![
            (ActionIndex::IDENTITY, Interval::new(-1, 1)),
            (ActionIndex::new(1, 0), Interval::new(-1, 1)),
        ];
        let cells: Vec<i64> = (-2..=2).collect();
        let en = Enumerator::new(&rule, &targets, cells.clone(), 1 << 20).unwrap();
        let hist = en.label_histogram();

        // rebuild by brute force through the window API
        let mut expect: BTreeMap<Vec<u8>, u128> = BTreeMap::new();
        let total = 1u32 << cells.len();
        for t in 0..total {
            let digits: Vec<u8> = (0..cells.len()).map(|i| ((t >> i) & 1) as u8).collect();
            let mut label = Vec::new();
            for &(act, target) in &targets {
                label.extend(oracle_label(&rule, &cells, &digits, act, target));
            }
            *expect.entry(label).or_insert(0) += 1;
        }
        assert_eq!(hist, expect);
        // invertible ends: 32 atoms of one assignment each
        assert_eq!(hist.len(), 32);
        assert!(hist.values().all(|&c| c == 1));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let rule = LocalRule::new(3, &[1, 1, 1]).unwrap();
        let targets = vec![
            (ActionIndex::new(1, 1), Interval::new(0, 1)),
            (ActionIndex::IDENTITY, Interval::new(0, 0)),
        ];
        let cells: Vec<i64> = Interval::new(0, 4).iter().collect();
        let en = Enumerator::new(&rule, &targets, cells, 1 << 20).unwrap();
        assert_eq!(en.label_histogram(), en.label_histogram_seq());
        let expected: Vec<&[u8]> = vec![&[0, 0], &[0]];
        assert_eq!(
            en.count_matching(&expected),
            en.count_matching_seq(&expected)
        );
    }

    #[test]
    fn budget_is_enforced() {
        let rule = rule90();
        let targets = vec![(ActionIndex::IDENTITY, Interval::new(0, 20))];
        let cells: Vec<i64> = (0..=20).collect();
        assert!(matches!(
            Enumerator::new(&rule, &targets, cells, 1 << 10),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
