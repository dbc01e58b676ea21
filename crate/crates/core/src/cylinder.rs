//! Cylinder events and their exact probabilities under the uniform
//! product measure.
//!
//! An event is a finite intersection of pulled-back cylinders
//! `/\_i Phi^{-(m_i,n_i)} B_i`. Its measure is computed one of two ways:
//! over a prime alphabet each constrained coordinate is an affine
//! equation in the source cells and the solution count falls out of
//! Gaussian elimination; otherwise the source cells are enumerated
//! exhaustively (budgeted). The two routes are checked against each
//! other in the test suite.

use crate::error::{Error, Result};
use crate::exact::ExactProb;
use crate::joint::{pow_checked, Enumerator};
use crate::rule::LocalRule;
use crate::types::{ActionIndex, Interval, Modulus};
use crate::window::needed_support;

/// Configurations with prescribed symbols on a finite interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cylinder {
    interval: Interval,
    symbols: Vec<u8>,
}

impl Cylinder {
    pub fn new(lo: i64, symbols: Vec<u8>, modulus: Modulus) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Parse("cylinder needs at least one symbol".into()));
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s as u32 >= modulus.get()) {
            return Err(Error::Parse(format!(
                "cylinder symbol {bad} out of range for alphabet {modulus}"
            )));
        }
        let interval = Interval::new(lo, lo + symbols.len() as i64 - 1);
        Ok(Cylinder { interval, symbols })
    }

    /// Parse the cylinder literal `[<lo>:<symbols>]`, symbols as base-36
    /// digit characters, e.g. `[0:0]`, `[-1:01]`.
    pub fn parse(literal: &str, modulus: Modulus) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("cylinder literal {literal:?}: {msg}"));
        let inner = literal
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| bad("expected [lo:symbols]"))?;
        let (lo, syms) = inner.split_once(':').ok_or_else(|| bad("missing `:`"))?;
        let lo: i64 = lo.parse().map_err(|_| bad("bad left coordinate"))?;
        let symbols: Vec<u8> = syms
            .chars()
            .map(|c| {
                c.to_digit(36)
                    .map(|d| d as u8)
                    .ok_or_else(|| bad("bad symbol digit"))
            })
            .collect::<Result<_>>()?;
        Cylinder::new(lo, symbols, modulus)
    }

    pub fn to_literal(&self) -> String {
        let syms: String = self
            .symbols
            .iter()
            .map(|&s| std::char::from_digit(s as u32, 36).expect("symbol < 36"))
            .collect();
        format!("[{}:{}]", self.interval.lo, syms)
    }

    #[inline]
    pub fn interval(&self) -> Interval {
        self.interval
    }

    #[inline]
    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn translate(&self, by: i64) -> Cylinder {
        Cylinder {
            interval: self.interval.translate(by),
            symbols: self.symbols.clone(),
        }
    }
}

/// The partition of configuration space by symbol patterns on `[-M, M]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CylinderPartition {
    radius: u32,
    modulus: Modulus,
}

impl CylinderPartition {
    pub fn new(radius: u32, modulus: Modulus) -> Self {
        CylinderPartition { radius, modulus }
    }

    #[inline]
    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn interval(&self) -> Interval {
        Interval::new(-(self.radius as i64), self.radius as i64)
    }

    pub fn atom_count(&self) -> u128 {
        (self.modulus.get() as u128).pow(2 * self.radius + 1)
    }

    /// All atoms, in lexicographic symbol order.
    pub fn atoms(&self) -> impl Iterator<Item = Cylinder> + '_ {
        let len = (2 * self.radius + 1) as usize;
        let a = self.modulus.get() as u8;
        let lo = -(self.radius as i64);
        let modulus = self.modulus;
        let mut digits = vec![0u8; len];
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let atom = Cylinder::new(lo, digits.clone(), modulus).expect("valid atom");
            // increment most-significant-first so emission is lexicographic
            let mut i = len;
            loop {
                if i == 0 {
                    done = true;
                    break;
                }
                i -= 1;
                digits[i] += 1;
                if digits[i] < a {
                    break;
                }
                digits[i] = 0;
            }
            Some(atom)
        })
    }
}

/// A finite intersection of pulled-back cylinder constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventSpec {
    constraints: Vec<(ActionIndex, Cylinder)>,
}

impl EventSpec {
    pub fn new(constraints: Vec<(ActionIndex, Cylinder)>) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::Parse("event needs at least one constraint".into()));
        }
        Ok(EventSpec { constraints })
    }

    pub fn single(act: ActionIndex, cylinder: Cylinder) -> Self {
        EventSpec {
            constraints: vec![(act, cylinder)],
        }
    }

    pub fn constraints(&self) -> &[(ActionIndex, Cylinder)] {
        &self.constraints
    }

    /// Translate every constraint's shift exponent by `dn`.
    pub fn translate_shift(&self, dn: i64) -> EventSpec {
        EventSpec {
            constraints: self
                .constraints
                .iter()
                .map(|(act, cyl)| (ActionIndex::new(act.m, act.n + dn), cyl.clone()))
                .collect(),
        }
    }

    /// Sorted distinct source cells across all constraint supports.
    pub fn source_cells(&self, rule: &LocalRule) -> Vec<i64> {
        let mut cells: Vec<i64> = Vec::new();
        for (act, cyl) in &self.constraints {
            let support = needed_support(cyl.interval(), *act, rule);
            cells.extend(support.iter());
        }
        cells.sort_unstable();
        cells.dedup();
        cells
    }
}

/// Measure of a single cylinder: `a^-(number of fixed coordinates)`.
pub fn cylinder_measure(cylinder: &Cylinder, modulus: Modulus) -> ExactProb {
    ExactProb::new(1, modulus, cylinder.interval().len() as u32)
}

/// Source interval the pulled-back cylinder depends on.
pub fn pullback_support(cylinder: &Cylinder, act: ActionIndex, rule: &LocalRule) -> Interval {
    needed_support(cylinder.interval(), act, rule)
}

/// Exact measure of the event; field route for prime alphabets,
/// budgeted exhaustive enumeration otherwise.
pub fn event_measure(event: &EventSpec, rule: &LocalRule, budget: u64) -> Result<ExactProb> {
    if rule.modulus().is_prime() {
        event_measure_field(event, rule)
    } else {
        event_measure_enumerated(event, rule, budget)
    }
}

/// Exhaustive enumeration of all assignments on the union of constraint
/// supports, evaluating each constraint by actual window stepping.
pub fn event_measure_enumerated(
    event: &EventSpec,
    rule: &LocalRule,
    budget: u64,
) -> Result<ExactProb> {
    let cells = event.source_cells(rule);
    let targets: Vec<(ActionIndex, Interval)> = event
        .constraints()
        .iter()
        .map(|(act, cyl)| (*act, cyl.interval()))
        .collect();
    let enumerator = Enumerator::new(rule, &targets, cells, budget)?;
    let expected: Vec<&[u8]> = event
        .constraints()
        .iter()
        .map(|(_, cyl)| cyl.symbols())
        .collect();
    let count = enumerator.count_matching(&expected);
    Ok(ExactProb::new(
        count,
        rule.modulus(),
        enumerator.cell_count() as u32,
    ))
}

/// Solution counting over the prime field Z_a: each constrained
/// coordinate contributes one affine equation in the source cells.
pub fn event_measure_field(event: &EventSpec, rule: &LocalRule) -> Result<ExactProb> {
    let a = rule.modulus().get();
    if !rule.modulus().is_prime() {
        return Err(Error::NotPrime { n: a as u64 });
    }
    let cells = event.source_cells(rule);
    let cell_index = |coord: i64| -> usize {
        cells.binary_search(&coord).expect("cell in union of supports")
    };

    // rows: coefficients per cell plus the right-hand side
    let ncols = cells.len() + 1;
    let mut rows: Vec<Vec<u32>> = Vec::new();
    for (act, cyl) in event.constraints() {
        let (offset, k) = rule.composition_coeffs(act.m);
        for (idx, j) in cyl.interval().iter().enumerate() {
            let mut row = vec![0u32; ncols];
            for (t, &c) in k.iter().enumerate() {
                if c != 0 {
                    let coord = j + act.n + offset + t as i64;
                    let col = cell_index(coord);
                    row[col] = (row[col] + c as u32) % a;
                }
            }
            row[ncols - 1] = cyl.symbols()[idx] as u32;
            rows.push(row);
        }
    }

    match solve_rank(&mut rows, cells.len(), a) {
        None => Ok(ExactProb::zero(rule.modulus())),
        Some(rank) => {
            let free = (cells.len() - rank) as u32;
            let count = pow_checked(a, free)?;
            Ok(ExactProb::new(count, rule.modulus(), cells.len() as u32))
        }
    }
}

/// Forward elimination mod prime `p`; returns the rank, or None if the
/// system is inconsistent.
fn solve_rank(rows: &mut [Vec<u32>], nvars: usize, p: u32) -> Option<usize> {
    let inv = |x: u32| -> u32 {
        // Fermat inverse; p is prime and x != 0
        let mut result = 1u64;
        let mut base = x as u64;
        let mut e = p as u64 - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base % p as u64;
            }
            base = base * base % p as u64;
            e >>= 1;
        }
        result as u32
    };

    let mut rank = 0;
    for col in 0..nvars {
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, pivot);
        let scale = inv(rows[rank][col]) as u64;
        for v in rows[rank][col..].iter_mut() {
            *v = (*v as u64 * scale % p as u64) as u32;
        }
        for r in 0..rows.len() {
            if r != rank && rows[r][col] != 0 {
                let factor = rows[r][col] as u64;
                for c in col..rows[0].len() {
                    let sub = factor * rows[rank][c] as u64 % p as u64;
                    rows[r][c] = ((rows[r][c] as u64 + p as u64 - sub) % p as u64) as u32;
                }
            }
        }
        rank += 1;
    }
    // inconsistent iff a zero row has nonzero right-hand side
    let ncols = rows.first().map_or(1, |r| r.len());
    for row in rows.iter().skip(rank) {
        if row[..ncols - 1].iter().all(|&v| v == 0) && row[ncols - 1] != 0 {
            return None;
        }
    }
    Some(rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ExactProb;

    fn m(a: u64) -> Modulus {
        Modulus::new(a).unwrap()
    }

    fn rule90() -> LocalRule {
        LocalRule::new(2, &[1, 0, 1]).unwrap()
    }

    fn right_pair() -> LocalRule {
        LocalRule::new(2, &[0, 1, 1]).unwrap()
    }

    const BUDGET: u64 = 1 << 24;

    #[test]
    fn cylinder_measures() {
        let b = Cylinder::new(0, vec![0], m(2)).unwrap();
        assert_eq!(cylinder_measure(&b, m(2)), ExactProb::new(1, m(2), 1));
        let b = Cylinder::new(-1, vec![0, 1], m(2)).unwrap();
        assert_eq!(cylinder_measure(&b, m(2)), ExactProb::new(1, m(2), 2));
        let b = Cylinder::new(0, vec![0, 1, 2], m(3)).unwrap();
        assert_eq!(cylinder_measure(&b, m(3)), ExactProb::new(1, m(3), 3));
    }

    #[test]
    fn cylinder_literals() {
        let b = Cylinder::parse("[0:0]", m(2)).unwrap();
        assert_eq!(b.interval(), Interval::new(0, 0));
        let b = Cylinder::parse("[-1:01]", m(2)).unwrap();
        assert_eq!(b.interval(), Interval::new(-1, 0));
        assert_eq!(b.symbols(), &[0, 1]);
        assert_eq!(b.to_literal(), "[-1:01]");
        assert!(Cylinder::parse("[0:2]", m(2)).is_err());
        assert!(Cylinder::parse("0:0", m(2)).is_err());
        assert!(Cylinder::parse("[0:]", m(2)).is_err());
    }

    #[test]
    fn pullback_supports() {
        let b = Cylinder::new(0, vec![0], m(2)).unwrap();
        assert_eq!(
            pullback_support(&b, ActionIndex::new(1, 0), &right_pair()),
            Interval::new(0, 1)
        );
        assert_eq!(
            pullback_support(&b, ActionIndex::new(1, 0), &rule90()),
            Interval::new(-1, 1)
        );
        let b2 = Cylinder::new(0, vec![0, 0], m(2)).unwrap();
        assert_eq!(
            pullback_support(&b2, ActionIndex::new(2, 3), &rule90()),
            Interval::new(1, 6)
        );
    }

    #[test]
    fn event_measure_rule90_pair() {
        // x[0] = 0 and x[-1]+x[1] = 0
        let b = Cylinder::new(0, vec![0], m(2)).unwrap();
        let e = EventSpec::new(vec![
            (ActionIndex::IDENTITY, b.clone()),
            (ActionIndex::new(1, 0), b),
        ])
        .unwrap();
        let expect = ExactProb::new(1, m(2), 2); // 1/4
        assert_eq!(event_measure(&e, &rule90(), BUDGET).unwrap(), expect);
        assert_eq!(
            event_measure_enumerated(&e, &rule90(), BUDGET).unwrap(),
            expect
        );
    }

    #[test]
    fn event_measure_disjoint_supports() {
        let b = Cylinder::new(0, vec![0], m(2)).unwrap();
        let e = EventSpec::new(vec![
            (ActionIndex::new(1, 5), b.clone()),
            (ActionIndex::IDENTITY, b),
        ])
        .unwrap();
        // supports {5,6} and {0}: three cells, 2 of 8 assignments
        assert_eq!(e.source_cells(&right_pair()), vec![0, 5, 6]);
        let expect = ExactProb::new(1, m(2), 2);
        assert_eq!(
            event_measure_enumerated(&e, &right_pair(), BUDGET).unwrap(),
            expect
        );
        assert_eq!(event_measure(&e, &right_pair(), BUDGET).unwrap(), expect);
    }

    #[test]
    fn event_measure_identity_is_cylinder_measure() {
        let b = Cylinder::new(-2, vec![1, 0, 1], m(2)).unwrap();
        let e = EventSpec::single(ActionIndex::IDENTITY, b.clone());
        assert_eq!(
            event_measure(&e, &rule90(), BUDGET).unwrap(),
            cylinder_measure(&b, m(2))
        );
    }

    #[test]
    fn event_measure_inconsistent_is_zero_not_error() {
        // x[0] = 0 and x[0] = 1
        let b0 = Cylinder::new(0, vec![0], m(2)).unwrap();
        let b1 = Cylinder::new(0, vec![1], m(2)).unwrap();
        let e = EventSpec::new(vec![
            (ActionIndex::IDENTITY, b0),
            (ActionIndex::IDENTITY, b1),
        ])
        .unwrap();
        assert!(event_measure(&e, &rule90(), BUDGET).unwrap().is_zero());
        assert!(event_measure_enumerated(&e, &rule90(), BUDGET)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn composite_alphabet_budget_applies() {
        let rule = LocalRule::new(4, &[0, 1, 2]).unwrap();
        let b = Cylinder::new(0, vec![0, 0, 0], m(4)).unwrap();
        let e = EventSpec::single(ActionIndex::new(3, 0), b);
        // support [0, 6]: 4^7 assignments > 2^10
        let err = event_measure(&e, &rule, 1024).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
        assert!(event_measure(&e, &rule, 1 << 20).is_ok());
    }

    #[test]
    fn partition_atoms_sum_to_one() {
        for a in [2u64, 3, 4] {
            for radius in 0..=2u32 {
                let part = CylinderPartition::new(radius, m(a));
                let total: u128 = part.atoms().count() as u128;
                assert_eq!(total, part.atom_count());
                // common denominator a^(2M+1): counts of 1 each must sum
                // to the full space
                let width = 2 * radius + 1;
                assert_eq!(total, (a as u128).pow(width));
            }
        }
    }

    #[test]
    fn field_and_enumeration_agree_on_overlapping_event() {
        let b = Cylinder::new(0, vec![0, 1], m(3)).unwrap();
        let c = Cylinder::new(1, vec![2], m(3)).unwrap();
        let rule = LocalRule::new(3, &[1, 2, 1]).unwrap();
        let e = EventSpec::new(vec![
            (ActionIndex::new(2, -1), b),
            (ActionIndex::new(1, 2), c),
        ])
        .unwrap();
        assert_eq!(
            event_measure_field(&e, &rule).unwrap(),
            event_measure_enumerated(&e, &rule, BUDGET).unwrap()
        );
    }
}
