//! Join-partition entropies along an index sequence, the closed-form
//! directional sequence entropy, and structural verification of the
//! joins.
//!
//! A join observes, for each point `(m_i, n_i)` of the sequence (the
//! identity point is always included first), which symbol pattern the
//! image of the configuration shows on `[-M, M]`. Atoms of the join are
//! the label tuples; their exact probabilities come from exhaustive
//! enumeration over the hull of the pulled-back supports.

use std::collections::BTreeMap;

use num_rational::Ratio;

use crate::cone::{validate_sequence, Rational64, SequenceS};
use crate::error::{Error, Result};
use crate::exact::{entropy_of_counts, ExactLogSum, ExactProb, Rational};
use crate::joint::{pow_checked, Enumerator};
use crate::rule::LocalRule;
use crate::types::{ActionIndex, Interval, Modulus};
use crate::window::needed_support;

/// Atoms of a join of pulled-back partitions, with exact counts over the
/// enumerated source window.
#[derive(Debug, Clone)]
pub struct JoinAtoms {
    atoms: BTreeMap<Vec<u8>, u128>,
    /// Label width per observed point (all `2M+1` here).
    component_lens: Vec<usize>,
    window: Interval,
    base: Modulus,
}

impl JoinAtoms {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn atoms(&self) -> &BTreeMap<Vec<u8>, u128> {
        &self.atoms
    }

    /// Source window interval the enumeration ran over.
    pub fn window(&self) -> Interval {
        self.window
    }

    pub fn assignment_count(&self) -> u128 {
        (self.base.get() as u128).pow(self.window.len() as u32)
    }

    pub fn probability(&self, count: u128) -> ExactProb {
        ExactProb::new(count, self.base, self.window.len() as u32)
    }

    /// All atoms share one measure.
    pub fn is_uniform(&self) -> bool {
        let mut values = self.atoms.values();
        match values.next() {
            None => true,
            Some(&first) => values.all(|&c| c == first),
        }
    }

    /// Exact Shannon entropy in nats.
    pub fn entropy(&self) -> ExactLogSum {
        entropy_of_counts(
            self.atoms.values().copied(),
            self.base,
            self.window.len() as u32,
        )
    }

    /// Marginal label distribution of one observed point.
    pub fn marginal(&self, point: usize) -> BTreeMap<Vec<u8>, u128> {
        let start: usize = self.component_lens[..point].iter().sum();
        let len = self.component_lens[point];
        let mut out = BTreeMap::new();
        for (label, &count) in &self.atoms {
            *out.entry(label[start..start + len].to_vec()).or_insert(0) += count;
        }
        out
    }

    pub fn component_lens(&self) -> &[usize] {
        &self.component_lens
    }

    /// Joint measure equals the product of per-point marginals for every
    /// atom (exact).
    pub fn factorizes(&self) -> Result<bool> {
        let marginals: Vec<BTreeMap<Vec<u8>, u128>> =
            (0..self.component_lens.len()).map(|i| self.marginal(i)).collect();
        for (label, &count) in &self.atoms {
            let mut product = ExactProb::one(self.base);
            let mut start = 0;
            for (i, &len) in self.component_lens.iter().enumerate() {
                let key = &label[start..start + len];
                let c = marginals[i].get(key).copied().unwrap_or(0);
                product = product.mul(&self.probability(c))?;
                start += len;
            }
            if self.probability(count) != product {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Join over explicit action points (no implicit identity), each observed
/// through the partition by symbols on `[-M, M]`.
pub fn join_atoms_points(
    points: &[ActionIndex],
    partition_radius: u32,
    rule: &LocalRule,
    budget: u64,
) -> Result<JoinAtoms> {
    let m = partition_radius as i64;
    let target = Interval::new(-m, m);
    let targets: Vec<(ActionIndex, Interval)> =
        points.iter().map(|&p| (p, target)).collect();
    let window = targets
        .iter()
        .map(|&(act, t)| needed_support(t, act, rule))
        .reduce(|acc, s| acc.hull(s))
        .unwrap_or(target);
    let cells: Vec<i64> = window.iter().collect();
    let enumerator = Enumerator::new(rule, &targets, cells, budget)?;
    let atoms = enumerator.label_histogram();
    Ok(JoinAtoms {
        atoms,
        component_lens: enumerator.target_lens().to_vec(),
        window,
        base: rule.modulus(),
    })
}

/// Join along a sequence prefix with the identity point prepended.
pub fn join_atoms(
    seq: &SequenceS,
    partition_radius: u32,
    rule: &LocalRule,
    budget: u64,
) -> Result<JoinAtoms> {
    let mut points = Vec::with_capacity(seq.len() + 1);
    points.push(ActionIndex::IDENTITY);
    points.extend_from_slice(seq.points());
    join_atoms_points(&points, partition_radius, rule, budget)
}

/// Exact join entropy in nats.
pub fn join_entropy(
    seq: &SequenceS,
    partition_radius: u32,
    rule: &LocalRule,
    budget: u64,
) -> Result<ExactLogSum> {
    Ok(join_atoms(seq, partition_radius, rule, budget)?.entropy())
}

/// One prefix length of an entropy profile.
#[derive(Debug, Clone)]
pub struct ProfileRow {
    /// Number of non-identity points in the prefix.
    pub l: usize,
    pub entropy: ExactLogSum,
    pub entropy_nats: f64,
    /// `H_l / (l+1)`, the normalization the sequence entropy uses.
    pub per_step_nats: f64,
    pub atoms: u128,
    pub window: Interval,
    pub uniform: bool,
}

/// Entropy profile over all prefixes of a sequence, with the closed-form
/// target where the hypotheses hold.
#[derive(Debug, Clone)]
pub struct EntropyProfile {
    pub rows: Vec<ProfileRow>,
    pub closed_form: Option<ClosedFormEntropy>,
}

impl EntropyProfile {
    /// Profile rows are exactly equal (at the rational level).
    pub fn exactly_equal(&self, other: &EntropyProfile) -> bool {
        self.rows.len() == other.rows.len()
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(a, b)| a.entropy == b.entropy)
    }
}

/// Normalized join entropies `H_l / (l+1)` for every prefix length
/// `l = 0 ..= len`, identity point included.
pub fn sequence_entropy_profile(
    seq: &SequenceS,
    partition_radius: u32,
    rule: &LocalRule,
    budget: u64,
) -> Result<EntropyProfile> {
    let mut rows = Vec::with_capacity(seq.len() + 1);
    for l in 0..=seq.len() {
        let join = join_atoms(&seq.prefix(l), partition_radius, rule, budget)?;
        let entropy = join.entropy();
        let entropy_nats = entropy.to_f64();
        rows.push(ProfileRow {
            l,
            entropy_nats,
            per_step_nats: entropy_nats / (l + 1) as f64,
            atoms: join.atom_count() as u128,
            window: join.window(),
            uniform: join.is_uniform(),
            entropy,
        });
    }
    let closed_form = closed_form_entropy(rule, seq).ok();
    Ok(EntropyProfile { rows, closed_form })
}

/// The closed-form directional sequence entropy
/// `2 r ln(a) * limsup m_l / l`, with the limsup evaluated as the max of
/// `m_l / l` over the tail half of the finite prefix.
#[derive(Debug, Clone)]
pub struct ClosedFormEntropy {
    pub exact: ExactLogSum,
    pub value_nats: f64,
    /// Finite-prefix surrogate for the limsup.
    pub limsup: Rational64,
    /// 1-based index where the evaluated tail starts.
    pub tail_start: usize,
}

pub fn closed_form_entropy(rule: &LocalRule, seq: &SequenceS) -> Result<ClosedFormEntropy> {
    let report = validate_sequence(seq, None, None, None);
    let mut failed = Vec::new();
    if !report.strictly_monotone {
        failed.push("strictly monotone");
    }
    if !report.syndetic {
        failed.push("syndetic");
    }
    if !report.m_exceeds_n {
        failed.push("m_i > n_i");
    }
    if !rule.both_ends_invertible() {
        failed.push("gcd(lambda_{-r}, a) = gcd(lambda_r, a) = 1");
    }
    if seq.is_empty() {
        failed.push("nonempty sequence");
    }
    if !failed.is_empty() {
        return Err(Error::HypothesisViolation(failed.join(", ")));
    }

    let len = seq.len();
    let tail_start = len / 2 + 1;
    let limsup = seq
        .points()
        .iter()
        .enumerate()
        .skip(tail_start - 1)
        .map(|(idx, p)| Rational64::new(p.m as i64, idx as i64 + 1))
        .max()
        .expect("nonempty tail");
    let factor = Ratio::new(
        2 * rule.radius() as i128 * (*limsup.numer() as i128),
        *limsup.denom() as i128,
    );
    let exact = ExactLogSum::log_of(rule.modulus().get() as u128, factor);
    Ok(ClosedFormEntropy {
        value_nats: exact.to_f64(),
        exact,
        limsup,
        tail_start,
    })
}

/// Outcome of checking whether a join equals the full cylinder partition
/// of its predicted interval.
#[derive(Debug, Clone)]
pub struct StructureReport {
    pub predicted_interval: Interval,
    pub predicted_atoms: u128,
    pub actual_atoms: u128,
    /// Atom labels biject with full assignments on the predicted interval.
    pub bijection: bool,
    /// All atoms carry one common measure.
    pub uniform: bool,
    /// Every atom's measure equals `a^-len(predicted interval)`.
    pub predicted_measure: bool,
    /// First atom (in label order) whose count differs from the predicted
    /// one, with its exact probability.
    pub first_counterexample: Option<(Vec<u8>, ExactProb)>,
}

impl StructureReport {
    pub fn pass(&self) -> bool {
        self.bijection && self.uniform && self.predicted_measure
    }
}

/// Check the join of a sequence prefix against the predicted interval
/// `[-(r m_l + M) - n_l, (r m_l + M) - n_l]` (declared radius).
pub fn verify_atom_structure(
    seq: &SequenceS,
    partition_radius: u32,
    rule: &LocalRule,
    budget: u64,
) -> Result<StructureReport> {
    let join = join_atoms(seq, partition_radius, rule, budget)?;
    let last = seq.points().last().copied().unwrap_or(ActionIndex::IDENTITY);
    let reach = rule.radius() as i64 * last.m as i64 + partition_radius as i64;
    let predicted_interval = Interval::new(-reach - last.n, reach - last.n);
    let predicted_atoms = pow_checked(rule.modulus().get(), predicted_interval.len() as u32)?;
    let actual_atoms = join.atom_count() as u128;
    let bijection = actual_atoms == predicted_atoms;

    let cells = join.window().len() as u32;
    let predicted_count: Option<u128> = if cells as usize >= predicted_interval.len() {
        Some(pow_checked(rule.modulus().get(), cells - predicted_interval.len() as u32)?)
    } else {
        None
    };
    let uniform = join.is_uniform();
    let mut predicted_measure = predicted_count.is_some() && bijection;
    let mut first_counterexample = None;
    if let Some(expect) = predicted_count {
        for (label, &count) in join.atoms() {
            if count != expect {
                predicted_measure = false;
                first_counterexample = Some((label.clone(), join.probability(count)));
                break;
            }
        }
    } else if let Some((label, &count)) = join.atoms().iter().next() {
        first_counterexample = Some((label.clone(), join.probability(count)));
    }

    Ok(StructureReport {
        predicted_interval,
        predicted_atoms,
        actual_atoms,
        bijection,
        uniform,
        predicted_measure,
        first_counterexample,
    })
}

/// Exact equality of the two sequences' entropy profiles; the sequences
/// must share their automaton exponents and satisfy `m_i > n_i`.
pub fn direction_invariance_check(
    s1: &SequenceS,
    s2: &SequenceS,
    partition_radius: u32,
    rule: &LocalRule,
    budget: u64,
) -> Result<(bool, EntropyProfile, EntropyProfile)> {
    let same_m = s1.len() == s2.len()
        && s1
            .points()
            .iter()
            .zip(s2.points())
            .all(|(p, q)| p.m == q.m);
    if !same_m {
        return Err(Error::HypothesisViolation(
            "sequences must share their automaton exponents".into(),
        ));
    }
    for s in [s1, s2] {
        if !validate_sequence(s, None, None, None).m_exceeds_n {
            return Err(Error::HypothesisViolation("m_i > n_i".into()));
        }
    }
    let p1 = sequence_entropy_profile(s1, partition_radius, rule, budget)?;
    let p2 = sequence_entropy_profile(s2, partition_radius, rule, budget)?;
    let equal = p1.exactly_equal(&p2);
    Ok((equal, p1, p2))
}

/// True iff every join atom's measure factorizes exactly into the product
/// of its per-point marginal measures.
pub fn independence_join_check(
    seq: &SequenceS,
    partition_radius: u32,
    rule: &LocalRule,
    budget: u64,
) -> Result<bool> {
    join_atoms(seq, partition_radius, rule, budget)?.factorizes()
}

/// Convenience: `q` such that the entropy equals `q * ln(base)`, if the
/// entropy is such a multiple.
pub fn entropy_in_log_base(h: &ExactLogSum, base: u32) -> Option<Rational> {
    h.as_multiple_of_ln(base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::AffineRational;
    use crate::cone::make_syndetic_sequence;

    const BUDGET: u64 = 1 << 24;

    fn rule90() -> LocalRule {
        LocalRule::new(2, &[1, 0, 1]).unwrap()
    }

    fn right_pair() -> LocalRule {
        LocalRule::new(2, &[0, 1, 1]).unwrap()
    }

    fn explicit(points: &[(u64, i64)]) -> SequenceS {
        SequenceS::new(points.iter().map(|&(m, n)| ActionIndex::new(m, n)).collect())
    }

    fn int(v: i128) -> Rational {
        Rational::from_integer(v)
    }

    #[test]
    fn empty_join_is_the_partition_itself() {
        let join = join_atoms(&explicit(&[]), 1, &rule90(), BUDGET).unwrap();
        assert_eq!(join.atom_count(), 8);
        assert!(join.is_uniform());
        assert_eq!(join.window(), Interval::new(-1, 1));
        assert_eq!(join.entropy().as_multiple_of_ln(2), Some(int(3)));
    }

    #[test]
    fn single_point_join_rule90() {
        let join = join_atoms(&explicit(&[(1, 0)]), 1, &rule90(), BUDGET).unwrap();
        assert_eq!(join.window(), Interval::new(-2, 2));
        assert_eq!(join.atom_count(), 32);
        assert!(join.is_uniform());
        assert_eq!(join.entropy().as_multiple_of_ln(2), Some(int(5)));
    }

    #[test]
    fn two_point_join_rule90() {
        let join = join_atoms(&explicit(&[(1, 0), (2, 0)]), 1, &rule90(), BUDGET).unwrap();
        assert_eq!(join.window(), Interval::new(-3, 3));
        assert_eq!(join.entropy().as_multiple_of_ln(2), Some(int(7)));
    }

    #[test]
    fn profile_climbs_the_exact_ladder_for_gap_one() {
        let seq = make_syndetic_sequence(
            1,
            6,
            AffineRational::constant(Rational64::new(0, 1)),
        )
        .unwrap();
        let profile = sequence_entropy_profile(&seq, 1, &rule90(), BUDGET).unwrap();
        for row in &profile.rows {
            let expect = 2 * row.l as i128 + 3;
            assert_eq!(
                row.entropy.as_multiple_of_ln(2),
                Some(int(expect)),
                "l = {}",
                row.l
            );
            assert!(row.uniform);
        }
        let cf = profile.closed_form.as_ref().unwrap();
        assert_eq!(cf.limsup, Rational64::new(1, 1));
        assert_eq!(cf.exact.as_multiple_of_ln(2), Some(int(2)));
    }

    #[test]
    fn geometric_sequence_with_disjoint_supports_adds_full_partitions() {
        // points (2,6) and (4,12) pull the one-sided rule's observation
        // windows to [5,9] and [11,17], clear of each other and of the
        // identity window: every prefix contributes a full 3 ln 2
        let seq = crate::cone::make_geometric_sequence(2, 2, Rational64::new(3, 1)).unwrap();
        assert_eq!(
            seq.points(),
            &[ActionIndex::new(2, 6), ActionIndex::new(4, 12)]
        );
        let profile = sequence_entropy_profile(&seq, 1, &right_pair(), 1 << 20).unwrap();
        for row in &profile.rows {
            assert_eq!(
                row.entropy.as_multiple_of_ln(2),
                Some(int(3 * (row.l as i128 + 1))),
                "l = {}",
                row.l
            );
            assert!((row.per_step_nats - 3.0 * std::f64::consts::LN_2).abs() < 1e-12);
        }
        assert!(independence_join_check(&seq, 1, &right_pair(), 1 << 20).unwrap());
    }

    #[test]
    fn closed_form_values() {
        let seq = explicit(&[(2, 0), (4, 0), (6, 0)]);
        let cf = closed_form_entropy(&rule90(), &seq).unwrap();
        assert_eq!(cf.limsup, Rational64::new(2, 1));
        assert_eq!(cf.exact.as_multiple_of_ln(2), Some(int(4)));

        let wide = LocalRule::new(3, &[1, 0, 0, 0, 1]).unwrap();
        let seq = explicit(&[(1, 0), (2, 0), (3, 0)]);
        let cf = closed_form_entropy(&wide, &seq).unwrap();
        assert_eq!(cf.exact.as_multiple_of_ln(3), Some(int(4)));
    }

    #[test]
    fn closed_form_rejects_bad_hypotheses() {
        // one-sided rule: left end not invertible
        let err = closed_form_entropy(&right_pair(), &explicit(&[(1, 0)])).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation(_)));
        // m_i > n_i violated
        let err = closed_form_entropy(&rule90(), &explicit(&[(1, 2)])).unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation(_)));
    }

    #[test]
    fn atom_structure_passes_for_invertible_rule() {
        let seq = explicit(&[(1, 0), (2, 0), (3, 0)]);
        let report = verify_atom_structure(&seq, 1, &rule90(), BUDGET).unwrap();
        assert_eq!(report.predicted_interval, Interval::new(-4, 4));
        assert_eq!(report.actual_atoms, 1 << 9);
        assert!(report.pass(), "{report:?}");
    }

    #[test]
    fn atom_structure_fails_without_invertible_ends() {
        let rule = LocalRule::new(4, &[0, 1, 2]).unwrap();
        let seq = explicit(&[(1, 0)]);
        let report = verify_atom_structure(&seq, 1, &rule, BUDGET).unwrap();
        assert!(!report.pass());
        assert!(!report.bijection);
        assert_eq!(report.predicted_atoms, 4u128.pow(5));
        assert_eq!(report.actual_atoms, 128);
    }

    #[test]
    fn atom_structure_trivial_for_empty_sequence() {
        let report = verify_atom_structure(&explicit(&[]), 1, &rule90(), BUDGET).unwrap();
        assert!(report.pass());
        assert_eq!(report.predicted_interval, Interval::new(-1, 1));
    }

    #[test]
    fn direction_invariance_for_shifted_sequence() {
        let s1 = explicit(&[(1, 0), (2, 0), (3, 0)]);
        let s2 = explicit(&[(1, 0), (2, 1), (3, 2)]);
        let (equal, p1, _) = direction_invariance_check(&s1, &s2, 1, &rule90(), BUDGET).unwrap();
        assert!(equal);
        for row in &p1.rows {
            assert_eq!(
                row.entropy.as_multiple_of_ln(2),
                Some(int(2 * row.l as i128 + 3))
            );
        }
    }

    #[test]
    fn direction_invariance_rejects_mismatched_exponents() {
        let s1 = explicit(&[(1, 0), (2, 0)]);
        let s2 = explicit(&[(1, 0), (3, 0)]);
        assert!(matches!(
            direction_invariance_check(&s1, &s2, 1, &rule90(), BUDGET),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn independence_for_disjoint_supports() {
        // supports of (2,2) and (8,8) under the one-sided pair rule are
        // [1,5] and [7,17]; all three observed points factorize
        let seq = explicit(&[(2, 2), (8, 8)]);
        assert!(independence_join_check(&seq, 1, &right_pair(), 1 << 20).unwrap());
        // overlapping supports do not factorize
        let seq = explicit(&[(1, 0), (2, 0)]);
        assert!(!independence_join_check(&seq, 1, &rule90(), BUDGET).unwrap());
        // a single extra point over the identity with disjoint support
        let seq = explicit(&[(1, 5)]);
        assert!(independence_join_check(&seq, 1, &right_pair(), BUDGET).unwrap());
    }

    #[test]
    fn points_only_join_for_independence_sequence() {
        let points = [ActionIndex::new(2, 2), ActionIndex::new(8, 8)];
        let join = join_atoms_points(&points, 1, &right_pair(), 1 << 20).unwrap();
        assert_eq!(join.window(), Interval::new(1, 17));
        assert_eq!(join.entropy().as_multiple_of_ln(2), Some(int(6)));
    }

    #[test]
    fn refinement_monotonicity_small() {
        let seq = explicit(&[(1, 0), (2, 1), (4, -1)]);
        let profile = sequence_entropy_profile(&seq, 1, &rule90(), BUDGET).unwrap();
        for pair in profile.rows.windows(2) {
            assert!(pair[1].entropy_nats >= pair[0].entropy_nats - 1e-12);
        }
    }
}
