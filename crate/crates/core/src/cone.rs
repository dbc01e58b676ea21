//! Lattice points in a directional cone and the index sequences the
//! entropy and mixing experiments walk along.
//!
//! Cone membership is decided in exact rational arithmetic: for slope
//! `beta` and width `b`, the point `(m, n)` lies in the cone iff
//! `beta*m - b/2 <= n <= beta*m + b/2`.

use num_rational::Ratio;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rule::LocalRule;
use crate::types::ActionIndex;

pub type Rational64 = Ratio<i64>;

/// Parse `P/Q` or `P` into an exact rational (denominator positive).
pub fn parse_rational(s: &str) -> Result<Rational64> {
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    match s.split_once('/') {
        None => s
            .parse::<i64>()
            .map(Rational64::from_integer)
            .map_err(|_| bad()),
        Some((p, q)) => {
            let p: i64 = p.parse().map_err(|_| bad())?;
            let q: i64 = q.parse().map_err(|_| bad())?;
            if q <= 0 {
                return Err(bad());
            }
            Ok(Rational64::new(p, q))
        }
    }
}

/// Round toward zero.
fn trunc_toward_zero(r: Rational64) -> i64 {
    r.trunc().to_integer()
}

/// Round to nearest, ties toward zero.
fn round_ties_toward_zero(r: Rational64) -> i64 {
    let fl = r.floor().to_integer();
    let frac = r - Rational64::from_integer(fl);
    let half = Rational64::new(1, 2);
    if frac > half || (frac == half && fl < 0) {
        fl + 1
    } else {
        fl
    }
}

/// The cone of lattice points within vertical distance `b/2` of the line
/// `n = beta * m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionCone {
    beta: Rational64,
    b: Rational64,
}

impl DirectionCone {
    pub fn new(beta: Rational64, b: Rational64) -> Result<Self> {
        if b <= Rational64::zero() {
            return Err(Error::Parse(format!("cone width must be positive, got {b}")));
        }
        Ok(DirectionCone { beta, b })
    }

    pub fn beta(&self) -> Rational64 {
        self.beta
    }

    pub fn width(&self) -> Rational64 {
        self.b
    }

    /// Exact membership test.
    pub fn contains(&self, p: ActionIndex) -> bool {
        let center = self.beta * Rational64::from_integer(p.m as i64);
        let half = self.b / Rational64::from_integer(2);
        let n = Rational64::from_integer(p.n);
        center - half <= n && n <= center + half
    }

    /// All cone points with `0 <= m <= k-1`, sorted by `(m, n)`.
    pub fn points(&self, k: u64) -> Vec<ActionIndex> {
        let half = self.b / Rational64::from_integer(2);
        let mut out = Vec::new();
        for m in 0..k {
            let center = self.beta * Rational64::from_integer(m as i64);
            let lo = (center - half).ceil().to_integer();
            let hi = (center + half).floor().to_integer();
            for n in lo..=hi {
                out.push(ActionIndex::new(m, n));
            }
        }
        out
    }
}

/// Affine rational function of the automaton exponent, `slope*m + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AffineRational {
    pub slope: Rational64,
    pub offset: Rational64,
}

impl AffineRational {
    pub fn constant(c: Rational64) -> Self {
        AffineRational {
            slope: Rational64::zero(),
            offset: c,
        }
    }

    pub fn eval(&self, m: i64) -> Rational64 {
        self.slope * Rational64::from_integer(m) + self.offset
    }

    /// Parse expressions like `0`, `m/2`, `m-1`, `2m+1`, `-1/2*m+3/4`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("affine expression {s:?}: {msg}"));
        if s.is_empty() {
            return Err(bad("empty"));
        }
        // split into signed terms at top-level + and -
        let mut terms: Vec<(i64, String)> = Vec::new();
        let mut cur = String::new();
        let mut sign = 1i64;
        for ch in s.chars() {
            if (ch == '+' || ch == '-') && !cur.is_empty() {
                terms.push((sign, std::mem::take(&mut cur)));
                sign = if ch == '-' { -1 } else { 1 };
            } else if ch == '+' || ch == '-' {
                if ch == '-' {
                    sign = -sign;
                }
            } else {
                cur.push(ch);
            }
        }
        if cur.is_empty() {
            return Err(bad("dangling sign"));
        }
        terms.push((sign, cur));

        let mut slope = Rational64::zero();
        let mut offset = Rational64::zero();
        for (sgn, term) in terms {
            let sgn = Rational64::from_integer(sgn);
            if let Some(pos) = term.find('m') {
                let before = &term[..pos];
                let after = &term[pos + 1..];
                let mut coef = if before.is_empty() {
                    Rational64::from_integer(1)
                } else {
                    parse_rational(before.strip_suffix('*').unwrap_or(before))?
                };
                if !after.is_empty() {
                    let den = after
                        .strip_prefix('/')
                        .ok_or_else(|| bad("expected `/den` after m"))?;
                    let den: i64 = den.parse().map_err(|_| bad("bad denominator"))?;
                    if den <= 0 {
                        return Err(bad("denominator must be positive"));
                    }
                    coef /= Rational64::from_integer(den);
                }
                slope += sgn * coef;
            } else {
                offset += sgn * parse_rational(&term)?;
            }
        }
        Ok(AffineRational { slope, offset })
    }
}

/// A finite prefix of an index sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceS {
    points: Vec<ActionIndex>,
}

impl SequenceS {
    pub fn new(points: Vec<ActionIndex>) -> Self {
        SequenceS { points }
    }

    pub fn points(&self) -> &[ActionIndex] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn prefix(&self, l: usize) -> SequenceS {
        SequenceS {
            points: self.points[..l.min(self.points.len())].to_vec(),
        }
    }

    /// Parse a sequence literal:
    /// `syndetic:gap=G,len=L,n=<affine>` |
    /// `geometric:base=B,len=L,beta=P/Q` |
    /// `explicit:(m1,n1);(m2,n2);...`
    pub fn parse(literal: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("sequence literal {literal:?}: {msg}"));
        let (kind, rest) = literal
            .split_once(':')
            .ok_or_else(|| bad("expected `<kind>:<args>`"))?;
        match kind {
            "syndetic" => {
                let mut gap = None;
                let mut len = None;
                let mut n_of_m = None;
                for part in rest.split(',') {
                    let (key, value) = part
                        .split_once('=')
                        .ok_or_else(|| bad("expected key=value"))?;
                    match key {
                        "gap" => gap = Some(value.parse::<u64>().map_err(|_| bad("bad gap"))?),
                        "len" => len = Some(value.parse::<usize>().map_err(|_| bad("bad len"))?),
                        "n" => n_of_m = Some(AffineRational::parse(value)?),
                        other => return Err(bad(&format!("unknown key {other:?}"))),
                    }
                }
                let gap = gap.ok_or_else(|| bad("missing gap"))?;
                let len = len.ok_or_else(|| bad("missing len"))?;
                let n_of_m = n_of_m.ok_or_else(|| bad("missing n"))?;
                make_syndetic_sequence(gap, len, n_of_m)
            }
            "geometric" => {
                let mut base = None;
                let mut len = None;
                let mut beta = None;
                for part in rest.split(',') {
                    let (key, value) = part
                        .split_once('=')
                        .ok_or_else(|| bad("expected key=value"))?;
                    match key {
                        "base" => base = Some(value.parse::<u64>().map_err(|_| bad("bad base"))?),
                        "len" => len = Some(value.parse::<usize>().map_err(|_| bad("bad len"))?),
                        "beta" => beta = Some(parse_rational(value)?),
                        other => return Err(bad(&format!("unknown key {other:?}"))),
                    }
                }
                let base = base.ok_or_else(|| bad("missing base"))?;
                let len = len.ok_or_else(|| bad("missing len"))?;
                let beta = beta.ok_or_else(|| bad("missing beta"))?;
                make_geometric_sequence(base, len, beta)
            }
            "explicit" => {
                let mut points = Vec::new();
                for part in rest.split(';') {
                    let inner = part
                        .strip_prefix('(')
                        .and_then(|p| p.strip_suffix(')'))
                        .ok_or_else(|| bad("expected (m,n)"))?;
                    let (m, n) = inner.split_once(',').ok_or_else(|| bad("expected (m,n)"))?;
                    let m: u64 = m.parse().map_err(|_| bad("bad m"))?;
                    let n: i64 = n.parse().map_err(|_| bad("bad n"))?;
                    points.push(ActionIndex::new(m, n));
                }
                Ok(SequenceS::new(points))
            }
            other => Err(bad(&format!("unknown kind {other:?}"))),
        }
    }
}

/// Constant-gap sequence `m_i = i * gap` with `n_i` the truncation toward
/// zero of an affine rational function of `m_i`.
pub fn make_syndetic_sequence(gap: u64, len: usize, n_of_m: AffineRational) -> Result<SequenceS> {
    if gap < 1 || len < 1 {
        return Err(Error::Parse("syndetic sequence needs gap >= 1, len >= 1".into()));
    }
    let points = (1..=len as u64)
        .map(|i| {
            let m = i * gap;
            let n = trunc_toward_zero(n_of_m.eval(m as i64));
            ActionIndex::new(m, n)
        })
        .collect();
    Ok(SequenceS::new(points))
}

/// Sparse sequence `m_i = base^i`, `n_i = round(beta * m_i)` with ties
/// toward zero.
pub fn make_geometric_sequence(base: u64, len: usize, beta: Rational64) -> Result<SequenceS> {
    if base < 2 {
        return Err(Error::Parse("geometric sequence needs base >= 2".into()));
    }
    let mut points = Vec::with_capacity(len);
    let mut m: u64 = 1;
    for _ in 1..=len {
        m = m
            .checked_mul(base)
            .ok_or(Error::Overflow("geometric sequence exponent"))?;
        let n = round_ties_toward_zero(beta * Rational64::from_integer(m as i64));
        points.push(ActionIndex::new(m, n));
    }
    Ok(SequenceS::new(points))
}

/// How a consecutive pair fares against the join-coverage inequality
/// `2(r*m_i + M) + 1 >= 2 r*m_{i+1} + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageFlag {
    /// Strict inequality, matching the argument as written.
    Strict,
    /// Equality; the covering window exactly meets the next support.
    Boundary,
    /// The inequality fails.
    Fail,
}

/// Validation report for a sequence prefix against the hypotheses the
/// entropy formula needs; a report, never an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceReport {
    pub strictly_monotone: bool,
    /// Largest gap `m_{i+1} - m_i` (None for prefixes shorter than 2).
    pub max_gap: Option<u64>,
    /// On a finite prefix, syndetic means strictly monotone with the
    /// recorded max gap as the empirical bound.
    pub syndetic: bool,
    pub m_exceeds_n: bool,
    pub in_cone: Option<bool>,
    pub coverage: Option<Vec<CoverageFlag>>,
}

impl SequenceReport {
    /// The hypotheses of the closed-form entropy formula.
    pub fn formula_hypotheses_hold(&self) -> bool {
        self.strictly_monotone && self.syndetic && self.m_exceeds_n
    }
}

pub fn validate_sequence(
    seq: &SequenceS,
    cone: Option<&DirectionCone>,
    rule: Option<&LocalRule>,
    partition_radius: Option<u32>,
) -> SequenceReport {
    let pts = seq.points();
    let strictly_monotone = pts.windows(2).all(|w| w[0].m < w[1].m);
    let max_gap = pts
        .windows(2)
        .map(|w| w[1].m.saturating_sub(w[0].m))
        .max();
    let m_exceeds_n = pts.iter().all(|p| (p.m as i64) > p.n);
    let in_cone = cone.map(|c| pts.iter().all(|&p| c.contains(p)));
    let coverage = match (rule, partition_radius) {
        (Some(rule), Some(m_rad)) => {
            let r = rule.radius() as i64;
            let flags = pts
                .windows(2)
                .map(|w| {
                    let lhs = r * w[0].m as i64 + m_rad as i64;
                    let rhs = r * w[1].m as i64;
                    if lhs > rhs {
                        CoverageFlag::Strict
                    } else if lhs == rhs {
                        CoverageFlag::Boundary
                    } else {
                        CoverageFlag::Fail
                    }
                })
                .collect();
            Some(flags)
        }
        _ => None,
    };
    SequenceReport {
        strictly_monotone,
        max_gap,
        syndetic: strictly_monotone,
        m_exceeds_n,
        in_cone,
        coverage,
    }
}
