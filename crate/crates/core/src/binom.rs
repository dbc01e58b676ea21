//! Digit frequencies of binomial-weighted digit sums
//! `s_n = sum_l C(nN, l) x_{l+1} (mod k)`, with three independent
//! computation routes:
//!
//! - the engine: one running row of automaton images of the digit stream
//!   (rule `x_0 + x_1 mod k`), reading a single column per term —
//!   bit-packed for k = 2;
//! - direct summation: an incrementally advanced Pascal row mod k dotted
//!   with the digits;
//! - Lucas products for prime k.

use crate::error::{Error, Result};
use crate::packed::BitRow;
use crate::rng::SplitMix64;
use crate::types::Modulus;

/// Which digit indexing the sum uses.
///
/// `Paper` is `sum_l C(nN,l) x_{l+1}`; `Action` is `sum_l C(nN,l) x_{n+l}`,
/// the index produced by pushing the digit stream through the action
/// itself. Both satisfy the frequency law; they are kept separate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Paper,
    Action,
}

impl Variant {
    pub fn tag(&self) -> &'static str {
        match self {
            Variant::Paper => "paper",
            Variant::Action => "action",
        }
    }
}

/// Where a digit stream came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Seeded(u64),
    Explicit,
}

/// A finite prefix of the base-k digit expansion of a real in [0, 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitStream {
    base: Modulus,
    digits: Vec<u8>,
    provenance: Provenance,
}

impl DigitStream {
    pub fn explicit(base: Modulus, digits: Vec<u8>) -> Result<Self> {
        if let Some(&bad) = digits.iter().find(|&&d| d as u32 >= base.get()) {
            return Err(Error::Parse(format!(
                "digit {bad} out of range for base {base}"
            )));
        }
        Ok(DigitStream {
            base,
            digits,
            provenance: Provenance::Explicit,
        })
    }

    /// I.i.d. uniform digits from the deterministic generator.
    pub fn seeded(seed: u64, base: Modulus, len: usize) -> Self {
        let digits = SplitMix64::new(seed).symbols(base.get(), len);
        DigitStream {
            base,
            digits,
            provenance: Provenance::Seeded(seed),
        }
    }

    pub fn base(&self) -> Modulus {
        self.base
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Digit-wise sum mod k (linearity probes).
    pub fn add(&self, other: &DigitStream) -> Result<DigitStream> {
        if self.base != other.base || self.len() != other.len() {
            return Err(Error::Parse("digit stream sum needs equal base and length".into()));
        }
        let digits = self
            .digits
            .iter()
            .zip(&other.digits)
            .map(|(&x, &y)| self.base.add(x, y))
            .collect();
        Ok(DigitStream {
            base: self.base,
            digits,
            provenance: Provenance::Explicit,
        })
    }
}

/// Row `n` of Pascal's triangle mod k, by iterated additive row updates.
pub fn pascal_row_mod(n: u64, k: u32) -> Vec<u8> {
    debug_assert!(k >= 2);
    let mut row: Vec<u8> = vec![1];
    for t in 0..n {
        row.push(0);
        for l in (1..=t as usize + 1).rev() {
            let s = row[l] as u32 + row[l - 1] as u32;
            row[l] = (s % k) as u8;
        }
    }
    row
}

fn require_prime(p: u32) -> Result<()> {
    if Modulus::new(p as u64).map(|m| m.is_prime()).unwrap_or(false) {
        Ok(())
    } else {
        Err(Error::NotPrime { n: p as u64 })
    }
}

/// Small table of binomials mod a prime, driving Lucas products.
#[derive(Debug, Clone)]
pub struct LucasTable {
    p: u32,
    /// `table[i*p + j] = C(i, j) mod p` for `i, j < p`.
    table: Vec<u8>,
}

impl LucasTable {
    pub fn new(p: u32) -> Result<Self> {
        require_prime(p)?;
        let size = (p * p) as usize;
        let mut table = vec![0u8; size];
        for i in 0..p as usize {
            table[i * p as usize] = 1;
            for j in 1..=i {
                let above = table[(i - 1) * p as usize + j] as u32;
                let left = table[(i - 1) * p as usize + j - 1] as u32;
                table[i * p as usize + j] = ((above + left) % p) as u8;
            }
        }
        Ok(LucasTable { p, table })
    }

    /// `C(n, l) mod p` as the product of digit-wise binomials in base p.
    pub fn binom(&self, mut n: u64, mut l: u64) -> u8 {
        let p = self.p as u64;
        let mut acc: u32 = 1;
        while n > 0 || l > 0 {
            let (nd, ld) = (n % p, l % p);
            if ld > nd {
                return 0;
            }
            acc = acc * self.table[(nd * p + ld) as usize] as u32 % self.p;
            n /= p;
            l /= p;
        }
        acc as u8
    }
}

/// One-off Lucas evaluation of `C(n, l) mod p`.
pub fn binom_mod_lucas(n: u64, l: u64, p: u32) -> Result<u8> {
    Ok(LucasTable::new(p)?.binom(n, l))
}

fn required_prefix(n_spacing: u64, n_max: u64, variant: Variant) -> usize {
    match variant {
        Variant::Paper => (n_max * n_spacing + 1) as usize,
        Variant::Action => (n_max * (n_spacing + 1)) as usize,
    }
}

fn check_prefix(x: &DigitStream, n_spacing: u64, n_max: u64, variant: Variant) -> Result<()> {
    if n_spacing < 1 || n_max < 1 {
        return Err(Error::Parse("need N >= 1 and n_max >= 1".into()));
    }
    let need = required_prefix(n_spacing, n_max, variant);
    if x.len() < need {
        return Err(Error::PrefixTooShort {
            have: x.len(),
            need,
        });
    }
    Ok(())
}

/// The engine: advance one row of automaton images of the digit stream
/// and read a single column every `N` generations. Bit-packed for k = 2.
pub fn sequence_s_engine(
    x: &DigitStream,
    n_spacing: u64,
    n_max: u64,
    variant: Variant,
) -> Result<Vec<u8>> {
    check_prefix(x, n_spacing, n_max, variant)?;
    if x.base().get() == 2 {
        sequence_s_engine_packed(x, n_spacing, n_max, variant)
    } else {
        Ok(sequence_s_engine_bytes(x, n_spacing, n_max, variant))
    }
}

/// Generic byte-per-cell engine, usable for any k (reference path for the
/// packed one).
pub fn sequence_s_engine_generic(
    x: &DigitStream,
    n_spacing: u64,
    n_max: u64,
    variant: Variant,
) -> Result<Vec<u8>> {
    check_prefix(x, n_spacing, n_max, variant)?;
    Ok(sequence_s_engine_bytes(x, n_spacing, n_max, variant))
}

fn read_column(n: u64, variant: Variant) -> usize {
    match variant {
        Variant::Paper => 0,
        Variant::Action => (n - 1) as usize,
    }
}

fn sequence_s_engine_packed(
    x: &DigitStream,
    n_spacing: u64,
    n_max: u64,
    variant: Variant,
) -> Result<Vec<u8>> {
    let len = required_prefix(n_spacing, n_max, variant);
    let mut row = BitRow::from_bits(&x.digits()[..len]);
    let mut out = Vec::with_capacity(n_max as usize);
    let total_steps = n_max * n_spacing;
    for t in 1..=total_steps {
        let active = len - t as usize;
        row.step_adjacent_prefix(active);
        if t % n_spacing == 0 {
            let n = t / n_spacing;
            out.push(row.get(read_column(n, variant)));
        }
    }
    Ok(out)
}

/// One adjacent-sum generation mod k on the first `active` cells,
/// `dst[j] = src[j] + src[j+1] (mod k)`. Written as zipped slices so the
/// compiler vectorizes it; powers of two reduce by masking.
fn byte_step(src: &[u8], dst: &mut [u8], active: usize, k: u32) {
    let lo = &src[..active];
    let hi = &src[1..=active];
    let out = &mut dst[..active];
    if k.is_power_of_two() {
        let mask = (k - 1) as u8;
        for ((o, &a), &b) in out.iter_mut().zip(lo).zip(hi) {
            *o = a.wrapping_add(b) & mask;
        }
    } else if k <= 127 {
        // digits stay below k <= 127, so the u8 sum cannot wrap
        let kk = k as u8;
        for ((o, &a), &b) in out.iter_mut().zip(lo).zip(hi) {
            let s = a.wrapping_add(b);
            *o = if s >= kk { s.wrapping_sub(kk) } else { s };
        }
    } else {
        for ((o, &a), &b) in out.iter_mut().zip(lo).zip(hi) {
            let s = a as u32 + b as u32;
            *o = (s % k) as u8;
        }
    }
}

fn sequence_s_engine_bytes(
    x: &DigitStream,
    n_spacing: u64,
    n_max: u64,
    variant: Variant,
) -> Vec<u8> {
    let k = x.base().get();
    let len = required_prefix(n_spacing, n_max, variant);
    let mut cur = x.digits()[..len].to_vec();
    let mut next = vec![0u8; len];
    let mut out = Vec::with_capacity(n_max as usize);
    let total_steps = n_max * n_spacing;
    for t in 1..=total_steps {
        let active = len - t as usize;
        byte_step(&cur, &mut next, active, k);
        std::mem::swap(&mut cur, &mut next);
        if t % n_spacing == 0 {
            let n = t / n_spacing;
            out.push(cur[read_column(n, variant)]);
        }
    }
    out
}

/// Both index variants from one pass of the running row (the row does
/// not depend on the variant, only the read column does).
pub fn sequence_s_engine_both(
    x: &DigitStream,
    n_spacing: u64,
    n_max: u64,
) -> Result<(Vec<u8>, Vec<u8>)> {
    check_prefix(x, n_spacing, n_max, Variant::Action)?;
    let len = required_prefix(n_spacing, n_max, Variant::Action);
    let k = x.base().get();
    let total_steps = n_max * n_spacing;
    let mut paper = Vec::with_capacity(n_max as usize);
    let mut action = Vec::with_capacity(n_max as usize);
    if k == 2 {
        let mut row = BitRow::from_bits(&x.digits()[..len]);
        for t in 1..=total_steps {
            let active = len - t as usize;
            row.step_adjacent_prefix(active);
            if t % n_spacing == 0 {
                let n = t / n_spacing;
                paper.push(row.get(0));
                action.push(row.get((n - 1) as usize));
            }
        }
    } else {
        let mut cur = x.digits()[..len].to_vec();
        let mut next = vec![0u8; len];
        for t in 1..=total_steps {
            let active = len - t as usize;
            byte_step(&cur, &mut next, active, k);
            std::mem::swap(&mut cur, &mut next);
            if t % n_spacing == 0 {
                let n = t / n_spacing;
                paper.push(cur[0]);
                action.push(cur[(n - 1) as usize]);
            }
        }
    }
    Ok((paper, action))
}

/// Direct summation: one incrementally advanced Pascal row mod k, dotted
/// with the digits per term. No reuse across the dot products.
pub fn sequence_s_direct(
    x: &DigitStream,
    n_spacing: u64,
    n_max: u64,
    variant: Variant,
) -> Result<Vec<u8>> {
    check_prefix(x, n_spacing, n_max, variant)?;
    let k = x.base().get();
    let digits = x.digits();
    let mut row: Vec<u8> = vec![1];
    let mut out = Vec::with_capacity(n_max as usize);
    let mut t: u64 = 0;
    for n in 1..=n_max {
        while t < n * n_spacing {
            row.push(0);
            let upper = row.len() - 1;
            for l in (1..=upper).rev() {
                let s = row[l] as u32 + row[l - 1] as u32;
                row[l] = (s % k) as u8;
            }
            t += 1;
        }
        let start = match variant {
            Variant::Paper => 0usize,
            Variant::Action => (n - 1) as usize,
        };
        let mut acc: u64 = 0;
        for (l, &c) in row.iter().enumerate() {
            acc += c as u64 * digits[start + l] as u64;
        }
        out.push((acc % k as u64) as u8);
    }
    Ok(out)
}

/// Lucas-route summation for prime k (third independent route).
pub fn sequence_s_lucas(
    x: &DigitStream,
    n_spacing: u64,
    n_max: u64,
    variant: Variant,
) -> Result<Vec<u8>> {
    check_prefix(x, n_spacing, n_max, variant)?;
    let p = x.base().get();
    let table = LucasTable::new(p)?;
    let digits = x.digits();
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        let rows = n * n_spacing;
        let start = match variant {
            Variant::Paper => 0usize,
            Variant::Action => (n - 1) as usize,
        };
        let mut acc: u64 = 0;
        for l in 0..=rows {
            let c = table.binom(rows, l);
            if c != 0 {
                acc += c as u64 * digits[start + l as usize] as u64;
            }
        }
        out.push((acc % p as u64) as u8);
    }
    Ok(out)
}

/// Counts per residue and the max deviation from the uniform frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqReport {
    pub base: u32,
    pub variant: Variant,
    pub counts: Vec<u64>,
    pub total: u64,
    pub max_deviation: f64,
}

pub fn frequency_report(s: &[u8], base: u32, variant: Variant) -> FreqReport {
    let mut counts = vec![0u64; base as usize];
    for &v in s {
        counts[v as usize] += 1;
    }
    let total = s.len() as u64;
    let uniform = 1.0 / base as f64;
    let max_deviation = counts
        .iter()
        .map(|&c| (c as f64 / total as f64 - uniform).abs())
        .fold(0.0, f64::max);
    FreqReport {
        base,
        variant,
        counts,
        total,
        max_deviation,
    }
}

/// Frequency reports for a batch of seeded streams; stream `i` uses the
/// seed derived from the master seed with the `"binom"` label. Every
/// stream is sized for the action variant so one stream serves both.
pub fn frequency_sweep(
    master_seed: u64,
    seed_count: u64,
    base: Modulus,
    n_spacing: u64,
    n_max: u64,
    variant: Variant,
) -> Result<Vec<FreqReport>> {
    let len = required_prefix(n_spacing, n_max, Variant::Action);
    let seeds: Vec<u64> = (0..seed_count)
        .map(|i| crate::rng::derive_seed(master_seed, "binom", i))
        .collect();
    let run_one = |&seed: &u64| -> Result<FreqReport> {
        let x = DigitStream::seeded(seed, base, len);
        let s = sequence_s_engine(&x, n_spacing, n_max, variant)?;
        Ok(frequency_report(&s, base.get(), variant))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.par_iter().map(run_one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeds.iter().map(run_one).collect()
    }
}

/// Like [`frequency_sweep`], but one row pass per seed feeds both index
/// variants.
pub fn frequency_sweep_both(
    master_seed: u64,
    seed_count: u64,
    base: Modulus,
    n_spacing: u64,
    n_max: u64,
) -> Result<(Vec<FreqReport>, Vec<FreqReport>)> {
    let len = required_prefix(n_spacing, n_max, Variant::Action);
    let seeds: Vec<u64> = (0..seed_count)
        .map(|i| crate::rng::derive_seed(master_seed, "binom", i))
        .collect();
    let run_one = |&seed: &u64| -> Result<(FreqReport, FreqReport)> {
        let x = DigitStream::seeded(seed, base, len);
        let (paper, action) = sequence_s_engine_both(&x, n_spacing, n_max)?;
        Ok((
            frequency_report(&paper, base.get(), Variant::Paper),
            frequency_report(&action, base.get(), Variant::Action),
        ))
    };
    #[cfg(feature = "parallel")]
    let pairs: Vec<(FreqReport, FreqReport)> = {
        use rayon::prelude::*;
        seeds.par_iter().map(run_one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let pairs: Vec<(FreqReport, FreqReport)> =
        seeds.iter().map(run_one).collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

/// Termwise agreement of all three routes (prime k only).
pub fn engine_vs_lucas_check(
    x: &DigitStream,
    n_spacing: u64,
    n_max: u64,
    variant: Variant,
) -> Result<bool> {
    require_prime(x.base().get())?;
    let engine = sequence_s_engine(x, n_spacing, n_max, variant)?;
    let direct = sequence_s_direct(x, n_spacing, n_max, variant)?;
    let lucas = sequence_s_lucas(x, n_spacing, n_max, variant)?;
    Ok(engine == direct && direct == lucas)
}
