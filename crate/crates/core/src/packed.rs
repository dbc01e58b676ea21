//! Bit-packed rows over Z_2: 64 cells per machine word.
//!
//! A step of a binary linear rule is a fixed XOR of shifted copies of the
//! row, so advancing one generation costs a constant number of
//! shift/XOR/OR word operations per word regardless of rule radius.

/// A row of binary cells, bit `j` of the row being cell `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitRow {
    words: Vec<u64>,
    len: usize,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        // one zero cap word beyond the data so prefix kernels can read
        // ahead without branching
        BitRow {
            words: vec![0; len.div_ceil(64) + 1],
            len,
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut row = BitRow::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            debug_assert!(b <= 1);
            if b == 1 {
                row.words[j / 64] |= 1u64 << (j % 64);
            }
        }
        row
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, j: usize) -> u8 {
        debug_assert!(j < self.len);
        ((self.words[j / 64] >> (j % 64)) & 1) as u8
    }

    /// The 64 bits starting at signed bit position `base`; positions
    /// outside `0..len` read as zero.
    #[inline]
    fn window_at(&self, base: i64) -> u64 {
        let word_at = |q: i64| -> u64 {
            if q < 0 || q as usize >= self.words.len() {
                0
            } else {
                self.words[q as usize]
            }
        };
        let q = base.div_euclid(64);
        let s = base.rem_euclid(64) as u32;
        let lo = word_at(q);
        if s == 0 {
            lo
        } else {
            (lo >> s) | (word_at(q + 1) << (64 - s))
        }
    }

    /// One generation: `out[j] = XOR over d in offsets of self[j + d]`.
    /// Cells whose dependencies fall outside the row read zeros; callers
    /// track which cells remain meaningful.
    pub fn step_into(&self, offsets: &[i64], out: &mut BitRow) {
        debug_assert_eq!(self.len, out.len);
        // data words only: the cap word stays zero in both rows
        for w in 0..self.len.div_ceil(64) {
            let base = w as i64 * 64;
            let mut acc = 0u64;
            for &d in offsets {
                acc ^= self.window_at(base + d);
            }
            out.words[w] = acc;
        }
    }

    /// Specialized generation for the rule `y[j] = x[j] + x[j+1]` applied
    /// to the first `active` cells only. This is the inner loop of the
    /// digit-stream engine, where the meaningful prefix shrinks by one
    /// cell per generation. The row always carries one zero cap word, so
    /// the slice below never goes out of range.
    pub fn step_adjacent_prefix(&mut self, active: usize) {
        debug_assert!(active <= self.len);
        let n = active.div_ceil(64);
        let w = &mut self.words[..n + 1];
        for i in 0..n {
            let cur = w[i];
            let hi = w[i + 1];
            w[i] = cur ^ ((cur >> 1) | (hi << 63));
        }
    }
}

/// Repeated stepping of one packed row with zero-padded word storage, so
/// the inner loop carries no bounds checks. Used by the orbit evaluator,
/// where the same row advances for the whole horizon and only a prefix
/// of cells stays meaningful.
#[derive(Debug, Clone)]
pub struct PackedStepper {
    /// Zero words in front of the data region (never written).
    lpad: usize,
    nwords: usize,
    words: Vec<u64>,
    scratch: Vec<u64>,
    /// Per dependency offset: relative word index and bit shift.
    shifts: Vec<(isize, u32)>,
    /// Dependencies are exactly `{0, 1}`: in-place single-pass kernel.
    adjacent: bool,
}

impl PackedStepper {
    pub fn new(bits: &[u8], offsets: &[i64]) -> Self {
        let nwords = bits.len().div_ceil(64).max(1);
        let max_abs = offsets.iter().map(|d| d.unsigned_abs()).max().unwrap_or(0);
        let pad = (max_abs as usize) / 64 + 2;
        let mut words = vec![0u64; pad + nwords + pad];
        for (j, &b) in bits.iter().enumerate() {
            if b == 1 {
                words[pad + j / 64] |= 1u64 << (j % 64);
            }
        }
        let scratch = vec![0u64; words.len()];
        let shifts = offsets
            .iter()
            .map(|&d| {
                let q = d.div_euclid(64) as isize;
                let s = d.rem_euclid(64) as u32;
                (q, s)
            })
            .collect();
        PackedStepper {
            lpad: pad,
            nwords,
            words,
            scratch,
            shifts,
            adjacent: offsets == [0, 1],
        }
    }

    #[inline]
    pub fn get(&self, j: usize) -> u8 {
        debug_assert!(j / 64 < self.nwords);
        ((self.words[self.lpad + j / 64] >> (j % 64)) & 1) as u8
    }

    /// Advance one generation on the first `active` cells (the rest of
    /// the row becomes unspecified).
    pub fn step_prefix(&mut self, active: usize) {
        let nw = active.div_ceil(64).min(self.nwords);
        let lp = self.lpad;
        if self.adjacent {
            let data = &mut self.words[lp..lp + nw + 1];
            for w in 0..nw {
                let cur = data[w];
                let hi = data[w + 1];
                data[w] = cur ^ ((cur >> 1) | (hi << 63));
            }
            return;
        }
        for w in 0..nw {
            let wi = (lp + w) as isize;
            let mut acc = 0u64;
            for &(q, s) in &self.shifts {
                let base = (wi + q) as usize;
                acc ^= if s == 0 {
                    self.words[base]
                } else {
                    (self.words[base] >> s) | (self.words[base + 1] << (64 - s))
                };
            }
            self.scratch[lp + w] = acc;
        }
        // pads of both buffers are never written and stay zero
        std::mem::swap(&mut self.words, &mut self.scratch);
    }
}
