//! Bit-packed binary codes.
//!
//! Bit `j` of a row lives at `(word[j / 64] >> (j % 64)) & 1`. Bits past the
//! code width in the last word are always zero, which lets the Hamming kernel
//! XOR whole words without masking.

use rayon::prelude::*;

use crate::error::{Error, Result};

#[inline]
pub const fn words_for_bits(bits: usize) -> usize {
    bits.div_ceil(64)
}

/// Mask of the valid bits in the last word of a row.
#[inline]
pub(crate) const fn last_word_mask(bits: usize) -> u64 {
    match bits % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

/// Packs a sequence of bits LSB-first into 64-bit words.
pub fn pack_bits(bits: &[bool]) -> Result<Vec<u64>> {
    if bits.is_empty() {
        return Err(Error::InvalidArgument("a code needs at least one bit".into()));
    }
    let mut words = vec![0u64; words_for_bits(bits.len())];
    for (j, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
        words[j / 64] |= 1 << (j % 64);
    }
    Ok(words)
}

pub fn unpack_bits(words: &[u64], bits: usize) -> Vec<bool> {
    (0..bits).map(|j| (words[j / 64] >> (j % 64)) & 1 == 1).collect()
}

/// Number of differing bits between two packed rows of equal width.
///
/// Both rows must have their pad bits cleared.
pub fn hamming_distance(a: &[u64], b: &[u64], bits: usize) -> Result<u32> {
    let words = words_for_bits(bits);
    if a.len() != words || b.len() != words {
        return Err(Error::DimensionMismatch {
            expected: words,
            found: if a.len() != words { a.len() } else { b.len() },
        });
    }
    Ok(hamming_words(a, b))
}

/// XOR + popcount over equal-length word slices, without width checks.
#[inline]
pub fn hamming_words(a: &[u64], b: &[u64]) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0u32; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += (x[0] ^ y[0]).count_ones();
        acc[1] += (x[1] ^ y[1]).count_ones();
        acc[2] += (x[2] ^ y[2]).count_ones();
        acc[3] += (x[3] ^ y[3]).count_ones();
    }
    let tail: u32 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| (x ^ y).count_ones())
        .sum();
    acc.iter().sum::<u32>() + tail
}

/// `rows x bits` binary codes, packed row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCodeSet {
    rows: usize,
    bits: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BinaryCodeSet {
    /// All-zero codes.
    pub fn zeros(rows: usize, bits: usize) -> Result<Self> {
        Self::check_shape(rows, bits)?;
        let words_per_row = words_for_bits(bits);
        Ok(Self {
            rows,
            bits,
            words_per_row,
            words: vec![0; rows * words_per_row],
        })
    }

    /// Wraps packed words, rejecting rows with nonzero pad bits.
    pub fn from_words(rows: usize, bits: usize, words: Vec<u64>) -> Result<Self> {
        Self::check_shape(rows, bits)?;
        let words_per_row = words_for_bits(bits);
        if words.len() != rows * words_per_row {
            return Err(Error::DimensionMismatch {
                expected: rows * words_per_row,
                found: words.len(),
            });
        }
        let set = Self {
            rows,
            bits,
            words_per_row,
            words,
        };
        if let Some(row) = set.first_row_with_pad_bits() {
            return Err(crate::FormatError::PadBits { row }.into());
        }
        Ok(set)
    }

    pub fn from_bit_rows<R: AsRef<[bool]>>(rows: &[R]) -> Result<Self> {
        let bits = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut set = Self::zeros(rows.len(), bits)?;
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != bits {
                return Err(Error::DimensionMismatch {
                    expected: bits,
                    found: row.len(),
                });
            }
            set.row_mut(i).copy_from_slice(&pack_bits(row)?);
        }
        Ok(set)
    }

    /// Builds codes row by row (in parallel). `fill` receives the row index and
    /// a zeroed output slice and must set only bits `< bits`.
    pub fn build_rows<F>(rows: usize, bits: usize, fill: F) -> Result<Self>
    where
        F: Fn(usize, &mut [u64]) + Sync,
    {
        let mut set = Self::zeros(rows, bits)?;
        let wpr = set.words_per_row;
        set.words
            .par_chunks_mut(wpr)
            .enumerate()
            .for_each(|(i, out)| fill(i, out));
        debug_assert!(set.first_row_with_pad_bits().is_none());
        Ok(set)
    }

    fn check_shape(rows: usize, bits: usize) -> Result<()> {
        if rows == 0 || bits == 0 {
            return Err(Error::InvalidArgument(format!(
                "code set must be non-empty, got {rows} rows of {bits} bits"
            )));
        }
        Ok(())
    }

    pub(crate) fn first_row_with_pad_bits(&self) -> Option<usize> {
        let mask = last_word_mask(self.bits);
        if mask == u64::MAX {
            return None;
        }
        (0..self.rows).find(|&i| self.row(i)[self.words_per_row - 1] & !mask != 0)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn bits(&self) -> usize {
        self.bits
    }

    #[inline]
    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.words[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    #[inline]
    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.words[i * self.words_per_row..(i + 1) * self.words_per_row]
    }

    #[inline]
    pub fn bit(&self, i: usize, j: usize) -> bool {
        (self.row(i)[j / 64] >> (j % 64)) & 1 == 1
    }

    pub fn row_bits(&self, i: usize) -> Vec<bool> {
        unpack_bits(self.row(i), self.bits)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// New code set made of the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut words = Vec::with_capacity(indices.len() * self.words_per_row);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::InvalidArgument(format!(
                    "row index {i} out of range for {} rows",
                    self.rows
                )));
            }
            words.extend_from_slice(self.row(i));
        }
        Self::from_words(indices.len(), self.bits, words)
    }

    /// Hamming distance between row `i` of `self` and row `j` of `other`.
    pub fn distance_to(&self, i: usize, other: &BinaryCodeSet, j: usize) -> Result<u32> {
        if self.bits != other.bits {
            return Err(Error::DimensionMismatch {
                expected: self.bits,
                found: other.bits,
            });
        }
        Ok(hamming_words(self.row(i), other.row(j)))
    }

    /// Fraction of rows with bit `j` set.
    pub fn bit_frequency(&self, j: usize) -> f64 {
        let ones = (0..self.rows).filter(|&i| self.bit(i, j)).count();
        ones as f64 / self.rows as f64
    }

    pub fn payload_bytes(&self) -> usize {
        self.words.len() * 8
    }
}

/// Sets bit `j` in a packed row.
#[inline]
pub(crate) fn set_bit(row: &mut [u64], j: usize) {
    row[j / 64] |= 1 << (j % 64);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_hamming(a: &[bool], b: &[bool]) -> u32 {
        a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
    }

    #[test]
    fn small_examples() {
        // a = 0b1010, b = 0b0110
        let a = [false, true, false, true];
        let b = [false, true, true, false];
        let pa = pack_bits(&a).unwrap();
        let pb = pack_bits(&b).unwrap();
        assert_eq!(pa, vec![0b1010]);
        assert_eq!(hamming_distance(&pa, &pb, 4).unwrap(), 2);
        assert_eq!(hamming_distance(&pa, &pa, 4).unwrap(), 0);
    }

    #[test]
    fn complement_at_4096_bits() {
        let ones = pack_bits(&vec![true; 4096]).unwrap();
        let zeros = pack_bits(&vec![false; 4096]).unwrap();
        assert_eq!(hamming_distance(&ones, &zeros, 4096).unwrap(), 4096);
    }

    #[test]
    fn mismatched_widths() {
        let a = pack_bits(&[true; 65]).unwrap();
        let b = pack_bits(&[true; 64]).unwrap();
        assert!(matches!(
            hamming_distance(&a, &b, 65),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn packing_layout() {
        assert_eq!(pack_bits(&[true, false, true]).unwrap(), vec![5]);
        assert_eq!(pack_bits(&[true; 65]).unwrap(), vec![u64::MAX, 1]);
        assert!(pack_bits(&[]).is_err());
    }

    #[test]
    fn pad_bits_rejected() {
        let err = BinaryCodeSet::from_words(2, 3, vec![0b101, 0b1000]).unwrap_err();
        assert!(matches!(err, Error::Format(crate::FormatError::PadBits { row: 1 })));
        assert!(BinaryCodeSet::from_words(1, 64, vec![u64::MAX]).is_ok());
    }

    #[test]
    fn oracle_equivalence_all_widths() {
        let mut state = 0x9E37_79B9_7F4A_7C15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state & 1 == 1
        };
        for bits in 1..=130 {
            for _ in 0..8 {
                let a: Vec<bool> = (0..bits).map(|_| next()).collect();
                let b: Vec<bool> = (0..bits).map(|_| next()).collect();
                let d = hamming_distance(&pack_bits(&a).unwrap(), &pack_bits(&b).unwrap(), bits).unwrap();
                assert_eq!(d, naive_hamming(&a, &b), "bits={bits}");
            }
        }
    }

    fn code(bits: usize) -> impl Strategy<Value = Vec<bool>> {
        prop::collection::vec(any::<bool>(), bits)
    }

    proptest! {
        #[test]
        fn pack_unpack_identity(bits in prop::collection::vec(any::<bool>(), 1..300)) {
            let packed = pack_bits(&bits).unwrap();
            prop_assert_eq!(unpack_bits(&packed, bits.len()), bits.clone());
            prop_assert_eq!(packed.last().unwrap() & !last_word_mask(bits.len()), 0);
        }

        #[test]
        fn hamming_is_a_metric(
            (a, b, c) in (1usize..200).prop_flat_map(|n| (code(n), code(n), code(n)))
        ) {
            let n = a.len();
            let (pa, pb, pc) = (pack_bits(&a).unwrap(), pack_bits(&b).unwrap(), pack_bits(&c).unwrap());
            let ab = hamming_distance(&pa, &pb, n).unwrap();
            let ba = hamming_distance(&pb, &pa, n).unwrap();
            let bc = hamming_distance(&pb, &pc, n).unwrap();
            let ac = hamming_distance(&pa, &pc, n).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert_eq!(ab == 0, a == b);
            prop_assert!(ac <= ab + bc);
            prop_assert!(ab as usize <= n);
        }
    }
}
