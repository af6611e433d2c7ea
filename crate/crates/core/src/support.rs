//! Binary support vectors.

use std::fmt;

/// Heaviside step with `H(0) = 0`.
#[inline]
pub fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// A binary indicator over signal entries: `true` marks a nonzero entry.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Support(Vec<bool>);

impl Support {
    pub fn zeros(n: usize) -> Self {
        Support(vec![false; n])
    }

    pub fn ones(n: usize) -> Self {
        Support(vec![true; n])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Support(bits)
    }

    /// Binarises amplitudes: entry `r` is on iff `amplitude[r] > 0`.
    pub fn from_amplitudes(amplitude: &[f64]) -> Self {
        Support(amplitude.iter().map(|&a| a > 0.0).collect())
    }

    /// Entries equal to 1 become `true`; anything else is `false`.
    pub fn from_f64(values: &[f64]) -> Self {
        Support(values.iter().map(|&v| v == 1.0).collect())
    }

    /// Decodes the low `n` bits of `code`, bit `r` giving entry `r`.
    pub fn from_code(code: u64, n: usize) -> Self {
        Support((0..n).map(|r| (code >> r) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    #[inline]
    pub fn get(&self, r: usize) -> bool {
        self.0[r]
    }

    #[inline]
    pub fn value(&self, r: usize) -> f64 {
        if self.0[r] {
            1.0
        } else {
            0.0
        }
    }

    pub fn set(&mut self, r: usize, on: bool) {
        self.0[r] = on;
    }

    pub fn flip(&mut self, r: usize) {
        self.0[r] = !self.0[r];
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.0.iter().copied()
    }

    /// Indices of the `true` entries, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(r, &b)| b.then_some(r))
            .collect()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn complement(&self) -> Self {
        Support(self.0.iter().map(|b| !b).collect())
    }

    /// Compact `0`/`1` string, entry 0 first.
    pub fn to_bitstring(&self) -> String {
        self.0.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Support({})", self.to_bitstring())
    }
}

impl From<Vec<bool>> for Support {
    fn from(bits: Vec<bool>) -> Self {
        Support(bits)
    }
}

impl FromIterator<bool> for Support {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Support(iter.into_iter().collect())
    }
}
