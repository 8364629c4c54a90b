//! Bit vectors with the small amount of GF(2) algebra the codec needs.
//!
//! Bits are stored one per byte with values 0 or 1. That wastes space against
//! a packed representation but keeps indexing, XOR and float casts (the
//! training loss treats bits as targets in [0, 1]) free of shift juggling.

use std::fmt;

use rand::Rng;

/// A vector of bits, each element 0 or 1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bits(Vec<u8>);

impl Bits {
    /// All-zero vector of length `n`.
    pub fn zeros(n: usize) -> Self {
        Bits(vec![0; n])
    }

    /// Builds from a slice of 0/1 values.
    ///
    /// # Panics
    /// Panics if any element is not 0 or 1.
    pub fn from_slice(v: &[u8]) -> Self {
        assert!(v.iter().all(|&b| b <= 1), "bit values must be 0 or 1");
        Bits(v.to_vec())
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_str01(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(0),
                '1' => Some(1),
                _ => None,
            })
            .collect::<Option<Vec<u8>>>()
            .map(Bits)
    }

    /// Draws `n` independent fair bits.
    pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
        Bits((0..n).map(|_| rng.gen_range(0..2u8)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.0
    }

    pub fn push(&mut self, bit: u8) {
        debug_assert!(bit <= 1);
        self.0.push(bit);
    }

    /// Element-wise XOR. Both vectors must have the same length.
    pub fn xor(&self, other: &Bits) -> Bits {
        assert_eq!(self.len(), other.len(), "xor length mismatch");
        Bits(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a ^ b)
                .collect(),
        )
    }

    /// Number of positions where the two vectors differ.
    pub fn hamming_distance(&self, other: &Bits) -> usize {
        assert_eq!(self.len(), other.len(), "distance length mismatch");
        self.0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Concatenates two vectors.
    pub fn concat(&self, other: &Bits) -> Bits {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Bits(v)
    }

    /// The sub-vector at `indices`, in the order given.
    pub fn gather(&self, indices: &[usize]) -> Bits {
        Bits(indices.iter().map(|&i| self.0[i]).collect())
    }
}

impl std::ops::Index<usize> for Bits {
    type Output = u8;
    fn index(&self, i: usize) -> &u8 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for Bits {
    fn index_mut(&mut self, i: usize) -> &mut u8 {
        &mut self.0[i]
    }
}

impl fmt::Debug for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bits(")?;
        for &b in &self.0 {
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromIterator<u8> for Bits {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        let v: Vec<u8> = iter.into_iter().collect();
        assert!(v.iter().all(|&b| b <= 1), "bit values must be 0 or 1");
        Bits(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn xor_is_involutive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = Bits::random(64, &mut rng);
        let b = Bits::random(64, &mut rng);
        assert_eq!(a.xor(&b).xor(&b), a);
    }

    #[test]
    fn parse_and_display_roundtrip() {
        let s = "0110100111";
        let b = Bits::from_str01(s).unwrap();
        assert_eq!(b.to_string(), s);
        assert!(Bits::from_str01("01x").is_none());
    }

    #[test]
    fn gather_selects_in_order() {
        let b = Bits::from_slice(&[1, 0, 0, 1, 1]);
        assert_eq!(b.gather(&[4, 0, 2]), Bits::from_slice(&[1, 1, 0]));
    }

    #[test]
    fn random_bits_are_fair() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = Bits::random(20_000, &mut rng);
        let ones: usize = b.as_slice().iter().map(|&x| x as usize).sum();
        let frac = ones as f64 / b.len() as f64;
        assert!((frac - 0.5).abs() < 0.02, "ones fraction {frac}");
    }
}
