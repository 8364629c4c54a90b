//! Polar transforms, code designs, and rate matching by puncturing.
//!
//! # Conventions
//!
//! The block length `N` is a power of two, `N = 2^n`. The generator is
//! `G_N = B_N F^{(x)n}` where `F = [[1,0],[1,1]]` and `B_N` is the bit-reversal
//! permutation; `G_N` is an involution over GF(2), so encoding and the
//! plain transform are the same operation. Codes may also be built without the
//! bit-reversal factor (`include_bit_reversal = false`), which is the natural
//! order used by 5G-style chains; the two differ only by a permutation of the
//! codeword since `B_N F^{(x)n} = F^{(x)n} B_N`.
//!
//! All indices in this API are 0-based. Position sets (information set,
//! puncture set) index the `u`-domain and `x`-domain vectors respectively.
//!
//! Decoders live in [`sc`] (plain recursive successive cancellation, used as
//! a reference), [`list`] (an iterative engine generic over the check/bit/
//! decision kernel, shared with the neural decoder), and [`oracle`] (brute
//! force, exponential in `N`, for validating decision metrics).

pub mod crc;
pub mod kernel;
pub mod list;
pub mod oracle;
pub mod sc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::Bits;

/// Bit-reversal permutation of length `2^n`: `perm[i]` is `i` with its `n`-bit
/// binary representation reversed. The permutation is an involution.
pub fn bit_reversal_perm(n: u32) -> Vec<usize> {
    let size = 1usize << n;
    (0..size)
        .map(|i| {
            let mut v = 0usize;
            for b in 0..n {
                v |= ((i >> b) & 1) << (n - 1 - b);
            }
            v
        })
        .collect()
}

/// Applies the polar transform `x = u G_N` in place semantics over a copy.
///
/// With `include_bit_reversal` the generator is `B_N F^{(x)n}`; without it,
/// `F^{(x)n}` alone. The transform is its own inverse in both cases.
pub fn polar_transform(u: &Bits, include_bit_reversal: bool) -> Bits {
    let n_bits = u.len();
    assert!(n_bits.is_power_of_two(), "block length must be a power of two");
    let n = n_bits.trailing_zeros();

    let mut x = if include_bit_reversal {
        let perm = bit_reversal_perm(n);
        (0..n_bits).map(|i| u[perm[i]]).collect::<Bits>()
    } else {
        u.clone()
    };

    // F^{(x)n} as log2(N) butterfly layers; the layer matrices commute, so
    // ascending step order is equivalent to the recursive halving definition.
    let v = x.as_mut_slice();
    let mut step = 1;
    while step < n_bits {
        let mut base = 0;
        while base < n_bits {
            for j in 0..step {
                v[base + j] ^= v[base + j + step];
            }
            base += 2 * step;
        }
        step *= 2;
    }
    x
}

/// Rate-matching puncture positions for a length-`N` code transmitting
/// `N - P` coded bits over an `m`-bit-per-symbol constellation.
///
/// Punctured positions are the first entries of the bit-reversal order; for
/// `m > 1` each selected entry punctures the whole `m`-bit symbol containing
/// it, so the set is always a union of complete symbols. Positions index the
/// codeword (`x`-domain) and are returned in selection order.
///
/// # Panics
/// Panics if `P >= N`, or if `m > 1` and `P` is not a multiple of `m`.
pub fn puncture_set(n_bits: usize, p: usize, m: usize) -> Vec<usize> {
    assert!(n_bits.is_power_of_two());
    assert!(p < n_bits, "cannot puncture the whole block");
    assert!(m >= 1);
    let perm = bit_reversal_perm(n_bits.trailing_zeros());
    if m == 1 {
        return perm[..p].to_vec();
    }
    assert_eq!(p % m, 0, "puncture count must cover whole symbols");
    let mut set = Vec::with_capacity(p);
    for &entry in &perm[..p / m] {
        let symbol = entry / m;
        for b in 0..m {
            set.push(symbol * m + b);
        }
    }
    debug_assert_eq!(
        {
            let mut s = set.clone();
            s.sort_unstable();
            s.dedup();
            s.len()
        },
        p,
        "bit-reversal prefix selected overlapping symbols"
    );
    set
}

/// Puncture configuration: which codeword positions are dropped before
/// transmission.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PunctureConfig {
    n_bits: usize,
    bits_per_symbol: usize,
    positions: Vec<usize>,
    mask: Vec<bool>,
}

impl PunctureConfig {
    /// Builds the standard configuration for `N`, transmitted length `N_r`,
    /// and `m` bits per symbol (`P = N - N_r` positions punctured).
    pub fn new(n_bits: usize, n_transmit: usize, bits_per_symbol: usize) -> Self {
        assert!(n_transmit <= n_bits);
        let positions = if n_transmit == n_bits {
            Vec::new()
        } else {
            puncture_set(n_bits, n_bits - n_transmit, bits_per_symbol)
        };
        let mut mask = vec![false; n_bits];
        for &p in &positions {
            mask[p] = true;
        }
        PunctureConfig {
            n_bits,
            bits_per_symbol,
            positions,
            mask,
        }
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn n_transmit(&self) -> usize {
        self.n_bits - self.positions.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Punctured positions in selection order.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn is_punctured(&self, i: usize) -> bool {
        self.mask[i]
    }

    /// Drops punctured positions from a codeword, preserving the order of the
    /// survivors.
    pub fn shorten(&self, x: &Bits) -> Bits {
        assert_eq!(x.len(), self.n_bits);
        (0..self.n_bits)
            .filter(|&i| !self.mask[i])
            .map(|i| x[i])
            .collect()
    }

    /// Re-expands a per-position sequence to full length, filling punctured
    /// positions from `fill(position)` and the rest from `values` in order.
    pub fn expand_with<T, F>(&self, values: &[T], fill: F) -> Vec<T>
    where
        T: Clone,
        F: Fn(usize) -> T,
    {
        assert_eq!(values.len(), self.n_transmit());
        let mut out = Vec::with_capacity(self.n_bits);
        let mut it = values.iter();
        for i in 0..self.n_bits {
            if self.mask[i] {
                out.push(fill(i));
            } else {
                out.push(it.next().expect("length checked").clone());
            }
        }
        out
    }
}

/// How frozen positions are filled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrozenFill {
    /// Every frozen bit is 0.
    AllZeros,
    /// Frozen bits take pseudorandom values derived from this seed. Encoder
    /// and decoder must share the seed. The value at a position depends only
    /// on `(seed, N, position)`, not on the information set.
    Seeded(u64),
}

/// A polar code design: block length, payload/CRC split, information set,
/// frozen-bit fill, and generator convention.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeDesign {
    n_bits: usize,
    k: usize,
    crc_len: usize,
    info_set: Vec<usize>,
    info_mask: Vec<bool>,
    pub frozen_fill: FrozenFill,
    pub include_bit_reversal: bool,
}

impl CodeDesign {
    /// Builds a design. `info_set` holds the `k + crc_len` most reliable
    /// positions (0-based, any order; stored ascending).
    ///
    /// # Panics
    /// Panics if `N` is not a power of two, the set size does not match
    /// `k + crc_len`, or the set has duplicates / out-of-range entries.
    pub fn new(
        n_bits: usize,
        k: usize,
        crc_len: usize,
        mut info_set: Vec<usize>,
        frozen_fill: FrozenFill,
        include_bit_reversal: bool,
    ) -> Self {
        assert!(n_bits.is_power_of_two(), "N must be a power of two");
        assert_eq!(info_set.len(), k + crc_len, "|A| must equal k + crc_len");
        info_set.sort_unstable();
        let mut info_mask = vec![false; n_bits];
        for &i in &info_set {
            assert!(i < n_bits, "info position {i} out of range");
            assert!(!info_mask[i], "duplicate info position {i}");
            info_mask[i] = true;
        }
        CodeDesign {
            n_bits,
            k,
            crc_len,
            info_set,
            info_mask,
            frozen_fill,
            include_bit_reversal,
        }
    }

    /// Convenience design with all-zero frozen bits and bit reversal on.
    pub fn with_info_set(n_bits: usize, k: usize, info_set: Vec<usize>) -> Self {
        CodeDesign::new(n_bits, k, 0, info_set, FrozenFill::AllZeros, true)
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn crc_len(&self) -> usize {
        self.crc_len
    }

    /// Information positions, ascending.
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn is_info(&self, i: usize) -> bool {
        self.info_mask[i]
    }

    /// The frozen value carried by every position (entries at information
    /// positions are present but unused).
    pub fn frozen_values(&self) -> Bits {
        match self.frozen_fill {
            FrozenFill::AllZeros => Bits::zeros(self.n_bits),
            FrozenFill::Seeded(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Bits::random(self.n_bits, &mut rng)
            }
        }
    }

    /// Encodes `k + crc_len` information bits (payload with CRC already
    /// attached) into the full codeword `x^N`.
    pub fn encode_info(&self, info: &Bits) -> Bits {
        assert_eq!(info.len(), self.k + self.crc_len, "info length mismatch");
        let frozen = self.frozen_values();
        let mut u = Bits::zeros(self.n_bits);
        let mut next = 0;
        for i in 0..self.n_bits {
            u[i] = if self.info_mask[i] {
                let b = info[next];
                next += 1;
                b
            } else {
                frozen[i]
            };
        }
        polar_transform(&u, self.include_bit_reversal)
    }

    /// Extracts the information bits (payload + CRC) from a decoded `u^N`.
    pub fn extract_info(&self, u_hat: &Bits) -> Bits {
        assert_eq!(u_hat.len(), self.n_bits);
        self.info_set.iter().map(|&i| u_hat[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn bit_reversal_n3_matches_reference_order() {
        assert_eq!(bit_reversal_perm(3), vec![0, 4, 2, 6, 1, 5, 3, 7]);
    }

    #[test]
    fn bit_reversal_is_involution() {
        for n in 0..8 {
            let perm = bit_reversal_perm(n);
            for (i, &p) in perm.iter().enumerate() {
                assert_eq!(perm[p], i, "n={n}, i={i}");
            }
        }
    }

    #[test]
    fn transform_hand_traced_n4() {
        // x = (1,0,1,1): with bit reversal the image is
        // (x0^x1^x2^x3, x2^x3, x1^x3, x3) = (1,0,1,1).
        let x = Bits::from_slice(&[1, 0, 1, 1]);
        assert_eq!(polar_transform(&x, true), Bits::from_slice(&[1, 0, 1, 1]));
        let y = Bits::from_slice(&[1, 1, 0, 0]);
        assert_eq!(polar_transform(&y, true), Bits::from_slice(&[0, 0, 1, 0]));
    }

    #[test]
    fn transform_without_reversal_is_plain_kronecker() {
        // u F^{(x)2} for u = (u0,u1,u2,u3):
        // x = (u0^u1^u2^u3, u1^u3, u2^u3, u3).
        let u = Bits::from_slice(&[1, 0, 1, 1]);
        assert_eq!(polar_transform(&u, false), Bits::from_slice(&[1, 1, 0, 1]));
    }

    #[test]
    fn puncture_set_bpsk_prefix() {
        assert_eq!(puncture_set(8, 3, 1), vec![0, 4, 2]);
    }

    #[test]
    fn puncture_set_qpsk_selects_whole_symbols() {
        // Bit-reversal entries 0 and 4 select symbols 0 and 2.
        assert_eq!(puncture_set(8, 4, 2), vec![0, 1, 4, 5]);
    }

    #[test]
    fn seeded_frozen_values_are_reproducible_and_set_independent() {
        let a = CodeDesign::new(16, 4, 0, vec![7, 11, 13, 14], FrozenFill::Seeded(5), true);
        let b = CodeDesign::new(16, 4, 0, vec![3, 5, 6, 9], FrozenFill::Seeded(5), true);
        assert_eq!(a.frozen_values(), b.frozen_values());
        assert_ne!(a.frozen_values(), Bits::zeros(16));
    }

    #[test]
    fn encode_extract_roundtrip_via_involution() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n_bits = 1usize << rng.gen_range(1..7);
            let k = rng.gen_range(1..=n_bits);
            let mut pos: Vec<usize> = (0..n_bits).collect();
            for i in (1..pos.len()).rev() {
                pos.swap(i, rng.gen_range(0..=i));
            }
            let info_set = pos[..k].to_vec();
            let design = CodeDesign::new(
                n_bits,
                k,
                0,
                info_set,
                FrozenFill::Seeded(rng.gen()),
                rng.gen_bool(0.5),
            );
            let payload = Bits::random(k, &mut rng);
            let x = design.encode_info(&payload);
            // Decoding a noiseless codeword is just the inverse transform.
            let u = polar_transform(&x, design.include_bit_reversal);
            assert_eq!(design.extract_info(&u), payload);
        }
    }

    proptest! {
        #[test]
        fn transform_is_involution(bits in proptest::collection::vec(0u8..2, 1..=128), flag: bool) {
            let n = bits.len().next_power_of_two();
            let mut padded = bits;
            padded.resize(n, 0);
            let x = Bits::from_slice(&padded);
            let once = polar_transform(&x, flag);
            prop_assert_eq!(polar_transform(&once, flag), x);
        }

        #[test]
        fn transform_is_gf2_linear(
            a in proptest::collection::vec(0u8..2, 32),
            b in proptest::collection::vec(0u8..2, 32),
            flag: bool,
        ) {
            let a = Bits::from_slice(&a);
            let b = Bits::from_slice(&b);
            let lhs = polar_transform(&a.xor(&b), flag);
            let rhs = polar_transform(&a, flag).xor(&polar_transform(&b, flag));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn transforms_differ_by_bit_reversal_permutation(
            u in proptest::collection::vec(0u8..2, 64),
        ) {
            // B_N F = F B_N, so the two conventions are codeword permutations
            // of one another.
            let u = Bits::from_slice(&u);
            let with = polar_transform(&u, true);
            let without = polar_transform(&u, false);
            let perm = bit_reversal_perm(6);
            let permuted: Bits = (0..64).map(|i| without[perm[i]]).collect();
            prop_assert_eq!(with, permuted);
        }

        #[test]
        fn puncture_whole_symbol_property(nexp in 2u32..8, msel in 0usize..2, frac in 1usize..4) {
            let n = 1usize << nexp;
            let m = [2usize, 4][msel];
            let p = ((n * frac / 4) / m).max(1) * m;
            prop_assume!(p < n);
            let set = puncture_set(n, p, m);
            prop_assert_eq!(set.len(), p);
            let mut sorted = set.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), p);
            // Union of whole symbols: every symbol is fully in or fully out.
            let mut by_symbol = std::collections::HashMap::new();
            for pos in set {
                *by_symbol.entry(pos / m).or_insert(0usize) += 1;
            }
            for (_, count) in by_symbol {
                prop_assert_eq!(count, m);
            }
        }
    }
}
