//! Neural polar decoding.
//!
//! A decoder instance is four small networks plus one learned vector, all
//! sharing an embedding width `d`:
//!
//! - `E`: `(Re y, Im y, log10 N0) -> d*m` per received symbol, reshaped into
//!   `m` per-bit embedding rows of width `d` (row `i` belongs to bit `i` of
//!   the symbol's label, so QPSK's real-axis bit comes first).
//! - `e_co`: a learned constant `d*m` vector (zero-initialized); bit rows of
//!   positions with no observation (punctured) use slice `i mod m`. It also
//!   feeds the observation-independent branch of the training loss.
//! - `F`, `G`: check-node and bit-node replacements over embeddings,
//!   `(2d -> d)` and `(2d+1 -> d)` (the extra input is the partial-sum bit).
//! - `H`: the decision head `(d -> 1)`, producing a logit for
//!   `P(bit = 1)` under the crate LLR convention.
//!
//! [`loss`] implements the staged training objective shared by training,
//! mutual-information estimation ([`design`]) and is consistent with the
//! decoder kernels in [`decode`].

pub mod decode;
pub mod design;
pub mod loss;
pub mod train;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::nn::{Mlp, MlpGrads};

/// Network sizes for a decoder instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NpdDims {
    /// Embedding width per bit.
    pub d: usize,
    /// Hidden layer width.
    pub h: usize,
    /// Hidden layer count in each network.
    pub depth: usize,
    /// Bits per symbol the embedding produces (1 for BPSK, 2 for QPSK).
    pub m: usize,
}

impl NpdDims {
    fn mlp_dims(&self, input: usize, output: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.depth + 2);
        dims.push(input);
        dims.extend(std::iter::repeat_n(self.h, self.depth));
        dims.push(output);
        dims
    }
}

/// All learnable state of a neural polar decoder.
#[derive(Clone, Debug, PartialEq)]
pub struct NpdParams {
    pub dims: NpdDims,
    pub e: Mlp,
    pub e_co: Array1<f64>,
    pub f: Mlp,
    pub g: Mlp,
    pub h_head: Mlp,
}

impl NpdParams {
    /// Seeded He-uniform initialization; `e_co` starts at zero.
    pub fn new(dims: NpdDims, seed: u64) -> Self {
        assert!(dims.d >= 1 && dims.h >= 1 && dims.depth >= 1);
        assert!(dims.m == 1 || dims.m == 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = Mlp::new(&dims.mlp_dims(3, dims.d * dims.m), &mut rng);
        let f = Mlp::new(&dims.mlp_dims(2 * dims.d, dims.d), &mut rng);
        let g = Mlp::new(&dims.mlp_dims(2 * dims.d + 1, dims.d), &mut rng);
        let h_head = Mlp::new(&dims.mlp_dims(dims.d, 1), &mut rng);
        NpdParams {
            dims,
            e,
            e_co: Array1::zeros(dims.d * dims.m),
            f,
            g,
            h_head,
        }
    }

    pub fn n_params(&self) -> usize {
        self.e.n_params()
            + self.e_co.len()
            + self.f.n_params()
            + self.g.n_params()
            + self.h_head.n_params()
    }

    /// Canonical flat order: E, e_co, F, G, H (each network per layer:
    /// weights row-major, then biases). The optimizer and the checkpoint
    /// format both use this order.
    pub fn write_params(&self, out: &mut Vec<f64>) {
        self.e.write_params(out);
        out.extend(self.e_co.iter());
        self.f.write_params(out);
        self.g.write_params(out);
        self.h_head.write_params(out);
    }

    pub fn read_params<I: Iterator<Item = f64>>(&mut self, src: &mut I) {
        self.e.read_params(src);
        for v in self.e_co.iter_mut() {
            *v = src.next().expect("parameter stream too short");
        }
        self.f.read_params(src);
        self.g.read_params(src);
        self.h_head.read_params(src);
    }

    /// Per-bit embeddings of one block's received symbols: `[len*m, d]`,
    /// bit `t` of the block in row `t`.
    pub fn embed_symbols(&self, y: &[Complex64], n0: f64) -> Array2<f64> {
        let (d, m) = (self.dims.d, self.dims.m);
        let mut input = Array2::zeros((y.len(), 3));
        let log_n0 = n0.log10();
        for (s, ys) in y.iter().enumerate() {
            input[[s, 0]] = ys.re;
            input[[s, 1]] = ys.im;
            input[[s, 2]] = log_n0;
        }
        let sym = self.e.forward(input.view());
        let mut rows = Array2::zeros((y.len() * m, d));
        for s in 0..y.len() {
            for i in 0..m {
                for c in 0..d {
                    rows[[s * m + i, c]] = sym[[s, i * d + c]];
                }
            }
        }
        rows
    }

    /// The constant-embedding row for codeword bit position `t`.
    pub fn constant_row(&self, t: usize) -> Array1<f64> {
        let (d, m) = (self.dims.d, self.dims.m);
        let i = t % m;
        self.e_co.slice(ndarray::s![i * d..(i + 1) * d]).to_owned()
    }

    /// `n_bits` constant-embedding rows (the observation-independent input
    /// of the training objective).
    pub fn constant_rows(&self, n_bits: usize) -> Array2<f64> {
        let d = self.dims.d;
        let mut rows = Array2::zeros((n_bits, d));
        for t in 0..n_bits {
            let r = self.constant_row(t);
            rows.row_mut(t).assign(&r);
        }
        rows
    }
}

/// Gradient buffers matching [`NpdParams`].
#[derive(Clone, Debug)]
pub struct NpdGrads {
    pub e: MlpGrads,
    pub e_co: Array1<f64>,
    pub f: MlpGrads,
    pub g: MlpGrads,
    pub h_head: MlpGrads,
}

impl NpdGrads {
    pub fn zeros_like(params: &NpdParams) -> Self {
        NpdGrads {
            e: MlpGrads::zeros_like(&params.e),
            e_co: Array1::zeros(params.e_co.len()),
            f: MlpGrads::zeros_like(&params.f),
            g: MlpGrads::zeros_like(&params.g),
            h_head: MlpGrads::zeros_like(&params.h_head),
        }
    }

    pub fn reset(&mut self) {
        self.e.reset();
        self.e_co.fill(0.0);
        self.f.reset();
        self.g.reset();
        self.h_head.reset();
    }

    /// Flat gradient stream in the canonical parameter order.
    pub fn write_flat(&self, out: &mut Vec<f64>) {
        crate::nn::Mlp::write_grads(&self.e, out);
        out.extend(self.e_co.iter());
        crate::nn::Mlp::write_grads(&self.f, out);
        crate::nn::Mlp::write_grads(&self.g, out);
        crate::nn::Mlp::write_grads(&self.h_head, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> NpdDims {
        NpdDims {
            d: 4,
            h: 8,
            depth: 1,
            m: 2,
        }
    }

    #[test]
    fn construction_shapes_and_seeding() {
        let a = NpdParams::new(dims(), 3);
        let b = NpdParams::new(dims(), 3);
        let c = NpdParams::new(dims(), 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.e.dims(), vec![3, 8, 8]);
        assert_eq!(a.f.dims(), vec![8, 8, 4]);
        assert_eq!(a.g.dims(), vec![9, 8, 4]);
        assert_eq!(a.h_head.dims(), vec![4, 8, 1]);
        assert!(a.e_co.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn params_roundtrip_in_canonical_order() {
        let mut p = NpdParams::new(dims(), 5);
        p.e_co.fill(0.25);
        let mut flat = Vec::new();
        p.write_params(&mut flat);
        assert_eq!(flat.len(), p.n_params());
        let mut q = NpdParams::new(dims(), 99);
        q.read_params(&mut flat.iter().cloned());
        assert_eq!(p, q);
    }

    #[test]
    fn symbol_embedding_layout_maps_bits_to_rows() {
        // With m = 2, symbol s produces rows 2s (first bit, embedding slice
        // 0..d) and 2s+1 (second bit, slice d..2d).
        let p = NpdParams::new(dims(), 7);
        let y = vec![
            Complex64::new(0.3, -0.2),
            Complex64::new(-1.1, 0.8),
        ];
        let rows = p.embed_symbols(&y, 0.5);
        assert_eq!(rows.shape(), &[4, 4]);
        let mut input = Array2::zeros((2, 3));
        for (s, ys) in y.iter().enumerate() {
            input[[s, 0]] = ys.re;
            input[[s, 1]] = ys.im;
            input[[s, 2]] = 0.5f64.log10();
        }
        let sym = p.e.forward(input.view());
        for s in 0..2 {
            for i in 0..2 {
                for c in 0..4 {
                    assert_eq!(rows[[s * 2 + i, c]], sym[[s, i * 4 + c]]);
                }
            }
        }
    }

    #[test]
    fn constant_rows_tile_by_bit_index() {
        let mut p = NpdParams::new(dims(), 8);
        for (i, v) in p.e_co.iter_mut().enumerate() {
            *v = i as f64;
        }
        let rows = p.constant_rows(6);
        for t in 0..6 {
            for c in 0..4 {
                let want = ((t % 2) * 4 + c) as f64;
                assert_eq!(rows[[t, c]], want);
            }
        }
    }
}
