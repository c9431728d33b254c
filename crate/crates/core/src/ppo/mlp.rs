//! Dense tanh network with hand-written backpropagation.
//!
//! Parameters live in one flat vector, layer by layer, each layer storing its
//! row-major `out x in` weight matrix followed by its bias.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// Layer widths, input first.
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Activations of every layer from one forward pass, input first.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpParams {
    pub fn zeros(sizes: &[usize]) -> Self {
        Self { sizes: sizes.to_vec(), params: vec![0.0; param_count(sizes)] }
    }

    /// Orthogonal weights scaled by `hidden_gain` on hidden layers and
    /// `output_gain` on the last; zero biases.
    pub fn orthogonal<R: Rng + ?Sized>(sizes: &[usize], hidden_gain: f64, output_gain: f64, rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        let n_layers = sizes.len() - 1;
        let mut off = 0;
        for l in 0..n_layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let gain = if l + 1 == n_layers { output_gain } else { hidden_gain };
            let w = orthogonal_matrix(fan_out, fan_in, rng);
            for (dst, src) in net.params[off..off + fan_in * fan_out].iter_mut().zip(w) {
                *dst = gain * src;
            }
            off += fan_in * fan_out + fan_out;
        }
        net
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 || self.sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {:?}", self.sizes)));
        }
        if self.params.len() != param_count(&self.sizes) {
            return Err(Error::LengthMismatch(format!(
                "{} parameters for layer sizes {:?} (expected {})",
                self.params.len(),
                self.sizes,
                param_count(&self.sizes)
            )));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numerical("non-finite network parameter".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap_or(&0)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut a = x.to_vec();
        let n_layers = self.sizes.len() - 1;
        let mut off = 0;
        for l in 0..n_layers {
            let (a_next, next_off) = self.layer(l, off, &a);
            a = a_next;
            off = next_off;
        }
        a
    }

    pub fn forward_cached(&self, x: &[f64]) -> ForwardCache {
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(x.to_vec());
        let mut off = 0;
        for l in 0..n_layers {
            let (a, next_off) = self.layer(l, off, &acts[l]);
            acts.push(a);
            off = next_off;
        }
        ForwardCache { acts }
    }

    fn layer(&self, l: usize, off: usize, a: &[f64]) -> (Vec<f64>, usize) {
        let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
        let last = l + 2 == self.sizes.len();
        let w = &self.params[off..off + fan_in * fan_out];
        let b = &self.params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
        let out = (0..fan_out)
            .map(|o| {
                let z = b[o] + dot(&w[o * fan_in..(o + 1) * fan_in], a);
                if last {
                    z
                } else {
                    z.tanh()
                }
            })
            .collect();
        (out, off + fan_in * fan_out + fan_out)
    }

    /// Accumulates `d loss / d params` into `grad` given the loss gradient
    /// with respect to the network output.
    pub fn backward(&self, cache: &ForwardCache, d_out: &[f64], grad: &mut [f64]) {
        let n_layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for l in 0..n_layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut delta = d_out.to_vec();
        for l in (0..n_layers).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let a_in = &cache.acts[l];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (g, ai) in grad[off + o * fan_in..off + (o + 1) * fan_in].iter_mut().zip(a_in) {
                    *g += d * ai;
                }
                grad[off + fan_in * fan_out + o] += d;
            }
            if l == 0 {
                break;
            }
            let w = &self.params[off..off + fan_in * fan_out];
            let mut prev = vec![0.0; fan_in];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (p, wi) in prev.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                    *p += d * wi;
                }
            }
            // tanh' = 1 - a^2
            for (p, a) in prev.iter_mut().zip(a_in) {
                *p *= 1.0 - a * a;
            }
            delta = prev;
        }
    }
}

/// Four-lane dot product; the fixed summation order keeps results
/// reproducible while letting the compiler vectorize.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, ra) = a.split_at(a.len() - a.len() % 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

/// `rows x cols` matrix with orthonormal rows or columns, row-major, from
/// Gram-Schmidt on a Gaussian matrix.
fn orthogonal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    let (n, m) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    // m orthonormal vectors of length n
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    while basis.len() < m {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = if rows >= cols { basis[c][r] } else { basis[r][c] };
        }
    }
    out
}
