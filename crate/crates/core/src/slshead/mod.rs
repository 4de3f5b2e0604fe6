//! Layer-gated classifier head over a hidden-state stack.
//!
//! For a stack `h` of `L` layers, each `N x D`:
//!
//! ```text
//! a_l   = mean over frames of h_l                 (D)
//! alpha = logistic(gate_weight . a_l + gate_bias) (one scalar per layer)
//! M     = sum_l alpha_l * h_l                     (N x D)
//! m_d   = max over frames of M[:, d]              (first frame wins ties)
//! score = out_weight . m + out_bias
//! ```
//!
//! Positive scores lean bonafide. The gate map is shared by all layers.

mod checkpoint;
mod export;

pub use checkpoint::{
    read_checkpoint, read_checkpoint_file, write_checkpoint, write_checkpoint_file, SLSP_MAGIC,
    SLSP_VERSION,
};
pub use export::{layer_weights_csv, LayerWeightRow};

use crate::error::{Error, Result};
use crate::featstore::HiddenStack;
use crate::rng::SplitMix64;

/// Head parameters; gradients use the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct SlsParams {
    pub gate_weight: Vec<f64>,
    pub gate_bias: f64,
    pub out_weight: Vec<f64>,
    pub out_bias: f64,
}

pub type SlsGrads = SlsParams;

impl SlsParams {
    pub fn zeros(dim: usize) -> Self {
        Self {
            gate_weight: vec![0.0; dim],
            gate_bias: 0.0,
            out_weight: vec![0.0; dim],
            out_bias: 0.0,
        }
    }

    /// Both weight vectors uniform in `[-1/sqrt(D), 1/sqrt(D))`, biases zero.
    pub fn fan_in_uniform(dim: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(seed);
        let bound = 1.0 / (dim as f64).sqrt();
        let gate_weight = (0..dim).map(|_| rng.symmetric(bound)).collect();
        let out_weight = (0..dim).map(|_| rng.symmetric(bound)).collect();
        Self {
            gate_weight,
            gate_bias: 0.0,
            out_weight,
            out_bias: 0.0,
        }
    }

    /// Training start point: gate weights fan-in uniform, output weights and
    /// biases zero, so the first updates of the output map follow the class
    /// signal instead of a random sign.
    pub fn init_for_training(dim: usize, seed: u64) -> Self {
        let mut p = Self::fan_in_uniform(dim, seed);
        p.out_weight.iter_mut().for_each(|w| *w = 0.0);
        p
    }

    pub fn dim(&self) -> usize {
        self.gate_weight.len()
    }

    /// Number of scalars, `2 * D + 2`.
    pub fn len(&self) -> usize {
        2 * self.dim() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat view in checkpoint order: gate weight, gate bias, out weight, out bias.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.gate_weight);
        v.push(self.gate_bias);
        v.extend_from_slice(&self.out_weight);
        v.push(self.out_bias);
        v
    }

    pub fn from_flat(dim: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != 2 * dim + 2 {
            return Err(Error::Dimension {
                what: "flat parameter vector",
                expected: 2 * dim + 2,
                got: flat.len(),
            });
        }
        Ok(Self {
            gate_weight: flat[..dim].to_vec(),
            gate_bias: flat[dim],
            out_weight: flat[dim + 1..2 * dim + 1].to_vec(),
            out_bias: flat[2 * dim + 1],
        })
    }

    pub fn is_finite(&self) -> bool {
        self.gate_weight
            .iter()
            .chain(&self.out_weight)
            .all(|v| v.is_finite())
            && self.gate_bias.is_finite()
            && self.out_bias.is_finite()
    }

    /// `self += other`, entrywise.
    pub fn accumulate(&mut self, other: &SlsParams) {
        self.gate_weight
            .iter_mut()
            .zip(&other.gate_weight)
            .for_each(|(a, b)| *a += b);
        self.out_weight
            .iter_mut()
            .zip(&other.out_weight)
            .for_each(|(a, b)| *a += b);
        self.gate_bias += other.gate_bias;
        self.out_bias += other.out_bias;
    }

    pub fn scale(&mut self, c: f64) {
        self.gate_weight
            .iter_mut()
            .chain(self.out_weight.iter_mut())
            .for_each(|v| *v *= c);
        self.gate_bias *= c;
        self.out_bias *= c;
    }

    fn check_dim(&self, stack: &HiddenStack) -> Result<()> {
        if self.out_weight.len() != self.gate_weight.len() {
            return Err(Error::Dimension {
                what: "out_weight",
                expected: self.gate_weight.len(),
                got: self.out_weight.len(),
            });
        }
        if stack.dim() != self.dim() {
            return Err(Error::Data(format!(
                "dimension mismatch: stack {:?} has feature dim {}, head expects {}",
                stack.utterance_id(),
                stack.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

#[inline]
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Intermediates kept by [`sls_forward`] for [`sls_backward`].
#[derive(Debug, Clone)]
pub struct SlsForwardCache<'a> {
    /// Frame means, `L x D` row-major.
    pub layer_means: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Mixed matrix, `N x D` row-major.
    pub mixed: Vec<f64>,
    /// Frame-wise max of `mixed`, per feature.
    pub pooled: Vec<f64>,
    /// Frame index of each max (lowest index on ties).
    pub argmax: Vec<usize>,
    pub input: &'a HiddenStack,
    params: &'a SlsParams,
}

fn layer_means(stack: &HiddenStack) -> Vec<f64> {
    let (l_count, n, d) = (stack.layers(), stack.frames(), stack.dim());
    let mut means = vec![0.0; l_count * d];
    for l in 0..l_count {
        let row = &mut means[l * d..(l + 1) * d];
        for frame in stack.layer(l).chunks_exact(d) {
            row.iter_mut()
                .zip(frame)
                .for_each(|(acc, &v)| *acc += v as f64);
        }
        row.iter_mut().for_each(|v| *v /= n as f64);
    }
    means
}

fn gate(means: &[f64], p: &SlsParams) -> Vec<f64> {
    means
        .chunks_exact(p.dim())
        .map(|a| {
            let z: f64 = a
                .iter()
                .zip(&p.gate_weight)
                .map(|(x, w)| x * w)
                .sum::<f64>()
                + p.gate_bias;
            logistic(z)
        })
        .collect()
}

/// Returns the score and the cache needed for the backward pass.
pub fn sls_forward<'a>(
    stack: &'a HiddenStack,
    p: &'a SlsParams,
) -> Result<(f64, SlsForwardCache<'a>)> {
    p.check_dim(stack)?;
    let (n, d) = (stack.frames(), stack.dim());
    let means = layer_means(stack);
    let alpha = gate(&means, p);

    let mut mixed = vec![0.0; n * d];
    for (l, &a) in alpha.iter().enumerate() {
        mixed
            .iter_mut()
            .zip(stack.layer(l))
            .for_each(|(m, &h)| *m += a * h as f64);
    }

    let mut pooled = mixed[..d].to_vec();
    let mut argmax = vec![0usize; d];
    for (frame, row) in mixed.chunks_exact(d).enumerate().skip(1) {
        for (f, &v) in row.iter().enumerate() {
            if v > pooled[f] {
                pooled[f] = v;
                argmax[f] = frame;
            }
        }
    }
    let score = pooled
        .iter()
        .zip(&p.out_weight)
        .map(|(m, w)| m * w)
        .sum::<f64>()
        + p.out_bias;

    Ok((
        score,
        SlsForwardCache {
            layer_means: means,
            alpha,
            mixed,
            pooled,
            argmax,
            input: stack,
            params: p,
        },
    ))
}

pub fn sls_score(stack: &HiddenStack, p: &SlsParams) -> Result<f64> {
    sls_forward(stack, p).map(|(s, _)| s)
}

/// Gradient of `upstream * score` with respect to every parameter. The max
/// routes to the cached argmax frame.
pub fn sls_backward(cache: &SlsForwardCache<'_>, upstream: f64) -> SlsGrads {
    let p = cache.params;
    let h = cache.input;
    let d = p.dim();

    let out_weight: Vec<f64> = cache.pooled.iter().map(|m| upstream * m).collect();
    let d_pooled: Vec<f64> = p.out_weight.iter().map(|w| upstream * w).collect();

    let mut gate_weight = vec![0.0; d];
    let mut gate_bias = 0.0;
    for (l, &a) in cache.alpha.iter().enumerate() {
        let d_alpha: f64 = (0..d)
            .map(|f| d_pooled[f] * h.at(l, cache.argmax[f], f) as f64)
            .sum();
        let d_z = d_alpha * a * (1.0 - a);
        let mean = &cache.layer_means[l * d..(l + 1) * d];
        gate_weight
            .iter_mut()
            .zip(mean)
            .for_each(|(g, m)| *g += d_z * m);
        gate_bias += d_z;
    }

    SlsParams {
        gate_weight,
        gate_bias,
        out_weight,
        out_bias: upstream,
    }
}

/// Per-layer gate values without the scoring path.
pub fn layer_weights(stack: &HiddenStack, p: &SlsParams) -> Result<Vec<f64>> {
    p.check_dim(stack)?;
    Ok(gate(&layer_means(stack), p))
}

#[cfg(test)]
mod tests;
