//! AdamW with decoupled weight decay.

use crate::error::{Error, Result};
use crate::slshead::{SlsGrads, SlsParams};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl OptimizerState {
    pub fn new(params: &SlsParams) -> Self {
        Self {
            m: vec![0.0; params.len()],
            v: vec![0.0; params.len()],
            t: 0,
        }
    }
}

/// One step:
///
/// ```text
/// m <- b1 m + (1 - b1) g          v <- b2 v + (1 - b2) g^2
/// p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p
/// ```
///
/// A non-finite gradient aborts before anything is modified.
pub fn adamw_step(
    p: &mut SlsParams,
    g: &SlsGrads,
    s: &mut OptimizerState,
    lr: f64,
    wd: f64,
) -> Result<()> {
    if g.dim() != p.dim() || s.m.len() != p.len() {
        return Err(Error::Dimension {
            what: "gradient",
            expected: p.len(),
            got: g.len(),
        });
    }
    let grads = g.to_flat();
    if let Some(i) = grads.iter().position(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite gradient entry {i} ({}) at optimizer step {}",
            grads[i],
            s.t + 1
        )));
    }
    s.t += 1;
    let t = s.t as i32;
    let bias1 = 1.0 - BETA1.powi(t);
    let bias2 = 1.0 - BETA2.powi(t);
    let mut flat = p.to_flat();
    for i in 0..flat.len() {
        let gi = grads[i];
        s.m[i] = BETA1 * s.m[i] + (1.0 - BETA1) * gi;
        s.v[i] = BETA2 * s.v[i] + (1.0 - BETA2) * gi * gi;
        let m_hat = s.m[i] / bias1;
        let v_hat = s.v[i] / bias2;
        flat[i] = flat[i] - lr * m_hat / (v_hat.sqrt() + EPSILON) - lr * wd * flat[i];
    }
    *p = SlsParams::from_flat(p.dim(), &flat)?;
    Ok(())
}
