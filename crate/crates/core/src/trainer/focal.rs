//! Binary focal loss on a logit.

use crate::slshead::logistic;

/// `ln(1 + e^y)` without overflow.
#[inline]
pub fn softplus(y: f64) -> f64 {
    y.max(0.0) + (-y.abs()).exp().ln_1p()
}

/// Focal loss of `score` (a logit, positive = bonafide) against `label`
/// (1 bonafide, 0 deepfake), and its derivative with respect to `score`.
///
/// With `x = score` for label 1 and `x = -score` for label 0,
/// `p_t = logistic(x)` and `q = 1 - p_t = logistic(-x)`:
///
/// ```text
/// loss    = alpha_t * q^gamma * softplus(-x)          (= -alpha_t q^gamma ln p_t)
/// dloss/dx = -alpha_t * q^gamma * (gamma * p_t * softplus(-x) + q)
/// ```
///
/// Both stay finite for any finite score.
pub fn focal_loss(score: f64, bonafide: bool, gamma: f64, alpha: f64) -> (f64, f64) {
    let (x, sign, alpha_t) = if bonafide {
        (score, 1.0, alpha)
    } else {
        (-score, -1.0, 1.0 - alpha)
    };
    let p_t = logistic(x);
    let q = logistic(-x);
    let nll = softplus(-x);
    let modulator = q.powf(gamma);
    let loss = alpha_t * modulator * nll;
    let d_x = -alpha_t * modulator * (gamma * p_t * nll + q);
    (loss, sign * d_x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn bce(score: f64, bonafide: bool) -> f64 {
        let p = 1.0 / (1.0 + (-score).exp());
        if bonafide {
            -p.ln()
        } else {
            -(1.0 - p).ln()
        }
    }

    #[test]
    fn zero_logit_cross_entropy_case() {
        let (loss, _) = focal_loss(0.0, true, 0.0, 0.5);
        assert!((loss - 0.5 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((loss - 0.3465736).abs() < 1e-7);
    }

    #[test]
    fn zero_logit_default_focal_case() {
        let (loss, _) = focal_loss(0.0, true, 2.0, 0.25);
        assert!((loss - 0.25 * 0.25 * std::f64::consts::LN_2).abs() < 1e-15);
        assert!((loss - 0.0433217).abs() < 1e-7);
    }

    #[test]
    fn saturated_correct_score() {
        for gamma in [0.0, 0.5, 2.0, 5.0] {
            for alpha in [0.1, 0.25, 0.9] {
                let (loss, d) = focal_loss(30.0, true, gamma, alpha);
                assert!((0.0..1e-12).contains(&loss));
                assert!(d.abs() < 1e-12);
                let (loss, d) = focal_loss(-30.0, false, gamma, alpha);
                assert!(loss < 1e-12 && d.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stable_at_extreme_scores() {
        for s in [-500.0, -100.0, 100.0, 500.0] {
            for label in [true, false] {
                let (loss, d) = focal_loss(s, label, 2.0, 0.25);
                assert!(loss.is_finite() && d.is_finite());
                assert!(loss >= 0.0);
            }
        }
        let (loss, d) = focal_loss(-500.0, true, 2.0, 0.25);
        assert!((loss - 0.25 * 500.0).abs() < 1e-9);
        assert!((d + 0.25).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mut rng = SplitMix64::new(31);
        let h = 1e-5;
        for _ in 0..1000 {
            let s = rng.symmetric(8.0);
            let label = rng.below(2) == 1;
            let gamma = rng.next_f64() * 4.0;
            let alpha = 0.05 + 0.9 * rng.next_f64();
            let (_, d) = focal_loss(s, label, gamma, alpha);
            let fd = (focal_loss(s + h, label, gamma, alpha).0
                - focal_loss(s - h, label, gamma, alpha).0)
                / (2.0 * h);
            let err = (d - fd).abs() / d.abs().max(1e-6);
            assert!(
                err < 1e-7,
                "s={s} label={label} gamma={gamma} alpha={alpha}: {d} vs {fd}"
            );
        }
    }

    #[test]
    fn gamma_zero_half_alpha_is_half_bce() {
        let mut rng = SplitMix64::new(5);
        for _ in 0..1000 {
            let s = rng.symmetric(10.0);
            let label = rng.below(2) == 1;
            let (loss, _) = focal_loss(s, label, 0.0, 0.5);
            assert!((loss - 0.5 * bce(s, label)).abs() < 1e-12);
        }
    }

    #[test]
    fn non_negative_and_vanishing() {
        let mut rng = SplitMix64::new(6);
        for _ in 0..1000 {
            let s = rng.symmetric(50.0);
            let (loss, _) = focal_loss(
                s,
                rng.below(2) == 1,
                rng.next_f64() * 5.0,
                0.01 + 0.98 * rng.next_f64(),
            );
            assert!(loss >= 0.0);
        }
        let mut previous = f64::INFINITY;
        for s in [0.0, 2.0, 5.0, 10.0, 20.0, 40.0] {
            let (loss, _) = focal_loss(s, true, 2.0, 0.25);
            assert!(loss < previous);
            previous = loss;
        }
        assert!(previous < 1e-30);
    }
}
