#![allow(clippy::needless_range_loop)]

use super::*;
use proptest::prelude::*;

fn random_stack(rng: &mut SplitMix64, l: usize, n: usize, d: usize) -> HiddenStack {
    let values = (0..l * n * d).map(|_| rng.symmetric(1.0) as f32).collect();
    HiddenStack::new("x", l, n, d, values).unwrap()
}

fn random_params(rng: &mut SplitMix64, d: usize, gate_scale: f64) -> SlsParams {
    SlsParams {
        gate_weight: (0..d).map(|_| rng.symmetric(gate_scale)).collect(),
        gate_bias: rng.symmetric(gate_scale),
        out_weight: (0..d).map(|_| rng.symmetric(1.0)).collect(),
        out_bias: rng.symmetric(1.0),
    }
}

/// Straight loop version used as an oracle for the forward pass.
fn oracle_score(h: &HiddenStack, p: &SlsParams) -> f64 {
    let (lc, nc, dc) = (h.layers(), h.frames(), h.dim());
    let mut alpha = vec![0.0; lc];
    for l in 0..lc {
        let mut z = p.gate_bias;
        for d in 0..dc {
            let mut s = 0.0;
            for n in 0..nc {
                s += h.at(l, n, d) as f64;
            }
            z += p.gate_weight[d] * (s / nc as f64);
        }
        alpha[l] = 1.0 / (1.0 + (-z).exp());
    }
    let mut score = p.out_bias;
    for d in 0..dc {
        let mut best = f64::NEG_INFINITY;
        for n in 0..nc {
            let mut m = 0.0;
            for l in 0..lc {
                m += alpha[l] * h.at(l, n, d) as f64;
            }
            best = best.max(m);
        }
        score += p.out_weight[d] * best;
    }
    score
}

fn central_difference(h: &HiddenStack, p: &SlsParams, step: f64) -> Vec<f64> {
    let base = p.to_flat();
    (0..base.len())
        .map(|i| {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[i] += step;
            minus[i] -= step;
            let sp = sls_score(h, &SlsParams::from_flat(p.dim(), &plus).unwrap()).unwrap();
            let sm = sls_score(h, &SlsParams::from_flat(p.dim(), &minus).unwrap()).unwrap();
            (sp - sm) / (2.0 * step)
        })
        .collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

#[test]
fn uniform_layers_half_gates() {
    let d = 3;
    let h = HiddenStack::new("u", 2, 4, d, vec![1.0; 2 * 4 * d]).unwrap();
    let p = SlsParams {
        out_weight: vec![1.0 / d as f64; d],
        ..SlsParams::zeros(d)
    };
    let (score, cache) = sls_forward(&h, &p).unwrap();
    assert_eq!(cache.alpha, vec![0.5, 0.5]);
    assert!(cache.mixed.iter().all(|&m| m == 1.0));
    assert!(cache.pooled.iter().all(|&m| m == 1.0));
    assert!((score - 1.0).abs() < 1e-15);
}

#[test]
fn saturated_gate_passes_layer_through() {
    let mut rng = SplitMix64::new(5);
    let h = random_stack(&mut rng, 1, 6, 5);
    let mut p = random_params(&mut rng, 5, 1.0);
    p.gate_weight = vec![0.0; 5];
    p.gate_bias = 20.0;
    let (score, cache) = sls_forward(&h, &p).unwrap();
    assert!((cache.alpha[0] - 1.0).abs() < 1e-8);
    let mut expected = p.out_bias;
    for d in 0..5 {
        let max = (0..6)
            .map(|n| h.at(0, n, d) as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        expected += p.out_weight[d] * max;
    }
    assert!((score - expected).abs() <= 1e-7 * expected.abs());
}

#[test]
fn golden_score_from_independent_implementation() {
    // Same SplitMix64 draws as below, evaluated with a separate numpy script.
    let mut rng = SplitMix64::new(2024);
    let h = random_stack(&mut rng, 3, 5, 4);
    let p = random_params(&mut rng, 4, 0.5);
    let (score, cache) = sls_forward(&h, &p).unwrap();
    let golden = 0.1705579194999709;
    assert!((score - golden).abs() < 1e-13, "{score}");
    let golden_alpha = [0.5500031383221885, 0.532439337943271, 0.5070973289573211];
    for (a, g) in cache.alpha.iter().zip(golden_alpha) {
        assert!((a - g).abs() < 1e-14);
    }
    assert!((oracle_score(&h, &p) - score).abs() < 1e-13);
}

#[test]
fn forward_matches_loop_oracle() {
    let mut rng = SplitMix64::new(77);
    for _ in 0..50 {
        let l = 1 + rng.below(6) as usize;
        let n = 1 + rng.below(8) as usize;
        let d = 1 + rng.below(9) as usize;
        let h = random_stack(&mut rng, l, n, d);
        let p = random_params(&mut rng, d, 1.0);
        let s = sls_score(&h, &p).unwrap();
        assert!((s - oracle_score(&h, &p)).abs() <= 1e-12 * (1.0 + s.abs()));
    }
}

#[test]
fn dimension_mismatch_names_both() {
    let h = HiddenStack::new("u", 1, 1, 3, vec![0.0; 3]).unwrap();
    let err = sls_forward(&h, &SlsParams::zeros(4))
        .unwrap_err()
        .to_string();
    assert!(err.contains('3') && err.contains('4'), "{err}");
    assert!(layer_weights(&h, &SlsParams::zeros(4)).is_err());
}

#[test]
fn zero_upstream_gives_zero_gradient() {
    let mut rng = SplitMix64::new(1);
    let h = random_stack(&mut rng, 3, 4, 5);
    let p = random_params(&mut rng, 5, 1.0);
    let (_, cache) = sls_forward(&h, &p).unwrap();
    let g = sls_backward(&cache, 0.0);
    assert!(g.to_flat().iter().all(|&v| v == 0.0));
}

#[test]
fn out_bias_gradient_is_upstream() {
    let mut rng = SplitMix64::new(2);
    for upstream in [1.0, -0.3, 7.5] {
        let h = random_stack(&mut rng, 2, 3, 4);
        let p = random_params(&mut rng, 4, 1.0);
        let (_, cache) = sls_forward(&h, &p).unwrap();
        assert_eq!(sls_backward(&cache, upstream).out_bias, upstream);
    }
}

#[test]
fn gradient_matches_finite_differences_over_grid() {
    let mut seed = 0u64;
    for l in [1usize, 4, 25] {
        for n in [1usize, 3, 10] {
            for d in [1usize, 8, 16] {
                seed += 1;
                let mut rng = SplitMix64::new(1000 + seed);
                let h = random_stack(&mut rng, l, n, d);
                let p = random_params(&mut rng, d, 0.5);
                let (_, cache) = sls_forward(&h, &p).unwrap();
                let analytic = sls_backward(&cache, 1.0).to_flat();
                let numeric = central_difference(&h, &p, 1e-4);
                for (i, (a, f)) in analytic.iter().zip(&numeric).enumerate() {
                    assert!(
                        rel_err(*a, *f) < 1e-5,
                        "L={l} N={n} D={d} entry {i}: {a} vs {f}"
                    );
                }
            }
        }
    }
}

#[test]
fn layer_weights_match_forward_cache() {
    let mut rng = SplitMix64::new(3);
    let h = random_stack(&mut rng, 7, 5, 6);
    let p = random_params(&mut rng, 6, 1.0);
    let (_, cache) = sls_forward(&h, &p).unwrap();
    let alpha = layer_weights(&h, &p).unwrap();
    assert_eq!(
        alpha.iter().map(|a| a.to_bits()).collect::<Vec<_>>(),
        cache.alpha.iter().map(|a| a.to_bits()).collect::<Vec<_>>()
    );
    assert_eq!(
        layer_weights(&h, &SlsParams::zeros(6)).unwrap(),
        vec![0.5; 7]
    );
}

#[test]
fn ties_route_to_lowest_frame() {
    // Frames 1 and 3 hold the same maximum in every column.
    let (l, n, d) = (2, 4, 3);
    let mut values = vec![0.0f32; l * n * d];
    for layer in 0..l {
        for f in 0..d {
            values[(layer * n + 1) * d + f] = 2.0;
            values[(layer * n + 3) * d + f] = 2.0;
        }
    }
    let h = HiddenStack::new("t", l, n, d, values).unwrap();
    let mut rng = SplitMix64::new(4);
    let p = random_params(&mut rng, d, 1.0);
    for _ in 0..5 {
        let (_, cache) = sls_forward(&h, &p).unwrap();
        assert_eq!(cache.argmax, vec![1; d]);
    }
}

#[test]
fn gate_bias_extremes_saturate_monotonically() {
    let mut rng = SplitMix64::new(8);
    let h = random_stack(&mut rng, 4, 3, 3);
    let mut p = random_params(&mut rng, 3, 1.0);
    let mut previous = vec![0.0; 4];
    for bias in [-40.0, -10.0, -1.0, 0.0, 1.0, 10.0, 40.0] {
        p.gate_bias = bias;
        let alpha = layer_weights(&h, &p).unwrap();
        for (a, prev) in alpha.iter().zip(&previous) {
            assert!(*a >= *prev);
            assert!((0.0..=1.0).contains(a));
        }
        previous = alpha;
    }
    p.gate_bias = -40.0;
    assert!(layer_weights(&h, &p).unwrap().iter().all(|&a| a < 1e-15));
    p.gate_bias = 40.0;
    assert!(layer_weights(&h, &p)
        .unwrap()
        .iter()
        .all(|&a| a > 1.0 - 1e-15));
}

#[test]
fn constant_gate_makes_mix_linear_in_each_layer() {
    let mut rng = SplitMix64::new(12);
    let h = random_stack(&mut rng, 3, 4, 2);
    let mut p = random_params(&mut rng, 2, 1.0);
    p.gate_weight = vec![0.0; 2];
    let (_, base) = sls_forward(&h, &p).unwrap();
    let c = 2.0f32;
    let scaled: Vec<f32> = h
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| if i < 8 { v * c } else { v })
        .collect();
    let h2 = HiddenStack::new("x", 3, 4, 2, scaled).unwrap();
    let (_, cache) = sls_forward(&h2, &p).unwrap();
    for i in 0..8 {
        let layer0 = base.alpha[0] * h.values()[i] as f64;
        let expected = base.mixed[i] + (c as f64 - 1.0) * layer0;
        assert!((cache.mixed[i] - expected).abs() < 1e-12);
    }
}

fn permute_frames(h: &HiddenStack, perm: &[usize]) -> HiddenStack {
    let (l, n, d) = (h.layers(), h.frames(), h.dim());
    let mut values = Vec::with_capacity(l * n * d);
    for layer in 0..l {
        for &src in perm {
            for f in 0..d {
                values.push(h.at(layer, src, f));
            }
        }
    }
    HiddenStack::new(h.utterance_id(), l, n, d, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frame_permutation_invariance(seed in any::<u64>(), l in 1usize..5, n in 1usize..7, d in 1usize..6) {
        let mut rng = SplitMix64::new(seed);
        let h = random_stack(&mut rng, l, n, d);
        let p = random_params(&mut rng, d, 1.0);
        let mut perm: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut perm);
        let hp = permute_frames(&h, &perm);
        let a = layer_weights(&h, &p).unwrap();
        let b = layer_weights(&hp, &p).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-14);
        }
        let s1 = sls_score(&h, &p).unwrap();
        let s2 = sls_score(&hp, &p).unwrap();
        prop_assert!((s1 - s2).abs() < 1e-12 * (1.0 + s1.abs()));
    }

    #[test]
    fn alpha_strictly_inside_unit_interval(seed in any::<u64>()) {
        let mut rng = SplitMix64::new(seed);
        let h = random_stack(&mut rng, 5, 3, 4);
        let p = random_params(&mut rng, 4, 3.0);
        for a in layer_weights(&h, &p).unwrap() {
            prop_assert!(a > 0.0 && a < 1.0);
        }
    }

    #[test]
    fn flat_round_trip(seed in any::<u64>(), d in 1usize..10) {
        let mut rng = SplitMix64::new(seed);
        let p = random_params(&mut rng, d, 1.0);
        prop_assert_eq!(SlsParams::from_flat(d, &p.to_flat()).unwrap(), p);
    }
}
