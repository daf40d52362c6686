use dtn_workbench::ml::{train_gbdt, Dataset, GbdtParams, RelayFeatureVector, TrainingExample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Depth-one boosting on a single feature, written out step by step.
/// Returns final margins and the summed split gain.
fn stump_boost(x: &[f64], y: &[f64], rounds: usize, eta: f64, lambda: f64) -> (Vec<f64>, f64) {
    let p = y.iter().sum::<f64>() / y.len() as f64;
    let mut m = vec![(p / (1.0 - p)).ln(); x.len()];
    let mut distinct: Vec<f64> = x.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut total_gain = 0.0;
    for _ in 0..rounds {
        let g: Vec<f64> = m.iter().zip(y).map(|(mi, yi)| sigmoid(*mi) - yi).collect();
        let h: Vec<f64> = m
            .iter()
            .map(|mi| sigmoid(*mi) * (1.0 - sigmoid(*mi)))
            .collect();
        let (gs, hs): (f64, f64) = (g.iter().sum(), h.iter().sum());
        let score = |g: f64, h: f64| g * g / (h + lambda);
        let mut best: Option<(f64, f64)> = None;
        for w in distinct.windows(2) {
            let thr = 0.5 * (w[0] + w[1]);
            let (mut gl, mut hl) = (0.0, 0.0);
            for i in 0..x.len() {
                if x[i] < thr {
                    gl += g[i];
                    hl += h[i];
                }
            }
            let gain = 0.5 * (score(gl, hl) + score(gs - gl, hs - hl) - score(gs, hs));
            if gain > 0.0 && best.map_or(true, |(_, b)| gain > b) {
                best = Some((thr, gain));
            }
        }
        let Some((thr, gain)) = best else {
            let w = -gs / (hs + lambda);
            m.iter_mut().for_each(|mi| *mi += eta * w);
            continue;
        };
        total_gain += gain;
        let side = |left: bool| {
            let idx = (0..x.len()).filter(|&i| (x[i] < thr) == left);
            let (gg, hh) = idx.fold((0.0, 0.0), |(a, b), i| (a + g[i], b + h[i]));
            -gg / (hh + lambda)
        };
        let (wl, wr) = (side(true), side(false));
        for i in 0..x.len() {
            m[i] += eta * if x[i] < thr { wl } else { wr };
        }
    }
    (m, total_gain)
}

#[test]
fn stumps_match_hand_recurrence() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..20 {
        let n = rng.gen_range(8..40);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..1000) as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| (rng.gen_bool(if *v > 500.0 { 0.8 } else { 0.2 })) as u8 as f64)
            .collect();
        if y.iter().all(|v| *v == y[0]) {
            continue;
        }
        let ds = Dataset::new(
            x.iter()
                .zip(&y)
                .map(|(xi, yi)| TrainingExample {
                    features: RelayFeatureVector::from_slice(&[*xi, 0.0, 0.0, 0.0, 0.0]),
                    label: *yi as u8,
                })
                .collect(),
        );
        let params = GbdtParams {
            rounds: 4,
            max_depth: 1,
            learning_rate: 0.5,
            l2_lambda: 1.0,
            min_split_gain: 0.0,
            min_leaf_examples: 1,
        };
        let (model, report) = train_gbdt(&ds, &params).unwrap();
        let (margins, gain) = stump_boost(&x, &y, 4, 0.5, 1.0);
        for (ex, m) in ds.examples.iter().zip(&margins) {
            let got = model.predict_prob(&ex.features);
            assert!(
                (got - sigmoid(*m)).abs() < 1e-12,
                "case {case}: {got} vs {}",
                sigmoid(*m)
            );
        }
        assert!(
            (report.total_gain - gain).abs() < 1e-9 * gain.max(1.0),
            "case {case}"
        );
    }
}
