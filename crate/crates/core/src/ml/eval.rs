use super::dataset::Dataset;
use super::gbdt::GbdtModel;

/// Held-out metrics for a binary classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub n: usize,
    /// `None` when the set holds a single class.
    pub auc: Option<f64>,
    pub accuracy: f64,
    pub log_loss: f64,
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

/// Area under the ROC curve from the rank-sum statistic, ties at midrank.
pub fn auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks are 1-based: positions i..=j share rank (i+1 + j+1)/2
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += midrank * order[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Mean binary cross-entropy; probabilities are clipped away from 0 and 1.
pub fn log_loss(probs: &[f64], labels: &[f64]) -> f64 {
    const EPS: f64 = 1e-15;
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(EPS, 1.0 - EPS);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    total / probs.len().max(1) as f64
}

pub fn evaluate_model(model: &GbdtModel, test: &Dataset) -> Evaluation {
    let scores: Vec<f64> = test
        .examples
        .iter()
        .map(|e| model.predict_prob(&e.features))
        .collect();
    let labels: Vec<u8> = test.examples.iter().map(|e| e.label).collect();
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (&s, &l) in scores.iter().zip(&labels) {
        match (s >= 0.5, l == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    Evaluation {
        n: test.len(),
        auc: auc(&scores, &labels),
        accuracy: (tp + tn) as f64 / test.len().max(1) as f64,
        log_loss: log_loss(&scores, &y),
        true_pos: tp,
        false_pos: fp,
        true_neg: tn,
        false_neg: fn_,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_auc(scores: &[f64], labels: &[u8]) -> f64 {
        let mut num = 0.0;
        let mut pairs = 0.0;
        for (i, &sp) in scores.iter().enumerate() {
            if labels[i] != 1 {
                continue;
            }
            for (j, &sn) in scores.iter().enumerate() {
                if labels[j] != 0 {
                    continue;
                }
                pairs += 1.0;
                if sp > sn {
                    num += 1.0;
                } else if sp == sn {
                    num += 0.5;
                }
            }
        }
        num / pairs
    }

    #[test]
    fn separated_and_constant_scores() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]), Some(1.0));
        assert_eq!(auc(&[0.3; 6], &[0, 1, 0, 1, 1, 0]), Some(0.5));
        assert_eq!(auc(&[0.3, 0.4], &[1, 1]), None);
    }

    proptest! {
        #[test]
        fn auc_matches_pair_counting(
            data in proptest::collection::vec((0u8..6, 0u8..2), 2..40)
        ) {
            let scores: Vec<f64> = data.iter().map(|d| d.0 as f64 / 5.0).collect();
            let labels: Vec<u8> = data.iter().map(|d| d.1).collect();
            match auc(&scores, &labels) {
                Some(a) => prop_assert!((a - brute_auc(&scores, &labels)).abs() < 1e-12),
                None => prop_assert!(labels.iter().all(|&l| l == labels[0])),
            }
        }
    }
}
