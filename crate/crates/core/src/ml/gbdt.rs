//! Second-order gradient boosted trees for binary logistic loss.
//!
//! Splits are exact: every midpoint between consecutive distinct values of
//! every feature is scored. Feature columns are sorted once per training run
//! and the sorted index lists are stably partitioned as nodes split, so each
//! tree level costs O(n * features).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::dataset::Dataset;
use super::eval::{log_loss, Evaluation};
use super::features::{RelayFeatureVector, FEATURE_NAMES, NUM_FEATURES};

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("training set is empty")]
    Empty,
    #[error("training set contains a single class")]
    SingleClass,
    #[error("invalid parameter: {0}")]
    BadParam(&'static str),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed model file: {0}")]
    Malformed(String),
    #[error("unsupported model version {0}")]
    Version(u32),
    #[error("feature names {0:?} do not match the runtime feature order")]
    FeatureNames(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbdtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub min_split_gain: f64,
    pub min_leaf_examples: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
            l2_lambda: 1.0,
            min_split_gain: 0.0,
            min_leaf_examples: 5,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.rounds < 1 {
            return Err(TrainError::BadParam("rounds must be >= 1"));
        }
        if self.max_depth < 1 {
            return Err(TrainError::BadParam("max_depth must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(TrainError::BadParam("learning_rate must be in (0, 1]"));
        }
        if !(self.l2_lambda >= 0.0) {
            return Err(TrainError::BadParam("l2_lambda must be >= 0"));
        }
        if !(self.min_split_gain >= 0.0) {
            return Err(TrainError::BadParam("min_split_gain must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        #[serde(default)]
        gain: f64,
    },
    Leaf {
        leaf: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Leaf weight reached by `x`; left iff `x[feature] < threshold`.
    pub fn leaf_value(&self, x: &[f64; NUM_FEATURES]) -> f64 {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                Node::Leaf { leaf } => return leaf,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => idx = if x[feature] < threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub version: u32,
    pub feature_names: Vec<String>,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl GbdtModel {
    /// A model with no trees.
    pub fn constant(base_score: f64, learning_rate: f64) -> Self {
        Self {
            version: MODEL_VERSION,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            base_score,
            learning_rate,
            trees: Vec::new(),
        }
    }

    pub fn margin(&self, x: &[f64; NUM_FEATURES]) -> f64 {
        self.base_score
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.leaf_value(x))
                .sum::<f64>()
    }

    pub fn predict_prob(&self, x: &RelayFeatureVector) -> f64 {
        self.predict_array(&x.to_array())
    }

    pub fn predict_array(&self, x: &[f64; NUM_FEATURES]) -> f64 {
        // keep strictly inside (0, 1) even for saturated margins
        sigmoid(self.margin(x)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)
    }

    /// Total realized split gain per feature, in runtime feature order.
    pub fn feature_importance(&self) -> Vec<(&'static str, f64)> {
        let mut gains = [0.0; NUM_FEATURES];
        for tree in &self.trees {
            for node in &tree.nodes {
                if let Node::Split { feature, gain, .. } = node {
                    gains[*feature] += gain;
                }
            }
        }
        FEATURE_NAMES.iter().copied().zip(gains).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == MODEL_VERSION as u64 => {}
            Some(v) => return Err(ModelError::Version(v as u32)),
            None => return Err(ModelError::Malformed("missing version".into())),
        }
        let model: GbdtModel =
            serde_json::from_value(value).map_err(|e| ModelError::Malformed(e.to_string()))?;
        if model
            .feature_names
            .iter()
            .map(String::as_str)
            .ne(FEATURE_NAMES)
        {
            return Err(ModelError::FeatureNames(model.feature_names));
        }
        model.check_structure()?;
        Ok(model)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), ModelError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    fn check_structure(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::Malformed(msg));
        for (t, tree) in self.trees.iter().enumerate() {
            if tree.nodes.is_empty() {
                return bad(format!("tree {t} has no nodes"));
            }
            for (i, node) in tree.nodes.iter().enumerate() {
                match *node {
                    Node::Split {
                        feature,
                        left,
                        right,
                        ..
                    } => {
                        // children always follow their parent, which also rules out cycles
                        if feature >= NUM_FEATURES
                            || left <= i
                            || right <= i
                            || left >= tree.nodes.len()
                            || right >= tree.nodes.len()
                        {
                            return bad(format!("tree {t} node {i} is inconsistent"));
                        }
                    }
                    Node::Leaf { leaf } if !leaf.is_finite() => {
                        return bad(format!("tree {t} node {i} has a non-finite leaf"));
                    }
                    Node::Leaf { .. } => {}
                }
            }
        }
        Ok(())
    }
}

/// Training summary. Test-side fields are filled in by the caller once a
/// held-out set has been evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub gains: [f64; NUM_FEATURES],
    pub total_gain: f64,
    /// Training log-loss before the first tree and after every round.
    pub train_loss_by_round: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub test: Option<Evaluation>,
}

impl TrainReport {
    pub fn train_log_loss(&self) -> f64 {
        *self.train_loss_by_round.last().expect("at least round 0")
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Grower<'a> {
    x: &'a [[f64; NUM_FEATURES]],
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbdtParams,
    nodes: Vec<Node>,
    gains: [f64; NUM_FEATURES],
}

impl Grower<'_> {
    fn leaf_weight(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.params.l2_lambda)
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.l2_lambda)
    }

    /// Grows the subtree for the examples in `columns` (one sorted index list
    /// per feature, all holding the same members) and returns its root index.
    fn grow(&mut self, columns: [Vec<u32>; NUM_FEATURES], depth: usize) -> usize {
        let members = &columns[0];
        let (g, h) = members.iter().fold((0.0, 0.0), |(g, h), &i| {
            (g + self.grad[i as usize], h + self.hess[i as usize])
        });
        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf {
            leaf: self.leaf_weight(g, h),
        });
        if depth >= self.params.max_depth
            || members.len() < 2 * self.params.min_leaf_examples.max(1)
        {
            return idx;
        }
        let Some(best) = self.best_split(&columns, g, h) else {
            return idx;
        };

        let goes_left = |i: &u32| self.x[*i as usize][best.feature] < best.threshold;
        let mut left_cols: [Vec<u32>; NUM_FEATURES] = Default::default();
        let mut right_cols: [Vec<u32>; NUM_FEATURES] = Default::default();
        for f in 0..NUM_FEATURES {
            let (l, r): (Vec<u32>, Vec<u32>) = columns[f].iter().partition(|i| goes_left(i));
            left_cols[f] = l;
            right_cols[f] = r;
        }
        drop(columns);
        self.gains[best.feature] += best.gain;
        let left = self.grow(left_cols, depth + 1);
        let right = self.grow(right_cols, depth + 1);
        self.nodes[idx] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            gain: best.gain,
        };
        idx
    }

    fn best_split(
        &self,
        columns: &[Vec<u32>; NUM_FEATURES],
        g: f64,
        h: f64,
    ) -> Option<SplitChoice> {
        let min_leaf = self.params.min_leaf_examples.max(1);
        let parent = self.score(g, h);
        let mut best: Option<SplitChoice> = None;
        for (f, col) in columns.iter().enumerate() {
            let n = col.len();
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..n - 1 {
                let i = col[k] as usize;
                gl += self.grad[i];
                hl += self.hess[i];
                let (v, next) = (self.x[i][f], self.x[col[k + 1] as usize][f]);
                if !(v < next) || k + 1 < min_leaf || n - k - 1 < min_leaf {
                    continue;
                }
                let (gr, hr) = (g - gl, h - hl);
                let gain = 0.5 * (self.score(gl, hl) + self.score(gr, hr) - parent)
                    - self.params.min_split_gain;
                if gain > 0.0 && best.as_ref().map_or(true, |b| gain > b.gain) {
                    let mid = 0.5 * (v + next);
                    let threshold = if mid > v { mid } else { next };
                    best = Some(SplitChoice {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }
}

/// Fits a boosted ensemble to `train` under logistic loss.
pub fn train_gbdt(
    train: &Dataset,
    params: &GbdtParams,
) -> Result<(GbdtModel, TrainReport), TrainError> {
    params.validate()?;
    let n = train.len();
    if n == 0 {
        return Err(TrainError::Empty);
    }
    let x: Vec<[f64; NUM_FEATURES]> = train
        .examples
        .iter()
        .map(|e| e.features.to_array())
        .collect();
    let y: Vec<f64> = train.examples.iter().map(|e| e.label as f64).collect();
    let positives = y.iter().filter(|&&v| v == 1.0).count();
    if positives == 0 || positives == n {
        return Err(TrainError::SingleClass);
    }
    let prior = positives as f64 / n as f64;
    let mut model = GbdtModel::constant((prior / (1.0 - prior)).ln(), params.learning_rate);

    let sorted: [Vec<u32>; NUM_FEATURES] = std::array::from_fn(|f| {
        let mut idx: Vec<u32> = (0..n as u32).collect();
        idx.sort_by(|&a, &b| {
            x[a as usize][f]
                .total_cmp(&x[b as usize][f])
                .then(a.cmp(&b))
        });
        idx
    });

    let mut margins = vec![model.base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut gains = [0.0; NUM_FEATURES];
    let mut losses = vec![mean_log_loss(&margins, &y)];

    for _ in 0..params.rounds {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            grad[i] = p - y[i];
            hess[i] = p * (1.0 - p);
        }
        let mut grower = Grower {
            x: &x,
            grad: &grad,
            hess: &hess,
            params,
            nodes: Vec::new(),
            gains: [0.0; NUM_FEATURES],
        };
        grower.grow(sorted.clone(), 0);
        let tree = Tree {
            nodes: grower.nodes,
        };
        for f in 0..NUM_FEATURES {
            gains[f] += grower.gains[f];
        }
        for i in 0..n {
            margins[i] += params.learning_rate * tree.leaf_value(&x[i]);
        }
        model.trees.push(tree);
        losses.push(mean_log_loss(&margins, &y));
    }

    let report = TrainReport {
        gains,
        total_gain: gains.iter().sum(),
        train_loss_by_round: losses,
        n_train: n,
        n_test: 0,
        test: None,
    };
    Ok((model, report))
}

fn mean_log_loss(margins: &[f64], y: &[f64]) -> f64 {
    let probs: Vec<f64> = margins.iter().map(|&m| sigmoid(m)).collect();
    log_loss(&probs, y)
}
