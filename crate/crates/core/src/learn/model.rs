//! Scoring functions `f(x_user, y_item)`.
//!
//! The linear scorer is `a·x + b·y`. The two-tower scorer maps user and item
//! features through separate fully connected networks (tanh on hidden layers,
//! linear output layer) and scores by the dot product of the two embeddings.
//!
//! Both kinds expose the same embedding interface so the pairwise trainer can
//! accumulate gradients per user and per item instead of per pair.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Mlp,
}

/// Shape of a scoring model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Hidden and output widths of each tower (MLP only); the last entry is the
    /// embedding dimension.
    #[serde(default = "default_widths")]
    pub tower_widths: Vec<usize>,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
}

fn default_widths() -> Vec<usize> {
    vec![10, 10, 10]
}

fn default_init_scale() -> f64 {
    0.1
}

impl ModelSpec {
    pub fn linear() -> Self {
        ModelSpec {
            kind: ModelKind::Linear,
            tower_widths: default_widths(),
            init_scale: default_init_scale(),
        }
    }

    pub fn mlp() -> Self {
        ModelSpec {
            kind: ModelKind::Mlp,
            tower_widths: default_widths(),
            init_scale: default_init_scale(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Dense {
    inputs: usize,
    outputs: usize,
    /// row-major `outputs x inputs`
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Dense {
    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect()
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Fully connected tower; tanh after every layer except the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tower {
    layers: Vec<Dense>,
}

/// Activations kept for backpropagation: `acts[0]` is the input, `acts[l + 1]`
/// the output of layer `l` (after its nonlinearity).
pub struct TowerCache {
    acts: Vec<Vec<f64>>,
}

impl Tower {
    fn new<R: Rng + ?Sized>(input: usize, widths: &[usize], scale: f64, rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(widths.len());
        let mut prev = input;
        for &w in widths {
            let mut draw = || rng.gen_range(-scale..scale);
            let weights = (0..w * prev).map(|_| draw()).collect();
            let bias = (0..w).map(|_| draw()).collect();
            layers.push(Dense {
                inputs: prev,
                outputs: w,
                weights,
                bias,
            });
            prev = w;
        }
        Tower { layers }
    }

    fn forward(&self, x: &[f64]) -> (Vec<f64>, TowerCache) {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(&acts[l]);
            if l < last {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        let out = acts[acts.len() - 1].clone();
        (out, TowerCache { acts })
    }

    /// Adds `d(out)/d(params) · grad_out` into `grad` (same layout as `write_params`).
    fn backward(&self, cache: &TowerCache, grad_out: &[f64], grad: &mut [f64]) {
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for layer in &self.layers {
            offsets.push(off);
            off += layer.param_count();
        }
        let last = self.layers.len() - 1;
        let mut delta = grad_out.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            if l < last {
                // tanh' = 1 - tanh^2, evaluated at this layer's output
                for (d, a) in delta.iter_mut().zip(&cache.acts[l + 1]) {
                    *d *= 1.0 - a * a;
                }
            }
            let input = &cache.acts[l];
            let base = offsets[l];
            for o in 0..layer.outputs {
                let row = base + o * layer.inputs;
                for i in 0..layer.inputs {
                    grad[row + i] += delta[o] * input[i];
                }
                grad[base + layer.weights.len() + o] += delta[o];
            }
            if l > 0 {
                let mut next = vec![0.0; layer.inputs];
                for o in 0..layer.outputs {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (n, w) in next.iter_mut().zip(row) {
                        *n += delta[o] * w;
                    }
                }
                delta = next;
            }
        }
    }

    fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    fn write_params(&self, out: &mut Vec<f64>) {
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
    }

    fn read_params(&mut self, src: &[f64]) -> usize {
        let mut off = 0;
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            layer.weights.copy_from_slice(&src[off..off + nw]);
            off += nw;
            let nb = layer.bias.len();
            layer.bias.copy_from_slice(&src[off..off + nb]);
            off += nb;
        }
        off
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Body {
    Linear { user: Vec<f64>, item: Vec<f64> },
    TwoTower { user: Tower, item: Tower },
}

/// A trained or initialized scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringModel {
    user_dim: usize,
    item_dim: usize,
    body: Body,
}

/// Embedding plus whatever backpropagation needs.
pub struct Embedding {
    pub vector: Vec<f64>,
    cache: Option<TowerCache>,
}

impl ScoringModel {
    /// Parameters drawn uniformly from `(-init_scale, init_scale)`.
    pub fn init<R: Rng + ?Sized>(spec: &ModelSpec, user_dim: usize, item_dim: usize, rng: &mut R) -> Result<Self> {
        if user_dim == 0 || item_dim == 0 {
            return Err(Error::BadDimensions("feature dimensions must be positive".into()));
        }
        if !(spec.init_scale > 0.0) {
            return Err(Error::InvalidConfig("init_scale must be positive".into()));
        }
        let s = spec.init_scale;
        let body = match spec.kind {
            ModelKind::Linear => Body::Linear {
                user: (0..user_dim).map(|_| rng.gen_range(-s..s)).collect(),
                item: (0..item_dim).map(|_| rng.gen_range(-s..s)).collect(),
            },
            ModelKind::Mlp => {
                if spec.tower_widths.is_empty() || spec.tower_widths.contains(&0) {
                    return Err(Error::InvalidConfig("tower widths must be nonempty and positive".into()));
                }
                let user = Tower::new(user_dim, &spec.tower_widths, s, rng);
                let item = Tower::new(item_dim, &spec.tower_widths, s, rng);
                Body::TwoTower { user, item }
            }
        };
        Ok(ScoringModel {
            user_dim,
            item_dim,
            body,
        })
    }

    /// The linear scorer with the given weights.
    pub fn linear(user_weights: Vec<f64>, item_weights: Vec<f64>) -> Self {
        ScoringModel {
            user_dim: user_weights.len(),
            item_dim: item_weights.len(),
            body: Body::Linear {
                user: user_weights,
                item: item_weights,
            },
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self.body {
            Body::Linear { .. } => ModelKind::Linear,
            Body::TwoTower { .. } => ModelKind::Mlp,
        }
    }

    pub fn user_dim(&self) -> usize {
        self.user_dim
    }

    pub fn item_dim(&self) -> usize {
        self.item_dim
    }

    /// Number of parameters.
    pub fn param_count(&self) -> usize {
        match &self.body {
            Body::Linear { user, item } => user.len() + item.len(),
            Body::TwoTower { user, item } => user.param_count() + item.param_count(),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        match &self.body {
            Body::Linear { user, item } => {
                out.extend_from_slice(user);
                out.extend_from_slice(item);
            }
            Body::TwoTower { user, item } => {
                user.write_params(&mut out);
                item.write_params(&mut out);
            }
        }
        out
    }

    pub fn set_params(&mut self, src: &[f64]) -> Result<()> {
        if src.len() != self.param_count() {
            return Err(Error::SizeMismatch {
                expected: self.param_count(),
                actual: src.len(),
            });
        }
        match &mut self.body {
            Body::Linear { user, item } => {
                let n = user.len();
                user.copy_from_slice(&src[..n]);
                item.copy_from_slice(&src[n..]);
            }
            Body::TwoTower { user, item } => {
                let n = user.read_params(src);
                item.read_params(&src[n..]);
            }
        }
        Ok(())
    }

    pub fn params_finite(&self) -> bool {
        self.params().iter().all(|p| p.is_finite())
    }

    /// Offset of the item-side parameters in the flat layout.
    fn item_offset(&self) -> usize {
        match &self.body {
            Body::Linear { user, .. } => user.len(),
            Body::TwoTower { user, .. } => user.param_count(),
        }
    }

    // The linear scorer is the dot product of [a·x, 1] and [1, b·y].
    pub fn embed_user(&self, x: &[f64]) -> Embedding {
        match &self.body {
            Body::Linear { user, .. } => Embedding {
                vector: vec![dot(user, x), 1.0],
                cache: None,
            },
            Body::TwoTower { user, .. } => {
                let (vector, cache) = user.forward(x);
                Embedding {
                    vector,
                    cache: Some(cache),
                }
            }
        }
    }

    pub fn embed_item(&self, y: &[f64]) -> Embedding {
        match &self.body {
            Body::Linear { item, .. } => Embedding {
                vector: vec![1.0, dot(item, y)],
                cache: None,
            },
            Body::TwoTower { item, .. } => {
                let (vector, cache) = item.forward(y);
                Embedding {
                    vector,
                    cache: Some(cache),
                }
            }
        }
    }

    /// Accumulates the parameter gradient of `grad_emb · user_embedding(x)`.
    pub fn backprop_user(&self, x: &[f64], emb: &Embedding, grad_emb: &[f64], grad: &mut [f64]) {
        match &self.body {
            Body::Linear { user, .. } => {
                for (g, v) in grad[..user.len()].iter_mut().zip(x) {
                    *g += grad_emb[0] * v;
                }
            }
            Body::TwoTower { user, .. } => {
                let n = user.param_count();
                user.backward(emb.cache.as_ref().expect("tower cache"), grad_emb, &mut grad[..n]);
            }
        }
    }

    /// Accumulates the parameter gradient of `grad_emb · item_embedding(y)`.
    pub fn backprop_item(&self, y: &[f64], emb: &Embedding, grad_emb: &[f64], grad: &mut [f64]) {
        let off = self.item_offset();
        match &self.body {
            Body::Linear { item, .. } => {
                for (g, v) in grad[off..off + item.len()].iter_mut().zip(y) {
                    *g += grad_emb[1] * v;
                }
            }
            Body::TwoTower { item, .. } => {
                item.backward(emb.cache.as_ref().expect("tower cache"), grad_emb, &mut grad[off..]);
            }
        }
    }

    pub fn score(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(&self.embed_user(x).vector, &self.embed_item(y).vector)
    }

    /// Scores of one user against every item.
    pub fn score_items(&self, x: &[f64], items: &[Vec<f64>]) -> Vec<f64> {
        let u = self.embed_user(x).vector;
        items.iter().map(|y| dot(&u, &self.embed_item(y).vector)).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
