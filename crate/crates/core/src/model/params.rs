//! Parameter storage: named tensors in one flat buffer.
//!
//! Master weights live in f32 (the checkpoint precision, so save/load round
//! trips are bit-exact); every compute pass upcasts to f64 once per call.

use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ModelConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    /// Number of scalar elements in the tensor.
    pub fn element_count(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Deterministic name -> (offset, shape) table derived from a model config.
#[derive(Debug)]
pub struct ParamLayout {
    specs: Vec<TensorSpec>,
    by_name: HashMap<String, usize>,
    total: usize,
}

impl ParamLayout {
    pub fn for_config(config: &ModelConfig) -> ParamLayout {
        let h = config.hidden_dim;
        let f = config.ffn_dim;
        let v = config.vocab_size;
        let mut b = LayoutBuilder::default();
        b.tensor("tok_emb", &[v, h]);
        b.tensor("pos_src", &[config.max_source_len, h]);
        b.tensor("pos_tgt", &[config.max_target_len, h]);
        b.layernorm("ln_emb_src", h);
        b.layernorm("ln_emb_tgt", h);
        for i in 0..config.encoder_layers {
            b.attention(&format!("enc{i}.attn"), h);
            b.layernorm(&format!("enc{i}.ln1"), h);
            b.ffn(&format!("enc{i}.ffn"), h, f);
            b.layernorm(&format!("enc{i}.ln2"), h);
        }
        for i in 0..config.decoder_layers {
            b.attention(&format!("dec{i}.self"), h);
            b.layernorm(&format!("dec{i}.ln1"), h);
            b.attention(&format!("dec{i}.cross"), h);
            b.layernorm(&format!("dec{i}.ln2"), h);
            b.ffn(&format!("dec{i}.ffn"), h, f);
            b.layernorm(&format!("dec{i}.ln3"), h);
        }
        b.tensor("out_bias", &[v]);
        b.build()
    }

    pub fn specs(&self) -> &[TensorSpec] {
        &self.specs
    }

    pub fn total_len(&self) -> usize {
        self.total
    }

    pub fn spec(&self, name: &str) -> &TensorSpec {
        let idx = *self
            .by_name
            .get(name)
            .unwrap_or_else(|| panic!("unknown tensor {name}"));
        &self.specs[idx]
    }

    pub fn range(&self, name: &str) -> std::ops::Range<usize> {
        let spec = self.spec(name);
        spec.offset..spec.offset + spec.element_count()
    }
}

#[derive(Default)]
struct LayoutBuilder {
    specs: Vec<TensorSpec>,
    total: usize,
}

impl LayoutBuilder {
    fn tensor(&mut self, name: &str, shape: &[usize]) {
        let len: usize = shape.iter().product();
        self.specs.push(TensorSpec {
            name: name.to_string(),
            shape: shape.to_vec(),
            offset: self.total,
        });
        self.total += len;
    }

    fn layernorm(&mut self, prefix: &str, dim: usize) {
        self.tensor(&format!("{prefix}.gamma"), &[dim]);
        self.tensor(&format!("{prefix}.beta"), &[dim]);
    }

    fn attention(&mut self, prefix: &str, h: usize) {
        for side in ["q", "k", "v", "o"] {
            self.tensor(&format!("{prefix}.w{side}"), &[h, h]);
            self.tensor(&format!("{prefix}.b{side}"), &[h]);
        }
    }

    fn ffn(&mut self, prefix: &str, h: usize, f: usize) {
        self.tensor(&format!("{prefix}.w1"), &[h, f]);
        self.tensor(&format!("{prefix}.b1"), &[f]);
        self.tensor(&format!("{prefix}.w2"), &[f, h]);
        self.tensor(&format!("{prefix}.b2"), &[h]);
    }

    fn build(self) -> ParamLayout {
        let by_name = self
            .specs
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.clone(), i))
            .collect();
        ParamLayout {
            specs: self.specs,
            by_name,
            total: self.total,
        }
    }
}

/// All trainable weights. Finite by construction after every optimizer step.
#[derive(Debug, Clone)]
pub struct ModelParameters {
    pub(crate) layout: Arc<ParamLayout>,
    pub(crate) data: Vec<f32>,
}

impl PartialEq for ModelParameters {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data && self.layout.specs == other.layout.specs
    }
}

impl ModelParameters {
    /// Seeded random initialization: weights N(0, 0.02), biases and LN beta
    /// zero, LN gamma one.
    pub fn init(config: &ModelConfig, seed: u64) -> ModelParameters {
        let layout = Arc::new(ParamLayout::for_config(config));
        let mut data = vec![0.0f32; layout.total_len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gauss = Gaussian::new(&mut rng);
        for spec in layout.specs() {
            let slice = &mut data[spec.offset..spec.offset + spec.element_count()];
            if spec.name.ends_with(".gamma") {
                slice.fill(1.0);
            } else if is_bias_name(&spec.name) {
                slice.fill(0.0);
            } else {
                for v in slice {
                    *v = (gauss.sample() * 0.02) as f32;
                }
            }
        }
        ModelParameters { layout, data }
    }

    pub fn from_raw(layout: Arc<ParamLayout>, data: Vec<f32>) -> Result<ModelParameters> {
        if data.len() != layout.total_len() {
            return Err(Error::Shape(format!(
                "parameter buffer has {} values, layout needs {}",
                data.len(),
                layout.total_len()
            )));
        }
        Ok(ModelParameters { layout, data })
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn tensor(&self, name: &str) -> &[f32] {
        &self.data[self.layout.range(name)]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// f64 working copy for a forward/backward pass.
    pub fn dense(&self) -> DenseParams {
        DenseParams {
            layout: Arc::clone(&self.layout),
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }
}

fn is_bias_name(name: &str) -> bool {
    name.ends_with(".beta")
        || name == "out_bias"
        || name
            .rsplit('.')
            .next()
            .is_some_and(|last| last.len() == 2 && last.starts_with('b'))
}

/// f64 view of the parameters used by the numeric passes.
#[derive(Debug, Clone)]
pub struct DenseParams {
    pub(crate) layout: Arc<ParamLayout>,
    pub(crate) data: Vec<f64>,
}

impl DenseParams {
    pub fn get(&self, name: &str) -> &[f64] {
        &self.data[self.layout.range(name)]
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

struct Gaussian<'r> {
    rng: &'r mut ChaCha8Rng,
    spare: Option<f64>,
}

impl<'r> Gaussian<'r> {
    fn new(rng: &'r mut ChaCha8Rng) -> Gaussian<'r> {
        Gaussian { rng, spare: None }
    }

    /// Box-Muller standard normal.
    fn sample(&mut self) -> f64 {
        use rand::Rng;
        if let Some(v) = self.spare.take() {
            return v;
        }
        loop {
            let u: f64 = self.rng.random();
            let v: f64 = self.rng.random();
            if u <= f64::MIN_POSITIVE {
                continue;
            }
            let r = (-2.0 * u.ln()).sqrt();
            let theta = 2.0 * std::f64::consts::PI * v;
            self.spare = Some(r * theta.sin());
            return r * theta.cos();
        }
    }
}
