//! Toy alternating-attention transformer with GCM insertion points.
//!
//! A chunk of frames is patch-embedded into tokens, passed through L
//! blocks of frame-wise then global self-attention with a residual, and
//! decoded by linear heads into per-frame cameras, depth maps, and point
//! maps. Designated global-attention layers host a GCM whose gated output
//! joins the residual stream:
//!
//! ```text
//! plain block:  x <- gattn(fattn(x)) + x
//! gcm block:    y = gattn(fattn(x));  x <- (alpha o GCM(y) + y) + x
//! ```
//!
//! Weight streams are tagged per component, so a backbone built without
//! GCM modules draws exactly the same attention/embedding/head weights.

mod attention;
mod heads;
mod loss;
mod patchify;
mod prediction;

pub use attention::{attention, softmax_rows, AttentionWeights};
pub use loss::multi_task_loss;
pub use prediction::{ChunkPrediction, FramePrediction, Grid, PointGrid, CAMERA_DIM};

use std::collections::BTreeMap;

use crate::error::{CoreError, Result};
use crate::gcm::{self, GcmConfig, GcmLayerState, Snapshot, TokenBlock};
use crate::numkit::Matrix;
use crate::rng;

/// RGB image, channel-major planes.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn zeros(h: usize, w: usize) -> Self {
        Image { h, w, data: vec![0.0; 3 * h * w] }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.h + y) * self.w + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.h + y) * self.w + x] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackboneConfig {
    /// Block count L.
    pub layers: usize,
    /// 1-based indices of blocks hosting a GCM after global attention.
    pub gcm_layers: Vec<usize>,
    pub d: usize,
    /// Attention head count.
    pub heads: usize,
    pub patch: usize,
    pub image_h: usize,
    pub image_w: usize,
    pub seed: u64,
    /// GCM head count, expansion factor, inner learning rate, gate init.
    pub gcm_nh: usize,
    pub gcm_k: usize,
    pub gcm_base_lr: f64,
    pub gcm_gate_init: f64,
}

impl BackboneConfig {
    /// Desk-scale defaults: 8 blocks with memories on layers 2, 5, 8.
    pub fn toy(seed: u64) -> Self {
        BackboneConfig {
            layers: 8,
            gcm_layers: vec![2, 5, 8],
            d: 64,
            heads: 4,
            patch: 8,
            image_h: 32,
            image_w: 32,
            seed,
            gcm_nh: 1,
            gcm_k: 4,
            gcm_base_lr: 1e-3,
            gcm_gate_init: 0.1,
        }
    }

    pub fn tokens_per_frame(&self) -> usize {
        (self.image_h / self.patch) * (self.image_w / self.patch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(CoreError::config("need at least one layer".to_string()));
        }
        if self.gcm_layers.iter().any(|&l| l == 0 || l > self.layers) {
            return Err(CoreError::config(format!(
                "gcm layers {:?} outside 1..={}",
                self.gcm_layers, self.layers
            )));
        }
        if self.patch == 0 || self.image_h % self.patch != 0 || self.image_w % self.patch != 0 {
            return Err(CoreError::config(format!(
                "image {}x{} not divisible by patch {}",
                self.image_h, self.image_w, self.patch
            )));
        }
        if self.d == 0 || self.heads == 0 || self.d % self.heads != 0 {
            return Err(CoreError::config(format!(
                "dimension {} must be a positive multiple of {} heads",
                self.d, self.heads
            )));
        }
        if self.d % self.gcm_nh != 0 {
            return Err(CoreError::config("dimension not divisible by gcm heads".to_string()));
        }
        Ok(())
    }

    /// The GCM hyperparameters for one hosting layer.
    pub fn gcm_config(&self, layer: usize) -> GcmConfig {
        GcmConfig {
            d: self.d,
            nh: self.gcm_nh,
            k: self.gcm_k,
            base_lr: self.gcm_base_lr,
            gate_init: self.gcm_gate_init,
            seed: rng::derive_seed(self.seed, &format!("bb.gcm{layer}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LayerWeights {
    pub frame: AttentionWeights,
    pub global: AttentionWeights,
}

/// Static backbone weights. Fast-weight states live with the caller.
#[derive(Debug, Clone)]
pub struct Backbone {
    pub config: BackboneConfig,
    /// Patch embedding, d x (3 * patch^2), plus bias.
    pub embed: Matrix,
    pub embed_bias: Vec<f64>,
    pub layers: Vec<LayerWeights>,
    pub camera_w: Matrix,
    pub camera_b: Vec<f64>,
    pub depth_w: Matrix,
    pub depth_b: Vec<f64>,
    pub point_w: Matrix,
    pub point_b: Vec<f64>,
}

impl Backbone {
    pub fn init(config: BackboneConfig) -> Result<Self> {
        config.validate()?;
        let d = config.d;
        let patch_dim = 3 * config.patch * config.patch;
        let limit_patch = (3.0 / patch_dim as f64).sqrt();
        let limit_d = (3.0 / d as f64).sqrt();
        let seed = config.seed;

        let mat = |tag: &str, rows: usize, cols: usize, limit: f64| {
            let mut r = rng::stream(seed, tag);
            Matrix::random_uniform(rows, cols, limit, &mut r)
        };
        let attn = |tag: &str| AttentionWeights {
            wq: mat(&format!("{tag}.wq"), d, d, limit_d),
            wk: mat(&format!("{tag}.wk"), d, d, limit_d),
            wv: mat(&format!("{tag}.wv"), d, d, limit_d),
            wo: mat(&format!("{tag}.wo"), d, d, limit_d),
        };
        let layers = (1..=config.layers)
            .map(|l| LayerWeights {
                frame: attn(&format!("bb.layer{l}.frame")),
                global: attn(&format!("bb.layer{l}.global")),
            })
            .collect();

        Ok(Backbone {
            embed: mat("bb.embed", d, patch_dim, limit_patch),
            embed_bias: vec![0.0; d],
            layers,
            camera_w: mat("bb.head.camera", prediction::CAMERA_DIM, d, limit_d),
            camera_b: vec![0.0; prediction::CAMERA_DIM],
            depth_w: mat("bb.head.depth", 2, d, limit_d),
            depth_b: vec![0.0; 2],
            point_w: mat("bb.head.point", 4, d, limit_d),
            point_b: vec![0.0; 4],
            config,
        })
    }

    /// Fresh replicated GCM states, one per hosting layer.
    pub fn init_gcm_states(&self) -> Result<BTreeMap<usize, GcmLayerState>> {
        self.config
            .gcm_layers
            .iter()
            .map(|&l| Ok((l, GcmLayerState::init(self.config.gcm_config(l))?)))
            .collect()
    }

    /// Patch-embed a chunk of frames into one token block.
    pub fn embed_chunk(&self, images: &[Image]) -> Result<TokenBlock> {
        if images.is_empty() {
            return Err(CoreError::input("chunk holds no frames".to_string()));
        }
        let per_frame = self.config.tokens_per_frame();
        let mut tokens = Matrix::zeros(images.len() * per_frame, self.config.d);
        for (f, image) in images.iter().enumerate() {
            let frame_tokens = patchify::patchify(self, image)?;
            for t in 0..per_frame {
                tokens
                    .row_mut(f * per_frame + t)
                    .copy_from_slice(frame_tokens.tokens().row(t));
            }
        }
        TokenBlock::new(tokens)
    }

    /// gattn(fattn(x)) for block `layer` (1-based), without the residual.
    pub fn layer_attention(&self, layer: usize, x: &Matrix, tokens_per_frame: usize) -> Result<Matrix> {
        let weights = &self.layers[layer - 1];
        let after_frame = attention::frame_attention(&weights.frame, x, self.config.heads, tokens_per_frame)?;
        attention::global_attention(&weights.global, &after_frame, self.config.heads)
    }

    /// One plain block: gattn(fattn(x)) + x.
    pub fn alternating_block(&self, layer: usize, x: &Matrix, tokens_per_frame: usize) -> Result<Matrix> {
        let y = self.layer_attention(layer, x, tokens_per_frame)?;
        y.add(x)
    }

    /// One GCM-hosting block: (alpha o GCM(y) + y) + x for y = gattn(fattn(x)).
    pub fn gcm_block(
        &self,
        layer: usize,
        x: &Matrix,
        tokens_per_frame: usize,
        state: &GcmLayerState,
    ) -> Result<(Matrix, GcmLayerState)> {
        let y = self.layer_attention(layer, x, tokens_per_frame)?;
        let block = TokenBlock::new(y)?;
        let (new_weights, gated) = gcm::gcm_step(state, &block)?;
        let out = gated.add(x)?;
        let mut new_state = state.clone();
        new_state.weights = new_weights;
        Ok((out, new_state))
    }

    /// Full single-chunk forward. GCM states are threaded through their
    /// hosting layers (local update only); entries for layers not in
    /// `gcm_layers` are returned untouched.
    pub fn run_backbone(
        &self,
        images: &[Image],
        gcm_states: &BTreeMap<usize, GcmLayerState>,
    ) -> Result<(Matrix, BTreeMap<usize, GcmLayerState>)> {
        let per_frame = self.config.tokens_per_frame();
        let mut states = gcm_states.clone();
        let mut x = self.embed_chunk(images)?.tokens().clone();
        for layer in 1..=self.config.layers {
            if self.config.gcm_layers.contains(&layer) {
                let state = states.get(&layer).ok_or_else(|| {
                    CoreError::config(format!("no GCM state for layer {layer}"))
                })?;
                let (out, new_state) = self.gcm_block(layer, &x, per_frame, state)?;
                states.insert(layer, new_state);
                x = out;
            } else {
                x = self.alternating_block(layer, &x, per_frame)?;
            }
        }
        Ok((x, states))
    }

    /// Decode final tokens into a chunk prediction for frames
    /// `start..=start + frames - 1`.
    pub fn predict_heads(&self, tokens: &Matrix, frames: usize, start: usize) -> Result<ChunkPrediction> {
        heads::predict_heads(self, tokens, frames, start)
    }

    pub fn camera_head(&self, frame_tokens: &Matrix) -> Result<[f64; CAMERA_DIM]> {
        heads::camera_head(self, frame_tokens)
    }

    pub fn depth_head(&self, frame_tokens: &Matrix) -> Result<(Grid, Grid)> {
        heads::depth_head(self, frame_tokens)
    }

    pub fn point_head(&self, frame_tokens: &Matrix) -> Result<(PointGrid, Grid)> {
        heads::point_head(self, frame_tokens)
    }

    /// All static weights in the shared snapshot container, GCM templates
    /// included.
    pub fn snapshot(&self) -> Result<Snapshot> {
        let c = &self.config;
        let mut blocks: Vec<(String, Vec<f64>)> = vec![
            ("embed".to_string(), self.embed.data().to_vec()),
            ("embed_bias".to_string(), self.embed_bias.clone()),
            ("camera_w".to_string(), self.camera_w.data().to_vec()),
            ("camera_b".to_string(), self.camera_b.clone()),
            ("depth_w".to_string(), self.depth_w.data().to_vec()),
            ("depth_b".to_string(), self.depth_b.clone()),
            ("point_w".to_string(), self.point_w.data().to_vec()),
            ("point_b".to_string(), self.point_b.clone()),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            for (name, m) in [
                ("frame.wq", &l.frame.wq),
                ("frame.wk", &l.frame.wk),
                ("frame.wv", &l.frame.wv),
                ("frame.wo", &l.frame.wo),
                ("global.wq", &l.global.wq),
                ("global.wk", &l.global.wk),
                ("global.wv", &l.global.wv),
                ("global.wo", &l.global.wo),
            ] {
                blocks.push((format!("layer{}.{name}", i + 1), m.data().to_vec()));
            }
        }
        for &l in &c.gcm_layers {
            let state = GcmLayerState::init(c.gcm_config(l))?;
            let sub = gcm::snapshot_gcm(&state.config, &state.weights, &state.proj);
            for (name, values) in sub.blocks {
                blocks.push((format!("gcm{l}.{name}"), values));
            }
        }
        Ok(Snapshot {
            seed: c.seed,
            dims: vec![
                c.layers as u64,
                c.d as u64,
                c.heads as u64,
                c.patch as u64,
                c.image_h as u64,
                c.image_w as u64,
            ],
            blocks,
        })
    }
}

pub(crate) use patchify::patchify;
