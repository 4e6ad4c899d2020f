//! Body ψ followed by a head: the projection head during pretraining, the
//! detection head during fine-tuning.

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::error::{shape_err, Error, Result};
use crate::numcore::{Activation, GradientTape, LayerSpec, Matrix, Mlp, MlpGradients};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub body: Mlp,
    pub head: Mlp,
}

/// Tapes for one recorded forward pass through body and head.
#[derive(Debug, Default)]
pub struct EncoderTape {
    body: GradientTape,
    head: GradientTape,
}

#[derive(Debug, Clone)]
pub struct EncoderGrads {
    pub body: MlpGradients,
    pub head: MlpGradients,
}

impl EncoderGrads {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut s = self.body.slices();
        s.extend(self.head.slices());
        s
    }
}

pub fn body_specs(input_dim: usize, model: &ModelConfig) -> Result<Vec<LayerSpec>> {
    let mut specs = Vec::with_capacity(model.body.len());
    let mut prev = input_dim;
    for &w in &model.body {
        specs.push(LayerSpec::new(prev, w, Activation::ReLU)?);
        prev = w;
    }
    Ok(specs)
}

fn head_spec(model: &ModelConfig, out_dim: usize) -> Result<LayerSpec> {
    let width = *model
        .body
        .last()
        .ok_or_else(|| Error::Config("model.body needs at least one layer".into()))?;
    LayerSpec::new(width, out_dim, Activation::Identity)
}

impl Encoder {
    /// Fresh body and projection head for pretraining.
    pub fn init_pretext(input_dim: usize, model: &ModelConfig, seed: u64) -> Result<Self> {
        let body = Mlp::init(&body_specs(input_dim, model)?, &mut rng::stream(seed, "init.body", 0))?;
        let head = Mlp::init(
            &[head_spec(model, model.proj_dim)?],
            &mut rng::stream(seed, "init.proj_head", 0),
        )?;
        Ok(Self { body, head })
    }

    /// Fresh body and detection head, used when no pretraining is wanted.
    pub fn init_detector(input_dim: usize, model: &ModelConfig, seed: u64) -> Result<Self> {
        let body = Mlp::init(&body_specs(input_dim, model)?, &mut rng::stream(seed, "init.body", 0))?;
        Ok(Self {
            body,
            head: fresh_mad_head(model, seed)?,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.body.in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.head.out_dim()
    }

    /// Body output ψ(x).
    pub fn embed_body(&self, x: &Matrix) -> Result<Matrix> {
        self.body.forward(x, None)
    }

    /// Full encoder output.
    pub fn embed(&self, x: &Matrix) -> Result<Matrix> {
        let h = self.body.forward(x, None)?;
        self.head.forward(&h, None)
    }

    pub fn forward_recorded(&self, x: &Matrix, tape: &mut EncoderTape) -> Result<Matrix> {
        let h = self.body.forward(x, Some(&mut tape.body))?;
        self.head.forward(&h, Some(&mut tape.head))
    }

    pub fn backward(&self, tape: &EncoderTape, output_gradient: &Matrix) -> Result<EncoderGrads> {
        let head = self.head.backward(&tape.head, output_gradient)?;
        let body = self.body.backward(&tape.body, &head.input)?;
        Ok(EncoderGrads {
            body: body.params,
            head: head.params,
        })
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut p = self.body.params_mut();
        p.extend(self.head.params_mut());
        p
    }
}

fn fresh_mad_head(model: &ModelConfig, seed: u64) -> Result<Mlp> {
    Mlp::init(&[head_spec(model, model.mad_dim)?], &mut rng::stream(seed, "init.mad_head", 0))
}

/// Copies the pretrained body into a detection encoder with a freshly
/// initialized head. The projection head is dropped.
pub fn transfer_weights(pretext: &Encoder, model: &ModelConfig, seed: u64) -> Result<Encoder> {
    let expected = body_specs(pretext.input_dim(), model)?;
    if pretext.body.specs() != expected {
        return Err(shape_err(
            "transfer_weights body",
            format!("{expected:?}"),
            format!("{:?}", pretext.body.specs()),
        ));
    }
    Ok(Encoder {
        body: pretext.body.clone(),
        head: fresh_mad_head(model, seed)?,
    })
}
