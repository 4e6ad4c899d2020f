//! Sequential fully-connected networks with a hand-written reverse pass.
//!
//! Each [`Dense`] layer computes `y = act(x Wᵀ + b)` on a batch `x` of shape
//! `batch × in_dim`, with `W` stored row-major as `out_dim × in_dim`. A
//! [`GradientTape`] records what the reverse pass needs; [`Mlp::backward`]
//! refuses to run on a tape that has not been primed by a forward pass over
//! the same network.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{dot, Matrix};
use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    ReLU,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::ReLU => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative at the pre-activation `z`. ReLU uses 0 at exactly 0.
    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Config(format!(
                "layer dims must be >= 1, got {in_dim} -> {out_dim}"
            )));
        }
        Ok(Self {
            in_dim,
            out_dim,
            activation,
        })
    }
}

/// One affine layer followed by an element-wise activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    spec: LayerSpec,
    weights: Matrix,
    bias: Vec<f64>,
}

impl Dense {
    /// Builds a layer from explicit parameters. `weights` is `out_dim × in_dim`.
    pub fn from_parts(spec: LayerSpec, weights: Matrix, bias: Vec<f64>) -> Result<Self> {
        if weights.shape() != (spec.out_dim, spec.in_dim) {
            return Err(shape_err(
                "Dense weights",
                format!("{}x{}", spec.out_dim, spec.in_dim),
                format!("{}x{}", weights.rows(), weights.cols()),
            ));
        }
        if bias.len() != spec.out_dim {
            return Err(shape_err("Dense bias", spec.out_dim, bias.len()));
        }
        Ok(Self { spec, weights, bias })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (in + out))`, zero bias.
    pub fn init<R: Rng + ?Sized>(spec: LayerSpec, rng: &mut R) -> Self {
        let limit = (6.0 / (spec.in_dim + spec.out_dim) as f64).sqrt();
        let data = (0..spec.in_dim * spec.out_dim)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Self {
            spec,
            weights: Matrix::from_vec(spec.out_dim, spec.in_dim, data).expect("sized above"),
            bias: vec![0.0; spec.out_dim],
        }
    }

    pub fn spec(&self) -> LayerSpec {
        self.spec
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Pre-activations `x Wᵀ + b`.
    fn affine(&self, x: &Matrix) -> Matrix {
        let mut z = Matrix::zeros(x.rows(), self.spec.out_dim);
        for (r, xr) in x.iter_rows().enumerate() {
            let zr = z.row_mut(r);
            for (o, zo) in zr.iter_mut().enumerate() {
                *zo = dot(xr, self.weights.row(o)) + self.bias[o];
            }
        }
        z
    }
}

/// Gradients of one [`Dense`] layer, shaped like its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Parameter gradients for a whole [`Mlp`], aligned 1:1 with its layers.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub layers: Vec<DenseGrad>,
}

impl MlpGradients {
    /// Flat views in the same order as [`Mlp::params_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|g| [g.weights.as_slice(), g.bias.as_slice()])
            .collect()
    }
}

/// Forward intermediates recorded for the reverse pass.
#[derive(Debug, Clone, Default)]
pub struct GradientTape {
    inputs: Vec<Matrix>,
    pre_activations: Vec<Matrix>,
    primed: bool,
}

impl GradientTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_primed(&self) -> bool {
        self.primed
    }

    pub fn clear(&mut self) {
        self.inputs.clear();
        self.pre_activations.clear();
        self.primed = false;
    }
}

/// Output of [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct Backward {
    pub params: MlpGradients,
    /// Gradient with respect to the network input.
    pub input: Matrix,
}

/// A sequential stack of [`Dense`] layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Dense>,
}

impl Mlp {
    /// Checks that consecutive layers chain (`out_dim` feeds the next `in_dim`).
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("an MLP needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].spec.out_dim != pair[1].spec.in_dim {
                return Err(shape_err(
                    "Mlp layer chain",
                    pair[0].spec.out_dim,
                    pair[1].spec.in_dim,
                ));
            }
        }
        Ok(Self { layers })
    }

    pub fn init<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        Self::from_layers(specs.iter().map(|&s| Dense::init(s, rng)).collect())
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].spec.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].spec.out_dim
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    /// Mutable flat parameter views: weights then bias, layer by layer.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    /// Runs the network on a batch. When a tape is given it is overwritten
    /// with the intermediates needed by [`Mlp::backward`].
    pub fn forward(&self, input: &Matrix, mut tape: Option<&mut GradientTape>) -> Result<Matrix> {
        if input.cols() != self.in_dim() {
            return Err(shape_err("mlp_forward input columns", self.in_dim(), input.cols()));
        }
        if let Some(t) = tape.as_deref_mut() {
            t.clear();
        }
        let mut x = input.clone();
        for layer in &self.layers {
            let z = layer.affine(&x);
            let act = layer.spec.activation;
            let mut y = z.clone();
            y.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
            if let Some(t) = tape.as_deref_mut() {
                t.inputs.push(x);
                t.pre_activations.push(z);
            }
            x = y;
        }
        if let Some(t) = tape {
            t.primed = true;
        }
        Ok(x)
    }

    /// Reverse pass through the recorded forward.
    pub fn backward(&self, tape: &GradientTape, output_gradient: &Matrix) -> Result<Backward> {
        if !tape.primed {
            return Err(Error::State("backward called before a recorded forward pass".into()));
        }
        if tape.inputs.len() != self.layers.len() {
            return Err(shape_err("tape layer count", self.layers.len(), tape.inputs.len()));
        }
        let batch = tape.inputs[0].rows();
        if output_gradient.shape() != (batch, self.out_dim()) {
            return Err(shape_err(
                "mlp_backward output gradient",
                format!("{batch}x{}", self.out_dim()),
                format!("{}x{}", output_gradient.rows(), output_gradient.cols()),
            ));
        }

        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = output_gradient.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let x = &tape.inputs[l];
            let z = &tape.pre_activations[l];
            if x.cols() != layer.spec.in_dim || z.cols() != layer.spec.out_dim {
                return Err(shape_err(
                    "tape intermediates",
                    format!("{}->{}", layer.spec.in_dim, layer.spec.out_dim),
                    format!("{}->{}", x.cols(), z.cols()),
                ));
            }
            // dL/dz = dL/dy ⊙ act'(z)
            let act = layer.spec.activation;
            for (g, &zv) in upstream.as_mut_slice().iter_mut().zip(z.as_slice()) {
                *g *= act.derivative(zv);
            }
            let mut dw = Matrix::zeros(layer.spec.out_dim, layer.spec.in_dim);
            let mut db = vec![0.0; layer.spec.out_dim];
            let mut dx = Matrix::zeros(x.rows(), layer.spec.in_dim);
            for r in 0..x.rows() {
                let xr = x.row(r);
                let gr = upstream.row(r);
                let dxr = dx.row_mut(r);
                for (o, &g) in gr.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    db[o] += g;
                    let wr = layer.weights.row(o);
                    for ((dwv, &xv), (dxv, &wv)) in dw
                        .row_mut(o)
                        .iter_mut()
                        .zip(xr)
                        .zip(dxr.iter_mut().zip(wr))
                    {
                        *dwv += g * xv;
                        *dxv += g * wv;
                    }
                }
            }
            grads.push(DenseGrad { weights: dw, bias: db });
            upstream = dx;
        }
        grads.reverse();
        Ok(Backward {
            params: MlpGradients { layers: grads },
            input: upstream,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn layer(w: &[&[f64]], b: &[f64], act: Activation) -> Dense {
        let weights = Matrix::from_rows(w).unwrap();
        let spec = LayerSpec::new(weights.cols(), weights.rows(), act).unwrap();
        Dense::from_parts(spec, weights, b.to_vec()).unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let net = Mlp::from_layers(vec![layer(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.0, 0.0], Activation::Identity)])
            .unwrap();
        let out = net.forward(&Matrix::from_rows(&[[1.0, 2.0]]).unwrap(), None).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 2.0]);
    }

    #[test]
    fn zero_weights_relu_gives_zero() {
        let spec = LayerSpec::new(3, 4, Activation::ReLU).unwrap();
        let net = Mlp::from_layers(vec![Dense::from_parts(spec, Matrix::zeros(4, 3), vec![0.0; 4]).unwrap()])
            .unwrap();
        let out = net.forward(&Matrix::from_rows(&[[5.0, -2.0, 7.0]]).unwrap(), None).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hand_computed_two_layer_net() {
        // hidden = ReLU([1+1, 2-3]) = [2, 0]; out = 2 + 0 + 0
        let net = Mlp::from_layers(vec![
            layer(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, -3.0], Activation::ReLU),
            layer(&[&[1.0, 1.0]], &[0.0], Activation::Identity),
        ])
        .unwrap();
        let out = net.forward(&Matrix::from_rows(&[[1.0, 2.0]]).unwrap(), None).unwrap();
        assert_eq!(out.as_slice(), &[2.0]);
    }

    #[test]
    fn input_width_mismatch_names_both_dims() {
        let net = Mlp::from_layers(vec![layer(&[&[1.0, 0.0]], &[0.0], Activation::Identity)]).unwrap();
        let err = net.forward(&Matrix::zeros(1, 3), None).unwrap_err().to_string();
        assert!(err.contains('2') && err.contains('3'), "{err}");
    }

    #[test]
    fn linear_layer_weight_gradient_is_outer_product() {
        let net = Mlp::from_layers(vec![layer(
            &[&[0.3, -0.2, 0.5], &[1.0, 0.1, -0.7]],
            &[0.0, 0.0],
            Activation::Identity,
        )])
        .unwrap();
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let g = Matrix::from_rows(&[[0.5, -1.5]]).unwrap();
        let mut tape = GradientTape::new();
        net.forward(&x, Some(&mut tape)).unwrap();
        let back = net.backward(&tape, &g).unwrap();
        let dw = &back.params.layers[0].weights;
        for o in 0..2 {
            for i in 0..3 {
                assert_eq!(dw[(o, i)], g[(0, o)] * x[(0, i)]);
            }
        }
        assert_eq!(back.params.layers[0].bias, vec![0.5, -1.5]);
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let specs = [
            LayerSpec::new(4, 5, Activation::ReLU).unwrap(),
            LayerSpec::new(5, 2, Activation::Identity).unwrap(),
        ];
        let net = Mlp::init(&specs, &mut rng).unwrap();
        let x = Matrix::from_vec(3, 4, (0..12).map(|i| i as f64 * 0.1 - 0.5).collect()).unwrap();
        let mut tape = GradientTape::new();
        net.forward(&x, Some(&mut tape)).unwrap();
        let back = net.backward(&tape, &Matrix::zeros(3, 2)).unwrap();
        for s in back.params.slices() {
            assert!(s.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn backward_without_forward_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::init(&[LayerSpec::new(2, 2, Activation::ReLU).unwrap()], &mut rng).unwrap();
        let err = net.backward(&GradientTape::new(), &Matrix::zeros(1, 2)).unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }

    #[test]
    fn relu_subgradient_at_zero_is_zero() {
        // Pre-activation is exactly 0, so nothing flows back.
        let net = Mlp::from_layers(vec![layer(&[&[1.0]], &[-1.0], Activation::ReLU)]).unwrap();
        let mut tape = GradientTape::new();
        net.forward(&Matrix::from_rows(&[[1.0]]).unwrap(), Some(&mut tape)).unwrap();
        let back = net.backward(&tape, &Matrix::from_rows(&[[1.0]]).unwrap()).unwrap();
        assert_eq!(back.params.layers[0].weights[(0, 0)], 0.0);
        assert_eq!(back.input[(0, 0)], 0.0);
    }

    #[test]
    fn broken_layer_chain_is_rejected() {
        let a = layer(&[&[1.0, 0.0]], &[0.0], Activation::ReLU);
        let b = layer(&[&[1.0, 0.0]], &[0.0], Activation::ReLU);
        assert!(Mlp::from_layers(vec![a, b]).is_err());
    }
}
