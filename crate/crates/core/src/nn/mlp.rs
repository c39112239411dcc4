use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One affine map `x ↦ W x + b` with `W: [out × in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Layer<T> {
    pub fn new(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        if weight.rank() != 2 || bias.len() != weight.rows() {
            return Err(Error::shape(
                "layer",
                format!("weight {:?} with bias {:?}", weight.shape(), bias.shape()),
            ));
        }
        let bias = bias.reshape(vec![weight.rows()])?;
        Ok(Self { weight, bias })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// Multilayer perceptron with ELU after every layer except the last.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<Layer<T>>,
}

/// Tape handles for the parameters of an [`Mlp`], `(weight, bias)` per layer.
#[derive(Debug, Clone)]
pub struct MlpVars {
    pub layers: Vec<(Var, Var)>,
}

impl MlpVars {
    pub fn params(&self) -> impl Iterator<Item = Var> + '_ {
        self.layers.iter().flat_map(|&(w, b)| [w, b])
    }
}

/// Forward pass with the hidden pre-activations kept for Jacobian assembly.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub output: Var,
    /// Pre-activation of every hidden layer, in order.
    pub preactivations: Vec<Var>,
}

impl<T: Scalar> Mlp<T> {
    pub fn new(layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Invalid("an MLP needs at least one layer".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::shape(
                    "mlp",
                    format!(
                        "layer {k} outputs {} but layer {} takes {}",
                        pair[0].out_dim(),
                        k + 1,
                        pair[1].in_dim()
                    ),
                ));
            }
        }
        Ok(Self { layers })
    }

    /// Weights and biases drawn from `U(-1/√in, 1/√in)` per layer.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with(dims, &mut rng)
    }

    pub fn init_with<R: Rng>(dims: &[usize], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Invalid(format!("need at least two layer sizes, got {dims:?}")));
        }
        if dims.contains(&0) {
            return Err(Error::Invalid(format!("zero-width layer in {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let mut draw =
                    |n: usize| -> Vec<T> { (0..n).map(|_| T::lit(rng.random_range(-bound..bound))).collect() };
                let weight = Tensor::matrix(fan_out, fan_in, draw(fan_out * fan_in))?;
                let bias = Tensor::vector(draw(fan_out));
                Layer::new(weight, bias)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    /// Single affine layer, the linear encoder/decoder case.
    pub fn linear(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        Self::new(vec![Layer::new(weight, bias)?])
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    /// Layer widths from input to output.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].in_dim())
            .chain(self.layers.iter().map(Layer::out_dim))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias])
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Tensor<T>> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weight, &mut l.bias])
    }

    /// Puts the parameters on a tape, as leaves when `trainable`, else as constants.
    pub fn register(&self, tape: &mut Tape<T>, trainable: bool) -> Result<MlpVars> {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let put = |tape: &mut Tape<T>, t: &Tensor<T>| {
                    if trainable {
                        tape.leaf(t.clone())
                    } else {
                        tape.constant(t.clone())
                    }
                };
                Ok((put(tape, &l.weight)?, put(tape, &l.bias)?))
            })
            .collect::<Result<_>>()?;
        Ok(MlpVars { layers })
    }

    /// Detached forward pass on a `[batch × in]` matrix.
    pub fn apply(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut tape = Tape::new();
        let vars = self.register(&mut tape, false)?;
        let xv = tape.constant(x.clone())?;
        let out = forward(&mut tape, &vars, xv)?;
        Ok(tape.value(out).clone())
    }

    /// Multiplies the weights of layer `k` by `c`.
    pub fn scale_layer_weights(&mut self, k: usize, c: T) {
        let w = &mut self.layers[k].weight;
        *w = w.scaled(c);
    }

    /// Multiplies weights and bias of the output layer by `c`, i.e. composes the
    /// network with a uniform output scaling.
    pub fn scale_output(&mut self, c: T) {
        let last = self.layers.len() - 1;
        let layer = &mut self.layers[last];
        layer.weight = layer.weight.scaled(c);
        layer.bias = layer.bias.scaled(c);
    }
}

/// Records the forward pass: affine + ELU per hidden layer, affine output.
pub fn forward<T: Scalar>(tape: &mut Tape<T>, vars: &MlpVars, x: Var) -> Result<Var> {
    Ok(forward_trace(tape, vars, x)?.output)
}

pub fn forward_trace<T: Scalar>(tape: &mut Tape<T>, vars: &MlpVars, x: Var) -> Result<ForwardTrace> {
    let expected = tape.value(vars.layers[0].0).cols();
    match tape.shape(x) {
        [_, c] if *c == expected => {}
        s => {
            return Err(Error::shape(
                "forward",
                format!("input {s:?} for first layer taking {expected}"),
            ));
        }
    }
    let last = vars.layers.len() - 1;
    let mut h = x;
    let mut preactivations = Vec::with_capacity(last);
    for (k, &(w, b)) in vars.layers.iter().enumerate() {
        let lin = tape.matmul_t(h, w)?;
        let a = tape.add_bias(lin, b)?;
        if k == last {
            return Ok(ForwardTrace {
                output: a,
                preactivations,
            });
        }
        preactivations.push(a);
        h = tape.elu(a)?;
    }
    unreachable!("loop returns at the last layer")
}

/// Mean squared error over all entries.
pub fn reconstruction_loss<T: Scalar>(tape: &mut Tape<T>, x: Var, x_hat: Var) -> Result<Var> {
    let diff = tape.sub(x, x_hat)?;
    let sq = tape.square(diff)?;
    tape.mean(sq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_respects_bound_and_seed() {
        let a = Mlp::<f64>::init(&[3, 2], 7).unwrap();
        let bound = 1.0 / 3f64.sqrt();
        assert!(a.params().flat_map(|t| t.data()).all(|w| w.abs() < bound));
        assert_eq!(a, Mlp::init(&[3, 2], 7).unwrap());
        assert_ne!(a, Mlp::init(&[3, 2], 8).unwrap());
    }

    #[test]
    fn default_architecture_has_five_layers() {
        let enc = Mlp::<f64>::init(&[784, 100, 100, 100, 100, 2], 0).unwrap();
        assert_eq!(enc.layers().len(), 5);
        assert_eq!(enc.dims(), vec![784, 100, 100, 100, 100, 2]);
        assert_eq!(enc.num_params(), 784 * 100 + 100 + 3 * (100 * 100 + 100) + 100 * 2 + 2);
    }

    #[test]
    fn init_rejects_bad_dims() {
        assert!(Mlp::<f64>::init(&[3], 0).is_err());
        assert!(Mlp::<f64>::init(&[3, 0, 2], 0).is_err());
    }

    #[test]
    fn zero_network_outputs_zero() {
        let layers = vec![
            Layer::new(Tensor::zeros(vec![4, 3]), Tensor::zeros(vec![4])).unwrap(),
            Layer::new(Tensor::zeros(vec![2, 4]), Tensor::zeros(vec![2])).unwrap(),
        ];
        let net = Mlp::new(layers).unwrap();
        let x = Tensor::matrix(2, 3, vec![1.0, -2.0, 3.0, 0.5, 0.1, -9.0]).unwrap();
        assert!(net.apply(&x).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_layer_is_affine() {
        let w = Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, -1.0, 0.5, 0.0]).unwrap();
        let b = Tensor::vector(vec![0.25, -1.0]);
        let net = Mlp::linear(w.clone(), b).unwrap();
        let x = Tensor::matrix(1, 3, vec![1.0, 1.0, 2.0]).unwrap();
        let y = net.apply(&x).unwrap();
        assert_eq!(y.data(), &[1.0 + 2.0 + 6.0 + 0.25, -1.0 + 0.5 - 1.0]);
    }

    #[test]
    fn two_two_two_network_by_hand() {
        // W1 = [[1, -1], [2, 0.5]], b1 = [0, -3]; W2 = [[1, 1], [0, -2]], b2 = [0.5, 0]
        let l1 = Layer::new(
            Tensor::matrix(2, 2, vec![1.0, -1.0, 2.0, 0.5]).unwrap(),
            Tensor::vector(vec![0.0, -3.0]),
        )
        .unwrap();
        let l2 = Layer::new(
            Tensor::matrix(2, 2, vec![1.0, 1.0, 0.0, -2.0]).unwrap(),
            Tensor::vector(vec![0.5, 0.0]),
        )
        .unwrap();
        let net = Mlp::new(vec![l1, l2]).unwrap();
        let x = Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap();
        // a1 = [1 - 2, 2 + 1 - 3] = [-1, 0]; h1 = [e^-1 - 1, 0]
        let h0 = (-1f64).exp_m1();
        let expected = [h0 + 0.0 + 0.5, -2.0 * 0.0];
        let y = net.apply(&x).unwrap();
        assert_eq!(y.data(), &expected);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = Mlp::<f64>::init(&[3, 2], 0).unwrap();
        let x = Tensor::matrix(1, 2, vec![1.0, 2.0]).unwrap();
        assert!(matches!(net.apply(&x), Err(Error::Shape { .. })));
    }

    #[test]
    fn mse_cases() {
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(Tensor::vector(vec![0.0, 0.0])).unwrap();
        let y = tape.constant(Tensor::vector(vec![1.0, 1.0])).unwrap();
        let l = reconstruction_loss(&mut tape, x, y).unwrap();
        assert_eq!(tape.value(l).item(), 1.0);
        let l0 = reconstruction_loss(&mut tape, x, x).unwrap();
        assert_eq!(tape.value(l0).item(), 0.0);
        let bad = tape.constant(Tensor::vector(vec![1.0])).unwrap();
        assert!(reconstruction_loss(&mut tape, x, bad).is_err());
    }
}
