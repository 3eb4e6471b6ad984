//! Feedforward classifier with softmax output and cross-entropy loss.
//!
//! Weights are stored row-major as `inputs x outputs`. Inputs to both
//! pronunciation models are mostly zeros, so the first layer skips zero
//! inputs in both passes.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Relu,
    Softmax,
}

impl Activation {
    fn code(self) -> u8 {
        match self {
            Activation::Sigmoid => 0,
            Activation::Relu => 1,
            Activation::Softmax => 2,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Activation::Sigmoid),
            1 => Ok(Activation::Relu),
            2 => Ok(Activation::Softmax),
            _ => Err(Error::Model(format!("unknown activation code {c}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// `weights[i * outputs + j]` connects input `i` to output `j`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.outputs + j]
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.biases);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// Smallest probability fed to the log in the loss.
const PROB_FLOOR: f64 = 1e-300;

fn cross_entropy(p: f64) -> f64 {
    if p.is_nan() {
        f64::NAN
    } else {
        -p.max(PROB_FLOOR).ln()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample {
    pub input: Vec<f64>,
    pub label: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub seed: u64,
}

/// Per-parameter gradients, shaped like the network's layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros(net: &Network) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    fn clear(&mut self) {
        self.weights.iter_mut().chain(self.biases.iter_mut()).for_each(|v| v.fill(0.0));
    }
}

impl Network {
    /// Glorot-uniform weights and zero biases drawn from a ChaCha8 stream.
    pub fn new(input_width: usize, hidden: &[usize], output_width: usize, activation: Activation, seed: u64) -> Result<Self> {
        if activation == Activation::Softmax {
            return Err(Error::Invalid("hidden activation cannot be softmax".into()));
        }
        let mut widths = vec![input_width];
        widths.extend_from_slice(hidden);
        widths.push(output_width);
        if widths.contains(&0) {
            return Err(Error::Invalid(format!("layer widths must be positive: {widths:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = widths.len() - 1;
        let layers = (0..n)
            .map(|k| {
                let (fan_in, fan_out) = (widths[k], widths[k + 1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights: (0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)).collect(),
                    biases: vec![0.0; fan_out],
                    activation: if k + 1 == n { Activation::Softmax } else { activation },
                }
            })
            .collect();
        Ok(Network { layers, seed })
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().unwrap().outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_width() {
            return Err(Error::DimensionMismatch { expected: self.input_width(), actual: input.len() });
        }
        Ok(())
    }

    /// Activations of every layer, input first.
    fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        for layer in &self.layers {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.affine(acts.last().unwrap(), &mut z);
            match layer.activation {
                Activation::Sigmoid => z.iter_mut().for_each(|v| *v = sigmoid(*v)),
                Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(0.0)),
                Activation::Softmax => softmax_in_place(&mut z),
            }
            acts.push(z);
        }
        acts
    }

    /// Class probabilities.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        Ok(self.activations(input).pop().unwrap())
    }

    /// Most probable class; ties go to the lowest index.
    pub fn predict(&self, input: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(input)?))
    }

    /// Cross-entropy of one example.
    pub fn loss(&self, ex: &TrainingExample) -> Result<f64> {
        self.check_example(ex)?;
        let p = self.forward(&ex.input)?;
        Ok(cross_entropy(p[ex.label]))
    }

    /// Cross-entropy evaluated in double-double precision, as a reference
    /// for finite differences.
    fn precise_loss(&self, ex: &TrainingExample) -> dd::Dd {
        use dd::Dd;
        let mut a: Vec<Dd> = ex.input.iter().map(|&x| Dd::from(x)).collect();
        for layer in &self.layers {
            let mut z: Vec<Dd> = layer.biases.iter().map(|&b| Dd::from(b)).collect();
            for (i, &ai) in a.iter().enumerate() {
                for (j, zj) in z.iter_mut().enumerate() {
                    *zj = *zj + ai * Dd::from(layer.weight(i, j));
                }
            }
            a = match layer.activation {
                Activation::Sigmoid => z.into_iter().map(|v| Dd::from(1.0) / (Dd::from(1.0) + (-v).exp())).collect(),
                Activation::Relu => z.into_iter().map(|v| v.max(Dd::from(0.0))).collect(),
                Activation::Softmax => {
                    let m = z.iter().copied().fold(z[0], Dd::max);
                    let sum = z.iter().fold(Dd::from(0.0), |acc, &v| acc + (v - m).exp());
                    return sum.ln() - (z[ex.label] - m);
                }
            };
        }
        unreachable!("the last layer is softmax")
    }

    /// Mean cross-entropy over a dataset.
    pub fn mean_loss(&self, data: &[TrainingExample]) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut total = 0.0;
        for ex in data {
            total += self.loss(ex)?;
        }
        Ok(total / data.len() as f64)
    }

    fn check_example(&self, ex: &TrainingExample) -> Result<()> {
        self.check_input(&ex.input)?;
        if ex.label >= self.output_width() {
            return Err(Error::IndexOutOfRange(format!("label {} with {} classes", ex.label, self.output_width())));
        }
        Ok(())
    }

    /// Add the loss gradient of one example into `grads`; returns the loss.
    pub fn accumulate_gradients(&self, ex: &TrainingExample, grads: &mut Gradients) -> Result<f64> {
        self.check_example(ex)?;
        let acts = self.activations(&ex.input);
        let out = acts.last().unwrap();
        let loss = cross_entropy(out[ex.label]);
        let mut delta: Vec<f64> = out.clone();
        delta[ex.label] -= 1.0;
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let x = &acts[k];
            let gw = &mut grads.weights[k];
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let row = &mut gw[i * layer.outputs..(i + 1) * layer.outputs];
                for (g, d) in row.iter_mut().zip(&delta) {
                    *g += xi * d;
                }
            }
            for (g, d) in grads.biases[k].iter_mut().zip(&delta) {
                *g += d;
            }
            if k == 0 {
                break;
            }
            let below = &self.layers[k - 1];
            let mut next = vec![0.0; layer.inputs];
            for (i, n) in next.iter_mut().enumerate() {
                let row = &layer.weights[i * layer.outputs..(i + 1) * layer.outputs];
                let s: f64 = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
                let a = x[i];
                *n = s * match below.activation {
                    Activation::Sigmoid => a * (1.0 - a),
                    Activation::Relu => {
                        if a > 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Activation::Softmax => unreachable!("softmax is output only"),
                };
            }
            delta = next;
        }
        Ok(loss)
    }

    /// Gradient of one example's loss.
    pub fn gradients(&self, ex: &TrainingExample) -> Result<Gradients> {
        let mut g = Gradients::zeros(self);
        self.accumulate_gradients(ex, &mut g)?;
        Ok(g)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.input_width() as u32).to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&(l.outputs as u32).to_le_bytes());
        }
        for l in &self.layers {
            out.push(l.activation.code());
        }
        for l in &self.layers {
            for v in l.weights.iter().chain(&l.biases) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::Model("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Model(format!("unsupported version {version}")));
        }
        let seed = read_u64(&mut r)?;
        let n = read_u32(&mut r)? as usize;
        if n == 0 || n > 64 {
            return Err(Error::Model(format!("implausible layer count {n}")));
        }
        let mut widths = vec![read_u32(&mut r)? as usize];
        for _ in 0..n {
            widths.push(read_u32(&mut r)? as usize);
        }
        let mut acts = vec![0u8; n];
        r.read_exact(&mut acts).map_err(truncated)?;
        let mut layers = Vec::with_capacity(n);
        for k in 0..n {
            let (inputs, outputs) = (widths[k], widths[k + 1]);
            let need = (inputs * outputs + outputs) * 8;
            if r.len() < need {
                return Err(truncated(()));
            }
            let mut read_vec = |len: usize| -> Vec<f64> {
                let (head, tail) = r.split_at(len * 8);
                r = tail;
                head.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect()
            };
            let weights = read_vec(inputs * outputs);
            let biases = read_vec(outputs);
            layers.push(Layer { inputs, outputs, weights, biases, activation: Activation::from_code(acts[k])? });
        }
        if !r.is_empty() {
            return Err(Error::Model(format!("{} trailing bytes", r.len())));
        }
        if layers.last().unwrap().activation != Activation::Softmax {
            return Err(Error::Model("output layer is not softmax".into()));
        }
        Ok(Network { layers, seed })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

const MAGIC: &[u8; 4] = b"LXNN";
const FORMAT_VERSION: u32 = 1;

fn truncated<T>(_: T) -> Error {
    Error::Model("truncated file".into())
}

fn read_u32(r: &mut &[u8]) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut &[u8]) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub learning_rate: f64,
    /// Learning rate at epoch `e` is `learning_rate / (1 + decay * e)`.
    pub decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub l2: f64,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learning_rate: 0.05,
            decay: 0.01,
            epochs: 40,
            batch_size: 32,
            hidden: vec![128],
            activation: Activation::Sigmoid,
            l2: 0.0,
            seed: 1997,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(self.decay.is_finite() && self.decay >= 0.0) {
            return bad("decay must be finite and non-negative");
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return bad("l2 must be finite and non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive");
        }
        if self.activation == Activation::Softmax {
            return bad("hidden activation cannot be softmax");
        }
        Ok(())
    }
}

/// Mini-batch gradient descent on mean cross-entropy.
///
/// The returned curve starts with the loss before training followed by the
/// mean batch loss of every epoch. Examples are reshuffled each epoch from a
/// stream seeded by `hyper.seed`.
pub fn train_epochs(mut net: Network, data: &[TrainingExample], hyper: &Hyperparams) -> Result<(Network, Vec<f64>)> {
    hyper.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for ex in data {
        net.check_example(ex)?;
    }
    let mut curve = vec![net.mean_loss(data)?];
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grads = Gradients::zeros(&net);
    for epoch in 0..hyper.epochs {
        let lr = hyper.learning_rate / (1.0 + hyper.decay * epoch as f64);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(hyper.batch_size).enumerate() {
            grads.clear();
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += net.accumulate_gradients(&data[i], &mut grads)?;
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b, learning_rate: lr });
            }
            epoch_loss += batch_loss;
            let scale = lr / batch.len() as f64;
            for (k, layer) in net.layers.iter_mut().enumerate() {
                for (w, g) in layer.weights.iter_mut().zip(&grads.weights[k]) {
                    *w -= scale * g + lr * hyper.l2 * *w;
                }
                for (bias, g) in layer.biases.iter_mut().zip(&grads.biases[k]) {
                    *bias -= scale * g;
                }
            }
        }
        let mean = epoch_loss / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: 0, learning_rate: lr });
        }
        curve.push(mean);
    }
    Ok((net, curve))
}

/// Double-double arithmetic for the finite-difference reference loss.
mod dd {
    use std::ops::{Add, Div, Mul, Neg, Sub};

    #[derive(Clone, Copy, Debug)]
    pub struct Dd {
        pub hi: f64,
        pub lo: f64,
    }

    const LN2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let v = s - a;
        (s, (a - (s - v)) + (b - v))
    }

    fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        (s, b - (s - a))
    }

    impl From<f64> for Dd {
        fn from(x: f64) -> Self {
            Dd { hi: x, lo: 0.0 }
        }
    }

    impl Add for Dd {
        type Output = Dd;
        fn add(self, o: Dd) -> Dd {
            let (s, e) = two_sum(self.hi, o.hi);
            let (t, f) = two_sum(self.lo, o.lo);
            let (s, e) = quick_two_sum(s, e + t);
            let (hi, lo) = quick_two_sum(s, e + f);
            Dd { hi, lo }
        }
    }

    impl Neg for Dd {
        type Output = Dd;
        fn neg(self) -> Dd {
            Dd { hi: -self.hi, lo: -self.lo }
        }
    }

    impl Sub for Dd {
        type Output = Dd;
        fn sub(self, o: Dd) -> Dd {
            self + -o
        }
    }

    impl Mul for Dd {
        type Output = Dd;
        fn mul(self, o: Dd) -> Dd {
            let p = self.hi * o.hi;
            let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
            let (hi, lo) = quick_two_sum(p, e);
            Dd { hi, lo }
        }
    }

    impl Div for Dd {
        type Output = Dd;
        fn div(self, o: Dd) -> Dd {
            let q1 = self.hi / o.hi;
            let r = self - o * Dd::from(q1);
            let q2 = r.hi / o.hi;
            let r = r - o * Dd::from(q2);
            let q3 = r.hi / o.hi;
            let (hi, lo) = quick_two_sum(q1, q2);
            Dd { hi, lo } + Dd::from(q3)
        }
    }

    impl Dd {
        fn scale(self, k: i32) -> Dd {
            let f = 2f64.powi(k);
            Dd { hi: self.hi * f, lo: self.lo * f }
        }

        pub fn exp(self) -> Dd {
            if self.hi < -700.0 {
                return Dd::from(0.0);
            }
            let k = (self.hi / LN2.hi).round();
            let r = (self - LN2 * Dd::from(k)).scale(-10);
            let mut term = Dd::from(1.0);
            let mut sum = Dd::from(1.0);
            for n in 1..=12 {
                term = term * r / Dd::from(n as f64);
                sum = sum + term;
            }
            for _ in 0..10 {
                sum = sum * sum;
            }
            sum.scale(k as i32)
        }

        pub fn ln(self) -> Dd {
            let mut y = Dd::from(self.hi.ln());
            for _ in 0..2 {
                y = y + self * (-y).exp() - Dd::from(1.0);
            }
            y
        }

        pub fn max(self, o: Dd) -> Dd {
            if (self.hi, self.lo) >= (o.hi, o.lo) {
                self
            } else {
                o
            }
        }
    }
}

/// Denominator floor of the relative gradient error, so that parameters
/// whose true gradient is essentially zero do not dominate the maximum.
pub const GRADIENT_CHECK_FLOOR: f64 = 1e-6;

/// Largest relative error between `grad_fn` and central differences over
/// every parameter. The difference quotient is formed from double-double
/// losses, so cancellation does not swamp small gradients.
pub fn gradient_check_with<F>(net: &Network, ex: &TrainingExample, eps: f64, grad_fn: F) -> Result<f64>
where
    F: Fn(&Network, &TrainingExample) -> Result<Gradients>,
{
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::Invalid(format!("eps {eps} outside [1e-7, 1e-3]")));
    }
    net.check_example(ex)?;
    let analytic = grad_fn(net, ex)?;
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    let mut compare = |a: f64, n: f64| {
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(GRADIENT_CHECK_FLOOR);
        worst = worst.max(rel);
    };
    for k in 0..net.layers.len() {
        for p in 0..net.layers[k].weights.len() {
            let orig = probe.layers[k].weights[p];
            probe.layers[k].weights[p] = orig + eps;
            let up = probe.precise_loss(ex);
            probe.layers[k].weights[p] = orig - eps;
            let down = probe.precise_loss(ex);
            probe.layers[k].weights[p] = orig;
            compare(analytic.weights[k][p], difference_quotient(up, down, orig, eps));
        }
        for p in 0..net.layers[k].biases.len() {
            let orig = probe.layers[k].biases[p];
            probe.layers[k].biases[p] = orig + eps;
            let up = probe.precise_loss(ex);
            probe.layers[k].biases[p] = orig - eps;
            let down = probe.precise_loss(ex);
            probe.layers[k].biases[p] = orig;
            compare(analytic.biases[k][p], difference_quotient(up, down, orig, eps));
        }
    }
    Ok(worst)
}

fn difference_quotient(up: dd::Dd, down: dd::Dd, orig: f64, eps: f64) -> f64 {
    let step = dd::Dd::from(orig + eps) - dd::Dd::from(orig - eps);
    let q = (up - down) / step;
    q.hi + q.lo
}

/// [`gradient_check_with`] using the network's own backpropagation.
pub fn gradient_check(net: &Network, ex: &TrainingExample, eps: f64) -> Result<f64> {
    gradient_check_with(net, ex, eps, Network::gradients)
}
