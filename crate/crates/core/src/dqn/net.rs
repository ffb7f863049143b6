use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DqnError;
use crate::env::Action;

pub const N_ACTIONS: usize = Action::ALL.len();

/// Fully connected layer, weights stored row-major as `out × in`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, w: vec![0.0; inputs * outputs], b: vec![0.0; outputs] }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.w[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.b[o] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>());
        }
    }
}

/// Rectifier MLP with a linear output head of one value per action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QNet {
    pub layers: Vec<Layer>,
}

impl QNet {
    /// Layer sizes `input → hidden… → 5`, uniform init in `±1/sqrt(fan_in)`.
    pub fn new(input: usize, hidden: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self::zeros(input, hidden);
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            for w in layer.w.iter_mut().chain(layer.b.iter_mut()) {
                *w = rng.gen_range(-bound..bound);
            }
        }
        net
    }

    pub fn zeros(input: usize, hidden: &[usize]) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(N_ACTIONS);
        Self { layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect() }
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.outputs).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(&l.b).copied()).collect()
    }

    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = it.next().unwrap();
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.w.iter().chain(&l.b).all(|v| v.is_finite()))
    }

    fn check(&self, x: &[f64]) -> Result<(), DqnError> {
        if x.len() != self.input_len() {
            return Err(DqnError::Length { got: x.len(), want: self.input_len() });
        }
        Ok(())
    }

    /// Activations of every layer (the input first, the raw output last).
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.forward(acts.last().unwrap(), &mut out);
            if i < last {
                for v in &mut out {
                    *v = v.max(0.0);
                }
            }
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Result<[f64; N_ACTIONS], DqnError> {
        self.check(x)?;
        let out = self.activations(x).pop().unwrap();
        Ok(out.try_into().expect("output layer has one unit per action"))
    }

    /// Accumulates into `grads` the gradient of `sum_a dq[a] * Q(x)[a]`.
    fn backward(&self, x: &[f64], dq: &[f64; N_ACTIONS], grads: &mut QNet) {
        let acts = self.activations(x);
        let mut delta = dq.to_vec();
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input = &acts[li];
            let g = &mut grads.layers[li];
            let mut prev = vec![0.0; layer.inputs];
            for o in 0..layer.outputs {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                g.b[o] += d;
                let row = o * layer.inputs;
                for i in 0..layer.inputs {
                    g.w[row + i] += d * input[i];
                    prev[i] += layer.w[row + i] * d;
                }
            }
            if li > 0 {
                // Rectifier derivative, taken as 0 at the kink.
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
    }
}

/// Lowest-code action among the maximal values.
pub fn greedy(q: &[f64; N_ACTIONS]) -> Action {
    let mut best = 0;
    for a in 1..N_ACTIONS {
        if q[a] > q[best] {
            best = a;
        }
    }
    Action::ALL[best]
}

pub fn huber(x: f64, delta: f64) -> f64 {
    let a = x.abs();
    if a <= delta {
        0.5 * x * x
    } else {
        delta * (a - 0.5 * delta)
    }
}

fn huber_grad(x: f64, delta: f64) -> f64 {
    x.clamp(-delta, delta)
}

/// A supervised regression batch: Q(x_i)[a_i] should match `targets[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LossBatch {
    pub inputs: Vec<Vec<f64>>,
    pub actions: Vec<Action>,
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LossBatch {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Mean importance-weighted Huber loss on the taken actions.
pub fn loss(net: &QNet, batch: &LossBatch, huber_delta: f64) -> Result<f64, DqnError> {
    let mut total = 0.0;
    for i in 0..batch.len() {
        let q = net.forward(&batch.inputs[i])?;
        total += batch.weights[i] * huber(q[batch.actions[i].code() as usize] - batch.targets[i], huber_delta);
    }
    Ok(total / batch.len() as f64)
}

/// Loss and its gradient with respect to every parameter.
pub fn loss_and_grad(
    net: &QNet,
    batch: &LossBatch,
    huber_delta: f64,
) -> Result<(f64, QNet), DqnError> {
    let mut grads = QNet::zeros(net.input_len(), &net.hidden_sizes());
    let n = batch.len() as f64;
    let mut total = 0.0;
    for i in 0..batch.len() {
        let q = net.forward(&batch.inputs[i])?;
        let a = batch.actions[i].code() as usize;
        let err = q[a] - batch.targets[i];
        total += batch.weights[i] * huber(err, huber_delta);
        let mut dq = [0.0; N_ACTIONS];
        dq[a] = batch.weights[i] * huber_grad(err, huber_delta) / n;
        net.backward(&batch.inputs[i], &dq, &mut grads);
    }
    Ok((total / n, grads))
}

/// Largest relative difference between the analytic gradient and central
/// finite differences with step 1e-4. Differences are taken relative to
/// `max(|analytic|, |numeric|, 1e-6)` so parameters with no influence (dead
/// rectifier units) do not divide round-off by zero.
pub fn grad_check(net: &QNet, batch: &LossBatch, huber_delta: f64) -> Result<f64, DqnError> {
    const H: f64 = 1e-4;
    let (_, grads) = loss_and_grad(net, batch, huber_delta)?;
    let analytic = grads.params();
    let base = net.params();
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let mut p = base.clone();
        p[i] = base[i] + H;
        probe.set_params(&p);
        let up = loss(&probe, batch, huber_delta)?;
        p[i] = base[i] - H;
        probe.set_params(&p);
        let down = loss(&probe, batch, huber_delta)?;
        let numeric = (up - down) / (2.0 * H);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Adaptive-moment optimizer state.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(param_count: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; param_count], v: vec![0.0; param_count], t: 0 }
    }

    pub fn step(&mut self, net: &mut QNet, grads: &QNet) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut k = 0;
        for (layer, g) in net.layers.iter_mut().zip(&grads.layers) {
            for (p, &g) in layer.w.iter_mut().chain(layer.b.iter_mut()).zip(g.w.iter().chain(&g.b)) {
                self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
                self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
                *p -= self.lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + self.eps);
                k += 1;
            }
        }
    }
}
