//! Fully-connected LeakyReLU discriminator over AMP state transitions, with
//! exact gradients of the least-squares adversarial loss including its
//! gradient-penalty term.
//!
//! The gradient penalty `‖∇D‖²` depends on the parameters through the
//! network's own backward pass, so its parameter gradient is obtained by
//! back-propagating through that backward pass as well. LeakyReLU has zero
//! second derivative away from its kink, which makes the activation masks
//! locally constant and the propagation exact almost everywhere.

use nalgebra::{DMatrix, DVector, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::forward_kinematics;
use crate::error::{Error, Result};
use crate::model::{RobotModel, RobotState};

/// Losses above this abort training.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Which gradient the penalty term measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    /// `‖∇_x D(x)‖²` on reference inputs.
    #[default]
    Input,
    /// `‖∇_θ D(x)‖²`, the gradient with respect to the parameters.
    Parameter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorNet {
    layer_sizes: Vec<usize>,
    /// `weights[i]` is `layer_sizes[i + 1] × layer_sizes[i]`.
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
    leaky_slope: f64,
}

/// Same shapes as the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct NetGradient {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl NetGradient {
    /// Flattened in the same order as [`DiscriminatorNet::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.transpose().iter());
            out.extend(b.iter());
        }
        out
    }
}

struct Trace {
    /// `hs[0]` is the input, `hs[i + 1]` the activation of hidden layer `i`.
    hs: Vec<DVector<f64>>,
    masks: Vec<DVector<f64>>,
    output: f64,
}

impl DiscriminatorNet {
    /// Uniform `±1/√fan_in` initialization.
    pub fn new(layer_sizes: &[usize], leaky_slope: f64, seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Precondition("need at least input and output sizes".into()));
        }
        if *layer_sizes.last().unwrap() != 1 {
            return Err(Error::Precondition("final layer must produce one scalar".into()));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::Precondition("layer sizes must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            weights.push(DMatrix::from_fn(fan_out, fan_in, |_, _| {
                rng.random_range(-bound..bound)
            }));
            biases.push(DVector::from_fn(fan_out, |_, _| rng.random_range(-bound..bound)));
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            leaky_slope,
        })
    }

    /// `[input, 1024, 512, 1]`.
    pub fn default_architecture(input_dim: usize, seed: u64) -> Result<Self> {
        Self::new(&[input_dim, 1024, 512, 1], 0.01, seed)
    }

    pub fn from_parts(
        weights: Vec<DMatrix<f64>>,
        biases: Vec<DVector<f64>>,
        leaky_slope: f64,
    ) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(Error::Precondition("weights and biases must pair up".into()));
        }
        let mut layer_sizes = vec![weights[0].ncols()];
        for (i, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.ncols() != *layer_sizes.last().unwrap() || b.len() != w.nrows() {
                return Err(Error::Dimension {
                    what: format!("layer {i}"),
                    expected: *layer_sizes.last().unwrap(),
                    actual: w.ncols(),
                });
            }
            layer_sizes.push(w.nrows());
        }
        if *layer_sizes.last().unwrap() != 1 {
            return Err(Error::Precondition("final layer must produce one scalar".into()));
        }
        Ok(Self {
            layer_sizes,
            weights,
            biases,
            leaky_slope,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn leaky_slope(&self) -> f64 {
        self.leaky_slope
    }

    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[DVector<f64>] {
        &self.biases
    }

    pub fn param_count(&self) -> usize {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.len() + b.len())
            .sum()
    }

    /// Per layer: weights row-major, then biases.
    pub fn params(&self) -> Vec<f64> {
        NetGradient {
            weights: self.weights.clone(),
            biases: self.biases.clone(),
        }
        .flatten()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::Dimension {
                what: "parameter vector".into(),
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        let mut it = params.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    w[(r, c)] = it.next().unwrap();
                }
            }
            for v in b.iter_mut() {
                *v = it.next().unwrap();
            }
        }
        Ok(())
    }

    fn zero_gradient(&self) -> NetGradient {
        NetGradient {
            weights: self
                .weights
                .iter()
                .map(|w| DMatrix::zeros(w.nrows(), w.ncols()))
                .collect(),
            biases: self.biases.iter().map(|b| DVector::zeros(b.len())).collect(),
        }
    }

    fn check_input(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                what: "discriminator input".into(),
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn trace(&self, x: &DVector<f64>) -> Trace {
        let last = self.weights.len() - 1;
        let mut hs = Vec::with_capacity(last + 1);
        let mut masks = Vec::with_capacity(last);
        hs.push(x.clone());
        for i in 0..last {
            let z = &self.weights[i] * &hs[i] + &self.biases[i];
            let slope = self.leaky_slope;
            masks.push(z.map(|v| if v > 0.0 { 1.0 } else { slope }));
            hs.push(z.map(|v| if v > 0.0 { v } else { slope * v }));
        }
        let output = (&self.weights[last] * &hs[last])[0] + self.biases[last][0];
        Trace { hs, masks, output }
    }

    /// Backward pass of `D` with respect to its input.
    ///
    /// Returns `deltas` (`∂D/∂h` per activation, `deltas[0]` is the input
    /// gradient) and `es` (`∂D/∂z` per hidden pre-activation).
    fn backward(&self, tr: &Trace) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
        let last = self.weights.len() - 1;
        let mut deltas = vec![DVector::zeros(0); last + 1];
        let mut es = vec![DVector::zeros(0); last];
        deltas[last] = self.weights[last].row(0).transpose();
        for i in (0..last).rev() {
            es[i] = tr.masks[i].component_mul(&deltas[i + 1]);
            deltas[i] = self.weights[i].transpose() * &es[i];
        }
        (deltas, es)
    }

    pub fn forward(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.trace(x).output)
    }

    /// `∇_x D(x)`.
    pub fn input_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_input(x)?;
        let tr = self.trace(x);
        Ok(self.backward(&tr).0.swap_remove(0))
    }

    fn penalty_value(&self, tr: &Trace, deltas: &[DVector<f64>], es: &[DVector<f64>], kind: PenaltyKind) -> f64 {
        match kind {
            PenaltyKind::Input => deltas[0].norm_squared(),
            PenaltyKind::Parameter => {
                let last = self.weights.len() - 1;
                let mut q = tr.hs[last].norm_squared() + 1.0;
                for i in 0..last {
                    q += es[i].norm_squared() * (tr.hs[i].norm_squared() + 1.0);
                }
                q
            }
        }
    }

    /// Accumulates `d_coef(D)·∇_θ D + q_coef·∇_θ Q` into `grad` and returns `(D, Q)`.
    fn accumulate(
        &self,
        x: &DVector<f64>,
        d_coef: impl Fn(f64) -> f64,
        q_coef: f64,
        kind: PenaltyKind,
        grad: &mut NetGradient,
    ) -> (f64, f64) {
        let last = self.weights.len() - 1;
        let tr = self.trace(x);
        let d_bar = d_coef(tr.output);

        // Direct partials of Q with respect to forward activations.
        let mut h_bar: Vec<DVector<f64>> = tr.hs.iter().map(|h| DVector::zeros(h.len())).collect();
        let mut q = 0.0;

        if q_coef != 0.0 {
            let (deltas, es) = self.backward(&tr);
            q = self.penalty_value(&tr, &deltas, &es, kind);

            let mut e_direct: Vec<DVector<f64>> = es.iter().map(|e| DVector::zeros(e.len())).collect();
            let mut delta_bar = match kind {
                PenaltyKind::Input => &deltas[0] * (2.0 * q_coef),
                PenaltyKind::Parameter => DVector::zeros(deltas[0].len()),
            };
            if kind == PenaltyKind::Parameter {
                h_bar[last] += &tr.hs[last] * (2.0 * q_coef);
                for i in 0..last {
                    let hn = tr.hs[i].norm_squared();
                    e_direct[i] = &es[i] * (2.0 * q_coef * (hn + 1.0));
                    if i > 0 {
                        h_bar[i] += &tr.hs[i] * (2.0 * q_coef * es[i].norm_squared());
                    }
                }
            }

            // Reverse of the backward pass, input side first.
            for i in 0..last {
                // deltas[i] = Wᵢᵀ eᵢ
                grad.weights[i].ger(1.0, &es[i], &delta_bar, 1.0);
                let e_bar = &e_direct[i] + &self.weights[i] * &delta_bar;
                // eᵢ = maskᵢ ⊙ deltas[i + 1]
                delta_bar = tr.masks[i].component_mul(&e_bar);
            }
            // deltas[last] = w_lastᵀ
            let mut row = grad.weights[last].row_mut(0);
            row += delta_bar.transpose();
        }

        // Ordinary reverse pass over the forward computation.
        grad.weights[last].ger(d_bar, &DVector::from_element(1, 1.0), &tr.hs[last], 1.0);
        grad.biases[last][0] += d_bar;
        h_bar[last] += self.weights[last].row(0).transpose() * d_bar;
        for i in (0..last).rev() {
            let z_bar = tr.masks[i].component_mul(&h_bar[i + 1]);
            grad.weights[i].ger(1.0, &z_bar, &tr.hs[i], 1.0);
            grad.biases[i] += &z_bar;
            if i > 0 {
                let back = self.weights[i].transpose() * &z_bar;
                h_bar[i] += back;
            }
        }
        (tr.output, q)
    }
}

/// Per-term values of the least-squares adversarial loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub total: f64,
    /// mean over reference of `(D − 1)²`
    pub reference: f64,
    /// mean over policy of `(D + 1)²`
    pub policy: f64,
    /// `w_gp ·` mean penalty over reference
    pub penalty: f64,
}

fn check_batches(net: &DiscriminatorNet, reference: &[DVector<f64>], policy: &[DVector<f64>]) -> Result<()> {
    if reference.is_empty() {
        return Err(Error::EmptyBatch("reference".into()));
    }
    if policy.is_empty() {
        return Err(Error::EmptyBatch("policy".into()));
    }
    for x in reference.iter().chain(policy) {
        net.check_input(x)?;
    }
    Ok(())
}

/// Loss with the penalty on input gradients.
pub fn lsgan_loss(
    net: &DiscriminatorNet,
    reference: &[DVector<f64>],
    policy: &[DVector<f64>],
    w_gp: f64,
) -> Result<LossBreakdown> {
    lsgan_loss_with(net, reference, policy, w_gp, PenaltyKind::Input)
}

pub fn lsgan_loss_with(
    net: &DiscriminatorNet,
    reference: &[DVector<f64>],
    policy: &[DVector<f64>],
    w_gp: f64,
    kind: PenaltyKind,
) -> Result<LossBreakdown> {
    check_batches(net, reference, policy)?;
    let (mut ref_term, mut pol_term, mut pen) = (0.0, 0.0, 0.0);
    for x in reference {
        let tr = net.trace(x);
        ref_term += (tr.output - 1.0).powi(2);
        if w_gp != 0.0 {
            let (deltas, es) = net.backward(&tr);
            pen += net.penalty_value(&tr, &deltas, &es, kind);
        }
    }
    for x in policy {
        pol_term += (net.trace(x).output + 1.0).powi(2);
    }
    let nr = reference.len() as f64;
    let reference_mean = ref_term / nr;
    let policy_mean = pol_term / policy.len() as f64;
    let penalty = w_gp * pen / nr;
    Ok(LossBreakdown {
        total: reference_mean + policy_mean + penalty,
        reference: reference_mean,
        policy: policy_mean,
        penalty,
    })
}

/// Exact gradient of [`lsgan_loss`] with respect to every parameter.
pub fn loss_gradient(
    net: &DiscriminatorNet,
    reference: &[DVector<f64>],
    policy: &[DVector<f64>],
    w_gp: f64,
) -> Result<NetGradient> {
    loss_gradient_with(net, reference, policy, w_gp, PenaltyKind::Input).map(|(g, _)| g)
}

/// Gradient together with the loss it differentiates.
pub fn loss_gradient_with(
    net: &DiscriminatorNet,
    reference: &[DVector<f64>],
    policy: &[DVector<f64>],
    w_gp: f64,
    kind: PenaltyKind,
) -> Result<(NetGradient, LossBreakdown)> {
    check_batches(net, reference, policy)?;
    let mut grad = net.zero_gradient();
    let nr = reference.len() as f64;
    let np = policy.len() as f64;
    let (mut ref_term, mut pol_term, mut pen) = (0.0, 0.0, 0.0);
    for x in reference {
        let (d, q) = net.accumulate(x, |d| 2.0 * (d - 1.0) / nr, w_gp / nr, kind, &mut grad);
        ref_term += (d - 1.0).powi(2);
        pen += q;
    }
    for x in policy {
        let (d, _) = net.accumulate(x, |d| 2.0 * (d + 1.0) / np, 0.0, kind, &mut grad);
        pol_term += (d + 1.0).powi(2);
    }
    let loss = LossBreakdown {
        total: ref_term / nr + pol_term / np + w_gp * pen / nr,
        reference: ref_term / nr,
        policy: pol_term / np,
        penalty: w_gp * pen / nr,
    };
    Ok((grad, loss))
}

fn default_hidden() -> Vec<usize> {
    vec![1024, 512]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub w_gp: f64,
    pub seed: u64,
    #[serde(default = "default_hidden")]
    pub hidden_sizes: Vec<usize>,
    pub leaky_slope: f64,
    pub penalty: PenaltyKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 64,
            w_gp: 10.0,
            seed: 0,
            hidden_sizes: default_hidden(),
            leaky_slope: 0.01,
            penalty: PenaltyKind::Input,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Domain("learning_rate must be positive".into()));
        }
        if !(self.w_gp >= 0.0) {
            return Err(Error::Domain("w_gp must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Domain("batch_size must be positive".into()));
        }
        Ok(())
    }

    pub fn layer_sizes(&self, input_dim: usize) -> Vec<usize> {
        let mut sizes = vec![input_dim];
        sizes.extend(&self.hidden_sizes);
        sizes.push(1);
        sizes
    }
}

/// Plain fixed-rate minibatch gradient descent.
///
/// Each epoch shuffles both datasets and walks the reference set in
/// `batch_size` chunks, pairing every chunk with an equally sized slice of
/// the (cyclically indexed) policy permutation. The recorded loss per epoch
/// is the mean minibatch loss.
pub fn train(
    net: &DiscriminatorNet,
    reference: &[DVector<f64>],
    policy: &[DVector<f64>],
    config: &TrainConfig,
) -> Result<(DiscriminatorNet, Vec<LossBreakdown>)> {
    config.validate()?;
    check_batches(net, reference, policy)?;
    let mut net = net.clone();
    let mut history = Vec::with_capacity(config.epochs);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ref_idx: Vec<usize> = (0..reference.len()).collect();
    let mut pol_idx: Vec<usize> = (0..policy.len()).collect();
    let mut params = net.params();

    for epoch in 0..config.epochs {
        ref_idx.shuffle(&mut rng);
        pol_idx.shuffle(&mut rng);
        let mut sums = [0.0; 4];
        let mut steps = 0usize;
        for (k, chunk) in ref_idx.chunks(config.batch_size).enumerate() {
            let ref_batch: Vec<DVector<f64>> = chunk.iter().map(|&i| reference[i].clone()).collect();
            let pol_batch: Vec<DVector<f64>> = (0..chunk.len())
                .map(|m| policy[pol_idx[(k * config.batch_size + m) % policy.len()]].clone())
                .collect();
            let (grad, loss) = loss_gradient_with(&net, &ref_batch, &pol_batch, config.w_gp, config.penalty)?;
            if !(loss.total <= DIVERGENCE_LIMIT) {
                return Err(Error::Diverged {
                    epoch,
                    loss: loss.total,
                });
            }
            for (p, g) in params.iter_mut().zip(grad.flatten()) {
                *p -= config.learning_rate * g;
            }
            net.set_params(&params)?;
            sums[0] += loss.total;
            sums[1] += loss.reference;
            sums[2] += loss.policy;
            sums[3] += loss.penalty;
            steps += 1;
        }
        let s = steps as f64;
        history.push(LossBreakdown {
            total: sums[0] / s,
            reference: sums[1] / s,
            policy: sums[2] / s,
            penalty: sums[3] / s,
        });
    }
    Ok((net, history))
}

/// Mean discriminator output over a dataset.
pub fn mean_output(net: &DiscriminatorNet, data: &[DVector<f64>]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyBatch("dataset".into()));
    }
    let mut sum = 0.0;
    for x in data {
        sum += net.forward(x)?;
    }
    Ok(sum / data.len() as f64)
}

/// One line of a transition dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmpStatePair {
    pub s: Vec<f64>,
    pub s_next: Vec<f64>,
}

impl AmpStatePair {
    /// `[s; s_next]`
    pub fn input(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.s.len() + self.s_next.len(),
            self.s.iter().chain(&self.s_next).copied(),
        )
    }
}

/// Per-state dimension: `2n + 3·(contact frames) + 7`.
pub fn amp_state_dim(model: &RobotModel) -> usize {
    2 * model.n() + 3 * model.contact_frames().len() + 7
}

/// `[θ; θ̇; foot positions (body frame); v_b (body); ω_b (body); z_b]`.
pub fn assemble_amp_state(model: &RobotModel, state: &RobotState) -> Vec<f64> {
    let kin = forward_kinematics(model, state);
    let base = kin.base_pose();
    let rot_inv = base.rotation.inverse();
    let mut out = Vec::with_capacity(amp_state_dim(model));
    out.extend(&state.joint_positions);
    out.extend(&state.joint_velocities);
    for p in &kin.contact_positions {
        let local = rot_inv * (p - base.translation.vector);
        out.extend(local.iter());
    }
    let v = rot_inv * Vector3::from(state.base_linear_velocity);
    let w = rot_inv * Vector3::from(state.base_angular_velocity);
    out.extend(v.iter());
    out.extend(w.iter());
    out.push(state.base_position[2]);
    out
}

/// Serialized network: layer sizes plus row-major weights per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub layer_sizes: Vec<usize>,
    pub leaky_slope: f64,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl From<&DiscriminatorNet> for Checkpoint {
    fn from(net: &DiscriminatorNet) -> Self {
        Self {
            layer_sizes: net.layer_sizes.clone(),
            leaky_slope: net.leaky_slope,
            weights: net.weights.iter().map(|w| w.transpose().iter().copied().collect()).collect(),
            biases: net.biases.iter().map(|b| b.iter().copied().collect()).collect(),
        }
    }
}

impl TryFrom<Checkpoint> for DiscriminatorNet {
    type Error = Error;

    fn try_from(ck: Checkpoint) -> Result<Self> {
        let layers = ck.layer_sizes.len().saturating_sub(1);
        if ck.weights.len() != layers || ck.biases.len() != layers {
            return Err(Error::Dimension {
                what: "checkpoint layers".into(),
                expected: layers,
                actual: ck.weights.len(),
            });
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (i, pair) in ck.layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            if ck.weights[i].len() != fan_in * fan_out || ck.biases[i].len() != fan_out {
                return Err(Error::Dimension {
                    what: format!("checkpoint layer {i}"),
                    expected: fan_in * fan_out,
                    actual: ck.weights[i].len(),
                });
            }
            weights.push(DMatrix::from_row_slice(fan_out, fan_in, &ck.weights[i]));
            biases.push(DVector::from_column_slice(&ck.biases[i]));
        }
        DiscriminatorNet::from_parts(weights, biases, ck.leaky_slope)
    }
}

/// Outcome of a finite-difference check of [`loss_gradient_with`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub seed: u64,
    pub nets: usize,
    pub step: f64,
    /// Per-net `‖g_exact − g_fd‖ / max(‖g_exact‖, ‖g_fd‖)`.
    pub rel_errors: Vec<f64>,
    pub max_rel_error: f64,
}

/// Central differences of the loss over every parameter.
pub fn finite_difference_gradient(
    net: &DiscriminatorNet,
    reference: &[DVector<f64>],
    policy: &[DVector<f64>],
    w_gp: f64,
    kind: PenaltyKind,
    step: f64,
) -> Result<Vec<f64>> {
    let base = net.params();
    let mut probe = net.clone();
    let mut out = Vec::with_capacity(base.len());
    let mut params = base.clone();
    for k in 0..base.len() {
        params[k] = base[k] + step;
        probe.set_params(&params)?;
        let plus = lsgan_loss_with(&probe, reference, policy, w_gp, kind)?.total;
        params[k] = base[k] - step;
        probe.set_params(&params)?;
        let minus = lsgan_loss_with(&probe, reference, policy, w_gp, kind)?.total;
        params[k] = base[k];
        out.push((plus - minus) / (2.0 * step));
    }
    Ok(out)
}

pub fn relative_gradient_error(exact: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = exact
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let na = exact.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nb = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-12)
}

/// Checks exact gradients on `nets` random small networks with a positive
/// penalty weight, so the second-order path is always exercised.
pub fn gradcheck_campaign(seed: u64, nets: usize, kind: PenaltyKind) -> Result<GradcheckReport> {
    const STEP: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rel_errors = Vec::with_capacity(nets);
    for _ in 0..nets {
        let input = rng.random_range(2..=6);
        let depth = rng.random_range(1..=2);
        let mut sizes = vec![input];
        for _ in 0..depth {
            sizes.push(rng.random_range(3..=8));
        }
        sizes.push(1);
        let slope = rng.random_range(0.01..0.3);
        let w_gp = rng.random_range(0.5..10.0);
        let net = DiscriminatorNet::new(&sizes, slope, rng.random())?;
        let batch = |rng: &mut ChaCha8Rng| -> Vec<DVector<f64>> {
            (0..4)
                .map(|_| DVector::from_fn(input, |_, _| rng.random_range(-2.0..2.0)))
                .collect()
        };
        let reference = batch(&mut rng);
        let policy = batch(&mut rng);
        let (exact, _) = loss_gradient_with(&net, &reference, &policy, w_gp, kind)?;
        let numeric = finite_difference_gradient(&net, &reference, &policy, w_gp, kind, STEP)?;
        rel_errors.push(relative_gradient_error(&exact.flatten(), &numeric));
    }
    let max_rel_error = rel_errors.iter().copied().fold(0.0, f64::max);
    Ok(GradcheckReport {
        seed,
        nets,
        step: STEP,
        rel_errors,
        max_rel_error,
    })
}
