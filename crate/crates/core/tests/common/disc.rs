use imfkit::discriminator::DiscriminatorNet;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Test-side output and input gradient: the input gradient is the product of
/// layer Jacobians `w_L · diag(m) · W ⋯`, formed as full matrices.
pub fn oracle_output_and_gradient(net: &DiscriminatorNet, x: &DVector<f64>) -> (f64, DVector<f64>) {
    let slope = net.leaky_slope();
    let last = net.weights().len() - 1;
    let mut h = x.clone();
    let mut jac = DMatrix::<f64>::identity(x.len(), x.len());
    for i in 0..last {
        let z = &net.weights()[i] * &h + &net.biases()[i];
        let d = DMatrix::from_diagonal(&z.map(|v| if v > 0.0 { 1.0 } else { slope }));
        jac = &d * &net.weights()[i] * jac;
        h = z.map(|v| if v > 0.0 { v } else { slope * v });
    }
    let out = (&net.weights()[last] * &h)[0] + net.biases()[last][0];
    let grad = (&net.weights()[last] * jac).transpose();
    (out, DVector::from_column_slice(grad.as_slice()))
}

pub fn oracle_loss(net: &DiscriminatorNet, reference: &[DVector<f64>], policy: &[DVector<f64>], w_gp: f64) -> f64 {
    let mut r = 0.0;
    let mut pen = 0.0;
    for x in reference {
        let (d, g) = oracle_output_and_gradient(net, x);
        r += (d - 1.0).powi(2);
        pen += g.norm_squared();
    }
    let p: f64 = policy
        .iter()
        .map(|x| (oracle_output_and_gradient(net, x).0 + 1.0).powi(2))
        .sum();
    let nr = reference.len() as f64;
    r / nr + p / policy.len() as f64 + w_gp * pen / nr
}

pub fn oracle_fd(net: &DiscriminatorNet, reference: &[DVector<f64>], policy: &[DVector<f64>], w_gp: f64) -> Vec<f64> {
    let h = 1e-5;
    let base = net.params();
    let mut probe = net.clone();
    (0..base.len())
        .map(|k| {
            let mut p = base.clone();
            p[k] += h;
            probe.set_params(&p).unwrap();
            let plus = oracle_loss(&probe, reference, policy, w_gp);
            p[k] -= 2.0 * h;
            probe.set_params(&p).unwrap();
            let minus = oracle_loss(&probe, reference, policy, w_gp);
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

pub fn batch(dim: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    (0..count)
        .map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0)))
        .collect()
}
