//! Central finite-difference verification of the analytic gradients.
//!
//! Perturbations are applied to the stored `f32` parameters and the network
//! is evaluated in `f64`, dividing by the exact stored step. Differences at
//! `h` and `h/2` are combined so the estimate is fourth-order in `h`.

use ndarray::Array2;
use rand::Rng;

use super::mlp::{backward_batch_raw, forward_batch_raw};
use super::params::{Head, NetSpec, ParamSet};

/// Absolute floor of the relative-error denominator.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
}

fn objective(spec: &NetSpec, flat: &[f64], offsets: &[usize], x: &Array2<f64>, up: &Array2<f64>) -> f64 {
    let t = forward_batch_raw(spec, flat, offsets, x.view());
    (t.output() * up).sum()
}

/// Compares analytic gradients of `sum(upstream * f(x))` against
/// extrapolated central differences with step `h` on every parameter.
pub fn check(spec: &NetSpec, params: &ParamSet, x: &Array2<f32>, upstream: &Array2<f32>, h: f32) -> GradCheckReport {
    let offsets = params.offsets().to_vec();
    let x64 = x.mapv(f64::from);
    let up64 = upstream.mapv(f64::from);
    let flat: Vec<f64> = params.values().iter().map(|&v| f64::from(v)).collect();
    let trace = forward_batch_raw(spec, &flat, &offsets, x64.view());
    let analytic = backward_batch_raw(spec, &flat, &offsets, &trace, up64.view());

    let mut max_rel: f64 = 0.0;
    let mut probe = flat.clone();
    for i in 0..flat.len() {
        let base = params.values()[i];
        let mut central = |step: f32| {
            let plus = base + step;
            let minus = base - step;
            probe[i] = f64::from(plus);
            let fp = objective(spec, &probe, &offsets, &x64, &up64);
            probe[i] = f64::from(minus);
            let fm = objective(spec, &probe, &offsets, &x64, &up64);
            probe[i] = flat[i];
            (fp - fm) / (f64::from(plus) - f64::from(minus))
        };
        // Richardson extrapolation cancels the h² truncation term
        let (coarse, fine) = (central(h), central(h / 2.0));
        let numeric = (4.0 * fine - coarse) / 3.0;
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
        max_rel = max_rel.max(rel);
    }
    GradCheckReport {
        max_rel_error: max_rel,
        checked: flat.len(),
    }
}

/// Random network (1..=`max_layers` dense layers, widths 1..=`max_width`),
/// random input batch and upstream.
pub fn random_case<R: Rng + ?Sized>(rng: &mut R, max_layers: usize, max_width: usize) -> (NetSpec, ParamSet, Array2<f32>, Array2<f32>) {
    let layers = rng.random_range(1..=max_layers);
    let input = rng.random_range(1..=max_width);
    let output = rng.random_range(1..=max_width);
    let hidden: Vec<usize> = (1..layers).map(|_| rng.random_range(1..=max_width)).collect();
    let head = if rng.random_bool(0.5) { Head::Logits } else { Head::Values };
    let spec = NetSpec::new(input, &hidden, output, head);
    let mut params = ParamSet::init(&spec, rng);
    for b in 0..spec.layer_dims().len() {
        for v in params.tensor_mut(2 * b + 1) {
            *v = rng.random_range(-0.5..0.5);
        }
    }
    let batch = rng.random_range(1..=4);
    let x = Array2::from_shape_fn((batch, input), |_| rng.random_range(-1.5f32..1.5));
    let up = Array2::from_shape_fn((batch, output), |_| rng.random_range(-1.0f32..1.0));
    (spec, params, x, up)
}
