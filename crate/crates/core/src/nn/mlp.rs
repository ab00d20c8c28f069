//! Dense networks with a smooth tanh-like activation, `x / sqrt(1 + x²)`,
//! and analytic backpropagation.
//!
//! The batched kernels are generic over the float type so the same code runs
//! in `f32` for training and in `f64` for finite-difference checking.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, LinalgScalar};
use num_traits::Float;

use super::params::{NetSpec, ParamSet};
use crate::error::{Error, Result};

pub trait Scalar: LinalgScalar + Float + std::fmt::Debug {}
impl<T: LinalgScalar + Float + std::fmt::Debug> Scalar for T {}

/// Layer outputs of one batched forward pass. `layers[0]` is the input,
/// the last entry is the network output.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    pub layers: Vec<Array2<T>>,
}

impl<T> Trace<T> {
    pub fn output(&self) -> &Array2<T> {
        self.layers.last().expect("trace holds at least the input")
    }
}

/// Odd, smooth, bounded in (-1, 1), slope 1 at the origin; far cheaper
/// than `tanh` and vectorises.
#[inline]
pub fn activation<T: Float>(x: T) -> T {
    x / (T::one() + x * x).sqrt()
}

/// Derivative expressed through the activation value `a`: `(1 - a²)^(3/2)`.
#[inline]
pub fn activation_slope<T: Float>(a: T) -> T {
    let s = T::one() - a * a;
    s * s.sqrt()
}

fn weights<'a, T>(spec: &NetSpec, flat: &'a [T], offsets: &[usize], layer: usize) -> (ArrayView2<'a, T>, ArrayView1<'a, T>) {
    let (fan_in, fan_out) = spec.layer_dims()[layer];
    let w = &flat[offsets[2 * layer]..offsets[2 * layer + 1]];
    let b = &flat[offsets[2 * layer + 1]..offsets[2 * layer + 2]];
    (
        ArrayView2::from_shape((fan_in, fan_out), w).expect("weight shape"),
        ArrayView1::from(b),
    )
}

pub fn forward_batch_raw<T: Scalar>(spec: &NetSpec, flat: &[T], offsets: &[usize], x: ArrayView2<T>) -> Trace<T> {
    let n_layers = spec.hidden.len() + 1;
    let mut layers = Vec::with_capacity(n_layers + 1);
    layers.push(x.to_owned());
    for l in 0..n_layers {
        let (w, b) = weights(spec, flat, offsets, l);
        let mut z = layers[l].dot(&w);
        z.zip_mut_with(&b, |v, &bias| *v = *v + bias);
        if l + 1 < n_layers {
            z.mapv_inplace(activation);
        }
        layers.push(z);
    }
    Trace { layers }
}

/// Parameter gradients (summed over the batch) for upstream `dy`.
pub fn backward_batch_raw<T: Scalar>(spec: &NetSpec, flat: &[T], offsets: &[usize], trace: &Trace<T>, dy: ArrayView2<T>) -> Vec<T> {
    let n_layers = spec.hidden.len() + 1;
    let mut grads = vec![T::zero(); flat.len()];
    let mut delta: Array2<T> = dy.to_owned();
    for l in (0..n_layers).rev() {
        let input = &trace.layers[l];
        let dw = input.t().dot(&delta);
        let db: Array1<T> = delta.sum_axis(Axis(0));
        grads[offsets[2 * l]..offsets[2 * l + 1]]
            .iter_mut()
            .zip(dw.iter())
            .for_each(|(g, &v)| *g = v);
        grads[offsets[2 * l + 1]..offsets[2 * l + 2]]
            .iter_mut()
            .zip(db.iter())
            .for_each(|(g, &v)| *g = v);
        if l > 0 {
            let (w, _) = weights(spec, flat, offsets, l);
            let mut prev = delta.dot(&w.t());
            // the trace holds activations, so the slope comes from them
            prev.zip_mut_with(input, |d, &a| *d = *d * activation_slope(a));
            delta = prev;
        }
    }
    grads
}

fn check_input(spec: &NetSpec, params: &ParamSet, cols: usize) -> Result<()> {
    params.ensure_spec(spec)?;
    if cols != spec.input {
        return Err(Error::Dimension {
            expected: spec.input,
            got: cols,
        });
    }
    Ok(())
}

/// Batched forward pass; rows of `x` are samples.
pub fn forward_batch(spec: &NetSpec, params: &ParamSet, x: ArrayView2<f32>) -> Result<Trace<f32>> {
    check_input(spec, params, x.ncols())?;
    Ok(forward_batch_raw(spec, params.values(), params.offsets(), x))
}

pub fn backward_batch(spec: &NetSpec, params: &ParamSet, trace: &Trace<f32>, dy: ArrayView2<f32>) -> Result<ParamSet> {
    let out = trace.output();
    if dy.dim() != out.dim() {
        return Err(Error::Dimension {
            expected: out.len(),
            got: dy.len(),
        });
    }
    let g = backward_batch_raw(spec, params.values(), params.offsets(), trace, dy);
    ParamSet::from_parts(params.shapes().to_vec(), g)
}

/// Single-sample forward pass.
pub fn forward(spec: &NetSpec, params: &ParamSet, input: &[f32]) -> Result<Vec<f32>> {
    let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
    let trace = forward_batch(spec, params, x)?;
    Ok(trace.output().row(0).to_vec())
}

/// Gradient of `upstream · forward(input)` with respect to every parameter.
pub fn grad(spec: &NetSpec, params: &ParamSet, input: &[f32], upstream: &[f32]) -> Result<ParamSet> {
    if upstream.len() != spec.output {
        return Err(Error::Dimension {
            expected: spec.output,
            got: upstream.len(),
        });
    }
    let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
    let trace = forward_batch(spec, params, x)?;
    let dy = ArrayView2::from_shape((1, upstream.len()), upstream).expect("row vector");
    backward_batch(spec, params, &trace, dy)
}

/// Numerically stable softmax of each row.
pub fn softmax_rows(logits: &Array2<f32>) -> Array2<f32> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f32::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Lower clamp applied to log-probabilities.
pub const LOG_PROB_FLOOR: f32 = -30.0;

/// Row-wise log-softmax, clamped below at [`LOG_PROB_FLOOR`].
pub fn log_softmax_rows(logits: &Array2<f32>) -> Array2<f32> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f32::NEG_INFINITY, |m, &v| m.max(v));
        let log_sum = row.fold(0.0f32, |s, &v| s + (v - max).exp()).ln();
        row.mapv_inplace(|v| ((v - max) - log_sum).max(LOG_PROB_FLOOR));
    }
    out
}

#[cfg(test)]
/// Straight-line re-evaluation with explicit loops, independent of ndarray.
pub(crate) fn reference_forward(spec: &NetSpec, p: &ParamSet, x: &[f32]) -> Vec<f64> {
    let mut a: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    let dims = spec.layer_dims();
    for (l, &(fan_in, fan_out)) in dims.iter().enumerate() {
        let w = p.tensor(2 * l);
        let b = p.tensor(2 * l + 1);
        let mut z = vec![0.0f64; fan_out];
        for j in 0..fan_out {
            let mut s = b[j] as f64;
            for i in 0..fan_in {
                s += a[i] * w[i * fan_out + j] as f64;
            }
            z[j] = if l + 1 < dims.len() { s / (1.0 + s * s).sqrt() } else { s };
        }
        a = z;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::Head;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_give_zero_output() {
        let spec = NetSpec::new(3, &[4, 4], 2, Head::Values);
        let p = ParamSet::zeros(&spec);
        assert_eq!(forward(&spec, &p, &[1.0, -2.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_linear_layer() {
        let spec = NetSpec::new(3, &[], 3, Head::Values);
        let mut p = ParamSet::zeros(&spec);
        for i in 0..3 {
            p.tensor_mut(0)[i * 3 + i] = 1.0;
        }
        let x = [0.25, -1.5, 3.0];
        assert_eq!(forward(&spec, &p, &x).unwrap(), x.to_vec());
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let spec = NetSpec::new(3, &[4], 2, Head::Values);
        let p = ParamSet::zeros(&spec);
        assert!(matches!(forward(&spec, &p, &[1.0]), Err(Error::Dimension { .. })));
        assert!(grad(&spec, &p, &[1.0, 2.0, 3.0], &[1.0]).is_err());
        let other = ParamSet::zeros(&NetSpec::new(3, &[5], 2, Head::Values));
        assert!(matches!(
            forward(&spec, &other, &[1.0, 2.0, 3.0]),
            Err(Error::LayoutMismatch { .. })
        ));
    }

    #[test]
    fn matches_reference_evaluator() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let spec = NetSpec::new(5, &[7, 6], 3, Head::Logits);
        let p = ParamSet::init(&spec, &mut rng);
        for _ in 0..20 {
            let x: Vec<f32> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let got = forward(&spec, &p, &x).unwrap();
            let want = reference_forward(&spec, &p, &x);
            for (g, w) in got.iter().zip(&want) {
                assert!((*g as f64 - w).abs() < 1e-5, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn zero_upstream_zero_grad() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = NetSpec::new(3, &[4], 2, Head::Values);
        let p = ParamSet::init(&spec, &mut rng);
        let g = grad(&spec, &p, &[0.3, 0.1, -0.7], &[0.0, 0.0]).unwrap();
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_layer_weight_grad_is_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = NetSpec::new(3, &[], 2, Head::Values);
        let p = ParamSet::init(&spec, &mut rng);
        let x = [0.5, -1.0, 2.0];
        let up = [3.0, -0.25];
        let g = grad(&spec, &p, &x, &up).unwrap();
        for (i, xi) in x.iter().enumerate() {
            for (j, uj) in up.iter().enumerate() {
                assert_eq!(g.tensor(0)[i * 2 + j], xi * uj);
            }
        }
        assert_eq!(g.tensor(1), &up);
    }

    #[test]
    fn softmax_is_distribution_and_stable() {
        let logits = Array2::from_shape_vec((2, 3), vec![1000.0, 1000.0, 1000.0, -5.0, 0.0, 30.0]).unwrap();
        let p = softmax_rows(&logits);
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
        let lp = log_softmax_rows(&logits);
        assert!(lp.iter().all(|&v| (LOG_PROB_FLOOR..=0.0).contains(&v)));
        assert!((lp[[0, 0]] + 3f32.ln()).abs() < 1e-5);
    }
}
