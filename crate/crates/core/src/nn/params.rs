use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output head of a network. Both heads are linear; the distinction is
/// semantic (policy logits versus per-action values).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Logits,
    Values,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetSpec {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
    pub head: Head,
}

impl NetSpec {
    pub fn new(input: usize, hidden: &[usize], output: usize, head: Head) -> Self {
        Self {
            input,
            hidden: hidden.to_vec(),
            output,
            head,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.output == 0 || self.hidden.contains(&0) {
            return Err(Error::Domain(format!("network dims must all be >= 1: {self:?}")));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every dense layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = self.input;
        for &h in self.hidden.iter().chain(std::iter::once(&self.output)) {
            dims.push((prev, h));
            prev = h;
        }
        dims
    }

    /// Tensor shapes in parameter order: `[in, out]` weight then `[out]` bias per layer.
    pub fn shapes(&self) -> Vec<Vec<u32>> {
        self.layer_dims()
            .into_iter()
            .flat_map(|(i, o)| [vec![i as u32, o as u32], vec![o as u32]])
            .collect()
    }

    pub fn layout_id(&self) -> u64 {
        layout_id(&self.shapes())
    }
}

/// FNV-1a over the tensor count and every shape, little-endian u32 words.
pub fn layout_id(shapes: &[Vec<u32>]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut feed = |word: u32| {
        for b in word.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
    };
    feed(shapes.len() as u32);
    for shape in shapes {
        feed(shape.len() as u32);
        for &d in shape {
            feed(d);
        }
    }
    h
}

/// Shape-tagged parameter tensors of one approximator, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    shapes: Vec<Vec<u32>>,
    offsets: Vec<usize>,
    data: Vec<f32>,
    layout_id: u64,
}

impl ParamSet {
    pub fn from_parts(shapes: Vec<Vec<u32>>, data: Vec<f32>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(shapes.len() + 1);
        let mut total = 0usize;
        for shape in &shapes {
            offsets.push(total);
            total += shape.iter().map(|&d| d as usize).product::<usize>();
        }
        offsets.push(total);
        if total != data.len() {
            return Err(Error::Dimension {
                expected: total,
                got: data.len(),
            });
        }
        let layout_id = layout_id(&shapes);
        Ok(Self {
            shapes,
            offsets,
            data,
            layout_id,
        })
    }

    pub fn zeros(spec: &NetSpec) -> Self {
        let shapes = spec.shapes();
        let n = shapes.iter().map(|s| s.iter().map(|&d| d as usize).product::<usize>()).sum();
        Self::from_parts(shapes, vec![0.0; n]).expect("consistent zero layout")
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(spec: &NetSpec, rng: &mut R) -> Self {
        let mut p = Self::zeros(spec);
        for (layer, (fan_in, fan_out)) in spec.layer_dims().into_iter().enumerate() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt() as f32;
            for w in p.tensor_mut(2 * layer) {
                *w = rng.random_range(-limit..limit);
            }
        }
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            data: vec![0.0; self.data.len()],
            ..self.clone()
        }
    }

    pub fn layout_id(&self) -> u64 {
        self.layout_id
    }

    pub fn shapes(&self) -> &[Vec<u32>] {
        &self.shapes
    }

    pub fn num_tensors(&self) -> usize {
        self.shapes.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn values(&self) -> &[f32] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn tensor(&self, i: usize) -> &[f32] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub(crate) fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn ensure_layout(&self, other: &ParamSet) -> Result<()> {
        if self.layout_id != other.layout_id || self.shapes != other.shapes {
            return Err(Error::LayoutMismatch {
                expected: self.layout_id,
                got: other.layout_id,
            });
        }
        Ok(())
    }

    pub fn ensure_spec(&self, spec: &NetSpec) -> Result<()> {
        let expected = spec.layout_id();
        if self.layout_id != expected {
            return Err(Error::LayoutMismatch {
                expected,
                got: self.layout_id,
            });
        }
        Ok(())
    }

    pub fn copy_from(&mut self, other: &ParamSet) -> Result<()> {
        self.ensure_layout(other)?;
        self.data.copy_from_slice(&other.data);
        Ok(())
    }

    pub fn scale(&mut self, k: f32) {
        self.data.iter_mut().for_each(|v| *v *= k);
    }

    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt()
    }

    /// Rescales in place so the global L2 norm does not exceed `max_norm`.
    pub fn clip_norm(&mut self, max_norm: f64) {
        let n = self.l2_norm();
        if n > max_norm && n > 0.0 {
            self.scale((max_norm / n) as f32);
        }
    }

    /// Bitwise equality of every value and the layout.
    pub fn bit_eq(&self, other: &ParamSet) -> bool {
        self.shapes == other.shapes
            && self.data.len() == other.data.len()
            && self.data.iter().zip(&other.data).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spec_shapes_and_layout() {
        let spec = NetSpec::new(4, &[8, 3], 2, Head::Logits);
        assert_eq!(spec.shapes(), vec![vec![4, 8], vec![8], vec![8, 3], vec![3], vec![3, 2], vec![2]]);
        let p = ParamSet::zeros(&spec);
        assert_eq!(p.len(), 4 * 8 + 8 + 8 * 3 + 3 + 3 * 2 + 2);
        assert_eq!(p.layout_id(), spec.layout_id());
        // pinned so a change to the hash is noticed
        assert_eq!(layout_id(&[vec![1, 1], vec![1]]), layout_id(&[vec![1, 1], vec![1]]));
        assert_ne!(layout_id(&[vec![2, 3]]), layout_id(&[vec![3, 2]]));
        assert_ne!(layout_id(&[vec![6]]), layout_id(&[vec![6], vec![]]));
    }

    #[test]
    fn from_parts_checks_length() {
        assert!(ParamSet::from_parts(vec![vec![2, 2]], vec![0.0; 3]).is_err());
        assert!(ParamSet::from_parts(vec![vec![2, 2]], vec![0.0; 4]).is_ok());
    }

    #[test]
    fn invalid_spec() {
        assert!(NetSpec::new(0, &[4], 2, Head::Values).validate().is_err());
        assert!(NetSpec::new(3, &[0], 2, Head::Values).validate().is_err());
        assert!(NetSpec::new(3, &[], 2, Head::Values).validate().is_ok());
    }

    #[test]
    fn init_biases_zero() {
        let spec = NetSpec::new(3, &[5], 2, Head::Values);
        let p = ParamSet::init(&spec, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(p.tensor(1).iter().all(|&b| b == 0.0));
        assert!(p.tensor(0).iter().any(|&w| w != 0.0));
    }

    #[test]
    fn clip_norm_bounds() {
        let mut p = ParamSet::from_parts(vec![vec![2]], vec![3.0, 4.0]).unwrap();
        p.clip_norm(1.0);
        assert!((p.l2_norm() - 1.0).abs() < 1e-6);
    }
}
