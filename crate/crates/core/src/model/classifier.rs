//! Document classifiers over token-embedding sequences, with hand-written
//! backward passes. Parameters live in one flat `f64` buffer whose layout is
//! fixed by the [`ClassifierSpec`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::DocFeatures;
use super::math::{dot, softmax};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    /// Softmax over an affine map of the mean token vector.
    MeanpoolSoftmax { input_dim: usize, classes: usize },
    /// Convolutions per window size, ReLU, max-over-time pooling, affine, softmax.
    Conv {
        input_dim: usize,
        windows: Vec<usize>,
        filters: usize,
        classes: usize,
    },
}

/// Intermediate values kept from the forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub logits: Vec<f64>,
    hidden: Vec<f64>,
    /// Conv only: window start of each filter's maximum, `None` when the ReLU is inactive.
    max_pos: Vec<Option<usize>>,
}

impl Forward {
    pub fn probabilities(&self) -> Vec<f64> {
        softmax(&self.logits)
    }
}

impl ClassifierSpec {
    pub fn meanpool(input_dim: usize, classes: usize) -> Self {
        ClassifierSpec::MeanpoolSoftmax { input_dim, classes }
    }

    /// Four window sizes {2,3,4,5} with 100 filters each.
    pub fn conv_default(input_dim: usize, classes: usize) -> Self {
        ClassifierSpec::Conv {
            input_dim,
            windows: vec![2, 3, 4, 5],
            filters: 100,
            classes,
        }
    }

    pub fn classes(&self) -> usize {
        match self {
            ClassifierSpec::MeanpoolSoftmax { classes, .. } | ClassifierSpec::Conv { classes, .. } => *classes,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ClassifierSpec::MeanpoolSoftmax { input_dim, .. } | ClassifierSpec::Conv { input_dim, .. } => {
                *input_dim
            }
        }
    }

    fn hidden_dim(&self) -> usize {
        match self {
            ClassifierSpec::MeanpoolSoftmax { input_dim, .. } => *input_dim,
            ClassifierSpec::Conv { windows, filters, .. } => windows.len() * filters,
        }
    }

    /// Offset of each window's filter bank; the output layer follows the last bank.
    fn bank_offsets(&self) -> Vec<usize> {
        match self {
            ClassifierSpec::MeanpoolSoftmax { .. } => Vec::new(),
            ClassifierSpec::Conv {
                input_dim,
                windows,
                filters,
                ..
            } => {
                let mut off = 0;
                windows
                    .iter()
                    .map(|k| {
                        let o = off;
                        off += filters * (k * input_dim + 1);
                        o
                    })
                    .collect()
            }
        }
    }

    fn output_offset(&self) -> usize {
        match self {
            ClassifierSpec::MeanpoolSoftmax { .. } => 0,
            ClassifierSpec::Conv {
                input_dim,
                windows,
                filters,
                ..
            } => windows.iter().map(|k| filters * (k * input_dim + 1)).sum(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.output_offset() + self.classes() * (self.hidden_dim() + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes() == 0 || self.input_dim() == 0 {
            return Err(Error::validation("classifier needs positive input and output dimensions"));
        }
        if let ClassifierSpec::Conv { windows, filters, .. } = self {
            if windows.is_empty() || windows.contains(&0) {
                return Err(Error::validation("conv windows must be positive"));
            }
            let mut sorted = windows.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != windows.len() {
                return Err(Error::validation("conv windows must be distinct"));
            }
            if *filters == 0 {
                return Err(Error::validation("conv needs at least one filter per window"));
            }
        }
        Ok(())
    }

    /// Uniform `±1/sqrt(fan_in)` weights and zero biases.
    pub fn init_params<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let mut p = vec![0.0; self.num_params()];
        let mut fill = |slice: &mut [f64], fan_in: usize| {
            let a = 1.0 / (fan_in as f64).sqrt();
            slice.iter_mut().for_each(|x| *x = rng.gen_range(-a..a));
        };
        if let ClassifierSpec::Conv {
            input_dim,
            windows,
            filters,
            ..
        } = self
        {
            for (k, off) in windows.iter().zip(self.bank_offsets()) {
                let fan_in = k * input_dim;
                fill(&mut p[off..off + filters * fan_in], fan_in);
            }
        }
        let off = self.output_offset();
        let h = self.hidden_dim();
        fill(&mut p[off..off + self.classes() * h], h);
        p
    }

    fn check_input(&self, params: &[f64], x: &DocFeatures) -> Result<()> {
        if params.len() != self.num_params() {
            return Err(Error::validation(format!(
                "classifier expects {} parameters, got {}",
                self.num_params(),
                params.len()
            )));
        }
        if x.dim() != self.input_dim() {
            return Err(Error::validation(format!(
                "features have dimension {}, classifier expects {}",
                x.dim(),
                self.input_dim()
            )));
        }
        if x.is_empty() {
            return Err(Error::DegenerateDocument("features".into()));
        }
        if let ClassifierSpec::Conv { windows, .. } = self {
            let widest = windows.iter().copied().max().unwrap_or(0);
            if x.max_len() < widest {
                return Err(Error::validation(format!(
                    "padded length {} is shorter than window {widest}",
                    x.max_len()
                )));
            }
        }
        Ok(())
    }

    pub fn forward(&self, params: &[f64], x: &DocFeatures) -> Result<Forward> {
        self.check_input(params, x)?;
        let (hidden, max_pos) = match self {
            ClassifierSpec::MeanpoolSoftmax { input_dim, .. } => {
                let mut h = vec![0.0; *input_dim];
                for t in 0..x.len() {
                    h.iter_mut().zip(x.row(t)).for_each(|(a, b)| *a += b);
                }
                let n = x.len() as f64;
                h.iter_mut().for_each(|a| *a /= n);
                (h, Vec::new())
            }
            ClassifierSpec::Conv {
                input_dim,
                windows,
                filters,
                ..
            } => {
                let flat = x.as_flat();
                let mut h = Vec::with_capacity(windows.len() * filters);
                let mut pos = Vec::with_capacity(windows.len() * filters);
                for (&k, off) in windows.iter().zip(self.bank_offsets()) {
                    let width = k * input_dim;
                    let positions = x.max_len() - k + 1;
                    for f in 0..*filters {
                        let w = &params[off + f * width..off + (f + 1) * width];
                        let b = params[off + filters * width + f];
                        let mut best = (0, f64::NEG_INFINITY);
                        for p in 0..positions {
                            let s = dot(w, &flat[p * input_dim..p * input_dim + width]) + b;
                            if s > best.1 {
                                best = (p, s);
                            }
                        }
                        if best.1 > 0.0 {
                            h.push(best.1);
                            pos.push(Some(best.0));
                        } else {
                            h.push(0.0);
                            pos.push(None);
                        }
                    }
                }
                (h, pos)
            }
        };
        let off = self.output_offset();
        let hd = hidden.len();
        let c = self.classes();
        let logits = (0..c)
            .map(|j| dot(&params[off + j * hd..off + (j + 1) * hd], &hidden) + params[off + c * hd + j])
            .collect();
        Ok(Forward {
            logits,
            hidden,
            max_pos,
        })
    }

    /// Adds `d objective / d params` to `grad`, given `d objective / d logits`.
    pub fn backward(&self, params: &[f64], x: &DocFeatures, fwd: &Forward, dlogits: &[f64], grad: &mut [f64]) {
        let off = self.output_offset();
        let hd = fwd.hidden.len();
        let c = self.classes();
        for j in 0..c {
            let g = dlogits[j];
            if g == 0.0 {
                continue;
            }
            let row = &mut grad[off + j * hd..off + (j + 1) * hd];
            row.iter_mut().zip(&fwd.hidden).for_each(|(r, h)| *r += g * h);
            grad[off + c * hd + j] += g;
        }
        if let ClassifierSpec::Conv {
            input_dim,
            windows,
            filters,
            ..
        } = self
        {
            let flat = x.as_flat();
            let mut unit = 0;
            for (&k, bank) in windows.iter().zip(self.bank_offsets()) {
                let width = k * input_dim;
                for f in 0..*filters {
                    if let Some(p) = fwd.max_pos[unit] {
                        let dh: f64 = (0..c).map(|j| dlogits[j] * params[off + j * hd + unit]).sum();
                        let window = &flat[p * input_dim..p * input_dim + width];
                        let w = &mut grad[bank + f * width..bank + (f + 1) * width];
                        w.iter_mut().zip(window).for_each(|(g, xv)| *g += dh * xv);
                        grad[bank + filters * width + f] += dh;
                    }
                    unit += 1;
                }
            }
        }
    }
}

/// Class distribution `q(c | x)`.
pub fn classify(features: &DocFeatures, spec: &ClassifierSpec, params: &[f64]) -> Result<Vec<f64>> {
    Ok(spec.forward(params, features)?.probabilities())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn feats(rows: &[Vec<f64>], max_len: usize) -> DocFeatures {
        DocFeatures::from_vectors(rows, rows[0].len(), max_len).unwrap()
    }

    #[test]
    fn zero_params_are_uniform() {
        for spec in [ClassifierSpec::meanpool(3, 4), ClassifierSpec::conv_default(3, 4)] {
            let x = feats(&[vec![1.0, -2.0, 0.5], vec![0.1, 0.2, 0.3]], 6);
            let p = classify(&x, &spec, &vec![0.0; spec.num_params()]).unwrap();
            assert!(p.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        }
    }

    #[test]
    fn meanpool_ignores_padding() {
        let spec = ClassifierSpec::meanpool(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = spec.init_params(&mut rng);
        let rows = vec![vec![1.0, 2.0], vec![3.0, -1.0]];
        let a = classify(&feats(&rows, 2), &spec, &params).unwrap();
        let b = classify(&feats(&rows, 9), &spec, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn outputs_are_distributions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = ClassifierSpec::Conv {
            input_dim: 4,
            windows: vec![2, 3],
            filters: 5,
            classes: 3,
        };
        for _ in 0..20 {
            let params: Vec<f64> = (0..spec.num_params()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let rows: Vec<Vec<f64>> = (0..rng.gen_range(1..6))
                .map(|_| (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect())
                .collect();
            let p = classify(&feats(&rows, 6), &spec, &params).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|v| v.is_finite() && *v >= 0.0));
        }
    }

    #[test]
    fn empty_document_is_degenerate() {
        let spec = ClassifierSpec::meanpool(2, 2);
        let x = DocFeatures::from_vectors(&[], 2, 3).unwrap();
        assert!(matches!(
            classify(&x, &spec, &vec![0.0; spec.num_params()]),
            Err(Error::DegenerateDocument(_))
        ));
    }

    #[test]
    fn spec_validation() {
        let bad = ClassifierSpec::Conv {
            input_dim: 2,
            windows: vec![2, 2],
            filters: 3,
            classes: 2,
        };
        assert!(bad.validate().is_err());
        assert!(ClassifierSpec::conv_default(8, 4).validate().is_ok());
        assert_eq!(ClassifierSpec::meanpool(3, 2).num_params(), 8);
    }
}
