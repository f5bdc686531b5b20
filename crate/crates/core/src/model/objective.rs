//! Word distribution model and the evidence lower bound it is trained with.
//!
//! `p(w | c)` is a softmax over the signal vocabulary of `v_c · w`. Training
//! replaces its log with the negative-sampling estimate
//! `ln σ(v_c · w) + Σ_n ln σ(-v_c · w_n)`, and each (document, signal word)
//! pair contributes
//! `Σ_c q(c|x) [ns(w, c) + ln p(c)] - Σ_c q(c|x) ln q(c|x)`.

use ndarray::{Array2, ArrayView1};

use super::classifier::ClassifierSpec;
use super::features::DocFeatures;
use super::math::{dot, log_sigmoid, log_sum_exp, sigmoid, softmax};
use crate::error::Result;

/// Floor applied to `q` inside the entropy logarithm.
pub const Q_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// One row per class.
    pub category_vectors: Array2<f64>,
    /// One row per vocabulary word.
    pub word_embeddings: Array2<f64>,
    pub classifier: Vec<f64>,
    prior: Vec<f64>,
}

impl ModelParams {
    /// Parameters with the fixed uniform class prior.
    pub fn new(category_vectors: Array2<f64>, word_embeddings: Array2<f64>, classifier: Vec<f64>) -> Self {
        let c = category_vectors.nrows();
        ModelParams {
            category_vectors,
            word_embeddings,
            classifier,
            prior: vec![1.0 / c as f64; c],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.category_vectors.nrows()
    }

    pub fn vocab_size(&self) -> usize {
        self.word_embeddings.nrows()
    }

    pub fn embed_dim(&self) -> usize {
        self.category_vectors.ncols()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn is_finite(&self) -> bool {
        self.category_vectors.iter().all(|x| x.is_finite())
            && self.word_embeddings.iter().all(|x| x.is_finite())
            && self.classifier.iter().all(|x| x.is_finite())
    }

    fn score(&self, word: usize, class: usize) -> f64 {
        dot_rows(self.category_vectors.row(class), self.word_embeddings.row(word))
    }

    /// Adds `scale * grad` to every parameter.
    pub fn apply(&mut self, grad: &ModelGrad, scale: f64) {
        self.category_vectors.scaled_add(scale, &grad.category);
        self.word_embeddings.scaled_add(scale, &grad.words);
        self.classifier
            .iter_mut()
            .zip(&grad.classifier)
            .for_each(|(p, g)| *p += scale * g);
    }
}

fn dot_rows(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.dot(&b)
}

/// Gradient buffers shaped like [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGrad {
    pub category: Array2<f64>,
    pub words: Array2<f64>,
    pub classifier: Vec<f64>,
}

impl ModelGrad {
    pub fn zeros_like(p: &ModelParams) -> Self {
        ModelGrad {
            category: Array2::zeros(p.category_vectors.raw_dim()),
            words: Array2::zeros(p.word_embeddings.raw_dim()),
            classifier: vec![0.0; p.classifier.len()],
        }
    }

    pub fn clear(&mut self) {
        self.category.fill(0.0);
        self.words.fill(0.0);
        self.classifier.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn is_finite(&self) -> bool {
        self.category.iter().all(|x| x.is_finite())
            && self.words.iter().all(|x| x.is_finite())
            && self.classifier.iter().all(|x| x.is_finite())
    }
}

/// Exact `ln p(w | c)` under the full softmax.
pub fn word_logprob_exact(word: usize, class: usize, params: &ModelParams) -> f64 {
    let scores: Vec<f64> = (0..params.vocab_size()).map(|r| params.score(r, class)).collect();
    scores[word] - log_sum_exp(&scores)
}

/// Negative-sampling estimate of `ln p(w | c)`.
pub fn word_logprob_ns(word: usize, class: usize, negatives: &[usize], params: &ModelParams) -> f64 {
    log_sigmoid(params.score(word, class))
        + negatives
            .iter()
            .map(|&n| log_sigmoid(-params.score(n, class)))
            .sum::<f64>()
}

fn entropy_term(q: &[f64]) -> f64 {
    -q.iter()
        .map(|&qc| if qc == 0.0 { 0.0 } else { qc * qc.max(Q_FLOOR).ln() })
        .sum::<f64>()
}

/// One (document, signal word) contribution with a shared negative set.
pub fn elbo_term(q: &[f64], word: usize, negatives: &[usize], params: &ModelParams) -> f64 {
    let expectation: f64 = q
        .iter()
        .enumerate()
        .map(|(c, &qc)| qc * (word_logprob_ns(word, c, negatives, params) + params.prior[c].ln()))
        .sum();
    expectation + entropy_term(q)
}

/// The same bound with the exact softmax word model.
pub fn elbo_term_exact(q: &[f64], word: usize, params: &ModelParams) -> f64 {
    let expectation: f64 = q
        .iter()
        .enumerate()
        .map(|(c, &qc)| qc * (word_logprob_exact(word, c, params) + params.prior[c].ln()))
        .sum();
    expectation + entropy_term(q)
}

/// `ln Σ_c p(w | c) p(c)`, the quantity the bound is taken against.
pub fn log_marginal_exact(word: usize, params: &ModelParams) -> f64 {
    let joint: Vec<f64> = (0..params.num_classes())
        .map(|c| word_logprob_exact(word, c, params) + params.prior[c].ln())
        .collect();
    log_sum_exp(&joint)
}

/// Posterior `p(c | w)` under the exact model.
pub fn posterior_exact(word: usize, params: &ModelParams) -> Vec<f64> {
    let joint: Vec<f64> = (0..params.num_classes())
        .map(|c| word_logprob_exact(word, c, params) + params.prior[c].ln())
        .collect();
    softmax(&joint)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSample {
    pub word: usize,
    pub negatives: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DocExample<'a> {
    pub features: &'a DocFeatures,
    pub samples: Vec<WordSample>,
}

/// Sum of [`elbo_term`] over every (document, sampled word) in the batch.
pub fn batch_objective(params: &ModelParams, spec: &ClassifierSpec, batch: &[DocExample<'_>]) -> Result<f64> {
    let mut total = 0.0;
    for ex in batch {
        let q = spec.forward(&params.classifier, ex.features)?.probabilities();
        for s in &ex.samples {
            total += elbo_term(&q, s.word, &s.negatives, params);
        }
    }
    Ok(total)
}

/// Adds the gradient of [`batch_objective`] to `grad` and returns the objective.
pub fn accumulate_gradient(
    params: &ModelParams,
    spec: &ClassifierSpec,
    batch: &[DocExample<'_>],
    grad: &mut ModelGrad,
) -> Result<f64> {
    let classes = params.num_classes();
    let log_prior: Vec<f64> = params.prior.iter().map(|p| p.ln()).collect();
    let mut total = 0.0;
    let mut a = vec![0.0; classes];
    let mut s = vec![0.0; classes];
    for ex in batch {
        if ex.samples.is_empty() {
            continue;
        }
        let fwd = spec.forward(&params.classifier, ex.features)?;
        let q = fwd.probabilities();
        let entropy = entropy_term(&q);
        // d(term)/dq_c summed over samples
        let mut dq = vec![0.0; classes];
        for sample in &ex.samples {
            let pos = params.word_embeddings.row(sample.word);
            for c in 0..classes {
                let v = params.category_vectors.row(c);
                a[c] = dot_rows(v, pos);
                s[c] = log_sigmoid(a[c]) + log_prior[c];
            }
            for &n in &sample.negatives {
                let neg = params.word_embeddings.row(n);
                for c in 0..classes {
                    s[c] += log_sigmoid(-dot_rows(params.category_vectors.row(c), neg));
                }
            }
            total += dot(&q, &s) + entropy;
            for c in 0..classes {
                dq[c] += s[c];
            }

            // word-model gradients, weighted by q_c
            for c in 0..classes {
                let qc = q[c];
                if qc == 0.0 {
                    continue;
                }
                let gp = qc * (1.0 - sigmoid(a[c]));
                let vc = params.category_vectors.row(c).to_owned();
                grad.category.row_mut(c).scaled_add(gp, &pos);
                grad.words.row_mut(sample.word).scaled_add(gp, &vc);
                for &n in &sample.negatives {
                    let neg = params.word_embeddings.row(n);
                    let gn = -qc * sigmoid(dot_rows(vc.view(), neg));
                    grad.category.row_mut(c).scaled_add(gn, &neg);
                    grad.words.row_mut(n).scaled_add(gn, &vc);
                }
            }
        }
        let n = ex.samples.len() as f64;
        for c in 0..classes {
            if q[c] > Q_FLOOR {
                dq[c] -= n * (q[c].ln() + 1.0);
            } else if q[c] > 0.0 {
                dq[c] -= n * Q_FLOOR.ln();
            }
        }
        let mean = dot(&q, &dq);
        let dlogits: Vec<f64> = (0..classes).map(|j| q[j] * (dq[j] - mean)).collect();
        spec.backward(&params.classifier, ex.features, &fwd, &dlogits, &mut grad.classifier);
    }
    Ok(total)
}
