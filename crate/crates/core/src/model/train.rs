use std::time::Instant;

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::classifier::ClassifierSpec;
use super::features::{DocFeatures, FeatureTable};
use super::math::{argmax, softmax};
use super::objective::{accumulate_gradient, DocExample, ModelGrad, ModelParams, WordSample};
use super::vocab::{sample_negatives, SignalVocab};
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::pseudo::PseudoLabel;
use crate::signals::SignalSet;

// RNG streams derived from the single configured seed.
const STREAM_CLASSIFIER_INIT: u64 = 1;
const STREAM_WORD_INIT: u64 = 2;
const STREAM_PRETRAIN: u64 = 3;
const STREAM_TRAIN: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Mask-fill predictions kept per document.
    pub k: usize,
    /// CIR threshold.
    pub t: f64,
    /// Pseudo-label similarity threshold.
    pub gamma: f64,
    /// Signal words sampled per document per step.
    pub signal_words_per_step: usize,
    pub negatives: usize,
    /// Dimension of category vectors and trainable word embeddings.
    pub embed_dim: usize,
    /// Token positions fed to the classifier.
    pub max_len: usize,
    pub learning_rate: f64,
    pub pretrain_learning_rate: f64,
    pub epochs: usize,
    pub pretrain_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Initialize word embeddings from unit-normalized static representations.
    pub init_word_embeddings_from_sr: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            k: 20,
            t: 2.0,
            gamma: 0.6,
            signal_words_per_step: 5,
            negatives: 10,
            embed_dim: 100,
            max_len: 64,
            learning_rate: 0.5,
            pretrain_learning_rate: 0.5,
            epochs: 10,
            pretrain_epochs: 20,
            batch_size: 32,
            seed: 42,
            init_word_embeddings_from_sr: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("k", self.k),
            ("signal_words_per_step", self.signal_words_per_step),
            ("negatives", self.negatives),
            ("embed_dim", self.embed_dim),
            ("max_len", self.max_len),
            ("batch_size", self.batch_size),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::validation(format!("{name} must be positive")));
        }
        if !(self.t >= 1.0) {
            return Err(Error::validation("t must be at least 1"));
        }
        if !(-1.0..=1.0).contains(&self.gamma) {
            return Err(Error::validation("gamma must lie in [-1, 1]"));
        }
        if !(self.learning_rate >= 0.0 && self.pretrain_learning_rate >= 0.0) {
            return Err(Error::validation("learning rates must be non-negative"));
        }
        Ok(())
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Parameters before any training, fully determined by the seed.
pub fn initial_params(spec: &ClassifierSpec, vocab_size: usize, config: &TrainConfig) -> ModelParams {
    let classifier = spec.init_params(&mut stream_rng(config.seed, STREAM_CLASSIFIER_INIT));
    let mut rng = stream_rng(config.seed, STREAM_WORD_INIT);
    let d = config.embed_dim;
    let a = 0.5 / d as f64;
    let category = Array2::from_shape_fn((spec.classes(), d), |_| rng.gen_range(-a..a));
    let words = Array2::from_shape_fn((vocab_size, d), |_| rng.gen_range(-a..a));
    ModelParams::new(category, words, classifier)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainOutcome {
    pub params: Vec<f64>,
    /// Mean cross-entropy seen during each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Fits the classifier to pseudo labels by mini-batch gradient descent on cross-entropy.
pub fn pretrain_classifier(
    pseudo_labels: &[PseudoLabel],
    features: &FeatureTable,
    spec: &ClassifierSpec,
    config: &TrainConfig,
) -> Result<PretrainOutcome> {
    spec.validate()?;
    if pseudo_labels.is_empty() {
        return Err(Error::Precondition("no pseudo-labeled documents to pre-train on".into()));
    }
    let data: Vec<(&DocFeatures, usize)> = pseudo_labels
        .iter()
        .map(|l| {
            if l.class_index >= spec.classes() {
                return Err(Error::validation(format!(
                    "pseudo label class {} out of range",
                    l.class_index
                )));
            }
            Ok((features.require(&l.doc_id)?, l.class_index))
        })
        .collect::<Result<_>>()?;

    let mut params = spec.init_params(&mut stream_rng(config.seed, STREAM_CLASSIFIER_INIT));
    let mut rng = stream_rng(config.seed, STREAM_PRETRAIN);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; params.len()];
    let mut epoch_losses = Vec::with_capacity(config.pretrain_epochs);
    for epoch in 0..config.pretrain_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in chunk {
                let (x, y) = data[i];
                let fwd = spec.forward(&params, x)?;
                let q = softmax(&fwd.logits);
                loss_sum -= q[y].max(f64::MIN_POSITIVE).ln();
                let dlogits: Vec<f64> = q
                    .iter()
                    .enumerate()
                    .map(|(c, &qc)| qc - if c == y { 1.0 } else { 0.0 })
                    .collect();
                spec.backward(&params, x, &fwd, &dlogits, &mut grad);
            }
            let step = config.pretrain_learning_rate / chunk.len() as f64;
            params.iter_mut().zip(&grad).for_each(|(p, g)| *p -= step * g);
            if !params.iter().all(|p| p.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    batch: b,
                    detail: "non-finite classifier parameter during pre-training".into(),
                });
            }
        }
        let mean = loss_sum / data.len() as f64;
        log::debug!("pretrain epoch {epoch}: cross-entropy {mean:.6}");
        epoch_losses.push(mean);
    }
    Ok(PretrainOutcome { params, epoch_losses })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean objective per (document, signal word) term.
    pub mean_elbo: f64,
    pub seconds: f64,
}

/// Everything a training run consumes besides the classifier spec and config.
pub struct TrainInputs<'a> {
    /// Filtered signal sets in corpus order.
    pub signals: &'a [SignalSet],
    pub pseudo_labels: &'a [PseudoLabel],
    pub features: &'a FeatureTable,
    /// Skip pre-training and start from these classifier parameters.
    pub pretrained: Option<Vec<f64>>,
    /// Source for static-representation initialization of word embeddings.
    pub word_init: Option<&'a EmbeddingStore>,
}

struct TrainDoc<'a> {
    features: &'a DocFeatures,
    words: Vec<usize>,
}

/// Joint training state: the classifier, category vectors and word embeddings.
pub struct Trainer<'a> {
    spec: ClassifierSpec,
    config: TrainConfig,
    vocab: SignalVocab,
    params: ModelParams,
    docs: Vec<TrainDoc<'a>>,
    rng: ChaCha8Rng,
    grad: ModelGrad,
    epoch: usize,
    pretrain_losses: Vec<f64>,
}

impl<'a> Trainer<'a> {
    pub fn new(inputs: TrainInputs<'a>, spec: &ClassifierSpec, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        spec.validate()?;
        let vocab = SignalVocab::from_signal_sets(inputs.signals)?;
        if vocab.len() < 2 {
            return Err(Error::CannotSample(vocab.len()));
        }
        let mut docs = Vec::new();
        for set in inputs.signals.iter().filter(|s| !s.is_empty()) {
            let features = inputs.features.require(&set.doc_id)?;
            let words = set
                .word_list()
                .map(|w| vocab.index_of(w).expect("vocabulary built from these sets"))
                .collect();
            docs.push(TrainDoc { features, words });
        }
        if docs.is_empty() {
            return Err(Error::Precondition("no document has surviving signal words".into()));
        }

        let mut params = initial_params(spec, vocab.len(), config);
        if config.init_word_embeddings_from_sr {
            if let Some(store) = inputs.word_init {
                init_words_from_store(&mut params, &vocab, store)?;
            }
        }
        let mut pretrain_losses = Vec::new();
        params.classifier = match inputs.pretrained {
            Some(p) => {
                if p.len() != spec.num_params() {
                    return Err(Error::validation("pre-trained parameters do not match the classifier spec"));
                }
                p
            }
            None => {
                let out = pretrain_classifier(inputs.pseudo_labels, inputs.features, spec, config)?;
                pretrain_losses = out.epoch_losses;
                out.params
            }
        };
        let grad = ModelGrad::zeros_like(&params);
        Ok(Trainer {
            spec: spec.clone(),
            config: config.clone(),
            vocab,
            params,
            docs,
            rng: stream_rng(config.seed, STREAM_TRAIN),
            grad,
            epoch: 0,
            pretrain_losses,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn vocab(&self) -> &SignalVocab {
        &self.vocab
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn pretrain_losses(&self) -> &[f64] {
        &self.pretrain_losses
    }

    fn sample_doc<R: Rng>(&self, doc: &TrainDoc<'a>, rng: &mut R) -> Result<DocExample<'a>> {
        let r = self.config.signal_words_per_step;
        let picked: Vec<usize> = if doc.words.len() <= r {
            doc.words.clone()
        } else {
            index::sample(rng, doc.words.len(), r)
                .into_iter()
                .map(|i| doc.words[i])
                .collect()
        };
        let samples = picked
            .into_iter()
            .map(|word| {
                Ok(WordSample {
                    word,
                    negatives: sample_negatives(&self.vocab, self.config.negatives, Some(word), rng)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(DocExample {
            features: doc.features,
            samples,
        })
    }

    /// One pass of mini-batch gradient ascent over the shuffled training documents.
    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        let start = Instant::now();
        let mut order: Vec<usize> = (0..self.docs.len()).collect();
        order.shuffle(&mut self.rng);
        let mut total = 0.0;
        let mut terms = 0usize;
        for (b, chunk) in order.chunks(self.config.batch_size).enumerate() {
            let mut rng = self.rng.clone();
            let batch = chunk
                .iter()
                .map(|&i| self.sample_doc(&self.docs[i], &mut rng))
                .collect::<Result<Vec<_>>>()?;
            self.rng = rng;
            self.grad.clear();
            let obj = accumulate_gradient(&self.params, &self.spec, &batch, &mut self.grad)?;
            if !obj.is_finite() || !self.grad.is_finite() {
                return Err(Error::Divergence {
                    epoch: self.epoch,
                    batch: b,
                    detail: format!("objective {obj}; gradient finite: {}", self.grad.is_finite()),
                });
            }
            total += obj;
            terms += batch.iter().map(|e| e.samples.len()).sum::<usize>();
            self.params
                .apply(&self.grad, self.config.learning_rate / chunk.len() as f64);
            if !self.params.is_finite() {
                return Err(Error::Divergence {
                    epoch: self.epoch,
                    batch: b,
                    detail: "non-finite parameter after update".into(),
                });
            }
        }
        let stats = EpochStats {
            epoch: self.epoch,
            mean_elbo: total / terms.max(1) as f64,
            seconds: start.elapsed().as_secs_f64(),
        };
        log::info!("epoch {}: mean ELBO {:.6}", stats.epoch, stats.mean_elbo);
        self.epoch += 1;
        Ok(stats)
    }

    /// Mean objective over every document with words and negatives drawn from a fixed seed.
    pub fn frozen_elbo(&self, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let batch = self
            .docs
            .iter()
            .map(|d| self.sample_doc(d, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let terms: usize = batch.iter().map(|e| e.samples.len()).sum();
        Ok(super::objective::batch_objective(&self.params, &self.spec, &batch)? / terms as f64)
    }

    pub fn into_model(self) -> TrainedModel {
        TrainedModel {
            config: self.config,
            vocab: self.vocab,
            spec: self.spec,
            params: self.params,
        }
    }
}

fn init_words_from_store(params: &mut ModelParams, vocab: &SignalVocab, store: &EmbeddingStore) -> Result<()> {
    if store.dim() != params.embed_dim() {
        return Err(Error::validation(format!(
            "static-representation init needs embed_dim {} to equal store dim {}",
            params.embed_dim(),
            store.dim()
        )));
    }
    for (i, w) in vocab.words().iter().enumerate() {
        if let Some(v) = store.vector(w) {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                params
                    .word_embeddings
                    .row_mut(i)
                    .iter_mut()
                    .zip(v)
                    .for_each(|(p, x)| *p = x / norm);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: TrainConfig,
    pub vocab: SignalVocab,
    pub spec: ClassifierSpec,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub pretrain_losses: Vec<f64>,
    pub epochs: Vec<EpochStats>,
}

/// Pre-trains (unless parameters are supplied) and then jointly trains for `config.epochs`.
pub fn train(inputs: TrainInputs<'_>, spec: &ClassifierSpec, config: &TrainConfig) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(inputs, spec, config)?;
    let mut epochs = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        epochs.push(trainer.run_epoch()?);
    }
    let pretrain_losses = trainer.pretrain_losses.clone();
    Ok(TrainOutcome {
        model: trainer.into_model(),
        pretrain_losses,
        epochs,
    })
}

/// Most probable class per document; ties go to the lowest index.
pub fn predict<'f>(
    features: impl IntoIterator<Item = &'f DocFeatures>,
    spec: &ClassifierSpec,
    classifier_params: &[f64],
) -> Result<Vec<usize>> {
    features
        .into_iter()
        .map(|x| Ok(argmax(&spec.forward(classifier_params, x)?.logits)))
        .collect()
}

/// Predictions for `doc_ids`, looking features up by id.
pub fn predict_ids<S: AsRef<str>>(
    doc_ids: &[S],
    features: &FeatureTable,
    spec: &ClassifierSpec,
    classifier_params: &[f64],
) -> Result<Vec<usize>> {
    let feats = doc_ids
        .iter()
        .map(|id| features.require(id.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    predict(feats, spec, classifier_params)
}
