//! Latent-class model: a word distribution per class tied to a document
//! classifier through a variational lower bound on signal-word likelihood.

pub mod checkpoint;
pub mod classifier;
pub mod features;
pub mod math;
pub mod objective;
pub mod train;
pub mod vocab;

pub use checkpoint::{load_classifier, load_model, save_classifier, save_model};
pub use classifier::{classify, ClassifierSpec, Forward};
pub use features::{DocFeatures, FeatureTable};
pub use objective::{
    accumulate_gradient, batch_objective, elbo_term, elbo_term_exact, log_marginal_exact, posterior_exact,
    word_logprob_exact, word_logprob_ns, DocExample, ModelGrad, ModelParams, WordSample,
};
pub use train::{
    initial_params, predict, predict_ids, pretrain_classifier, train, EpochStats, PretrainOutcome, TrainConfig,
    TrainInputs, TrainOutcome, TrainedModel, Trainer,
};
pub use vocab::{sample_negatives, SignalVocab};
