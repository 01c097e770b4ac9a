//! Online manifold tracking: one-class recognition from a single labeled
//! example and an unlabeled stream.
//!
//! Each step quantizes the incoming point into a bounded cover of the data
//! (online k-center clustering with radius doubling), then scores it by the
//! probability that a random walk on the similarity graph of the cover
//! reaches the labeled example before an absorbing sink.
//!
//! ```
//! use omt_core::{FeatureVector, OmtConfig, OmtRecognizer};
//!
//! let anchor = FeatureVector::new(vec![0.0, 0.0]).unwrap();
//! let mut rec = OmtRecognizer::new(OmtConfig::new(anchor)).unwrap();
//! let p = rec.process_step(&FeatureVector::new(vec![0.02, 0.0]).unwrap()).unwrap();
//! assert!(p.gated && p.positive);
//! ```

pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod inference;
pub mod linalg;
pub mod par;
pub mod quantizer;
pub mod recognizer;
pub mod streams;

pub use config::OmtConfig;
pub use error::{ErrorKind, OmtError, Result};
pub use eval::{
    bench_step_time, confusion, cover_error, replay_omt, roc_sweep_nn, roc_sweep_omt, CoverTracker,
    Rates, RocCurve, RocPoint,
};
pub use features::{distance, normalize_dataset, similarity, FeatureVector, NormScale};
pub use inference::{harmonic_with_sink, infer_identity, AbsorptionScores, Prediction, SimilarityGraph};
pub use par::Execution;
pub use quantizer::{greedy_repartition, CoverState, Representative, StepOutcome};
pub use recognizer::{NnRecognizer, OmtRecognizer, StreamingClassifier, Verdict};
pub use streams::{ingest, synth_stream, LabeledStream, StreamFormat, StreamRecord, SynthSpec};
