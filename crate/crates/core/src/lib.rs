//! Gradebench: an experiment harness for LLM-based essay grading.
//!
//! Two grading architectures are provided over a common backend boundary:
//! a single holistic examiner, and a panel of three dimension specialists
//! (content, structure, language) whose reports are fused by a chairman
//! agent under deterministic veto/capping guardrails. The crate also ships
//! the corpus tooling (stratified sampling, few-shot calibration sets),
//! agreement metrics (quadratic weighted kappa, exact match), and report
//! rendering needed to run and score desk-scale experiments offline via
//! recorded cassettes or live against any chat-completions endpoint.

pub mod agents;
pub mod config;
pub mod corpus;
pub mod llm;
pub mod metrics;
pub mod prompts;
pub mod report;
pub mod score;

pub use agents::{AgentVerdict, Architecture, ChairmanDecision, RunRecord};
pub use corpus::{CalibrationSet, EssayCollection, EssayRecord};
pub use llm::{Backend, BackendConfig, CompletionExchange};
pub use metrics::{ConfusionMatrix, MetricsReport};
pub use prompts::{AgentRole, PromptBundle, Rubric, ShotMode};
pub use score::Score;
