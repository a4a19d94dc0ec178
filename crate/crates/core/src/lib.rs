//! PlanGlow core: personalized study plans from a generate, critique and
//! improve pipeline over a pluggable text provider, with layered
//! explanations, catalog-checked video resources and revision by inline
//! edit or chat.

pub mod clock;
pub mod egress;
pub mod fingerprint;
pub mod http;
pub mod llm;
pub mod pipeline;
pub mod plan;
pub mod resources;
pub mod revision;
pub mod template;

#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub use llm::{ProviderError, StageTag, TextProvider};
pub use pipeline::{GenerationTrace, Pipeline, PipelineError};
pub use plan::{LearnerProfile, StudyPlan};
pub use resources::Catalog;
pub use revision::{InlineEdit, Intent};
