//! Configuration, scene providers, stage orchestration and latency reporting
//! for the end-to-end relighting run.

pub mod config;
pub mod provider;
pub mod run;
pub mod timing;

pub use config::{ExposureMode, PipelineConfig};
pub use provider::{create_provider, SceneProvider, PROVIDER_NAMES};
pub use run::{bench_relight, flicker_from_ldr, load_environment, run_relight, RunOutput};
pub use timing::{StageStats, TimingReport, STAGES};
