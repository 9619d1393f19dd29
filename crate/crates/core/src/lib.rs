//! Dataset preparation, augmentation, post-processing and scoring for
//! long-form Bangla speech recognition and speaker diarization.

pub mod alignment;
pub mod assignment;
pub mod audio_io;
pub mod augment;
pub mod chunking;
pub mod config;
pub mod diar_formats;
pub mod metrics;
pub mod pipeline;
pub mod postproc;
pub mod textnorm;

pub use audio_io::{AudioBuffer, TARGET_RATE};
pub use config::PipelineConfig;
