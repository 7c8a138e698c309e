//! Synthesis of multichannel in-car microphone signals from dry speech,
//! measured impulse responses and condition-tagged noise recordings, with
//! calibrated A-weighted levels.

pub mod array;
pub mod dataset;
pub mod dsp;
pub mod metrics;
pub mod scalar;
pub mod scene;
pub mod wav;

pub use array::{pairwise_delays, steering_vectors, ArrayGeometry, SteeringMatrix};
pub use dataset::{load_dataset, validate, DatasetIndex};
pub use metrics::{condition_table, ConditionMetrics, MetricsQuery};
pub use scalar::Scalar;
pub use scene::{synthesize, SceneResult, SceneSpec};

pub type Buffer = dsp::AudioBuffer<f64>;
pub type Buffer32 = dsp::AudioBuffer<f32>;
pub type Geometry = array::ArrayGeometry<f64>;
pub type Steering = array::SteeringMatrix<f64>;
