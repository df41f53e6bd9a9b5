//! Cycle-level software model of a differential-time spiking neural network
//! accelerator.
//!
//! Input spikes travel as `(delta_time, synapse_index)` pairs. A comparison
//! tree ([`spike_sorter`]) merges the per-synapse input streams once for the
//! whole network; each layer ([`layer_pipeline`]) fetches one weight row per
//! spike, accumulates it into shift-decay LIF cores ([`neuron_core`]) and
//! serializes the spikes those cores emit with a leading-one position
//! detector ([`lopd`]). A learned patch-wise encoder ([`encoder`]) turns
//! images into the input streams, and an event-driven behavioral model
//! ([`reference_sim`]) serves as the oracle for the whole datapath.

pub mod cli;
pub mod encoder;
pub mod error;
pub mod fixed;
pub mod idx;
pub mod layer_pipeline;
pub mod lopd;
pub mod model;
pub mod neuron_core;
pub mod reference_sim;
pub mod report;
pub mod scalar;
pub mod spike_sorter;
pub mod synth;
pub mod trace;
pub mod verify;
pub mod weight_file;

pub use encoder::{encode_image, EncoderConfig, Image};
pub use error::{Error, IdxError, WeightFileError};
pub use fixed::{fp_decay, fp_from_real, FixedPoint, Format};
pub use layer_pipeline::{network_infer, CycleReport, Inference, LayerCycles, Network};
pub use model::{DeltaSpike, NetworkConfig, SpikeTrain, WeightKind, WeightMatrix};
pub use reference_sim::{Arithmetic, FixedReference, RealReference, ReferenceRun};
pub use scalar::Scalar;
pub use spike_sorter::sort_streams;
pub use trace::Trace;

/// Real-arithmetic reference in double precision.
pub type FloatReference = RealReference<f64>;
/// Real-arithmetic reference in single precision.
pub type FloatReference32 = RealReference<f32>;
/// Real-arithmetic reference in exact rationals.
pub type ExactReference = RealReference<num_rational::BigRational>;

/// Clock frequency used for throughput estimates unless overridden (300 MHz).
pub const DEFAULT_CLOCK_HZ: f64 = 300e6;

/// Published throughput of the synthesized design at that clock, images/s.
pub const PUBLISHED_IMAGES_PER_SECOND: f64 = 3400.0;
