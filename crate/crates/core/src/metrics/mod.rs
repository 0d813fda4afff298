//! System-level measurements of whole simulations.

mod census;
mod compression;
mod descriptor;
mod frames;
mod spatial;

pub use census::{evolutionary_activity, population_census, Census, PopulationSeries, MASS_EPSILON};
pub use compression::{compression_complexity, encode, EncoderConfig, ENCODER_ENV};
pub use descriptor::{descriptor, descriptor_from_parts, ExperimentKind, MetricVector};
pub use frames::{render_frame, Frame, FrameSequence};
pub use spatial::{center_of_mass, entropy_levels, multiscale_entropy};
