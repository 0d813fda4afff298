//! Flow Lenia state update: kernels, affinity, flow, and mass-conserving
//! transport, with wall support.

mod affinity;
mod config;
mod convolution;
mod flow;
mod kernel;
mod layout;
mod snapshot;
mod state;
mod transport;
mod world;

pub use affinity::{compute_affinity, AffinityMap, Dynamics, GrowthFields, Rules};
pub use config::SimConfig;
pub use convolution::{Convolver, Fft2};
pub use flow::{compute_flow, crowding, gradient, FlowField};
pub use kernel::{build_kernel, GrowthSpec, KernelImage, KernelSpec, Ring};
pub use layout::{InitLayout, ObstaclePreset};
pub use snapshot::Snapshot;
pub use state::GridState;
pub use transport::{advect, neighbor, TransferWeights, OFFSETS, SELF_SLOT};
pub use world::{StepReport, World, WorldConfig, DIVERGENCE_DRIFT};
