//! Goal-driven exploration of the parameter space, and its random baseline.

mod campaign;
mod goals;
mod space;

pub use campaign::{
    dispatch_prefix, execute_plan, plan_human_job, plan_iteration, replay, run_campaign, run_iteration, CampaignConfig,
    IterationPlan, Policy, PRESETS, PROGRESS_FILE,
};
pub use goals::GoalSpace;
pub use space::{
    Dimension, DimensionOverride, LayoutKind, SearchSpace, SpaceConfig, SystemParams, WorldTemplate, KERNEL_BLOCK,
    RINGS_PER_KERNEL,
};
