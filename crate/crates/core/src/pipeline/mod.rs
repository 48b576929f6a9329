//! Offline (whole clip) and online (streaming) reasoning segmentation.

pub mod offline;
pub mod online;

pub use offline::{
    run_reasoning_vis, run_reasoning_vos, vos_union, InstanceResult, RunConfig, RunError, Timings, VisOutcome,
    VosOutcome, DEFAULT_WORKERS,
};
pub use online::{
    online_init, reference_online_simulator, Keyframe, OnlineError, OnlineEvent, OnlineState, OnlineTracker,
    DEFAULT_ONLINE_XI,
};
