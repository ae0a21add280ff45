//! Prequential error tracking, cluster snapshots, centroid convergence,
//! and RBF profiling.

pub mod cluster;
pub mod prequential;
pub mod recorder;
pub mod render;
pub mod snapshot;

pub use cluster::{centroid_convergence, rbf_profile, Distance, LayerConvergence, RbfProfile};
pub use prequential::{ErrorTracker, IntervalRecord};
pub use recorder::RunRecorder;
pub use snapshot::{Snapshot, SnapshotRecorder};
