//! Trial logs and the indices computed from them.

mod indices;
mod log;
mod stats;

pub use indices::{
    angular_distance, confusion_index, decrement_ratio, final_error, path_speed, reach_kinematics,
    reaching_time, reaching_velocity, success, MetricsConfig, ReachKinematics,
};
pub use log::{LogRecord, ProtocolKind, TickRecord, TrialFooter, TrialHeader, TrialLog, LOG_SCHEMA_VERSION};
pub use stats::{aggregate, rm_anova_f, seq_score, summarize, sus_score, AnovaResult, Summary};
