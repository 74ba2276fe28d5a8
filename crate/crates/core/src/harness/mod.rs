//! Sessions, schedule replays, the adaptation policy and log export.

pub mod export;
pub mod log;
pub mod policy;
pub mod replay;
pub mod session;

pub use export::{export, import, read_json, read_jsonl, to_csv, to_jsonl, write_csv, write_json, write_jsonl, ExportFormat};
pub use log::{BoundRecord, FilterIndices, FilterRecord, LogHeader, LogRecord, OdometerRecord, SessionLog};
pub use policy::{guard_holds, simulate_policy, Adjustment, BatchEpoch, PeriodRecord, PolicyKnob, PolicySpec, PolicyTrace, Signal};
pub use replay::{replay_schedule, ScheduleReplay, ScheduleSegment};
pub use session::{
    reconstruct, run_session, FilterBudget, SessionConfig, SessionMode, SessionRun, SessionSource, SessionState,
};
