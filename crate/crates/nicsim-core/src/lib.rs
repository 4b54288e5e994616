//! Deterministic discrete-event simulator of a priority-aware multiqueue
//! NIC with interrupt moderation, attached to a single-core fixed-priority
//! RTOS model.
//!
//! The crate is layered bottom-up:
//!
//! - [`time`] / [`sim`]: integer-microsecond clock and a totally ordered
//!   event queue (time, kind rank, sequence number).
//! - [`nic`]: per-queue interrupt moderation — absolute timer, per-packet
//!   timer, counter threshold, capacity — with a flow distribution map.
//! - [`rtos`]: the CPU side — ISRs above everything, a driver above the
//!   workers, fixed-priority preemptive worker tasks, and per-job
//!   response/preemption accounting.
//! - [`traffic`]: jittered control streams, CBR/Poisson floods, trace
//!   files, and the deterministic merge into one packet stream.
//! - [`engine`]: the event loop tying the layers together.
//! - [`metrics`]: run statistics, derived metrics, CSV/JSON export.
//! - [`scenario`]: the JSON experiment schema, moderation labels, and the
//!   label x rate sweep driver.
//! - [`reference`]: a brute-force moderation oracle the engine must match
//!   exactly; `nicsim check` runs it.
//!
//! Every run is a pure function of its inputs: same scenario, same seed,
//! same bytes out.

pub mod engine;
pub mod error;
pub mod metrics;
pub mod nic;
pub mod reference;
pub mod rtos;
pub mod scenario;
pub mod sim;
pub mod time;
pub mod traffic;

pub use engine::{World, WorkerSetup};
pub use error::{Error, Result};
pub use metrics::{BatchRecord, BinSeries, QueueReport, RunStats};
pub use nic::{
    InterruptBatch, InterruptCause, Nic, Packet, QueueConfig, QueueId, QueueStats, SourceTag,
};
pub use rtos::{CostModel, Cpu, JobRecord, TaskDescriptor, TaskId, TaskReport};
pub use scenario::{ModLabel, Scenario, SweepGrid, SweepOutcome, SweepRow};
pub use sim::{Event, EventKind, EventQueue};
pub use time::SimTime;
