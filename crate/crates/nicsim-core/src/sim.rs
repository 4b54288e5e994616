//! Deterministic discrete-event core.
//!
//! Events are totally ordered by `(time, kind rank, sequence number)`:
//!
//! * time — integer microseconds;
//! * kind rank — fixed order between event kinds at the same microsecond,
//!   chosen so that a packet arriving exactly when a queue timer expires
//!   is enqueued *before* the timer fires (the coincident packet joins the
//!   outgoing batch);
//! * sequence number — monotonically assigned at `schedule` time, breaking
//!   any remaining ties by insertion order.
//!
//! There is no event cancellation. Components that need to supersede a
//! pending timer or completion tag events with a generation counter and
//! ignore stale ones when they pop. This keeps the queue a plain binary
//! heap and the trace reproducible byte-for-byte for a given seed.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::nic::QueueId;
use crate::rtos::TaskId;
use crate::time::SimTime;

// ======================================================================
// Event kinds
// ======================================================================

/// Every kind of event the simulator processes, with kind-specific payload.
///
/// Payloads are plain identifiers; all mutable state lives in the NIC and
/// CPU models, never in the event itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// The packet at `index` in the run's merged arrival stream reaches the NIC.
    PacketArrival { index: usize },
    /// A moderation timer armed for `queue_id` reaches its deadline.
    /// `generation` must match the queue's current timer generation or the
    /// event is stale and has no effect.
    QueueTimerExpiry { queue_id: QueueId, generation: u64 },
    /// The CPU may begin the interrupt service routine at the head of the
    /// ISR FIFO (no-op if an ISR is already running).
    IsrStart,
    /// The running ISR finishes; its batch moves to the driver backlog.
    IsrEnd,
    /// The driver finishes per-packet processing of its current packet.
    DriverStep { generation: u64 },
    /// The running job of `task_id` finishes its service demand.
    JobCompletion { task_id: TaskId, generation: u64 },
    /// Periodic measurement boundary; reserved for samplers, carries no state.
    MeasurementTick,
}

impl EventKind {
    /// Fixed tie-break rank applied at equal timestamps.
    pub fn rank(&self) -> u8 {
        match self {
            EventKind::PacketArrival { .. } => 0,
            EventKind::QueueTimerExpiry { .. } => 1,
            EventKind::IsrStart => 2,
            EventKind::IsrEnd => 3,
            EventKind::DriverStep { .. } => 4,
            EventKind::JobCompletion { .. } => 5,
            EventKind::MeasurementTick => 6,
        }
    }
}

/// A scheduled event. Ordering ignores the payload: `(time, rank, seq)` is
/// already total because sequence numbers are unique.
#[derive(Debug, Clone, Copy)]
pub struct Event {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl Event {
    fn key(&self) -> (SimTime, u8, u64) {
        (self.time, self.kind.rank(), self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

// ======================================================================
// Event queue
// ======================================================================

/// Min-ordered event queue plus the simulation clock.
#[derive(Debug, Default)]
pub struct EventQueue {
    clock: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Reverse<Event>>,
}

impl EventQueue {
    pub fn new() -> Self {
        EventQueue::default()
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules `kind` at `time`, returning the assigned sequence number.
    ///
    /// Panics if `time` is before the current clock: scheduling into the
    /// past is a contract violation and must abort with a diagnostic.
    pub fn schedule(&mut self, time: SimTime, kind: EventKind) -> u64 {
        assert!(
            time >= self.clock,
            "scheduling into the past: event {kind:?} at {time} but clock is {} (contract violation)",
            self.clock
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Event { time, seq, kind }));
        seq
    }

    /// Time of the earliest pending event, if any.
    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(ev)| ev.time)
    }

    /// Removes and returns the earliest pending event, advancing the clock
    /// to its timestamp.
    pub fn pop_next(&mut self) -> Option<Event> {
        let Reverse(ev) = self.heap.pop()?;
        debug_assert!(ev.time >= self.clock);
        self.clock = ev.time;
        Some(ev)
    }

    /// Processes every event with `time <= horizon` in total order, calling
    /// `handler` for each. The handler may schedule further events. On
    /// return the clock equals `horizon`; events beyond it stay pending.
    pub fn run_until<F>(&mut self, horizon: SimTime, mut handler: F)
    where
        F: FnMut(&mut EventQueue, Event),
    {
        loop {
            match self.peek_time() {
                Some(t) if t <= horizon => {
                    let ev = self.pop_next().expect("peeked event vanished");
                    handler(self, ev);
                }
                _ => break,
            }
        }
        self.clock = self.clock.max(horizon);
    }
}
