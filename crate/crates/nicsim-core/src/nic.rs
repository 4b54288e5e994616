//! Priority-aware multiqueue NIC with per-queue interrupt moderation.
//!
//! Ingress path: a packet is classified by destination port through the
//! distribution map (the socket-bind configured filter). Matched packets
//! enter the bound receive queue; unmatched packets are dropped at the NIC
//! and never raise an interrupt. Each queue moderates independently:
//!
//! * `absolute_timer_us == 0` — immediate mode: every packet fires its own
//!   single-packet interrupt and the queue never holds anything.
//! * otherwise — the *first* packet of a coalescing window arms an absolute
//!   deadline that later packets never move; every arrival (re)arms the
//!   per-packet deadline if one is configured; reaching
//!   `counter_threshold` occupancy fires at once. Whichever trigger comes
//!   first drains the whole queue into one interrupt batch.
//!
//! Timers are never cancelled. Arming bumps the queue's timer generation;
//! the caller schedules expiry events tagged with that generation and the
//! queue ignores any event whose generation no longer matches.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::SimTime;

// ======================================================================
// Identifiers and packets
// ======================================================================

/// Receive-queue identifier, unique within a NIC.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct QueueId(pub u32);

impl fmt::Display for QueueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

/// Where a packet came from; carried through for reporting only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SourceTag {
    Control,
    Flood,
    Trace,
}

/// A packet as the NIC sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub id: u64,
    pub arrival_time: SimTime,
    pub dest_port: u16,
    pub source_tag: SourceTag,
}

// ======================================================================
// Distribution map
// ======================================================================

/// One socket-bind filter entry: packets for `dest_port` go to `queue_id`
/// on behalf of `process_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRule {
    pub dest_port: u16,
    pub process_id: u32,
    pub queue_id: QueueId,
}

/// The NIC's port-to-queue filter table.
#[derive(Debug, Clone, Default)]
pub struct DistributionMap {
    rules: BTreeMap<u16, FlowRule>,
}

impl DistributionMap {
    /// Classifies a destination port. `None` means the packet matches no
    /// rule and must be dropped at the NIC.
    pub fn classify(&self, dest_port: u16) -> Option<QueueId> {
        self.rules.get(&dest_port).map(|r| r.queue_id)
    }

    pub fn rules(&self) -> impl Iterator<Item = &FlowRule> {
        self.rules.values()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

// ======================================================================
// Queue configuration
// ======================================================================

/// Moderation parameters for one receive queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueConfig {
    pub queue_id: QueueId,
    /// Maximum held packets; arrivals beyond this are tail-dropped.
    pub capacity: usize,
    /// Absolute coalescing window armed by the first packet. 0 = immediate mode.
    pub absolute_timer_us: u64,
    /// Deadline re-armed by every arrival. 0 = disabled.
    pub packet_timer_us: u64,
    /// Fire as soon as occupancy reaches this count. 0 = disabled.
    pub counter_threshold: usize,
    /// Priority of the owning task; recorded for reporting.
    pub owner_priority: u8,
}

impl QueueConfig {
    /// Immediate mode: no coalescing at all.
    pub fn is_immediate(&self) -> bool {
        self.absolute_timer_us == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.capacity < 1 {
            return Err(Error::validation(format!(
                "queue {}: capacity must be >= 1",
                self.queue_id
            )));
        }
        if self.absolute_timer_us == 0
            && (self.packet_timer_us != 0 || self.counter_threshold != 0)
        {
            return Err(Error::validation(format!(
                "queue {}: absolute_timer_us = 0 selects immediate mode, which forces \
                 packet_timer_us = 0 and counter_threshold = 0 (got {} and {})",
                self.queue_id, self.packet_timer_us, self.counter_threshold
            )));
        }
        Ok(())
    }
}

// ======================================================================
// Interrupt batches
// ======================================================================

/// Why an interrupt fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterruptCause {
    Immediate,
    AbsoluteTimer,
    PacketTimer,
    Threshold,
}

impl fmt::Display for InterruptCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            InterruptCause::Immediate => "immediate",
            InterruptCause::AbsoluteTimer => "absolute_timer",
            InterruptCause::PacketTimer => "packet_timer",
            InterruptCause::Threshold => "threshold",
        };
        f.write_str(s)
    }
}

/// One interrupt's worth of drained packets, in FIFO arrival order.
#[derive(Debug, Clone)]
pub struct InterruptBatch {
    pub queue_id: QueueId,
    pub fire_time: SimTime,
    pub cause: InterruptCause,
    pub packets: Vec<Packet>,
}

/// Result of offering one packet to a queue.
#[derive(Debug)]
pub enum ModerationAction {
    /// The packet (or the batch it completed) leaves right now.
    FireNow(InterruptBatch),
    /// The packet was held. The caller must (re)schedule expiry events for
    /// the queue's current deadlines under its current timer generation.
    ArmTimers,
    /// The queue was full; the packet was tail-dropped. Timers unchanged.
    DroppedFull,
}

/// Result of delivering a timer expiry to a queue.
#[derive(Debug)]
pub enum TimerOutcome {
    Fired(InterruptBatch),
    /// The event's generation was superseded; no effect.
    Stale,
}

// ======================================================================
// Receive queue
// ======================================================================

/// Counters for one queue over a run.
///
/// Conservation holds at all times:
/// `enqueued == packets_delivered + dropped_full + dropped_unbind + occupancy`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueStats {
    /// Packets offered to the queue (including ones later dropped).
    pub enqueued: u64,
    /// Packets handed to the OS inside interrupt batches.
    pub packets_delivered: u64,
    /// Tail drops on full queue.
    pub dropped_full: u64,
    /// Packets discarded because the flow was unbound while they waited.
    pub dropped_unbind: u64,
    pub interrupts_raised: u64,
    /// Longest time any delivered packet sat in the queue before its
    /// interrupt fired. Immediate queues must show 0.
    pub max_residency_us: u64,
}

impl QueueStats {
    fn merge(&mut self, other: &QueueStats) {
        self.enqueued += other.enqueued;
        self.packets_delivered += other.packets_delivered;
        self.dropped_full += other.dropped_full;
        self.dropped_unbind += other.dropped_unbind;
        self.interrupts_raised += other.interrupts_raised;
        self.max_residency_us = self.max_residency_us.max(other.max_residency_us);
    }
}

/// One receive queue with its moderation state.
#[derive(Debug, Clone)]
pub struct RxQueue {
    config: QueueConfig,
    occupancy: VecDeque<Packet>,
    absolute_deadline: Option<SimTime>,
    packet_deadline: Option<SimTime>,
    timer_generation: u64,
    stats: QueueStats,
}

impl RxQueue {
    pub fn new(config: QueueConfig) -> Result<Self> {
        config.validate()?;
        Ok(RxQueue {
            config,
            occupancy: VecDeque::new(),
            absolute_deadline: None,
            packet_deadline: None,
            timer_generation: 0,
            stats: QueueStats::default(),
        })
    }

    pub fn config(&self) -> &QueueConfig {
        &self.config
    }

    pub fn occupancy(&self) -> usize {
        self.occupancy.len()
    }

    pub fn stats(&self) -> &QueueStats {
        &self.stats
    }

    pub fn timer_generation(&self) -> u64 {
        self.timer_generation
    }

    pub fn absolute_deadline(&self) -> Option<SimTime> {
        self.absolute_deadline
    }

    pub fn packet_deadline(&self) -> Option<SimTime> {
        self.packet_deadline
    }

    /// Offers one packet to the queue at time `now`.
    ///
    /// In immediate mode this always fires a single-packet batch. In
    /// moderated mode the packet is held (arming/refreshing deadlines and
    /// bumping the timer generation so previously scheduled expiries go
    /// stale), fires at once if the counter threshold is reached, or is
    /// tail-dropped if the queue is full.
    pub fn enqueue(&mut self, packet: Packet, now: SimTime) -> ModerationAction {
        self.stats.enqueued += 1;

        if self.config.is_immediate() {
            debug_assert!(self.occupancy.is_empty());
            self.stats.packets_delivered += 1;
            self.stats.interrupts_raised += 1;
            return ModerationAction::FireNow(InterruptBatch {
                queue_id: self.config.queue_id,
                fire_time: now,
                cause: InterruptCause::Immediate,
                packets: vec![packet],
            });
        }

        if self.occupancy.len() >= self.config.capacity {
            self.stats.dropped_full += 1;
            return ModerationAction::DroppedFull;
        }

        self.occupancy.push_back(packet);
        if self.occupancy.len() == 1 {
            // First packet of the window arms the absolute deadline; later
            // packets never move it.
            self.absolute_deadline = Some(now + self.config.absolute_timer_us);
        }
        if self.config.packet_timer_us > 0 {
            self.packet_deadline = Some(now + self.config.packet_timer_us);
        }

        if self.config.counter_threshold > 0 && self.occupancy.len() >= self.config.counter_threshold
        {
            return ModerationAction::FireNow(self.fire(now, InterruptCause::Threshold));
        }

        // Deadline state changed: invalidate whatever expiries are pending
        // and let the caller schedule fresh ones under the new generation.
        self.timer_generation += 1;
        ModerationAction::ArmTimers
    }

    /// Delivers a timer expiry scheduled under `generation` at time `now`.
    ///
    /// A mismatched generation means the timer was superseded (by a newer
    /// arrival or an earlier fire) and the event is ignored. A matching
    /// generation always fires: the cause is whichever deadline equals
    /// `now`, with the absolute timer winning a coincident tie.
    pub fn on_timer_expiry(&mut self, generation: u64, now: SimTime) -> TimerOutcome {
        if generation != self.timer_generation {
            return TimerOutcome::Stale;
        }
        assert!(
            !self.occupancy.is_empty(),
            "queue {}: timer fired with empty occupancy (contract violation)",
            self.config.queue_id
        );
        let cause = if self.absolute_deadline == Some(now) {
            InterruptCause::AbsoluteTimer
        } else if self.packet_deadline == Some(now) {
            InterruptCause::PacketTimer
        } else {
            unreachable!(
                "queue {}: timer generation {} matched but no deadline equals {now} \
                 (absolute {:?}, packet {:?})",
                self.config.queue_id, generation, self.absolute_deadline, self.packet_deadline
            );
        };
        TimerOutcome::Fired(self.fire(now, cause))
    }

    /// Drains the queue into a batch and resets moderation state.
    fn fire(&mut self, now: SimTime, cause: InterruptCause) -> InterruptBatch {
        let packets: Vec<Packet> = self.occupancy.drain(..).collect();
        debug_assert!(!packets.is_empty());
        for p in &packets {
            let residency = now.since(p.arrival_time);
            self.stats.max_residency_us = self.stats.max_residency_us.max(residency);
        }
        self.stats.packets_delivered += packets.len() as u64;
        self.stats.interrupts_raised += 1;
        self.absolute_deadline = None;
        self.packet_deadline = None;
        self.timer_generation += 1;
        InterruptBatch {
            queue_id: self.config.queue_id,
            fire_time: now,
            cause,
            packets,
        }
    }

    /// Discards all held packets (flow unbound); they count as
    /// `dropped_unbind` and raise no interrupt.
    fn discard_on_unbind(&mut self) {
        self.stats.dropped_unbind += self.occupancy.len() as u64;
        self.occupancy.clear();
        self.absolute_deadline = None;
        self.packet_deadline = None;
        self.timer_generation += 1;
    }
}

// ======================================================================
// NIC facade
// ======================================================================

/// What happened to a packet offered to the NIC.
#[derive(Debug)]
pub enum IngressOutcome {
    /// No distribution rule matched; dropped at the NIC, no interrupt.
    Unmatched,
    /// An interrupt batch leaves the NIC right now.
    Fired(InterruptBatch),
    /// The packet is held; schedule expiry events for every listed deadline
    /// under `generation`.
    TimersArmed {
        queue_id: QueueId,
        generation: u64,
        absolute: Option<SimTime>,
        packet: Option<SimTime>,
    },
    /// Tail-dropped on a full queue.
    DroppedFull { queue_id: QueueId },
}

/// The NIC: distribution map plus live receive queues.
#[derive(Debug, Default)]
pub struct Nic {
    map: DistributionMap,
    queues: BTreeMap<QueueId, RxQueue>,
    /// Stats of queues whose flow was unbound, keyed by queue id; merged
    /// into reports so conservation covers the whole run.
    retired: BTreeMap<QueueId, QueueStats>,
    dropped_unmatched: u64,
}

impl Nic {
    pub fn new() -> Self {
        Nic::default()
    }

    pub fn map(&self) -> &DistributionMap {
        &self.map
    }

    pub fn dropped_unmatched(&self) -> u64 {
        self.dropped_unmatched
    }

    pub fn queue(&self, id: QueueId) -> Option<&RxQueue> {
        self.queues.get(&id)
    }

    pub fn live_queue_count(&self) -> usize {
        self.queues.len()
    }

    /// Installs a flow rule and creates its receive queue.
    pub fn bind_flow(&mut self, dest_port: u16, process_id: u32, config: QueueConfig) -> Result<QueueId> {
        if self.map.rules.contains_key(&dest_port) {
            return Err(Error::validation(format!(
                "port {dest_port} is already bound"
            )));
        }
        if self.queues.contains_key(&config.queue_id) {
            return Err(Error::validation(format!(
                "queue id {} is already in use",
                config.queue_id
            )));
        }
        let queue_id = config.queue_id;
        let queue = RxQueue::new(config)?;
        self.queues.insert(queue_id, queue);
        self.map.rules.insert(
            dest_port,
            FlowRule {
                dest_port,
                process_id,
                queue_id,
            },
        );
        Ok(queue_id)
    }

    /// Removes a flow rule. Pending packets in its queue are discarded
    /// (counted as `dropped_unbind`) without raising an interrupt, and any
    /// scheduled timers go stale via the generation bump.
    pub fn unbind_flow(&mut self, dest_port: u16) -> Result<()> {
        let rule = self
            .map
            .rules
            .remove(&dest_port)
            .ok_or_else(|| Error::validation(format!("port {dest_port} is not bound")))?;
        let mut queue = self
            .queues
            .remove(&rule.queue_id)
            .expect("bound rule without a live queue");
        queue.discard_on_unbind();
        self.retired
            .entry(rule.queue_id)
            .or_default()
            .merge(queue.stats());
        Ok(())
    }

    /// Runs one packet through classify + enqueue.
    pub fn ingress(&mut self, packet: Packet, now: SimTime) -> IngressOutcome {
        let Some(queue_id) = self.map.classify(packet.dest_port) else {
            self.dropped_unmatched += 1;
            return IngressOutcome::Unmatched;
        };
        let queue = self
            .queues
            .get_mut(&queue_id)
            .expect("classified to a queue that does not exist");
        match queue.enqueue(packet, now) {
            ModerationAction::FireNow(batch) => IngressOutcome::Fired(batch),
            ModerationAction::ArmTimers => IngressOutcome::TimersArmed {
                queue_id,
                generation: queue.timer_generation(),
                absolute: queue.absolute_deadline(),
                packet: queue.packet_deadline(),
            },
            ModerationAction::DroppedFull => IngressOutcome::DroppedFull { queue_id },
        }
    }

    /// Routes a timer expiry to its queue. Expiries for queues that were
    /// unbound in the meantime are stale by definition.
    pub fn on_timer_expiry(&mut self, queue_id: QueueId, generation: u64, now: SimTime) -> TimerOutcome {
        match self.queues.get_mut(&queue_id) {
            Some(queue) => queue.on_timer_expiry(generation, now),
            None => TimerOutcome::Stale,
        }
    }

    /// Per-queue stats including retired (unbound) queues, with live
    /// occupancy reported alongside for conservation checks.
    pub fn stats_snapshot(&self) -> BTreeMap<QueueId, (QueueStats, usize)> {
        let mut out: BTreeMap<QueueId, (QueueStats, usize)> = BTreeMap::new();
        for (id, stats) in &self.retired {
            out.insert(*id, (*stats, 0));
        }
        for (id, queue) in &self.queues {
            let entry = out.entry(*id).or_default();
            entry.0.merge(queue.stats());
            entry.1 += queue.occupancy();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(us: u64) -> SimTime {
        SimTime::from_us(us)
    }

    fn pkt(id: u64, at: u64, port: u16) -> Packet {
        Packet {
            id,
            arrival_time: t(at),
            dest_port: port,
            source_tag: SourceTag::Flood,
        }
    }

    fn config(abs: u64, pkt_timer: u64, threshold: usize) -> QueueConfig {
        QueueConfig {
            queue_id: QueueId(0),
            capacity: 64,
            absolute_timer_us: abs,
            packet_timer_us: pkt_timer,
            counter_threshold: threshold,
            owner_priority: 1,
        }
    }

    // ------------------------------------------------------------------
    // QueueConfig validation
    // ------------------------------------------------------------------

    #[test]
    fn zero_capacity_is_rejected() {
        let mut c = config(0, 0, 0);
        c.capacity = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn immediate_mode_forbids_packet_timer_and_threshold() {
        assert!(config(0, 100, 0).validate().is_err());
        assert!(config(0, 0, 4).validate().is_err());
        assert!(config(0, 0, 0).validate().is_ok());
        assert!(config(3200, 800, 16).validate().is_ok());
    }

    // ------------------------------------------------------------------
    // Immediate mode
    // ------------------------------------------------------------------

    #[test]
    fn immediate_queue_fires_every_packet_alone() {
        let mut q = RxQueue::new(config(0, 0, 0)).unwrap();
        for k in 0..3u64 {
            match q.enqueue(pkt(k, 10 * k, 502), t(10 * k)) {
                ModerationAction::FireNow(b) => {
                    assert_eq!(b.cause, InterruptCause::Immediate);
                    assert_eq!(b.packets.len(), 1);
                    assert_eq!(b.fire_time, t(10 * k));
                    assert_eq!(b.packets[0].id, k);
                }
                other => panic!("expected FireNow, got {other:?}"),
            }
        }
        assert_eq!(q.occupancy(), 0);
        assert_eq!(q.stats().interrupts_raised, 3);
        assert_eq!(q.stats().packets_delivered, 3);
        assert_eq!(q.stats().max_residency_us, 0);
    }

    // ------------------------------------------------------------------
    // Moderated mode: arming and firing
    // ------------------------------------------------------------------

    #[test]
    fn first_packet_arms_absolute_deadline() {
        let mut q = RxQueue::new(config(3200, 0, 0)).unwrap();
        match q.enqueue(pkt(0, 0, 505), t(0)) {
            ModerationAction::ArmTimers => {}
            other => panic!("expected ArmTimers, got {other:?}"),
        }
        assert_eq!(q.absolute_deadline(), Some(t(3200)));
        assert_eq!(q.packet_deadline(), None);
    }

    #[test]
    fn later_packets_do_not_move_absolute_deadline() {
        let mut q = RxQueue::new(config(3200, 0, 0)).unwrap();
        q.enqueue(pkt(0, 0, 505), t(0));
        q.enqueue(pkt(1, 200, 505), t(200));
        q.enqueue(pkt(2, 2000, 505), t(2000));
        assert_eq!(q.absolute_deadline(), Some(t(3200)));
    }

    #[test]
    fn every_arrival_rearms_packet_deadline() {
        let mut q = RxQueue::new(config(3200, 250, 0)).unwrap();
        q.enqueue(pkt(0, 0, 505), t(0));
        assert_eq!(q.packet_deadline(), Some(t(250)));
        q.enqueue(pkt(1, 100, 505), t(100));
        assert_eq!(q.packet_deadline(), Some(t(350)));
        assert_eq!(q.absolute_deadline(), Some(t(3200)));
    }

    #[test]
    fn arming_bumps_generation_so_old_expiries_go_stale() {
        let mut q = RxQueue::new(config(3200, 250, 0)).unwrap();
        q.enqueue(pkt(0, 0, 505), t(0));
        let gen_after_first = q.timer_generation();
        q.enqueue(pkt(1, 100, 505), t(100));
        assert!(q.timer_generation() > gen_after_first);
        // The expiry scheduled for the first packet's deadline is now stale.
        assert!(matches!(
            q.on_timer_expiry(gen_after_first, t(250)),
            TimerOutcome::Stale
        ));
        assert_eq!(q.occupancy(), 2);
    }

    /// Derived by hand-replaying the state machine: packets at t = 0, 100,
    /// 200 with packet timer 250 and absolute 3200. The last arrival re-arms
    /// the packet deadline to 450, which fires first with all three packets.
    #[test]
    fn packet_timer_fires_with_and_batches_all_held_packets() {
        let mut q = RxQueue::new(config(3200, 250, 0)).unwrap();
        q.enqueue(pkt(0, 0, 505), t(0));
        q.enqueue(pkt(1, 100, 505), t(100));
        q.enqueue(pkt(2, 200, 505), t(200));
        let generation = q.timer_generation();
        assert_eq!(q.packet_deadline(), Some(t(450)));
        match q.on_timer_expiry(generation, t(450)) {
            TimerOutcome::Fired(b) => {
                assert_eq!(b.fire_time, t(450));
                assert_eq!(b.cause, InterruptCause::PacketTimer);
                assert_eq!(b.packets.len(), 3);
                // FIFO order within the batch.
                let ids: Vec<u64> = b.packets.iter().map(|p| p.id).collect();
                assert_eq!(ids, vec![0, 1, 2]);
            }
            TimerOutcome::Stale => panic!("expiry unexpectedly stale"),
        }
        assert_eq!(q.occupancy(), 0);
        assert_eq!(q.absolute_deadline(), None);
        assert_eq!(q.packet_deadline(), None);
        assert_eq!(q.stats().max_residency_us, 450);
    }

    /// Derived by hand-replaying: threshold 4, arrivals at t = 0, 10, 20, 30.
    /// The fourth arrival reaches the threshold and fires at t = 30.
    #[test]
    fn counter_threshold_fires_on_reaching_occupancy() {
        let mut q = RxQueue::new(config(3200, 0, 4)).unwrap();
        for (k, at) in [0u64, 10, 20].iter().enumerate() {
            assert!(matches!(
                q.enqueue(pkt(k as u64, *at, 505), t(*at)),
                ModerationAction::ArmTimers
            ));
        }
        match q.enqueue(pkt(3, 30, 505), t(30)) {
            ModerationAction::FireNow(b) => {
                assert_eq!(b.fire_time, t(30));
                assert_eq!(b.cause, InterruptCause::Threshold);
                assert_eq!(b.packets.len(), 4);
            }
            other => panic!("expected FireNow, got {other:?}"),
        }
        assert_eq!(q.stats().interrupts_raised, 1);
    }

    #[test]
    fn absolute_wins_coincident_tie_with_packet_deadline() {
        // abs = pkt = 300: the first packet sets both deadlines to t+300.
        let mut q = RxQueue::new(config(300, 300, 0)).unwrap();
        q.enqueue(pkt(0, 0, 505), t(0));
        let generation = q.timer_generation();
        assert_eq!(q.absolute_deadline(), q.packet_deadline());
        match q.on_timer_expiry(generation, t(300)) {
            TimerOutcome::Fired(b) => assert_eq!(b.cause, InterruptCause::AbsoluteTimer),
            TimerOutcome::Stale => panic!("expiry unexpectedly stale"),
        }
    }

    #[test]
    fn full_queue_tail_drops_without_touching_timers() {
        let mut c = config(3200, 0, 0);
        c.capacity = 2;
        let mut q = RxQueue::new(c).unwrap();
        q.enqueue(pkt(0, 0, 505), t(0));
        q.enqueue(pkt(1, 10, 505), t(10));
        let generation = q.timer_generation();
        let deadline = q.absolute_deadline();
        assert!(matches!(
            q.enqueue(pkt(2, 20, 505), t(20)),
            ModerationAction::DroppedFull
        ));
        assert_eq!(q.timer_generation(), generation, "drop must not re-arm");
        assert_eq!(q.absolute_deadline(), deadline);
        assert_eq!(q.stats().dropped_full, 1);
        assert_eq!(q.stats().enqueued, 3);
        // The armed expiry still fires with the two held packets.
        match q.on_timer_expiry(generation, t(3200)) {
            TimerOutcome::Fired(b) => assert_eq!(b.packets.len(), 2),
            TimerOutcome::Stale => panic!("expiry unexpectedly stale"),
        }
    }

    #[test]
    #[should_panic(expected = "timer fired with empty occupancy")]
    fn expiry_on_empty_queue_is_a_contract_violation() {
        let mut q = RxQueue::new(config(3200, 0, 0)).unwrap();
        q.enqueue(pkt(0, 0, 505), t(0));
        let generation = q.timer_generation();
        match q.on_timer_expiry(generation, t(3200)) {
            TimerOutcome::Fired(_) => {}
            TimerOutcome::Stale => panic!("expiry unexpectedly stale"),
        }
        // Fire again with the post-fire generation and nothing queued.
        let _ = q.on_timer_expiry(q.timer_generation(), t(4000));
    }

    #[test]
    fn conservation_holds_with_drops_and_delivery() {
        let mut c = config(500, 0, 0);
        c.capacity = 3;
        let mut q = RxQueue::new(c).unwrap();
        for k in 0..5u64 {
            q.enqueue(pkt(k, k * 10, 505), t(k * 10));
        }
        let s = q.stats();
        assert_eq!(s.enqueued, 5);
        assert_eq!(s.dropped_full, 2);
        assert_eq!(
            s.enqueued,
            s.packets_delivered + s.dropped_full + s.dropped_unbind + q.occupancy() as u64
        );
    }

    // ------------------------------------------------------------------
    // Distribution map and NIC facade
    // ------------------------------------------------------------------

    fn bound_nic() -> Nic {
        let mut nic = Nic::new();
        nic.bind_flow(
            502,
            1,
            QueueConfig {
                queue_id: QueueId(0),
                capacity: 64,
                absolute_timer_us: 0,
                packet_timer_us: 0,
                counter_threshold: 0,
                owner_priority: 4,
            },
        )
        .unwrap();
        nic.bind_flow(
            505,
            2,
            QueueConfig {
                queue_id: QueueId(1),
                capacity: 64,
                absolute_timer_us: 3200,
                packet_timer_us: 0,
                counter_threshold: 0,
                owner_priority: 1,
            },
        )
        .unwrap();
        nic
    }

    #[test]
    fn classify_routes_bound_ports_and_drops_unmatched() {
        let mut nic = bound_nic();
        assert_eq!(nic.map().classify(502), Some(QueueId(0)));
        assert_eq!(nic.map().classify(505), Some(QueueId(1)));
        assert_eq!(nic.map().classify(9999), None);

        // Unmatched ingress counts at the NIC and raises no interrupt.
        assert!(matches!(
            nic.ingress(pkt(0, 0, 9999), t(0)),
            IngressOutcome::Unmatched
        ));
        assert_eq!(nic.dropped_unmatched(), 1);
        assert_eq!(nic.queue(QueueId(0)).unwrap().stats().enqueued, 0);
        assert_eq!(nic.queue(QueueId(1)).unwrap().stats().enqueued, 0);
    }

    #[test]
    fn duplicate_port_bind_is_rejected() {
        let mut nic = bound_nic();
        let err = nic
            .bind_flow(
                502,
                9,
                QueueConfig {
                    queue_id: QueueId(7),
                    capacity: 4,
                    absolute_timer_us: 0,
                    packet_timer_us: 0,
                    counter_threshold: 0,
                    owner_priority: 1,
                },
            )
            .unwrap_err();
        assert!(err.to_string().contains("already bound"), "{err}");
    }

    #[test]
    fn duplicate_queue_id_is_rejected() {
        let mut nic = bound_nic();
        let err = nic
            .bind_flow(
                600,
                9,
                QueueConfig {
                    queue_id: QueueId(0),
                    capacity: 4,
                    absolute_timer_us: 0,
                    packet_timer_us: 0,
                    counter_threshold: 0,
                    owner_priority: 1,
                },
            )
            .unwrap_err();
        assert!(err.to_string().contains("already in use"), "{err}");
    }

    #[test]
    fn unbind_discards_pending_packets_without_interrupt() {
        let mut nic = bound_nic();
        for k in 0..5u64 {
            nic.ingress(pkt(k, k, 505), t(k));
        }
        assert_eq!(nic.queue(QueueId(1)).unwrap().occupancy(), 5);
        nic.unbind_flow(505).unwrap();
        assert!(nic.queue(QueueId(1)).is_none());
        let snapshot = nic.stats_snapshot();
        let (stats, occupancy) = &snapshot[&QueueId(1)];
        assert_eq!(stats.dropped_unbind, 5);
        assert_eq!(stats.interrupts_raised, 0);
        assert_eq!(*occupancy, 0);
        // Packets for the now-unbound port drop as unmatched.
        assert!(matches!(
            nic.ingress(pkt(9, 100, 505), t(100)),
            IngressOutcome::Unmatched
        ));
        assert_eq!(nic.dropped_unmatched(), 1);
    }

    #[test]
    fn unbind_of_unknown_port_is_an_error() {
        let mut nic = bound_nic();
        assert!(nic.unbind_flow(700).is_err());
    }

    #[test]
    fn timer_expiry_after_unbind_is_stale() {
        let mut nic = bound_nic();
        let generation = match nic.ingress(pkt(0, 0, 505), t(0)) {
            IngressOutcome::TimersArmed { generation, .. } => generation,
            other => panic!("expected TimersArmed, got {other:?}"),
        };
        nic.unbind_flow(505).unwrap();
        assert!(matches!(
            nic.on_timer_expiry(QueueId(1), generation, t(3200)),
            TimerOutcome::Stale
        ));
    }

    #[test]
    fn live_queue_count_tracks_bound_sockets() {
        let mut nic = bound_nic();
        assert_eq!(nic.live_queue_count(), 2);
        assert_eq!(nic.map().len(), 2);
        nic.unbind_flow(502).unwrap();
        assert_eq!(nic.live_queue_count(), 1);
        assert_eq!(nic.map().len(), 1);
    }
}
