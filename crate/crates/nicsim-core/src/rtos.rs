//! Single-core fixed-priority RTOS model.
//!
//! The CPU hierarchy, top to bottom:
//!
//! 1. **ISR layer** — one interrupt service routine per NIC interrupt,
//!    costing `isr_overhead_us`. ISRs never nest: concurrent interrupts
//!    queue in FIFO order and serialize. A starting ISR preempts whatever
//!    runs below it.
//! 2. **Driver** — drains delivered batches from a backlog at
//!    `per_packet_cost_us` per packet, handing each packet to its task's
//!    mailbox as a job. Runs above all workers, below ISRs.
//! 3. **Workers** — fixed-priority preemptive tasks (higher number = higher
//!    priority). Each serves its mailbox FIFO, one job at a time, with
//!    `service_time_us` of CPU demand per job. Context switches are free.
//!
//! Each job records its response time (completion minus the originating
//! packet's NIC arrival) and its preemption time: the time it spent as its
//! task's head-of-mailbox job while the CPU ran ISRs, the driver, or
//! higher-priority work. For the highest-priority worker the latter term
//! is zero, so its preemption time is exactly the ISR + driver load
//! inflicted on it — the quantity the flood experiments track.
//!
//! The model runs on the shared event queue. Completion events carry a
//! generation counter; preempting or re-dispatching bumps the generation
//! so superseded completions pop as stale no-ops.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nic::{InterruptBatch, Packet};
use crate::sim::EventKind;
use crate::time::SimTime;

// ======================================================================
// Basic types
// ======================================================================

/// Worker task identifier.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct TaskId(pub u32);

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// CPU cost parameters for the interrupt path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    /// Fixed cost of one interrupt service routine.
    pub isr_overhead_us: u64,
    /// Driver cost per delivered packet.
    pub per_packet_cost_us: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            isr_overhead_us: 6,
            per_packet_cost_us: 1,
        }
    }
}

/// Static description of one worker task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskDescriptor {
    pub task_id: TaskId,
    /// Fixed priority; higher number runs first.
    pub priority: u8,
    /// Destination port whose packets become this task's jobs.
    pub bound_port: u16,
    /// CPU demand per job.
    pub service_time_us: u64,
}

/// One unit of work queued at a task: serve the payload of one packet.
#[derive(Debug, Clone, Copy)]
struct Job {
    packet_id: u64,
    packet_arrival: SimTime,
    release: SimTime,
    /// When this job reached the head of its task's mailbox; preemption
    /// time is measured from here so waiting behind same-task jobs does
    /// not count as preemption.
    became_head: Option<SimTime>,
    start: Option<SimTime>,
    remaining_service_us: u64,
}

/// Completed-job record, the unit the metrics layer consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobRecord {
    pub task_id: TaskId,
    pub packet_id: u64,
    pub release_us: u64,
    pub completion_us: u64,
    /// Completion minus the packet's NIC arrival time.
    pub response_us: u64,
    /// Time spent ready-at-head but displaced by ISRs, the driver, or
    /// higher-priority workers.
    pub preemption_us: u64,
}

/// What the CPU is executing right now.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Running {
    Idle,
    Isr,
    Driver,
    Task(TaskId),
}

/// An event the caller must schedule on the event queue.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleReq {
    pub time: SimTime,
    pub kind: EventKind,
}

// ======================================================================
// CPU
// ======================================================================

struct TaskState {
    desc: TaskDescriptor,
    mailbox: VecDeque<Job>,
    released: u64,
    completed: u64,
    total_preemption_us: u64,
    records: Vec<JobRecord>,
}

/// The single-core CPU with its ISR FIFO, driver backlog, and task set.
pub struct Cpu {
    cost: CostModel,
    running: Running,
    /// Invalidates pending DriverStep/JobCompletion events when bumped.
    run_generation: u64,
    /// Scheduled completion time of the current driver packet or job;
    /// preemption reads the remaining work off this.
    busy_until: SimTime,
    isr_fifo: VecDeque<InterruptBatch>,
    cur_isr: Option<InterruptBatch>,
    backlog: VecDeque<Packet>,
    cur_packet: Option<(Packet, u64)>,
    tasks: BTreeMap<TaskId, TaskState>,
    port_to_task: BTreeMap<u16, TaskId>,
    discarded_unbound: u64,
    isr_executions: u64,
    /// `(start, end)` of every ISR execution; recorded only when detail
    /// recording is on (tests, check mode).
    isr_spans: Option<Vec<(SimTime, SimTime)>>,
}

impl Cpu {
    pub fn new(cost: CostModel, descriptors: &[TaskDescriptor], record_detail: bool) -> Result<Self> {
        let mut tasks = BTreeMap::new();
        let mut port_to_task = BTreeMap::new();
        let mut seen_priorities = BTreeMap::new();
        for desc in descriptors {
            if desc.service_time_us == 0 {
                return Err(Error::validation(format!(
                    "task {}: service_time_us must be >= 1",
                    desc.task_id
                )));
            }
            if tasks.contains_key(&desc.task_id) {
                return Err(Error::validation(format!(
                    "duplicate task id {}",
                    desc.task_id
                )));
            }
            if let Some(other) = seen_priorities.insert(desc.priority, desc.task_id) {
                return Err(Error::validation(format!(
                    "tasks {other} and {} share priority {}",
                    desc.task_id, desc.priority
                )));
            }
            if let Some(other) = port_to_task.insert(desc.bound_port, desc.task_id) {
                return Err(Error::validation(format!(
                    "tasks {other} and {} are both bound to port {}",
                    desc.task_id, desc.bound_port
                )));
            }
            tasks.insert(
                desc.task_id,
                TaskState {
                    desc: *desc,
                    mailbox: VecDeque::new(),
                    released: 0,
                    completed: 0,
                    total_preemption_us: 0,
                    records: Vec::new(),
                },
            );
        }
        Ok(Cpu {
            cost,
            running: Running::Idle,
            run_generation: 0,
            busy_until: SimTime::ZERO,
            isr_fifo: VecDeque::new(),
            cur_isr: None,
            backlog: VecDeque::new(),
            cur_packet: None,
            tasks,
            port_to_task,
            discarded_unbound: 0,
            isr_executions: 0,
            isr_spans: record_detail.then(Vec::new),
        })
    }

    pub fn running(&self) -> Running {
        self.running
    }

    pub fn backlog_len(&self) -> usize {
        self.backlog.len()
    }

    pub fn mailbox_len(&self, task: TaskId) -> usize {
        self.tasks.get(&task).map_or(0, |t| t.mailbox.len())
    }

    pub fn isr_executions(&self) -> u64 {
        self.isr_executions
    }

    pub fn discarded_unbound(&self) -> u64 {
        self.discarded_unbound
    }

    pub fn isr_spans(&self) -> &[(SimTime, SimTime)] {
        self.isr_spans.as_deref().unwrap_or(&[])
    }

    pub fn records(&self, task: TaskId) -> &[JobRecord] {
        self.tasks
            .get(&task)
            .map(|t| t.records.as_slice())
            .unwrap_or(&[])
    }

    /// Removes the port-to-task binding, modeling the OS side of a socket
    /// unbind. Packets already past the NIC whose port no longer resolves
    /// are discarded by the driver (counted, no job created).
    pub fn unbind_port(&mut self, port: u16) {
        self.port_to_task.remove(&port);
    }

    /// True if any CPU-side work is pending or running.
    pub fn has_work(&self) -> bool {
        !matches!(self.running, Running::Idle)
            || !self.isr_fifo.is_empty()
            || self.cur_packet.is_some()
            || !self.backlog.is_empty()
            || self.tasks.values().any(|t| !t.mailbox.is_empty())
    }

    // ------------------------------------------------------------------
    // Event entry points
    // ------------------------------------------------------------------

    /// A NIC interrupt fires: its batch joins the ISR FIFO. Returns an
    /// `IsrStart` request unless an ISR is already running (in which case
    /// the pending batch is picked up at that ISR's end).
    pub fn on_interrupt(&mut self, batch: InterruptBatch, now: SimTime) -> Option<ScheduleReq> {
        self.isr_fifo.push_back(batch);
        if matches!(self.running, Running::Isr) {
            None
        } else {
            Some(ScheduleReq {
                time: now,
                kind: EventKind::IsrStart,
            })
        }
    }

    /// Begin the ISR at the FIFO head, preempting driver or worker.
    pub fn isr_start(&mut self, now: SimTime) -> Option<ScheduleReq> {
        if matches!(self.running, Running::Isr) {
            // A sibling IsrStart at the same microsecond already started one.
            return None;
        }
        let batch = self.isr_fifo.pop_front()?;
        self.preempt_current(now);
        self.running = Running::Isr;
        self.cur_isr = Some(batch);
        self.isr_executions += 1;
        let end = now + self.cost.isr_overhead_us;
        if let Some(spans) = &mut self.isr_spans {
            spans.push((now, end));
        }
        self.busy_until = end;
        Some(ScheduleReq {
            time: end,
            kind: EventKind::IsrEnd,
        })
    }

    /// The running ISR completes: its packets join the driver backlog.
    pub fn isr_end(&mut self, now: SimTime) -> Option<ScheduleReq> {
        debug_assert!(matches!(self.running, Running::Isr));
        let batch = self.cur_isr.take().expect("IsrEnd without a running ISR");
        self.backlog.extend(batch.packets);
        self.running = Running::Idle;
        self.dispatch(now)
    }

    /// The driver finishes its current packet: deliver it as a job.
    pub fn driver_step(&mut self, generation: u64, now: SimTime) -> Option<ScheduleReq> {
        if generation != self.run_generation {
            return None; // superseded by a preemption
        }
        debug_assert!(matches!(self.running, Running::Driver));
        let (packet, _) = self.cur_packet.take().expect("driver step without a packet");
        match self.port_to_task.get(&packet.dest_port) {
            Some(&task_id) => {
                let task = self.tasks.get_mut(&task_id).expect("port mapped to missing task");
                let head = task.mailbox.is_empty();
                task.mailbox.push_back(Job {
                    packet_id: packet.id,
                    packet_arrival: packet.arrival_time,
                    release: now,
                    became_head: head.then_some(now),
                    start: None,
                    remaining_service_us: task.desc.service_time_us,
                });
                task.released += 1;
            }
            None => self.discarded_unbound += 1,
        }
        self.running = Running::Idle;
        self.dispatch(now)
    }

    /// The running job of `task_id` finishes.
    pub fn job_completion(&mut self, task_id: TaskId, generation: u64, now: SimTime) -> Option<ScheduleReq> {
        if generation != self.run_generation {
            return None; // superseded by a preemption
        }
        debug_assert_eq!(self.running, Running::Task(task_id));
        let task = self.tasks.get_mut(&task_id).expect("completion for unknown task");
        let job = task.mailbox.pop_front().expect("completion with empty mailbox");
        let became_head = job.became_head.expect("completed job never became head");
        let held_for = now.since(became_head);
        debug_assert!(held_for >= task.desc.service_time_us);
        let record = JobRecord {
            task_id,
            packet_id: job.packet_id,
            release_us: job.release.as_us(),
            completion_us: now.as_us(),
            response_us: now.since(job.packet_arrival),
            preemption_us: held_for - task.desc.service_time_us,
        };
        task.total_preemption_us += record.preemption_us;
        task.completed += 1;
        task.records.push(record);
        if let Some(next) = task.mailbox.front_mut() {
            next.became_head = Some(now);
        }
        self.running = Running::Idle;
        self.dispatch(now)
    }

    // ------------------------------------------------------------------
    // Dispatcher
    // ------------------------------------------------------------------

    /// Saves the remaining work of the current activity and bumps the run
    /// generation so its pending completion event goes stale.
    fn preempt_current(&mut self, now: SimTime) {
        match self.running {
            Running::Driver => {
                let (_, remaining) = self
                    .cur_packet
                    .as_mut()
                    .expect("driver running without a packet");
                *remaining = self.busy_until.since(now);
            }
            Running::Task(task_id) => {
                let task = self.tasks.get_mut(&task_id).expect("running unknown task");
                let job = task.mailbox.front_mut().expect("running task with empty mailbox");
                job.remaining_service_us = self.busy_until.since(now);
            }
            Running::Idle => {}
            Running::Isr => unreachable!("ISRs are never preempted"),
        }
        self.run_generation += 1;
        self.running = Running::Idle;
    }

    /// Re-establishes the scheduling invariant: pending ISR first, then
    /// driver while the backlog is non-empty, then the highest-priority
    /// ready worker. Returns the completion event of whatever was started.
    fn dispatch(&mut self, now: SimTime) -> Option<ScheduleReq> {
        if matches!(self.running, Running::Isr) {
            return None;
        }
        if !self.isr_fifo.is_empty() {
            return Some(ScheduleReq {
                time: now,
                kind: EventKind::IsrStart,
            });
        }

        if self.cur_packet.is_some() || !self.backlog.is_empty() {
            if matches!(self.running, Running::Driver) {
                return None; // live DriverStep already pending
            }
            if matches!(self.running, Running::Task(_)) {
                self.preempt_current(now);
            }
            if self.cur_packet.is_none() {
                let packet = self.backlog.pop_front().expect("backlog emptied unexpectedly");
                self.cur_packet = Some((packet, self.cost.per_packet_cost_us));
            }
            let remaining = self.cur_packet.as_ref().map(|(_, r)| *r).expect("no packet");
            self.running = Running::Driver;
            self.run_generation += 1;
            self.busy_until = now + remaining;
            return Some(ScheduleReq {
                time: self.busy_until,
                kind: EventKind::DriverStep {
                    generation: self.run_generation,
                },
            });
        }

        let ready_best = self
            .tasks
            .values()
            .filter(|t| !t.mailbox.is_empty())
            .max_by_key(|t| t.desc.priority)
            .map(|t| t.desc.task_id);
        if let Some(best) = ready_best {
            if self.running == Running::Task(best) {
                return None;
            }
            if matches!(self.running, Running::Task(_)) {
                self.preempt_current(now);
            }
            let task = self.tasks.get_mut(&best).expect("best task vanished");
            let job = task.mailbox.front_mut().expect("ready task with empty mailbox");
            if job.start.is_none() {
                job.start = Some(now);
            }
            let remaining = job.remaining_service_us;
            self.running = Running::Task(best);
            self.run_generation += 1;
            self.busy_until = now + remaining;
            return Some(ScheduleReq {
                time: self.busy_until,
                kind: EventKind::JobCompletion {
                    task_id: best,
                    generation: self.run_generation,
                },
            });
        }

        self.running = Running::Idle;
        None
    }

    // ------------------------------------------------------------------
    // Harvest
    // ------------------------------------------------------------------

    /// Final per-task reports, sorted by task id.
    pub fn into_task_reports(self) -> Vec<TaskReport> {
        self.tasks
            .into_values()
            .map(|t| TaskReport {
                task_id: t.desc.task_id,
                priority: t.desc.priority,
                port: t.desc.bound_port,
                service_time_us: t.desc.service_time_us,
                jobs_released: t.released,
                jobs_completed: t.completed,
                total_preemption_us: t.total_preemption_us,
                jobs: t.records,
            })
            .collect()
    }
}

/// Per-task summary over a run, with the full completed-job log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task_id: TaskId,
    pub priority: u8,
    pub port: u16,
    pub service_time_us: u64,
    pub jobs_released: u64,
    pub jobs_completed: u64,
    pub total_preemption_us: u64,
    pub jobs: Vec<JobRecord>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nic::{InterruptCause, QueueId, SourceTag};
    use crate::sim::EventQueue;

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

    fn batch(at: u64, packets: Vec<Packet>) -> InterruptBatch {
        InterruptBatch {
            queue_id: QueueId(0),
            fire_time: t(at),
            cause: InterruptCause::Immediate,
            packets,
        }
    }

    fn worker(id: u32, priority: u8, port: u16, service: u64) -> TaskDescriptor {
        TaskDescriptor {
            task_id: TaskId(id),
            priority,
            bound_port: port,
            service_time_us: service,
        }
    }

    /// Drives CPU-side events until the horizon. Interrupts are injected
    /// beforehand or between phases by the test itself.
    fn pump(cpu: &mut Cpu, ev: &mut EventQueue, horizon: u64) {
        ev.run_until(t(horizon), |ev, e| {
            let req = match e.kind {
                EventKind::IsrStart => cpu.isr_start(ev.clock()),
                EventKind::IsrEnd => cpu.isr_end(ev.clock()),
                EventKind::DriverStep { generation } => cpu.driver_step(generation, ev.clock()),
                EventKind::JobCompletion { task_id, generation } => {
                    cpu.job_completion(task_id, generation, ev.clock())
                }
                _ => None,
            };
            if let Some(r) = req {
                ev.schedule(r.time, r.kind);
            }
        });
    }

    fn inject(cpu: &mut Cpu, ev: &mut EventQueue, b: InterruptBatch, now: u64) {
        if let Some(r) = cpu.on_interrupt(b, t(now)) {
            ev.schedule(r.time, r.kind);
        }
    }

    #[test]
    fn validation_rejects_duplicate_priorities_ports_and_zero_service() {
        let base = [worker(1, 4, 502, 300), worker(2, 4, 503, 300)];
        assert!(Cpu::new(CostModel::default(), &base, false).is_err());
        let ports = [worker(1, 4, 502, 300), worker(2, 3, 502, 300)];
        assert!(Cpu::new(CostModel::default(), &ports, false).is_err());
        let service = [worker(1, 4, 502, 0)];
        assert!(Cpu::new(CostModel::default(), &service, false).is_err());
    }

    /// Frozen end-to-end identity on an idle system with default costs:
    /// arrival 0 -> ISR [0,6) -> driver [6,7) -> job [7,307).
    /// Response = isr + driver + service = 307, preemption = 0.
    #[test]
    fn idle_system_response_is_isr_plus_driver_plus_service() {
        let mut cpu = Cpu::new(
            CostModel::default(),
            &[worker(1, 4, 502, 300)],
            true,
        )
        .unwrap();
        let mut ev = EventQueue::new();
        inject(&mut cpu, &mut ev, batch(0, vec![pkt(0, 0, 502)]), 0);
        pump(&mut cpu, &mut ev, 1000);
        assert_eq!(cpu.isr_spans(), &[(t(0), t(6))]);
        let records = cpu.records(TaskId(1));
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].release_us, 7);
        assert_eq!(records[0].completion_us, 307);
        assert_eq!(records[0].response_us, 307);
        assert_eq!(records[0].preemption_us, 0);
        assert_eq!(cpu.running(), Running::Idle);
        assert!(!cpu.has_work());
    }

    /// Two interrupts at t = 0 and t = 3 must serialize: [0,6) then [6,12).
    #[test]
    fn concurrent_interrupts_serialize_in_fifo_order() {
        let mut cpu = Cpu::new(CostModel::default(), &[worker(1, 4, 502, 10)], true).unwrap();
        let mut ev = EventQueue::new();
        inject(&mut cpu, &mut ev, batch(0, vec![pkt(0, 0, 502)]), 0);
        ev.run_until(t(3), |ev, e| {
            let req = match e.kind {
                EventKind::IsrStart => cpu.isr_start(ev.clock()),
                EventKind::IsrEnd => cpu.isr_end(ev.clock()),
                EventKind::DriverStep { generation } => cpu.driver_step(generation, ev.clock()),
                EventKind::JobCompletion { task_id, generation } => {
                    cpu.job_completion(task_id, generation, ev.clock())
                }
                _ => None,
            };
            if let Some(r) = req {
                ev.schedule(r.time, r.kind);
            }
        });
        inject(&mut cpu, &mut ev, batch(3, vec![pkt(1, 3, 502)]), 3);
        pump(&mut cpu, &mut ev, 1000);
        assert_eq!(cpu.isr_spans(), &[(t(0), t(6)), (t(6), t(12))]);
        assert_eq!(cpu.isr_executions(), 2);
    }

    /// A 17-packet batch: ISR [0,6), then the driver spends exactly 17us
    /// emitting 17 jobs (releases at 7, 8, ..., 23).
    #[test]
    fn driver_emits_one_job_per_packet_at_per_packet_cost() {
        let mut cpu = Cpu::new(CostModel::default(), &[worker(1, 1, 505, 30000)], false).unwrap();
        let mut ev = EventQueue::new();
        let packets: Vec<Packet> = (0..17).map(|k| pkt(k, 0, 505)).collect();
        inject(&mut cpu, &mut ev, batch(0, packets), 0);
        // Stop before any job completes; inspect releases via mailbox.
        pump(&mut cpu, &mut ev, 25);
        assert_eq!(cpu.mailbox_len(TaskId(1)), 17);
        // Releases are visible once jobs complete; finish the run.
        pump(&mut cpu, &mut ev, 1_000_000);
        let releases: Vec<u64> = cpu.records(TaskId(1)).iter().map(|r| r.release_us).collect();
        let expected: Vec<u64> = (7..=23).collect();
        assert_eq!(releases, expected);
    }

    /// Frozen timeline: 17-packet batch at t=0, a second 1-packet interrupt
    /// at t=11 pauses the driver for 6us mid-stream. Deliveries resume
    /// exactly where they left off.
    #[test]
    fn isr_preempts_driver_and_driver_resumes() {
        let mut cpu = Cpu::new(CostModel::default(), &[worker(1, 1, 505, 30000)], true).unwrap();
        let mut ev = EventQueue::new();
        let packets: Vec<Packet> = (0..17).map(|k| pkt(k, 0, 505)).collect();
        inject(&mut cpu, &mut ev, batch(0, packets), 0);
        pump(&mut cpu, &mut ev, 10); // driver mid-stream: released 7,8,9,10
        inject(&mut cpu, &mut ev, batch(11, vec![pkt(99, 11, 505)]), 11);
        pump(&mut cpu, &mut ev, 1_000_000);
        assert_eq!(cpu.isr_spans(), &[(t(0), t(6)), (t(11), t(17))]);
        let releases: Vec<u64> = cpu.records(TaskId(1)).iter().map(|r| r.release_us).collect();
        // 4 deliveries before the ISR, the paused packet lands at 17, the
        // rest follow back-to-back, then the second batch's packet.
        let mut expected = vec![7, 8, 9, 10, 17];
        expected.extend(18..=29); // packets 6..17 of the first batch
        expected.push(30); // packet of the second batch
        assert_eq!(releases, expected);
    }

    /// A worker job preempted by ISR + driver keeps its remaining service;
    /// its preemption time is exactly the inflicted ISR + driver time.
    #[test]
    fn preempted_job_resumes_with_preserved_remaining_service() {
        let workers = [worker(1, 4, 502, 50), worker(2, 1, 505, 40)];
        let mut cpu = Cpu::new(CostModel::default(), &workers, false).unwrap();
        let mut ev = EventQueue::new();
        inject(&mut cpu, &mut ev, batch(0, vec![pkt(0, 0, 502)]), 0);
        pump(&mut cpu, &mut ev, 20); // job of task 1 runs [7, 57), now at 20
        assert_eq!(cpu.running(), Running::Task(TaskId(1)));
        inject(&mut cpu, &mut ev, batch(20, vec![pkt(1, 20, 505)]), 20);
        pump(&mut cpu, &mut ev, 1_000_000);
        let r1 = cpu.records(TaskId(1));
        assert_eq!(r1.len(), 1);
        // ISR [20,26) + driver [26,27) displace the job by 7us.
        assert_eq!(r1[0].completion_us, 64);
        assert_eq!(r1[0].preemption_us, 7);
        // The low-priority job then runs to completion.
        let r2 = cpu.records(TaskId(2));
        assert_eq!(r2.len(), 1);
        assert_eq!(r2[0].release_us, 27);
        assert_eq!(r2[0].completion_us, 104); // waits for task 1 until 64
        assert_eq!(r2[0].preemption_us, 104 - 27 - 40);
    }

    /// Higher-priority release preempts a running lower-priority job
    /// immediately; the lower job's accounting includes the displacement.
    #[test]
    fn higher_priority_worker_preempts_lower_immediately() {
        let workers = [worker(1, 4, 502, 100), worker(2, 1, 505, 100)];
        let mut cpu = Cpu::new(CostModel::default(), &workers, false).unwrap();
        let mut ev = EventQueue::new();
        inject(&mut cpu, &mut ev, batch(0, vec![pkt(0, 0, 505)]), 0);
        pump(&mut cpu, &mut ev, 30); // low-prio job runs from 7
        assert_eq!(cpu.running(), Running::Task(TaskId(2)));
        inject(&mut cpu, &mut ev, batch(30, vec![pkt(1, 30, 502)]), 30);
        pump(&mut cpu, &mut ev, 1_000_000);
        let high = cpu.records(TaskId(1));
        // ISR [30,36), driver [36,37), then the high job runs [37,137).
        assert_eq!(high[0].release_us, 37);
        assert_eq!(high[0].completion_us, 137);
        assert_eq!(high[0].preemption_us, 0);
        let low = cpu.records(TaskId(2));
        assert_eq!(low[0].completion_us, 214); // 7 + 100 service + 107 displaced
        assert_eq!(low[0].preemption_us, 107);
    }

    /// Same-task jobs queue FIFO; waiting behind a sibling is not
    /// preemption, and the successor's head time starts at the sibling's
    /// completion.
    #[test]
    fn mailbox_queueing_is_not_counted_as_preemption() {
        let mut cpu = Cpu::new(CostModel::default(), &[worker(1, 4, 502, 100)], false).unwrap();
        let mut ev = EventQueue::new();
        inject(
            &mut cpu,
            &mut ev,
            batch(0, vec![pkt(0, 0, 502), pkt(1, 0, 502)]),
            0,
        );
        pump(&mut cpu, &mut ev, 1_000_000);
        let records = cpu.records(TaskId(1));
        assert_eq!(records.len(), 2);
        // First job: released 7, runs [8? no:] driver delivers p0 at 7, p1 at 8.
        // Job 1 starts at 7... the driver still holds the CPU until 8, so the
        // job actually starts at 8: preemption = 1us of driver time.
        assert_eq!(records[0].release_us, 7);
        assert_eq!(records[0].completion_us, 108);
        assert_eq!(records[0].preemption_us, 1);
        // Second job became head at 108, runs immediately: zero preemption.
        assert_eq!(records[1].release_us, 8);
        assert_eq!(records[1].completion_us, 208);
        assert_eq!(records[1].preemption_us, 0);
        assert_eq!(records[1].response_us, 208);
    }

    #[test]
    fn packets_for_unbound_ports_are_discarded_by_the_driver() {
        let mut cpu = Cpu::new(CostModel::default(), &[worker(1, 4, 502, 100)], false).unwrap();
        let mut ev = EventQueue::new();
        inject(
            &mut cpu,
            &mut ev,
            batch(0, vec![pkt(0, 0, 502), pkt(1, 0, 777)]),
            0,
        );
        pump(&mut cpu, &mut ev, 1_000_000);
        assert_eq!(cpu.discarded_unbound(), 1);
        assert_eq!(cpu.records(TaskId(1)).len(), 1);
    }

    #[test]
    fn unbind_port_discards_in_flight_deliveries() {
        let mut cpu = Cpu::new(CostModel::default(), &[worker(1, 4, 502, 100)], false).unwrap();
        let mut ev = EventQueue::new();
        inject(&mut cpu, &mut ev, batch(0, vec![pkt(0, 0, 502)]), 0);
        pump(&mut cpu, &mut ev, 3); // ISR still running
        cpu.unbind_port(502);
        pump(&mut cpu, &mut ev, 1_000_000);
        assert_eq!(cpu.discarded_unbound(), 1);
        assert!(cpu.records(TaskId(1)).is_empty());
    }

    #[test]
    fn reports_sum_released_and_completed() {
        let mut cpu = Cpu::new(CostModel::default(), &[worker(1, 4, 502, 100)], false).unwrap();
        let mut ev = EventQueue::new();
        inject(
            &mut cpu,
            &mut ev,
            batch(0, vec![pkt(0, 0, 502), pkt(1, 0, 502), pkt(2, 0, 502)]),
            0,
        );
        pump(&mut cpu, &mut ev, 250); // not all complete
        let reports = cpu.into_task_reports();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].jobs_released, 3);
        assert!(reports[0].jobs_completed < 3);
        assert_eq!(reports[0].jobs.len(), reports[0].jobs_completed as usize);
    }
}
