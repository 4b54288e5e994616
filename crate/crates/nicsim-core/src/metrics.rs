//! Run statistics: binned time series, per-queue and per-task totals, the
//! derived flood metrics (interrupt ratio, additional runtime, deadline
//! share), and the CSV/JSON export format.
//!
//! Export is deterministic: iteration orders are fixed (queue id, task id,
//! completion time), integers are printed verbatim, and every fractional
//! value is printed with exactly six decimal digits, so identical runs
//! produce byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nic::{InterruptCause, QueueId, QueueStats};
use crate::rtos::{JobRecord, TaskId, TaskReport};

/// Default time-series bin width: 100 ms.
pub const DEFAULT_BIN_WIDTH_US: u64 = 100_000;

// ======================================================================
// Binned time series
// ======================================================================

/// Per-queue packet and interrupt counts over fixed-width time bins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueSeries {
    pub packets: Vec<u64>,
    pub interrupts: Vec<u64>,
}

/// The run's binned activity. Bin `i` covers `[i*width, (i+1)*width)`;
/// an event exactly at the horizon is clamped into the last bin so the
/// series always accounts for every recorded event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinSeries {
    bin_width_us: u64,
    nbins: usize,
    queues: BTreeMap<QueueId, QueueSeries>,
}

impl BinSeries {
    pub fn new(horizon_us: u64, bin_width_us: u64) -> BinSeries {
        assert!(bin_width_us >= 1, "bin width must be at least 1us");
        let nbins = (horizon_us.div_ceil(bin_width_us)).max(1) as usize;
        BinSeries {
            bin_width_us,
            nbins,
            queues: BTreeMap::new(),
        }
    }

    pub fn register_queue(&mut self, queue_id: QueueId) {
        self.queues.entry(queue_id).or_insert_with(|| QueueSeries {
            packets: vec![0; self.nbins],
            interrupts: vec![0; self.nbins],
        });
    }

    fn bin_for(&self, t_us: u64) -> usize {
        ((t_us / self.bin_width_us) as usize).min(self.nbins - 1)
    }

    /// Count a packet enqueued (or tail-dropped) at `t_us` on `queue_id`.
    pub fn record_packet(&mut self, queue_id: QueueId, t_us: u64) {
        let bin = self.bin_for(t_us);
        let q = self
            .queues
            .get_mut(&queue_id)
            .expect("record_packet on unregistered queue (contract violation)");
        q.packets[bin] += 1;
    }

    /// Count an interrupt fired at `t_us` on `queue_id`.
    pub fn record_interrupt(&mut self, queue_id: QueueId, t_us: u64) {
        let bin = self.bin_for(t_us);
        let q = self
            .queues
            .get_mut(&queue_id)
            .expect("record_interrupt on unregistered queue (contract violation)");
        q.interrupts[bin] += 1;
    }

    pub fn bin_width_us(&self) -> u64 {
        self.bin_width_us
    }

    pub fn nbins(&self) -> usize {
        self.nbins
    }

    pub fn queues(&self) -> impl Iterator<Item = (&QueueId, &QueueSeries)> {
        self.queues.iter()
    }

    pub fn queue(&self, queue_id: QueueId) -> Option<&QueueSeries> {
        self.queues.get(&queue_id)
    }
}

// ======================================================================
// Run statistics
// ======================================================================

/// One interrupt as the engine observed it; recorded only when batch
/// recording is enabled (oracle comparisons, debugging).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub queue_id: QueueId,
    pub fire_time_us: u64,
    pub cause: InterruptCause,
    pub packet_count: usize,
}

/// Final accounting for one RX queue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueReport {
    pub queue_id: QueueId,
    pub dest_port: u16,
    pub priority: u8,
    pub stats: QueueStats,
    /// Packets still held when the run ended.
    pub final_occupancy: usize,
}

impl QueueReport {
    /// enqueued == delivered + dropped_full + dropped_unbind + still-held.
    pub fn conservation_holds(&self) -> bool {
        self.stats.enqueued
            == self.stats.packets_delivered
                + self.stats.dropped_full
                + self.stats.dropped_unbind
                + self.final_occupancy as u64
    }
}

/// Everything a finished run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub label: String,
    pub seed: u64,
    pub horizon_us: u64,
    /// Queue reports in queue-id order.
    pub queues: Vec<QueueReport>,
    /// Task reports in task-id order.
    pub tasks: Vec<TaskReport>,
    /// Packets the NIC discarded for lack of a matching flow rule.
    pub dropped_unmatched: u64,
    /// Jobs the driver discarded because their port was unbound in flight.
    pub driver_discarded_unbound: u64,
    pub isr_executions: u64,
    pub series: BinSeries,
    /// Present only when batch recording was requested.
    pub batches: Option<Vec<BatchRecord>>,
}

impl RunStats {
    pub fn queue_by_port(&self, port: u16) -> Option<&QueueReport> {
        self.queues.iter().find(|q| q.dest_port == port)
    }

    pub fn task(&self, task_id: TaskId) -> Option<&TaskReport> {
        self.tasks.iter().find(|t| t.task_id == task_id)
    }

    /// The highest-priority task (the scenario's critical worker).
    pub fn critical_task(&self) -> Option<&TaskReport> {
        self.tasks.iter().max_by_key(|t| t.priority)
    }

    pub fn total_packets(&self) -> u64 {
        self.queues.iter().map(|q| q.stats.enqueued).sum()
    }

    pub fn total_interrupts(&self) -> u64 {
        self.queues.iter().map(|q| q.stats.interrupts_raised).sum()
    }

    /// Check packet conservation on every queue; returns a description of
    /// the first violation, if any.
    pub fn check_conservation(&self) -> std::result::Result<(), String> {
        for q in &self.queues {
            if !q.conservation_holds() {
                return Err(format!(
                    "queue {} (port {}): enqueued {} != delivered {} + dropped_full {} \
                     + dropped_unbind {} + occupancy {}",
                    q.queue_id,
                    q.dest_port,
                    q.stats.enqueued,
                    q.stats.packets_delivered,
                    q.stats.dropped_full,
                    q.stats.dropped_unbind,
                    q.final_occupancy
                ));
            }
        }
        Ok(())
    }
}

// ======================================================================
// Derived metrics
// ======================================================================

/// interrupts / packets over the given queues. `None` when no packets
/// were offered (the 0/0 case has no meaningful ratio).
pub fn interrupt_ratio<'a>(queues: impl IntoIterator<Item = &'a QueueReport>) -> Option<f64> {
    let (mut packets, mut interrupts) = (0u64, 0u64);
    for q in queues {
        packets += q.stats.enqueued;
        interrupts += q.stats.interrupts_raised;
    }
    if packets == 0 {
        // Interrupts without packets cannot happen (every batch carries at
        // least one packet), so this is exactly the 0/0 case.
        debug_assert_eq!(interrupts, 0);
        return None;
    }
    Some(interrupts as f64 / packets as f64)
}

/// Extra CPU time stolen from `task` relative to the same task in
/// `baseline` (same scenario without flood streams). Signed: moderation
/// can in principle reduce totals below an arbitrary baseline.
pub fn additional_runtime(stats: &RunStats, baseline: &RunStats, task_id: TaskId) -> Result<i64> {
    let cur = stats
        .task(task_id)
        .ok_or_else(|| Error::validation(format!("no task {task_id} in run")))?;
    let base = baseline
        .task(task_id)
        .ok_or_else(|| Error::validation(format!("no task {task_id} in baseline")))?;
    Ok(cur.total_preemption_us as i64 - base.total_preemption_us as i64)
}

/// Median of a sample; averages the two middle elements for even sizes.
pub fn median_us(values: &[u64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    })
}

fn completed_responses(report: &TaskReport) -> Vec<u64> {
    report.jobs.iter().map(|j| j.response_us).collect()
}

/// Fraction of `task`'s completed jobs whose response time meets the
/// deadline `median(baseline responses) * (1 + grace)`. `grace` must lie
/// in [0.01, 0.5]. Jobs still queued or running at the horizon are
/// excluded (only completed jobs count).
pub fn deadline_share(
    stats: &RunStats,
    baseline: &RunStats,
    task_id: TaskId,
    grace: f64,
) -> Result<f64> {
    if !(0.01..=0.5).contains(&grace) {
        return Err(Error::validation(format!(
            "grace must be in [0.01, 0.5], got {grace}"
        )));
    }
    let base = baseline
        .task(task_id)
        .ok_or_else(|| Error::validation(format!("no task {task_id} in baseline")))?;
    let base_responses = completed_responses(base);
    let med = median_us(&base_responses).ok_or_else(|| {
        Error::validation(format!(
            "task {task_id} completed no baseline jobs; deadline undefined"
        ))
    })?;
    let cur = stats
        .task(task_id)
        .ok_or_else(|| Error::validation(format!("no task {task_id} in run")))?;
    let responses = completed_responses(cur);
    if responses.is_empty() {
        return Err(Error::validation(format!(
            "task {task_id} completed no jobs in this run; share undefined"
        )));
    }
    let deadline = med * (1.0 + grace);
    Ok(share_meeting_deadline(&responses, deadline).expect("responses checked non-empty"))
}

/// Fraction of `responses` at or under `deadline_us`; `None` for an empty
/// sample. A tiny epsilon keeps a response exactly at an integral deadline
/// from being lost to floating-point representation.
pub fn share_meeting_deadline(responses: &[u64], deadline_us: f64) -> Option<f64> {
    if responses.is_empty() {
        return None;
    }
    let met = responses
        .iter()
        .filter(|&&r| r as f64 <= deadline_us + 1e-9)
        .count();
    Some(met as f64 / responses.len() as f64)
}

// ======================================================================
// Export
// ======================================================================

/// Format a fraction with exactly six decimal digits.
pub fn fmt_frac(x: f64) -> String {
    format!("{x:.6}")
}

fn push_line(buf: &mut String, line: &str) {
    buf.push_str(line);
    buf.push('\n');
}

fn timeseries_csv(stats: &RunStats) -> String {
    let mut out = String::new();
    push_line(&mut out, "bin_start_us,queue_id,packets,interrupts");
    let width = stats.series.bin_width_us();
    for bin in 0..stats.series.nbins() {
        for (qid, series) in stats.series.queues() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                bin as u64 * width,
                qid.0,
                series.packets[bin],
                series.interrupts[bin]
            );
        }
    }
    out
}

fn jobs_csv(stats: &RunStats) -> String {
    let mut records: Vec<&JobRecord> = stats.tasks.iter().flat_map(|t| t.jobs.iter()).collect();
    records.sort_by_key(|j| (j.completion_us, j.task_id.0, j.packet_id));
    let mut out = String::new();
    push_line(
        &mut out,
        "task_id,packet_id,release_us,completion_us,response_us,preemption_us",
    );
    for j in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            j.task_id.0, j.packet_id, j.release_us, j.completion_us, j.response_us, j.preemption_us
        );
    }
    out
}

fn summary_csv(stats: &RunStats) -> String {
    let mut out = String::new();
    push_line(
        &mut out,
        "kind,id,port,priority,packets,interrupts,delivered,dropped_full,dropped_unbind,\
         max_residency_us,final_occupancy,jobs_released,jobs_completed,total_preemption_us,\
         median_response_us,dropped_unmatched,driver_discarded_unbound,isr_executions",
    );
    for q in &stats.queues {
        let _ = writeln!(
            out,
            "queue,{},{},{},{},{},{},{},{},{},{},,,,,,,",
            q.queue_id.0,
            q.dest_port,
            q.priority,
            q.stats.enqueued,
            q.stats.interrupts_raised,
            q.stats.packets_delivered,
            q.stats.dropped_full,
            q.stats.dropped_unbind,
            q.stats.max_residency_us,
            q.final_occupancy
        );
    }
    for t in &stats.tasks {
        let responses = completed_responses(t);
        let median = median_us(&responses).map(fmt_frac).unwrap_or_default();
        let _ = writeln!(
            out,
            "task,{},{},{},,,,,,,,{},{},{},{},,,",
            t.task_id.0,
            t.port,
            t.priority,
            t.jobs_released,
            t.jobs_completed,
            t.total_preemption_us,
            median
        );
    }
    let _ = writeln!(
        out,
        "nic,,,,,,,,,,,,,,,{},{},{}",
        stats.dropped_unmatched, stats.driver_discarded_unbound, stats.isr_executions
    );
    out
}

/// Write `timeseries.csv`, `jobs.csv`, `summary.csv`, and `run.json` into
/// `out_dir` (created if missing). `scenario_echo` is embedded verbatim in
/// `run.json` so a result directory is self-describing.
pub fn export_csv(stats: &RunStats, scenario_echo: &serde_json::Value, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let write = |name: &str, content: String| -> Result<()> {
        let path = out_dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))
    };
    write("timeseries.csv", timeseries_csv(stats))?;
    write("jobs.csv", jobs_csv(stats))?;
    write("summary.csv", summary_csv(stats))?;

    let run_json = serde_json::json!({
        "label": stats.label,
        "seed": stats.seed,
        "horizon_us": stats.horizon_us,
        "scenario": scenario_echo,
    });
    let mut text = serde_json::to_string_pretty(&run_json)?;
    text.push('\n');
    write("run.json", text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn queue_report(id: u32, port: u16, enqueued: u64, interrupts: u64) -> QueueReport {
        QueueReport {
            queue_id: QueueId(id),
            dest_port: port,
            priority: 1,
            stats: QueueStats {
                enqueued,
                packets_delivered: enqueued,
                dropped_full: 0,
                dropped_unbind: 0,
                interrupts_raised: interrupts,
                max_residency_us: 0,
            },
            final_occupancy: 0,
        }
    }

    fn task_report(id: u32, priority: u8, responses: &[u64], preemption: u64) -> TaskReport {
        TaskReport {
            task_id: TaskId(id),
            priority,
            port: 500 + id as u16,
            service_time_us: 300,
            jobs_released: responses.len() as u64,
            jobs_completed: responses.len() as u64,
            total_preemption_us: preemption,
            jobs: responses
                .iter()
                .enumerate()
                .map(|(k, &r)| JobRecord {
                    task_id: TaskId(id),
                    packet_id: k as u64,
                    release_us: k as u64 * 1000,
                    completion_us: k as u64 * 1000 + r,
                    response_us: r,
                    preemption_us: 0,
                })
                .collect(),
        }
    }

    fn run_stats(queues: Vec<QueueReport>, tasks: Vec<TaskReport>) -> RunStats {
        let mut series = BinSeries::new(1_000_000, DEFAULT_BIN_WIDTH_US);
        for q in &queues {
            series.register_queue(q.queue_id);
        }
        RunStats {
            label: "test".into(),
            seed: 0,
            horizon_us: 1_000_000,
            queues,
            tasks,
            dropped_unmatched: 0,
            driver_discarded_unbound: 0,
            isr_executions: 0,
            series,
            batches: None,
        }
    }

    #[test]
    fn ratio_of_immediate_queue_is_exactly_one() {
        let stats = run_stats(vec![queue_report(0, 502, 1000, 1000)], vec![]);
        assert_eq!(interrupt_ratio(&stats.queues), Some(1.0));
    }

    #[test]
    fn ratio_without_packets_is_absent() {
        let stats = run_stats(vec![queue_report(0, 502, 0, 0)], vec![]);
        assert_eq!(interrupt_ratio(&stats.queues), None);
    }

    #[test]
    fn ratio_aggregates_across_queues() {
        let stats = run_stats(
            vec![queue_report(0, 502, 100, 100), queue_report(1, 505, 300, 20)],
            vec![],
        );
        assert_eq!(interrupt_ratio(&stats.queues), Some(120.0 / 400.0));
        let flood_only = interrupt_ratio(stats.queue_by_port(505)).unwrap();
        assert!((flood_only - 20.0 / 300.0).abs() < 1e-12);
    }

    #[test]
    fn additional_runtime_is_signed_difference() {
        let run = run_stats(vec![], vec![task_report(1, 4, &[300; 4], 5_000)]);
        let base = run_stats(vec![], vec![task_report(1, 4, &[300; 4], 1_200)]);
        assert_eq!(additional_runtime(&run, &base, TaskId(1)).unwrap(), 3_800);
        assert_eq!(additional_runtime(&base, &run, TaskId(1)).unwrap(), -3_800);
        assert!(additional_runtime(&run, &base, TaskId(9)).is_err());
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median_us(&[]), None);
        assert_eq!(median_us(&[307]), Some(307.0));
        assert_eq!(median_us(&[300, 310]), Some(305.0));
        assert_eq!(median_us(&[5, 1, 3]), Some(3.0));
    }

    #[test]
    fn deadline_share_counts_only_within_grace() {
        // Baseline median 300 -> deadline at 5% grace is 315.
        let base = run_stats(vec![], vec![task_report(1, 4, &[300; 9], 0)]);
        let run = run_stats(
            vec![],
            vec![task_report(1, 4, &[300, 307, 315, 316, 400, 500, 300, 314, 320, 310], 0)],
        );
        let share = deadline_share(&run, &base, TaskId(1), 0.05).unwrap();
        // Met: 300, 307, 315, 300, 314, 310 -> 6 of 10.
        assert!((share - 0.6).abs() < 1e-12, "share {share}");
        // 10% grace -> deadline 330: adds 316 and 320 -> 8 of 10.
        let share10 = deadline_share(&run, &base, TaskId(1), 0.10).unwrap();
        assert!((share10 - 0.8).abs() < 1e-12, "share {share10}");
    }

    #[test]
    fn deadline_share_rejects_out_of_range_grace_and_empty_tasks() {
        let base = run_stats(vec![], vec![task_report(1, 4, &[300; 3], 0)]);
        let run = run_stats(vec![], vec![task_report(1, 4, &[300; 3], 0)]);
        assert!(deadline_share(&run, &base, TaskId(1), 0.005).is_err());
        assert!(deadline_share(&run, &base, TaskId(1), 0.51).is_err());
        let empty = run_stats(vec![], vec![task_report(1, 4, &[], 0)]);
        assert!(deadline_share(&run, &empty, TaskId(1), 0.05).is_err());
        assert!(deadline_share(&empty, &base, TaskId(1), 0.05).is_err());
    }

    proptest::proptest! {
        #[test]
        fn deadline_share_is_monotone_in_grace(
            responses in proptest::collection::vec(250u64..1000, 1..60),
            g1 in 0.01f64..0.5,
            g2 in 0.01f64..0.5,
        ) {
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            let base = run_stats(vec![], vec![task_report(1, 4, &responses, 0)]);
            let run = run_stats(vec![], vec![task_report(1, 4, &responses, 0)]);
            let s_lo = deadline_share(&run, &base, TaskId(1), lo).unwrap();
            let s_hi = deadline_share(&run, &base, TaskId(1), hi).unwrap();
            prop_assert!(s_lo <= s_hi + 1e-12);
        }

        #[test]
        fn run_scored_against_itself_meets_at_least_half(
            responses in proptest::collection::vec(1u64..100_000, 1..80),
            grace in 0.01f64..0.5,
        ) {
            // With any positive grace the deadline is >= the median, and at
            // least half the sample lies at or below its median.
            let base = run_stats(vec![], vec![task_report(1, 4, &responses, 0)]);
            let share = deadline_share(&base, &base, TaskId(1), grace).unwrap();
            prop_assert!(share >= 0.5 - 1e-12, "share {share}");
        }
    }

    #[test]
    fn bins_clamp_horizon_edge_into_last_bin() {
        let mut series = BinSeries::new(1_000_000, DEFAULT_BIN_WIDTH_US);
        assert_eq!(series.nbins(), 10);
        series.register_queue(QueueId(0));
        series.record_packet(QueueId(0), 0);
        series.record_packet(QueueId(0), 999_999);
        series.record_packet(QueueId(0), 1_000_000); // exactly at horizon
        series.record_interrupt(QueueId(0), 1_000_000);
        let q = series.queue(QueueId(0)).unwrap();
        assert_eq!(q.packets[0], 1);
        assert_eq!(q.packets[9], 2);
        assert_eq!(q.interrupts[9], 1);
    }

    #[test]
    fn bins_cover_a_partial_trailing_bin() {
        let series = BinSeries::new(250_000, DEFAULT_BIN_WIDTH_US);
        assert_eq!(series.nbins(), 3);
        let tiny = BinSeries::new(10, DEFAULT_BIN_WIDTH_US);
        assert_eq!(tiny.nbins(), 1);
    }

    #[test]
    fn export_writes_all_files_and_is_byte_deterministic() {
        let mut queues = vec![queue_report(0, 502, 5, 5), queue_report(1, 505, 9, 2)];
        queues[1].final_occupancy = 1;
        queues[1].stats.packets_delivered = 8;
        let tasks = vec![
            task_report(1, 4, &[307, 307, 314], 7),
            task_report(2, 1, &[300, 310], 0),
        ];
        let mut stats = run_stats(queues, tasks);
        stats.series.record_packet(QueueId(0), 10);
        stats.series.record_interrupt(QueueId(0), 10);
        stats.series.record_packet(QueueId(1), 950_001);

        let dir = tempfile::tempdir().unwrap();
        let echo = serde_json::json!({"horizon_us": 1_000_000});
        export_csv(&stats, &echo, dir.path()).unwrap();

        let ts = std::fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
        let mut lines = ts.lines();
        assert_eq!(lines.next().unwrap(), "bin_start_us,queue_id,packets,interrupts");
        assert_eq!(lines.next().unwrap(), "0,0,1,1");
        assert_eq!(lines.next().unwrap(), "0,1,0,0");
        // 10 bins x 2 queues rows + header.
        assert_eq!(ts.lines().count(), 1 + 10 * 2);
        assert!(ts.lines().any(|l| l == "900000,1,1,0"));

        let jobs = std::fs::read_to_string(dir.path().join("jobs.csv")).unwrap();
        assert_eq!(
            jobs.lines().next().unwrap(),
            "task_id,packet_id,release_us,completion_us,response_us,preemption_us"
        );
        assert_eq!(jobs.lines().count(), 1 + 5);
        // Sorted by completion time across tasks.
        let completions: Vec<u64> = jobs
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
            .collect();
        let mut sorted = completions.clone();
        sorted.sort_unstable();
        assert_eq!(completions, sorted);

        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.lines().any(|l| l.starts_with("queue,0,502,")));
        assert!(summary.lines().any(|l| l.starts_with("task,1,501,4,")));
        assert!(summary.contains("307.000000"), "median printed with 6 decimals");
        assert!(summary.lines().any(|l| l.starts_with("nic,")));

        let run_json = std::fs::read_to_string(dir.path().join("run.json")).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&run_json).unwrap();
        assert_eq!(parsed["scenario"]["horizon_us"], 1_000_000);
        assert_eq!(parsed["label"], "test");

        // Re-export into a second directory: byte-identical files.
        let dir2 = tempfile::tempdir().unwrap();
        export_csv(&stats, &echo, dir2.path()).unwrap();
        for name in ["timeseries.csv", "jobs.csv", "summary.csv", "run.json"] {
            let a = std::fs::read(dir.path().join(name)).unwrap();
            let b = std::fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical exports");
        }
    }

    #[test]
    fn summary_queue_row_matches_timeseries_totals() {
        let mut stats = run_stats(vec![queue_report(0, 502, 3, 2)], vec![]);
        stats.series.record_packet(QueueId(0), 5);
        stats.series.record_packet(QueueId(0), 500_000);
        stats.series.record_packet(QueueId(0), 999_999);
        stats.series.record_interrupt(QueueId(0), 5);
        stats.series.record_interrupt(QueueId(0), 999_999);
        let q = stats.series.queue(QueueId(0)).unwrap();
        assert_eq!(q.packets.iter().sum::<u64>(), stats.queues[0].stats.enqueued);
        assert_eq!(
            q.interrupts.iter().sum::<u64>(),
            stats.queues[0].stats.interrupts_raised
        );
    }

    #[test]
    fn conservation_check_reports_the_broken_queue() {
        let mut bad = queue_report(0, 502, 10, 10);
        bad.stats.packets_delivered = 8; // lost two packets somewhere
        let stats = run_stats(vec![queue_report(1, 503, 5, 5), bad].into_iter().rev().collect(), vec![]);
        let err = stats.check_conservation().unwrap_err();
        assert!(err.contains("port 502"), "got: {err}");
    }
}
