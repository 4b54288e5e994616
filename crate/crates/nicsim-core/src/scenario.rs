//! Scenario schema, validation, and the experiment driver.
//!
//! A scenario JSON file declares the workers (each with its receive-queue
//! moderation parameters), the jittered control flows, and optional flood
//! streams. This module turns a scenario into engine inputs, applies
//! moderation labels (`nomod`, `d800`, ...), and runs the label x rate
//! sweep grid with per-cell CSV export plus an aggregate `sweep.csv`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{self, World, WorkerSetup};
use crate::error::{Error, Result};
use crate::metrics::{
    export_csv, fmt_frac, median_us, share_meeting_deadline, QueueReport, RunStats,
};
use crate::nic::{Packet, QueueConfig, QueueId, SourceTag};
use crate::rtos::{CostModel, TaskId};
use crate::traffic::{
    gen_control, gen_flood, merge_streams, stream_rng, ArrivalModel, ControlFlowSpec, FloodSpec,
    FloodTarget, Stream, DOMAIN_CONTROL, DOMAIN_FLOOD,
};

pub const DEFAULT_HORIZON_US: u64 = 30_000_000;
pub const DEFAULT_CAPACITY: usize = 64;
pub const DEFAULT_CONTROL_PERIOD_US: u64 = 20_000;
pub const DEFAULT_CONTROL_JITTER_US: u64 = 2_000;

/// Grace values reported in `sweep.csv`: 5% through 10%.
pub const SWEEP_GRACES: [f64; 6] = [0.05, 0.06, 0.07, 0.08, 0.09, 0.10];

// ======================================================================
// JSON schema
// ======================================================================

fn default_capacity() -> usize {
    DEFAULT_CAPACITY
}

fn default_horizon() -> u64 {
    DEFAULT_HORIZON_US
}

fn default_period() -> u64 {
    DEFAULT_CONTROL_PERIOD_US
}

fn default_jitter() -> u64 {
    DEFAULT_CONTROL_JITTER_US
}

fn default_model() -> ArrivalModel {
    ArrivalModel::Cbr
}

fn default_label() -> String {
    "custom".to_string()
}

/// Moderation parameters of one worker's receive queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueueSpec {
    #[serde(default = "default_capacity")]
    pub capacity: usize,
    /// 0 means immediate mode (then the other two must be 0 as well).
    #[serde(default)]
    pub absolute_timer_us: u64,
    #[serde(default)]
    pub packet_timer_us: u64,
    #[serde(default)]
    pub counter_threshold: usize,
}

impl Default for QueueSpec {
    fn default() -> Self {
        QueueSpec {
            capacity: DEFAULT_CAPACITY,
            absolute_timer_us: 0,
            packet_timer_us: 0,
            counter_threshold: 0,
        }
    }
}

impl QueueSpec {
    pub fn immediate() -> QueueSpec {
        QueueSpec::default()
    }
}

/// One worker task with its bound port and queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerSpec {
    pub task_id: u32,
    /// Higher number runs first.
    pub priority: u8,
    pub port: u16,
    pub service_time_us: u64,
    #[serde(default)]
    pub queue: QueueSpec,
}

/// A jittered periodic request stream aimed at one port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlFlowJson {
    pub dest_port: u16,
    #[serde(default = "default_period")]
    pub period_us: u64,
    #[serde(default = "default_jitter")]
    pub jitter_us: u64,
    #[serde(default)]
    pub start_us: u64,
    /// Exclusive window end; defaults to the scenario horizon.
    #[serde(default)]
    pub end_us: Option<u64>,
}

/// A flood stream; `dest_port` is a port number or `"unmatched"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloodJson {
    pub dest_port: FloodTarget,
    pub rate_pps: u64,
    #[serde(default = "default_model")]
    pub model: ArrivalModel,
    #[serde(default)]
    pub start_us: u64,
    /// Exclusive window end; defaults to the scenario horizon.
    #[serde(default)]
    pub end_us: Option<u64>,
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_label")]
    pub label: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon_us: u64,
    #[serde(default)]
    pub cost_model: CostModel,
    pub workers: Vec<WorkerSpec>,
    #[serde(default)]
    pub control_flows: Vec<ControlFlowJson>,
    #[serde(default)]
    pub floods: Vec<FloodJson>,
}

impl Scenario {
    /// Index of the critical worker: the one with the highest priority.
    pub fn critical_index(&self) -> Result<usize> {
        self.workers
            .iter()
            .enumerate()
            .max_by_key(|(_, w)| w.priority)
            .map(|(i, _)| i)
            .ok_or_else(|| Error::validation("scenario declares no workers"))
    }

    /// Index of the lowest-priority worker (the default flood victim).
    pub fn lowest_priority_index(&self) -> Result<usize> {
        self.workers
            .iter()
            .enumerate()
            .min_by_key(|(_, w)| w.priority)
            .map(|(i, _)| i)
            .ok_or_else(|| Error::validation("scenario declares no workers"))
    }

    /// Resolve a flood target to a concrete port. `"unmatched"` picks the
    /// smallest port number no worker has bound, so the stream is
    /// guaranteed to miss every flow rule.
    pub fn resolve_flood_port(&self, target: FloodTarget) -> u16 {
        match target {
            FloodTarget::Port(p) => p,
            FloodTarget::Unmatched => {
                let mut candidate = 1u16;
                while self.workers.iter().any(|w| w.port == candidate) {
                    candidate += 1;
                }
                candidate
            }
        }
    }

    fn queue_config(&self, worker_index: usize) -> QueueConfig {
        let w = &self.workers[worker_index];
        QueueConfig {
            queue_id: QueueId(worker_index as u32),
            capacity: w.queue.capacity,
            absolute_timer_us: w.queue.absolute_timer_us,
            packet_timer_us: w.queue.packet_timer_us,
            counter_threshold: w.queue.counter_threshold,
            owner_priority: w.priority,
        }
    }

    /// Full structural validation with field-path context in messages.
    pub fn validate(&self) -> Result<()> {
        if self.horizon_us == 0 {
            return Err(Error::validation("horizon_us must be >= 1"));
        }
        if self.workers.is_empty() {
            return Err(Error::validation("scenario must declare at least one worker"));
        }
        for (i, w) in self.workers.iter().enumerate() {
            let at = |msg: String| Error::validation(format!("workers[{i}]: {msg}"));
            if w.service_time_us == 0 {
                return Err(at("service_time_us must be >= 1".into()));
            }
            self.queue_config(i).validate().map_err(|e| at(e.to_string()))?;
            for (j, other) in self.workers.iter().enumerate().take(i) {
                if other.task_id == w.task_id {
                    return Err(at(format!("task_id {} already used by workers[{j}]", w.task_id)));
                }
                if other.priority == w.priority {
                    return Err(at(format!("priority {} already used by workers[{j}]", w.priority)));
                }
                if other.port == w.port {
                    return Err(at(format!("port {} already used by workers[{j}]", w.port)));
                }
            }
        }
        let crit = self.critical_index()?;
        if self.workers[crit].queue.absolute_timer_us != 0 {
            return Err(Error::validation(format!(
                "workers[{crit}] has the highest priority (critical) and must keep an \
                 immediate queue (absolute_timer_us = 0), got {}",
                self.workers[crit].queue.absolute_timer_us
            )));
        }
        for (i, f) in self.control_flows.iter().enumerate() {
            self.resolved_control(f)
                .validate()
                .map_err(|e| Error::validation(format!("control_flows[{i}]: {e}")))?;
        }
        for (i, f) in self.floods.iter().enumerate() {
            self.resolved_flood(f)
                .validate()
                .map_err(|e| Error::validation(format!("floods[{i}]: {e}")))?;
        }
        Ok(())
    }

    fn resolved_control(&self, f: &ControlFlowJson) -> ControlFlowSpec {
        ControlFlowSpec {
            dest_port: f.dest_port,
            period_us: f.period_us,
            jitter_us: f.jitter_us,
            start_us: f.start_us,
            end_us: f.end_us.unwrap_or(self.horizon_us).min(self.horizon_us),
        }
    }

    fn resolved_flood(&self, f: &FloodJson) -> FloodSpec {
        FloodSpec {
            target: f.dest_port,
            rate_pps: f.rate_pps,
            model: f.model,
            start_us: f.start_us,
            end_us: f.end_us.unwrap_or(self.horizon_us).min(self.horizon_us),
        }
    }

    /// Build engine inputs: the world plus the merged arrival stream.
    pub fn build(&self) -> Result<(World, Vec<Packet>)> {
        self.validate()?;
        let workers: Vec<WorkerSetup> = self
            .workers
            .iter()
            .enumerate()
            .map(|(i, w)| WorkerSetup {
                task_id: TaskId(w.task_id),
                priority: w.priority,
                port: w.port,
                service_time_us: w.service_time_us,
                queue: self.queue_config(i),
            })
            .collect();

        let mut streams = Vec::new();
        for (i, f) in self.control_flows.iter().enumerate() {
            let spec = self.resolved_control(f);
            let mut rng = stream_rng(self.seed, DOMAIN_CONTROL, i as u64);
            streams.push(Stream {
                dest_port: spec.dest_port,
                tag: SourceTag::Control,
                times: gen_control(&spec, &mut rng)?,
            });
        }
        for (i, f) in self.floods.iter().enumerate() {
            let spec = self.resolved_flood(f);
            let mut rng = stream_rng(self.seed, DOMAIN_FLOOD, i as u64);
            streams.push(Stream {
                dest_port: self.resolve_flood_port(spec.target),
                tag: SourceTag::Flood,
                times: gen_flood(&spec, &mut rng)?,
            });
        }
        let packets = merge_streams(&streams);

        let mut world = World::new(workers, self.horizon_us);
        world.cost = self.cost_model;
        world.label = self.label.clone();
        world.seed = self.seed;
        Ok((world, packets))
    }

    /// The scenario as a JSON value, for embedding in `run.json`.
    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("scenario serializes")
    }
}

/// Parse and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let scenario: Scenario = serde_json::from_str(&text).map_err(|e| {
        Error::validation(format!("{}: {e}", path.display()))
    })?;
    scenario.validate()?;
    Ok(scenario)
}

/// The stock scenario: four workers on ports 502-505 with
/// priorities 4..1 (502 is critical), 300 us service, immediate queues,
/// and one 50 req/s control flow per port with +-10% jitter. Floods are
/// added per sweep cell.
pub fn default_scenario(seed: u64) -> Scenario {
    let workers = vec![
        WorkerSpec { task_id: 1, priority: 4, port: 502, service_time_us: 300, queue: QueueSpec::immediate() },
        WorkerSpec { task_id: 2, priority: 3, port: 503, service_time_us: 300, queue: QueueSpec::immediate() },
        WorkerSpec { task_id: 3, priority: 2, port: 504, service_time_us: 300, queue: QueueSpec::immediate() },
        WorkerSpec { task_id: 4, priority: 1, port: 505, service_time_us: 300, queue: QueueSpec::immediate() },
    ];
    let control_flows = workers
        .iter()
        .map(|w| ControlFlowJson {
            dest_port: w.port,
            period_us: DEFAULT_CONTROL_PERIOD_US,
            jitter_us: DEFAULT_CONTROL_JITTER_US,
            start_us: 0,
            end_us: None,
        })
        .collect();
    Scenario {
        label: "base".to_string(),
        seed,
        horizon_us: DEFAULT_HORIZON_US,
        cost_model: CostModel::default(),
        workers,
        control_flows,
        floods: Vec::new(),
    }
}

/// Run a scenario end to end.
pub fn run_scenario(scenario: &Scenario) -> Result<RunStats> {
    let (world, packets) = scenario.build()?;
    engine::run(&world, &packets)
}

/// Run the scenario with its flood streams removed: the no-flood baseline
/// used for additional-runtime and deadline metrics.
pub fn compute_baseline(scenario: &Scenario) -> Result<RunStats> {
    let mut base = scenario.clone();
    base.floods.clear();
    run_scenario(&base)
}

// ======================================================================
// Moderation labels
// ======================================================================

/// A moderation policy applied uniformly to all non-critical queues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModLabel {
    /// Every queue immediate.
    Nomod,
    /// Non-critical queues get an absolute window of this many us; the
    /// critical queue stays immediate.
    Abs(u64),
}

impl ModLabel {
    pub fn name(&self) -> String {
        match self {
            ModLabel::Nomod => "nomod".to_string(),
            ModLabel::Abs(n) => format!("d{n}"),
        }
    }

    pub fn parse(s: &str) -> Result<ModLabel> {
        if s == "nomod" {
            return Ok(ModLabel::Nomod);
        }
        if let Some(num) = s.strip_prefix('d') {
            if let Ok(n) = num.parse::<u64>() {
                if n >= 1 {
                    return Ok(ModLabel::Abs(n));
                }
            }
        }
        Err(Error::validation(format!(
            "unknown moderation label {s:?} (expected \"nomod\" or \"d<microseconds>\")"
        )))
    }

    /// Rewrite every worker queue for this label and stamp the scenario's
    /// label string.
    pub fn apply(&self, scenario: &mut Scenario) -> Result<()> {
        let crit = scenario.critical_index()?;
        for (i, w) in scenario.workers.iter_mut().enumerate() {
            w.queue.packet_timer_us = 0;
            w.queue.counter_threshold = 0;
            w.queue.absolute_timer_us = match self {
                ModLabel::Nomod => 0,
                ModLabel::Abs(_) if i == crit => 0,
                ModLabel::Abs(n) => *n,
            };
        }
        scenario.label = self.name();
        Ok(())
    }
}

// ======================================================================
// Sweep grid
// ======================================================================

/// The label x rate grid of a sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepGrid {
    pub labels: Vec<ModLabel>,
    pub rates: Vec<u64>,
}

impl SweepGrid {
    /// The built-in `"paper"` grid: {nomod, d800, d1600, d2400, d3200}
    /// x 0..15000 step 1000.
    pub fn paper() -> SweepGrid {
        SweepGrid {
            labels: vec![
                ModLabel::Nomod,
                ModLabel::Abs(800),
                ModLabel::Abs(1600),
                ModLabel::Abs(2400),
                ModLabel::Abs(3200),
            ],
            rates: (0..=15).map(|k| k * 1000).collect(),
        }
    }

    /// `"paper"`, or `"<label>,<label>@<rate>,<rate>"` such as
    /// `"nomod,d3200@0,5000"`.
    pub fn parse(spec: &str) -> Result<SweepGrid> {
        if spec == "paper" {
            return Ok(SweepGrid::paper());
        }
        let (labels_part, rates_part) = spec.split_once('@').ok_or_else(|| {
            Error::validation(format!(
                "grid {spec:?} is not \"paper\" or \"<labels>@<rates>\""
            ))
        })?;
        let labels = labels_part
            .split(',')
            .map(|s| ModLabel::parse(s.trim()))
            .collect::<Result<Vec<_>>>()?;
        let rates = rates_part
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::validation(format!("bad rate {s:?} in grid")))
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = SweepGrid { labels, rates };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.is_empty() || self.rates.is_empty() {
            return Err(Error::validation("sweep grid must have labels and rates"));
        }
        for (i, l) in self.labels.iter().enumerate() {
            if self.labels[..i].contains(l) {
                return Err(Error::validation(format!("duplicate grid label {}", l.name())));
            }
        }
        for (i, r) in self.rates.iter().enumerate() {
            if self.rates[..i].contains(r) {
                return Err(Error::validation(format!("duplicate grid rate {r}")));
            }
        }
        Ok(())
    }
}

/// The scenario of one sweep cell: the label's queue rewrite plus the
/// flood pinned to `rate_pps`. Rate 0 removes the flood streams entirely
/// (that cell is the label's baseline). If the base scenario declares no
/// floods, a CBR flood over the whole horizon aimed at the
/// lowest-priority worker's port is added.
pub fn cell_scenario(base: &Scenario, label: ModLabel, rate_pps: u64) -> Result<Scenario> {
    let mut s = base.clone();
    label.apply(&mut s)?;
    if rate_pps == 0 {
        s.floods.clear();
    } else {
        if s.floods.is_empty() {
            let victim = s.lowest_priority_index()?;
            s.floods.push(FloodJson {
                dest_port: FloodTarget::Port(s.workers[victim].port),
                rate_pps,
                model: ArrivalModel::Cbr,
                start_us: 0,
                end_us: None,
            });
        } else {
            for f in &mut s.floods {
                f.rate_pps = rate_pps;
            }
        }
    }
    s.validate()?;
    Ok(s)
}

/// One row of `sweep.csv`. Packet and interrupt counts are scoped to the
/// flood-target queue, the one whose moderation the sweep varies.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub label: String,
    pub rate_pps: u64,
    pub packets: u64,
    pub interrupts: u64,
    pub interrupt_ratio: Option<f64>,
    pub critical_added_preemption_us: i64,
    /// Deadline share at each grace in [`SWEEP_GRACES`]; `None` when the
    /// cell or its baseline completed no critical jobs.
    pub deadline_share: [Option<f64>; 6],
}

/// Per-cell queue accounting kept for invariant checks.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub label: String,
    pub rate_pps: u64,
    pub queues: Vec<QueueReport>,
    pub dropped_unmatched: u64,
}

/// Everything a sweep produces besides the files on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<CellSummary>,
}

/// Slimmed per-cell data retained after export (full job logs of
/// non-critical tasks are dropped to bound memory).
struct SlimCell {
    label: String,
    rate_pps: u64,
    queues: Vec<QueueReport>,
    dropped_unmatched: u64,
    flood_queue_packets: u64,
    flood_queue_interrupts: u64,
    crit_total_preemption_us: u64,
    crit_responses: Vec<u64>,
}

fn slim_down(stats: &RunStats, flood_port: u16) -> SlimCell {
    let crit = stats.critical_task().expect("scenario has workers");
    let (fp, fi) = stats
        .queue_by_port(flood_port)
        .map(|q| (q.stats.enqueued, q.stats.interrupts_raised))
        .unwrap_or((0, 0));
    SlimCell {
        label: stats.label.clone(),
        rate_pps: 0, // caller fills in
        queues: stats.queues.clone(),
        dropped_unmatched: stats.dropped_unmatched,
        flood_queue_packets: fp,
        flood_queue_interrupts: fi,
        crit_total_preemption_us: crit.total_preemption_us,
        crit_responses: crit.jobs.iter().map(|j| j.response_us).collect(),
    }
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "label,rate_pps,packets,interrupts,interrupt_ratio,critical_added_preemption_us,\
         deadline_share_g5,deadline_share_g6,deadline_share_g7,deadline_share_g8,\
         deadline_share_g9,deadline_share_g10\n",
    );
    for r in rows {
        let ratio = r.interrupt_ratio.map(fmt_frac).unwrap_or_default();
        let shares: Vec<String> = r
            .deadline_share
            .iter()
            .map(|s| s.map(fmt_frac).unwrap_or_default())
            .collect();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.label,
            r.rate_pps,
            r.packets,
            r.interrupts,
            ratio,
            r.critical_added_preemption_us,
            shares.join(",")
        ));
    }
    out
}

/// Run the full grid, exporting each cell to `out_dir/<label>/<rate>/`
/// and the aggregate to `out_dir/sweep.csv`. Cells run in parallel
/// (`jobs` threads; default = all cores) but every output is a pure
/// function of the inputs, so reruns are byte-identical.
pub fn run_sweep(
    base: &Scenario,
    grid: &SweepGrid,
    out_dir: &Path,
    jobs: Option<usize>,
) -> Result<SweepOutcome> {
    base.validate()?;
    grid.validate()?;

    // The queue whose interrupt economy the sweep reports: the target of
    // the base scenario's first flood, or of the default flood.
    let flood_port = match base.floods.first() {
        Some(f) => base.resolve_flood_port(f.dest_port),
        None => base.workers[base.lowest_priority_index()?].port,
    };

    // Every grid cell, plus a hidden rate-0 baseline per label whose grid
    // lacks one (not exported; metrics need it).
    let mut cell_specs: Vec<(ModLabel, u64, bool)> = Vec::new();
    for &label in &grid.labels {
        for &rate in &grid.rates {
            cell_specs.push((label, rate, true));
        }
        if !grid.rates.contains(&0) {
            cell_specs.push((label, 0, false));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::validation(format!("cannot build thread pool: {e}")))?;

    let slims: Vec<SlimCell> = pool.install(|| {
        cell_specs
            .par_iter()
            .map(|&(label, rate, export)| -> Result<SlimCell> {
                let scenario = cell_scenario(base, label, rate)?;
                let stats = run_scenario(&scenario)?;
                if export {
                    let dir = out_dir.join(label.name()).join(rate.to_string());
                    export_csv(&stats, &scenario.to_value(), &dir)?;
                }
                let mut slim = slim_down(&stats, flood_port);
                slim.rate_pps = rate;
                Ok(slim)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    // Index the per-label baselines (rate 0).
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut cursor = 0usize;
    for _ in &grid.labels {
        let count = grid.rates.len() + usize::from(!grid.rates.contains(&0));
        let label_slims = &slims[cursor..cursor + count];
        cursor += count;
        let baseline = label_slims
            .iter()
            .find(|s| s.rate_pps == 0)
            .expect("every label has a rate-0 cell");
        let base_median = median_us(&baseline.crit_responses);
        for slim in label_slims.iter().take(grid.rates.len()) {
            let ratio = if slim.flood_queue_packets > 0 {
                Some(slim.flood_queue_interrupts as f64 / slim.flood_queue_packets as f64)
            } else {
                None
            };
            let added = slim.crit_total_preemption_us as i64
                - baseline.crit_total_preemption_us as i64;
            let mut shares = [None; 6];
            if let Some(med) = base_median {
                for (k, g) in SWEEP_GRACES.iter().enumerate() {
                    shares[k] =
                        share_meeting_deadline(&slim.crit_responses, med * (1.0 + g));
                }
            }
            rows.push(SweepRow {
                label: slim.label.clone(),
                rate_pps: slim.rate_pps,
                packets: slim.flood_queue_packets,
                interrupts: slim.flood_queue_interrupts,
                interrupt_ratio: ratio,
                critical_added_preemption_us: added,
                deadline_share: shares,
            });
            cells.push(CellSummary {
                label: slim.label.clone(),
                rate_pps: slim.rate_pps,
                queues: slim.queues.clone(),
                dropped_unmatched: slim.dropped_unmatched,
            });
        }
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let csv_path = out_dir.join("sweep.csv");
    std::fs::write(&csv_path, sweep_csv(&rows)).map_err(|e| Error::io(&csv_path, e))?;

    Ok(SweepOutcome { rows, cells })
}
