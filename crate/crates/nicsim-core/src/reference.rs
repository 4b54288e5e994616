//! Brute-force reference model of queue moderation.
//!
//! This module deliberately shares nothing with the event-driven engine:
//! no event heap, no timers, no generation counters. It walks a sorted
//! arrival trace once and decides, by direct case analysis, when interrupts
//! would fire. The engine must reproduce its `(fire_time, batch size,
//! cause)` sequence exactly; `check_against_engine` performs that
//! comparison and is what `nicsim check` runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine;
use crate::error::Result;
use crate::nic::{InterruptCause, QueueConfig};

/// One fired interrupt in the reference replay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefBatch {
    pub fire_time_us: u64,
    pub packet_count: usize,
    pub cause: InterruptCause,
}

/// Full outcome of a reference replay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefOutcome {
    pub batches: Vec<RefBatch>,
    pub dropped_full: u64,
    /// Packets still held when the trace ends with no deadline reached
    /// (only possible when the trace is cut off before the last window
    /// would fire; with a full drain horizon this is 0).
    pub residual: usize,
}

/// Replays the moderation state machine over a sorted arrival trace.
///
/// Ties follow the simulator's rule: an arrival at exactly a deadline
/// joins the batch (arrivals are handled first), and a coincident
/// absolute/packet deadline fires as the absolute timer.
pub fn replay_moderation(config: &QueueConfig, arrivals: &[u64]) -> RefOutcome {
    assert!(
        arrivals.windows(2).all(|w| w[0] <= w[1]),
        "reference replay requires a sorted trace"
    );
    config.validate().expect("invalid queue config");

    let mut batches = Vec::new();
    let mut dropped_full: u64 = 0;
    let mut held: usize = 0;
    let mut abs_deadline: Option<u64> = None;
    let mut pkt_deadline: Option<u64> = None;

    // Earliest pending deadline and its cause; absolute wins ties.
    let next_deadline = |abs: Option<u64>, pkt: Option<u64>| -> Option<(u64, InterruptCause)> {
        match (abs, pkt) {
            (Some(a), Some(p)) if p < a => Some((p, InterruptCause::PacketTimer)),
            (Some(a), _) => Some((a, InterruptCause::AbsoluteTimer)),
            (None, Some(p)) => Some((p, InterruptCause::PacketTimer)),
            (None, None) => None,
        }
    };

    for &t in arrivals {
        // Fire every deadline that passes strictly before this arrival.
        // (At most one can fire: firing empties the queue and clears both.)
        if let Some((d, cause)) = next_deadline(abs_deadline, pkt_deadline) {
            if d < t {
                batches.push(RefBatch {
                    fire_time_us: d,
                    packet_count: held,
                    cause,
                });
                held = 0;
                abs_deadline = None;
                pkt_deadline = None;
            }
        }

        if config.is_immediate() {
            batches.push(RefBatch {
                fire_time_us: t,
                packet_count: 1,
                cause: InterruptCause::Immediate,
            });
            continue;
        }

        if held >= config.capacity {
            dropped_full += 1;
            continue;
        }

        held += 1;
        if held == 1 {
            abs_deadline = Some(t + config.absolute_timer_us);
        }
        if config.packet_timer_us > 0 {
            pkt_deadline = Some(t + config.packet_timer_us);
        }
        if config.counter_threshold > 0 && held >= config.counter_threshold {
            batches.push(RefBatch {
                fire_time_us: t,
                packet_count: held,
                cause: InterruptCause::Threshold,
            });
            held = 0;
            abs_deadline = None;
            pkt_deadline = None;
        }
    }

    // Drain the final window, if any.
    let mut residual = held;
    if let Some((d, cause)) = next_deadline(abs_deadline, pkt_deadline) {
        batches.push(RefBatch {
            fire_time_us: d,
            packet_count: held,
            cause,
        });
        residual = 0;
    }

    RefOutcome {
        batches,
        dropped_full,
        residual,
    }
}

// ======================================================================
// Engine comparison (used by `nicsim check` and the acceptance suite)
// ======================================================================

/// Report of one reference-vs-engine comparison.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub packets: usize,
    pub interrupts: usize,
    /// Human-readable description of the first divergence, if any.
    pub divergence: Option<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.divergence.is_none()
    }
}

/// Runs the same sorted trace through the real event-driven engine and the
/// reference replay, comparing the interrupt sequences element-wise.
pub fn check_against_engine(config: &QueueConfig, arrivals: &[u64]) -> Result<CheckReport> {
    let expected = replay_moderation(config, arrivals);
    let engine_batches = engine::run_single_queue(config, arrivals)?;

    let mut divergence = None;
    let n = expected.batches.len().max(engine_batches.len());
    for i in 0..n {
        match (expected.batches.get(i), engine_batches.get(i)) {
            (Some(want), Some(got)) => {
                let got_tuple = (got.fire_time_us, got.packet_count, got.cause);
                let want_tuple = (want.fire_time_us, want.packet_count, want.cause);
                if got_tuple != want_tuple {
                    divergence = Some(format!(
                        "interrupt #{i}: engine fired {:?} but reference expects {:?}",
                        got_tuple, want_tuple
                    ));
                    break;
                }
            }
            (Some(want), None) => {
                divergence = Some(format!(
                    "engine stopped after {} interrupts; reference expects #{i} = {:?}",
                    engine_batches.len(),
                    (want.fire_time_us, want.packet_count, want.cause)
                ));
                break;
            }
            (None, Some(got)) => {
                divergence = Some(format!(
                    "engine fired extra interrupt #{i} = {:?}; reference expects {}",
                    (got.fire_time_us, got.packet_count, got.cause),
                    expected.batches.len()
                ));
                break;
            }
            (None, None) => break,
        }
    }

    Ok(CheckReport {
        packets: arrivals.len(),
        interrupts: expected.batches.len(),
        divergence,
    })
}

/// Generates a sorted, adversarial arrival trace for equivalence checks:
/// a mix of same-microsecond bursts, short gaps, and long silences that
/// exercise every moderation trigger.
pub fn random_trace(packets: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t: u64 = rng.random_range(0..100);
    let mut out = Vec::with_capacity(packets);
    while out.len() < packets {
        out.push(t);
        t += match rng.random_range(0..10u32) {
            0 => 0,                              // coincident arrival
            1..=5 => rng.random_range(1..200),   // steady traffic
            6..=8 => rng.random_range(200..900), // sparse traffic
            _ => rng.random_range(900..5000),    // long silence: timers drain
        };
    }
    out
}
