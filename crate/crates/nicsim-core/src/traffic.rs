//! Traffic generation: jittered control streams, CBR / Poisson flood
//! streams, trace files, and the deterministic merge that assigns packet
//! identities.
//!
//! All generators are pure functions of their spec plus an explicit RNG
//! (or RNG seed), so a scenario replays byte-identically for a given base
//! seed. Sub-stream RNGs are derived with [`derive_seed`] so adding or
//! removing one stream never perturbs the others.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::nic::{Packet, SourceTag};
use crate::time::SimTime;

// ======================================================================
// Specs (fully resolved: end times are concrete, not "until horizon")
// ======================================================================

/// A periodic request stream with bounded uniform jitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlFlowSpec {
    pub dest_port: u16,
    /// Nominal inter-arrival time.
    pub period_us: u64,
    /// Half-range of the uniform jitter applied to each nominal arrival
    /// (each arrival moves by an offset drawn from `[-jitter, +jitter]`).
    pub jitter_us: u64,
    /// First nominal arrival.
    pub start_us: u64,
    /// Exclusive end of the stream window.
    pub end_us: u64,
}

/// Arrival process for a flood stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalModel {
    /// Constant bit rate: arrival k at `start + round(k * 1e6 / rate)`.
    Cbr,
    /// Poisson process with mean rate `rate_pps`.
    Poisson,
}

/// Destination selector for a flood stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FloodTarget {
    /// Flood a concrete UDP port.
    Port(u16),
    /// Flood a port that no worker has bound, so every packet is
    /// discarded by the NIC's distribution map.
    Unmatched,
}

impl Serialize for FloodTarget {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            FloodTarget::Port(p) => s.serialize_u16(*p),
            FloodTarget::Unmatched => s.serialize_str("unmatched"),
        }
    }
}

impl<'de> Deserialize<'de> for FloodTarget {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct TargetVisitor;

        impl Visitor<'_> for TargetVisitor {
            type Value = FloodTarget;

            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a port number or the string \"unmatched\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<FloodTarget, E> {
                u16::try_from(v)
                    .map(FloodTarget::Port)
                    .map_err(|_| E::custom(format!("port {v} does not fit in u16")))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<FloodTarget, E> {
                u16::try_from(v)
                    .map(FloodTarget::Port)
                    .map_err(|_| E::custom(format!("port {v} does not fit in u16")))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<FloodTarget, E> {
                if v == "unmatched" {
                    Ok(FloodTarget::Unmatched)
                } else {
                    Err(E::custom(format!(
                        "flood target must be a port number or \"unmatched\", got {v:?}"
                    )))
                }
            }
        }

        d.deserialize_any(TargetVisitor)
    }
}

/// A flood stream at a fixed mean rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FloodSpec {
    pub target: FloodTarget,
    /// Mean packets per second; must be >= 1 (a silent flood is expressed
    /// by omitting the spec, not by rate 0).
    pub rate_pps: u64,
    pub model: ArrivalModel,
    pub start_us: u64,
    /// Exclusive end of the stream window.
    pub end_us: u64,
}

fn check_window(what: &str, start: u64, end: u64) -> Result<()> {
    if start >= end {
        return Err(Error::validation(format!(
            "{what}: start_us ({start}) must be < end_us ({end})"
        )));
    }
    Ok(())
}

impl ControlFlowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.period_us == 0 {
            return Err(Error::validation("control flow: period_us must be >= 1"));
        }
        if self.jitter_us >= self.period_us {
            return Err(Error::validation(format!(
                "control flow: jitter_us ({}) must be < period_us ({})",
                self.jitter_us, self.period_us
            )));
        }
        check_window("control flow", self.start_us, self.end_us)
    }
}

impl FloodSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rate_pps == 0 {
            return Err(Error::validation(
                "flood: rate_pps must be >= 1 (drop the flood spec entirely for a silent cell)",
            ));
        }
        check_window("flood", self.start_us, self.end_us)
    }
}

// ======================================================================
// Seed derivation
// ======================================================================

/// splitmix64 finalizer; a good bit mixer for seed derivation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent sub-seed for stream `index` in `domain` from the
/// scenario's base seed. Domains keep control flows, floods, and any
/// future consumers out of each other's sequences.
pub fn derive_seed(base: u64, domain: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(domain.wrapping_mul(0xd6e8_feb8_6659_fd93) ^ index))
}

/// RNG domain for control-flow jitter.
pub const DOMAIN_CONTROL: u64 = 1;
/// RNG domain for flood arrival processes.
pub const DOMAIN_FLOOD: u64 = 2;

// ======================================================================
// Generators
// ======================================================================

/// Arrival times of one control stream: nominal lattice `start + k * period`
/// (for nominal times `< end`), each sample jittered by a uniform offset in
/// `[-jitter, +jitter]`, clamped into `[start, end - 1]`, then sorted so
/// the stream is non-decreasing even when jitter reorders neighbours.
pub fn gen_control(spec: &ControlFlowSpec, rng: &mut impl Rng) -> Result<Vec<u64>> {
    spec.validate()?;
    let mut times = Vec::new();
    let mut nominal = spec.start_us;
    while nominal < spec.end_us {
        let offset = rng.random_range(-(spec.jitter_us as i64)..=spec.jitter_us as i64);
        let jittered = nominal as i64 + offset;
        let clamped = jittered.clamp(spec.start_us as i64, spec.end_us as i64 - 1) as u64;
        times.push(clamped);
        nominal += spec.period_us;
    }
    times.sort_unstable();
    Ok(times)
}

/// Arrival times of one flood stream.
///
/// CBR arrivals sit on the integer lattice `start + round(k * 1_000_000 /
/// rate)` with round-half-up division, so the long-run rate is exact and
/// per-arrival placement error is at most half a microsecond. Poisson
/// arrivals accumulate exponential inter-arrival gaps in f64 microseconds
/// and round the running sum once per packet, so rounding error never
/// accumulates.
pub fn gen_flood(spec: &FloodSpec, rng: &mut impl Rng) -> Result<Vec<u64>> {
    spec.validate()?;
    let mut times = Vec::new();
    match spec.model {
        ArrivalModel::Cbr => {
            let rate = spec.rate_pps as u128;
            let mut k: u128 = 0;
            loop {
                let t = spec.start_us + ((k * 1_000_000 + rate / 2) / rate) as u64;
                if t >= spec.end_us {
                    break;
                }
                times.push(t);
                k += 1;
            }
        }
        ArrivalModel::Poisson => {
            let mean_gap_us = 1_000_000.0 / spec.rate_pps as f64;
            let mut cursor = spec.start_us as f64;
            loop {
                // Inverse-CDF exponential sample; 1 - u is in (0, 1].
                let u: f64 = rng.random();
                cursor += -mean_gap_us * (1.0 - u).ln();
                let t = cursor.round();
                if !(t < spec.end_us as f64) {
                    break;
                }
                times.push(t as u64);
            }
        }
    }
    Ok(times)
}

// ======================================================================
// Trace files
// ======================================================================

/// One row of an external arrival trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRow {
    pub arrival_time_us: u64,
    pub dest_port: u16,
}

const TRACE_HEADER: &str = "arrival_time_us,dest_port";

/// Load a CSV arrival trace: a header line `arrival_time_us,dest_port`
/// followed by one row per packet, sorted by arrival time. A zero-byte or
/// header-only file is an empty stream. Malformed rows and sort violations
/// are reported with their 1-based line number.
pub fn load_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.display().to_string(),
        line,
        msg,
    };

    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if !saw_header {
            if line != TRACE_HEADER {
                return Err(parse_err(
                    line_no,
                    format!("expected header {TRACE_HEADER:?}, got {line:?}"),
                ));
            }
            saw_header = true;
            continue;
        }
        let mut fields = line.split(',');
        let (Some(t_str), Some(p_str), None) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(parse_err(
                line_no,
                format!("expected 2 comma-separated fields, got {line:?}"),
            ));
        };
        let arrival_time_us: u64 = t_str.trim().parse().map_err(|_| {
            parse_err(line_no, format!("invalid arrival_time_us {t_str:?}"))
        })?;
        let dest_port: u16 = p_str
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("invalid dest_port {p_str:?}")))?;
        if let Some(last) = rows.last() {
            let last: &TraceRow = last;
            if arrival_time_us < last.arrival_time_us {
                return Err(parse_err(
                    line_no,
                    format!(
                        "arrival times must be non-decreasing ({arrival_time_us} after {})",
                        last.arrival_time_us
                    ),
                ));
            }
        }
        rows.push(TraceRow {
            arrival_time_us,
            dest_port,
        });
    }
    Ok(rows)
}

// ======================================================================
// Merge
// ======================================================================

/// One generated stream awaiting the merge. `times` must be sorted.
#[derive(Debug, Clone)]
pub struct Stream {
    pub dest_port: u16,
    pub tag: SourceTag,
    pub times: Vec<u64>,
}

/// Merge streams into one packet sequence. Ties on arrival time break by
/// stream declaration order, then by position within the stream; packet
/// ids are the indices of the merged order, so the whole assignment is a
/// pure function of the inputs.
pub fn merge_streams(streams: &[Stream]) -> Vec<Packet> {
    let mut entries: Vec<(u64, usize, usize)> = Vec::new();
    for (s_idx, s) in streams.iter().enumerate() {
        debug_assert!(s.times.windows(2).all(|w| w[0] <= w[1]), "unsorted stream");
        for (k, &t) in s.times.iter().enumerate() {
            entries.push((t, s_idx, k));
        }
    }
    entries.sort_unstable();
    entries
        .into_iter()
        .enumerate()
        .map(|(id, (t, s_idx, _))| Packet {
            id: id as u64,
            arrival_time: SimTime::from_us(t),
            dest_port: streams[s_idx].dest_port,
            source_tag: streams[s_idx].tag,
        })
        .collect()
}

/// Convenience: seed a stream RNG for `(base_seed, domain, index)`.
pub fn stream_rng(base_seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base_seed, domain, index))
}
