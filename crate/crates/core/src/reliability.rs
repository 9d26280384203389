//! Scrubbing repair-time model.
//!
//! A scrubber scans `N` frames at `t_check` each, so a flipped bit waits on
//! average `MTTD = t_check * N / 2` before detection. Non-critical essential
//! bits then cost `t_repair_e`. Critical bits cost `t_repair_c` plus a
//! rollback: `t_restore = 2 * t_check * N_fr_FF` to rewrite the flip-flop
//! frames and `t_lost = N * t_check` of lost work. The mean over all
//! essential bits weights the two cases by `(n_e - n_c) / n_e` and
//! `n_c / n_e`.
//!
//! Four scrubber types are compared:
//! * a: scans the whole device and treats every bit as critical;
//! * b: scans only used frames, every bit critical;
//! * c: scans used frames and distinguishes critical bits;
//! * d: like c on the placement- and routing-constrained implementation.
//!
//! All arithmetic is in integer nanoseconds; reports round to microseconds.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Transcribed per-circuit inputs (bit counts, frame counts per flow) and
/// the published MTTR table for comparison.
pub const PUBLISHED_TABLE_JSON: &str = include_str!("../data/table1_table2.json");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReliabilityError {
    #[error("n_c ({n_c}) exceeds n_e ({n_e})")]
    CriticalExceedsEssential { n_e: u64, n_c: u64 },
    #[error("N_fr_used ({used}) exceeds N_fr_total ({total})")]
    UsedExceedsTotal { used: u64, total: u64 },
    #[error("{0}")]
    MissingInput(String),
}

fn d_check() -> u64 {
    810
}
fn d_repair_e() -> u64 {
    490_000
}
fn d_repair_c() -> u64 {
    1_100_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timing {
    #[serde(default = "d_check")]
    pub t_check_ns: u64,
    #[serde(default = "d_repair_e")]
    pub t_repair_e_ns: u64,
    /// Includes the time to classify the corrupted bit.
    #[serde(default = "d_repair_c")]
    pub t_repair_c_ns: u64,
}

impl Default for Timing {
    fn default() -> Self {
        Timing {
            t_check_ns: d_check(),
            t_repair_e_ns: d_repair_e(),
            t_repair_c_ns: d_repair_c(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReliabilityParams {
    pub timing: Timing,
    pub n_fr_total: u64,
    pub n_fr_used: u64,
    pub n_fr_ff: u64,
    pub n_e: u64,
    pub n_c: u64,
}

impl ReliabilityParams {
    pub fn validate(&self) -> Result<(), ReliabilityError> {
        if self.n_c > self.n_e {
            return Err(ReliabilityError::CriticalExceedsEssential {
                n_e: self.n_e,
                n_c: self.n_c,
            });
        }
        if self.n_fr_used > self.n_fr_total {
            return Err(ReliabilityError::UsedExceedsTotal {
                used: self.n_fr_used,
                total: self.n_fr_total,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScrubberType {
    A,
    B,
    C,
    D,
}

impl ScrubberType {
    pub const ALL: [ScrubberType; 4] = [ScrubberType::A, ScrubberType::B, ScrubberType::C, ScrubberType::D];

    pub fn letter(self) -> char {
        match self {
            ScrubberType::A => 'a',
            ScrubberType::B => 'b',
            ScrubberType::C => 'c',
            ScrubberType::D => 'd',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MttrRow {
    pub scrubber: ScrubberType,
    pub n_fr_scanned: u64,
    pub mttd_ns: u64,
    pub t_restore_ns: u64,
    pub t_lost_ns: u64,
    pub mttr_ns: u64,
}

impl MttrRow {
    pub fn mttr_us(&self) -> u64 {
        ns_to_us(self.mttr_ns)
    }
}

/// Rounds half up to whole microseconds.
pub fn ns_to_us(ns: u64) -> u64 {
    (ns + 500) / 1000
}

/// `t_check * N / 2`, rounded half up to a nanosecond.
pub fn mttd(n_fr: u64, t_check_ns: u64) -> u64 {
    (n_fr * t_check_ns).div_ceil(2)
}

/// Checkpoint period: one full scan of the used frames.
pub fn scrub_schedule(p: &ReliabilityParams) -> u64 {
    p.n_fr_used * p.timing.t_check_ns
}

/// Mean repair time over a population where `n_c` of `n_e` bits need a
/// rollback. An empty design (`n_e = 0`) takes the essential branch.
pub fn mixed_mttr(n_e: u64, n_c: u64, mttd_ns: u64, essential_ns: u64, critical_ns: u64) -> u64 {
    if n_e == 0 {
        return mttd_ns + essential_ns;
    }
    let ne = n_e as u128;
    let nc = n_c as u128;
    let sum = (ne - nc) * (mttd_ns + essential_ns) as u128 + nc * (mttd_ns + critical_ns) as u128;
    ((sum + ne / 2) / ne) as u64
}

/// One scrubber type. Types a and b treat every bit as critical; a scans
/// `n_fr_total`, the others `n_fr_used`. For type d pass the constrained
/// flow's parameters.
pub fn mttr(kind: ScrubberType, p: &ReliabilityParams) -> Result<MttrRow, ReliabilityError> {
    p.validate()?;
    let t = &p.timing;
    let n_fr = match kind {
        ScrubberType::A => p.n_fr_total,
        _ => p.n_fr_used,
    };
    let d = mttd(n_fr, t.t_check_ns);
    let t_restore = 2 * t.t_check_ns * p.n_fr_ff;
    let t_lost = n_fr * t.t_check_ns;
    let critical = t.t_repair_c_ns + t_restore + t_lost;
    let mttr_ns = match kind {
        ScrubberType::A | ScrubberType::B => d + critical,
        ScrubberType::C | ScrubberType::D => mixed_mttr(p.n_e, p.n_c, d, t.t_repair_e_ns, critical),
    };
    Ok(MttrRow {
        scrubber: kind,
        n_fr_scanned: n_fr,
        mttd_ns: d,
        t_restore_ns: t_restore,
        t_lost_ns: t_lost,
        mttr_ns,
    })
}

/// Relative saving of `new` against `base`, in percent.
pub fn delta_percent(base_ns: u64, new_ns: u64) -> f64 {
    if base_ns == 0 {
        return 0.0;
    }
    (base_ns as f64 - new_ns as f64) / base_ns as f64 * 100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowFrames {
    pub a: u64,
    pub b: u64,
    pub c: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedMttr {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublishedDelta {
    pub d_a: f64,
    pub d_b: f64,
    pub d_c: f64,
}

/// One circuit's inputs. Types a to c use the unconstrained flow (`a`)
/// frame count, type d the placement+routing constrained one (`c`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeRow {
    pub circuit: String,
    pub n_e: u64,
    pub n_c: u64,
    pub n_fr_ff: u64,
    pub n_fr_used: FlowFrames,
    /// Bit counts of the constrained implementation when they differ from
    /// the unconstrained one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constrained_bits: Option<ConstrainedBits>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_mttr_us: Option<PublishedMttr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_delta_pct: Option<PublishedDelta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstrainedBits {
    pub n_e: u64,
    pub n_c: u64,
    pub n_fr_ff: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeInput {
    pub n_fr_total: u64,
    #[serde(default)]
    pub timing: Timing,
    pub rows: Vec<AnalyzeRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MttrReport {
    pub circuit: String,
    /// Types a, b, c, d in order.
    pub rows: Vec<MttrRow>,
    pub delta_d_vs_a: f64,
    pub delta_d_vs_b: f64,
    pub delta_d_vs_c: f64,
}

impl MttrReport {
    pub fn get(&self, kind: ScrubberType) -> &MttrRow {
        &self.rows[kind as usize]
    }
}

pub fn analyze_row(row: &AnalyzeRow, n_fr_total: u64, timing: Timing) -> Result<MttrReport, ReliabilityError> {
    let base = ReliabilityParams {
        timing,
        n_fr_total,
        n_fr_used: row.n_fr_used.a,
        n_fr_ff: row.n_fr_ff,
        n_e: row.n_e,
        n_c: row.n_c,
    };
    let cb = row.constrained_bits.unwrap_or(ConstrainedBits {
        n_e: row.n_e,
        n_c: row.n_c,
        n_fr_ff: row.n_fr_ff,
    });
    let constrained = ReliabilityParams {
        n_fr_used: row.n_fr_used.c,
        n_e: cb.n_e,
        n_c: cb.n_c,
        n_fr_ff: cb.n_fr_ff,
        ..base
    };
    let rows = vec![
        mttr(ScrubberType::A, &base)?,
        mttr(ScrubberType::B, &base)?,
        mttr(ScrubberType::C, &base)?,
        mttr(ScrubberType::D, &constrained)?,
    ];
    let d = rows[3].mttr_ns;
    Ok(MttrReport {
        circuit: row.circuit.clone(),
        delta_d_vs_a: delta_percent(rows[0].mttr_ns, d),
        delta_d_vs_b: delta_percent(rows[1].mttr_ns, d),
        delta_d_vs_c: delta_percent(rows[2].mttr_ns, d),
        rows,
    })
}

/// Evaluates all rows.
pub fn mttr_table(input: &AnalyzeInput) -> Result<Vec<MttrReport>, ReliabilityError> {
    input
        .rows
        .iter()
        .map(|r| analyze_row(r, input.n_fr_total, input.timing))
        .collect()
}

pub fn mttr_table_csv(reports: &[MttrReport]) -> String {
    let mut out = String::from(
        "circuit,mttr_a_us,mttr_b_us,mttr_c_us,mttr_d_us,delta_d_a_pct,delta_d_b_pct,delta_d_c_pct\n",
    );
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{:.1},{:.1},{:.1}",
            r.circuit,
            r.rows[0].mttr_us(),
            r.rows[1].mttr_us(),
            r.rows[2].mttr_us(),
            r.rows[3].mttr_us(),
            r.delta_d_vs_a,
            r.delta_d_vs_b,
            r.delta_d_vs_c
        )
        .unwrap();
    }
    out
}

pub fn published_input() -> AnalyzeInput {
    serde_json::from_str(PUBLISHED_TABLE_JSON).expect("bundled table parses")
}
