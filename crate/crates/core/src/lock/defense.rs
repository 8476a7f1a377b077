//! The two iterative scan-locking defenses and overhead accounting.
//!
//! Both loops share one shape: lock the unvisited feedback-free FF
//! nearest the scan output, rerun the configured attack, and stop once
//! the recovered key fails functional equivalence. The boundary-locking
//! variant inserts fresh FI/SQ pairs under a key-gate budget; the
//! key-pushing variant pays for each pair by retiring two existing
//! combinational key gates, so the total key-bit count never grows.

use super::{LockError, LockedDesign, Polarity};
use crate::attack::{verify_flow, AttackKind, AttackLimits, AttackReport};
use crate::netlist::Netlist;
use crate::scan::ScanChain;
use crate::unroll::PiMode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Duration;

#[derive(Debug, Clone)]
pub struct DefenseConfig {
    /// Capture cycles for the embedded attack.
    pub cycles: usize,
    pub attack: AttackKind,
    /// Time budget per embedded attack run.
    pub time_limit: Duration,
    pub seed: u64,
    pub pi_mode: PiMode,
}

impl Default for DefenseConfig {
    fn default() -> Self {
        DefenseConfig {
            cycles: 1,
            attack: AttackKind::Sat,
            time_limit: Duration::from_secs(60),
            seed: 0,
            pi_mode: PiMode::Constant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefenseStop {
    /// The recovered key fails functional equivalence.
    Corrupted,
    BudgetExhausted,
    CandidatesExhausted,
    CombKeysExhausted,
}

#[derive(Debug)]
pub struct DefenseOutcome {
    pub design: LockedDesign,
    pub locked: usize,
    pub corrupted: bool,
    pub stop: DefenseStop,
    /// One report per locking iteration, in order.
    pub reports: Vec<AttackReport>,
}

fn draw_polarity(rng: &mut ChaCha8Rng) -> Polarity {
    if rng.gen::<bool>() {
        Polarity::Xnor
    } else {
        Polarity::Xor
    }
}

/// The unvisited feedback-free FF nearest a scan output, ties broken by
/// chain index.
fn next_candidate(d: &LockedDesign) -> Option<String> {
    let info = d.netlist.classify_feedback();
    let mut best: Option<(usize, usize, String)> = None;
    for f in info.iter().filter(|f| !f.has_feedback) {
        if d.styles.get(&f.ff_net).is_some_and(|s| s.is_locked()) {
            continue;
        }
        let Some((dist, chain)) = d.so_distance(&f.ff_net) else { continue };
        let cand = (dist, chain, f.ff_net.clone());
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
    }
    best.map(|(_, _, ff)| ff)
}

fn fresh_key_name(d: &LockedDesign, prefix: &str, hint: usize) -> String {
    let mut i = hint;
    loop {
        let name = format!("{prefix}_{i}");
        if !d.netlist.defines(&name) && !d.correct_key.contains(&name) {
            return name;
        }
        i += 1;
    }
}

fn corrupted(report: &AttackReport) -> bool {
    report.recovered_key.is_some() && !report.functionally_equivalent
}

/// Iterative boundary locking: insert FI/SQ pairs at feedback-free FFs
/// nearest the scan output until the attack's recovered key corrupts
/// functional output, or the key-gate budget `gamma * |gates|` runs out.
pub fn ibla(
    netlist: &Netlist,
    chains: &[ScanChain],
    gamma: f64,
    cfg: &DefenseConfig,
) -> Result<DefenseOutcome, LockError> {
    let budget = (gamma * netlist.comb_gate_count() as f64).floor() as usize;
    if budget < 2 {
        return Err(LockError::BudgetExhausted { budget, needed: 2 });
    }
    let mut d = LockedDesign::unlocked(netlist.clone(), chains.to_vec());
    d.seed = Some(cfg.seed);
    if next_candidate(&d).is_none() {
        return Err(LockError::NoFeedbackFreeFfs);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut reports = Vec::new();
    let limits = AttackLimits { time: cfg.time_limit };
    let mut i = 0usize;
    let stop = loop {
        if 2 * (i + 1) > budget {
            break DefenseStop::BudgetExhausted;
        }
        let Some(ff) = next_candidate(&d) else {
            break DefenseStop::CandidatesExhausted;
        };
        let fi = fresh_key_name(&d, "fik", i);
        let sq = fresh_key_name(&d, "sqk", i);
        let (fp, sp) = (draw_polarity(&mut rng), draw_polarity(&mut rng));
        d.lock_seql_ff(&ff, fi, fp, sq, sp)?;
        d.restitch_locked_suffix();
        i += 1;

        let report = verify_flow(&d, cfg.cycles, cfg.attack, &limits, cfg.pi_mode)?;
        let done = corrupted(&report);
        reports.push(report);
        if done {
            break DefenseStop::Corrupted;
        }
    };
    Ok(DefenseOutcome {
        locked: d.locked_count(),
        corrupted: stop == DefenseStop::Corrupted,
        stop,
        design: d,
        reports,
    })
}

/// Iterative key pushing for pipelined logic-locked circuits: each
/// round retires two combinational key gates and spends their budget on
/// one FI/SQ pair at a feedback-free boundary FF, until the recovered
/// key corrupts functional output.
pub fn ikpa(input: &LockedDesign, cfg: &DefenseConfig) -> Result<DefenseOutcome, LockError> {
    let initial_keys = input.correct_key.len();
    let mut d = input.clone();
    d.seed = Some(cfg.seed);
    {
        let mut kc: Vec<&str> = d.correct_key.names_in_class(super::KeyClass::Comb).collect();
        kc.sort();
        if kc.len() < 2 {
            return Err(LockError::NoCombKeys);
        }
    }
    if next_candidate(&d).is_none() {
        return Err(LockError::NoFeedbackFreeFfs);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut reports = Vec::new();
    let limits = AttackLimits { time: cfg.time_limit };
    let mut i = 0usize;
    let stop = loop {
        let mut kc: Vec<String> =
            d.correct_key.names_in_class(super::KeyClass::Comb).map(String::from).collect();
        kc.sort();
        if kc.len() < 2 {
            break DefenseStop::CombKeysExhausted;
        }
        let Some(ff) = next_candidate(&d) else {
            break DefenseStop::CandidatesExhausted;
        };
        d.remove_comb_key(&kc[0])?;
        d.remove_comb_key(&kc[1])?;
        let fi = fresh_key_name(&d, "fik", i);
        let sq = fresh_key_name(&d, "sqk", i);
        let (fp, sp) = (draw_polarity(&mut rng), draw_polarity(&mut rng));
        d.lock_seql_ff(&ff, fi, fp, sq, sp)?;
        d.restitch_locked_suffix();
        debug_assert!(d.correct_key.len() <= initial_keys);
        i += 1;

        let report = verify_flow(&d, cfg.cycles, cfg.attack, &limits, cfg.pi_mode)?;
        let done = corrupted(&report);
        reports.push(report);
        if done {
            break DefenseStop::Corrupted;
        }
    };
    Ok(DefenseOutcome {
        locked: d.locked_count(),
        corrupted: stop == DefenseStop::Corrupted,
        stop,
        design: d,
        reports,
    })
}

/// Key-gate overhead relative to the original (unkeyed) gate count.
#[derive(Debug, Clone, PartialEq)]
pub struct OverheadReport {
    pub key_gate_count: usize,
    pub gate_count: usize,
    pub percent: f64,
}

pub fn overhead_report(d: &LockedDesign) -> OverheadReport {
    let key_gate_count = d.correct_key.len();
    let gate_count = d.netlist.comb_gate_count() - key_gate_count;
    OverheadReport {
        key_gate_count,
        gate_count,
        percent: 100.0 * key_gate_count as f64 / gate_count as f64,
    }
}
