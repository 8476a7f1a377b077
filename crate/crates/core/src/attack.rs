//! Oracle-guided key recovery and the end-to-end resilience flow.
//!
//! The attack builds a miter over two key copies of the scan-unrolled
//! instance with shared data inputs. Every satisfying assignment yields
//! a distinguishing input pattern (DIP); the oracle's response is added
//! as an I/O-consistency constraint on all key copies. On UNSAT, any
//! key consistent with the recorded I/O pairs is equivalent to the
//! oracle on all inputs; extraction walks the key names in sorted order
//! preferring ones, returning one canonical consistent key, so
//! independent attack variants land on the same key.
//!
//! The Double-DIP variant demands a pattern that two distinct wrong-key
//! pairs fail simultaneously (four key copies); once those run out it
//! falls back to single-DIP rounds before extracting.

use crate::lock::{KeyClass, KeyVector, LockedDesign};
use crate::netlist::{CompiledComb, NetlistError};
use crate::sat::{check_equivalence, CnfBuilder, EquivResult, Lit, SatError, Solver, SolveOutcome};
use crate::scan::{OracleConfig, ScanError};
use crate::unroll::{apply_key, unroll, AttackInstance, PiMode};
use std::collections::HashMap;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    Sat,
    DoubleDip,
}

impl AttackKind {
    pub fn token(self) -> &'static str {
        match self {
            AttackKind::Sat => "sat",
            AttackKind::DoubleDip => "ddip",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttackLimits {
    pub time: Duration,
}

impl Default for AttackLimits {
    fn default() -> Self {
        AttackLimits { time: Duration::from_secs(60) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Broken,
    Resilient,
    Timeout,
    NoKey,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Broken => "BROKEN",
            Verdict::Resilient => "RESILIENT",
            Verdict::Timeout => "TIMEOUT",
            Verdict::NoKey => "NO_KEY",
        };
        f.write_str(s)
    }
}

impl Verdict {
    pub fn parse(s: &str) -> Option<Verdict> {
        match s {
            "BROKEN" => Some(Verdict::Broken),
            "RESILIENT" => Some(Verdict::Resilient),
            "TIMEOUT" => Some(Verdict::Timeout),
            "NO_KEY" => Some(Verdict::NoKey),
            _ => None,
        }
    }
}

/// One recorded oracle interaction.
#[derive(Debug, Clone)]
pub struct DipRecord {
    /// Assignment over the instance's data inputs.
    pub inputs: HashMap<String, bool>,
    /// Oracle scan-out response, instance output order.
    pub response: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct AttackReport {
    pub benchmark: String,
    pub style: String,
    /// Number of locked flip-flops.
    pub locked_ffs: usize,
    pub cycles: usize,
    pub dip_count: usize,
    pub elapsed: Duration,
    pub recovered_key: Option<KeyVector>,
    pub scan_correct: bool,
    pub functionally_equivalent: bool,
    /// Whether the recovered combinational key bits equal the correct
    /// ones; `None` when the design has no combinational keys.
    pub kc_correct: Option<bool>,
    /// Net inversion of each recovered FI key bit.
    pub fi_inversions: Vec<(String, bool)>,
    pub verdict: Verdict,
    /// Full DIP trace, for property checks and reporting.
    pub dips: Vec<DipRecord>,
}

impl AttackReport {
    pub const CSV_HEADER: &'static str = "benchmark,style,n,cycles,dips,elapsed_ms,verdict";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.benchmark,
            self.style,
            self.locked_ffs,
            self.cycles,
            self.dip_count,
            self.elapsed.as_millis(),
            self.verdict
        )
    }
}

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("sat error: {0}")]
    Sat(#[from] SatError),
    #[error("scan error: {0}")]
    Scan(#[from] ScanError),
    #[error("netlist error: {0}")]
    Netlist(#[from] NetlistError),
    #[error("instance/oracle signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("recovered key fails a recorded oracle response; solver or encoding defect")]
    ReplayMismatch,
}

enum Recovery {
    Key(HashMap<String, bool>),
    Timeout,
    NoKey,
}

/// The incremental attack formula: shared data inputs, several key
/// copies of the instance, miter difference literals, and a growing
/// bank of I/O-consistency constraints.
struct AttackFormula {
    solver: Solver,
    builder_clauses: usize,
    builder: CnfBuilder,
    data_lits: HashMap<String, Lit>,
    key_copies: Vec<HashMap<String, Lit>>, // copy 0 is the extraction copy
    diff12: Lit,
    diff34: Option<Lit>,
    pair_distinct: Option<Lit>,
}

impl AttackFormula {
    fn new(inst: &AttackInstance, copies: usize) -> Result<AttackFormula, AttackError> {
        let mut b = CnfBuilder::new();
        let mut data_lits = HashMap::new();
        for name in inst.data_inputs() {
            data_lits.insert(name.clone(), b.new_lit());
        }
        let mut key_copies = Vec::new();
        for _ in 0..=copies {
            let m: HashMap<String, Lit> =
                inst.key_inputs.iter().map(|k| (k.clone(), b.new_lit())).collect();
            key_copies.push(m);
        }
        let mut outputs = Vec::new();
        for copy in 1..=copies {
            let mut inputs = data_lits.clone();
            for (k, l) in &key_copies[copy] {
                inputs.insert(k.clone(), *l);
            }
            let map = b.instantiate(&inst.comb, &inputs)?;
            outputs.push(inst.comb.outputs.iter().map(|o| map[o]).collect());
        }

        let diff_of = |b: &mut CnfBuilder, ya: &Vec<Lit>, yb: &Vec<Lit>| -> Lit {
            let mut bits = Vec::with_capacity(ya.len());
            for (&a, &v) in ya.iter().zip(yb) {
                let d = b.new_lit();
                b.encode_xor(d, a, v);
                bits.push(d);
            }
            let diff = b.new_lit();
            b.encode_or(diff, &bits);
            diff
        };
        let diff12 = diff_of(&mut b, &outputs[0], &outputs[1]);
        let (diff34, pair_distinct) = if copies == 4 {
            let d34 = diff_of(&mut b, &outputs[2], &outputs[3]);
            // (K1,K2) != (K3,K4) as ordered pairs.
            let mut bits = Vec::new();
            for (ka, kb) in [(1usize, 3usize), (2, 4)] {
                for name in inst.key_inputs.iter() {
                    let d = b.new_lit();
                    b.encode_xor(d, key_copies[ka][name], key_copies[kb][name]);
                    bits.push(d);
                }
            }
            let pd = b.new_lit();
            b.encode_or(pd, &bits);
            (Some(d34), Some(pd))
        } else {
            (None, None)
        };

        let mut f = AttackFormula {
            solver: Solver::new(),
            builder_clauses: 0,
            builder: b,
            data_lits,
            key_copies,
            diff12,
            diff34,
            pair_distinct,
        };
        f.sync_solver();
        Ok(f)
    }

    /// Feed clauses added to the builder since the last sync into the
    /// incremental solver.
    fn sync_solver(&mut self) {
        self.solver.ensure_vars(self.builder.num_vars());
        for c in &self.builder.clauses[self.builder_clauses..] {
            self.solver.add_clause(c);
        }
        self.builder_clauses = self.builder.clauses.len();
    }

    /// Constrain every key copy to reproduce `response` on the fixed
    /// data assignment, via a constant-folded instance copy.
    fn add_dip_constraint(
        &mut self,
        inst: &AttackInstance,
        dip: &DipRecord,
    ) -> Result<(), AttackError> {
        let restricted = crate::unroll::propagate_constants(&inst.comb, &dip.inputs, true)?;
        for copy in 0..self.key_copies.len() {
            let mut inputs: HashMap<String, Lit> = HashMap::new();
            for name in &restricted.inputs {
                let lit = self.key_copies[copy].get(name).copied().ok_or_else(|| {
                    AttackError::SignatureMismatch(format!(
                        "restricted instance kept non-key input `{name}`"
                    ))
                })?;
                inputs.insert(name.clone(), lit);
            }
            let map = self.builder.instantiate(&restricted, &inputs)?;
            for (o, &bit) in restricted.outputs.iter().zip(&dip.response) {
                let l = map[o];
                self.builder.add_clause([if bit { l } else { !l }]);
            }
        }
        self.sync_solver();
        Ok(())
    }

    fn solve(&mut self, assumptions: &[Lit], deadline: Instant) -> SolveOutcome {
        self.solver.solve(assumptions, Some(deadline))
    }
}

fn check_signatures(inst: &AttackInstance, oracle: &OracleConfig) -> Result<(), AttackError> {
    let inst_ffs: Vec<&str> = inst.slots.iter().map(|s| s.ff.as_str()).collect();
    let oracle_ffs: Vec<&str> = oracle.scan_order().collect();
    if inst_ffs != oracle_ffs {
        return Err(AttackError::SignatureMismatch("scan chain orders differ".into()));
    }
    let oracle_pis: Vec<&String> = oracle.netlist().inputs.iter().collect();
    if inst.free_pis.len() != oracle_pis.len()
        || inst.free_pis.iter().zip(&oracle_pis).any(|(a, b)| &a != b)
    {
        return Err(AttackError::SignatureMismatch("primary input lists differ".into()));
    }
    if inst.cycles != oracle.capture_cycles() {
        return Err(AttackError::SignatureMismatch("capture cycle counts differ".into()));
    }
    Ok(())
}

/// Core oracle-guided loop. `two_dip` starts with the four-copy query.
fn recover(
    inst: &AttackInstance,
    oracle: &OracleConfig,
    two_dip: bool,
    deadline: Instant,
) -> Result<(Recovery, Vec<DipRecord>), AttackError> {
    check_signatures(inst, oracle)?;
    let copies = if two_dip { 4 } else { 2 };
    let mut f = AttackFormula::new(inst, copies)?;
    let mut dips: Vec<DipRecord> = Vec::new();

    let mut phase_two_dip = two_dip;
    loop {
        let assumptions: Vec<Lit> = if phase_two_dip {
            vec![f.diff12, f.diff34.unwrap(), f.pair_distinct.unwrap()]
        } else {
            vec![f.diff12]
        };
        match f.solve(&assumptions, deadline) {
            SolveOutcome::Timeout => return Ok((Recovery::Timeout, dips)),
            SolveOutcome::Unsat => {
                if phase_two_dip {
                    // No 2-DIP left; flush stragglers with single DIPs.
                    phase_two_dip = false;
                    continue;
                }
                break;
            }
            SolveOutcome::Sat(model) => {
                let inputs: HashMap<String, bool> = f
                    .data_lits
                    .iter()
                    .map(|(n, &l)| (n.clone(), model.lit_true(l)))
                    .collect();
                let (scan_in, pis) = inst.oracle_args(&inputs);
                let response = oracle.query(&scan_in, &pis)?;
                let dip = DipRecord { inputs, response };
                f.add_dip_constraint(inst, &dip)?;
                dips.push(dip);
            }
        }
    }

    // Extraction: canonical consistent key, fixing the sorted key
    // names one by one with ones preferred.
    match f.solve(&[], deadline) {
        SolveOutcome::Timeout => return Ok((Recovery::Timeout, dips)),
        SolveOutcome::Unsat => return Ok((Recovery::NoKey, dips)),
        SolveOutcome::Sat(_) => {}
    }
    let mut names: Vec<String> = inst.key_inputs.clone();
    names.sort();
    let mut fixed: Vec<Lit> = Vec::with_capacity(names.len());
    let mut bits: HashMap<String, bool> = HashMap::new();
    for name in &names {
        let lit = f.key_copies[0][name];
        fixed.push(lit);
        match f.solve(&fixed, deadline) {
            SolveOutcome::Sat(_) => {
                bits.insert(name.clone(), true);
            }
            SolveOutcome::Unsat => {
                fixed.pop();
                fixed.push(!lit);
                bits.insert(name.clone(), false);
            }
            SolveOutcome::Timeout => return Ok((Recovery::Timeout, dips)),
        }
    }

    replay_check(inst, &bits, &dips)?;
    Ok((Recovery::Key(bits), dips))
}

/// Recovered keys must reproduce every recorded oracle response.
fn replay_check(
    inst: &AttackInstance,
    bits: &HashMap<String, bool>,
    dips: &[DipRecord],
) -> Result<(), AttackError> {
    if dips.is_empty() {
        return Ok(());
    }
    let comp = CompiledComb::compile(&inst.comb)?;
    for dip in dips {
        let inputs: Vec<bool> = comp
            .inputs
            .iter()
            .map(|name| {
                dip.inputs.get(name).copied().or_else(|| bits.get(name).copied()).unwrap_or(false)
            })
            .collect();
        let out = comp.eval_bools(&inputs);
        if out != dip.response {
            return Err(AttackError::ReplayMismatch);
        }
    }
    Ok(())
}

fn finish_report(
    inst: &AttackInstance,
    oracle: &OracleConfig,
    recovery: Recovery,
    dips: Vec<DipRecord>,
    key_meta: &KeyVector,
    locked_ffs: usize,
    style: String,
    started: Instant,
    limit: Duration,
) -> Result<AttackReport, AttackError> {
    let mut report = AttackReport {
        benchmark: oracle.netlist().name.clone(),
        style,
        locked_ffs,
        cycles: inst.cycles,
        dip_count: dips.len(),
        elapsed: Duration::ZERO,
        recovered_key: None,
        scan_correct: false,
        functionally_equivalent: false,
        kc_correct: None,
        fi_inversions: Vec::new(),
        verdict: Verdict::Timeout,
        dips,
    };
    match recovery {
        Recovery::Timeout => report.verdict = Verdict::Timeout,
        Recovery::NoKey => report.verdict = Verdict::NoKey,
        Recovery::Key(bits) => {
            let recovered = key_meta.with_bits(&bits);

            // Scan correctness, by the operational definition: the
            // keyed instance is I/O-equivalent to the oracle's own
            // unrolled instance.
            let applied = apply_key(&inst.comb, &bits)?;
            let oracle_design =
                LockedDesign::unlocked(oracle.netlist().clone(), oracle.chains().to_vec());
            let oracle_inst = unroll(&oracle_design, inst.cycles, inst.pi_mode)?;
            report.scan_correct =
                check_equivalence(&applied, &oracle_inst.comb, limit)?.is_equivalent();

            // Functional equivalence of the keyed source netlist
            // against the oracle netlist.
            let keyed_source = apply_key(&inst.source, &bits)?;
            report.functionally_equivalent =
                matches!(check_equivalence(&keyed_source, oracle.netlist(), limit)?, EquivResult::Equivalent);

            let kc: Vec<&str> = key_meta.names_in_class(KeyClass::Comb).collect();
            if !kc.is_empty() {
                report.kc_correct =
                    Some(kc.iter().all(|k| recovered.bit(k) == key_meta.bit(k)));
            }
            report.fi_inversions = key_meta
                .names_in_class(KeyClass::Fi)
                .map(|k| (k.to_string(), recovered.net_inversion(k).unwrap_or(false)))
                .collect();

            report.verdict = if report.functionally_equivalent {
                Verdict::Broken
            } else if report.scan_correct {
                Verdict::Resilient
            } else {
                // Converged extraction is scan-correct by construction;
                // reaching this indicates an inconsistent oracle.
                Verdict::NoKey
            };
            report.recovered_key = Some(recovered);
        }
    }
    report.elapsed = started.elapsed();
    Ok(report)
}

fn run_attack(
    inst: &AttackInstance,
    oracle: &OracleConfig,
    kind: AttackKind,
    limits: &AttackLimits,
    key_meta: &KeyVector,
    locked_ffs: usize,
    style: String,
) -> Result<AttackReport, AttackError> {
    let started = Instant::now();
    let deadline = started + limits.time;
    let (recovery, dips) =
        recover(inst, oracle, kind == AttackKind::DoubleDip, deadline)?;
    finish_report(inst, oracle, recovery, dips, key_meta, locked_ffs, style, started, limits.time)
}

/// Classic oracle-guided SAT attack on a scan-unrolled instance.
pub fn sat_attack(
    inst: &AttackInstance,
    oracle: &OracleConfig,
    limits: &AttackLimits,
) -> Result<AttackReport, AttackError> {
    let meta = instance_meta(inst);
    run_attack(inst, oracle, AttackKind::Sat, limits, &meta.0, meta.1, meta.2)
}

/// Double-DIP variant: each query must distinguish two distinct
/// wrong-key pairs at once.
pub fn double_dip_attack(
    inst: &AttackInstance,
    oracle: &OracleConfig,
    limits: &AttackLimits,
) -> Result<AttackReport, AttackError> {
    let meta = instance_meta(inst);
    run_attack(inst, oracle, AttackKind::DoubleDip, limits, &meta.0, meta.1, meta.2)
}

fn instance_meta(inst: &AttackInstance) -> (KeyVector, usize, String) {
    let mut kv = KeyVector::new();
    for (name, class, pol) in &inst.key_meta {
        kv.insert(
            name.clone(),
            crate::lock::KeyInfo { bit: false, class: *class, polarity: *pol },
        );
    }
    (kv, inst.locked_ffs, inst.style_label.clone())
}

/// Unroll, attack, apply the recovered key and check equivalence
/// against the original; fills the per-partition analyses.
pub fn verify_flow(
    d: &LockedDesign,
    cycles: usize,
    kind: AttackKind,
    limits: &AttackLimits,
    pi_mode: PiMode,
) -> Result<AttackReport, AttackError> {
    let original = d.apply_correct_key();
    let oracle = OracleConfig::new(original, d.chains.clone(), cycles)?;
    let inst = unroll(d, cycles, pi_mode)?;
    let started = Instant::now();
    let deadline = started + limits.time;
    let (recovery, dips) = recover(&inst, &oracle, kind == AttackKind::DoubleDip, deadline)?;
    let mut report = finish_report(
        &inst,
        &oracle,
        recovery,
        dips,
        &d.correct_key,
        d.locked_count(),
        d.style_label().to_string(),
        started,
        limits.time,
    )?;
    report.benchmark = d.netlist.name.clone();
    Ok(report)
}

/// Keyed-oracle equivalence used by tests: is `bits` scan-correct for
/// `d` under the operational definition?
pub fn is_scan_correct(
    d: &LockedDesign,
    bits: &HashMap<String, bool>,
    cycles: usize,
    pi_mode: PiMode,
    limit: Duration,
) -> Result<bool, AttackError> {
    let inst = unroll(d, cycles, pi_mode)?;
    let applied = apply_key(&inst.comb, bits)?;
    let oracle_design = LockedDesign::unlocked(d.apply_correct_key(), d.chains.clone());
    let oracle_inst = unroll(&oracle_design, cycles, pi_mode)?;
    Ok(check_equivalence(&applied, &oracle_inst.comb, limit)?.is_equivalent())
}

/// Is `bits` functionally correct for `d` (combinationally equivalent
/// to the original once applied)?
pub fn is_functionally_correct(
    d: &LockedDesign,
    bits: &HashMap<String, bool>,
    limit: Duration,
) -> Result<bool, AttackError> {
    let keyed = apply_key(&d.netlist, bits)?;
    let original = d.apply_correct_key();
    Ok(check_equivalence(&keyed, &original, limit)?.is_equivalent())
}

#[cfg(test)]
mod tests;
