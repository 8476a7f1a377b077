//! Miter construction and SAT-based combinational equivalence checking.
//!
//! Sequential netlists are compared through their combinational shells:
//! DFF outputs become shared pseudo-inputs, DFF data nets pseudo-outputs
//! paired by flip-flop. Primary outputs pair positionally, so locking
//! transforms that rename an output net stay comparable.

use super::{solve, Cnf, CnfBuilder, Lit, SatError, SolveOutcome};
use crate::netlist::Netlist;
use std::collections::{BTreeSet, HashMap};
use std::time::Duration;

/// Default per-check solver budget.
pub const DEFAULT_SOLVE_LIMIT: Duration = Duration::from_secs(60);

/// A miter over two netlist copies with a difference literal that is
/// true iff some paired output differs.
pub struct Miter {
    pub cnf: Cnf,
    pub diff: Lit,
    /// Net-to-literal map of the left copy.
    pub left: HashMap<String, Lit>,
    /// Net-to-literal map of the right copy.
    pub right: HashMap<String, Lit>,
    /// The inputs shared between the copies.
    pub shared: Vec<String>,
}

/// Outcome of an equivalence check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EquivResult {
    Equivalent,
    /// A witness assignment over the (shell) inputs on which the two
    /// netlists disagree.
    Different(HashMap<String, bool>),
    /// Solver budget exhausted.
    Unknown,
}

impl EquivResult {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivResult::Equivalent)
    }
}

/// Build a miter over two combinational netlists. Inputs listed in
/// `shared` use one variable for both copies; all other inputs get
/// per-copy variables. Outputs pair positionally and must agree in
/// count.
pub fn build_miter(a: &Netlist, b: &Netlist, shared: &BTreeSet<String>) -> Result<Miter, SatError> {
    if a.outputs.len() != b.outputs.len() {
        return Err(SatError::SignatureMismatch(format!(
            "output counts differ: {} vs {}",
            a.outputs.len(),
            b.outputs.len()
        )));
    }
    for s in shared {
        if !a.inputs.contains(s) || !b.inputs.contains(s) {
            return Err(SatError::SignatureMismatch(format!(
                "shared net `{s}` is not an input of both netlists"
            )));
        }
    }
    let mut builder = CnfBuilder::new();
    let mut in_a: HashMap<String, Lit> = HashMap::new();
    let mut in_b: HashMap<String, Lit> = HashMap::new();
    for name in shared {
        let l = builder.new_lit();
        in_a.insert(name.clone(), l);
        in_b.insert(name.clone(), l);
    }
    for name in &a.inputs {
        in_a.entry(name.clone()).or_insert_with(|| builder.new_lit());
    }
    for name in &b.inputs {
        in_b.entry(name.clone()).or_insert_with(|| builder.new_lit());
    }
    let left = builder.instantiate(a, &in_a)?;
    let right = builder.instantiate(b, &in_b)?;

    let mut diffs = Vec::with_capacity(a.outputs.len());
    for (oa, ob) in a.outputs.iter().zip(&b.outputs) {
        let (la, lb) = (left[oa], right[ob]);
        let d = builder.new_lit();
        builder.encode_xor(d, la, lb);
        diffs.push(d);
    }
    let diff = builder.new_lit();
    builder.encode_or(diff, &diffs);

    Ok(Miter { cnf: builder.into_cnf(HashMap::new()), diff, left, right, shared: shared.iter().cloned().collect() })
}

/// The combinational shell of a netlist: DFF outputs become primary
/// inputs, DFF data nets are appended to the outputs (sorted by FF
/// output net so two shells pair FF-wise).
pub fn combinational_shell(n: &Netlist) -> Netlist {
    let mut shell = Netlist::new(format!("{}_shell", n.name));
    shell.inputs = n.inputs.clone();
    shell.outputs = n.outputs.clone();
    let mut ffs: Vec<(String, String)> =
        n.dffs().map(|(q, g)| (q.clone(), g.fanin[0].clone())).collect();
    ffs.sort();
    for (q, d) in &ffs {
        shell.inputs.push(q.clone());
        shell.outputs.push(d.clone());
    }
    for (net, g) in &n.gates {
        if !g.kind.is_sequential() {
            shell.gates.insert(net.clone(), g.clone());
        }
    }
    shell
}

fn check_shell_signatures(a: &Netlist, b: &Netlist) -> Result<(), SatError> {
    let ffs_a: BTreeSet<&String> = a.dffs().map(|(q, _)| q).collect();
    let ffs_b: BTreeSet<&String> = b.dffs().map(|(q, _)| q).collect();
    if ffs_a != ffs_b {
        return Err(SatError::SignatureMismatch("flip-flop sets differ".into()));
    }
    let pi_a: BTreeSet<&String> = a.inputs.iter().collect();
    let pi_b: BTreeSet<&String> = b.inputs.iter().collect();
    if pi_a != pi_b {
        return Err(SatError::SignatureMismatch(format!(
            "primary input sets differ: [{}] vs [{}]",
            a.inputs.join(","),
            b.inputs.join(",")
        )));
    }
    if a.outputs.len() != b.outputs.len() {
        return Err(SatError::SignatureMismatch("primary output counts differ".into()));
    }
    Ok(())
}

/// SAT-based equivalence check. Works on combinational netlists
/// directly and on sequential ones through their combinational shells.
pub fn check_equivalence(a: &Netlist, b: &Netlist, limit: Duration) -> Result<EquivResult, SatError> {
    check_shell_signatures(a, b)?;
    let (sa, sb);
    let (a, b) = if a.is_combinational() && b.is_combinational() {
        (a, b)
    } else {
        sa = combinational_shell(a);
        sb = combinational_shell(b);
        (&sa, &sb)
    };
    let shared: BTreeSet<String> = a.inputs.iter().cloned().collect();
    let miter = build_miter(a, b, &shared)?;
    match solve(&miter.cnf, &[miter.diff], limit) {
        SolveOutcome::Unsat => Ok(EquivResult::Equivalent),
        SolveOutcome::Timeout => Ok(EquivResult::Unknown),
        SolveOutcome::Sat(m) => {
            let witness = miter
                .shared
                .iter()
                .map(|name| (name.clone(), m.lit_true(miter.left[name])))
                .collect();
            Ok(EquivResult::Different(witness))
        }
    }
}
