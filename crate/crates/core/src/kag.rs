//! Key assignment graphs and key-space analysis: which keys are
//! scan-correct, which are functionally correct, and the odds against
//! the functionally correct key among the scan-correct ones.
//!
//! The KAG enumerates scan-correct assignments of the locked FI/SQ
//! pairs of one chain. Vertices at depth `i` carry the net-inversion
//! pair `(phi, sigma)` of the i-th locked FF from the SO end; a vertex
//! is admissible iff `phi ^ sigma` equals the accumulated sigma-parity
//! of its ancestors, which makes both child edges of a vertex carry the
//! same parity and the tree full binary with `2^n` leaves, exactly one
//! of which (all labels `00`) is functionally correct.

use crate::lock::{FfLockStyle, KeyClass, LockError, LockedDesign, Polarity};
use crate::netlist::{block_count, input_lane, lane_mask, CompiledComb, NetlistError};
use crate::unroll::{unroll, PiMode};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KagError {
    #[error("netlist error: {0}")]
    Netlist(#[from] NetlistError),
    #[error("lock error: {0}")]
    Lock(#[from] LockError),
    #[error("key space too large for brute force: {bits} bits (limit {limit})")]
    KeySpaceTooLarge { bits: usize, limit: usize },
    #[error("exhaustive input domain too large: {bits} bits (limit {limit})")]
    InputSpaceTooLarge { bits: usize, limit: usize },
    #[error("closed form not applicable: {0}")]
    NotApplicable(String),
}

/// One vertex of a key assignment graph.
#[derive(Debug, Clone)]
pub struct KagNode {
    /// `(phi, sigma)`: FI and SQ net inversions of this depth's FF.
    pub label: (bool, bool),
    /// Parity of the edge from the parent (same as `phi ^ sigma`).
    pub edge_parity: bool,
    pub depth: usize,
    pub children: Vec<usize>,
}

/// Rooted tree over scan-correct key assignments; node 0 is the dummy
/// root.
#[derive(Debug, Clone)]
pub struct Kag {
    pub nodes: Vec<KagNode>,
    pub depth: usize,
}

/// Build the KAG for one chain's locked FF suffix. `polarities[i]` is
/// the `(FI, SQ)` gate polarity of the (i+1)-th locked FF from the SO
/// end.
pub fn build_kag(polarities: &[(Polarity, Polarity)]) -> Kag {
    let n = polarities.len();
    assert!(n >= 1, "a KAG needs at least one locked flip-flop");
    let mut nodes = vec![KagNode {
        label: (false, false),
        edge_parity: false,
        depth: 0,
        children: Vec::new(),
    }];
    // (node index, sigma parity accumulated through it)
    let mut frontier: Vec<(usize, bool)> = vec![(0, false)];
    for depth in 1..=n {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for (parent, parity) in frontier {
            let labels: [(bool, bool); 2] =
                if parity { [(false, true), (true, false)] } else { [(false, false), (true, true)] };
            for (phi, sigma) in labels {
                let idx = nodes.len();
                nodes.push(KagNode {
                    label: (phi, sigma),
                    edge_parity: phi ^ sigma,
                    depth,
                    children: Vec::new(),
                });
                nodes[parent].children.push(idx);
                next.push((idx, parity ^ sigma));
            }
        }
        frontier = next;
    }
    Kag { nodes, depth: n }
}

impl Kag {
    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|v| v.depth == self.depth).count()
    }

    /// Root-to-leaf label paths; entry `i` of a path is the
    /// `(phi, sigma)` assignment of the (i+1)-th locked FF from SO.
    pub fn leaves(&self) -> Vec<Vec<(bool, bool)>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.walk(0, &mut path, &mut out);
        out
    }

    fn walk(&self, v: usize, path: &mut Vec<(bool, bool)>, out: &mut Vec<Vec<(bool, bool)>>) {
        let node = &self.nodes[v];
        if v != 0 {
            path.push(node.label);
        }
        if node.children.is_empty() {
            if node.depth == self.depth {
                out.push(path.clone());
            }
        } else {
            for &c in &node.children {
                self.walk(c, path, out);
            }
        }
        if v != 0 {
            path.pop();
        }
    }

    /// Theorem check: both child edges of every vertex carry identical
    /// parity.
    pub fn edge_parities_identical(&self) -> bool {
        self.nodes.iter().all(|v| {
            let mut ps = v.children.iter().map(|&c| self.nodes[c].edge_parity);
            match ps.next() {
                None => true,
                Some(first) => ps.all(|p| p == first),
            }
        })
    }

    /// Theorem check: full binary tree of the expected depth.
    pub fn is_full_binary(&self) -> bool {
        self.nodes.iter().all(|v| {
            if v.depth == self.depth {
                v.children.is_empty()
            } else {
                v.children.len() == 2
            }
        }) && self.leaf_count() == 1usize << self.depth
    }
}

/// Locked FFs of one chain in SO-to-SI order with their polarities.
fn chain_locked_so_first(d: &LockedDesign, chain_idx: usize) -> Vec<(String, Polarity, Polarity)> {
    d.chains[chain_idx]
        .order
        .iter()
        .rev()
        .filter_map(|ff| match &d.styles[ff] {
            FfLockStyle::Seql { fi_key: _, fi_polarity, sq_key: _, sq_polarity } => {
                Some((ff.clone(), *fi_polarity, *sq_polarity))
            }
            _ => None,
        })
        .collect()
}

/// Check the structural hypotheses under which the closed-form census
/// and the KAG enumeration describe the brute-force scan-correct set:
/// FI/SQ locks only, each chain either fully locked or fully unlocked,
/// and no locked FF with locked chain predecessors feeding any capture
/// cone.
pub fn closed_form_applicable(d: &LockedDesign) -> Result<(), String> {
    if d.correct_key.names_in_class(KeyClass::Comb).next().is_some() {
        return Err("design carries combinational key gates".into());
    }
    if d.styles.values().any(|s| matches!(s, FfLockStyle::EffFo { .. })) {
        return Err("design carries FO-style locks".into());
    }
    if d.locked_count() == 0 {
        return Err("no locked flip-flops".into());
    }
    for chain in &d.chains {
        let locked: Vec<bool> =
            chain.order.iter().map(|ff| d.styles[ff].is_locked()).collect();
        let k = locked.iter().filter(|&&b| b).count();
        if k != 0 && k != locked.len() {
            return Err(format!(
                "chain `{}` mixes locked and unlocked flip-flops",
                chain.name
            ));
        }
    }
    // Loaded values of locked FFs with locked predecessors are
    // shift-perturbed; they must not reach any captured value.
    let d_nets: Vec<&str> = d.netlist.dffs().map(|(_, g)| g.fanin[0].as_str()).collect();
    let cone = d.netlist.comb_cone(d_nets);
    for chain in &d.chains {
        for (pos, ff) in chain.order.iter().enumerate() {
            if pos == 0 || !d.styles[ff].is_locked() {
                continue;
            }
            if cone.contains(ff.as_str()) {
                return Err(format!(
                    "locked flip-flop `{ff}` has perturbed loads feeding a capture cone"
                ));
            }
        }
    }
    Ok(())
}

/// The scan-correct keys of a closed-form-shaped design, enumerated
/// through per-chain KAGs (cartesian product across chains).
pub fn scan_correct_keys(d: &LockedDesign) -> Result<Vec<HashMap<String, bool>>, KagError> {
    closed_form_applicable(d).map_err(KagError::NotApplicable)?;
    let mut keysets: Vec<Vec<HashMap<String, bool>>> = Vec::new();
    for ci in 0..d.chains.len() {
        let locked = chain_locked_so_first(d, ci);
        if locked.is_empty() {
            continue;
        }
        let kag = build_kag(&locked.iter().map(|(_, f, s)| (*f, *s)).collect::<Vec<_>>());
        let mut per_chain = Vec::new();
        for leaf in kag.leaves() {
            let mut bits = HashMap::new();
            for ((ff, fi_pol, sq_pol), (phi, sigma)) in locked.iter().zip(&leaf) {
                if let FfLockStyle::Seql { fi_key, sq_key, .. } = &d.styles[ff] {
                    bits.insert(fi_key.clone(), phi ^ (*fi_pol == Polarity::Xnor));
                    bits.insert(sq_key.clone(), sigma ^ (*sq_pol == Polarity::Xnor));
                }
            }
            per_chain.push(bits);
        }
        keysets.push(per_chain);
    }
    let mut out: Vec<HashMap<String, bool>> = vec![HashMap::new()];
    for per_chain in keysets {
        let mut next = Vec::with_capacity(out.len() * per_chain.len());
        for base in &out {
            for add in &per_chain {
                let mut m = base.clone();
                m.extend(add.iter().map(|(k, v)| (k.clone(), *v)));
                next.push(m);
            }
        }
        out = next;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensusMethod {
    ClosedForm,
    BruteForce,
}

/// Counts over the full key space of a locked design.
#[derive(Debug, Clone, PartialEq)]
pub struct KeySpaceCensus {
    /// Locked FF count.
    pub n: usize,
    pub total_keys: u64,
    pub scan_correct_count: u64,
    pub functional_correct_count: u64,
    pub intersection_count: u64,
    /// Odds against the functionally correct key among the scan-correct
    /// keys.
    pub p: f64,
    pub method: CensusMethod,
    /// Set when the closed form's structural hypothesis fails; the
    /// brute-force census is authoritative then.
    pub warning: Option<String>,
}

const BRUTE_KEY_LIMIT: usize = 24;
const BRUTE_INPUT_LIMIT: usize = 24;

/// Exhaustive per-key evaluation harness over a locked design.
pub struct BruteEngine {
    key_names: Vec<String>,
    /// Scan side: compiled keyed instance, reference outputs per block.
    inst: CompiledComb,
    inst_key_slots: Vec<usize>,
    inst_data_lanes: Vec<Vec<u64>>,
    oracle_blocks: Vec<Vec<u64>>,
    data_bits: usize,
    /// Functional side: compiled locked shell vs original shell.
    shell: CompiledComb,
    shell_key_slots: Vec<usize>,
    shell_data_lanes: Vec<Vec<u64>>,
    original_blocks: Vec<Vec<u64>>,
    shell_bits: usize,
    /// Key bit positions that can affect the functional shell.
    functional_support: Vec<usize>,
}

impl BruteEngine {
    pub fn new(d: &LockedDesign) -> Result<BruteEngine, KagError> {
        let key_names: Vec<String> = d.correct_key.names().map(String::from).collect();
        if key_names.len() > BRUTE_KEY_LIMIT {
            return Err(KagError::KeySpaceTooLarge {
                bits: key_names.len(),
                limit: BRUTE_KEY_LIMIT,
            });
        }

        // Scan side: unrolled keyed instance against the oracle's own
        // instance, exhaustively over the shared data inputs.
        let inst_nl = unroll(d, 1, PiMode::Constant)?;
        let oracle_design = LockedDesign::unlocked(d.apply_correct_key(), d.chains.clone());
        let oracle_nl = unroll(&oracle_design, 1, PiMode::Constant)?;
        let data_names: Vec<String> = inst_nl.data_inputs();
        debug_assert_eq!(data_names, oracle_nl.comb.inputs);
        let data_bits = data_names.len();
        if data_bits > BRUTE_INPUT_LIMIT {
            return Err(KagError::InputSpaceTooLarge { bits: data_bits, limit: BRUTE_INPUT_LIMIT });
        }
        let inst = CompiledComb::compile(&inst_nl.comb)?;
        let oracle = CompiledComb::compile(&oracle_nl.comb)?;
        let data_slot: HashMap<&str, usize> =
            data_names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

        let blocks = block_count(data_bits);
        let mut inst_data_lanes = vec![vec![0u64; inst.inputs.len()]; blocks];
        let mut inst_key_slots = vec![usize::MAX; key_names.len()];
        for (slot, name) in inst.inputs.iter().enumerate() {
            if let Some(&i) = data_slot.get(name.as_str()) {
                for (b, lanes) in inst_data_lanes.iter_mut().enumerate() {
                    lanes[slot] = input_lane(i, b);
                }
            } else {
                let ki = key_names.iter().position(|k| k == name).expect("key input");
                inst_key_slots[ki] = slot;
            }
        }
        let mut scratch = Vec::new();
        let mut oracle_blocks = Vec::with_capacity(blocks);
        let mut olanes = vec![0u64; oracle.inputs.len()];
        for b in 0..blocks {
            for (slot, name) in oracle.inputs.iter().enumerate() {
                olanes[slot] = input_lane(data_slot[name.as_str()], b);
            }
            let mut out = vec![0u64; oracle.output_count()];
            oracle.eval_words(&olanes, &mut scratch, &mut out);
            oracle_blocks.push(out);
        }

        // Functional side: locked shell against the original shell over
        // PIs and FF states.
        let locked_shell = crate::sat::combinational_shell(&d.netlist);
        let original = d.apply_correct_key();
        let original_shell = crate::sat::combinational_shell(&original);
        let shell = CompiledComb::compile(&locked_shell)?;
        let oshell = CompiledComb::compile(&original_shell)?;
        let shell_data: Vec<String> = oshell.inputs.clone();
        let shell_bits = shell_data.len();
        if shell_bits > BRUTE_INPUT_LIMIT {
            return Err(KagError::InputSpaceTooLarge {
                bits: shell_bits,
                limit: BRUTE_INPUT_LIMIT,
            });
        }
        let shell_slot: HashMap<&str, usize> =
            shell_data.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let sblocks = block_count(shell_bits);
        let mut shell_data_lanes = vec![vec![0u64; shell.inputs.len()]; sblocks];
        let mut shell_key_slots = vec![usize::MAX; key_names.len()];
        for (slot, name) in shell.inputs.iter().enumerate() {
            if let Some(&i) = shell_slot.get(name.as_str()) {
                for (b, lanes) in shell_data_lanes.iter_mut().enumerate() {
                    lanes[slot] = input_lane(i, b);
                }
            } else {
                let ki = key_names.iter().position(|k| k == name).expect("key input");
                shell_key_slots[ki] = slot;
            }
        }
        let mut original_blocks = Vec::with_capacity(sblocks);
        let mut slanes = vec![0u64; oshell.inputs.len()];
        for b in 0..sblocks {
            for (slot, name) in oshell.inputs.iter().enumerate() {
                slanes[slot] = input_lane(shell_slot[name.as_str()], b);
            }
            let mut out = vec![0u64; oshell.output_count()];
            oshell.eval_words(&slanes, &mut scratch, &mut out);
            original_blocks.push(out);
        }

        // Keys with no slot in the shell (SQ keys) cannot affect
        // functional behavior.
        let functional_support = shell_key_slots
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != usize::MAX)
            .map(|(i, _)| i)
            .collect();

        Ok(BruteEngine {
            key_names,
            inst,
            inst_key_slots,
            inst_data_lanes,
            oracle_blocks,
            data_bits,
            shell,
            shell_key_slots,
            shell_data_lanes,
            original_blocks,
            shell_bits,
            functional_support,
        })
    }

    pub fn key_names(&self) -> &[String] {
        &self.key_names
    }

    pub fn key_bits(&self) -> usize {
        self.key_names.len()
    }

    fn bits_of(&self, key_index: u64) -> HashMap<String, bool> {
        self.key_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), key_index >> i & 1 != 0))
            .collect()
    }

    /// Exhaustive I/O comparison of the keyed instance against the
    /// oracle instance. Key bit `i` of `key_index` is `key_names[i]`.
    pub fn scan_correct(&self, key_index: u64) -> bool {
        let mask = lane_mask(self.data_bits);
        let mut lanes = vec![0u64; self.inst.inputs.len()];
        let mut scratch = Vec::new();
        let mut out = vec![0u64; self.inst.output_count()];
        for (b, data) in self.inst_data_lanes.iter().enumerate() {
            lanes.copy_from_slice(data);
            for (i, &slot) in self.inst_key_slots.iter().enumerate() {
                if slot != usize::MAX {
                    lanes[slot] = if key_index >> i & 1 != 0 { !0 } else { 0 };
                }
            }
            self.inst.eval_words(&lanes, &mut scratch, &mut out);
            for (o, r) in out.iter().zip(&self.oracle_blocks[b]) {
                if (o ^ r) & mask != 0 {
                    return false;
                }
            }
        }
        true
    }

    /// Exhaustive shell comparison of the keyed netlist against the
    /// original.
    pub fn functionally_correct(&self, key_index: u64) -> bool {
        let mask = lane_mask(self.shell_bits);
        let mut lanes = vec![0u64; self.shell.inputs.len()];
        let mut scratch = Vec::new();
        let mut out = vec![0u64; self.shell.output_count()];
        for (b, data) in self.shell_data_lanes.iter().enumerate() {
            lanes.copy_from_slice(data);
            for (i, &slot) in self.shell_key_slots.iter().enumerate() {
                if slot != usize::MAX {
                    lanes[slot] = if key_index >> i & 1 != 0 { !0 } else { 0 };
                }
            }
            self.shell.eval_words(&lanes, &mut scratch, &mut out);
            for (o, r) in out.iter().zip(&self.original_blocks[b]) {
                if (o ^ r) & mask != 0 {
                    return false;
                }
            }
        }
        true
    }

    /// Full census by enumeration. Functional verdicts are memoized on
    /// the functionally relevant key bits.
    pub fn census(&self, n_locked: usize) -> KeySpaceCensus {
        let k = self.key_bits();
        let total = 1u64 << k;
        let mut func_memo: HashMap<u64, bool> = HashMap::new();
        let proj = |key: u64| -> u64 {
            let mut p = 0u64;
            for (j, &i) in self.functional_support.iter().enumerate() {
                p |= (key >> i & 1) << j;
            }
            p
        };
        let mut scan = 0u64;
        let mut func = 0u64;
        let mut both = 0u64;
        for key in 0..total {
            let f = *func_memo
                .entry(proj(key))
                .or_insert_with(|| self.functionally_correct(key));
            let s = self.scan_correct(key);
            scan += u64::from(s);
            func += u64::from(f);
            both += u64::from(s && f);
        }
        let p = if scan > 0 { 1.0 - both as f64 / scan as f64 } else { 0.0 };
        KeySpaceCensus {
            n: n_locked,
            total_keys: total,
            scan_correct_count: scan,
            functional_correct_count: func,
            intersection_count: both,
            p,
            method: CensusMethod::BruteForce,
            warning: None,
        }
    }

    pub fn index_of_bits(&self, bits: &HashMap<String, bool>) -> u64 {
        let mut idx = 0u64;
        for (i, name) in self.key_names.iter().enumerate() {
            if bits.get(name).copied().unwrap_or(false) {
                idx |= 1 << i;
            }
        }
        idx
    }

    pub fn bits_of_index(&self, key_index: u64) -> HashMap<String, bool> {
        self.bits_of(key_index)
    }
}

/// Census of the scan-correct key space, by brute force or by the
/// closed form (which requires the SO-suffix FI/SQ shape).
pub fn census(d: &LockedDesign, method: CensusMethod) -> Result<KeySpaceCensus, KagError> {
    let n = d.locked_count();
    match method {
        CensusMethod::BruteForce => {
            let engine = BruteEngine::new(d)?;
            Ok(engine.census(n))
        }
        CensusMethod::ClosedForm => {
            let warning = closed_form_applicable(d).err();
            if let Some(w) = &warning {
                // Only structural load-path violations degrade to a
                // warning; shape violations are hard errors.
                if !w.contains("perturbed loads") {
                    return Err(KagError::NotApplicable(w.clone()));
                }
            }
            let k = d.correct_key.len() as u32;
            let scan = 1u64 << n;
            Ok(KeySpaceCensus {
                n,
                total_keys: 1u64 << k,
                functional_correct_count: 1u64 << (k as usize - n),
                scan_correct_count: scan,
                intersection_count: 1,
                p: 1.0 - 1.0 / scan as f64,
                method: CensusMethod::ClosedForm,
                warning,
            })
        }
    }
}

/// One row of a key-space truth table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthRow {
    pub bits: Vec<bool>,
    pub scan_correct: bool,
    pub functional_correct: bool,
}

/// Exhaustive truth table over the key bits, columns ordered locked-FF
/// SO-to-SI (FI before SQ per FF), then any combinational keys.
#[derive(Debug, Clone)]
pub struct TruthTable {
    /// Raw key names, column order.
    pub key_names: Vec<String>,
    /// Display labels; with the primed convention an XNOR key shows as
    /// `<name>'` and its displayed value is the complement (i.e. the
    /// net inversion).
    pub columns: Vec<String>,
    pub primed_convention: bool,
    pub rows: Vec<TruthRow>,
}

impl TruthTable {
    pub fn csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push_str(",scan_correct,functional_correct\n");
        for r in &self.rows {
            for b in &r.bits {
                s.push_str(if *b { "1," } else { "0," });
            }
            s.push_str(&format!("{},{}\n", r.scan_correct, r.functional_correct));
        }
        s
    }
}

const TRUTH_TABLE_LIMIT: usize = 16;

/// Brute-force truth table of a locked design. With `primed` the
/// columns follow the complemented-variable convention for XNOR gates;
/// rows enumerate the displayed bits in binary counting order (first
/// column is the most significant).
pub fn truth_table(d: &LockedDesign, primed: bool) -> Result<TruthTable, KagError> {
    let k = d.correct_key.len();
    if k > TRUTH_TABLE_LIMIT {
        return Err(KagError::KeySpaceTooLarge { bits: k, limit: TRUTH_TABLE_LIMIT });
    }
    let engine = BruteEngine::new(d)?;

    // Column order: locked FFs SO-to-SI per chain, FI then SQ; then
    // remaining keys in key-vector order.
    let mut key_names: Vec<String> = Vec::new();
    for ci in 0..d.chains.len() {
        for ff in d.chains[ci].order.iter().rev() {
            if let FfLockStyle::Seql { fi_key, sq_key, .. } = &d.styles[ff] {
                key_names.push(fi_key.clone());
                key_names.push(sq_key.clone());
            } else if let FfLockStyle::EffFo { key, .. } = &d.styles[ff] {
                key_names.push(key.clone());
            }
        }
    }
    for name in d.correct_key.names() {
        if !key_names.iter().any(|k| k == name) {
            key_names.push(name.to_string());
        }
    }

    let inverted: Vec<bool> = key_names
        .iter()
        .map(|name| {
            primed && d.correct_key.info(name).map(|i| i.polarity) == Some(Polarity::Xnor)
        })
        .collect();
    let columns: Vec<String> = key_names
        .iter()
        .zip(&inverted)
        .map(|(n, inv)| if *inv { format!("{n}'") } else { n.clone() })
        .collect();

    let mut rows = Vec::with_capacity(1 << k);
    for display in 0..(1u64 << k) {
        let disp_bits: Vec<bool> =
            (0..k).map(|j| display >> (k - 1 - j) & 1 != 0).collect();
        let mut bits: HashMap<String, bool> = HashMap::new();
        for (j, name) in key_names.iter().enumerate() {
            bits.insert(name.clone(), disp_bits[j] ^ inverted[j]);
        }
        let idx = engine.index_of_bits(&bits);
        rows.push(TruthRow {
            bits: disp_bits,
            scan_correct: engine.scan_correct(idx),
            functional_correct: engine.functionally_correct(idx),
        });
    }
    Ok(TruthTable { key_names, columns, primed_convention: primed, rows })
}

/// Closed-form scan-correctness of a key under the SO-suffix shape:
/// for each locked FF (i = 1 nearest SO),
/// `phi_i ^ sigma_i ^ (sigma_1 ^ .. ^ sigma_{i-1}) = 0`.
pub fn scan_correct_closed_form(
    d: &LockedDesign,
    bits: &HashMap<String, bool>,
) -> Result<bool, KagError> {
    closed_form_applicable(d).map_err(KagError::NotApplicable)?;
    for ci in 0..d.chains.len() {
        let locked = chain_locked_so_first(d, ci);
        let mut sigma_prefix = false;
        for (ff, fi_pol, sq_pol) in &locked {
            let FfLockStyle::Seql { fi_key, sq_key, .. } = &d.styles[ff] else { unreachable!() };
            let phi = bits[fi_key] ^ (*fi_pol == Polarity::Xnor);
            let sigma = bits[sq_key] ^ (*sq_pol == Polarity::Xnor);
            if phi ^ sigma ^ sigma_prefix {
                return Ok(false);
            }
            sigma_prefix ^= sigma;
        }
    }
    Ok(true)
}

pub fn census_csv(c: &KeySpaceCensus) -> String {
    format!(
        "n,total_keys,scan_correct,functional_correct,intersection,p,method\n{},{},{},{},{},{},{}\n",
        c.n,
        c.total_keys,
        c.scan_correct_count,
        c.functional_correct_count,
        c.intersection_count,
        c.p,
        match c.method {
            CensusMethod::ClosedForm => "closed_form",
            CensusMethod::BruteForce => "brute_force",
        }
    )
}
