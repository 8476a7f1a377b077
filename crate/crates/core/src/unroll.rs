//! Scan-unrolling: convert a scan-locked sequential design into the
//! combinational instance the SAT attack consumes, plus key application
//! by constant propagation.
//!
//! The instance has three stages. The load stage XORs each scan-in bit
//! through the scan key gates of its chain predecessors. The capture
//! stage instantiates the locked netlist's combinational logic once per
//! cycle (FI and FO key gates included, SQ gates excluded: they sit
//! outside every capture cone). The observe stage XORs each captured
//! bit through its own scan gate and those of its chain successors.
//! Input naming is deterministic: `si_<ff>`, `pi_<cycle>_<name>`,
//! `so_<ff>`; key inputs keep their names.

use crate::lock::{KeyClass, KeyVector, LockedDesign};
use crate::netlist::{Gate, GateKind, Netlist, NetlistError};
use std::collections::{HashMap, HashSet};

/// How primary inputs appear in the attack instance.
///
/// `Constant` exposes one set of PI inputs applied to every capture
/// cycle (the attacker holds the pads static). `PerCycle` gives each
/// cycle fresh PI inputs. `Zero` ties the PIs to constant zero, the
/// strictest scan-only access model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PiMode {
    #[default]
    Constant,
    PerCycle,
    Zero,
}

impl PiMode {
    pub fn token(self) -> &'static str {
        match self {
            PiMode::Constant => "constant",
            PiMode::PerCycle => "per-cycle",
            PiMode::Zero => "zero",
        }
    }
}

/// One scan position of the instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanSlot {
    pub chain: usize,
    pub position: usize,
    pub ff: String,
    pub si_net: String,
    pub so_net: String,
}

/// Scan-unrolled combinational attack instance.
#[derive(Debug, Clone)]
pub struct AttackInstance {
    pub comb: Netlist,
    pub cycles: usize,
    pub pi_mode: PiMode,
    /// Scan positions in scan-in vector order (chain-major, SI first).
    pub slots: Vec<ScanSlot>,
    /// Original non-key primary input names, in netlist order.
    pub free_pis: Vec<String>,
    /// Instance nets carrying the PIs, one row per cycle. With
    /// `PiMode::Constant` every row aliases the same nets; empty rows
    /// under `PiMode::Zero`.
    pub pi_nets: Vec<Vec<String>>,
    pub key_inputs: Vec<String>,
    /// The locked sequential netlist the instance was unrolled from.
    pub source: Netlist,
    /// Key metadata (name, partition, polarity) without the bits.
    pub key_meta: Vec<(String, KeyClass, crate::lock::Polarity)>,
    pub locked_ffs: usize,
    pub style_label: String,
}

impl AttackInstance {
    /// Scan-in and PI values for an oracle query, extracted from an
    /// assignment over the instance's data inputs.
    pub fn oracle_args(&self, assign: &HashMap<String, bool>) -> (Vec<bool>, Vec<Vec<bool>>) {
        let scan_in: Vec<bool> =
            self.slots.iter().map(|s| assign.get(&s.si_net).copied().unwrap_or(false)).collect();
        let pis: Vec<Vec<bool>> = if self.pi_nets.is_empty() || self.pi_nets[0].is_empty() {
            vec![vec![false; self.free_pis.len()]; self.cycles]
        } else {
            self.pi_nets
                .iter()
                .map(|row| {
                    row.iter().map(|net| assign.get(net).copied().unwrap_or(false)).collect()
                })
                .collect()
        };
        (scan_in, pis)
    }

    /// Data (non-key) inputs of the instance, in input order.
    pub fn data_inputs(&self) -> Vec<String> {
        let keys: HashSet<&str> = self.key_inputs.iter().map(|s| s.as_str()).collect();
        self.comb.inputs.iter().filter(|i| !keys.contains(i.as_str())).cloned().collect()
    }
}

fn insert_unique(n: &mut Netlist, net: String, gate: Gate) -> Result<(), NetlistError> {
    if n.defines(&net) {
        return Err(NetlistError::DuplicateNet { line: 0, name: net });
    }
    n.gates.insert(net, gate);
    Ok(())
}

/// Unroll a locked design over `cycles` capture cycles.
pub fn unroll(d: &LockedDesign, cycles: usize, pi_mode: PiMode) -> Result<AttackInstance, NetlistError> {
    assert!(cycles >= 1, "cycle count must be at least 1");
    let key_names: HashSet<&str> = d.correct_key.names().collect();
    let free_pis: Vec<String> = d
        .netlist
        .inputs
        .iter()
        .filter(|i| !key_names.contains(i.as_str()))
        .cloned()
        .collect();

    // Base netlist for the capture copies. In zero-PI mode the PIs are
    // folded away up front.
    let base = match pi_mode {
        PiMode::Zero => {
            let fixed: HashMap<String, bool> =
                free_pis.iter().map(|p| (p.clone(), false)).collect();
            propagate_constants(&d.netlist, &fixed, false)?
        }
        _ => d.netlist.clone(),
    };

    let ffs: Vec<(String, String)> =
        base.dffs().map(|(q, g)| (q.clone(), g.fanin[0].clone())).collect();
    let ff_d: HashMap<&str, &str> = ffs.iter().map(|(q, d)| (q.as_str(), d.as_str())).collect();
    // Gates needed per capture copy: the combinational cones of all
    // D nets. SQ gates never appear here.
    let cone = base.comb_cone(ffs.iter().map(|(_, d)| d.as_str()));

    let mut inst = Netlist::new(format!("{}_unrolled_x{}", d.netlist.name, cycles));

    // Scan-in inputs, chain-major.
    let mut slots = Vec::new();
    for (ci, chain) in d.chains.iter().enumerate() {
        for (pos, ff) in chain.order.iter().enumerate() {
            let si = format!("si_{ff}");
            inst.inputs.push(si.clone());
            slots.push(ScanSlot {
                chain: ci,
                position: pos,
                ff: ff.clone(),
                si_net: si,
                so_net: format!("so_{ff}"),
            });
        }
    }

    // PI inputs per mode.
    let mut pi_nets: Vec<Vec<String>> = Vec::new();
    match pi_mode {
        PiMode::Zero => pi_nets = vec![Vec::new(); cycles],
        PiMode::Constant => {
            let row: Vec<String> = free_pis.iter().map(|p| format!("pi_1_{p}")).collect();
            for net in &row {
                inst.inputs.push(net.clone());
            }
            pi_nets = vec![row; cycles];
        }
        PiMode::PerCycle => {
            for c in 1..=cycles {
                let row: Vec<String> = free_pis.iter().map(|p| format!("pi_{c}_{p}")).collect();
                for net in &row {
                    inst.inputs.push(net.clone());
                }
                pi_nets.push(row);
            }
        }
    }

    // Key inputs, by name.
    let key_inputs: Vec<String> = d
        .netlist
        .inputs
        .iter()
        .filter(|i| key_names.contains(i.as_str()))
        .cloned()
        .collect();
    for k in &key_inputs {
        inst.inputs.push(k.clone());
    }

    // Load stage: each loaded bit accumulates the scan gates of its
    // chain predecessors, in hop order.
    let mut loaded: HashMap<String, String> = HashMap::new();
    for (ci, chain) in d.chains.iter().enumerate() {
        for (pos, ff) in chain.order.iter().enumerate() {
            let mut acc = format!("si_{ff}");
            for (j, pred) in chain.order[..pos].iter().enumerate() {
                if let Some((key, pol)) = d.styles[pred].scan_gate() {
                    let net = format!("ld{ci}_{pos}_{j}");
                    insert_unique(
                        &mut inst,
                        net.clone(),
                        Gate::new(pol.gate_kind(), vec![acc, key.to_string()]),
                    )?;
                    acc = net;
                }
            }
            loaded.insert(ff.clone(), acc);
        }
    }

    // Capture copies. `state[ff]` holds the net feeding the copy's view
    // of that FF's output; after each copy it advances to the captured
    // (post-FI) net.
    let pi_map_for = |c: usize| -> HashMap<&str, &str> {
        free_pis
            .iter()
            .zip(pi_nets[c - 1].iter())
            .map(|(p, net)| (p.as_str(), net.as_str()))
            .collect()
    };
    let mut state: HashMap<String, String> = loaded;
    let order = base.comb_topo_order()?;
    for c in 1..=cycles {
        let pi_map = if pi_mode == PiMode::Zero { HashMap::new() } else { pi_map_for(c) };
        let mut local: HashMap<&str, String> = HashMap::new();
        let resolve = |net: &str,
                       local: &HashMap<&str, String>,
                       state: &HashMap<String, String>|
         -> String {
            if key_names.contains(net) {
                net.to_string()
            } else if let Some(p) = pi_map.get(net) {
                (*p).to_string()
            } else if let Some(s) = state.get(net) {
                s.clone()
            } else if let Some(l) = local.get(net) {
                l.clone()
            } else {
                // Unlocked-input reference outside the cone map; only
                // reachable for nets already in the instance.
                net.to_string()
            }
        };
        for net in &order {
            if !cone.contains(*net) {
                continue;
            }
            let g = &base.gates[*net];
            let fanin: Vec<String> =
                g.fanin.iter().map(|f| resolve(f, &local, &state)).collect();
            let copy = format!("u{c}_{net}");
            insert_unique(&mut inst, copy.clone(), Gate::new(g.kind, fanin))?;
            local.insert(net, copy);
        }
        let mut next: HashMap<String, String> = HashMap::new();
        for (q, _) in &ffs {
            let dnet = ff_d[q.as_str()];
            next.insert(q.clone(), resolve(dnet, &local, &state));
        }
        state = next;
    }

    // Observe stage: own gate first, then chain successors toward SO.
    for (ci, chain) in d.chains.iter().enumerate() {
        for (pos, ff) in chain.order.iter().enumerate() {
            let mut acc = state[ff].clone();
            for (j, succ) in chain.order[pos..].iter().enumerate() {
                if let Some((key, pol)) = d.styles[succ].scan_gate() {
                    let net = format!("ob{ci}_{pos}_{j}");
                    insert_unique(
                        &mut inst,
                        net.clone(),
                        Gate::new(pol.gate_kind(), vec![acc, key.to_string()]),
                    )?;
                    acc = net;
                }
            }
            insert_unique(&mut inst, format!("so_{ff}"), Gate::new(GateKind::Buf, vec![acc]))?;
        }
    }
    for chain in &d.chains {
        for ff in chain.order.iter().rev() {
            inst.outputs.push(format!("so_{ff}"));
        }
    }

    inst.validate()?;
    let key_meta = d
        .correct_key
        .iter()
        .map(|(name, info)| (name.to_string(), info.class, info.polarity))
        .collect();
    Ok(AttackInstance {
        comb: inst,
        cycles,
        pi_mode,
        slots,
        free_pis,
        pi_nets,
        key_inputs,
        source: d.netlist.clone(),
        key_meta,
        locked_ffs: d.locked_count(),
        style_label: d.style_label().to_string(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Val {
    Const(bool),
    Net(String),
}

/// Fix some inputs to constants, fold and alias gates, and (optionally)
/// sweep gates outside the cone of influence of the outputs.
pub fn propagate_constants(
    n: &Netlist,
    fixed: &HashMap<String, bool>,
    sweep: bool,
) -> Result<Netlist, NetlistError> {
    let mut out = Netlist::new(n.name.clone());
    out.inputs = n.inputs.iter().filter(|i| !fixed.contains_key(*i)).cloned().collect();

    let mut vals: HashMap<String, Val> = HashMap::new();
    for i in &n.inputs {
        let v = match fixed.get(i) {
            Some(&b) => Val::Const(b),
            None => Val::Net(i.clone()),
        };
        vals.insert(i.clone(), v);
    }
    for (q, _) in n.dffs() {
        vals.insert(q.clone(), Val::Net(q.clone()));
    }

    let order = n.comb_topo_order()?;
    let mut kept: HashMap<String, Gate> = HashMap::new();
    let mut aux_gates: Vec<(String, Gate)> = Vec::new();
    let mut aux_counter = 0usize;
    for net in &order {
        let g = &n.gates[*net];
        let fanin: Vec<Val> = g.fanin.iter().map(|f| vals[f].clone()).collect();
        let v = simplify_gate(net, g.kind, &fanin, &mut aux_gates, &mut aux_counter, &mut kept);
        vals.insert(net.to_string(), v);
    }

    // Emit combinational gates in original definition order, then the
    // MUX-simplification auxiliaries.
    for (net, _) in &n.gates {
        if let Some(g) = kept.remove(net) {
            out.gates.insert(net.clone(), g);
        }
    }
    for (net, g) in aux_gates {
        out.gates.insert(net, g);
    }

    // A constant net materializes as a self-XOR of any available net.
    let mut const_nets: HashMap<bool, String> = HashMap::new();
    let mut materialize = |value: bool, out: &mut Netlist| -> Result<String, NetlistError> {
        if let Some(net) = const_nets.get(&value) {
            return Ok(net.clone());
        }
        let anchor = out
            .inputs
            .first()
            .cloned()
            .or_else(|| out.gates.iter().find(|(_, g)| !g.kind.is_sequential()).map(|(n, _)| n.clone()))
            .or_else(|| out.gates.keys().next().cloned())
            .ok_or(NetlistError::MissingAssignment { name: "constant anchor".into() })?;
        let name = format!("const_{}", u8::from(value));
        let kind = if value { GateKind::Xnor } else { GateKind::Xor };
        out.gates.insert(name.clone(), Gate::new(kind, vec![anchor.clone(), anchor]));
        const_nets.insert(value, name.clone());
        Ok(name)
    };

    // Sequential gates keep their position, fanins resolved.
    let mut final_gates = indexmap::IndexMap::new();
    for (net, g) in &n.gates {
        if g.kind.is_sequential() {
            let d = match &vals[&g.fanin[0]] {
                Val::Net(x) => x.clone(),
                Val::Const(b) => materialize(*b, &mut out)?,
            };
            final_gates.insert(net.clone(), Gate::new(GateKind::Dff, vec![d]));
        } else if let Some(gate) = out.gates.get(net) {
            final_gates.insert(net.clone(), gate.clone());
        }
    }
    for (net, g) in &out.gates {
        if !final_gates.contains_key(net) && !n.gates.contains_key(net) {
            final_gates.insert(net.clone(), g.clone());
        }
    }
    out.gates = final_gates;

    for o in &n.outputs {
        let name = match &vals.get(o).cloned().unwrap_or(Val::Net(o.clone())) {
            Val::Net(x) => x.clone(),
            Val::Const(b) => materialize(*b, &mut out)?,
        };
        out.outputs.push(name);
    }

    if sweep {
        out.sweep_dead();
    }
    out.validate()?;
    Ok(out)
}

fn simplify_gate(
    net: &str,
    kind: GateKind,
    fanin: &[Val],
    aux: &mut Vec<(String, Gate)>,
    aux_counter: &mut usize,
    kept: &mut HashMap<String, Gate>,
) -> Val {
    let keep = |kept: &mut HashMap<String, Gate>, kind: GateKind, ins: Vec<String>| -> Val {
        kept.insert(net.to_string(), Gate::new(kind, ins));
        Val::Net(net.to_string())
    };
    match kind {
        GateKind::Buf => fanin[0].clone(),
        GateKind::Not => match &fanin[0] {
            Val::Const(b) => Val::Const(!b),
            Val::Net(x) => keep(kept, GateKind::Not, vec![x.clone()]),
        },
        GateKind::And | GateKind::Nand => {
            let neg = kind == GateKind::Nand;
            let mut nets: Vec<String> = Vec::new();
            for v in fanin {
                match v {
                    Val::Const(false) => return Val::Const(neg),
                    Val::Const(true) => {}
                    Val::Net(x) => {
                        if !nets.contains(x) {
                            nets.push(x.clone());
                        }
                    }
                }
            }
            match (nets.len(), neg) {
                (0, _) => Val::Const(!neg),
                (1, false) => Val::Net(nets.pop().unwrap()),
                (1, true) => keep(kept, GateKind::Not, nets),
                (_, false) => keep(kept, GateKind::And, nets),
                (_, true) => keep(kept, GateKind::Nand, nets),
            }
        }
        GateKind::Or | GateKind::Nor => {
            let neg = kind == GateKind::Nor;
            let mut nets: Vec<String> = Vec::new();
            for v in fanin {
                match v {
                    Val::Const(true) => return Val::Const(neg),
                    Val::Const(false) => {}
                    Val::Net(x) => {
                        if !nets.contains(x) {
                            nets.push(x.clone());
                        }
                    }
                }
            }
            match (nets.len(), neg) {
                (0, _) => Val::Const(neg),
                (1, false) => Val::Net(nets.pop().unwrap()),
                (1, true) => keep(kept, GateKind::Not, nets),
                (_, false) => keep(kept, GateKind::Or, nets),
                (_, true) => keep(kept, GateKind::Nor, nets),
            }
        }
        GateKind::Xor | GateKind::Xnor => {
            let mut parity = kind == GateKind::Xnor;
            let mut counts: Vec<(String, usize)> = Vec::new();
            for v in fanin {
                match v {
                    Val::Const(b) => parity ^= b,
                    Val::Net(x) => match counts.iter_mut().find(|(n, _)| n == x) {
                        Some((_, c)) => *c += 1,
                        None => counts.push((x.clone(), 1)),
                    },
                }
            }
            let nets: Vec<String> =
                counts.into_iter().filter(|(_, c)| c % 2 == 1).map(|(n, _)| n).collect();
            match (nets.len(), parity) {
                (0, p) => Val::Const(p),
                (1, false) => Val::Net(nets.into_iter().next().unwrap()),
                (1, true) => keep(kept, GateKind::Not, nets),
                (_, false) => keep(kept, GateKind::Xor, nets),
                (_, true) => keep(kept, GateKind::Xnor, nets),
            }
        }
        GateKind::Mux => {
            let (s, a, b) = (&fanin[0], &fanin[1], &fanin[2]);
            if let Val::Const(sv) = s {
                return if *sv { b.clone() } else { a.clone() };
            }
            if a == b {
                return a.clone();
            }
            let s = match s {
                Val::Net(x) => x.clone(),
                Val::Const(_) => unreachable!(),
            };
            match (a, b) {
                (Val::Const(false), Val::Const(true)) => keep(kept, GateKind::Buf, vec![s]),
                (Val::Const(true), Val::Const(false)) => keep(kept, GateKind::Not, vec![s]),
                (Val::Const(false), Val::Net(x)) => keep(kept, GateKind::And, vec![s, x.clone()]),
                (Val::Const(true), Val::Net(x)) => {
                    // MUX(s, 1, b) = NOT(s) OR b
                    let ns = format!("{net}_ns{aux_counter}");
                    *aux_counter += 1;
                    aux.push((ns.clone(), Gate::new(GateKind::Not, vec![s])));
                    keep(kept, GateKind::Or, vec![ns, x.clone()])
                }
                (Val::Net(x), Val::Const(true)) => keep(kept, GateKind::Or, vec![s, x.clone()]),
                (Val::Net(x), Val::Const(false)) => {
                    // MUX(s, a, 0) = NOT(s) AND a
                    let ns = format!("{net}_ns{aux_counter}");
                    *aux_counter += 1;
                    aux.push((ns.clone(), Gate::new(GateKind::Not, vec![s])));
                    keep(kept, GateKind::And, vec![ns, x.clone()])
                }
                (Val::Net(x), Val::Net(y)) => {
                    keep(kept, GateKind::Mux, vec![s, x.clone(), y.clone()])
                }
                (Val::Const(_), Val::Const(_)) => unreachable!("equal consts handled above"),
            }
        }
        GateKind::Dff => unreachable!("sequential gates handled by the caller"),
    }
}

/// Replace key inputs with constants, propagate and sweep dead gates.
/// Key names absent from the netlist are ignored; the caller controls
/// coverage via [`apply_key_vector`].
pub fn apply_key(n: &Netlist, bits: &HashMap<String, bool>) -> Result<Netlist, NetlistError> {
    let fixed: HashMap<String, bool> = bits
        .iter()
        .filter(|(k, _)| n.inputs.iter().any(|i| &i == k))
        .map(|(k, &v)| (k.clone(), v))
        .collect();
    propagate_constants(n, &fixed, true)
}

/// Apply a key vector, optionally restricted to some partitions. Errors
/// if a selected key input of the netlist has no bit in the vector.
pub fn apply_key_vector(
    n: &Netlist,
    key: &KeyVector,
    filter: Option<&[KeyClass]>,
) -> Result<Netlist, NetlistError> {
    let mut bits = HashMap::new();
    for (name, info) in key.iter() {
        if filter.map(|f| f.contains(&info.class)).unwrap_or(true) {
            bits.insert(name.to_string(), info.bit);
        }
    }
    apply_key(n, &bits)
}

impl LockedDesign {
    /// The design with its correct key burned in; equals the original
    /// function (and, for FI/SQ locking, the original gate count).
    pub fn apply_correct_key(&self) -> Netlist {
        apply_key_vector(&self.netlist, &self.correct_key, None)
            .expect("locked design must accept its own key")
    }

    /// Apply a candidate key assignment; every key input of the design
    /// must be covered.
    pub fn apply_key(&self, bits: &HashMap<String, bool>) -> Result<Netlist, crate::scan::ScanError> {
        for name in self.correct_key.names() {
            if !bits.contains_key(name) {
                return Err(crate::scan::ScanError::MissingKeyBit(name.into()));
            }
        }
        apply_key(&self.netlist, bits).map_err(crate::scan::ScanError::Netlist)
    }
}
