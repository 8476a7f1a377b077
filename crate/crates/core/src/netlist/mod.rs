//! Gate-level netlist representation in the `.bench` dialect used by
//! locking benchmarks.
//!
//! A [`Netlist`] is a named directed gate graph with primary inputs,
//! primary outputs and single-output gates keyed by their output net.
//! `DFF` gates are sequential; everything else is combinational. The
//! combinational view treats DFF outputs as pseudo-inputs and DFF data
//! inputs as pseudo-outputs, and must be acyclic.

mod bench;
mod sim;

pub use bench::{decompose_complex, parse_bench, parse_bench_extended, serialize_bench, ExtNetlist, MacroKind};
pub use sim::{block_count, input_lane, lane_mask, CompiledComb, ShellSignature};

use indexmap::IndexMap;
use std::collections::{HashMap, HashSet};
use thiserror::Error;

/// Basic gate kinds supported by the `.bench` dialect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
    Mux,
    Dff,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Nand => "NAND",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
            GateKind::Mux => "MUX",
            GateKind::Dff => "DFF",
        }
    }

    pub fn from_name(s: &str) -> Option<GateKind> {
        match s.to_ascii_uppercase().as_str() {
            "AND" => Some(GateKind::And),
            "OR" => Some(GateKind::Or),
            "NAND" => Some(GateKind::Nand),
            "NOR" => Some(GateKind::Nor),
            "XOR" => Some(GateKind::Xor),
            "XNOR" => Some(GateKind::Xnor),
            "NOT" => Some(GateKind::Not),
            "BUF" | "BUFF" => Some(GateKind::Buf),
            "MUX" => Some(GateKind::Mux),
            "DFF" => Some(GateKind::Dff),
            _ => None,
        }
    }

    /// Valid fan-in count. `MUX` is exactly 3 (select first), `NOT`,
    /// `BUF` and `DFF` exactly 1, everything else 2 or more.
    pub fn arity_ok(self, n: usize) -> bool {
        match self {
            GateKind::Not | GateKind::Buf | GateKind::Dff => n == 1,
            GateKind::Mux => n == 3,
            _ => n >= 2,
        }
    }

    pub fn is_sequential(self) -> bool {
        self == GateKind::Dff
    }

    /// Evaluate over 64 parallel lanes. `MUX(s, a, b)` selects `a` when
    /// `s = 0` and `b` when `s = 1`.
    pub fn eval_words(self, fanin: &[u64]) -> u64 {
        match self {
            GateKind::And => fanin.iter().fold(!0u64, |acc, &x| acc & x),
            GateKind::Or => fanin.iter().fold(0u64, |acc, &x| acc | x),
            GateKind::Nand => !fanin.iter().fold(!0u64, |acc, &x| acc & x),
            GateKind::Nor => !fanin.iter().fold(0u64, |acc, &x| acc | x),
            GateKind::Xor => fanin.iter().fold(0u64, |acc, &x| acc ^ x),
            GateKind::Xnor => !fanin.iter().fold(0u64, |acc, &x| acc ^ x),
            GateKind::Not => !fanin[0],
            GateKind::Buf => fanin[0],
            GateKind::Mux => (fanin[1] & !fanin[0]) | (fanin[2] & fanin[0]),
            GateKind::Dff => panic!("DFF has no combinational value"),
        }
    }
}

/// A single-output gate: kind plus ordered fan-in net names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub fanin: Vec<String>,
}

impl Gate {
    pub fn new(kind: GateKind, fanin: Vec<String>) -> Gate {
        Gate { kind, fanin }
    }
}

/// One D flip-flop of a netlist, with its feedback classification.
///
/// `has_feedback` is true iff the FF lies on a cycle of the FF-dependency
/// graph (edge j -> i iff a purely combinational path exists from Q_j to
/// D_i), including self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipFlopInfo {
    /// Net name of the DFF output (Q).
    pub ff_net: String,
    /// Net name of its data input (D).
    pub d_net: String,
    pub has_feedback: bool,
}

/// Errors raised by netlist construction, parsing and simulation.
#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: invalid net name `{name}`")]
    BadNetName { line: usize, name: String },
    #[error("line {line}: duplicate definition of net `{name}`")]
    DuplicateNet { line: usize, name: String },
    #[error("reference to undefined net `{name}` (used by `{user}`)")]
    UndefinedNet { name: String, user: String },
    #[error("primary input `{name}` is also a gate output")]
    InputIsGateOutput { name: String },
    #[error("gate `{gate}`: {kind} does not take {got} inputs")]
    Arity { gate: String, kind: &'static str, got: usize },
    #[error("combinational cycle through nets: {}", nets.join(" -> "))]
    CombinationalCycle { nets: Vec<String> },
    #[error("line {line}: unknown gate or macro kind `{name}`")]
    UnknownKind { line: usize, name: String },
    #[error("missing assignment for net `{name}`")]
    MissingAssignment { name: String },
    #[error("net `{name}` not found")]
    NoSuchNet { name: String },
    #[error("operation requires a purely combinational netlist, found DFF `{name}`")]
    SequentialGate { name: String },
}

/// A gate-level netlist. Gate iteration order is definition order, which
/// parsing and serialization preserve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Netlist {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub gates: IndexMap<String, Gate>,
}

impl Netlist {
    pub fn new(name: impl Into<String>) -> Netlist {
        Netlist {
            name: name.into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            gates: IndexMap::new(),
        }
    }

    pub fn gate(&self, net: &str) -> Option<&Gate> {
        self.gates.get(net)
    }

    pub fn is_input(&self, net: &str) -> bool {
        self.inputs.iter().any(|i| i == net)
    }

    /// True if `net` is defined as an input or a gate output.
    pub fn defines(&self, net: &str) -> bool {
        self.gates.contains_key(net) || self.is_input(net)
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Number of combinational (non-DFF) gates.
    pub fn comb_gate_count(&self) -> usize {
        self.gates.values().filter(|g| !g.kind.is_sequential()).count()
    }

    pub fn is_combinational(&self) -> bool {
        self.gates.values().all(|g| !g.kind.is_sequential())
    }

    /// DFFs in definition order, with feedback classification left
    /// unfilled (`has_feedback = false`). Use [`Netlist::classify_feedback`]
    /// for the real thing.
    pub fn dffs(&self) -> impl Iterator<Item = (&String, &Gate)> {
        self.gates.iter().filter(|(_, g)| g.kind.is_sequential())
    }

    pub fn ff_count(&self) -> usize {
        self.dffs().count()
    }

    /// Check all structural invariants: defined fan-ins, arities, inputs
    /// not redefined, declared outputs resolvable, and an acyclic
    /// combinational subgraph.
    pub fn validate(&self) -> Result<(), NetlistError> {
        let mut seen = HashSet::new();
        for i in &self.inputs {
            if !seen.insert(i.as_str()) {
                return Err(NetlistError::DuplicateNet { line: 0, name: i.clone() });
            }
            if self.gates.contains_key(i) {
                return Err(NetlistError::InputIsGateOutput { name: i.clone() });
            }
        }
        for (net, gate) in &self.gates {
            if !gate.kind.arity_ok(gate.fanin.len()) {
                return Err(NetlistError::Arity {
                    gate: net.clone(),
                    kind: gate.kind.name(),
                    got: gate.fanin.len(),
                });
            }
            for f in &gate.fanin {
                if !self.defines(f) {
                    return Err(NetlistError::UndefinedNet { name: f.clone(), user: net.clone() });
                }
            }
        }
        for o in &self.outputs {
            if !self.defines(o) {
                return Err(NetlistError::UndefinedNet { name: o.clone(), user: "OUTPUT".into() });
            }
        }
        self.comb_topo_order()?;
        Ok(())
    }

    /// Topological order of the combinational gates (DFF outputs are
    /// sources, DFF gates themselves are excluded). Errors with a cycle
    /// witness if the combinational subgraph is cyclic.
    pub fn comb_topo_order(&self) -> Result<Vec<&str>, NetlistError> {
        // Kahn's algorithm over combinational gates only.
        let mut indeg: HashMap<&str, usize> = HashMap::new();
        let mut users: HashMap<&str, Vec<&str>> = HashMap::new();
        for (net, gate) in &self.gates {
            if gate.kind.is_sequential() {
                continue;
            }
            let mut d = 0;
            for f in &gate.fanin {
                if let Some(fg) = self.gates.get(f) {
                    if !fg.kind.is_sequential() {
                        users.entry(f.as_str()).or_default().push(net.as_str());
                        d += 1;
                    }
                }
            }
            indeg.insert(net.as_str(), d);
        }
        let mut ready: Vec<&str> = self
            .gates
            .iter()
            .filter(|(_, g)| !g.kind.is_sequential())
            .map(|(n, _)| n.as_str())
            .filter(|n| indeg[n] == 0)
            .collect();
        let mut order = Vec::with_capacity(indeg.len());
        while let Some(n) = ready.pop() {
            order.push(n);
            if let Some(us) = users.get(n) {
                for &u in us {
                    let d = indeg.get_mut(u).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        ready.push(u);
                    }
                }
            }
        }
        if order.len() < indeg.len() {
            let mut cyc: Vec<String> = indeg
                .iter()
                .filter(|(_, &d)| d > 0)
                .map(|(n, _)| n.to_string())
                .collect();
            cyc.sort();
            return Err(NetlistError::CombinationalCycle { nets: cyc });
        }
        Ok(order)
    }

    /// Transitive combinational fan-in of `roots`: every net reachable
    /// backwards without crossing a DFF. DFF output nets and primary
    /// inputs are included as frontier nets but not expanded.
    pub fn comb_cone(&self, roots: impl IntoIterator<Item = impl AsRef<str>>) -> HashSet<String> {
        let mut seen: HashSet<String> = HashSet::new();
        let mut stack: Vec<String> = roots.into_iter().map(|r| r.as_ref().to_string()).collect();
        while let Some(n) = stack.pop() {
            if !seen.insert(n.clone()) {
                continue;
            }
            if let Some(g) = self.gates.get(&n) {
                if !g.kind.is_sequential() {
                    for f in &g.fanin {
                        if !seen.contains(f) {
                            stack.push(f.clone());
                        }
                    }
                }
            }
        }
        seen
    }

    /// Compute [`FlipFlopInfo`] for every DFF via strongly-connected-
    /// component analysis of the FF-dependency graph. FFs in any SCC of
    /// size >= 2, or with a self-loop edge, are flagged.
    pub fn classify_feedback(&self) -> Vec<FlipFlopInfo> {
        let ffs: Vec<(String, String)> = self
            .dffs()
            .map(|(q, g)| (q.clone(), g.fanin[0].clone()))
            .collect();
        let q_index: HashMap<&str, usize> =
            ffs.iter().enumerate().map(|(i, (q, _))| (q.as_str(), i)).collect();

        // Edge j -> i iff Q_j reaches D_i combinationally.
        let mut edges: Vec<Vec<usize>> = vec![Vec::new(); ffs.len()];
        let mut self_loop = vec![false; ffs.len()];
        for (i, (_, d)) in ffs.iter().enumerate() {
            let cone = self.comb_cone([d.as_str()]);
            for net in &cone {
                if let Some(&j) = q_index.get(net.as_str()) {
                    edges[j].push(i);
                    if j == i {
                        self_loop[i] = true;
                    }
                }
            }
        }

        let scc = tarjan_scc(&edges);
        let mut in_big_scc = vec![false; ffs.len()];
        for comp in &scc {
            if comp.len() >= 2 {
                for &v in comp {
                    in_big_scc[v] = true;
                }
            }
        }

        ffs.into_iter()
            .enumerate()
            .map(|(i, (ff_net, d_net))| FlipFlopInfo {
                ff_net,
                d_net,
                has_feedback: in_big_scc[i] || self_loop[i],
            })
            .collect()
    }

    /// Remove every gate not in the cone of influence of the primary
    /// outputs. The traversal crosses DFFs (a live DFF keeps its data
    /// cone live). Returns the number of gates removed.
    pub fn sweep_dead(&mut self) -> usize {
        let mut live: HashSet<String> = HashSet::new();
        let mut stack: Vec<String> = self.outputs.clone();
        while let Some(n) = stack.pop() {
            if !live.insert(n.clone()) {
                continue;
            }
            if let Some(g) = self.gates.get(&n) {
                for f in &g.fanin {
                    if !live.contains(f) {
                        stack.push(f.clone());
                    }
                }
            }
        }
        let before = self.gates.len();
        self.gates.retain(|net, _| live.contains(net));
        before - self.gates.len()
    }
}

/// Tarjan SCC over a small adjacency-list digraph; returns components.
fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    #[derive(Clone, Copy)]
    struct NodeState {
        index: i64,
        lowlink: i64,
        on_stack: bool,
    }
    let n = adj.len();
    let mut st = vec![NodeState { index: -1, lowlink: -1, on_stack: false }; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut next_index = 0i64;

    // Iterative DFS: (node, edge cursor).
    for root in 0..n {
        if st[root].index >= 0 {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut cursor)) = call.last_mut() {
            if *cursor == 0 {
                st[v].index = next_index;
                st[v].lowlink = next_index;
                next_index += 1;
                st[v].on_stack = true;
                stack.push(v);
            }
            if let Some(&w) = adj[v].get(*cursor) {
                *cursor += 1;
                if st[w].index < 0 {
                    call.push((w, 0));
                } else if st[w].on_stack {
                    st[v].lowlink = st[v].lowlink.min(st[w].index);
                }
            } else {
                call.pop();
                if let Some(&(p, _)) = call.last() {
                    st[p].lowlink = st[p].lowlink.min(st[v].lowlink);
                }
                if st[v].lowlink == st[v].index {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        st[w].on_stack = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

#[cfg(test)]
mod tests;
