//! Tseitin encoding of combinational netlists and a small CNF builder
//! for composite formulas (miters, attack constraints).

use super::{Lit, SatError, Var};
use crate::netlist::{GateKind, Netlist};
use std::collections::HashMap;

/// A CNF formula plus the net-to-variable map of the netlist it encodes.
#[derive(Debug, Clone)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
    pub net_vars: HashMap<String, Lit>,
}

impl Cnf {
    pub fn lit(&self, net: &str) -> Result<Lit, SatError> {
        self.net_vars.get(net).copied().ok_or_else(|| SatError::UnmappedNet(net.into()))
    }
}

/// Incremental CNF construction with netlist instantiation.
///
/// Variable 0 is reserved as the constant-true literal.
#[derive(Debug, Clone)]
pub struct CnfBuilder {
    num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
}

impl Default for CnfBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl CnfBuilder {
    pub fn new() -> CnfBuilder {
        let mut b = CnfBuilder { num_vars: 0, clauses: Vec::new() };
        let t = b.new_var(); // constant true
        b.add_clause([Lit::pos(t)]);
        b
    }

    pub fn constant(&self, value: bool) -> Lit {
        if value {
            Lit::pos(Var(0))
        } else {
            Lit::neg(Var(0))
        }
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.num_vars);
        self.num_vars += 1;
        v
    }

    pub fn new_lit(&mut self) -> Lit {
        Lit::pos(self.new_var())
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn add_clause(&mut self, lits: impl IntoIterator<Item = Lit>) {
        self.clauses.push(lits.into_iter().collect());
    }

    /// Encode `y <-> a XOR b`.
    pub fn encode_xor(&mut self, y: Lit, a: Lit, b: Lit) {
        self.add_clause([!y, a, b]);
        self.add_clause([!y, !a, !b]);
        self.add_clause([y, !a, b]);
        self.add_clause([y, a, !b]);
    }

    /// Encode `y <-> OR(xs)`.
    pub fn encode_or(&mut self, y: Lit, xs: &[Lit]) {
        let mut big: Vec<Lit> = vec![!y];
        for &x in xs {
            self.add_clause([y, !x]);
            big.push(x);
        }
        self.add_clause(big);
    }

    /// Encode `y <-> AND(xs)`.
    pub fn encode_and(&mut self, y: Lit, xs: &[Lit]) {
        let mut big: Vec<Lit> = vec![y];
        for &x in xs {
            self.add_clause([!y, x]);
            big.push(!x);
        }
        self.add_clause(big);
    }

    fn encode_gate(&mut self, kind: GateKind, out: Lit, ins: &[Lit]) {
        match kind {
            GateKind::And => self.encode_and(out, ins),
            GateKind::Nand => self.encode_and(!out, ins),
            GateKind::Or => self.encode_or(out, ins),
            GateKind::Nor => self.encode_or(!out, ins),
            GateKind::Xor | GateKind::Xnor => {
                let mut acc = ins[0];
                for (i, &x) in ins.iter().enumerate().skip(1) {
                    let last = i + 1 == ins.len();
                    let target = if last {
                        if kind == GateKind::Xnor {
                            !out
                        } else {
                            out
                        }
                    } else {
                        self.new_lit()
                    };
                    self.encode_xor(target, acc, x);
                    acc = target;
                }
            }
            GateKind::Not | GateKind::Buf => unreachable!("aliased, never encoded"),
            GateKind::Mux => {
                let (s, a, b) = (ins[0], ins[1], ins[2]);
                self.add_clause([s, !a, out]);
                self.add_clause([s, a, !out]);
                self.add_clause([!s, !b, out]);
                self.add_clause([!s, b, !out]);
                // Redundant but propagation-friendly.
                self.add_clause([!a, !b, out]);
                self.add_clause([a, b, !out]);
            }
            GateKind::Dff => unreachable!("combinational netlists only"),
        }
    }

    /// Instantiate a combinational netlist copy. `inputs` maps every
    /// primary input to a literal (constants allowed). Returns the
    /// net-to-literal map of the copy; BUF/NOT collapse to aliases.
    pub fn instantiate(
        &mut self,
        n: &Netlist,
        inputs: &HashMap<String, Lit>,
    ) -> Result<HashMap<String, Lit>, SatError> {
        let mut map: HashMap<String, Lit> = HashMap::with_capacity(n.gates.len() + inputs.len());
        for name in &n.inputs {
            let lit = inputs
                .get(name)
                .copied()
                .ok_or_else(|| SatError::SignatureMismatch(format!("missing input `{name}`")))?;
            map.insert(name.clone(), lit);
        }
        let order = n.comb_topo_order()?;
        for net in order {
            let g = &n.gates[net];
            if g.kind.is_sequential() {
                return Err(SatError::Netlist(crate::netlist::NetlistError::SequentialGate {
                    name: net.to_string(),
                }));
            }
            let ins: Vec<Lit> = g
                .fanin
                .iter()
                .map(|f| map.get(f).copied().ok_or_else(|| SatError::UnmappedNet(f.clone())))
                .collect::<Result<_, _>>()?;
            let lit = match g.kind {
                GateKind::Buf => ins[0],
                GateKind::Not => !ins[0],
                kind => {
                    let out = self.new_lit();
                    self.encode_gate(kind, out, &ins);
                    out
                }
            };
            map.insert(net.to_string(), lit);
        }
        Ok(map)
    }

    pub fn into_cnf(self, net_vars: HashMap<String, Lit>) -> Cnf {
        Cnf { num_vars: self.num_vars, clauses: self.clauses, net_vars }
    }
}

/// Standard Tseitin encoding of a combinational netlist. Satisfying
/// assignments restricted to the input variables biject with input
/// patterns; every output variable then equals the simulated value.
pub fn tseitin(n: &Netlist) -> Result<Cnf, SatError> {
    let mut b = CnfBuilder::new();
    let mut inputs = HashMap::new();
    for name in &n.inputs {
        inputs.insert(name.clone(), b.new_lit());
    }
    let map = b.instantiate(n, &inputs)?;
    Ok(b.into_cnf(map))
}

/// DIMACS CNF text for interop with external solvers.
pub fn to_dimacs(cnf: &Cnf) -> String {
    let mut s = format!("p cnf {} {}\n", cnf.num_vars, cnf.clauses.len());
    for c in &cnf.clauses {
        for l in c {
            let v = l.var().0 as i64 + 1;
            if l.is_neg() {
                s.push_str(&format!("-{v} "));
            } else {
                s.push_str(&format!("{v} "));
            }
        }
        s.push_str("0\n");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;
    use crate::sat::{solve, SolveOutcome};
    use std::time::Duration;

    const LIMIT: Duration = Duration::from_secs(10);

    #[test]
    fn and_gate_forces_output() {
        let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)").unwrap();
        let cnf = tseitin(&n).unwrap();
        let (a, b, y) = (cnf.lit("a").unwrap(), cnf.lit("b").unwrap(), cnf.lit("y").unwrap());
        match solve(&cnf, &[a, b], LIMIT) {
            SolveOutcome::Sat(m) => assert!(m.lit_true(y)),
            o => panic!("expected SAT, got {o:?}"),
        }
        assert!(matches!(solve(&cnf, &[a, b, !y], LIMIT), SolveOutcome::Unsat));
    }

    #[test]
    fn self_xor_is_zero() {
        let n = parse_bench("INPUT(a)\nOUTPUT(y)\ny = XOR(a, a)").unwrap();
        let cnf = tseitin(&n).unwrap();
        let y = cnf.lit("y").unwrap();
        assert!(matches!(solve(&cnf, &[y], LIMIT), SolveOutcome::Unsat));
    }

    #[test]
    fn rejects_sequential_netlist() {
        let n = parse_bench("INPUT(d)\nOUTPUT(q)\nq = DFF(d)").unwrap();
        assert!(tseitin(&n).is_err());
    }

    #[test]
    fn cnf_outputs_match_simulation_exhaustively() {
        // 8-input random-ish circuit; all 256 patterns.
        let src = "\
INPUT(i0)\nINPUT(i1)\nINPUT(i2)\nINPUT(i3)\nINPUT(i4)\nINPUT(i5)\nINPUT(i6)\nINPUT(i7)
OUTPUT(z0)\nOUTPUT(z1)
t0 = NAND(i0, i1, i2)
t1 = XOR(i3, i4, i5)
t2 = MUX(i6, t0, t1)
t3 = NOR(i7, t2)
t4 = XNOR(t0, t3, i1)
z0 = OR(t2, t4)
z1 = AND(t1, t3, i0)
";
        let n = parse_bench(src).unwrap();
        let cnf = tseitin(&n).unwrap();
        let comp = crate::netlist::CompiledComb::compile(&n).unwrap();
        for pat in 0u32..256 {
            let ins: Vec<bool> = (0..8).map(|i| pat >> i & 1 != 0).collect();
            let expect = comp.eval_bools(&ins);
            let assumptions: Vec<Lit> = (0..8)
                .map(|i| {
                    let l = cnf.lit(&format!("i{i}")).unwrap();
                    if ins[i] {
                        l
                    } else {
                        !l
                    }
                })
                .collect();
            match solve(&cnf, &assumptions, LIMIT) {
                SolveOutcome::Sat(m) => {
                    assert_eq!(m.lit_true(cnf.lit("z0").unwrap()), expect[0], "pattern {pat}");
                    assert_eq!(m.lit_true(cnf.lit("z1").unwrap()), expect[1], "pattern {pat}");
                }
                o => panic!("expected SAT, got {o:?}"),
            }
        }
    }

    #[test]
    fn dimacs_shape() {
        let n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)").unwrap();
        let cnf = tseitin(&n).unwrap();
        let text = to_dimacs(&cnf);
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("p cnf "));
        assert!(text.lines().skip(1).all(|l| l.ends_with(" 0") || l.ends_with("0")));
    }
}
