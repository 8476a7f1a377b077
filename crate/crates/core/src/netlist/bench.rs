//! `.bench` reading and writing, plus decomposition of complex-gate
//! macros (AOI/OAI/HA/FA) into basic gates.
//!
//! Grammar, one item per line:
//!
//! ```text
//! INPUT(<net>)
//! OUTPUT(<net>)
//! <net> = <KIND>(<net>{, <net>})
//! # comment
//! ```
//!
//! Gate-kind keywords are case-insensitive. Net names draw from
//! `[A-Za-z0-9_.\[\]]+`. `DFF` is written `q = DFF(d)`. `MUX` takes the
//! select as its first argument. The two-output macros `HA`/`FA` define
//! the suffixed nets `<name>_S` and `<name>_C` instead of `<name>`.

use super::{Gate, GateKind, Netlist, NetlistError};
use indexmap::IndexMap;

/// Complex-gate macros accepted by the extended parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacroKind {
    Aoi21,
    Aoi22,
    Oai21,
    Oai22,
    Ha,
    Fa,
}

impl MacroKind {
    fn from_name(s: &str) -> Option<MacroKind> {
        match s.to_ascii_uppercase().as_str() {
            "AOI21" => Some(MacroKind::Aoi21),
            "AOI22" => Some(MacroKind::Aoi22),
            "OAI21" => Some(MacroKind::Oai21),
            "OAI22" => Some(MacroKind::Oai22),
            "HA" => Some(MacroKind::Ha),
            "FA" => Some(MacroKind::Fa),
            _ => None,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            MacroKind::Aoi21 | MacroKind::Oai21 => 3,
            MacroKind::Aoi22 | MacroKind::Oai22 => 4,
            MacroKind::Ha => 2,
            MacroKind::Fa => 3,
        }
    }

    fn two_output(self) -> bool {
        matches!(self, MacroKind::Ha | MacroKind::Fa)
    }
}

/// One item of an extended netlist: a basic gate or a macro instance.
#[derive(Debug, Clone)]
pub enum ExtGate {
    Basic(Gate),
    Macro { kind: MacroKind, fanin: Vec<String> },
}

/// Netlist that may still contain complex-gate macros. For a two-output
/// macro named `x`, the gate map holds the entry under `x` while the
/// defined nets are `x_S` and `x_C`.
#[derive(Debug, Clone)]
pub struct ExtNetlist {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub gates: IndexMap<String, ExtGate>,
}

fn valid_net_name(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'[' | b']'))
}

fn syntax(line: usize, msg: impl Into<String>) -> NetlistError {
    NetlistError::Syntax { line, msg: msg.into() }
}

struct RawLine {
    line: usize,
    item: RawItem,
}

enum RawItem {
    Input(String),
    Output(String),
    Gate { out: String, kind: String, fanin: Vec<String> },
}

fn scan_lines(text: &str) -> Result<Vec<RawLine>, NetlistError> {
    let mut items = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let code = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let code = code.trim();
        if code.is_empty() {
            continue;
        }
        let item = if let Some(rest) = strip_decl(code, "INPUT") {
            RawItem::Input(check_name(rest, line)?)
        } else if let Some(rest) = strip_decl(code, "OUTPUT") {
            RawItem::Output(check_name(rest, line)?)
        } else if let Some(eq) = code.find('=') {
            let out = code[..eq].trim();
            let rhs = code[eq + 1..].trim();
            let open = rhs
                .find('(')
                .ok_or_else(|| syntax(line, "expected `net = KIND(args)`"))?;
            if !rhs.ends_with(')') {
                return Err(syntax(line, "missing closing `)`"));
            }
            let kind = rhs[..open].trim().to_string();
            if kind.is_empty() {
                return Err(syntax(line, "missing gate kind"));
            }
            let args = &rhs[open + 1..rhs.len() - 1];
            let fanin: Vec<String> = args
                .split(',')
                .map(|a| a.trim().to_string())
                .filter(|a| !a.is_empty())
                .collect();
            if fanin.is_empty() {
                return Err(syntax(line, "gate with no inputs"));
            }
            for f in &fanin {
                if !valid_net_name(f) {
                    return Err(NetlistError::BadNetName { line, name: f.clone() });
                }
            }
            if !valid_net_name(out) {
                return Err(NetlistError::BadNetName { line, name: out.to_string() });
            }
            RawItem::Gate { out: out.to_string(), kind, fanin }
        } else {
            return Err(syntax(line, format!("unrecognized item `{code}`")));
        };
        items.push(RawLine { line, item });
    }
    Ok(items)
}

fn strip_decl<'a>(code: &'a str, kw: &str) -> Option<&'a str> {
    let rest = code.strip_prefix(kw)?.trim_start();
    let rest = rest.strip_prefix('(')?;
    let rest = rest.strip_suffix(')')?;
    Some(rest.trim())
}

fn check_name(s: &str, line: usize) -> Result<String, NetlistError> {
    if valid_net_name(s) {
        Ok(s.to_string())
    } else {
        Err(NetlistError::BadNetName { line, name: s.to_string() })
    }
}

/// Parse basic-gate `.bench` text into a validated [`Netlist`].
pub fn parse_bench(text: &str) -> Result<Netlist, NetlistError> {
    let mut n = Netlist::new("bench");
    let mut def_lines: IndexMap<String, usize> = IndexMap::new();
    for RawLine { line, item } in scan_lines(text)? {
        match item {
            RawItem::Input(name) => {
                if def_lines.insert(name.clone(), line).is_some() {
                    return Err(NetlistError::DuplicateNet { line, name });
                }
                n.inputs.push(name);
            }
            RawItem::Output(name) => n.outputs.push(name),
            RawItem::Gate { out, kind, fanin } => {
                let k = GateKind::from_name(&kind)
                    .ok_or(NetlistError::UnknownKind { line, name: kind })?;
                if def_lines.insert(out.clone(), line).is_some() {
                    return Err(NetlistError::DuplicateNet { line, name: out });
                }
                n.gates.insert(out, Gate::new(k, fanin));
            }
        }
    }
    n.validate()?;
    Ok(n)
}

/// Parse `.bench` text that may contain AOI/OAI/HA/FA macro gates.
pub fn parse_bench_extended(text: &str) -> Result<ExtNetlist, NetlistError> {
    let mut n = ExtNetlist {
        name: "bench".into(),
        inputs: Vec::new(),
        outputs: Vec::new(),
        gates: IndexMap::new(),
    };
    let mut defined: IndexMap<String, usize> = IndexMap::new();
    for RawLine { line, item } in scan_lines(text)? {
        match item {
            RawItem::Input(name) => {
                if defined.insert(name.clone(), line).is_some() {
                    return Err(NetlistError::DuplicateNet { line, name });
                }
                n.inputs.push(name);
            }
            RawItem::Output(name) => n.outputs.push(name),
            RawItem::Gate { out, kind, fanin } => {
                let defs: Vec<String> = if let Some(mk) = MacroKind::from_name(&kind) {
                    if fanin.len() != mk.arity() {
                        return Err(NetlistError::Arity {
                            gate: out.clone(),
                            kind: macro_name(mk),
                            got: fanin.len(),
                        });
                    }
                    let defs = if mk.two_output() {
                        vec![format!("{out}_S"), format!("{out}_C")]
                    } else {
                        vec![out.clone()]
                    };
                    n.gates.insert(out.clone(), ExtGate::Macro { kind: mk, fanin });
                    defs
                } else {
                    let k = GateKind::from_name(&kind)
                        .ok_or(NetlistError::UnknownKind { line, name: kind })?;
                    n.gates.insert(out.clone(), ExtGate::Basic(Gate::new(k, fanin)));
                    vec![out.clone()]
                };
                for d in defs {
                    if defined.insert(d.clone(), line).is_some() {
                        return Err(NetlistError::DuplicateNet { line, name: d });
                    }
                }
            }
        }
    }
    Ok(n)
}

fn macro_name(mk: MacroKind) -> &'static str {
    match mk {
        MacroKind::Aoi21 => "AOI21",
        MacroKind::Aoi22 => "AOI22",
        MacroKind::Oai21 => "OAI21",
        MacroKind::Oai22 => "OAI22",
        MacroKind::Ha => "HA",
        MacroKind::Fa => "FA",
    }
}

/// Expand every macro of an extended netlist into basic gates:
///
/// * `AOI21(a,b,c) = NOT(OR(AND(a,b), c))`, `AOI22` likewise over two AND pairs
/// * `OAI21(a,b,c) = NOT(AND(OR(a,b), c))`, `OAI22` dually
/// * `HA(a,b)`: `_S = XOR(a,b)`, `_C = AND(a,b)`
/// * `FA(a,b,c)`: `_S = XOR(a,b,c)`, `_C` = majority
pub fn decompose_complex(ext: &ExtNetlist) -> Result<Netlist, NetlistError> {
    let mut n = Netlist::new(ext.name.clone());
    n.inputs = ext.inputs.clone();
    n.outputs = ext.outputs.clone();

    let fresh = |base: &str, tag: &str, gates: &IndexMap<String, Gate>| {
        let mut cand = format!("{base}_{tag}");
        let mut i = 0usize;
        while gates.contains_key(&cand) || ext.gates.contains_key(&cand) {
            i += 1;
            cand = format!("{base}_{tag}{i}");
        }
        cand
    };

    for (out, g) in &ext.gates {
        match g {
            ExtGate::Basic(gate) => {
                n.gates.insert(out.clone(), gate.clone());
            }
            ExtGate::Macro { kind, fanin } => {
                let f = fanin;
                match kind {
                    MacroKind::Aoi21 => {
                        let t0 = fresh(out, "a", &n.gates);
                        n.gates.insert(t0.clone(), Gate::new(GateKind::And, vec![f[0].clone(), f[1].clone()]));
                        n.gates.insert(out.clone(), Gate::new(GateKind::Nor, vec![t0, f[2].clone()]));
                    }
                    MacroKind::Aoi22 => {
                        let t0 = fresh(out, "a", &n.gates);
                        let t1 = fresh(out, "b", &n.gates);
                        n.gates.insert(t0.clone(), Gate::new(GateKind::And, vec![f[0].clone(), f[1].clone()]));
                        n.gates.insert(t1.clone(), Gate::new(GateKind::And, vec![f[2].clone(), f[3].clone()]));
                        n.gates.insert(out.clone(), Gate::new(GateKind::Nor, vec![t0, t1]));
                    }
                    MacroKind::Oai21 => {
                        let t0 = fresh(out, "o", &n.gates);
                        n.gates.insert(t0.clone(), Gate::new(GateKind::Or, vec![f[0].clone(), f[1].clone()]));
                        n.gates.insert(out.clone(), Gate::new(GateKind::Nand, vec![t0, f[2].clone()]));
                    }
                    MacroKind::Oai22 => {
                        let t0 = fresh(out, "o", &n.gates);
                        let t1 = fresh(out, "p", &n.gates);
                        n.gates.insert(t0.clone(), Gate::new(GateKind::Or, vec![f[0].clone(), f[1].clone()]));
                        n.gates.insert(t1.clone(), Gate::new(GateKind::Or, vec![f[2].clone(), f[3].clone()]));
                        n.gates.insert(out.clone(), Gate::new(GateKind::Nand, vec![t0, t1]));
                    }
                    MacroKind::Ha => {
                        n.gates.insert(format!("{out}_S"), Gate::new(GateKind::Xor, vec![f[0].clone(), f[1].clone()]));
                        n.gates.insert(format!("{out}_C"), Gate::new(GateKind::And, vec![f[0].clone(), f[1].clone()]));
                    }
                    MacroKind::Fa => {
                        n.gates.insert(
                            format!("{out}_S"),
                            Gate::new(GateKind::Xor, vec![f[0].clone(), f[1].clone(), f[2].clone()]),
                        );
                        let t0 = fresh(out, "m0", &n.gates);
                        let t1 = fresh(out, "m1", &n.gates);
                        let t2 = fresh(out, "m2", &n.gates);
                        n.gates.insert(t0.clone(), Gate::new(GateKind::And, vec![f[0].clone(), f[1].clone()]));
                        n.gates.insert(t1.clone(), Gate::new(GateKind::And, vec![f[1].clone(), f[2].clone()]));
                        n.gates.insert(t2.clone(), Gate::new(GateKind::And, vec![f[0].clone(), f[2].clone()]));
                        n.gates.insert(format!("{out}_C"), Gate::new(GateKind::Or, vec![t0, t1, t2]));
                    }
                }
            }
        }
    }
    n.validate()?;
    Ok(n)
}

/// Serialize a netlist to `.bench` text. `parse_bench` of the result is
/// structurally identical to the argument.
pub fn serialize_bench(n: &Netlist) -> String {
    let mut s = String::new();
    for i in &n.inputs {
        s.push_str(&format!("INPUT({i})\n"));
    }
    for o in &n.outputs {
        s.push_str(&format!("OUTPUT({o})\n"));
    }
    s.push('\n');
    for (net, g) in &n.gates {
        s.push_str(&format!("{net} = {}({})\n", g.kind.name(), g.fanin.join(", ")));
    }
    s
}
