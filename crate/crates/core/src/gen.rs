//! Deterministic circuit generators for experiments and tests.

use crate::netlist::{Gate, GateKind, Netlist};
use crate::scan::ScanChain;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pick_kind(rng: &mut ChaCha8Rng) -> GateKind {
    // Bias towards two-input gates; inverters and muxes stay rare
    // enough that cones keep mixing.
    match rng.gen_range(0..12u32) {
        0..=2 => GateKind::And,
        3..=5 => GateKind::Or,
        6 => GateKind::Nand,
        7 => GateKind::Nor,
        8 => GateKind::Xor,
        9 => GateKind::Xnor,
        10 => GateKind::Not,
        _ => GateKind::Mux,
    }
}

fn random_gate(rng: &mut ChaCha8Rng, kind: GateKind, pool: &[String]) -> Gate {
    let pick = |rng: &mut ChaCha8Rng| pool[rng.gen_range(0..pool.len())].clone();
    let fanin = match kind {
        GateKind::Not | GateKind::Buf => vec![pick(rng)],
        GateKind::Mux => vec![pick(rng), pick(rng), pick(rng)],
        _ => {
            let n = if rng.gen_range(0..4u32) == 0 { 3 } else { 2 };
            (0..n).map(|_| pick(rng)).collect()
        }
    };
    Gate::new(kind, fanin)
}

/// Random combinational DAG: gates draw fan-ins from inputs and earlier
/// gates, outputs tap the last portion of the netlist.
pub fn random_comb(
    name: impl Into<String>,
    inputs: usize,
    gates: usize,
    outputs: usize,
    seed: u64,
) -> Netlist {
    assert!(inputs >= 1 && gates >= outputs && outputs >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = Netlist::new(name);
    n.inputs = (0..inputs).map(|i| format!("i{i}")).collect();
    let mut pool: Vec<String> = n.inputs.clone();
    for g in 0..gates {
        let net = format!("g{g}");
        let kind = pick_kind(&mut rng);
        n.gates.insert(net.clone(), random_gate(&mut rng, kind, &pool));
        pool.push(net);
    }
    n.outputs = (0..outputs).map(|k| format!("g{}", gates - 1 - k)).collect();
    debug_assert!(n.validate().is_ok());
    n
}

/// A pipelined circuit: an input register bank fed by the PIs, a random
/// combinational cloud, and an output register bank driving the POs.
/// The output registers come on their own scan chain (SO-adjacent FF
/// last), the input registers on another.
pub fn pipeline(
    name: impl Into<String>,
    pis: usize,
    input_regs: usize,
    cloud: usize,
    output_regs: usize,
    seed: u64,
) -> (Netlist, Vec<ScanChain>) {
    assert!(pis >= 1 && input_regs >= 1 && cloud >= output_regs && output_regs >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = Netlist::new(name);
    n.inputs = (0..pis).map(|i| format!("p{i}")).collect();
    for r in 0..input_regs {
        n.gates.insert(format!("r{r}"), Gate::new(GateKind::Dff, vec![format!("p{}", r % pis)]));
    }
    let mut pool: Vec<String> = (0..input_regs).map(|r| format!("r{r}")).collect();
    for g in 0..cloud {
        let net = format!("w{g}");
        let kind = pick_kind(&mut rng);
        n.gates.insert(net.clone(), random_gate(&mut rng, kind, &pool));
        pool.push(net);
    }
    for o in 0..output_regs {
        let src = format!("w{}", cloud - 1 - o);
        n.gates.insert(format!("o{o}"), Gate::new(GateKind::Dff, vec![src]));
        n.outputs.push(format!("o{o}"));
    }
    let chains = vec![
        ScanChain::new("icr", "si0", "so0", (0..input_regs).map(|r| format!("r{r}"))),
        ScanChain::new("ocr", "si1", "so1", (0..output_regs).map(|o| format!("o{o}"))),
    ];
    debug_assert!(n.validate().is_ok());
    (n, chains)
}

/// A sequential circuit with a cyclic core register ring (all flagged
/// as feedback) and terminal output-stage FFs that are feedback-free.
/// Chains: one for the core, one for the terminals.
pub fn sequential(
    name: impl Into<String>,
    core_ffs: usize,
    terminal_ffs: usize,
    cloud: usize,
    seed: u64,
) -> (Netlist, Vec<ScanChain>) {
    assert!(core_ffs >= 2 && terminal_ffs >= 1 && cloud >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = Netlist::new(name);
    n.inputs = vec!["p0".into(), "p1".into()];

    // Core ring: FF i's data cone reads FF (i+1) mod k, closing one big
    // cycle through all core FFs.
    for i in 0..core_ffs {
        let succ = format!("c{}", (i + 1) % core_ffs);
        let kind = match rng.gen_range(0..4u32) {
            0 => GateKind::Nand,
            1 => GateKind::Nor,
            2 => GateKind::Xor,
            _ => GateKind::Xnor,
        };
        let pi = if rng.gen::<bool>() { "p0" } else { "p1" };
        n.gates.insert(format!("cd{i}"), Gate::new(kind, vec![succ, pi.into()]));
        n.gates.insert(format!("c{i}"), Gate::new(GateKind::Dff, vec![format!("cd{i}")]));
    }

    let mut pool: Vec<String> = (0..core_ffs).map(|i| format!("c{i}")).collect();
    pool.push("p0".into());
    pool.push("p1".into());
    for g in 0..cloud {
        let net = format!("w{g}");
        let kind = pick_kind(&mut rng);
        n.gates.insert(net.clone(), random_gate(&mut rng, kind, &pool));
        pool.push(net);
    }

    for t in 0..terminal_ffs {
        let src = format!("w{}", cloud - 1 - (t % cloud));
        n.gates.insert(format!("t{t}"), Gate::new(GateKind::Dff, vec![src]));
        n.outputs.push(format!("t{t}"));
    }

    let chains = vec![
        ScanChain::new("core", "si0", "so0", (0..core_ffs).map(|i| format!("c{i}"))),
        ScanChain::new("term", "si1", "so1", (0..terminal_ffs).map(|t| format!("t{t}"))),
    ];
    debug_assert!(n.validate().is_ok());
    (n, chains)
}

/// A wide synthetic netlist with an exact combinational gate count and
/// a bank of feedback-free terminal FFs, for overhead accounting.
pub fn wide_synthetic(
    name: impl Into<String>,
    comb_gates: usize,
    terminal_ffs: usize,
) -> (Netlist, Vec<ScanChain>) {
    assert!(comb_gates >= terminal_ffs + 2 && terminal_ffs >= 1);
    let mut n = Netlist::new(name);
    n.inputs = vec!["a".into(), "b".into()];
    let mut prev = "a".to_string();
    for g in 0..comb_gates {
        let net = format!("g{g}");
        let kind = match g % 3 {
            0 => GateKind::Nand,
            1 => GateKind::Xor,
            _ => GateKind::Nor,
        };
        n.gates.insert(net.clone(), Gate::new(kind, vec![prev.clone(), "b".into()]));
        prev = net;
    }
    let stride = comb_gates / terminal_ffs;
    for t in 0..terminal_ffs {
        let src = format!("g{}", (t + 1) * stride - 1);
        n.gates.insert(format!("f{t}"), Gate::new(GateKind::Dff, vec![src]));
        n.outputs.push(format!("f{t}"));
    }
    n.outputs.push(format!("g{}", comb_gates - 1));
    let chains =
        vec![ScanChain::new("sc", "si0", "so0", (0..terminal_ffs).map(|t| format!("f{t}")))];
    debug_assert!(n.validate().is_ok());
    (n, chains)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let a = random_comb("rc", 6, 30, 3, 7);
        let b = random_comb("rc", 6, 30, 3, 7);
        assert_eq!(a, b);
        let c = random_comb("rc", 6, 30, 3, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn pipeline_is_feedback_free() {
        let (n, chains) = pipeline("pp", 3, 4, 20, 5, 1);
        assert!(n.classify_feedback().iter().all(|f| !f.has_feedback));
        assert_eq!(chains.iter().map(|c| c.len()).sum::<usize>(), n.ff_count());
    }

    #[test]
    fn sequential_core_has_feedback_terminals_do_not() {
        let (n, _) = sequential("sq", 3, 4, 12, 2);
        let info = n.classify_feedback();
        for f in info {
            let is_core = f.ff_net.starts_with('c');
            assert_eq!(f.has_feedback, is_core, "{}", f.ff_net);
        }
    }

    #[test]
    fn wide_synthetic_gate_count_is_exact() {
        let (n, _) = wide_synthetic("ws", 10012, 8);
        assert_eq!(n.comb_gate_count(), 10012);
        assert_eq!(n.ff_count(), 8);
        assert!(n.classify_feedback().iter().all(|f| !f.has_feedback));
    }
}
