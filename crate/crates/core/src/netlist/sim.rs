//! Bit-parallel netlist simulation.
//!
//! [`CompiledComb`] flattens a combinational view into a topologically
//! ordered step list over integer slots, then evaluates 64 input
//! patterns per call using one `u64` lane per net. Sequential netlists
//! are compiled through their combinational shell: DFF outputs become
//! extra inputs, DFF data nets extra outputs.

use super::{GateKind, Netlist, NetlistError};
use std::collections::{BTreeMap, HashMap};

/// Pseudo-I/O signature of a sequential netlist's combinational shell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShellSignature {
    pub pis: Vec<String>,
    pub pos: Vec<String>,
    /// `(q_net, d_net)` per flip-flop, in definition order.
    pub ffs: Vec<(String, String)>,
}

struct Step {
    kind: GateKind,
    out: u32,
    fanin: Vec<u32>,
}

/// A compiled combinational evaluator.
pub struct CompiledComb {
    /// Input slot names, in slot order.
    pub inputs: Vec<String>,
    /// Output names, in output order.
    pub outputs: Vec<String>,
    steps: Vec<Step>,
    output_slots: Vec<u32>,
    n_slots: usize,
}

impl CompiledComb {
    /// Compile a purely combinational netlist over its declared I/O.
    pub fn compile(n: &Netlist) -> Result<CompiledComb, NetlistError> {
        if let Some((q, _)) = n.dffs().next() {
            return Err(NetlistError::SequentialGate { name: q.clone() });
        }
        Self::build(n, n.inputs.clone(), n.outputs.clone())
    }

    /// Compile the combinational shell of a (possibly sequential)
    /// netlist: inputs are PIs then FF Q nets, outputs POs then FF D nets.
    pub fn compile_shell(n: &Netlist) -> Result<(CompiledComb, ShellSignature), NetlistError> {
        let ffs: Vec<(String, String)> =
            n.dffs().map(|(q, g)| (q.clone(), g.fanin[0].clone())).collect();
        let mut inputs = n.inputs.clone();
        inputs.extend(ffs.iter().map(|(q, _)| q.clone()));
        let mut outputs = n.outputs.clone();
        outputs.extend(ffs.iter().map(|(_, d)| d.clone()));
        let sig = ShellSignature { pis: n.inputs.clone(), pos: n.outputs.clone(), ffs };
        Ok((Self::build(n, inputs, outputs)?, sig))
    }

    fn build(n: &Netlist, inputs: Vec<String>, outputs: Vec<String>) -> Result<CompiledComb, NetlistError> {
        let mut slot: HashMap<&str, u32> = HashMap::new();
        for (i, name) in inputs.iter().enumerate() {
            slot.insert(name.as_str(), i as u32);
        }
        let order = n.comb_topo_order()?;
        let mut next = inputs.len() as u32;
        for net in &order {
            slot.insert(net, next);
            next += 1;
        }
        let mut steps = Vec::with_capacity(order.len());
        for net in &order {
            let g = &n.gates[*net];
            let fanin = g
                .fanin
                .iter()
                .map(|f| {
                    slot.get(f.as_str()).copied().ok_or_else(|| NetlistError::MissingAssignment {
                        name: f.clone(),
                    })
                })
                .collect::<Result<Vec<u32>, _>>()?;
            steps.push(Step { kind: g.kind, out: slot[*net], fanin });
        }
        let output_slots = outputs
            .iter()
            .map(|o| {
                slot.get(o.as_str())
                    .copied()
                    .ok_or_else(|| NetlistError::NoSuchNet { name: o.clone() })
            })
            .collect::<Result<Vec<u32>, _>>()?;
        Ok(CompiledComb { inputs, outputs, steps, output_slots, n_slots: next as usize })
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn slot_count(&self) -> usize {
        self.n_slots
    }

    /// Evaluate 64 patterns at once. `input_words[i]` carries input `i`
    /// across the lanes; `out[j]` receives output `j`. `scratch` is
    /// resized as needed and may be reused across calls.
    pub fn eval_words(&self, input_words: &[u64], scratch: &mut Vec<u64>, out: &mut [u64]) {
        debug_assert_eq!(input_words.len(), self.inputs.len());
        debug_assert_eq!(out.len(), self.output_slots.len());
        scratch.clear();
        scratch.resize(self.n_slots, 0);
        scratch[..input_words.len()].copy_from_slice(input_words);
        let mut vals: [u64; 8] = [0; 8];
        for step in &self.steps {
            let nf = step.fanin.len();
            let v = if nf <= 8 {
                for (k, &f) in step.fanin.iter().enumerate() {
                    vals[k] = scratch[f as usize];
                }
                step.kind.eval_words(&vals[..nf])
            } else {
                let tmp: Vec<u64> = step.fanin.iter().map(|&f| scratch[f as usize]).collect();
                step.kind.eval_words(&tmp)
            };
            scratch[step.out as usize] = v;
        }
        for (j, &s) in self.output_slots.iter().enumerate() {
            out[j] = scratch[s as usize];
        }
    }

    /// Single-pattern convenience wrapper over [`Self::eval_words`].
    pub fn eval_bools(&self, inputs: &[bool]) -> Vec<bool> {
        let words: Vec<u64> = inputs.iter().map(|&b| if b { !0 } else { 0 }).collect();
        let mut scratch = Vec::new();
        let mut out = vec![0u64; self.output_slots.len()];
        self.eval_words(&words, &mut scratch, &mut out);
        out.iter().map(|&w| w & 1 != 0).collect()
    }
}

/// Lane word for input `i` within 64-pattern block `block`, enumerating
/// input patterns in binary-counter order (input 0 is the fastest bit).
pub fn input_lane(i: usize, block: usize) -> u64 {
    const MASKS: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    if i < 6 {
        MASKS[i]
    } else if (block >> (i - 6)) & 1 != 0 {
        !0
    } else {
        0
    }
}

/// Number of 64-pattern blocks needed for `n` inputs.
pub fn block_count(n: usize) -> usize {
    if n <= 6 {
        1
    } else {
        1usize << (n - 6)
    }
}

/// Lane-validity mask for a block when `n < 6` (fewer than 64 patterns).
pub fn lane_mask(n: usize) -> u64 {
    if n >= 6 {
        !0
    } else {
        (1u64 << (1usize << n)) - 1
    }
}

impl Netlist {
    /// Evaluate the combinational logic for one cycle. `pi` assigns the
    /// primary inputs, `state` the FF outputs. Returns the primary output
    /// values and the next state, the latter keyed by FF output net.
    pub fn simulate(
        &self,
        pi: &HashMap<String, bool>,
        state: &HashMap<String, bool>,
    ) -> Result<(BTreeMap<String, bool>, BTreeMap<String, bool>), NetlistError> {
        let (comp, sig) = CompiledComb::compile_shell(self)?;
        let mut inputs = Vec::with_capacity(comp.input_count());
        for name in &sig.pis {
            inputs.push(*pi.get(name).ok_or_else(|| NetlistError::MissingAssignment {
                name: name.clone(),
            })?);
        }
        for (q, _) in &sig.ffs {
            inputs.push(*state.get(q).ok_or_else(|| NetlistError::MissingAssignment {
                name: q.clone(),
            })?);
        }
        let out = comp.eval_bools(&inputs);
        let po = sig.pos.iter().cloned().zip(out.iter().copied()).collect();
        let next = sig
            .ffs
            .iter()
            .map(|(q, _)| q.clone())
            .zip(out[sig.pos.len()..].iter().copied())
            .collect();
        Ok((po, next))
    }
}
