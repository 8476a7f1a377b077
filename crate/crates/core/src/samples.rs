//! Canonical small designs used by documentation, tests and the shipped
//! `circuits/` files.
//!
//! The base circuit has two primary inputs, four flip-flops and two
//! primary outputs. FFs `G3` and `G5` sit on a mutual feedback cycle;
//! `G7` and `G9` are feedback-free output-stage FFs.

use crate::lock::{KeyClass, LockedDesign, Polarity};
use crate::netlist::{parse_bench, Netlist};
use crate::scan::ScanChain;

/// The unlocked four-FF sample circuit.
pub const BASE_BENCH: &str = "\
INPUT(G0)
INPUT(G1)
OUTPUT(G7)
OUTPUT(G9)

G2 = NAND(G0, G5)
G4 = NOR(G3, G1)
G6 = XOR(G3, G1)
G8 = AND(G5, G0)
G3 = DFF(G2)
G5 = DFF(G4)
G7 = DFF(G6)
G9 = DFF(G8)
";

pub fn base() -> Netlist {
    let mut n = parse_bench(BASE_BENCH).expect("sample base parses");
    n.name = "sample4".into();
    n
}

/// Single scan chain over all four FFs, SI side first.
pub fn base_chain() -> Vec<ScanChain> {
    vec![ScanChain::new("sc0", "si0", "so0", ["G3", "G5", "G7", "G9"])]
}

/// Two chains: the feedback FFs on their own chain, the feedback-free
/// FFs stitched as a separate chain (SO-adjacent FF last).
pub fn split_chains() -> Vec<ScanChain> {
    vec![
        ScanChain::new("sc0", "si0", "so0", ["G3", "G5"]),
        ScanChain::new("sc1", "si1", "so1", ["G7", "G9"]),
    ]
}

/// EFF-style lock of the two feedback FFs: XOR key gate on `G3`
/// (correct bit 0), XNOR on `G5` (correct bit 1).
pub fn eff() -> LockedDesign {
    let mut d = LockedDesign::unlocked(base(), base_chain());
    d.netlist.name = "sample4_eff".into();
    d.lock_eff_ff("G3", "fok_0", Polarity::Xor).unwrap();
    d.lock_eff_ff("G5", "fok_1", Polarity::Xnor).unwrap();
    d
}

/// FI/SQ lock of the two feedback-free FFs with functional isolation.
///
/// `G7` gets an XOR FI gate (`fik_0`) and an XOR SQ gate (`sqk_0`);
/// `G9` gets an XOR FI gate (`fik_1`) and an XNOR SQ gate (`sqk_1`).
/// `G9` is the SO-adjacent flip-flop of its chain.
pub fn seql() -> LockedDesign {
    let mut d = LockedDesign::unlocked(base(), split_chains());
    d.netlist.name = "sample4_seql".into();
    d.lock_seql_ff("G7", "fik_0", Polarity::Xor, "sqk_0", Polarity::Xor).unwrap();
    d.lock_seql_ff("G9", "fik_1", Polarity::Xor, "sqk_1", Polarity::Xnor).unwrap();
    d
}

/// A small pipelined circuit whose combinational cloud carries four
/// pre-existing key gates (`K_c`), the input shape the key-pushing
/// defense starts from.
pub fn pipelined_kc() -> LockedDesign {
    let bench = "\
INPUT(a)
INPUT(b)
INPUT(c)
OUTPUT(q0)
OUTPUT(q1)

r0 = DFF(a)
r1 = DFF(b)
r2 = DFF(c)
t0 = NAND(r0, r1)
t1 = XOR(t0, r2)
t2 = OR(r1, r2)
t3 = AND(t1, t2)
t4 = NOR(t0, t3)
q0 = DFF(t3)
q1 = DFF(t4)
";
    let mut n = parse_bench(bench).expect("pipelined sample parses");
    n.name = "pipe_kc4".into();
    let chains = vec![
        ScanChain::new("sc0", "si0", "so0", ["r0", "r1", "r2"]),
        ScanChain::new("sc1", "si1", "so1", ["q0", "q1"]),
    ];
    let mut d = LockedDesign::unlocked(n, chains);
    d.lock_comb_net("t0", "ck_0", Polarity::Xor).unwrap();
    d.lock_comb_net("t1", "ck_1", Polarity::Xnor).unwrap();
    d.lock_comb_net("t2", "ck_2", Polarity::Xor).unwrap();
    d.lock_comb_net("t3", "ck_3", Polarity::Xnor).unwrap();
    debug_assert_eq!(d.correct_key.names_in_class(KeyClass::Comb).count(), 4);
    d
}
