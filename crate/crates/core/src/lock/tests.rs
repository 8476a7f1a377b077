use super::*;
use crate::samples;
use crate::sat::{check_equivalence, DEFAULT_SOLVE_LIMIT};
use crate::unroll::apply_key_vector;
use std::collections::HashMap;

#[test]
fn eff_lock_structure_and_correct_bits() {
    let d = samples::eff();
    assert_eq!(d.correct_key.len(), 2);
    assert_eq!(d.correct_key.bit("fok_0"), Some(false), "XOR key passes at 0");
    assert_eq!(d.correct_key.bit("fok_1"), Some(true), "XNOR key passes at 1");
    // One key gate per locked FF.
    assert_eq!(d.locked_count(), 2);
    assert!(d.netlist.gate("G3_enc").is_some());
    assert!(d.netlist.gate("G5_enc").is_some());
    // Functional readers were rewired to the encrypted nets.
    assert!(d.netlist.gate("G4").unwrap().fanin.contains(&"G3_enc".to_string()));
    assert!(d.netlist.gate("G2").unwrap().fanin.contains(&"G5_enc".to_string()));
}

#[test]
fn eff_correct_key_is_equivalent_to_original() {
    let d = samples::eff();
    let applied = d.apply_correct_key();
    let r = check_equivalence(&applied, &samples::base(), DEFAULT_SOLVE_LIMIT).unwrap();
    assert!(r.is_equivalent());
}

#[test]
fn seql_lock_adds_two_keys_per_ff_and_keeps_function() {
    let mut d = LockedDesign::unlocked(samples::base(), samples::split_chains());
    d.lock_seql_ff("G7", "fik_0", Polarity::Xor, "sqk_0", Polarity::Xor).unwrap();
    assert_eq!(d.correct_key.len(), 2);

    let full = samples::seql();
    // Random-simulation check of the correct key: 100 vectors.
    let original = samples::base();
    let applied = full.apply_correct_key();
    let (comp_a, sig_a) = crate::netlist::CompiledComb::compile_shell(&applied).unwrap();
    let (comp_b, sig_b) = crate::netlist::CompiledComb::compile_shell(&original).unwrap();
    assert_eq!(sig_a.ffs.len(), sig_b.ffs.len());
    let mut x = 0x1234_5678_9abc_def0u64;
    for _ in 0..100 {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let ins: Vec<bool> = (0..comp_a.input_count()).map(|i| x >> (i % 60) & 1 != 0).collect();
        assert_eq!(comp_a.eval_bools(&ins), comp_b.eval_bools(&ins));
    }
}

#[test]
fn seql_rejects_feedback_ff() {
    let mut d = LockedDesign::unlocked(samples::base(), samples::split_chains());
    let err = d.lock_seql_ff("G3", "fik_0", Polarity::Xor, "sqk_0", Polarity::Xor).unwrap_err();
    assert!(matches!(err, LockError::FeedbackFf(_)));
}

#[test]
fn seql_correct_key_restores_gate_count() {
    let d = samples::seql();
    let applied = d.apply_correct_key();
    assert_eq!(applied.gate_count(), samples::base().gate_count());
}

#[test]
fn seql_isolation_sq_keys_do_not_touch_functional_cone() {
    // Constant-propagating any K_sq assignment leaves the functional
    // cone unchanged gate for gate.
    let d = samples::seql();
    for sq_bits in 0..4u32 {
        let mut key = d.correct_key.clone();
        key.set_bit("sqk_0", sq_bits & 1 != 0);
        key.set_bit("sqk_1", sq_bits & 2 != 0);
        let applied = apply_key_vector(&d.netlist, &key, Some(&[KeyClass::Sq])).unwrap();
        // All gates of the result must match the locked netlist minus
        // the SQ gates (which die once their keys become constant).
        for (net, gate) in &applied.gates {
            assert_eq!(d.netlist.gates.get(net), Some(gate), "net {net} changed");
        }
        assert_eq!(applied.gate_count(), d.netlist.gate_count() - 2);
    }
}

#[test]
fn comb_lock_and_removal_round_trip() {
    let mut d = samples::pipelined_kc();
    let gates_before = d.netlist.gate_count();
    assert_eq!(d.correct_key.len(), 4);
    d.remove_comb_key("ck_0").unwrap();
    assert_eq!(d.correct_key.len(), 3);
    assert_eq!(d.netlist.gate_count(), gates_before - 1);
    // Still equivalent to the fully keyed function.
    let a = d.apply_correct_key();
    let b = samples::pipelined_kc().apply_correct_key();
    assert!(check_equivalence(&a, &b, DEFAULT_SOLVE_LIMIT).unwrap().is_equivalent());
}

#[test]
fn restitch_moves_locked_ffs_to_so_suffix() {
    let mut d = LockedDesign::unlocked(samples::base(), vec![crate::scan::ScanChain::new(
        "sc0",
        "si0",
        "so0",
        ["G7", "G3", "G9", "G5"],
    )]);
    d.lock_seql_ff("G7", "fik_0", Polarity::Xor, "sqk_0", Polarity::Xor).unwrap();
    d.lock_seql_ff("G9", "fik_1", Polarity::Xor, "sqk_1", Polarity::Xnor).unwrap();
    d.restitch_locked_suffix();
    assert_eq!(d.chains[0].order, vec!["G3", "G5", "G7", "G9"]);
}

#[test]
fn key_file_round_trip() {
    let d = samples::seql();
    let text = d.correct_key.to_file_string();
    let parsed = KeyVector::parse_file(&text).unwrap();
    assert_eq!(parsed, d.correct_key);
    assert!(text.contains("fik_0 0 Kfi XOR"));
    assert!(text.contains("sqk_1 1 Ksq XNOR"));
}

#[test]
fn reconstruct_recovers_styles() {
    for d in [samples::seql(), samples::eff(), samples::pipelined_kc()] {
        let rebuilt = LockedDesign::reconstruct(
            d.netlist.clone(),
            d.chains.clone(),
            d.correct_key.clone(),
        )
        .unwrap();
        assert_eq!(rebuilt.styles, d.styles);
    }
}

#[test]
fn overhead_percentages() {
    // 2 key gates on a 100-gate circuit -> 2%.
    let n = crate::gen::random_comb("oh", 4, 100, 2, 3);
    let mut d = LockedDesign::unlocked(n, vec![]);
    d.lock_comb_net("g10", "k0", Polarity::Xor).unwrap();
    d.lock_comb_net("g20", "k1", Polarity::Xnor).unwrap();
    let r = overhead_report(&d);
    assert_eq!(r.key_gate_count, 2);
    assert_eq!(r.gate_count, 100);
    assert!((r.percent - 2.0).abs() < 1e-12);

    // The four-key FI/SQ sample: 4 / |original gates|.
    let d = samples::seql();
    let r = overhead_report(&d);
    assert_eq!(r.key_gate_count, 4);
    assert_eq!(r.gate_count, 4);
    assert!((r.percent - 100.0).abs() < 1e-12);
}

#[test]
fn wide_synthetic_overhead_matches_reported_scale() {
    // A 10,012-gate synthetic with 8 FI/SQ locks: 16 key gates, 0.16%.
    let (n, chains) = crate::gen::wide_synthetic("b14ish", 10012, 8);
    let mut d = LockedDesign::unlocked(n, chains);
    for t in 0..8 {
        d.lock_seql_ff(
            &format!("f{t}"),
            format!("fik_{t}"),
            Polarity::Xor,
            format!("sqk_{t}"),
            if t % 2 == 0 { Polarity::Xor } else { Polarity::Xnor },
        )
        .unwrap();
    }
    let r = overhead_report(&d);
    assert_eq!(r.key_gate_count, 16);
    assert_eq!(r.gate_count, 10012);
    assert!((r.percent - 100.0 * 16.0 / 10012.0).abs() < 1e-12);
}

#[test]
fn key_vector_net_inversions() {
    let d = samples::seql();
    // Correct key has all-zero net inversions.
    for name in d.correct_key.names() {
        assert_eq!(d.correct_key.net_inversion(name), Some(false));
    }
    let mut bits: HashMap<String, bool> = d.correct_key.assignment();
    bits.insert("sqk_1".into(), false); // XNOR with bit 0 inverts
    let flipped = d.correct_key.with_bits(&bits);
    assert_eq!(flipped.net_inversion("sqk_1"), Some(true));
}
