use super::*;
use crate::lock::{ibla, ikpa, DefenseConfig, DefenseStop, LockedDesign, Polarity};
use crate::netlist::CompiledComb;
use crate::samples;
use crate::scan::ScanChain;
use crate::unroll::{unroll, PiMode};

fn limits() -> AttackLimits {
    AttackLimits { time: Duration::from_secs(60) }
}

fn run(d: &LockedDesign, cycles: usize, kind: AttackKind) -> AttackReport {
    verify_flow(d, cycles, kind, &limits(), PiMode::Constant).unwrap()
}

#[test]
fn forced_single_comb_key_is_recovered() {
    // One redundant XOR key gate whose value the scan responses pin.
    let mut d = samples::pipelined_kc();
    for k in ["ck_1", "ck_2", "ck_3"] {
        d.remove_comb_key(k).unwrap();
    }
    let report = run(&d, 1, AttackKind::Sat);
    let key = report.recovered_key.as_ref().unwrap();
    assert_eq!(key.bit("ck_0"), d.correct_key.bit("ck_0"));
    assert_eq!(report.verdict, Verdict::Broken);
    assert_eq!(report.kc_correct, Some(true));
}

#[test]
fn eff_sample_is_broken() {
    let report = run(&samples::eff(), 1, AttackKind::Sat);
    assert_eq!(report.verdict, Verdict::Broken);
    assert!(report.functionally_equivalent);
    assert!(report.scan_correct);
    // EFF: the scan-correct key is unique, so the attack recovers the
    // exact correct key.
    let key = report.recovered_key.unwrap();
    assert_eq!(key.bit("fok_0"), Some(false));
    assert_eq!(key.bit("fok_1"), Some(true));
}

#[test]
fn seql_sample_is_resilient_with_wrong_fi() {
    let report = run(&samples::seql(), 1, AttackKind::Sat);
    assert_eq!(report.verdict, Verdict::Resilient);
    assert!(report.scan_correct);
    assert!(!report.functionally_equivalent);
    assert_eq!(report.kc_correct, None, "no combinational keys here");
    assert!(
        report.fi_inversions.iter().any(|(_, inv)| *inv),
        "at least one FI net inversion should be set"
    );
}

#[test]
fn double_dip_agrees_with_sat_attack() {
    for d in [samples::seql(), samples::eff(), samples::pipelined_kc()] {
        let a = run(&d, 1, AttackKind::Sat);
        let b = run(&d, 1, AttackKind::DoubleDip);
        assert_eq!(a.verdict, b.verdict, "{}", d.netlist.name);
        // Both attacks extract the same canonical key from the same
        // consistent set.
        assert_eq!(
            a.recovered_key.as_ref().map(|k| k.assignment()),
            b.recovered_key.as_ref().map(|k| k.assignment())
        );
    }
}

#[test]
fn double_dip_single_key_bit_converges_in_one_dip() {
    let mut d = samples::pipelined_kc();
    for k in ["ck_1", "ck_2", "ck_3"] {
        d.remove_comb_key(k).unwrap();
    }
    let report = run(&d, 1, AttackKind::DoubleDip);
    assert!(report.dip_count <= 1, "got {} DIPs", report.dip_count);
    assert_eq!(report.verdict, Verdict::Broken);
}

#[test]
fn unlocked_design_is_trivially_broken() {
    let d = LockedDesign::unlocked(samples::base(), samples::base_chain());
    let report = run(&d, 1, AttackKind::Sat);
    assert_eq!(report.verdict, Verdict::Broken);
    assert_eq!(report.dip_count, 0);
    assert!(report.recovered_key.unwrap().is_empty());
}

#[test]
fn seql_multi_cycle_stays_resilient() {
    let report = run(&samples::seql(), 2, AttackKind::Sat);
    assert_eq!(report.verdict, Verdict::Resilient);
}

#[test]
fn every_dip_strictly_shrinks_the_consistent_key_set() {
    for d in [samples::seql(), samples::pipelined_kc()] {
        let inst = unroll(&d, 1, PiMode::Constant).unwrap();
        let report = run(&d, 1, AttackKind::Sat);
        let comp = CompiledComb::compile(&inst.comb).unwrap();
        let keys = inst.key_inputs.clone();
        let consistent = |prefix: &[DipRecord]| -> usize {
            (0..(1u64 << keys.len()))
                .filter(|&kidx| {
                    prefix.iter().all(|dip| {
                        let ins: Vec<bool> = comp
                            .inputs
                            .iter()
                            .map(|name| {
                                dip.inputs.get(name).copied().unwrap_or_else(|| {
                                    let i = keys.iter().position(|k| k == name).unwrap();
                                    kidx >> i & 1 != 0
                                })
                            })
                            .collect();
                        comp.eval_bools(&ins) == dip.response
                    })
                })
                .count()
        };
        let mut prev = consistent(&[]);
        for i in 1..=report.dips.len() {
            let now = consistent(&report.dips[..i]);
            assert!(now < prev, "DIP {i} failed to shrink the set ({prev} -> {now})");
            prev = now;
        }
    }
}

#[test]
fn recovered_key_lies_in_the_kag_leaf_set() {
    // FI/SQ-locked pipelines with random polarities: the recovered key
    // is always one of the 2^n scan-correct leaves, and hits the
    // functionally correct one rarely.
    let mut functionally_correct = 0usize;
    let trials = 16;
    for seed in 0..trials {
        let (n, chains) = crate::gen::pipeline("kagp", 2, 2, 8, 2, seed);
        let mut d = LockedDesign::unlocked(n, chains);
        let mut rng_bits = seed.wrapping_mul(0x9e37_79b9);
        for (i, ff) in ["o0", "o1"].iter().enumerate() {
            let fp = if rng_bits & 1 != 0 { Polarity::Xnor } else { Polarity::Xor };
            let sp = if rng_bits & 2 != 0 { Polarity::Xnor } else { Polarity::Xor };
            rng_bits >>= 2;
            d.lock_seql_ff(*ff, format!("fik_{i}"), fp, format!("sqk_{i}"), sp).unwrap();
        }
        d.restitch_locked_suffix();
        let report = run(&d, 1, AttackKind::Sat);
        let key = report.recovered_key.unwrap().assignment();
        let leaves = crate::kag::scan_correct_keys(&d).unwrap();
        assert!(
            leaves.iter().any(|leaf| *leaf == key),
            "seed {seed}: recovered key not scan-correct by the closed form"
        );
        if report.functionally_equivalent {
            functionally_correct += 1;
        }
    }
    // Expected rate 1/2^n = 1/4; allow a generous band.
    assert!(
        functionally_correct <= trials as usize * 3 / 4,
        "functionally correct in {functionally_correct}/{trials} runs"
    );
}

#[test]
fn ibla_terminates_with_functional_corruption() {
    let out = ibla(
        &samples::base(),
        &samples::split_chains(),
        1.0,
        &DefenseConfig { seed: 3, ..DefenseConfig::default() },
    )
    .unwrap();
    assert!(out.corrupted);
    assert_eq!(out.stop, DefenseStop::Corrupted);
    assert!(out.locked >= 1 && out.locked <= 2);
    let last = out.reports.last().unwrap();
    assert_eq!(last.verdict, Verdict::Resilient);
}

#[test]
fn ibla_zero_budget_is_an_error() {
    let err = ibla(
        &samples::base(),
        &samples::split_chains(),
        0.01,
        &DefenseConfig::default(),
    )
    .unwrap_err();
    assert!(matches!(err, crate::lock::LockError::BudgetExhausted { .. }));
}

#[test]
fn ibla_locks_only_feedback_free_ffs_and_respects_budget() {
    let (n, chains) = crate::gen::sequential("seq10", 3, 6, 24, 11);
    let gamma = 0.25;
    let out = ibla(&n, &chains, gamma, &DefenseConfig { seed: 5, ..DefenseConfig::default() })
        .unwrap();
    let budget = (gamma * n.comb_gate_count() as f64).floor() as usize;
    assert!(out.design.correct_key.len() <= budget);
    let info = out.design.netlist.classify_feedback();
    for f in info {
        if out.design.styles[&f.ff_net].is_locked() {
            assert!(!f.has_feedback, "locked a feedback FF: {}", f.ff_net);
        }
    }
}

#[test]
fn ikpa_preserves_key_budget_and_corrupts() {
    let input = samples::pipelined_kc();
    let before = input.correct_key.len();
    let out = ikpa(&input, &DefenseConfig { seed: 1, ..DefenseConfig::default() }).unwrap();
    assert!(out.design.correct_key.len() <= before);
    assert!(out.locked >= 1);
    if out.corrupted {
        let last = out.reports.last().unwrap();
        assert!(last.scan_correct && !last.functionally_equivalent);
        assert_eq!(last.kc_correct, Some(true), "remaining comb keys decrypt correctly");
    } else {
        assert!(matches!(
            out.stop,
            DefenseStop::CombKeysExhausted | DefenseStop::CandidatesExhausted
        ));
    }
}

#[test]
fn ikpa_without_comb_keys_is_an_error() {
    let d = LockedDesign::unlocked(samples::base(), samples::split_chains());
    assert!(matches!(
        ikpa(&d, &DefenseConfig::default()),
        Err(crate::lock::LockError::NoCombKeys)
    ));
}

#[test]
fn signature_mismatch_is_detected() {
    let d = samples::seql();
    let inst = unroll(&d, 1, PiMode::Constant).unwrap();
    // Oracle with a different chain order.
    let mut chains = d.chains.clone();
    chains[1] = ScanChain::new("sc1", "si1", "so1", ["G9", "G7"]);
    let oracle = crate::scan::OracleConfig::new(d.apply_correct_key(), chains, 1).unwrap();
    assert!(matches!(
        sat_attack(&inst, &oracle, &limits()),
        Err(AttackError::SignatureMismatch(_))
    ));
}

#[test]
fn csv_row_shape() {
    let report = run(&samples::seql(), 1, AttackKind::Sat);
    let row = report.csv_row();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields.len(), 7);
    assert_eq!(fields[0], "sample4_seql");
    assert_eq!(fields[1], "seql");
    assert_eq!(fields[2], "2");
    assert_eq!(fields[6], "RESILIENT");
}
