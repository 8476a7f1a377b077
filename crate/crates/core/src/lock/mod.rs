//! Locking transforms and the two scan-locking defenses.
//!
//! A [`LockedDesign`] couples a keyed netlist with its scan chains, the
//! per-FF lock styles and the correct key. Three primitive transforms
//! exist: an FO key gate on a flip-flop output (EFF style, affecting
//! both function and scan), a functionally-isolated FI/SQ pair (key
//! gate on the data input plus a key gate on the scan output only), and
//! a plain combinational key gate on an internal net.

mod defense;

pub use defense::{ibla, ikpa, overhead_report, DefenseConfig, DefenseOutcome, DefenseStop, OverheadReport};

use crate::netlist::{Gate, GateKind, Netlist, NetlistError};
use crate::scan::{validate_chains, ScanChain, ScanError};
use indexmap::IndexMap;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Xor,
    Xnor,
}

impl Polarity {
    pub fn gate_kind(self) -> GateKind {
        match self {
            Polarity::Xor => GateKind::Xor,
            Polarity::Xnor => GateKind::Xnor,
        }
    }

    /// The key bit under which the gate passes its data input through.
    pub fn identity_bit(self) -> bool {
        self == Polarity::Xnor
    }

    pub fn token(self) -> &'static str {
        match self {
            Polarity::Xor => "XOR",
            Polarity::Xnor => "XNOR",
        }
    }

    pub fn from_token(s: &str) -> Option<Polarity> {
        match s {
            "XOR" => Some(Polarity::Xor),
            "XNOR" => Some(Polarity::Xnor),
            _ => None,
        }
    }
}

/// Key-bit partition: combinational logic, flip-flop functional inputs,
/// or scan outputs. FO keys of EFF-style locks live in `Sq` since they
/// sit on the scan path; their functional effect is captured by the
/// flip-flop's [`FfLockStyle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyClass {
    Comb,
    Fi,
    Sq,
}

impl KeyClass {
    pub fn token(self) -> &'static str {
        match self {
            KeyClass::Comb => "Kc",
            KeyClass::Fi => "Kfi",
            KeyClass::Sq => "Ksq",
        }
    }

    pub fn from_token(s: &str) -> Option<KeyClass> {
        match s {
            "Kc" => Some(KeyClass::Comb),
            "Kfi" => Some(KeyClass::Fi),
            "Ksq" => Some(KeyClass::Sq),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyInfo {
    pub bit: bool,
    pub class: KeyClass,
    pub polarity: Polarity,
}

/// A key assignment with per-bit partition and gate polarity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyVector {
    entries: IndexMap<String, KeyInfo>,
}

impl KeyVector {
    pub fn new() -> KeyVector {
        KeyVector::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, info: KeyInfo) {
        let name = name.into();
        debug_assert!(!self.entries.contains_key(&name));
        self.entries.insert(name, info);
    }

    pub fn remove(&mut self, name: &str) -> Option<KeyInfo> {
        self.entries.shift_remove(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn bit(&self, name: &str) -> Option<bool> {
        self.entries.get(name).map(|i| i.bit)
    }

    pub fn set_bit(&mut self, name: &str, bit: bool) {
        self.entries.get_mut(name).expect("key must exist").bit = bit;
    }

    pub fn info(&self, name: &str) -> Option<&KeyInfo> {
        self.entries.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &KeyInfo)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names_in_class(&self, class: KeyClass) -> impl Iterator<Item = &str> {
        self.entries.iter().filter(move |(_, i)| i.class == class).map(|(k, _)| k.as_str())
    }

    /// The effective inversion the gate applies: key bit for XOR,
    /// complemented bit for XNOR.
    pub fn net_inversion(&self, name: &str) -> Option<bool> {
        self.entries.get(name).map(|i| i.bit ^ (i.polarity == Polarity::Xnor))
    }

    pub fn assignment(&self) -> HashMap<String, bool> {
        self.entries.iter().map(|(k, i)| (k.clone(), i.bit)).collect()
    }

    /// Same metadata, bits replaced from `bits` (defaulting to false for
    /// names it does not mention).
    pub fn with_bits(&self, bits: &HashMap<String, bool>) -> KeyVector {
        let entries = self
            .entries
            .iter()
            .map(|(k, i)| {
                (k.clone(), KeyInfo { bit: bits.get(k).copied().unwrap_or(false), ..*i })
            })
            .collect();
        KeyVector { entries }
    }

    /// Key file format: one line per key,
    /// `<keyname> <bit> <Kc|Kfi|Ksq> <XOR|XNOR>`.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        for (name, i) in &self.entries {
            s.push_str(&format!(
                "{name} {} {} {}\n",
                u8::from(i.bit),
                i.class.token(),
                i.polarity.token()
            ));
        }
        s
    }

    pub fn parse_file(text: &str) -> Result<KeyVector, LockError> {
        let mut kv = KeyVector::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let code = raw.trim();
            if code.is_empty() || code.starts_with('#') {
                continue;
            }
            let tok: Vec<&str> = code.split_whitespace().collect();
            let fail = |msg: &str| LockError::BadKeyFile { line, msg: msg.into() };
            if tok.len() != 4 {
                return Err(fail("expected `<name> <bit> <Kc|Kfi|Ksq> <XOR|XNOR>`"));
            }
            let bit = match tok[1] {
                "0" => false,
                "1" => true,
                _ => return Err(fail("bit must be 0 or 1")),
            };
            let class = KeyClass::from_token(tok[2]).ok_or_else(|| fail("bad partition tag"))?;
            let polarity = Polarity::from_token(tok[3]).ok_or_else(|| fail("bad polarity"))?;
            if kv.contains(tok[0]) {
                return Err(fail("duplicate key name"));
            }
            kv.insert(tok[0], KeyInfo { bit, class, polarity });
        }
        Ok(kv)
    }
}

/// How one flip-flop is locked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FfLockStyle {
    Unlocked,
    /// One key gate on Q, driving functional fanout and scan successor.
    EffFo { key: String, polarity: Polarity },
    /// Key gate on the data input plus a key gate on the scan output
    /// only; the functional Q stays unencrypted.
    Seql { fi_key: String, fi_polarity: Polarity, sq_key: String, sq_polarity: Polarity },
}

impl FfLockStyle {
    pub fn is_locked(&self) -> bool {
        !matches!(self, FfLockStyle::Unlocked)
    }

    /// The key gate sitting on the scan path, if any.
    pub fn scan_gate(&self) -> Option<(&str, Polarity)> {
        match self {
            FfLockStyle::Unlocked => None,
            FfLockStyle::EffFo { key, polarity } => Some((key, *polarity)),
            FfLockStyle::Seql { sq_key, sq_polarity, .. } => Some((sq_key, *sq_polarity)),
        }
    }
}

#[derive(Debug, Error)]
pub enum LockError {
    #[error("netlist error: {0}")]
    Netlist(#[from] NetlistError),
    #[error("scan error: {0}")]
    Scan(#[from] ScanError),
    #[error("no flip-flop `{0}`")]
    NoSuchFf(String),
    #[error("flip-flop `{0}` is already locked")]
    AlreadyLocked(String),
    #[error("flip-flop `{0}` has feedback and cannot take an FI/SQ lock")]
    FeedbackFf(String),
    #[error("name `{0}` already exists in the netlist or key")]
    NameTaken(String),
    #[error("no combinational key `{0}`")]
    NoSuchCombKey(String),
    #[error("no feedback-free flip-flops to lock")]
    NoFeedbackFreeFfs,
    #[error("input design has no combinational key gates")]
    NoCombKeys,
    #[error("key-gate budget exhausted: budget {budget} gates, next lock needs {needed}")]
    BudgetExhausted { budget: usize, needed: usize },
    #[error("net `{0}` is not a lockable combinational net")]
    NotLockable(String),
    #[error("key file line {line}: {msg}")]
    BadKeyFile { line: usize, msg: String },
    #[error("malformed locked design: {0}")]
    Malformed(String),
    #[error("attack error: {0}")]
    Attack(#[from] crate::attack::AttackError),
}

/// A keyed netlist with scan chains, per-FF lock styles and the correct
/// key. Immutable once a defense returns it; the locking methods are
/// meant for construction.
#[derive(Debug, Clone)]
pub struct LockedDesign {
    pub netlist: Netlist,
    pub chains: Vec<ScanChain>,
    pub styles: IndexMap<String, FfLockStyle>,
    pub correct_key: KeyVector,
    pub seed: Option<u64>,
}

fn fresh_net(n: &Netlist, base: String) -> String {
    if !n.defines(&base) {
        return base;
    }
    let mut i = 0usize;
    loop {
        let cand = format!("{base}{i}");
        if !n.defines(&cand) {
            return cand;
        }
        i += 1;
    }
}

impl LockedDesign {
    /// Wrap an unlocked netlist. Panics if the chains do not cover the
    /// netlist's flip-flops exactly once.
    pub fn unlocked(netlist: Netlist, chains: Vec<ScanChain>) -> LockedDesign {
        validate_chains(&netlist, &chains).expect("chains must cover the netlist FFs");
        let styles = netlist.dffs().map(|(q, _)| (q.clone(), FfLockStyle::Unlocked)).collect();
        LockedDesign { netlist, chains, styles, correct_key: KeyVector::new(), seed: None }
    }

    pub fn locked_count(&self) -> usize {
        self.styles.values().filter(|s| s.is_locked()).count()
    }

    /// Short lock-style tag for reports: `eff`, `seql`, `mixed`, `comb`
    /// (key gates but no FF locks) or `unlocked`.
    pub fn style_label(&self) -> &'static str {
        let mut eff = 0usize;
        let mut seql = 0usize;
        for s in self.styles.values() {
            match s {
                FfLockStyle::EffFo { .. } => eff += 1,
                FfLockStyle::Seql { .. } => seql += 1,
                FfLockStyle::Unlocked => {}
            }
        }
        match (eff, seql) {
            (0, 0) if self.correct_key.is_empty() => "unlocked",
            (0, 0) => "comb",
            (_, 0) => "eff",
            (0, _) => "seql",
            _ => "mixed",
        }
    }

    /// Locked FFs in chain order.
    pub fn locked_ffs(&self) -> Vec<String> {
        self.chains
            .iter()
            .flat_map(|c| c.order.iter())
            .filter(|ff| self.styles.get(*ff).is_some_and(|s| s.is_locked()))
            .cloned()
            .collect()
    }

    pub fn key_assignment(&self) -> HashMap<String, bool> {
        self.correct_key.assignment()
    }

    fn check_new_key_name(&self, name: &str) -> Result<(), LockError> {
        if self.netlist.defines(name) || self.correct_key.contains(name) {
            return Err(LockError::NameTaken(name.into()));
        }
        Ok(())
    }

    fn ff_d_net(&self, ff: &str) -> Result<String, LockError> {
        match self.netlist.gate(ff) {
            Some(g) if g.kind == GateKind::Dff => Ok(g.fanin[0].clone()),
            _ => Err(LockError::NoSuchFf(ff.into())),
        }
    }

    fn rewire_readers(&mut self, from: &str, to: &str, skip_gate: &str) {
        for (net, gate) in self.netlist.gates.iter_mut() {
            if net == skip_gate {
                continue;
            }
            for f in &mut gate.fanin {
                if f == from {
                    *f = to.to_string();
                }
            }
        }
        for o in &mut self.netlist.outputs {
            if o == from {
                *o = to.to_string();
            }
        }
    }

    /// Insert an FO key gate on `ff`'s output: the encrypted net drives
    /// every functional reader and the scan successor.
    pub fn lock_eff_ff(
        &mut self,
        ff: &str,
        key: impl Into<String>,
        polarity: Polarity,
    ) -> Result<(), LockError> {
        let key = key.into();
        self.ff_d_net(ff)?;
        match self.styles.get(ff) {
            Some(FfLockStyle::Unlocked) => {}
            Some(_) => return Err(LockError::AlreadyLocked(ff.into())),
            None => return Err(LockError::NoSuchFf(ff.into())),
        }
        self.check_new_key_name(&key)?;

        let enc = fresh_net(&self.netlist, format!("{ff}_enc"));
        self.netlist.inputs.push(key.clone());
        self.netlist
            .gates
            .insert(enc.clone(), Gate::new(polarity.gate_kind(), vec![ff.into(), key.clone()]));
        self.rewire_readers(ff, &enc, &enc);
        self.correct_key.insert(
            key.clone(),
            KeyInfo { bit: polarity.identity_bit(), class: KeyClass::Sq, polarity },
        );
        self.styles[ff] = FfLockStyle::EffFo { key, polarity };
        debug_assert!(self.netlist.validate().is_ok());
        Ok(())
    }

    /// Insert a functionally-isolated FI/SQ pair on a feedback-free FF:
    /// a key gate between the data cone and the D pin, and a key gate on
    /// the scan output only.
    pub fn lock_seql_ff(
        &mut self,
        ff: &str,
        fi_key: impl Into<String>,
        fi_polarity: Polarity,
        sq_key: impl Into<String>,
        sq_polarity: Polarity,
    ) -> Result<(), LockError> {
        let (fi_key, sq_key) = (fi_key.into(), sq_key.into());
        let d_net = self.ff_d_net(ff)?;
        match self.styles.get(ff) {
            Some(FfLockStyle::Unlocked) => {}
            Some(_) => return Err(LockError::AlreadyLocked(ff.into())),
            None => return Err(LockError::NoSuchFf(ff.into())),
        }
        let info = self.netlist.classify_feedback();
        if info.iter().any(|f| f.ff_net == ff && f.has_feedback) {
            return Err(LockError::FeedbackFf(ff.into()));
        }
        self.check_new_key_name(&fi_key)?;
        if fi_key == sq_key {
            return Err(LockError::NameTaken(sq_key));
        }
        self.check_new_key_name(&sq_key)?;

        let fi_net = fresh_net(&self.netlist, format!("{ff}_fi"));
        self.netlist.inputs.push(fi_key.clone());
        self.netlist
            .gates
            .insert(fi_net.clone(), Gate::new(fi_polarity.gate_kind(), vec![d_net, fi_key.clone()]));
        self.netlist.gates[ff].fanin[0] = fi_net;

        let sq_net = fresh_net(&self.netlist, format!("{ff}_sq"));
        self.netlist.inputs.push(sq_key.clone());
        self.netlist
            .gates
            .insert(sq_net, Gate::new(sq_polarity.gate_kind(), vec![ff.into(), sq_key.clone()]));

        self.correct_key.insert(
            fi_key.clone(),
            KeyInfo { bit: fi_polarity.identity_bit(), class: KeyClass::Fi, polarity: fi_polarity },
        );
        self.correct_key.insert(
            sq_key.clone(),
            KeyInfo { bit: sq_polarity.identity_bit(), class: KeyClass::Sq, polarity: sq_polarity },
        );
        self.styles[ff] = FfLockStyle::Seql { fi_key, fi_polarity, sq_key, sq_polarity };
        debug_assert!(self.netlist.validate().is_ok());
        Ok(())
    }

    /// Insert a combinational key gate after `net`, rewiring every
    /// reader. Stand-in for pre-locked inputs.
    pub fn lock_comb_net(
        &mut self,
        net: &str,
        key: impl Into<String>,
        polarity: Polarity,
    ) -> Result<(), LockError> {
        let key = key.into();
        match self.netlist.gate(net) {
            Some(g) if !g.kind.is_sequential() => {}
            _ => return Err(LockError::NotLockable(net.into())),
        }
        self.check_new_key_name(&key)?;
        let enc = fresh_net(&self.netlist, format!("{net}_enc"));
        self.netlist.inputs.push(key.clone());
        self.netlist
            .gates
            .insert(enc.clone(), Gate::new(polarity.gate_kind(), vec![net.into(), key.clone()]));
        self.rewire_readers(net, &enc, &enc);
        self.correct_key.insert(
            key,
            KeyInfo { bit: polarity.identity_bit(), class: KeyClass::Comb, polarity },
        );
        debug_assert!(self.netlist.validate().is_ok());
        Ok(())
    }

    /// Remove a combinational key gate, replacing it with a wire. The
    /// gate is an identity under the correct key, so the correct-keyed
    /// function is preserved.
    pub fn remove_comb_key(&mut self, key: &str) -> Result<(), LockError> {
        match self.correct_key.info(key) {
            Some(i) if i.class == KeyClass::Comb => {}
            _ => return Err(LockError::NoSuchCombKey(key.into())),
        }
        let (gate_net, data) = self
            .netlist
            .gates
            .iter()
            .find_map(|(net, g)| {
                if g.fanin.len() == 2 && g.fanin.iter().any(|f| f == key) {
                    let data = g.fanin.iter().find(|f| *f != key).cloned()?;
                    Some((net.clone(), data))
                } else {
                    None
                }
            })
            .ok_or_else(|| LockError::Malformed(format!("key gate for `{key}` not found")))?;
        self.netlist.gates.shift_remove(&gate_net);
        self.rewire_readers(&gate_net, &data, "");
        self.netlist.inputs.retain(|i| i != key);
        self.correct_key.remove(key);
        debug_assert!(self.netlist.validate().is_ok());
        Ok(())
    }

    /// Restitch every chain so its locked FFs form the SO-adjacent
    /// suffix, both groups keeping their relative order.
    pub fn restitch_locked_suffix(&mut self) {
        for chain in &mut self.chains {
            let (unlocked, locked): (Vec<String>, Vec<String>) = chain
                .order
                .drain(..)
                .partition(|ff| !self.styles.get(ff).is_some_and(|s| s.is_locked()));
            chain.order = unlocked;
            chain.order.extend(locked);
        }
    }

    /// distance of `ff` from the SO end of its chain (0 = SO-adjacent),
    /// plus the chain index, for selection ordering.
    pub fn so_distance(&self, ff: &str) -> Option<(usize, usize)> {
        for (ci, chain) in self.chains.iter().enumerate() {
            if let Some(pos) = chain.order.iter().position(|f| f == ff) {
                return Some((chain.len() - 1 - pos, ci));
            }
        }
        None
    }

    /// Rebuild styles from a keyed netlist, chains and a key vector, as
    /// loaded from files. FI and SQ keys are located structurally.
    pub fn reconstruct(
        netlist: Netlist,
        chains: Vec<ScanChain>,
        key: KeyVector,
    ) -> Result<LockedDesign, LockError> {
        netlist.validate()?;
        validate_chains(&netlist, &chains)?;
        for name in key.names() {
            if !netlist.inputs.iter().any(|i| i == name) {
                return Err(LockError::Malformed(format!("key input `{name}` not in netlist")));
            }
        }

        let dff_by_d: HashMap<&str, &str> = netlist
            .dffs()
            .map(|(q, g)| (g.fanin[0].as_str(), q.as_str()))
            .collect();
        let is_ff: HashMap<&str, ()> = netlist.dffs().map(|(q, _)| (q.as_str(), ())).collect();
        let mut has_reader: HashMap<&str, bool> = HashMap::new();
        for g in netlist.gates.values() {
            for f in &g.fanin {
                has_reader.insert(f.as_str(), true);
            }
        }
        for o in &netlist.outputs {
            has_reader.insert(o.as_str(), true);
        }

        let mut fi_half: HashMap<String, (String, Polarity)> = HashMap::new();
        let mut sq_half: HashMap<String, (String, Polarity)> = HashMap::new();
        let mut eff: HashMap<String, (String, Polarity)> = HashMap::new();
        for (name, info) in key.iter() {
            let gate = netlist.gates.iter().find(|(_, g)| {
                g.fanin.len() == 2 && g.fanin.iter().any(|f| f == name)
            });
            let (gate_net, g) = match (info.class, gate) {
                (KeyClass::Comb, _) => continue,
                (_, Some(x)) => x,
                (_, None) => {
                    return Err(LockError::Malformed(format!("no key gate for `{name}`")))
                }
            };
            if g.kind != info.polarity.gate_kind() {
                return Err(LockError::Malformed(format!(
                    "key `{name}`: gate kind does not match declared polarity"
                )));
            }
            let data = g.fanin.iter().find(|f| *f != name).unwrap().clone();
            match info.class {
                KeyClass::Fi => {
                    let ff = dff_by_d.get(gate_net.as_str()).ok_or_else(|| {
                        LockError::Malformed(format!("FI gate of `{name}` feeds no flip-flop"))
                    })?;
                    fi_half.insert(ff.to_string(), (name.to_string(), info.polarity));
                }
                KeyClass::Sq => {
                    if !is_ff.contains_key(data.as_str()) {
                        return Err(LockError::Malformed(format!(
                            "scan key gate of `{name}` does not read a flip-flop output"
                        )));
                    }
                    if has_reader.get(gate_net.as_str()).copied().unwrap_or(false) {
                        eff.insert(data.clone(), (name.to_string(), info.polarity));
                    } else {
                        sq_half.insert(data.clone(), (name.to_string(), info.polarity));
                    }
                }
                KeyClass::Comb => unreachable!(),
            }
        }

        let mut styles: IndexMap<String, FfLockStyle> =
            netlist.dffs().map(|(q, _)| (q.clone(), FfLockStyle::Unlocked)).collect();
        for (ff, (k, pol)) in eff {
            if fi_half.contains_key(&ff) || sq_half.contains_key(&ff) {
                return Err(LockError::Malformed(format!("FF `{ff}` mixes lock styles")));
            }
            styles[&ff] = FfLockStyle::EffFo { key: k, polarity: pol };
        }
        for (ff, (sq, sq_pol)) in sq_half {
            let (fi, fi_pol) = fi_half.remove(&ff).ok_or_else(|| {
                LockError::Malformed(format!("FF `{ff}` has an SQ key but no FI key"))
            })?;
            styles[&ff] = FfLockStyle::Seql {
                fi_key: fi,
                fi_polarity: fi_pol,
                sq_key: sq,
                sq_polarity: sq_pol,
            };
        }
        if let Some(ff) = fi_half.keys().next() {
            return Err(LockError::Malformed(format!("FF `{ff}` has an FI key but no SQ key")));
        }

        Ok(LockedDesign { netlist, chains, styles, correct_key: key, seed: None })
    }
}

#[cfg(test)]
mod tests;
