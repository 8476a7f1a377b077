//! Gate-level scan-locking laboratory.
//!
//! The crate models the full experiment loop around locked scan chains:
//!
//! * [`netlist`] — `.bench` parsing, serialization, simulation and
//!   flip-flop feedback classification;
//! * [`scan`] — scan chains, locked shift/capture semantics and the
//!   black-box oracle an attacker queries;
//! * [`lock`] — EFF-style and functionally-isolated FI/SQ locking plus
//!   the iterative boundary-locking and key-pushing defenses;
//! * [`unroll`] — scan-unrolling a locked design into the combinational
//!   attack instance, and key application / constant propagation;
//! * [`sat`] — Tseitin encoding, a built-in CDCL solver, miters and
//!   combinational equivalence checking;
//! * [`attack`] — the oracle-guided SAT attack, its Double-DIP variant
//!   and the end-to-end resilience verification flow;
//! * [`kag`] — key assignment graphs, key-space censuses and truth
//!   tables over scan-correct / functionally-correct keys;
//! * [`gen`] — deterministic circuit generators for experiments;
//! * [`samples`] — the small canonical designs used throughout the docs
//!   and tests.

pub mod attack;
pub mod gen;
pub mod kag;
pub mod lock;
pub mod netlist;
pub mod samples;
pub mod sat;
pub mod scan;
pub mod unroll;
