//! CNF construction, a built-in CDCL solver, miters and combinational
//! equivalence checking.
//!
//! The solver is a replaceable component behind [`solve`]; the DIMACS
//! export exists for interop with external solvers.

mod cnf;
mod equiv;
mod solver;

pub use cnf::{tseitin, to_dimacs, Cnf, CnfBuilder};
pub use equiv::{
    build_miter, check_equivalence, combinational_shell, EquivResult, Miter, DEFAULT_SOLVE_LIMIT,
};
pub use solver::{Lit, Model, SolveOutcome, Solver, Var};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SatError {
    #[error("netlist error: {0}")]
    Netlist(#[from] crate::netlist::NetlistError),
    #[error("input signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("net `{0}` has no CNF variable")]
    UnmappedNet(String),
}

/// Decide a formula under assumptions within a time limit.
///
/// Complete under the limit, deterministic across runs.
pub fn solve(
    f: &Cnf,
    assumptions: &[Lit],
    limit: std::time::Duration,
) -> SolveOutcome {
    let mut s = Solver::new();
    s.ensure_vars(f.num_vars);
    for c in &f.clauses {
        s.add_clause(c);
    }
    s.solve(assumptions, Some(std::time::Instant::now() + limit))
}
