//! A compact CDCL solver: two-watched-literal propagation, first-UIP
//! conflict analysis with cheap clause minimization, VSIDS branching,
//! phase saving and Luby restarts. Fully deterministic.

use std::time::Instant;

/// Variable index, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(pub u32);

/// Literal: variable plus sign, encoded as `var << 1 | negated`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit(u32);

impl Lit {
    pub fn pos(v: Var) -> Lit {
        Lit(v.0 << 1)
    }
    pub fn neg(v: Var) -> Lit {
        Lit(v.0 << 1 | 1)
    }
    pub fn new(v: Var, value: bool) -> Lit {
        if value {
            Lit::pos(v)
        } else {
            Lit::neg(v)
        }
    }
    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }
    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }
    fn idx(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

/// Satisfying assignment, indexed by variable.
#[derive(Debug, Clone)]
pub struct Model(pub Vec<bool>);

impl Model {
    pub fn value(&self, v: Var) -> bool {
        self.0[v.0 as usize]
    }
    pub fn lit_true(&self, l: Lit) -> bool {
        self.value(l.var()) != l.is_neg()
    }
}

#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Sat(Model),
    Unsat,
    Timeout,
}

impl SolveOutcome {
    pub fn model(&self) -> Option<&Model> {
        match self {
            SolveOutcome::Sat(m) => Some(m),
            _ => None,
        }
    }
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveOutcome::Sat(_))
    }
    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveOutcome::Unsat)
    }
}

const NO_REASON: u32 = u32::MAX;

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    activity: f64,
}

/// Incremental CDCL solver. Clauses may be added between `solve` calls;
/// assumptions are honored per call.
pub struct Solver {
    clauses: Vec<Clause>,
    watches: Vec<Vec<u32>>, // indexed by Lit; clauses watching that literal
    assign: Vec<i8>,        // per var: -1 unset, 0 false, 1 true
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    phase: Vec<bool>,
    order: Vec<Var>, // lazy max-activity heap (binary heap as vec)
    in_order: Vec<bool>,
    seen: Vec<bool>,
    ok: bool, // false once a top-level conflict is found
    n_conflicts: u64,
    learnt_cap: usize,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

impl Solver {
    pub fn new() -> Solver {
        Solver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assign: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            phase: Vec::new(),
            order: Vec::new(),
            in_order: Vec::new(),
            seen: Vec::new(),
            ok: true,
            n_conflicts: 0,
            learnt_cap: 4096,
        }
    }

    pub fn new_var(&mut self) -> Var {
        let v = Var(self.assign.len() as u32);
        self.assign.push(-1);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.activity.push(0.0);
        self.phase.push(false);
        self.seen.push(false);
        self.in_order.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.insert_order(v);
        v
    }

    pub fn num_vars(&self) -> u32 {
        self.assign.len() as u32
    }

    /// Grow the variable table to at least `n` variables.
    pub fn ensure_vars(&mut self, n: u32) {
        while self.num_vars() < n {
            self.new_var();
        }
    }

    fn value_lit(&self, l: Lit) -> i8 {
        let a = self.assign[l.var().0 as usize];
        if a < 0 {
            -1
        } else if (a == 1) != l.is_neg() {
            1
        } else {
            0
        }
    }

    /// Add a clause. Returns false if the solver is already inconsistent
    /// or the clause is empty after top-level simplification.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        debug_assert_eq!(self.decision_level(), 0);
        if !self.ok {
            return false;
        }
        let mut c: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in lits {
            debug_assert!(l.var().0 < self.num_vars());
            match self.value_lit(l) {
                1 => return true, // satisfied at level 0
                0 => continue,    // false at level 0, drop
                _ => {
                    if c.contains(&!l) {
                        return true; // tautology
                    }
                    if !c.contains(&l) {
                        c.push(l);
                    }
                }
            }
        }
        match c.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(c[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(c, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let idx = self.clauses.len() as u32;
        self.watches[lits[0].idx()].push(idx);
        self.watches[lits[1].idx()].push(idx);
        self.clauses.push(Clause { lits, learnt, activity: 0.0 });
        idx
    }

    fn decision_level(&self) -> usize {
        self.trail_lim.len()
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var().0 as usize;
        debug_assert!(self.assign[v] < 0);
        self.assign[v] = if l.is_neg() { 0 } else { 1 };
        self.level[v] = self.decision_level() as u32;
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Unit propagation; returns the conflicting clause index if any.
    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.idx()]);
            let mut i = 0;
            while i < ws.len() {
                let ci = ws[i];
                // Normalize: the false literal sits at position 1.
                {
                    let c = &mut self.clauses[ci as usize];
                    if c.lits[0] == false_lit {
                        c.lits.swap(0, 1);
                    }
                }
                let first = self.clauses[ci as usize].lits[0];
                if self.value_lit(first) == 1 {
                    i += 1;
                    continue;
                }
                // Look for a new literal to watch.
                let mut moved = false;
                {
                    let n = self.clauses[ci as usize].lits.len();
                    for k in 2..n {
                        let lk = self.clauses[ci as usize].lits[k];
                        if self.value_lit(lk) != 0 {
                            self.clauses[ci as usize].lits.swap(1, k);
                            self.watches[lk.idx()].push(ci);
                            moved = true;
                            break;
                        }
                    }
                }
                if moved {
                    ws.swap_remove(i);
                    continue;
                }
                if self.value_lit(first) == 0 {
                    // Conflict; restore remaining watches.
                    self.watches[false_lit.idx()].extend_from_slice(&ws[i..]);
                    ws.truncate(i);
                    self.watches[false_lit.idx()].append(&mut ws);
                    self.qhead = self.trail.len();
                    return Some(ci);
                }
                self.enqueue(first, ci);
                i += 1;
            }
            self.watches[false_lit.idx()].append(&mut ws);
        }
        None
    }

    fn bump_var(&mut self, v: Var) {
        self.activity[v.0 as usize] += self.var_inc;
        if self.activity[v.0 as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.insert_order(v);
    }

    fn bump_clause(&mut self, ci: u32) {
        let c = &mut self.clauses[ci as usize];
        if !c.learnt {
            return;
        }
        c.activity += self.cla_inc;
        if c.activity > 1e100 {
            for cl in &mut self.clauses {
                cl.activity *= 1e-100;
            }
            self.cla_inc *= 1e-100;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first) and the backtrack level.
    fn analyze(&mut self, confl: u32) -> (Vec<Lit>, usize) {
        let mut learnt: Vec<Lit> = vec![Lit(0)]; // slot 0 for the UIP
        let mut counter = 0usize;
        let mut p: Option<Lit> = None;
        let mut ci = confl;
        let mut index = self.trail.len();
        loop {
            self.bump_clause(ci);
            let start = usize::from(p.is_some());
            for k in start..self.clauses[ci as usize].lits.len() {
                let q = self.clauses[ci as usize].lits[k];
                let v = q.var().0 as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(q.var());
                    if self.level[v] as usize >= self.decision_level() {
                        counter += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            // Find the next seen literal on the trail.
            loop {
                index -= 1;
                if self.seen[self.trail[index].var().0 as usize] {
                    break;
                }
            }
            let lit = self.trail[index];
            let v = lit.var().0 as usize;
            self.seen[v] = false;
            counter -= 1;
            if counter == 0 {
                p = Some(lit);
                break;
            }
            ci = self.reason[v];
            p = Some(lit);
        }
        learnt[0] = !p.unwrap();

        // Cheap minimization: drop literals implied by their reason.
        let redundant = |s: &Self, l: Lit| -> bool {
            let r = s.reason[l.var().0 as usize];
            if r == NO_REASON {
                return false;
            }
            s.clauses[r as usize].lits.iter().skip(1).all(|&q| {
                s.seen[q.var().0 as usize] || s.level[q.var().0 as usize] == 0
            })
        };
        for l in &learnt[1..] {
            self.seen[l.var().0 as usize] = true;
        }
        let keep: Vec<Lit> = learnt[1..]
            .iter()
            .copied()
            .filter(|&l| !redundant(self, l))
            .collect();
        for l in &learnt[1..] {
            self.seen[l.var().0 as usize] = false;
        }
        let mut out = vec![learnt[0]];
        out.extend(keep);

        // Backtrack level: second-highest decision level in the clause.
        let bt = if out.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for k in 2..out.len() {
                if self.level[out[k].var().0 as usize] > self.level[out[max_i].var().0 as usize] {
                    max_i = k;
                }
            }
            out.swap(1, max_i);
            self.level[out[1].var().0 as usize] as usize
        };
        (out, bt)
    }

    fn backtrack(&mut self, to_level: usize) {
        if self.decision_level() <= to_level {
            return;
        }
        let lim = self.trail_lim[to_level];
        for i in lim..self.trail.len() {
            let l = self.trail[i];
            let v = l.var().0 as usize;
            self.phase[v] = !l.is_neg();
            self.assign[v] = -1;
            self.reason[v] = NO_REASON;
            self.insert_order(l.var());
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(to_level);
        self.qhead = self.trail.len();
    }

    fn insert_order(&mut self, v: Var) {
        if !self.in_order[v.0 as usize] {
            self.in_order[v.0 as usize] = true;
            self.order.push(v);
            let mut i = self.order.len() - 1;
            while i > 0 {
                let parent = (i - 1) / 2;
                if self.heap_less(self.order[parent], self.order[i]) {
                    self.order.swap(parent, i);
                    i = parent;
                } else {
                    break;
                }
            }
        }
    }

    fn heap_less(&self, a: Var, b: Var) -> bool {
        let (aa, ab) = (self.activity[a.0 as usize], self.activity[b.0 as usize]);
        aa < ab || (aa == ab && a.0 > b.0)
    }

    fn pop_order(&mut self) -> Option<Var> {
        while !self.order.is_empty() {
            let top = self.order[0];
            let last = self.order.pop().unwrap();
            if !self.order.is_empty() {
                self.order[0] = last;
                // Sift down.
                let mut i = 0;
                loop {
                    let (l, r) = (2 * i + 1, 2 * i + 2);
                    let mut m = i;
                    if l < self.order.len() && self.heap_less(self.order[m], self.order[l]) {
                        m = l;
                    }
                    if r < self.order.len() && self.heap_less(self.order[m], self.order[r]) {
                        m = r;
                    }
                    if m == i {
                        break;
                    }
                    self.order.swap(i, m);
                    i = m;
                }
            }
            self.in_order[top.0 as usize] = false;
            if self.assign[top.0 as usize] < 0 {
                return Some(top);
            }
        }
        None
    }

    fn reduce_learnts(&mut self) {
        // Drop the less active half of the learnt clauses. Watch lists
        // are rebuilt wholesale; reasons for current assignments are at
        // level 0 only here (called right after a restart).
        debug_assert_eq!(self.decision_level(), 0);
        let mut acts: Vec<f64> = self
            .clauses
            .iter()
            .filter(|c| c.learnt && c.lits.len() > 2)
            .map(|c| c.activity)
            .collect();
        if acts.len() < self.learnt_cap {
            return;
        }
        acts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = acts[acts.len() / 2];
        let mut kept: Vec<Clause> = Vec::with_capacity(self.clauses.len());
        for c in self.clauses.drain(..) {
            if c.learnt && c.lits.len() > 2 && c.activity < median {
                continue;
            }
            kept.push(c);
        }
        self.clauses = kept;
        for w in &mut self.watches {
            w.clear();
        }
        for i in 0..self.clauses.len() {
            let (l0, l1) = (self.clauses[i].lits[0], self.clauses[i].lits[1]);
            self.watches[l0.idx()].push(i as u32);
            self.watches[l1.idx()].push(i as u32);
        }
        // Level-0 reasons are never inspected again.
        for r in &mut self.reason {
            *r = NO_REASON;
        }
    }

    /// Decide the formula under `assumptions`. Returns `Unsat` when the
    /// clause set is unsatisfiable under the assumptions; global
    /// unsatisfiability shows up as `Unsat` with no assumptions.
    pub fn solve(&mut self, assumptions: &[Lit], deadline: Option<Instant>) -> SolveOutcome {
        if !self.ok {
            return SolveOutcome::Unsat;
        }
        self.backtrack(0);
        if self.propagate().is_some() {
            self.ok = false;
            return SolveOutcome::Unsat;
        }

        let mut restart_count = 0u32;
        let mut conflicts_left = 100 * luby(restart_count);
        loop {
            if let Some(ci) = self.propagate() {
                self.n_conflicts += 1;
                conflicts_left = conflicts_left.saturating_sub(1);
                if self.decision_level() == 0 {
                    self.ok = false;
                    return SolveOutcome::Unsat;
                }
                let (learnt, bt) = self.analyze(ci);
                self.backtrack(bt);
                let assert_lit = learnt[0];
                if learnt.len() == 1 {
                    debug_assert_eq!(bt, 0);
                    match self.value_lit(assert_lit) {
                        0 => {
                            self.ok = false;
                            return SolveOutcome::Unsat;
                        }
                        -1 => self.enqueue(assert_lit, NO_REASON),
                        _ => {}
                    }
                } else {
                    let ci = self.attach(learnt, true);
                    self.enqueue(assert_lit, ci);
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                if self.n_conflicts % 256 == 0 {
                    if let Some(dl) = deadline {
                        if Instant::now() >= dl {
                            self.backtrack(0);
                            return SolveOutcome::Timeout;
                        }
                    }
                }
            } else {
                if conflicts_left == 0 {
                    // Restart.
                    restart_count += 1;
                    conflicts_left = 100 * luby(restart_count);
                    self.backtrack(0);
                    self.reduce_learnts();
                    continue;
                }
                // Extend the assumption prefix first.
                if self.decision_level() < assumptions.len() {
                    let a = assumptions[self.decision_level()];
                    match self.value_lit(a) {
                        1 => {
                            // Already true: open an empty level to keep
                            // level counting aligned with assumptions.
                            self.trail_lim.push(self.trail.len());
                        }
                        0 => {
                            self.backtrack(0);
                            return SolveOutcome::Unsat;
                        }
                        _ => {
                            self.trail_lim.push(self.trail.len());
                            self.enqueue(a, NO_REASON);
                        }
                    }
                    continue;
                }
                match self.pop_order() {
                    Some(v) => {
                        self.trail_lim.push(self.trail.len());
                        let lit = Lit::new(v, self.phase[v.0 as usize]);
                        self.enqueue(lit, NO_REASON);
                    }
                    None => {
                        let model =
                            Model(self.assign.iter().map(|&a| a == 1).collect());
                        self.backtrack(0);
                        return SolveOutcome::Sat(model);
                    }
                }
            }
        }
    }
}

/// Luby restart sequence (1,1,2,1,1,2,4,...).
fn luby(mut i: u32) -> u64 {
    // Find the finite subsequence containing i.
    let mut k = 1u32;
    while (1u64 << k) - 1 < (i as u64) + 1 {
        k += 1;
    }
    while (1u64 << k) - 1 != (i as u64) + 1 {
        k -= 1;
        i -= ((1u64 << k) - 1) as u32;
    }
    1u64 << (k - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(v: i32) -> Lit {
        let var = Var((v.unsigned_abs() - 1) as u32);
        if v > 0 {
            Lit::pos(var)
        } else {
            Lit::neg(var)
        }
    }

    fn solver_with(nvars: u32, clauses: &[&[i32]]) -> Solver {
        let mut s = Solver::new();
        s.ensure_vars(nvars);
        for c in clauses {
            let lits: Vec<Lit> = c.iter().map(|&v| lit(v)).collect();
            s.add_clause(&lits);
        }
        s
    }

    #[test]
    fn contradiction_is_unsat() {
        let mut s = solver_with(1, &[&[1], &[-1]]);
        assert!(s.solve(&[], None).is_unsat());
    }

    #[test]
    fn simple_sat_with_model() {
        let mut s = solver_with(2, &[&[1, 2]]);
        match s.solve(&[], None) {
            SolveOutcome::Sat(m) => assert!(m.value(Var(0)) || m.value(Var(1))),
            o => panic!("expected SAT, got {o:?}"),
        }
    }

    #[test]
    fn assumptions_flip_outcome() {
        let mut s = solver_with(2, &[&[1, 2], &[-1, -2]]);
        assert!(s.solve(&[lit(1)], None).is_sat());
        assert!(s.solve(&[lit(1), lit(2)], None).is_unsat());
        // Still satisfiable without assumptions afterwards.
        assert!(s.solve(&[], None).is_sat());
    }

    #[test]
    fn model_satisfies_all_clauses() {
        // Random-ish 3-SAT instance, fixed seed expansion.
        let mut clauses: Vec<Vec<i32>> = Vec::new();
        let mut x = 0x243f6a8885a308d3u64;
        for _ in 0..60 {
            let mut c = Vec::new();
            for _ in 0..3 {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = ((x >> 33) % 12 + 1) as i32;
                let s = if (x >> 13) & 1 == 0 { 1 } else { -1 };
                c.push(v * s);
            }
            clauses.push(c);
        }
        let refs: Vec<&[i32]> = clauses.iter().map(|c| c.as_slice()).collect();
        let mut s = solver_with(12, &refs);
        if let SolveOutcome::Sat(m) = s.solve(&[], None) {
            for c in &clauses {
                assert!(c.iter().any(|&v| {
                    let val = m.value(Var((v.unsigned_abs() - 1) as u32));
                    (v > 0) == val
                }));
            }
        }
    }

    #[test]
    fn pigeonhole_five_is_unsat() {
        // 6 pigeons, 5 holes. Variable p*5+h+1 means pigeon p in hole h.
        let mut clauses: Vec<Vec<i32>> = Vec::new();
        for p in 0..6 {
            clauses.push((0..5).map(|h| (p * 5 + h + 1) as i32).collect());
        }
        for h in 0..5 {
            for p1 in 0..6 {
                for p2 in (p1 + 1)..6 {
                    clauses.push(vec![-((p1 * 5 + h + 1) as i32), -((p2 * 5 + h + 1) as i32)]);
                }
            }
        }
        let refs: Vec<&[i32]> = clauses.iter().map(|c| c.as_slice()).collect();
        let mut s = solver_with(30, &refs);
        assert!(s.solve(&[], None).is_unsat());
    }

    #[test]
    fn deterministic_models() {
        let build = || solver_with(6, &[&[1, 2, 3], &[-1, 4], &[-2, 5], &[-3, 6], &[-4, -5]]);
        let m1 = match build().solve(&[], None) {
            SolveOutcome::Sat(m) => m.0,
            _ => panic!(),
        };
        let m2 = match build().solve(&[], None) {
            SolveOutcome::Sat(m) => m.0,
            _ => panic!(),
        };
        assert_eq!(m1, m2);
    }
}
