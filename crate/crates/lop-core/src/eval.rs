//! Depth-bounded big-step evaluation into exact-rational value distributions,
//! one-step call-by-name reduction, and convergence-probability intervals.
//!
//! The depth budget is consumed once per application or choice rule on the
//! recursion path; values and budget cuts are free. With that metric the
//! finite-depth beta and choice equations hold with offset exactly one.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use num::{BigRational, One, Zero};

use crate::syntax::{substitute, CanonTerm, Term, T};

pub type Q = BigRational;

pub fn q(num: i64, den: i64) -> Q {
    Q::new(num.into(), den.into())
}

/// Render a rational as `a/b`, always with an explicit denominator.
pub fn fmt_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((a, b)) => {
            let num: num::BigInt = a.trim().parse().ok()?;
            let den: num::BigInt = b.trim().parse().ok()?;
            if den.is_zero() {
                return None;
            }
            Some(Q::new(num, den))
        }
        None => {
            let num: num::BigInt = s.parse().ok()?;
            Some(Q::from_integer(num))
        }
    }
}

/// Evaluation strategy: lazy call-by-name or strict call-by-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Cbn,
    Cbv,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Cbn => write!(f, "cbn"),
            Strategy::Cbv => write!(f, "cbv"),
        }
    }
}

// ---------------------------------------------------------------------------
// Value distributions
// ---------------------------------------------------------------------------

/// Finite map from closed abstractions (up to alpha) to positive rationals,
/// with total mass at most one.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValueDistribution {
    map: std::collections::BTreeMap<CanonTerm, Q>,
    mass: Q,
}

impl ValueDistribution {
    pub fn empty() -> Self {
        ValueDistribution::default()
    }

    pub fn dirac(v: &T) -> Self {
        let mut d = ValueDistribution::empty();
        d.add(v, &Q::one());
        d
    }

    pub fn add(&mut self, v: &T, w: &Q) {
        if w.is_zero() {
            return;
        }
        debug_assert!(matches!(v.as_ref(), Term::Lam(..)), "keys must be abstractions");
        let key = CanonTerm::new(v);
        *self.map.entry(key).or_insert_with(Q::zero) += w.clone();
        self.mass += w.clone();
    }

    pub fn add_scaled(&mut self, other: &ValueDistribution, factor: &Q) {
        if factor.is_zero() {
            return;
        }
        for (k, w) in &other.map {
            let dw = w * factor;
            *self.map.entry(k.clone()).or_insert_with(Q::zero) += dw.clone();
            self.mass += dw;
        }
    }

    pub fn mass(&self) -> &Q {
        &self.mass
    }

    pub fn get(&self, v: &T) -> Q {
        self.map
            .get(&CanonTerm::new(v))
            .cloned()
            .unwrap_or_else(Q::zero)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CanonTerm, &Q)> {
        self.map.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &CanonTerm> {
        self.map.keys()
    }

    /// Pointwise order on distributions.
    pub fn le(&self, other: &ValueDistribution) -> bool {
        self.map.iter().all(|(k, w)| {
            other
                .map
                .get(k)
                .map(|w2| w <= w2)
                .unwrap_or(false)
        })
    }

    /// Pointwise least upper bound.
    pub fn lub(&self, other: &ValueDistribution) -> ValueDistribution {
        let mut out = self.clone();
        for (k, w) in &other.map {
            let e = out.map.entry(k.clone()).or_insert_with(Q::zero);
            if *e < *w {
                *e = w.clone();
            }
        }
        out.mass = out.map.values().sum();
        out
    }
}

impl fmt::Display for ValueDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, w) in &self.map {
            writeln!(f, "{}\t{}", fmt_q(w), k.term())?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// One-step reduction
// ---------------------------------------------------------------------------

/// Result of one call-by-name step.
#[derive(Debug, Clone)]
pub enum StepOutcome {
    /// The term is a closed abstraction.
    Value,
    /// Exactly one successor, probability 1.
    Deterministic(T),
    /// Two successors, probability 1/2 each; arises only from a choice redex.
    Split(T, T),
    /// An open term in redex position; returned, never raised.
    Stuck,
}

/// One call-by-name step: beta for an abstraction in head position, descent
/// through the left spine, a split for a choice in redex position.
pub fn cbn_step(m: &T) -> StepOutcome {
    match m.as_ref() {
        Term::Lam(..) => {
            if m.is_closed() {
                StepOutcome::Value
            } else {
                StepOutcome::Stuck
            }
        }
        Term::Var(_) => StepOutcome::Stuck,
        Term::Choice(l, r) => StepOutcome::Split(l.clone(), r.clone()),
        Term::App(f, a) => match f.as_ref() {
            Term::Lam(x, b) => StepOutcome::Deterministic(substitute(b, x, a)),
            _ => match cbn_step(f) {
                StepOutcome::Deterministic(f2) => {
                    StepOutcome::Deterministic(Rc::new(Term::App(f2, a.clone())))
                }
                StepOutcome::Split(f1, f2) => StepOutcome::Split(
                    Rc::new(Term::App(f1, a.clone())),
                    Rc::new(Term::App(f2, a.clone())),
                ),
                StepOutcome::Value => unreachable!("lam handled above"),
                StepOutcome::Stuck => StepOutcome::Stuck,
            },
        },
    }
}

/// One call-by-value step: the function position is reduced to an
/// abstraction, then the argument, then beta fires.
pub fn cbv_step(m: &T) -> StepOutcome {
    match m.as_ref() {
        Term::Lam(..) => {
            if m.is_closed() {
                StepOutcome::Value
            } else {
                StepOutcome::Stuck
            }
        }
        Term::Var(_) => StepOutcome::Stuck,
        Term::Choice(l, r) => StepOutcome::Split(l.clone(), r.clone()),
        Term::App(f, a) => {
            if let Term::Lam(x, b) = f.as_ref() {
                if matches!(a.as_ref(), Term::Lam(..)) {
                    return StepOutcome::Deterministic(substitute(b, x, a));
                }
                return match cbv_step(a) {
                    StepOutcome::Deterministic(a2) => {
                        StepOutcome::Deterministic(Rc::new(Term::App(f.clone(), a2)))
                    }
                    StepOutcome::Split(a1, a2) => StepOutcome::Split(
                        Rc::new(Term::App(f.clone(), a1)),
                        Rc::new(Term::App(f.clone(), a2)),
                    ),
                    StepOutcome::Value => unreachable!("lam argument handled above"),
                    StepOutcome::Stuck => StepOutcome::Stuck,
                };
            }
            match cbv_step(f) {
                StepOutcome::Deterministic(f2) => {
                    StepOutcome::Deterministic(Rc::new(Term::App(f2, a.clone())))
                }
                StepOutcome::Split(f1, f2) => StepOutcome::Split(
                    Rc::new(Term::App(f1, a.clone())),
                    Rc::new(Term::App(f2, a.clone())),
                ),
                StepOutcome::Value => unreachable!("lam handled above"),
                StepOutcome::Stuck => StepOutcome::Stuck,
            }
        }
    }
}

pub fn strategy_step(m: &T, strategy: Strategy) -> StepOutcome {
    match strategy {
        Strategy::Cbn => cbn_step(m),
        Strategy::Cbv => cbv_step(m),
    }
}

/// Cheap divergence certificate: follow deterministic steps and report a loop
/// when a term repeats. Sound because deterministic steps are a function.
pub fn certified_divergent(m: &T, step_budget: usize) -> bool {
    certified_divergent_under(m, step_budget, Strategy::Cbn)
}

pub fn certified_divergent_under(m: &T, step_budget: usize, strategy: Strategy) -> bool {
    let mut seen = std::collections::BTreeSet::new();
    let mut cur = m.clone();
    for _ in 0..step_budget {
        match strategy_step(&cur, strategy) {
            StepOutcome::Deterministic(next) => {
                if !seen.insert(CanonTerm::new(&cur)) {
                    return true;
                }
                cur = next;
            }
            _ => return false,
        }
    }
    // one more membership check so that a cycle closing exactly at the budget
    // boundary is still caught
    !seen.insert(CanonTerm::new(&cur))
}

/// Lower bound on the probability mass that certainly never converges:
/// explore the reduction tree with a per-branch step budget and certify a
/// branch dead when its deterministic segment repeats a term. The seen set
/// resets at every probabilistic split, so only genuine loops count.
pub fn certified_dead_mass(m: &T, strategy: Strategy, step_budget: usize) -> Q {
    let mut dead = Q::zero();
    let mut branches = vec![(m.clone(), Q::one())];
    let mut processed = 0usize;
    while let Some((start, weight)) = branches.pop() {
        processed += 1;
        if processed > 1 << 14 {
            // remaining branches stay unclassified; dead is a lower bound
            break;
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut cur = start;
        let mut budget = step_budget;
        loop {
            if budget == 0 {
                break;
            }
            budget -= 1;
            match strategy_step(&cur, strategy) {
                StepOutcome::Value => break,
                StepOutcome::Stuck => {
                    // open redex: never a value
                    dead += weight.clone();
                    break;
                }
                StepOutcome::Deterministic(next) => {
                    if !seen.insert(CanonTerm::new(&cur)) {
                        dead += weight.clone();
                        break;
                    }
                    cur = next;
                }
                StepOutcome::Split(l, r) => {
                    let half = &weight * q(1, 2);
                    branches.push((l, half.clone()));
                    branches.push((r, half));
                    break;
                }
            }
        }
    }
    dead
}

// ---------------------------------------------------------------------------
// Approximation semantics
// ---------------------------------------------------------------------------

/// Options controlling residual certification during evaluation.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub strategy: Strategy,
    /// When set, budget-cut residuals are run through the deterministic-loop
    /// detector; certified-dead mass is excluded from interval upper bounds.
    pub certify_divergence: bool,
    pub cert_step_budget: usize,
}

impl EvalOptions {
    pub fn plain(strategy: Strategy) -> Self {
        EvalOptions {
            strategy,
            certify_divergence: false,
            cert_step_budget: 0,
        }
    }

    pub fn certifying(strategy: Strategy) -> Self {
        EvalOptions {
            strategy,
            certify_divergence: true,
            cert_step_budget: 256,
        }
    }
}

/// A lower approximation together with the fate of the missing mass. The
/// explored mass plus `dead` plus `unknown` always accounts for everything:
/// unknown = 1 - mass - dead.
#[derive(Debug, Clone)]
pub struct Approx {
    pub dist: ValueDistribution,
    /// Mass certified to never converge.
    pub dead: Q,
}

impl Approx {
    pub fn unknown(&self) -> Q {
        Q::one() - self.dist.mass() - &self.dead
    }

    pub fn interval(&self) -> ProbInterval {
        ProbInterval {
            lower: self.dist.mass().clone(),
            upper: Q::one() - &self.dead,
        }
    }
}

struct Evaluator {
    strategy: Strategy,
    memo: HashMap<(CanonTerm, u32), Rc<ValueDistribution>>,
}

impl Evaluator {
    fn new(strategy: Strategy) -> Self {
        Evaluator {
            strategy,
            memo: HashMap::new(),
        }
    }

    fn eval(&mut self, m: &T, depth: u32) -> Rc<ValueDistribution> {
        let key = (CanonTerm::new(m), depth);
        if let Some(hit) = self.memo.get(&key) {
            return hit.clone();
        }
        let out = Rc::new(self.eval_uncached(m, depth));
        self.memo.insert(key, out.clone());
        out
    }

    fn eval_uncached(&mut self, m: &T, depth: u32) -> ValueDistribution {
        if depth == 0 {
            return ValueDistribution::empty();
        }
        match m.as_ref() {
            Term::Lam(..) => ValueDistribution::dirac(m),
            Term::Var(_) => ValueDistribution::empty(),
            Term::Choice(l, r) => {
                let half = q(1, 2);
                let dl = self.eval(l, depth - 1);
                let dr = self.eval(r, depth - 1);
                let mut dist = ValueDistribution::empty();
                dist.add_scaled(&dl, &half);
                dist.add_scaled(&dr, &half);
                dist
            }
            Term::App(f, a) => match self.strategy {
                Strategy::Cbn => {
                    let df = self.eval(f, depth - 1);
                    let mut dist = ValueDistribution::empty();
                    for (v, w) in df.iter() {
                        let Term::Lam(x, b) = v.term().as_ref() else {
                            unreachable!("distribution keys are abstractions")
                        };
                        let body = substitute(b, x, a);
                        let db = self.eval(&body, depth - 1);
                        dist.add_scaled(&db, w);
                    }
                    dist
                }
                Strategy::Cbv => {
                    let df = self.eval(f, depth - 1);
                    let da = self.eval(a, depth - 1);
                    let mut dist = ValueDistribution::empty();
                    for (v, w) in df.iter() {
                        let Term::Lam(x, b) = v.term().as_ref() else {
                            unreachable!("distribution keys are abstractions")
                        };
                        for (arg_v, arg_w) in da.iter() {
                            let body = substitute(b, x, arg_v.term());
                            let db = self.eval(&body, depth - 1);
                            let factor = w * arg_w;
                            dist.add_scaled(&db, &factor);
                        }
                    }
                    dist
                }
            },
        }
    }
}

/// The distribution derived by unfolding the big-step rules with recursion
/// depth at most `depth`; monotone in `depth`, empty at depth 0.
pub fn approx_semantics(m: &T, depth: u32, strategy: Strategy) -> ValueDistribution {
    debug_assert!(m.is_closed(), "evaluation needs a closed term");
    Evaluator::new(strategy).eval(m, depth).as_ref().clone()
}

pub fn approx_semantics_opts(m: &T, depth: u32, opts: &EvalOptions) -> Approx {
    let dist = approx_semantics(m, depth, opts.strategy);
    let dead = if opts.certify_divergence {
        certified_dead_mass(m, opts.strategy, opts.cert_step_budget)
    } else {
        Q::zero()
    };
    Approx { dist, dead }
}

// ---------------------------------------------------------------------------
// Convergence probability
// ---------------------------------------------------------------------------

/// A sound enclosure of a convergence probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbInterval {
    pub lower: Q,
    pub upper: Q,
}

impl ProbInterval {
    pub fn exact(p: Q) -> Self {
        ProbInterval {
            lower: p.clone(),
            upper: p,
        }
    }

    pub fn point(&self) -> Option<&Q> {
        (self.lower == self.upper).then_some(&self.lower)
    }

    pub fn disjoint(&self, other: &ProbInterval) -> bool {
        self.upper < other.lower || other.upper < self.lower
    }

    pub fn overlaps(&self, other: &ProbInterval) -> bool {
        !self.disjoint(other)
    }

    pub fn width(&self) -> Q {
        &self.upper - &self.lower
    }
}

impl fmt::Display for ProbInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", fmt_q(&self.lower), fmt_q(&self.upper))
    }
}

/// Lower bound is the mass reached at the given depth; upper bound adds the
/// unexplored residual.
pub fn converge_prob(m: &T, depth: u32, strategy: Strategy) -> ProbInterval {
    converge_prob_opts(m, depth, &EvalOptions::plain(strategy))
}

pub fn converge_prob_opts(m: &T, depth: u32, opts: &EvalOptions) -> ProbInterval {
    approx_semantics_opts(m, depth, opts).interval()
}

// ---------------------------------------------------------------------------
// Iterative deepening toward the least upper bound
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LubResult {
    pub dist: ValueDistribution,
    pub gap: Q,
    pub depth_used: u32,
    pub gap_reached: bool,
}

/// Deepen until the enclosure width drops below `mass_gap` or `max_depth` is
/// reached; the last lower approximation is returned with its achieved gap.
pub fn semantics_lub(m: &T, mass_gap: &Q, max_depth: u32, strategy: Strategy) -> LubResult {
    let opts = EvalOptions::certifying(strategy);
    let mut last = approx_semantics_opts(m, 0, &opts);
    let mut depth_used = 0;
    for depth in 0..=max_depth {
        last = approx_semantics_opts(m, depth, &opts);
        depth_used = depth;
        if &last.unknown() < mass_gap {
            return LubResult {
                gap: last.unknown(),
                dist: last.dist,
                depth_used,
                gap_reached: true,
            };
        }
    }
    LubResult {
        gap: last.unknown(),
        dist: last.dist,
        depth_used,
        gap_reached: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{alpha_eq, app, choice, lam, parse_term, prelude, var};

    fn p(s: &str) -> T {
        parse_term(s, &prelude()).unwrap()
    }

    fn cbn(m: &T, d: u32) -> ValueDistribution {
        approx_semantics(m, d, Strategy::Cbn)
    }

    #[test]
    fn running_example_masses() {
        // assigns 1/2 to I and 1/4 to K from depth 3 on
        let m = p("I (+) (K (+) OMEGA)");
        let d = cbn(&m, 3);
        assert_eq!(d.get(&p("I")), q(1, 2));
        assert_eq!(d.get(&p("K")), q(1, 4));
        assert_eq!(d.mass(), &q(3, 4));
        let deeper = cbn(&m, 9);
        assert_eq!(deeper.mass(), &q(3, 4));
    }

    #[test]
    fn value_is_dirac_from_depth_one() {
        let m = p("\\x. OMEGA");
        assert!(cbn(&m, 0).is_empty());
        let d = cbn(&m, 1);
        assert_eq!(d.get(&m), Q::one());
    }

    #[test]
    fn choice_merges_identical_branches() {
        // apply the choice rule by hand: 1/2 + 1/2 on the same key
        let m = p("I (+) I");
        let d = cbn(&m, 2);
        assert_eq!(d.get(&p("I")), Q::one());
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn cbn_step_examples() {
        match cbn_step(&p("(\\x. x) K")) {
            StepOutcome::Deterministic(next) => assert!(alpha_eq(&next, &p("K"))),
            other => panic!("expected beta step, got {other:?}"),
        }
        match cbn_step(&p("I (+) K")) {
            StepOutcome::Split(l, r) => {
                assert!(alpha_eq(&l, &p("I")));
                assert!(alpha_eq(&r, &p("K")));
            }
            other => panic!("expected split, got {other:?}"),
        }
        assert!(matches!(cbn_step(&p("\\x. OMEGA")), StepOutcome::Value));
        // choice in redex position under an application splits
        match cbn_step(&p("(I (+) K) I")) {
            StepOutcome::Split(l, r) => {
                assert!(alpha_eq(&l, &p("I I")));
                assert!(alpha_eq(&r, &p("K I")));
            }
            other => panic!("expected split, got {other:?}"),
        }
        assert!(matches!(
            cbn_step(&lam("x", var("y"))),
            StepOutcome::Stuck
        ));
    }

    #[test]
    fn beta_equation_offset_one() {
        let cases = [
            ("(\\x. x) K", "K"),
            ("(\\x. x x) I", "I I"),
            ("(\\x. x (+) I) (K I OMEGA)", "K I OMEGA (+) I"),
            ("(\\x. \\y. x) OMEGA", "\\y. OMEGA"),
        ];
        for (redex, contractum) in cases {
            let r = p(redex);
            let c = p(contractum);
            for d in 0..=8 {
                assert_eq!(
                    cbn(&r, d + 1),
                    cbn(&c, d),
                    "beta equation failed for {redex} at depth {d}"
                );
            }
        }
    }

    #[test]
    fn choice_equation_offset_one() {
        let pairs = [("I", "K"), ("OMEGA", "I"), ("K I I", "I (+) OMEGA")];
        for (l, r) in pairs {
            let lt = p(l);
            let rt = p(r);
            let m = choice(lt.clone(), rt.clone());
            for d in 0..=8 {
                let mut expect = ValueDistribution::empty();
                expect.add_scaled(&cbn(&lt, d), &q(1, 2));
                expect.add_scaled(&cbn(&rt, d), &q(1, 2));
                assert_eq!(cbn(&m, d + 1), expect, "choice equation at {l} (+) {r}, depth {d}");
            }
        }
    }

    #[test]
    fn monotone_in_depth() {
        let terms = [
            "I (+) (K (+) OMEGA)",
            "(\\x. x x) (I (+) K)",
            "K I (I (+) OMEGA)",
            "OMEGA (+) (I (+) I)",
        ];
        for s in terms {
            let m = p(s);
            for d in 0..12 {
                assert!(
                    cbn(&m, d).le(&cbn(&m, d + 1)),
                    "monotonicity failed for {s} at depth {d}"
                );
            }
        }
    }

    #[test]
    fn mass_never_exceeds_one() {
        let terms = ["I (+) I", "(\\x. x x) (\\x. x x)", "K I I", "I (+) (K (+) OMEGA)"];
        for s in terms {
            let m = p(s);
            for d in 0..10 {
                assert!(cbn(&m, d).mass() <= &Q::one());
            }
        }
    }

    #[test]
    fn converge_prob_examples() {
        // interval stays [0,1] for the divergent term under plain options
        let omega = p("OMEGA");
        for d in [0, 1, 5, 9] {
            let i = converge_prob(&omega, d, Strategy::Cbn);
            assert_eq!(i.lower, Q::zero());
            assert_eq!(i.upper, Q::one());
        }
        let id = p("\\x. x");
        let i = converge_prob(&id, 1, Strategy::Cbn);
        assert_eq!(i, ProbInterval::exact(Q::one()));
        // the running example reports [3/4, 1] at small depth under plain
        // options and collapses to [3/4, 3/4] once the dead branch is certified
        let m = p("I (+) (K (+) OMEGA)");
        let plain = converge_prob(&m, 4, Strategy::Cbn);
        assert_eq!(plain.lower, q(3, 4));
        assert_eq!(plain.upper, Q::one());
        let cert = converge_prob_opts(&m, 4, &EvalOptions::certifying(Strategy::Cbn));
        assert_eq!(cert, ProbInterval::exact(q(3, 4)));
    }

    #[test]
    fn certified_divergence_catches_looping_redexes() {
        assert!(certified_divergent(&p("OMEGA"), 64));
        assert!(!certified_divergent(&p("I"), 64));
        assert!(!certified_divergent(&p("XI"), 64)); // converges to a value
        assert!(!certified_divergent(&p("I (+) OMEGA"), 64)); // splits
    }

    #[test]
    fn lub_examples() {
        let id = p("\\x. x");
        let r = semantics_lub(&id, &q(1, 1000), 16, Strategy::Cbn);
        assert!(r.gap_reached);
        assert!(r.gap.is_zero());
        assert_eq!(r.dist.get(&id), Q::one());

        let m = p("I (+) (K (+) OMEGA)");
        let r = semantics_lub(&m, &Q::one(), 16, Strategy::Cbn);
        assert!(r.gap_reached);
        // monotone refinement: the result is a prefix of the limit
        assert!(r.dist.le(&cbn(&m, 16)));

        let omega = p("OMEGA");
        let r = semantics_lub(&omega, &q(1, 2), 8, Strategy::Cbn);
        // certified divergence collapses the gap to zero immediately
        assert!(r.gap_reached);
        assert!(r.dist.is_empty());
    }

    #[test]
    fn lub_reports_gap_not_reached() {
        // a term the loop detector cannot certify: grows forever
        // (\x. x x x)(\x. x x x) steps to ever-larger terms
        let grower = app(p("\\x. x x x"), p("\\x. x x x"));
        let r = semantics_lub(&grower, &q(1, 2), 6, Strategy::Cbn);
        assert!(!r.gap_reached);
        assert_eq!(r.gap, Q::one());
    }

    #[test]
    fn small_step_exploration_agrees_with_big_step() {
        // exhaustive small-step tree exploration to n steps yields a
        // distribution below the big-step approximation at matching budget
        fn explore(m: &T, steps: u32) -> ValueDistribution {
            let mut out = ValueDistribution::empty();
            let mut frontier = vec![(m.clone(), Q::one())];
            for _ in 0..steps {
                let mut next = Vec::new();
                for (t, w) in frontier {
                    match cbn_step(&t) {
                        StepOutcome::Value => out.add(&t, &w),
                        StepOutcome::Deterministic(n) => next.push((n, w)),
                        StepOutcome::Split(l, r) => {
                            let half = &w * q(1, 2);
                            next.push((l, half.clone()));
                            next.push((r, half));
                        }
                        StepOutcome::Stuck => {}
                    }
                }
                frontier = next;
            }
            out
        }
        let terms = ["I (+) (K (+) OMEGA)", "K I (I (+) OMEGA)", "(\\x. x x) (I (+) K)"];
        for s in terms {
            let m = p(s);
            for n in 0..10 {
                assert!(
                    explore(&m, n).le(&cbn(&m, n)),
                    "small-step exceeded big-step for {s} at {n}"
                );
            }
            // same limit on these terms
            assert_eq!(explore(&m, 24).mass(), cbn(&m, 24).mass(), "limit for {s}");
        }
    }

    #[test]
    fn cbv_basics() {
        // strict argument evaluation: K I OMEGA diverges under call-by-value
        let m = p("K I OMEGA");
        for d in 0..10 {
            assert!(approx_semantics(&m, d, Strategy::Cbv).is_empty());
        }
        // but converges under call-by-name
        assert_eq!(cbn(&m, 3).get(&p("I")), Q::one());
        // beta with a value argument agrees at offset one
        let redex = p("(\\x. x) (\\y. y)");
        for d in 0..6 {
            assert_eq!(
                approx_semantics(&redex, d + 1, Strategy::Cbv),
                approx_semantics(&p("\\y. y"), d, Strategy::Cbv)
            );
        }
        // choice of arguments flows through application
        let m = p("(\\x. x) (I (+) K)");
        let d = approx_semantics(&m, 3, Strategy::Cbv);
        assert_eq!(d.get(&p("I")), q(1, 2));
        assert_eq!(d.get(&p("K")), q(1, 2));
    }

    #[test]
    fn cbv_mass_bound_and_monotone() {
        let terms = ["(\\x. x x) (I (+) K)", "K I (I (+) OMEGA)", "I (+) (K (+) OMEGA)"];
        for s in terms {
            let m = p(s);
            for d in 0..10 {
                let lo = approx_semantics(&m, d, Strategy::Cbv);
                let hi = approx_semantics(&m, d + 1, Strategy::Cbv);
                assert!(lo.le(&hi));
                assert!(hi.mass() <= &Q::one());
            }
        }
    }
}
