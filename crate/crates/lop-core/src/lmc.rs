//! Finite multisorted labelled Markov chains, partition refinement for
//! probabilistic bisimulation, and simulation checking both by literal subset
//! enumeration and by maximum-flow feasibility.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num::{One, Zero};
use thiserror::Error;

use crate::eval::{fmt_q, parse_q, Q};
use crate::flow::{max_flow, Capacity, FlowNetwork};

pub type StateId = usize;
pub type LabelId = usize;
pub type SortId = usize;

#[derive(Debug, Clone, Default)]
pub struct Mlmc {
    /// Sort tag per state.
    pub sorts: Vec<SortId>,
    /// Source sort each label applies to.
    pub label_sort: Vec<SortId>,
    /// Sparse rows: positive entries only, sorted by target.
    trans: BTreeMap<(StateId, LabelId), Vec<(StateId, Q)>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LmcError {
    #[error("row mass of state {state} under label {label} exceeds 1")]
    Normalization { state: StateId, label: LabelId },
    #[error("label {label} used from state {state} of the wrong sort")]
    SortDiscipline { state: StateId, label: LabelId },
    #[error("state or label index out of range")]
    OutOfRange,
    #[error("relation mixes sorts at ({0}, {1})")]
    CrossSort(StateId, StateId),
    #[error("lmc text format: {0}")]
    Format(String),
    #[error("state space too large for subset enumeration ({0} states, limit 20)")]
    TooLargeForBruteForce(usize),
    #[error("relation is not an equivalence: {0}")]
    NotEquivalence(String),
}

impl Mlmc {
    pub fn new(sorts: Vec<SortId>, label_sort: Vec<SortId>) -> Self {
        Mlmc {
            sorts,
            label_sort,
            trans: BTreeMap::new(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.sorts.len()
    }

    pub fn n_labels(&self) -> usize {
        self.label_sort.len()
    }

    pub fn add_trans(&mut self, s: StateId, l: LabelId, t: StateId, w: Q) {
        if w.is_zero() {
            return;
        }
        let row = self.trans.entry((s, l)).or_default();
        match row.binary_search_by_key(&t, |(u, _)| *u) {
            Ok(i) => row[i].1 += w,
            Err(i) => row.insert(i, (t, w)),
        }
    }

    pub fn row(&self, s: StateId, l: LabelId) -> &[(StateId, Q)] {
        self.trans
            .get(&(s, l))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn row_mass(&self, s: StateId, l: LabelId) -> Q {
        self.row(s, l).iter().map(|(_, w)| w.clone()).sum()
    }

    /// Mass of the row restricted to a set of target states.
    pub fn mass_into(&self, s: StateId, l: LabelId, targets: &BTreeSet<StateId>) -> Q {
        self.row(s, l)
            .iter()
            .filter(|(t, _)| targets.contains(t))
            .map(|(_, w)| w.clone())
            .sum()
    }

    pub fn validate(&self) -> Result<(), LmcError> {
        for (&(s, l), row) in &self.trans {
            if s >= self.n_states() || l >= self.n_labels() {
                return Err(LmcError::OutOfRange);
            }
            if self.label_sort[l] != self.sorts[s] {
                return Err(LmcError::SortDiscipline { state: s, label: l });
            }
            let mut mass = Q::zero();
            for (t, w) in row {
                if *t >= self.n_states() {
                    return Err(LmcError::OutOfRange);
                }
                mass += w.clone();
            }
            if mass > Q::one() {
                return Err(LmcError::Normalization { state: s, label: l });
            }
        }
        Ok(())
    }

    /// Labels applicable to the sort of `s`.
    pub fn labels_of_state(&self, s: StateId) -> impl Iterator<Item = LabelId> + '_ {
        let sort = self.sorts[s];
        (0..self.n_labels()).filter(move |&l| self.label_sort[l] == sort)
    }
}

// ---------------------------------------------------------------------------
// Relations and partitions
// ---------------------------------------------------------------------------

/// A binary relation on states with maintained closure flags.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StateRelation {
    pairs: BTreeSet<(StateId, StateId)>,
    pub is_preorder: bool,
    pub is_equivalence: bool,
}

impl StateRelation {
    pub fn new() -> Self {
        StateRelation::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (StateId, StateId)>) -> Self {
        StateRelation {
            pairs: pairs.into_iter().collect(),
            is_preorder: false,
            is_equivalence: false,
        }
    }

    /// The full sort-respecting relation: a preorder by construction.
    pub fn full(chain: &Mlmc) -> Self {
        let mut pairs = BTreeSet::new();
        for s in 0..chain.n_states() {
            for t in 0..chain.n_states() {
                if chain.sorts[s] == chain.sorts[t] {
                    pairs.insert((s, t));
                }
            }
        }
        StateRelation {
            pairs,
            is_preorder: true,
            is_equivalence: true,
        }
    }

    pub fn identity(n_states: usize) -> Self {
        StateRelation {
            pairs: (0..n_states).map(|s| (s, s)).collect(),
            is_preorder: true,
            is_equivalence: true,
        }
    }

    pub fn contains(&self, s: StateId, t: StateId) -> bool {
        self.pairs.contains(&(s, t))
    }

    pub fn insert(&mut self, s: StateId, t: StateId) {
        self.pairs.insert((s, t));
        self.is_preorder = false;
        self.is_equivalence = false;
    }

    pub fn remove(&mut self, s: StateId, t: StateId) {
        self.pairs.remove(&(s, t));
    }

    pub fn pairs(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn inverse(&self) -> StateRelation {
        StateRelation::from_pairs(self.pairs.iter().map(|&(s, t)| (t, s)))
    }

    pub fn intersect(&self, other: &StateRelation) -> StateRelation {
        StateRelation::from_pairs(self.pairs.intersection(&other.pairs).copied())
    }

    pub fn union(&self, other: &StateRelation) -> StateRelation {
        StateRelation::from_pairs(self.pairs.union(&other.pairs).copied())
    }

    /// The R-closure of a set of states.
    pub fn closure_of(&self, xs: &BTreeSet<StateId>) -> BTreeSet<StateId> {
        self.pairs
            .iter()
            .filter(|(s, _)| xs.contains(s))
            .map(|&(_, t)| t)
            .collect()
    }

    pub fn reflexive_closure(&self, n_states: usize) -> StateRelation {
        let mut pairs = self.pairs.clone();
        pairs.extend((0..n_states).map(|s| (s, s)));
        StateRelation {
            pairs,
            is_preorder: self.is_preorder,
            is_equivalence: self.is_equivalence,
        }
    }

    pub fn symmetric_closure(&self) -> StateRelation {
        let mut pairs = self.pairs.clone();
        pairs.extend(self.pairs.iter().map(|&(s, t)| (t, s)));
        StateRelation::from_pairs(pairs)
    }

    pub fn transitive_closure(&self) -> StateRelation {
        let mut pairs = self.pairs.clone();
        loop {
            let mut grew = false;
            let snapshot: Vec<_> = pairs.iter().copied().collect();
            let mut by_src: BTreeMap<StateId, Vec<StateId>> = BTreeMap::new();
            for &(s, t) in &snapshot {
                by_src.entry(s).or_default().push(t);
            }
            for &(s, t) in &snapshot {
                if let Some(nexts) = by_src.get(&t) {
                    for &u in nexts {
                        if pairs.insert((s, u)) {
                            grew = true;
                        }
                    }
                }
            }
            if !grew {
                break;
            }
        }
        StateRelation::from_pairs(pairs)
    }

    /// Reflexive-transitive closure, marking the preorder flag.
    pub fn preorder_closure(&self, n_states: usize) -> StateRelation {
        let mut out = self.reflexive_closure(n_states).transitive_closure();
        out.is_preorder = true;
        out
    }

    /// Reflexive-symmetric-transitive closure, marking both flags.
    pub fn equivalence_closure(&self, n_states: usize) -> StateRelation {
        let mut out = self
            .reflexive_closure(n_states)
            .symmetric_closure()
            .transitive_closure();
        out.is_preorder = true;
        out.is_equivalence = true;
        out
    }

    pub fn check_equivalence(&self, n_states: usize) -> Result<(), String> {
        for s in 0..n_states {
            if !self.contains(s, s) {
                return Err(format!("missing reflexive pair ({s}, {s})"));
            }
        }
        for &(s, t) in &self.pairs {
            if !self.contains(t, s) {
                return Err(format!("missing symmetric pair ({t}, {s})"));
            }
        }
        for &(s, t) in &self.pairs {
            for &(t2, u) in self.pairs.range((t, 0)..=(t, usize::MAX)) {
                debug_assert_eq!(t, t2);
                if !self.contains(s, u) {
                    return Err(format!("missing transitive pair ({s}, {u})"));
                }
            }
        }
        Ok(())
    }

    pub fn respects_sorts(&self, chain: &Mlmc) -> Result<(), LmcError> {
        for &(s, t) in &self.pairs {
            if s >= chain.n_states() || t >= chain.n_states() {
                return Err(LmcError::OutOfRange);
            }
            if chain.sorts[s] != chain.sorts[t] {
                return Err(LmcError::CrossSort(s, t));
            }
        }
        Ok(())
    }
}

/// Disjoint blocks covering the state set; block order is by least member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    block_of: Vec<usize>,
    blocks: Vec<BTreeSet<StateId>>,
}

impl Partition {
    pub fn from_blocks(n_states: usize, mut blocks: Vec<BTreeSet<StateId>>) -> Self {
        blocks.retain(|b| !b.is_empty());
        blocks.sort_by_key(|b| *b.iter().next().unwrap());
        let mut block_of = vec![usize::MAX; n_states];
        for (i, b) in blocks.iter().enumerate() {
            for &s in b {
                block_of[s] = i;
            }
        }
        assert!(block_of.iter().all(|&b| b != usize::MAX), "partition must cover");
        Partition { block_of, blocks }
    }

    pub fn block_of(&self, s: StateId) -> usize {
        self.block_of[s]
    }

    pub fn blocks(&self) -> &[BTreeSet<StateId>] {
        &self.blocks
    }

    pub fn same_block(&self, s: StateId, t: StateId) -> bool {
        self.block_of[s] == self.block_of[t]
    }

    /// The induced equivalence relation.
    pub fn to_relation(&self) -> StateRelation {
        let mut pairs = BTreeSet::new();
        for b in &self.blocks {
            for &s in b {
                for &t in b {
                    pairs.insert((s, t));
                }
            }
        }
        let mut r = StateRelation::from_pairs(pairs);
        r.is_preorder = true;
        r.is_equivalence = true;
        r
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.blocks.iter().enumerate() {
            let members: Vec<String> = b.iter().map(|s| s.to_string()).collect();
            writeln!(f, "block {} {{{}}}", i, members.join(","))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Bisimulation
// ---------------------------------------------------------------------------

/// Coarsest partition whose blocks agree on the mass into every block under
/// every label: splitter-based refinement from the per-sort partition.
pub fn bisim_partition(chain: &Mlmc) -> Partition {
    let n = chain.n_states();
    let n_sorts = chain.sorts.iter().copied().max().map_or(0, |m| m + 1);
    let mut blocks: Vec<BTreeSet<StateId>> = (0..n_sorts)
        .map(|k| (0..n).filter(|&s| chain.sorts[s] == k).collect())
        .collect();
    blocks.retain(|b| !b.is_empty());
    let mut partition = Partition::from_blocks(n, blocks);

    loop {
        let mut changed = false;
        let splitters: Vec<BTreeSet<StateId>> = partition.blocks().to_vec();
        for label in 0..chain.n_labels() {
            for splitter in &splitters {
                // signature: mass into the splitter under this label
                let mut new_blocks: Vec<BTreeSet<StateId>> = Vec::new();
                for block in partition.blocks() {
                    if block.len() == 1 {
                        new_blocks.push(block.clone());
                        continue;
                    }
                    let mut by_sig: BTreeMap<Q, BTreeSet<StateId>> = BTreeMap::new();
                    for &s in block {
                        let sig = if chain.label_sort[label] == chain.sorts[s] {
                            chain.mass_into(s, label, splitter)
                        } else {
                            Q::zero()
                        };
                        by_sig.entry(sig).or_default().insert(s);
                    }
                    if by_sig.len() > 1 {
                        changed = true;
                    }
                    new_blocks.extend(by_sig.into_values());
                }
                partition = Partition::from_blocks(n, new_blocks);
            }
        }
        if !changed {
            return partition;
        }
    }
}

/// Outcome detail for a failed bisimulation check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BisimCheckFailure {
    NotEquivalence(String),
    MassMismatch {
        s: StateId,
        t: StateId,
        label: LabelId,
        class: BTreeSet<StateId>,
    },
}

impl fmt::Display for BisimCheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BisimCheckFailure::NotEquivalence(why) => {
                write!(f, "not an equivalence relation: {why}")
            }
            BisimCheckFailure::MassMismatch { s, t, label, class } => {
                let members: Vec<String> = class.iter().map(|x| x.to_string()).collect();
                write!(
                    f,
                    "mass mismatch at ({s}, {t}, label {label}, class {{{}}})",
                    members.join(",")
                )
            }
        }
    }
}

/// True iff `r` is an equivalence satisfying the class-mass condition.
pub fn check_bisimulation(chain: &Mlmc, r: &StateRelation) -> Result<(), BisimCheckFailure> {
    if let Err(why) = r.check_equivalence(chain.n_states()) {
        return Err(BisimCheckFailure::NotEquivalence(why));
    }
    if let Err(e) = r.respects_sorts(chain) {
        return Err(BisimCheckFailure::NotEquivalence(e.to_string()));
    }
    // equivalence classes
    let mut class_of: BTreeMap<StateId, usize> = BTreeMap::new();
    let mut classes: Vec<BTreeSet<StateId>> = Vec::new();
    for s in 0..chain.n_states() {
        if class_of.contains_key(&s) {
            continue;
        }
        let members: BTreeSet<StateId> = (0..chain.n_states())
            .filter(|&t| r.contains(s, t))
            .collect();
        for &m in &members {
            class_of.insert(m, classes.len());
        }
        classes.push(members);
    }
    for (s, t) in r.pairs() {
        if s >= t {
            continue;
        }
        for label in chain.labels_of_state(s) {
            for class in &classes {
                let ms = chain.mass_into(s, label, class);
                let mt = chain.mass_into(t, label, class);
                if ms != mt {
                    return Err(BisimCheckFailure::MassMismatch {
                        s,
                        t,
                        label,
                        class: class.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Literal subset-enumeration check of the simulation condition; guarded to
/// small chains.
pub fn check_simulation_bruteforce(chain: &Mlmc, r: &StateRelation) -> Result<bool, LmcError> {
    if chain.n_states() > 20 {
        return Err(LmcError::TooLargeForBruteForce(chain.n_states()));
    }
    r.respects_sorts(chain)?;
    for (s, t) in r.pairs() {
        if !sim_pair_holds_bruteforce(chain, r, s, t) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The per-pair condition: for every label and every subset X of the source's
/// support, the mass into X is dominated by the target's mass into R(X).
pub fn sim_pair_holds_bruteforce(
    chain: &Mlmc,
    r: &StateRelation,
    s: StateId,
    t: StateId,
) -> bool {
    for label in chain.labels_of_state(s) {
        let row = chain.row(s, label);
        let support: Vec<StateId> = row.iter().map(|(u, _)| *u).collect();
        // subsets of states outside the support add no source mass and only
        // grow the closure, so enumerating the support is exhaustive
        for sel in 0u64..(1u64 << support.len()) {
            let xs: BTreeSet<StateId> = support
                .iter()
                .enumerate()
                .filter(|(i, _)| sel & (1 << i) != 0)
                .map(|(_, u)| *u)
                .collect();
            let lhs = chain.mass_into(s, label, &xs);
            let rhs = chain.mass_into(t, label, &r.closure_of(&xs));
            if lhs > rhs {
                return false;
            }
        }
    }
    true
}

/// Flow-feasibility form of the per-pair condition. The bipartite network
/// totalizes both rows: the source side gets a rest node carrying its missing
/// mass, the target side a slack sink edge of capacity 1 - row mass; the rest
/// node may feed every target node and the slack. The pair passes iff the
/// maximum flow is 1.
pub fn sim_pair_holds_flow(chain: &Mlmc, r: &StateRelation, s: StateId, t: StateId) -> bool {
    for label in chain.labels_of_state(s) {
        if !sim_row_dominated_flow(chain, r, s, t, label) {
            return false;
        }
    }
    true
}

fn sim_row_dominated_flow(
    chain: &Mlmc,
    r: &StateRelation,
    s: StateId,
    t: StateId,
    label: LabelId,
) -> bool {
    let s_row = chain.row(s, label);
    let t_row = chain.row(t, label);
    let s_mass: Q = s_row.iter().map(|(_, w)| w.clone()).sum();
    let t_mass: Q = t_row.iter().map(|(_, w)| w.clone()).sum();

    // nodes: 0 source, 1 sink, then s-side, then t-side, then rest and slack
    let ns = s_row.len();
    let nt = t_row.len();
    let rest = 2 + ns + nt;
    let slack = rest + 1;
    let mut net = FlowNetwork::new(slack + 1, 0, 1);
    for (i, (_, w)) in s_row.iter().enumerate() {
        net.add_edge(0, 2 + i, Capacity::Finite(w.clone()));
    }
    net.add_edge(0, rest, Capacity::Finite(Q::one() - &s_mass));
    for (j, (_, w)) in t_row.iter().enumerate() {
        net.add_edge(2 + ns + j, 1, Capacity::Finite(w.clone()));
    }
    net.add_edge(slack, 1, Capacity::Finite(Q::one() - &t_mass));
    for (i, (u, _)) in s_row.iter().enumerate() {
        for (j, (v, _)) in t_row.iter().enumerate() {
            if r.contains(*u, *v) {
                net.add_edge(2 + i, 2 + ns + j, Capacity::Unbounded);
            }
        }
    }
    for (j, _) in t_row.iter().enumerate() {
        net.add_edge(rest, 2 + ns + j, Capacity::Unbounded);
    }
    net.add_edge(rest, slack, Capacity::Unbounded);

    let mf = max_flow(&net).expect("well-formed simulation network");
    mf.value == Q::one()
}

/// Flow-based check of a full relation; `r` should already be a preorder.
pub fn check_simulation_flow(chain: &Mlmc, r: &StateRelation) -> Result<bool, LmcError> {
    r.respects_sorts(chain)?;
    for (s, t) in r.pairs() {
        if !sim_pair_holds_flow(chain, r, s, t) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Greatest fixed point: start from the full sort-respecting relation and
/// delete pairs whose rows are not flow-dominated, until stable. The result
/// is the largest simulation preorder.
pub fn largest_simulation(chain: &Mlmc) -> StateRelation {
    let mut r = StateRelation::full(chain);
    loop {
        let mut to_delete = Vec::new();
        for (s, t) in r.pairs() {
            if !sim_pair_holds_flow(chain, &r, s, t) {
                to_delete.push((s, t));
            }
        }
        if to_delete.is_empty() {
            break;
        }
        for (s, t) in to_delete {
            r.remove(s, t);
        }
    }
    r.is_preorder = true;
    debug_assert!(r.check_equivalence_free_preorder(chain.n_states()));
    r
}

impl StateRelation {
    fn check_equivalence_free_preorder(&self, n_states: usize) -> bool {
        (0..n_states).all(|s| self.contains(s, s))
            && self.pairs().all(|(s, t)| {
                self.pairs()
                    .filter(|&(t2, _)| t2 == t)
                    .all(|(_, u)| self.contains(s, u))
            })
    }
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

/// Parse the chain text format: header `states N sorts K labels M`, lines
/// `sort s k`, `label l k_src`, `trans s l t a/b`; `#` comments.
pub fn parse_lmc(text: &str) -> Result<Mlmc, LmcError> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let header = lines.next().ok_or(LmcError::Format("empty input".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let (n, _k, m) = match h.as_slice() {
        ["states", n, "sorts", k, "labels", m] => {
            let n: usize = n.parse().map_err(|_| LmcError::Format(header.into()))?;
            let k: usize = k.parse().map_err(|_| LmcError::Format(header.into()))?;
            let m: usize = m.parse().map_err(|_| LmcError::Format(header.into()))?;
            (n, k, m)
        }
        _ => return Err(LmcError::Format(format!("bad header: {header}"))),
    };
    let mut chain = Mlmc::new(vec![0; n], vec![0; m]);
    for line in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["sort", s, k] => {
                let s: usize = s.parse().map_err(|_| LmcError::Format(line.into()))?;
                let k: usize = k.parse().map_err(|_| LmcError::Format(line.into()))?;
                if s >= n {
                    return Err(LmcError::OutOfRange);
                }
                chain.sorts[s] = k;
            }
            ["label", l, k] => {
                let l: usize = l.parse().map_err(|_| LmcError::Format(line.into()))?;
                let k: usize = k.parse().map_err(|_| LmcError::Format(line.into()))?;
                if l >= m {
                    return Err(LmcError::OutOfRange);
                }
                chain.label_sort[l] = k;
            }
            ["trans", s, l, t, w] => {
                let s: usize = s.parse().map_err(|_| LmcError::Format(line.into()))?;
                let l: usize = l.parse().map_err(|_| LmcError::Format(line.into()))?;
                let t: usize = t.parse().map_err(|_| LmcError::Format(line.into()))?;
                let w = parse_q(w).ok_or(LmcError::Format(line.into()))?;
                chain.add_trans(s, l, t, w);
            }
            _ => return Err(LmcError::Format(format!("unrecognized line: {line}"))),
        }
    }
    chain.validate()?;
    Ok(chain)
}

impl fmt::Display for Mlmc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n_sorts = self.sorts.iter().copied().max().map_or(1, |m| m + 1);
        writeln!(
            f,
            "states {} sorts {} labels {}",
            self.n_states(),
            n_sorts,
            self.n_labels()
        )?;
        for (s, k) in self.sorts.iter().enumerate() {
            writeln!(f, "sort {s} {k}")?;
        }
        for (l, k) in self.label_sort.iter().enumerate() {
            writeln!(f, "label {l} {k}")?;
        }
        for (&(s, l), row) in &self.trans {
            for (t, w) in row {
                writeln!(f, "trans {s} {l} {t} {}", fmt_q(w))?;
            }
        }
        Ok(())
    }
}
