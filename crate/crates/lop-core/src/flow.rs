//! Exact-rational maximum flow with a min-cut certificate, and the
//! disentangling of probability assignments through the subset flow network.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use num::{One, Zero};
use thiserror::Error;

use crate::eval::{fmt_q, Q};

/// Edge capacity; `Unbounded` is realized at solve time as a finite value
/// exceeding every achievable flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Capacity {
    Finite(Q),
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    pub nodes: usize,
    pub source: usize,
    pub target: usize,
    edges: Vec<(usize, usize, Capacity)>,
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("node index {0} out of range")]
    BadNode(usize),
    #[error("negative capacity on edge {0} -> {1}")]
    NegativeCapacity(usize, usize),
    #[error("probability assignment invariant fails at subset {0}")]
    BadAssignment(String),
    #[error("max flow {got} is smaller than the required total {want}")]
    FlowDeficit { got: String, want: String },
}

impl FlowNetwork {
    pub fn new(nodes: usize, source: usize, target: usize) -> Self {
        FlowNetwork {
            nodes,
            source,
            target,
            edges: Vec::new(),
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: Capacity) {
        self.edges.push((from, to, cap));
    }

    pub fn edges(&self) -> &[(usize, usize, Capacity)] {
        &self.edges
    }

    fn validate(&self) -> Result<(), FlowError> {
        for &(u, v, ref c) in &self.edges {
            if u >= self.nodes {
                return Err(FlowError::BadNode(u));
            }
            if v >= self.nodes {
                return Err(FlowError::BadNode(v));
            }
            if let Capacity::Finite(q) = c {
                if q < &Q::zero() {
                    return Err(FlowError::NegativeCapacity(u, v));
                }
            }
        }
        Ok(())
    }

    /// Merge parallel edges (capacities add, unbounded absorbs) and drop
    /// loops and zero-capacity edges.
    pub fn canonicalize(&mut self) {
        let mut merged: BTreeMap<(usize, usize), Capacity> = BTreeMap::new();
        for (u, v, c) in self.edges.drain(..) {
            if u == v {
                continue;
            }
            match merged.entry((u, v)) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(c);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let cur = e.get_mut();
                    *cur = match (cur.clone(), c) {
                        (Capacity::Unbounded, _) | (_, Capacity::Unbounded) => Capacity::Unbounded,
                        (Capacity::Finite(a), Capacity::Finite(b)) => Capacity::Finite(a + b),
                    };
                }
            }
        }
        self.edges = merged
            .into_iter()
            .filter(|(_, c)| !matches!(c, Capacity::Finite(q) if q.is_zero()))
            .map(|((u, v), c)| (u, v, c))
            .collect();
    }
}

/// A maximum flow together with the saturated cut that certifies it.
#[derive(Debug, Clone)]
pub struct MaxFlowResult {
    pub value: Q,
    /// Flow per canonicalized edge, aligned with `edges`.
    pub flows: Vec<Q>,
    pub edges: Vec<(usize, usize)>,
    /// Source side of a minimum cut.
    pub cut_source_side: Vec<usize>,
    pub cut_capacity: Q,
}

/// Shortest-augmenting-path maximum flow over exact rationals. Terminates
/// because all capacities share a common denominator.
pub fn max_flow(net: &FlowNetwork) -> Result<MaxFlowResult, FlowError> {
    net.validate()?;
    let mut canon = net.clone();
    canon.canonicalize();

    // realize unbounded capacities as (sum of finite capacities) + 1
    let finite_total: Q = canon
        .edges
        .iter()
        .filter_map(|(_, _, c)| match c {
            Capacity::Finite(q) => Some(q.clone()),
            Capacity::Unbounded => None,
        })
        .sum();
    let big = finite_total + Q::one();

    let n = canon.nodes;
    let m = canon.edges.len();
    // residual graph: forward edge 2i, backward edge 2i+1
    let mut head: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut to: Vec<usize> = Vec::with_capacity(2 * m);
    let mut residual: Vec<Q> = Vec::with_capacity(2 * m);
    for (i, (u, v, c)) in canon.edges.iter().enumerate() {
        let cap = match c {
            Capacity::Finite(q) => q.clone(),
            Capacity::Unbounded => big.clone(),
        };
        head[*u].push(2 * i);
        to.push(*v);
        residual.push(cap);
        head[*v].push(2 * i + 1);
        to.push(*u);
        residual.push(Q::zero());
    }

    let mut value = Q::zero();
    loop {
        // BFS for a shortest augmenting path
        let mut parent_edge: Vec<Option<usize>> = vec![None; n];
        let mut seen = vec![false; n];
        seen[canon.source] = true;
        let mut queue = VecDeque::from([canon.source]);
        while let Some(u) = queue.pop_front() {
            for &e in &head[u] {
                let v = to[e];
                if !seen[v] && !residual[e].is_zero() {
                    seen[v] = true;
                    parent_edge[v] = Some(e);
                    queue.push_back(v);
                }
            }
        }
        if !seen[canon.target] {
            // the cut of source-reachable nodes certifies optimality
            let cut_source_side: Vec<usize> = (0..n).filter(|&u| seen[u]).collect();
            let mut cut_capacity = Q::zero();
            for (i, (u, v, c)) in canon.edges.iter().enumerate() {
                if seen[*u] && !seen[*v] {
                    cut_capacity += match c {
                        Capacity::Finite(q) => q.clone(),
                        Capacity::Unbounded => big.clone(),
                    };
                    let _ = i;
                }
            }
            let flows: Vec<Q> = (0..m).map(|i| residual[2 * i + 1].clone()).collect();
            let edges: Vec<(usize, usize)> = canon.edges.iter().map(|(u, v, _)| (*u, *v)).collect();
            return Ok(MaxFlowResult {
                value,
                flows,
                edges,
                cut_source_side,
                cut_capacity,
            });
        }
        // bottleneck along the path
        let mut bottleneck: Option<Q> = None;
        let mut v = canon.target;
        while v != canon.source {
            let e = parent_edge[v].unwrap();
            bottleneck = Some(match bottleneck {
                None => residual[e].clone(),
                Some(b) if residual[e] < b => residual[e].clone(),
                Some(b) => b,
            });
            v = to[e ^ 1];
        }
        let aug = bottleneck.unwrap();
        let mut v = canon.target;
        while v != canon.source {
            let e = parent_edge[v].unwrap();
            residual[e] -= aug.clone();
            residual[e ^ 1] += aug.clone();
            v = to[e ^ 1];
        }
        value += aug;
    }
}

// ---------------------------------------------------------------------------
// Probability assignments and disentangling
// ---------------------------------------------------------------------------

pub type SubsetMask = u32;

pub fn mask_contains(mask: SubsetMask, i: usize) -> bool {
    mask & (1 << i) != 0
}

pub fn fmt_mask(mask: SubsetMask) -> String {
    let mut parts = Vec::new();
    for i in 0..32 {
        if mask_contains(mask, i) {
            parts.push((i + 1).to_string());
        }
    }
    format!("{{{}}}", parts.join(","))
}

/// Probabilities p_1..p_n plus a mass r_I for every nonempty subset I, subject
/// to: for every I, sum of p_i over I <= sum of r_J over J meeting I <= 1.
#[derive(Debug, Clone)]
pub struct ProbabilityAssignment {
    pub n: usize,
    pub p: Vec<Q>,
    pub r: BTreeMap<SubsetMask, Q>,
}

impl ProbabilityAssignment {
    pub fn new(p: Vec<Q>, r: BTreeMap<SubsetMask, Q>) -> Self {
        ProbabilityAssignment { n: p.len(), p, r }
    }

    pub fn r_of(&self, mask: SubsetMask) -> Q {
        self.r.get(&mask).cloned().unwrap_or_else(Q::zero)
    }

    /// Check the defining inequalities for every nonempty subset.
    pub fn check(&self) -> Result<(), FlowError> {
        let full: SubsetMask = (1u32 << self.n) - 1;
        for i in 0..self.n {
            if self.p[i] < Q::zero() || self.p[i] > Q::one() {
                return Err(FlowError::BadAssignment(format!("p_{}", i + 1)));
            }
        }
        for (&mask, r) in &self.r {
            if mask == 0 || mask & !full != 0 {
                return Err(FlowError::BadAssignment(fmt_mask(mask)));
            }
            if r < &Q::zero() || r > &Q::one() {
                return Err(FlowError::BadAssignment(fmt_mask(mask)));
            }
        }
        for sel in 1..=full {
            let p_sum: Q = (0..self.n)
                .filter(|&i| mask_contains(sel, i))
                .map(|i| self.p[i].clone())
                .sum();
            let r_sum: Q = self
                .r
                .iter()
                .filter(|(&j, _)| j & sel != 0)
                .map(|(_, r)| r.clone())
                .sum();
            if p_sum > r_sum || r_sum > Q::one() {
                return Err(FlowError::BadAssignment(fmt_mask(sel)));
            }
        }
        Ok(())
    }

    pub fn total_p(&self) -> Q {
        self.p.iter().sum()
    }
}

/// Node ids in the disentangling network: source, target, then the nonempty
/// subsets in mask order.
#[derive(Debug, Clone)]
pub struct DisentanglingNetwork {
    pub net: FlowNetwork,
    pub subset_node: BTreeMap<SubsetMask, usize>,
    pub sink_edge_of_subset: BTreeMap<SubsetMask, usize>,
}

/// Build the subset digraph: an edge source -> {i} with capacity p_i, an edge
/// I -> I + {i} with capacity 1 for every i outside I, and an edge I -> target
/// with capacity r_I.
pub fn build_disentangling_network(
    pa: &ProbabilityAssignment,
) -> Result<DisentanglingNetwork, FlowError> {
    pa.check()?;
    let full: SubsetMask = (1u32 << pa.n) - 1;
    let mut subset_node = BTreeMap::new();
    let mut next = 2usize; // 0 = source, 1 = target
    for mask in 1..=full {
        subset_node.insert(mask, next);
        next += 1;
    }
    let mut net = FlowNetwork::new(next, 0, 1);
    for i in 0..pa.n {
        net.add_edge(0, subset_node[&(1u32 << i)], Capacity::Finite(pa.p[i].clone()));
    }
    for mask in 1..=full {
        for i in 0..pa.n {
            if !mask_contains(mask, i) {
                net.add_edge(
                    subset_node[&mask],
                    subset_node[&(mask | (1 << i))],
                    Capacity::Finite(Q::one()),
                );
            }
        }
    }
    let mut sink_edge_of_subset = BTreeMap::new();
    for mask in 1..=full {
        sink_edge_of_subset.insert(mask, net.edges.len());
        net.add_edge(subset_node[&mask], 1, Capacity::Finite(pa.r_of(mask)));
    }
    Ok(DisentanglingNetwork {
        net,
        subset_node,
        sink_edge_of_subset,
    })
}

/// The per-index shares s_{k,I}; condition 1: the shares of each subset sum
/// to at most 1, condition 2: p_k <= sum over I of s_{k,I} * r_I.
#[derive(Debug, Clone, Default)]
pub struct DisentangleResult {
    pub s: BTreeMap<(usize, SubsetMask), Q>,
}

impl fmt::Display for DisentangleResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((k, mask), v) in &self.s {
            writeln!(f, "s {} {} {}", k + 1, fmt_mask(*mask), fmt_q(v))?;
        }
        Ok(())
    }
}

/// Compute a maximum flow on the subset network (it must carry the whole
/// source mass) and split it componentwise, subsets in size-then-mask order,
/// outgoing flow divided proportionally to the incoming component ratios.
pub fn disentangle(pa: &ProbabilityAssignment) -> Result<DisentangleResult, FlowError> {
    let dn = build_disentangling_network(pa)?;
    let mf = max_flow(&dn.net)?;
    let want = pa.total_p();
    if mf.value != want {
        return Err(FlowError::FlowDeficit {
            got: fmt_q(&mf.value),
            want: fmt_q(&want),
        });
    }

    // flows on canonicalized edges, indexed by endpoint pair
    let mut flow_of: BTreeMap<(usize, usize), Q> = BTreeMap::new();
    for (i, (u, v)) in mf.edges.iter().enumerate() {
        flow_of.insert((*u, *v), mf.flows[i].clone());
    }
    let node_of = &dn.subset_node;
    let mask_of: BTreeMap<usize, SubsetMask> =
        node_of.iter().map(|(m, n)| (*n, *m)).collect();

    // component vectors entering each subset node
    let mut incoming: BTreeMap<SubsetMask, Vec<Q>> = BTreeMap::new();
    for i in 0..pa.n {
        let mask = 1u32 << i;
        let f = flow_of
            .get(&(0, node_of[&mask]))
            .cloned()
            .unwrap_or_else(Q::zero);
        let mut vec = vec![Q::zero(); pa.n];
        vec[i] = f;
        incoming.insert(mask, vec);
    }

    let mut order: Vec<SubsetMask> = node_of.keys().copied().collect();
    order.sort_by_key(|m| (m.count_ones(), *m));

    let mut result = DisentangleResult::default();
    for mask in order {
        let comp = incoming.remove(&mask).unwrap_or_else(|| vec![Q::zero(); pa.n]);
        let total: Q = comp.iter().sum();
        if total.is_zero() {
            continue;
        }
        // distribute to every outgoing edge proportionally
        let node = node_of[&mask];
        let mut outs: Vec<(usize, Q)> = Vec::new();
        for ((u, v), f) in &flow_of {
            if *u == node && !f.is_zero() {
                outs.push((*v, f.clone()));
            }
        }
        for (v, f) in outs {
            let ratio = &f / &total;
            let share: Vec<Q> = comp.iter().map(|c| c * &ratio).collect();
            if v == 1 {
                // sink edge: record the component ratios as the s values
                for (k, amount) in share.iter().enumerate() {
                    if !amount.is_zero() {
                        result
                            .s
                            .insert((k, mask), amount / &f);
                    }
                }
            } else {
                let tgt_mask = mask_of[&v];
                let entry = incoming
                    .entry(tgt_mask)
                    .or_insert_with(|| vec![Q::zero(); pa.n]);
                for (k, amount) in share.into_iter().enumerate() {
                    entry[k] += amount;
                }
            }
        }
    }
    Ok(result)
}

/// Literal check of the two disentangling conditions.
pub fn verify_disentanglement(pa: &ProbabilityAssignment, result: &DisentangleResult) -> bool {
    let full: SubsetMask = (1u32 << pa.n) - 1;
    // shares live on (k, I) with k in I, values in [0,1]
    for ((k, mask), v) in &result.s {
        if !mask_contains(*mask, *k) || v < &Q::zero() || v > &Q::one() {
            return false;
        }
    }
    // condition 1
    for mask in 1..=full {
        let total: Q = result
            .s
            .iter()
            .filter(|((_, m), _)| *m == mask)
            .map(|(_, v)| v.clone())
            .sum();
        if total > Q::one() {
            return false;
        }
    }
    // condition 2
    for k in 0..pa.n {
        let covered: Q = result
            .s
            .iter()
            .filter(|((kk, _), _)| *kk == k)
            .map(|((_, mask), v)| v * pa.r_of(*mask))
            .sum();
        if pa.p[k] > covered {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

/// Parse an assignment file: `n = k`, then `p i a/b` and `r {i,j,...} a/b`
/// lines; `#` comments.
pub fn parse_assignment(text: &str) -> Result<ProbabilityAssignment, String> {
    let mut n: Option<usize> = None;
    let mut p: Vec<Q> = Vec::new();
    let mut r: BTreeMap<SubsetMask, Q> = BTreeMap::new();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["n", "=", k] => {
                let k: usize = k.parse().map_err(|_| format!("bad n: {line}"))?;
                if k == 0 || k > 16 {
                    return Err("n must be between 1 and 16".to_string());
                }
                n = Some(k);
                p = vec![Q::zero(); k];
            }
            ["p", i, val] => {
                let i: usize = i.parse().map_err(|_| format!("bad index: {line}"))?;
                let k = n.ok_or("n must come first")?;
                if i == 0 || i > k {
                    return Err(format!("p index out of range: {line}"));
                }
                p[i - 1] = crate::eval::parse_q(val).ok_or(format!("bad rational: {line}"))?;
            }
            ["r", set, val] => {
                let k = n.ok_or("n must come first")?;
                let set = set
                    .trim_start_matches('{')
                    .trim_end_matches('}');
                let mut mask: SubsetMask = 0;
                for part in set.split(',') {
                    let i: usize = part
                        .trim()
                        .parse()
                        .map_err(|_| format!("bad subset: {line}"))?;
                    if i == 0 || i > k {
                        return Err(format!("subset element out of range: {line}"));
                    }
                    mask |= 1 << (i - 1);
                }
                r.insert(mask, crate::eval::parse_q(val).ok_or(format!("bad rational: {line}"))?);
            }
            _ => return Err(format!("unrecognized assignment line: {line}")),
        }
    }
    let _ = n.ok_or("missing n")?;
    Ok(ProbabilityAssignment::new(p, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::q;

    fn simple_net(edges: &[(usize, usize, Q)], nodes: usize) -> FlowNetwork {
        let mut net = FlowNetwork::new(nodes, 0, nodes - 1);
        for (u, v, c) in edges {
            net.add_edge(*u, *v, Capacity::Finite(c.clone()));
        }
        net
    }

    #[test]
    fn single_edge() {
        let net = simple_net(&[(0, 1, q(1, 1))], 2);
        let mf = max_flow(&net).unwrap();
        assert_eq!(mf.value, q(1, 1));
        assert_eq!(mf.cut_capacity, mf.value);
    }

    #[test]
    fn two_disjoint_paths_add() {
        // capacities 1/3 and 1/4 give 7/12
        let net = simple_net(
            &[(0, 1, q(1, 3)), (1, 3, q(1, 3)), (0, 2, q(1, 4)), (2, 3, q(1, 4))],
            4,
        );
        let mf = max_flow(&net).unwrap();
        assert_eq!(mf.value, q(7, 12));
        assert_eq!(mf.cut_capacity, mf.value);
    }

    #[test]
    fn parallel_edges_merge() {
        let mut net = FlowNetwork::new(2, 0, 1);
        net.add_edge(0, 1, Capacity::Finite(q(1, 2)));
        net.add_edge(0, 1, Capacity::Finite(q(1, 3)));
        let mf = max_flow(&net).unwrap();
        assert_eq!(mf.value, q(5, 6));
        assert_eq!(mf.edges.len(), 1);
    }

    #[test]
    fn unbounded_edges_never_bind() {
        let mut net = FlowNetwork::new(3, 0, 2);
        net.add_edge(0, 1, Capacity::Finite(q(2, 5)));
        net.add_edge(1, 2, Capacity::Unbounded);
        let mf = max_flow(&net).unwrap();
        assert_eq!(mf.value, q(2, 5));
    }

    fn n2_assignment() -> ProbabilityAssignment {
        let mut r = BTreeMap::new();
        r.insert(0b11, q(1, 1));
        ProbabilityAssignment::new(vec![q(1, 2), q(1, 2)], r)
    }

    #[test]
    fn network_shape_counts() {
        // n=1: 3 nodes, source edge + sink edge
        let mut r = BTreeMap::new();
        r.insert(0b1, q(1, 2));
        let pa = ProbabilityAssignment::new(vec![q(1, 2)], r);
        let dn = build_disentangling_network(&pa).unwrap();
        assert_eq!(dn.net.nodes, 3);
        assert_eq!(dn.net.edges().len(), 2);

        // n=2: 2^2-1+2 = 5 nodes
        let dn = build_disentangling_network(&n2_assignment()).unwrap();
        assert_eq!(dn.net.nodes, 5);

        // n=3: 9 nodes, 3 source edges, 9 inclusion edges, 7 sink edges
        let pa = venn_fixture();
        let dn = build_disentangling_network(&pa).unwrap();
        assert_eq!(dn.net.nodes, 9);
        let src = dn.net.edges().iter().filter(|(u, _, _)| *u == 0).count();
        let sink = dn.net.edges().iter().filter(|(_, v, _)| *v == 1).count();
        assert_eq!(src, 3);
        assert_eq!(sink, 7);
        assert_eq!(dn.net.edges().len() - src - sink, 9);
    }

    #[test]
    fn disentangle_n1_forced() {
        let mut r = BTreeMap::new();
        r.insert(0b1, q(1, 2));
        let pa = ProbabilityAssignment::new(vec![q(1, 2)], r);
        let d = disentangle(&pa).unwrap();
        assert_eq!(d.s.get(&(0, 0b1)), Some(&q(1, 1)));
        assert!(verify_disentanglement(&pa, &d));
    }

    #[test]
    fn disentangle_n2_split() {
        let pa = n2_assignment();
        let d = disentangle(&pa).unwrap();
        assert_eq!(d.s.get(&(0, 0b11)), Some(&q(1, 2)));
        assert_eq!(d.s.get(&(1, 0b11)), Some(&q(1, 2)));
        assert!(verify_disentanglement(&pa, &d));
    }

    #[test]
    fn n2_grid_oracle_confirms_feasibility() {
        // brute-force search over a rational grid finds some feasible share
        // table, and ours verifies
        let pa = n2_assignment();
        let d = disentangle(&pa).unwrap();
        assert!(verify_disentanglement(&pa, &d));
        let grid: Vec<Q> = (0..=8).map(|k| q(k, 8)).collect();
        let mut found = false;
        'outer: for a in &grid {
            for b in &grid {
                if a + b <= q(1, 1) {
                    let mut cand = DisentangleResult::default();
                    cand.s.insert((0, 0b11), a.clone());
                    cand.s.insert((1, 0b11), b.clone());
                    if verify_disentanglement(&pa, &cand) {
                        found = true;
                        break 'outer;
                    }
                }
            }
        }
        assert!(found);
    }

    /// The three-set overlap fixture: p = (5/64, 3/16, 5/64) with region
    /// masses chosen to satisfy every covering inequality.
    pub fn venn_fixture() -> ProbabilityAssignment {
        let mut r = BTreeMap::new();
        r.insert(0b001, q(1, 16));
        r.insert(0b010, q(1, 8));
        r.insert(0b100, q(1, 16));
        r.insert(0b011, q(1, 32));
        r.insert(0b110, q(1, 32));
        r.insert(0b101, q(1, 64));
        r.insert(0b111, q(1, 64));
        ProbabilityAssignment::new(vec![q(5, 64), q(3, 16), q(5, 64)], r)
    }

    #[test]
    fn venn_fixture_disentangles() {
        let pa = venn_fixture();
        pa.check().unwrap();
        let d = disentangle(&pa).unwrap();
        assert!(verify_disentanglement(&pa, &d));
    }

    #[test]
    fn verify_rejects_bad_shares() {
        let pa = n2_assignment();
        // all-zero shares leave p uncovered
        let zero = DisentangleResult::default();
        assert!(!verify_disentanglement(&pa, &zero));
        // shares of 1 for every member of a two-element subset break condition 1
        let mut overfull = DisentangleResult::default();
        overfull.s.insert((0, 0b11), q(1, 1));
        overfull.s.insert((1, 0b11), q(1, 1));
        assert!(!verify_disentanglement(&pa, &overfull));
    }

    #[test]
    fn invalid_assignment_rejected_with_subset() {
        let mut r = BTreeMap::new();
        r.insert(0b1, q(1, 4));
        let pa = ProbabilityAssignment::new(vec![q(1, 2)], r);
        match pa.check() {
            Err(FlowError::BadAssignment(s)) => assert_eq!(s, "{1}"),
            other => panic!("expected BadAssignment, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_cuts_cost_at_least_one() {
        // enumerate all cuts of the n<=3 networks; any cut separating I from
        // I + {i} contains a capacity-1 edge
        for pa in [n2_assignment(), venn_fixture()] {
            let dn = build_disentangling_network(&pa).unwrap();
            let n_nodes = dn.net.nodes;
            let interior: Vec<usize> = (2..n_nodes).collect();
            for sel in 0u32..(1 << interior.len()) {
                let mut source_side = vec![false; n_nodes];
                source_side[0] = true;
                for (bit, node) in interior.iter().enumerate() {
                    if sel & (1 << bit) != 0 {
                        source_side[*node] = true;
                    }
                }
                // degenerate iff some inclusion edge crosses the cut
                let mut degenerate = false;
                let mut capacity = Q::zero();
                for (u, v, c) in dn.net.edges() {
                    if source_side[*u] && !source_side[*v] {
                        let cap = match c {
                            Capacity::Finite(q) => q.clone(),
                            Capacity::Unbounded => unreachable!(),
                        };
                        if *u >= 2 && *v >= 2 {
                            degenerate = true;
                        }
                        capacity += cap;
                    }
                }
                if degenerate {
                    assert!(capacity >= q(1, 1), "degenerate cut below 1");
                }
            }
        }
    }

    #[test]
    fn assignment_file_round_trip() {
        let text = "n = 2\np 1 1/2\np 2 1/2\nr {1,2} 1/1\n";
        let pa = parse_assignment(text).unwrap();
        pa.check().unwrap();
        assert_eq!(pa.p[0], q(1, 2));
        assert_eq!(pa.r_of(0b11), q(1, 1));
    }
}
