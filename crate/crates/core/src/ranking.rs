//! Path, consistency and coverage costs of renamings, and ranking by them.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::alignment::{Alignment, Side};
use crate::association::{AlignedView, SemanticAssociation};
use crate::interpretation::{Binding, Renaming, SkeletonContext};
use crate::rdf::{Iri, Schema};

/// Pairs of target concepts joined by an association path.
#[derive(Clone, Debug, Default)]
pub struct TargetPaths {
    connected: BTreeSet<(Iri, Iri)>,
}

impl TargetPaths {
    pub fn new(target: &Schema, a: &Alignment, max_depth: usize) -> Self {
        let view = AlignedView::new(target, a, Side::Target);
        let mut connected = BTreeSet::new();
        for root in &view.aligned {
            for p in view.association_paths(root, max_depth) {
                connected.insert((root.clone(), p.tail().clone()));
            }
        }
        TargetPaths { connected }
    }

    /// True if an association path joins `x` and `y` in either direction.
    pub fn connects(&self, x: &Iri, y: &Iri) -> bool {
        self.connected.contains(&(x.clone(), y.clone())) || self.connected.contains(&(y.clone(), x.clone()))
    }
}

/// Cost of one association path from `from` to `to` in the source: 0 when
/// some pair of c2c counterparts is joined by a target association path.
pub fn segment_cost(from: &Iri, to: &Iri, a: &Alignment, tp: &TargetPaths) -> usize {
    let counterparts = |c: &Iri| a.c2c().filter(|(_, s, _)| *s == c).map(|(_, _, t)| t.clone()).collect::<Vec<_>>();
    let (xs, ys) = (counterparts(from), counterparts(to));
    let joined = xs.iter().any(|x| ys.iter().any(|y| tp.connects(x, y)));
    usize::from(!joined)
}

/// Sum of segment costs along the chain of association paths that attach
/// `node` to the root of `sa`.
pub fn path_score(sa: &SemanticAssociation, node: usize, a: &Alignment, tp: &TargetPaths) -> usize {
    let mut cur = node;
    let mut total = 0;
    while cur != 0 {
        let anchor = sa.node(cur).anchor;
        total += segment_cost(&sa.node(anchor).concept, &sa.node(cur).concept, a, tp);
        cur = anchor;
    }
    total
}

/// Path scores summed over the aligned source nodes whose variable is in
/// the image of `re`.
pub fn path_cost(re: &Renaming, ctx: &SkeletonContext, a: &Alignment, tp: &TargetPaths) -> usize {
    let s = &ctx.skeleton.source;
    image_nodes(re, ctx).into_iter().filter(|&n| s.node(n).aligned).map(|n| path_score(s, n, a, tp)).sum()
}

fn image_nodes(re: &Renaming, ctx: &SkeletonContext) -> BTreeSet<usize> {
    re.bindings.iter().filter_map(Binding::source).filter(|&i| ctx.svars[i].attr.is_none()).map(|i| ctx.svars[i].node).collect()
}

/// Ordered pairs of source-bound target nodes whose descendant relation in
/// the target disagrees with that of their images in the source. Pairs
/// witnessing an r2r correspondence that runs against the tree in one of
/// the two associations are compared with the target edge reversed.
pub fn consistency_cost(re: &Renaming, ctx: &SkeletonContext) -> usize {
    let (s, t) = (&*ctx.skeleton.source, &*ctx.skeleton.target);
    let bound: Vec<(usize, usize)> = ctx
        .tvars
        .iter()
        .zip(&re.bindings)
        .filter(|(tv, _)| tv.attr.is_none())
        .filter_map(|(tv, b)| b.source().map(|si| (tv.node, ctx.svars[si].node)))
        .collect();
    let mut reversed = BTreeSet::new();
    for [(t1, s1), (t2, s2)] in ctx.bound_r2r_witnesses(re) {
        let (m1, m2) = (ctx.tvars[t1].node, ctx.tvars[t2].node);
        let (n1, n2) = (ctx.svars[s1].node, ctx.svars[s2].node);
        let opposite = (s.is_descendant(n2, n1) && t.is_descendant(m1, m2)) || (s.is_descendant(n1, n2) && t.is_descendant(m2, m1));
        if opposite {
            reversed.insert((m1, m2));
            reversed.insert((m2, m1));
        }
    }
    let mut cost = 0;
    for (i, &(m1, n1)) in bound.iter().enumerate() {
        for (j, &(m2, n2)) in bound.iter().enumerate() {
            if i == j {
                continue;
            }
            let t_reach = if reversed.contains(&(m1, m2)) { t.is_descendant(m1, m2) } else { t.is_descendant(m2, m1) };
            if t_reach != s.is_descendant(n2, n1) {
                cost += 1;
            }
        }
    }
    cost
}

/// Number of target variables mapped to ε. Planned blank nodes do not
/// count.
pub fn coverage_cost(re: &Renaming) -> usize {
    re.epsilon_count()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Costs {
    pub path: usize,
    pub consistency: usize,
    pub coverage: usize,
}

pub fn score_renaming(re: &Renaming, ctx: &SkeletonContext, a: &Alignment, tp: &TargetPaths) -> Costs {
    Costs { path: path_cost(re, ctx, a, tp), consistency: consistency_cost(re, ctx), coverage: coverage_cost(re) }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Strategy {
    Coverage,
    Path,
    Consistency,
    #[default]
    PathConsistency,
}

impl Strategy {
    pub fn key(self, c: &Costs) -> usize {
        match self {
            Strategy::Coverage => c.coverage,
            Strategy::Path => c.path,
            Strategy::Consistency => c.consistency,
            Strategy::PathConsistency => c.path + c.consistency,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Coverage => "coverage",
            Strategy::Path => "path",
            Strategy::Consistency => "consistency",
            Strategy::PathConsistency => "path+consistency",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coverage" => Ok(Strategy::Coverage),
            "path" => Ok(Strategy::Path),
            "consistency" => Ok(Strategy::Consistency),
            "path+consistency" => Ok(Strategy::PathConsistency),
            other => Err(format!("unknown ranking strategy `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankedRenaming {
    /// Position in the input list.
    pub index: usize,
    pub costs: Costs,
    /// 1 + number of renamings with a strictly lower cost.
    pub rank: usize,
    /// Number of other renamings with the same cost.
    pub ties: usize,
}

/// Competition ranking by ascending cost; equal costs keep input order.
pub fn rank_renamings(costs: &[Costs], strategy: Strategy) -> Vec<RankedRenaming> {
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by_key(|&i| strategy.key(&costs[i]));
    let keys: Vec<usize> = order.iter().map(|&i| strategy.key(&costs[i])).collect();
    order
        .iter()
        .enumerate()
        .map(|(pos, &i)| {
            let k = keys[pos];
            let first = keys.partition_point(|&x| x < k);
            let last = keys.partition_point(|&x| x <= k);
            RankedRenaming { index: i, costs: costs[i], rank: first + 1, ties: last - first - 1 }
        })
        .collect()
}

/// Tab-separated report with a header line.
pub fn ranked_tsv(ranked: &[RankedRenaming], id: impl Fn(usize) -> String) -> String {
    let mut out = String::from("rank\tpathCost\tconsistencyCost\tcoverageCost\trenamingId\n");
    for r in ranked {
        out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", r.rank, r.costs.path, r.costs.consistency, r.costs.coverage, id(r.index)));
    }
    out
}
