use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use super::{connected_pairs, Skeleton};
use crate::alignment::{Alignment, CorrespondenceKind, Side};
use crate::association::{SemanticAssociation, Var};

/// What a target variable is mapped to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Binding {
    /// Index into the source SA's variables.
    Source(usize),
    Epsilon,
    /// A planned blank node. Counts as ε for validity.
    Blank(String),
}

impl Binding {
    pub fn source(&self) -> Option<usize> {
        match self {
            Binding::Source(i) => Some(*i),
            _ => None,
        }
    }
}

/// A total map from target variables (in `SemanticAssociation::variables`
/// order) to bindings.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Renaming {
    pub bindings: Vec<Binding>,
}

impl Renaming {
    pub fn epsilon_count(&self) -> usize {
        self.bindings.iter().filter(|b| **b == Binding::Epsilon).count()
    }

    /// One `targetVar <- sourceVar|ε|_:label` line per target variable.
    pub fn dump(&self, sk: &Skeleton) -> String {
        let svars = sk.source.variables();
        let mut out = String::new();
        for (t, b) in sk.target.variables().iter().zip(&self.bindings) {
            let rhs = match b {
                Binding::Source(i) => svars[*i].name.clone(),
                Binding::Epsilon => "ε".to_string(),
                Binding::Blank(l) => format!("_:{l}"),
            };
            out.push_str(&format!("{} <- {rhs}\n", t.name));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub enum ValidityMode {
    /// Kinds must match; nothing else is checked.
    All,
    Baseline,
    R2r,
    C2a,
    /// Baseline, r2r and c2a plus the root, attribute-ownership and
    /// subclass-group constraints.
    #[default]
    Kensho,
}

impl ValidityMode {
    pub const ALL: [ValidityMode; 5] = [ValidityMode::All, ValidityMode::Baseline, ValidityMode::R2r, ValidityMode::C2a, ValidityMode::Kensho];

    pub fn name(self) -> &'static str {
        match self {
            ValidityMode::All => "all",
            ValidityMode::Baseline => "baseline",
            ValidityMode::R2r => "r2r",
            ValidityMode::C2a => "c2a",
            ValidityMode::Kensho => "kensho",
        }
    }

    fn licensed(self) -> bool {
        self != ValidityMode::All
    }

    fn r2r(self) -> bool {
        matches!(self, ValidityMode::R2r | ValidityMode::Kensho)
    }

    fn c2a(self) -> bool {
        matches!(self, ValidityMode::C2a | ValidityMode::Kensho)
    }

    fn extra(self) -> bool {
        self == ValidityMode::Kensho
    }
}

impl fmt::Display for ValidityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ValidityMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(ValidityMode::All),
            "baseline" => Ok(ValidityMode::Baseline),
            "r2r" => Ok(ValidityMode::R2r),
            "c2a" => Ok(ValidityMode::C2a),
            "kensho" | "full" => Ok(ValidityMode::Kensho),
            other => Err(format!("unknown validity mode `{other}`")),
        }
    }
}

/// Renaming counts per validity mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct ModeCounts {
    pub baseline: u64,
    pub r2r: u64,
    pub c2a: u64,
    pub kensho: u64,
}

impl ModeCounts {
    pub fn get(&self, mode: ValidityMode) -> Option<u64> {
        match mode {
            ValidityMode::All => None,
            ValidityMode::Baseline => Some(self.baseline),
            ValidityMode::R2r => Some(self.r2r),
            ValidityMode::C2a => Some(self.c2a),
            ValidityMode::Kensho => Some(self.kensho),
        }
    }
}

impl std::ops::AddAssign for ModeCounts {
    fn add_assign(&mut self, o: Self) {
        self.baseline += o.baseline;
        self.r2r += o.r2r;
        self.c2a += o.c2a;
        self.kensho += o.kensho;
    }
}

/// One way to interpret a covered correspondence: the (target var, source
/// var) bindings that must all hold.
type Witness = Vec<(usize, usize)>;

struct Covered {
    id: String,
    options: Vec<Witness>,
    /// Last target variable any option depends on.
    deadline: usize,
    is_r2r: bool,
    /// For r2r: options whose endpoints are connected on both sides.
    connected: Vec<Witness>,
}

/// Everything the validity predicates need about one skeleton, precomputed.
pub struct SkeletonContext<'a> {
    pub skeleton: &'a Skeleton,
    pub svars: Vec<Var>,
    pub tvars: Vec<Var>,
    /// Per source node, its node variable index.
    s_node_var: Vec<usize>,
    /// Per target variable: same-kind source variables.
    kind_candidates: Vec<Vec<usize>>,
    /// Per target variable: baseline-licensed source variables.
    licensed: Vec<BTreeSet<usize>>,
    covered: Vec<Covered>,
    /// Per target attribute variable: for source nodes its owner may map to,
    /// the only admissible source attribute (None = must be ε).
    c2a: Vec<BTreeMap<usize, Option<usize>>>,
    root_allowed: BTreeSet<usize>,
    /// Source attribute variables whose owner must be in the image when they
    /// are used by an attribute of an ε-mapped target node.
    owned: BTreeSet<usize>,
    t_group: Vec<usize>,
    s_group: Vec<usize>,
}

impl<'a> SkeletonContext<'a> {
    pub fn new(sk: &'a Skeleton, a: &Alignment) -> Self {
        let (s, t) = (&*sk.source, &*sk.target);
        let svars = s.variables();
        let tvars = t.variables();
        let mut s_node_var = vec![0; s.nodes.len()];
        let mut s_attr_var: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (i, v) in svars.iter().enumerate() {
            match v.attr {
                None => s_node_var[v.node] = i,
                Some(k) => {
                    s_attr_var.insert((v.node, k), i);
                }
            }
        }
        let mut t_node_var = vec![0; t.nodes.len()];
        for (i, v) in tvars.iter().enumerate() {
            if v.attr.is_none() {
                t_node_var[v.node] = i;
            }
        }

        let kind_candidates: Vec<Vec<usize>> = tvars
            .iter()
            .map(|tv| svars.iter().enumerate().filter(|(_, sv)| sv.attr.is_some() == tv.attr.is_some()).map(|(i, _)| i).collect())
            .collect();

        let licensed: Vec<BTreeSet<usize>> = tvars
            .iter()
            .zip(&kind_candidates)
            .map(|(tv, cands)| cands.iter().copied().filter(|&si| license(s, t, &svars[si], tv, a)).collect())
            .collect();

        let mut covered = Vec::new();
        for &ci in &sk.coverage {
            let c = &a.correspondences()[ci];
            let mut options = Vec::new();
            let mut connected = Vec::new();
            match &c.kind {
                CorrespondenceKind::C2c { source, target } => {
                    for m in t.nodes.iter().filter(|m| &m.concept == target) {
                        for n in s.nodes.iter().filter(|n| &n.concept == source) {
                            options.push(vec![(t_node_var[m.id], s_node_var[n.id])]);
                        }
                    }
                }
                CorrespondenceKind::A2a { .. } => {
                    for (ti, tv) in tvars.iter().enumerate().filter(|(_, v)| v.attr.is_some()) {
                        for (si, sv) in svars.iter().enumerate().filter(|(_, v)| v.attr.is_some()) {
                            if a2a_matches(s, t, sv, tv, &c.kind) {
                                options.push(vec![(ti, si)]);
                            }
                        }
                    }
                }
                CorrespondenceKind::R2r { source, target } => {
                    let s_conn: BTreeSet<(usize, usize)> =
                        connected_pairs(s, &source.endpoints.0, &source.endpoints.1, source.path.steps()).collect();
                    let t_conn: BTreeSet<(usize, usize)> =
                        connected_pairs(t, &target.endpoints.0, &target.endpoints.1, target.path.steps()).collect();
                    for m1 in t.nodes.iter().filter(|m| m.concept == target.endpoints.0) {
                        for m2 in t.nodes.iter().filter(|m| m.concept == target.endpoints.1) {
                            for n1 in s.nodes.iter().filter(|n| n.concept == source.endpoints.0) {
                                for n2 in s.nodes.iter().filter(|n| n.concept == source.endpoints.1) {
                                    let opt = vec![(t_node_var[m1.id], s_node_var[n1.id]), (t_node_var[m2.id], s_node_var[n2.id])];
                                    if s_conn.contains(&(n1.id, n2.id)) && t_conn.contains(&(m1.id, m2.id)) {
                                        connected.push(opt.clone());
                                    }
                                    options.push(opt);
                                }
                            }
                        }
                    }
                }
            }
            let deadline = options.iter().flatten().map(|&(ti, _)| ti).max().unwrap_or(0);
            let is_r2r = matches!(c.kind, CorrespondenceKind::R2r { .. });
            covered.push(Covered { id: c.id.clone(), options, deadline, is_r2r, connected });
        }

        let mut c2a = vec![BTreeMap::new(); tvars.len()];
        for (ti, tv) in tvars.iter().enumerate() {
            let Some(bk) = tv.attr else { continue };
            let m = t.node(tv.node);
            let b = &m.attributes[bk].0;
            for n in &s.nodes {
                if !a.concepts_correspond(&n.concept, &m.concept) {
                    continue;
                }
                let mut required: Option<Option<usize>> = None;
                for (_, sdp, tdp) in a.a2a() {
                    if sdp.concept != n.concept || tdp.concept != m.concept || &tdp.path != b {
                        continue;
                    }
                    let own = n.attributes.iter().position(|(p, _)| *p == sdp.path).map(|k| s_attr_var[&(n.id, k)]);
                    required = Some(match required {
                        None => own,
                        Some(prev) if prev == own => own,
                        Some(_) => None,
                    });
                }
                if let Some(r) = required {
                    c2a[ti].insert(n.id, r);
                }
            }
        }

        let root_concept = t.root_concept();
        let min_depth = s.nodes.iter().filter(|n| a.concepts_correspond(&n.concept, root_concept)).map(|n| n.depth).min();
        let root_allowed = s
            .nodes
            .iter()
            .filter(|n| a.concepts_correspond(&n.concept, root_concept) && Some(n.depth) == min_depth)
            .map(|n| s_node_var[n.id])
            .collect();

        let owned = svars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.attr.is_some() && a.has_c2c(Side::Source, &s.node(v.node).concept))
            .map(|(i, _)| i)
            .collect();

        SkeletonContext {
            skeleton: sk,
            t_group: (0..t.nodes.len()).map(|i| t.group_of(i)).collect(),
            s_group: (0..s.nodes.len()).map(|i| s.group_of(i)).collect(),
            svars,
            tvars,
            s_node_var,
            kind_candidates,
            licensed,
            covered,
            c2a,
            root_allowed,
            owned,
        }
    }

    /// Source candidates for target variable `ti`, in index order.
    fn candidates(&self, ti: usize, mode: ValidityMode) -> Vec<usize> {
        if mode.licensed() {
            self.licensed[ti].iter().copied().collect()
        } else {
            self.kind_candidates[ti].clone()
        }
    }

    /// Checks that only depend on variables `0..=ti` and can reject a
    /// partial assignment as soon as `ti` is bound.
    fn local_ok(&self, b: &[Option<usize>], ti: usize, mode: ValidityMode) -> bool {
        let tv = &self.tvars[ti];
        let cur = b[ti];
        if mode.c2a() && tv.attr.is_some() && !self.c2a_ok_at(b, ti) {
            return false;
        }
        if mode.extra() {
            if ti == 0 && cur.is_some_and(|s| !self.root_allowed.contains(&s)) {
                return false;
            }
            if tv.attr.is_none() {
                if let Some(sv) = cur {
                    let sg = self.s_group[self.svars[sv].node];
                    let tg = self.t_group[tv.node];
                    for (tj, bj) in b.iter().enumerate().take(ti) {
                        let tvj = &self.tvars[tj];
                        if let (None, Some(svj)) = (tvj.attr, bj) {
                            if self.t_group[tvj.node] == tg && self.s_group[self.svars[*svj].node] != sg {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }

    fn node_binding(&self, b: &[Option<usize>], tnode: usize) -> Option<usize> {
        let tv = self.tvars.iter().position(|v| v.node == tnode && v.attr.is_none()).expect("node variable");
        b[tv].map(|s| self.svars[s].node)
    }

    fn c2a_ok_at(&self, b: &[Option<usize>], ti: usize) -> bool {
        let Some(n) = self.node_binding(b, self.tvars[ti].node) else { return true };
        match (self.c2a[ti].get(&n), b[ti]) {
            (None, _) | (_, None) => true,
            (Some(req), Some(s)) => *req == Some(s),
        }
    }

    fn interprets(&self, b: &[Option<usize>], opt: &Witness) -> bool {
        opt.iter().all(|&(ti, si)| b[ti] == Some(si))
    }

    fn covered_ok(&self, b: &[Option<usize>], c: &Covered) -> bool {
        c.options.iter().any(|o| self.interprets(b, o))
    }

    /// Witnesses of covered r2r correspondences that `re` binds and whose
    /// endpoints are connected on both sides, as (target var, source var)
    /// pairs.
    pub fn bound_r2r_witnesses(&self, re: &Renaming) -> Vec<[(usize, usize); 2]> {
        let b: Vec<Option<usize>> = re.bindings.iter().map(Binding::source).collect();
        self.covered
            .iter()
            .filter(|c| c.is_r2r)
            .flat_map(|c| c.connected.iter())
            .filter(|w| self.interprets(&b, w))
            .map(|w| [w[0], w[1]])
            .collect()
    }

    fn r2r_ok(&self, b: &[Option<usize>]) -> Vec<String> {
        self.covered
            .iter()
            .filter(|c| c.is_r2r)
            .filter(|c| !c.connected.iter().any(|o| self.interprets(b, o)))
            .map(|c| format!("r2r: no bound endpoint pair of {} is connected on both sides", c.id))
            .collect()
    }

    fn ownership_ok(&self, b: &[Option<usize>]) -> Vec<String> {
        let image: BTreeSet<usize> = b.iter().flatten().copied().collect();
        let mut out = Vec::new();
        for (ti, tv) in self.tvars.iter().enumerate() {
            if tv.attr.is_none() || self.node_binding(b, tv.node).is_some() {
                continue;
            }
            if let Some(sv) = b[ti] {
                let owner = self.s_node_var[self.svars[sv].node];
                if self.owned.contains(&sv) && !image.contains(&owner) {
                    out.push(format!(
                        "ownership: {} takes {} but {} is not transferred",
                        tv.name, self.svars[sv].name, self.svars[owner].name
                    ));
                }
            }
        }
        out
    }

    /// Reasons `b` fails `mode`; empty when valid. Blank bindings count as
    /// ε.
    fn violations(&self, b: &[Option<usize>], mode: ValidityMode) -> Vec<String> {
        let mut out = Vec::new();
        for (ti, tv) in self.tvars.iter().enumerate() {
            let Some(si) = b[ti] else { continue };
            if si >= self.svars.len() || !self.kind_candidates[ti].contains(&si) {
                out.push(format!("kind: {} cannot take {}", tv.name, si));
                continue;
            }
            if mode.licensed() && !self.licensed[ti].contains(&si) {
                out.push(format!("baseline: {} <- {} has no correspondence", tv.name, self.svars[si].name));
            }
        }
        if !out.is_empty() {
            return out;
        }
        for c in &self.covered {
            if !self.covered_ok(b, c) {
                out.push(format!("coverage: {} is not interpreted", c.id));
            }
        }
        if mode.r2r() {
            out.extend(self.r2r_ok(b));
        }
        if mode.c2a() {
            for (ti, tv) in self.tvars.iter().enumerate() {
                if tv.attr.is_some() && !self.c2a_ok_at(b, ti) {
                    out.push(format!("c2a: {} is not its owner's attribute", tv.name));
                }
            }
        }
        if mode.extra() {
            if b[0].is_some_and(|s| !self.root_allowed.contains(&s)) {
                out.push(format!("root: {} is not a nearest corresponding source node", self.tvars[0].name));
            }
            out.extend(self.ownership_ok(b));
            for ti in 0..self.tvars.len() {
                if self.tvars[ti].attr.is_none() && b[ti].is_some() && !self.group_ok(b, ti) {
                    out.push(format!("group: {} leaves its subclass group", self.tvars[ti].name));
                }
            }
        }
        out
    }

    fn group_ok(&self, b: &[Option<usize>], ti: usize) -> bool {
        let tg = self.t_group[self.tvars[ti].node];
        let sg = self.s_group[self.svars[b[ti].unwrap()].node];
        self.tvars.iter().zip(b).all(|(tv, bj)| match (tv.attr, bj) {
            (None, Some(sj)) if self.t_group[tv.node] == tg => self.s_group[self.svars[*sj].node] == sg,
            _ => true,
        })
    }

    fn to_slots(&self, re: &Renaming) -> Result<Vec<Option<usize>>, String> {
        if re.bindings.len() != self.tvars.len() {
            return Err(format!("totality: {} bindings for {} target variables", re.bindings.len(), self.tvars.len()));
        }
        Ok(re.bindings.iter().map(Binding::source).collect())
    }

    pub fn check(&self, re: &Renaming, mode: ValidityMode) -> Vec<String> {
        match self.to_slots(re) {
            Ok(b) => self.violations(&b, mode),
            Err(e) => vec![e],
        }
    }

    /// Visit every renaming valid under `mode`, in enumeration order:
    /// target variables in order, candidates by source index, then ε.
    pub fn for_each<B>(
        &self,
        mode: ValidityMode,
        injective: bool,
        mut visit: impl FnMut(&[Option<usize>]) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        let n = self.tvars.len();
        let cands: Vec<Vec<usize>> = (0..n).map(|ti| self.candidates(ti, mode)).collect();
        let mut due: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (ci, c) in self.covered.iter().enumerate() {
            if c.options.is_empty() {
                return ControlFlow::Continue(());
            }
            due[c.deadline].push(ci);
        }
        let mut b = vec![None; n];
        let mut used = vec![false; self.svars.len()];
        self.search(0, mode, injective, &cands, &due, &mut b, &mut used, &mut visit)
    }

    #[allow(clippy::too_many_arguments)]
    fn search<B>(
        &self,
        ti: usize,
        mode: ValidityMode,
        injective: bool,
        cands: &[Vec<usize>],
        due: &[Vec<usize>],
        b: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        visit: &mut impl FnMut(&[Option<usize>]) -> ControlFlow<B>,
    ) -> ControlFlow<B> {
        if ti == b.len() {
            if mode.r2r() || mode.extra() {
                let leaf_ok = (!mode.r2r() || self.r2r_ok(b).is_empty()) && (!mode.extra() || self.ownership_ok(b).is_empty());
                if !leaf_ok {
                    return ControlFlow::Continue(());
                }
            }
            debug_assert!(self.violations(b, mode).is_empty(), "{:?}", self.violations(b, mode));
            return visit(b);
        }
        let choices = cands[ti].iter().map(|&s| Some(s)).chain(std::iter::once(None));
        for choice in choices {
            if let Some(s) = choice {
                if injective && used[s] {
                    continue;
                }
            }
            b[ti] = choice;
            if self.local_ok(b, ti, mode) && due[ti].iter().all(|&ci| self.covered_ok(b, &self.covered[ci])) {
                if let Some(s) = choice {
                    used[s] = true;
                }
                let r = self.search(ti + 1, mode, injective, cands, due, b, used, visit);
                if let Some(s) = choice {
                    used[s] = false;
                }
                r?;
            }
        }
        b[ti] = None;
        ControlFlow::Continue(())
    }

    /// Counts per mode from one baseline enumeration.
    pub fn count_all(&self, injective: bool) -> ModeCounts {
        let mut counts = ModeCounts::default();
        let _ = self.for_each::<()>(ValidityMode::Baseline, injective, |b| {
            counts.baseline += 1;
            let r2r = self.r2r_ok(b).is_empty();
            let c2a = (0..b.len()).all(|ti| self.tvars[ti].attr.is_none() || self.c2a_ok_at(b, ti));
            if r2r {
                counts.r2r += 1;
            }
            if c2a {
                counts.c2a += 1;
            }
            if r2r && c2a && self.extra_ok(b) {
                counts.kensho += 1;
            }
            ControlFlow::Continue(())
        });
        counts
    }

    fn extra_ok(&self, b: &[Option<usize>]) -> bool {
        !b[0].is_some_and(|s| !self.root_allowed.contains(&s))
            && self.ownership_ok(b).is_empty()
            && (0..b.len()).all(|ti| self.tvars[ti].attr.is_some() || b[ti].is_none() || self.group_ok(b, ti))
    }
}

fn license(s: &SemanticAssociation, t: &SemanticAssociation, sv: &Var, tv: &Var, a: &Alignment) -> bool {
    let (n, m) = (s.node(sv.node), t.node(tv.node));
    match (sv.attr, tv.attr) {
        (None, None) => a.concepts_correspond(&n.concept, &m.concept),
        (Some(_), Some(_)) => a.a2a().any(|(_, sdp, tdp)| {
            let kind = CorrespondenceKind::A2a { source: sdp.clone(), target: tdp.clone() };
            a2a_matches(s, t, sv, tv, &kind)
        }),
        _ => false,
    }
}

fn a2a_matches(s: &SemanticAssociation, t: &SemanticAssociation, sv: &Var, tv: &Var, kind: &CorrespondenceKind) -> bool {
    let CorrespondenceKind::A2a { source, target } = kind else { return false };
    let (Some(ak), Some(bk)) = (sv.attr, tv.attr) else { return false };
    let (n, m) = (s.node(sv.node), t.node(tv.node));
    n.concept == source.concept && n.attributes[ak].0 == source.path && m.concept == target.concept && m.attributes[bk].0 == target.path
}

fn to_renaming(b: &[Option<usize>]) -> Renaming {
    Renaming { bindings: b.iter().map(|s| s.map_or(Binding::Epsilon, Binding::Source)).collect() }
}

/// Visit renamings of `sk` valid under `mode`.
pub fn for_each_renaming<B>(
    sk: &Skeleton,
    a: &Alignment,
    mode: ValidityMode,
    injective: bool,
    mut visit: impl FnMut(Renaming) -> ControlFlow<B>,
) -> ControlFlow<B> {
    SkeletonContext::new(sk, a).for_each(mode, injective, |b| visit(to_renaming(b)))
}

pub fn enumerate_renamings(sk: &Skeleton, a: &Alignment, mode: ValidityMode, injective: bool) -> Vec<Renaming> {
    let mut out = Vec::new();
    let _ = for_each_renaming::<()>(sk, a, mode, injective, |r| {
        out.push(r);
        ControlFlow::Continue(())
    });
    out
}

/// Reasons `re` is not valid for `sk` under `mode`; empty when valid.
pub fn check_validity(re: &Renaming, sk: &Skeleton, a: &Alignment, mode: ValidityMode) -> Vec<String> {
    SkeletonContext::new(sk, a).check(re, mode)
}

pub fn count_all(sk: &Skeleton, a: &Alignment, injective: bool) -> ModeCounts {
    SkeletonContext::new(sk, a).count_all(injective)
}
