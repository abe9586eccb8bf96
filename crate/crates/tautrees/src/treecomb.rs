//! Stable rooted trees with frozen legs, degree labels, admissible level
//! functions, and flow assignments.
//!
//! A stable rooted tree of type `(g, n, m)` has total genus `g`, regular legs
//! `1..=n` distributed over its vertices, and `m` frozen legs all attached to
//! the root. Every non-root vertex points to the root through a single
//! negative half-edge; regular legs and downward edge halves are positive.
//! Enumeration is by isomorphism class with all legs and the root fixed, each
//! class appearing exactly once in a deterministic canonical order.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::sync::Mutex;
use std::sync::OnceLock;

use num::{One, Zero};

use crate::exactmath::{rat_int, MultiPoly, Rat};
use crate::Error;

/// A vertex of a stable rooted tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SrtVertex {
    pub genus: usize,
    /// Sorted regular leg labels (1-based) attached here.
    pub legs: Vec<usize>,
    pub parent: Option<usize>,
    /// Children in canonical order (smallest descendant leg first, legless
    /// branches last).
    pub children: Vec<usize>,
}

/// A stable rooted tree in `SRT_{g,n,m}`. Vertex 0 is the root; the `m`
/// frozen legs `n+1..=n+m` are implicit at the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableRootedTree {
    pub genus: usize,
    pub n: usize,
    pub m: usize,
    pub vertices: Vec<SrtVertex>,
}

/// A positive half-edge at a vertex: a regular leg or a downward edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PosHalf {
    Leg(usize),
    Child(usize),
}

impl StableRootedTree {
    pub fn num_edges(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Number of half-edges at `v` (legs, edges, and frozen legs).
    pub fn h_count(&self, v: usize) -> usize {
        self.h_pos_count(v) + self.h_neg_count(v)
    }

    pub fn h_pos_count(&self, v: usize) -> usize {
        self.vertices[v].legs.len() + self.vertices[v].children.len()
    }

    pub fn h_neg_count(&self, v: usize) -> usize {
        if v == 0 {
            self.m
        } else {
            1
        }
    }

    /// `chi(v) = 2 g(v) - 2 + |H(v)|`; positive on every vertex by stability.
    pub fn chi(&self, v: usize) -> i64 {
        2 * self.vertices[v].genus as i64 - 2 + self.h_count(v) as i64
    }

    /// Vertices of the subtree below `v`, including `v`, in DFS order.
    pub fn descendant_vertices(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            for &c in &self.vertices[u].children {
                out.push(c);
                stack.push(c);
            }
        }
        out.sort_unstable();
        out
    }

    /// `Dchi(v)`: sum of `chi` over the descendants of `v` (including `v`).
    pub fn dchi(&self, v: usize) -> i64 {
        self.descendant_vertices(v).iter().map(|&u| self.chi(u)).sum()
    }

    /// Regular legs on the subtree below `v`, including `v`'s own legs.
    pub fn descendant_legs(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for u in self.descendant_vertices(v) {
            out.extend_from_slice(&self.vertices[u].legs);
        }
        out.sort_unstable();
        out
    }

    /// Positive half-edges at `v` in marked-point order: sorted by smallest
    /// descendant leg, legless branches last.
    pub fn pos_half_edges(&self, v: usize) -> Vec<PosHalf> {
        let mut keyed: Vec<(usize, usize, PosHalf)> = Vec::new();
        for &l in &self.vertices[v].legs {
            keyed.push((l, 0, PosHalf::Leg(l)));
        }
        for &c in &self.vertices[v].children {
            let dl = self.descendant_legs(c);
            let key = dl.first().copied().unwrap_or(usize::MAX);
            keyed.push((key, c, PosHalf::Child(c)));
        }
        keyed.sort_by_key(|&(k, c, _)| (k, c));
        keyed.into_iter().map(|(_, _, h)| h).collect()
    }

    /// Maximal degree label at `v`: the dimension of its moduli space.
    pub fn vertex_dim(&self, v: usize) -> usize {
        (3 * self.vertices[v].genus as i64 - 3 + self.h_count(v) as i64).max(0) as usize
    }

    /// Deterministic text form used in reports and golden files.
    pub fn encoding(&self) -> String {
        fn rec(t: &StableRootedTree, v: usize, out: &mut String) {
            out.push_str(&format!("(g{}", t.vertices[v].genus));
            if v == 0 && t.m > 0 {
                out.push_str(&format!(" f{}", t.m));
            }
            if !t.vertices[v].legs.is_empty() {
                out.push_str(" l");
                for (i, l) in t.vertices[v].legs.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&l.to_string());
                }
            }
            for &c in &t.vertices[v].children {
                out.push(' ');
                rec(t, c, out);
            }
            out.push(')');
        }
        let mut s = String::new();
        rec(self, 0, &mut s);
        s
    }
}

/// Recursive scratch form used during enumeration; `genus` is the genus of
/// the subtree root vertex only.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct SubTree {
    pub(crate) genus: usize,
    pub(crate) legs: Vec<usize>,
    pub(crate) children: Vec<SubTree>,
}

impl SubTree {
    fn size(&self) -> usize {
        1 + self.children.iter().map(|c| c.size()).sum::<usize>()
    }

    fn min_leg(&self) -> usize {
        let own = self.legs.first().copied().unwrap_or(usize::MAX);
        self.children
            .iter()
            .map(|c| c.min_leg())
            .fold(own, |a, b| a.min(b))
    }

    fn key(&self) -> (usize, Vec<u8>) {
        (self.min_leg(), format!("{:?}", self).into_bytes())
    }
}

fn subsets(items: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &x in items {
        let mut more: Vec<Vec<usize>> = out
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.push(x);
                s
            })
            .collect();
        out.append(&mut more);
    }
    out
}

/// Subtrees whose root carries one upward half-edge, with the given total
/// genus, exactly the given leg set below, and at most `budget` vertices.
///
/// Every vertex has `chi >= 1`, and the chi-sum of such a subtree is
/// `2g + |legs| - 1`, which bounds the vertex count and terminates the
/// recursion.
fn enumerate_subtrees(total_genus: usize, legs: &[usize], budget: usize) -> Vec<SubTree> {
    let intrinsic = (2 * total_genus + legs.len()) as i64 - 1;
    if intrinsic < 1 {
        return Vec::new();
    }
    let budget = budget.min(intrinsic as usize);
    if budget == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for vg in 0..=total_genus {
        for vlegs in subsets(legs) {
            let rest: Vec<usize> = legs.iter().copied().filter(|l| !vlegs.contains(l)).collect();
            for forest in enumerate_forests(total_genus - vg, &rest, budget - 1) {
                // upward half + own legs + children
                let h = 1 + vlegs.len() + forest.len();
                if 2 * vg as i64 - 2 + h as i64 > 0 {
                    let mut children = forest;
                    children.sort_by_key(|c| c.key());
                    out.push(SubTree {
                        genus: vg,
                        legs: vlegs.clone(),
                        children,
                    });
                }
            }
        }
    }
    out
}

/// Unordered forests covering exactly `legs` with total genus `genus` and at
/// most `budget` vertices overall.
fn enumerate_forests(genus: usize, legs: &[usize], budget: usize) -> Vec<Vec<SubTree>> {
    if legs.is_empty() {
        return enumerate_legless_forests(genus, None, budget);
    }
    if budget == 0 {
        return Vec::new();
    }
    let first = legs[0];
    let rest: Vec<usize> = legs[1..].to_vec();
    let mut out = Vec::new();
    // the child containing the smallest leg is chosen first; this makes the
    // unordered enumeration exactly-once for leg-carrying children
    for extra in subsets(&rest) {
        let mut child_legs = vec![first];
        child_legs.extend_from_slice(&extra);
        child_legs.sort_unstable();
        let remaining: Vec<usize> = rest.iter().copied().filter(|l| !extra.contains(l)).collect();
        for gc in 0..=genus {
            for sub in enumerate_subtrees(gc, &child_legs, budget) {
                for mut forest in enumerate_forests(genus - gc, &remaining, budget - sub.size()) {
                    let mut f = vec![sub.clone()];
                    f.append(&mut forest);
                    out.push(f);
                }
            }
        }
    }
    out
}

/// Shared with the strata enumerator, which roots trees at the first leg.
pub(crate) fn subsets_for_strata(items: &[usize]) -> Vec<Vec<usize>> {
    subsets(items)
}

/// Shared with the strata enumerator; the budget is the chi-sum bound on the
/// vertex count below the root.
pub(crate) fn forests_for_strata(genus: usize, legs: &[usize], budget: usize) -> Vec<Vec<SubTree>> {
    enumerate_forests(genus, legs, budget)
}

/// Multisets of legless subtrees with the given total genus, built in
/// non-decreasing key order so each multiset appears once.
fn enumerate_legless_forests(
    genus: usize,
    min_key: Option<(usize, Vec<u8>)>,
    budget: usize,
) -> Vec<Vec<SubTree>> {
    if genus == 0 {
        return vec![vec![]];
    }
    if budget == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for gc in 1..=genus {
        for sub in enumerate_subtrees(gc, &[], budget) {
            let key = sub.key();
            if let Some(mk) = &min_key {
                if key < *mk {
                    continue;
                }
            }
            for mut forest in
                enumerate_legless_forests(genus - gc, Some(key.clone()), budget - sub.size())
            {
                let mut f = vec![sub.clone()];
                f.append(&mut forest);
                out.push(f);
            }
        }
    }
    out
}

fn build_tree(g: usize, n: usize, m: usize, root: SubTree) -> StableRootedTree {
    let mut tree = StableRootedTree {
        genus: g,
        n,
        m,
        vertices: Vec::new(),
    };
    fn add(tree: &mut StableRootedTree, node: &SubTree, parent: Option<usize>) -> usize {
        let idx = tree.vertices.len();
        tree.vertices.push(SrtVertex {
            genus: node.genus,
            legs: node.legs.clone(),
            parent,
            children: Vec::new(),
        });
        let mut kids: Vec<&SubTree> = node.children.iter().collect();
        kids.sort_by_key(|c| c.key());
        for c in kids {
            let ci = add(tree, c, Some(idx));
            tree.vertices[idx].children.push(ci);
        }
        idx
    }
    add(&mut tree, &root, None);
    tree
}

/// All stable rooted trees in `SRT_{g,n,m}`, each isomorphism class once, in
/// canonical order.
pub fn enumerate_srt(g: usize, n: usize, m: usize) -> Result<Vec<StableRootedTree>, Error> {
    if 2 * g + n + m <= 2 {
        return Err(Error::UnstableSignature { g, n, m });
    }
    let legs: Vec<usize> = (1..=n).collect();
    // chi-sum = 2g - 2 + n + m bounds the number of vertices
    let budget = (2 * g + n + m) as i64 - 2;
    let mut out = Vec::new();
    for vg in 0..=g {
        for vlegs in subsets(&legs) {
            let rest: Vec<usize> = legs.iter().copied().filter(|l| !vlegs.contains(l)).collect();
            for forest in enumerate_forests(g - vg, &rest, (budget - 1).max(0) as usize) {
                let h = m + vlegs.len() + forest.len();
                if 2 * vg as i64 - 2 + h as i64 > 0 {
                    let mut children = forest;
                    children.sort_by_key(|c| c.key());
                    out.push(build_tree(
                        g,
                        n,
                        m,
                        SubTree {
                            genus: vg,
                            legs: vlegs.clone(),
                            children,
                        },
                    ));
                }
            }
        }
    }
    out.sort_by_key(|t| t.encoding());
    Ok(out)
}

/// A stable rooted tree with a degree label `p(v) <= 3g(v) - 3 + |H(v)|` on
/// each vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeLabeledTree {
    pub tree: StableRootedTree,
    pub p: Vec<usize>,
}

impl DegreeLabeledTree {
    /// `P(T,p) = |E(T)| + sum p(v)`: the pure degree of the class attached to
    /// this labeled tree.
    pub fn total_degree(&self) -> usize {
        self.tree.num_edges() + self.p.iter().sum::<usize>()
    }

    pub fn encoding(&self) -> String {
        format!("{} p={:?}", self.tree.encoding(), self.p)
    }
}

/// All degree-labeled stable rooted trees over `SRT_{g,n,m}`.
///
/// With `filter_p_ge_g` set, labels below the vertex genus are dropped; the
/// Omega-type vertex classes vanish in those degrees, while the Psi-family
/// needs the low labels.
pub fn enumerate_dlsrt(
    g: usize,
    n: usize,
    m: usize,
    filter_p_ge_g: bool,
) -> Result<Vec<DegreeLabeledTree>, Error> {
    let trees = enumerate_srt(g, n, m)?;
    let mut out = Vec::new();
    for tree in trees {
        let ranges: Vec<Vec<usize>> = (0..tree.vertices.len())
            .map(|v| {
                let lo = if filter_p_ge_g { tree.vertices[v].genus } else { 0 };
                let hi = tree.vertex_dim(v);
                (lo..=hi).collect()
            })
            .collect();
        let mut p = vec![0usize; tree.vertices.len()];
        fn rec(
            i: usize,
            ranges: &[Vec<usize>],
            p: &mut Vec<usize>,
            tree: &StableRootedTree,
            out: &mut Vec<DegreeLabeledTree>,
        ) {
            if i == ranges.len() {
                out.push(DegreeLabeledTree {
                    tree: tree.clone(),
                    p: p.clone(),
                });
                return;
            }
            for &v in &ranges[i] {
                p[i] = v;
                rec(i + 1, ranges, p, tree, out);
            }
        }
        rec(0, &ranges, &mut p, &tree, &mut out);
    }
    Ok(out)
}

/// An admissible level function, stored as the level of each vertex.
pub type LevelFunction = Vec<usize>;

fn cut_inequality_holds(dl: &DegreeLabeledTree, assigned: &[bool]) -> bool {
    let t = &dl.tree;
    let mut count = 0i64;
    let mut psum = 0i64;
    let mut gsum = 0i64;
    for v in 0..t.vertices.len() {
        if assigned[v] {
            count += 1;
            psum += dl.p[v] as i64;
            gsum += t.vertices[v].genus as i64;
        }
    }
    count - 1 + psum <= t.m as i64 - 2 + 2 * gsum
}

/// All admissible level functions on `(T, p)`: root at level zero, strictly
/// increasing towards the leaves, no empty levels, and the per-cut degree
/// inequality at every level below the top.
pub fn admissible_level_functions(dl: &DegreeLabeledTree) -> Vec<LevelFunction> {
    let t = &dl.tree;
    let nv = t.vertices.len();
    let mut out = Vec::new();
    let mut levels = vec![0usize; nv];
    let mut assigned = vec![false; nv];
    assigned[0] = true;
    let avail: BTreeSet<usize> = t.vertices[0].children.iter().copied().collect();

    fn rec(
        dl: &DegreeLabeledTree,
        avail: &BTreeSet<usize>,
        levels: &mut Vec<usize>,
        assigned: &mut Vec<bool>,
        current: usize,
        out: &mut Vec<LevelFunction>,
    ) {
        if avail.is_empty() {
            out.push(levels.clone());
            return;
        }
        // another level will be added, so the prefix cut must hold
        if !cut_inequality_holds(dl, assigned) {
            return;
        }
        let items: Vec<usize> = avail.iter().copied().collect();
        // nonempty subsets of the available vertices form the next level
        for mask in 1..(1u64 << items.len()) {
            let mut next_avail = avail.clone();
            let mut chosen = Vec::new();
            for (i, &v) in items.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    chosen.push(v);
                    next_avail.remove(&v);
                }
            }
            for &v in &chosen {
                levels[v] = current;
                assigned[v] = true;
                for &c in &dl.tree.vertices[v].children {
                    next_avail.insert(c);
                }
            }
            rec(dl, &next_avail, levels, assigned, current + 1, out);
            for &v in &chosen {
                assigned[v] = false;
            }
        }
    }
    rec(dl, &avail, &mut levels, &mut assigned, 1, &mut out);
    out.sort_unstable();
    out
}

fn c_lvl_cache() -> &'static Mutex<HashMap<String, Rat>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Rat>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `C_lvl(T,p)`: the signed count of admissible level functions, with sign
/// `(-1)^{max level}`. Memoized on the canonical form of `(T,p)`.
pub fn c_lvl(dl: &DegreeLabeledTree) -> Rat {
    let key = dl.encoding();
    if let Some(v) = c_lvl_cache().lock().unwrap().get(&key) {
        return v.clone();
    }
    let mut acc = Rat::zero();
    for lf in admissible_level_functions(dl) {
        let max = lf.iter().copied().max().unwrap_or(0);
        if max % 2 == 0 {
            acc += Rat::one();
        } else {
            acc -= Rat::one();
        }
    }
    c_lvl_cache().lock().unwrap().insert(key, acc.clone());
    acc
}

/// Independent oracle: brute force over all functions `V -> {0..|V|-1}`,
/// filtering the four admissibility conditions directly.
pub fn c_lvl_brute_force(dl: &DegreeLabeledTree) -> Rat {
    let t = &dl.tree;
    let nv = t.vertices.len();
    let mut acc = Rat::zero();
    let mut f = vec![0usize; nv];
    loop {
        if is_admissible(dl, &f) {
            let max = f.iter().copied().max().unwrap_or(0);
            if max % 2 == 0 {
                acc += Rat::one();
            } else {
                acc -= Rat::one();
            }
        }
        // next function in lexicographic order
        let mut i = 0;
        loop {
            if i == nv {
                return acc;
            }
            f[i] += 1;
            if f[i] < nv {
                break;
            }
            f[i] = 0;
            i += 1;
        }
    }
}

fn is_admissible(dl: &DegreeLabeledTree, f: &[usize]) -> bool {
    let t = &dl.tree;
    if f[0] != 0 {
        return false;
    }
    for v in 1..t.vertices.len() {
        let p = t.vertices[v].parent.unwrap();
        if f[v] <= f[p] {
            return false;
        }
    }
    let max = f.iter().copied().max().unwrap_or(0);
    for lvl in 0..=max {
        if !f.iter().any(|&x| x == lvl) {
            return false;
        }
    }
    for i in 0..max {
        let assigned: Vec<bool> = f.iter().map(|&x| x <= i).collect();
        if !cut_inequality_holds(dl, &assigned) {
            return false;
        }
    }
    true
}

/// Choice of sign convention for flows on half-edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowConvention {
    /// Positive halves carry descendant-leg sums; no values on negative halves.
    Positive,
    /// Additionally each negative half carries minus the descendant-leg sum of
    /// its vertex, so flows balance at every vertex when `m = 1`.
    Balanced,
}

/// Symbolic flow values (`a(h)`, `a(e)`, `a(v)`) on a stable rooted tree, as
/// polynomials in `a_1, ..., a_n`.
#[derive(Clone, Debug)]
pub struct FlowAssignment {
    pub convention: FlowConvention,
    /// Per vertex, aligned with `pos_half_edges(v)`.
    pub pos_values: Vec<Vec<MultiPoly>>,
    /// Per vertex: one entry per negative half (only under `Balanced`).
    pub neg_values: Vec<Vec<MultiPoly>>,
    /// `a(v)` per vertex.
    pub vertex_values: Vec<MultiPoly>,
    /// `a(e)` per edge, indexed by the child vertex (0 unused).
    pub edge_values: Vec<MultiPoly>,
}

fn leg_sum(n: usize, legs: &[usize]) -> MultiPoly {
    let mut acc = MultiPoly::zero(n);
    for &l in legs {
        acc = acc.add(&MultiPoly::var(n, l - 1));
    }
    acc
}

/// Flow values for a tree under the chosen convention.
pub fn flow_assignment(t: &StableRootedTree, convention: FlowConvention) -> FlowAssignment {
    let n = t.n;
    let nv = t.vertices.len();
    let mut pos_values = Vec::with_capacity(nv);
    let mut neg_values = Vec::with_capacity(nv);
    let mut vertex_values = Vec::with_capacity(nv);
    let mut edge_values = vec![MultiPoly::zero(n); nv];
    for v in 0..nv {
        let av = leg_sum(n, &t.descendant_legs(v));
        vertex_values.push(av.clone());
        let pos: Vec<MultiPoly> = t
            .pos_half_edges(v)
            .iter()
            .map(|h| match h {
                PosHalf::Leg(l) => MultiPoly::var(n, l - 1),
                PosHalf::Child(c) => leg_sum(n, &t.descendant_legs(*c)),
            })
            .collect();
        pos_values.push(pos);
        let neg = match convention {
            FlowConvention::Positive => Vec::new(),
            FlowConvention::Balanced => {
                let val = av.neg();
                vec![val; t.h_neg_count(v)]
            }
        };
        neg_values.push(neg);
        if v != 0 {
            edge_values[v] = leg_sum(n, &t.descendant_legs(v));
        }
    }
    FlowAssignment {
        convention,
        pos_values,
        neg_values,
        vertex_values,
        edge_values,
    }
}

/// Product of all edge flows `a(e)`, evaluated at integer `a`.
pub fn edge_product_at(t: &StableRootedTree, a: &[i64]) -> Rat {
    let mut acc = Rat::one();
    for v in 1..t.vertices.len() {
        let mut s = 0i64;
        for l in t.descendant_legs(v) {
            s += a[l - 1];
        }
        acc *= rat_int(s);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unstable_signature_rejected() {
        assert!(matches!(
            enumerate_srt(0, 2, 0),
            Err(Error::UnstableSignature { .. })
        ));
        assert!(enumerate_srt(0, 2, 1).is_ok());
    }

    #[test]
    fn srt_021_is_single_vertex() {
        // any child vertex would need two regular legs, leaving the root with
        // valence 2 < 3
        let trees = enumerate_srt(0, 2, 1).unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].vertices.len(), 1);
    }

    #[test]
    fn srt_032_has_eight_trees() {
        // independent hand enumeration: 1 single vertex, 4 root+child
        // (child legs any of {12},{13},{23},{123}), 3 chains with grandchild
        let trees = enumerate_srt(0, 3, 2).unwrap();
        assert_eq!(trees.len(), 8);
    }

    #[test]
    fn srt_contains_one_vertex_tree_for_n0() {
        for g in 1..=2 {
            for m in 1..=2 {
                let trees = enumerate_srt(g, 0, m).unwrap();
                assert!(trees.iter().any(|t| t.vertices.len() == 1));
            }
        }
    }

    #[test]
    fn chi_additivity() {
        for (g, n, m) in [(0, 3, 2), (1, 2, 2), (2, 1, 1), (1, 3, 1)] {
            for t in enumerate_srt(g, n, m).unwrap() {
                let total: i64 = (0..t.vertices.len()).map(|v| t.chi(v)).sum();
                assert_eq!(total, 2 * g as i64 - 2 + n as i64 + m as i64);
            }
        }
    }

    #[test]
    fn enumeration_is_deterministic() {
        let a = enumerate_srt(1, 2, 2).unwrap();
        let b = enumerate_srt(1, 2, 2).unwrap();
        let ea: Vec<String> = a.iter().map(|t| t.encoding()).collect();
        let eb: Vec<String> = b.iter().map(|t| t.encoding()).collect();
        assert_eq!(ea, eb);
        let mut uniq = ea.clone();
        uniq.dedup();
        assert_eq!(uniq.len(), ea.len(), "duplicate isomorphism class emitted");
    }

    #[test]
    fn dlsrt_021_single() {
        let dls = enumerate_dlsrt(0, 2, 1, true).unwrap();
        assert_eq!(dls.len(), 1);
        assert_eq!(dls[0].p, vec![0]);
    }

    #[test]
    fn dlsrt_111_one_vertex_counts() {
        // one-vertex labels at (1,1,1): bound 3g-3+|H| = 2, so {0,1,2};
        // the p >= g filter keeps {1,2}
        let all = enumerate_dlsrt(1, 1, 1, false).unwrap();
        let single_all: Vec<_> = all.iter().filter(|d| d.tree.vertices.len() == 1).collect();
        assert_eq!(single_all.len(), 3);
        let filt = enumerate_dlsrt(1, 1, 1, true).unwrap();
        let single_filt: Vec<_> = filt.iter().filter(|d| d.tree.vertices.len() == 1).collect();
        assert_eq!(single_filt.len(), 2);
        assert!(single_filt.iter().all(|d| d.p[0] >= 1));
    }

    #[test]
    fn single_vertex_level_function_unique() {
        let dls = enumerate_dlsrt(0, 2, 1, false).unwrap();
        let lf = admissible_level_functions(&dls[0]);
        assert_eq!(lf, vec![vec![0]]);
        assert_eq!(c_lvl(&dls[0]), rat_int(1));
    }

    #[test]
    fn two_vertex_root_cut_inequality() {
        // two-vertex chain in (0,3,1): root cut reads p(root) <= 2g(root)-2+m = -1,
        // so any labeling with more than one level needs p(root) <= -1: impossible
        // unless the inequality holds; here p(root) = 0 violates it.
        let dls = enumerate_dlsrt(0, 3, 1, false).unwrap();
        for dl in dls.iter().filter(|d| d.tree.vertices.len() == 2) {
            assert!(admissible_level_functions(dl).is_empty());
            assert_eq!(c_lvl(dl), rat_int(0));
        }
    }

    #[test]
    fn c_lvl_matches_brute_force_on_small_signatures() {
        for (g, n, m) in [(0, 3, 2), (0, 4, 1), (1, 2, 1), (1, 1, 2), (0, 3, 0), (2, 1, 1)] {
            if 2 * g + n + m <= 2 {
                continue;
            }
            for dl in enumerate_dlsrt(g, n, m, false).unwrap() {
                if dl.tree.vertices.len() <= 6 {
                    assert_eq!(
                        c_lvl(&dl),
                        c_lvl_brute_force(&dl),
                        "mismatch on {}",
                        dl.encoding()
                    );
                }
            }
        }
    }

    #[test]
    fn flows_positive_convention() {
        let trees = enumerate_srt(0, 3, 2).unwrap();
        for t in &trees {
            let fa = flow_assignment(t, FlowConvention::Positive);
            // a(root) = a_1 + a_2 + a_3
            let total = leg_sum(3, &[1, 2, 3]);
            assert_eq!(fa.vertex_values[0], total);
            // union of positive half flows at the root covers all legs
            let sum = fa.pos_values[0]
                .iter()
                .fold(MultiPoly::zero(3), |acc, p| acc.add(p));
            assert_eq!(sum, total);
        }
    }

    #[test]
    fn flows_balanced_convention() {
        let trees = enumerate_srt(1, 2, 1).unwrap();
        for t in &trees {
            let fa = flow_assignment(t, FlowConvention::Balanced);
            // frozen leg value is minus the total
            assert_eq!(fa.neg_values[0][0], leg_sum(2, &[1, 2]).neg());
            for v in 0..t.vertices.len() {
                // sum over all halves at v vanishes
                let mut acc = MultiPoly::zero(2);
                for p in &fa.pos_values[v] {
                    acc = acc.add(p);
                }
                for q in &fa.neg_values[v] {
                    acc = acc.add(q);
                }
                assert!(acc.is_zero(), "unbalanced vertex {v} in {}", t.encoding());
                // every edge balances: a(h) + a(h') = 0
                for &c in &t.vertices[v].children {
                    let down = leg_sum(2, &t.descendant_legs(c));
                    assert_eq!(fa.neg_values[c][0], down.neg());
                }
            }
        }
    }

    #[test]
    fn descendant_sets_special_cases() {
        for t in enumerate_srt(1, 3, 1).unwrap() {
            assert_eq!(t.descendant_legs(0), vec![1, 2, 3]);
            assert_eq!(t.descendant_vertices(0).len(), t.vertices.len());
        }
    }
}
