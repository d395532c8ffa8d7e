//! Rectangle graphs, clique graphs and the combinatorial bound ladder.
//!
//! For a nonnegative matrix `A` the rectangle graph `RG(A)` has the support
//! entries as vertices and an edge between `(i,j)` and `(k,l)` iff
//! `A_il · A_kj = 0`. Its clique number is the fooling set bound, its
//! chromatic number the boolean rank, and in between sit `θ̄` and the
//! fractional rectangle cover. For cp inputs the relevant object is the
//! support graph `G(A)` and its (fractional) edge-clique covers.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{build_covering_lp, build_theta_bar, ConicProblem};
use crate::solve::{extract_bound, solve, SolverOptions};
use crate::types::{CpInputMatrix, NonnegMatrix};

/// Default vertex cap for exact clique search and clique enumeration.
pub const CLIQUE_CAP: usize = 64;
/// Default cap on `|supp(A)|` for the exact boolean rank.
pub const BOOLEAN_RANK_CAP: usize = 25;
/// Default cap on the number of edges for the exact edge-clique cover.
pub const EDGE_COVER_CAP: usize = 128;
/// Default cap on the number of enumerated maximal rectangles or cliques.
pub const ENUMERATION_CAP: usize = 20_000;

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<bool>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self { adj: vec![vec![false; n]; n] }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for u in 0..n {
            for v in u + 1..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Self::empty(n);
        for u in 0..n {
            g.add_edge(u, (u + 1) % n);
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::empty(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    /// Self-loops are ignored.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u != v {
            self.adj[u][v] = true;
            self.adj[v][u] = true;
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u][v]
    }

    /// Edges `(u, v)` with `u < v`, lexicographic.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.vertex_count();
        (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| self.adj[u][v])
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    fn bitsets(&self, cap: usize) -> Result<Vec<u64>> {
        let n = self.vertex_count();
        let cap = cap.min(64);
        if n > cap {
            return Err(Error::TooLarge { what: "graph vertex count", size: n, cap });
        }
        Ok((0..n)
            .map(|u| (0..n).filter(|&v| self.adj[u][v]).fold(0u64, |acc, v| acc | 1 << v))
            .collect())
    }
}

/// `RG(A)`: vertices are the support entries in support order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RectangleGraph {
    pub vertices: Vec<(usize, usize)>,
    pub graph: Graph,
}

pub fn rectangle_graph(a: &NonnegMatrix) -> Result<RectangleGraph> {
    let vertices = a.support();
    if vertices.is_empty() {
        return Err(Error::ZeroInput);
    }
    let mut graph = Graph::empty(vertices.len());
    for (u, &(i, j)) in vertices.iter().enumerate() {
        for (v, &(k, l)) in vertices.iter().enumerate().skip(u + 1) {
            if !a.is_supported(i, l) || !a.is_supported(k, j) {
                graph.add_edge(u, v);
            }
        }
    }
    Ok(RectangleGraph { vertices, graph })
}

/// `I × J` with `A_ij > eps_zero` on every cell. Index lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MonochromaticRectangle {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl MonochromaticRectangle {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.rows.binary_search(&i).is_ok() && self.cols.binary_search(&j).is_ok()
    }

    pub fn is_monochromatic(&self, a: &NonnegMatrix) -> bool {
        self.rows.iter().all(|&i| self.cols.iter().all(|&j| a.is_supported(i, j)))
    }
}

fn bits(mask: u64) -> Vec<usize> {
    (0..64).filter(|&k| mask >> k & 1 == 1).collect()
}

/// Inclusion-maximal monochromatic rectangles, i.e. the maximal bicliques of
/// the bipartite support graph.
///
/// The column sets of maximal rectangles are exactly the nonempty
/// intersections of row supports; they are generated by closing the row
/// supports under pairwise intersection, and each column set `J` is paired
/// with the rows whose support contains `J`.
pub fn maximal_monochromatic_rectangles(a: &NonnegMatrix, cap: usize) -> Result<Vec<MonochromaticRectangle>> {
    if a.cols() > 64 {
        return Err(Error::TooLarge { what: "column count", size: a.cols(), cap: 64 });
    }
    let row_masks: Vec<u64> = (0..a.rows())
        .map(|i| (0..a.cols()).filter(|&j| a.is_supported(i, j)).fold(0u64, |acc, j| acc | 1 << j))
        .collect();
    let mut sets: BTreeSet<u64> = row_masks.iter().copied().filter(|&m| m != 0).collect();
    let mut frontier: Vec<u64> = sets.iter().copied().collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &f in &frontier {
            for &r in &row_masks {
                let x = f & r;
                if x != 0 && sets.insert(x) {
                    next.push(x);
                }
            }
        }
        if sets.len() > cap {
            return Err(Error::TooLarge { what: "maximal rectangle count", size: sets.len(), cap });
        }
        frontier = next;
    }
    let mut out: Vec<MonochromaticRectangle> = sets
        .into_iter()
        .map(|cols| MonochromaticRectangle {
            rows: (0..a.rows()).filter(|&i| row_masks[i] & cols == cols).collect(),
            cols: bits(cols),
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Maximum clique size by branch and bound, pruning with greedy colorings.
pub fn clique_number(g: &Graph, cap: usize) -> Result<usize> {
    let adj = g.bitsets(cap)?;
    let n = adj.len();
    if n == 0 {
        return Ok(0);
    }
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = 0;
    expand_clique(&adj, 0, all, &mut best);
    Ok(best)
}

/// Greedy sequential coloring of `p`; returns vertices in color order with
/// their color numbers (1-based, nondecreasing).
fn color_sort(adj: &[u64], p: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order = Vec::new();
    let mut colors = Vec::new();
    let mut uncolored = p;
    let mut color = 0;
    while uncolored != 0 {
        color += 1;
        let mut q = uncolored;
        while q != 0 {
            let v = q.trailing_zeros() as usize;
            q &= !(1u64 << v) & !adj[v];
            uncolored &= !(1u64 << v);
            order.push(v);
            colors.push(color);
        }
    }
    (order, colors)
}

fn expand_clique(adj: &[u64], size: usize, mut p: u64, best: &mut usize) {
    let (order, colors) = color_sort(adj, p);
    for idx in (0..order.len()).rev() {
        if size + colors[idx] <= *best {
            return;
        }
        let v = order[idx];
        let next = p & adj[v];
        if next == 0 {
            *best = (*best).max(size + 1);
        } else {
            expand_clique(adj, size + 1, next, best);
        }
        p &= !(1u64 << v);
    }
}

/// Complement Lovász theta, solved as an SDP; returns the dual-side bound.
pub fn theta_bar(g: &Graph, opts: &SolverOptions) -> Result<f64> {
    let p = build_theta_bar(g)?;
    Ok(extract_bound(&solve(&p, opts)?)?.value)
}

fn solve_covering(p: Option<ConicProblem>, opts: &SolverOptions) -> Result<f64> {
    match p {
        Some(p) => Ok(extract_bound(&solve(&p, opts)?)?.value),
        None => Ok(0.0),
    }
}

/// The covering LP behind [`fractional_rectangle_cover`]; `None` for an empty support.
pub fn rectangle_cover_lp(a: &NonnegMatrix) -> Result<Option<ConicProblem>> {
    let support = a.support();
    if support.is_empty() {
        return Ok(None);
    }
    let rects = maximal_monochromatic_rectangles(a, ENUMERATION_CAP)?;
    let covering: Vec<Vec<usize>> = support
        .into_iter()
        .map(|(i, j)| (0..rects.len()).filter(|&r| rects[r].contains(i, j)).collect())
        .collect();
    build_covering_lp(rects.len(), &covering).map(Some)
}

/// Fractional rectangle cover `χ_frac(RG(A))` over maximal rectangles.
pub fn fractional_rectangle_cover(a: &NonnegMatrix, opts: &SolverOptions) -> Result<f64> {
    solve_covering(rectangle_cover_lp(a)?, opts)
}

/// Exact minimum set cover of `universe` elements by `sets` (bitmasks),
/// starting the iterative-deepening search at `lower_bound`.
pub fn min_set_cover(universe: usize, sets: &[u128], lower_bound: usize) -> Option<usize> {
    assert!(universe <= 128);
    let full = if universe == 128 { u128::MAX } else { (1u128 << universe) - 1 };
    if full == 0 {
        return Some(0);
    }
    if sets.iter().fold(0, |acc, s| acc | s) & full != full {
        return None;
    }
    let upper = greedy_cover(full, sets);
    (lower_bound.max(1)..=upper).find(|&k| cover_within(full, sets, k)).or(Some(upper))
}

fn greedy_cover(mut uncovered: u128, sets: &[u128]) -> usize {
    let mut used = 0;
    while uncovered != 0 {
        let best = sets.iter().max_by_key(|&&s| (s & uncovered).count_ones()).unwrap();
        uncovered &= !best;
        used += 1;
    }
    used
}

/// Size of a greedily built family of uncovered elements that pairwise share no set.
fn disjoint_elements_bound(uncovered: u128, sets: &[u128]) -> usize {
    let mut blocked = 0u128;
    let mut count = 0;
    let mut rest = uncovered;
    while rest != 0 {
        let e = rest.trailing_zeros();
        rest &= !(1u128 << e);
        if blocked >> e & 1 == 1 {
            continue;
        }
        count += 1;
        for &s in sets {
            if s >> e & 1 == 1 {
                blocked |= s;
            }
        }
    }
    count
}

fn cover_within(uncovered: u128, sets: &[u128], budget: usize) -> bool {
    if uncovered == 0 {
        return true;
    }
    if budget == 0 {
        return false;
    }
    let widest = sets.iter().map(|s| (s & uncovered).count_ones() as usize).max().unwrap_or(0);
    let need = (uncovered.count_ones() as usize).div_ceil(widest.max(1));
    if need > budget || disjoint_elements_bound(uncovered, sets) > budget {
        return false;
    }
    // Branch on the element with the fewest covering sets.
    let mut rest = uncovered;
    let mut pick = (usize::MAX, 0);
    while rest != 0 {
        let e = rest.trailing_zeros();
        rest &= !(1u128 << e);
        let c = sets.iter().filter(|&&s| s >> e & 1 == 1).count();
        if c < pick.0 {
            pick = (c, e);
        }
    }
    let e = pick.1;
    let mut options: Vec<u128> = sets.iter().copied().filter(|&s| s >> e & 1 == 1).collect();
    options.sort_by_key(|&s| std::cmp::Reverse((s & uncovered).count_ones()));
    options.dedup();
    options.iter().any(|&s| cover_within(uncovered & !s, sets, budget - 1))
}

/// Lower bound for exact covering from the LP value, robust to solver slack.
fn lp_floor(value: f64) -> usize {
    (value - 1e-6).ceil().max(0.0) as usize
}

/// Boolean rank `rank_B(A) = χ(RG(A))`: the minimum number of monochromatic
/// rectangles covering the support.
pub fn boolean_rank(a: &NonnegMatrix, cap: usize, opts: &SolverOptions) -> Result<usize> {
    let support = a.support();
    if support.len() > cap.min(128) {
        return Err(Error::TooLarge { what: "support size", size: support.len(), cap: cap.min(128) });
    }
    if support.is_empty() {
        return Ok(0);
    }
    let rects = maximal_monochromatic_rectangles(a, ENUMERATION_CAP)?;
    let masks: Vec<u128> = rects
        .iter()
        .map(|r| {
            support
                .iter()
                .enumerate()
                .filter(|(_, &(i, j))| r.contains(i, j))
                .fold(0u128, |acc, (e, _)| acc | 1 << e)
        })
        .collect();
    let lb = lp_floor(fractional_rectangle_cover(a, opts)?);
    Ok(min_set_cover(support.len(), &masks, lb).expect("maximal rectangles cover the support"))
}

/// `G(A)`: edges `{i, j}` for `A_ij > eps_zero`, `i ≠ j`; diagonal support kept as flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpGraph {
    pub graph: Graph,
    pub diagonal: Vec<bool>,
}

impl CpGraph {
    /// Vertices with a positive diagonal entry and no incident edge; they are
    /// not part of the edge covers.
    pub fn isolated_loops(&self) -> Vec<usize> {
        let n = self.graph.vertex_count();
        (0..n)
            .filter(|&u| self.diagonal[u] && (0..n).all(|v| !self.graph.has_edge(u, v)))
            .collect()
    }
}

pub fn cp_graph(a: &CpInputMatrix) -> CpGraph {
    let m = a.as_matrix();
    let n = a.n();
    let mut graph = Graph::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if m.is_supported(i, j) || m.is_supported(j, i) {
                graph.add_edge(i, j);
            }
        }
    }
    CpGraph { graph, diagonal: (0..n).map(|i| m.is_supported(i, i)).collect() }
}

/// Maximal cliques (as sorted vertex lists) by Bron–Kerbosch with pivoting.
pub fn maximal_cliques(g: &Graph, cap: usize) -> Result<Vec<Vec<usize>>> {
    let adj = g.bitsets(CLIQUE_CAP)?;
    let n = adj.len();
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut out = Vec::new();
    bron_kerbosch(&adj, 0, all, 0, &mut out, cap)?;
    let mut cliques: Vec<Vec<usize>> = out.into_iter().map(bits).collect();
    cliques.sort();
    Ok(cliques)
}

fn bron_kerbosch(adj: &[u64], r: u64, mut p: u64, mut x: u64, out: &mut Vec<u64>, cap: usize) -> Result<()> {
    if p == 0 && x == 0 {
        if r != 0 {
            out.push(r);
            if out.len() > cap {
                return Err(Error::TooLarge { what: "maximal clique count", size: out.len(), cap });
            }
        }
        return Ok(());
    }
    let pivot = bits(p | x).into_iter().max_by_key(|&u| (adj[u] & p).count_ones()).unwrap();
    for v in bits(p & !adj[pivot]) {
        let bit = 1u64 << v;
        bron_kerbosch(adj, r | bit, p & adj[v], x & adj[v], out, cap)?;
        p &= !bit;
        x |= bit;
    }
    Ok(())
}

/// Maximal cliques containing at least one edge, with the edge-incidence lists
/// used by both edge-cover computations.
fn edge_cover_data(g: &CpGraph) -> Result<(Vec<(usize, usize)>, Vec<Vec<usize>>)> {
    let edges = g.graph.edges();
    let cliques: Vec<Vec<usize>> = maximal_cliques(&g.graph, ENUMERATION_CAP)?
        .into_iter()
        .filter(|c| c.len() >= 2)
        .collect();
    Ok((edges, cliques))
}

fn clique_has_edge(c: &[usize], (u, v): (usize, usize)) -> bool {
    c.binary_search(&u).is_ok() && c.binary_search(&v).is_ok()
}

/// The covering LP behind [`fractional_edge_clique_cover`]; `None` for an edgeless graph.
pub fn edge_clique_cover_lp(g: &CpGraph) -> Result<Option<ConicProblem>> {
    let (edges, cliques) = edge_cover_data(g)?;
    if edges.is_empty() {
        return Ok(None);
    }
    let covering: Vec<Vec<usize>> = edges
        .iter()
        .map(|&e| (0..cliques.len()).filter(|&c| clique_has_edge(&cliques[c], e)).collect())
        .collect();
    build_covering_lp(cliques.len(), &covering).map(Some)
}

/// Fractional edge-clique cover `c_frac(G)`: the covering LP over maximal cliques.
pub fn fractional_edge_clique_cover(g: &CpGraph, opts: &SolverOptions) -> Result<f64> {
    solve_covering(edge_clique_cover_lp(g)?, opts)
}

/// Edge-clique cover number `c(G)`: fewest cliques covering every edge.
/// Isolated diagonal entries are not counted.
pub fn edge_clique_cover_number(g: &CpGraph, cap: usize, opts: &SolverOptions) -> Result<usize> {
    let (edges, cliques) = edge_cover_data(g)?;
    let cap = cap.min(128);
    if edges.len() > cap {
        return Err(Error::TooLarge { what: "edge count", size: edges.len(), cap });
    }
    let masks: Vec<u128> = cliques
        .iter()
        .map(|c| {
            edges
                .iter()
                .enumerate()
                .filter(|(_, &e)| clique_has_edge(c, e))
                .fold(0u128, |acc, (k, _)| acc | 1 << k)
        })
        .collect();
    let lb = lp_floor(fractional_edge_clique_cover(g, opts)?);
    Ok(min_set_cover(edges.len(), &masks, lb).expect("maximal cliques cover every edge"))
}
