//! Solver-agnostic conic problems and the builders for every relaxation.
//!
//! A [`ConicProblem`] minimizes a linear objective over scalar variables and
//! symmetric matrix blocks, subject to linear equalities (`expr = 0`), linear
//! inequalities (`expr ≤ 0`) and PSD constraints on affine symmetric matrices.
//! Matrix blocks are free symmetric matrices; positivity only ever enters
//! through explicit PSD constraints.
//!
//! Every builder rescales its input by the reciprocal of its largest entry.
//! The relaxations are invariant under positive scaling of the input, so the
//! optimal value is unaffected; the rescaling only helps conditioning.

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::combinatorial::Graph;
use crate::error::{Error, Result};
use crate::types::{kronecker, CpInputMatrix, MatrixIndexPair, NonnegMatrix, NonnegTensor};

/// A decision variable: a scalar, or one entry of a symmetric matrix block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Scalar(usize),
    /// Always stored with `row <= col`.
    Entry { block: usize, row: usize, col: usize },
}

impl Var {
    pub fn entry(block: usize, a: usize, b: usize) -> Self {
        Var::Entry { block, row: a.min(b), col: a.max(b) }
    }
}

/// `Σ coeff·var + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(Var, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        Self { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    pub fn term(mut self, v: Var, coeff: f64) -> Self {
        self.terms.push((v, coeff));
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    /// Merges repeated variables and drops zero coefficients.
    fn normalized(&self) -> Self {
        let mut acc: BTreeMap<Var, f64> = BTreeMap::new();
        for &(v, c) in &self.terms {
            *acc.entry(v).or_default() += c;
        }
        Self {
            terms: acc.into_iter().filter(|&(_, c)| c != 0.0).collect(),
            constant: self.constant,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: LinExpr,
}

/// Asserts that the symmetric matrix with the given upper-triangle entries is
/// PSD. Missing entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdConstraint {
    pub name: String,
    pub size: usize,
    pub entries: BTreeMap<(usize, usize), LinExpr>,
}

impl PsdConstraint {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self { name: name.into(), size, entries: BTreeMap::new() }
    }

    /// Sets entry `(r, c)` (and implicitly `(c, r)`).
    pub fn set(&mut self, r: usize, c: usize, e: LinExpr) {
        let key = (r.min(c), r.max(c));
        if e.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, e);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixBlock {
    pub name: String,
    pub size: usize,
    /// Human-readable label of each row/column (e.g. the matrix entry it stands for).
    pub labels: Vec<String>,
}

/// Constraint counts as surfaced in reports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConstraintCounts {
    pub scalar_vars: usize,
    pub block_vars: usize,
    pub equalities: usize,
    pub inequalities: usize,
    pub psd_constraints: usize,
    pub largest_psd: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConicProblem {
    scalars: Vec<String>,
    blocks: Vec<MatrixBlock>,
    equalities: Vec<Constraint>,
    inequalities: Vec<Constraint>,
    psd: Vec<PsdConstraint>,
    objective: LinExpr,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_scalar(&mut self, name: impl Into<String>) -> Var {
        self.scalars.push(name.into());
        Var::Scalar(self.scalars.len() - 1)
    }

    /// Declares a free symmetric `size × size` block; returns its id.
    pub fn add_block(&mut self, name: impl Into<String>, size: usize, labels: Vec<String>) -> usize {
        debug_assert_eq!(labels.len(), size);
        self.blocks.push(MatrixBlock { name: name.into(), size, labels });
        self.blocks.len() - 1
    }

    /// `expr = 0`.
    pub fn add_eq(&mut self, name: impl Into<String>, expr: LinExpr) {
        self.equalities.push(Constraint { name: name.into(), expr });
    }

    /// `expr ≤ 0`.
    pub fn add_le(&mut self, name: impl Into<String>, expr: LinExpr) {
        self.inequalities.push(Constraint { name: name.into(), expr });
    }

    pub fn add_psd(&mut self, c: PsdConstraint) {
        self.psd.push(c);
    }

    pub fn minimize(&mut self, objective: LinExpr) {
        self.objective = objective;
    }

    pub fn scalars(&self) -> &[String] {
        &self.scalars
    }

    pub fn blocks(&self) -> &[MatrixBlock] {
        &self.blocks
    }

    pub fn equalities(&self) -> &[Constraint] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[Constraint] {
        &self.inequalities
    }

    pub fn psd_constraints(&self) -> &[PsdConstraint] {
        &self.psd
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    pub fn counts(&self) -> ConstraintCounts {
        ConstraintCounts {
            scalar_vars: self.scalars.len(),
            block_vars: self.blocks.iter().map(|b| b.size * (b.size + 1) / 2).sum(),
            equalities: self.equalities.len(),
            inequalities: self.inequalities.len(),
            psd_constraints: self.psd.len(),
            largest_psd: self.psd.iter().map(|p| p.size).max().unwrap_or(0),
        }
    }

    fn check_expr(&self, ctx: &str, e: &LinExpr) -> Result<()> {
        if !e.constant.is_finite() {
            return Err(Error::InvalidProblem(format!("{ctx}: non-finite constant")));
        }
        for &(v, c) in &e.terms {
            if !c.is_finite() {
                return Err(Error::InvalidProblem(format!("{ctx}: non-finite coefficient")));
            }
            let ok = match v {
                Var::Scalar(k) => k < self.scalars.len(),
                Var::Entry { block, row, col } => self
                    .blocks
                    .get(block)
                    .is_some_and(|b| row <= col && col < b.size),
            };
            if !ok {
                return Err(Error::InvalidProblem(format!("{ctx}: undeclared variable {v:?}")));
            }
        }
        Ok(())
    }

    /// Every constraint references declared variables, all data is finite and
    /// constraint names are unique.
    pub fn validate(&self) -> Result<()> {
        let mut names = HashSet::new();
        let all = self
            .equalities
            .iter()
            .chain(&self.inequalities)
            .map(|c| (&c.name, std::slice::from_ref(&c.expr)));
        for (name, exprs) in all {
            if !names.insert(name.as_str()) {
                return Err(Error::InvalidProblem(format!("duplicate constraint name {name}")));
            }
            for e in exprs {
                self.check_expr(name, e)?;
            }
        }
        for p in &self.psd {
            if !names.insert(p.name.as_str()) {
                return Err(Error::InvalidProblem(format!("duplicate constraint name {}", p.name)));
            }
            for (&(r, c), e) in &p.entries {
                if r > c || c >= p.size {
                    return Err(Error::InvalidProblem(format!(
                        "{}: entry ({r},{c}) outside the upper triangle",
                        p.name
                    )));
                }
                self.check_expr(&p.name, e)?;
            }
        }
        self.check_expr("objective", &self.objective)
    }

    /// Relabels the rows/columns of `block`: old index `r` becomes `perm[r]`.
    /// The feasible set is unchanged up to that relabelling.
    pub fn permute_block(&mut self, block: usize, perm: &[usize]) -> Result<()> {
        let size = self
            .blocks
            .get(block)
            .ok_or_else(|| Error::InvalidProblem(format!("no block {block}")))?
            .size;
        let mut seen = vec![false; size];
        if perm.len() != size || perm.iter().any(|&p| p >= size || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidProblem("not a permutation".into()));
        }
        let remap = |e: &mut LinExpr| {
            for (v, _) in &mut e.terms {
                if let Var::Entry { block: b, row, col } = *v {
                    if b == block {
                        *v = Var::entry(b, perm[row], perm[col]);
                    }
                }
            }
        };
        for c in self.equalities.iter_mut().chain(self.inequalities.iter_mut()) {
            remap(&mut c.expr);
        }
        for p in &mut self.psd {
            p.entries.values_mut().for_each(remap);
        }
        remap(&mut self.objective);
        let b = &mut self.blocks[block];
        let mut labels = vec![String::new(); size];
        for (old, label) in b.labels.drain(..).enumerate() {
            labels[perm[old]] = label;
        }
        b.labels = labels;
        Ok(())
    }

    fn var_name(&self, v: Var) -> String {
        match v {
            Var::Scalar(k) => self.scalars[k].clone(),
            Var::Entry { block, row, col } => {
                format!("{}[{},{}]", self.blocks[block].name, row + 1, col + 1)
            }
        }
    }

    fn fmt_terms(&self, e: &LinExpr) -> String {
        let e = e.normalized();
        if e.terms.is_empty() {
            return "0".into();
        }
        e.terms
            .iter()
            .map(|&(v, c)| format!("{c}*{}", self.var_name(v)))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Stable human-readable listing of the problem; see the README for the format.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "conic-problem v1");
        for s in &self.scalars {
            let _ = writeln!(out, "scalar {s}");
        }
        for b in &self.blocks {
            let _ = writeln!(out, "block {} {} [{}]", b.name, b.size, b.labels.join(" "));
        }
        let _ = writeln!(out, "minimize {} + {}", self.fmt_terms(&self.objective), self.objective.constant);
        for c in &self.equalities {
            let _ = writeln!(out, "eq {}: {} = {}", c.name, self.fmt_terms(&c.expr), 0.0 - c.expr.constant);
        }
        for c in &self.inequalities {
            let _ = writeln!(out, "le {}: {} <= {}", c.name, self.fmt_terms(&c.expr), 0.0 - c.expr.constant);
        }
        for p in &self.psd {
            let _ = writeln!(out, "psd {} {}", p.name, p.size);
            for (&(r, c), e) in &p.entries {
                let _ = writeln!(
                    out,
                    "  ({},{}) {} + {}",
                    r + 1,
                    c + 1,
                    self.fmt_terms(e),
                    e.constant
                );
            }
        }
        out
    }
}

impl fmt::Display for ConicProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// Optional strengthenings and the zero-entry reduction for the matrix τ₊ˢᵒˢ builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BuilderOptions {
    /// Eliminate rows/columns of `X` indexed by zero entries of `A`.
    pub use_reduced: bool,
    /// Add `X ≥ 0` entrywise.
    pub add_entrywise_nonneg: bool,
    /// Add `X_{ij,kl} ≥ (2 − t) A_ij A_kl`.
    pub add_two_minus_t: bool,
    /// Use `X_{ij,ij} = A_ij²` instead of `≤`.
    pub diag_as_equality: bool,
}

impl Default for BuilderOptions {
    fn default() -> Self {
        Self {
            use_reduced: true,
            add_entrywise_nonneg: false,
            add_two_minus_t: false,
            diag_as_equality: false,
        }
    }
}

fn pos_label(i: usize, j: usize) -> String {
    format!("({},{})", i + 1, j + 1)
}

fn multi_label(idx: &[usize]) -> String {
    let parts: Vec<String> = idx.iter().map(|i| (i + 1).to_string()).collect();
    format!("({})", parts.join(","))
}

/// Emits `X[a] = X[b]` (or `X[a] = 0` when `b` is `None`) with canonical
/// orientation, skipping self-equalities and duplicates.
struct EqualityEmitter {
    block: usize,
    seen: HashSet<((usize, usize), Option<(usize, usize)>)>,
}

impl EqualityEmitter {
    fn new(block: usize) -> Self {
        Self { block, seen: HashSet::new() }
    }

    fn key(p: (usize, usize)) -> (usize, usize) {
        (p.0.min(p.1), p.0.max(p.1))
    }

    fn equal(&mut self, prob: &mut ConicProblem, name: String, a: (usize, usize), b: (usize, usize)) {
        let (a, b) = (Self::key(a), Self::key(b));
        if a == b {
            return;
        }
        let (lo, hi) = (a.min(b), a.max(b));
        if self.seen.insert((lo, Some(hi))) {
            prob.add_eq(
                name,
                LinExpr::var(Var::entry(self.block, lo.0, lo.1)).term(Var::entry(self.block, hi.0, hi.1), -1.0),
            );
        }
    }

    fn zero(&mut self, prob: &mut ConicProblem, name: String, a: (usize, usize)) {
        let a = Self::key(a);
        if self.seen.insert((a, None)) {
            prob.add_eq(name, LinExpr::var(Var::entry(self.block, a.0, a.1)));
        }
    }
}

/// Adds `t`, the block `X` and the bordered constraint `[[t, aᵀ], [a, X]] ⪰ 0`.
fn bordered(prob: &mut ConicProblem, a: &[f64], labels: Vec<String>) -> (Var, usize) {
    let t = prob.add_scalar("t");
    let x = prob.add_block("X", a.len(), labels);
    let mut psd = PsdConstraint::new("bordered", a.len() + 1);
    psd.set(0, 0, LinExpr::var(t));
    for (p, &v) in a.iter().enumerate() {
        psd.set(0, p + 1, LinExpr::constant(v));
        for q in p..a.len() {
            psd.set(p + 1, q + 1, LinExpr::var(Var::entry(x, p, q)));
        }
    }
    prob.add_psd(psd);
    prob.minimize(LinExpr::var(t));
    (t, x)
}

fn diag_bound(prob: &mut ConicProblem, x: usize, p: usize, value: f64, label: &str, equality: bool) {
    let e = LinExpr::var(Var::entry(x, p, p)).plus(-value * value);
    if equality {
        prob.add_eq(format!("diag{label}"), e);
    } else {
        prob.add_le(format!("diag{label}"), e);
    }
}

/// The τ₊ˢᵒˢ relaxation of the nonnegative rank of a matrix.
///
/// With `use_reduced` only support entries index `X`, and each strictly
/// ordered pair `(i,j) < (k,l)` whose minor touches the support contributes
/// one of `X_{ij,kl} = 0`, `X_{il,kj} = 0` or `X_{ij,kl} = X_{il,kj}`.
/// Without it, `X` is indexed by all of `vec(A)`, every pair contributes
/// the plain minor equality, and the rows of `X` at zero entries are pinned
/// to zero (`vanish` rows), which `X_{ij,ij} ≤ 0` already implies.
pub fn build_tau_plus_matrix(a: &NonnegMatrix, opts: &BuilderOptions) -> Result<ConicProblem> {
    if a.support().is_empty() {
        return Err(Error::ZeroInput);
    }
    let (m, n) = (a.rows(), a.cols());
    let scale = 1.0 / a.max_entry();

    // Column-major, like vec(A).
    let mut index = vec![None; m * n];
    let mut entries = Vec::new();
    let mut values = Vec::new();
    for j in 0..n {
        for i in 0..m {
            if !opts.use_reduced || a.is_supported(i, j) {
                index[i * n + j] = Some(entries.len());
                entries.push((i, j));
                values.push(a.get(i, j) * scale);
            }
        }
    }
    let at = |i: usize, j: usize| index[i * n + j];

    let mut prob = ConicProblem::new();
    let labels = entries.iter().map(|&(i, j)| pos_label(i, j)).collect();
    let (t, x) = bordered(&mut prob, &values, labels);

    for (p, &(i, j)) in entries.iter().enumerate() {
        diag_bound(&mut prob, x, p, values[p], &pos_label(i, j), opts.diag_as_equality);
    }

    let mut eqs = EqualityEmitter::new(x);
    for pair in MatrixIndexPair::strictly_ordered(m, n) {
        let ((i, j), (k, l)) = (pair.first, pair.second);
        let name = |kind: &str| format!("{kind}{}{}", pos_label(i, j), pos_label(k, l));
        if opts.use_reduced {
            let direct = a.is_supported(i, j) && a.is_supported(k, l);
            let cross = a.is_supported(i, l) && a.is_supported(k, j);
            match (direct, cross) {
                (false, false) => {}
                (true, false) => {
                    let p = (at(i, j).unwrap(), at(k, l).unwrap());
                    eqs.zero(&mut prob, name("zero"), p);
                }
                (false, true) => {
                    let p = (at(i, l).unwrap(), at(k, j).unwrap());
                    eqs.zero(&mut prob, name("zero"), p);
                }
                (true, true) => {
                    let p = (at(i, j).unwrap(), at(k, l).unwrap());
                    let q = (at(i, l).unwrap(), at(k, j).unwrap());
                    eqs.equal(&mut prob, name("minor"), p, q);
                }
            }
        } else {
            let p = (at(i, j).unwrap(), at(k, l).unwrap());
            let q = (at(i, l).unwrap(), at(k, j).unwrap());
            eqs.equal(&mut prob, name("minor"), p, q);
        }
    }
    if !opts.use_reduced {
        // X_{ij,ij} <= 0 and PSD force the whole row to vanish. Stating it
        // keeps the error at the feasibility tolerance instead of its root.
        for (p, &(i, j)) in entries.iter().enumerate() {
            if a.is_supported(i, j) {
                continue;
            }
            for (q, &(k, l)) in entries.iter().enumerate() {
                if q != p {
                    eqs.zero(&mut prob, format!("vanish{}{}", pos_label(i, j), pos_label(k, l)), (p, q));
                }
            }
        }
    }

    for p in 0..entries.len() {
        for q in p..entries.len() {
            let name = format!("{}{}", pos_label(entries[p].0, entries[p].1), pos_label(entries[q].0, entries[q].1));
            let xe = Var::entry(x, p, q);
            if opts.add_entrywise_nonneg && p != q {
                prob.add_le(format!("nonneg{name}"), LinExpr::constant(0.0).term(xe, -1.0));
            }
            if opts.add_two_minus_t {
                let w = values[p] * values[q];
                prob.add_le(
                    format!("two_minus_t{name}"),
                    LinExpr::constant(2.0 * w).term(xe, -1.0).term(t, -w),
                );
            }
        }
    }
    Ok(prob)
}

/// The coordinate swap `swap(i, j, k)`: `i` with its `k`-th entry replaced by `j[k]`.
pub fn swap_index(i: &[usize], j: &[usize], k: usize) -> Vec<usize> {
    let mut out = i.to_vec();
    out[k] = j[k];
    out
}

/// An equivalence class of entries of `X` under the rank-one (Segre) equations.
///
/// Members are unordered pairs of linear tensor indices `(a, b)` with `a ≤ b`;
/// two pairs are equivalent iff they have the same unordered pair of values
/// at every coordinate. The first member is the canonical representative
/// (coordinatewise minimum, coordinatewise maximum).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegreClass {
    pub members: Vec<(usize, usize)>,
}

/// All Segre classes of a tensor shape (including singleton classes), in
/// order of their canonical representative.
pub fn segre_classes(shape: &[usize]) -> Vec<SegreClass> {
    let len: usize = shape.iter().product();
    let decode = |mut k: usize| {
        let mut idx = vec![0; shape.len()];
        for (slot, &d) in idx.iter_mut().zip(shape).rev() {
            *slot = k % d;
            k /= d;
        }
        idx
    };
    let encode = |idx: &[usize]| idx.iter().zip(shape).fold(0, |acc, (&i, &d)| acc * d + i);
    let multi: Vec<Vec<usize>> = (0..len).map(decode).collect();

    let mut classes: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for a in 0..len {
        for b in a..len {
            let lo: Vec<usize> = multi[a].iter().zip(&multi[b]).map(|(x, y)| *x.min(y)).collect();
            let hi: Vec<usize> = multi[a].iter().zip(&multi[b]).map(|(x, y)| *x.max(y)).collect();
            classes.entry((encode(&lo), encode(&hi))).or_default().push((a, b));
        }
    }
    classes
        .into_iter()
        .map(|(rep, mut members)| {
            members.sort_by_key(|&m| (m != rep, m));
            SegreClass { members }
        })
        .collect()
}

/// Generic Segre-path builder for tensors of any order ≥ 2.
///
/// `X` is indexed by the support of `A` (storage order); each Segre class
/// whose members all lie in the support is tied to its representative by a
/// star of equalities, and a class touching a zero entry forces its
/// surviving members to zero.
pub fn build_tau_plus_segre(a: &NonnegTensor) -> Result<ConicProblem> {
    let support_pos: Vec<usize> = (0..a.len()).filter(|&k| a.data()[k] > a.eps_zero()).collect();
    if support_pos.is_empty() {
        return Err(Error::ZeroInput);
    }
    let scale = 1.0 / a.max_entry();
    let mut index = vec![None; a.len()];
    for (p, &k) in support_pos.iter().enumerate() {
        index[k] = Some(p);
    }
    let values: Vec<f64> = support_pos.iter().map(|&k| a.data()[k] * scale).collect();
    let labels: Vec<String> = support_pos.iter().map(|&k| multi_label(&a.multi_index(k))).collect();

    let mut prob = ConicProblem::new();
    let (_, x) = bordered(&mut prob, &values, labels.clone());
    for (p, &v) in values.iter().enumerate() {
        diag_bound(&mut prob, x, p, v, &labels[p], false);
    }

    let pair_label = |(u, v): (usize, usize)| {
        format!("[{},{}]", multi_label(&a.multi_index(u)), multi_label(&a.multi_index(v)))
    };
    let mut eqs = EqualityEmitter::new(x);
    for class in segre_classes(a.shape()) {
        if class.members.len() < 2 {
            continue;
        }
        let live = |&(u, v): &(usize, usize)| Some((index[u]?, index[v]?));
        let all_live = class.members.iter().all(|m| live(m).is_some());
        let rep = class.members[0];
        for &member in &class.members {
            let Some(p) = live(&member) else { continue };
            if all_live {
                if member != rep {
                    let q = live(&rep).unwrap();
                    eqs.equal(&mut prob, format!("segre{}={}", pair_label(rep), pair_label(member)), q, p);
                }
            } else {
                eqs.zero(&mut prob, format!("segre_zero{}", pair_label(member)), p);
            }
        }
    }
    Ok(prob)
}

/// τ₊ˢᵒˢ for a tensor. Order-2 inputs route to [`build_tau_plus_matrix`]
/// with default options.
pub fn build_tau_plus_tensor(a: &NonnegTensor) -> Result<ConicProblem> {
    if a.order() == 2 {
        let m = NonnegMatrix::with_eps_zero(a.shape()[0], a.shape()[1], a.data().to_vec(), a.eps_zero())?;
        return build_tau_plus_matrix(&m, &BuilderOptions::default());
    }
    build_tau_plus_segre(a)
}

/// τ_cpˢᵒˢ: the matrix relaxation over the full `n² × n²` index set with the
/// extra constraint `A ⊗ A − X ⪰ 0`.
pub fn build_tau_cp(a: &CpInputMatrix) -> Result<ConicProblem> {
    let n = a.n();
    let mat = a.as_matrix();
    if n == 0 || mat.max_entry() <= 0.0 {
        return Err(Error::ZeroInput);
    }
    // τ_cp(DAD) = τ_cp(A) for positive diagonal D; a unit diagonal keeps
    // A ⊗ A − X well conditioned when the diagonal spans several magnitudes.
    let d: Vec<f64> = (0..n)
        .map(|i| if mat.get(i, i) > 0.0 { 1.0 / mat.get(i, i).sqrt() } else { 1.0 })
        .collect();
    let mut scaled = mat.to_dmatrix();
    for i in 0..n {
        for j in 0..n {
            scaled[(i, j)] *= d[i] * d[j];
        }
    }
    let max = scaled.iter().fold(0.0f64, |m, v| m.max(*v));
    scaled /= max;
    // vec index of (i, j) is j*n + i.
    let at = |i: usize, j: usize| j * n + i;
    let values: Vec<f64> = (0..n * n).map(|p| scaled[(p % n, p / n)]).collect();
    let labels: Vec<String> = (0..n * n).map(|p| pos_label(p % n, p / n)).collect();

    let mut prob = ConicProblem::new();
    let (_, x) = bordered(&mut prob, &values, labels.clone());
    for (p, &v) in values.iter().enumerate() {
        diag_bound(&mut prob, x, p, v, &labels[p], false);
    }

    let kron: DMatrix<f64> = kronecker(&scaled, &scaled);
    let mut upper = PsdConstraint::new("kron_minus_x", n * n);
    for p in 0..n * n {
        for q in p..n * n {
            upper.set(p, q, LinExpr::constant(kron[(p, q)]).term(Var::entry(x, p, q), -1.0));
        }
    }
    prob.add_psd(upper);

    let mut eqs = EqualityEmitter::new(x);
    for pair in MatrixIndexPair::strictly_ordered(n, n) {
        let ((i, j), (k, l)) = (pair.first, pair.second);
        eqs.equal(
            &mut prob,
            format!("minor{}{}", pos_label(i, j), pos_label(k, l)),
            (at(i, j), at(k, l)),
            (at(i, l), at(k, j)),
        );
    }
    Ok(prob)
}

/// Complement Lovász theta: `min t` s.t. `[[t, 1ᵀ], [1, X]] ⪰ 0`,
/// `X_uu = 1`, `X_uv = 0` on edges.
pub fn build_theta_bar(g: &Graph) -> Result<ConicProblem> {
    let n = g.vertex_count();
    if n == 0 {
        return Err(Error::InvalidParameter("theta of a graph without vertices".into()));
    }
    let mut prob = ConicProblem::new();
    let labels = (0..n).map(|u| (u + 1).to_string()).collect();
    let (_, x) = bordered(&mut prob, &vec![1.0; n], labels);
    for u in 0..n {
        prob.add_eq(format!("unit({})", u + 1), LinExpr::var(Var::entry(x, u, u)).plus(-1.0));
    }
    for (u, v) in g.edges() {
        prob.add_eq(format!("edge({},{})", u + 1, v + 1), LinExpr::var(Var::entry(x, u, v)));
    }
    Ok(prob)
}

/// Covering LP: `min Σ x_s` s.t. `x ≥ 0` and `Σ_{s ∋ e} x_s ≥ 1` for every
/// element `e`. `covering[e]` lists the sets containing element `e`.
pub fn build_covering_lp(set_count: usize, covering: &[Vec<usize>]) -> Result<ConicProblem> {
    let mut prob = ConicProblem::new();
    let vars: Vec<Var> = (0..set_count).map(|s| prob.add_scalar(format!("x{}", s + 1))).collect();
    for (s, &v) in vars.iter().enumerate() {
        prob.add_le(format!("nonneg({})", s + 1), LinExpr::constant(0.0).term(v, -1.0));
    }
    for (e, sets) in covering.iter().enumerate() {
        if sets.is_empty() {
            return Err(Error::InvalidProblem(format!("element {} is not covered by any set", e + 1)));
        }
        let mut expr = LinExpr::constant(1.0);
        for &s in sets {
            expr = expr.term(vars[s], -1.0);
        }
        prob.add_le(format!("cover({})", e + 1), expr);
    }
    let mut obj = LinExpr::default();
    for &v in &vars {
        obj = obj.term(v, 1.0);
    }
    prob.minimize(obj);
    Ok(prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    fn m(rows: &[&[f64]]) -> NonnegMatrix {
        NonnegMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn names<'a>(cs: &'a [Constraint], prefix: &str) -> Vec<&'a str> {
        cs.iter().filter(|c| c.name.starts_with(prefix)).map(|c| c.name.as_str()).collect()
    }

    #[test]
    fn all_ones_2x2_counts() {
        let p = build_tau_plus_matrix(&NonnegMatrix::ones(2, 2), &BuilderOptions::default()).unwrap();
        assert_eq!(p.blocks()[0].size, 4);
        assert_eq!(p.equalities().len(), 1);
        assert_eq!(names(p.equalities(), "minor"), vec!["minor(1,1)(2,2)"]);
        assert_eq!(p.inequalities().len(), 4);
        assert_eq!(p.psd_constraints().len(), 1);
        assert_eq!(p.psd_constraints()[0].size, 5);
        p.validate().unwrap();
    }

    #[test]
    fn identity_2x2_reduced_has_one_zero_equality() {
        let p = build_tau_plus_matrix(&NonnegMatrix::identity(2), &BuilderOptions::default()).unwrap();
        assert_eq!(p.blocks()[0].size, 2);
        assert_eq!(p.equalities().len(), 1);
        let eq = &p.equalities()[0];
        assert_eq!(eq.name, "zero(1,1)(2,2)");
        // X block indexes (1,1) then (2,2); the zero entry is their off-diagonal.
        assert_eq!(eq.expr.terms, vec![(Var::entry(0, 0, 1), 1.0)]);
        assert_eq!(p.inequalities().len(), 2);
    }

    #[test]
    fn full_support_3x3_counts() {
        let p = build_tau_plus_matrix(&NonnegMatrix::ones(3, 3), &BuilderOptions::default()).unwrap();
        assert_eq!(p.blocks()[0].size, 9);
        assert_eq!(names(p.equalities(), "minor").len(), 9);
        assert_eq!(p.equalities().len(), 9);
        assert_eq!(p.inequalities().len(), 9);
    }

    #[test]
    fn minor_count_formula_full_support() {
        for (r, c) in [(2, 3), (3, 4), (4, 4), (2, 5)] {
            let p = build_tau_plus_matrix(&NonnegMatrix::ones(r, c), &BuilderOptions::default()).unwrap();
            let choose2 = |k: usize| k * (k - 1) / 2;
            assert_eq!(p.equalities().len(), choose2(r) * choose2(c));
            assert_eq!(p.inequalities().len(), r * c);
        }
    }

    #[test]
    fn full_builder_keeps_zero_entries() {
        let opts = BuilderOptions { use_reduced: false, ..Default::default() };
        let p = build_tau_plus_matrix(&NonnegMatrix::identity(2), &opts).unwrap();
        assert_eq!(p.blocks()[0].size, 4);
        assert_eq!(p.inequalities().len(), 4);
        // One minor plus the off-diagonal entries of rows (2,1) and (1,2).
        assert_eq!(p.equalities().len(), 6);
        let names: Vec<&str> = p.equalities().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names[0], "minor(1,1)(2,2)");
        assert!(names.contains(&"vanish(2,1)(1,1)"));
        assert!(names.contains(&"vanish(1,2)(2,2)"));
    }

    #[test]
    fn strengthening_rows() {
        let a = NonnegMatrix::ones(2, 2);
        let opts = BuilderOptions { add_entrywise_nonneg: true, add_two_minus_t: true, ..Default::default() };
        let p = build_tau_plus_matrix(&a, &opts).unwrap();
        assert_eq!(names(p.inequalities(), "nonneg").len(), 6);
        assert_eq!(names(p.inequalities(), "two_minus_t").len(), 10);
        let eq = BuilderOptions { diag_as_equality: true, ..Default::default() };
        let p = build_tau_plus_matrix(&a, &eq).unwrap();
        assert_eq!(names(p.equalities(), "diag").len(), 4);
        assert!(p.inequalities().is_empty());
    }

    #[test]
    fn zero_matrix_is_rejected() {
        let z = NonnegMatrix::new(2, 2, vec![0.0; 4]).unwrap();
        assert_eq!(build_tau_plus_matrix(&z, &BuilderOptions::default()), Err(Error::ZeroInput));
        let t = NonnegTensor::new(vec![2, 2, 2], vec![0.0; 8]).unwrap();
        assert_eq!(build_tau_plus_tensor(&t), Err(Error::ZeroInput));
    }

    #[test]
    fn builder_rescales_input() {
        let a = m(&[&[4.0, 2.0], &[2.0, 1.0]]);
        let p = build_tau_plus_matrix(&a, &BuilderOptions::default()).unwrap();
        let bordered = &p.psd_constraints()[0];
        assert_eq!(bordered.entries[&(0, 1)].constant, 1.0);
        assert_eq!(bordered.entries[&(0, 2)].constant, 0.5);
    }

    #[test]
    fn swap_index_example() {
        assert_eq!(swap_index(&[0, 1, 0], &[1, 0, 1], 1), vec![0, 0, 0]);
    }

    /// Closure of a pair under repeated coordinate swaps, by breadth-first search.
    fn swap_closure(shape: &[usize], a: Vec<usize>, b: Vec<usize>) -> Vec<(Vec<usize>, Vec<usize>)> {
        let norm = |x: Vec<usize>, y: Vec<usize>| if x <= y { (x, y) } else { (y, x) };
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([norm(a, b)]);
        while let Some((x, y)) = queue.pop_front() {
            if !seen.insert((x.clone(), y.clone())) {
                continue;
            }
            for k in 0..shape.len() {
                queue.push_back(norm(swap_index(&x, &y, k), swap_index(&y, &x, k)));
            }
        }
        let mut out: Vec<_> = seen.into_iter().collect();
        out.sort();
        out
    }

    #[test]
    fn segre_classes_match_brute_force_closure() {
        for shape in [vec![2, 2, 2], vec![2, 3, 2], vec![3, 2], vec![2, 2, 2, 2]] {
            let t = NonnegTensor::new(shape.clone(), vec![1.0; shape.iter().product()]).unwrap();
            let classes = segre_classes(&shape);
            let total: usize = classes.iter().map(|c| c.members.len()).sum();
            let len = t.len();
            assert_eq!(total, len * (len + 1) / 2);
            for class in &classes {
                let (a, b) = class.members[0];
                let mut expect = swap_closure(&shape, t.multi_index(a), t.multi_index(b));
                let mut got: Vec<_> = class
                    .members
                    .iter()
                    .map(|&(u, v)| {
                        let (x, y) = (t.multi_index(u), t.multi_index(v));
                        if x <= y { (x, y) } else { (y, x) }
                    })
                    .collect();
                got.sort();
                expect.sort();
                assert_eq!(got, expect);
            }
        }
    }

    #[test]
    fn tensor_2x2x2_all_ones() {
        let t = NonnegTensor::new(vec![2, 2, 2], vec![1.0; 8]).unwrap();
        let classes = segre_classes(t.shape());
        let big = classes
            .iter()
            .find(|c| c.members[0] == (0, 7))
            .expect("class of ((1,1,1),(2,2,2))");
        assert_eq!(big.members.len(), 4);
        let chained: usize = classes.iter().map(|c| c.members.len() - 1).sum();

        let p = build_tau_plus_tensor(&t).unwrap();
        assert_eq!(p.blocks()[0].size, 8);
        assert_eq!(p.inequalities().len(), 8);
        assert_eq!(p.equalities().len(), chained);
        let from_big = p
            .equalities()
            .iter()
            .filter(|c| c.name.starts_with("segre[(1,1,1),(2,2,2)]"))
            .count();
        assert_eq!(from_big, 3);
        p.validate().unwrap();
    }

    #[test]
    fn tensor_zero_entries_are_eliminated() {
        let mut data = vec![1.0; 8];
        data[7] = 0.0;
        let t = NonnegTensor::new(vec![2, 2, 2], data).unwrap();
        let p = build_tau_plus_tensor(&t).unwrap();
        assert_eq!(p.blocks()[0].size, 7);
        assert!(p.equalities().iter().any(|c| c.name.starts_with("segre_zero")));
        p.validate().unwrap();
    }

    #[test]
    fn segre_path_at_order_two_matches_minor_pairs() {
        for (r, c) in [(2, 2), (3, 3), (2, 4), (3, 4)] {
            let mut from_segre: Vec<((usize, usize), (usize, usize))> = segre_classes(&[r, c])
                .into_iter()
                .filter(|cl| cl.members.len() > 1)
                .map(|cl| {
                    assert_eq!(cl.members.len(), 2);
                    (cl.members[0], cl.members[1])
                })
                .collect();
            // Linear index of (i, j) in row-major storage is i*c + j.
            let mut from_minors: Vec<_> = MatrixIndexPair::strictly_ordered(r, c)
                .map(|p| {
                    let x = p.crossed();
                    let lin = |(i, j): (usize, usize)| i * c + j;
                    ((lin(p.first), lin(p.second)), (lin(x.first), lin(x.second)))
                })
                .collect();
            from_segre.sort();
            from_minors.sort();
            assert_eq!(from_segre, from_minors);

            let t = NonnegTensor::new(vec![r, c], vec![1.0; r * c]).unwrap();
            let p = build_tau_plus_segre(&t).unwrap();
            assert_eq!(p.equalities().len(), from_minors.len());
        }
    }

    #[test]
    fn cp_builder_sizes() {
        let a = CpInputMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let p = build_tau_cp(&a).unwrap();
        assert_eq!(p.blocks()[0].size, 4);
        assert_eq!(p.equalities().len(), 1);
        assert_eq!(p.inequalities().len(), 4);
        assert_eq!(p.psd_constraints().len(), 2);
        assert_eq!(p.psd_constraints()[1].size, 4);
        p.validate().unwrap();

        let a = crate::oracles::gen_cp_example(0.0, 0.0).unwrap();
        let p = build_tau_cp(&a).unwrap();
        assert_eq!(p.blocks()[0].size, 25);
        assert_eq!(p.psd_constraints()[0].size, 26);
        assert_eq!(p.psd_constraints()[1].size, 25);
    }

    #[test]
    fn cp_builder_emits_no_duplicate_equalities() {
        for n in 1..=5 {
            let a = CpInputMatrix::new(n, vec![1.0; n * n]).unwrap();
            let p = build_tau_cp(&a).unwrap();
            let choose2 = n * (n.max(1) - 1) / 2;
            assert_eq!(p.equalities().len(), choose2 * choose2);
            let mut keys = HashSet::new();
            for c in p.equalities() {
                let mut vars: Vec<Var> = c.expr.terms.iter().map(|&(v, _)| v).collect();
                vars.sort();
                assert_eq!(vars.len(), 2);
                assert!(vars[0] != vars[1]);
                assert!(keys.insert(vars), "duplicate equality {}", c.name);
            }
        }
    }

    #[test]
    fn theta_bar_builder() {
        let g = Graph::complete(3);
        let p = build_theta_bar(&g).unwrap();
        assert_eq!(p.equalities().len(), 3 + 3);
        assert!(build_theta_bar(&Graph::empty(0)).is_err());
    }

    #[test]
    fn validation_catches_bad_problems() {
        let mut p = ConicProblem::new();
        let t = p.add_scalar("t");
        p.add_le("a", LinExpr::var(t));
        p.add_le("a", LinExpr::var(t));
        assert!(p.validate().is_err());

        let mut p = ConicProblem::new();
        p.add_eq("e", LinExpr::var(Var::Scalar(3)));
        assert!(p.validate().is_err());

        let mut p = ConicProblem::new();
        let t = p.add_scalar("t");
        p.add_eq("e", LinExpr::var(t).plus(f64::INFINITY));
        assert!(p.validate().is_err());
    }

    #[test]
    fn dump_is_stable_and_one_based() {
        let p = build_tau_plus_matrix(&NonnegMatrix::ones(2, 2), &BuilderOptions::default()).unwrap();
        let d = p.dump();
        assert_eq!(d, p.dump());
        assert!(d.starts_with("conic-problem v1\nscalar t\nblock X 4 [(1,1) (2,1) (1,2) (2,2)]\n"));
        assert!(d.contains("eq minor(1,1)(2,2): 1*X[1,4] + -1*X[2,3] = 0\n"));
        assert!(d.contains("le diag(1,1): 1*X[1,1] <= 1\n"));
        assert!(d.contains("psd bordered 5\n  (1,1) 1*t + 0\n"));
    }

    #[test]
    fn permute_block_relabels_entries() {
        let mut p = build_tau_plus_matrix(&NonnegMatrix::ones(2, 2), &BuilderOptions::default()).unwrap();
        p.permute_block(0, &[3, 2, 1, 0]).unwrap();
        p.validate().unwrap();
        assert_eq!(p.blocks()[0].labels, vec!["(2,2)", "(1,2)", "(2,1)", "(1,1)"]);
        assert!(p.permute_block(0, &[0, 0, 1, 2]).is_err());
    }
}
