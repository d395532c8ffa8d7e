//! Solving [`ConicProblem`]s.
//!
//! This is the only module that knows how problems are actually solved. The
//! backend is the Clarabel interior-point solver; problems are mapped to its
//! standard form `Ax + s = b, s ∈ K` with `K` a product of the zero cone
//! (equalities), the nonnegative orthant (inequalities) and PSD triangle cones.

use std::collections::BTreeMap;
use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ConicProblem, LinExpr, Var};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub rel_gap_tol: f64,
    pub feas_tol: f64,
    pub max_iterations: u32,
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { rel_gap_tol: 1e-8, feas_tol: 1e-8, max_iterations: 200, verbose: false }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { rel_gap_tol: tol, feas_tol: tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |x: f64| x > 0.0 && x < 1.0;
        if !in_range(self.rel_gap_tol) || !in_range(self.feas_tol) {
            return Err(Error::InvalidParameter(format!(
                "solver tolerances must lie in (0, 1), got gap {} and feasibility {}",
                self.rel_gap_tol, self.feas_tol
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NearOptimal => "near-optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration-limit",
            SolveStatus::NumericalFailure => "numerical-failure",
        }
    }

    pub fn is_solved(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Primal and dual values of a solved problem.
///
/// The dual multipliers are the dual objects of the relaxation: for τ₊ˢᵒˢ,
/// `inequality_duals` on the `diag` rows are the `D_ij`, `equality_duals` on
/// the minor rows are the `ν`, and the PSD dual of the bordered constraint is
/// the Gram matrix of the sum-of-squares certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub scalars: Vec<f64>,
    pub blocks: Vec<DMatrix<f64>>,
    pub equality_duals: Vec<f64>,
    pub inequality_duals: Vec<f64>,
    pub psd_duals: Vec<DMatrix<f64>>,
    pub iterations: u32,
    pub wall_time: Duration,
}

impl ConicSolution {
    fn failed(status: SolveStatus, wall_time: Duration) -> Self {
        Self {
            status,
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            scalars: Vec::new(),
            blocks: Vec::new(),
            equality_duals: Vec::new(),
            inequality_duals: Vec::new(),
            psd_duals: Vec::new(),
            iterations: 0,
            wall_time,
        }
    }

    pub fn gap(&self) -> f64 {
        (self.primal_objective - self.dual_objective).abs()
    }
}

/// The certified lower bound carried by a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCertificate {
    /// Dual objective value.
    pub value: f64,
    pub primal: f64,
    pub gap: f64,
    pub status: SolveStatus,
}

/// Reports the dual objective as the bound: a dual feasible point bounds the
/// minimum from below even when the primal iterate is slightly infeasible.
pub fn extract_bound(s: &ConicSolution) -> Result<BoundCertificate> {
    if !s.status.is_solved() {
        return Err(Error::Solver(s.status));
    }
    Ok(BoundCertificate {
        value: s.dual_objective,
        primal: s.primal_objective,
        gap: s.gap(),
        status: s.status,
    })
}

/// Column layout of the flattened variable vector.
struct Layout {
    block_offsets: Vec<usize>,
    len: usize,
}

impl Layout {
    fn new(p: &ConicProblem) -> Self {
        let mut offset = p.scalars().len();
        let mut block_offsets = Vec::with_capacity(p.blocks().len());
        for b in p.blocks() {
            block_offsets.push(offset);
            offset += b.size * (b.size + 1) / 2;
        }
        Self { block_offsets, len: offset }
    }

    /// Upper triangle, column-major: `(r, c)` with `r ≤ c` sits at `c(c+1)/2 + r`.
    fn column(&self, v: Var) -> usize {
        match v {
            Var::Scalar(k) => k,
            Var::Entry { block, row, col } => self.block_offsets[block] + col * (col + 1) / 2 + row,
        }
    }
}

fn triangle_index(r: usize, c: usize) -> usize {
    c * (c + 1) / 2 + r
}

struct StandardForm {
    a: CscMatrix<f64>,
    b: Vec<f64>,
    q: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

fn standard_form(p: &ConicProblem, layout: &Layout) -> StandardForm {
    let mut coeffs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut b = Vec::new();
    let mut cones = Vec::new();
    let mut row = 0;

    let push_row = |coeffs: &mut BTreeMap<(usize, usize), f64>, row: usize, e: &LinExpr, sign: f64| {
        for &(v, c) in &e.terms {
            *coeffs.entry((row, layout.column(v))).or_default() += sign * c;
        }
    };

    for c in p.equalities() {
        push_row(&mut coeffs, row, &c.expr, 1.0);
        b.push(-c.expr.constant);
        row += 1;
    }
    if !p.equalities().is_empty() {
        cones.push(SupportedConeT::ZeroConeT(p.equalities().len()));
    }
    for c in p.inequalities() {
        push_row(&mut coeffs, row, &c.expr, 1.0);
        b.push(-c.expr.constant);
        row += 1;
    }
    if !p.inequalities().is_empty() {
        cones.push(SupportedConeT::NonnegativeConeT(p.inequalities().len()));
    }
    for psd in p.psd_constraints() {
        let dim = psd.size * (psd.size + 1) / 2;
        let mut rhs = vec![0.0; dim];
        for (&(r, c), e) in &psd.entries {
            let k = triangle_index(r, c);
            let w = if r == c { 1.0 } else { std::f64::consts::SQRT_2 };
            rhs[k] = w * e.constant;
            push_row(&mut coeffs, row + k, e, -w);
        }
        b.extend(rhs);
        row += dim;
        cones.push(SupportedConeT::PSDTriangleConeT(psd.size));
    }

    let (mut ii, mut jj, mut vv) = (Vec::new(), Vec::new(), Vec::new());
    for ((r, c), v) in coeffs {
        if v != 0.0 {
            ii.push(r);
            jj.push(c);
            vv.push(v);
        }
    }
    let mut q = vec![0.0; layout.len];
    for &(v, c) in &p.objective().terms {
        q[layout.column(v)] += c;
    }
    StandardForm { a: CscMatrix::new_from_triplets(row, layout.len, ii, jj, vv), b, q, cones }
}

fn unpack_triangle(values: &[f64], size: usize, off_diag_scale: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(size, size);
    for c in 0..size {
        for r in 0..=c {
            let v = values[triangle_index(r, c)];
            let v = if r == c { v } else { v * off_diag_scale };
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
    m
}

fn map_status(s: SolverStatus) -> SolveStatus {
    match s {
        SolverStatus::Solved => SolveStatus::Optimal,
        SolverStatus::AlmostSolved => SolveStatus::NearOptimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
        SolverStatus::MaxIterations | SolverStatus::MaxTime => SolveStatus::IterationLimit,
        _ => SolveStatus::NumericalFailure,
    }
}

/// Solves `p`. Invalid problems or options are rejected up front; numerical
/// trouble inside the backend is reported through the status, never a panic.
pub fn solve(p: &ConicProblem, opts: &SolverOptions) -> Result<ConicSolution> {
    p.validate()?;
    opts.validate()?;
    let start = Instant::now();
    let layout = Layout::new(p);
    let form = standard_form(p, &layout);

    let settings = DefaultSettingsBuilder::default()
        .verbose(opts.verbose)
        .max_iter(opts.max_iterations)
        .tol_gap_abs(opts.rel_gap_tol)
        .tol_gap_rel(opts.rel_gap_tol)
        .tol_feas(opts.feas_tol)
        .chordal_decomposition_enable(false)
        .max_threads(1)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("solver settings: {e}")))?;

    let p_zero = CscMatrix::zeros((layout.len, layout.len));
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        let mut solver = DefaultSolver::new(&p_zero, &form.q, &form.a, &form.b, &form.cones, settings).ok()?;
        solver.solve();
        Some(solver.solution)
    }));
    let Ok(Some(raw)) = outcome else {
        return Ok(ConicSolution::failed(SolveStatus::NumericalFailure, start.elapsed()));
    };

    let constant = p.objective().constant;
    let primal_objective = raw.obj_val + constant;
    let dual_objective = raw.obj_val_dual + constant;
    let mut status = map_status(raw.status);
    if status == SolveStatus::Optimal
        && (primal_objective - dual_objective).abs() > opts.rel_gap_tol * (1.0 + primal_objective.abs())
    {
        status = SolveStatus::NearOptimal;
    }

    let scalars = raw.x[..p.scalars().len()].to_vec();
    let blocks = p
        .blocks()
        .iter()
        .zip(&layout.block_offsets)
        .map(|(b, &off)| unpack_triangle(&raw.x[off..], b.size, 1.0))
        .collect();
    let n_eq = p.equalities().len();
    let n_le = p.inequalities().len();
    let equality_duals = raw.z[..n_eq].to_vec();
    let inequality_duals = raw.z[n_eq..n_eq + n_le].to_vec();
    let mut offset = n_eq + n_le;
    let mut psd_duals = Vec::with_capacity(p.psd_constraints().len());
    for c in p.psd_constraints() {
        psd_duals.push(unpack_triangle(&raw.z[offset..], c.size, std::f64::consts::FRAC_1_SQRT_2));
        offset += c.size * (c.size + 1) / 2;
    }

    Ok(ConicSolution {
        status,
        primal_objective,
        dual_objective,
        scalars,
        blocks,
        equality_duals,
        inequality_duals,
        psd_duals,
        iterations: raw.iterations,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorial::Graph;
    use crate::model::{build_tau_plus_matrix, build_theta_bar, BuilderOptions, PsdConstraint};
    use crate::types::NonnegMatrix;

    fn lp_t_ge(c: f64) -> ConicProblem {
        let mut p = ConicProblem::new();
        let t = p.add_scalar("t");
        p.add_le("t_ge", LinExpr::constant(c).term(t, -1.0));
        p.minimize(LinExpr::var(t));
        p
    }

    #[test]
    fn simple_lp() {
        let s = solve(&lp_t_ge(3.0), &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.primal_objective - 3.0).abs() < 1e-7);
        assert!((s.scalars[0] - 3.0).abs() < 1e-7);
        assert!((s.inequality_duals[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn theta_of_k2() {
        let p = build_theta_bar(&Graph::complete(2)).unwrap();
        let s = solve(&p, &SolverOptions::default()).unwrap();
        let b = extract_bound(&s).unwrap();
        assert!((b.value - 2.0).abs() < 1e-6);
    }

    #[test]
    fn tau_plus_of_half_entry_example() {
        let a = NonnegMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 0.5]]).unwrap();
        let p = build_tau_plus_matrix(&a, &BuilderOptions::default()).unwrap();
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert!((extract_bound(&s).unwrap().value - 4.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = lp_t_ge(3.0);
        let t = Var::Scalar(0);
        p.add_le("t_le", LinExpr::constant(-1.0).term(t, 1.0));
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert_eq!(extract_bound(&s), Err(Error::Solver(SolveStatus::Infeasible)));

        let mut p = ConicProblem::new();
        let t = p.add_scalar("t");
        p.add_le("t_le", LinExpr::constant(-1.0).term(t, 1.0));
        p.minimize(LinExpr::var(t));
        let s = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded);
    }

    #[test]
    fn extract_bound_reports_dual_side() {
        let mut s = solve(&lp_t_ge(1.0), &SolverOptions::default()).unwrap();
        s.primal_objective = 4.0 / 3.0;
        s.dual_objective = 4.0 / 3.0 - 1e-9;
        let b = extract_bound(&s).unwrap();
        assert_eq!(b.value, 4.0 / 3.0 - 1e-9);

        s.status = SolveStatus::NearOptimal;
        s.dual_objective = 4.0 / 3.0 - 1e-7;
        let b = extract_bound(&s).unwrap();
        assert_eq!(b.value, s.dual_objective);
        assert!((b.gap - 1e-7).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_options_and_problems() {
        let bad = SolverOptions { rel_gap_tol: 0.0, ..Default::default() };
        assert!(solve(&lp_t_ge(1.0), &bad).is_err());
        let mut p = ConicProblem::new();
        p.add_psd(PsdConstraint { name: "x".into(), size: 1, entries: [((0, 0), LinExpr::var(Var::Scalar(4)))].into() });
        assert!(matches!(solve(&p, &SolverOptions::default()), Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn psd_duals_are_symmetric_psd() {
        let p = build_theta_bar(&Graph::cycle(5)).unwrap();
        let s = solve(&p, &SolverOptions::default()).unwrap();
        let d = &s.psd_duals[0];
        assert_eq!(d.nrows(), 6);
        let eig = nalgebra::SymmetricEigen::new(d.clone()).eigenvalues;
        assert!(eig.min() > -1e-7);
    }

    #[test]
    fn weak_duality_and_determinism() {
        let a = NonnegMatrix::from_rows(&[vec![1.0, 0.3, 0.0], vec![0.2, 1.0, 0.7], vec![0.0, 0.5, 0.9]]).unwrap();
        let p = build_tau_plus_matrix(&a, &BuilderOptions::default()).unwrap();
        let opts = SolverOptions::default();
        let s1 = solve(&p, &opts).unwrap();
        let s2 = solve(&p, &opts).unwrap();
        assert!(s1.dual_objective <= s1.primal_objective + opts.rel_gap_tol * (1.0 + s1.primal_objective.abs()));
        assert_eq!(s1.primal_objective, s2.primal_objective);
        assert_eq!(s1.dual_objective, s2.dual_objective);
    }

    #[test]
    fn block_permutation_preserves_objective() {
        let a = NonnegMatrix::from_rows(&[vec![1.0, 0.3, 0.0], vec![0.2, 1.0, 0.7], vec![0.4, 0.5, 0.9]]).unwrap();
        let p = build_tau_plus_matrix(&a, &BuilderOptions::default()).unwrap();
        let n = p.blocks()[0].size;
        let mut q = p.clone();
        let perm: Vec<usize> = (0..n).map(|k| (3 * k + 2) % n).collect();
        q.permute_block(0, &perm).unwrap();
        let opts = SolverOptions::default();
        let v1 = solve(&p, &opts).unwrap().dual_objective;
        let v2 = solve(&q, &opts).unwrap().dual_objective;
        assert!((v1 - v2).abs() <= 1e-6, "{v1} vs {v2}");
    }
}
