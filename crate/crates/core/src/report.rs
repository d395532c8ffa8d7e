//! File formats, bound reports and parameter scans behind the CLI.
//!
//! Matrices are dense CSV without a header, one row per line. Tensors are
//! JSON objects `{"shape": [d1, ..., dn], "data": [...]}` with the last index
//! varying fastest. Reports are versioned JSON (see [`BoundReport`]); scans
//! are CSV with the header `param1,param2,bound,status`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::combinatorial::{
    boolean_rank, clique_number, cp_graph, edge_clique_cover_lp, edge_clique_cover_number, rectangle_cover_lp,
    rectangle_graph, BOOLEAN_RANK_CAP, CLIQUE_CAP, EDGE_COVER_CAP,
};
use crate::error::{Error, Result};
use crate::model::{self, BuilderOptions, ConicProblem, ConstraintCounts};
use crate::oracles;
use crate::solve::{extract_bound, solve, SolverOptions};
use crate::types::{CpInputMatrix, NonnegMatrix, NonnegTensor};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "atomrank";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_SIZE_CAP: i32 = 4;

/// Process exit code for a failure of the given kind.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Solver(_) | Error::InvalidProblem(_) => EXIT_SOLVER,
        Error::TooLarge { .. } => EXIT_SIZE_CAP,
        _ => EXIT_INPUT,
    }
}

// ---------------------------------------------------------------------------
// Input formats

/// Parses a dense CSV matrix. Blank lines and lines starting with `#` are ignored.
pub fn parse_matrix_csv(text: &str, eps_zero: f64) -> Result<NonnegMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}, column {}: cannot parse {field:?} as a number", r + 1, c + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {}",
                    r + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix".into()));
    }
    let (m, n) = (rows.len(), rows[0].len());
    NonnegMatrix::with_eps_zero(m, n, rows.concat(), eps_zero)
}

pub fn read_matrix_csv(path: &Path, eps_zero: f64) -> Result<NonnegMatrix> {
    parse_matrix_csv(&std::fs::read_to_string(path)?, eps_zero)
}

/// Writes a matrix in the CSV input format. Numbers use the shortest
/// representation that parses back to the same `f64`.
pub fn matrix_to_csv(a: &NonnegMatrix) -> String {
    let mut out = String::new();
    for i in 0..a.rows() {
        let row: Vec<String> = (0..a.cols()).map(|j| a.get(i, j).to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// On-disk tensor layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorFile {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

pub fn parse_tensor_json(text: &str, eps_zero: f64) -> Result<NonnegTensor> {
    let file: TensorFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    NonnegTensor::with_eps_zero(file.shape, file.data, eps_zero)
}

pub fn read_tensor_json(path: &Path, eps_zero: f64) -> Result<NonnegTensor> {
    parse_tensor_json(&std::fs::read_to_string(path)?, eps_zero)
}

pub fn tensor_to_json(t: &NonnegTensor) -> String {
    let file = TensorFile { shape: t.shape().to_vec(), data: t.data().to_vec() };
    serde_json::to_string(&file).expect("tensor serializes")
}

/// SHA-256 of the parsed instance: each shape entry as a little-endian u64,
/// then every entry as little-endian f64 bits in storage order.
pub fn input_hash(shape: &[usize], data: &[f64]) -> String {
    let mut h = Sha256::new();
    for &d in shape {
        h.update((d as u64).to_le_bytes());
    }
    for &v in data {
        h.update(v.to_bits().to_le_bytes());
    }
    hex::encode(h.finalize())
}

// ---------------------------------------------------------------------------
// Bound selection

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Tau,
    Omega,
    Theta,
    ChiFrac,
    Chi,
    MutualInfo,
    Rank,
    CFrac,
    CExact,
}

impl BoundKind {
    pub const NONNEG: [BoundKind; 6] = [
        BoundKind::Tau,
        BoundKind::Omega,
        BoundKind::Theta,
        BoundKind::ChiFrac,
        BoundKind::Chi,
        BoundKind::MutualInfo,
    ];
    pub const CP: [BoundKind; 4] = [BoundKind::Tau, BoundKind::Rank, BoundKind::CFrac, BoundKind::CExact];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Tau => "tau",
            BoundKind::Omega => "omega",
            BoundKind::Theta => "theta",
            BoundKind::ChiFrac => "chi_frac",
            BoundKind::Chi => "chi",
            BoundKind::MutualInfo => "mutual_info",
            BoundKind::Rank => "rank",
            BoundKind::CFrac => "c_frac",
            BoundKind::CExact => "c_exact",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "tau" => BoundKind::Tau,
            "omega" => BoundKind::Omega,
            "theta" | "theta_bar" => BoundKind::Theta,
            "chi_frac" => BoundKind::ChiFrac,
            "chi" | "boolean_rank" => BoundKind::Chi,
            "mutual_info" => BoundKind::MutualInfo,
            "rank" => BoundKind::Rank,
            "c_frac" => BoundKind::CFrac,
            "c_exact" => BoundKind::CExact,
            other => return Err(Error::InvalidParameter(format!("unknown bound {other:?}"))),
        })
    }
}

/// Parses a comma-separated bound list against the bounds a command offers.
/// `all` selects every offered bound. The result always starts with `tau`
/// and lists each bound once, in the order first requested.
pub fn parse_bound_list(list: &str, offered: &[BoundKind]) -> Result<Vec<BoundKind>> {
    let mut out = vec![BoundKind::Tau];
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let kinds: Vec<BoundKind> = if item == "all" { offered.to_vec() } else { vec![item.parse()?] };
        for k in kinds {
            if !offered.contains(&k) {
                let names: Vec<&str> = offered.iter().map(|b| b.name()).collect();
                return Err(Error::InvalidParameter(format!(
                    "bound {k} is not available here (choose from {})",
                    names.join(", ")
                )));
            }
            if !out.contains(&k) {
                out.push(k);
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub bounds: Vec<BoundKind>,
    pub solver: SolverOptions,
    pub builder: BuilderOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { bounds: vec![BoundKind::Tau], solver: SolverOptions::default(), builder: BuilderOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceInfo {
    pub kind: &'static str,
    pub shape: Vec<usize>,
    pub support_size: usize,
    pub input_sha256: String,
    pub eps_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptionsEcho {
    pub bounds: Vec<BoundKind>,
    pub rel_gap_tol: f64,
    pub feas_tol: f64,
    pub max_iterations: u32,
    pub builder: Option<BuilderOptions>,
    pub cp_tol: Option<f64>,
}

/// One requested bound: either a value or a typed failure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEntry {
    pub name: BoundKind,
    pub value: Option<f64>,
    /// Solver status for conic bounds, `exact` for combinatorial and closed
    /// forms, `too-large` or `error` on failure.
    pub status: String,
    pub error: Option<String>,
    pub iterations: Option<u32>,
    pub gap: Option<f64>,
    pub wall_time_ms: f64,
    pub constraints: Option<ConstraintCounts>,
    #[serde(skip)]
    failure: Option<Error>,
}

impl BoundEntry {
    fn exact(name: BoundKind, value: f64, start: Instant) -> Self {
        Self {
            name,
            value: Some(value),
            status: "exact".into(),
            error: None,
            iterations: None,
            gap: None,
            wall_time_ms: ms(start),
            constraints: None,
            failure: None,
        }
    }

    fn failed(name: BoundKind, e: Error, start: Instant, constraints: Option<ConstraintCounts>) -> Self {
        let status = match &e {
            Error::Solver(s) => s.as_str().to_string(),
            Error::TooLarge { .. } => "too-large".into(),
            _ => "error".into(),
        };
        Self {
            name,
            value: None,
            status,
            error: Some(e.to_string()),
            iterations: None,
            gap: None,
            wall_time_ms: ms(start),
            constraints,
            failure: Some(e),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn exact_entry(name: BoundKind, f: impl FnOnce() -> Result<f64>) -> BoundEntry {
    let start = Instant::now();
    match f() {
        Ok(v) => BoundEntry::exact(name, v, start),
        Err(e) => BoundEntry::failed(name, e, start, None),
    }
}

/// Builds, solves and reports a conic bound. `Ok(None)` from the builder
/// means the bound is trivially 0.
fn conic_entry(
    name: BoundKind,
    solver: &SolverOptions,
    build: impl FnOnce() -> Result<Option<ConicProblem>>,
) -> BoundEntry {
    let start = Instant::now();
    let problem = match build() {
        Ok(Some(p)) => p,
        Ok(None) => return BoundEntry::exact(name, 0.0, start),
        Err(e) => return BoundEntry::failed(name, e, start, None),
    };
    let counts = problem.counts();
    let sol = match solve(&problem, solver) {
        Ok(s) => s,
        Err(e) => return BoundEntry::failed(name, e, start, Some(counts)),
    };
    match extract_bound(&sol) {
        Ok(cert) => BoundEntry {
            name,
            value: Some(cert.value),
            status: cert.status.as_str().into(),
            error: None,
            iterations: Some(sol.iterations),
            gap: Some(cert.gap),
            wall_time_ms: ms(start),
            constraints: Some(counts),
            failure: None,
        },
        Err(e) => {
            let mut entry = BoundEntry::failed(name, e, start, Some(counts));
            entry.iterations = Some(sol.iterations);
            entry
        }
    }
}

/// The JSON document emitted by `nonneg`, `tensor` and `cp`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub instance: InstanceInfo,
    pub options: OptionsEcho,
    pub bounds: Vec<BoundEntry>,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn get(&self, name: BoundKind) -> Option<&BoundEntry> {
        self.bounds.iter().find(|b| b.name == name)
    }

    pub fn value(&self, name: BoundKind) -> Option<f64> {
        self.get(name).and_then(|b| b.value)
    }

    /// Exit code of the first failed bound, or 0.
    pub fn exit_code(&self) -> i32 {
        self.bounds.iter().find_map(|b| b.failure.as_ref()).map_or(EXIT_OK, exit_code_for)
    }
}

fn echo(opts: &RunOptions, builder: bool, cp_tol: Option<f64>) -> OptionsEcho {
    OptionsEcho {
        bounds: opts.bounds.clone(),
        rel_gap_tol: opts.solver.rel_gap_tol,
        feas_tol: opts.solver.feas_tol,
        max_iterations: opts.solver.max_iterations,
        builder: builder.then_some(opts.builder),
        cp_tol,
    }
}

fn check_offered(opts: &RunOptions, offered: &[BoundKind]) -> Result<()> {
    opts.solver.validate()?;
    match opts.bounds.iter().find(|b| !offered.contains(b)) {
        Some(b) => Err(Error::InvalidParameter(format!("bound {b} is not available here"))),
        None => Ok(()),
    }
}

/// Every requested bound for a nonnegative matrix.
pub fn nonneg_report(a: &NonnegMatrix, opts: &RunOptions) -> Result<BoundReport> {
    check_offered(opts, &BoundKind::NONNEG)?;
    let support = a.support();
    let zero = support.is_empty();
    let rg = if zero { None } else { Some(rectangle_graph(a)?) };
    let mut notes = Vec::new();
    if zero {
        notes.push("zero matrix has rank 0; every rank bound is 0".to_string());
    }

    let bounds = opts
        .bounds
        .iter()
        .map(|&kind| {
            if zero && kind != BoundKind::MutualInfo {
                return BoundEntry::exact(kind, 0.0, Instant::now());
            }
            match kind {
                BoundKind::Tau => {
                    conic_entry(kind, &opts.solver, || model::build_tau_plus_matrix(a, &opts.builder).map(Some))
                }
                BoundKind::Omega => exact_entry(kind, || {
                    Ok(clique_number(&rg.as_ref().expect("nonzero").graph, CLIQUE_CAP)? as f64)
                }),
                BoundKind::Theta => conic_entry(kind, &opts.solver, || {
                    model::build_theta_bar(&rg.as_ref().expect("nonzero").graph).map(Some)
                }),
                BoundKind::ChiFrac => conic_entry(kind, &opts.solver, || rectangle_cover_lp(a)),
                BoundKind::Chi => {
                    exact_entry(kind, || Ok(boolean_rank(a, BOOLEAN_RANK_CAP, &opts.solver)? as f64))
                }
                BoundKind::MutualInfo => exact_entry(kind, || oracles::mutual_information_bound(a)),
                _ => unreachable!("checked against the offered bounds"),
            }
        })
        .collect();

    Ok(BoundReport {
        schema: SCHEMA_VERSION,
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        command: "nonneg",
        instance: InstanceInfo {
            kind: "matrix",
            shape: vec![a.rows(), a.cols()],
            support_size: support.len(),
            input_sha256: input_hash(&[a.rows(), a.cols()], a.data()),
            eps_zero: a.eps_zero(),
        },
        options: echo(opts, true, None),
        bounds,
        notes,
    })
}

/// τ₊ˢᵒˢ for a tensor of order ≥ 3.
pub fn tensor_report(t: &NonnegTensor, opts: &RunOptions) -> Result<BoundReport> {
    check_offered(opts, &[BoundKind::Tau])?;
    if t.order() < 3 {
        return Err(Error::Shape(format!(
            "tensor input needs order >= 3, got order {}; use the matrix command instead",
            t.order()
        )));
    }
    let support = t.support();
    let mut notes = Vec::new();
    if support.is_empty() {
        notes.push("zero tensor has rank 0".to_string());
    }
    let bounds = vec![conic_entry(BoundKind::Tau, &opts.solver, || {
        if support.is_empty() {
            Ok(None)
        } else {
            model::build_tau_plus_tensor(t).map(Some)
        }
    })];
    Ok(BoundReport {
        schema: SCHEMA_VERSION,
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        command: "tensor",
        instance: InstanceInfo {
            kind: "tensor",
            shape: t.shape().to_vec(),
            support_size: support.len(),
            input_sha256: input_hash(t.shape(), t.data()),
            eps_zero: t.eps_zero(),
        },
        options: echo(opts, false, None),
        bounds,
        notes,
    })
}

/// τ_cpˢᵒˢ and the requested cp-rank companions.
pub fn cp_report(a: &CpInputMatrix, opts: &RunOptions) -> Result<BoundReport> {
    check_offered(opts, &BoundKind::CP)?;
    let m = a.as_matrix();
    let support = m.support();
    let zero = support.is_empty();
    let g = cp_graph(a);
    let mut notes = Vec::new();
    if zero {
        notes.push("zero matrix has rank 0; every rank bound is 0".to_string());
    }
    let loops = g.isolated_loops();
    if !loops.is_empty() && opts.bounds.iter().any(|b| matches!(b, BoundKind::CFrac | BoundKind::CExact)) {
        let idx: Vec<String> = loops.iter().map(|v| (v + 1).to_string()).collect();
        notes.push(format!(
            "diagonal entries without incident edges are not covered by edge-clique covers: {}",
            idx.join(",")
        ));
    }

    let bounds = opts
        .bounds
        .iter()
        .map(|&kind| {
            if zero {
                return BoundEntry::exact(kind, 0.0, Instant::now());
            }
            match kind {
                BoundKind::Tau => conic_entry(kind, &opts.solver, || model::build_tau_cp(a).map(Some)),
                BoundKind::Rank => exact_entry(kind, || oracles::psd_rank_lemma_value(&m.to_dmatrix())),
                BoundKind::CFrac => conic_entry(kind, &opts.solver, || edge_clique_cover_lp(&g)),
                BoundKind::CExact => {
                    exact_entry(kind, || Ok(edge_clique_cover_number(&g, EDGE_COVER_CAP, &opts.solver)? as f64))
                }
                _ => unreachable!("checked against the offered bounds"),
            }
        })
        .collect();

    Ok(BoundReport {
        schema: SCHEMA_VERSION,
        tool: TOOL_NAME,
        version: TOOL_VERSION,
        command: "cp",
        instance: InstanceInfo {
            kind: "cp-matrix",
            shape: vec![a.n(), a.n()],
            support_size: support.len(),
            input_sha256: input_hash(&[a.n(), a.n()], m.data()),
            eps_zero: m.eps_zero(),
        },
        options: echo(opts, false, Some(a.tol())),
        bounds,
        notes,
    })
}

/// Reads a CSV matrix and reports on it. `Err` means the input was rejected.
pub fn cmd_nonneg(input: &Path, eps_zero: f64, opts: &RunOptions) -> Result<BoundReport> {
    nonneg_report(&read_matrix_csv(input, eps_zero)?, opts)
}

pub fn cmd_tensor(input: &Path, eps_zero: f64, opts: &RunOptions) -> Result<BoundReport> {
    tensor_report(&read_tensor_json(input, eps_zero)?, opts)
}

/// Reads a CSV matrix, validates it as a cp input with tolerance `cp_tol`
/// and reports on it.
pub fn cmd_cp(input: &Path, eps_zero: f64, cp_tol: f64, opts: &RunOptions) -> Result<BoundReport> {
    let m = read_matrix_csv(input, eps_zero)?;
    cp_report(&CpInputMatrix::from_matrix(m, cp_tol)?, opts)
}

// ---------------------------------------------------------------------------
// Scans

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScanFamily {
    /// `τ₊ˢᵒˢ(M(a, b))` for the nested-rectangles matrix.
    NestedRect,
    /// Tensor `τ₊ˢᵒˢ` of the 2×2×2 example in `(x, w)`.
    Tensor2x2x2,
    /// `τ_cpˢᵒˢ` of the 5×5 `K₂,₃` example in `(a, b)`.
    CpExample,
}

impl ScanFamily {
    pub fn name(self) -> &'static str {
        match self {
            ScanFamily::NestedRect => "nested-rect",
            ScanFamily::Tensor2x2x2 => "tensor-2x2x2",
            ScanFamily::CpExample => "cp-example",
        }
    }

    pub fn default_range(self) -> ScanRange {
        match self {
            ScanFamily::NestedRect => ScanRange { p1: (0.0, 1.0), p2: (0.0, 1.0) },
            ScanFamily::Tensor2x2x2 | ScanFamily::CpExample => ScanRange { p1: (0.0, 3.0), p2: (0.0, 3.0) },
        }
    }

    /// The bound at one grid point.
    pub fn evaluate(self, p1: f64, p2: f64, opts: &RunOptions) -> Result<f64> {
        match self {
            ScanFamily::NestedRect => {
                crate::tau_plus_sos_with(&oracles::gen_nested_rect_matrix(p1, p2)?, &opts.builder, &opts.solver)
            }
            ScanFamily::Tensor2x2x2 => crate::tau_plus_sos_tensor_with(&oracles::gen_tensor_example(p1, p2)?, &opts.solver),
            ScanFamily::CpExample => crate::tau_cp_sos_with(&oracles::gen_cp_example(p1, p2)?, &opts.solver),
        }
    }

    fn check_range(self, r: &ScanRange) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| match self {
            ScanFamily::NestedRect => (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi),
            _ => lo >= 0.0 && hi >= 0.0 && hi.is_finite(),
        };
        if ok(r.p1) && ok(r.p2) {
            Ok(())
        } else {
            let domain = if self == ScanFamily::NestedRect { "[0, 1]" } else { "[0, inf)" };
            Err(Error::InvalidParameter(format!("range {r} leaves the domain {domain} of {}", self.name())))
        }
    }
}

impl FromStr for ScanFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nested-rect" => Ok(ScanFamily::NestedRect),
            "tensor-2x2x2" => Ok(ScanFamily::Tensor2x2x2),
            "cp-example" => Ok(ScanFamily::CpExample),
            other => Err(Error::InvalidParameter(format!(
                "unknown scan family {other:?} (choose nested-rect, tensor-2x2x2 or cp-example)"
            ))),
        }
    }
}

/// Parameter box `[a0, a1] × [b0, b1]`, written `a0:a1,b0:b1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRange {
    pub p1: (f64, f64),
    pub p2: (f64, f64),
}

impl FromStr for ScanRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("range {s:?} is not of the form a0:a1,b0:b1"));
        let interval = |part: &str| -> Result<(f64, f64)> {
            let (lo, hi) = part.split_once(':').ok_or_else(bad)?;
            let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
            let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(bad());
            }
            Ok((lo, hi))
        };
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        Ok(ScanRange { p1: interval(a)?, p2: interval(b)? })
    }
}

impl fmt::Display for ScanRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{},{}:{}", self.p1.0, self.p1.1, self.p2.0, self.p2.1)
    }
}

/// `lo + (hi − lo)·k/(n − 1)` for `k = 0..n`, with the endpoint pinned to `hi`.
pub fn grid_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub param1: f64,
    pub param2: f64,
    pub bound: Option<f64>,
    pub status: String,
}

/// Evaluates `family` on an `grid × grid` lattice, `param1` outer and
/// ascending. Rows run in parallel; failures stay in their row.
pub fn scan(family: ScanFamily, grid: usize, range: &ScanRange, opts: &RunOptions) -> Result<Vec<ScanRow>> {
    if grid < 2 {
        return Err(Error::InvalidParameter(format!("grid resolution must be at least 2, got {grid}")));
    }
    opts.solver.validate()?;
    family.check_range(range)?;
    let xs = grid_points(range.p1.0, range.p1.1, grid);
    let ys = grid_points(range.p2.0, range.p2.1, grid);
    let points: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    Ok(points
        .par_iter()
        .map(|&(p1, p2)| {
            let (bound, status) = match family.evaluate(p1, p2, opts) {
                Ok(v) => (Some(v), "ok".to_string()),
                Err(Error::Solver(s)) => (None, s.as_str().to_string()),
                Err(Error::TooLarge { .. }) => (None, "too-large".to_string()),
                Err(_) => (None, "error".to_string()),
            };
            ScanRow { param1: p1, param2: p2, bound, status }
        })
        .collect())
}

pub const SCAN_HEADER: &str = "param1,param2,bound,status";

/// CSV with [`SCAN_HEADER`]; failed rows leave `bound` empty.
pub fn scan_to_csv(rows: &[ScanRow]) -> String {
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(SCAN_HEADER);
    out.push('\n');
    for r in rows {
        let bound = r.bound.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", r.param1, r.param2, bound, r.status));
    }
    out
}
