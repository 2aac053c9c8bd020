//! Design-matrix assembly, least-squares recovery, and Gram diagnostics.
//!
//! The design matrix `L` has entries `L[j,k] = eta_k(x^j)` over an index set
//! enumeration; the weighted variant scales row `j` by `1 / sqrt(rho_m(x^j))`
//! (zeroing rows where the density vanishes). Recovery solves
//! `min_c ||samples - L c||_2` with LSQR and returns the expansion
//! `sum_k c_k eta_k` as an [`Approximant`].
//!
//! Matrices are never materialized on the recovery path: tensor-product
//! bases admit an implicit operator that walks the index set grouped by the
//! trailing components `(k_2, ..., k_d)`, so one matvec costs `O(n (M + d R))`
//! where `R` is the largest per-axis degree. A dense path exists as a
//! cross-check oracle for small problems, and a compressed-row sparse form
//! carries the wavelet designs whose rows are mostly zero.

use std::io::{Read, Write};

use crate::bases::{self, BasisFamily};
use crate::index::IndexSet;
use crate::linalg::{self, DenseMatrix, LinearOperator, LsqrTermination};
use crate::sampling::NodeSet;
use crate::{C64, Error, Result};

/// LSQR settings; the defaults match the experiment setup (tolerance 5e-8,
/// at most 100 iterations).
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub tol: f64,
    pub maxit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 5e-8,
            maxit: 100,
        }
    }
}

impl SolverConfig {
    /// Tighter settings for cubature-weight solves, whose exactness
    /// (`Q eta_k = b_k`) is checked at the 1e-8 level.
    pub fn cubature() -> Self {
        SolverConfig {
            tol: 1e-10,
            maxit: 400,
        }
    }
}

/// Outcome of a least-squares solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveReport {
    pub iterations: usize,
    /// `||samples - L c|| / ||samples||` (zero for a zero right-hand side).
    pub relative_residual: f64,
    pub termination: LsqrTermination,
}

/// One contiguous run of first-axis degrees sharing a trailing multi-index.
#[derive(Debug, Clone)]
struct Group {
    /// `(k_2, ..., k_d)`; empty in one dimension.
    tail: Vec<i64>,
    k1_start: i64,
    len: usize,
    /// Position of the run's first entry in tensor order.
    offset: usize,
}

/// Implicit tensor-product design operator.
#[derive(Debug, Clone)]
struct TensorDesign {
    family: BasisFamily,
    /// Row-major `n x d` node coordinates.
    nodes: Vec<f64>,
    n: usize,
    m: usize,
    groups: Vec<Group>,
    /// `perm[p]` = index-set position of the `p`-th tensor-ordered entry.
    perm: Vec<usize>,
    /// Largest `|k_t|` per axis, for table sizing.
    axis_max: Vec<usize>,
}

/// Compressed-row sparse design with real entries (wavelet systems).
#[derive(Debug, Clone)]
pub struct SparseRows {
    n: usize,
    m: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseRows {
    /// Build from per-row `(column, value)` lists.
    pub fn from_rows(m: usize, rows: &[Vec<(usize, f64)>]) -> Result<SparseRows> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for &(c, v) in row {
                if c >= m {
                    return Err(Error::mismatch(format!(
                        "sparse row column {c} out of range {m}"
                    )));
                }
                cols.push(c as u32);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseRows {
            n: rows.len(),
            m,
            row_ptr,
            cols,
            vals,
        })
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Largest per-row entry count.
    pub fn max_row_nnz(&self) -> usize {
        (0..self.n)
            .map(|j| self.row_ptr[j + 1] - self.row_ptr[j])
            .max()
            .unwrap_or(0)
    }

    /// Number of columns without a stored entry.  A positive count proves
    /// structural rank deficiency (the Gram matrix has an exact kernel).
    pub fn empty_columns(&self) -> usize {
        let mut hit = vec![false; self.m];
        for &c in &self.cols {
            hit[c as usize] = true;
        }
        hit.iter().filter(|&&h| !h).count()
    }
}

#[derive(Debug, Clone)]
enum Storage {
    /// Explicit matrix (test constructions with complex entries).
    #[cfg_attr(not(test), allow(dead_code))]
    Dense(DenseMatrix),
    Tensor(TensorDesign),
    Sparse(SparseRows),
}

/// Design matrix `L` (or its weighted variant) as a linear operator.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    storage: Storage,
    n: usize,
    m: usize,
    /// Per-row scale `1/sqrt(rho)` (weighted assembly); `None` means 1.
    row_scale: Option<Vec<f64>>,
    weighted: bool,
}

impl DesignMatrix {
    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.m
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    /// Wrap a sparse design (wavelet module assembly).
    pub fn from_sparse(sparse: SparseRows, row_scale: Option<Vec<f64>>) -> Result<Self> {
        if let Some(scale) = &row_scale {
            if scale.len() != sparse.n {
                return Err(Error::mismatch("row scale length != row count"));
            }
        }
        let weighted = row_scale.is_some();
        Ok(DesignMatrix {
            n: sparse.n,
            m: sparse.m,
            storage: Storage::Sparse(sparse),
            row_scale,
            weighted,
        })
    }

    /// Materialize the (scaled) matrix; intended for small cross-checks.
    pub fn to_dense(&self) -> DenseMatrix {
        DenseMatrix::from_operator(self)
    }

    pub fn sparse(&self) -> Option<&SparseRows> {
        match &self.storage {
            Storage::Sparse(s) => Some(s),
            _ => None,
        }
    }

    /// Per-row scale of a weighted design (`1/sqrt(rho)`), if any.
    pub(crate) fn row_scale(&self) -> Option<&[f64]> {
        self.row_scale.as_deref()
    }
}

/// Per-axis basis-value tables for one node, reused across nodes of a sweep.
enum NodeTables {
    /// `tabs[t][axis_max[t] + h] = exp(2 pi i h x_t)`.
    Complex(Vec<Vec<C64>>),
    /// `tabs[t][h] = eta_h(x_t)` (Chebyshev or Legendre).
    Real(Vec<Vec<f64>>),
}

impl TensorDesign {
    fn from_index_set(family: &BasisFamily, iset: &IndexSet, nodes: &NodeSet) -> Self {
        let d = iset.d();
        let mut order: Vec<usize> = (0..iset.len()).collect();
        order.sort_by(|&a, &b| {
            let ka = iset.index(a);
            let kb = iset.index(b);
            ka[1..].cmp(&kb[1..]).then(ka[0].cmp(&kb[0]))
        });
        let mut groups = Vec::new();
        let mut p = 0;
        while p < order.len() {
            let head = iset.index(order[p]);
            let tail = head[1..].to_vec();
            let k1_start = head[0];
            let mut len = 1usize;
            while p + len < order.len() {
                let next = iset.index(order[p + len]);
                if next[1..] != tail[..] || next[0] != k1_start + len as i64 {
                    break;
                }
                len += 1;
            }
            groups.push(Group {
                tail,
                k1_start,
                len,
                offset: p,
            });
            p += len;
        }
        let mut axis_max = vec![0usize; d];
        for k in iset.iter() {
            for (t, &kt) in k.iter().enumerate() {
                axis_max[t] = axis_max[t].max(kt.unsigned_abs() as usize);
            }
        }
        TensorDesign {
            family: family.clone(),
            nodes: nodes.points_flat().to_vec(),
            n: nodes.len(),
            m: iset.len(),
            groups,
            perm: order,
            axis_max,
        }
    }

    fn new_tables(&self) -> NodeTables {
        match self.family {
            BasisFamily::Fourier { .. } => NodeTables::Complex(
                self.axis_max
                    .iter()
                    .map(|&r| vec![C64::new(0.0, 0.0); 2 * r + 1])
                    .collect(),
            ),
            _ => NodeTables::Real(
                self.axis_max
                    .iter()
                    .map(|&r| vec![0.0f64; r + 1])
                    .collect(),
            ),
        }
    }

    fn fill_tables(&self, j: usize, tables: &mut NodeTables) {
        let x = &self.nodes[j * self.axis_max.len()..(j + 1) * self.axis_max.len()];
        match tables {
            NodeTables::Complex(tabs) => {
                for (t, tab) in tabs.iter_mut().enumerate() {
                    let r = self.axis_max[t];
                    tab[r] = C64::new(1.0, 0.0);
                    let step = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * x[t]);
                    for h in 1..=r {
                        tab[r + h] = tab[r + h - 1] * step;
                        tab[r - h] = tab[r + h].conj();
                    }
                }
            }
            NodeTables::Real(tabs) => {
                for (t, tab) in tabs.iter_mut().enumerate() {
                    match self.family {
                        BasisFamily::Chebyshev { .. } => {
                            // Clamped at assembly time; acos is safe here.
                            bases::cos_table(x[t].clamp(-1.0, 1.0).acos(), tab);
                            for v in tab.iter_mut().skip(1) {
                                *v *= std::f64::consts::SQRT_2;
                            }
                        }
                        BasisFamily::Legendre => {
                            bases::legendre_table(x[t].clamp(-1.0, 1.0), tab)
                        }
                        BasisFamily::Fourier { .. } => unreachable!(),
                    }
                }
            }
        }
    }

    /// `y[j] = sum_k x_tensor[k] eta_k(node j)` for all rows.
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let scratch: Vec<C64> = self.perm.iter().map(|&p| x[p]).collect();
        let mut tables = self.new_tables();
        for j in 0..self.n {
            self.fill_tables(j, &mut tables);
            let mut acc = C64::new(0.0, 0.0);
            match &tables {
                NodeTables::Complex(tabs) => {
                    for g in &self.groups {
                        let mut tailprod = C64::new(1.0, 0.0);
                        for (t, &kt) in g.tail.iter().enumerate() {
                            let r = self.axis_max[t + 1] as i64;
                            tailprod *= tabs[t + 1][(kt + r) as usize];
                        }
                        let lo = (g.k1_start + self.axis_max[0] as i64) as usize;
                        let inner = dot_cc(
                            &scratch[g.offset..g.offset + g.len],
                            &tabs[0][lo..lo + g.len],
                        );
                        acc += tailprod * inner;
                    }
                }
                NodeTables::Real(tabs) => {
                    for g in &self.groups {
                        let mut tailprod = 1.0f64;
                        for (t, &kt) in g.tail.iter().enumerate() {
                            tailprod *= tabs[t + 1][kt as usize];
                        }
                        let lo = g.k1_start as usize;
                        let inner = dot_cr(
                            &scratch[g.offset..g.offset + g.len],
                            &tabs[0][lo..lo + g.len],
                        );
                        acc += inner * tailprod;
                    }
                }
            }
            y[j] = acc;
        }
    }

    /// `x_tensor += conj(L)^T y`, written back through the permutation.
    fn apply_adjoint(&self, y: &[C64], x: &mut [C64]) {
        let mut scratch = vec![C64::new(0.0, 0.0); self.m];
        let mut tables = self.new_tables();
        for j in 0..self.n {
            let w = y[j];
            if w == C64::new(0.0, 0.0) {
                continue;
            }
            self.fill_tables(j, &mut tables);
            match &tables {
                NodeTables::Complex(tabs) => {
                    for g in &self.groups {
                        let mut tailprod = C64::new(1.0, 0.0);
                        for (t, &kt) in g.tail.iter().enumerate() {
                            let r = self.axis_max[t + 1] as i64;
                            tailprod *= tabs[t + 1][(kt + r) as usize];
                        }
                        let lo = (g.k1_start + self.axis_max[0] as i64) as usize;
                        axpy_conj_cc(
                            &mut scratch[g.offset..g.offset + g.len],
                            &tabs[0][lo..lo + g.len],
                            tailprod.conj() * w,
                        );
                    }
                }
                NodeTables::Real(tabs) => {
                    for g in &self.groups {
                        let mut tailprod = 1.0f64;
                        for (t, &kt) in g.tail.iter().enumerate() {
                            tailprod *= tabs[t + 1][kt as usize];
                        }
                        let lo = g.k1_start as usize;
                        axpy_cr(
                            &mut scratch[g.offset..g.offset + g.len],
                            &tabs[0][lo..lo + g.len],
                            w * tailprod,
                        );
                    }
                }
            }
        }
        for (p, &orig) in self.perm.iter().enumerate() {
            x[orig] = scratch[p];
        }
    }
}

/// Four-way unrolled complex dot product `sum a_i b_i` (no conjugation).
#[inline]
fn dot_cc(a: &[C64], b: &[C64]) -> C64 {
    let mut s = [C64::new(0.0, 0.0); 4];
    let (ac, ar) = a.split_at(a.len() - a.len() % 4);
    let (bc, br) = b.split_at(ac.len());
    for (qa, qb) in ac.chunks_exact(4).zip(bc.chunks_exact(4)) {
        for l in 0..4 {
            s[l] += qa[l] * qb[l];
        }
    }
    let mut total = (s[0] + s[1]) + (s[2] + s[3]);
    for (x, y) in ar.iter().zip(br) {
        total += x * y;
    }
    total
}

/// `sum a_i b_i` with a real second factor.
#[inline]
fn dot_cr(a: &[C64], b: &[f64]) -> C64 {
    let mut sre = [0.0f64; 4];
    let mut sim = [0.0f64; 4];
    let (ac, ar) = a.split_at(a.len() - a.len() % 4);
    let (bc, br) = b.split_at(ac.len());
    for (qa, qb) in ac.chunks_exact(4).zip(bc.chunks_exact(4)) {
        for l in 0..4 {
            sre[l] += qa[l].re * qb[l];
            sim[l] += qa[l].im * qb[l];
        }
    }
    let mut total = C64::new(
        (sre[0] + sre[1]) + (sre[2] + sre[3]),
        (sim[0] + sim[1]) + (sim[2] + sim[3]),
    );
    for (x, y) in ar.iter().zip(br) {
        total += x * y;
    }
    total
}

/// `out_i += conj(t_i) w`.
#[inline]
fn axpy_conj_cc(out: &mut [C64], t: &[C64], w: C64) {
    for (o, &v) in out.iter_mut().zip(t) {
        *o += v.conj() * w;
    }
}

/// `out_i += t_i w` with real `t`.
#[inline]
fn axpy_cr(out: &mut [C64], t: &[f64], w: C64) {
    for (o, &v) in out.iter_mut().zip(t) {
        *o += w * v;
    }
}

impl LinearOperator for DesignMatrix {
    fn nrows(&self) -> usize {
        self.n
    }

    fn ncols(&self) -> usize {
        self.m
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        match &self.storage {
            Storage::Dense(a) => a.apply(x, y),
            Storage::Tensor(t) => t.apply(x, y),
            Storage::Sparse(s) => {
                for j in 0..s.n {
                    let mut acc = C64::new(0.0, 0.0);
                    for idx in s.row_ptr[j]..s.row_ptr[j + 1] {
                        acc += x[s.cols[idx] as usize] * s.vals[idx];
                    }
                    y[j] = acc;
                }
            }
        }
        if let Some(scale) = &self.row_scale {
            for (v, &s) in y.iter_mut().zip(scale) {
                *v *= s;
            }
        }
    }

    fn apply_adjoint(&self, y: &[C64], x: &mut [C64]) {
        let scaled: Vec<C64>;
        let rhs: &[C64] = if let Some(scale) = &self.row_scale {
            scaled = y.iter().zip(scale).map(|(&v, &s)| v * s).collect();
            &scaled
        } else {
            y
        };
        match &self.storage {
            Storage::Dense(a) => a.apply_adjoint(rhs, x),
            Storage::Tensor(t) => t.apply_adjoint(rhs, x),
            Storage::Sparse(s) => {
                x.fill(C64::new(0.0, 0.0));
                for j in 0..s.n {
                    let w = rhs[j];
                    if w == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for idx in s.row_ptr[j]..s.row_ptr[j + 1] {
                        x[s.cols[idx] as usize] += w * s.vals[idx];
                    }
                }
            }
        }
    }
}

/// Shared pre-flight checks for assembly.
fn check_assembly(family: &BasisFamily, iset: &IndexSet, nodes: &NodeSet) -> Result<()> {
    let d = family.d();
    if iset.d() != d || nodes.d() != d {
        return Err(Error::mismatch(format!(
            "assembly: family dimension {d}, index set {}, nodes {}",
            iset.d(),
            nodes.d()
        )));
    }
    if iset.domain() != family.index_domain() {
        return Err(Error::mismatch(
            "assembly: index domain does not match basis family",
        ));
    }
    for &x in nodes.points_flat() {
        if !x.is_finite() {
            return Err(Error::invalid("assembly: nonfinite node coordinate"));
        }
        if !family.is_complex() && x.abs() > 1.0 + 1e-15 {
            return Err(Error::invalid(format!(
                "assembly: node coordinate {x} outside [-1, 1]"
            )));
        }
    }
    Ok(())
}

/// Plain design matrix `L[j,k] = eta_k(x^j)`.
pub fn assemble_design(
    family: &BasisFamily,
    iset: &IndexSet,
    nodes: &NodeSet,
) -> Result<DesignMatrix> {
    check_assembly(family, iset, nodes)?;
    Ok(DesignMatrix {
        n: nodes.len(),
        m: iset.len(),
        storage: Storage::Tensor(TensorDesign::from_index_set(family, iset, nodes)),
        row_scale: None,
        weighted: false,
    })
}

/// Weighted design: row `j` scaled by `1/sqrt(rho_m(x^j))`, zero where the
/// recorded density vanishes.
pub fn assemble_weighted_design(
    family: &BasisFamily,
    iset: &IndexSet,
    nodes: &NodeSet,
) -> Result<DesignMatrix> {
    check_assembly(family, iset, nodes)?;
    let densities = nodes.densities().ok_or_else(|| {
        Error::invalid("assemble_weighted_design: nodes carry no densities")
    })?;
    let row_scale = densities
        .iter()
        .map(|&rho| {
            if rho > 0.0 {
                Ok(1.0 / rho.sqrt())
            } else if rho == 0.0 {
                Ok(0.0)
            } else {
                Err(Error::invalid(format!("negative density {rho}")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DesignMatrix {
        n: nodes.len(),
        m: iset.len(),
        storage: Storage::Tensor(TensorDesign::from_index_set(family, iset, nodes)),
        row_scale: Some(row_scale),
        weighted: true,
    })
}

/// Minimize `||rhs - A c||_2` by LSQR.
///
/// Hitting the iteration cap is reported, not fatal; rank trouble surfaces
/// through [`least_squares`]'s diagnosis instead.
pub fn lsqr_solve(
    a: &DesignMatrix,
    rhs: &[C64],
    tol: f64,
    maxit: usize,
) -> Result<(Vec<C64>, SolveReport)> {
    if a.nrows() < a.ncols() || a.ncols() == 0 {
        return Err(Error::invalid(format!(
            "lsqr_solve: need n >= M >= 1, got n = {}, M = {}",
            a.nrows(),
            a.ncols()
        )));
    }
    if rhs.len() != a.nrows() {
        return Err(Error::mismatch(format!(
            "lsqr_solve: rhs length {} != row count {}",
            rhs.len(),
            a.nrows()
        )));
    }
    if rhs.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::invalid("lsqr_solve: nonfinite right-hand side"));
    }
    let (x, rep) = linalg::lsqr(a, rhs, tol, maxit)?;
    let bnorm = linalg::norm2(rhs);
    Ok((
        x,
        SolveReport {
            iterations: rep.iterations,
            relative_residual: if bnorm > 0.0 {
                rep.residual_norm / bnorm
            } else {
                0.0
            },
            termination: rep.termination,
        },
    ))
}

/// Recovered expansion `sum_k c_k eta_k` with solver metadata.
#[derive(Debug, Clone)]
pub struct Approximant {
    family: BasisFamily,
    iset: IndexSet,
    coeffs: Vec<C64>,
    report: SolveReport,
}

impl Approximant {
    pub fn from_parts(
        family: BasisFamily,
        iset: IndexSet,
        coeffs: Vec<C64>,
        report: SolveReport,
    ) -> Result<Self> {
        if coeffs.len() != iset.len() {
            return Err(Error::mismatch(format!(
                "approximant: {} coefficients for index set of size {}",
                coeffs.len(),
                iset.len()
            )));
        }
        Ok(Approximant {
            family,
            iset,
            coeffs,
            report,
        })
    }

    pub fn family(&self) -> &BasisFamily {
        &self.family
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.iset
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn report(&self) -> &SolveReport {
        &self.report
    }

    /// Pointwise value `sum_k c_k eta_k(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<C64> {
        eval_expansion(&self.family, &self.iset, &self.coeffs, x)
    }

    /// Coefficients as CSV (`re,im` per line, index-set order).
    pub fn write_coeffs_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["re", "im"])?;
        for c in &self.coeffs {
            w.write_record(&[format!("{}", c.re), format!("{}", c.im)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a coefficient CSV written by [`Approximant::write_coeffs_csv`].
    pub fn read_coeffs_csv<R: Read>(source: R) -> Result<Vec<C64>> {
        let mut r = csv::Reader::from_reader(source);
        if r.headers()?.iter().collect::<Vec<_>>() != ["re", "im"] {
            return Err(Error::Parse("coefficient CSV header must be re,im".into()));
        }
        let mut out = Vec::new();
        for record in r.records() {
            let record = record?;
            let re: f64 = record
                .get(0)
                .unwrap_or_default()
                .parse()
                .map_err(|e| Error::Parse(format!("bad re field: {e}")))?;
            let im: f64 = record
                .get(1)
                .unwrap_or_default()
                .parse()
                .map_err(|e| Error::Parse(format!("bad im field: {e}")))?;
            out.push(C64::new(re, im));
        }
        Ok(out)
    }
}

/// Evaluate `sum_k c_k eta_k(x)` with per-axis tables.
pub fn eval_expansion(
    family: &BasisFamily,
    iset: &IndexSet,
    coeffs: &[C64],
    x: &[f64],
) -> Result<C64> {
    let d = family.d();
    if x.len() != d || coeffs.len() != iset.len() {
        return Err(Error::mismatch("eval_expansion: dimension mismatch"));
    }
    let mut acc = C64::new(0.0, 0.0);
    for (k, &c) in iset.iter().zip(coeffs) {
        acc += c * bases::eval_basis(family, k, x)?;
    }
    Ok(acc)
}

/// Algorithm: assemble the plain design, run LSQR, wrap the expansion.
///
/// Rank deficiency is diagnosed lazily: when LSQR stalls at the iteration
/// cap, the smallest Gram eigenvalue is estimated and a singular design is
/// reported as an error.
pub fn least_squares(
    nodes: &NodeSet,
    samples: &[C64],
    family: &BasisFamily,
    iset: &IndexSet,
    config: SolverConfig,
) -> Result<Approximant> {
    let design = assemble_design(family, iset, nodes)?;
    solve_into_approximant(&design, samples, family, iset, config)
}

/// Weighted variant: reweights the samples by `1/sqrt(rho_m)` and solves
/// with the weighted design. On Fourier models (`rho_m` identically 1) the
/// output is bit-identical to [`least_squares`].
pub fn weighted_least_squares(
    nodes: &NodeSet,
    samples: &[C64],
    family: &BasisFamily,
    iset: &IndexSet,
    config: SolverConfig,
) -> Result<Approximant> {
    let design = assemble_weighted_design(family, iset, nodes)?;
    if samples.len() != nodes.len() {
        return Err(Error::mismatch("weighted_least_squares: sample count"));
    }
    let scale = design.row_scale.as_ref().unwrap();
    let rhs: Vec<C64> = samples
        .iter()
        .zip(scale)
        .map(|(&f, &s)| f * s)
        .collect();
    solve_into_approximant(&design, &rhs, family, iset, config)
}

fn solve_into_approximant(
    design: &DesignMatrix,
    rhs: &[C64],
    family: &BasisFamily,
    iset: &IndexSet,
    config: SolverConfig,
) -> Result<Approximant> {
    let (coeffs, report) = lsqr_solve(design, rhs, config.tol, config.maxit)?;
    if matches!(report.termination, LsqrTermination::IterationLimit) {
        // Slow convergence is legitimate near the sampling threshold; only a
        // (numerically) singular design is an error.
        let lam_min = smallest_gram_eigenvalue(design)?;
        if lam_min < 1e-10 {
            return Err(Error::Singular(format!(
                "least squares: smallest Gram eigenvalue {lam_min:.3e} below 1e-10"
            )));
        }
    }
    Approximant::from_parts(family.clone(), iset.clone(), coeffs, report)
}

/// Dense Hermitian Gram `H = (1/n) A^* A`, for small column counts.
fn dense_gram(a: &DesignMatrix) -> DenseMatrix {
    let (n, m) = (a.nrows(), a.ncols());
    let mut h = DenseMatrix::zeros(m, m);
    let mut e = vec![C64::new(0.0, 0.0); m];
    let mut col = vec![C64::new(0.0, 0.0); n];
    let mut row = vec![C64::new(0.0, 0.0); m];
    for k in 0..m {
        e[k] = C64::new(1.0, 0.0);
        a.apply(&e, &mut col);
        a.apply_adjoint(&col, &mut row);
        e[k] = C64::new(0.0, 0.0);
        for l in 0..m {
            *h.at_mut(l, k) = row[l] / n as f64;
        }
    }
    h
}

/// Column count under which the Gram matrix is materialized and eigensolved
/// directly ([`gram_deviation`], [`moore_penrose_norm`]).
const DENSE_GRAM_LIMIT: usize = 2000;

/// Row-times-column-squared budget for the dense Gram path.
const DENSE_GRAM_WORK: usize = 1 << 29;

fn use_dense_gram(a: &DesignMatrix) -> bool {
    let (n, m) = (a.nrows(), a.ncols());
    m <= DENSE_GRAM_LIMIT && n.saturating_mul(m).saturating_mul(m) <= DENSE_GRAM_WORK
}

/// Spectral norm `|| (1/n) A^* A - I ||`.
///
/// Dense Hermitian eigensolve when affordable, otherwise power iteration on
/// `H - I` with tolerance 1e-8.
pub fn gram_deviation(a: &DesignMatrix) -> Result<f64> {
    if a.nrows() < a.ncols() {
        return Err(Error::invalid("gram_deviation: needs n >= M"));
    }
    if use_dense_gram(a) {
        let h = dense_gram(a);
        let eigs = linalg::hermitian_eigenvalues(&h)?;
        Ok(eigs
            .iter()
            .map(|&lam| (lam - 1.0).abs())
            .fold(0.0, f64::max))
    } else {
        let (n, m) = (a.nrows(), a.ncols());
        let mut mid = vec![C64::new(0.0, 0.0); n];
        let mut out = vec![C64::new(0.0, 0.0); m];
        let rep = linalg::power_iteration(m, 0x6772616d, 1e-8, 10_000, |x, y| {
            a.apply(x, &mut mid);
            a.apply_adjoint(&mid, &mut out);
            for k in 0..m {
                y[k] = out[k] / n as f64 - x[k];
            }
        })?;
        Ok(rep.eigenvalue.abs())
    }
}

/// Smallest eigenvalue of `(1/n) A^* A`.
pub(crate) fn smallest_gram_eigenvalue(a: &DesignMatrix) -> Result<f64> {
    if use_dense_gram(a) {
        let eigs = linalg::hermitian_eigenvalues(&dense_gram(a))?;
        Ok(eigs[0])
    } else {
        // Shift by c >= lambda_max, then the dominant eigenvalue of cI - H
        // is c - lambda_min.
        let dev = gram_deviation(a)?;
        let c = 1.0 + dev + 1e-6;
        let (n, m) = (a.nrows(), a.ncols());
        let mut mid = vec![C64::new(0.0, 0.0); n];
        let mut out = vec![C64::new(0.0, 0.0); m];
        let rep = linalg::power_iteration(m, 0x6c6d696e, 1e-8, 10_000, |x, y| {
            a.apply(x, &mut mid);
            a.apply_adjoint(&mid, &mut out);
            for k in 0..m {
                y[k] = c * x[k] - out[k] / n as f64;
            }
        })?;
        Ok(c - rep.eigenvalue)
    }
}

/// `1 / sigma_min(A)`, the Moore-Penrose inverse norm.
///
/// Errors when the design is numerically rank deficient (smallest Gram
/// eigenvalue below 1e-10).
pub fn moore_penrose_norm(a: &DesignMatrix) -> Result<f64> {
    if a.nrows() < a.ncols() {
        return Err(Error::invalid("moore_penrose_norm: needs n >= M"));
    }
    let lam_min = smallest_gram_eigenvalue(a)?;
    if lam_min < 1e-10 {
        return Err(Error::Singular(format!(
            "moore_penrose_norm: smallest Gram eigenvalue {lam_min:.3e}"
        )));
    }
    Ok(1.0 / (a.nrows() as f64 * lam_min).sqrt())
}
