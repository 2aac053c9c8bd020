//! Cubature weights from the least-squares system, and integration with them.
//!
//! Given a design `L` over an index set `I` and the basis integrals
//! `b_k = int_D eta_k dmu_D`, the weights
//!
//! `q = conj(L) conj((L^* L)^{-1}) b`
//!
//! make `Q f = sum_j q_j f(x_j)` the implicit integral of the least-squares
//! fit: `Q f = sum_k c_k b_k` with `c` the recovered coefficients. In
//! particular `Q eta_k = b_k` for every `k` in the generating set. The
//! weights are the minimum-norm solution of the underdetermined system
//! `L^T q = b`, computed here by LSQR on the adjoint operator — the normal
//! matrix is never formed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bases::{BasisFamily, IntegrationMeasure};
use crate::index::IndexSet;
use crate::leastsq::{self, DesignMatrix, SolveReport, SolverConfig};
use crate::linalg::{norm2, AdjointOperator, LsqrTermination};
use crate::numeric::Accumulator;
use crate::sampling::NodeSet;
use crate::{C64, Error, Result};

/// A cubature rule: nodes, one complex weight per node, and the measure the
/// rule targets.
#[derive(Debug, Clone)]
pub struct CubatureRule {
    nodes: NodeSet,
    weights: Vec<C64>,
    measure: IntegrationMeasure,
}

impl CubatureRule {
    pub fn new(
        nodes: NodeSet,
        weights: Vec<C64>,
        measure: IntegrationMeasure,
    ) -> Result<CubatureRule> {
        if weights.len() != nodes.len() {
            return Err(Error::mismatch(format!(
                "cubature rule: {} weights for {} nodes",
                weights.len(),
                nodes.len()
            )));
        }
        Ok(CubatureRule {
            nodes,
            weights,
            measure,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn measure(&self) -> IntegrationMeasure {
        self.measure
    }

    /// Serialize as CSV with header `x1,...,xd,w_re,w_im`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let d = self.nodes.d();
        let mut header: Vec<String> = (1..=d).map(|t| format!("x{t}")).collect();
        header.push("w_re".into());
        header.push("w_im".into());
        w.write_record(&header)?;
        for (j, q) in self.weights.iter().enumerate() {
            let mut record: Vec<String> = self
                .nodes
                .point(j)
                .iter()
                .map(|x| format!("{x}"))
                .collect();
            record.push(format!("{}", q.re));
            record.push(format!("{}", q.im));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(BufWriter::new(File::create(path)?))
    }

    /// Read a rule written by [`CubatureRule::write_csv`]. The nodes come
    /// back with an external measure tag; the target measure must be
    /// supplied by the caller since the CSV stores only geometry.
    pub fn read_csv<R: Read>(source: R, measure: IntegrationMeasure) -> Result<CubatureRule> {
        let mut r = csv::Reader::from_reader(source);
        let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if headers.len() < 3
            || headers[headers.len() - 2] != "w_re"
            || headers[headers.len() - 1] != "w_im"
        {
            return Err(Error::Parse(
                "cubature CSV header must be x1,...,xd,w_re,w_im".into(),
            ));
        }
        let d = headers.len() - 2;
        for (t, h) in headers[..d].iter().enumerate() {
            if *h != format!("x{}", t + 1) {
                return Err(Error::Parse(format!(
                    "cubature CSV: expected column x{}, found {h:?}",
                    t + 1
                )));
            }
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for record in r.records() {
            let record = record?;
            if record.len() != d + 2 {
                return Err(Error::Parse(format!(
                    "cubature CSV: row with {} fields, expected {}",
                    record.len(),
                    d + 2
                )));
            }
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .unwrap_or_default()
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("cubature CSV field: {e}")))
            };
            for t in 0..d {
                points.push(parse(t)?);
            }
            weights.push(C64::new(parse(d)?, parse(d + 1)?));
        }
        let nodes = NodeSet::from_external(d, points)?;
        CubatureRule::new(nodes, weights, measure)
    }

    pub fn read_csv_path<P: AsRef<Path>>(
        path: P,
        measure: IntegrationMeasure,
    ) -> Result<CubatureRule> {
        Self::read_csv(BufReader::new(File::open(path)?), measure)
    }
}

/// `b_k = int_D eta_k dmu_D` for every index in the set.
///
/// Supported pairs: Fourier on the torus under `dx` (indicator of the zero
/// frequency); Chebyshev or Legendre on the cube under the volume measure
/// `mu_D = 1` (per-factor closed forms). Other combinations are refused.
pub fn basis_integrals(
    family: &BasisFamily,
    iset: &IndexSet,
    measure: IntegrationMeasure,
) -> Result<Vec<C64>> {
    if iset.d() != family.d() || iset.domain() != family.index_domain() {
        return Err(Error::mismatch(
            "basis_integrals: index set does not match the family",
        ));
    }
    if measure != IntegrationMeasure::Lebesgue {
        return Err(Error::invalid(format!(
            "basis_integrals: unsupported measure/basis pair ({measure:?}, {family:?})"
        )));
    }
    let factor = |h: i64| -> f64 {
        match family {
            BasisFamily::Fourier { .. } => {
                if h == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            // int_{-1}^{1} eta_h dx: 2 at h = 0, 2 sqrt2/(1-h^2) for even
            // h >= 2, zero for odd h.
            BasisFamily::Chebyshev { .. } => {
                if h == 0 {
                    2.0
                } else if h % 2 == 0 {
                    2.0 * 2.0f64.sqrt() / (1.0 - (h * h) as f64)
                } else {
                    0.0
                }
            }
            // Normalized Legendre: only the constant has nonzero integral.
            BasisFamily::Legendre => {
                if h == 0 {
                    2.0
                } else {
                    0.0
                }
            }
        }
    };
    Ok(iset
        .iter()
        .map(|k| C64::new(k.iter().map(|&h| factor(h)).product(), 0.0))
        .collect())
}

/// Shared core: minimum-norm solve of `A^* u = conj(b)`, then
/// `q = scale .* conj(u)`.
fn weights_from_adjoint_solve(
    design: &DesignMatrix,
    nodes: &NodeSet,
    b: &[C64],
    measure: IntegrationMeasure,
    config: SolverConfig,
    final_scale: Option<&[f64]>,
) -> Result<(CubatureRule, SolveReport)> {
    if design.nrows() != nodes.len() {
        return Err(Error::mismatch(format!(
            "cubature: design has {} rows, node set {}",
            design.nrows(),
            nodes.len()
        )));
    }
    if b.len() != design.ncols() {
        return Err(Error::mismatch(format!(
            "cubature: {} basis integrals for {} columns",
            b.len(),
            design.ncols()
        )));
    }
    if design.nrows() < design.ncols() {
        return Err(Error::invalid("cubature: needs n >= M"));
    }
    let rhs: Vec<C64> = b.iter().map(|v| v.conj()).collect();
    let adjoint = AdjointOperator(design);
    let (u, rep) = crate::linalg::lsqr(&adjoint, &rhs, config.tol, config.maxit)?;
    if matches!(rep.termination, LsqrTermination::IterationLimit) {
        let lam_min = leastsq::smallest_gram_eigenvalue(design)?;
        if lam_min < 1e-10 {
            return Err(Error::Singular(format!(
                "cubature: smallest Gram eigenvalue {lam_min:.3e} below 1e-10"
            )));
        }
    }
    let weights: Vec<C64> = match final_scale {
        Some(scale) => u
            .iter()
            .zip(scale)
            .map(|(ui, &s)| ui.conj() * s)
            .collect(),
        None => u.iter().map(|ui| ui.conj()).collect(),
    };
    let bnorm = norm2(&rhs);
    let report = SolveReport {
        iterations: rep.iterations,
        relative_residual: if bnorm > 0.0 {
            rep.residual_norm / bnorm
        } else {
            0.0
        },
        termination: rep.termination,
    };
    Ok((CubatureRule::new(nodes.clone(), weights, measure)?, report))
}

/// Optimal cubature weights `q = conj(L) conj((L^*L)^{-1}) b` for a plain
/// design.
pub fn cubature_weights(
    design: &DesignMatrix,
    nodes: &NodeSet,
    b: &[C64],
    measure: IntegrationMeasure,
    config: SolverConfig,
) -> Result<(CubatureRule, SolveReport)> {
    if design.is_weighted() {
        return Err(Error::invalid(
            "cubature_weights: design is weighted; use reweighted_cubature_weights",
        ));
    }
    weights_from_adjoint_solve(design, nodes, b, measure, config, None)
}

/// Reweighted cubature for importance-sampled nodes:
/// `q = D_rho conj(A) conj((A^*A)^{-1}) b` with `A` the weighted design and
/// `D_rho = diag(1/sqrt(rho_m(x^j)))` (zero weight where the density
/// vanishes). On constant-density models this reduces bit-for-bit to
/// [`cubature_weights`] on the plain design.
pub fn reweighted_cubature_weights(
    design: &DesignMatrix,
    nodes: &NodeSet,
    b: &[C64],
    measure: IntegrationMeasure,
    config: SolverConfig,
) -> Result<(CubatureRule, SolveReport)> {
    if !design.is_weighted() {
        return Err(Error::invalid(
            "reweighted_cubature_weights: design carries no density scaling",
        ));
    }
    let scale = design
        .row_scale()
        .expect("weighted design has a row scale")
        .to_vec();
    weights_from_adjoint_solve(design, nodes, b, measure, config, Some(&scale))
}

/// `Q f = sum_j q_j f(x_j)` (plain dot product, no conjugation).
pub fn integrate(rule: &CubatureRule, samples: &[C64]) -> Result<C64> {
    if samples.len() != rule.len() {
        return Err(Error::mismatch(format!(
            "integrate: {} samples for {} weights",
            samples.len(),
            rule.len()
        )));
    }
    let mut re = Accumulator::new();
    let mut im = Accumulator::new();
    for (q, f) in rule.weights.iter().zip(samples) {
        let p = q * f;
        re.add(p.re);
        im.add(p.im);
    }
    Ok(C64::new(re.value(), im.value()))
}
