//! Seeded random node generation for all supported measures.
//!
//! Node sets are drawn i.i.d. from one of: the uniform measure on the torus
//! `[0,1)^d`, the Chebyshev (arcsine) measure on `[-1,1]^d`, the importance
//! mixture `rho_m` attached to a [`SpectrumModel`], or the uniform measure on
//! an axis-aligned box. Every draw is a pure function of `(master seed,
//! stream id)`, so distinct Monte-Carlo trials can run on distinct streams in
//! any order and still reproduce bit-identically.
//!
//! The importance density is the half/half mixture
//!
//! ```text
//! rho_m(x) = 1/2 [ (m-1)^(-1) sum_{j<m} |eta_j(x)|^2
//!                + (sum_{j>=m} lambda_j)^(-1) (K(x,x) - sum_{j<m} |e_j(x)|^2) ]
//! ```
//!
//! (indices 1-based: `j < m` runs over the first `m-1` eigenfunctions). For
//! the Fourier model both parts are identically 1 and the mixture degenerates
//! to the uniform measure; for the Legendre model both branches are sampled
//! by rejection against the Chebyshev measure, whose envelope constant 2
//! follows from the Bernstein bound
//! `(2 deg + 1) P_deg(x)^2 sqrt(1 - x^2) <= 4 / pi`.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::bases::{SpectrumKind, SpectrumModel};
use crate::{Error, Result};

/// Generating measure of a [`NodeSet`].
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    /// Uniform on `[0,1)^d`.
    UniformTorus,
    /// Tensor arcsine measure on `[-1,1]^d`.
    Chebyshev,
    /// Importance mixture `rho_m` of a spectral model.
    Importance { m: usize },
    /// Uniform on the box `prod [lo_t, hi_t)`.
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Loaded from an external file; no generating measure is claimed.
    External,
}

/// An immutable batch of sampling nodes with seed provenance.
#[derive(Debug, Clone)]
pub struct NodeSet {
    d: usize,
    /// Row-major `n x d` coordinates.
    points: Vec<f64>,
    measure: Measure,
    /// `rho_m` at each node (importance mode only).
    densities: Option<Vec<f64>>,
    seed: u64,
    stream: u64,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        if self.d == 0 { 0 } else { self.points.len() / self.d }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Coordinates of node `i`.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    /// Flat row-major coordinate storage.
    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    /// Recorded densities (present exactly in importance mode).
    pub fn densities(&self) -> Option<&[f64]> {
        self.densities.as_deref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Wrap externally supplied coordinates (flat row-major `n x d`) as a
    /// node set with [`Measure::External`] and no densities.
    pub fn from_external(d: usize, points: Vec<f64>) -> Result<NodeSet> {
        if d == 0 {
            return Err(Error::invalid("from_external: d must be >= 1"));
        }
        if points.len() % d != 0 {
            return Err(Error::mismatch(format!(
                "from_external: {} coordinates are not a multiple of d = {d}",
                points.len()
            )));
        }
        Ok(NodeSet {
            d,
            points,
            measure: Measure::External,
            densities: None,
            seed: 0,
            stream: 0,
        })
    }

    /// Serialize as CSV with header `x1,...,xd[,rho]`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header: Vec<String> = (1..=self.d).map(|t| format!("x{t}")).collect();
        if self.densities.is_some() {
            header.push("rho".to_string());
        }
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> =
                self.point(i).iter().map(|v| format!("{v}")).collect();
            if let Some(rho) = &self.densities {
                row.push(format!("{}", rho[i]));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Load nodes from CSV (`x1,...,xd` with optional trailing `rho`).
    ///
    /// The result carries [`Measure::External`]: the file format does not
    /// record how the points were generated.
    pub fn read_csv<R: Read>(source: R) -> Result<NodeSet> {
        let mut r = csv::Reader::from_reader(source);
        let header = r.headers()?.clone();
        let mut d = 0;
        for (t, field) in header.iter().enumerate() {
            if field == format!("x{}", t + 1) {
                d += 1;
            } else if field == "rho" && t == header.len() - 1 {
                break;
            } else {
                return Err(Error::Parse(format!(
                    "node CSV header field {t} is {field:?}, expected x{} or trailing rho",
                    t + 1
                )));
            }
        }
        if d == 0 {
            return Err(Error::Parse("node CSV has no coordinate columns".into()));
        }
        let has_rho = header.len() == d + 1;
        let mut points = Vec::new();
        let mut densities = Vec::new();
        for record in r.records() {
            let record = record?;
            if record.len() != header.len() {
                return Err(Error::Parse(format!(
                    "node CSV row has {} fields, expected {}",
                    record.len(),
                    header.len()
                )));
            }
            for t in 0..d {
                points.push(parse_f64(record.get(t).unwrap())?);
            }
            if has_rho {
                densities.push(parse_f64(record.get(d).unwrap())?);
            }
        }
        Ok(NodeSet {
            d,
            points,
            measure: Measure::External,
            densities: if has_rho { Some(densities) } else { None },
            seed: 0,
            stream: 0,
        })
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P) -> Result<NodeSet> {
        NodeSet::read_csv(std::fs::File::open(path)?)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("bad float {s:?}: {e}")))
}

/// The RNG for (seed, stream); one stream per independent trial.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Default Legendre kernel truncation for the importance machinery.
pub fn default_trunc(m: usize) -> usize {
    (50 * m).max(2000)
}

/// `n` i.i.d. uniform points on the torus `[0,1)^d`.
pub fn draw_uniform_torus(n: usize, d: usize, seed: u64, stream: u64) -> Result<NodeSet> {
    if d == 0 {
        return Err(Error::invalid("draw_uniform_torus: d must be >= 1"));
    }
    let mut rng = stream_rng(seed, stream);
    let points: Vec<f64> = (0..n * d).map(|_| rng.random::<f64>()).collect();
    Ok(NodeSet {
        d,
        points,
        measure: Measure::UniformTorus,
        densities: None,
        seed,
        stream,
    })
}

/// `n` i.i.d. points from the tensor Chebyshev measure on `[-1,1]^d`
/// (`x_t = cos(pi u_t)`, `u_t` uniform).
pub fn draw_chebyshev(n: usize, d: usize, seed: u64, stream: u64) -> Result<NodeSet> {
    if d == 0 {
        return Err(Error::invalid("draw_chebyshev: d must be >= 1"));
    }
    let mut rng = stream_rng(seed, stream);
    let points: Vec<f64> = (0..n * d)
        .map(|_| (std::f64::consts::PI * rng.random::<f64>()).cos())
        .collect();
    Ok(NodeSet {
        d,
        points,
        measure: Measure::Chebyshev,
        densities: None,
        seed,
        stream,
    })
}

/// `n` i.i.d. uniform points on the box `prod [lo_t, hi_t)`.
pub fn draw_uniform_box(
    n: usize,
    lo: &[f64],
    hi: &[f64],
    seed: u64,
    stream: u64,
) -> Result<NodeSet> {
    let d = lo.len();
    if d == 0 || hi.len() != d {
        return Err(Error::mismatch(format!(
            "draw_uniform_box: box has {} lower and {} upper bounds",
            lo.len(),
            hi.len()
        )));
    }
    for t in 0..d {
        if !(lo[t] < hi[t]) {
            return Err(Error::invalid(format!(
                "draw_uniform_box: empty side [{}, {})",
                lo[t], hi[t]
            )));
        }
    }
    let mut rng = stream_rng(seed, stream);
    let mut points = Vec::with_capacity(n * d);
    for _ in 0..n {
        for t in 0..d {
            points.push(lo[t] + (hi[t] - lo[t]) * rng.random::<f64>());
        }
    }
    Ok(NodeSet {
        d,
        points,
        measure: Measure::UniformBox {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
        },
        densities: None,
        seed,
        stream,
    })
}

/// Importance density `rho_m(x)` (see the module docs for the mixture).
///
/// `trunc` controls the Legendre kernel-diagonal truncation; the certified
/// truncation error is `legendre_kernel_diag`'s remainder divided by the tail
/// eigenvalue sum. Fourier models return exactly 1.
pub fn density_rho_m(
    x: &[f64],
    model: &SpectrumModel,
    m: usize,
    trunc: usize,
) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid("density_rho_m: m must be >= 2"));
    }
    match model.kind() {
        SpectrumKind::Fourier { .. } => {
            // Both mixture parts are identically 1: |eta_j| = 1 and the
            // kernel diagonal is constant.
            if m > model.m_max() {
                return Err(Error::RangeExceeded(format!(
                    "density_rho_m: m = {m} exceeds enumerated {}",
                    model.m_max()
                )));
            }
            Ok(1.0)
        }
        SpectrumKind::Legendre { .. } => {
            let spectral = model.eta_sq_sum(x, m - 1)? / (m - 1) as f64;
            let (tail, _) = model.tail_lambda(m - 1)?;
            let (kernel, _) = model.kernel_diag(x, trunc)?;
            let numerator = kernel - model.e_sq_sum(x, m - 1)?;
            let rho = 0.5 * (spectral + numerator / tail);
            if !rho.is_finite() {
                return Err(Error::invalid(format!(
                    "density_rho_m: nonfinite density at x = {:?}",
                    x
                )));
            }
            Ok(rho.max(0.0))
        }
    }
}

/// Rejection-sampling proposal cap; acceptance runs near 1/2, so hitting the
/// cap indicates a broken envelope rather than bad luck.
const MAX_PROPOSALS: usize = 10_000;

/// Bernstein envelope certificate: acceptance ratios may exceed 1 only by
/// rounding noise.
const ENVELOPE_SLACK: f64 = 1e-9;

/// `n` i.i.d. points from the importance measure `rho_m d(rho_D)`.
///
/// Fourier models degenerate to the uniform torus draw with densities
/// identically 1. Legendre models sample the two mixture branches by
/// rejection against the Chebyshev measure (envelope constant 2); the
/// acceptance ratio is checked against its certificate on every proposal.
pub fn draw_importance(
    n: usize,
    model: &SpectrumModel,
    m: usize,
    seed: u64,
    stream: u64,
) -> Result<NodeSet> {
    if m < 2 {
        return Err(Error::invalid("draw_importance: m must be >= 2"));
    }
    match model.kind() {
        SpectrumKind::Fourier { d, .. } => {
            if m > model.m_max() {
                return Err(Error::RangeExceeded(format!(
                    "draw_importance: m = {m} exceeds enumerated {}",
                    model.m_max()
                )));
            }
            let uniform = draw_uniform_torus(n, *d, seed, stream)?;
            Ok(NodeSet {
                measure: Measure::Importance { m },
                densities: Some(vec![1.0; n]),
                ..uniform
            })
        }
        SpectrumKind::Legendre { .. } => {
            let trunc = default_trunc(m);
            let (tail, _) = model.tail_lambda(m - 1)?;
            let mut rng = stream_rng(seed, stream);
            let mut points = Vec::with_capacity(n);
            let mut densities = Vec::with_capacity(n);
            for _ in 0..n {
                let x = loop {
                    let x = draw_importance_1d(&mut rng, model, m, trunc, tail)?;
                    // Zero-density points are measure-zero; redrawing keeps
                    // the weighted design matrix free of divisions by zero.
                    if density_rho_m(&[x], model, m, trunc)? > 0.0 {
                        break x;
                    }
                };
                points.push(x);
                densities.push(density_rho_m(&[x], model, m, trunc)?);
            }
            Ok(NodeSet {
                d: 1,
                points,
                measure: Measure::Importance { m },
                densities: Some(densities),
                seed,
                stream,
            })
        }
    }
}

/// One draw from the Legendre mixture: fair coin, then rejection against the
/// Chebyshev measure on the chosen branch.
fn draw_importance_1d(
    rng: &mut ChaCha12Rng,
    model: &SpectrumModel,
    m: usize,
    trunc: usize,
    tail: f64,
) -> Result<f64> {
    let spectral_branch = rng.random::<f64>() < 0.5;
    let j = if spectral_branch {
        rng.random_range(0..m - 1)
    } else {
        0
    };
    for _ in 0..MAX_PROPOSALS {
        let x = (std::f64::consts::PI * rng.random::<f64>()).cos();
        // Acceptance = target density / (2 * Chebyshev density), both with
        // respect to dx; the factor simplifies to (pi/4) sqrt(1-x^2) times
        // the target's spectral factor.
        let shape = 0.25 * std::f64::consts::PI * (1.0 - x * x).max(0.0).sqrt();
        let accept = if spectral_branch {
            let eta = model.eta(j, &[x])?.re;
            eta * eta * shape
        } else {
            let (kernel, _) = model.kernel_diag(&[x], trunc)?;
            let numerator = (kernel - model.e_sq_sum(&[x], m - 1)?).max(0.0);
            numerator / tail * shape
        };
        if accept > 1.0 + ENVELOPE_SLACK {
            return Err(Error::invalid(format!(
                "draw_importance: envelope certificate failed (ratio {accept})"
            )));
        }
        if rng.random::<f64>() < accept.min(1.0) {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence(format!(
        "draw_importance: no acceptance within {MAX_PROPOSALS} proposals"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::SpectrumModel;
    use crate::index::WeightRule;
    use crate::numeric::gauss_legendre;

    /// Kolmogorov-Smirnov statistic against a CDF.
    fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
        sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sample.len() as f64;
        let mut d = 0.0f64;
        for (i, &x) in sample.iter().enumerate() {
            let f = cdf(x);
            d = d.max((f - i as f64 / n).abs());
            d = d.max(((i + 1) as f64 / n - f).abs());
        }
        d
    }

    #[test]
    fn uniform_torus_basics() {
        assert!(draw_uniform_torus(0, 2, 1, 0).unwrap().is_empty());
        let a = draw_uniform_torus(1000, 2, 42, 7).unwrap();
        let b = draw_uniform_torus(1000, 2, 42, 7).unwrap();
        assert_eq!(a.points_flat(), b.points_flat(), "determinism");
        let c = draw_uniform_torus(1000, 2, 42, 8).unwrap();
        assert_ne!(a.points_flat(), c.points_flat(), "streams differ");

        let big = draw_uniform_torus(100_000, 2, 3, 0).unwrap();
        for t in 0..2 {
            let mean: f64 = (0..big.len()).map(|i| big.point(i)[t]).sum::<f64>()
                / big.len() as f64;
            assert!((mean - 0.5).abs() < 0.005, "axis {t} mean {mean}");
        }
        assert!(big.points_flat().iter().all(|&x| (0.0..1.0).contains(&x)));
    }

    #[test]
    fn chebyshev_marginals() {
        let set = draw_chebyshev(100_000, 1, 11, 0).unwrap();
        let below: f64 = set
            .points_flat()
            .iter()
            .filter(|&&x| x < 0.0)
            .count() as f64
            / set.len() as f64;
        assert!((below - 0.5).abs() < 0.01, "CDF at 0: {below}");
        let extreme = set
            .points_flat()
            .iter()
            .filter(|&&x| x.abs() > 0.9)
            .count() as f64
            / set.len() as f64;
        let want = 2.0 * 0.9f64.acos() / std::f64::consts::PI;
        assert!((extreme - want).abs() < 0.01, "tail mass {extreme} vs {want}");
    }

    #[test]
    fn uniform_box_basics() {
        assert!(draw_uniform_box(0, &[-1.0], &[2.0], 1, 0).unwrap().is_empty());
        let set = draw_uniform_box(100_000, &[-1.0], &[2.0], 5, 0).unwrap();
        let mean: f64 = set.points_flat().iter().sum::<f64>() / set.len() as f64;
        assert!((mean - 0.5).abs() < 0.015, "mean {mean}");
        assert!(set.points_flat().iter().all(|&x| (-1.0..2.0).contains(&x)));
        assert!(draw_uniform_box(1, &[0.0], &[0.0], 1, 0).is_err());
    }

    #[test]
    fn fourier_density_is_one_and_importance_matches_uniform() {
        let model = SpectrumModel::fourier(2, WeightRule::Star { s: 1.0 }, 64).unwrap();
        assert_eq!(
            density_rho_m(&[0.3, 0.7], &model, 17, 10).unwrap(),
            1.0
        );
        let set = draw_importance(50_000, &model, 17, 9, 0).unwrap();
        assert!(set.densities().unwrap().iter().all(|&r| r == 1.0));
        // Marginal of the first coordinate is uniform: KS within 0.01.
        let mut xs: Vec<f64> = (0..set.len()).map(|i| set.point(i)[0]).collect();
        let d = ks_statistic(&mut xs, |x| x.clamp(0.0, 1.0));
        assert!(d < 0.01, "KS statistic {d}");
    }

    #[test]
    fn legendre_density_integrates_to_one() {
        // Gauss with 2048 nodes integrates every P_deg^2 up to the kernel
        // truncation 2000 exactly, so only certified tails remain.
        let model = SpectrumModel::legendre(2.0).unwrap();
        let (nodes, weights) = gauss_legendre(2048);
        let mut acc = crate::numeric::Accumulator::new();
        for (&x, &w) in nodes.iter().zip(&weights) {
            acc.add(0.5 * w * density_rho_m(&[x], &model, 10, 2000).unwrap());
        }
        let integral = acc.value();
        assert!((integral - 1.0).abs() < 1e-3, "integral {integral}");
    }

    #[test]
    fn legendre_density_nonnegative_on_grid() {
        let model = SpectrumModel::legendre(2.0).unwrap();
        for i in 0..10_000 {
            let x = -1.0 + 2.0 * (i as f64 + 0.5) / 10_000.0;
            assert!(density_rho_m(&[x], &model, 10, 2000).unwrap() >= 0.0);
        }
    }

    #[test]
    fn importance_draw_matches_density_histogram() {
        // 50-bin multinomial check against quadrature bin masses, 3-sigma
        // bands (deterministic seed).
        let model = SpectrumModel::legendre(2.0).unwrap();
        let m = 20;
        let n = 100_000usize;
        let set = draw_importance(n, &model, m, 2024, 0).unwrap();
        assert_eq!(set.len(), n);
        let trunc = default_trunc(m);

        // Recorded densities reproduce the generator's own computation.
        for i in (0..n).step_by(9931) {
            let want = density_rho_m(set.point(i), &model, m, trunc).unwrap();
            assert_eq!(set.densities().unwrap()[i], want);
        }

        let bins = 50usize;
        let mut counts = vec![0usize; bins];
        for i in 0..n {
            let x = set.point(i)[0];
            let b = (((x + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
        let (gn, gw) = gauss_legendre(64);
        for b in 0..bins {
            let lo = -1.0 + 2.0 * b as f64 / bins as f64;
            let hi = -1.0 + 2.0 * (b + 1) as f64 / bins as f64;
            // Bin mass under rho_m d(rho_D) = rho_m(x)/2 dx.
            let mut p = 0.0;
            for (&u, &w) in gn.iter().zip(&gw) {
                let x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * u;
                p += 0.5 * (hi - lo) * w * 0.5
                    * density_rho_m(&[x], &model, m, trunc).unwrap();
            }
            let sigma = (n as f64 * p * (1.0 - p)).sqrt();
            let dev = (counts[b] as f64 - n as f64 * p).abs();
            assert!(
                dev <= 3.0 * sigma,
                "bin {b}: count {} expected {:.1} ({:.2} sigma)",
                counts[b],
                n as f64 * p,
                dev / sigma
            );
        }
    }

    #[test]
    fn node_csv_roundtrip() {
        let set = draw_importance(
            64,
            &SpectrumModel::legendre(2.0).unwrap(),
            5,
            77,
            3,
        )
        .unwrap();
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,rho\n"), "header: {}", &text[..12]);
        let back = NodeSet::read_csv(&buf[..]).unwrap();
        assert_eq!(back.d(), 1);
        assert_eq!(back.points_flat(), set.points_flat());
        assert_eq!(back.densities().unwrap(), set.densities().unwrap());
        assert_eq!(*back.measure(), Measure::External);

        // Plain coordinates, d = 2, no rho column.
        let grid = draw_uniform_torus(10, 2, 1, 0).unwrap();
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"x1,x2\n"));
        let back = NodeSet::read_csv(&buf[..]).unwrap();
        assert_eq!(back.points_flat(), grid.points_flat());
        assert!(back.densities().is_none());

        // Malformed headers are rejected.
        assert!(NodeSet::read_csv(&b"a,b\n0,0\n"[..]).is_err());
        assert!(NodeSet::read_csv(&b"x1,x3\n0,0\n"[..]).is_err());
    }
}
