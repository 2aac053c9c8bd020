//! Orthonormal systems (Fourier, Chebyshev, Legendre) and the spectral models
//! they induce.
//!
//! A [`SpectrumModel`] couples an eigenvalue sequence `lambda_j` (squared
//! singular values, nonincreasing) with the orthonormal functions `eta_j` in
//! the enumeration order fixed by [`crate::index`]. The kernel diagonal
//! `K(x,x) = sum_j lambda_j |eta_j(x)|^2` and the trace come with certified
//! remainders from integral comparison, so every quantity derived from them
//! (importance densities, tail bounds) can report how accurate it is.
//!
//! Conventions:
//! * Fourier: `eta_k(x) = exp(2 pi i k.x)` on `[0,1)^d`, orthonormal for the
//!   Lebesgue probability measure;
//! * Chebyshev: `eta_h(x) = prod_t sqrt(2)^min(h_t,1) cos(h_t arccos x_t)` on
//!   `[-1,1]^d`, orthonormal for the Chebyshev measure
//!   `prod_t dx_t / (pi sqrt(1 - x_t^2))`;
//! * Legendre (univariate): `eta_deg(x) = sqrt(2 deg + 1) P_deg(x)` on
//!   `[-1,1]`, orthonormal for `dx/2`, eigenvalues
//!   `lambda_deg = (1 + (deg (deg+1))^s)^(-1)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use crate::index::{hyperbolic_cross, IndexDomain, IndexSet, WeightRule};
use crate::{C64, Error, Result};

/// Orthonormal system family; fixes domain, measure, and index domain.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisFamily {
    /// `exp(2 pi i k.x)` on the torus `[0,1)^d`.
    Fourier { d: usize },
    /// Tensor Chebyshev cosines on `[-1,1]^d` under the Chebyshev measure.
    Chebyshev { d: usize },
    /// Univariate normalized Legendre polynomials on `[-1,1]` under `dx/2`.
    Legendre,
}

impl BasisFamily {
    /// Spatial dimension.
    pub fn d(&self) -> usize {
        match self {
            BasisFamily::Fourier { d } | BasisFamily::Chebyshev { d } => *d,
            BasisFamily::Legendre => 1,
        }
    }

    /// Index domain matching the family (signed frequencies vs degrees).
    pub fn index_domain(&self) -> IndexDomain {
        match self {
            BasisFamily::Fourier { .. } => IndexDomain::Signed,
            _ => IndexDomain::Nonnegative,
        }
    }

    /// Whether basis values can be complex (only Fourier).
    pub fn is_complex(&self) -> bool {
        matches!(self, BasisFamily::Fourier { .. })
    }
}

/// Integration measures supported by the cubature and test-function
/// operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrationMeasure {
    /// Lebesgue measure on the family's domain: the probability measure `dx`
    /// on the torus `[0,1)^d`, the plain volume measure on `[-1,1]^d`.
    Lebesgue,
    /// Tensor Chebyshev (arcsine) probability measure on `[-1,1]^d`.
    Chebyshev,
}

/// Clamp a coordinate to `[-1, 1]`, tolerating 1e-15 of rounding overshoot.
pub(crate) fn clamp_unit(x: f64) -> Result<f64> {
    if x.abs() <= 1.0 {
        Ok(x)
    } else if x.abs() <= 1.0 + 1e-15 {
        Ok(x.signum())
    } else {
        Err(Error::invalid(format!(
            "coordinate {x} outside [-1, 1]"
        )))
    }
}

/// Normalized Legendre value `sqrt(2 deg + 1) P_deg(x)`.
pub fn eval_legendre(degree: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if degree == 0 {
        return 1.0;
    }
    for k in 2..=degree {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    ((2 * degree + 1) as f64).sqrt() * p1
}

/// Stream `(deg, P_deg(x))` for `deg = 0..=degmax` (unnormalized Legendre).
pub(crate) fn legendre_scan(x: f64, degmax: usize, mut visit: impl FnMut(usize, f64)) {
    let mut p0 = 1.0;
    visit(0, p0);
    if degmax == 0 {
        return;
    }
    let mut p1 = x;
    visit(1, p1);
    for k in 2..=degmax {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
        visit(k, p2);
    }
}

/// Fill `out[h] = cos(h theta)` for `h = 0..out.len()` by the stable
/// three-term recurrence.
pub(crate) fn cos_table(theta: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    let c = theta.cos();
    out[1] = c;
    let two_c = 2.0 * c;
    for h in 2..out.len() {
        out[h] = two_c * out[h - 1] - out[h - 2];
    }
}

/// Fill `out[h] = exp(2 pi i h x)` for `h = 0..out.len()` (test oracle for
/// the recursive phase tables used in assembly).
#[cfg(test)]
pub(crate) fn fourier_table(x: f64, out: &mut [C64]) {
    if out.is_empty() {
        return;
    }
    out[0] = C64::new(1.0, 0.0);
    if out.len() == 1 {
        return;
    }
    let step = C64::from_polar(1.0, 2.0 * PI * x);
    for h in 1..out.len() {
        out[h] = out[h - 1] * step;
    }
}

/// Fill `out[deg] = sqrt(2 deg + 1) P_deg(x)` for `deg = 0..out.len()`.
pub(crate) fn legendre_table(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    legendre_scan(x, out.len() - 1, |deg, p| {
        out[deg] = ((2 * deg + 1) as f64).sqrt() * p;
    });
}

/// Evaluate one basis function `eta_k(x)`.
pub fn eval_basis(family: &BasisFamily, k: &[i64], x: &[f64]) -> Result<C64> {
    let d = family.d();
    if k.len() != d || x.len() != d {
        return Err(Error::mismatch(format!(
            "eval_basis: family dimension {d}, index length {}, point length {}",
            k.len(),
            x.len()
        )));
    }
    match family {
        BasisFamily::Fourier { .. } => {
            let phase: f64 = k.iter().zip(x).map(|(&ki, &xi)| ki as f64 * xi).sum();
            Ok(C64::from_polar(1.0, 2.0 * PI * phase))
        }
        BasisFamily::Chebyshev { .. } => {
            let mut v = 1.0;
            for (&h, &xi) in k.iter().zip(x) {
                if h < 0 {
                    return Err(Error::invalid(format!(
                        "eval_basis: negative Chebyshev degree {h}"
                    )));
                }
                let xi = clamp_unit(xi)?;
                let factor = (h as f64 * xi.acos()).cos();
                v *= if h == 0 {
                    factor
                } else {
                    std::f64::consts::SQRT_2 * factor
                };
            }
            Ok(C64::new(v, 0.0))
        }
        BasisFamily::Legendre => {
            let deg = k[0];
            if deg < 0 {
                return Err(Error::invalid(format!(
                    "eval_basis: negative Legendre degree {deg}"
                )));
            }
            let xi = clamp_unit(x[0])?;
            Ok(C64::new(eval_legendre(deg as usize, xi), 0.0))
        }
    }
}

/// Legendre-model eigenvalue `lambda_deg = (1 + (deg (deg + 1))^s)^(-1)`.
pub fn legendre_lambda(s: f64, deg: usize) -> f64 {
    let t = deg as f64 * (deg as f64 + 1.0);
    1.0 / (1.0 + t.powf(s))
}

/// Truncated Legendre kernel diagonal with a certified remainder.
///
/// Returns `(sum_{deg<=trunc} lambda_deg (2 deg + 1) P_deg(x)^2, tail)` where
/// `tail >= sum_{deg>trunc} lambda_deg (2 deg + 1) sup |P_deg|^2` by the
/// integral comparison `sum_{deg>T} 3 deg^(1-2s) <= 3 T^(2-2s) / (2s-2)`
/// (valid for `s > 1`; `sup |P_deg| = 1` at the endpoint).
pub fn legendre_kernel_diag(s: f64, x: f64, trunc: usize) -> Result<(f64, f64)> {
    if !(s > 1.0) {
        return Err(Error::invalid(format!(
            "legendre_kernel_diag: tail certification needs s > 1, got {s}"
        )));
    }
    if trunc < 1 {
        return Err(Error::invalid("legendre_kernel_diag: trunc must be >= 1"));
    }
    let x = clamp_unit(x)?;
    let mut value = 0.0;
    legendre_scan(x, trunc, |deg, p| {
        value += legendre_lambda(s, deg) * (2 * deg + 1) as f64 * p * p;
    });
    let t = trunc as f64;
    let tail = 3.0 * t.powf(2.0 - 2.0 * s) / (2.0 * s - 2.0);
    Ok((value, tail))
}

/// One-dimensional eigenvalue `lambda` of the Fourier model at frequency `t`.
fn fourier_lambda_1d(rule: &WeightRule, t: f64) -> f64 {
    match *rule {
        WeightRule::Star { s } => 1.0 / (1.0 + (2.0 * PI * t).powf(2.0 * s)),
        WeightRule::Pound { s } => (1.0 + 2.0 * PI * t).powf(-2.0 * s),
        WeightRule::Plain => 1.0 / (1.0 + t * t),
    }
}

/// `sum_{t in Z} lambda_1d(|t|)` with a certified integral-comparison
/// remainder; the effective decay exponent `2s` must exceed 1.
fn fourier_trace_1d(rule: &WeightRule) -> Result<(f64, f64)> {
    let two_s = match *rule {
        WeightRule::Star { s } | WeightRule::Pound { s } => 2.0 * s,
        WeightRule::Plain => 2.0,
    };
    if !(two_s > 1.0) {
        return Err(Error::invalid(format!(
            "fourier trace diverges: decay exponent 2s = {two_s} <= 1"
        )));
    }
    let mut acc = crate::numeric::Accumulator::new();
    acc.add(1.0);
    let mut t = 0u64;
    loop {
        t += 1;
        let term = fourier_lambda_1d(rule, t as f64);
        acc.add(2.0 * term);
        if (t >= 64 && term < 1e-18 * acc.value()) || t >= 20_000_000 {
            break;
        }
    }
    let big_t = t as f64;
    // sum_{|t| > T} lambda <= 2 int_T^inf lambda(u) du, with lambda bounded by
    // its leading power for each rule.
    let remainder = match *rule {
        WeightRule::Star { s } => {
            2.0 * (2.0 * PI).powf(-2.0 * s) * big_t.powf(1.0 - 2.0 * s) / (2.0 * s - 1.0)
        }
        WeightRule::Pound { s } => {
            (1.0 + 2.0 * PI * big_t).powf(1.0 - 2.0 * s) / (PI * (2.0 * s - 1.0))
        }
        WeightRule::Plain => 2.0 / big_t,
    };
    Ok((acc.value(), remainder))
}

/// Which spectral model a [`SpectrumModel`] wraps.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumKind {
    /// Tensor Fourier model: `lambda_j = w(k_j)^(-2)` along the
    /// hyperbolic-cross enumeration of `rule`.
    Fourier { d: usize, rule: WeightRule },
    /// Univariate Legendre model with smoothness `s`.
    Legendre { s: f64 },
}

/// Eigenvalue sequence plus orthonormal system, with certified trace/tails.
///
/// Immutable after construction; `m_max` bounds the indices addressable in
/// the Fourier case (the Legendre case is unbounded). Tail sums are memoized
/// because the importance-sampling hot path asks for the same tail per draw.
#[derive(Debug)]
pub struct SpectrumModel {
    kind: SpectrumKind,
    cross: Option<IndexSet>,
    trace: (f64, f64),
    tail_cache: Mutex<HashMap<usize, (f64, f64)>>,
}

impl Clone for SpectrumModel {
    fn clone(&self) -> Self {
        SpectrumModel {
            kind: self.kind.clone(),
            cross: self.cross.clone(),
            trace: self.trace,
            tail_cache: Mutex::new(self.tail_cache.lock().unwrap().clone()),
        }
    }
}

impl SpectrumModel {
    /// Fourier model over the hyperbolic cross of `rule`, enumerated up to
    /// `m_max` indices.
    pub fn fourier(d: usize, rule: WeightRule, m_max: usize) -> Result<Self> {
        let cross = hyperbolic_cross(d, m_max, &rule, IndexDomain::Signed)?;
        let t1 = fourier_trace_1d(&rule)?;
        // trace = t1^d; the remainder grows like d * t1^(d-1) * r1.
        let value = t1.0.powi(d as i32);
        let remainder = (t1.0 + t1.1).powi(d as i32) - value;
        Ok(SpectrumModel {
            kind: SpectrumKind::Fourier { d, rule },
            cross: Some(cross),
            trace: (value, remainder.max(0.0)),
            tail_cache: Mutex::new(HashMap::new()),
        })
    }

    /// Univariate Legendre model; the trace needs `s > 1/2`.
    pub fn legendre(s: f64) -> Result<Self> {
        if !(s > 0.5) || !s.is_finite() {
            return Err(Error::invalid(format!(
                "legendre model: trace requires s > 1/2, got {s}"
            )));
        }
        let trace = legendre_lambda_tail(s, 0)?;
        Ok(SpectrumModel {
            kind: SpectrumKind::Legendre { s },
            cross: None,
            trace,
            tail_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn kind(&self) -> &SpectrumKind {
        &self.kind
    }

    /// Spatial dimension.
    pub fn d(&self) -> usize {
        match &self.kind {
            SpectrumKind::Fourier { d, .. } => *d,
            SpectrumKind::Legendre { .. } => 1,
        }
    }

    /// Number of addressable eigenpairs (`usize::MAX` when unbounded).
    pub fn m_max(&self) -> usize {
        self.cross.as_ref().map_or(usize::MAX, |c| c.len())
    }

    /// Basis family whose span the model's eigenfunctions live in.
    pub fn family(&self) -> BasisFamily {
        match &self.kind {
            SpectrumKind::Fourier { d, .. } => BasisFamily::Fourier { d: *d },
            SpectrumKind::Legendre { .. } => BasisFamily::Legendre,
        }
    }

    /// The enumerated index set (Fourier only).
    pub fn index_set(&self) -> Option<&IndexSet> {
        self.cross.as_ref()
    }

    /// Eigenvalue `lambda_j` (0-based enumeration order).
    pub fn lambda(&self, j: usize) -> f64 {
        match &self.kind {
            SpectrumKind::Fourier { .. } => {
                let w = self.cross.as_ref().unwrap().weight_at(j);
                1.0 / (w * w)
            }
            SpectrumKind::Legendre { s } => legendre_lambda(*s, j),
        }
    }

    /// Singular value `sigma_j = sqrt(lambda_j)`.
    pub fn sigma(&self, j: usize) -> f64 {
        self.lambda(j).sqrt()
    }

    /// Orthonormal basis value `eta_j(x)`.
    pub fn eta(&self, j: usize, x: &[f64]) -> Result<C64> {
        match &self.kind {
            SpectrumKind::Fourier { d, .. } => eval_basis(
                &BasisFamily::Fourier { d: *d },
                self.cross.as_ref().unwrap().index(j),
                x,
            ),
            SpectrumKind::Legendre { .. } => {
                eval_basis(&BasisFamily::Legendre, &[j as i64], x)
            }
        }
    }

    /// `sum_{j < count} |eta_j(x)|^2`.
    pub fn eta_sq_sum(&self, x: &[f64], count: usize) -> Result<f64> {
        match &self.kind {
            SpectrumKind::Fourier { .. } => {
                if count > self.m_max() {
                    return Err(Error::RangeExceeded(format!(
                        "eta_sq_sum: {count} exceeds enumerated {}",
                        self.m_max()
                    )));
                }
                Ok(count as f64)
            }
            SpectrumKind::Legendre { .. } => {
                if count == 0 {
                    return Ok(0.0);
                }
                let xi = clamp_unit(x[0])?;
                let mut acc = 0.0;
                legendre_scan(xi, count - 1, |deg, p| {
                    acc += (2 * deg + 1) as f64 * p * p;
                });
                Ok(acc)
            }
        }
    }

    /// `sum_{j < count} lambda_j |eta_j(x)|^2` (partial kernel diagonal).
    pub fn e_sq_sum(&self, x: &[f64], count: usize) -> Result<f64> {
        match &self.kind {
            SpectrumKind::Fourier { .. } => {
                if count > self.m_max() {
                    return Err(Error::RangeExceeded(format!(
                        "e_sq_sum: {count} exceeds enumerated {}",
                        self.m_max()
                    )));
                }
                Ok((0..count).map(|j| self.lambda(j)).sum())
            }
            SpectrumKind::Legendre { s } => {
                if count == 0 {
                    return Ok(0.0);
                }
                let xi = clamp_unit(x[0])?;
                let mut acc = 0.0;
                let s = *s;
                legendre_scan(xi, count - 1, |deg, p| {
                    acc += legendre_lambda(s, deg) * (2 * deg + 1) as f64 * p * p;
                });
                Ok(acc)
            }
        }
    }

    /// Kernel diagonal `K(x,x)` truncated at `trunc` terms, with remainder.
    ///
    /// Fourier kernels have constant diagonal equal to the trace, so `trunc`
    /// is ignored there and the trace remainder is reported.
    pub fn kernel_diag(&self, x: &[f64], trunc: usize) -> Result<(f64, f64)> {
        match &self.kind {
            SpectrumKind::Fourier { .. } => Ok(self.trace),
            SpectrumKind::Legendre { s } => legendre_kernel_diag(*s, x[0], trunc),
        }
    }

    /// Full trace `sum_j lambda_j` with certified remainder.
    pub fn trace(&self) -> (f64, f64) {
        self.trace
    }

    /// Tail `sum_{j >= j0} lambda_j` (0-based) with certified remainder.
    pub fn tail_lambda(&self, j0: usize) -> Result<(f64, f64)> {
        if let Some(&cached) = self.tail_cache.lock().unwrap().get(&j0) {
            return Ok(cached);
        }
        let tail = self.tail_lambda_uncached(j0)?;
        self.tail_cache.lock().unwrap().insert(j0, tail);
        Ok(tail)
    }

    fn tail_lambda_uncached(&self, j0: usize) -> Result<(f64, f64)> {
        match &self.kind {
            SpectrumKind::Fourier { .. } => {
                if j0 > self.m_max() {
                    return Err(Error::RangeExceeded(format!(
                        "tail_lambda: {j0} exceeds enumerated {}",
                        self.m_max()
                    )));
                }
                let head: f64 = {
                    let mut acc = crate::numeric::Accumulator::new();
                    for j in 0..j0 {
                        acc.add(self.lambda(j));
                    }
                    acc.value()
                };
                Ok(((self.trace.0 - head).max(0.0), self.trace.1))
            }
            SpectrumKind::Legendre { s } => legendre_lambda_tail(*s, j0),
        }
    }
}

/// `sum_{deg >= j0} legendre_lambda(s, deg)` with an integral-comparison
/// remainder (`s > 1/2`).
fn legendre_lambda_tail(s: f64, j0: usize) -> Result<(f64, f64)> {
    if !(s > 0.5) {
        return Err(Error::invalid(format!(
            "legendre tail diverges for s = {s} <= 1/2"
        )));
    }
    let mut acc = crate::numeric::Accumulator::new();
    let mut deg = j0;
    loop {
        let term = legendre_lambda(s, deg);
        acc.add(term);
        deg += 1;
        if (deg >= j0 + 64 && term < 1e-18 * acc.value().max(1e-300)) || deg >= j0 + 20_000_000
        {
            break;
        }
    }
    // lambda_deg <= deg^(-2s): sum_{deg >= T} <= T^(1-2s)/(2s-1) + T^(-2s).
    let t = deg as f64;
    let remainder = t.powf(1.0 - 2.0 * s) / (2.0 * s - 1.0) + t.powf(-2.0 * s);
    Ok((acc.value(), remainder))
}
