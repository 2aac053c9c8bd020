//! Small self-contained numerical kernels: quadrature rules, compensated
//! summation, and log-log regression fits.
//!
//! These are utilities, not part of the public modeling surface, but they are
//! exposed because the test suites of downstream modules use them as oracles.

use crate::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on `P_n` from the Chebyshev initial guess; converges to
/// machine precision for every practical `n`. Exact for polynomials of degree
/// `2n - 1`, which is what the piecewise-polynomial norm checks rely on.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre: need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess for the i-th root (descending order).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_{n-1}(x) by the three-term recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Integrate `f` over `[a, b]` with tanh-sinh (double-exponential) quadrature.
///
/// Returns `(value, error_estimate)` where the estimate is the difference
/// between the last two level refinements. Handles algebraic endpoint
/// singularities (e.g. `t^(1/4)` at 0) at full f64 accuracy.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid(format!(
            "tanh_sinh: bad interval [{a}, {b}]"
        )));
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let g = |t: f64| -> f64 {
        // x(t) = mid + half * tanh(pi/2 sinh t), with weight dx/dt.
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let c = u.cosh();
        let x = mid + half * u.tanh();
        let w = half * std::f64::consts::FRAC_PI_2 * t.cosh() / (c * c);
        if w == 0.0 || !w.is_finite() {
            return 0.0;
        }
        let fx = f(x);
        if fx.is_finite() {
            fx * w
        } else {
            // Endpoint singularity hit exactly; the weight decay would have
            // annihilated the term at the next representable abscissa.
            0.0
        }
    };

    // Level 0: trapezoid with h = 1 on t in [-T, T]. The transformed
    // integrand decays doubly exponentially; |t| <= 6.1 covers f64 range.
    const T_MAX: f64 = 6.1;
    let mut h = 1.0;
    let mut sum = g(0.0);
    let mut j = 1;
    while (j as f64) * h <= T_MAX {
        let t = j as f64 * h;
        sum += g(t) + g(-t);
        j += 1;
    }
    let mut value = h * sum;
    let mut prev;
    let mut err = f64::INFINITY;
    for _level in 1..=12 {
        prev = value;
        h *= 0.5;
        // Only odd multiples of the new h are new abscissas.
        let mut extra = 0.0;
        let mut j = 1;
        while (j as f64) * h <= T_MAX {
            let t = j as f64 * h;
            extra += g(t) + g(-t);
            j += 2;
        }
        sum = sum + extra;
        value = h * sum;
        err = (value - prev).abs();
        if err <= tol * value.abs().max(1.0) && _level >= 3 {
            return Ok((value, err));
        }
    }
    if err.is_finite() {
        Ok((value, err))
    } else {
        Err(Error::NoConvergence(
            "tanh_sinh failed to stabilize".into(),
        ))
    }
}

/// Neumaier compensated accumulator for long f64 sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub fn compensated_sum(xs: &[f64]) -> f64 {
    let mut acc = Accumulator::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Ordinary least-squares line fit `y ~ intercept + slope * x`.
///
/// Returns `(slope, intercept)`. Used for empirical decay-rate estimates on
/// log-log data.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::mismatch(format!(
            "fit_line: {} x values vs {} y values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::invalid("fit_line: need at least two points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Singular("fit_line: degenerate abscissas".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Log-log regression slope of `y ~ C * x^slope`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    if lx.iter().chain(&ly).any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "loglog_slope: nonpositive data cannot be log-transformed",
        ));
    }
    Ok(fit_line(&lx, &ly)?.0)
}
