//! Explicit bound evaluators, parameter rules, and a Monte-Carlo
//! concentration harness.
//!
//! Everything here is a closed-form function of the model spectrum: the
//! spectral function `N(m)`, the kernel tail `T(m)`, the Oliveira-type
//! concentration tail for `||H_m - I_m||`, worst-case recovery bounds,
//! preasymptotic singular-value bounds, and the rules that choose the
//! cutoff `m` from a sample budget `n`. The harness draws many node sets,
//! measures how often the empirical Gram matrix deviates from the identity
//! by more than `t`, and lays the observed failure rates next to the
//! theoretical tail bound.

use std::f64::consts::SQRT_2;
use std::io::Write;

use rayon::prelude::*;

use crate::bases::{SpectrumKind, SpectrumModel};
use crate::index::{hyperbolic_cross, IndexDomain, IndexSet, WeightRule};
use crate::leastsq::{assemble_design, assemble_weighted_design, gram_deviation, DesignMatrix};
use crate::linalg::{power_iteration, LinearOperator};
use crate::numeric::Accumulator;
use crate::sampling::{draw_importance, draw_uniform_box, draw_uniform_torus};
use crate::{C64, Error, Result};

/// A bound value together with its inputs and validity range.
#[derive(Debug, Clone)]
pub struct BoundReport {
    /// The evaluated bound.
    pub value: f64,
    /// Inputs echoed as `(name, value)` pairs.
    pub inputs: Vec<(String, f64)>,
    /// True when every range condition for the bound holds.
    pub in_range: bool,
    /// One entry per violated range condition.
    pub notes: Vec<String>,
}

/// The matrix-Khintchine (Rudelson) constant
/// `C_R = sqrt(2) + 1/(4 sqrt(2 log 8)) in [1.53, 1.54]`.
pub fn rudelson_constant() -> f64 {
    SQRT_2 + 1.0 / (4.0 * (2.0 * 8.0f64.ln()).sqrt())
}

/// Which worst-case error bound [`worstcase_bound`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorstCaseVariant {
    /// Nodes drawn from the orthogonality measure itself; the tail argument
    /// is `T(m)` and the absolute constant is `3 + 8 C_R^2 + 4 C_R < 28.05`.
    PlainSampling,
    /// Nodes drawn from the optimal density with reweighted least squares;
    /// the tail argument is the full trace `sum_j sigma_j^2` and the
    /// absolute constant is `3 + 16 C_R^2 + 4 sqrt(2) C_R < 49.5`.
    DensitySampling,
}

/// The absolute constant of the chosen worst-case bound.
pub fn worstcase_constant(variant: WorstCaseVariant) -> f64 {
    let cr = rudelson_constant();
    match variant {
        WorstCaseVariant::PlainSampling => 3.0 + 8.0 * cr * cr + 4.0 * cr,
        WorstCaseVariant::DensitySampling => 3.0 + 16.0 * cr * cr + 4.0 * SQRT_2 * cr,
    }
}

/// Spectral function `N(m) = sup_x sum_{k=1}^{m-1} |eta_k(x)|^2`.
///
/// Fourier systems have unimodular `eta_k`, so `N(m) = m - 1`; the
/// normalized Legendre system peaks at the endpoints where
/// `|eta_deg(1)|^2 = 2 deg + 1`, so `N(m) = (m-1)^2`.
pub fn spectral_function_n(model: &SpectrumModel, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid("spectral_function_n: m must be >= 2"));
    }
    match model.kind() {
        SpectrumKind::Fourier { .. } => Ok((m - 1) as f64),
        // sum_{deg=0}^{m-2} (2 deg + 1) = (m-1)^2, attained at x = +-1.
        SpectrumKind::Legendre { .. } => Ok(((m - 1) * (m - 1)) as f64),
    }
}

/// Kernel tail `T(m) = sup_x sum_{k=m}^infty |e_k(x)|^2` with a certified
/// remainder (`value <= T(m) <= value + remainder`).
///
/// For Fourier systems `|e_k(x)|^2 = sigma_k^2` pointwise, so the tail is
/// the eigenvalue tail and is computed from the certified trace. For the
/// Legendre model the supremum sits at the endpoints, giving the summand
/// `(2k - 1) lambda_{k-1}`; the sum is truncated after at least 10^6 terms
/// and once the integral-comparison remainder drops below `1e-4 * value`.
pub fn tail_t(model: &SpectrumModel, m: usize) -> Result<(f64, f64)> {
    if m < 1 {
        return Err(Error::invalid("tail_t: m must be >= 1"));
    }
    match model.kind() {
        SpectrumKind::Fourier { .. } => model.tail_lambda(m - 1),
        SpectrumKind::Legendre { s } => {
            let s = *s;
            if !(s > 1.0) {
                return Err(Error::invalid(format!(
                    "tail_t: Legendre tail diverges for s = {s} <= 1"
                )));
            }
            let mut acc = Accumulator::new();
            let mut deg = m - 1;
            let remainder = loop {
                acc.add((2 * deg + 1) as f64 * crate::bases::legendre_lambda(s, deg));
                deg += 1;
                // (2u+1) lambda_u <= 3 u^(1-2s) for u >= 1, hence
                // sum_{u >= T} <= 3 T^(1-2s) + 3 T^(2-2s)/(2s-2).
                let t = deg as f64;
                let rem =
                    3.0 * t.powf(1.0 - 2.0 * s) + 3.0 * t.powf(2.0 - 2.0 * s) / (2.0 * s - 2.0);
                let enough = deg - (m - 1) >= 1_000_000 && rem < 1e-4 * acc.value();
                if enough || deg - (m - 1) >= 20_000_000 {
                    break rem;
                }
            };
            Ok((acc.value(), remainder))
        }
    }
}

/// Which denominator the `m`-from-`n` selection rule uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenomRule {
    /// Largest `m` with `N(m) = m - 1 <= n / (48 (sqrt(2) log(2n) - log delta))`.
    C48,
    /// The direct choice `m = floor(n / (96 (sqrt(2) log(2n) - log delta)))`.
    C96,
}

/// Largest admissible `m` for a sample budget `n` at confidence `1 - delta`
/// (Fourier-type systems with `N(m) = m - 1`).
pub fn max_m_for_n(n: usize, delta: f64, denom: DenomRule) -> Result<usize> {
    if n < 2 {
        return Err(Error::invalid("max_m_for_n: n must be >= 2"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!(
            "max_m_for_n: delta must lie in (0,1), got {delta}"
        )));
    }
    let base = SQRT_2 * (2.0 * n as f64).ln() - delta.ln();
    let m = match denom {
        DenomRule::C48 => (n as f64 / (48.0 * base)).floor() as usize + 1,
        DenomRule::C96 => (n as f64 / (96.0 * base)).floor() as usize,
    };
    if m < 2 {
        return Err(Error::RangeExceeded(format!(
            "max_m_for_n: budget n = {n} admits no m >= 2 at delta = {delta}"
        )));
    }
    Ok(m)
}

/// The cutoff used by the numerical experiments: `m = floor(n / (4 ln n))`.
pub fn experiment_m(n: usize) -> Result<usize> {
    if n < 3 {
        return Err(Error::invalid("experiment_m: n must be >= 3"));
    }
    Ok((n as f64 / (4.0 * (n as f64).ln())).floor() as usize)
}

/// Concentration tail `(2n)^sqrt(2) exp(-n t^2 / (12 N_m))` for the event
/// `||H_m - I_m|| > t`, `t in (0,1)`.
pub fn oliveira_tail(n: usize, n_m: f64, t: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("oliveira_tail: n must be >= 1"));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid(format!(
            "oliveira_tail: t must lie in (0,1), got {t}"
        )));
    }
    if !(n_m > 0.0) || !n_m.is_finite() {
        return Err(Error::invalid(format!(
            "oliveira_tail: N(m) must be positive and finite, got {n_m}"
        )));
    }
    let n = n as f64;
    Ok((2.0 * n).powf(SQRT_2) * (-n * t * t / (12.0 * n_m)).exp())
}

/// Worst-case squared-error bound
/// `(C / delta) max{ sigma_m^2, (log(8n)/n) * t_m }`, where `t_m` is `T(m)`
/// for [`WorstCaseVariant::PlainSampling`] and the full trace for
/// [`WorstCaseVariant::DensitySampling`].
pub fn worstcase_bound(
    n: usize,
    delta: f64,
    sigma_m: f64,
    t_m: f64,
    variant: WorstCaseVariant,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("worstcase_bound: n must be >= 1"));
    }
    if !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(Error::invalid(format!(
            "worstcase_bound: delta must lie in (0, 1/3), got {delta}"
        )));
    }
    if !(sigma_m >= 0.0) || !sigma_m.is_finite() || !(t_m >= 0.0) || !t_m.is_finite() {
        return Err(Error::invalid(
            "worstcase_bound: sigma_m and t_m must be finite and nonnegative",
        ));
    }
    let c = worstcase_constant(variant);
    let tail = (8.0 * n as f64).ln() / n as f64 * t_m;
    Ok(c / delta * (sigma_m * sigma_m).max(tail))
}

/// Preasymptotic bound `sigma_m^# <= min(1, 16/(3m))^{s/(1 + log2 d)}` for
/// the pound-weighted hyperbolic-cross singular values.
pub fn preasymptotic_bound_pound(m: usize, s: f64, d: usize) -> Result<f64> {
    if m < 1 || d < 1 {
        return Err(Error::invalid("preasymptotic_bound_pound: m, d must be >= 1"));
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::invalid(format!(
            "preasymptotic_bound_pound: s must be positive, got {s}"
        )));
    }
    let base = (16.0 / (3.0 * m as f64)).min(1.0);
    Ok(base.powf(s / (1.0 + (d as f64).log2())))
}

/// Preasymptotic bound `sigma_m^* <= (1.26/m)^{1.83 s/(4 + log2 d)}` for the
/// star-weighted singular values, valid in the range `2 <= m <= 3^d`.
pub fn preasymptotic_bound_krieg(m: usize, s: f64, d: usize) -> BoundReport {
    let exponent = 1.83 * s / (4.0 + (d as f64).log2());
    let value = (1.26 / m as f64).powf(exponent);
    let mut notes = Vec::new();
    if d < 1 {
        notes.push("d must be >= 1".to_string());
    }
    if !(s > 0.0) || !s.is_finite() {
        notes.push(format!("s must be positive, got {s}"));
    }
    if m < 2 {
        notes.push(format!("m = {m} below the valid range start 2"));
    }
    // 3^d without overflow: m <= 3^d iff log3(m) <= d.
    if m >= 2 && (m as f64).log(3.0) > d as f64 * (1.0 + 1e-12) {
        notes.push(format!("m = {m} above the valid range end 3^{d}"));
    }
    BoundReport {
        value,
        inputs: vec![
            ("m".to_string(), m as f64),
            ("s".to_string(), s),
            ("d".to_string(), d as f64),
        ],
        in_range: notes.is_empty(),
        notes,
    }
}

/// How the concentration harness draws nodes and assembles the design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerMode {
    /// Nodes i.i.d. from the orthogonality measure, plain design.
    Plain,
    /// Nodes i.i.d. from the importance density `rho_m`, reweighted design.
    Weighted,
}

/// One row of the failure-rate table: empirical `P(||H_m - I|| > t)` next to
/// the theoretical tail bound (bounds above 1 are reported as computed).
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationRow {
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
}

/// Output of [`concentration_experiment`].
#[derive(Debug, Clone)]
pub struct ConcentrationReport {
    pub trials: usize,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub mode: SamplerMode,
    /// Label of the spectrum model the experiment ran against.
    pub model: String,
    /// `N(m)` entering the tail bound.
    pub spectral_n: f64,
    /// Failure-rate table over the fixed `t` grid.
    pub rows: Vec<ConcentrationRow>,
    /// Per-trial Gram deviations, indexed by RNG stream id.
    pub deviations: Vec<f64>,
    /// Mean over trials of the squared norm of the truncated tail operator.
    pub mean_tail_energy: f64,
    /// Theoretical mean bound
    /// `n (sigma_m^2 + 4 C_R^2 (log(8n)/n) T(m) + 2 C_R sigma_m sqrt((log(8n)/n) T(m)))`.
    pub tail_energy_bound: f64,
    /// Number of tail columns retained (first column index is `m`).
    pub tail_columns: usize,
    /// Certified upper bound on the dropped eigenvalue mass
    /// `sum_{j > m + tail_columns} lambda_j`.
    pub tail_truncation_bias: f64,
}

impl ConcentrationReport {
    /// Emit the failure-rate table as CSV with header `t,empirical,bound`.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["t", "empirical", "bound"])?;
        for row in &self.rows {
            w.write_record([
                format!("{}", row.t),
                format!("{}", row.empirical),
                format!("{}", row.bound),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// All inputs and aggregate outputs as a JSON object (deterministic key
    /// order).
    pub fn summary_json(&self) -> String {
        let max_dev = self.deviations.iter().copied().fold(0.0f64, f64::max);
        let exceed_half =
            self.deviations.iter().filter(|&&dev| dev > 0.5).count() as f64;
        let fraction_over_half = if self.trials > 0 {
            exceed_half / self.trials as f64
        } else {
            0.0
        };
        serde_json::json!({
            "trials": self.trials,
            "n": self.n,
            "m": self.m,
            "seed": self.seed,
            "mode": match self.mode {
                SamplerMode::Plain => "plain",
                SamplerMode::Weighted => "weighted",
            },
            "model": self.model,
            "spectral_N": self.spectral_n,
            "max_deviation": max_dev,
            "fraction_over_half": fraction_over_half,
            "mean_tail_energy": self.mean_tail_energy,
            "tail_energy_bound": self.tail_energy_bound,
            "tail_columns": self.tail_columns,
            "tail_truncation_bias": self.tail_truncation_bias,
        })
        .to_string()
    }
}

/// The fixed threshold grid of the failure-rate table: `0.05, 0.10, ..., 0.95`.
pub fn concentration_t_grid() -> Vec<f64> {
    (1..20).map(|i| i as f64 * 0.05).collect()
}

/// Largest retained tail column count before per-trial work becomes
/// unreasonable; the cut is honest either way since the dropped mass is
/// certified and reported.
const MAX_TAIL_COLUMNS: usize = 4_000_000;

/// Monte-Carlo concentration harness.
///
/// Runs `trials` independent draws (one RNG stream per trial), computes the
/// Gram deviation `||H_m - I_m||` of the first `m - 1` basis functions for
/// each, and tabulates empirical exceedance frequencies against
/// [`oliveira_tail`]. Each trial also measures the squared operator norm of
/// the tail matrix with entries `e_j(x^i)` (rows scaled like the design in
/// weighted mode), truncated at the first column `J` with
/// `sigma_J^2 < 1e-6 sigma_m^2`; the truncation point and the certified
/// dropped mass are reported rather than hidden.
///
/// Trials run in parallel but every reduction is in stream order, so the
/// report is a pure function of `(model, parameters, seed)`.
pub fn concentration_experiment(
    trials: usize,
    n: usize,
    model: &SpectrumModel,
    m: usize,
    mode: SamplerMode,
    seed: u64,
) -> Result<ConcentrationReport> {
    if m < 2 {
        return Err(Error::invalid("concentration_experiment: m must be >= 2"));
    }
    if n < m - 1 {
        return Err(Error::invalid(format!(
            "concentration_experiment: n = {n} below the column count {}",
            m - 1
        )));
    }
    let family = model.family();
    // Head (the m-1 estimation columns) and truncated tail index sets, both
    // as contiguous slices of the model's enumeration.
    let lambda_m = model.lambda(m - 1);
    let enumerated = |count: usize| -> Result<IndexSet> {
        match model.kind() {
            SpectrumKind::Fourier { .. } => {
                if count > model.m_max() {
                    return Err(Error::RangeExceeded(format!(
                        "concentration_experiment: needs {count} enumerated indices, model has {}",
                        model.m_max()
                    )));
                }
                Ok(model.index_set().unwrap().subrange(0, count))
            }
            SpectrumKind::Legendre { s } => hyperbolic_cross(
                1,
                count,
                &WeightRule::Star { s: *s },
                IndexDomain::Nonnegative,
            ),
        }
    };
    let mut cut = m - 1;
    let hard_cap = match model.kind() {
        SpectrumKind::Fourier { .. } => model.m_max().min((m - 1) + MAX_TAIL_COLUMNS),
        SpectrumKind::Legendre { .. } => (m - 1) + MAX_TAIL_COLUMNS,
    };
    while cut < hard_cap && model.lambda(cut) >= 1e-6 * lambda_m {
        cut += 1;
    }
    let full = enumerated(cut)?;
    let head = full.subrange(0, m - 1);
    let tail = full.subrange(m - 1, cut);
    let sig: Vec<f64> = (m - 1..cut).map(|j| model.sigma(j)).collect();
    let (bias_value, bias_rem) = model.tail_lambda(cut)?;
    let tail_truncation_bias = bias_value + bias_rem;

    let spectral_n = spectral_function_n(model, m)?;
    let (t_value, t_rem) = tail_t(model, m)?;
    let t_upper = t_value + t_rem;
    let sigma_m = model.sigma(m - 1);
    let cr = rudelson_constant();
    let log_term = (8.0 * n as f64).ln() / n as f64;
    let tail_energy_bound = n as f64
        * (sigma_m * sigma_m
            + 4.0 * cr * cr * log_term * t_upper
            + 2.0 * cr * sigma_m * (log_term * t_upper).sqrt());

    let per_trial: Result<Vec<(f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let stream = trial as u64;
            let nodes = match (model.kind(), mode) {
                (SpectrumKind::Fourier { d, .. }, SamplerMode::Plain) => {
                    draw_uniform_torus(n, *d, seed, stream)?
                }
                (SpectrumKind::Legendre { .. }, SamplerMode::Plain) => {
                    draw_uniform_box(n, &[-1.0], &[1.0], seed, stream)?
                }
                (_, SamplerMode::Weighted) => draw_importance(n, model, m, seed, stream)?,
            };
            let assemble = |iset: &IndexSet| -> Result<DesignMatrix> {
                match mode {
                    SamplerMode::Plain => assemble_design(&family, iset, &nodes),
                    SamplerMode::Weighted => assemble_weighted_design(&family, iset, &nodes),
                }
            };
            let dev = gram_deviation(&assemble(&head)?)?;
            let energy = if tail.is_empty() {
                0.0
            } else {
                let tail_design = assemble(&tail)?;
                let dim = tail.len();
                let mut scaled = vec![C64::new(0.0, 0.0); dim];
                let mut image = vec![C64::new(0.0, 0.0); n];
                // ||Phi||^2 is the top eigenvalue of D L* L D with
                // D = diag(sigma_j) over the tail columns.
                let rep = power_iteration(dim, 0x7461696c, 1e-6, 300, |z, out| {
                    for ((si, zi), &s) in scaled.iter_mut().zip(z).zip(&sig) {
                        *si = zi * s;
                    }
                    tail_design.apply(&scaled, &mut image);
                    tail_design.apply_adjoint(&image, out);
                    for (oi, &s) in out.iter_mut().zip(&sig) {
                        *oi *= s;
                    }
                })?;
                rep.eigenvalue.max(0.0)
            };
            Ok((dev, energy))
        })
        .collect();
    let per_trial = per_trial?;

    let deviations: Vec<f64> = per_trial.iter().map(|&(dev, _)| dev).collect();
    let mut energy_acc = Accumulator::new();
    for &(_, energy) in &per_trial {
        energy_acc.add(energy);
    }
    let mean_tail_energy = if trials > 0 {
        energy_acc.value() / trials as f64
    } else {
        0.0
    };

    let rows = if trials == 0 {
        Vec::new()
    } else {
        concentration_t_grid()
            .into_iter()
            .map(|t| {
                let exceed = deviations.iter().filter(|&&dev| dev > t).count();
                Ok(ConcentrationRow {
                    t,
                    empirical: exceed as f64 / trials as f64,
                    bound: oliveira_tail(n, spectral_n, t)?,
                })
            })
            .collect::<Result<Vec<_>>>()?
    };

    Ok(ConcentrationReport {
        trials,
        n,
        m,
        seed,
        mode,
        model: format!("{:?}", model.kind()),
        spectral_n,
        rows,
        deviations,
        mean_tail_energy,
        tail_energy_bound,
        tail_columns: cut - (m - 1),
        tail_truncation_bias,
    })
}
