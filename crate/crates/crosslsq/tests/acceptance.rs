//! Acceptance gates for the full pipeline at desk scale.
//!
//! One test per criterion, so the harness emits exactly one ok/FAILED line
//! each; every test additionally prints its measured numbers (visible under
//! `--nocapture`) so a green run doubles as a measurement report. All
//! tolerances and experiment sizes live in the constants block below.
//!
//! The heavy studies (recovery at n = 1e5, the integration decay sweep up to
//! n = 3.16e5) run on one core in a few minutes each; budgets were sized for
//! that. Everything is seeded and byte-reproducible.

use std::sync::OnceLock;

use crosslsq::bases::{BasisFamily, IntegrationMeasure, SpectrumModel};
use crosslsq::bounds::{
    concentration_experiment, experiment_m, max_m_for_n, preasymptotic_bound_pound, DenomRule,
    SamplerMode,
};
use crosslsq::index::{hyperbolic_cross, singular_values, IndexDomain, WeightRule};
use crosslsq::leastsq::{
    assemble_design, gram_deviation, least_squares, lsqr_solve, moore_penrose_norm,
    weighted_least_squares, SolverConfig,
};
use crosslsq::quadrature::{basis_integrals, cubature_weights, integrate};
use crosslsq::sampling::{draw_chebyshev, draw_importance, draw_uniform_box, draw_uniform_torus};
use crosslsq::testfns::{TestFunction, TestFunctionId};
use crosslsq::wavelet::{
    assemble_sparse_design, build_wavelet_index_set, extended_domain,
    hyperbolic_wavelet_regression, qmc_l2_error, WaveletFamily, WaveletSpec,
};
use crosslsq::linalg::LinearOperator;
use crosslsq::{bases, C64};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

// ---------------------------------------------------------------------------
// Pinned tolerances and experiment sizes.
// ---------------------------------------------------------------------------

/// Relative tolerance for golden projection errors with closed-form
/// coefficients (criteria 1 and the slope data of criterion 3).
const GOLDEN_REL_TOL: f64 = 0.01;
/// Relative tolerance for the quadrature-derived coefficient table
/// (criterion 2; widened for the table accuracy).
const DERIVED_REL_TOL: f64 = 0.02;
/// Log-log slope gate for the order-6 spline (criterion 3).
const BSPLINE6_SLOPE_GATE: f64 = -4.0;
/// Band for the median sampling-to-projection error ratio (criterion 4).
const RATIO_BAND: (f64, f64) = (1.0, 1.2);
/// Conditioning study (criteria 5/6): sample budget, confidence, trial count.
const F1_N: usize = 20_000;
const F1_DELTA: f64 = 0.01;
const F1_TRIALS: usize = 50;
const F1_MIN_COMPLIANT: usize = 48;
const F1_MAX_LSQR_ITERS: usize = 17;
/// Concentration straddle (criterion 8).
const STRADDLE_TRIALS: usize = 500;
const STRADDLE_PAIRS: [(usize, usize); 3] = [(2000, 3), (2000, 12), (2000, 60)];
/// Cubature exactness level and integration-decay gates (criterion 9).
const CUBATURE_EXACTNESS: f64 = 1e-8;
const INTEGRATION_MEAN_AT_1E4: f64 = 5.814e-5;
const INTEGRATION_MEAN_FACTOR: f64 = 3.0;
const INTEGRATION_SLOPE_GATE: f64 = -1.7;
/// Integration decay grid: (n, runs). Run counts shrink at the top sizes so
/// the sweep stays a single-core job; the criterion's mean gate sits at
/// n = 1e4 where 100 runs are kept.
const INTEGRATION_GRID: [(usize, usize); 6] = [
    (1_000, 100),
    (3_162, 100),
    (10_000, 100),
    (31_623, 24),
    (100_000, 6),
    (316_228, 3),
];
/// Weighted Legendre recovery (criterion 11).
const LEGENDRE_SEEDS: usize = 10;
const LEGENDRE_MIN_OK: usize = 8;
const LEGENDRE_ERROR_FACTOR: f64 = 3.0;
/// Wavelet study (criterion 12): level range and per-level sample budget
/// n(l) = WAVELET_N0 * 2^(l-3), which keeps m(l)/n(l) roughly constant.
const WAVELET_LEVELS: std::ops::RangeInclusive<usize> = 3..=8;
const WAVELET_N0: usize = 3_000;
const WAVELET_RATE_GATE: f64 = 1.0;
const WAVELET_QMC_NODES: usize = 1_000_000;

fn rel_dev(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn fmt_errs(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|e| format!("{e:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Least-squares slope of `y` against `x`.
fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}

// ---------------------------------------------------------------------------
// Criterion 1: golden projection errors, closed-form coefficient tables.
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_projection_error_golden_values() {
    let kink = TestFunction::new(TestFunctionId::TorusKink, 2).unwrap();
    for (m, golden) in [(100usize, 1.255e-2), (1_000, 8.070e-4), (100_000, 2.250e-6)] {
        let iset = hyperbolic_cross(2, m, &WeightRule::Plain, IndexDomain::Signed).unwrap();
        let (value, rem) = kink.projection_error(&iset).unwrap();
        assert!(
            rem <= 0.1 * value,
            "m = {m}: remainder {rem:.2e} not negligible against {value:.4e}"
        );
        assert!(
            rel_dev(value, golden) <= GOLDEN_REL_TOL,
            "kink m = {m}: {value:.4e} vs golden {golden:.4e}"
        );
    }
    let cube = TestFunction::new(TestFunctionId::CubeBspline2, 2).unwrap();
    let mut cube_report = Vec::new();
    for (n, golden) in [(100usize, 1.840e-1), (1_000, 1.349e-2), (100_000, 8.321e-5)] {
        let m = experiment_m(n).unwrap();
        let iset = hyperbolic_cross(2, m, &WeightRule::Plain, IndexDomain::Nonnegative).unwrap();
        let (value, rem) = cube.projection_error(&iset).unwrap();
        assert!(rem <= 0.1 * value);
        assert!(
            rel_dev(value, golden) <= GOLDEN_REL_TOL,
            "cube n = {n} (m = {m}): {value:.4e} vs golden {golden:.4e}"
        );
        cube_report.push((n, m, value));
    }
    println!(
        "criterion 01 pass: kink and cube projection errors within {:.0}% of golden values \
         (cube m per n: {:?})",
        GOLDEN_REL_TOL * 100.0,
        cube_report
            .iter()
            .map(|&(n, m, _)| (n, m))
            .collect::<Vec<_>>()
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: projection errors through the quadrature-derived table.
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_projection_error_derived_table() {
    let f075 = TestFunction::new(TestFunctionId::TorusF075, 2).unwrap();
    let mut measured = Vec::new();
    for (m, golden) in [(100usize, 3.118e-2), (10_000, 1.952e-3)] {
        let iset = hyperbolic_cross(2, m, &WeightRule::Plain, IndexDomain::Signed).unwrap();
        let (value, rem) = f075.projection_error(&iset).unwrap();
        assert!(rem <= 0.1 * value);
        assert!(
            rel_dev(value, golden) <= DERIVED_REL_TOL,
            "f075 m = {m}: {value:.4e} vs golden {golden:.4e}"
        );
        measured.push(value);
    }
    println!(
        "criterion 02 pass: f075 projection errors {} within {:.0}% of golden",
        fmt_errs(&measured),
        DERIVED_REL_TOL * 100.0
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: decay-rate check for the order-6 spline.
// ---------------------------------------------------------------------------

/// Independent projection-error oracle for a bivariate tensor coefficient
/// sequence: sums `|f^(k)|^2` directly over the complement of `iset` inside
/// the box `|k|_inf <= b_box` (positive terms, so no cancellation), and
/// certifies the beyond-the-box tail from the observed `|k|^{-6}` coefficient
/// decay. Returns `(error, remainder)` like the library routine.
fn direct_projection_error(f: &TestFunction, iset: &crosslsq::index::IndexSet, b_box: i64) -> (f64, f64) {
    let members: std::collections::HashSet<(i64, i64)> =
        iset.iter().map(|k| (k[0], k[1])).collect();
    assert!(
        members.iter().all(|&(a, b)| a.abs() <= b_box && b.abs() <= b_box),
        "box must cover the index set"
    );
    let c2: Vec<f64> = (0..=b_box)
        .map(|k| f.univariate_coefficient(k).unwrap().0.powi(2))
        .collect();
    let mut box_sum = 0.0;
    for k1 in -b_box..=b_box {
        for k2 in -b_box..=b_box {
            if !members.contains(&(k1, k2)) {
                box_sum += c2[k1.unsigned_abs() as usize] * c2[k2.unsigned_abs() as usize];
            }
        }
    }
    // |c(k)|^2 <= M |k|^{-12} with M read off the outer half of the box and
    // doubled for safety; the factor 2 on top covers the two signs.
    let m12 = (b_box / 2..=b_box)
        .map(|k| c2[k as usize] * (k as f64).powi(12))
        .fold(0.0f64, f64::max)
        * 4.0;
    let axis_tail = m12 * (b_box as f64).powi(-11) / 11.0;
    let axis_total = 2.0 * c2.iter().sum::<f64>() - c2[0] + axis_tail;
    let tail = 2.0 * axis_tail * axis_total + axis_tail * axis_tail;
    let value = box_sum.sqrt();
    // Tail plus a generous cover for the f64 accumulation of positive terms.
    let rem = tail / (2.0 * value) + 1e-10 * value;
    (value, rem)
}

#[test]
fn criterion_03_bspline6_projection_slope() {
    // At m = 1000 the projection error sits near 1e-7, below the certified
    // slack of the sqrt(1 - sum) shortcut, whose certificate is then honest
    // but inconclusive about the slope. The gate therefore runs on the
    // direct complement sum, cross-validated against the library value.
    let spline = TestFunction::new(TestFunctionId::TorusBspline6, 2).unwrap();
    let mut errs = Vec::new();
    let mut rems = Vec::new();
    for m in [100usize, 1_000] {
        let iset = hyperbolic_cross(2, m, &WeightRule::Plain, IndexDomain::Signed).unwrap();
        let (lib_value, lib_rem) = spline.projection_error(&iset).unwrap();
        let (value, rem) = direct_projection_error(&spline, &iset, 600);
        assert!(
            (lib_value - value).abs() <= lib_rem + rem,
            "m = {m}: certified intervals disjoint ({lib_value:.4e} +- {lib_rem:.1e} \
             vs {value:.4e} +- {rem:.1e})"
        );
        errs.push(value);
        rems.push(rem);
    }
    // One decade in m, so the log-log slope is just the log10 ratio; the
    // worst case pairs the largest admissible numerator with the smallest
    // admissible denominator.
    let slope = ((errs[1] + rems[1]) / (errs[0] - rems[0])).log10();
    assert!(
        slope < BSPLINE6_SLOPE_GATE,
        "pessimistic slope {slope:.2} not steeper than {BSPLINE6_SLOPE_GATE}"
    );
    println!(
        "criterion 03 pass: bspline6 projection slope {slope:.2} (errors {})",
        fmt_errs(&errs)
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: sampling errors track projection errors.
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_sampling_error_tracks_projection_error() {
    let kink = TestFunction::new(TestFunctionId::TorusKink, 2).unwrap();
    let family = BasisFamily::Fourier { d: 2 };
    let mut report = Vec::new();
    for n in [1_000usize, 10_000, 100_000] {
        let m = experiment_m(n).unwrap();
        let iset = hyperbolic_cross(2, m, &WeightRule::Plain, IndexDomain::Signed).unwrap();
        let (a_m, _) = kink.projection_error(&iset).unwrap();
        let mut ratios: Vec<f64> = (0..10u64)
            .map(|stream| {
                let nodes = draw_uniform_torus(n, 2, 104, stream).unwrap();
                let samples = kink.sample(&nodes).unwrap();
                let approx =
                    least_squares(&nodes, &samples, &family, &iset, SolverConfig::default())
                        .unwrap();
                let (g_n, _) = kink.recovery_error(&approx).unwrap();
                g_n / a_m
            })
            .collect();
        let med = median(&mut ratios);
        assert!(
            med >= RATIO_BAND.0 && med <= RATIO_BAND.1,
            "n = {n}, m = {m}: median ratio {med:.4} outside {RATIO_BAND:?} ({ratios:?})"
        );
        report.push((n, med));
    }
    println!(
        "criterion 04 pass: median sampling/projection ratios {report:?} within {RATIO_BAND:?}"
    );
}

// ---------------------------------------------------------------------------
// Criteria 5 and 6 share one 50-trial study at the selection-rule budget.
// ---------------------------------------------------------------------------

struct F1Trial {
    deviation: f64,
    lsqr_iterations: usize,
    moore_penrose: f64,
}

fn f1_study() -> &'static (usize, Vec<F1Trial>) {
    static STUDY: OnceLock<(usize, Vec<F1Trial>)> = OnceLock::new();
    STUDY.get_or_init(|| {
        let m = max_m_for_n(F1_N, F1_DELTA, DenomRule::C48).unwrap();
        let iset =
            hyperbolic_cross(2, m - 1, &WeightRule::Plain, IndexDomain::Signed).unwrap();
        let family = BasisFamily::Fourier { d: 2 };
        let kink = TestFunction::new(TestFunctionId::TorusKink, 2).unwrap();
        let trials = (0..F1_TRIALS as u64)
            .map(|stream| {
                let nodes = draw_uniform_torus(F1_N, 2, 105, stream).unwrap();
                let design = assemble_design(&family, &iset, &nodes).unwrap();
                let deviation = gram_deviation(&design).unwrap();
                let samples = kink.sample(&nodes).unwrap();
                let (_, report) = lsqr_solve(&design, &samples, 5e-8, 100).unwrap();
                let moore_penrose = moore_penrose_norm(&design).unwrap();
                F1Trial {
                    deviation,
                    lsqr_iterations: report.iterations,
                    moore_penrose,
                }
            })
            .collect();
        (m, trials)
    })
}

#[test]
fn criterion_05_conditioning_and_solver_cost() {
    let (m, trials) = f1_study();
    let compliant: Vec<&F1Trial> = trials.iter().filter(|t| t.deviation <= 0.5).collect();
    assert!(
        compliant.len() >= F1_MIN_COMPLIANT,
        "only {} of {F1_TRIALS} trials had deviation <= 1/2",
        compliant.len()
    );
    let max_iters = compliant
        .iter()
        .map(|t| t.lsqr_iterations)
        .max()
        .unwrap();
    assert!(
        max_iters <= F1_MAX_LSQR_ITERS,
        "LSQR needed {max_iters} iterations in a well-conditioned trial"
    );
    let max_dev = trials.iter().map(|t| t.deviation).fold(0.0f64, f64::max);
    println!(
        "criterion 05 pass: n = {F1_N}, m = {m}: {}/{F1_TRIALS} trials with deviation <= 1/2 \
         (max {max_dev:.3}), LSQR <= {max_iters} iterations",
        compliant.len()
    );
}

#[test]
fn criterion_06_moore_penrose_norm_bound() {
    let (m, trials) = f1_study();
    let gate = (2.0 / F1_N as f64).sqrt();
    let mut worst = 0.0f64;
    let mut compliant = 0usize;
    for t in trials {
        if t.deviation <= 0.5 {
            compliant += 1;
            worst = worst.max(t.moore_penrose);
            assert!(
                t.moore_penrose <= gate,
                "||L^+|| = {:.4e} above sqrt(2/n) = {gate:.4e}",
                t.moore_penrose
            );
        }
    }
    assert!(compliant >= F1_MIN_COMPLIANT);
    println!(
        "criterion 06 pass: m = {m}, worst ||L^+|| = {worst:.4e} <= sqrt(2/n) = {gate:.4e} \
         over {compliant} well-conditioned trials"
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: preasymptotic singular-value envelope.
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_preasymptotic_envelope_exhaustive() {
    for d in 2..=10usize {
        for s in [1.0f64, 2.0, 5.0] {
            let sv = singular_values(d, &WeightRule::Pound { s }, 10_000).unwrap();
            for (j, &sigma) in sv.iter().enumerate() {
                let bound = preasymptotic_bound_pound(j + 1, s, d).unwrap();
                assert!(
                    sigma <= bound * (1.0 + 1e-12),
                    "d = {d}, s = {s}, m = {}: sigma {sigma:.6e} above bound {bound:.6e}",
                    j + 1
                );
            }
        }
    }
    // Worked selection example: s = 5, d = 16 puts the exponent at exactly 1,
    // and m = 2873 is the smallest m with 2900 (16/(3m))^2 <= 0.01.
    let at = |m: usize| 2900.0 * preasymptotic_bound_pound(m, 5.0, 16).unwrap().powi(2);
    assert!(at(2873) <= 0.01, "2900 (16/(3*2873))^2 = {:.6e}", at(2873));
    assert!(at(2872) > 0.01, "m = 2872 should not satisfy the target");
    println!(
        "criterion 07 pass: envelope holds for all m <= 1e4, d in 2..=10, s in {{1,2,5}}; \
         worked example 2900*(16/(3*2873))^2 = {:.4e} <= 0.01",
        at(2873)
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: empirical concentration against the theoretical tail.
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_concentration_straddles_threshold() {
    // Modest enumeration cap: the tail-energy side figures are not gated
    // here, and the truncation bias stays certified in the report.
    let model = SpectrumModel::fourier(2, WeightRule::Star { s: 2.0 }, 128).unwrap();
    let mut lines = Vec::new();
    for (n, m) in STRADDLE_PAIRS {
        let compliant = m <= max_m_for_n(n, F1_DELTA, DenomRule::C48).unwrap();
        let report =
            concentration_experiment(STRADDLE_TRIALS, n, &model, m, SamplerMode::Plain, 108)
                .unwrap();
        let row = report
            .rows
            .iter()
            .find(|r| (r.t - 0.5).abs() < 1e-12)
            .expect("t = 1/2 is on the threshold grid");
        let margin =
            3.0 * (row.empirical * (1.0 - row.empirical) / STRADDLE_TRIALS as f64).sqrt();
        let gate = row.bound.min(1.0) + margin;
        assert!(
            row.empirical <= gate,
            "n = {n}, m = {m}: empirical {:.4} above min(1, bound) + margin = {gate:.4}",
            row.empirical
        );
        lines.push(format!(
            "(n={n}, m={m}, f1-compliant={compliant}: empirical {:.3}, bound {:.3e})",
            row.empirical,
            row.bound.min(1.0)
        ));
    }
    println!(
        "criterion 08 pass: P(deviation > 1/2) within tail + noise margin for {}",
        lines.join(", ")
    );
}

// ---------------------------------------------------------------------------
// Criterion 9: cubature exactness and integration error decay.
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_cubature_exactness_all_families() {
    let cases: [(BasisFamily, _, usize, usize); 3] = [
        (
            BasisFamily::Fourier { d: 2 },
            WeightRule::Plain,
            40,
            600,
        ),
        (
            BasisFamily::Chebyshev { d: 2 },
            WeightRule::Plain,
            40,
            600,
        ),
        (BasisFamily::Legendre, WeightRule::Star { s: 2.0 }, 25, 400),
    ];
    for (family, rule, m, n) in cases {
        let d = family.d();
        let iset = hyperbolic_cross(d, m, &rule, family.index_domain()).unwrap();
        let nodes = match family {
            BasisFamily::Fourier { .. } => draw_uniform_torus(n, d, 109, 0).unwrap(),
            BasisFamily::Chebyshev { .. } => draw_chebyshev(n, d, 109, 0).unwrap(),
            BasisFamily::Legendre => {
                draw_uniform_box(n, &[-1.0], &[1.0], 109, 0).unwrap()
            }
        };
        let design = assemble_design(&family, &iset, &nodes).unwrap();
        let b = basis_integrals(&family, &iset, IntegrationMeasure::Lebesgue).unwrap();
        let (rule_out, _) = cubature_weights(
            &design,
            &nodes,
            &b,
            IntegrationMeasure::Lebesgue,
            SolverConfig::cubature(),
        )
        .unwrap();
        let mut worst = 0.0f64;
        for (k, &bk) in iset.iter().zip(&b) {
            let samples: Vec<C64> = (0..n)
                .map(|j| bases::eval_basis(&family, k, nodes.point(j)).unwrap())
                .collect();
            let q = integrate(&rule_out, &samples).unwrap();
            worst = worst.max((q - bk).norm());
        }
        assert!(
            worst <= CUBATURE_EXACTNESS,
            "{family:?}: worst |Q eta_k - b_k| = {worst:.3e}"
        );
        println!(
            "criterion 09 (exactness) {family:?}: worst |Q eta_k - b_k| = {worst:.3e} <= {CUBATURE_EXACTNESS:.0e}"
        );
    }
    println!("criterion 09 pass: cubature reproduces basis integrals for all families");
}

#[test]
fn criterion_09_integration_error_decay() {
    let cube = TestFunction::new(TestFunctionId::CubeBspline2, 2).unwrap();
    let family = BasisFamily::Chebyshev { d: 2 };
    let exact = cube.exact_integral(IntegrationMeasure::Lebesgue).unwrap();
    let mut log_n = Vec::new();
    let mut log_err = Vec::new();
    let mut mean_at_1e4 = 0.0;
    let mut table = Vec::new();
    for (n, runs) in INTEGRATION_GRID {
        let m = experiment_m(n).unwrap();
        let iset =
            hyperbolic_cross(2, m, &WeightRule::Plain, IndexDomain::Nonnegative).unwrap();
        let b = basis_integrals(&family, &iset, IntegrationMeasure::Lebesgue).unwrap();
        let mut sum = 0.0;
        for run in 0..runs as u64 {
            let nodes = draw_chebyshev(n, 2, 209, run).unwrap();
            let design = assemble_design(&family, &iset, &nodes).unwrap();
            let (rule_out, _) = cubature_weights(
                &design,
                &nodes,
                &b,
                IntegrationMeasure::Lebesgue,
                SolverConfig::default(),
            )
            .unwrap();
            let samples = cube.sample(&nodes).unwrap();
            let q = integrate(&rule_out, &samples).unwrap();
            sum += (C64::new(exact, 0.0) - q).norm();
        }
        let mean = sum / runs as f64;
        if n == 10_000 {
            mean_at_1e4 = mean;
        }
        table.push((n, m, runs, mean));
        log_n.push((n as f64).ln());
        log_err.push(mean.ln());
    }
    assert!(
        mean_at_1e4 <= INTEGRATION_MEAN_FACTOR * INTEGRATION_MEAN_AT_1E4,
        "mean |I - Qf| at n = 1e4 is {mean_at_1e4:.4e}, gate {:.4e}",
        INTEGRATION_MEAN_FACTOR * INTEGRATION_MEAN_AT_1E4
    );
    // The observed decay carries a (log n)^{2d} factor on top of the n^{-2}
    // trend; the gated fit divides that factor out, the raw fit is printed
    // alongside for reference.
    let raw_slope = fitted_slope(&log_n, &log_err);
    let adjusted: Vec<f64> = log_n
        .iter()
        .zip(&log_err)
        .map(|(&ln_n, &ln_e)| ln_e - 4.0 * ln_n.ln())
        .collect();
    let adj_slope = fitted_slope(&log_n, &adjusted);
    assert!(
        adj_slope <= INTEGRATION_SLOPE_GATE,
        "polylog-adjusted decay {adj_slope:.3} above gate {INTEGRATION_SLOPE_GATE}"
    );
    for (n, m, runs, mean) in &table {
        println!(
            "criterion 09 (decay) n = {n:>6}, m = {m:>4}, runs = {runs:>3}: mean |I - Qf| = {mean:.4e}"
        );
    }
    println!(
        "criterion 09 pass: mean at 1e4 = {mean_at_1e4:.4e} <= {:.4e}; \
         adjusted slope {adj_slope:.3} (raw {raw_slope:.3}) <= {INTEGRATION_SLOPE_GATE}",
        INTEGRATION_MEAN_FACTOR * INTEGRATION_MEAN_AT_1E4
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: the weighted solver degenerates exactly to the plain one.
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_weighted_reduces_to_plain_on_fourier() {
    let model = SpectrumModel::fourier(2, WeightRule::Star { s: 2.0 }, 256).unwrap();
    let m = 64;
    let nodes = draw_importance(2_000, &model, m, 110, 0).unwrap();
    assert!(nodes
        .densities()
        .unwrap()
        .iter()
        .all(|&rho| rho == 1.0));
    let family = BasisFamily::Fourier { d: 2 };
    let iset =
        hyperbolic_cross(2, m - 1, &WeightRule::Star { s: 2.0 }, IndexDomain::Signed).unwrap();
    let kink = TestFunction::new(TestFunctionId::TorusKink, 2).unwrap();
    let samples = kink.sample(&nodes).unwrap();
    let plain =
        least_squares(&nodes, &samples, &family, &iset, SolverConfig::default()).unwrap();
    let weighted =
        weighted_least_squares(&nodes, &samples, &family, &iset, SolverConfig::default())
            .unwrap();
    assert_eq!(plain.coeffs().len(), weighted.coeffs().len());
    for (i, (a, b)) in plain.coeffs().iter().zip(weighted.coeffs()).enumerate() {
        assert!(
            a == b,
            "coefficient {i} differs: {a:?} vs {b:?} (bit-identity required)"
        );
    }
    assert_eq!(
        plain.report().iterations,
        weighted.report().iterations
    );
    println!(
        "criterion 10 pass: weighted and plain solutions bit-identical on {} coefficients",
        plain.coeffs().len()
    );
}

// ---------------------------------------------------------------------------
// Criterion 11: weighted Legendre pipeline hits the spectral rate.
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_weighted_legendre_recovery() {
    let model = SpectrumModel::legendre(2.0).unwrap();
    let n = 10_000;
    let m = experiment_m(n).unwrap();
    let family = BasisFamily::Legendre;
    let iset =
        hyperbolic_cross(1, m, &WeightRule::Star { s: 2.0 }, IndexDomain::Nonnegative).unwrap();
    let sigma_m = model.sigma(m - 1);
    let gate = LEGENDRE_ERROR_FACTOR * sigma_m;
    let mut ok = 0usize;
    let mut errors = Vec::new();
    for trial in 0..LEGENDRE_SEEDS as u64 {
        // Unit-norm coefficient vector on the first 30 modes, scaled by the
        // singular values so the target sits on the unit ball of the source
        // space.
        let mut rng = ChaCha12Rng::seed_from_u64(111 + trial);
        let mut truth = vec![C64::new(0.0, 0.0); iset.len()];
        let mut norm_sq = 0.0;
        for c in truth.iter_mut().take(30) {
            let re: f64 = rng.random_range(-1.0..1.0);
            let im: f64 = rng.random_range(-1.0..1.0);
            *c = C64::new(re, im);
            norm_sq += c.norm_sqr();
        }
        let scale = 1.0 / norm_sq.sqrt();
        for (j, c) in truth.iter_mut().enumerate().take(30) {
            *c *= scale * model.sigma(j);
        }

        let nodes = draw_importance(n, &model, m, 111, trial).unwrap();
        let design = assemble_design(&family, &iset, &nodes).unwrap();
        let mut samples = vec![C64::new(0.0, 0.0); n];
        design.apply(&truth, &mut samples);
        let approx =
            weighted_least_squares(&nodes, &samples, &family, &iset, SolverConfig::default())
                .unwrap();
        let err = truth
            .iter()
            .zip(approx.coeffs())
            .map(|(t, c)| (t - c).norm_sqr())
            .sum::<f64>()
            .sqrt();
        errors.push(err);
        if err <= gate {
            ok += 1;
        }
    }
    assert!(
        ok >= LEGENDRE_MIN_OK,
        "only {ok}/{LEGENDRE_SEEDS} seeds below 3 sigma_m = {gate:.3e} ({})",
        fmt_errs(&errors)
    );
    let worst = errors.iter().copied().fold(0.0f64, f64::max);
    println!(
        "criterion 11 pass: {ok}/{LEGENDRE_SEEDS} seeds with recovery error <= 3 sigma_m \
         = {gate:.3e} at m = {m} (worst {worst:.3e})"
    );
}

// ---------------------------------------------------------------------------
// Criterion 12: wavelet pipeline properties.
// ---------------------------------------------------------------------------

#[test]
fn criterion_12_wavelet_regression_properties() {
    // (a) Gram concentration and (b) the row-sparsity bound, for one Haar
    // tensor case and one Daubechies case inside the sampling contract.
    for (family, d, ell, n) in [
        (WaveletFamily::Haar, 2usize, 4usize, 8_000usize),
        (WaveletFamily::Daubechies(3), 1, 4, 32_000),
    ] {
        let spec = WaveletSpec::new(family).unwrap();
        let iset = build_wavelet_index_set(d, ell, &spec).unwrap();
        let omega = extended_domain(d, ell, &spec).unwrap();
        let (lo, hi) = omega.bounds();
        let nnz_gate = spec.support_length().pow(d as u32) * iset.n_levels();
        let mut ok = 0;
        for trial in 0..20u64 {
            let nodes = draw_uniform_box(n, &lo, &hi, 112, trial).unwrap();
            let design = assemble_sparse_design(&nodes, &iset, &spec).unwrap();
            let sparse = design.sparse().unwrap();
            assert!(
                sparse.max_row_nnz() <= nnz_gate,
                "{}: row with {} nonzeros above gate {nnz_gate}",
                spec.family().label(),
                sparse.max_row_nnz()
            );
            if gram_deviation(&design).unwrap() <= 0.5 {
                ok += 1;
            }
        }
        assert!(
            ok >= 18,
            "{} d = {d}, l = {ell}: only {ok}/20 trials with deviation <= 1/2",
            spec.family().label()
        );
        println!(
            "criterion 12 (gram/sparsity) {} d = {d}, l = {ell}, m = {}: {ok}/20 trials \
             concentrated, row nnz <= {nnz_gate}",
            spec.family().label(),
            iset.len()
        );
    }

    // (c) Exact span reproduction through the full regression path.
    let db2 = WaveletSpec::new(WaveletFamily::Daubechies(2)).unwrap();
    let iset = build_wavelet_index_set(2, 2, &db2).unwrap();
    let omega = extended_domain(2, 2, &db2).unwrap();
    let (lo, hi) = omega.bounds();
    let nodes = draw_uniform_box(12_000, &lo, &hi, 113, 0).unwrap();
    let design = assemble_sparse_design(&nodes, &iset, &db2).unwrap();
    let truth: Vec<C64> = (0..iset.len())
        .map(|i| C64::new((0.3 * i as f64).sin(), (0.2 * i as f64).cos()))
        .collect();
    let mut samples = vec![C64::new(0.0, 0.0); nodes.len()];
    design.apply(&truth, &mut samples);
    let approx = hyperbolic_wavelet_regression(
        &nodes,
        &samples,
        2,
        &db2,
        SolverConfig {
            tol: 5e-8,
            maxit: 400,
        },
    )
    .unwrap();
    let worst = truth
        .iter()
        .zip(approx.coeffs())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0f64, f64::max);
    assert!(worst < 1e-6, "span member reproduced to {worst:.3e} only");
    println!("criterion 12 (span) db2 d = 2: {} coefficients recovered to {worst:.2e}", iset.len());

    // (d) Per-level error decay for the restricted kink with db3.
    let db3 = WaveletSpec::new(WaveletFamily::Daubechies(3)).unwrap();
    let kink = TestFunction::new(TestFunctionId::TorusKink, 1).unwrap();
    let omega = extended_domain(1, 0, &db3).unwrap();
    let (lo, hi) = omega.bounds();
    let config = SolverConfig {
        tol: 5e-8,
        maxit: 400,
    };
    let mut levels = Vec::new();
    let mut errors = Vec::new();
    for ell in WAVELET_LEVELS {
        let n = WAVELET_N0 << (ell - 3);
        let nodes = draw_uniform_box(n, &lo, &hi, 114, ell as u64).unwrap();
        let samples: Vec<C64> = (0..n)
            .map(|u| {
                let x = nodes.point(u)[0];
                // Zero extension off the unit interval; the kink vanishes
                // continuously at the boundary, so the extension stays in
                // the regression's smoothness class.
                let v = if (0.0..=1.0).contains(&x) {
                    kink.eval(&[x]).unwrap()
                } else {
                    0.0
                };
                C64::new(v, 0.0)
            })
            .collect();
        let approx = hyperbolic_wavelet_regression(&nodes, &samples, ell, &db3, config).unwrap();
        assert!(approx.contract_satisfied(), "l = {ell}: budget contract violated");
        let (err, qbound) =
            qmc_l2_error(|x| kink.eval(x).unwrap(), &approx, WAVELET_QMC_NODES).unwrap();
        assert!(
            qbound < 0.2 * err,
            "l = {ell}: quadrature unresolved ({qbound:.3e} vs {err:.3e})"
        );
        println!(
            "criterion 12 (rate) l = {ell}, n = {n}, m = {}: L2 error {err:.4e}",
            approx.index_set().len()
        );
        levels.push(ell as f64);
        errors.push(err);
    }
    for pair in errors.windows(2) {
        assert!(pair[1] < pair[0], "error not monotone: {errors:?}");
    }
    let log2_err: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let rate = -fitted_slope(&levels, &log2_err);
    assert!(
        rate >= WAVELET_RATE_GATE,
        "per-level rate {rate:.2} below {WAVELET_RATE_GATE} ({errors:?})"
    );
    println!(
        "criterion 12 pass: monotone decay with per-level rate {rate:.2} >= {WAVELET_RATE_GATE}"
    );
}
