//! Hyperbolic-cross multi-index sets ordered by mixed-smoothness weights.
//!
//! A weight rule assigns every multi-index `k` a product weight `w(k) >= 1`.
//! The index set of size `m` collects the `m` indices of smallest weight;
//! the reciprocal weights are the singular values of the associated embedding,
//! so the enumeration order here fixes the meaning of "the first m basis
//! functions" everywhere else in the crate.
//!
//! Enumeration never materializes a bounding box. It brackets the weight
//! threshold by doubling, narrows it by geometric bisection with a
//! counting-only recursion, and only then collects candidates, so memory stays
//! proportional to the final set even in high dimension.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A frequency (signed) or degree (nonnegative) multi-index.
pub type MultiIndex = Vec<i64>;

/// Upper bound on candidates touched during one enumeration.
///
/// 5e7 entries of (weight, index) is a few GB at d = 16; enumerations that
/// would grow past this return [`Error::BudgetExceeded`] instead of thrashing.
const CANDIDATE_BUDGET: usize = 50_000_000;

/// Product weight rule for multi-indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightRule {
    /// `w(k) = prod_i (1 + (2 pi |k_i|)^(2s))^(1/2)`.
    ///
    /// The scaled Sobolev-type weight: its reciprocals are the singular values
    /// of the mixed-smoothness embedding with explicit `2 pi` frequency
    /// scaling.
    Star { s: f64 },
    /// `w(k) = prod_i (1 + 2 pi |k_i|)^s`.
    ///
    /// The equivalent polynomial form preferred for preasymptotic estimates.
    Pound { s: f64 },
    /// `w(k) = prod_i (1 + |k_i|^2)^(1/2)`, no smoothness parameter.
    ///
    /// The unscaled weight used by the numerical experiments; for those only
    /// the enumeration order matters, not the absolute weight values.
    Plain,
}

impl WeightRule {
    /// Smoothness parameter, if the rule has one.
    pub fn smoothness(&self) -> Option<f64> {
        match self {
            WeightRule::Star { s } | WeightRule::Pound { s } => Some(*s),
            WeightRule::Plain => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(s) = self.smoothness() {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::invalid(format!(
                    "weight rule smoothness must be positive and finite, got {s}"
                )));
            }
        }
        Ok(())
    }

    /// Univariate weight factor at component value `t`.
    fn factor(&self, t: i64) -> f64 {
        let a = (t.unsigned_abs()) as f64;
        match *self {
            WeightRule::Star { s } => (1.0 + (2.0 * PI * a).powf(2.0 * s)).sqrt(),
            WeightRule::Pound { s } => (1.0 + 2.0 * PI * a).powf(s),
            WeightRule::Plain => (1.0 + a * a).sqrt(),
        }
    }
}

/// Component domain of an index set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndexDomain {
    /// Signed frequencies in `Z^d` (trigonometric expansions).
    Signed,
    /// Nonnegative degrees in `N_0^d` (cosine/polynomial expansions).
    Nonnegative,
}

/// Product weight of a multi-index under a rule.
///
/// Factors are multiplied left to right; every other weight computation in the
/// crate uses the same order, so equal indices always get bit-identical
/// weights.
pub fn weight(k: &[i64], rule: &WeightRule) -> Result<f64> {
    rule.validate()?;
    if k.is_empty() {
        return Err(Error::mismatch("weight: empty multi-index"));
    }
    Ok(k.iter().fold(1.0, |acc, &t| acc * rule.factor(t)))
}

/// The `m` smallest-weight multi-indices under `rule`, sorted by
/// (weight, lexicographic) with the first component outermost.
///
/// The set is always downward closed: if `|j_i| <= |k_i|` for all `i` and `k`
/// is included, so is `j` (strict monotonicity of the univariate factors makes
/// dominated indices strictly lighter).
pub fn hyperbolic_cross(
    d: usize,
    m: usize,
    rule: &WeightRule,
    domain: IndexDomain,
) -> Result<IndexSet> {
    rule.validate()?;
    if d == 0 {
        return Err(Error::invalid("hyperbolic_cross: dimension must be >= 1"));
    }
    if m == 0 {
        return Err(Error::invalid("hyperbolic_cross: set size must be >= 1"));
    }

    // Bracket the weight threshold: w_lo admits fewer than m indices,
    // w_hi at least m. The zero index always has weight exactly 1.
    let mut w_hi = 1.0;
    if count_below(d, rule, domain, w_hi, m)? < m {
        let mut w_lo;
        loop {
            w_lo = w_hi;
            w_hi *= 2.0;
            if !w_hi.is_finite() {
                return Err(Error::invalid(
                    "hyperbolic_cross: weight threshold overflowed f64 range",
                ));
            }
            if count_below(d, rule, domain, w_hi, m)? >= m {
                break;
            }
        }
        // Narrow geometrically so the final enumeration does not badly
        // overshoot m (important for small smoothness, where doubling the
        // threshold can multiply the count by a large power).
        for _ in 0..40 {
            if count_below(d, rule, domain, w_hi, 4 * m)? <= 4 * m || w_hi / w_lo < 1.0001 {
                break;
            }
            let mid = (w_lo * w_hi).sqrt();
            if count_below(d, rule, domain, mid, m)? >= m {
                w_hi = mid;
            } else {
                w_lo = mid;
            }
        }
    }

    let mut entries = collect_below(d, rule, domain, w_hi)?;
    debug_assert!(entries.len() >= m);
    entries.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("index weights are never NaN")
            .then_with(|| a.1.cmp(&b.1))
    });
    entries.truncate(m);

    let mut flat = Vec::with_capacity(d * m);
    let mut weights = Vec::with_capacity(m);
    for (w, k) in entries {
        weights.push(w);
        flat.extend_from_slice(&k);
    }
    Ok(IndexSet {
        d,
        rule: rule.clone(),
        domain,
        flat,
        weights,
    })
}

/// First `m` singular values `sigma_j = 1 / w(k_j)` of the embedding with the
/// given weight rule, in the signed-frequency enumeration order.
pub fn singular_values(d: usize, rule: &WeightRule, m: usize) -> Result<Vec<f64>> {
    let set = hyperbolic_cross(d, m, rule, IndexDomain::Signed)?;
    Ok(set.weights.iter().map(|w| 1.0 / w).collect())
}

/// Candidate component values in the fixed enumeration order for one axis:
/// `0, -1, 1, -2, 2, ...` (signed) or `0, 1, 2, ...` (nonnegative).
fn axis_values(domain: IndexDomain) -> impl Iterator<Item = i64> {
    // Magnitudes are nondecreasing along this order, so a factor exceeding the
    // remaining budget terminates the axis scan.
    (0u64..).flat_map(move |mag| {
        let t = mag as i64;
        match domain {
            IndexDomain::Signed => {
                if mag == 0 {
                    vec![0]
                } else {
                    vec![-t, t]
                }
            }
            IndexDomain::Nonnegative => vec![t],
        }
        .into_iter()
    })
}

/// Count indices with `w(k) <= bound`, giving up once `cap` is exceeded.
///
/// Allocation-free; used to position the weight threshold before collecting.
fn count_below(
    d: usize,
    rule: &WeightRule,
    domain: IndexDomain,
    bound: f64,
    cap: usize,
) -> Result<usize> {
    fn rec(
        axis: usize,
        d: usize,
        prefix: f64,
        rule: &WeightRule,
        domain: IndexDomain,
        bound: f64,
        cap: usize,
        count: &mut usize,
    ) -> Result<()> {
        for t in axis_values(domain) {
            let w = prefix * rule.factor(t);
            if w > bound {
                // Both signs of one magnitude share a factor, so once the
                // positive value fails every later magnitude fails too.
                if t >= 0 {
                    break;
                }
                continue;
            }
            if axis + 1 == d {
                *count += 1;
                if *count > cap.saturating_mul(8).max(CANDIDATE_BUDGET) {
                    return Err(Error::BudgetExceeded(format!(
                        "hyperbolic cross count passed {count} indices"
                    )));
                }
            } else {
                rec(axis + 1, d, w, rule, domain, bound, cap, count)?;
            }
        }
        Ok(())
    }

    let mut count = 0;
    rec(0, d, 1.0, rule, domain, bound, cap, &mut count)?;
    Ok(count)
}

/// Collect all indices with `w(k) <= bound` together with their weights.
fn collect_below(
    d: usize,
    rule: &WeightRule,
    domain: IndexDomain,
    bound: f64,
) -> Result<Vec<(f64, MultiIndex)>> {
    fn rec(
        axis: usize,
        d: usize,
        prefix: f64,
        stack: &mut Vec<i64>,
        rule: &WeightRule,
        domain: IndexDomain,
        bound: f64,
        out: &mut Vec<(f64, MultiIndex)>,
    ) -> Result<()> {
        for t in axis_values(domain) {
            let w = prefix * rule.factor(t);
            if w > bound {
                if t >= 0 {
                    break;
                }
                continue;
            }
            stack.push(t);
            if axis + 1 == d {
                if out.len() >= CANDIDATE_BUDGET {
                    return Err(Error::BudgetExceeded(format!(
                        "hyperbolic cross enumeration passed {} indices",
                        out.len()
                    )));
                }
                out.push((w, stack.clone()));
            } else {
                rec(axis + 1, d, w, stack, rule, domain, bound, out)?;
            }
            stack.pop();
        }
        Ok(())
    }

    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(d);
    rec(0, d, 1.0, &mut stack, rule, domain, bound, &mut out)?;
    Ok(out)
}

/// An ordered set of multi-indices with their weights.
///
/// Invariants (checked on construction and deserialization):
/// * all indices have the same dimension `d` and respect the domain;
/// * weights are exactly `weight(k, rule)` and nondecreasing;
/// * ties are ordered lexicographically (first component outermost);
/// * no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    d: usize,
    rule: WeightRule,
    domain: IndexDomain,
    flat: Vec<i64>,
    weights: Vec<f64>,
}

impl IndexSet {
    /// Dimension of every index in the set.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of indices.
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    /// True when the set holds no indices.
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weight rule the ordering is based on.
    pub fn rule(&self) -> &WeightRule {
        &self.rule
    }

    /// Component domain (signed frequencies or nonnegative degrees).
    pub fn domain(&self) -> IndexDomain {
        self.domain
    }

    /// The `i`-th index (0-based position in the enumeration order).
    pub fn index(&self, i: usize) -> &[i64] {
        &self.flat[i * self.d..(i + 1) * self.d]
    }

    /// Weight of the `i`-th index.
    pub fn weight_at(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// All weights in enumeration order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Iterate over the indices in enumeration order.
    pub fn iter(&self) -> impl Iterator<Item = &[i64]> {
        self.flat.chunks_exact(self.d)
    }

    /// Largest absolute component value appearing on any axis.
    pub fn max_abs_component(&self) -> i64 {
        self.flat.iter().map(|t| t.abs()).max().unwrap_or(0)
    }

    /// The contiguous enumeration slice `[start, end)` as a set of its own.
    ///
    /// A slice of a valid enumeration keeps all invariants (weights stay
    /// nondecreasing, ties stay lexicographic), so no re-validation is
    /// needed.
    pub(crate) fn subrange(&self, start: usize, end: usize) -> IndexSet {
        assert!(start <= end && end <= self.len());
        IndexSet {
            d: self.d,
            rule: self.rule.clone(),
            domain: self.domain,
            flat: self.flat[start * self.d..end * self.d].to_vec(),
            weights: self.weights[start..end].to_vec(),
        }
    }

    /// Plain-text serialization: one index per line, components separated by
    /// single spaces.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for k in self.iter() {
            for (i, t) in k.iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{t}");
            }
            s.push('\n');
        }
        s
    }

    /// Parse the plain-text form, recomputing weights and re-validating every
    /// invariant (dimension, domain, ordering, uniqueness).
    pub fn from_text(text: &str, rule: WeightRule, domain: IndexDomain) -> Result<IndexSet> {
        rule.validate()?;
        let mut flat = Vec::new();
        let mut weights = Vec::new();
        let mut d = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let k: Vec<i64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<i64>().map_err(|e| {
                        Error::Parse(format!("index line {}: {e}", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            match d {
                None => d = Some(k.len()),
                Some(d0) if d0 != k.len() => {
                    return Err(Error::mismatch(format!(
                        "index line {}: expected dimension {d0}, got {}",
                        lineno + 1,
                        k.len()
                    )))
                }
                _ => {}
            }
            if domain == IndexDomain::Nonnegative && k.iter().any(|&t| t < 0) {
                return Err(Error::invalid(format!(
                    "index line {}: negative component in nonnegative domain",
                    lineno + 1
                )));
            }
            weights.push(weight(&k, &rule)?);
            flat.extend_from_slice(&k);
        }
        let d = d.ok_or_else(|| Error::Parse("index text holds no indices".into()))?;
        let set = IndexSet {
            d,
            rule,
            domain,
            flat,
            weights,
        };
        set.validate_order()?;
        Ok(set)
    }

    /// Check the ordering and uniqueness invariants.
    fn validate_order(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.len());
        for i in 0..self.len() {
            if !seen.insert(self.index(i).to_vec()) {
                return Err(Error::invalid(format!(
                    "duplicate index at position {i}"
                )));
            }
            if i > 0 {
                let (wp, wc) = (self.weights[i - 1], self.weights[i]);
                if wp > wc {
                    return Err(Error::invalid(format!(
                        "weights decrease at position {i}: {wp} > {wc}"
                    )));
                }
                if wp == wc && self.index(i - 1) >= self.index(i) {
                    return Err(Error::invalid(format!(
                        "lexicographic tie order violated at position {i}"
                    )));
                }
            }
        }
        Ok(())
    }
}
