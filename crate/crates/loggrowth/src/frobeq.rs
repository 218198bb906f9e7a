//! Frobenius equations `a_0 y + a_1 y^s + ... + a_n y^{s^n} = 0`: solving by x-adic fixed
//! point, ladder profiles of `|y|_rho` as `rho -> 1`, and growth classification with an audit
//! of the inequalities that pin the growth down.

use std::sync::Arc;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ore::{self, OreError, TwistedPoly};
use crate::padics::{PadicContext, PadicScalar};
use crate::rat::{self, Q};
use crate::series::{LaurentSeries, LogSeries, SeriesError, Tail};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrobeqError {
    #[error(transparent)]
    Ore(#[from] OreError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("fixed-point iteration is not contracting: {0}")]
    NonContracting(String),
    #[error("seed violates the constant-term constraint (residual valuation {0:?})")]
    InconsistentSeed(Option<i64>),
    #[error("twisted polynomial does not satisfy the on-polygon condition")]
    StarFails,
    #[error("y is not a solution to order {0}")]
    NotASolution(usize),
    #[error("y is zero")]
    ZeroSolution,
}

#[derive(Clone, Debug, Serialize)]
pub struct FrobeqConfig {
    /// Ladder base, `rho_0 = p^{-r0}`.
    #[serde(serialize_with = "ser_q")]
    pub r0: Q,
    pub depth: usize,
    pub tau: f64,
    pub max_den: u64,
    /// Order to which `f(s) y = 0` is checked before classifying.
    pub verify_order: usize,
}

fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&rat::fmt_q(x))
}

impl Default for FrobeqConfig {
    fn default() -> Self {
        FrobeqConfig { r0: rat::q(1, 2), depth: 8, tau: 0.15, max_den: 8, verify_order: 32 }
    }
}

impl FrobeqConfig {
    /// Number of deepest ladder entries used by the estimator.
    pub fn window(&self) -> usize {
        (self.depth / 3).max(4)
    }
}

/// Largest depth `M` with `2 q^M / r0 <= T`, or `None` if even `M = 0` needs more terms.
pub fn feasible_depth(t: usize, r0: &Q, q: u64) -> Option<usize> {
    let r0 = rat::to_f64(r0);
    let mut m = None;
    let mut need = 2.0 / r0;
    let mut k = 0usize;
    while need <= t as f64 {
        m = Some(k);
        k += 1;
        need *= q as f64;
    }
    m
}

#[derive(Clone, Debug)]
pub struct FixedPointSolution {
    pub y: LogSeries,
    /// Tail of the truncated solution: exact, a valuation floor, or unknown.
    pub tail: Tail,
}

fn power_series_terms(a: &LaurentSeries, what: &str) -> Result<Vec<(i64, PadicScalar)>, FrobeqError> {
    if !a.is_exact() {
        return Err(FrobeqError::NonContracting(format!("{what} is not a polynomial")));
    }
    let terms: Vec<(i64, PadicScalar)> = a.terms().map(|(n, c)| (*n, c.clone())).collect();
    if terms.iter().any(|(n, _)| *n < 0) {
        return Err(FrobeqError::NonContracting(format!("{what} has negative x-exponents")));
    }
    Ok(terms)
}

/// Power-series solution of `f(s) y + forcing = 0` to order `t`, from `y(0) = seed`.
///
/// `y_N = -a_0(0)^{-1} (sum of the remaining contributions to x^N)`, which only involves
/// `y_M` with `M < N` because `s(x) = x^q`.
pub fn solve_fixed_point(
    f: &TwistedPoly,
    seed: &PadicScalar,
    t: usize,
    forcing: Option<&LaurentSeries>,
) -> Result<FixedPointSolution, FrobeqError> {
    let ctx = f.context().clone();
    let q = ctx.q_u64() as i64;
    let coeffs: Vec<Vec<(i64, PadicScalar)>> = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, a)| power_series_terms(a, &format!("a_{i}")))
        .collect::<Result<_, _>>()?;
    let forcing_terms = match forcing {
        Some(g) => power_series_terms(g, "forcing")?,
        None => Vec::new(),
    };
    let a00 = coeffs
        .first()
        .and_then(|a| a.iter().find(|(n, _)| *n == 0))
        .map(|(_, c)| c.clone())
        .filter(|c| !c.is_zero())
        .ok_or_else(|| FrobeqError::NonContracting("a_0(0) = 0".into()))?;
    let inv = a00.inv().map_err(SeriesError::from)?;

    // constant-term constraint
    let mut c0 = PadicScalar::zero(&ctx);
    for a in &coeffs {
        if let Some((_, c)) = a.iter().find(|(n, _)| *n == 0) {
            c0 = &c0 + c;
        }
    }
    let mut residual = &c0 * seed;
    if let Some((_, g0)) = forcing_terms.iter().find(|(n, _)| *n == 0) {
        residual = &residual + g0;
    }
    if !residual.is_zero() {
        return Err(FrobeqError::InconsistentSeed(residual.valuation()));
    }

    let mut y: Vec<PadicScalar> = vec![PadicScalar::zero(&ctx); t.max(1)];
    y[0] = seed.clone();
    let mut forcing_at = vec![None; t.max(1)];
    for (n, c) in &forcing_terms {
        if (*n as usize) < t {
            forcing_at[*n as usize] = Some(c.clone());
        }
    }
    // q^i for each index i of f
    let qpow: Vec<i64> = (0..coeffs.len()).map(|i| q.checked_pow(i as u32).unwrap_or(i64::MAX)).collect();
    for nn in 1..t {
        let n = nn as i64;
        let mut acc = forcing_at[nn].clone().unwrap_or_else(|| PadicScalar::zero(&ctx));
        for (i, a) in coeffs.iter().enumerate() {
            for (k, c) in a {
                if i == 0 && *k == 0 {
                    continue;
                }
                let m = n - k;
                if m < 0 || m % qpow[i] != 0 {
                    continue;
                }
                let src = (m / qpow[i]) as usize;
                if y[src].is_exact_zero() {
                    continue;
                }
                acc = &acc + &(c * &y[src]);
            }
        }
        y[nn] = (&acc * &inv).neg();
    }

    let max_deg = coeffs
        .iter()
        .chain(std::iter::once(&forcing_terms))
        .flat_map(|a| a.iter().map(|(n, _)| *n))
        .max()
        .unwrap_or(0);
    let tail = if forcing_terms.iter().any(|(n, _)| *n >= t as i64) {
        Tail::Unknown
    } else if (t as i64) > max_deg && y.iter().skip(1).all(|c| c.is_exact_zero()) {
        Tail::Exact
    } else {
        // v(y_N) >= min_{M<N} v(y_M) + mu for N >= T, where mu bounds the normalized coefficients
        let mut mu: Option<i64> = None;
        for (i, a) in coeffs.iter().enumerate() {
            for (k, c) in a {
                if i == 0 && *k == 0 {
                    continue;
                }
                if let Some(v) = (c * &inv).valuation_lower_bound() {
                    mu = Some(mu.map_or(v, |m: i64| m.min(v)));
                }
            }
        }
        let floor = y.iter().filter_map(|c| if c.is_exact_zero() { None } else { c.valuation_lower_bound() }).min();
        match (mu, floor) {
            (Some(mu), Some(fl)) if mu >= 0 => Tail::floor(rat::qi(fl)),
            (None, Some(fl)) => Tail::floor(rat::qi(fl)),
            _ => Tail::Unknown,
        }
    };
    let hi = t as i64 - 1;
    let series = LaurentSeries::new(&ctx, 0, hi, y.into_iter().enumerate().map(|(n, c)| (n as i64, c)), Tail::Exact, tail.clone());
    Ok(FixedPointSolution { y: LogSeries::from_series(series), tail })
}

/// True iff every coefficient of `f(s) y` below `x^t` vanishes, in every log-degree.
pub fn verify_solution(f: &TwistedPoly, y: &LogSeries, t: usize) -> bool {
    if y.is_exact_zero() {
        return true;
    }
    let Ok(r) = f.apply(y) else { return false };
    r.components().iter().all(|c| {
        if !c.below().is_exact() {
            return false;
        }
        if c.hi() < t as i64 - 1 && !c.above().is_exact() {
            return false;
        }
        c.terms().filter(|(n, _)| **n < t as i64).all(|(_, a)| a.is_zero())
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderEntry {
    pub m: usize,
    #[serde(serialize_with = "ser_q")]
    pub r: Q,
    /// `-log_p |y|_rho`.
    pub exponent: f64,
    /// `log_q |y|_rho`.
    pub growth: f64,
    pub error: f64,
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderProfile {
    #[serde(serialize_with = "ser_q")]
    pub r0: Q,
    pub depth: usize,
    /// Certified prefix of the ladder.
    pub entries: Vec<LadderEntry>,
    /// First depth at which certification failed, with a diagnostic.
    pub truncated: Option<(usize, String)>,
}

fn ladder_radius(r0: &Q, q: u64, m: usize) -> Q {
    r0 / Q::from_integer(num_bigint::BigInt::from(q).pow(m as u32))
}

/// `-log_p |y|_rho` at `rho = p^{-r0 q^{-m}}` for `m = 0..=depth`.
pub fn ladder_profile(y: &LogSeries, r0: &Q, depth: usize) -> LadderProfile {
    let ctx = y.context();
    let q = ctx.q_u64();
    let h = ctx.h() as f64;
    let raw: Vec<LadderEntry> = (0..=depth)
        .into_par_iter()
        .map(|m| {
            let r = ladder_radius(r0, q, m);
            match y.log_norm_exponent(&r) {
                Ok(e) => LadderEntry {
                    m,
                    r,
                    exponent: e.value,
                    growth: -e.value / h,
                    error: e.error / h,
                    certified: e.certified && e.value.is_finite(),
                },
                Err(_) => LadderEntry { m, r, exponent: f64::NAN, growth: f64::NAN, error: f64::INFINITY, certified: false },
            }
        })
        .collect();
    let cut = raw.iter().position(|e| !e.certified);
    let truncated = cut.map(|m| {
        let why = if raw[m].exponent.is_infinite() { "zero series" } else { "tail bound too weak at this radius" };
        (m, why.to_string())
    });
    let entries = raw.into_iter().take(cut.unwrap_or(depth + 1)).collect();
    LadderProfile { r0: r0.clone(), depth, entries, truncated }
}

/// Least-squares slope of `(m, growth)` over the last `w` entries.
pub fn least_squares_slope(entries: &[LadderEntry], w: usize) -> Option<f64> {
    if entries.len() < w || w < 2 {
        return None;
    }
    let tail = &entries[entries.len() - w..];
    let n = w as f64;
    let mx = tail.iter().map(|e| e.m as f64).sum::<f64>() / n;
    let my = tail.iter().map(|e| e.growth).sum::<f64>() / n;
    let sxy: f64 = tail.iter().map(|e| (e.m as f64 - mx) * (e.growth - my)).sum();
    let sxx: f64 = tail.iter().map(|e| (e.m as f64 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "slope")]
pub enum Classification {
    Bounded,
    ExactlyLogGrowth(#[serde(serialize_with = "ser_q")] Q),
    Unclassified,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionAudit {
    pub j: usize,
    pub holds: bool,
    /// Ladder depths where the inequality fails.
    pub failures: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct UpperAudit {
    #[serde(serialize_with = "ser_q")]
    pub slope: Q,
    /// `max_m (growth(m) - growth(0) - m s)`.
    pub b: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerStep {
    pub m: i64,
    pub i_prime: usize,
    /// `(i, u)` with `eps_{iu} = 1`.
    pub epsilon: Vec<(usize, i64)>,
    pub a_holds: bool,
    pub b_holds: bool,
    pub c_holds: bool,
    /// `log_q |y|` at `rho_1^{q^m}` minus its value at `rho_1^{q^lambda}`.
    pub growth: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerAudit {
    /// Ladder depth of `rho_1`.
    pub rho1_depth: usize,
    pub steps: Vec<LowerStep>,
    pub b_prime: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Audit {
    /// x-coordinates of the polygon vertices.
    pub breaks: Vec<usize>,
    /// Slope `s` of each segment (hull slope `-s`), left to right.
    #[serde(serialize_with = "ser_qs")]
    pub segment_slopes: Vec<Q>,
    pub conditions: Vec<ConditionAudit>,
    pub j: usize,
    #[serde(serialize_with = "ser_q")]
    pub predicted: Q,
    pub upper: UpperAudit,
    pub lower: Option<LowerAudit>,
}

fn ser_qs<S: serde::Serializer>(xs: &[Q], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&rat::fmt_q(x))?;
    }
    seq.end()
}

#[derive(Clone, Debug, Serialize)]
pub struct LogGrowthReport {
    /// Distinct slopes of `f`, increasing.
    #[serde(serialize_with = "ser_qs")]
    pub slopes: Vec<Q>,
    pub estimate: Option<f64>,
    #[serde(serialize_with = "ser_opt_q")]
    pub snapped: Option<Q>,
    pub classification: Classification,
    /// Audit prediction agrees with the snapped estimate.
    pub consistent: bool,
    pub profile: LadderProfile,
    pub audit: Option<Audit>,
    pub note: Option<String>,
}

fn ser_opt_q<S: serde::Serializer>(x: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&rat::fmt_q(v)),
        None => s.serialize_none(),
    }
}

/// Exponents `-log_p |a_i y^{s^i}|_rho` at `rho = p^{-r}`, `+inf` for zero terms.
struct TermNorms<'a> {
    f: &'a TwistedPoly,
    y: &'a LogSeries,
    q: Q,
}

impl TermNorms<'_> {
    fn coeff(&self, i: usize, r: &Q) -> f64 {
        let a = self.f.coeff(i);
        if a.is_exact_zero() {
            return f64::INFINITY;
        }
        a.gauss_exponent(r).value.map_or(f64::INFINITY, |v| rat::to_f64(&v))
    }

    fn y_at(&self, r: &Q) -> f64 {
        self.y.log_norm_exponent(r).map_or(f64::NAN, |e| e.value)
    }

    fn term(&self, i: usize, r: &Q) -> f64 {
        let c = self.coeff(i, r);
        if c.is_infinite() {
            return c;
        }
        let qi = num_traits::pow(self.q.clone(), i);
        c + self.y_at(&(r * qi))
    }

    fn min_over(&self, range: std::ops::RangeInclusive<usize>, r: &Q) -> f64 {
        range.map(|i| self.term(i, r)).fold(f64::INFINITY, f64::min)
    }
}

fn tol(a: f64, b: f64) -> f64 {
    1e-9 * (1.0 + a.abs().max(b.abs()).min(1e12))
}

/// `sup_{lo..=mid} |.| <= sup_{mid+1..=n} |.|` in exponent form.
fn sup_le(lhs: f64, rhs: f64) -> bool {
    if lhs.is_infinite() {
        return true;
    }
    lhs >= rhs - tol(lhs, rhs)
}

fn sup_gt(lhs: f64, rhs: f64) -> bool {
    if rhs.is_infinite() {
        return lhs.is_finite();
    }
    lhs < rhs - tol(lhs, rhs)
}

fn run_audit(f: &TwistedPoly, y: &LogSeries, profile: &LadderProfile, cfg: &FrobeqConfig) -> Result<Audit, FrobeqError> {
    let ctx = f.context().clone();
    let star = ore::check_condition_star(f)?;
    let verts: Vec<usize> = star.polygon.vertices.iter().map(|(x, _)| rat::floor_i64(x) as usize).collect();
    let segment_slopes: Vec<Q> = star.polygon.vertices.windows(2).map(|w| -(&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0)).collect();
    let k = segment_slopes.len();
    let n = f.degree();
    let qq = Q::from_integer(ctx.q());
    let tn = TermNorms { f, y, q: qq.clone() };
    let h = ctx.h() as f64;

    let mut conditions = Vec::new();
    let mut j = k - 1;
    for jj in 0..k.saturating_sub(1) {
        let failures: Vec<usize> = profile
            .entries
            .iter()
            .filter(|e| !sup_le(tn.min_over(verts[jj]..=verts[jj + 1], &e.r), tn.min_over(verts[jj + 1] + 1..=n, &e.r)))
            .map(|e| e.m)
            .collect();
        let holds = failures.is_empty();
        conditions.push(ConditionAudit { j: jj, holds, failures });
        if !holds && j == k - 1 {
            j = jj;
        }
    }
    let predicted = segment_slopes[j].clone();
    let s = rat::to_f64(&predicted);
    let g0 = profile.entries.first().map_or(0.0, |e| e.growth);
    let b = profile.entries.iter().map(|e| e.growth - g0 - e.m as f64 * s).fold(f64::NEG_INFINITY, f64::max);
    let upper = UpperAudit { slope: predicted.clone(), b };

    // lower bound: follow the descending sequence m(l) from the first strict radius
    let lam = verts[j + 1];
    let lam_lo = verts[j];
    let strict = |r: &Q| sup_gt(tn.min_over(lam_lo..=lam, r), tn.min_over(lam + 1..=n, r));
    let rho1 = profile.entries.iter().filter(|e| e.m >= n).find(|e| strict(&e.r)).map(|e| (e.m, e.r.clone()));
    let lower = rho1.map(|(m1, r1)| {
        let at = |u: i64| -> Q {
            if u >= 0 {
                &r1 * num_traits::pow(qq.clone(), u as usize)
            } else {
                &r1 / num_traits::pow(qq.clone(), (-u) as usize)
            }
        };
        let argmax = |r: &Q| -> usize {
            let mut best = (f64::INFINITY, 0usize);
            for i in 0..lam {
                let e = tn.term(i, r);
                if e < best.0 {
                    best = (e, i);
                }
            }
            best.1
        };
        let deepest = ladder_radius(&cfg.r0, ctx.q_u64(), profile.entries.last().map_or(0, |e| e.m));
        let y_base = tn.y_at(&at(lam as i64));
        let mut steps = Vec::new();
        let i0 = argmax(&r1);
        let mut m = i0 as i64;
        let mut eps: Vec<(usize, i64)> = vec![(i0, 0)];
        for _ in 0..64 {
            let r_m = at(m);
            if r_m < deepest {
                break;
            }
            let lhs_a = (-tn.y_at(&r_m) + y_base) / h;
            let rhs_a: f64 = eps
                .iter()
                .map(|(i, u)| {
                    let r = at(*u);
                    (-tn.coeff(lam, &r) + tn.coeff(*i, &r)) / h
                })
                .sum();
            let a_holds = lhs_a >= rhs_a - tol(lhs_a, rhs_a);
            let b_holds = eps.iter().map(|(i, _)| (lam - i) as i64).sum::<i64>() == lam as i64 - m;
            let rc = at(m - lam as i64);
            let c_holds = strict(&rc);
            let ip = argmax(&rc);
            steps.push(LowerStep { m, i_prime: ip, epsilon: eps.clone(), a_holds, b_holds, c_holds, growth: lhs_a });
            let next = m - lam as i64 + ip as i64;
            eps.push((ip, next - lam as i64));
            m = next;
        }
        let b_prime = steps
            .iter()
            .map(|st| (lam as i64 - st.m) as f64 * s - st.growth)
            .fold(f64::NEG_INFINITY, f64::max);
        LowerAudit { rho1_depth: m1, steps, b_prime }
    });

    Ok(Audit { breaks: verts, segment_slopes, conditions, j, predicted, upper, lower })
}

/// Classifies a solution `y` of `f(s) y = 0` as bounded or of exact log-growth `s_j`.
pub fn classify_log_growth(f: &TwistedPoly, y: &LogSeries, cfg: &FrobeqConfig) -> Result<LogGrowthReport, FrobeqError> {
    let star = ore::check_condition_star(f)?;
    if !star.satisfied {
        return Err(FrobeqError::StarFails);
    }
    if y.is_zero_at_precision() {
        return Err(FrobeqError::ZeroSolution);
    }
    if !verify_solution(f, y, cfg.verify_order) {
        return Err(FrobeqError::NotASolution(cfg.verify_order));
    }
    let mut slopes: Vec<Q> = ore::module_slopes(&star.polygon).into_iter().map(|(s, _)| s).collect();
    slopes.sort();
    slopes.dedup();
    let profile = ladder_profile(y, &cfg.r0, cfg.depth);
    let estimate = least_squares_slope(&profile.entries, cfg.window());
    let mut candidates: Vec<Q> = vec![Q::zero()];
    candidates.extend(slopes.iter().filter(|s| s.is_positive()).cloned());
    let snapped = estimate.and_then(|lam| {
        candidates
            .iter()
            .map(|c| ((rat::to_f64(c) - lam).abs(), c))
            .filter(|(d, _)| *d <= cfg.tau)
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .map(|(_, c)| c.clone())
    });
    let classification = match &snapped {
        None => Classification::Unclassified,
        Some(s) if s.is_zero() => Classification::Bounded,
        Some(s) => Classification::ExactlyLogGrowth(s.clone()),
    };
    let note = if estimate.is_none() {
        Some(format!(
            "only {} certified ladder entries, estimator needs {}",
            profile.entries.len(),
            cfg.window()
        ))
    } else if snapped.is_none() {
        Some("estimate is not within tolerance of any candidate".into())
    } else {
        None
    };
    let audit = if profile.entries.is_empty() { None } else { Some(run_audit(f, y, &profile, cfg)?) };
    let consistent = match (&snapped, &audit) {
        (Some(s), Some(a)) => {
            let pred = if a.predicted.is_positive() { a.predicted.clone() } else { Q::zero() };
            *s == pred
        }
        _ => false,
    };
    Ok(LogGrowthReport { slopes, estimate, snapped, classification, consistent, profile, audit, note })
}

/// `s - q^a`.
pub fn linear_factor(ctx: &Arc<PadicContext>, slope: &Q) -> Result<TwistedPoly, FrobeqError> {
    ore::from_constant_slope_factors(ctx, std::slice::from_ref(slope)).map_err(Into::into)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::qi;

    fn ctx(p: u64) -> Arc<PadicContext> {
        PadicContext::new(p, 1, 30).unwrap()
    }

    #[test]
    fn trivial_fixed_point() {
        let c = ctx(5);
        let f = linear_factor(&c, &qi(0)).unwrap();
        let sol = solve_fixed_point(&f, &PadicScalar::one(&c), 20, None).unwrap();
        assert!(sol.tail.is_exact());
        assert!(verify_solution(&f, &sol.y, 20));
        assert_eq!(sol.y.component(0).unwrap().num_terms(), 1);
    }

    #[test]
    fn inhomogeneous_telescoping() {
        // p y^s - y + x = 0 has y = sum p^n x^{q^n}
        let c = ctx(3);
        let f = TwistedPoly::from_rationals(&c, &[qi(-1), qi(3)]);
        let x = LaurentSeries::x_pow(&c, 1);
        let sol = solve_fixed_point(&f, &PadicScalar::zero(&c), 100, Some(&x)).unwrap();
        let y = sol.y.component(0).unwrap();
        for (n, k) in [(1, 0), (3, 1), (9, 2), (27, 3), (81, 4)] {
            assert_eq!(y.coeff(n).unwrap().valuation(), Some(k));
        }
        assert_eq!(y.num_terms(), 5);
        assert!(matches!(sol.tail, Tail::Bound { .. }));
        let err = solve_fixed_point(&f, &PadicScalar::one(&c), 10, Some(&x)).unwrap_err();
        assert!(matches!(err, FrobeqError::InconsistentSeed(_)));
    }

    #[test]
    fn verify_examples() {
        let c = ctx(5);
        let f = linear_factor(&c, &qi(1)).unwrap();
        assert!(verify_solution(&f, &LogSeries::log_x(&c), 40));
        assert!(!verify_solution(&f, &LogSeries::from_series(LaurentSeries::one(&c)), 40));
        assert!(verify_solution(&f, &LogSeries::zero(&c), 40));
        // left multiplication by a unit monomial
        let u = TwistedPoly::monomial(LaurentSeries::constant(PadicScalar::from_int(&c, 7)), 2);
        let g = u.ore_mul(&f).unwrap();
        assert!(verify_solution(&g, &LogSeries::log_x(&c), 40));
    }

    #[test]
    fn ladder_examples() {
        let c = ctx(5);
        let one = LogSeries::from_series(LaurentSeries::one(&c));
        let prof = ladder_profile(&one, &rat::q(1, 2), 6);
        assert_eq!(prof.entries.len(), 7);
        assert!(prof.entries.iter().all(|e| e.exponent == 0.0));
        let lg = ladder_profile(&LogSeries::log_x(&c), &rat::q(1, 2), 6);
        for w in lg.entries.windows(2) {
            assert!((w[1].growth - w[0].growth - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn classify_examples() {
        let c = ctx(5);
        let cfg = FrobeqConfig { depth: 12, ..Default::default() };
        let f = linear_factor(&c, &qi(1)).unwrap();
        let rep = classify_log_growth(&f, &LogSeries::log_x(&c), &cfg).unwrap();
        assert_eq!(rep.classification, Classification::ExactlyLogGrowth(qi(1)));
        assert!(rep.consistent);
        let audit = rep.audit.unwrap();
        assert!(audit.upper.b.is_finite());
        let lower = audit.lower.unwrap();
        assert!(lower.b_prime.is_finite());
        assert!(lower.steps.iter().all(|s| s.a_holds && s.b_holds && s.c_holds));

        let f = linear_factor(&c, &qi(0)).unwrap();
        let one = LogSeries::from_series(LaurentSeries::one(&c));
        let rep = classify_log_growth(&f, &one, &cfg).unwrap();
        assert_eq!(rep.classification, Classification::Bounded);
        assert!(rep.consistent);
    }

    #[test]
    fn two_slope_equation_audit_picks_segment() {
        let c = ctx(5);
        let cfg = FrobeqConfig { depth: 9, ..Default::default() };
        let f = ore::from_constant_slope_factors(&c, &[qi(0), qi(1)]).unwrap();
        let rep = classify_log_growth(&f, &LogSeries::log_x(&c), &cfg).unwrap();
        assert_eq!(rep.classification, Classification::ExactlyLogGrowth(qi(1)));
        assert_eq!(rep.audit.as_ref().unwrap().j, 0);
        assert!(rep.consistent);
        // a constant seed stays constant for constant coefficients
        let sol = solve_fixed_point(&f, &PadicScalar::one(&c), 50, None).unwrap();
        assert!(sol.tail.is_exact());
        let rep = classify_log_growth(&f, &sol.y, &cfg).unwrap();
        assert_eq!(rep.classification, Classification::Bounded);
        assert_eq!(rep.audit.unwrap().j, 1);
    }

    #[test]
    fn slope_factor_product_is_not_contracting() {
        let c = ctx(5);
        let f = ore::from_slope_factors(&c, &[qi(0), qi(1)]).unwrap();
        assert!(matches!(
            solve_fixed_point(&f, &PadicScalar::one(&c), 10, None),
            Err(FrobeqError::NonContracting(_))
        ));
    }

    #[test]
    fn depth_feasibility() {
        assert_eq!(feasible_depth(4, &rat::q(1, 2), 5), Some(0));
        assert_eq!(feasible_depth(3, &rat::q(1, 2), 5), None);
        assert_eq!(feasible_depth(2 * 4 * 125, &rat::q(1, 2), 5), Some(3));
    }
    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn classification_respects_the_dichotomy(extra in proptest::collection::vec(0i64..3, 0..3), log in any::<bool>()) {
                let c = ctx(5);
                let mut slopes: Vec<Q> = extra.iter().map(|k| qi(*k)).collect();
                slopes.push(qi(log as i64));
                let f = crate::ore::from_constant_slope_factors(&c, &slopes).unwrap();
                let y = if log { LogSeries::log_x(&c) } else { LogSeries::from_series(LaurentSeries::one(&c)) };
                let cfg = FrobeqConfig { depth: 10, ..Default::default() };
                let rep = classify_log_growth(&f, &y, &cfg).unwrap();
                match rep.classification {
                    Classification::Bounded | Classification::Unclassified => {}
                    Classification::ExactlyLogGrowth(s) => prop_assert!(s > qi(0) && slopes.contains(&s)),
                }
            }

            #[test]
            fn verification_ignores_unit_monomials(s in 0i64..3, u in 1i64..200, k in 0usize..3, which in 0usize..3) {
                prop_assume!(u % 5 != 0);
                let c = ctx(5);
                let f = linear_factor(&c, &qi(s)).unwrap();
                let y = match which {
                    0 => LogSeries::log_x(&c),
                    1 => LogSeries::from_series(LaurentSeries::one(&c)),
                    _ => LogSeries::from_series(LaurentSeries::x_pow(&c, 1)),
                };
                let unit = TwistedPoly::monomial(LaurentSeries::constant(PadicScalar::from_int(&c, u)), k);
                let g = unit.ore_mul(&f).unwrap();
                prop_assert_eq!(verify_solution(&f, &y, 30), verify_solution(&g, &y, 30));
            }
        }
    }
}
