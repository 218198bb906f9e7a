//! Differential modules with Frobenius structure over bounded power series: fundamental
//! solutions, log-growth of solutions, the special log-growth filtration, Frobenius slopes on
//! horizontal sections, and the comparison between the two filtrations.
//!
//! Conventions. `nabla(e_j) = sum_i G_ij e_i dx` (or `dx/x` for log modules) and
//! `phi(e_j) = sum_i F_ij e_i`. A solution functional `z` is stored as the row
//! `(z(e_0), ..., z(e_{n-1}))` and satisfies `z' = z G` (`x z' = z G` in the log case).
//! Horizontal sections are columns `X` with `X' = -G X`; the pairing `z X` is constant.
//!
//! Rank 2 example: `nabla(e_0) = 0`, `nabla(e_1) = e_0 dx/x` gives `G = [[0, 1], [0, 0]]`,
//! solution rows `(1, log x)` and `(0, 1)`, sections `e_0` and `-log x e_0 + e_1`.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ore;
use crate::padics::{PadicContext, PadicError, PadicScalar, ResidueField};
use crate::rat::{self, Q};
use crate::series::{LaurentSeries, LogSeries, SeriesError, Tail};
use crate::sigma_mod::{self, MatrixSigmaModule, SigmaError};
use crate::valuations_np::{lower_hull, NewtonPolygon};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NablaError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error(transparent)]
    Sigma(#[from] SigmaError),
    #[error("connection matrix must be square and nonempty")]
    Shape,
    #[error("residue matrix G(0) is not nilpotent")]
    NotNilpotent,
    #[error("entry G[{0}][{1}] is not a power series known to order {2}")]
    NotPowerSeries(usize, usize, usize),
    #[error("coefficient is unbounded")]
    Unbounded,
    #[error("leading coefficient vanishes at 0")]
    SingularPoint,
    #[error("need at least {need} known coefficients, have {have}")]
    InsufficientCoefficients { need: usize, have: usize },
    #[error("only {0} certified p-adic digits left, floor is {1}")]
    PrecisionExhausted(u32, u32),
    #[error("no Frobenius structure")]
    NoFrobenius,
    #[error("Frobenius matrix on horizontal sections is not constant (coefficient of valuation {0:?})")]
    NonConstantFrobenius(Option<i64>),
    #[error("residue degree {0} must equal the Frobenius power {1}")]
    DegreeMismatch(u32, u32),
    #[error("point lies in a singular residue disc")]
    SingularDisc,
}

#[derive(Clone, Debug)]
pub enum FrobeniusData {
    /// Frobenius matrix over the coefficient ring.
    Matrix(Vec<Vec<LaurentSeries>>),
    /// Frobenius on horizontal sections at the centre of the disc, with the highest generic
    /// slope supplied separately.
    Fibre { phi0: Vec<Vec<PadicScalar>>, lambda_max: Q },
}

#[derive(Clone, Debug)]
pub struct DifferentialModule {
    ctx: Arc<PadicContext>,
    pub g: Vec<Vec<LaurentSeries>>,
    pub log: bool,
    pub frobenius: Option<FrobeniusData>,
}

fn matrix_is_nilpotent(m: &[Vec<PadicScalar>]) -> bool {
    let n = m.len();
    let mut pw = m.to_vec();
    for _ in 1..n {
        pw = mat_mul(&pw, m);
    }
    pw.iter().flatten().all(|c| c.is_zero())
}

impl DifferentialModule {
    pub fn new(ctx: &Arc<PadicContext>, g: Vec<Vec<LaurentSeries>>, log: bool) -> Result<Self, NablaError> {
        let n = g.len();
        if n == 0 || g.iter().any(|r| r.len() != n) {
            return Err(NablaError::Shape);
        }
        let m = DifferentialModule { ctx: ctx.clone(), g, log, frobenius: None };
        if log && !m.is_strictly_upper() {
            let g0 = m.constant_term();
            if !matrix_is_nilpotent(&g0) {
                return Err(NablaError::NotNilpotent);
            }
        }
        Ok(m)
    }

    pub fn with_frobenius(mut self, f: FrobeniusData) -> Self {
        self.frobenius = Some(f);
        self
    }

    pub fn context(&self) -> &Arc<PadicContext> {
        &self.ctx
    }

    pub fn rank(&self) -> usize {
        self.g.len()
    }

    fn constant_term(&self) -> Vec<Vec<PadicScalar>> {
        self.g.iter().map(|r| r.iter().map(|e| e.coeff(0).unwrap_or_else(|| PadicScalar::zero(&self.ctx))).collect()).collect()
    }

    fn is_strictly_upper(&self) -> bool {
        let n = self.rank();
        (0..n).all(|i| (0..=i).all(|j| self.g[i][j].is_exact_zero()))
    }

    /// `nabla(e_i) = e_{i+1} dx` for `i < n-1` and `nabla(e_{n-1}) = -(a_0 e_0 + ... + a_{n-1} e_{n-1}) dx`,
    /// so that `z -> z(e_0)` identifies solutions with solutions of `y^(n) + ... + a_0 y = 0`.
    pub fn companion_from_ode(ctx: &Arc<PadicContext>, a: &[LaurentSeries]) -> Result<Self, NablaError> {
        let n = a.len();
        if n == 0 {
            return Err(NablaError::Shape);
        }
        let mut g = vec![vec![LaurentSeries::zero(ctx); n]; n];
        for i in 0..n - 1 {
            g[i + 1][i] = LaurentSeries::one(ctx);
        }
        for i in 0..n {
            g[i][n - 1] = a[i].neg();
        }
        Self::new(ctx, g, false)
    }

    /// `dF + G F = q x^{q-1} F sigma(G)` (log: `x dF + G F = q F sigma(G)`), checked below `order`.
    pub fn frobenius_compatible(&self, order: usize) -> Result<bool, NablaError> {
        let Some(FrobeniusData::Matrix(f)) = &self.frobenius else {
            return Err(NablaError::NoFrobenius);
        };
        let ctx = &self.ctx;
        let q = ctx.q_u64() as i64;
        let qs = PadicScalar::from_int(ctx, q);
        let sg: Vec<Vec<LaurentSeries>> =
            self.g.iter().map(|r| r.iter().map(|e| e.frobenius_sub()).collect::<Result<_, _>>()).collect::<Result<_, _>>()?;
        let fsg = series_mat_mul(f, &sg);
        let gf = series_mat_mul(&self.g, f);
        let n = self.rank();
        for i in 0..n {
            for j in 0..n {
                let df = if self.log { f[i][j].derivative().shift(1) } else { f[i][j].derivative() };
                let rhs = if self.log { fsg[i][j].scale(&qs) } else { fsg[i][j].scale(&qs).shift(q - 1) };
                let res = &(&df + &gf[i][j]) - &rhs;
                let bad = res.terms().any(|(k, c)| *k < order as i64 && !c.is_zero());
                if bad {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

pub(crate) fn mat_mul(a: &[Vec<PadicScalar>], b: &[Vec<PadicScalar>]) -> Vec<Vec<PadicScalar>> {
    let n = a.len();
    let m = b[0].len();
    let ctx = a[0][0].context().clone();
    let mut out = vec![vec![PadicScalar::zero(&ctx); m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            if a[i][k].is_exact_zero() {
                continue;
            }
            for j in 0..m {
                if b[k][j].is_exact_zero() {
                    continue;
                }
                out[i][j] = &out[i][j] + &(&a[i][k] * &b[k][j]);
            }
        }
    }
    out
}

fn mat_add_into(acc: &mut [Vec<PadicScalar>], b: &[Vec<PadicScalar>]) {
    for (r, s) in acc.iter_mut().zip(b) {
        for (x, y) in r.iter_mut().zip(s) {
            if !y.is_exact_zero() {
                *x = &*x + y;
            }
        }
    }
}

fn identity(ctx: &Arc<PadicContext>, n: usize) -> Vec<Vec<PadicScalar>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { PadicScalar::one(ctx) } else { PadicScalar::zero(ctx) }).collect()).collect()
}

fn zero_matrix(ctx: &Arc<PadicContext>, n: usize) -> Vec<Vec<PadicScalar>> {
    vec![vec![PadicScalar::zero(ctx); n]; n]
}

fn series_mat_mul(a: &[Vec<LaurentSeries>], b: &[Vec<LaurentSeries>]) -> Vec<Vec<LaurentSeries>> {
    let ctx = a[0][0].context().clone();
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![LaurentSeries::zero(&ctx); m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            if a[i][k].is_exact_zero() {
                continue;
            }
            for j in 0..m {
                if b[k][j].is_exact_zero() {
                    continue;
                }
                out[i][j] = &out[i][j] + &(&a[i][k] * &b[k][j]);
            }
        }
    }
    out
}

fn log_mat_mul(a: &[Vec<LogSeries>], b: &[Vec<LogSeries>]) -> Result<Vec<Vec<LogSeries>>, NablaError> {
    let ctx = a[0][0].context().clone();
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![LogSeries::zero(&ctx); m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            if a[i][k].is_exact_zero() {
                continue;
            }
            for j in 0..m {
                if b[k][j].is_exact_zero() {
                    continue;
                }
                out[i][j] = out[i][j].try_add(&a[i][k].try_mul(&b[k][j])?)?;
            }
        }
    }
    Ok(out)
}

/// Power-series part `H` and nilpotent exponent `N` of a row solution matrix `Z = exp(N log x) H`.
#[derive(Clone, Debug)]
pub struct Structure {
    pub n0: Vec<Vec<PadicScalar>>,
    /// `H_k` for `k < order`.
    pub h: Vec<Vec<Vec<PadicScalar>>>,
}

#[derive(Clone, Debug)]
pub struct SolutionBasis {
    /// One solution functional per row.
    pub rows: Vec<Vec<LogSeries>>,
    pub order: usize,
    /// Smallest relative precision among certified nonzero coefficients.
    pub effective_precision: u32,
    pub structure: Option<Structure>,
}

fn effective_precision(rows: &[Vec<LogSeries>]) -> u32 {
    rows.iter()
        .flatten()
        .flat_map(|y| y.components().iter())
        .flat_map(|c| c.terms().map(|(_, a)| a.clone()).collect::<Vec<_>>())
        .filter(|a| !a.is_zero())
        .map(|a| a.relative_precision())
        .min()
        .unwrap_or(u32::MAX)
}

/// Coefficient matrices `G_j` for `j < order`, as a sparse list.
fn power_series_matrices(m: &DifferentialModule, order: usize) -> Result<Vec<(usize, Vec<Vec<PadicScalar>>)>, NablaError> {
    let n = m.rank();
    let ctx = &m.ctx;
    let mut by_deg: std::collections::BTreeMap<usize, Vec<Vec<PadicScalar>>> = Default::default();
    for i in 0..n {
        for j in 0..n {
            let e = &m.g[i][j];
            if e.is_exact_zero() {
                continue;
            }
            let known = e.above().is_exact() || e.hi() >= order as i64 - 1;
            if !known || e.terms().any(|(k, c)| *k < 0 && !c.is_zero()) || (!e.below().is_exact() && e.lo() > 0) {
                return Err(NablaError::NotPowerSeries(i, j, order));
            }
            for (k, c) in e.terms() {
                if *k >= 0 && (*k as usize) < order {
                    by_deg.entry(*k as usize).or_insert_with(|| zero_matrix(ctx, n))[i][j] = c.clone();
                }
            }
        }
    }
    Ok(by_deg.into_iter().collect())
}

fn all_constant_exact(m: &DifferentialModule) -> bool {
    m.g.iter().flatten().all(|e| e.is_exact() && e.terms().all(|(k, _)| *k == 0))
}

fn series_from_coeffs(ctx: &Arc<PadicContext>, coeffs: Vec<PadicScalar>, exact: bool) -> LaurentSeries {
    let hi = coeffs.len() as i64 - 1;
    let above = if exact { Tail::Exact } else { Tail::Unknown };
    LaurentSeries::new(ctx, 0, hi, coeffs.into_iter().enumerate().map(|(k, c)| (k as i64, c)), Tail::Exact, above)
}

fn factorial_inv(ctx: &Arc<PadicContext>, m: usize) -> PadicScalar {
    let mut f = PadicScalar::one(ctx);
    for k in 2..=m as i64 {
        f = &f * &PadicScalar::from_int(ctx, k);
    }
    f.inv().expect("factorial is nonzero")
}

/// `z' = z G` from `Z(0) = I`, or `x z' = z G` via `Z = exp(G(0) log x) H`.
fn solve_power_series(m: &DifferentialModule, order: usize) -> Result<SolutionBasis, NablaError> {
    let ctx = &m.ctx;
    let n = m.rank();
    let gs = power_series_matrices(m, order)?;
    let exact = all_constant_exact(m);
    let g0 = gs.iter().find(|(k, _)| *k == 0).map(|(_, g)| g.clone()).unwrap_or_else(|| zero_matrix(ctx, n));
    let mut hk: Vec<Vec<Vec<PadicScalar>>> = vec![identity(ctx, n)];
    if !m.log {
        // (k+1) Z_{k+1} = sum_j Z_{k-j} G_j
        for k in 0..order.saturating_sub(1) {
            let mut acc = zero_matrix(ctx, n);
            for (j, gj) in &gs {
                if *j > k {
                    break;
                }
                mat_add_into(&mut acc, &mat_mul(&hk[k - j], gj));
            }
            let inv = PadicScalar::from_int(ctx, k as i64 + 1).inv()?;
            let next: Vec<Vec<PadicScalar>> = acc.iter().map(|r| r.iter().map(|c| c * &inv).collect()).collect();
            hk.push(next);
        }
    } else {
        // k H_k + [G0, H_k] = sum_{j>=1} H_{k-j} G_j, inverted with a finite Neumann series
        for k in 1..order {
            let mut rhs = zero_matrix(ctx, n);
            for (j, gj) in &gs {
                if *j == 0 || *j > k {
                    continue;
                }
                mat_add_into(&mut rhs, &mat_mul(&hk[k - j], gj));
            }
            let kinv = PadicScalar::from_int(ctx, k as i64).inv()?;
            let mut term: Vec<Vec<PadicScalar>> = rhs.iter().map(|r| r.iter().map(|c| c * &kinv).collect()).collect();
            let mut sol = term.clone();
            for _ in 0..2 * n {
                // term <- -ad(term) / k
                let a = mat_mul(&g0, &term);
                let b = mat_mul(&term, &g0);
                term = a.iter().zip(&b).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| &(y - x) * &kinv).collect()).collect();
                if term.iter().flatten().all(|c| c.is_zero()) {
                    break;
                }
                mat_add_into(&mut sol, &term);
            }
            hk.push(sol);
        }
    }
    let tail_exact = exact && hk.iter().skip(1).all(|mk| mk.iter().flatten().all(|c| c.is_exact_zero()));
    let h_series: Vec<Vec<LaurentSeries>> = (0..n)
        .map(|i| (0..n).map(|j| series_from_coeffs(ctx, hk.iter().map(|mk| mk[i][j].clone()).collect(), tail_exact)).collect())
        .collect();
    let n0 = if m.log { g0 } else { zero_matrix(ctx, n) };
    // exp(N log x) = sum_t N^t (log x)^t / t!
    let mut powers = vec![identity(ctx, n)];
    while powers.len() < n {
        let next = mat_mul(powers.last().unwrap(), &n0);
        if next.iter().flatten().all(|c| c.is_zero()) {
            break;
        }
        powers.push(next);
    }
    let mut rows = vec![vec![LogSeries::zero(ctx); n]; n];
    for i in 0..n {
        for l in 0..n {
            let mut comps = Vec::with_capacity(powers.len());
            for (t, pw) in powers.iter().enumerate() {
                let mut acc = LaurentSeries::zero(ctx);
                for j in 0..n {
                    if pw[i][j].is_zero() {
                        continue;
                    }
                    acc = &acc + &h_series[j][l].scale(&pw[i][j]);
                }
                comps.push(acc.scale(&factorial_inv(ctx, t)));
            }
            rows[i][l] = LogSeries::new(ctx, comps);
        }
    }
    let eff = effective_precision(&rows);
    Ok(SolutionBasis { rows, order, effective_precision: eff, structure: Some(Structure { n0, h: hk }) })
}

/// `int y dx` (or `int y dx/x`) with zero constant of integration; `int x^{-1} dx = log x`.
pub fn integrate(y: &LogSeries, log: bool) -> Result<LogSeries, NablaError> {
    let ctx = y.context().clone();
    let comps = y.components();
    let shift = if log { -1 } else { 0 };
    let mut lo = 0i64;
    let mut hi_exact = i64::MIN;
    let mut hi_known = i64::MAX;
    let mut below_exact = true;
    for c in comps {
        if c.is_exact_zero() {
            continue;
        }
        lo = lo.min(c.lo() + shift + 1);
        below_exact &= c.below().is_exact();
        if c.above().is_exact() {
            hi_exact = hi_exact.max(c.hi() + shift + 1);
        } else {
            hi_known = hi_known.min(c.hi() + shift + 1);
        }
    }
    let all_exact_above = hi_known == i64::MAX;
    let hi = if all_exact_above { hi_exact.max(0) } else { hi_known };
    let mut out: Vec<std::collections::BTreeMap<i64, PadicScalar>> = vec![Default::default(); comps.len() + 1];
    let mut add = |i: usize, n: i64, c: PadicScalar| {
        let e = out[i].entry(n).or_insert_with(|| PadicScalar::zero(&ctx));
        *e = &*e + &c;
    };
    for (i, c) in comps.iter().enumerate() {
        for (n0, a) in c.terms() {
            let n = n0 + shift;
            if n == -1 {
                // a x^{-1} (log x)^i -> a (log x)^{i+1} / (i+1)
                let inv = PadicScalar::from_int(&ctx, i as i64 + 1).inv()?;
                add(i + 1, 0, a * &inv);
                continue;
            }
            // x^{n+1} sum_t (-1)^t i!/(i-t)! (log x)^{i-t} / (n+1)^{t+1}
            let m1 = PadicScalar::from_int(&ctx, n + 1).inv()?;
            let mut coef = a * &m1;
            for t in 0..=i {
                add(i - t, n + 1, coef.clone());
                coef = &(&coef * &m1) * &PadicScalar::from_int(&ctx, -((i - t) as i64));
            }
        }
    }
    let below = if below_exact { Tail::Exact } else { Tail::Unknown };
    let above = if all_exact_above { Tail::Exact } else { Tail::Unknown };
    let series: Vec<LaurentSeries> = out
        .into_iter()
        .map(|m| LaurentSeries::new(&ctx, lo, hi, m, below.clone(), above.clone()))
        .collect();
    Ok(LogSeries::new(&ctx, series))
}

/// Strictly upper triangular `G` with arbitrary Laurent entries: successive integration.
fn solve_triangular(m: &DifferentialModule, order: usize) -> Result<SolutionBasis, NablaError> {
    let ctx = &m.ctx;
    let n = m.rank();
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let mut z = vec![LogSeries::zero(ctx); n];
        z[k] = LogSeries::from_series(LaurentSeries::one(ctx));
        for j in k + 1..n {
            let mut acc = LogSeries::zero(ctx);
            for i in k..j {
                if m.g[i][j].is_exact_zero() || z[i].is_exact_zero() {
                    continue;
                }
                acc = acc.try_add(&z[i].mul_series(&m.g[i][j])?)?;
            }
            z[j] = integrate(&acc, m.log)?;
        }
        rows.push(z);
    }
    let eff = effective_precision(&rows);
    Ok(SolutionBasis { rows, order, effective_precision: eff, structure: None })
}

/// Fundamental system of solution functionals to order `order`.
pub fn solve_fundamental(m: &DifferentialModule, order: usize) -> Result<SolutionBasis, NablaError> {
    if m.is_strictly_upper() {
        solve_triangular(m, order)
    } else {
        solve_power_series(m, order)
    }
}

/// Horizontal sections as columns: the row solutions of `-G^T`, transposed.
pub fn horizontal_sections(m: &DifferentialModule, order: usize) -> Result<SolutionBasis, NablaError> {
    let n = m.rank();
    let gt: Vec<Vec<LaurentSeries>> = (0..n).map(|i| (0..n).map(|j| m.g[j][i].neg()).collect()).collect();
    let dual = DifferentialModule { ctx: m.ctx.clone(), g: gt, log: m.log, frobenius: None };
    let mut sol = solve_power_series(&dual, order)?;
    let rows = &sol.rows;
    sol.rows = (0..n).map(|i| (0..n).map(|j| rows[j][i].clone()).collect()).collect();
    Ok(sol)
}

/// `z' - z G` (or `x z' - z G`) vanishes below `order - 1` for every row.
pub fn residual_vanishes(m: &DifferentialModule, sol: &SolutionBasis) -> Result<bool, NablaError> {
    let n = m.rank();
    let x = LaurentSeries::x_pow(&m.ctx, 1);
    let limit = sol.order as i64 - 1;
    for row in &sol.rows {
        for j in 0..n {
            let mut lhs = row[j].derivative()?;
            if m.log {
                lhs = lhs.mul_series(&x)?;
            }
            for i in 0..n {
                if m.g[i][j].is_exact_zero() || row[i].is_exact_zero() {
                    continue;
                }
                lhs = lhs.try_sub(&row[i].mul_series(&m.g[i][j])?)?;
            }
            for c in lhs.components() {
                if c.terms().any(|(k, a)| *k < limit && !a.is_zero()) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// `sum_i P_i(x) y^(i) = 0` with polynomial coefficients and `P_n(0) != 0`.
#[derive(Clone, Debug)]
pub struct PolyOde {
    ctx: Arc<PadicContext>,
    /// `P_0, ..., P_n` as `(exponent, coefficient)` lists.
    pub p: Vec<Vec<(i64, PadicScalar)>>,
}

impl PolyOde {
    pub fn new(ctx: &Arc<PadicContext>, p: Vec<Vec<(i64, PadicScalar)>>) -> Result<Self, NablaError> {
        if p.len() < 2 {
            return Err(NablaError::Shape);
        }
        if p.iter().flatten().any(|(k, _)| *k < 0) {
            return Err(NablaError::Shape);
        }
        let lead = p.last().unwrap().iter().find(|(k, _)| *k == 0).map(|(_, c)| c.clone());
        if lead.map_or(true, |c| c.is_zero()) {
            return Err(NablaError::SingularPoint);
        }
        Ok(PolyOde { ctx: ctx.clone(), p })
    }

    pub fn from_rationals(ctx: &Arc<PadicContext>, p: &[Vec<(i64, Q)>]) -> Result<Self, NablaError> {
        Self::new(ctx, p.iter().map(|t| t.iter().map(|(k, c)| (*k, PadicScalar::from_q(ctx, c))).collect()).collect())
    }

    pub fn order(&self) -> usize {
        self.p.len() - 1
    }

    pub fn context(&self) -> &Arc<PadicContext> {
        &self.ctx
    }

    /// Coefficients `c_0 .. c_{t-1}` of the solution with `c_j = init[j]` for `j < n`.
    ///
    /// Interval precision tracking through the recurrence loses one digit per factor of `p` in
    /// every denominator, which is far more than the true loss. Instead the recurrence runs twice
    /// with rounding to a fixed relative precision, and each coefficient keeps only the digits
    /// on which the two runs agree.
    pub fn solve_coefficients(&self, init: &[PadicScalar], t: usize) -> Result<Vec<PadicScalar>, NablaError> {
        let w = self.ctx.precision();
        let guard = (w / 4).max(4);
        let lo = self.run_recurrence(init, t, w - guard)?;
        let hi = self.run_recurrence(init, t, w)?;
        Ok(lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| {
                let d = b - a;
                match d.valuation().or_else(|| d.absolute_precision()) {
                    Some(k) => b.cap_absolute(k),
                    None => b.clone(),
                }
            })
            .collect())
    }

    fn run_recurrence(&self, init: &[PadicScalar], t: usize, w: u32) -> Result<Vec<PadicScalar>, NablaError> {
        let n = self.order();
        let ctx = &self.ctx;
        let mut c: Vec<PadicScalar> = vec![PadicScalar::zero(ctx); t.max(n)];
        for (j, v) in init.iter().enumerate().take(n) {
            c[j] = v.clone();
        }
        let lead = self.p[n].iter().find(|(k, _)| *k == 0).unwrap().1.clone();
        // falling factorial m (m-1) ... (m-i+1)
        let falling = |m: i64, i: usize| -> i64 { (0..i as i64).map(|s| m - s).product() };
        for big_n in 0..(t as i64 - n as i64).max(0) {
            let target = big_n + n as i64;
            let mut acc = PadicScalar::zero(ctx);
            for (i, pi) in self.p.iter().enumerate() {
                for (k, a) in pi {
                    let m = big_n - k + i as i64;
                    if m < 0 || m >= target {
                        continue;
                    }
                    let f = falling(m, i);
                    if f == 0 || c[m as usize].is_exact_zero() {
                        continue;
                    }
                    acc = &acc + &(&(a * &c[m as usize]) * &PadicScalar::from_int(ctx, f));
                }
            }
            let denom = &lead * &PadicScalar::from_int(ctx, falling(target, n));
            c[target as usize] = acc.div(&denom)?.neg().with_relative_precision(w);
        }
        c.truncate(t);
        Ok(c)
    }

    /// Rows `(y, y', ..., y^(n-1))` for the basis `c_j = delta_jk`, `j < n`.
    pub fn solve(&self, t: usize) -> Result<SolutionBasis, NablaError> {
        let n = self.order();
        let ctx = &self.ctx;
        let rows: Vec<Vec<LogSeries>> = (0..n)
            .into_par_iter()
            .map(|k| -> Result<Vec<LogSeries>, NablaError> {
                let init: Vec<PadicScalar> =
                    (0..n).map(|j| if j == k { PadicScalar::one(ctx) } else { PadicScalar::zero(ctx) }).collect();
                let c = self.solve_coefficients(&init, t + n - 1)?;
                let mut y = series_from_coeffs(ctx, c, false);
                let mut row = Vec::with_capacity(n);
                for _ in 0..n {
                    row.push(LogSeries::from_series(y.truncate_above(t as i64 - 1)));
                    y = y.derivative();
                }
                Ok(row)
            })
            .collect::<Result<_, _>>()?;
        let eff = effective_precision(&rows);
        Ok(SolutionBasis { rows, order: t, effective_precision: eff, structure: None })
    }

    /// `sum_i P_i y^(i)` vanishes below `t - n` for the given coefficients.
    pub fn residual_vanishes(&self, c: &[PadicScalar]) -> bool {
        let ctx = &self.ctx;
        let mut y = series_from_coeffs(ctx, c.to_vec(), false);
        let mut total = LaurentSeries::zero(ctx);
        for pi in &self.p {
            let poly = LaurentSeries::polynomial(ctx, pi.iter().cloned());
            total = &total + &(&poly * &y);
            y = y.derivative();
        }
        let limit = c.len() as i64 - self.order() as i64;
        let ok = total.terms().all(|(k, a)| *k >= limit || a.is_zero());
        ok
    }

    /// Companion module of `y^(n) + (P_{n-1}/P_n) y^(n-1) + ... = 0` with coefficients to order `t`.
    pub fn to_module(&self, t: usize) -> Result<DifferentialModule, NablaError> {
        let ctx = &self.ctx;
        let n = self.order();
        let pn = LaurentSeries::polynomial(ctx, self.p[n].iter().cloned());
        let inv = power_series_inverse(&pn, t)?;
        let a: Vec<LaurentSeries> =
            (0..n).map(|i| (&LaurentSeries::polynomial(ctx, self.p[i].iter().cloned()) * &inv).truncate_above(t as i64 - 1)).collect();
        DifferentialModule::companion_from_ode(ctx, &a)
    }
}

/// `1/f` to order `t` for a power series with invertible constant term.
pub fn power_series_inverse(f: &LaurentSeries, t: usize) -> Result<LaurentSeries, NablaError> {
    let ctx = f.context().clone();
    let f0 = f.coeff(0).filter(|c| !c.is_zero()).ok_or(NablaError::SingularPoint)?;
    let inv0 = f0.inv()?;
    let terms: Vec<(i64, PadicScalar)> = f.terms().filter(|(k, _)| **k > 0).map(|(k, c)| (*k, c.clone())).collect();
    let mut out = vec![inv0.clone()];
    for k in 1..t as i64 {
        let mut acc = PadicScalar::zero(&ctx);
        for (j, c) in &terms {
            if *j > k {
                break;
            }
            acc = &acc + &(c * &out[(k - j) as usize]);
        }
        out.push((&acc * &inv0).neg());
    }
    Ok(series_from_coeffs(&ctx, out, false))
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthEstimate {
    /// Raw slope estimate in log-growth units.
    pub raw: f64,
    #[serde(serialize_with = "ser_q")]
    pub snapped: Q,
    /// `(component, k, max_{n < p^k} -v(a_n))` blocks used by the estimator.
    pub blocks: Vec<(usize, u32, i64)>,
}

fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&rat::fmt_q(x))
}

fn ls_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Block maxima `M(k) = max_{n < p^k} -v(a_n)` of a power series, `k = 1..K` with `p^K <= order`.
fn block_maxima(c: &LaurentSeries, p: u64, order: usize) -> Result<Vec<(u32, i64)>, NablaError> {
    let mut big_k = 0u32;
    while (p as u128).pow(big_k + 1) <= order as u128 {
        big_k += 1;
    }
    let top = p.pow(big_k) as i64;
    if c.coeff(top - 1).is_none() {
        return Err(NablaError::InsufficientCoefficients { need: top as usize, have: (c.hi() + 1).max(0) as usize });
    }
    let mut blocks = Vec::new();
    let mut running: Option<i64> = None;
    let mut k = 1u32;
    let mut bound = p as i64;
    for (n, a) in c.terms() {
        if *n < 0 {
            continue;
        }
        while *n >= bound && k <= big_k {
            if let Some(m) = running {
                blocks.push((k, m));
            }
            k += 1;
            bound *= p as i64;
        }
        if k > big_k {
            break;
        }
        if let Some(v) = a.valuation() {
            running = Some(running.map_or(-v, |m| m.max(-v)));
        }
    }
    while k <= big_k {
        if let Some(m) = running {
            blocks.push((k, m));
        }
        k += 1;
    }
    Ok(blocks)
}

/// Deepest half of the blocks, at least two when available.
fn deep_half(blocks: &[(u32, i64)]) -> &[(u32, i64)] {
    let keep = ((blocks.len() + 1) / 2).max(2);
    &blocks[blocks.len().saturating_sub(keep.min(blocks.len()))..]
}

/// Open interval of slopes `l` for which `M(k) - l k` varies by less than one over `blocks`,
/// i.e. the slopes of staircases `floor(l k + c)` through the data.
fn staircase_interval(blocks: &[(u32, i64)]) -> Option<(Q, Q)> {
    let mut lo: Option<Q> = None;
    let mut hi: Option<Q> = None;
    for (i, (ki, mi)) in blocks.iter().enumerate() {
        for (kj, mj) in &blocks[i + 1..] {
            let dk = (*kj - *ki) as i64;
            let l = rat::q(mj - mi - 1, dk);
            let h = rat::q(mj - mi + 1, dk);
            if lo.as_ref().map_or(true, |x| l > *x) {
                lo = Some(l);
            }
            if hi.as_ref().map_or(true, |x| h < *x) {
                hi = Some(h);
            }
        }
    }
    match (lo, hi) {
        (Some(l), Some(h)) if l < h => Some((l, h)),
        _ => None,
    }
}

/// Rational of least denominator (at most `max_den`) in the open interval, closest to `target`.
fn simplest_in(lo: &Q, hi: &Q, target: f64, max_den: u64) -> Option<Q> {
    for d in 1..=max_den.max(1) as i64 {
        let first = rat::floor_i64(&(lo * rat::qi(d))) + 1;
        let mut best: Option<Q> = None;
        let mut n = first;
        loop {
            let x = rat::q(n, d);
            if x >= *hi {
                break;
            }
            let closer = best.as_ref().map_or(true, |b| (rat::to_f64(&x) - target).abs() < (rat::to_f64(b) - target).abs());
            if closer {
                best = Some(x);
            }
            n += 1;
        }
        if best.is_some() {
            return best;
        }
    }
    None
}

/// Raw growth (least-squares slope over the deepest half of the block maxima) and snapped
/// growth (simplest slope of a staircase through that data, else the nearest rational).
fn component_growth(c: &LaurentSeries, p: u64, order: usize, max_den: u64) -> Result<Option<(f64, Q, Vec<(u32, i64)>)>, NablaError> {
    let blocks = block_maxima(c, p, order)?;
    if blocks.is_empty() {
        return Ok(None);
    }
    let deep = deep_half(&blocks);
    let pts: Vec<(f64, f64)> = deep.iter().map(|(k, m)| (*k as f64, *m as f64)).collect();
    let raw = ls_slope(&pts).unwrap_or(0.0).max(0.0);
    let snapped = staircase_interval(deep)
        .and_then(|(lo, hi)| {
            let lo = if lo.is_negative() { rat::q(-1, 1) } else { lo };
            simplest_in(&lo, &hi, raw, max_den)
        })
        .map(|x| if x.is_negative() { Q::zero() } else { x })
        .unwrap_or_else(|| rat::snap(raw, max_den));
    Ok(Some((raw, snapped, blocks)))
}

/// Log-growth estimate of `y = sum_i f_i (log x)^i`: `max_i (growth(f_i) + i)`, with the
/// snapped value a rational of denominator at most `max_den`.
pub fn coefficient_growth_estimate(y: &LogSeries, order: usize, max_den: u64) -> Result<GrowthEstimate, NablaError> {
    const MIN_COEFFS: usize = 1000;
    if order < MIN_COEFFS {
        return Err(NablaError::InsufficientCoefficients { need: MIN_COEFFS, have: order });
    }
    let p = y.context().p();
    let mut raw: Option<f64> = None;
    let mut snapped: Option<Q> = None;
    let mut blocks = Vec::new();
    for (i, c) in y.components().iter().enumerate() {
        if c.is_zero_at_precision() {
            continue;
        }
        let Some((r, s, b)) = component_growth(c, p, order, max_den)? else { continue };
        blocks.extend(b.into_iter().map(|(k, m)| (i, k, m)));
        let r = r + i as f64;
        let s = s + rat::qi(i as i64);
        raw = Some(raw.map_or(r, |x: f64| x.max(r)));
        snapped = Some(match snapped {
            Some(x) if x >= s => x,
            _ => s,
        });
    }
    Ok(GrowthEstimate { raw: raw.unwrap_or(0.0), snapped: snapped.unwrap_or_else(Q::zero), blocks })
}

/// Growth of a solution row: the largest growth among its entries.
pub fn row_growth(row: &[LogSeries], order: usize, max_den: u64) -> Result<GrowthEstimate, NablaError> {
    let mut best: Option<GrowthEstimate> = None;
    for y in row {
        if y.is_zero_at_precision() {
            continue;
        }
        let g = coefficient_growth_estimate(y, order, max_den)?;
        if best.as_ref().map_or(true, |b| g.raw > b.raw) {
            best = Some(g);
        }
    }
    Ok(best.unwrap_or(GrowthEstimate { raw: 0.0, snapped: Q::zero(), blocks: Vec::new() }))
}

#[derive(Clone, Debug, Serialize)]
pub struct FiltrationConfig {
    pub max_den: u64,
    pub tau: f64,
    /// Refuse estimates below this many certified digits.
    pub digit_floor: u32,
}

impl Default for FiltrationConfig {
    fn default() -> Self {
        FiltrationConfig { max_den: 8, tau: 0.15, digit_floor: 10 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BreakDims {
    #[serde(serialize_with = "ser_q")]
    pub lambda: Q,
    /// `dim Sol_lambda` and `dim Sol_{lambda-}`.
    pub sol_dim: usize,
    pub sol_dim_below: usize,
    /// `dim V^lambda = n - dim Sol_lambda`.
    pub v_dim: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiltrationReport {
    pub rank: usize,
    /// `(break, multiplicity)`, increasing.
    #[serde(serialize_with = "ser_q_pairs")]
    pub breaks: Vec<(Q, usize)>,
    /// Raw estimate of each basis row after reduction.
    pub estimates: Vec<f64>,
    pub right_continuity: Vec<BreakDims>,
    pub ambiguous: bool,
    pub effective_precision: u32,
    pub comparison: Option<Comparison>,
}

fn ser_q_pairs<S: serde::Serializer>(xs: &[(Q, usize)], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for (q, m) in xs {
        seq.serialize_element(&(rat::fmt_q(q), m))?;
    }
    seq.end()
}

fn row_sub_scaled(r: &[LogSeries], b: &[LogSeries], c: &PadicScalar) -> Result<Vec<LogSeries>, NablaError> {
    r.iter().zip(b).map(|(x, y)| Ok(x.try_sub(&y.scale(c))?)).collect()
}

/// Position of the largest coefficient of `row` among `p^{K-1} <= n < p^K`.
fn pivot(row: &[LogSeries], p: u64, order: usize) -> Option<(usize, usize, i64)> {
    let mut big_k = 0u32;
    while (p as u128).pow(big_k + 1) <= order as u128 {
        big_k += 1;
    }
    let lo = (p as i64).pow(big_k.saturating_sub(1));
    let hi = (p as i64).pow(big_k);
    let mut best: Option<(i64, (usize, usize, i64))> = None;
    for (j, y) in row.iter().enumerate() {
        for (i, c) in y.components().iter().enumerate() {
            for (n, a) in c.terms() {
                if *n < lo || *n >= hi {
                    continue;
                }
                if let Some(v) = a.valuation() {
                    if best.as_ref().map_or(true, |(bv, _)| v < *bv) {
                        best = Some((v, (j, i, *n)));
                    }
                }
            }
        }
    }
    best.map(|(_, pos)| pos)
}

fn coeff_at(row: &[LogSeries], pos: (usize, usize, i64)) -> Option<PadicScalar> {
    row[pos.0].component(pos.1).and_then(|c| c.coeff(pos.2))
}

/// Breaks of the special log-growth filtration from a growth-reduced solution basis.
///
/// Rows are taken in order of increasing estimated growth; each row is reduced against the
/// earlier rows by cancelling their dominant deep coefficient, keeping a reduction only when
/// the snapped growth drops.
pub fn special_filtration(sol: &SolutionBasis, cfg: &FiltrationConfig) -> Result<FiltrationReport, NablaError> {
    if sol.effective_precision < cfg.digit_floor {
        return Err(NablaError::PrecisionExhausted(sol.effective_precision, cfg.digit_floor));
    }
    let n = sol.rows.len();
    let p = sol.rows[0][0].context().p();
    let est: Vec<GrowthEstimate> =
        sol.rows.par_iter().map(|r| row_growth(r, sol.order, cfg.max_den)).collect::<Result<_, _>>()?;
    let mut order_idx: Vec<usize> = (0..n).collect();
    order_idx.sort_by(|a, b| est[*a].raw.partial_cmp(&est[*b].raw).unwrap());
    let mut basis: Vec<(Vec<LogSeries>, GrowthEstimate)> = Vec::with_capacity(n);
    for idx in order_idx {
        let mut row = sol.rows[idx].clone();
        let mut g = est[idx].clone();
        for _ in 0..n {
            let mut improved = false;
            for (b, gb) in &basis {
                if g.snapped.is_zero() || gb.snapped > g.snapped {
                    continue;
                }
                let Some(pos) = pivot(b, p, sol.order) else { continue };
                let (Some(rc), Some(bc)) = (coeff_at(&row, pos), coeff_at(b, pos)) else { continue };
                if rc.is_zero() || bc.is_zero() {
                    continue;
                }
                let c = rc.div(&bc)?;
                let cand = row_sub_scaled(&row, b, &c)?;
                let gc = row_growth(&cand, sol.order, cfg.max_den)?;
                if gc.snapped < g.snapped {
                    row = cand;
                    g = gc;
                    improved = true;
                    break;
                }
            }
            if !improved {
                break;
            }
        }
        basis.push((row, g));
    }
    basis.sort_by(|a, b| a.1.raw.partial_cmp(&b.1.raw).unwrap());
    let snapped: Vec<Q> = basis.iter().map(|(_, g)| g.snapped.clone()).collect();
    let raws: Vec<f64> = basis.iter().map(|(_, g)| g.raw).collect();
    let mut ambiguous = false;
    for i in 0..n {
        for j in i + 1..n {
            if (raws[i] - raws[j]).abs() <= cfg.tau && snapped[i] != snapped[j] {
                ambiguous = true;
            }
        }
    }
    let mut breaks: Vec<(Q, usize)> = Vec::new();
    for s in &snapped {
        match breaks.last_mut() {
            Some((b, m)) if b == s => *m += 1,
            _ => breaks.push((s.clone(), 1)),
        }
    }
    breaks.sort_by(|a, b| a.0.cmp(&b.0));
    let right_continuity = breaks
        .iter()
        .map(|(lam, _)| {
            let sol_dim = snapped.iter().filter(|s| *s <= lam).count();
            let sol_dim_below = snapped.iter().filter(|s| *s < lam).count();
            BreakDims { lambda: lam.clone(), sol_dim, sol_dim_below, v_dim: n - sol_dim }
        })
        .collect();
    Ok(FiltrationReport {
        rank: n,
        breaks,
        estimates: raws,
        right_continuity,
        ambiguous,
        effective_precision: sol.effective_precision,
        comparison: None,
    })
}

/// `det(T - A) = T^n + c_{n-1} T^{n-1} + ... + c_0` by Faddeev-LeVerrier; returns `c_0 .. c_n`.
pub fn characteristic_polynomial(a: &[Vec<PadicScalar>]) -> Result<Vec<PadicScalar>, NablaError> {
    let n = a.len();
    let ctx = a[0][0].context().clone();
    let mut c = vec![PadicScalar::zero(&ctx); n + 1];
    c[n] = PadicScalar::one(&ctx);
    let mut mk = zero_matrix(&ctx, n);
    for k in 1..=n {
        let mut next = mat_mul(a, &mk);
        for i in 0..n {
            next[i][i] = &next[i][i] + &c[n - k + 1];
        }
        mk = next;
        let am = mat_mul(a, &mk);
        let mut tr = PadicScalar::zero(&ctx);
        for i in 0..n {
            tr = &tr + &am[i][i];
        }
        c[n - k] = tr.div(&PadicScalar::from_int(&ctx, k as i64))?.neg();
    }
    Ok(c)
}

/// Eigenvalue valuations of `A`, in units of `log_q`, with multiplicities.
pub fn slopes_of_constant_matrix(a: &[Vec<PadicScalar>], h: u32) -> Result<Vec<(Q, Q)>, NablaError> {
    let c = characteristic_polynomial(a)?;
    let pts: Vec<(Q, Q)> = c
        .iter()
        .enumerate()
        .filter_map(|(i, ci)| ci.valuation().map(|v| (rat::qi(i as i64), rat::q(v, h as i64))))
        .collect();
    let np = NewtonPolygon::from_vertices(lower_hull(&pts));
    let mut out = ore::module_slopes(&np);
    if c[0].is_zero() {
        // zero eigenvalues have infinite slope; they cannot occur for an isomorphism
        return Err(NablaError::NonConstantFrobenius(None));
    }
    out.sort();
    Ok(out)
}

/// Frobenius slopes on horizontal sections, from `Phi = X^{-1} F sigma(X)`.
pub fn special_frobenius_slopes(m: &DifferentialModule, order: usize) -> Result<Vec<(Q, Q)>, NablaError> {
    let h = m.ctx.h();
    match &m.frobenius {
        None => Err(NablaError::NoFrobenius),
        Some(FrobeniusData::Fibre { phi0, .. }) => slopes_of_constant_matrix(phi0, h),
        Some(FrobeniusData::Matrix(f)) => {
            let phi = frobenius_on_sections(m, f, order)?;
            slopes_of_constant_matrix(&phi, h)
        }
    }
}

/// Constant matrix of Frobenius on the horizontal basis, checked for constancy below `order`.
pub fn frobenius_on_sections(
    m: &DifferentialModule,
    f: &[Vec<LaurentSeries>],
    order: usize,
) -> Result<Vec<Vec<PadicScalar>>, NablaError> {
    let ctx = &m.ctx;
    let n = m.rank();
    let xs = horizontal_sections(m, order)?;
    let Some(st) = &xs.structure else {
        return Err(NablaError::NoFrobenius);
    };
    // sections X = (exp(N log x) H)^T = H^T exp(N^T log x)
    let ht: Vec<Vec<LaurentSeries>> = (0..n)
        .map(|i| (0..n).map(|j| series_from_coeffs(ctx, st.h.iter().map(|mk| mk[j][i].clone()).collect(), false)).collect())
        .collect();
    let hinv = matrix_series_inverse(&ht, order)?;
    let nt: Vec<Vec<PadicScalar>> = (0..n).map(|i| (0..n).map(|j| st.n0[j][i].clone()).collect()).collect();
    let q = PadicScalar::from_bigint(ctx, &ctx.q());
    let exp_log = |scale: &PadicScalar| -> Vec<Vec<LogSeries>> {
        // exp(scale N^T log x)
        let mut out = vec![vec![Vec::<LaurentSeries>::new(); n]; n];
        let mut pw = identity(ctx, n);
        let mut sc = PadicScalar::one(ctx);
        for t in 0..n {
            let fi = factorial_inv(ctx, t);
            for i in 0..n {
                for j in 0..n {
                    out[i][j].push(LaurentSeries::constant(&(&pw[i][j] * &sc) * &fi));
                }
            }
            pw = mat_mul(&pw, &nt);
            sc = &sc * scale;
        }
        out.into_iter().map(|r| r.into_iter().map(|c| LogSeries::new(ctx, c)).collect()).collect()
    };
    let to_log = |a: &[Vec<LaurentSeries>]| -> Vec<Vec<LogSeries>> {
        a.iter().map(|r| r.iter().map(|e| LogSeries::from_series(e.clone())).collect()).collect()
    };
    let sht: Vec<Vec<LaurentSeries>> =
        ht.iter().map(|r| r.iter().map(|e| e.frobenius_sub()).collect::<Result<_, _>>()).collect::<Result<_, _>>()?;
    let left = log_mat_mul(&exp_log(&PadicScalar::from_int(ctx, -1)), &to_log(&hinv))?;
    let mid = log_mat_mul(&left, &to_log(f))?;
    let right = log_mat_mul(&to_log(&sht), &exp_log(&q))?;
    let phi = log_mat_mul(&mid, &right)?;
    let limit = order as i64 - 1;
    let mut out = zero_matrix(ctx, n);
    for i in 0..n {
        for j in 0..n {
            for (t, c) in phi[i][j].components().iter().enumerate() {
                for (k, a) in c.terms() {
                    if *k >= limit {
                        continue;
                    }
                    if t == 0 && *k == 0 {
                        out[i][j] = a.clone();
                    } else if !a.is_zero() {
                        return Err(NablaError::NonConstantFrobenius(a.valuation()));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of a power-series matrix with `A(0) = I`, to order `t`.
fn matrix_series_inverse(a: &[Vec<LaurentSeries>], t: usize) -> Result<Vec<Vec<LaurentSeries>>, NablaError> {
    let n = a.len();
    let ctx = a[0][0].context().clone();
    let coeff = |k: usize| -> Vec<Vec<PadicScalar>> {
        a.iter().map(|r| r.iter().map(|e| e.coeff(k as i64).unwrap_or_else(|| PadicScalar::zero(&ctx))).collect()).collect()
    };
    let ak: Vec<Vec<Vec<PadicScalar>>> = (0..t).map(coeff).collect();
    let unipotent = ak[0].iter().enumerate().all(|(i, r)| {
        r.iter().enumerate().all(|(j, c)| if i == j { (c - &PadicScalar::one(&ctx)).is_zero() } else { c.is_zero() })
    });
    if !unipotent {
        return Err(NablaError::SingularPoint);
    }
    let mut b: Vec<Vec<Vec<PadicScalar>>> = vec![identity(&ctx, n)];
    for k in 1..t {
        let mut acc = zero_matrix(&ctx, n);
        for j in 1..=k {
            if ak[j].iter().flatten().all(|c| c.is_exact_zero()) {
                continue;
            }
            mat_add_into(&mut acc, &mat_mul(&ak[j], &b[k - j]));
        }
        b.push(acc.iter().map(|r| r.iter().map(|c| c.neg()).collect()).collect());
    }
    Ok((0..n).map(|i| (0..n).map(|j| series_from_coeffs(&ctx, b.iter().map(|m| m[i][j].clone()).collect(), false)).collect()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ComparisonStatus {
    Equal,
    Contained,
    Violation,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRow {
    #[serde(serialize_with = "ser_q")]
    pub lambda: Q,
    /// `dim V^lambda`.
    pub lhs: usize,
    /// `dim (S_{lambda - lambda_max} V(M^dual))^perp`.
    pub rhs: usize,
    pub status: ComparisonStatus,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    #[serde(serialize_with = "ser_q")]
    pub lambda_max: Q,
    #[serde(serialize_with = "ser_q_pairs_q")]
    pub special_slopes: Vec<(Q, Q)>,
    pub rows: Vec<ComparisonRow>,
    pub containment_holds: bool,
}

fn ser_q_pairs_q<S: serde::Serializer>(xs: &[(Q, Q)], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for (a, b) in xs {
        seq.serialize_element(&(rat::fmt_q(a), rat::fmt_q(b)))?;
    }
    seq.end()
}

/// Highest generic Frobenius slope.
pub fn lambda_max(m: &DifferentialModule, budget: usize, seed: u64) -> Result<Q, NablaError> {
    match &m.frobenius {
        None => Err(NablaError::NoFrobenius),
        Some(FrobeniusData::Fibre { lambda_max, .. }) => Ok(lambda_max.clone()),
        Some(FrobeniusData::Matrix(f)) => {
            let sm = MatrixSigmaModule::new(&m.ctx, f.clone());
            let g = sigma_mod::generic_np_from_matrix(&sm, budget, seed)?;
            Ok(g.max_slope().unwrap_or_else(Q::zero))
        }
    }
}

/// Compares `dim V^lambda` with the orthogonal of the shifted Frobenius slope filtration at
/// every break of either side.
pub fn compare_filtrations(
    report: &FiltrationReport,
    special: &[(Q, Q)],
    lambda_max: &Q,
) -> Comparison {
    let n = report.rank;
    let snapped_sol: Vec<Q> = report.breaks.iter().flat_map(|(b, m)| std::iter::repeat(b.clone()).take(*m)).collect();
    let specials: Vec<Q> = special
        .iter()
        .flat_map(|(s, m)| std::iter::repeat(s.clone()).take(rat::floor_i64(m).max(0) as usize))
        .collect();
    let mut lambdas: Vec<Q> = report.breaks.iter().map(|(b, _)| b.clone()).collect();
    for s in &specials {
        let l = lambda_max - s;
        if !l.is_negative() {
            lambdas.push(l);
        }
    }
    lambdas.sort();
    lambdas.dedup();
    let rows: Vec<ComparisonRow> = lambdas
        .into_iter()
        .map(|lam| {
            let lhs = n - snapped_sol.iter().filter(|s| **s <= lam).count();
            let rhs = n - specials.iter().filter(|s| **s >= lambda_max - &lam).count();
            let status = if lhs == rhs {
                ComparisonStatus::Equal
            } else if lhs < rhs {
                ComparisonStatus::Contained
            } else {
                ComparisonStatus::Violation
            };
            ComparisonRow { lambda: lam, lhs, rhs, status }
        })
        .collect();
    let containment_holds = rows.iter().all(|r| r.status != ComparisonStatus::Violation);
    Comparison { lambda_max: lambda_max.clone(), special_slopes: special.to_vec(), rows, containment_holds }
}

/// Hypergeometric equation `x(1-x) y'' + (1-2x) y' - y/4 = 0` recentered at `a`.
pub mod hypergeometric {
    use super::*;

    /// Recentered at `x = a + t`: `(a(1-a) + (1-2a) t - t^2) y'' + ((1-2a) - 2t) y' - y/4 = 0`.
    pub fn recentered(ctx: &Arc<PadicContext>, a: &PadicScalar) -> Result<PolyOde, NablaError> {
        let one = PadicScalar::one(ctx);
        let two = PadicScalar::from_int(ctx, 2);
        let one_m_a = &one - a;
        let one_m_2a = &one - &(&two * a);
        let aa = a * &one_m_a;
        if aa.is_zero() {
            return Err(NablaError::SingularDisc);
        }
        let p2 = vec![(0, aa), (1, one_m_2a.clone()), (2, one.neg())];
        let p1 = vec![(0, one_m_2a), (1, two.neg())];
        let p0 = vec![(0, PadicScalar::from_q(ctx, &rat::q(-1, 4)))];
        PolyOde::new(ctx, vec![p0, p1, p2])
    }

    /// `sum_{i <= (p-1)/2} binom((p-1)/2, i)^2 l^i` in the residue field.
    pub fn hasse_invariant(field: &ResidueField, p: u64, l: &[u64]) -> Vec<u64> {
        let m = (p - 1) / 2;
        let mut acc = field.from_int(0);
        let mut binom: u64 = 1;
        for i in 0..=m {
            let b = (binom % p) as i64;
            let term = field.mul(&field.from_int(b * b), &field.pow(l, i));
            acc = field.add(&acc, &term);
            binom = binom * (m - i) / (i + 1);
        }
        acc
    }

    /// `#E(F)` for the Legendre curve `y^2 = x (x - 1) (x - l)` including the point at infinity.
    pub fn legendre_point_count(field: &ResidueField, l: &[u64]) -> i64 {
        let one = field.from_int(1);
        let mut count = 1i64;
        for k in 0..field.size() {
            let x = field.element(k);
            let f = field.mul(&field.mul(&x, &field.sub(&x, &one)), &field.sub(&x, l));
            count += 1 + field.legendre(&f);
        }
        count
    }

    /// Trace of Frobenius `a = |F| + 1 - #E(F)`.
    pub fn frobenius_trace(field: &ResidueField, l: &[u64]) -> i64 {
        field.size() as i64 + 1 - legendre_point_count(field, l)
    }

    /// Frobenius on horizontal sections at the Teichmuller point: companion of `T^2 - a T + |F|`.
    /// The generic fibre is ordinary, so the highest generic slope is 1.
    pub fn fibre_frobenius(ctx: &Arc<PadicContext>, l: &[u64]) -> Result<FrobeniusData, NablaError> {
        if ctx.degree() != ctx.h() {
            return Err(NablaError::DegreeMismatch(ctx.degree(), ctx.h()));
        }
        let field = ResidueField::from_context(ctx);
        let a = frobenius_trace(&field, l);
        let size = field.size() as i64;
        let phi0 = vec![
            vec![PadicScalar::zero(ctx), PadicScalar::from_int(ctx, -size)],
            vec![PadicScalar::one(ctx), PadicScalar::from_int(ctx, a)],
        ];
        Ok(FrobeniusData::Fibre { phi0, lambda_max: Q::one() })
    }

    #[derive(Clone, Debug)]
    pub struct Disc {
        pub residue: Vec<u64>,
        pub ordinary: bool,
        pub trace: i64,
        pub ode: PolyOde,
        pub frobenius: FrobeniusData,
    }

    /// Equation and Frobenius data on the residue disc of `l` (not 0 or 1).
    pub fn disc(ctx: &Arc<PadicContext>, l: &[u64]) -> Result<Disc, NablaError> {
        let field = ResidueField::from_context(ctx);
        let one = field.from_int(1);
        if field.is_zero(l) || field.is_zero(&field.sub(l, &one)) {
            return Err(NablaError::SingularDisc);
        }
        let ordinary = !field.is_zero(&hasse_invariant(&field, ctx.p(), l));
        let a = PadicScalar::teichmuller(ctx, l);
        let ode = recentered(ctx, &a)?;
        let frobenius = fibre_frobenius(ctx, l)?;
        let trace = frobenius_trace(&field, l);
        Ok(Disc { residue: l.to_vec(), ordinary, trace, ode, frobenius })
    }

    /// Residues (other than 0, 1) whose Hasse invariant vanishes or not.
    pub fn residues(field: &ResidueField, p: u64, supersingular: bool) -> Vec<Vec<u64>> {
        (0..field.size())
            .map(|k| field.element(k))
            .filter(|l| !field.is_zero(l) && !field.is_zero(&field.sub(l, &field.from_int(1))))
            .filter(|l| field.is_zero(&hasse_invariant(field, p, l)) == supersingular)
            .collect()
    }
}
