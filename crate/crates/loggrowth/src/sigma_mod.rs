//! Frobenius modules: Kedlaya's annihilator construction on diagonal modules,
//! cyclicity and genericity tests, and randomized cyclic-vector search.
//!
//! Elements of the coefficient field are kept as fractions of Laurent polynomials,
//! so every step of the construction is exact up to p-adic precision.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ore::{self, OreError, TwistedPoly};
use crate::padics::{PadicContext, PadicScalar};
use crate::rat::{self, Q};
use crate::series::{LaurentSeries, SeriesError, SeriesJson};
use crate::valuations_np::NewtonPolygon;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SigmaError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Ore(#[from] OreError),
    #[error("expected {expected} coordinates, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("diagonal witness x_{{{0},{0}}} is zero at precision but not provably zero")]
    Indeterminate(usize),
    #[error("norm of c_{0} is not certified")]
    UncertifiedNorm(usize),
    #[error("coordinates must be Laurent polynomials")]
    NotPolynomial,
    #[error("no generic cyclic vector found in {0} attempts")]
    BudgetExhausted(usize),
    #[error("division by zero")]
    DivisionByZero,
}

/// `num / den` with Laurent polynomial numerator and denominator.
#[derive(Clone, Debug)]
pub struct Frac {
    pub num: LaurentSeries,
    pub den: LaurentSeries,
}

/// Lowest exponent and smallest valuation among the certified terms.
fn monomial_content(f: &LaurentSeries) -> Option<(i64, i64)> {
    let lo = f.terms().next().map(|(n, _)| *n)?;
    let v = f.min_window_valuation()?;
    Some((lo, v))
}

impl Frac {
    pub fn from_poly(num: LaurentSeries) -> Self {
        let den = LaurentSeries::one(num.context());
        Frac { num, den }
    }

    pub fn new(num: LaurentSeries, den: LaurentSeries) -> Result<Self, SigmaError> {
        if den.is_zero_at_precision() {
            return Err(SigmaError::DivisionByZero);
        }
        let mut f = Frac { num, den };
        f.normalize();
        Ok(f)
    }

    /// Clears a monomial denominator, otherwise removes the common monomial content.
    fn normalize(&mut self) {
        if self.den.num_terms() == 1 {
            let (n, c) = self.den.terms().next().map(|(n, c)| (*n, c.clone())).unwrap();
            if let Ok(inv) = c.inv() {
                self.num = self.num.shift(-n).scale(&inv);
                self.den = LaurentSeries::one(self.num.context());
                return;
            }
        }
        if let (Some((a, va)), Some((b, vb))) = (monomial_content(&self.num), monomial_content(&self.den)) {
            let k = a.min(b);
            let v = va.min(vb);
            let ctx = self.num.context().clone();
            let s = PadicScalar::p_power(&ctx, -v);
            self.num = self.num.shift(-k).scale(&s);
            self.den = self.den.shift(-k).scale(&s);
        }
    }

    pub fn is_zero_at_precision(&self) -> bool {
        self.num.is_zero_at_precision()
    }

    /// `-log_p |num/den|_1`.
    pub fn norm1_exponent(&self) -> Option<Q> {
        let a = self.num.norm1_exponent();
        let b = self.den.norm1_exponent();
        match (a.value, b.value) {
            (Some(x), Some(y)) if a.certified && b.certified => Some(x - y),
            _ => None,
        }
    }

    pub fn to_json(&self) -> FracJson {
        FracJson { num: self.num.to_json(), den: self.den.to_json() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FracJson {
    pub num: SeriesJson,
    pub den: SeriesJson,
}

/// Coefficient ring of a diagonal module.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BaseRing {
    Constants,
    Laurent,
}

/// `phi(e_i) = q^{s_i} e_i`.
#[derive(Clone, Debug)]
pub struct DiagonalSigmaModule {
    ctx: Arc<PadicContext>,
    slopes: Vec<Q>,
    exps: Vec<i64>,
    pub base: BaseRing,
}

impl DiagonalSigmaModule {
    pub fn new(ctx: &Arc<PadicContext>, slopes: Vec<Q>, base: BaseRing) -> Result<Self, SigmaError> {
        let exps = slopes.iter().map(|s| ore::q_power_exponent(ctx, s)).collect::<Result<Vec<_>, _>>()?;
        Ok(DiagonalSigmaModule { ctx: ctx.clone(), slopes, exps, base })
    }

    pub fn rank(&self) -> usize {
        self.slopes.len()
    }

    pub fn slopes(&self) -> &[Q] {
        &self.slopes
    }

    pub fn context(&self) -> &Arc<PadicContext> {
        &self.ctx
    }

    fn qs(&self, i: usize) -> PadicScalar {
        PadicScalar::p_power(&self.ctx, self.exps[i])
    }

    /// Coordinates of `phi(v)`.
    pub fn phi(&self, v: &[LaurentSeries]) -> Result<Vec<LaurentSeries>, SigmaError> {
        v.iter().enumerate().map(|(i, x)| Ok(x.frobenius_sub()?.scale(&self.qs(i)))).collect()
    }

    /// The same module as a matrix module.
    pub fn to_matrix_module(&self) -> MatrixSigmaModule {
        let n = self.rank();
        let a = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { LaurentSeries::constant(self.qs(i)) } else { LaurentSeries::zero(&self.ctx) })
                    .collect()
            })
            .collect();
        MatrixSigmaModule::new(&self.ctx, a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DiagonalStatus {
    Nonzero,
    ExactZero,
    ZeroAtPrecision,
}

#[derive(Clone, Debug)]
pub struct KedlayaTrace {
    pub inputs: Vec<LaurentSeries>,
    /// `x[l][i]`, the `e_i` coordinate of `v_{l+1}`.
    pub x: Vec<Vec<Frac>>,
    pub diagonal: Vec<DiagonalStatus>,
    pub b: Vec<Frac>,
    /// `c_0 .. c_{n-1}` of the expanded annihilator.
    pub c: Vec<Frac>,
    /// The expanded annihilator kills `v` at working precision.
    pub annihilates: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KedlayaTraceJson {
    pub inputs: Vec<SeriesJson>,
    pub x: Vec<Vec<FracJson>>,
    pub diagonal: Vec<DiagonalStatus>,
    pub b: Vec<FracJson>,
    pub c: Vec<FracJson>,
    pub annihilates: bool,
}

impl KedlayaTrace {
    pub fn to_json(&self) -> KedlayaTraceJson {
        KedlayaTraceJson {
            inputs: self.inputs.iter().map(|s| s.to_json()).collect(),
            x: self.x.iter().map(|row| row.iter().map(|f| f.to_json()).collect()).collect(),
            diagonal: self.diagonal.clone(),
            b: self.b.iter().map(|f| f.to_json()).collect(),
            c: self.c.iter().map(|f| f.to_json()).collect(),
            annihilates: self.annihilates,
        }
    }
}

fn diag_status(f: &LaurentSeries) -> DiagonalStatus {
    if f.is_exact_zero() {
        DiagonalStatus::ExactZero
    } else if f.is_zero_at_precision() {
        DiagonalStatus::ZeroAtPrecision
    } else {
        DiagonalStatus::Nonzero
    }
}

/// Divides a row of numerators and its denominator by their common monomial content.
fn strip_content(row: &mut [LaurentSeries], den: &mut LaurentSeries) {
    let mut k: Option<i64> = None;
    let mut v: Option<i64> = None;
    for f in row.iter().chain(std::iter::once(&*den)) {
        if let Some((a, va)) = monomial_content(f) {
            k = Some(k.map_or(a, |x| x.min(a)));
            v = Some(v.map_or(va, |x| x.min(va)));
        }
    }
    if let (Some(k), Some(v)) = (k, v) {
        let s = PadicScalar::p_power(den.context(), -v);
        for f in row.iter_mut() {
            *f = f.shift(-k).scale(&s);
        }
        *den = den.shift(-k).scale(&s);
    }
}

fn require_polynomials(v: &[LaurentSeries]) -> Result<(), SigmaError> {
    if v.iter().all(|f| f.is_exact()) {
        Ok(())
    } else {
        Err(SigmaError::NotPolynomial)
    }
}

/// Runs the construction `v_{l+1} = (phi - b_l) v_l` with
/// `b_l = q^{s_l} sigma(x_{l,l}) / x_{l,l}` (or `0` when `x_{l,l} = 0`).
pub fn kedlaya_annihilator(m: &DiagonalSigmaModule, v: &[LaurentSeries]) -> Result<KedlayaTrace, SigmaError> {
    kedlaya_run(m, v, None)
}

/// Same as [`kedlaya_annihilator`] for rational Laurent polynomials. Diagonal witnesses that
/// vanish at working precision are settled by an exact rational run of the recurrence.
pub fn kedlaya_annihilator_rational(
    m: &DiagonalSigmaModule,
    v: &[Vec<(i64, Q)>],
) -> Result<KedlayaTrace, SigmaError> {
    let padic: Vec<LaurentSeries> = v.iter().map(|t| LaurentSeries::from_rationals(&m.ctx, t)).collect();
    let trace = kedlaya_run(m, &padic, None)?;
    if !trace.diagonal.contains(&DiagonalStatus::ZeroAtPrecision) {
        return Ok(trace);
    }
    let zeros = exact::diagonal_zeros(m, v);
    kedlaya_run(m, &padic, Some(&zeros))
}

fn kedlaya_run(
    m: &DiagonalSigmaModule,
    v: &[LaurentSeries],
    exact_zeros: Option<&[bool]>,
) -> Result<KedlayaTrace, SigmaError> {
    let n = m.rank();
    if v.len() != n {
        return Err(SigmaError::RankMismatch { expected: n, got: v.len() });
    }
    require_polynomials(v)?;
    let ctx = &m.ctx;
    let zero = LaurentSeries::zero(ctx);
    // numerators over a common denominator
    let mut num: Vec<LaurentSeries> = v.to_vec();
    let mut den = LaurentSeries::one(ctx);
    let mut xs: Vec<Vec<Frac>> = Vec::with_capacity(n);
    let mut diagonal = Vec::with_capacity(n);
    let mut bs = Vec::with_capacity(n);
    for l in 0..n {
        let row: Vec<Frac> = num
            .iter()
            .map(|f| Frac { num: f.clone(), den: den.clone() })
            .map(|mut f| {
                f.normalize();
                f
            })
            .collect();
        xs.push(row);
        let d = num[l].clone();
        let mut status = diag_status(&d);
        if status == DiagonalStatus::ZeroAtPrecision && exact_zeros.is_some_and(|z| z[l]) {
            status = DiagonalStatus::ExactZero;
        }
        diagonal.push(status);
        let sden = den.frobenius_sub()?;
        let mut next: Vec<LaurentSeries> = vec![zero.clone(); n];
        if status == DiagonalStatus::Nonzero {
            let sd = d.frobenius_sub()?;
            let ql = m.qs(l);
            bs.push(Frac::new(&sd.scale(&ql) * &den, &sden * &d)?);
            let sd_ql = sd.scale(&ql);
            for i in l + 1..n {
                let left = &num[i].frobenius_sub()?.scale(&m.qs(i)) * &d;
                let right = &sd_ql * &num[i];
                next[i] = &left - &right;
            }
            den = &sden * &d;
        } else {
            bs.push(Frac::from_poly(zero.clone()));
            for i in l + 1..n {
                next[i] = num[i].frobenius_sub()?.scale(&m.qs(i));
            }
            den = sden;
        }
        strip_content(&mut next, &mut den);
        num = next;
    }
    let all_nonzero = diagonal.iter().all(|s| *s == DiagonalStatus::Nonzero);
    let (c, annihilates) = if all_nonzero {
        cramer_annihilator(&m.to_matrix_module(), v)?
    } else {
        expand_annihilator(m, &bs, v)?
    };
    Ok(KedlayaTrace { inputs: v.to_vec(), x: xs, diagonal, b: bs, c, annihilates })
}

mod exact {
    use std::collections::BTreeMap;

    use num_traits::{One, Zero};

    use super::DiagonalSigmaModule;
    use crate::rat::Q;

    type Poly = BTreeMap<i64, Q>;

    fn mul(a: &Poly, b: &Poly) -> Poly {
        let mut out = Poly::new();
        for (i, x) in a {
            for (j, y) in b {
                *out.entry(i + j).or_insert_with(Q::zero) += x * y;
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    fn sub(a: &Poly, b: &Poly) -> Poly {
        let mut out = a.clone();
        for (j, y) in b {
            *out.entry(*j).or_insert_with(Q::zero) -= y;
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    fn frob_scale(a: &Poly, q: i64, c: &Q) -> Poly {
        a.iter().map(|(n, x)| (n * q, x * c)).collect()
    }

    /// Which diagonal witnesses vanish, over the rationals.
    pub(super) fn diagonal_zeros(m: &DiagonalSigmaModule, v: &[Vec<(i64, Q)>]) -> Vec<bool> {
        let ctx = m.context();
        let q = ctx.q_u64() as i64;
        let p = Q::from_integer(ctx.p().into());
        let qs: Vec<Q> = m
            .exps
            .iter()
            .map(|e| {
                if *e >= 0 {
                    num_traits::pow(p.clone(), *e as usize)
                } else {
                    Q::one() / num_traits::pow(p.clone(), (-e) as usize)
                }
            })
            .collect();
        let n = v.len();
        let mut num: Vec<Poly> = v
            .iter()
            .map(|t| {
                let mut p = Poly::new();
                for (e, c) in t {
                    *p.entry(*e).or_insert_with(Q::zero) += c;
                }
                p.retain(|_, c| !c.is_zero());
                p
            })
            .collect();
        let mut zeros = Vec::with_capacity(n);
        for l in 0..n {
            let d = num[l].clone();
            zeros.push(d.is_empty());
            let mut next = vec![Poly::new(); n];
            for i in l + 1..n {
                let si = frob_scale(&num[i], q, &qs[i]);
                next[i] = if d.is_empty() {
                    si
                } else {
                    sub(&mul(&si, &d), &mul(&frob_scale(&d, q, &qs[l]), &num[i]))
                };
            }
            num = next;
        }
        zeros
    }
}

/// Monic annihilator `s^n + c_{n-1} s^{n-1} + ... + c_0` of a cyclic `v` by Cramer's rule,
/// with a check that it kills `v`.
fn cramer_annihilator(m: &MatrixSigmaModule, v: &[LaurentSeries]) -> Result<(Vec<Frac>, bool), SigmaError> {
    let (lead, coeffs) = fraction_free_annihilator(m, v)?;
    let annihilates = m.kills(&coeffs, &lead, v)?;
    let c = coeffs.into_iter().map(|ck| Frac::new(ck, lead.clone())).collect::<Result<Vec<_>, _>>()?;
    Ok((c, annihilates))
}

/// Expands `(s - b_n) ... (s - b_1)` with fraction coefficients.
fn expand_annihilator(
    m: &DiagonalSigmaModule,
    bs: &[Frac],
    v: &[LaurentSeries],
) -> Result<(Vec<Frac>, bool), SigmaError> {
    let ctx = &m.ctx;
    let n = m.rank();
    // w[j] coefficient of s^j
    let mut w: Vec<Frac> = vec![Frac::from_poly(LaurentSeries::one(ctx))];
    for b in bs {
        let mut next: Vec<Frac> = Vec::with_capacity(w.len() + 1);
        for j in 0..=w.len() {
            // s * w_{j-1} - b * w_j
            let shifted = if j >= 1 {
                let f = &w[j - 1];
                Some(Frac { num: f.num.frobenius_sub()?, den: f.den.frobenius_sub()? })
            } else {
                None
            };
            let prod = if j < w.len() && !b.num.is_exact_zero() {
                Some(Frac { num: (&b.num * &w[j].num).neg(), den: &b.den * &w[j].den })
            } else {
                None
            };
            let sum = match (shifted, prod) {
                (Some(a), Some(b)) => Frac::new(&(&a.num * &b.den) + &(&b.num * &a.den), &a.den * &b.den)?,
                (Some(a), None) => Frac::new(a.num, a.den)?,
                (None, Some(b)) => Frac::new(b.num, b.den)?,
                (None, None) => Frac::from_poly(LaurentSeries::zero(ctx)),
            };
            next.push(sum);
        }
        w = next;
    }
    // clear denominators to check annihilation
    let mut common = LaurentSeries::one(ctx);
    for f in &w {
        common = &common * &f.den;
    }
    let mut total: Vec<LaurentSeries> = vec![LaurentSeries::zero(ctx); n];
    let mut phik: Vec<LaurentSeries> = v.to_vec();
    for (k, f) in w.iter().enumerate() {
        if k > 0 {
            phik = m.phi(&phik)?;
        }
        let mut scale = f.num.clone();
        for (j, g) in w.iter().enumerate() {
            if j != k {
                scale = &scale * &g.den;
            }
        }
        for i in 0..n {
            total[i] = &total[i] + &(&scale * &phik[i]);
        }
    }
    let annihilates = total.iter().all(|t| t.is_zero_at_precision());
    w.pop();
    Ok((w, annihilates))
}

/// True when every diagonal witness is certified nonzero.
pub fn is_cyclic(trace: &KedlayaTrace) -> Result<bool, SigmaError> {
    for (l, s) in trace.diagonal.iter().enumerate() {
        match s {
            DiagonalStatus::Nonzero => {}
            DiagonalStatus::ExactZero => return Ok(false),
            DiagonalStatus::ZeroAtPrecision => return Err(SigmaError::Indeterminate(l + 1)),
        }
    }
    Ok(true)
}

/// Cyclic and `-log_q |c_i|_1 = s_1 + ... + s_{n-i}` for every `i`.
pub fn is_generic_cyclic(trace: &KedlayaTrace, slopes: &[Q], h: u32) -> Result<bool, SigmaError> {
    if !is_cyclic(trace)? {
        return Ok(false);
    }
    let n = slopes.len();
    let expected = ore::expected_norms(slopes);
    let hq = rat::qi(h as i64);
    for (i, c) in trace.c.iter().enumerate() {
        if c.num.is_exact_zero() {
            return Ok(false);
        }
        let e = c.norm1_exponent().ok_or(SigmaError::UncertifiedNorm(i))?;
        if e / &hq != expected[n - i] {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug)]
pub struct SearchSuccess {
    pub vector: Vec<LaurentSeries>,
    pub trace: KedlayaTrace,
    /// Index of the successful attempt; `0` is the seed vector.
    pub retry: usize,
}

#[derive(Clone, Debug)]
pub struct SearchFailure {
    pub attempts: usize,
    /// Per attempt: cyclic (if decided) and generic.
    pub outcomes: Vec<(Option<bool>, bool)>,
}

/// Random sparse perturbation of `1` with exponents in `[-3, 3]` and unit coefficients.
fn perturbation(p: i64, rng: &mut ChaCha8Rng, base: BaseRing) -> Vec<(i64, Q)> {
    let mut terms = vec![(0i64, rat::qi(1))];
    let k = rng.gen_range(1..=2);
    for _ in 0..k {
        let e = match base {
            BaseRing::Constants => 0,
            BaseRing::Laurent => rng.gen_range(-3..=3),
        };
        let mut u = rng.gen_range(1..p * p * p);
        if u % p == 0 {
            u += 1;
        }
        terms.push((e, rat::qi(u)));
    }
    terms
}

fn attempt_vector(p: i64, n: usize, base: BaseRing, seed: u64, retry: usize) -> Vec<Vec<(i64, Q)>> {
    if retry == 0 {
        return vec![vec![(0, rat::qi(1))]; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(retry as u64);
    (0..n).map(|_| perturbation(p, &mut rng, base)).collect()
}

/// Searches for a generic cyclic vector: first `e_1 + ... + e_n`, then seeded random
/// perturbations. Attempts run in parallel; the lowest successful index is returned.
pub fn find_generic_cyclic(m: &DiagonalSigmaModule, budget: usize, seed: u64) -> Result<SearchSuccess, SearchFailure> {
    let h = m.ctx.h();
    let run = |retry: usize| -> (Option<bool>, bool, Option<SearchSuccess>) {
        let v = attempt_vector(m.ctx.p() as i64, m.rank(), m.base, seed, retry);
        let trace = match kedlaya_annihilator_rational(m, &v) {
            Ok(t) => t,
            Err(_) => return (None, false, None),
        };
        let cyc = is_cyclic(&trace).ok();
        let generic = matches!(is_generic_cyclic(&trace, &m.slopes, h), Ok(true)) && trace.annihilates;
        let success = generic.then(|| SearchSuccess { vector: trace.inputs.clone(), trace, retry });
        (cyc, generic, success)
    };
    let mut outcomes = Vec::new();
    let chunk = rayon::current_num_threads().max(1);
    let mut start = 0;
    while start < budget {
        let end = (start + chunk).min(budget);
        let results: Vec<_> = (start..end).into_par_iter().map(run).collect();
        for (cyc, generic, success) in results {
            outcomes.push((cyc, generic));
            if let Some(s) = success {
                return Ok(s);
            }
        }
        start = end;
    }
    Err(SearchFailure { attempts: budget, outcomes })
}

/// `phi(v) = A sigma(v)`; column `j` of `A` holds the coordinates of `phi(e_j)`.
#[derive(Clone, Debug)]
pub struct MatrixSigmaModule {
    ctx: Arc<PadicContext>,
    a: Vec<Vec<LaurentSeries>>,
}

impl MatrixSigmaModule {
    pub fn new(ctx: &Arc<PadicContext>, a: Vec<Vec<LaurentSeries>>) -> Self {
        MatrixSigmaModule { ctx: ctx.clone(), a }
    }

    /// Module `R{s}/R{s} f` for a monic `f`, on the basis `1, s, ..., s^{n-1}`.
    pub fn companion(f: &TwistedPoly) -> Self {
        let ctx = f.context().clone();
        let n = f.degree();
        let mut a = vec![vec![LaurentSeries::zero(&ctx); n]; n];
        for k in 0..n.saturating_sub(1) {
            a[k + 1][k] = LaurentSeries::one(&ctx);
        }
        for i in 0..n {
            a[i][n - 1] = f.coeff(i).neg();
        }
        MatrixSigmaModule { ctx, a }
    }

    pub fn rank(&self) -> usize {
        self.a.len()
    }

    pub fn matrix(&self) -> &[Vec<LaurentSeries>] {
        &self.a
    }

    pub fn phi(&self, v: &[LaurentSeries]) -> Result<Vec<LaurentSeries>, SigmaError> {
        let sv: Vec<LaurentSeries> = v.iter().map(|x| x.frobenius_sub()).collect::<Result<_, _>>()?;
        Ok(self
            .a
            .iter()
            .map(|row| {
                row.iter().zip(&sv).fold(LaurentSeries::zero(&self.ctx), |acc, (aij, xj)| {
                    if aij.is_exact_zero() || xj.is_exact_zero() {
                        acc
                    } else {
                        &acc + &(aij * xj)
                    }
                })
            })
            .collect())
    }

    /// Checks `lead * phi^n(v) + sum_k coeffs[k] phi^k(v) = 0`.
    fn kills(&self, coeffs: &[LaurentSeries], lead: &LaurentSeries, v: &[LaurentSeries]) -> Result<bool, SigmaError> {
        let n = self.rank();
        let mut total = vec![LaurentSeries::zero(&self.ctx); n];
        let mut phik = v.to_vec();
        for k in 0..=n {
            if k > 0 {
                phik = self.phi(&phik)?;
            }
            let ck = if k == n { lead } else { &coeffs[k] };
            for i in 0..n {
                total[i] = &total[i] + &(ck * &phik[i]);
            }
        }
        Ok(total.iter().all(|t| t.is_zero_at_precision()))
    }
}

/// Determinant by permutation expansion (ranks here are small).
pub fn determinant(m: &[Vec<LaurentSeries>]) -> LaurentSeries {
    let n = m.len();
    let ctx = m[0][0].context().clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = LaurentSeries::zero(&ctx);
    let mut sign = 1i64;
    // Heap's algorithm; each swap flips the sign
    let mut c = vec![0usize; n];
    let mut term = |perm: &[usize], sign: i64| {
        let mut prod = LaurentSeries::one(&ctx);
        for (i, &j) in perm.iter().enumerate() {
            if m[i][j].is_exact_zero() {
                return;
            }
            prod = &prod * &m[i][j];
        }
        total = if sign > 0 { &total + &prod } else { &total - &prod };
    };
    term(&perm, sign);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            term(&perm, sign);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    total
}

/// `(det V, [-det V_k])` where `V = [v, phi v, ..., phi^{n-1} v]` and `V_k` has column `k`
/// replaced by `phi^n v`; these are the coefficients of `det(V)` times the monic annihilator.
pub fn fraction_free_annihilator(
    m: &MatrixSigmaModule,
    v: &[LaurentSeries],
) -> Result<(LaurentSeries, Vec<LaurentSeries>), SigmaError> {
    let n = m.rank();
    if v.len() != n {
        return Err(SigmaError::RankMismatch { expected: n, got: v.len() });
    }
    let mut cols: Vec<Vec<LaurentSeries>> = vec![v.to_vec()];
    for _ in 0..n {
        let next = m.phi(cols.last().unwrap())?;
        cols.push(next);
    }
    let build = |replace: Option<usize>| -> Vec<Vec<LaurentSeries>> {
        (0..n)
            .map(|i| (0..n).map(|k| if Some(k) == replace { cols[n][i].clone() } else { cols[k][i].clone() }).collect())
            .collect()
    };
    let lead = determinant(&build(None));
    let coeffs = (0..n).map(|k| determinant(&build(Some(k))).neg()).collect();
    Ok((lead, coeffs))
}

#[derive(Clone, Debug)]
pub struct GenericPolygon {
    /// Twisted polygon of the annihilator of the chosen vector.
    pub polygon: NewtonPolygon,
    /// Frobenius slopes of the module with multiplicities, increasing.
    pub slopes: Vec<(Q, Q)>,
    pub annihilator: TwistedPoly,
    pub vector: Vec<LaurentSeries>,
    pub retry: usize,
}

impl GenericPolygon {
    pub fn max_slope(&self) -> Option<Q> {
        self.slopes.last().map(|(s, _)| s.clone())
    }
}

/// Generic Newton polygon of a matrix module from a cyclic vector whose annihilator
/// satisfies the on-polygon condition; slopes are the negated hull slopes.
pub fn generic_np_from_matrix(m: &MatrixSigmaModule, budget: usize, seed: u64) -> Result<GenericPolygon, SigmaError> {
    let ctx = &m.ctx;
    let n = m.rank();
    for retry in 0..budget {
        let v: Vec<LaurentSeries> = if retry == 0 {
            vec![LaurentSeries::one(ctx); n]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(retry as u64);
            (0..n)
                .map(|_| LaurentSeries::from_rationals(ctx, &perturbation(ctx.p() as i64, &mut rng, BaseRing::Laurent)))
                .collect()
        };
        let (lead, mut coeffs) = fraction_free_annihilator(m, &v)?;
        if lead.is_zero_at_precision() {
            continue;
        }
        if coeffs.iter().any(|c| !c.is_exact_zero() && c.is_zero_at_precision()) {
            continue;
        }
        coeffs.push(lead);
        let f = TwistedPoly::new(ctx, coeffs);
        let star = match ore::check_condition_star(&f) {
            Ok(s) => s,
            Err(_) => continue,
        };
        if !star.satisfied {
            continue;
        }
        let slopes = ore::module_slopes(&star.polygon);
        return Ok(GenericPolygon { polygon: star.polygon, slopes, annihilator: f, vector: v, retry });
    }
    Err(SigmaError::BudgetExhausted(budget))
}

/// True when every entry of `v` is zero.
pub fn is_zero_vector(v: &[LaurentSeries]) -> bool {
    v.iter().all(|f| f.is_zero_at_precision())
}

#[allow(clippy::needless_range_loop)]
pub fn random_vector(
    ctx: &Arc<PadicContext>,
    rng: &mut ChaCha8Rng,
    n: usize,
    window: i64,
    max_terms: usize,
) -> Vec<LaurentSeries> {
    let p = ctx.p() as i64;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let k = rng.gen_range(1..=max_terms);
        let mut terms = Vec::with_capacity(k);
        for _ in 0..k {
            let e = rng.gen_range(-window..=window);
            let v = rng.gen_range(0..3i64);
            let mut u = rng.gen_range(1..p * p * p);
            if u % p == 0 {
                u += 1;
            }
            terms.push((e, PadicScalar::from_int(ctx, u).shift(v)));
        }
        out.push(LaurentSeries::polynomial(ctx, terms));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::qi;

    fn ctx() -> Arc<PadicContext> {
        PadicContext::new(3, 1, 30).unwrap()
    }

    fn consts(c: &Arc<PadicContext>, n: usize) -> Vec<LaurentSeries> {
        vec![LaurentSeries::one(c); n]
    }

    fn frac_is(f: &Frac, x: &LaurentSeries) -> bool {
        (&f.num - &(x * &f.den)).is_zero_at_precision()
    }

    #[test]
    fn rank_one() {
        let c = ctx();
        let m = DiagonalSigmaModule::new(&c, vec![qi(2)], BaseRing::Constants).unwrap();
        let t = kedlaya_annihilator(&m, &consts(&c, 1)).unwrap();
        let q2 = LaurentSeries::constant(PadicScalar::from_int(&c, 9));
        assert!(frac_is(&t.b[0], &q2));
        assert!(frac_is(&t.c[0], &q2.neg()));
        assert!(t.annihilates);
        assert!(is_generic_cyclic(&t, m.slopes(), 1).unwrap());
    }

    #[test]
    fn distinct_constant_slopes() {
        let c = ctx();
        let m = DiagonalSigmaModule::new(&c, vec![qi(0), qi(1)], BaseRing::Constants).unwrap();
        let t = kedlaya_annihilator(&m, &consts(&c, 2)).unwrap();
        let k = |n: i64| LaurentSeries::constant(PadicScalar::from_int(&c, n));
        assert!(frac_is(&t.b[0], &k(1)));
        assert!(frac_is(&t.b[1], &k(3)));
        assert!(frac_is(&t.c[0], &k(3)));
        assert!(frac_is(&t.c[1], &k(-4)));
        assert!(t.annihilates);
        assert!(is_cyclic(&t).unwrap());
        assert!(is_generic_cyclic(&t, m.slopes(), 1).unwrap());
        // upper-triangular support
        assert!(t.x[1][0].num.is_exact_zero());
    }

    #[test]
    fn repeated_constant_slopes_are_not_cyclic() {
        let c = ctx();
        let m = DiagonalSigmaModule::new(&c, vec![qi(1), qi(1)], BaseRing::Constants).unwrap();
        let ones = vec![vec![(0, qi(1))]; 2];
        let t = kedlaya_annihilator_rational(&m, &ones).unwrap();
        assert_eq!(t.diagonal[1], DiagonalStatus::ExactZero);
        assert!(t.b[1].num.is_exact_zero());
        assert!(!is_cyclic(&t).unwrap());
        assert!(t.annihilates);
        let e1 = vec![vec![(0, qi(1))], vec![]];
        let t = kedlaya_annihilator_rational(&m, &e1).unwrap();
        assert!(!is_cyclic(&t).unwrap());
        assert!(find_generic_cyclic(&m, 8, 1).is_err());
    }

    #[test]
    fn repeated_slopes_with_laurent_vector() {
        let c = ctx();
        let m = DiagonalSigmaModule::new(&c, vec![qi(1), qi(1)], BaseRing::Laurent).unwrap();
        let v = vec![LaurentSeries::one(&c), LaurentSeries::x_pow(&c, 1)];
        let t = kedlaya_annihilator(&m, &v).unwrap();
        assert!(is_cyclic(&t).unwrap());
        assert!(t.annihilates);
        assert!(is_generic_cyclic(&t, m.slopes(), 1).unwrap());
        let found = find_generic_cyclic(&m, 20, 7).unwrap();
        assert!(found.retry > 0);
    }

    #[test]
    fn generic_polygons_of_matrix_modules() {
        let c = ctx();
        let id = DiagonalSigmaModule::new(&c, vec![qi(0), qi(0)], BaseRing::Laurent).unwrap().to_matrix_module();
        let g = generic_np_from_matrix(&id, 20, 3).unwrap();
        assert_eq!(g.slopes, vec![(qi(0), qi(2))]);
        let d = DiagonalSigmaModule::new(&c, vec![qi(0), qi(1)], BaseRing::Constants).unwrap().to_matrix_module();
        let g = generic_np_from_matrix(&d, 20, 3).unwrap();
        assert_eq!(g.slopes, vec![(qi(0), qi(1)), (qi(1), qi(1))]);
        assert_eq!(g.max_slope(), Some(qi(1)));
    }

    #[test]
    fn class_of_one_in_model_module_is_generic() {
        let c = ctx();
        let f = ore::from_slope_factors(&c, &[qi(0), qi(1), qi(1)]).unwrap();
        let m = MatrixSigmaModule::companion(&f);
        let mut v = vec![LaurentSeries::zero(&c); 3];
        v[0] = LaurentSeries::one(&c);
        let (lead, mut coeffs) = fraction_free_annihilator(&m, &v).unwrap();
        coeffs.push(lead);
        let ann = TwistedPoly::new(&c, coeffs);
        assert!(ore::check_condition_star(&ann).unwrap().satisfied);
        let np = ore::newton_polygon_twisted(&ann).unwrap();
        assert_eq!(ore::module_slopes(&np), vec![(qi(0), qi(1)), (qi(1), qi(2))]);
    }

    #[test]
    fn determinant_small() {
        let c = ctx();
        let k = |n: i64| LaurentSeries::constant(PadicScalar::from_int(&c, n));
        let m = vec![vec![k(1), k(2), k(0)], vec![k(3), k(4), k(1)], vec![k(0), k(5), k(6)]];
        // 1*(24-5) - 2*(18-0) + 0 = -17
        assert!((&determinant(&m) - &k(-17)).is_zero_at_precision());
    }
    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_module() -> impl Strategy<Value = (u64, Vec<i64>, u64)> {
            (prop_oneof![Just(2u64), Just(3u64)], proptest::collection::vec(0i64..3, 1..=3), any::<u64>())
        }

        fn setup(p: u64, s: &[i64]) -> DiagonalSigmaModule {
            let c = PadicContext::new(p, 1, 30).unwrap();
            let mut slopes: Vec<Q> = s.iter().map(|k| qi(*k)).collect();
            slopes.sort();
            DiagonalSigmaModule::new(&c, slopes, BaseRing::Laurent).unwrap()
        }

        fn mat_mul(a: &[Vec<LaurentSeries>], b: &[Vec<LaurentSeries>]) -> Vec<Vec<LaurentSeries>> {
            let n = a.len();
            (0..n)
                .map(|i| (0..n).map(|j| (0..n).fold(LaurentSeries::zero(a[0][0].context()), |acc, k| &acc + &(&a[i][k] * &b[k][j]))).collect())
                .collect()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn annihilator_kills_v_with_triangular_support((p, s, seed) in arb_module()) {
                let m = setup(p, &s);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let v = random_vector(m.context(), &mut rng, m.rank(), 8, 2);
                let t = kedlaya_annihilator(&m, &v).unwrap();
                prop_assert!(t.annihilates);
                for (l, row) in t.x.iter().enumerate() {
                    for x in &row[..l.min(row.len())] {
                        prop_assert!(x.is_zero_at_precision());
                    }
                }
            }

            #[test]
            fn genericity_survives_small_perturbations((p, s, seed) in arb_module(), k in 12i64..16) {
                let m = setup(p, &s);
                let found = find_generic_cyclic(&m, 50, seed).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
                let delta = random_vector(m.context(), &mut rng, m.rank(), 3, 2);
                let pk = LaurentSeries::constant(PadicScalar::p_power(m.context(), k));
                let w: Vec<LaurentSeries> = found.vector.iter().zip(&delta).map(|(a, d)| a + &(&pk * d)).collect();
                let t = kedlaya_annihilator(&m, &w).unwrap();
                prop_assert!(is_generic_cyclic(&t, m.slopes(), 1).unwrap());
            }

            #[test]
            fn generic_slopes_ignore_unipotent_base_change((p, s, _seed) in arb_module(), u in proptest::collection::vec(-9i64..10, 3)) {
                let m = setup(p, &s);
                let c = m.context().clone();
                let n = m.rank();
                let k = |v: i64| if v == 0 { LaurentSeries::zero(&c) } else { LaurentSeries::constant(PadicScalar::from_int(&c, v)) };
                // U = I + N with N strictly upper triangular, U^{-1} = I - N + N^2
                let nil: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| if j > i { u[(i + j) % 3] } else { 0 }).collect()).collect();
                let n2: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| (0..n).map(|t| nil[i][t] * nil[t][j]).sum()).collect()).collect();
                let um: Vec<Vec<LaurentSeries>> = (0..n).map(|i| (0..n).map(|j| k((i == j) as i64 + nil[i][j])).collect()).collect();
                let uinv: Vec<Vec<LaurentSeries>> =
                    (0..n).map(|i| (0..n).map(|j| k((i == j) as i64 - nil[i][j] + n2[i][j])).collect()).collect();
                let base = m.to_matrix_module();
                let changed = MatrixSigmaModule::new(&c, mat_mul(&mat_mul(&uinv, base.matrix()), &um));
                let a = generic_np_from_matrix(&base, 30, 1).unwrap();
                let b = generic_np_from_matrix(&changed, 30, 1).unwrap();
                prop_assert_eq!(a.slopes, b.slopes);
            }
        }
    }
}
