//! Twisted polynomials `a_0 + a_1 s + ... + a_n s^n` over Laurent series with
//! `s * a = sigma(a) * s`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::padics::{PadicContext, PadicScalar};
use crate::rat::{self, Q};
use crate::series::{LaurentSeries, LogSeries, SeriesError, SeriesJson};
use crate::valuations_np::{lower_hull, NewtonPolygon};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OreError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("|a_{0}|_1 is not certified")]
    Uncertified(usize),
    #[error("q^{0} is not a rational number for q = p^{1}")]
    IrrationalPower(String, u32),
    #[error("twisted polynomial is zero")]
    Zero,
}

#[derive(Clone, Debug)]
pub struct TwistedPoly {
    ctx: Arc<PadicContext>,
    coeffs: Vec<LaurentSeries>,
}

/// `p`-exponent of `q^s`, i.e. `s h`, when it is an integer.
pub fn q_power_exponent(ctx: &PadicContext, s: &Q) -> Result<i64, OreError> {
    let e = s * rat::qi(ctx.h() as i64);
    if rat::is_integer(&e) {
        Ok(rat::floor_i64(&e))
    } else {
        Err(OreError::IrrationalPower(rat::fmt_q(s), ctx.h()))
    }
}

/// `q^s` as a scalar.
pub fn q_power(ctx: &Arc<PadicContext>, s: &Q) -> Result<PadicScalar, OreError> {
    Ok(PadicScalar::p_power(ctx, q_power_exponent(ctx, s)?))
}

impl TwistedPoly {
    pub fn new(ctx: &Arc<PadicContext>, coeffs: Vec<LaurentSeries>) -> Self {
        let mut t = TwistedPoly { ctx: ctx.clone(), coeffs };
        while t.coeffs.len() > 1 && t.coeffs.last().unwrap().is_exact_zero() {
            t.coeffs.pop();
        }
        if t.coeffs.is_empty() {
            t.coeffs.push(LaurentSeries::zero(ctx));
        }
        t
    }

    /// Twisted polynomial with constant coefficients.
    pub fn from_scalars(ctx: &Arc<PadicContext>, coeffs: &[PadicScalar]) -> Self {
        Self::new(ctx, coeffs.iter().map(|c| LaurentSeries::constant(c.clone())).collect())
    }

    pub fn from_rationals(ctx: &Arc<PadicContext>, coeffs: &[Q]) -> Self {
        Self::new(ctx, coeffs.iter().map(|c| LaurentSeries::constant(PadicScalar::from_q(ctx, c))).collect())
    }

    pub fn one(ctx: &Arc<PadicContext>) -> Self {
        Self::new(ctx, vec![LaurentSeries::one(ctx)])
    }

    /// `u * s^k`.
    pub fn monomial(u: LaurentSeries, k: usize) -> Self {
        let ctx = u.context().clone();
        let mut coeffs = vec![LaurentSeries::zero(&ctx); k];
        coeffs.push(u);
        Self::new(&ctx, coeffs)
    }

    pub fn context(&self) -> &Arc<PadicContext> {
        &self.ctx
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[LaurentSeries] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &LaurentSeries {
        &self.coeffs[i]
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, OreError> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let zero = LaurentSeries::zero(&self.ctx);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.coeffs.get(i).unwrap_or(&zero);
            let b = other.coeffs.get(i).unwrap_or(&zero);
            out.push(a.try_add(b)?);
        }
        Ok(Self::new(&self.ctx, out))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, OreError> {
        let neg = TwistedPoly::new(&self.ctx, other.coeffs.iter().map(|c| c.neg()).collect());
        self.try_add(&neg)
    }

    /// `(sum a_i s^i)(sum b_j s^j) = sum a_i sigma^i(b_j) s^{i+j}`.
    pub fn ore_mul(&self, other: &Self) -> Result<Self, OreError> {
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut out = vec![LaurentSeries::zero(&self.ctx); n];
        // sigma^i(b_j), built incrementally in i
        let mut twisted: Vec<LaurentSeries> = other.coeffs.clone();
        for (i, a) in self.coeffs.iter().enumerate() {
            if i > 0 {
                twisted = twisted.iter().map(|b| b.frobenius_sub()).collect::<Result<_, _>>()?;
            }
            if a.is_exact_zero() {
                continue;
            }
            for (j, b) in twisted.iter().enumerate() {
                if b.is_exact_zero() {
                    continue;
                }
                out[i + j] = out[i + j].try_add(&a.try_mul(b)?)?;
            }
        }
        Ok(Self::new(&self.ctx, out))
    }

    /// `sum_i a_i sigma^i(y)`.
    pub fn apply(&self, y: &LogSeries) -> Result<LogSeries, OreError> {
        let mut acc = LogSeries::zero(&self.ctx);
        let mut yi = y.clone();
        for (i, a) in self.coeffs.iter().enumerate() {
            if i > 0 {
                yi = yi.frobenius_sub_log()?;
            }
            if a.is_exact_zero() {
                continue;
            }
            acc = acc.try_add(&yi.mul_series(a)?)?;
        }
        Ok(acc)
    }

    /// `-log_q |a_i|_1` for every nonzero coefficient.
    pub fn norm_points(&self) -> Result<Vec<(usize, Q)>, OreError> {
        let h = rat::qi(self.ctx.h() as i64);
        let mut pts = Vec::new();
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_exact_zero() {
                continue;
            }
            let g = a.norm1_exponent();
            match (g.value, g.certified) {
                (Some(e), true) => pts.push((i, e / &h)),
                _ => return Err(OreError::Uncertified(i)),
            }
        }
        if pts.is_empty() {
            return Err(OreError::Zero);
        }
        Ok(pts)
    }

    pub fn to_json(&self) -> Vec<SeriesJson> {
        self.coeffs.iter().map(|c| c.to_json()).collect()
    }

    pub fn from_json(ctx: &Arc<PadicContext>, js: &[SeriesJson]) -> Result<Self, OreError> {
        let coeffs = js.iter().map(|c| LaurentSeries::from_json(ctx, c)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(ctx, coeffs))
    }
}

/// `(s - q^{s_1} x)(s - q^{s_2} x) ... (s - q^{s_n} x)` by repeated multiplication.
pub fn from_slope_factors(ctx: &Arc<PadicContext>, slopes: &[Q]) -> Result<TwistedPoly, OreError> {
    let mut acc = TwistedPoly::one(ctx);
    for s in slopes {
        let c = q_power(ctx, s)?;
        let factor = TwistedPoly::new(ctx, vec![LaurentSeries::monomial(c.neg(), 1), LaurentSeries::one(ctx)]);
        acc = acc.ore_mul(&factor)?;
    }
    Ok(acc)
}

/// `(s - q^{s_1}) ... (s - q^{s_n})`: the same slopes with constant coefficients.
pub fn from_constant_slope_factors(ctx: &Arc<PadicContext>, slopes: &[Q]) -> Result<TwistedPoly, OreError> {
    let mut acc = TwistedPoly::one(ctx);
    for s in slopes {
        let c = q_power(ctx, s)?;
        let factor = TwistedPoly::from_scalars(ctx, &[c.neg(), PadicScalar::one(ctx)]);
        acc = acc.ore_mul(&factor)?;
    }
    Ok(acc)
}

/// Closed form of the linear-factor product:
/// `a_{n-i} = (-1)^i sum_{j_1<...<j_i} q^{s_{j_1}+...+s_{j_i}} x^{sum_t q^{j_t - t}}`.
///
/// Moving the chosen `x` of factor `j_t` to the left passes the `j_t - t` unchosen
/// copies of `s` in front of it, which is where the exponent `q^{j_t - t}` comes from.
pub fn closed_form_coefficients(ctx: &Arc<PadicContext>, slopes: &[Q]) -> Result<Vec<LaurentSeries>, OreError> {
    let n = slopes.len();
    let exps: Vec<i64> = slopes.iter().map(|s| q_power_exponent(ctx, s)).collect::<Result<_, _>>()?;
    let q = ctx.q();
    let qpow = |k: usize| -> i64 {
        let v: BigInt = num_traits::pow(q.clone(), k);
        i64::try_from(v).expect("x-exponent overflow")
    };
    let mut terms: Vec<Vec<(i64, PadicScalar)>> = vec![Vec::new(); n + 1];
    for mask in 0u32..(1u32 << n) {
        let chosen: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let i = chosen.len();
        let mut xexp = 0i64;
        let mut pexp = 0i64;
        for (t, &j) in chosen.iter().enumerate() {
            xexp += qpow(j - t);
            pexp += exps[j];
        }
        let mut c = PadicScalar::p_power(ctx, pexp);
        if i % 2 == 1 {
            c = c.neg();
        }
        terms[n - i].push((xexp, c));
    }
    Ok(terms.into_iter().map(|t| LaurentSeries::polynomial(ctx, t)).collect())
}

/// Twisted Newton polygon: lower hull of `(i, -log_q |a_i|_1)`.
pub fn newton_polygon_twisted(f: &TwistedPoly) -> Result<NewtonPolygon, OreError> {
    let pts: Vec<(Q, Q)> = f.norm_points()?.into_iter().map(|(i, y)| (rat::qi(i as i64), y)).collect();
    Ok(NewtonPolygon::from_vertices(lower_hull(&pts)))
}

/// Hull slopes as drawn, with multiplicities.
pub fn slopes_of_f(np: &NewtonPolygon) -> Vec<(Q, Q)> {
    np.slopes.clone()
}

/// Negated hull slopes, increasing.
pub fn module_slopes(np: &NewtonPolygon) -> Vec<(Q, Q)> {
    let mut v: Vec<(Q, Q)> = np.slopes.iter().map(|(s, m)| (-s.clone(), m.clone())).collect();
    v.reverse();
    v
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarReport {
    pub polygon: NewtonPolygon,
    /// `(index, point lies on the polygon)` for every nonzero coefficient.
    pub on_polygon: Vec<(usize, bool)>,
    pub satisfied: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StarJson {
    pub polygon: crate::valuations_np::PolygonJson,
    pub on_polygon: Vec<(usize, bool)>,
    pub satisfied: bool,
}

impl StarReport {
    pub fn to_json(&self) -> StarJson {
        StarJson { polygon: self.polygon.to_json(), on_polygon: self.on_polygon.clone(), satisfied: self.satisfied }
    }
}

/// Checks that every point `(i, -log_q |a_i|_1)` lies on the twisted Newton polygon.
pub fn check_condition_star(f: &TwistedPoly) -> Result<StarReport, OreError> {
    let pts = f.norm_points()?;
    let polygon = NewtonPolygon::from_vertices(lower_hull(
        &pts.iter().map(|(i, y)| (rat::qi(*i as i64), y.clone())).collect::<Vec<_>>(),
    ));
    let on_polygon: Vec<(usize, bool)> =
        pts.iter().map(|(i, y)| (*i, polygon.eval(&rat::qi(*i as i64)).as_ref() == Some(y))).collect();
    let satisfied = on_polygon.iter().all(|(_, b)| *b);
    Ok(StarReport { polygon, on_polygon, satisfied })
}

/// `-log_q |a_{n-i}|_1` expected for the linear-factor product: `s_1 + ... + s_i`.
pub fn expected_norms(slopes: &[Q]) -> Vec<Q> {
    let mut sorted = slopes.to_vec();
    sorted.sort();
    let mut acc = Q::zero();
    let mut out = vec![acc.clone()];
    for s in sorted {
        acc += s;
        out.push(acc.clone());
    }
    out
}

/// True when `q^{s}` is representable for every slope.
pub fn slopes_representable(ctx: &PadicContext, slopes: &[Q]) -> bool {
    slopes.iter().all(|s| q_power_exponent(ctx, s).is_ok())
}
