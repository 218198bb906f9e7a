//! Windowed Laurent series over [`PadicScalar`] and polynomials in `log x`.
//!
//! A [`LaurentSeries`] stores the coefficients of exponents in `[lo, hi]`
//! (missing entries are exact zeros) and describes what lies outside through a
//! [`Tail`] on each side.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::padics::{PadicContext, PadicError, PadicScalar, ScalarJson};
use crate::rat::{self, Q};

/// Largest exponent magnitude a series may reach.
pub const MAX_ORDER: i64 = 1 << 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("exponent window overflow beyond {MAX_ORDER}")]
    WindowOverflow,
    #[error("log norm undefined at radius 1 for positive log-degree")]
    LogNormAtOne,
    #[error("malformed series encoding: {0}")]
    Malformed(String),
}

/// What is known about coefficients beyond one edge of the window.
///
/// `Bound { floor, decay }` on the left means `v(a_n) >= floor + decay*(lo - n)`
/// for every `n < lo`; on the right it means `v(a_n) >= floor + decay*(n - hi)`
/// for every `n > hi`.
#[derive(Clone, Debug, PartialEq)]
pub enum Tail {
    Exact,
    Bound { floor: Q, decay: Q },
    Unknown,
}

impl Tail {
    pub fn floor(floor: Q) -> Self {
        Tail::Bound { floor, decay: Q::zero() }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Tail::Exact)
    }

    fn decay(&self) -> Option<&Q> {
        match self {
            Tail::Bound { decay, .. } => Some(decay),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussExponent {
    /// `min_n (v(a_n) + r n)`; `None` means `+inf` (no nonzero coefficient).
    pub value: Option<Q>,
    pub certified: bool,
    /// Smallest exponent attaining the minimum.
    pub argmin: Option<i64>,
}

#[derive(Clone)]
pub struct LaurentSeries {
    ctx: Arc<PadicContext>,
    lo: i64,
    hi: i64,
    coeffs: BTreeMap<i64, PadicScalar>,
    below: Tail,
    above: Tail,
}

impl std::fmt::Debug for LaurentSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LaurentSeries[{}, {}] below={:?} above={:?} {{", self.lo, self.hi, self.below, self.above)?;
        for (n, c) in &self.coeffs {
            write!(f, " {n}: {c};")?;
        }
        write!(f, " }}")
    }
}

fn check_order(n: i64) -> Result<i64, SeriesError> {
    if n.abs() > MAX_ORDER {
        Err(SeriesError::WindowOverflow)
    } else {
        Ok(n)
    }
}

impl LaurentSeries {
    /// General constructor; entries outside `[lo, hi]` are dropped and exact zeros are not stored.
    pub fn new(
        ctx: &Arc<PadicContext>,
        lo: i64,
        hi: i64,
        coeffs: impl IntoIterator<Item = (i64, PadicScalar)>,
        below: Tail,
        above: Tail,
    ) -> Self {
        for t in [&below, &above] {
            if let Tail::Bound { decay, .. } = t {
                assert!(!decay.is_negative(), "tail decay must be nonnegative");
            }
        }
        let coeffs = coeffs.into_iter().filter(|(n, c)| *n >= lo && *n <= hi && !c.is_exact_zero()).collect();
        LaurentSeries { ctx: ctx.clone(), lo, hi, coeffs, below, above }
    }

    pub fn zero(ctx: &Arc<PadicContext>) -> Self {
        Self::new(ctx, 0, -1, [], Tail::Exact, Tail::Exact)
    }

    pub fn constant(c: PadicScalar) -> Self {
        let ctx = c.context().clone();
        Self::new(&ctx, 0, 0, [(0, c)], Tail::Exact, Tail::Exact)
    }

    pub fn one(ctx: &Arc<PadicContext>) -> Self {
        Self::constant(PadicScalar::one(ctx))
    }

    pub fn monomial(c: PadicScalar, n: i64) -> Self {
        let ctx = c.context().clone();
        Self::new(&ctx, n, n, [(n, c)], Tail::Exact, Tail::Exact)
    }

    /// `x^n`.
    pub fn x_pow(ctx: &Arc<PadicContext>, n: i64) -> Self {
        Self::monomial(PadicScalar::one(ctx), n)
    }

    /// Laurent polynomial with exact tails on both sides.
    pub fn polynomial(ctx: &Arc<PadicContext>, terms: impl IntoIterator<Item = (i64, PadicScalar)>) -> Self {
        let mut map: BTreeMap<i64, PadicScalar> = BTreeMap::new();
        for (n, c) in terms {
            let e = map.entry(n).or_insert_with(|| PadicScalar::zero(ctx));
            *e = &*e + &c;
        }
        let lo = map.keys().next().copied().unwrap_or(0);
        let hi = map.keys().next_back().copied().unwrap_or(-1);
        Self::new(ctx, lo, hi, map, Tail::Exact, Tail::Exact)
    }

    /// Laurent polynomial with rational coefficients.
    pub fn from_rationals(ctx: &Arc<PadicContext>, terms: &[(i64, Q)]) -> Self {
        Self::polynomial(ctx, terms.iter().map(|(n, c)| (*n, PadicScalar::from_q(ctx, c))))
    }

    /// Power series `sum_{n<T} a_n x^n` with nothing known above `T - 1`.
    pub fn power_series(ctx: &Arc<PadicContext>, coeffs: Vec<PadicScalar>) -> Self {
        let hi = coeffs.len() as i64 - 1;
        Self::new(ctx, 0, hi, coeffs.into_iter().enumerate().map(|(n, c)| (n as i64, c)), Tail::Exact, Tail::Unknown)
    }

    pub fn context(&self) -> &Arc<PadicContext> {
        &self.ctx
    }
    pub fn lo(&self) -> i64 {
        self.lo
    }
    pub fn hi(&self) -> i64 {
        self.hi
    }
    pub fn below(&self) -> &Tail {
        &self.below
    }
    pub fn above(&self) -> &Tail {
        &self.above
    }
    /// Error order `O(x^T)` with `T = hi + 1`.
    pub fn trunc_order(&self) -> i64 {
        self.hi + 1
    }

    pub fn with_tails(mut self, below: Tail, above: Tail) -> Self {
        self.below = below;
        self.above = above;
        self
    }

    /// Declares a right-tail valuation floor.
    pub fn with_floor(mut self, floor: Q) -> Self {
        self.above = Tail::floor(floor);
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&i64, &PadicScalar)> {
        self.coeffs.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of `x^n` when it is determined: inside the window, or in an exact tail.
    pub fn coeff(&self, n: i64) -> Option<PadicScalar> {
        if (n < self.lo && !self.below.is_exact()) || (n > self.hi && !self.above.is_exact()) {
            return None;
        }
        Some(self.coeffs.get(&n).cloned().unwrap_or_else(|| PadicScalar::zero(&self.ctx)))
    }

    pub fn is_exact(&self) -> bool {
        self.below.is_exact() && self.above.is_exact()
    }

    /// True when every coefficient is provably zero.
    pub fn is_exact_zero(&self) -> bool {
        self.is_exact() && self.coeffs.is_empty()
    }

    /// True when no coefficient is certified nonzero.
    pub fn is_zero_at_precision(&self) -> bool {
        self.coeffs.values().all(|c| c.is_zero())
    }

    /// Smallest valuation among certified nonzero window coefficients.
    pub fn min_window_valuation(&self) -> Option<i64> {
        self.coeffs.values().filter_map(|c| c.valuation()).min()
    }

    /// Lower bound on every coefficient valuation, if one is known.
    pub fn valuation_floor(&self) -> Option<Q> {
        let mut m: Option<Q> = None;
        let mut upd = |x: Q| {
            m = Some(match m.take() {
                Some(y) if y < x => y,
                _ => x,
            })
        };
        for c in self.coeffs.values() {
            if let Some(v) = c.valuation_lower_bound() {
                upd(rat::qi(v));
            }
        }
        for t in [&self.below, &self.above] {
            match t {
                Tail::Exact => {}
                Tail::Bound { floor, .. } => upd(floor.clone()),
                Tail::Unknown => return None,
            }
        }
        Some(m.unwrap_or_else(|| rat::qi(i64::MAX / 4)))
    }

    fn same_ctx(&self, other: &Self) -> Result<(), SeriesError> {
        if self.ctx.same(&other.ctx) {
            Ok(())
        } else {
            Err(SeriesError::Padic(PadicError::ContextMismatch))
        }
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = c.neg();
        }
        out
    }

    /// Multiplies every coefficient by a scalar.
    pub fn scale(&self, c: &PadicScalar) -> Self {
        if c.is_exact_zero() {
            return Self::zero(&self.ctx);
        }
        let mut out = self.clone();
        for v in out.coeffs.values_mut() {
            *v = &*v * c;
        }
        let shift = c.valuation_lower_bound().map(rat::qi);
        for t in [&mut out.below, &mut out.above] {
            if let (Tail::Bound { floor, .. }, Some(s)) = (&mut *t, &shift) {
                *floor += s.clone();
            }
        }
        out.coeffs.retain(|_, v| !v.is_exact_zero());
        out
    }

    /// Multiplies by `x^k`.
    pub fn shift(&self, k: i64) -> Self {
        let coeffs = self.coeffs.iter().map(|(n, c)| (n + k, c.clone())).collect();
        LaurentSeries {
            ctx: self.ctx.clone(),
            lo: self.lo + k,
            hi: self.hi + k,
            coeffs,
            below: self.below.clone(),
            above: self.above.clone(),
        }
    }

    /// Keeps exponents `<= n`, turning the right tail into `Unknown` if anything was cut.
    pub fn truncate_above(&self, n: i64) -> Self {
        if n >= self.hi {
            return self.clone();
        }
        let mut out = self.clone();
        out.coeffs = self.coeffs.range(..=n).map(|(k, c)| (*k, c.clone())).collect();
        out.hi = n;
        out.above = Tail::Unknown;
        out
    }

    /// Caps every coefficient at absolute precision `k`.
    pub fn cap_absolute(&self, k: i64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.values_mut() {
            *c = c.cap_absolute(k);
        }
        out
    }

    /// Known-coefficient window of `self + other` and its tails.
    pub fn try_add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.same_ctx(other)?;
        let (lo, below) = combine_add_side(self, other, Side::Below);
        let (hi, above) = combine_add_side(self, other, Side::Above);
        let mut coeffs: BTreeMap<i64, PadicScalar> = BTreeMap::new();
        for s in [self, other] {
            if lo > hi {
                break;
            }
            for (n, c) in s.coeffs.range(lo..=hi) {
                match coeffs.get_mut(n) {
                    Some(e) => *e = &*e + c,
                    None => {
                        coeffs.insert(*n, c.clone());
                    }
                }
            }
        }
        Ok(Self::new(&self.ctx, lo, hi, coeffs, below, above))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.same_ctx(other)?;
        let ctx = &self.ctx;
        if self.is_exact_zero() || other.is_exact_zero() {
            return Ok(Self::zero(ctx));
        }
        let (a, b) = (self, other);
        // exponent window in which every contributing pair is known
        let mut lo = i64::MIN;
        let mut hi = i64::MAX;
        if a.below.is_exact() && b.below.is_exact() {
            lo = a.lo + b.lo;
        }
        for (x, y) in [(a, b), (b, a)] {
            if !x.below.is_exact() {
                lo = lo.max(if y.above.is_exact() { x.lo + y.hi } else { i64::MAX });
            }
            if !x.above.is_exact() {
                hi = hi.min(if y.below.is_exact() { x.hi + y.lo } else { i64::MIN });
            }
        }
        if a.above.is_exact() && b.above.is_exact() {
            hi = a.hi + b.hi;
        }
        let empty = lo == i64::MAX || hi == i64::MIN;
        if empty {
            lo = 0;
            hi = -1;
        }
        check_order(lo)?;
        check_order(hi)?;
        let floors = (a.valuation_floor(), b.valuation_floor());
        let tail = |side: Side| -> Tail {
            let exact = match side {
                Side::Below => a.below.is_exact() && b.below.is_exact(),
                Side::Above => a.above.is_exact() && b.above.is_exact(),
            };
            if exact {
                return Tail::Exact;
            }
            let (fa, fb) = match &floors {
                (Some(x), Some(y)) => (x.clone(), y.clone()),
                _ => return Tail::Unknown,
            };
            if empty {
                return Tail::Unknown;
            }
            let decays: Vec<&Q> = [a, b]
                .iter()
                .filter_map(|s| match side {
                    Side::Below => s.below.decay(),
                    Side::Above => s.above.decay(),
                })
                .collect();
            let d = decays.into_iter().min().cloned().unwrap_or_else(Q::zero);
            let gap = match side {
                Side::Below => lo - (a.lo + b.lo),
                Side::Above => (a.hi + b.hi) - hi,
            };
            Tail::Bound { floor: fa + fb - d.clone() * rat::qi(gap.max(0)), decay: d }
        };
        let below = tail(Side::Below);
        let above = tail(Side::Above);
        let mut coeffs: BTreeMap<i64, PadicScalar> = BTreeMap::new();
        if !empty {
            for (i, ci) in &a.coeffs {
                let jmin = lo.saturating_sub(*i);
                let jmax = hi.saturating_sub(*i);
                if jmin > jmax {
                    continue;
                }
                for (j, cj) in b.coeffs.range(jmin..=jmax) {
                    let prod = ci * cj;
                    if prod.is_exact_zero() {
                        continue;
                    }
                    match coeffs.get_mut(&(i + j)) {
                        Some(e) => *e = &*e + &prod,
                        None => {
                            coeffs.insert(i + j, prod);
                        }
                    }
                }
            }
        }
        Ok(Self::new(ctx, lo, hi, coeffs, below, above))
    }

    /// `d/dx`: coefficient `n` becomes `(n+1) a_{n+1}`.
    pub fn derivative(&self) -> Self {
        let ctx = &self.ctx;
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(n, _)| **n != 0)
            .map(|(n, c)| (n - 1, c * &PadicScalar::from_int(ctx, *n)));
        Self::new(ctx, self.lo - 1, self.hi - 1, coeffs.collect::<Vec<_>>(), self.below.clone(), self.above.clone())
    }

    /// Frobenius substitution `x -> x^q` combined with the coefficient Frobenius.
    pub fn frobenius_sub(&self) -> Result<Self, SeriesError> {
        let q = self.ctx.q_u64() as i64;
        let lo = self.lo.checked_mul(q).ok_or(SeriesError::WindowOverflow)?;
        let hi = self.hi.checked_mul(q).ok_or(SeriesError::WindowOverflow)?;
        if self.lo <= self.hi {
            check_order(lo)?;
            check_order(hi)?;
        }
        let coeffs: Vec<(i64, PadicScalar)> = self.coeffs.iter().map(|(n, c)| (n * q, c.frobenius())).collect();
        let qq = rat::qi(q);
        let scale_tail = |t: &Tail| match t {
            Tail::Bound { floor, decay } => Tail::Bound { floor: floor.clone(), decay: decay / &qq },
            other => other.clone(),
        };
        let (lo, hi) = if self.lo <= self.hi { (lo, hi) } else { (0, -1) };
        Ok(Self::new(&self.ctx, lo, hi, coeffs, scale_tail(&self.below), scale_tail(&self.above)))
    }

    /// Applies [`Self::frobenius_sub`] `k` times.
    pub fn frobenius_pow(&self, k: usize) -> Result<Self, SeriesError> {
        let mut out = self.clone();
        for _ in 0..k {
            out = out.frobenius_sub()?;
        }
        Ok(out)
    }

    /// `e(f, r) = min_n (v(a_n) + r n)`, so that `|f|_rho = p^{-e}` for `rho = p^{-r}`.
    pub fn gauss_exponent(&self, r: &Q) -> GaussExponent {
        let mut best: Option<(Q, i64)> = None;
        let mut bounds: Vec<Q> = Vec::new();
        for (n, c) in &self.coeffs {
            let w = rat::qi(*n) * r;
            match c.valuation() {
                Some(v) => {
                    let e = rat::qi(v) + w;
                    if best.as_ref().map_or(true, |(b, _)| e < *b) {
                        best = Some((e, *n));
                    }
                }
                None => {
                    if let Some(k) = c.valuation_lower_bound() {
                        bounds.push(rat::qi(k) + w);
                    }
                }
            }
        }
        let mut ok = true;
        match &self.below {
            Tail::Exact => {}
            Tail::Unknown => ok = false,
            Tail::Bound { floor, decay } => {
                if decay < r {
                    ok = false;
                } else {
                    bounds.push(floor + decay + r * rat::qi(self.lo - 1));
                }
            }
        }
        match &self.above {
            Tail::Exact => {}
            Tail::Unknown => ok = false,
            Tail::Bound { floor, decay } => bounds.push(floor + decay + r * rat::qi(self.hi + 1)),
        }
        match best {
            None => GaussExponent { value: None, certified: ok && bounds.is_empty(), argmin: None },
            Some((e, n)) => {
                let certified = ok && bounds.iter().all(|b| *b >= e);
                GaussExponent { value: Some(e), certified, argmin: Some(n) }
            }
        }
    }

    /// `-log_p |f|_1`.
    pub fn norm1_exponent(&self) -> GaussExponent {
        self.gauss_exponent(&Q::zero())
    }

    pub fn to_json(&self) -> SeriesJson {
        let qjson = |x: &Q| q_to_value(x);
        let (below_floor, below_decay) = match &self.below {
            Tail::Bound { floor, decay } => (Some(qjson(floor)), Some(qjson(decay))),
            _ => (None, None),
        };
        let (floor, above_decay) = match &self.above {
            Tail::Bound { floor, decay } => {
                (Some(qjson(floor)), if decay.is_zero() { None } else { Some(qjson(decay)) })
            }
            _ => (None, None),
        };
        SeriesJson {
            window: [self.lo, self.hi],
            exact_below: self.below.is_exact(),
            coeffs: self.coeffs.iter().map(|(n, c)| (*n, c.to_json())).collect(),
            floor,
            exact_above: Some(self.above.is_exact()),
            below_floor,
            below_decay,
            above_decay,
        }
    }

    pub fn from_json(ctx: &Arc<PadicContext>, js: &SeriesJson) -> Result<Self, SeriesError> {
        let [lo, hi] = js.window;
        let mut coeffs = Vec::with_capacity(js.coeffs.len());
        for (n, c) in &js.coeffs {
            if *n < lo || *n > hi {
                return Err(SeriesError::Malformed(format!("coefficient index {n} outside window")));
            }
            coeffs.push((*n, PadicScalar::from_json(ctx, c)?));
        }
        let parse = |v: &Option<Value>| -> Result<Option<Q>, SeriesError> {
            match v {
                None | Some(Value::Null) => Ok(None),
                Some(v) => q_from_value(v).map(Some),
            }
        };
        let below = if js.exact_below {
            Tail::Exact
        } else {
            match (parse(&js.below_floor)?, parse(&js.below_decay)?) {
                (Some(floor), decay) => Tail::Bound { floor, decay: decay.unwrap_or_else(Q::zero) },
                _ => Tail::Unknown,
            }
        };
        let above = if js.exact_above.unwrap_or(false) {
            Tail::Exact
        } else {
            match (parse(&js.floor)?, parse(&js.above_decay)?) {
                (Some(floor), decay) => Tail::Bound { floor, decay: decay.unwrap_or_else(Q::zero) },
                _ => Tail::Unknown,
            }
        };
        for t in [&below, &above] {
            if let Tail::Bound { decay, .. } = t {
                if decay.is_negative() {
                    return Err(SeriesError::Malformed("negative tail decay".into()));
                }
            }
        }
        Ok(Self::new(ctx, lo, hi, coeffs, below, above))
    }
}

#[derive(Clone, Copy)]
enum Side {
    Below,
    Above,
}

/// Edge and tail of `a + b` on one side.
fn combine_add_side(a: &LaurentSeries, b: &LaurentSeries, side: Side) -> (i64, Tail) {
    let tail_of = |s: &LaurentSeries| match side {
        Side::Below => s.below.clone(),
        Side::Above => s.above.clone(),
    };
    let edge_of = |s: &LaurentSeries| match side {
        Side::Below => s.lo,
        Side::Above => s.hi,
    };
    let (ta, tb) = (tail_of(a), tail_of(b));
    // orientation: distance measured outward from the edge
    let outward = |n: i64, edge: i64| match side {
        Side::Below => edge - n,
        Side::Above => n - edge,
    };
    let inner = |x: i64, y: i64| match side {
        Side::Below => x.max(y),
        Side::Above => x.min(y),
    };
    let outer = |x: i64, y: i64| match side {
        Side::Below => x.min(y),
        Side::Above => x.max(y),
    };
    if ta.is_exact() && tb.is_exact() {
        return (outer(edge_of(a), edge_of(b)), Tail::Exact);
    }
    let mut edge: Option<i64> = None;
    for (s, t) in [(a, &ta), (b, &tb)] {
        if !t.is_exact() {
            edge = Some(edge.map_or(edge_of(s), |e| inner(e, edge_of(s))));
        }
    }
    let edge = edge.unwrap();
    if matches!(ta, Tail::Unknown) || matches!(tb, Tail::Unknown) {
        return (edge, Tail::Unknown);
    }
    let d = [ta.decay(), tb.decay()].into_iter().flatten().min().cloned().unwrap_or_else(Q::zero);
    let mut floor: Option<Q> = None;
    let mut push = |x: Q| {
        floor = Some(match floor.take() {
            Some(f) if f < x => f,
            _ => x,
        })
    };
    for (s, t) in [(a, &ta), (b, &tb)] {
        let own = edge_of(s);
        if let Tail::Bound { floor: f, decay: ds } = t {
            // rebase the old tail to the new edge; edge moves inward by `k >= 0`
            let k = outward(own, edge).max(0);
            let _ = ds;
            push(f.clone() - d.clone() * rat::qi(k));
        }
        // coefficients of `s` that fall outside the new edge are absorbed into the tail
        let absorbed: Vec<(&i64, &PadicScalar)> = match side {
            Side::Below => s.coeffs.range(..edge).collect(),
            Side::Above => s.coeffs.range(edge + 1..).collect(),
        };
        for (n, c) in absorbed {
            if let Some(v) = c.valuation_lower_bound() {
                push(rat::qi(v) - d.clone() * rat::qi(outward(*n, edge)));
            }
        }
    }
    (edge, Tail::Bound { floor: floor.unwrap_or_else(Q::zero), decay: d })
}

fn q_to_value(x: &Q) -> Value {
    match (rat::is_integer(x), x.numer().to_i64()) {
        (true, Some(n)) => Value::from(n),
        _ => Value::from(rat::fmt_q(x)),
    }
}

fn q_from_value(v: &Value) -> Result<Q, SeriesError> {
    match v {
        Value::Number(n) => n.as_i64().map(rat::qi).ok_or_else(|| SeriesError::Malformed(format!("bad number {n}"))),
        Value::String(s) => rat::parse_q(s).ok_or_else(|| SeriesError::Malformed(format!("bad rational {s:?}"))),
        other => Err(SeriesError::Malformed(format!("expected rational, got {other}"))),
    }
}

/// Wire form of a [`LaurentSeries`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesJson {
    pub window: [i64; 2],
    pub exact_below: bool,
    pub coeffs: Vec<(i64, ScalarJson)>,
    #[serde(default)]
    pub floor: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_above: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub below_floor: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub below_decay: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub above_decay: Option<Value>,
}

macro_rules! series_binop {
    ($tr:ident, $m:ident, $inner:ident) => {
        impl std::ops::$tr<&LaurentSeries> for &LaurentSeries {
            type Output = LaurentSeries;
            fn $m(self, rhs: &LaurentSeries) -> LaurentSeries {
                self.$inner(rhs).expect("series operands from different contexts")
            }
        }
    };
}
series_binop!(Add, add, try_add);
series_binop!(Sub, sub, try_sub);
series_binop!(Mul, mul, try_mul);

/// `log_p(r ln p)`: the exponent contributed by one power of `log x` at radius `p^{-r}`.
pub fn log_term(p: u64, r: &Q) -> f64 {
    let lp = (p as f64).ln();
    (rat::to_f64(r) * lp).ln() / lp
}

/// An exponent of the form `rational + log_degree * log_p(r ln p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogExponent {
    pub rational: Q,
    pub log_degree: i64,
}

impl LogExponent {
    pub fn new(rational: Q, log_degree: i64) -> Self {
        LogExponent { rational, log_degree }
    }

    pub fn eval(&self, p: u64, r: &Q) -> f64 {
        let base = rat::to_f64(&self.rational);
        if self.log_degree == 0 {
            base
        } else {
            base + self.log_degree as f64 * log_term(p, r)
        }
    }

    pub fn plus(&self, other: &LogExponent) -> LogExponent {
        LogExponent { rational: &self.rational + &other.rational, log_degree: self.log_degree + other.log_degree }
    }
}

/// `-log_p |y|_rho` for a log-polynomial.
#[derive(Clone, Debug)]
pub struct LogNormExponent {
    /// Minimizing component, `None` for the zero element.
    pub exact: Option<LogExponent>,
    pub value: f64,
    /// Absolute error bound on `value`.
    pub error: f64,
    pub certified: bool,
}

/// `sum_i f_i (log x)^i`.
#[derive(Clone, Debug)]
pub struct LogSeries {
    ctx: Arc<PadicContext>,
    components: Vec<LaurentSeries>,
}

impl LogSeries {
    pub fn new(ctx: &Arc<PadicContext>, components: Vec<LaurentSeries>) -> Self {
        let mut s = LogSeries { ctx: ctx.clone(), components };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        while self.components.len() > 1 && self.components.last().unwrap().is_exact_zero() {
            self.components.pop();
        }
        if self.components.is_empty() {
            self.components.push(LaurentSeries::zero(&self.ctx));
        }
    }

    pub fn from_series(f: LaurentSeries) -> Self {
        let ctx = f.context().clone();
        Self::new(&ctx, vec![f])
    }

    /// `log x`.
    pub fn log_x(ctx: &Arc<PadicContext>) -> Self {
        Self::new(ctx, vec![LaurentSeries::zero(ctx), LaurentSeries::one(ctx)])
    }

    pub fn zero(ctx: &Arc<PadicContext>) -> Self {
        Self::new(ctx, vec![])
    }

    pub fn context(&self) -> &Arc<PadicContext> {
        &self.ctx
    }

    pub fn degree(&self) -> usize {
        self.components.len() - 1
    }

    pub fn components(&self) -> &[LaurentSeries] {
        &self.components
    }

    pub fn component(&self, i: usize) -> Option<&LaurentSeries> {
        self.components.get(i)
    }

    pub fn is_exact_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_exact_zero())
    }

    pub fn is_zero_at_precision(&self) -> bool {
        self.components.iter().all(|c| c.is_zero_at_precision())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, SeriesError> {
        let n = self.components.len().max(other.components.len());
        let zero = LaurentSeries::zero(&self.ctx);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let a = self.components.get(i).unwrap_or(&zero);
            let b = other.components.get(i).unwrap_or(&zero);
            out.push(a.try_add(b)?);
        }
        Ok(Self::new(&self.ctx, out))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.try_add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Self::new(&self.ctx, self.components.iter().map(|c| c.neg()).collect())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        let n = self.components.len() + other.components.len() - 1;
        let mut out: Vec<LaurentSeries> = vec![LaurentSeries::zero(&self.ctx); n];
        for (i, a) in self.components.iter().enumerate() {
            if a.is_exact_zero() {
                continue;
            }
            for (j, b) in other.components.iter().enumerate() {
                if b.is_exact_zero() {
                    continue;
                }
                out[i + j] = out[i + j].try_add(&a.try_mul(b)?)?;
            }
        }
        Ok(Self::new(&self.ctx, out))
    }

    /// Multiplies by a series (degree-zero factor).
    pub fn mul_series(&self, f: &LaurentSeries) -> Result<Self, SeriesError> {
        let comps = self.components.iter().map(|c| c.try_mul(f)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(&self.ctx, comps))
    }

    pub fn scale(&self, c: &PadicScalar) -> Self {
        Self::new(&self.ctx, self.components.iter().map(|f| f.scale(c)).collect())
    }

    /// `d/dx`, with `d(log x)/dx = 1/x`.
    pub fn derivative(&self) -> Result<Self, SeriesError> {
        let mut out: Vec<LaurentSeries> = self.components.iter().map(|f| f.derivative()).collect();
        for i in 1..self.components.len() {
            let extra = self.components[i].shift(-1).scale(&PadicScalar::from_int(&self.ctx, i as i64));
            out[i - 1] = out[i - 1].try_add(&extra)?;
        }
        Ok(Self::new(&self.ctx, out))
    }

    /// Frobenius with `sigma(x) = x^q`, hence `sigma(log x) = q log x`.
    pub fn frobenius_sub_log(&self) -> Result<Self, SeriesError> {
        let q = PadicScalar::from_bigint(&self.ctx, &self.ctx.q());
        let mut out = Vec::with_capacity(self.components.len());
        let mut qi = PadicScalar::one(&self.ctx);
        for f in &self.components {
            out.push(f.frobenius_sub()?.scale(&qi));
            qi = &qi * &q;
        }
        Ok(Self::new(&self.ctx, out))
    }

    pub fn frobenius_pow(&self, k: usize) -> Result<Self, SeriesError> {
        let mut out = self.clone();
        for _ in 0..k {
            out = out.frobenius_sub_log()?;
        }
        Ok(out)
    }

    /// `-log_p |y|_rho` with `|sum f_i (log x)^i|_rho = sup_i |f_i|_rho (log 1/rho)^{-i}`.
    pub fn log_norm_exponent(&self, r: &Q) -> Result<LogNormExponent, SeriesError> {
        if r.is_zero() && self.degree() > 0 {
            return Err(SeriesError::LogNormAtOne);
        }
        let p = self.ctx.p();
        let mut best: Option<(f64, LogExponent)> = None;
        let mut certified = true;
        let mut values = Vec::new();
        for (i, f) in self.components.iter().enumerate() {
            let g = f.gauss_exponent(r);
            certified &= g.certified;
            if let Some(e) = g.value {
                let le = LogExponent::new(e, i as i64);
                let v = le.eval(p, r);
                values.push(v);
                if best.as_ref().map_or(true, |(b, _)| v < *b) {
                    best = Some((v, le));
                }
            }
        }
        Ok(match best {
            None => LogNormExponent { exact: None, value: f64::INFINITY, error: 0.0, certified },
            Some((v, le)) => {
                let error = 1e-12 * (1.0 + v.abs());
                // two components closer than the float error cannot be ordered reliably
                let close = values.iter().filter(|w| (*w - v).abs() <= 2.0 * error).count() > 1;
                LogNormExponent { exact: Some(le), value: v, error, certified: certified && !close }
            }
        })
    }

    pub fn to_json(&self) -> LogSeriesJson {
        LogSeriesJson { components: self.components.iter().map(|c| c.to_json()).collect() }
    }

    pub fn from_json(ctx: &Arc<PadicContext>, js: &LogSeriesJson) -> Result<Self, SeriesError> {
        let comps = js.components.iter().map(|c| LaurentSeries::from_json(ctx, c)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(ctx, comps))
    }
}

/// Components listed by increasing power of `log x`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LogSeriesJson {
    pub components: Vec<SeriesJson>,
}
