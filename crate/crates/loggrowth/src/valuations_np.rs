//! Partial valuations, weighted valuations and Newton polygons of Laurent series.
//!
//! Partial valuations are taken on coefficients: `v_n(f) = min{m : v(a_m) <= n}`.
//! With this choice `min_n (r v_n(f) + n)` is the Gauss exponent of `f` at radius `p^{-r}`.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rat::{self, Q};
use crate::series::{LaurentSeries, Tail};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NpError {
    #[error("partial valuation v_{0} is not determined by the known coefficients")]
    Uncertified(i64),
    #[error("zero element has no Newton polygon")]
    ZeroElement,
    #[error("dominant term as the radius tends to 1 is not certified")]
    UncertifiedDominance,
}

/// Vertices of a lower convex hull together with slopes and multiplicities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonPolygon {
    pub vertices: Vec<(Q, Q)>,
    /// `(slope, multiplicity)` in increasing slope order.
    pub slopes: Vec<(Q, Q)>,
}

impl NewtonPolygon {
    pub fn empty() -> Self {
        NewtonPolygon { vertices: vec![], slopes: vec![] }
    }

    pub fn is_empty(&self) -> bool {
        self.slopes.is_empty()
    }

    /// Builds the polygon from its vertex chain; multiplicities are horizontal extents.
    pub fn from_vertices(vertices: Vec<(Q, Q)>) -> Self {
        let slopes = merge_slopes(
            vertices.windows(2).map(|w| ((&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0), &w[1].0 - &w[0].0)).collect(),
        );
        NewtonPolygon { vertices, slopes }
    }

    /// Value of the polygon at `x`, if `x` lies over it.
    pub fn eval(&self, x: &Q) -> Option<Q> {
        if self.vertices.is_empty() {
            return None;
        }
        if self.vertices.len() == 1 {
            return (self.vertices[0].0 == *x).then(|| self.vertices[0].1.clone());
        }
        for w in self.vertices.windows(2) {
            let ((x0, y0), (x1, y1)) = (&w[0], &w[1]);
            if x >= x0 && x <= x1 {
                return Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0));
            }
        }
        None
    }

    pub fn to_json(&self) -> PolygonJson {
        PolygonJson {
            vertices: self.vertices.iter().map(|(x, y)| [rat::fmt_q(x), rat::fmt_q(y)]).collect(),
            slopes: self.slopes.iter().map(|(s, m)| [rat::fmt_q(s), rat::fmt_q(m)]).collect(),
        }
    }
}

/// Rationals rendered as strings `"a"` or `"a/b"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolygonJson {
    pub vertices: Vec<[String; 2]>,
    pub slopes: Vec<[String; 2]>,
}

fn merge_slopes(raw: Vec<(Q, Q)>) -> Vec<(Q, Q)> {
    let mut out: Vec<(Q, Q)> = Vec::new();
    for (s, m) in raw {
        match out.last_mut() {
            Some((ls, lm)) if *ls == s => *lm += m,
            _ => out.push((s, m)),
        }
    }
    out
}

fn cross(o: &(Q, Q), a: &(Q, Q), b: &(Q, Q)) -> Q {
    (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
}

/// Lower convex hull, left to right. Points on a common vertical keep the lowest;
/// collinear interior points are dropped.
pub fn lower_hull(points: &[(Q, Q)]) -> Vec<(Q, Q)> {
    let mut pts: Vec<(Q, Q)> = points.to_vec();
    pts.sort();
    pts.dedup_by(|b, a| a.0 == b.0);
    let mut hull: Vec<(Q, Q)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 && !cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p).is_positive() {
            hull.pop();
        }
        hull.push(p);
    }
    hull
}

/// `v_n(f)`; `Ok(None)` stands for `+inf`.
pub fn partial_valuation(f: &LaurentSeries, n: i64) -> Result<Option<i64>, NpError> {
    let nq = rat::qi(n);
    match f.below() {
        Tail::Exact => {}
        Tail::Unknown => return Err(NpError::Uncertified(n)),
        Tail::Bound { floor, decay } => {
            if floor + decay <= nq {
                return Err(NpError::Uncertified(n));
            }
        }
    }
    for (m, c) in f.terms() {
        match c.valuation() {
            Some(v) if v <= n => return Ok(Some(*m)),
            Some(_) => {}
            None => {
                if c.valuation_lower_bound().is_some_and(|k| k <= n) {
                    return Err(NpError::Uncertified(n));
                }
            }
        }
    }
    match f.above() {
        Tail::Exact => Ok(None),
        Tail::Bound { floor, .. } if *floor > nq => Ok(None),
        _ => Err(NpError::Uncertified(n)),
    }
}

/// Distinct valuation levels at which `v_n` changes, with the value taken there.
fn valuation_steps(f: &LaurentSeries) -> Result<Vec<(i64, i64)>, NpError> {
    let mut levels: Vec<i64> = f.terms().filter_map(|(_, c)| c.valuation()).collect();
    levels.sort_unstable();
    levels.dedup();
    let mut steps: Vec<(i64, i64)> = Vec::new();
    for n in levels {
        if let Some(m) = partial_valuation(f, n)? {
            if steps.last().map_or(true, |(_, lm)| *lm != m) {
                steps.push((n, m));
            }
        }
    }
    Ok(steps)
}

/// `w_r(f) = min_n (r v_n(f) + n)`; `None` for the zero element.
pub fn weighted_valuation(f: &LaurentSeries, r: &Q) -> Result<Option<Q>, NpError> {
    let steps = valuation_steps(f)?;
    Ok(steps.iter().map(|(n, m)| r * rat::qi(*m) + rat::qi(*n)).min())
}

/// Newton polygon of `(v_n(f), n)` with left segments steeper than `-r` and right
/// segments of nonnegative slope removed. Segments of slope exactly `-r` are kept.
pub fn newton_polygon_ring(f: &LaurentSeries, r: &Q) -> Result<NewtonPolygon, NpError> {
    let steps = valuation_steps(f)?;
    if steps.is_empty() {
        return Err(NpError::ZeroElement);
    }
    let pts: Vec<(Q, Q)> = steps.iter().map(|(n, m)| (rat::qi(*m), rat::qi(*n))).collect();
    let mut hull = lower_hull(&pts);
    let neg_r = -r.clone();
    let slope = |a: &(Q, Q), b: &(Q, Q)| (&b.1 - &a.1) / (&b.0 - &a.0);
    while hull.len() >= 2 && slope(&hull[0], &hull[1]) < neg_r {
        hull.remove(0);
    }
    while hull.len() >= 2 && !slope(&hull[hull.len() - 2], &hull[hull.len() - 1]).is_negative() {
        hull.pop();
    }
    if hull.len() < 2 {
        return Ok(NewtonPolygon::empty());
    }
    // multiplicities for ring polygons are vertical extents
    let slopes = merge_slopes(
        hull.windows(2).map(|w| (slope(&w[0], &w[1]), (&w[0].1 - &w[1].1).abs())).collect(),
    );
    Ok(NewtonPolygon { vertices: hull, slopes })
}

/// Slopes of `f`: negated hull slopes with multiplicities, increasing.
pub fn ring_slopes(np: &NewtonPolygon) -> Vec<(Q, Q)> {
    let mut v: Vec<(Q, Q)> = np.slopes.iter().map(|(s, m)| (-s.clone(), m.clone())).collect();
    v.reverse();
    v
}

/// Dominant term as the radius tends to 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventualExponent {
    /// `|f|_rho = rho^a |f|_1` for radii close to 1.
    pub a: i64,
    /// Radius bound as an exponent: the identity holds for `rho = p^{-r}` with `0 <= r <= r0`.
    /// `None` means every radius.
    pub r0: Option<Q>,
    pub norm1_exponent: i64,
}

pub fn eventual_exponent(f: &LaurentSeries) -> Result<EventualExponent, NpError> {
    let vmin = f.min_window_valuation().ok_or(NpError::ZeroElement)?;
    let vq = rat::qi(vmin);
    for (_, c) in f.terms() {
        if c.valuation().is_none() && c.valuation_lower_bound().is_some_and(|k| k <= vmin) {
            return Err(NpError::UncertifiedDominance);
        }
    }
    let a = *f.terms().find(|(_, c)| c.valuation() == Some(vmin)).unwrap().0;
    let mut r0: Option<Q> = None;
    let mut upd = |x: Q| {
        r0 = Some(match r0.take() {
            Some(y) if y < x => y,
            _ => x,
        })
    };
    for (m, c) in f.terms() {
        if *m >= a {
            break;
        }
        if let Some(v) = c.valuation() {
            upd((rat::qi(v) - &vq) / rat::qi(a - m));
        }
    }
    match f.below() {
        Tail::Exact => {}
        Tail::Unknown => return Err(NpError::UncertifiedDominance),
        Tail::Bound { floor, decay } => {
            if floor + decay <= vq {
                return Err(NpError::UncertifiedDominance);
            }
            upd((floor - &vq + decay) / rat::qi(a - f.lo() + 1));
            if !decay.is_zero() {
                upd(decay.clone());
            } else {
                return Err(NpError::UncertifiedDominance);
            }
        }
    }
    match f.above() {
        Tail::Exact => {}
        Tail::Bound { floor, .. } if *floor >= vq => {}
        _ => return Err(NpError::UncertifiedDominance),
    }
    Ok(EventualExponent { a, r0, norm1_exponent: vmin })
}
