//! Elements of an unramified extension of `Q_p` at capped relative precision.
//!
//! A scalar is `p^v * u` where `u` is a unit of the integer ring known modulo
//! `p^prec`. The integer ring is `Z_p[t]/(g)` for a fixed monic lift `g` of an
//! irreducible polynomial over `F_p`, so units are stored as polynomials in `t`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadicError {
    #[error("scalars come from different contexts")]
    ContextMismatch,
    #[error("inverse of an exact zero")]
    InverseOfZero,
    #[error("inverse of a value that is zero at precision {0}")]
    InverseOfUnknown(i64),
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("invalid context parameter: {0}")]
    BadParameter(String),
    #[error("malformed scalar encoding: {0}")]
    Malformed(String),
}

/// Shared parameters: the prime, the Frobenius power `h` (so `q = p^h`), the
/// residue degree of the coefficient field and the relative precision cap.
pub struct PadicContext {
    p: u64,
    h: u32,
    degree: u32,
    prec: u32,
    p_big: BigInt,
    pows: Vec<BigInt>,
    /// Low coefficients of the monic modulus, reduced mod `p^prec`.
    modulus: Vec<BigInt>,
    /// Residue modulus over `F_p`, low coefficients first, monic.
    residue_modulus: Vec<u64>,
    /// Images of `t^i` under the coefficient Frobenius.
    frob_images: Option<Vec<Vec<BigInt>>>,
}

impl fmt::Debug for PadicContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PadicContext(p={}, h={}, degree={}, N={})", self.p, self.h, self.degree, self.prec)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl PadicContext {
    /// `K = Q_p` with `q = p^h`.
    pub fn new(p: u64, h: u32, prec: u32) -> Result<Arc<Self>, PadicError> {
        Self::with_degree(p, h, 1, prec)
    }

    /// `K` unramified of residue degree `degree` over `Q_p`, Frobenius power `h`.
    pub fn with_degree(p: u64, h: u32, degree: u32, prec: u32) -> Result<Arc<Self>, PadicError> {
        if !is_prime(p) {
            return Err(PadicError::NotPrime(p));
        }
        if h == 0 || degree == 0 || prec == 0 {
            return Err(PadicError::BadParameter("h, degree and N must be positive".into()));
        }
        let p_big = BigInt::from(p);
        let mut pows = Vec::with_capacity(2 * prec as usize + 2);
        let mut acc = BigInt::one();
        for _ in 0..=(2 * prec as usize + 1) {
            pows.push(acc.clone());
            acc *= &p_big;
        }
        let residue_modulus = irreducible_poly(p, degree);
        let modulus: Vec<BigInt> =
            residue_modulus[..degree as usize].iter().map(|&c| BigInt::from(c)).collect();
        let mut ctx = PadicContext {
            p,
            h,
            degree,
            prec,
            p_big,
            pows,
            modulus,
            residue_modulus,
            frob_images: None,
        };
        let shift = h % degree;
        if shift != 0 {
            let abs = ctx.absolute_frobenius_of_t();
            let mut img = abs.clone();
            for _ in 1..shift {
                img = ctx.substitute(&img, &abs, prec);
            }
            let mut images = Vec::with_capacity(degree as usize);
            let mut pw = ctx.one_poly();
            for _ in 0..degree {
                images.push(pw.clone());
                pw = ctx.poly_mul(&pw, &img, prec);
            }
            ctx.frob_images = Some(images);
        }
        Ok(Arc::new(ctx))
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn h(&self) -> u32 {
        self.h
    }
    pub fn degree(&self) -> u32 {
        self.degree
    }
    pub fn precision(&self) -> u32 {
        self.prec
    }
    /// `q = p^h` as an integer.
    pub fn q(&self) -> BigInt {
        self.pow_p(self.h)
    }
    pub fn q_u64(&self) -> u64 {
        self.p.pow(self.h)
    }
    pub fn residue_modulus(&self) -> &[u64] {
        &self.residue_modulus
    }

    pub fn same(&self, other: &PadicContext) -> bool {
        self.p == other.p && self.h == other.h && self.degree == other.degree && self.prec == other.prec
    }

    pub fn pow_p(&self, k: u32) -> BigInt {
        match self.pows.get(k as usize) {
            Some(v) => v.clone(),
            None => num_traits::pow(self.p_big.clone(), k as usize),
        }
    }

    fn one_poly(&self) -> Vec<BigInt> {
        let mut v = vec![BigInt::zero(); self.degree as usize];
        v[0] = BigInt::one();
        v
    }

    fn reduce_coeffs(&self, v: &mut [BigInt], k: u32) {
        let m = self.pow_p(k);
        for c in v.iter_mut() {
            *c = c.mod_floor(&m);
        }
    }

    fn poly_mul(&self, a: &[BigInt], b: &[BigInt], k: u32) -> Vec<BigInt> {
        let d = self.degree as usize;
        let m = self.pow_p(k);
        if d == 1 {
            return vec![(&a[0] * &b[0]).mod_floor(&m)];
        }
        let mut prod = vec![BigInt::zero(); 2 * d - 1];
        for (i, x) in a.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        for top in (d..2 * d - 1).rev() {
            let c = std::mem::take(&mut prod[top]);
            if c.is_zero() {
                continue;
            }
            for (i, g) in self.modulus.iter().enumerate() {
                prod[top - d + i] -= &c * g;
            }
        }
        prod.truncate(d);
        for c in prod.iter_mut() {
            *c = c.mod_floor(&m);
        }
        prod
    }

    fn substitute(&self, poly: &[BigInt], t_img: &[BigInt], k: u32) -> Vec<BigInt> {
        let d = self.degree as usize;
        let mut acc = vec![BigInt::zero(); d];
        for c in poly.iter().rev() {
            acc = self.poly_mul(&acc, t_img, k);
            acc[0] += c;
        }
        self.reduce_coeffs(&mut acc, k);
        acc
    }

    fn eval_modulus(&self, z: &[BigInt], k: u32) -> Vec<BigInt> {
        let d = self.degree as usize;
        let mut acc = self.one_poly();
        for i in (0..d).rev() {
            acc = self.poly_mul(&acc, z, k);
            acc[0] += &self.modulus[i];
        }
        self.reduce_coeffs(&mut acc, k);
        acc
    }

    fn eval_modulus_derivative(&self, z: &[BigInt], k: u32) -> Vec<BigInt> {
        let d = self.degree as usize;
        let mut acc = vec![BigInt::zero(); d];
        acc[0] = BigInt::from(d as u64);
        for i in (1..d).rev() {
            acc = self.poly_mul(&acc, z, k);
            acc[0] += &self.modulus[i] * BigInt::from(i as u64);
        }
        self.reduce_coeffs(&mut acc, k);
        acc
    }

    /// The root of the modulus congruent to `t^p`, by Newton iteration.
    fn absolute_frobenius_of_t(&self) -> Vec<BigInt> {
        let d = self.degree as usize;
        let mut t = vec![BigInt::zero(); d];
        t[1.min(d - 1)] = BigInt::one();
        let n = self.prec;
        let mut z = self.one_poly();
        for _ in 0..self.p {
            z = self.poly_mul(&z, &t, n);
        }
        let mut steps = 1;
        while (1u32 << steps) < 2 * n {
            steps += 1;
        }
        for _ in 0..=steps {
            let gz = self.eval_modulus(&z, n);
            let dz = self.eval_modulus_derivative(&z, n);
            let inv = self.unit_inverse(&dz, n);
            let corr = self.poly_mul(&gz, &inv, n);
            for (zi, ci) in z.iter_mut().zip(corr.iter()) {
                *zi -= ci;
            }
            self.reduce_coeffs(&mut z, n);
        }
        z
    }

    /// Inverse of a unit polynomial modulo `p^k`.
    fn unit_inverse(&self, a: &[BigInt], k: u32) -> Vec<BigInt> {
        let p = self.p;
        if self.degree == 1 {
            let m = self.pow_p(k);
            let e = a[0].extended_gcd(&m);
            debug_assert!(e.gcd.is_one());
            return vec![e.x.mod_floor(&m)];
        }
        let res: Vec<u64> = a.iter().map(|c| c.mod_floor(&BigInt::from(p)).to_u64().unwrap()).collect();
        let inv0 = ResidueField::from_context(self).inv(&res);
        let mut y: Vec<BigInt> = inv0.into_iter().map(BigInt::from).collect();
        let mut have = 1u32;
        while have < k {
            have = (2 * have).min(k);
            let ay = self.poly_mul(a, &y, have);
            let mut two_minus = ay.iter().map(|c| -c).collect::<Vec<_>>();
            two_minus[0] += 2;
            y = self.poly_mul(&y, &two_minus, have);
        }
        y
    }
}

/// The finite field `F_p[t]/(g)` matching a context's residue field.
#[derive(Clone, Debug)]
pub struct ResidueField {
    p: u64,
    modulus: Vec<u64>,
}

impl ResidueField {
    pub fn from_context(ctx: &PadicContext) -> Self {
        ResidueField { p: ctx.p, modulus: ctx.residue_modulus.clone() }
    }

    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }

    pub fn size(&self) -> u64 {
        self.p.pow(self.degree() as u32)
    }

    /// Element with index `k`, reading base-p digits as coordinates.
    pub fn element(&self, mut k: u64) -> Vec<u64> {
        let mut v = vec![0; self.degree()];
        for c in v.iter_mut() {
            *c = k % self.p;
            k /= self.p;
        }
        v
    }

    pub fn index(&self, a: &[u64]) -> u64 {
        a.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    pub fn from_int(&self, n: i64) -> Vec<u64> {
        let mut v = vec![0; self.degree()];
        v[0] = n.rem_euclid(self.p as i64) as u64;
        v
    }

    pub fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&c| c == 0)
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.p).collect()
    }

    pub fn sub(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| (x + self.p - y) % self.p).collect()
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let d = self.degree();
        let p = self.p;
        let mut prod = vec![0u64; 2 * d - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % p;
            }
        }
        for top in (d..2 * d - 1).rev() {
            let c = prod[top];
            if c == 0 {
                continue;
            }
            prod[top] = 0;
            for i in 0..d {
                prod[top - d + i] = (prod[top - d + i] + c * (p - self.modulus[i])) % p;
            }
        }
        prod.truncate(d);
        prod
    }

    pub fn pow(&self, a: &[u64], mut e: u64) -> Vec<u64> {
        let mut base = a.to_vec();
        let mut acc = self.from_int(1);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: &[u64]) -> Vec<u64> {
        assert!(!self.is_zero(a), "inverse of zero in residue field");
        self.pow(a, self.size() - 2)
    }

    /// Quadratic character: 1 for nonzero squares, -1 for non-squares, 0 at zero.
    pub fn legendre(&self, a: &[u64]) -> i64 {
        if self.is_zero(a) {
            return 0;
        }
        let e = self.pow(a, (self.size() - 1) / 2);
        if e == self.from_int(1) {
            1
        } else {
            -1
        }
    }
}

fn poly_mod_u64(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    // remainder of a by monic b over F_p
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let c = *r.last().unwrap();
        let shift = r.len() - 1 - db;
        if c != 0 {
            for (i, &bi) in b.iter().enumerate() {
                r[shift + i] = (r[shift + i] + (p - c) * bi) % p;
            }
        }
        r.pop();
    }
    r
}

/// Lexicographically first monic irreducible polynomial of the given degree over `F_p`,
/// low coefficients first, including the leading one.
fn irreducible_poly(p: u64, degree: u32) -> Vec<u64> {
    let d = degree as usize;
    if d == 1 {
        return vec![0, 1];
    }
    let total = p.pow(degree);
    'cand: for idx in 0..total {
        let mut g = Vec::with_capacity(d + 1);
        let mut k = idx;
        for _ in 0..d {
            g.push(k % p);
            k /= p;
        }
        g.push(1);
        if g[0] == 0 {
            continue;
        }
        for fd in 1..=d / 2 {
            for fidx in 0..p.pow(fd as u32) {
                let mut f = Vec::with_capacity(fd + 1);
                let mut k = fidx;
                for _ in 0..fd {
                    f.push(k % p);
                    k /= p;
                }
                f.push(1);
                if poly_mod_u64(&g, &f, p).iter().all(|&c| c == 0) {
                    continue 'cand;
                }
            }
        }
        return g;
    }
    unreachable!("irreducible polynomials exist in every degree")
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Repr {
    Zero,
    /// Known to be divisible by `p^k`, nothing more.
    ZeroAt(i64),
    Unit { val: i64, prec: u32, unit: Vec<BigInt> },
}

/// An element of `K` at capped relative precision.
#[derive(Clone)]
pub struct PadicScalar {
    ctx: Arc<PadicContext>,
    repr: Repr,
}

impl PartialEq for PadicScalar {
    fn eq(&self, other: &Self) -> bool {
        self.ctx.same(&other.ctx) && self.repr == other.repr
    }
}

impl fmt::Debug for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Zero => write!(f, "0"),
            Repr::ZeroAt(k) => write!(f, "O({}^{})", self.ctx.p, k),
            Repr::Unit { val, prec, unit } => {
                let u: Vec<String> = unit.iter().map(|c| c.to_string()).collect();
                write!(f, "{}^{}*[{}] + O({}^{})", self.ctx.p, val, u.join(","), self.ctx.p, *val + *prec as i64)
            }
        }
    }
}

/// Exponent of `p` in a nonzero integer.
pub fn vp_int(n: &BigInt, p: u64) -> u32 {
    let pb = BigInt::from(p);
    let mut n = n.abs();
    let mut k = 0;
    while !n.is_zero() && (&n % &pb).is_zero() {
        n /= &pb;
        k += 1;
    }
    k
}

impl PadicScalar {
    pub fn zero(ctx: &Arc<PadicContext>) -> Self {
        PadicScalar { ctx: ctx.clone(), repr: Repr::Zero }
    }

    pub fn zero_at(ctx: &Arc<PadicContext>, k: i64) -> Self {
        PadicScalar { ctx: ctx.clone(), repr: Repr::ZeroAt(k) }
    }

    pub fn one(ctx: &Arc<PadicContext>) -> Self {
        Self::from_int(ctx, 1)
    }

    pub fn from_int(ctx: &Arc<PadicContext>, n: i64) -> Self {
        Self::from_bigint(ctx, &BigInt::from(n))
    }

    pub fn from_bigint(ctx: &Arc<PadicContext>, n: &BigInt) -> Self {
        if n.is_zero() {
            return Self::zero(ctx);
        }
        let v = vp_int(n, ctx.p);
        let u = n / ctx.pow_p(v);
        Self::from_parts(ctx, v as i64, ctx.prec, vec![u])
    }

    /// `p^k` exactly (up to the relative cap).
    pub fn p_power(ctx: &Arc<PadicContext>, k: i64) -> Self {
        Self::from_parts(ctx, k, ctx.prec, vec![BigInt::one()])
    }

    pub fn from_rational(ctx: &Arc<PadicContext>, num: &BigInt, den: &BigInt) -> Result<Self, PadicError> {
        if den.is_zero() {
            return Err(PadicError::ZeroDenominator);
        }
        if num.is_zero() {
            return Ok(Self::zero(ctx));
        }
        let a = Self::from_bigint(ctx, num);
        let b = Self::from_bigint(ctx, den);
        a.div(&b)
    }

    pub fn from_q(ctx: &Arc<PadicContext>, x: &crate::rat::Q) -> Self {
        Self::from_rational(ctx, x.numer(), x.denom()).expect("rational has nonzero denominator")
    }

    /// Builds `p^val * unit` from a polynomial unit (low coefficients first).
    /// Leading digits divisible by `p` are absorbed into the valuation.
    pub fn from_parts(ctx: &Arc<PadicContext>, val: i64, prec: u32, unit: Vec<BigInt>) -> Self {
        let mut u = unit;
        u.resize(ctx.degree as usize, BigInt::zero());
        Self::normalize(ctx, val, val + prec.min(ctx.prec) as i64, u)
    }

    /// Normalizes `p^val * poly` known modulo `p^abs`.
    fn normalize(ctx: &Arc<PadicContext>, val: i64, abs: i64, mut poly: Vec<BigInt>) -> Self {
        if abs <= val {
            return Self::zero_at(ctx, abs);
        }
        let rel = (abs - val) as u32;
        ctx.reduce_coeffs(&mut poly, rel);
        let shift = poly.iter().filter(|c| !c.is_zero()).map(|c| vp_int(c, ctx.p)).min();
        match shift {
            None => Self::zero_at(ctx, abs),
            Some(s) if s >= rel => Self::zero_at(ctx, abs),
            Some(s) => {
                let d = ctx.pow_p(s);
                for c in poly.iter_mut() {
                    *c = &*c / &d;
                }
                let nv = val + s as i64;
                let prec = ((abs - nv) as u32).min(ctx.prec);
                ctx.reduce_coeffs(&mut poly, prec);
                PadicScalar { ctx: ctx.clone(), repr: Repr::Unit { val: nv, prec, unit: poly } }
            }
        }
    }

    /// Teichmüller lift of a residue-field element.
    pub fn teichmuller(ctx: &Arc<PadicContext>, residue: &[u64]) -> Self {
        let poly: Vec<BigInt> = residue.iter().map(|&c| BigInt::from(c)).collect();
        if poly.iter().all(|c| c.is_zero()) {
            return Self::zero(ctx);
        }
        let n = ctx.prec;
        let qres = ctx.p.pow(ctx.degree);
        let mut t = poly;
        for _ in 0..=n {
            let mut acc = ctx.one_poly();
            let mut base = t.clone();
            let mut e = qres;
            while e > 0 {
                if e & 1 == 1 {
                    acc = ctx.poly_mul(&acc, &base, n);
                }
                base = ctx.poly_mul(&base, &base, n);
                e >>= 1;
            }
            t = acc;
        }
        Self::from_parts(ctx, 0, n, t)
    }

    pub fn context(&self) -> &Arc<PadicContext> {
        &self.ctx
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero)
    }

    /// True for exact zero and for values that are zero at their precision.
    pub fn is_zero(&self) -> bool {
        !matches!(self.repr, Repr::Unit { .. })
    }

    pub fn is_zero_at_precision(&self) -> bool {
        matches!(self.repr, Repr::ZeroAt(_))
    }

    /// Valuation of a certified nonzero value.
    pub fn valuation(&self) -> Option<i64> {
        match &self.repr {
            Repr::Unit { val, .. } => Some(*val),
            _ => None,
        }
    }

    /// A lower bound on the valuation: exact for nonzero values, the known
    /// divisibility for zero-at-precision, `None` for exact zero (infinity).
    pub fn valuation_lower_bound(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero => None,
            Repr::ZeroAt(k) => Some(*k),
            Repr::Unit { val, .. } => Some(*val),
        }
    }

    /// Absolute precision, `None` when exact.
    pub fn absolute_precision(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero => None,
            Repr::ZeroAt(k) => Some(*k),
            Repr::Unit { val, prec, .. } => Some(*val + *prec as i64),
        }
    }

    pub fn relative_precision(&self) -> u32 {
        match &self.repr {
            Repr::Unit { prec, .. } => *prec,
            _ => 0,
        }
    }

    /// Unit part coefficients (low first) for nonzero values.
    pub fn unit_part(&self) -> Option<&[BigInt]> {
        match &self.repr {
            Repr::Unit { unit, .. } => Some(unit),
            _ => None,
        }
    }

    /// Residue of the unit part in the residue field.
    pub fn unit_residue(&self) -> Option<Vec<u64>> {
        let p = BigInt::from(self.ctx.p);
        self.unit_part().map(|u| u.iter().map(|c| c.mod_floor(&p).to_u64().unwrap()).collect())
    }

    /// Residue of an integral value (valuation >= 0) in the residue field.
    pub fn residue(&self) -> Vec<u64> {
        match &self.repr {
            Repr::Unit { val: 0, .. } => self.unit_residue().unwrap(),
            Repr::Unit { val, .. } if *val > 0 => vec![0; self.ctx.degree as usize],
            Repr::Zero | Repr::ZeroAt(_) => vec![0; self.ctx.degree as usize],
            _ => panic!("residue of a non-integral value"),
        }
    }

    /// Floating-point style rounding: keeps the known digits and declares the value known to
    /// `r` relative digits, padding with zeros. Values that are zero at precision become exact zeros.
    pub fn with_relative_precision(&self, r: u32) -> Self {
        match &self.repr {
            Repr::Zero | Repr::ZeroAt(_) => Self::zero(&self.ctx),
            Repr::Unit { val, unit, .. } => Self::from_parts(&self.ctx, *val, r, unit.clone()),
        }
    }

    /// Weakens the value so that its absolute precision is at most `k`.
    pub fn cap_absolute(&self, k: i64) -> Self {
        match &self.repr {
            Repr::Zero => Self::zero_at(&self.ctx, k),
            Repr::ZeroAt(a) => Self::zero_at(&self.ctx, (*a).min(k)),
            Repr::Unit { val, prec, unit } => {
                let abs = (*val + *prec as i64).min(k);
                Self::normalize(&self.ctx, *val, abs, unit.clone())
            }
        }
    }

    fn check(&self, other: &Self) -> Result<(), PadicError> {
        if Arc::ptr_eq(&self.ctx, &other.ctx) || self.ctx.same(&other.ctx) {
            Ok(())
        } else {
            Err(PadicError::ContextMismatch)
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, PadicError> {
        self.check(other)?;
        Ok(self.add_unchecked(other))
    }

    fn add_unchecked(&self, other: &Self) -> Self {
        let ctx = &self.ctx;
        match (&self.repr, &other.repr) {
            (Repr::Zero, _) => other.clone(),
            (_, Repr::Zero) => self.clone(),
            (Repr::ZeroAt(a), Repr::ZeroAt(b)) => Self::zero_at(ctx, (*a).min(*b)),
            (Repr::ZeroAt(a), Repr::Unit { .. }) => other.cap_absolute(*a),
            (Repr::Unit { .. }, Repr::ZeroAt(b)) => self.cap_absolute(*b),
            (Repr::Unit { val: va, prec: pa, unit: ua }, Repr::Unit { val: vb, prec: pb, unit: ub }) => {
                let abs = (*va + *pa as i64).min(*vb + *pb as i64);
                let (lo, lu, hi, hu) = if va <= vb { (*va, ua, *vb, ub) } else { (*vb, ub, *va, ua) };
                if abs <= lo {
                    return Self::zero_at(ctx, abs);
                }
                let shift = (hi - lo) as u32;
                let rel = (abs - lo) as u32;
                let mut poly = lu.clone();
                if shift < rel {
                    let s = ctx.pow_p(shift);
                    for (c, d) in poly.iter_mut().zip(hu.iter()) {
                        *c += &s * d;
                    }
                }
                Self::normalize(ctx, lo, abs, poly)
            }
        }
    }

    pub fn neg(&self) -> Self {
        match &self.repr {
            Repr::Unit { val, prec, unit } => {
                let m = self.ctx.pow_p(*prec);
                let u = unit.iter().map(|c| (-c).mod_floor(&m)).collect();
                PadicScalar { ctx: self.ctx.clone(), repr: Repr::Unit { val: *val, prec: *prec, unit: u } }
            }
            _ => self.clone(),
        }
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, PadicError> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, PadicError> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let ctx = &self.ctx;
        match (&self.repr, &other.repr) {
            (Repr::Zero, _) | (_, Repr::Zero) => Self::zero(ctx),
            (Repr::ZeroAt(a), Repr::ZeroAt(b)) => Self::zero_at(ctx, a + b),
            (Repr::ZeroAt(a), Repr::Unit { val, .. }) | (Repr::Unit { val, .. }, Repr::ZeroAt(a)) => {
                Self::zero_at(ctx, a + val)
            }
            (Repr::Unit { val: va, prec: pa, unit: ua }, Repr::Unit { val: vb, prec: pb, unit: ub }) => {
                let prec = (*pa).min(*pb);
                let unit = ctx.poly_mul(ua, ub, prec);
                PadicScalar { ctx: ctx.clone(), repr: Repr::Unit { val: va + vb, prec, unit } }
            }
        }
    }

    pub fn inv(&self) -> Result<Self, PadicError> {
        match &self.repr {
            Repr::Zero => Err(PadicError::InverseOfZero),
            Repr::ZeroAt(k) => Err(PadicError::InverseOfUnknown(*k)),
            Repr::Unit { val, prec, unit } => {
                let u = self.ctx.unit_inverse(unit, *prec);
                Ok(PadicScalar { ctx: self.ctx.clone(), repr: Repr::Unit { val: -val, prec: *prec, unit: u } })
            }
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self, PadicError> {
        self.try_mul(&other.inv()?)
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(&self.ctx);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            base = base.mul_unchecked(&base);
            e >>= 1;
        }
        acc
    }

    /// Multiplies by `p^k`.
    pub fn shift(&self, k: i64) -> Self {
        match &self.repr {
            Repr::Zero => self.clone(),
            Repr::ZeroAt(a) => Self::zero_at(&self.ctx, a + k),
            Repr::Unit { val, prec, unit } => PadicScalar {
                ctx: self.ctx.clone(),
                repr: Repr::Unit { val: val + k, prec: *prec, unit: unit.clone() },
            },
        }
    }

    /// The coefficient Frobenius: the `h`-th power of the absolute Frobenius.
    pub fn frobenius(&self) -> Self {
        let images = match &self.ctx.frob_images {
            None => return self.clone(),
            Some(im) => im,
        };
        match &self.repr {
            Repr::Unit { val, prec, unit } => {
                let d = self.ctx.degree as usize;
                let mut acc = vec![BigInt::zero(); d];
                for (c, img) in unit.iter().zip(images.iter()) {
                    for (a, b) in acc.iter_mut().zip(img.iter()) {
                        *a += c * b;
                    }
                }
                Self::from_parts(&self.ctx, *val, *prec, acc)
            }
            _ => self.clone(),
        }
    }

    /// True when `self - other` is zero at the available precision.
    pub fn agrees(&self, other: &Self) -> bool {
        match self.try_sub(other) {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }

    /// Exact rational value when the unit is an integer (degree-one part only),
    /// as `p^val * u` with `u` taken in the symmetric range.
    pub fn to_rational_approx(&self) -> Option<crate::rat::Q> {
        match &self.repr {
            Repr::Zero => Some(crate::rat::qi(0)),
            Repr::ZeroAt(_) => Some(crate::rat::qi(0)),
            Repr::Unit { val, prec, unit } => {
                if unit.iter().skip(1).any(|c| !c.is_zero()) {
                    return None;
                }
                let m = self.ctx.pow_p(*prec);
                let mut u = unit[0].clone();
                if &u * 2 > m {
                    u -= &m;
                }
                let pv = self.ctx.pow_p(val.unsigned_abs() as u32);
                let x = crate::rat::Q::from_integer(u);
                Some(if *val >= 0 { x * crate::rat::Q::from_integer(pv) } else { x / crate::rat::Q::from_integer(pv) })
            }
        }
    }

    pub fn to_json(&self) -> ScalarJson {
        match &self.repr {
            Repr::Zero => ScalarJson { val: ValJson::Inf("inf".into()), digits: vec![] },
            Repr::ZeroAt(k) => ScalarJson { val: ValJson::Finite(*k), digits: vec![] },
            Repr::Unit { val, prec, unit } => {
                let p = BigInt::from(self.ctx.p);
                let mut work: Vec<BigInt> = unit.clone();
                let mut digits = Vec::with_capacity(*prec as usize);
                for _ in 0..*prec {
                    let mut digit = 0u64;
                    let mut scale = 1u64;
                    for c in work.iter_mut() {
                        let (qq, r) = c.div_mod_floor(&p);
                        digit += r.to_u64().unwrap() * scale;
                        scale *= self.ctx.p;
                        *c = qq;
                    }
                    digits.push(digit);
                }
                ScalarJson { val: ValJson::Finite(*val), digits }
            }
        }
    }

    pub fn from_json(ctx: &Arc<PadicContext>, js: &ScalarJson) -> Result<Self, PadicError> {
        match &js.val {
            ValJson::Inf(s) if s == "inf" => Ok(Self::zero(ctx)),
            ValJson::Inf(s) => Err(PadicError::Malformed(format!("unknown valuation tag {s:?}"))),
            ValJson::Finite(v) => {
                if js.digits.is_empty() {
                    return Ok(Self::zero_at(ctx, *v));
                }
                let d = ctx.degree as usize;
                let pf = ctx.p.pow(ctx.degree);
                let mut unit = vec![BigInt::zero(); d];
                for (k, &digit) in js.digits.iter().enumerate() {
                    if digit >= pf {
                        return Err(PadicError::Malformed(format!("digit {digit} out of range")));
                    }
                    let mut rest = digit;
                    let scale = ctx.pow_p(k as u32);
                    for c in unit.iter_mut() {
                        *c += BigInt::from(rest % ctx.p) * &scale;
                        rest /= ctx.p;
                    }
                }
                if js.digits[0] == 0 {
                    return Err(PadicError::Malformed("leading digit of a unit must be nonzero".into()));
                }
                Ok(Self::from_parts(ctx, *v, js.digits.len() as u32, unit))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValJson {
    Finite(i64),
    Inf(String),
}

/// Wire form `{"val": int|"inf", "digits": [...]}`; empty digits with a finite
/// `val` encode a value known only to be divisible by `p^val`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarJson {
    pub val: ValJson,
    pub digits: Vec<u64>,
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $inner:ident) => {
        impl std::ops::$tr<&PadicScalar> for &PadicScalar {
            type Output = PadicScalar;
            fn $m(self, rhs: &PadicScalar) -> PadicScalar {
                debug_assert!(self.ctx.same(&rhs.ctx), "context mismatch");
                self.$inner(rhs)
            }
        }
        impl std::ops::$tr<PadicScalar> for PadicScalar {
            type Output = PadicScalar;
            fn $m(self, rhs: PadicScalar) -> PadicScalar {
                (&self).$m(&rhs)
            }
        }
    };
}

impl PadicScalar {
    fn sub_unchecked(&self, other: &Self) -> Self {
        self.add_unchecked(&other.neg())
    }
}

forward_binop!(Add, add, add_unchecked);
forward_binop!(Sub, sub, sub_unchecked);
forward_binop!(Mul, mul, mul_unchecked);

impl std::ops::Neg for &PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        PadicScalar::neg(self)
    }
}
