//! Exact rational arithmetic, Bernoulli polynomials, falling factorials, and
//! sparse multivariate polynomials over the rationals.
//!
//! Everything downstream keeps coefficients in [`Rat`] (arbitrary-precision
//! rationals) or [`MultiPoly`] (sparse polynomials in `a_1, ..., a_n`). There is
//! no floating point anywhere in the crate.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Mutex;
use std::sync::OnceLock;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::Error;

/// Arbitrary-precision rational number, always kept in canonical form
/// (reduced, positive denominator) by `num`.
pub type Rat = BigRational;

/// Shorthand for an integer as a `Rat`.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Shorthand for `n/d` as a `Rat`.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// `n!` as a big integer.
pub fn factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    acc
}

/// Binomial coefficient `C(n, k)` as a big integer.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    num / den
}

/// Integer power of a rational, allowing negative exponents.
pub fn rat_pow(base: &Rat, exp: i64) -> Rat {
    if exp >= 0 {
        num::pow::pow(base.clone(), exp as usize)
    } else {
        num::pow::pow(base.clone(), (-exp) as usize).recip()
    }
}

fn bernoulli_cache() -> &'static Mutex<Vec<Rat>> {
    static CACHE: OnceLock<Mutex<Vec<Rat>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(vec![Rat::one()]))
}

/// The Bernoulli number `B_m` in the convention of the generating series
/// `t/(e^t - 1)`, so `B_1 = -1/2`.
///
/// Computed by the defining recurrence `sum_j C(m+1, j) B_j = 0` and memoized.
pub fn bernoulli_number(m: usize) -> Rat {
    let mut cache = bernoulli_cache().lock().unwrap();
    while cache.len() <= m {
        let k = cache.len();
        // B_k = -1/(k+1) * sum_{j<k} C(k+1, j) B_j
        let mut acc = Rat::zero();
        for (j, bj) in cache.iter().enumerate() {
            acc += Rat::from_integer(binomial(k + 1, j)) * bj;
        }
        let bk = -acc / Rat::from_integer(BigInt::from(k + 1));
        cache.push(bk);
    }
    cache[m].clone()
}

/// The Bernoulli polynomial `B_m(q)`, defined by `t e^{tq} / (e^t - 1)`.
///
/// Expanded as `B_m(q) = sum_k C(m, k) B_k q^{m-k}`.
pub fn bernoulli_value(m: usize, q: &Rat) -> Rat {
    let mut acc = Rat::zero();
    let mut qpow = Rat::one();
    // iterate k = m down to 0 so powers of q build up from q^0
    for k in (0..=m).rev() {
        acc += Rat::from_integer(binomial(m, k)) * bernoulli_number(k) * &qpow;
        qpow *= q;
    }
    acc
}

/// Falling factorial `(s)_t = s (s-1) ... (s-t+1)`; the empty product is 1.
pub fn pochhammer(s: &Rat, t: usize) -> Rat {
    let mut acc = Rat::one();
    for i in 0..t {
        acc *= s - rat_int(i as i64);
    }
    acc
}

/// A sparse multivariate polynomial over `Rat` in a fixed number of variables.
///
/// Terms are keyed by exponent vectors of length `arity`; zero coefficients are
/// never stored. The zero polynomial has an empty term map.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MultiPoly {
    arity: usize,
    terms: BTreeMap<Vec<u16>, Rat>,
}

impl MultiPoly {
    pub fn zero(arity: usize) -> Self {
        MultiPoly {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(arity: usize, c: Rat) -> Self {
        let mut p = MultiPoly::zero(arity);
        if !c.is_zero() {
            p.terms.insert(vec![0; arity], c);
        }
        p
    }

    pub fn one(arity: usize) -> Self {
        Self::constant(arity, Rat::one())
    }

    /// The variable `a_{i+1}` (0-based index `i`).
    pub fn var(arity: usize, i: usize) -> Self {
        assert!(i < arity, "variable index out of range");
        let mut key = vec![0u16; arity];
        key[i] = 1;
        let mut p = MultiPoly::zero(arity);
        p.terms.insert(key, Rat::one());
        p
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u16>, &Rat)> {
        self.terms.iter()
    }

    /// Constant term viewed as a rational; `None` if any variable appears.
    pub fn as_constant(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(Rat::zero());
        }
        if self.terms.len() == 1 {
            let (k, v) = self.terms.iter().next().unwrap();
            if k.iter().all(|&e| e == 0) {
                return Some(v.clone());
            }
        }
        None
    }

    fn insert_term(&mut self, key: Vec<u16>, coef: Rat) {
        if coef.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(key) {
            Entry::Vacant(e) => {
                e.insert(coef);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += coef;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.arity, other.arity, "arity mismatch");
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.insert_term(k.clone(), v.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = -v.clone();
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.arity, other.arity, "arity mismatch");
        let mut out = MultiPoly::zero(self.arity);
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                let key: Vec<u16> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                out.insert_term(key, va * vb);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return MultiPoly::zero(self.arity);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out
    }

    pub fn pow(&self, e: usize) -> Self {
        let mut out = MultiPoly::one(self.arity);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Evaluate at integer arguments.
    pub fn eval_int(&self, args: &[i64]) -> Rat {
        assert_eq!(args.len(), self.arity, "arity mismatch");
        let mut acc = Rat::zero();
        for (k, v) in &self.terms {
            let mut t = v.clone();
            for (e, &a) in k.iter().zip(args) {
                for _ in 0..*e {
                    t *= rat_int(a);
                }
            }
            acc += t;
        }
        acc
    }

    /// Total degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.terms
            .keys()
            .map(|k| k.iter().map(|&e| e as usize).sum())
            .max()
    }

    /// `Some(d)` if every monomial has total degree `d` (zero counts as
    /// homogeneous of any degree and returns `None`).
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut deg = None;
        for k in self.terms.keys() {
            let d: usize = k.iter().map(|&e| e as usize).sum();
            match deg {
                None => deg = Some(d),
                Some(d0) if d0 == d => {}
                _ => return None,
            }
        }
        deg
    }

    /// The homogeneous component of total degree `d`.
    pub fn homogeneous_part(&self, d: usize) -> Self {
        let mut out = MultiPoly::zero(self.arity);
        for (k, v) in &self.terms {
            if k.iter().map(|&e| e as usize).sum::<usize>() == d {
                out.terms.insert(k.clone(), v.clone());
            }
        }
        out
    }

    /// Exact polynomial division: returns `self / divisor` if the remainder is
    /// zero, else `Err(InexactDivision)`.
    ///
    /// Multivariate reduction by the leading term in lex order; exactness of
    /// the division is exactly the property promised by the callers.
    pub fn div_exact(&self, divisor: &Self) -> Result<Self, Error> {
        assert_eq!(self.arity, divisor.arity, "arity mismatch");
        if divisor.is_zero() {
            return Err(Error::InexactDivision);
        }
        let (dkey, dcoef) = divisor.terms.iter().next_back().unwrap();
        let mut rem = self.clone();
        let mut quot = MultiPoly::zero(self.arity);
        while !rem.is_zero() {
            let (rkey, rcoef) = rem.terms.iter().next_back().unwrap();
            if !rkey.iter().zip(dkey).all(|(r, d)| r >= d) {
                return Err(Error::InexactDivision);
            }
            let qkey: Vec<u16> = rkey.iter().zip(dkey).map(|(r, d)| r - d).collect();
            let qcoef = rcoef / dcoef;
            let mut mono = MultiPoly::zero(self.arity);
            mono.terms.insert(qkey.clone(), qcoef.clone());
            rem = rem.sub(&mono.mul(divisor));
            quot.insert_term(qkey, qcoef);
        }
        Ok(quot)
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, v) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let trivial = k.iter().all(|&e| e == 0);
            if trivial {
                write!(f, "{}", v)?;
            } else {
                if !v.is_one() {
                    write!(f, "{}*", v)?;
                }
                let mut need_star = false;
                for (i, &e) in k.iter().enumerate() {
                    if e > 0 {
                        if need_star {
                            write!(f, "*")?;
                        }
                        need_star = true;
                        if e == 1 {
                            write!(f, "a{}", i + 1)?;
                        } else {
                            write!(f, "a{}^{}", i + 1, e)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// All exponent vectors of length `n` with total degree `k`, in lex order.
pub fn monomials_of_degree(n: usize, k: usize) -> Vec<Vec<u16>> {
    let mut out = Vec::new();
    let mut cur = vec![0u16; n];
    fn rec(i: usize, left: usize, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if i + 1 == cur.len() {
            cur[i] = left as u16;
            out.push(cur.clone());
            return;
        }
        for e in 0..=left {
            cur[i] = e as u16;
            rec(i + 1, left - e, cur, out);
        }
    }
    if n == 0 {
        if k == 0 {
            out.push(vec![]);
        }
        return out;
    }
    rec(0, k, &mut cur, &mut out);
    out
}

/// Deterministic evaluation grid for homogeneous degree-`k` interpolation in
/// `n` variables: the shifted simplex lattice `{alpha + (1,...,1)}` over all
/// exponent vectors `alpha` of degree `k`. All entries are positive.
pub fn interpolation_grid(n: usize, k: usize) -> Vec<Vec<i64>> {
    monomials_of_degree(n, k)
        .into_iter()
        .map(|alpha| alpha.into_iter().map(|e| e as i64 + 1).collect())
        .collect()
}

/// Recover the unique homogeneous degree-`k` polynomial in `n` variables from
/// point samples.
///
/// The sample set must determine the coefficients (the deterministic
/// [`interpolation_grid`] does); extra samples are checked for consistency and
/// an inconsistent overdetermined system raises
/// [`Error::InconsistentSamples`], which is how a homogeneity violation in the
/// sampled data surfaces.
pub fn homogeneous_interpolate(
    samples: &[(Vec<i64>, Rat)],
    k: usize,
    n: usize,
) -> Result<MultiPoly, Error> {
    let monos = monomials_of_degree(n, k);
    let cols = monos.len();
    if samples.len() < cols {
        return Err(Error::UnderdeterminedSystem {
            needed: cols,
            got: samples.len(),
        });
    }
    // Build the full matrix [A | b] and run exact Gaussian elimination.
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(samples.len());
    for (pt, val) in samples {
        assert_eq!(pt.len(), n, "sample arity mismatch");
        let mut row: Vec<Rat> = Vec::with_capacity(cols + 1);
        for mono in &monos {
            let mut t = Rat::one();
            for (e, &a) in mono.iter().zip(pt) {
                for _ in 0..*e {
                    t *= rat_int(a);
                }
            }
            row.push(t);
        }
        row.push(val.clone());
        rows.push(row);
    }
    let nrows = rows.len();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut rank = 0usize;
    for col in 0..cols {
        // find pivot
        let mut piv = None;
        for r in rank..nrows {
            if !rows[r][col].is_zero() {
                piv = Some(r);
                break;
            }
        }
        let Some(p) = piv else { continue };
        rows.swap(rank, p);
        let inv = rows[rank][col].clone().recip();
        for c in col..=cols {
            let v = rows[rank][c].clone() * &inv;
            rows[rank][c] = v;
        }
        for r in 0..nrows {
            if r != rank && !rows[r][col].is_zero() {
                let f = rows[r][col].clone();
                for c in col..=cols {
                    let v = rows[r][c].clone() - &f * &rows[rank][c];
                    rows[r][c] = v;
                }
            }
        }
        pivot_of_col[col] = Some(rank);
        rank += 1;
    }
    // rows beyond the rank must have zero rhs, else the data is inconsistent
    for r in rank..nrows {
        if !rows[r][cols].is_zero() {
            return Err(Error::InconsistentSamples);
        }
    }
    if pivot_of_col.iter().any(|p| p.is_none()) {
        return Err(Error::UnderdeterminedSystem {
            needed: cols,
            got: rank,
        });
    }
    let mut poly = MultiPoly::zero(n);
    for (col, mono) in monos.iter().enumerate() {
        let r = pivot_of_col[col].unwrap();
        let c = rows[r][cols].clone();
        if !c.is_zero() {
            poly.terms.insert(mono.clone(), c);
        }
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bernoulli_small_values() {
        assert_eq!(bernoulli_number(0), rat_int(1));
        assert_eq!(bernoulli_number(1), rat(-1, 2));
        assert_eq!(bernoulli_number(2), rat(1, 6));
        assert_eq!(bernoulli_number(3), rat_int(0));
        assert_eq!(bernoulli_number(4), rat(-1, 30));
        assert_eq!(bernoulli_number(12), rat(-691, 2730));
    }

    #[test]
    fn bernoulli_polynomial_values() {
        // B_0(q) = 1 for any q
        assert_eq!(bernoulli_value(0, &rat(7, 3)), rat_int(1));
        // first-order expansion of t e^{tx}/(e^t - 1) at x = 0
        assert_eq!(bernoulli_value(1, &rat_int(0)), rat(-1, 2));
        // B_2(x) = x^2 - x + 1/6 evaluated at 1/2
        assert_eq!(bernoulli_value(2, &rat(1, 2)), rat(-1, 12));
    }

    #[test]
    fn bernoulli_reflection() {
        // B_m(0) = (-1)^m B_m(1)
        for m in 0..=20 {
            let b0 = bernoulli_value(m, &rat_int(0));
            let b1 = bernoulli_value(m, &rat_int(1));
            let sign = if m % 2 == 0 { b1.clone() } else { -b1.clone() };
            assert_eq!(b0, sign, "reflection fails at m={m}");
        }
    }

    #[test]
    fn pochhammer_values() {
        assert_eq!(pochhammer(&rat(9, 2), 0), rat_int(1));
        assert_eq!(pochhammer(&rat_int(5), 2), rat_int(20));
        assert_eq!(pochhammer(&rat_int(3), 5), rat_int(0));
    }

    #[test]
    fn interpolate_constant_and_linear() {
        // degree 0: constant
        let samples = vec![(vec![1, 1], rat_int(7)), (vec![2, 5], rat_int(7))];
        let p = homogeneous_interpolate(&samples, 0, 2).unwrap();
        assert_eq!(p.eval_int(&[100, -3]), rat_int(7));
        // degree 1, two variables: 2 a1 + 3 a2
        let samples = vec![
            (vec![1, 0], rat_int(2)),
            (vec![0, 1], rat_int(3)),
            (vec![1, 1], rat_int(5)),
        ];
        let p = homogeneous_interpolate(&samples, 1, 2).unwrap();
        let expect = MultiPoly::var(2, 0)
            .scale(&rat_int(2))
            .add(&MultiPoly::var(2, 1).scale(&rat_int(3)));
        assert_eq!(p, expect);
    }

    #[test]
    fn interpolate_quadratic_univariate() {
        // samples of 5 a^2, the third point cross-checks
        let samples = vec![
            (vec![1], rat_int(5)),
            (vec![2], rat_int(20)),
            (vec![3], rat_int(45)),
        ];
        let p = homogeneous_interpolate(&samples, 2, 1).unwrap();
        assert_eq!(p, MultiPoly::var(1, 0).pow(2).scale(&rat_int(5)));
    }

    #[test]
    fn interpolate_detects_inhomogeneous_data() {
        // values of a^2 + 1 are not homogeneous of degree 2
        let samples: Vec<(Vec<i64>, Rat)> = (1..=4)
            .map(|a| (vec![a], rat_int(a * a + 1)))
            .collect();
        assert!(matches!(
            homogeneous_interpolate(&samples, 2, 1),
            Err(Error::InconsistentSamples)
        ));
    }

    #[test]
    fn interpolation_grid_is_unisolvent_in_used_ranges() {
        for n in 1..=4 {
            for k in 0..=5 {
                let grid = interpolation_grid(n, k);
                // interpolating the zero function must succeed and return zero
                let samples: Vec<(Vec<i64>, Rat)> =
                    grid.into_iter().map(|p| (p, Rat::zero())).collect();
                let p = homogeneous_interpolate(&samples, k, n)
                    .unwrap_or_else(|e| panic!("grid ({n},{k}) not unisolvent: {e}"));
                assert!(p.is_zero());
            }
        }
    }

    #[test]
    fn div_exact_multivariate() {
        let a1 = MultiPoly::var(2, 0);
        let a2 = MultiPoly::var(2, 1);
        let s = a1.add(&a2);
        let prod = s.mul(&s).mul(&a1); // (a1+a2)^2 a1
        let q = prod.div_exact(&s).unwrap();
        assert_eq!(q, s.mul(&a1));
        assert!(a1.mul(&a1).add(&a2).div_exact(&s).is_err());
    }

    #[test]
    fn eval_and_homogeneous_parts() {
        let a1 = MultiPoly::var(2, 0);
        let a2 = MultiPoly::var(2, 1);
        let p = a1.mul(&a2).add(&a1).scale(&rat_int(3));
        assert_eq!(p.eval_int(&[2, 5]), rat_int(36));
        assert_eq!(p.homogeneous_part(2), a1.mul(&a2).scale(&rat_int(3)));
        assert_eq!(p.degree(), Some(2));
        assert_eq!(p.homogeneous_degree(), None);
    }
}
