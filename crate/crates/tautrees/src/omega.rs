//! Omega-classes (Chiodo classes) on compact type and Hodge class
//! expansions.
//!
//! [`omega_ct`] evaluates the weighted-graph-sum formula for
//! `Omega^{[x]}_{g,n}(r, s; mu)` restricted to stable trees. On its own the
//! tree truncation is only meaningful in genus 0 (where all stable graphs are
//! trees) or after multiplication by the top Hodge class, which kills every
//! stratum the truncation drops; that is exactly how the vertex classes here
//! use it.
//!
//! [`mumford_lambda`] returns tree-supported representatives of the lambda
//! classes that are exact as classes on the full moduli space, built from the
//! divisor relations in genus one and two and transported to more marked
//! points by the forgetful pullback. Exactness is what makes every pairing
//! downstream an honest rational number, and it is pinned against an
//! independent Hodge-integral oracle in the test suite.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num::{One, Zero};

use crate::exactmath::{bernoulli_value, factorial, rat_int, rat_pow, MultiPoly, Rat};
use crate::strata::{
    mul_classes, pullback_append, DecoratedStratum, StrataClass, StratumEdge, StratumVertex,
};
use crate::Error;

/// Parameters of `Omega^{[x]}_{g,n}(r, s; fields)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OmegaParams {
    pub r: i64,
    pub s: i64,
    pub fields: Vec<i64>,
    pub x: Rat,
}

impl OmegaParams {
    /// The modular constraint `sum fields = (2g - 2 + n) s mod r`.
    pub fn check(&self, g: usize, n: usize) -> Result<(), Error> {
        if self.r <= 0 {
            return Err(Error::InvalidInput("r must be positive".into()));
        }
        if self.fields.len() != n {
            return Err(Error::ArityMismatch {
                expected: n,
                got: self.fields.len(),
            });
        }
        let total: i64 = self.fields.iter().sum();
        let target = (2 * g as i64 - 2 + n as i64) * self.s;
        if (total - target).rem_euclid(self.r) != 0 {
            return Err(Error::ModularConstraintViolated);
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// series helpers
// ---------------------------------------------------------------------------

/// exp of a power series with zero constant term, truncated at `maxdeg`.
fn series_exp(coeffs: &[Rat], maxdeg: usize) -> Vec<Rat> {
    // coeffs[m] is the coefficient of t^m, coeffs[0] = 0
    let mut out = vec![Rat::zero(); maxdeg + 1];
    out[0] = Rat::one();
    // exp' = s' exp  =>  (k+1) out[k+1] = sum_{j} (j+1) coeffs[j+1] out[k-j]
    for k in 0..maxdeg {
        let mut acc = Rat::zero();
        for j in 0..=k {
            if j + 1 < coeffs.len() {
                acc += rat_int((j + 1) as i64) * &coeffs[j + 1] * &out[k - j];
            }
        }
        out[k + 1] = acc / rat_int((k + 1) as i64);
    }
    out
}

/// The exponent series of a leg factor: `sum_m (-1)^{m-1} x^m
/// B_{m+1}(q)/(m(m+1)) t^m`.
fn leg_exponent_series(q: &Rat, x: &Rat, maxdeg: usize) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); maxdeg + 1];
    let mut xp = Rat::one();
    for m in 1..=maxdeg {
        xp *= x;
        let sign = if (m - 1) % 2 == 0 { Rat::one() } else { -Rat::one() };
        out[m] = sign * &xp * bernoulli_value(m + 1, q)
            / (rat_int(m as i64) * rat_int(m as i64 + 1));
    }
    out
}

type BiPoly = BTreeMap<(usize, usize), Rat>;

fn bipoly_mul(a: &BiPoly, b: &BiPoly, maxdeg: usize) -> BiPoly {
    let mut out = BiPoly::new();
    for ((i1, j1), v1) in a {
        for ((i2, j2), v2) in b {
            let (i, j) = (i1 + i2, j1 + j2);
            if i + j > maxdeg {
                continue;
            }
            let e = out.entry((i, j)).or_insert_with(Rat::zero);
            *e += v1 * v2;
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

fn bipoly_exp(s: &BiPoly, maxdeg: usize) -> BiPoly {
    let mut out = BiPoly::new();
    out.insert((0, 0), Rat::one());
    let mut term = BiPoly::new();
    term.insert((0, 0), Rat::one());
    let min_order = s.keys().map(|(i, j)| i + j).min().unwrap_or(maxdeg + 1);
    if min_order == 0 {
        panic!("series must have zero constant term");
    }
    let mut k = 1usize;
    loop {
        if k * min_order > maxdeg {
            break;
        }
        term = bipoly_mul(&term, s, maxdeg);
        let inv = Rat::from_integer(factorial(k)).recip();
        for (key, v) in &term {
            let e = out.entry(*key).or_insert_with(Rat::zero);
            *e += v * &inv;
        }
        k += 1;
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// The edge kernel `(1 - exp(sum_m c_m [u^m - (-v)^m])) / (u + v)` with
/// `c_m = (-1)^{m-1} x^m B_{m+1}(w/r)/(m(m+1))`, as an exact bivariate
/// polynomial: the numerator vanishes along `u + v = 0`, so the division has
/// zero remainder (asserted).
fn edge_kernel(weight_q: &Rat, x: &Rat, maxdeg: usize) -> BiPoly {
    let coeffs = leg_exponent_series(weight_q, x, maxdeg + 1);
    let mut s = BiPoly::new();
    for (m, c) in coeffs.iter().enumerate().skip(1) {
        if c.is_zero() {
            continue;
        }
        // c_m (u^m - (-v)^m)
        let e = s.entry((m, 0)).or_insert_with(Rat::zero);
        *e += c;
        let sign = if m % 2 == 0 { Rat::one() } else { -Rat::one() };
        let e = s.entry((0, m)).or_insert_with(Rat::zero);
        *e -= sign * c;
    }
    s.retain(|_, v| !v.is_zero());
    let mut numer = bipoly_exp(&s, maxdeg + 1);
    // 1 - exp(...)
    for v in numer.values_mut() {
        *v = -v.clone();
    }
    let e = numer.entry((0, 0)).or_insert_with(Rat::zero);
    *e += Rat::one();
    numer.retain(|_, v| !v.is_zero());
    // divide by (u + v): peel the terms of highest u-degree
    let mut quot = BiPoly::new();
    let mut rem = numer;
    while let Some((&(i, j), _)) = rem.iter().max_by_key(|((i, _), _)| *i) {
        let c = rem.remove(&(i, j)).unwrap();
        assert!(i >= 1, "edge kernel division has nonzero remainder");
        quot.insert((i - 1, j), c.clone());
        // subtract c * u^{i-1} v^j * (u + v): the u-term cancels, push v-term
        let e = rem.entry((i - 1, j + 1)).or_insert_with(Rat::zero);
        *e -= c;
        if e.is_zero() {
            rem.remove(&(i - 1, j + 1));
        }
    }
    quot.retain(|(i, j), _| i + j <= maxdeg);
    quot
}

/// kappa-exponential of a vertex factor: multisets of kappa indices with the
/// coefficient `prod c_m^{j_m} / j_m!`, truncated at `maxdeg`.
fn kappa_exp_terms(coeffs: &[Rat], maxdeg: usize) -> Vec<(usize, Vec<usize>, Rat)> {
    // coeffs[m] is the kappa_m exponent coefficient (m >= 1)
    let mut out = vec![(0usize, Vec::new(), Rat::one())];
    for (m, c) in coeffs.iter().enumerate().skip(1) {
        if c.is_zero() {
            continue;
        }
        let mut next = Vec::new();
        for (deg, multiset, coef) in &out {
            let mut power = Rat::one();
            let mut j = 0usize;
            loop {
                let newdeg = deg + m * j;
                if newdeg > maxdeg {
                    break;
                }
                let mut ms = multiset.clone();
                for _ in 0..j {
                    ms.push(m);
                }
                let c2 = coef.clone() * &power / Rat::from_integer(factorial(j));
                next.push((newdeg, ms, c2));
                j += 1;
                power *= c;
            }
        }
        out = next;
    }
    out
}

// ---------------------------------------------------------------------------
// the graph sum
// ---------------------------------------------------------------------------

fn omega_cache() -> &'static Mutex<HashMap<String, Arc<StrataClass>>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<StrataClass>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The compact-type truncation of `Omega^{[x]}_{g,n}(r, s; fields)` up to
/// degree `max_degree`: the weighted stable-graph sum restricted to trees,
/// with edge weights determined by the leg decorations mod `r`.
///
/// Exact as a class in genus 0; in higher genus callers must multiply by the
/// top Hodge class (or restrict to compact type) for honest statements.
pub fn omega_ct(
    params: &OmegaParams,
    g: usize,
    n: usize,
    max_degree: usize,
) -> Result<Arc<StrataClass>, Error> {
    params.check(g, n)?;
    if n == 0 {
        return Err(Error::InvalidInput(
            "omega_ct needs n >= 1; the n = 0 classes use the closed form".into(),
        ));
    }
    let key = format!(
        "{}|{}|{:?}|{}|{}|{}|{}",
        params.r, params.s, params.fields, params.x, g, n, max_degree
    );
    if let Some(c) = omega_cache().lock().unwrap().get(&key) {
        return Ok(c.clone());
    }

    let dim = (3 * g as i64 - 3 + n as i64).max(0) as usize;
    let maxdeg = max_degree.min(dim);
    let r = params.r;
    let rq = rat_int(r);
    let mut total = StrataClass::zero(g, n, 0);
    let global = rat_pow(&rq, 2 * g as i64 - 1);
    let s_over_r = rat_int(params.s) / &rq;

    for tree in crate::strata::enumerate_stable_trees(g, n) {
        let ne = tree.edges.len();
        if ne > maxdeg {
            continue;
        }
        let aut = tree.aut_order();
        let pref = global.clone() / rat_int(aut as i64);

        // edge weights: cutting edge e, the half on the `b` side carries
        // minus the field sum of the b-component, mod r
        let adj = {
            let mut adj = vec![Vec::new(); tree.vertices.len()];
            for (i, e) in tree.edges.iter().enumerate() {
                adj[e.a].push((i, e.b));
                adj[e.b].push((i, e.a));
            }
            adj
        };
        let mut w_a_side: Vec<i64> = Vec::with_capacity(ne);
        for (ei, e) in tree.edges.iter().enumerate() {
            let mut comp = vec![false; tree.vertices.len()];
            comp[e.b] = true;
            let mut stack = vec![e.b];
            while let Some(u) = stack.pop() {
                for &(ej, w) in &adj[u] {
                    if ej != ei && !comp[w] {
                        comp[w] = true;
                        stack.push(w);
                    }
                }
            }
            let mut field_sum = 0i64;
            for (i, &at) in tree.leg_at.iter().enumerate() {
                if comp[at] {
                    field_sum += params.fields[i];
                }
            }
            // b side carries -field_sum mod r; a side the complement
            let wb = (-field_sum).rem_euclid(r);
            let wa = (r - wb).rem_euclid(r);
            w_a_side.push(wa);
        }

        // component expansions
        let budget = maxdeg - ne;
        // legs
        let leg_series: Vec<Vec<Rat>> = (0..n)
            .map(|i| {
                let q = rat_int(params.fields[i]) / &rq;
                series_exp(&leg_exponent_series(&q, &params.x, budget), budget)
            })
            .collect();
        // vertices
        let vert_terms: Vec<(usize, Vec<usize>, Rat)> = {
            let mut coeffs = leg_exponent_series(&s_over_r, &params.x, budget);
            for c in coeffs.iter_mut() {
                *c = -c.clone();
            }
            kappa_exp_terms(&coeffs, budget)
        };
        // edges
        let edge_terms: Vec<Vec<((usize, usize), Rat)>> = (0..ne)
            .map(|ei| {
                let wq = rat_int(w_a_side[ei]) / &rq;
                edge_kernel(&wq, &params.x, budget)
                    .into_iter()
                    .collect::<Vec<_>>()
            })
            .collect();

        combine_tree(
            &tree,
            budget,
            &leg_series,
            &vert_terms,
            &edge_terms,
            &pref,
            &mut total,
        );
    }

    let arc = Arc::new(total);
    omega_cache().lock().unwrap().insert(key, arc.clone());
    Ok(arc)
}

/// Distribute the degree budget over leg series, vertex kappa-exponentials,
/// and edge kernels of one tree, accumulating decorated strata.
fn combine_tree(
    tree: &DecoratedStratum,
    budget: usize,
    leg_series: &[Vec<Rat>],
    vert_terms: &[(usize, Vec<usize>, Rat)],
    edge_terms: &[Vec<((usize, usize), Rat)>],
    pref: &Rat,
    out: &mut StrataClass,
) {
    let n = tree.n_legs;
    let nv = tree.vertices.len();
    let ne = tree.edges.len();
    let nslots = n + nv + ne;
    let mut cur = tree.clone();

    fn rec(
        slot: usize,
        left: usize,
        n: usize,
        nv: usize,
        nslots: usize,
        leg_series: &[Vec<Rat>],
        vert_terms: &[(usize, Vec<usize>, Rat)],
        edge_terms: &[Vec<((usize, usize), Rat)>],
        cur: &mut DecoratedStratum,
        coef: &Rat,
        pref: &Rat,
        out: &mut StrataClass,
    ) {
        if slot == nslots {
            out.add_term(cur.clone(), MultiPoly::constant(0, coef * pref));
            return;
        }
        if slot < n {
            for (d, c) in leg_series[slot].iter().enumerate().take(left + 1) {
                if c.is_zero() {
                    continue;
                }
                cur.leg_psi[slot] = d;
                rec(
                    slot + 1, left - d, n, nv, nslots, leg_series, vert_terms, edge_terms,
                    cur, &(coef.clone() * c), pref, out,
                );
            }
            cur.leg_psi[slot] = 0;
        } else if slot < n + nv {
            let v = slot - n;
            for (d, ms, c) in vert_terms {
                if *d > left || c.is_zero() {
                    continue;
                }
                cur.vertices[v].kappa = ms.clone();
                rec(
                    slot + 1, left - d, n, nv, nslots, leg_series, vert_terms, edge_terms,
                    cur, &(coef.clone() * c), pref, out,
                );
            }
            cur.vertices[v].kappa = Vec::new();
        } else {
            let ei = slot - n - nv;
            for ((i, j), c) in &edge_terms[ei] {
                if i + j > left || c.is_zero() {
                    continue;
                }
                cur.edges[ei].psi_a = *i;
                cur.edges[ei].psi_b = *j;
                rec(
                    slot + 1, left - i - j, n, nv, nslots, leg_series, vert_terms, edge_terms,
                    cur, &(coef.clone() * c), pref, out,
                );
            }
            cur.edges[ei].psi_a = 0;
            cur.edges[ei].psi_b = 0;
        }
    }

    rec(
        0,
        budget,
        n,
        nv,
        nslots,
        leg_series,
        vert_terms,
        edge_terms,
        &mut cur,
        &Rat::one(),
        pref,
        out,
    );
}

// ---------------------------------------------------------------------------
// lambda classes
// ---------------------------------------------------------------------------

/// Tree-supported representatives of `lambda_1, ..., lambda_g` on
/// `Mbar_{g,N}`, exact as classes on the full moduli space.
#[derive(Clone, Debug)]
pub struct MumfordExpansion {
    pub genus: usize,
    pub n_legs: usize,
    /// `lambda[i]` is the representative of `lambda_{i+1}`.
    pub lambda: Vec<StrataClass>,
}

impl MumfordExpansion {
    /// The representative of `lambda_i` (`lambda_0` is the fundamental class).
    pub fn lambda(&self, i: usize) -> StrataClass {
        if i == 0 {
            StrataClass::fundamental(self.genus, self.n_legs, 0)
        } else {
            self.lambda[i - 1].clone()
        }
    }

    /// `Lambda_g^{[a]} = sum_i (-1)^i lambda_i a^i` for a rational `a`.
    pub fn capital_lambda(&self, a: &Rat) -> StrataClass {
        let mut acc = StrataClass::fundamental(self.genus, self.n_legs, 0);
        let mut power = Rat::one();
        for i in 1..=self.genus {
            power *= a;
            let sign = if i % 2 == 0 { Rat::one() } else { -Rat::one() };
            acc = acc.add(&self.lambda(i).scale_rat(&(sign * &power)));
        }
        acc
    }
}

fn lambda_cache() -> &'static Mutex<HashMap<(usize, usize), Arc<MumfordExpansion>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<MumfordExpansion>>>> =
        OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Exact tree-supported lambda representatives on `Mbar_{g,N}`, `g <= 2`,
/// `N >= 1`.
///
/// In genus one, `lambda_1 = psi_1 - sum_{S ni 1, |S| >= 2} D_{0,S}` (the
/// forgetful pullback of `psi` on `Mbar_{1,1}`). In genus two the base case
/// on `Mbar_{2,1}` comes from the divisor relations `12 lambda_1 = kappa_1 -
/// psi_1 + delta_irr + [D_1]` and `10 lambda_1 = delta_irr + 2 [D_1]`, which
/// eliminate the irreducible divisor: `lambda_1 = (kappa_1 - psi_1 - [D_1])/2`
/// with `D_1` the genus-split divisor; `lambda_2 = lambda_1^2 / 2`. Higher
/// `N` is the iterated forgetful pullback.
pub fn mumford_lambda(g: usize, n_legs: usize) -> Result<Arc<MumfordExpansion>, Error> {
    if g > 2 {
        return Err(Error::UnsupportedGenus(g));
    }
    if n_legs == 0 {
        return Err(Error::InvalidInput(
            "lambda representatives need at least one marked point".into(),
        ));
    }
    if let Some(m) = lambda_cache().lock().unwrap().get(&(g, n_legs)) {
        return Ok(m.clone());
    }
    let exp = match g {
        0 => MumfordExpansion {
            genus: 0,
            n_legs,
            lambda: vec![],
        },
        1 => {
            let mut l1 = StrataClass::fundamental(1, n_legs, 0).psi_mult(1, 1);
            // subtract every genus-0 bubble containing leg 1 and at least one
            // other leg
            for mask in 0..(1u64 << (n_legs - 1)) {
                let others: Vec<usize> =
                    (2..=n_legs).filter(|i| mask & (1 << (i - 2)) != 0).collect();
                if others.is_empty() {
                    continue;
                }
                let mut leg_at = vec![0usize; n_legs];
                leg_at[0] = 1;
                for &l in &others {
                    leg_at[l - 1] = 1;
                }
                l1.add_term(
                    DecoratedStratum {
                        genus: 1,
                        n_legs,
                        vertices: vec![
                            StratumVertex { genus: 1, kappa: vec![] },
                            StratumVertex { genus: 0, kappa: vec![] },
                        ],
                        leg_at,
                        leg_psi: vec![0; n_legs],
                        edges: vec![StratumEdge { a: 0, b: 1, psi_a: 0, psi_b: 0 }],
                    },
                    MultiPoly::constant(0, -Rat::one()),
                );
            }
            MumfordExpansion {
                genus: 1,
                n_legs,
                lambda: vec![l1],
            }
        }
        2 => {
            // base on Mbar_{2,1}
            let mut l1 = StrataClass::zero(2, 1, 0);
            let half = Rat::new(1.into(), 2.into());
            let mut kappa_term = DecoratedStratum::trivial(2, 1);
            kappa_term.vertices[0].kappa.push(1);
            l1.add_term(kappa_term, MultiPoly::constant(0, half.clone()));
            let mut psi_term = DecoratedStratum::trivial(2, 1);
            psi_term.leg_psi[0] = 1;
            l1.add_term(psi_term, MultiPoly::constant(0, -half.clone()));
            l1.add_term(
                DecoratedStratum {
                    genus: 2,
                    n_legs: 1,
                    vertices: vec![
                        StratumVertex { genus: 1, kappa: vec![] },
                        StratumVertex { genus: 1, kappa: vec![] },
                    ],
                    leg_at: vec![0],
                    leg_psi: vec![0],
                    edges: vec![StratumEdge { a: 0, b: 1, psi_a: 0, psi_b: 0 }],
                },
                MultiPoly::constant(0, -half.clone()),
            );
            let l2 = mul_classes(&l1, &l1).scale_rat(&half);
            let (mut l1n, mut l2n) = (l1, l2);
            for _ in 1..n_legs {
                l1n = pullback_append(&l1n);
                l2n = pullback_append(&l2n);
            }
            MumfordExpansion {
                genus: 2,
                n_legs,
                lambda: vec![l1n, l2n],
            }
        }
        _ => unreachable!(),
    };
    let arc = Arc::new(exp);
    lambda_cache()
        .lock()
        .unwrap()
        .insert((g, n_legs), arc.clone());
    Ok(arc)
}

// ---------------------------------------------------------------------------
// vertex classes
// ---------------------------------------------------------------------------

/// `Psi(v) = prod_i 1/(1 - flow_i psi_i)`: the truncated geometric-series
/// product over the positive half-edges, with `n_neg` trailing undecorated
/// points. Flows may be symbolic.
pub fn vertex_psi(
    genus: usize,
    flows: &[MultiPoly],
    n_neg: usize,
    max_degree: usize,
    arity: usize,
) -> StrataClass {
    let n = flows.len() + n_neg;
    let dim = (3 * genus as i64 - 3 + n as i64).max(0) as usize;
    let maxdeg = max_degree.min(dim);
    let mut out = StrataClass::zero(genus, n, arity);
    let k = flows.len();
    if k == 0 {
        out.add_term(DecoratedStratum::trivial(genus, n), MultiPoly::one(arity));
        return out;
    }
    let mut expo = vec![0usize; k];
    loop {
        let total: usize = expo.iter().sum();
        if total <= maxdeg {
            let mut s = DecoratedStratum::trivial(genus, n);
            let mut coef = MultiPoly::one(arity);
            for (i, &e) in expo.iter().enumerate() {
                s.leg_psi[i] = e;
                coef = coef.mul(&flows[i].pow(e));
            }
            out.add_term(s, coef);
        }
        let mut i = 0;
        loop {
            if i == k {
                return out;
            }
            expo[i] += 1;
            if expo[i] <= maxdeg {
                break;
            }
            expo[i] = 0;
            i += 1;
        }
    }
}

fn vertex_cache() -> &'static Mutex<HashMap<(usize, Vec<i64>, usize, usize), Arc<StrataClass>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, Vec<i64>, usize, usize), Arc<StrataClass>>>> =
        OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The vertex decoration `Omega(v) = a(v)^{1-g} lambda_g
/// Omega^{[a(v)]}_{g,|H|}(a(v), 0; -a(h_1), ..., -a(h_k), 0, ..., 0)` for
/// concrete positive integer flows.
///
/// Genus-0 vertices return `Psi(v)` directly (the two classes agree, and in
/// genus 0 the tree sum is the whole formula); higher genus runs the graph
/// sum and multiplies by the exact lambda representative. Desk-scale cap at
/// genus 2.
pub fn vertex_omega(
    genus: usize,
    flows: &[i64],
    n_neg: usize,
    max_degree: usize,
) -> Result<Arc<StrataClass>, Error> {
    let a: i64 = flows.iter().sum();
    if a <= 0 {
        return Err(Error::NonpositiveFlow(a));
    }
    let key = (genus, flows.to_vec(), n_neg, max_degree);
    if let Some(c) = vertex_cache().lock().unwrap().get(&key) {
        return Ok(c.clone());
    }
    let cls = if genus == 0 {
        let flow_polys: Vec<MultiPoly> = flows
            .iter()
            .map(|&f| MultiPoly::constant(0, rat_int(f)))
            .collect();
        vertex_psi(0, &flow_polys, n_neg, max_degree, 0)
    } else {
        vertex_omega_generic(genus, flows, n_neg, max_degree)?
    };
    let arc = Arc::new(cls);
    vertex_cache().lock().unwrap().insert(key, arc.clone());
    Ok(arc)
}

/// The generic route for `Omega(v)` through the graph sum, valid for any
/// genus up to the desk-scale cap; used directly in genus >= 1 and as the
/// comparison path for the genus-0 shortcut.
pub fn vertex_omega_generic(
    genus: usize,
    flows: &[i64],
    n_neg: usize,
    max_degree: usize,
) -> Result<StrataClass, Error> {
    let a: i64 = flows.iter().sum();
    if a <= 0 {
        return Err(Error::NonpositiveFlow(a));
    }
    if genus > 2 {
        return Err(Error::UnsupportedGenus(genus));
    }
    let n = flows.len() + n_neg;
    let mut fields: Vec<i64> = flows.iter().map(|&f| -f).collect();
    fields.extend(std::iter::repeat(0).take(n_neg));
    let params = OmegaParams {
        r: a,
        s: 0,
        fields,
        x: rat_int(a),
    };
    let dim = (3 * genus as i64 - 3 + n as i64).max(0) as usize;
    let maxdeg = max_degree.min(dim);
    let omega = omega_ct(&params, genus, n, maxdeg)?;
    if genus == 0 {
        // a^{1-0} * Omega
        return Ok(omega.scale_rat(&rat_int(a)));
    }
    let lam = mumford_lambda(genus, n)?;
    let prod = mul_classes(&omega, &lam.lambda(genus));
    Ok(prod.scale_rat(&rat_pow(&rat_int(a), 1 - genus as i64)))
}

/// The vertex class for an `n = 0` flavored vertex (no positive half-edges):
/// the closed form `a^g lambda_g Lambda_g^{[a]}` with a formal flow variable
/// `a` (arity-1 coefficients).
pub fn vertex_omega_formal_n0(genus: usize, n_neg: usize) -> Result<StrataClass, Error> {
    if genus > 2 {
        return Err(Error::UnsupportedGenus(genus));
    }
    let n = n_neg;
    if n == 0 {
        return Err(Error::InvalidInput("vertex needs at least one point".into()));
    }
    let mut out = StrataClass::zero(genus, n, 1);
    if genus == 0 {
        out.add_term(DecoratedStratum::trivial(0, n), MultiPoly::one(1));
        return Ok(out);
    }
    let lam = mumford_lambda(genus, n)?;
    let a = MultiPoly::var(1, 0);
    for i in 0..=genus {
        let sign = if i % 2 == 0 { Rat::one() } else { -Rat::one() };
        let cls = mul_classes(&lam.lambda(genus), &lam.lambda(i)).scale_rat(&sign);
        out = out.add(&cls.cast_arity(1).scale_poly(&a.pow(genus + i)));
    }
    Ok(out)
}

/// Closed form of the one-positive-flow vertex class: `a^g lambda_g
/// Lambda_g^{[a]} / (1 - a psi_1)` on `Mbar_{g, 1+m}` at a concrete flow.
pub fn reduction_to_lambda_closed(
    genus: usize,
    a: i64,
    m: usize,
    max_degree: usize,
) -> Result<StrataClass, Error> {
    if genus > 2 {
        return Err(Error::UnsupportedGenus(genus));
    }
    let n = 1 + m;
    let dim = (3 * genus as i64 - 3 + n as i64).max(0) as usize;
    let maxdeg = max_degree.min(dim);
    let lam = mumford_lambda(genus, n)?;
    let aq = rat_int(a);
    let base = mul_classes(&lam.lambda(genus), &lam.capital_lambda(&aq))
        .scale_rat(&rat_pow(&aq, genus as i64));
    // multiply by the geometric series in a psi_1
    let mut out = StrataClass::zero(genus, n, 0);
    let mut power = Rat::one();
    for k in 0..=maxdeg {
        out = out.add(&base.psi_mult(1, k).scale_rat(&power));
        power *= &aq;
    }
    Ok(out.truncate(maxdeg))
}

impl StrataClass {
    /// Reinterpret constant coefficients at a different polynomial arity.
    pub fn cast_arity(&self, arity: usize) -> StrataClass {
        let mut out = StrataClass::zero(self.genus, self.n_legs, arity);
        for (s, c) in self.terms() {
            let v = c
                .as_constant()
                .expect("cast_arity needs constant coefficients");
            out.add_term(s.clone(), MultiPoly::constant(arity, v));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rat;
    use crate::integrate::{
        hodge_pairing_on_stratum, integrate_class, pairing_equal, pairing_profile, Verdict,
    };
    use crate::strata::{mul_by_stratum, psi_boundary_generators};

    #[test]
    fn degree_zero_part_is_r_power() {
        let params = OmegaParams {
            r: 5,
            s: 0,
            fields: vec![-2, -3],
            x: rat_int(5),
        };
        let cls = omega_ct(&params, 1, 2, 2).unwrap();
        let deg0 = cls.graded_part(0);
        assert_eq!(
            deg0,
            StrataClass::fundamental(1, 2, 0).scale_rat(&rat_int(5)) // r^{2g-1} = 5
        );
    }

    #[test]
    fn modular_constraint_enforced() {
        let params = OmegaParams {
            r: 5,
            s: 0,
            fields: vec![1, 1],
            x: rat_int(1),
        };
        assert!(matches!(
            omega_ct(&params, 1, 2, 1),
            Err(Error::ModularConstraintViolated)
        ));
    }

    #[test]
    fn shift_identities_hold_formally() {
        // all three lines of the shift lemma, as canonical class equality
        for (g, n, r, s, fields) in [
            (1usize, 2usize, 4i64, 0i64, vec![-1i64, -3]),
            (0, 3, 3, 0, vec![1, 1, 1]),
            (2, 1, 3, 0, vec![6]),
        ] {
            let dim = 3 * g + n - 3;
            let x = rat(2, 1);
            let base = omega_ct(
                &OmegaParams { r, s, fields: fields.clone(), x: x.clone() },
                g,
                n,
                dim,
            )
            .unwrap();
            // (1) a_1 -> a_1 + r multiplies by (1 + x a_1/r psi_1)
            let mut shifted_fields = fields.clone();
            shifted_fields[0] += r;
            let shifted = omega_ct(
                &OmegaParams { r, s, fields: shifted_fields, x: x.clone() },
                g,
                n,
                dim,
            )
            .unwrap();
            let factor_coeff = x.clone() * rat_int(fields[0]) / rat_int(r);
            let expect = base
                .add(&base.psi_mult(1, 1).scale_rat(&factor_coeff))
                .truncate(dim);
            assert_eq!(*shifted, expect, "shift fails at (g,n)=({g},{n})");
            // (2) s = 0 equals s = r when the constraint allows both
            let total: i64 = fields.iter().sum();
            let target = (2 * g as i64 - 2 + n as i64) * r;
            if (total - target).rem_euclid(r) == 0 {
                let s_r = omega_ct(
                    &OmegaParams { r, s: r, fields: fields.clone(), x: x.clone() },
                    g,
                    n,
                    dim,
                )
                .unwrap();
                assert_eq!(*s_r, *base, "s swap fails at (g,n)=({g},{n})");
            }
            // (3) a field 0 equals a field r
            let mut with_zero = fields.clone();
            with_zero[0] = 0;
            let mut with_r = fields.clone();
            with_r[0] = r;
            let t0: i64 = with_zero.iter().sum();
            if (t0 - (2 * g as i64 - 2 + n as i64) * s).rem_euclid(r) == 0 {
                let c0 = omega_ct(
                    &OmegaParams { r, s, fields: with_zero, x: x.clone() },
                    g,
                    n,
                    dim,
                )
                .unwrap();
                let cr = omega_ct(
                    &OmegaParams { r, s, fields: with_r, x: x.clone() },
                    g,
                    n,
                    dim,
                )
                .unwrap();
                assert_eq!(*c0, *cr, "0 <-> r swap fails at (g,n)=({g},{n})");
            }
        }
    }

    #[test]
    fn lambda_1_on_m11_integrates_to_1_over_24() {
        let lam = mumford_lambda(1, 1).unwrap();
        let v = integrate_class(&lam.lambda(1)).unwrap();
        assert_eq!(v.as_constant().unwrap(), rat(1, 24));
    }

    #[test]
    fn lambda_reps_match_hodge_oracle() {
        // every pairing of the representative against the generating set
        // equals the honest Hodge integral
        for (g, n, idx) in [
            (1usize, 1usize, 1usize),
            (1, 2, 1),
            (1, 3, 1),
            (2, 1, 1),
            (2, 1, 2),
            (2, 2, 1),
            (2, 2, 2),
        ] {
            let lam = mumford_lambda(g, n).unwrap();
            let rep = lam.lambda(idx);
            let dim = 3 * g - 3 + n;
            let comp = dim - idx;
            for y in psi_boundary_generators(g, n, comp).iter() {
                let lhs = integrate_class(&mul_by_stratum(&rep, y))
                    .unwrap()
                    .as_constant()
                    .unwrap();
                let rhs = hodge_pairing_on_stratum(y, &[idx]);
                assert_eq!(lhs, rhs, "lambda_{idx} rep wrong on (g,n)=({g},{n}) at {y}");
            }
        }
    }

    #[test]
    fn lambda_g_squared_pairs_to_zero() {
        for (g, n) in [(1usize, 2usize), (2, 1), (2, 2)] {
            let lam = mumford_lambda(g, n).unwrap();
            let sq = mul_classes(&lam.lambda(g), &lam.lambda(g));
            let dim = 3 * g - 3 + n;
            if 2 * g > dim {
                continue;
            }
            for d in (2 * g)..=dim {
                assert!(
                    pairing_profile(&sq, d).unwrap().is_empty(),
                    "lambda_{g}^2 pairs nonzero on (g,n)=({g},{n})"
                );
            }
        }
    }

    #[test]
    fn golden_hodge_pairing_on_m21() {
        // int_{Mbar_{2,1}} lambda_1 lambda_2 psi_1 = 2 int_{Mbar_2}
        // lambda_1 lambda_2 = 1/2880
        let lam = mumford_lambda(2, 1).unwrap();
        let prod = mul_classes(&lam.lambda(1), &lam.lambda(2)).psi_mult(1, 1);
        let v = integrate_class(&prod).unwrap().as_constant().unwrap();
        assert_eq!(v, rat(1, 2880));
    }

    #[test]
    fn genus1_lambda_matches_pullback_route() {
        // closed form on Mbar_{1,3} equals the iterated forgetful pullback of
        // psi on Mbar_{1,1}
        let closed = mumford_lambda(1, 3).unwrap().lambda(1);
        let mut pulled = StrataClass::fundamental(1, 1, 0).psi_mult(1, 1);
        pulled = pullback_append(&pulled);
        pulled = pullback_append(&pulled);
        assert_eq!(closed, pulled);
    }

    #[test]
    fn vertex_psi_examples() {
        // all flows zero: fundamental class
        let zero = vec![MultiPoly::zero(0); 2];
        let cls = vertex_psi(1, &zero, 1, 3, 0);
        assert_eq!(cls, StrataClass::fundamental(1, 3, 0));
        // one positive half-edge: degree-k part is flow^k psi^k
        let flows = vec![MultiPoly::constant(0, rat_int(3))];
        let cls = vertex_psi(0, &flows, 3, 1, 0);
        let deg1 = cls.graded_part(1);
        assert_eq!(
            deg1,
            StrataClass::fundamental(0, 4, 0)
                .psi_mult(1, 1)
                .scale_rat(&rat_int(3))
        );
    }

    #[test]
    fn genus0_generic_path_matches_vertex_psi_by_pairing() {
        // Omega(v) = Psi(v) on genus-0 vertices: certified by the perfect
        // genus-0 pairing
        let flows = [2i64, 1];
        let generic = vertex_omega_generic(0, &flows, 2, 1).unwrap();
        let psi = vertex_omega(0, &flows, 2, 1).unwrap();
        assert_eq!(pairing_equal(&generic, &psi).unwrap(), Verdict::Certified);
    }

    #[test]
    fn reduction_to_lambda_holds_by_pairing_g1() {
        // one-flow vertex in genus 1 equals a^g lambda_1 Lambda_1^{[a]}/(1 - a psi_1)
        let a = 2i64;
        for m in 1..=2usize {
            let generic = vertex_omega_generic(1, &[a], m, 6).unwrap();
            let closed = reduction_to_lambda_closed(1, a, m, 6).unwrap();
            let diff = generic.sub(&closed);
            let dim = 3 - 3 + (1 + m);
            for d in 0..=dim {
                assert!(
                    pairing_profile(&diff, d).unwrap().is_empty(),
                    "reduction fails at m={m}, degree {d}"
                );
            }
        }
    }

    #[test]
    fn kappa_exp_and_series_helpers() {
        // series_exp of log(1+t) ~ t - t^2/2 + t^3/3 gives 1 + t
        let coeffs = vec![Rat::zero(), rat_int(1), rat(-1, 2), rat(1, 3)];
        let e = series_exp(&coeffs, 3);
        assert_eq!(e[0], rat_int(1));
        assert_eq!(e[1], rat_int(1));
        assert_eq!(e[2], Rat::zero());
        assert_eq!(e[3], Rat::zero());
        // low-order term of the edge kernel: (1 - exp(c_1(u+v) + ...))/(u+v)
        // starts at -c_1
        let k = edge_kernel(&rat(1, 2), &Rat::one(), 2);
        let c1 = bernoulli_value(2, &rat(1, 2)) / rat_int(2);
        assert_eq!(k.get(&(0, 0)).cloned().unwrap_or_else(Rat::zero), -c1);
    }
}
