//! Compact-type double ramification cycles paired with the top Hodge class.
//!
//! The engine builds `lambda_g DR_g(w)` as `lambda_g` times the divided
//! power `eta^g / g!` of the compact-type divisor
//! `eta = sum_i (w_i^2/2) psi_i - sum_{(h,S)} (w_S^2/2) delta_{h,S}`.
//! Pairing with `lambda_g` kills every class supported off compact type, so
//! the product is exact on the full moduli space. The correctness contract is
//! the cross-check suite: the localization relation instances, the genus-0
//! triviality, and the degree/homogeneity constraints.

use num::{One, Zero};

use crate::exactmath::{rat_int, MultiPoly, Rat};
use crate::omega::mumford_lambda;
use crate::strata::{mul_classes, DecoratedStratum, StrataClass, StratumEdge, StratumVertex};
use crate::Error;

/// A double ramification specification: a genus and zero-sum integer weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DRSpec {
    pub genus: usize,
    pub weights: Vec<i64>,
}

/// The compact-type divisor `eta` for symbolic weights on `Mbar_{g,N}`.
pub fn eta_class(genus: usize, weights: &[MultiPoly], arity: usize) -> StrataClass {
    let n = weights.len();
    let half = Rat::new(1.into(), 2.into());
    let mut out = StrataClass::zero(genus, n, arity);
    for (i, w) in weights.iter().enumerate() {
        let coef = w.mul(w).scale(&half);
        let mut s = DecoratedStratum::trivial(genus, n);
        s.leg_psi[i] = 1;
        out.add_term(s, coef);
    }
    // separating divisors, each once: compare (h, S) against its complement
    for h in 0..=genus {
        for mask in 0..(1u64 << n) {
            let side: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let co: Vec<usize> = (0..n).filter(|i| mask & (1 << i) == 0).collect();
            if (h, &side) > (genus - h, &co) {
                continue;
            }
            if (h, &side) == (genus - h, &co) {
                continue; // impossible for disjoint complements, defensive
            }
            // stability of both sides with the node
            if 2 * h + side.len() + 1 <= 2 || 2 * (genus - h) + co.len() + 1 <= 2 {
                continue;
            }
            let mut flow = MultiPoly::zero(arity);
            for &i in &side {
                flow = flow.add(&weights[i]);
            }
            let coef = flow.mul(&flow).scale(&half).neg();
            if coef.is_zero() {
                continue;
            }
            let mut leg_at = vec![1usize; n];
            for &i in &side {
                leg_at[i] = 0;
            }
            out.add_term(
                DecoratedStratum {
                    genus,
                    n_legs: n,
                    vertices: vec![
                        StratumVertex { genus: h, kappa: vec![] },
                        StratumVertex { genus: genus - h, kappa: vec![] },
                    ],
                    leg_at,
                    leg_psi: vec![0; n],
                    edges: vec![StratumEdge { a: 0, b: 1, psi_a: 0, psi_b: 0 }],
                },
                coef,
            );
        }
    }
    out
}

/// `lambda_g DR_g(w)` for symbolic zero-sum weights: pure degree `2g`,
/// homogeneous of degree `2g` in the weights. Desk-scale cap at genus 2.
pub fn lambda_dr_ct(genus: usize, weights: &[MultiPoly], arity: usize) -> Result<StrataClass, Error> {
    let mut total = MultiPoly::zero(arity);
    for w in weights {
        total = total.add(w);
    }
    if !total.is_zero() {
        return Err(Error::UnbalancedVertex);
    }
    if genus > 2 {
        return Err(Error::UnsupportedGenus(genus));
    }
    let n = weights.len();
    if genus == 0 {
        return Ok(StrataClass::fundamental(0, n, arity));
    }
    let lam = mumford_lambda(genus, n)?.lambda(genus).cast_arity(arity);
    let eta = eta_class(genus, weights, arity);
    let mut acc = lam;
    let mut fact = Rat::one();
    for k in 1..=genus {
        acc = mul_classes(&acc, &eta);
        fact *= rat_int(k as i64);
    }
    Ok(acc.scale_rat(&fact.recip()))
}

/// Integer-weight convenience wrapper with the zero-sum error of the spec.
pub fn lambda_dr_ct_int(genus: usize, weights: &[i64]) -> Result<StrataClass, Error> {
    let total: i64 = weights.iter().sum();
    if total != 0 {
        return Err(Error::NonZeroSum(total));
    }
    let polys: Vec<MultiPoly> = weights
        .iter()
        .map(|&w| MultiPoly::constant(0, rat_int(w)))
        .collect();
    lambda_dr_ct(genus, &polys, 0)
}

/// The vertex decoration `A(v) = lambda_{g(v)} DR_{g(v)}(flows, -sum)`, with
/// the unique negative half-edge as the last marked point.
pub fn vertex_a(
    genus: usize,
    pos_flows: &[MultiPoly],
    arity: usize,
) -> Result<StrataClass, Error> {
    let mut weights: Vec<MultiPoly> = pos_flows.to_vec();
    let mut total = MultiPoly::zero(arity);
    for w in pos_flows {
        total = total.add(w);
    }
    weights.push(total.neg());
    lambda_dr_ct(genus, &weights, arity)
}
