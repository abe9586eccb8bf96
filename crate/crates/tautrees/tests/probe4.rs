use num::One;
use tautrees::exactmath::Rat;
use tautrees::integrate::pairing_profile;
use tautrees::omega::mumford_lambda;
use tautrees::strata::StrataClass;

// rebuild ASOmega / ASPsi diamond sums with a choice of sign convention
fn residual_sign_test(psi_version: bool, sign_includes_g1: bool, g: usize, r: usize) -> bool {
    use tautrees::assemble::test_support::{diamond_pub, lam_omega_12_pub};
    let d = 2 * g + r;
    let term = |gg: usize, leg: usize, deg: usize| -> StrataClass {
        if psi_version {
            StrataClass::fundamental(gg, 2, 0).psi_mult(leg, deg)
        } else {
            lam_omega_12_pub(gg, leg, 3 * gg + 2).unwrap().graded_part(deg)
        }
    };
    let mut out = term(g, 1, d).scale_rat(&-Rat::one());
    let sign_r = if r % 2 == 0 { Rat::one() } else { -Rat::one() };
    out = out.add(&term(g, 2, d).scale_rat(&sign_r));
    for g1 in 1..g {
        let g2 = g - g1;
        for a1 in 0..=(2 * g + r - 1) {
            let a2 = 2 * g + r - 1 - a1;
            let c1 = term(g1, 2, a1);
            let c2 = term(g2, 1, a2);
            let par = if sign_includes_g1 { g1 + a1 } else { a1 };
            let sign = if par % 2 == 0 { Rat::one() } else { -Rat::one() };
            out = out.add(&diamond_pub(g1, &c1, g2, &c2, 1).unwrap().scale_rat(&sign));
        }
    }
    let dim = 3 * g - 1;
    for dd in 0..=dim {
        if !pairing_profile(&out, dd).unwrap().is_empty() {
            return false;
        }
    }
    true
}

#[test]
fn probe_sign_conventions() {
    let _ = mumford_lambda(2, 2).unwrap();
    for r in 0..=1usize {
        println!(
            "ASOmega g=2 r={r}: with g1 {}, without g1 {}",
            residual_sign_test(false, true, 2, r),
            residual_sign_test(false, false, 2, r)
        );
        println!(
            "ASPsi   g=2 r={r}: with g1 {}, without g1 {}",
            residual_sign_test(true, true, 2, r),
            residual_sign_test(true, false, 2, r)
        );
    }
}
