//! Two-sided p-adic principal units survive factor and recompose.

use weilsym_core::{birkhoff_factor, recompose, FactorOpts, FieldTag, LaurentSeries, Scalar};

fn unit(prime: u64, a: i64, b: i64) -> LaurentSeries {
    let field = FieldTag::padic(prime, 8).unwrap();
    // (1 + a t)(1 + b / t)
    let coeffs = [b, a * b + 1, a].map(|k| Scalar::from_i64(k, field)).to_vec();
    LaurentSeries::new(field, -1, coeffs, true, true).unwrap()
}

#[test]
fn recompose_matches_mod_p7() {
    for (prime, a, b) in [(5, 10, -15), (7, 7, 14), (5, -20, 5)] {
        let f = unit(prime, a, b);
        let fact = birkhoff_factor(&f, &FactorOpts::with_window(24)).unwrap();
        // tails below p^-8 sit under the tracked precision
        let back = recompose(&fact, 24, (prime as f64).powi(-8)).unwrap();
        for e in -4..=4 {
            let d = back.coeff(e).unwrap().try_sub(&f.coeff(e).unwrap()).unwrap();
            let Scalar::PAdic(d) = d else { unreachable!() };
            let small = d.is_exact_zero() || d.valuation().map_or(d.absolute_precision().unwrap() >= 7, |v| v >= 7);
            assert!(small, "p={prime} e={e}: {d}");
        }
    }
}
