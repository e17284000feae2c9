use std::sync::Arc;

use fracdiff_core::funcspace::{fourier, inverse_fourier, root_of_unity, CylFunction, Quotient};
use fracdiff_core::padic::Padic;
use fracdiff_core::tower::{build_unramified_tower, Tower, TowerSpec};
use fracdiff_core::vladimirov::{apply_hypersingular, apply_spectral, semigroup_apply};
use num_complex::Complex64;
use proptest::prelude::*;

fn sqrt2() -> Tower {
    Tower::new(TowerSpec::eisenstein_over_qp(2, &[-2, 0])).unwrap()
}

fn quotient(which: u8) -> (Tower, Arc<Quotient>) {
    let (t, n, l) = match which % 3 {
        0 => (Tower::new(TowerSpec::base(3)).unwrap(), 1, 3),
        1 => (build_unramified_tower(2, &[1, 2]).unwrap(), 2, 3),
        _ => (sqrt2(), 2, 5),
    };
    let q = Quotient::new(&t, n, l).unwrap();
    (t, q)
}

fn values(q: &Quotient, seed: &[f64]) -> Vec<Complex64> {
    (0..q.size()).map(|i| Complex64::new(seed[i % seed.len()], seed[(i * 7 + 3) % seed.len()] * (i as f64).sin())).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn roots_of_unity_have_modulus_one(r in 0u64..1 << 20, k in 0u32..20) {
        let m = 1u64 << k;
        let z = root_of_unity(r, m);
        prop_assert!((z.norm() - 1.0).abs() < 1e-15);
        prop_assert!((root_of_unity(r, m) * root_of_unity(m - r % m, m) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn fourier_round_trip(which in 0u8..3, seed in prop::collection::vec(-1.0f64..1.0, 8)) {
        let (_, q) = quotient(which);
        let f = CylFunction::new(q.clone(), values(&q, &seed)).unwrap();
        let back = inverse_fourier(&fourier(&f));
        for (a, b) in f.values.iter().zip(&back.values) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn routes_agree_and_are_linear(which in 0u8..3, alpha in 0.2f64..2.5, seed in prop::collection::vec(-1.0f64..1.0, 8), s in -3.0f64..3.0) {
        let (t, q) = quotient(which);
        let f = CylFunction::new(q.clone(), values(&q, &seed)).unwrap();
        let g = CylFunction::new(q.clone(), f.values.iter().map(|v| v * s + 1.0).collect()).unwrap();
        let (df, dg) = (apply_hypersingular(&t, alpha, &f).unwrap(), apply_hypersingular(&t, alpha, &g).unwrap());
        let sf = apply_spectral(alpha, &f).unwrap();
        for i in 0..q.size() {
            prop_assert!((df.values[i] - sf.values[i]).norm() < 1e-9);
            prop_assert!((dg.values[i] - df.values[i] * s).norm() < 1e-9);
        }
    }

    #[test]
    fn semigroup_preserves_mean_and_contracts(which in 0u8..3, t in 0.01f64..3.0, seed in prop::collection::vec(-1.0f64..1.0, 8)) {
        let (_, q) = quotient(which);
        let f = CylFunction::new(q.clone(), values(&q, &seed)).unwrap();
        let g = semigroup_apply(t, 1.0, &f).unwrap();
        let mean = |h: &CylFunction| h.values.iter().sum::<Complex64>() / h.values.len() as f64;
        let l2 = |h: &CylFunction| h.values.iter().map(|v| v.norm_sqr()).sum::<f64>();
        prop_assert!((mean(&f) - mean(&g)).norm() < 1e-12);
        prop_assert!(l2(&g) <= l2(&f) + 1e-12);
    }

    #[test]
    fn valuation_is_additive(a in 1i64..5000, b in 1i64..5000) {
        let t = sqrt2();
        let ch = t.chain();
        let k = t.field_of(2).unwrap();
        let pi = t.uniformizer_pow(2, 1).unwrap();
        let x = ch.mul(&ch.from_int(k, a), &pi).unwrap();
        let y = ch.from_int(k, b);
        let vx = ch.valuation_normalized(&x).unwrap();
        let vy = ch.valuation_normalized(&y).unwrap();
        prop_assert_eq!(ch.valuation_normalized(&ch.mul(&x, &y).unwrap()).unwrap(), vx + vy);
        prop_assert_eq!(vy, 2 * b.trailing_zeros() as i64);
    }

    #[test]
    fn scalar_ring_identities(a in -100000i64..100000, b in -100000i64..100000) {
        let (x, y) = (Padic::from_int(3, 30, a), Padic::from_int(3, 30, b));
        prop_assert!(x.add(&y).sub(&y).eq_at_precision(&x));
        prop_assert!(x.mul(&y).eq_at_precision(&Padic::from_int(3, 30, a * b)));
    }
}
