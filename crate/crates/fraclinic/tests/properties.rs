use fraclinic::energy::hs_tilde_norm;
use fraclinic::frac_ops::{frac_laplacian, gagliardo_bilinear, gagliardo_sq, FracParams};
use fraclinic::grid::{reflect, Extension, Grid, GridFunction};
use fraclinic::potentials::{confinement_matrix, cutoff_tr, Params};
use proptest::prelude::*;

fn profile(vals: Vec<f64>) -> GridFunction {
    let g = Grid::new(3.0, vals.len()).unwrap();
    GridFunction::new(g, 1, vals, Extension::Zero).unwrap()
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 31)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cutoff_never_increases_seminorm(v in values(), r in 0.05f64..2.0, s in 0.05f64..0.95) {
        let p = FracParams::new(s).unwrap();
        let q = profile(v);
        let a = gagliardo_sq(&cutoff_tr(&q, r), &p);
        let b = gagliardo_sq(&q, &p);
        prop_assert!(a <= b * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn operator_is_symmetric(u in values(), v in values(), s in 0.05f64..0.95) {
        let p = FracParams::new(s).unwrap();
        let (u, v) = (profile(u), profile(v));
        let lu = frac_laplacian(&u, &p);
        let lv = frac_laplacian(&v, &p);
        let h = u.grid().h();
        let a: f64 = h * lu.values().iter().zip(v.values()).map(|(x, y)| x * y).sum::<f64>();
        let b: f64 = h * lv.values().iter().zip(u.values()).map(|(x, y)| x * y).sum::<f64>();
        let c = gagliardo_bilinear(&u, &v, &p);
        let scale = a.abs().max(b.abs()).max(1.0);
        prop_assert!((a - b).abs() <= 1e-10 * scale);
        prop_assert!((a - c).abs() <= 1e-10 * scale);
    }

    #[test]
    fn seminorm_is_reflection_invariant(v in values(), s in 0.05f64..0.95) {
        let p = FracParams::new(s).unwrap();
        let q = profile(v);
        let a = gagliardo_sq(&q, &p);
        let b = gagliardo_sq(&reflect(&q), &p);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }

    #[test]
    fn norm_triangle_inequality(u in values(), v in values(), s in 0.05f64..0.95) {
        let p = FracParams::new(s).unwrap();
        let l = confinement_matrix("quadratic-confinement", 1, &Params::new()).unwrap();
        let (u, v) = (profile(u), profile(v));
        let lhs = hs_tilde_norm(&u.axpby(1.0, &v, 1.0), &l, &p).unwrap();
        let rhs = hs_tilde_norm(&u, &l, &p).unwrap() + hs_tilde_norm(&v, &l, &p).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }
}
