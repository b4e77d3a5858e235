use proptest::prelude::*;
use renormgb::forms::Form;
use renormgb::jets::{Jet, DEFAULT_SINGULAR_EPS};
use renormgb::Complex64;

const NVARS: usize = 4;
const ORDER: usize = 3;

fn jet_strategy() -> impl Strategy<Value = Jet> {
    let len = renormgb::jets::JetSpace::get(NVARS, ORDER).count(ORDER);
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len).prop_map(|c| {
        let coeffs: Vec<Complex64> = c
            .into_iter()
            .map(|(re, im)| Complex64::new(re, im))
            .collect();
        Jet::from_coeffs(NVARS, ORDER, &coeffs)
    })
}

fn close(a: &Jet, b: &Jet, tol: f64) -> bool {
    (a - b).max_abs() <= tol
}

proptest! {
    #[test]
    fn product_rule(f in jet_strategy(), g in jet_strategy(), var in 0..NVARS) {
        let lhs = (&f * &g).derivative(var).unwrap();
        let rhs = &f.derivative(var).unwrap().mul_jet(&g.truncate(ORDER - 1))
            + &f.truncate(ORDER - 1).mul_jet(&g.derivative(var).unwrap());
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn multiplication_commutes(f in jet_strategy(), g in jet_strategy()) {
        prop_assert!(close(&(&f * &g), &(&g * &f), 1e-14));
    }

    #[test]
    fn conjugation_is_an_involution(f in jet_strategy()) {
        prop_assert!(close(&f.conj().conj(), &f, 0.0));
    }

    #[test]
    fn log_inverts_exp(f in jet_strategy()) {
        let small = f.scale_re(0.3);
        let back = small.exp().ln(DEFAULT_SINGULAR_EPS).unwrap();
        // The principal branch only agrees when the constant term stays in the strip.
        prop_assert!(close(&back, &small, 1e-12));
    }

    #[test]
    fn reciprocal_times_self_is_one(f in jet_strategy()) {
        let g = f.add_scalar(Complex64::new(3.0, 0.0));
        let one = &g * &g.recip(DEFAULT_SINGULAR_EPS).unwrap();
        prop_assert!(close(&one, &Jet::constant(NVARS, ORDER, Complex64::new(1.0, 0.0)), 1e-12));
    }

    #[test]
    fn d_squared_vanishes(f in jet_strategy(), g in jet_strategy()) {
        let one_form = Form::differential(&f, NVARS).unwrap().mul_coeff(&g.truncate(ORDER - 1));
        let dd = one_form.d().unwrap().d().unwrap();
        prop_assert!(dd.max_abs() < 1e-12);
    }

    #[test]
    fn leibniz_rule_for_forms(f in jet_strategy(), g in jet_strategy(), h in jet_strategy()) {
        let a = Form::differential(&f, NVARS).unwrap().mul_coeff(&h.truncate(ORDER - 1));
        let b = Form::differential(&g, NVARS).unwrap();
        let lhs = a.wedge(&b).d().unwrap();
        let rhs = a.d().unwrap().wedge(&b.truncate(ORDER - 2)).sub(&a.truncate(ORDER - 2).wedge(&b.d().unwrap()));
        prop_assert!(lhs.sub(&rhs).max_abs() < 1e-12);
    }

    #[test]
    fn one_forms_anticommute(f in jet_strategy(), g in jet_strategy()) {
        let a = Form::differential(&f, NVARS).unwrap();
        let b = Form::differential(&g, NVARS).unwrap();
        prop_assert!(a.wedge(&b).add(&b.wedge(&a)).max_abs() < 1e-14);
    }
}

#[test]
fn higher_derivative_than_order_is_rejected() {
    let f = Jet::constant(NVARS, 0, Complex64::new(1.0, 0.0));
    assert!(matches!(
        f.derivative(0),
        Err(renormgb::Error::OrderExceeded { .. })
    ));
}

#[test]
fn reciprocal_of_zero_is_singular() {
    let f = Jet::zero(NVARS, 2);
    assert!(matches!(
        f.recip(DEFAULT_SINGULAR_EPS),
        Err(renormgb::Error::DivisionBySingular { .. })
    ));
}
