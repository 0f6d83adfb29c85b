//! Randomized properties of the STL evaluators on small integer-grid traces.

use asap_phi::stl::{
    boolean_sat, first_sat_time, parse_formula, robustness, Expr, Formula, Interval, Monitor, StlError, Trace,
};
use proptest::prelude::*;

const DIM: usize = 2;

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..DIM).prop_map(Expr::Var),
        (-3i32..=3).prop_map(|c| Expr::Const(c as f64)),
        (0..DIM).prop_map(|i| Expr::Neg(Box::new(Expr::Var(i)))),
        (-2i32..=2, -2i32..=2).prop_map(|(a, b)| Expr::dist(vec![0, 1], vec![a as f64, b as f64]).unwrap()),
    ];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Max(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Min(Box::new(a), Box::new(b))),
            inner.prop_map(|a| Expr::Abs(Box::new(a))),
        ]
    })
}

fn interval() -> impl Strategy<Value = Interval> {
    (0usize..=3, 0usize..=3).prop_map(|(a, w)| Interval::new(a, a + w).unwrap())
}

fn atom() -> impl Strategy<Value = Formula> {
    prop_oneof![
        1 => Just(Formula::True),
        6 => (0..DIM, -3i32..=3).prop_map(|(i, c)| Formula::le(Expr::Var(i), Expr::Const(c as f64))),
        6 => (0..DIM, -3i32..=3).prop_map(|(i, c)| Formula::ge(Expr::Var(i), Expr::Const(c as f64))),
        3 => (expr(), expr()).prop_map(|(a, b)| Formula::le(a, b)),
    ]
}

/// Formulas of temporal and boolean depth at most 4.
fn formula() -> impl Strategy<Value = Formula> {
    atom().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (interval(), inner.clone()).prop_map(|(i, a)| Formula::finally(i, a)),
            (interval(), inner.clone()).prop_map(|(i, a)| Formula::globally(i, a)),
            (interval(), inner.clone(), inner).prop_map(|(i, a, b)| Formula::until(i, a, b)),
        ]
    })
}

/// Traces of 1 to 10 states on the integer grid `[-3, 3]^2`.
fn trace() -> impl Strategy<Value = Trace> {
    prop::collection::vec(prop::collection::vec((-3i32..=3).prop_map(f64::from), DIM), 1..=10)
        .prop_map(|states| Trace::new(&states).unwrap())
}

/// Comparable form of an evaluation result: value bits or the error.
fn key(r: &Result<f64, StlError>) -> Result<u64, StlError> {
    r.clone().map(f64::to_bits)
}

fn same(a: Result<f64, StlError>, b: Result<f64, StlError>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x == y,
        (Err(x), Err(y)) => x == y,
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn memoized_monitor_matches_recursive_reference(phi in formula(), tr in trace()) {
        let all = Monitor::new(&phi).robustness_all(&tr);
        prop_assert_eq!(all.len(), tr.len());
        for (t, got) in all.iter().enumerate() {
            let want = robustness(&tr, t, &phi);
            prop_assert_eq!(key(got), key(&want), "t = {}, phi = {}", t, phi);
            if let Ok(rho) = want {
                if rho != 0.0 {
                    prop_assert_eq!(boolean_sat(&tr, t, &phi).unwrap(), rho > 0.0, "t = {}, phi = {}", t, phi);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn double_negation_is_identity(phi in formula(), tr in trace()) {
        let nn = Formula::not(Formula::not(phi.clone()));
        for t in 0..tr.len() {
            prop_assert!(same(robustness(&tr, t, &nn), robustness(&tr, t, &phi)));
        }
    }

    #[test]
    fn de_morgan(a in formula(), b in formula(), tr in trace()) {
        let lhs = Formula::not(Formula::and(a.clone(), b.clone()));
        let rhs = Formula::or(Formula::not(a.clone()), Formula::not(b.clone()));
        let lhs2 = Formula::not(Formula::or(a.clone(), b.clone()));
        let rhs2 = Formula::and(Formula::not(a), Formula::not(b));
        for t in 0..tr.len() {
            prop_assert!(same(robustness(&tr, t, &lhs), robustness(&tr, t, &rhs)));
            prop_assert!(same(robustness(&tr, t, &lhs2), robustness(&tr, t, &rhs2)));
        }
    }

    #[test]
    fn globally_is_dual_of_finally(i in interval(), phi in formula(), tr in trace()) {
        let g = Formula::globally(i, phi.clone());
        let not_f_not = Formula::not(Formula::finally(i, Formula::not(phi)));
        for t in 0..tr.len() {
            prop_assert!(same(robustness(&tr, t, &g), robustness(&tr, t, &not_f_not)));
        }
    }

    #[test]
    fn finally_is_true_until(i in interval(), phi in formula(), tr in trace()) {
        let f = Formula::finally(i, phi.clone());
        let u = Formula::until(i, Formula::True, phi);
        for t in 0..tr.len() {
            prop_assert!(same(robustness(&tr, t, &f), robustness(&tr, t, &u)));
        }
    }

    #[test]
    fn print_parse_round_trip(phi in formula()) {
        let text = phi.to_string();
        let back = parse_formula(&text, DIM).unwrap();
        prop_assert_eq!(&back, &phi, "{}", text);
    }

    #[test]
    fn first_sat_time_is_earliest_satisfying_time(phi in formula(), tr in trace()) {
        let first = first_sat_time(&tr, &phi);
        let sats: Vec<bool> = (0..tr.len()).map(|t| boolean_sat(&tr, t, &phi).unwrap_or(false)).collect();
        prop_assert_eq!(first, sats.iter().position(|&s| s));
    }
}
