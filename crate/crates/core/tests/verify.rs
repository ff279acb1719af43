use std::collections::HashMap;

use hammerstein::expr::{Scope, Var};
use hammerstein::kernels::{builtin_kernel, GREEN_2ND_DIRICHLET};
use hammerstein::problem::{ProblemFile, EXAMPLE1, EXAMPLE2};
use hammerstein::report::render;
use hammerstein::verify::{compute_constants, ExistenceHypotheses, NonexistenceHypotheses, Provenance};
use hammerstein::{
    check_existence, check_nonexistence, parse, search_existence_window, Component, Expr, Symbol, SystemSpec, Verdict,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec(text: &str) -> SystemSpec {
    ProblemFile::parse(text).unwrap().to_spec().unwrap()
}

fn example1_hypotheses(resolution: usize) -> ExistenceHypotheses {
    let s = spec(EXAMPLE1);
    let w = search_existence_window(&s, 2, 1.0, resolution).unwrap();
    assert!(w.feasible);
    let mut hyp = ExistenceHypotheses::new(w.r, 1.0, w.delta, 2);
    hyp.resolution = resolution;
    hyp
}

fn example2_hypotheses() -> NonexistenceHypotheses {
    NonexistenceHypotheses::new(vec![3.0, 3.0], vec![vec![1.0], vec![1.0]])
}

/// Point evaluations read the symbol's value and `int` sees a constant
/// profile, which is one admissible element of the ball.
struct ConstantProfile<'a> {
    t: f64,
    values: &'a HashMap<Symbol, f64>,
}

impl Scope for ConstantProfile<'_> {
    fn var(&self, v: Var) -> Option<f64> {
        (v == Var::T).then_some(self.t)
    }
    fn symbol(&self, s: Symbol) -> Option<f64> {
        self.values.get(&s).copied()
    }
    fn point_eval(&self, s: Symbol, _at: f64) -> hammerstein::Result<f64> {
        self.values.get(&s).copied().ok_or(hammerstein::Error::Unbound(s))
    }
    fn integral(&self, body: &Expr) -> hammerstein::Result<f64> {
        body.eval(self)
    }
}

fn sample_ball(spec: &SystemSpec, rho: f64, rng: &mut ChaCha8Rng) -> (f64, HashMap<Symbol, f64>) {
    let t = rng.random::<f64>();
    let values = spec
        .all_symbols()
        .into_iter()
        .map(|s| {
            let v = if s.order == 0 {
                rng.random_range(0.0..=rho)
            } else {
                rng.random_range(-rho..=rho)
            };
            (s, v)
        })
        .collect();
    (t, values)
}

#[test]
fn passing_existence_survives_sampling() {
    let s = spec(EXAMPLE1);
    let hyp = example1_hypotheses(200);
    let report = check_existence(&s, &hyp).unwrap();
    assert_eq!(report.verdict, Verdict::Pass);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let target = Symbol::new(hyp.i0, 0);
    for _ in 0..100_000 {
        let (t, v) = sample_ball(&s, hyp.big_r, &mut rng);
        let scope = ConstantProfile { t, values: &v };
        for (c, cc) in s.components().iter().zip(&report.constants) {
            let f = c.nonlinearity.eval(&scope).unwrap();
            assert!(f.abs() <= cc.nonlinearity_bound.as_ref().unwrap().bound);
            for (term, tc) in c.terms.iter().zip(&cc.terms) {
                let hammerstein::Functional::Expr(h) = &term.functional else { unreachable!() };
                assert!(h.eval(&scope).unwrap().abs() <= tc.functional_bound.as_ref().unwrap().bound);
            }
        }
        // lower growth on the small ball
        let (t, v) = sample_ball(&s, hyp.r, &mut rng);
        let scope = ConstantProfile { t, values: &v };
        let f = s.component(hyp.i0).unwrap().nonlinearity.eval(&scope).unwrap();
        assert!(f - hyp.delta * v[&target] >= -1e-12 * (1.0 + f.abs()));
    }
}

#[test]
fn passing_nonexistence_survives_sampling() {
    let s = spec(EXAMPLE2);
    let hyp = example2_hypotheses();
    assert_eq!(check_nonexistence(&s, &hyp).unwrap().verdict, Verdict::Pass);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100_000 {
        let rho = 10f64.powf(rng.random_range(-3.0..3.0));
        let (t, v) = sample_ball(&s, rho, &mut rng);
        let scope = ConstantProfile { t, values: &v };
        for (k, c) in s.components().iter().enumerate() {
            let u = v[&Symbol::new(k + 1, 0)];
            let f = c.nonlinearity.eval(&scope).unwrap();
            assert!(f >= 0.0 && f <= hyp.taus[k] * u * (1.0 + 1e-12));
            let hammerstein::Functional::Expr(h) = &c.terms[0].functional else { unreachable!() };
            assert!(h.eval(&scope).unwrap() <= hyp.xis[k][0] * u * (1.0 + 1e-12));
        }
    }
}

#[test]
fn large_lambda_fails_outer_sphere() {
    let s = spec(EXAMPLE1).modified(|cs| cs[0].lambda = 3.0).unwrap();
    let report = check_existence(&s, &example1_hypotheses(200)).unwrap();
    assert_eq!(report.verdict, Verdict::Fail);
    let outer = report.record("outer_sphere").unwrap();
    assert_eq!(outer.status, Verdict::Fail);
    assert!(outer.lhs >= 4.5);
}

#[test]
fn zero_operator_fails_eigenvalue_comparison() {
    let s = spec(EXAMPLE1)
        .modified(|cs| {
            for c in cs.iter_mut() {
                c.lambda = 0.0;
                c.terms.iter_mut().for_each(|t| t.eta = 0.0);
            }
        })
        .unwrap();
    let report = check_existence(&s, &ExistenceHypotheses::new(0.01, 1.0, 1.0, 2)).unwrap();
    assert_eq!(report.record("eigenvalue_comparison").unwrap().status, Verdict::Fail);
    assert_eq!(report.verdict, Verdict::Fail);
}

#[test]
fn nonexistence_boundary_cases() {
    let hyp = example2_hypotheses();
    let lhs = |s: &SystemSpec| {
        let r = check_nonexistence(s, &hyp).unwrap();
        (r.verdict, r.record("nonexistence_inequality").unwrap().lhs)
    };
    let base = spec(EXAMPLE2);
    assert_eq!(lhs(&base), (Verdict::Pass, 0.875));

    let eta = base.modified(|cs| cs[0].terms[0].eta = 0.625).unwrap();
    let (v, l) = lhs(&eta);
    assert_eq!(v, Verdict::Fail);
    assert!((l - 1.0).abs() < 1e-14);

    let lam = base.modified(|cs| cs[0].lambda = 2.0).unwrap();
    let (v, l) = lhs(&lam);
    assert_eq!(v, Verdict::Fail);
    assert!((l - 1.25).abs() < 1e-14);
}

#[test]
fn window_search_examples() {
    let s = spec(EXAMPLE1);
    let w = search_existence_window(&s, 2, 1.0, 200).unwrap();
    assert!(w.feasible && w.r < 1.0);
    assert!(0.2 * w.delta >= w.characteristic_value);

    let k = builtin_kernel(GREEN_2ND_DIRICHLET).unwrap();
    let zero = SystemSpec::new(vec![Component::new(k.clone(), 1.0, parse("0").unwrap())]).unwrap();
    assert!(!search_existence_window(&zero, 1, 1.0, 200).unwrap().feasible);

    let mu = std::f64::consts::PI.powi(2);
    let linear = SystemSpec::new(vec![Component::new(k, 2.0 * mu, parse("u1").unwrap())]).unwrap();
    let w = search_existence_window(&linear, 1, 1.0, 200).unwrap();
    assert!(w.feasible);
    assert!((w.delta - 1.0).abs() < 1e-12);
}

#[test]
fn reports_are_reproducible() {
    let s = spec(EXAMPLE1);
    let hyp = example1_hypotheses(64);
    let a = render(&check_existence(&s, &hyp).unwrap()).unwrap();
    let b = render(&check_existence(&s, &hyp).unwrap()).unwrap();
    assert_eq!(a, b);
    let s2 = spec(EXAMPLE2);
    let a = render(&check_nonexistence(&s2, &example2_hypotheses()).unwrap()).unwrap();
    let b = render(&check_nonexistence(&s2, &example2_hypotheses()).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn supplied_bound_below_computed_is_rejected() {
    let s = spec(EXAMPLE1).modified(|cs| {
        cs[1].kernel_bounds.insert(1, 0.01);
    });
    let err = s.and_then(|s| check_existence(&s, &example1_hypotheses(64)));
    assert!(err.is_err());
}

#[test]
fn supplied_bound_is_marked() {
    let report = check_existence(&spec(EXAMPLE1), &example1_hypotheses(200)).unwrap();
    let kc = &report.constants[1].kernel_constants[1];
    assert_eq!(kc.provenance, Provenance::UserSupplied);
    assert_eq!(kc.used, 5.0 / 24.0);
    assert_eq!(report.record("outer_sphere").unwrap().provenance, Provenance::UserSupplied);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn outer_sphere_is_monotone(scale in prop::collection::vec(1.0f64..4.0, 4), which in 0usize..4) {
        let base = spec(EXAMPLE1);
        let hyp = example1_hypotheses(64);
        let bumped = base.modified(|cs| match which {
            0 => cs[0].lambda *= scale[0],
            1 => cs[1].lambda *= scale[1],
            2 => cs[0].terms[0].eta *= scale[2],
            _ => cs[1].terms[0].eta *= scale[3],
        }).unwrap();
        let a = check_existence(&base, &hyp).unwrap();
        let b = check_existence(&bumped, &hyp).unwrap();
        let (la, lb) = (a.record("outer_sphere").unwrap(), b.record("outer_sphere").unwrap());
        prop_assert!(lb.lhs >= la.lhs);
        prop_assert!(!(la.status == Verdict::Fail && lb.status == Verdict::Pass));
    }

    #[test]
    fn nonexistence_lhs_is_monotone(l1 in 0.0f64..3.0, dl in 0.0f64..2.0, e1 in 0.0f64..1.0, de in 0.0f64..1.0) {
        let hyp = example2_hypotheses();
        let make = |l: f64, e: f64| spec(EXAMPLE2).modified(|cs| {
            cs[0].lambda = l;
            cs[0].terms[0].eta = e;
        }).unwrap();
        let lhs = |s: &SystemSpec| check_nonexistence(s, &hyp).unwrap().record("nonexistence_inequality").unwrap().lhs;
        prop_assert!(lhs(&make(l1, e1)) <= lhs(&make(l1 + dl, e1 + de)));
    }

    #[test]
    fn bounds_grow_with_radius(r in 0.05f64..4.0) {
        let s = spec(EXAMPLE1);
        let small = compute_constants(&s, 64, Some(r), 1).unwrap();
        let large = compute_constants(&s, 64, Some(2.0 * r), 1).unwrap();
        for (a, b) in small.iter().zip(&large) {
            prop_assert!(a.nonlinearity_bound.as_ref().unwrap().bound <= b.nonlinearity_bound.as_ref().unwrap().bound);
            for (ta, tb) in a.terms.iter().zip(&b.terms) {
                prop_assert!(ta.functional_bound.as_ref().unwrap().bound <= tb.functional_bound.as_ref().unwrap().bound);
            }
        }
        let mut hyp = ExistenceHypotheses::new(r / 4.0, r, 1.0, 2);
        hyp.resolution = 64;
        let rhs = |h: &ExistenceHypotheses| check_existence(&s, h).unwrap().record("outer_sphere").unwrap().rhs;
        let doubled = ExistenceHypotheses { big_r: 2.0 * r, ..hyp };
        prop_assert!(rhs(&doubled) >= 2.0 * rhs(&hyp));
    }
}
