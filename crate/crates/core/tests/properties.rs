use epl_core::family::IndexedFamily;
use epl_core::infinite_extremality::{nontriviality_diagnostic, overlap_measure, verify_infinite_certificate, InfiniteCertificate, OverlapConfig};
use epl_core::intersection_calculus::{r_normal_margin, FuzzyCertificate, MatchingConfig};
use epl_core::linalg::{distance, dot, norm};
use epl_core::normal_cones::{cone_membership, eps_normal_residual, limiting_cone_sample};
use epl_core::sip_optimality::{check_lower_condition, check_upper_condition, ObjectiveOracle, SIPProblem, Verdict};
use epl_core::{DualVector, Halfspace, RadiusLadder, ScalarFunction, SetOracle, Sign, Tolerances};
use proptest::prelude::*;

fn convex_catalog() -> Vec<SetOracle<f64>> {
    vec![
        SetOracle::halfspace(vec![0.6, -0.8], 0.3),
        SetOracle::ball(vec![0.5, -1.0], 1.2),
        SetOracle::Cuboid { lo: vec![-1.0, -0.5], hi: vec![0.5, 2.0] },
        SetOracle::Polyhedron {
            halfspaces: vec![
                Halfspace { normal: vec![1.0, 1.0], offset: 1.0 },
                Halfspace { normal: vec![-1.0, 2.0], offset: 0.5 },
                Halfspace { normal: vec![0.0, -1.0], offset: 2.0 },
            ],
        },
        SetOracle::HalfplaneProduct { signs: vec![Sign::Nonpos, Sign::Nonneg] },
        SetOracle::epigraph(ScalarFunction::Parabola { coef: 1.0 }),
        SetOracle::hypograph(ScalarFunction::Parabola { coef: -2.0 }),
        SetOracle::epigraph(ScalarFunction::KMParabola { k: 3.0, m: 4.0 }),
        SetOracle::hypograph(ScalarFunction::NegAbs),
        SetOracle::Translated { shift: vec![0.25, -0.5], inner: Box::new(SetOracle::ball(vec![0.0, 0.0], 0.75)) },
        SetOracle::Intersection { members: vec![SetOracle::ball(vec![0.0, 0.0], 1.0), SetOracle::halfspace(vec![1.0, 1.0], 0.2)] },
    ]
}

fn nonconvex_catalog() -> Vec<SetOracle<f64>> {
    vec![
        SetOracle::epigraph(ScalarFunction::XSinInvX),
        SetOracle::hypograph(ScalarFunction::XSinInvXNonpos),
        SetOracle::epigraph(ScalarFunction::NegPowLog),
        SetOracle::NegNormEpigraph,
        SetOracle::hypograph(ScalarFunction::Parabola { coef: 1.0 }),
    ]
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        prop::collection::vec(-3.0f64..3.0, 2),
        prop::collection::vec(-0.05f64..0.05, 2),
    ]
}

fn dv(v: &[f64]) -> DualVector<f64> {
    DualVector::new(v.to_vec()).unwrap()
}

const FEAS: f64 = 1e-9;

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn projection_is_idempotent(x in point()) {
        for s in convex_catalog().into_iter().chain(nonconvex_catalog()) {
            let p = s.project(&x).unwrap();
            let q = s.project(&p).unwrap();
            prop_assert!(distance(&p, &q) <= FEAS, "{s:?} at {x:?}: {p:?} then {q:?}");
            prop_assert!(s.contains(&p, FEAS).unwrap());
        }
    }

    #[test]
    fn convex_projection_is_nonexpansive(x in point(), y in point()) {
        for s in convex_catalog() {
            let px = s.project(&x).unwrap();
            let py = s.project(&y).unwrap();
            prop_assert!(distance(&px, &py) <= distance(&x, &y) + FEAS, "{s:?} at {x:?}, {y:?}");
        }
    }

    #[test]
    fn translation_is_equivariant(x in point(), a in prop::collection::vec(-1.0f64..1.0, 2)) {
        for s in convex_catalog().into_iter().chain(nonconvex_catalog()) {
            let moved = s.translate(&a).distance(&x).unwrap();
            let back = s.distance(&[x[0] + a[0], x[1] + a[1]]).unwrap();
            prop_assert!((moved - back).abs() <= 1e-12 * (1.0 + back), "{s:?}: {moved} vs {back}");
        }
    }

    #[test]
    fn r_normal_margin_grows_under_shrinking(
        xstar in prop::collection::vec(-2.0f64..2.0, 2),
        z in prop::collection::vec(-1.0f64..1.0, 2),
        r in 1e-4f64..0.5,
        lambda in 0.0f64..=1.0,
    ) {
        let m = r_normal_margin(&xstar, &z, r);
        let scaled: Vec<f64> = xstar.iter().map(|v| v * lambda).collect();
        if m > 0.0 {
            prop_assert!(r_normal_margin(&scaled, &z, r) >= m.min(r) - 1e-15);
        }
    }

    #[test]
    fn fuzzy_defects_recompute(
        lambda in 0.0f64..1.0,
        eps in 1e-3f64..0.5,
        xstar in prop::collection::vec(-1.0f64..1.0, 2),
        duals in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..5),
    ) {
        let n = duals.len();
        let cert = FuzzyCertificate::new(lambda, eps, dv(&xstar), (1..=n).collect(), vec![vec![0.0, 0.0]; n], duals.iter().map(|d| dv(d)).collect());
        let gap = {
            let s = duals.iter().fold([0.0, 0.0], |s, d| [s[0] + d[0], s[1] + d[1]]);
            ((lambda * xstar[0] - s[0]).powi(2) + (lambda * xstar[1] - s[1]).powi(2)).sqrt()
        };
        let sq: f64 = duals.iter().map(|d| d[0] * d[0] + d[1] * d[1]).sum();
        let identity = (lambda * lambda * (1.0 + xstar[0] * xstar[0] + xstar[1] * xstar[1]) + sq - 1.0).abs();
        prop_assert!((cert.inclusion_defect - (gap - eps).max(0.0)).abs() <= 1e-12);
        prop_assert!((cert.identity_defect - identity).abs() <= 1e-12);
        prop_assert_eq!(cert.defects(), (cert.inclusion_defect, cert.identity_defect));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn eps_normal_residual_is_positively_homogeneous(
        which in 0usize..4,
        xstar in prop::collection::vec(-1.0f64..1.0, 2),
        lambda in 0.01f64..10.0,
    ) {
        let sets = [
            SetOracle::halfspace(vec![0.0, 1.0], 0.0),
            SetOracle::NegNormEpigraph,
            SetOracle::epigraph(ScalarFunction::Parabola { coef: 1.0 }),
            SetOracle::HalfplaneProduct { signs: vec![Sign::Nonpos, Sign::Nonneg] },
        ];
        let ladder = RadiusLadder { rungs: 8, samples: 64, ..RadiusLadder::default() };
        let tol = Tolerances::default();
        let base = eps_normal_residual(&sets[which], &[0.0, 0.0], &dv(&xstar), &ladder, &tol).unwrap().value;
        let scaled: Vec<f64> = xstar.iter().map(|v| v * lambda).collect();
        let s = eps_normal_residual(&sets[which], &[0.0, 0.0], &dv(&scaled), &ladder, &tol).unwrap().value;
        prop_assert!((s - lambda * base).abs() <= 1e-12 * (1.0 + lambda * base.abs()), "{s} vs {}", lambda * base);
    }

    #[test]
    fn passing_infinite_certificates_are_nontrivial(
        dirs in prop::collection::vec(0.0f64..std::f64::consts::TAU, 1..5),
        weights in prop::collection::vec(0.1f64..1.0, 5),
        r in 1e-5f64..0.3,
    ) {
        // Halfspaces {<d_i, x> <= 0} with a last one opposite to the weighted sum, so that
        // the duals t_i d_i sit in the normal cones at the origin and add up to zero.
        let mut normals: Vec<Vec<f64>> = dirs.iter().map(|t| vec![t.cos(), t.sin()]).collect();
        let mut duals: Vec<Vec<f64>> = normals.iter().zip(&weights).map(|(d, w)| vec![d[0] * w, d[1] * w]).collect();
        let s = duals.iter().fold(vec![0.0, 0.0], |s, d| vec![s[0] + d[0], s[1] + d[1]]);
        prop_assume!(norm(&s) > 1e-3);
        normals.push(vec![-s[0] / norm(&s), -s[1] / norm(&s)]);
        duals.push(vec![-s[0], -s[1]]);
        let scale = duals.iter().map(|d| dot(d, d)).sum::<f64>().sqrt();
        let n = duals.len();
        let cert = InfiniteCertificate {
            eps: 0.5,
            r,
            indices: (1..=n).collect(),
            points: vec![vec![0.0, 0.0]; n],
            duals: duals.iter().map(|d| dv(&[d[0] / scale, d[1] / scale])).collect(),
        };
        let fam = IndexedFamily::explicit(normals.into_iter().map(|a| SetOracle::halfspace(a, 0.0)).collect(), vec![0.0, 0.0]);
        let chk = verify_infinite_certificate(&cert, &fam, &RadiusLadder::default(), &Tolerances::default()).unwrap();
        if chk.pass {
            prop_assert!(!nontriviality_diagnostic(&cert).trivial);
        }
    }
}

#[test]
fn overlap_is_symmetric_under_reflection() {
    let pairs: [(SetOracle<f64>, SetOracle<f64>); 4] = [
        (SetOracle::ball(vec![0.0, 0.0], 1.0), SetOracle::ball(vec![0.3, 0.0], 0.5)),
        (SetOracle::halfspace(vec![0.0, 1.0], 0.0), SetOracle::halfspace(vec![0.0, -1.0], 0.0)),
        (SetOracle::hypograph(ScalarFunction::Parabola { coef: 1.0 }), SetOracle::epigraph(ScalarFunction::Parabola { coef: -1.0 })),
        (SetOracle::Cuboid { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] }, SetOracle::ball(vec![0.0, 0.0], 0.25)),
    ];
    for (a, b) in pairs {
        let cfg = OverlapConfig { directions: 32, points: 60, ..OverlapConfig::default() };
        let plus = overlap_measure(&a, &b, &cfg).unwrap();
        let minus = overlap_measure(&a, &b, &OverlapConfig { negate: true, ..cfg }).unwrap();
        assert!((plus.theta - minus.theta).abs() <= 4.0 / 60.0 + 1e-9, "{a:?} {b:?}: {} vs {}", plus.theta, minus.theta);
    }
}

fn sip(objective: ObjectiveOracle<f64>, sets: Vec<SetOracle<f64>>) -> SIPProblem<f64> {
    SIPProblem { objective, constraints: IndexedFamily::explicit(sets, vec![0.0, 0.0]), aqc_assumed: true }
}

fn smooth_objective() -> impl Strategy<Value = ObjectiveOracle<f64>> {
    prop_oneof![
        prop::collection::vec(-1.0f64..1.0, 2).prop_map(|c| ObjectiveOracle::Linear { c }),
        (0.1f64..2.0, prop::collection::vec(-1.0f64..1.0, 2)).prop_map(|(coef, center)| ObjectiveOracle::Quadratic { coef, center }),
        (0.0f64..std::f64::consts::TAU, 0.2f64..2.0).prop_map(|(t, s)| ObjectiveOracle::Linear { c: vec![-s * t.cos(), -s * t.sin()] }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn smooth_objectives_give_one_verdict(obj in smooth_objective(), t in 0.0f64..std::f64::consts::TAU, two in any::<bool>()) {
        let mut sets = vec![SetOracle::halfspace(vec![t.cos(), t.sin()], 0.0)];
        if two {
            sets.push(SetOracle::halfspace(vec![-t.sin(), t.cos()], 0.0));
        }
        let p = sip(obj, sets);
        let (cfg, ladder, tol) = (MatchingConfig::default(), RadiusLadder::default(), Tolerances::default());
        let eps = [0.1, 0.05];
        let up = check_upper_condition(&p, &eps, &cfg, &ladder, &tol).unwrap();
        let lo = check_lower_condition(&p, &eps, &cfg, &ladder, &tol).unwrap();
        prop_assert_eq!(up.verdict, lo.verdict);
        prop_assert!(matches!(up.verdict, Verdict::Pass | Verdict::Fail));
    }

    #[test]
    fn single_set_lower_condition_matches_cone_membership(
        which in 0usize..4,
        t in 0.0f64..std::f64::consts::TAU,
        aligned in any::<bool>(),
        s in 0.2f64..2.0,
    ) {
        let sets = [
            SetOracle::halfspace(vec![0.6, 0.8], 0.0),
            SetOracle::HalfplaneProduct { signs: vec![Sign::Free, Sign::Nonpos] },
            SetOracle::ball(vec![0.0, -1.0], 1.0),
            SetOracle::epigraph(ScalarFunction::Parabola { coef: 1.0 }),
        ];
        let (ladder, tol) = (RadiusLadder::default(), Tolerances::default());
        let cone = limiting_cone_sample(&sets[which], &[0.0, 0.0], &ladder, &tol).unwrap();
        // -grad either along a sampled generator or in a generic direction
        let neg_grad = if aligned {
            cone.directions[0].coords().iter().map(|v| v * s).collect::<Vec<_>>()
        } else {
            vec![s * t.cos(), s * t.sin()]
        };
        let member = cone_membership(&cone, &neg_grad, tol.angle);
        let p = sip(ObjectiveOracle::Linear { c: neg_grad.iter().map(|v| -v).collect() }, vec![sets[which].clone()]);
        let lo = check_lower_condition(&p, &[0.1, 0.05], &MatchingConfig::default(), &ladder, &tol).unwrap();
        prop_assert_eq!(cone.directions.len(), 1);
        let d = cone.directions[0].coords();
        let along = dot(&neg_grad, d).max(0.0);
        let gap = distance(&neg_grad, &[along * d[0], along * d[1]]);
        // the ladder accepts distances up to its smallest ε, membership needs the angle test
        prop_assume!(member || gap > 0.1);
        prop_assert_eq!(lo.verdict == Verdict::Pass, member, "set {} gap {}", which, gap);
    }
}
