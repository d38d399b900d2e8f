use equifact::group_model::{push_forward, standard_complex_structure};
use equifact::instance::Instance;
use equifact::instances::bundled;
use equifact::measure_space::{rearrangement, FiniteProbSpace, L0Vector};
use equifact::minimax_solver::{eval_f, inner_min, project_b, BSet, SaddleProblem};
use equifact::stochastic_verify::{khintchine_check, paley_zygmund_check, RademacherConfig, KHINTCHINE_BOUND};
use equifact::unitarization::complexify;
use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;

const SMALL: &[&str] = &["z2_worked", "skew3", "rot4", "s3_skew", "klein_weighted"];

fn inst(name: &str) -> Instance {
    bundled(name).unwrap().unwrap()
}

fn unit_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=1.0f64, n)
}

/// An instance index together with two points of `[0,1]ⁿ` for it.
fn instance_and_points() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (0..SMALL.len()).prop_flat_map(|k| {
        let n = inst(SMALL[k]).space.len();
        (Just(k), unit_vec(n), unit_vec(n))
    })
}

fn space_strategy(max_n: usize) -> impl Strategy<Value = FiniteProbSpace> {
    prop::collection::vec(0.01..1.0f64, 1..=max_n).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        FiniteProbSpace::new(raw.iter().map(|w| w / total).collect())
            .unwrap_or_else(|_| FiniteProbSpace::uniform(raw.len()).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn f_is_convex((k, a, b) in instance_and_points(), t in 0.0..=1.0f64) {
        let i = inst(SMALL[k]);
        let p = SaddleProblem::new(&i.space, &i.group, &i.map, 0.5).unwrap();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let lhs = p.f_value(&mid);
        let rhs = t * p.f_value(&a) + (1.0 - t) * p.f_value(&b);
        prop_assert!(lhs <= rhs + 1e-10 * (1.0 + rhs.abs()), "{lhs} > {rhs}");
    }

    #[test]
    fn f_is_group_invariant((k, a, _b) in instance_and_points()) {
        let i = inst(SMALL[k]);
        let p = SaddleProblem::new(&i.space, &i.group, &i.map, 0.5).unwrap();
        let f = p.f_value(&a);
        for s in 0..i.group.len() {
            let moved = push_forward(i.group.action(s), &a);
            let g = p.f_value(&moved);
            prop_assert!((f - g).abs() <= 1e-10 * (1.0 + f.abs()), "element {s}: {f} vs {g}");
        }
    }

    #[test]
    fn weak_duality((k, a, b) in instance_and_points(), eps in 0.05..=1.0f64) {
        // inner_min(ψ) ≤ ∫φψ ≤ F(φ) for any witness ψ and any φ ∈ B.
        let i = inst(SMALL[k]);
        let p = SaddleProblem::new(&i.space, &i.group, &i.map, eps).unwrap();
        let bset = p.bset();
        let phi = project_b(&L0Vector::new(a), &bset, &i.space).unwrap();
        prop_assert!(bset.contains(&phi, &i.space));
        let psi = eval_f(&L0Vector::new(b), &p).unwrap().witness_psi;
        let (low, _) = inner_min(&psi, &bset, &i.space).unwrap();
        let pairing = i.space.integrate(
            &phi.as_slice().iter().zip(psi.as_slice()).map(|(x, y)| x * y).collect::<Vec<_>>(),
        );
        let f = p.f_value(phi.as_slice());
        prop_assert!(low <= pairing + 1e-12, "{low} > {pairing}");
        prop_assert!(pairing <= f * (1.0 + 1e-10) + 1e-12, "{pairing} > {f}");
    }

    #[test]
    fn projection_is_idempotent(
        (space, raw) in space_strategy(10).prop_flat_map(|s| {
            let n = s.len();
            (Just(s), prop::collection::vec(-1.0..2.0f64, n))
        }),
        eps in 0.0..=2.0f64,
    ) {
        let b = BSet::new(eps).unwrap();
        let once = project_b(&L0Vector::new(raw), &b, &space).unwrap();
        prop_assert!(b.contains(&once, &space));
        let twice = project_b(&once, &b, &space).unwrap();
        for (x, y) in once.as_slice().iter().zip(twice.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn sublevel_set_of_rearrangement_is_feasible(
        (space, psi) in space_strategy(12).prop_flat_map(|s| {
            let n = s.len();
            (Just(s), prop::collection::vec(0.0..5.0f64, n))
        }),
        eps in 0.01..=2.0f64,
    ) {
        // E_M = {ψ ≤ M} with M = ψ*(ε/2) has mass ≥ 1 − ε/2, so 1_{E_M} ∈ B.
        let psi = L0Vector::new(psi);
        let m = rearrangement(&psi, &space, eps / 2.0).unwrap();
        let indicator = L0Vector::new(psi.as_slice().iter().map(|v| if *v <= m { 1.0 } else { 0.0 }).collect());
        prop_assert!(BSet::new(eps).unwrap().contains(&indicator, &space));
    }

    #[test]
    fn khintchine_corpus_has_no_violation(x in prop::collection::vec(-3.0..3.0f64, 1..=12)) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-6));
        let r = khintchine_check(&x, &RademacherConfig::auto(x.len(), 14, 0, 0)).unwrap();
        prop_assert!(r.probability >= KHINTCHINE_BOUND, "{x:?}: {}", r.probability);
    }

    #[test]
    fn paley_zygmund_corpus_has_no_violation(
        pairs in prop::collection::vec((0.0..10.0f64, 0.01..1.0f64), 1..=8),
        theta in 0.0..=1.0f64,
    ) {
        let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        prop_assume!(values.iter().any(|v| *v > 0.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut probs: Vec<f64> = pairs.iter().map(|p| p.1 / total).collect();
        let head: f64 = probs[..probs.len() - 1].iter().sum();
        *probs.last_mut().unwrap() = (1.0 - head).max(0.0);
        let r = paley_zygmund_check(&values, &probs, theta).unwrap();
        prop_assert!(r.pass, "{r:?}");
    }
}

/// The defining formula of the complexified form, evaluated on real vectors.
fn real_formula(g: &DMatrix<f64>, j: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>) -> Complex<f64> {
    let form = |u: &DVector<f64>, v: &DVector<f64>| u.dot(&(g * v));
    let (jx, jy) = (j * x, j * y);
    Complex::new(form(x, y) + form(&jx, &jy), form(x, &jy) - form(&jx, y)) / 4.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn complexified_form_is_sesquilinear(
        a in prop::collection::vec(-1.0..1.0f64, 16),
        x in prop::collection::vec(-1.0..1.0f64, 4),
        y in prop::collection::vec(-1.0..1.0f64, 4),
    ) {
        let j = standard_complex_structure(4).unwrap();
        let a = DMatrix::from_vec(4, 4, a);
        // A J-invariant positive form.
        let base = &a.transpose() * &a + DMatrix::identity(4, 4);
        let g = &base + j.transpose() * &base * &j;
        let h = complexify(&g, &j).unwrap();
        let (x, y) = (DVector::from_vec(x), DVector::from_vec(y));
        let i = Complex::new(0.0, 1.0);

        // J acts as multiplication by i: linear in the first slot,
        // conjugate-linear in the second.
        let xy = real_formula(&g, &j, &x, &y);
        prop_assert!((real_formula(&g, &j, &(&j * &x), &y) - i * xy).norm() <= 1e-12);
        prop_assert!((real_formula(&g, &j, &x, &(&j * &y)) + i * xy).norm() <= 1e-12);
        prop_assert!((real_formula(&g, &j, &y, &x) - xy.conj()).norm() <= 1e-12);

        // The matrix H reproduces the formula in complex coordinates.
        let z = |v: &DVector<f64>| {
            let half = v.len() / 2;
            let b_inv = {
                let mut b = DMatrix::<f64>::zeros(4, 4);
                for c in 0..half {
                    b[(c, c)] = 1.0;
                    b.set_column(half + c, &j.column(c));
                }
                b.try_inverse().unwrap()
            };
            let r = b_inv * v;
            DVector::from_fn(half, |c, _| Complex::new(r[c], r[half + c]))
        };
        let (zx, zy) = (z(&x), z(&y));
        let via_h = (zy.adjoint() * &h * zx)[(0, 0)];
        prop_assert!((via_h - xy).norm() <= 1e-12, "{via_h} vs {xy}");
    }
}
