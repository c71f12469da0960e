mod common;

use common::{random_metric, random_point, random_poly, rng};
use nalgebra::{DMatrix, DVector};
use projcalc::constructions::{dini_pair_parse, flat_model};
use projcalc::mobility::*;
use projcalc::projinv::{k_coefficients, metrisability_residual, ProjectiveClass2D};
use projcalc::sampling::{halton_points, DEFAULT_SEED};
use projcalc::tensor::*;
use projcalc::Error;

fn flat_report() -> MobilityReport {
    let (conn, _) = flat_model(2).unwrap();
    solve_mobility(MobilityInput::Connection(&conn), &MobilityOptions::default()).unwrap()
}

/// Least-squares coefficients of `target` in `basis`, with the relative fit error.
fn span_fit(basis: &[MobilitySolution], target: &MobilitySolution, points: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let stack = |s: &MobilitySolution| -> Vec<f64> { points.iter().flat_map(|p| s.sigma.at(p).unwrap().data().to_vec()).collect() };
    let cols: Vec<Vec<f64>> = basis.iter().map(stack).collect();
    let m = DMatrix::from_fn(cols[0].len(), cols.len(), |i, j| cols[j][i]);
    let t = DVector::from_vec(stack(target));
    let coef = m.clone().svd(true, true).solve(&t, 1e-14).unwrap();
    let err = (&m * &coef - &t).amax() / t.amax();
    (coef.iter().copied().collect(), err)
}

fn dini_class() -> (projcalc::constructions::DiniData, ProjectiveClass2D) {
    let c = Chart::cube(2, 1.0).unwrap();
    let d = dini_pair_parse(&c, "3+0.5*sin(x)", "1+0.5*cos(y)").unwrap();
    let class = k_coefficients(&christoffel(&d.g)).unwrap();
    (d, class)
}

#[test]
fn sigma_examples() {
    let c = Chart::cube(2, 1.0).unwrap();
    let p = [0.2, -0.4];
    let s = sigma_from_metric(&MetricField::euclidean(c.clone())).unwrap();
    assert_eq!(s.sigma.at(&p).unwrap().data(), &[1.0, 0.0, 0.0, 1.0]);
    let two = MetricField::parse(c.clone(), &["2", "0", "0", "2"], Some((2, 0))).unwrap();
    let v = sigma_from_metric(&two).unwrap().sigma.at(&p).unwrap();
    assert!((v.data()[0] - 0.793_700_525_984_1).abs() < 1e-12);
    let d = dini_pair_parse(&c, "3", "1").unwrap();
    let v = sigma_from_metric(&d.g).unwrap().sigma.at(&p).unwrap();
    assert!((v.data()[3] - 2f64.powf(-1.0 / 3.0)).abs() < 1e-15);

    let unit = MobilitySolution::new(WeightedTensorField::parse(c.clone(), 2, 0, 2.0, &["1", "0", "0", "1"]).unwrap(), 0.0).unwrap();
    assert_eq!(metric_from_sigma(&unit).unwrap().matrix(&p).unwrap(), DMatrix::identity(2, 2));
    let k = 4f64.powf(1.0 / 3.0) / 2.0;
    let src = [k.to_string(), "0".into(), "0".into(), k.to_string()];
    let scaled = MobilitySolution::new(WeightedTensorField::parse(c, 2, 0, 2.0, &src.iter().map(String::as_str).collect::<Vec<_>>()).unwrap(), 0.0).unwrap();
    assert!((metric_from_sigma(&scaled).unwrap().matrix(&p).unwrap() - DMatrix::identity(2, 2) * 2.0).amax() < 1e-14);
}

#[test]
fn sigma_metric_round_trip() {
    let mut r = rng(301);
    for k in 0..50 {
        let n = 2 + k % 2;
        let c = Chart::cube(n, 0.5).unwrap();
        let g = random_metric(&mut r, &c);
        let back = metric_from_sigma(&sigma_from_metric(&g).unwrap()).unwrap();
        let p = random_point(&mut r, &c, 0.0);
        let (a, b) = (g.matrix(&p).unwrap(), back.matrix(&p).unwrap());
        assert!((&a - &b).amax() <= 1e-12 * a.amax());
    }
}

#[test]
fn flat_class_has_mobility_six() {
    let rep = flat_report();
    assert_eq!(rep.dimension, 6);
    let sv = &rep.singular_values;
    assert!(sv[sv.len() - 7] >= 1e3 * sv[sv.len() - 6]);
    assert!(rep.warning.is_none());
    let flat = ConnectionField::flat(Chart::cube(2, 1.0).unwrap());
    let probes = halton_points(flat.chart(), 100, DEFAULT_SEED, 0.01);
    for (s, coef) in rep.solutions.iter().zip(&rep.coefficients) {
        assert!(s.residual_norm <= 1e-7);
        assert!((coef.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-12);
        for p in &probes {
            assert!(metrisability_residual(&s.sigma, &flat, p).unwrap().max_abs() <= 1e-7);
        }
    }
    for a in 0..6 {
        for b in 0..a {
            let dot: f64 = rep.coefficients[a].iter().zip(&rep.coefficients[b]).map(|(x, y)| x * y).sum();
            assert!(dot.abs() < 1e-12);
        }
    }
}

#[test]
fn dini_class_has_mobility_two() {
    let (d, class) = dini_class();
    let region = vec![(-0.3, 0.3); 2];
    let opts = MobilityOptions { degree: 10, per_axis: 15, sv_threshold: 1e-8, region: Some(region.clone()) };
    let rep = solve_mobility(MobilityInput::Class(&class), &opts).unwrap();
    assert_eq!(rep.dimension, 2, "{:?}", &rep.singular_values[rep.singular_values.len() - 4..]);
    let pts = d.g.chart().with_domain(region).unwrap().grid(9);
    for known in [sigma_from_metric(&d.g).unwrap(), sigma_from_metric(&d.g_bar).unwrap()] {
        let (_, err) = span_fit(&rep.solutions, &known, &pts);
        assert!(err <= 1e-6, "{err:e}");
    }
    let conn = class.representative();
    let probes = halton_points(rep.solutions[0].chart(), 100, DEFAULT_SEED, 0.01);
    for s in &rep.solutions {
        for p in &probes {
            assert!(metrisability_residual(&s.sigma, &conn, p).unwrap().max_abs() <= 1e-7);
        }
    }
}

#[test]
fn generic_class_is_not_metrisable() {
    let mut r = rng(302);
    let c = Chart::cube(2, 1.0).unwrap();
    let srcs: Vec<String> = (0..4).map(|_| random_poly(&mut r, 2, 3, 0.5)).collect();
    let class = ProjectiveClass2D::parse(c, [&srcs[0], &srcs[1], &srcs[2], &srcs[3]]).unwrap();
    let rep = solve_mobility(MobilityInput::Class(&class), &MobilityOptions::default()).unwrap();
    assert_eq!(rep.dimension, 0, "{:?}", &rep.singular_values[rep.singular_values.len() - 3..]);
    let opts = MobilityOptions { per_axis: 2, ..Default::default() };
    assert!(matches!(solve_mobility(MobilityInput::Class(&class), &opts), Err(Error::GridTooSmall { .. })));
}

#[test]
fn a_tensor_of_dini_pair_and_dual_formula() {
    let (d, _) = dini_class();
    let (s, sb) = (sigma_from_metric(&d.g).unwrap(), sigma_from_metric(&d.g_bar).unwrap());
    let a = a_tensor(&s, &sb).unwrap();
    assert!((a_tensor(&s, &s).unwrap().matrix(&[0.1, 0.1]).unwrap() - DMatrix::identity(2, 2)).amax() < 1e-15);
    for p in d.g.chart().grid(5) {
        let (x, y) = (d.x.eval(&p).unwrap(), d.y.eval(&p).unwrap());
        let m = a.matrix(&p).unwrap();
        assert!((m - DMatrix::from_diagonal(&DVector::from_vec(vec![x, y]))).amax() < 1e-9);
        let ev = a.eigenvalues(&d.g, &p).unwrap();
        assert!((ev[0] - y).abs() < 1e-9 && (ev[1] - x).abs() < 1e-9);
        assert!(a.self_adjoint_defect(&d.g, &p).unwrap() < 1e-10);
        let f = adapted_frame(&d.g, &a, &p).unwrap();
        let scale = 1.0 / (x - y).sqrt();
        // ascending order: the Y direction comes first
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, scale, scale, 0.0]);
        assert!((f.frame.abs() - expected).amax() < 1e-12, "{}", f.frame);
        assert_eq!(f.eigen.eigenvalues(), vec![f.eigen.groups[0].0, f.eigen.groups[1].0]);
    }
    let mut r = rng(303);
    for k in 0..10 {
        let c = Chart::cube(2 + k % 2, 0.5).unwrap();
        let (g, gb) = (random_metric(&mut r, &c), random_metric(&mut r, &c));
        let via_sigma = a_tensor(&sigma_from_metric(&g).unwrap(), &sigma_from_metric(&gb).unwrap()).unwrap();
        let via_metrics = a_tensor_from_metrics(&g, &gb).unwrap();
        let p = random_point(&mut r, &c, 0.0);
        assert!((via_sigma.matrix(&p).unwrap() - via_metrics.matrix(&p).unwrap()).amax() < 1e-10);
    }
}

#[test]
fn flat_solutions_give_metrics_with_sinjukov_form() {
    let rep = flat_report();
    let chart = rep.solutions[0].chart().clone();
    let pts = chart.grid(5);
    let unit = MobilitySolution::new(WeightedTensorField::parse(chart.clone(), 2, 0, 2.0, &["1", "0", "0", "1"]).unwrap(), 0.0).unwrap();
    let (mut w, err) = span_fit(&rep.solutions, &unit, &pts);
    assert!(err < 1e-12);
    let mut r = rng(304);
    for _ in 0..3 {
        for (k, c) in w.iter_mut().enumerate() {
            *c = 3.0 * *c + 0.1 * common::random_point(&mut r, &Chart::cube(2, 1.0).unwrap(), 0.0)[k % 2];
        }
        let sigma = linear_combination(&rep.solutions, &w).unwrap();
        let g = metric_from_sigma(&sigma).unwrap();
        g.validate(&pts).unwrap();
        for s in rep.solutions.iter().chain([&sigma]) {
            let form = sinjukov_form(s, &g).unwrap();
            for p in &pts {
                assert!(form.residual(p).unwrap() <= 1e-9);
            }
        }
    }
}

#[test]
fn sinjukov_vector_of_dini_pairs() {
    let c = Chart::cube(2, 1.0).unwrap();
    let konst = dini_pair_parse(&c, "3", "1").unwrap();
    let form = sinjukov_form(&sigma_from_metric(&konst.g_bar).unwrap(), &konst.g).unwrap();
    assert!(form.lambda.at(&[0.4, -0.2]).unwrap().max_abs() < 1e-14);

    let (d, _) = dini_class();
    let form = sinjukov_form(&sigma_from_metric(&d.g_bar).unwrap(), &d.g).unwrap();
    for p in c.grid(5) {
        let (x, y) = (d.x.eval(&p).unwrap(), d.y.eval(&p).unwrap());
        let (dx, dy) = (0.5 * p[0].cos(), -0.5 * p[1].sin());
        let lam = form.lambda.at(&p).unwrap();
        assert!((lam.data()[0] - 0.5 * dx / (x - y)).abs() < 1e-12);
        assert!((lam.data()[1] - 0.5 * dy / (x - y)).abs() < 1e-12);
        let a = form.a.at(&p).unwrap();
        assert!((a.get(&[0, 0]) - x / (x - y)).abs() < 1e-12 && (a.get(&[1, 1]) - y / (x - y)).abs() < 1e-12);
        assert!(form.residual(&p).unwrap() <= 1e-9);
    }
    let stranger = MetricField::parse(c.clone(), &["1 + x^2", "0", "0", "1"], Some((2, 0))).unwrap();
    assert!(matches!(sinjukov_form(&sigma_from_metric(&stranger).unwrap(), &d.g), Err(Error::NotASolution { .. })));
}

#[test]
fn killing_tensors_from_pairs() {
    let (d, _) = dini_class();
    let k = killing_tensor_from_pair(&d.g, &d.g_bar).unwrap();
    assert!(k.residual <= 1e-9, "{:e}", k.residual);
    for p in d.g.chart().grid(4) {
        let (x, y) = (d.x.eval(&p).unwrap(), d.y.eval(&p).unwrap());
        let v = k.khat.at(&p).unwrap();
        assert!((v.get(&[0, 0]) - (x - y) * y).abs() < 1e-12 && (v.get(&[1, 1]) - (x - y) * x).abs() < 1e-12 && v.get(&[0, 1]).abs() < 1e-14);
    }
    let c = Chart::cube(2, 1.0).unwrap();
    let bad = MetricField::parse(c.clone(), &["1 + x^2", "0", "0", "1 + x^2"], Some((2, 0))).unwrap();
    assert!(killing_tensor_from_pair(&MetricField::euclidean(c), &bad).unwrap().residual > 1e-2);
}

#[test]
fn transformation_matrices_of_flat_maps() {
    let rep = flat_report();
    let basis = &rep.solutions;
    let c = basis[0].chart().clone();
    let wide = Chart::cube(2, 4.0).unwrap();
    let id = transformation_matrix(&ChartMap::identity(&c), basis, DEFAULT_FIT_TOLERANCE).unwrap();
    assert!((id.matrix - DMatrix::identity(6, 6)).amax() < 1e-9);
    let shift = ChartMap::parse(c.clone(), wide.clone(), &["x + 1", "y"]).unwrap();
    let t_shift = transformation_matrix(&shift, basis, DEFAULT_FIT_TOLERANCE).unwrap();
    assert!(t_shift.fit_residual <= 1e-9);
    // a translation is unipotent on the polynomial solution space
    let nil = &t_shift.matrix - DMatrix::identity(6, 6);
    assert!((nil.pow(3)).amax() < 1e-8);
    let lin = ChartMap::parse(c.clone(), wide.clone(), &["0.5*x + 0.2*y", "-0.3*x + 0.6*y"]).unwrap();
    let proj = ChartMap::parse(c.clone(), wide.clone(), &["x/(3 + 0.5*x + 0.2*y)", "(y + 0.1)/(3 + 0.5*x + 0.2*y)"]).unwrap();
    for (phi, psi) in [(&shift, &lin), (&lin, &proj), (&proj, &shift)] {
        let t_phi = transformation_matrix(phi, basis, DEFAULT_FIT_TOLERANCE).unwrap();
        let t_psi = transformation_matrix(psi, basis, DEFAULT_FIT_TOLERANCE).unwrap();
        let t_comp = transformation_matrix(&phi.compose(psi).unwrap(), basis, DEFAULT_FIT_TOLERANCE).unwrap();
        assert!((t_comp.matrix - &t_psi.matrix * &t_phi.matrix).amax() < 1e-9);
    }
    let bent = ChartMap::parse(c, wide, &["x + 0.3*y^2", "y"]).unwrap();
    assert!(matches!(transformation_matrix(&bent, basis, DEFAULT_FIT_TOLERANCE), Err(Error::NotProjective { .. })));
}

#[test]
fn degenerate_solutions_are_flagged() {
    let rep = flat_report();
    let pts = rep.solutions[0].chart().grid(5);
    let flagged = rep.solutions.iter().filter(|s| s.degeneracy_witness(&pts).unwrap().is_some()).count();
    assert!(flagged >= 1);
    let bad = rep.solutions.iter().find(|s| s.degeneracy_witness(&pts).unwrap().is_some()).unwrap();
    assert!(matches!(metric_from_sigma_checked(bad, &pts), Err(Error::Singular { .. })));
}
