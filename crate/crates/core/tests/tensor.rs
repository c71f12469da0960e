mod common;

use common::{fd_partial, random_connection, random_metric, random_one_form, random_point, rng};
use projcalc::constructions::sphere_gnomonic_model;
use projcalc::exprjet::ScalarField;
use projcalc::tensor::*;

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// `φ_{i,j} = ∂_j φ_i - Γ^s_ij φ_s`, with values `φ_i`.
fn phi_derivatives(conn: &ConnectionField, phi: &OneForm, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = conn.dim();
    let pj = phi.jets(p, 1).unwrap();
    let gam = conn.values(p).unwrap();
    let vals: Vec<f64> = pj.iter().map(|j| j.value()).collect();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = pj[i].partial(&[j]) - (0..n).map(|s| gam[(s * n + i) * n + j] * vals[s]).sum::<f64>();
        }
    }
    (vals, d)
}

#[test]
fn curvature_and_ricci_shift_formulas() {
    let mut r = rng(101);
    for trial in 0..20 {
        let n = 2 + trial % 2;
        let chart = Chart::cube(n, 0.5).unwrap();
        let conn = random_connection(&mut r, &chart, 2);
        let phi = random_one_form(&mut r, &chart, 2);
        let shifted = projective_shift(&conn, &phi).unwrap();
        let p = random_point(&mut r, &chart, 0.1);
        let (ph, dp) = phi_derivatives(&conn, &phi, &p);
        let (r0, r1) = (curvature_tensor(&conn, &p).unwrap(), curvature_tensor(&shifted, &p).unwrap());
        for idx in r0.indices() {
            let (h, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
            let expected = delta(h, k) * (dp[i * n + j] - ph[i] * ph[j]) - delta(h, j) * (dp[i * n + k] - ph[i] * ph[k])
                + (dp[k * n + j] - dp[j * n + k]) * delta(h, i);
            assert!((r1.get(&idx) - r0.get(&idx) - expected).abs() < 1e-10);
            assert!((r0.get(&idx) + r0.get(&[h, i, k, j])).abs() < 1e-12);
        }
        let (q0, q1) = (ricci_tensor(&conn, &p).unwrap(), ricci_tensor(&shifted, &p).unwrap());
        for i in 0..n {
            for j in 0..n {
                let expected = (n as f64 - 1.0) * (dp[i * n + j] - ph[i] * ph[j]) + dp[i * n + j] - dp[j * n + i];
                assert!((q1.get(&[i, j]) - q0.get(&[i, j]) - expected).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn levi_civita_annihilates_the_metric() {
    let mut r = rng(102);
    for n in [2, 3, 4] {
        let chart = Chart::cube(n, 0.5).unwrap();
        let g = random_metric(&mut r, &chart);
        let lc = christoffel(&g);
        for _ in 0..4 {
            let p = random_point(&mut r, &chart, 0.1);
            let gam = lc.values(&p).unwrap();
            let gm = g.matrix(&p).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let comp = |q: &[f64]| g.matrix(q).unwrap()[(i, j)];
                    for k in 0..n {
                        let mut alpha = vec![0; n];
                        alpha[k] = 1;
                        let mut v = fd_partial(&comp, &p, &alpha, 0.02);
                        for s in 0..n {
                            v -= gam[(s * n + k) * n + i] * gm[(s, j)] + gam[(s * n + k) * n + j] * gm[(i, s)];
                        }
                        assert!(v.abs() < 1e-10, "n={n} ∇g = {v:e}");
                    }
                }
            }
            lc.check_torsion_free(&p).unwrap();
        }
    }
}

#[test]
fn conformally_flat_example_and_constant_dini() {
    let chart = Chart::cube(2, 1.0).unwrap();
    let g = MetricField::parse(chart.clone(), &["exp(2*x)", "0", "0", "exp(2*x)"], Some((2, 0))).unwrap();
    let gam = christoffel(&g).values(&[0.3, -0.2]).unwrap();
    let expected = [1.0, 0.0, 0.0, -1.0, 0.0, 1.0, 1.0, 0.0];
    for (a, b) in gam.iter().zip(expected) {
        assert!((a - b).abs() < 1e-14);
    }
    let dini = MetricField::parse(chart, &["3 - 1", "0", "0", "3 - 1"], Some((2, 0))).unwrap();
    assert!(christoffel(&dini).values(&[0.1, 0.1]).unwrap().iter().all(|v| *v == 0.0));
}

#[test]
fn shifts_compose_and_stay_torsion_free() {
    let mut r = rng(103);
    let chart = Chart::cube(3, 0.5).unwrap();
    let conn = random_connection(&mut r, &chart, 2);
    let phi = random_one_form(&mut r, &chart, 2);
    let there = projective_shift(&conn, &phi).unwrap();
    let back = projective_shift(&there, &phi.negated()).unwrap();
    let p = random_point(&mut r, &chart, 0.1);
    there.check_torsion_free(&p).unwrap();
    let (a, b) = (conn.values(&p).unwrap(), back.values(&p).unwrap());
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-14));
    let zero = OneForm::parse(chart.clone(), &["0", "0", "0"]).unwrap();
    assert_eq!(projective_shift(&conn, &zero).unwrap().values(&p).unwrap(), a);

    let flat = ConnectionField::flat(Chart::cube(2, 1.0).unwrap());
    let e1 = OneForm::parse(Chart::cube(2, 1.0).unwrap(), &["1", "0"]).unwrap();
    let s = projective_shift(&flat, &e1).unwrap().values(&[0.0, 0.0]).unwrap();
    assert_eq!(s, vec![2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
    let other = Chart::new(vec!["u".into(), "v".into()], vec![(-1.0, 1.0); 2]).unwrap();
    assert!(matches!(projective_shift(&flat, &OneForm::parse(other, &["1", "0"]).unwrap()), Err(projcalc::Error::ChartMismatch { .. })));
}

#[test]
fn weighted_shift_law_for_random_scalars() {
    let mut r = rng(104);
    let chart = Chart::cube(3, 0.5).unwrap();
    for k in [-4.0, -2.0, 1.0, 2.0] {
        let conn = random_connection(&mut r, &chart, 2);
        let phi = random_one_form(&mut r, &chart, 1);
        let shifted = projective_shift(&conn, &phi).unwrap();
        let src = format!("2 + {}", common::random_poly(&mut r, 3, 2, 0.3));
        let w = WeightedTensorField::parse(chart.clone(), 0, 0, k, &[&src]).unwrap();
        let p = random_point(&mut r, &chart, 0.1);
        let (d0, d1) = (weighted_covariant_derivative(&w, &conn, &p).unwrap(), weighted_covariant_derivative(&w, &shifted, &p).unwrap());
        let val = w.at(&p).unwrap().data()[0];
        let ph: Vec<f64> = phi.jets(&p, 0).unwrap().iter().map(|j| j.value()).collect();
        for j in 0..3 {
            assert!((d1.data()[j] - d0.data()[j] + k * ph[j] * val).abs() < 1e-11);
        }
    }
}

#[test]
fn volume_powers() {
    let chart = Chart::cube(2, 1.0).unwrap();
    let g = MetricField::parse(chart.clone(), &["2", "0", "0", "2"], Some((2, 0))).unwrap();
    let v = volume_weight_field(&g, 2.0 / 3.0);
    assert_eq!(v.weight(), 2.0);
    assert!((v.at(&[0.2, 0.1]).unwrap().data()[0] - 4f64.powf(1.0 / 3.0)).abs() < 1e-15);
    assert_eq!(volume_weight_field(&g, 0.0).at(&[0.0, 0.0]).unwrap().data()[0], 1.0);
    let mut r = rng(105);
    let h = random_metric(&mut r, &chart);
    let prod = volume_weight_field(&h, 0.7).times_scalar(&volume_weight_field(&h, -0.7)).unwrap();
    assert_eq!(prod.weight(), 0.0);
    let j = prod.jets(&[0.3, 0.4], 2).unwrap()[0].clone();
    assert!((j.value() - 1.0).abs() < 1e-14 && j.coefficients()[1..].iter().all(|c| c.abs() < 1e-13));
}

#[test]
fn pullback_rescales_flat_solution() {
    let src = Chart::cube(2, 0.5).unwrap();
    let dst = Chart::cube(2, 1.0).unwrap();
    let map = ChartMap::parse(src.clone(), dst.clone(), &["2*x", "y"]).unwrap();
    let sigma = WeightedTensorField::parse(dst, 2, 0, 2.0, &["3", "0", "0", "3"]).unwrap();
    let pulled = pullback_weighted(&sigma, &map).unwrap();
    let v = pulled.at(&[0.1, 0.2]).unwrap();
    let f = 2f64.powf(2.0 / 3.0);
    assert!((v.get(&[0, 0]) - 0.75 * f).abs() < 1e-14 && (v.get(&[1, 1]) - 3.0 * f).abs() < 1e-14);
    let res = projcalc::projinv::metrisability_residual(&pulled, &ConnectionField::flat(src.clone()), &[0.1, 0.2]).unwrap();
    assert!(res.max_abs() < 1e-14);
    let id = pullback_weighted(&pulled, &ChartMap::identity(&src)).unwrap();
    assert_eq!(id.at(&[0.3, -0.1]).unwrap().data(), pulled.at(&[0.3, -0.1]).unwrap().data());
}

#[test]
fn pullback_is_functorial_for_random_fields() {
    let c = Chart::cube(2, 1.0).unwrap();
    let psi = ChartMap::parse(c.clone(), c.clone(), &["0.5*x + 0.1*y^2", "0.6*y + 0.1*sin(x)"]).unwrap();
    let phi = ChartMap::parse(c.clone(), c.clone(), &["0.7*x - 0.05*x*y", "0.5*y + 0.1*x"]).unwrap();
    let t = WeightedTensorField::parse(c.clone(), 1, 1, -1.5, &["1 + x*y", "sin(y)", "x^2", "2 + cos(x*y)"]).unwrap();
    let two_step = pullback_weighted(&pullback_weighted(&t, &phi).unwrap(), &psi).unwrap();
    let direct = pullback_weighted(&t, &phi.compose(&psi).unwrap()).unwrap();
    for p in [[0.2, 0.3], [-0.5, 0.4]] {
        assert!(two_step.at(&p).unwrap().max_abs_diff(&direct.at(&p).unwrap()) < 1e-12);
    }
}

/// Gnomonic chart as the pullback of the ambient Euclidean metric along
/// `u ↦ (u, 1)/sqrt(1 + |u|²)`.
fn embedding_metric(n: usize, p: &[f64]) -> Vec<f64> {
    let coords = Chart::cube(n, 1.0).unwrap().coords().clone();
    let norm = format!("sqrt(1 + {})", coords.iter().map(|c| format!("{c}^2")).collect::<Vec<_>>().join(" + "));
    let comps: Vec<ScalarField> = coords
        .iter()
        .map(|c| format!("{c}/{norm}"))
        .chain([format!("1/{norm}")])
        .map(|s| ScalarField::parse(&s, coords.clone()).unwrap())
        .collect();
    let jets: Vec<_> = comps.iter().map(|f| f.eval_jet(p, 1).unwrap()).collect();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = jets.iter().map(|x| x.partial(&[i]) * x.partial(&[j])).sum();
        }
    }
    g
}

#[test]
fn gnomonic_metric_matches_embedding_and_has_unit_curvature() {
    let mut r = rng(106);
    for n in 2..=4 {
        let g = sphere_gnomonic_model(n, 0.8).unwrap();
        for _ in 0..10 {
            let p = random_point(&mut r, g.chart(), 0.0);
            let m = g.matrix(&p).unwrap();
            let e = embedding_metric(n, &p);
            assert!(m.iter().zip(&e).all(|(a, b)| (a - b).abs() < 1e-14));
            let (x, y): (Vec<f64>, Vec<f64>) = (0..n).map(|i| (1.0 + i as f64, (i as f64 - 0.5).powi(2))).unzip();
            assert!((sectional_curvature(&g, &p, &x, &y).unwrap() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn two_dimensional_metrics_are_einstein() {
    let mut r = rng(107);
    let chart = Chart::cube(2, 0.5).unwrap();
    for _ in 0..5 {
        let g = random_metric(&mut r, &chart);
        let p = random_point(&mut r, &chart, 0.1);
        let ric = ricci_tensor(&christoffel(&g), &p).unwrap();
        let gm = g.matrix(&p).unwrap();
        let gi = gm.clone().try_inverse().unwrap();
        let scal: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| gi[(i, j)] * ric.get(&[i, j])).sum();
        for i in 0..2 {
            for j in 0..2 {
                assert!((ric.get(&[i, j]) - 0.5 * scal * gm[(i, j)]).abs() < 1e-10);
                assert!((ric.get(&[i, j]) - ric.get(&[j, i])).abs() < 1e-12);
            }
        }
    }
    let flat = ConnectionField::flat(chart);
    assert_eq!(curvature_tensor(&flat, &[0.1, 0.1]).unwrap().max_abs(), 0.0);
    assert_eq!(ricci_tensor(&flat, &[0.1, 0.1]).unwrap().max_abs(), 0.0);
}
