#![allow(dead_code)]

use projcalc::exprjet::parse_expression;
use projcalc::tensor::{Chart, ConnectionField, MetricField, OneForm};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use projcalc::sampling::rng;

/// Eighth-order central stencils on offsets -4..=4 for derivative orders 0..=4.
const STENCILS: [[f64; 9]; 5] = [
    [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 280.0, -4.0 / 105.0, 0.2, -0.8, 0.0, 0.8, -0.2, 4.0 / 105.0, -1.0 / 280.0],
    [-1.0 / 560.0, 8.0 / 315.0, -0.2, 1.6, -205.0 / 72.0, 1.6, -0.2, 8.0 / 315.0, -1.0 / 560.0],
    [-7.0 / 240.0, 0.3, -169.0 / 120.0, 61.0 / 30.0, 0.0, -61.0 / 30.0, 169.0 / 120.0, -0.3, 7.0 / 240.0],
    [7.0 / 240.0, -0.4, 169.0 / 60.0, -122.0 / 15.0, 91.0 / 8.0, -122.0 / 15.0, 169.0 / 60.0, -0.4, 7.0 / 240.0],
];

/// Mixed partial `∂^alpha f(p)` by a tensor product of central stencils.
pub fn fd_partial(f: &dyn Fn(&[f64]) -> f64, p: &[f64], alpha: &[usize], h: f64) -> f64 {
    let active: Vec<usize> = (0..p.len()).filter(|&i| alpha[i] > 0).collect();
    let mut total = 0.0;
    let mut idx = vec![0usize; active.len()];
    loop {
        let mut q = p.to_vec();
        let mut w = 1.0;
        for (slot, &v) in active.iter().enumerate() {
            q[v] += (idx[slot] as f64 - 4.0) * h;
            w *= STENCILS[alpha[v]][idx[slot]];
        }
        if w != 0.0 {
            total += w * f(&q);
        }
        let mut s = 0;
        loop {
            if s == idx.len() {
                let order: i32 = alpha.iter().map(|&a| a as i32).sum();
                return total / h.powi(order);
            }
            idx[s] += 1;
            if idx[s] < 9 {
                break;
            }
            idx[s] = 0;
            s += 1;
        }
    }
}

/// Multi-indices of total order 1..=max_order in n variables.
pub fn multi_indices(n: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; n];
    loop {
        let total: usize = cur.iter().sum();
        if (1..=max_order).contains(&total) {
            out.push(cur.clone());
        }
        let mut s = 0;
        loop {
            if s == n {
                return out;
            }
            cur[s] += 1;
            if cur[s] <= max_order {
                break;
            }
            cur[s] = 0;
            s += 1;
        }
    }
}

pub fn coord_names(n: usize) -> Vec<String> {
    Chart::cube(n, 1.0).unwrap().coords().iter().cloned().collect()
}

fn coef(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    (rng.random_range(-scale..scale) * 1000.0).round() / 1000.0
}

/// Random polynomial of total degree ≤ `degree` with coefficients in
/// `[-scale, scale]`, as source text.
pub fn random_poly(rng: &mut ChaCha8Rng, n: usize, degree: usize, scale: f64) -> String {
    let names = coord_names(n);
    let mut terms = Vec::new();
    for alpha in std::iter::once(vec![0; n]).chain(multi_indices(n, degree)) {
        let c = coef(rng, scale);
        let mut t = format!("({c})");
        for (i, &a) in alpha.iter().enumerate() {
            if a > 0 {
                t.push_str(&format!("*{}^{}", names[i], a));
            }
        }
        terms.push(t);
    }
    terms.join(" + ")
}

fn random_atom(rng: &mut ChaCha8Rng, names: &[String]) -> String {
    if rng.random_bool(0.7) {
        names[rng.random_range(0..names.len())].clone()
    } else {
        format!("{}", coef(rng, 2.0))
    }
}

fn random_tree(rng: &mut ChaCha8Rng, names: &[String], depth: usize) -> String {
    if depth == 0 || rng.random_bool(0.2) {
        return random_atom(rng, names);
    }
    let a = random_tree(rng, names, depth - 1);
    match rng.random_range(0..11) {
        0 => format!("({a} + {})", random_tree(rng, names, depth - 1)),
        1 => format!("({a} - {})", random_tree(rng, names, depth - 1)),
        2 | 3 => format!("({a})*({})", random_tree(rng, names, depth - 1)),
        4 => format!("sin({a})"),
        5 => format!("cos({a})"),
        6 => format!("exp(0.3*({a}))"),
        7 => format!("({a})^{}", rng.random_range(2..4)),
        8 => format!("({a})/(2 + cos({}))", random_tree(rng, names, depth - 1)),
        9 => format!("sqrt(1.5 + sin({a}))"),
        _ => format!("log(2 + ({a})^2)"),
    }
}

/// Deterministic corpus of polynomial/trigonometric expressions over 2 or
/// 3 coordinates.
pub fn expression_corpus(count: usize) -> Vec<(String, usize)> {
    let mut r = rng(0xc0_ffee);
    (0..count)
        .map(|k| {
            let n = 2 + k % 2;
            let names = coord_names(n);
            let s = if k % 5 == 0 { random_poly(&mut r, n, 4, 1.0) } else { random_tree(&mut r, &names, 4) };
            (s, n)
        })
        .collect()
}

pub fn random_point(rng: &mut ChaCha8Rng, chart: &Chart, margin: f64) -> Vec<f64> {
    chart
        .domain()
        .iter()
        .map(|(a, b)| {
            let w = b - a;
            rng.random_range(a + margin * w..b - margin * w)
        })
        .collect()
}

/// Torsion-free connection with random polynomial components.
pub fn random_connection(rng: &mut ChaCha8Rng, chart: &Chart, degree: usize) -> ConnectionField {
    let n = chart.dim();
    let mut exprs = vec![projcalc::exprjet::Expr::num(0.0); n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let e = parse_expression(&random_poly(rng, n, degree, 1.0), chart.coords()).unwrap();
                exprs[(i * n + j) * n + k] = e.clone();
                exprs[(i * n + k) * n + j] = e;
            }
        }
    }
    ConnectionField::from_exprs(chart.clone(), exprs).unwrap()
}

pub fn random_one_form(rng: &mut ChaCha8Rng, chart: &Chart, degree: usize) -> OneForm {
    let n = chart.dim();
    let src: Vec<String> = (0..n).map(|_| random_poly(rng, n, degree, 1.0)).collect();
    OneForm::parse(chart.clone(), &src.iter().map(String::as_str).collect::<Vec<_>>()).unwrap()
}

/// Positive-definite metric: `c δ + small` with smooth random perturbations.
pub fn random_metric(rng: &mut ChaCha8Rng, chart: &Chart) -> MetricField {
    let n = chart.dim();
    let names = coord_names(n);
    let mut src = vec![String::new(); n * n];
    for i in 0..n {
        for j in i..n {
            let s = if i == j {
                let v = &names[rng.random_range(0..n)];
                format!("{} + {} + 0.3*sin({}*{v})", 2.0 + coef(rng, 1.0), random_poly(rng, n, 2, 0.2), coef(rng, 2.0))
            } else {
                format!("0.5*({})", random_poly(rng, n, 2, 0.2))
            };
            src[i * n + j] = s.clone();
            src[j * n + i] = s;
        }
    }
    MetricField::parse(chart.clone(), &src.iter().map(String::as_str).collect::<Vec<_>>(), Some((n, 0))).unwrap()
}

/// `|a - b| / max(|b|, floor)`.
pub fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// Levi-Civita model on the unit cube with `sign = +1`.
pub fn lc_model(n: usize, lambda: &str, h: &[&str], h_bar: &[&str]) -> projcalc::constructions::LeviCivitaModel {
    use projcalc::constructions::{levi_civita_model, LeviCivitaData};
    let chart = Chart::cube(n, 1.0).unwrap();
    let parse = |s: &str| parse_expression(s, chart.coords()).unwrap();
    levi_civita_model(&LeviCivitaData {
        lambda: parse(lambda),
        sign: 1.0,
        h: h.iter().map(|s| parse(s)).collect(),
        h_bar: h_bar.iter().map(|s| parse(s)).collect(),
        chart,
    })
    .unwrap()
}
