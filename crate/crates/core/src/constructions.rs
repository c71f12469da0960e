//! Factories for the named models: flat space, Dini pairs, Levi-Civita
//! block metrics, the gnomonic sphere and Beltrami transformations.

use crate::error::{Error, Result};
use crate::exprjet::{parse_expression, Expr, ScalarField};
use crate::mobility::ATensor;
use crate::tensor::{Chart, ChartMap, Components, ConnectionField, MetricField};
use nalgebra::DMatrix;

fn e_num(v: f64) -> Expr {
    Expr::num(v)
}

fn fields(chart: &Chart, exprs: Vec<Expr>) -> Vec<ScalarField> {
    let coords = chart.coords().clone();
    exprs.into_iter().map(|e| ScalarField::new(e, coords.clone())).collect()
}

fn diag_exprs(diag: Vec<Expr>) -> Vec<Expr> {
    let n = diag.len();
    let mut out = vec![e_num(0.0); n * n];
    for (i, e) in diag.into_iter().enumerate() {
        out[i * n + i] = e;
    }
    out
}

/// Evaluation points used to check positivity conditions.
fn witness_grid(chart: &Chart) -> Vec<Vec<f64>> {
    chart.grid(if chart.dim() == 2 { 21 } else { 5 })
}

/// Flat connection and Euclidean metric on `[-1, 1]^n`.
pub fn flat_model(n: usize) -> Result<(ConnectionField, MetricField)> {
    let chart = Chart::cube(n, 1.0)?;
    Ok((ConnectionField::flat(chart.clone()), MetricField::euclidean(chart)))
}

/// A Dini pair `g = (X - Y)(dx² + dy²)`, `ḡ = (X - Y)(dx²/(X²Y) + dy²/(XY²))`
/// with `A = diag(X, Y)`.
#[derive(Clone, Debug)]
pub struct DiniData {
    pub x: ScalarField,
    pub y: ScalarField,
    pub g: MetricField,
    pub g_bar: MetricField,
    pub a: ATensor,
}

pub fn dini_pair(chart: &Chart, x: Expr, y: Expr) -> Result<DiniData> {
    if chart.dim() != 2 {
        return Err(Error::Dimension { expected: "2".into(), found: chart.dim() });
    }
    if x.uses_var(1) || y.uses_var(0) {
        return Err(Error::Invalid("X must depend on the first coordinate only and Y on the second".into()));
    }
    let (xf, yf) = (ScalarField::new(x.clone(), chart.coords().clone()), ScalarField::new(y.clone(), chart.coords().clone()));
    for p in witness_grid(chart) {
        let (xv, yv) = (xf.eval(&p)?, yf.eval(&p)?);
        if !(xv > 0.0 && yv > 0.0 && xv - yv > 0.0) {
            return Err(Error::Positivity { what: format!("X > Y > 0 (X = {xv}, Y = {yv})"), point: p });
        }
    }
    let diff = Expr::sub(x.clone(), y.clone());
    let g = MetricField::diagonal(chart.clone(), vec![diff.clone(), diff.clone()], Some((2, 0)))?;
    let g11 = Expr::div(diff.clone(), Expr::mul(Expr::pow(x.clone(), e_num(2.0)), y.clone()));
    let g22 = Expr::div(diff, Expr::mul(x.clone(), Expr::pow(y.clone(), e_num(2.0))));
    let g_bar = MetricField::diagonal(chart.clone(), vec![g11, g22], Some((2, 0)))?;
    let a = ATensor::new(chart.clone(), Components::Fields(fields(chart, diag_exprs(vec![x, y]))));
    Ok(DiniData { x: xf, y: yf, g, g_bar, a })
}

pub fn dini_pair_parse(chart: &Chart, x: &str, y: &str) -> Result<DiniData> {
    dini_pair(chart, parse_expression(x, chart.coords())?, parse_expression(y, chart.coords())?)
}

/// Input of the Levi-Civita block construction on `n = 1 + m + m_bar`
/// coordinates: `λ(x₁)`, a sign for the first block, `h` (`m × m`, in
/// `x₂..x_{m+1}`) and `h̄` (`m̄ × m̄`, in the remaining coordinates).
#[derive(Clone, Debug)]
pub struct LeviCivitaData {
    pub chart: Chart,
    pub lambda: Expr,
    pub sign: f64,
    pub h: Vec<Expr>,
    pub h_bar: Vec<Expr>,
}

#[derive(Clone, Debug)]
pub struct LeviCivitaModel {
    pub g: MetricField,
    pub a: ATensor,
    pub m: usize,
    pub m_bar: usize,
}

fn block_size(len: usize) -> Result<usize> {
    let m = (len as f64).sqrt().round() as usize;
    if m * m != len || m == 0 {
        return Err(Error::Invalid(format!("block with {len} entries is not a nonempty square")));
    }
    Ok(m)
}

/// `g = ±λ(1-λ) dx₁² + λ h + (1-λ) h̄`, `A = diag(λ, 0 (m times), 1 (m̄ times))`.
pub fn levi_civita_model(data: &LeviCivitaData) -> Result<LeviCivitaModel> {
    let n = data.chart.dim();
    let (m, m_bar) = (block_size(data.h.len())?, block_size(data.h_bar.len())?);
    if 1 + m + m_bar != n {
        return Err(Error::Dimension { expected: format!("1 + {m} + {m_bar}"), found: n });
    }
    if (1..n).any(|v| data.lambda.uses_var(v)) {
        return Err(Error::Invalid("λ must depend on the first coordinate only".into()));
    }
    for (block, lo, hi, name) in [(&data.h, 1, 1 + m, "h"), (&data.h_bar, 1 + m, n, "h̄")] {
        let size = hi - lo;
        for (idx, e) in block.iter().enumerate() {
            if (0..n).any(|v| (v < lo || v >= hi) && e.uses_var(v)) {
                return Err(Error::Invalid(format!("{name} must depend on its own block coordinates only")));
            }
            let (i, j) = (idx / size, idx % size);
            if j < i && block[j * size + i] != *e {
                return Err(Error::Invalid(format!("{name} must be symmetric")));
            }
        }
    }
    let lam_f = ScalarField::new(data.lambda.clone(), data.chart.coords().clone());
    for p in witness_grid(&data.chart) {
        let l = lam_f.eval(&p)?;
        if l.abs() < 1e-9 || (1.0 - l).abs() < 1e-9 {
            return Err(Error::Positivity { what: format!("λ ∉ {{0, 1}} (λ = {l})"), point: p });
        }
    }
    let lam = data.lambda.clone();
    let one_minus = Expr::sub(e_num(1.0), lam.clone());
    let mut g = vec![e_num(0.0); n * n];
    g[0] = Expr::mul(e_num(data.sign), Expr::mul(lam.clone(), one_minus.clone()));
    for i in 0..m {
        for j in 0..m {
            g[(1 + i) * n + 1 + j] = Expr::mul(lam.clone(), data.h[i * m + j].clone());
        }
    }
    for i in 0..m_bar {
        for j in 0..m_bar {
            g[(1 + m + i) * n + 1 + m + j] = Expr::mul(one_minus.clone(), data.h_bar[i * m_bar + j].clone());
        }
    }
    let g = MetricField::from_exprs(data.chart.clone(), g, None)?;
    g.validate(&data.chart.grid(3))?;
    let mut a = vec![lam];
    a.extend(std::iter::repeat_n(e_num(0.0), m));
    a.extend(std::iter::repeat_n(e_num(1.0), m_bar));
    let a = ATensor::new(data.chart.clone(), Components::Fields(fields(&data.chart, diag_exprs(a))));
    Ok(LeviCivitaModel { g, a, m, m_bar })
}

/// The round unit sphere in the gnomonic chart on `[-r, r]^n`:
/// `g_ij = ((1 + |u|²) δ_ij - u_i u_j) / (1 + |u|²)²`.
pub fn sphere_gnomonic_model(n: usize, radius_of_chart: f64) -> Result<MetricField> {
    if !(2..=4).contains(&n) {
        return Err(Error::Dimension { expected: "2..=4".into(), found: n });
    }
    let chart = Chart::cube(n, radius_of_chart)?;
    let r2 = Expr::sum((0..n).map(|i| Expr::pow(Expr::var(i), e_num(2.0))));
    let w = Expr::add(e_num(1.0), r2);
    let den = Expr::pow(w.clone(), e_num(2.0));
    let mut comps = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let cross = Expr::mul(Expr::var(i), Expr::var(j));
            let num = if i == j { Expr::sub(w.clone(), cross) } else { Expr::neg(cross) };
            comps.push(Expr::div(num, den.clone()));
        }
    }
    MetricField::from_exprs(chart, comps, Some((n, 0)))
}

/// `x ↦ Ax/|Ax|` on the sphere, written in the gnomonic chart as the
/// fractional-linear map `u_i ↦ (Σ A_ij u_j + A_i,n+1) / (Σ A_n+1,j u_j + A_n+1,n+1)`.
#[derive(Clone, Debug)]
pub struct BeltramiMap {
    pub matrix: DMatrix<f64>,
    pub map: ChartMap,
}

pub fn beltrami_transform(a: &DMatrix<f64>, chart: &Chart) -> Result<BeltramiMap> {
    let n = chart.dim();
    if a.nrows() != n + 1 || a.ncols() != n + 1 {
        return Err(Error::Dimension { expected: format!("{}x{}", n + 1, n + 1), found: a.nrows() });
    }
    let det = a.determinant();
    if (det - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid(format!("Beltrami matrix must have determinant 1, got {det}")));
    }
    let affine = |row: usize| {
        Expr::sum((0..n).map(|j| Expr::mul(e_num(a[(row, j)]), Expr::var(j))).chain([e_num(a[(row, n)])]))
    };
    let den = affine(n);
    let den_f = ScalarField::new(den.clone(), chart.coords().clone());
    let mut sign = 0.0;
    for p in chart.grid(if n == 2 { 21 } else { 7 }) {
        let d = den_f.eval(&p)?;
        if d == 0.0 || (sign != 0.0 && d.signum() != sign) {
            return Err(Error::Invalid(format!("Beltrami map leaves the chart: denominator vanishes near {p:?}")));
        }
        sign = d.signum();
    }
    let exprs = (0..n).map(|i| Expr::div(affine(i), den.clone())).collect();
    Ok(BeltramiMap { matrix: a.clone(), map: ChartMap::new(chart.clone(), chart.clone(), exprs)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_dini_pair() {
        let c = Chart::cube(2, 1.0).unwrap();
        let d = dini_pair_parse(&c, "3", "1").unwrap();
        let gb = d.g_bar.matrix(&[0.0, 0.0]).unwrap();
        assert!((gb[(0, 0)] - 2.0 / 9.0).abs() < 1e-15 && (gb[(1, 1)] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.g.matrix(&[0.5, 0.5]).unwrap()[(0, 0)], 2.0);
        assert!(matches!(dini_pair_parse(&c, "1", "2"), Err(Error::Positivity { .. })));
    }

    #[test]
    fn gnomonic_center_is_identity() {
        let g = sphere_gnomonic_model(2, 1.0).unwrap().matrix(&[0.0, 0.0]).unwrap();
        assert_eq!(g, DMatrix::identity(2, 2));
    }

    #[test]
    fn beltrami_diagonal_example() {
        let c = Chart::cube(2, 0.5).unwrap();
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, 0.5]));
        let b = beltrami_transform(&a, &c).unwrap();
        assert_eq!(b.map.apply(&[0.1, 0.2]).unwrap(), vec![0.4, 0.4]);
        let bad = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0, 1.0]));
        assert!(beltrami_transform(&bad, &c).is_err());
    }

    #[test]
    fn levi_civita_rejects_misplaced_dependence() {
        let c = Chart::cube(3, 1.0).unwrap();
        let data = LeviCivitaData {
            chart: c.clone(),
            lambda: parse_expression("0.5 + 0.25*sin(x)", c.coords()).unwrap(),
            sign: 1.0,
            h: vec![parse_expression("1 + z^2", c.coords()).unwrap()],
            h_bar: vec![Expr::num(1.0)],
        };
        assert!(levi_civita_model(&data).is_err());
    }
}
