//! Projectively invariant operators and tensors.

use crate::error::{Error, Result};
use crate::exprjet::{Expr, Jet, ScalarField};
use crate::tensor::{
    christoffel, lowered_curvature, ricci_jets, Chart, Components, ConnectionField, MetricField, PointTensor,
    WeightedTensorField,
};

/// A 2D projective structure given by the coefficients of
/// `y'' = K0 + K1 y' + K2 y'^2 + K3 y'^3`.
#[derive(Clone, Debug)]
pub struct ProjectiveClass2D {
    chart: Chart,
    /// `K0..K3` in order.
    comps: Components,
}

impl ProjectiveClass2D {
    pub fn from_exprs(chart: Chart, k: [Expr; 4]) -> Result<Self> {
        if chart.dim() != 2 {
            return Err(Error::Dimension { expected: "2".into(), found: chart.dim() });
        }
        let coords = chart.coords().clone();
        let fields = k.into_iter().map(|e| ScalarField::new(e, coords.clone())).collect();
        Ok(Self { chart, comps: Components::Fields(fields) })
    }

    pub fn parse(chart: Chart, k: [&str; 4]) -> Result<Self> {
        let coords = chart.coords().clone();
        let p = |s: &str| crate::exprjet::parse_expression(s, &coords);
        Self::from_exprs(chart.clone(), [p(k[0])?, p(k[1])?, p(k[2])?, p(k[3])?])
    }

    pub fn flat(chart: Chart) -> Result<Self> {
        Self::from_exprs(chart, [Expr::num(0.0), Expr::num(0.0), Expr::num(0.0), Expr::num(0.0)])
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn components(&self) -> &Components {
        &self.comps
    }

    pub fn jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.comps.jets(point, order)
    }

    pub fn values(&self, point: &[f64]) -> Result<[f64; 4]> {
        let v = self.comps.values(point)?;
        Ok([v[0], v[1], v[2], v[3]])
    }

    /// The connection with `Γ²₁₁ = -K0, Γ¹₁₁ = K1, Γ²₂₂ = -K2, Γ¹₂₂ = K3`
    /// and all other symbols zero; its K-coefficients are this class.
    pub fn representative(&self) -> ConnectionField {
        let class = self.clone();
        let comps = Components::computed(move |p, order| {
            let k = class.jets(p, order)?;
            let zero = Jet::constant(2, order, 0.0);
            // index (i*2 + j)*2 + k
            let mut g = vec![zero; 8];
            g[0] = k[1].clone();
            g[3] = k[3].clone();
            g[4] = -k[0].clone();
            g[7] = -k[2].clone();
            Ok(g)
        });
        ConnectionField::computed(self.chart.clone(), comps)
    }
}

/// `K0 = -Γ²₁₁, K1 = Γ¹₁₁ - 2Γ²₁₂, K2 = 2Γ¹₁₂ - Γ²₂₂, K3 = Γ¹₂₂`.
pub fn k_coefficients(conn: &ConnectionField) -> Result<ProjectiveClass2D> {
    if conn.dim() != 2 {
        return Err(Error::Dimension { expected: "2".into(), found: conn.dim() });
    }
    let c = conn.clone();
    let comps = Components::computed(move |p, order| {
        let g = c.jets(p, order)?;
        let at = |i: usize, j: usize, k: usize| &g[(i * 2 + j) * 2 + k];
        Ok(vec![
            -at(1, 0, 0).clone(),
            at(0, 0, 0) - &at(1, 0, 1).scale(2.0),
            &at(0, 0, 1).scale(2.0) - at(1, 1, 1),
            at(0, 1, 1).clone(),
        ])
    });
    Ok(ProjectiveClass2D { chart: conn.chart().clone(), comps })
}

/// Max deviation of `Γ_b - Γ_a` from the shift form `δ⊗φ + φ⊗δ` at a
/// point, with `φ_k` recovered from the trace. Zero iff the connections
/// share their geodesics at that point.
pub fn projective_equivalence_defect(a: &ConnectionField, b: &ConnectionField, point: &[f64]) -> Result<f64> {
    a.chart().ensure_compatible(b.chart())?;
    let n = a.dim();
    let (ga, gb) = (a.values(point)?, b.values(point)?);
    let d = |i: usize, j: usize, k: usize| gb[(i * n + j) * n + k] - ga[(i * n + j) * n + k];
    let phi: Vec<f64> = (0..n).map(|k| (0..n).map(|s| d(s, s, k)).sum::<f64>() / (n + 1) as f64).collect();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let shift = if i == j { phi[k] } else { 0.0 } + if i == k { phi[j] } else { 0.0 };
                worst = worst.max((d(i, j, k) - shift).abs());
            }
        }
    }
    Ok(worst)
}

fn deriv(t: &WeightedTensorField, conn: &ConnectionField, point: &[f64]) -> Result<Vec<f64>> {
    Ok(t.covariant_derivative_jets(conn, point, 0)?.iter().map(Jet::value).collect())
}

/// `K_{i,j} + K_{j,i}` for a weight −2 one-form.
pub fn projective_killing_residual_1form(k: &WeightedTensorField, conn: &ConnectionField, point: &[f64]) -> Result<PointTensor> {
    k.require(0, 1, -2.0)?;
    let n = k.dim();
    let d = deriv(k, conn, point)?;
    let data = (0..n * n).map(|ij| d[ij] + d[(ij % n) * n + ij / n]).collect();
    Ok(PointTensor::from_vec(n, 0, 2, data))
}

/// `K_{ij,k} + K_{jk,i} + K_{ki,j}` for a symmetric weight −4 (0,2) field.
pub fn projective_killing_residual_02(k: &WeightedTensorField, conn: &ConnectionField, point: &[f64]) -> Result<PointTensor> {
    k.require(0, 2, -4.0)?;
    k.check_symmetric(&[point.to_vec()])?;
    Ok(symmetrized_derivative(k, conn, point)?)
}

/// Symmetrized covariant derivative of a (0,2) field of any weight.
pub fn symmetrized_derivative(k: &WeightedTensorField, conn: &ConnectionField, point: &[f64]) -> Result<PointTensor> {
    let n = k.dim();
    let d = deriv(k, conn, point)?;
    let at = |i: usize, j: usize, l: usize| d[(i * n + j) * n + l];
    let mut out = PointTensor::zeros(n, 0, 3);
    for idx in out.indices() {
        let (i, j, l) = (idx[0], idx[1], idx[2]);
        out.set(&idx, at(i, j, l) + at(j, l, i) + at(l, i, j));
    }
    Ok(out)
}

/// `v^i_{,j} - (1/n) v^s_{,s} δ^i_j` for a weight 1 vector field.
pub fn tracefree_gradient_vector(v: &WeightedTensorField, conn: &ConnectionField, point: &[f64]) -> Result<PointTensor> {
    v.require(1, 0, 1.0)?;
    let n = v.dim();
    let mut d = deriv(v, conn, point)?;
    let tr: f64 = (0..n).map(|s| d[s * n + s]).sum();
    for i in 0..n {
        d[i * n + i] -= tr / n as f64;
    }
    Ok(PointTensor::from_vec(n, 1, 1, d))
}

/// `σ^{ij}_{,k} - (1/(n+1)) (σ^{is}_{,s} δ^j_k + σ^{js}_{,s} δ^i_k)`.
pub fn metrisability_residual(sigma: &WeightedTensorField, conn: &ConnectionField, point: &[f64]) -> Result<PointTensor> {
    sigma.require(2, 0, 2.0)?;
    sigma.check_symmetric(&[point.to_vec()])?;
    let n = sigma.dim();
    let d = deriv(sigma, conn, point)?;
    Ok(PointTensor::from_vec(n, 2, 1, tracefree_part(&d, n)))
}

pub(crate) fn tracefree_part<T>(d: &[T], n: usize) -> Vec<T>
where
    T: Clone + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + Scale,
{
    let at = |i: usize, j: usize, k: usize| d[(i * n + j) * n + k].clone();
    let tr: Vec<T> = (0..n)
        .map(|i| (1..n).fold(at(i, 0, 0), |acc, s| acc + at(i, s, s)))
        .collect();
    let c = 1.0 / (n + 1) as f64;
    let mut out = d.to_vec();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let idx = (i * n + j) * n + k;
                if j == k {
                    out[idx] = out[idx].clone() - tr[i].scaled(c);
                }
                if i == k {
                    out[idx] = out[idx].clone() - tr[j].scaled(c);
                }
            }
        }
    }
    out
}

pub(crate) trait Scale {
    fn scaled(&self, c: f64) -> Self;
}

impl Scale for f64 {
    fn scaled(&self, c: f64) -> f64 {
        self * c
    }
}

impl Scale for Jet {
    fn scaled(&self, c: f64) -> Jet {
        self.scale(c)
    }
}

/// The four equations of the 2D metrisability system in terms of `K0..K3`,
/// evaluated on `σ = (σ¹¹, σ¹², σ²²)` jets (order ≥ 1).
///
/// They are the linear combinations `E^{22}_1`, `E^{22}_2 - 2 E^{12}_1`,
/// `E^{11}_1 - 2 E^{12}_2`, `E^{11}_2` of the metrisability residual taken
/// with respect to the representative connection.
pub fn metrisability_system_2d(k: &[f64; 4], s11: &Jet, s12: &Jet, s22: &Jet) -> [f64; 4] {
    let d = |j: &Jet, v: usize| j.partial(&[v]);
    let (a, b, c) = (s11.value(), s12.value(), s22.value());
    [
        d(s22, 0) - 2.0 / 3.0 * k[1] * c - 2.0 * k[0] * b,
        d(s22, 1) - 2.0 * d(s12, 0) - 4.0 / 3.0 * k[2] * c - 2.0 / 3.0 * k[1] * b + 2.0 * k[0] * a,
        -2.0 * d(s12, 1) + d(s11, 0) - 2.0 * k[3] * c + 2.0 / 3.0 * k[2] * b + 4.0 / 3.0 * k[1] * a,
        d(s11, 1) + 2.0 * k[3] * b + 2.0 / 3.0 * k[2] * a,
    ]
}

/// Projective Weyl tensor `W^h_ijk`, with `R_[jk] = R_jk - R_kj`.
pub fn weyl_tensor(conn: &ConnectionField, point: &[f64]) -> Result<PointTensor> {
    let n = conn.dim();
    let r = crate::tensor::curvature_tensor(conn, point)?;
    let ric: Vec<f64> = ricci_jets(conn, point, 0)?.iter().map(Jet::value).collect();
    let rc = |i: usize, j: usize| ric[i * n + j];
    let skew = |i: usize, j: usize| rc(i, j) - rc(j, i);
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let (a, b) = (1.0 / (n - 1) as f64, 1.0 / (n + 1) as f64);
    let mut w = PointTensor::zeros(n, 1, 3);
    for idx in w.indices() {
        let (h, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
        let v = r.get(&idx) - a * (delta(h, k) * rc(i, j) - delta(h, j) * rc(i, k))
            + b * (delta(h, i) * skew(j, k) - a * (delta(h, k) * skew(j, i) - delta(h, j) * skew(k, i)));
        w.set(&idx, v);
    }
    Ok(w)
}

/// Liouville data of a 2D metric at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct LiouvilleData {
    /// `L_ijk = R_ij,k - R_ik,j`.
    pub tensor: PointTensor,
    /// `(L_1, L_2)` with `L_i = L_i12`.
    pub components: [f64; 2],
}

/// `L_i12 = LIOUVILLE_SCALE * L_i(K)`: ratio between the metric form of the
/// Liouville tensor and the pair computed from the K-coefficients.
pub const LIOUVILLE_SCALE: f64 = -1.0 / 3.0;

/// Liouville tensor of a 2D metric via `R_ij,k - R_ik,j` (Levi-Civita derivative).
pub fn liouville_tensor(g: &MetricField, point: &[f64]) -> Result<LiouvilleData> {
    if g.dim() != 2 {
        return Err(Error::Dimension { expected: "2".into(), found: g.dim() });
    }
    let lc = christoffel(g);
    let ric = ricci_jets(&lc, point, 1)?;
    let ric_field = WeightedTensorField::new(g.chart().clone(), 0, 2, 0.0, Components::computed({
        let r = ric.clone();
        move |_, order| Ok(r.iter().map(|j| j.truncate(order)).collect())
    }))?;
    let d = deriv(&ric_field, &lc, point)?;
    let mut l = PointTensor::zeros(2, 0, 3);
    for idx in l.indices() {
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        l.set(&idx, d[(i * 2 + j) * 2 + k] - d[(i * 2 + k) * 2 + j]);
    }
    let components = [l.get(&[0, 0, 1]), l.get(&[1, 0, 1])];
    Ok(LiouvilleData { tensor: l, components })
}

/// `(L_1, L_2)` from the K-coefficients of a 2D projective class.
pub fn liouville_from_class(class: &ProjectiveClass2D, point: &[f64]) -> Result<[f64; 2]> {
    let k = class.jets(point, 2)?;
    let v = |i: usize| k[i].value();
    let d = |i: usize, vars: &[usize]| k[i].partial(vars);
    let (x, y) = (0, 1);
    let l1 = 2.0 * d(1, &[x, y]) - d(2, &[x, x]) - 3.0 * d(0, &[y, y]) - 6.0 * v(0) * d(3, &[x]) - 3.0 * v(3) * d(0, &[x])
        + 3.0 * v(0) * d(2, &[y])
        + 3.0 * v(2) * d(0, &[y])
        + v(1) * d(2, &[x])
        - 2.0 * v(1) * d(1, &[y]);
    let l2 = 2.0 * d(2, &[x, y]) - d(1, &[y, y]) - 3.0 * d(3, &[x, x]) + 6.0 * v(3) * d(0, &[y]) + 3.0 * v(0) * d(3, &[y])
        - 3.0 * v(3) * d(1, &[x])
        - 3.0 * v(1) * d(3, &[x])
        - v(2) * d(1, &[y])
        + 2.0 * v(2) * d(2, &[x]);
    Ok([l1, l2])
}

/// Outcome of [`constant_curvature_test`].
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureFit {
    pub constant: bool,
    /// Fitted sectional curvature `c` in `R_hijk = c (g_hj g_ik - g_hk g_ij)`.
    pub curvature: f64,
    pub max_deviation: f64,
}

/// Least-squares fit of a single sectional curvature over all components
/// at all points.
pub fn constant_curvature_test(g: &MetricField, points: &[Vec<f64>], tol: f64) -> Result<CurvatureFit> {
    if points.len() < 2 {
        return Err(Error::Invalid("constant curvature test needs at least two points".into()));
    }
    let mut rows = Vec::new();
    for p in points {
        let r = lowered_curvature(g, p)?;
        let gm = g.matrix(p)?;
        for idx in r.indices() {
            let (h, i, j, k) = (idx[0], idx[1], idx[2], idx[3]);
            rows.push((gm[(h, j)] * gm[(i, k)] - gm[(h, k)] * gm[(i, j)], r.get(&idx)));
        }
    }
    let (num, den) = rows.iter().fold((0.0, 0.0), |(a, b), (m, r)| (a + m * r, b + m * m));
    let c = if den > 0.0 { num / den } else { 0.0 };
    let max_deviation = rows.iter().fold(0.0f64, |m, (b, r)| m.max((r - c * b).abs()));
    Ok(CurvatureFit { constant: max_deviation <= tol, curvature: c, max_deviation })
}
