use super::fields::{christoffel, ConnectionField, MetricField};
use super::point::PointTensor;
use crate::error::Result;
use crate::exprjet::Jet;

/// Jets of `R^m_ikp` (index `((m*n + i)*n + k)*n + p`) to `order`.
pub fn curvature_jets(conn: &ConnectionField, point: &[f64], order: usize) -> Result<Vec<Jet>> {
    let n = conn.dim();
    let g1 = conn.jets(point, order + 1)?;
    let g: Vec<Jet> = g1.iter().map(|j| j.truncate(order)).collect();
    let at = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    let mut out = Vec::with_capacity(n.pow(4));
    for m in 0..n {
        for i in 0..n {
            for k in 0..n {
                for p in 0..n {
                    let mut acc = &g1[at(m, i, p)].diff(k) - &g1[at(m, i, k)].diff(p);
                    for a in 0..n {
                        acc = &acc + &g[at(a, i, p)].mul_jet(&g[at(m, a, k)]);
                        acc = &acc - &g[at(a, i, k)].mul_jet(&g[at(m, a, p)]);
                    }
                    out.push(acc);
                }
            }
        }
    }
    Ok(out)
}

/// Jets of `R_ij = R^a_ija` to `order`.
pub fn ricci_jets(conn: &ConnectionField, point: &[f64], order: usize) -> Result<Vec<Jet>> {
    let n = conn.dim();
    let r = curvature_jets(conn, point, order)?;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = r[(i * n + j) * n].clone();
            for a in 1..n {
                acc = &acc + &r[((a * n + i) * n + j) * n + a];
            }
            out.push(acc);
        }
    }
    Ok(out)
}

/// `R^m_ikp` at a point.
pub fn curvature_tensor(conn: &ConnectionField, point: &[f64]) -> Result<PointTensor> {
    let data = curvature_jets(conn, point, 0)?.iter().map(Jet::value).collect();
    Ok(PointTensor::from_vec(conn.dim(), 1, 3, data))
}

/// `R_ij = R^a_ija` at a point.
pub fn ricci_tensor(conn: &ConnectionField, point: &[f64]) -> Result<PointTensor> {
    let data = ricci_jets(conn, point, 0)?.iter().map(Jet::value).collect();
    Ok(PointTensor::from_vec(conn.dim(), 0, 2, data))
}

/// Fully lowered curvature `R_hikp = g_hm R^m_ikp` of the Levi-Civita connection.
pub fn lowered_curvature(g: &MetricField, point: &[f64]) -> Result<PointTensor> {
    let n = g.dim();
    let r = curvature_tensor(&christoffel(g), point)?;
    let gm = g.matrix(point)?;
    let mut out = PointTensor::zeros(n, 0, 4);
    for idx in out.indices() {
        let v = (0..n).map(|m| gm[(idx[0], m)] * r.get(&[m, idx[1], idx[2], idx[3]])).sum();
        out.set(&idx, v);
    }
    Ok(out)
}

/// Sectional curvature of the plane spanned by `x`, `y`.
pub fn sectional_curvature(g: &MetricField, point: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    let n = g.dim();
    let r = lowered_curvature(g, point)?;
    let gm = g.matrix(point)?;
    let ip = |a: &[f64], b: &[f64]| (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| gm[(i, j)] * a[i] * b[j]).sum::<f64>();
    let mut num = 0.0;
    for idx in r.indices() {
        num += r.get(&idx) * x[idx[0]] * y[idx[1]] * x[idx[2]] * y[idx[3]];
    }
    Ok(num / (ip(x, x) * ip(y, y) - ip(x, y).powi(2)))
}
