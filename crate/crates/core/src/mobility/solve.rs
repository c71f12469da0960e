use super::MobilitySolution;
use crate::error::{Error, Result};
use crate::exprjet::Expr;
use crate::projinv::{tracefree_part, ProjectiveClass2D};
use crate::tensor::{ConnectionField, WeightedTensorField};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// What to solve the metrisability equation for.
#[derive(Clone, Copy, Debug)]
pub enum MobilityInput<'a> {
    Class(&'a ProjectiveClass2D),
    Connection(&'a ConnectionField),
}

impl MobilityInput<'_> {
    fn connection(&self) -> ConnectionField {
        match self {
            MobilityInput::Class(c) => c.representative(),
            MobilityInput::Connection(c) => (*c).clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MobilityOptions {
    /// Total degree of the polynomial ansatz.
    pub degree: usize,
    /// Collocation points per axis.
    pub per_axis: usize,
    pub sv_threshold: f64,
    /// Box to collocate on; defaults to the chart domain.
    pub region: Option<Vec<(f64, f64)>>,
}

impl Default for MobilityOptions {
    fn default() -> Self {
        Self { degree: 4, per_axis: 15, sv_threshold: 1e-8, region: None }
    }
}

#[derive(Clone, Debug)]
pub struct MobilityReport {
    pub solutions: Vec<MobilitySolution>,
    /// Orthonormal coefficient vectors of the solutions.
    pub coefficients: Vec<Vec<f64>>,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    pub dimension: usize,
    pub rows: usize,
    pub unknowns: usize,
    /// Set when some singular value lies within 10x of the threshold.
    pub warning: Option<String>,
}

fn monomials(n: usize, degree: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for d in 0..=degree {
        let mut cur = vec![0u32; n];
        fill(&mut out, &mut cur, 0, d as u32);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, pos: usize, left: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        fill(out, cur, pos + 1, left - k);
    }
}

/// Residual `E^{ij}_k` of a weight-2 `(2,0)` field from its values, first
/// partials (`[i,j,k] = ∂_k σ^{ij}`) and the connection at one point.
fn residual_from_values(n: usize, sig: &[f64], dsig: &[f64], gamma: &[f64]) -> Vec<f64> {
    let gam = |i: usize, j: usize, k: usize| gamma[(i * n + j) * n + k];
    let c = 2.0 / (n + 1) as f64;
    let mut d = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut v = dsig[(i * n + j) * n + k];
                for s in 0..n {
                    v += gam(i, k, s) * sig[s * n + j] + gam(j, k, s) * sig[i * n + s] - c * gam(s, k, s) * sig[i * n + j];
                }
                d[(i * n + j) * n + k] = v;
            }
        }
    }
    tracefree_part(&d, n)
}

/// Basis of the numerical nullspace of the collocated metrisability
/// system over a polynomial ansatz of the given total degree.
pub fn solve_mobility(input: MobilityInput<'_>, opts: &MobilityOptions) -> Result<MobilityReport> {
    if opts.degree < 1 {
        return Err(Error::Invalid("ansatz degree must be at least 1".into()));
    }
    let conn = input.connection();
    let chart = match &opts.region {
        Some(r) => conn.chart().with_domain(r.clone())?,
        None => conn.chart().clone(),
    };
    let n = chart.dim();
    let center = chart.center();
    let half: Vec<f64> = chart.domain().iter().map(|(a, b)| 0.5 * (b - a)).collect();
    if half.iter().any(|&h| h <= 0.0) {
        return Err(Error::Invalid("collocation region must have positive width".into()));
    }
    let monos = monomials(n, opts.degree);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let unknowns = pairs.len() * monos.len();
    let points = chart.grid(opts.per_axis);
    let rows_per_point = pairs.len() * n;
    let rows = rows_per_point * points.len();
    if rows < unknowns {
        return Err(Error::GridTooSmall { rows, cols: unknowns });
    }

    let blocks: Vec<Vec<f64>> = points
        .par_iter()
        .map(|p| -> Result<Vec<f64>> {
            let gamma = conn.values(p)?;
            let s: Vec<f64> = (0..n).map(|i| (p[i] - center[i]) / half[i]).collect();
            // block is row-major rows_per_point x unknowns
            let mut block = vec![0.0; rows_per_point * unknowns];
            for (m, e) in monos.iter().enumerate() {
                let val: f64 = (0..n).map(|i| s[i].powi(e[i] as i32)).product();
                let grad: Vec<f64> = (0..n)
                    .map(|k| {
                        if e[k] == 0 {
                            return 0.0;
                        }
                        let mut v = e[k] as f64 * s[k].powi(e[k] as i32 - 1) / half[k];
                        for i in (0..n).filter(|&i| i != k) {
                            v *= s[i].powi(e[i] as i32);
                        }
                        v
                    })
                    .collect();
                for (pi, &(a, b)) in pairs.iter().enumerate() {
                    let mut sig = vec![0.0; n * n];
                    let mut dsig = vec![0.0; n * n * n];
                    sig[a * n + b] = val;
                    sig[b * n + a] = val;
                    for k in 0..n {
                        dsig[(a * n + b) * n + k] = grad[k];
                        dsig[(b * n + a) * n + k] = grad[k];
                    }
                    let e_res = residual_from_values(n, &sig, &dsig, &gamma);
                    let col = pi * monos.len() + m;
                    for (ri, &(i, j)) in pairs.iter().enumerate() {
                        for k in 0..n {
                            block[(ri * n + k) * unknowns + col] = e_res[(i * n + j) * n + k];
                        }
                    }
                }
            }
            Ok(block)
        })
        .collect::<Result<_>>()?;
    let raw = DMatrix::from_row_iterator(rows, unknowns, blocks.into_iter().flatten());
    let mut normalized = raw.clone();
    for mut row in normalized.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }

    let svd = normalized.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let thr = opts.sv_threshold;
    let null: Vec<usize> = order.iter().copied().filter(|&k| svd.singular_values[k] < thr).collect();
    let warning = singular_values
        .iter()
        .any(|&s| s >= thr / 10.0 && s <= thr * 10.0)
        .then(|| format!("singular value within 10x of threshold {thr:e}; spectrum {:?}", singular_values.iter().map(|s| format!("{s:.3e}")).collect::<Vec<_>>()));

    let scaled: Vec<Expr> = (0..n)
        .map(|i| Expr::div(Expr::sub(Expr::var(i), Expr::num(center[i])), Expr::num(half[i])))
        .collect();
    let mono_expr = |e: &[u32]| Expr::product((0..n).filter(|&i| e[i] > 0).map(|i| Expr::pow(scaled[i].clone(), Expr::num(e[i] as f64))));

    let mut solutions = Vec::with_capacity(null.len());
    let mut coefficients = Vec::with_capacity(null.len());
    for k in null.iter().rev() {
        let mut v: Vec<f64> = v_t.row(*k).iter().copied().collect();
        let lead = v.iter().copied().fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
        if lead < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
        let residual_norm = (&raw * DMatrix::from_column_slice(unknowns, 1, &v)).amax();
        let cutoff = 1e-14 * v.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut comps = vec![Expr::num(0.0); n * n];
        for (pi, &(a, b)) in pairs.iter().enumerate() {
            let terms = monos.iter().enumerate().filter_map(|(m, e)| {
                let c = v[pi * monos.len() + m];
                (c.abs() > cutoff).then(|| Expr::mul(Expr::num(c), mono_expr(e)))
            });
            let poly = Expr::sum(terms);
            comps[a * n + b] = poly.clone();
            comps[b * n + a] = poly;
        }
        let sigma = WeightedTensorField::from_exprs(chart.clone(), 2, 0, 2.0, comps)?;
        solutions.push(MobilitySolution { sigma, residual_norm });
        coefficients.push(v);
    }
    Ok(MobilityReport { dimension: solutions.len(), solutions, coefficients, singular_values, rows, unknowns, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Chart;

    #[test]
    fn monomial_count() {
        assert_eq!(monomials(2, 4).len(), 15);
        assert_eq!(monomials(3, 2).len(), 10);
        assert_eq!(monomials(2, 1), vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn grid_too_small() {
        let c = Chart::cube(2, 1.0).unwrap();
        let opts = MobilityOptions { degree: 4, per_axis: 2, ..Default::default() };
        let err = solve_mobility(MobilityInput::Connection(&ConnectionField::flat(c)), &opts).unwrap_err();
        assert!(matches!(err, Error::GridTooSmall { rows: 24, cols: 45 }));
    }
}
