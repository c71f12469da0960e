//! Solutions of the metrisability equation and what they carry: metrics,
//! the A-tensor, the Sinjukov form, Killing tensors, adapted frames and
//! pullback representation matrices.

mod frame;
mod solve;
mod transform;

pub use frame::{adapted_frame, AdaptedFrame, EigenStructure, LcPattern};
pub use solve::{solve_mobility, MobilityInput, MobilityOptions, MobilityReport};
pub use transform::{transformation_matrix, TransformationMatrix, DEFAULT_FIT_TOLERANCE};

use crate::error::{Error, Result};
use crate::exprjet::Jet;
use crate::projinv::{metrisability_residual, symmetrized_derivative};
use crate::tensor::{
    christoffel, jet_det, jet_inverse, volume_weight_field, Chart, Components, ConnectionField, MetricField,
    WeightedTensorField,
};
use nalgebra::DMatrix;

/// Coarse grid used for pointwise verification when no grid is supplied.
pub fn verification_grid(chart: &Chart) -> Vec<Vec<f64>> {
    chart.grid(if chart.dim() == 2 { 5 } else { 3 })
}

/// A symmetric weight-2 `(2,0)` field `σ` together with its residual.
#[derive(Clone, Debug)]
pub struct MobilitySolution {
    pub sigma: WeightedTensorField,
    pub residual_norm: f64,
}

impl MobilitySolution {
    pub fn new(sigma: WeightedTensorField, residual_norm: f64) -> Result<Self> {
        sigma.require(2, 0, 2.0)?;
        Ok(Self { sigma, residual_norm })
    }

    /// Wraps `sigma`, measuring its residual against `conn` on `points`.
    pub fn verified(sigma: WeightedTensorField, conn: &ConnectionField, points: &[Vec<f64>]) -> Result<Self> {
        sigma.require(2, 0, 2.0)?;
        let mut worst = 0.0f64;
        for p in points {
            worst = worst.max(metrisability_residual(&sigma, conn, p)?.max_abs());
        }
        Ok(Self { sigma, residual_norm: worst })
    }

    pub fn chart(&self) -> &Chart {
        self.sigma.chart()
    }

    pub fn matrix(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.sigma.dim();
        Ok(DMatrix::from_row_slice(n, n, self.sigma.at(p)?.data()))
    }

    /// First point (if any) where `det σ` vanishes relative to its scale.
    pub fn degeneracy_witness(&self, points: &[Vec<f64>]) -> Result<Option<Vec<f64>>> {
        for p in points {
            let m = self.matrix(p)?;
            let scale = m.amax().powi(m.nrows() as i32);
            if m.determinant().abs() <= 1e-10 * scale.max(f64::MIN_POSITIVE) {
                return Ok(Some(p.clone()));
            }
        }
        Ok(None)
    }
}

/// `Σ w_a σ_a`; the residual is bounded by `Σ |w_a| r_a`.
pub fn linear_combination(basis: &[MobilitySolution], weights: &[f64]) -> Result<MobilitySolution> {
    if basis.is_empty() || basis.len() != weights.len() {
        return Err(Error::Dimension { expected: basis.len().to_string(), found: weights.len() });
    }
    let chart = basis[0].chart().clone();
    for b in basis {
        b.chart().ensure_compatible(&chart)?;
    }
    let parts: Vec<(f64, WeightedTensorField)> = weights.iter().copied().zip(basis.iter().map(|b| b.sigma.clone())).collect();
    let comps = Components::computed(move |p, order| {
        let mut acc: Option<Vec<Jet>> = None;
        for (w, s) in &parts {
            let js = s.jets(p, order)?;
            acc = Some(match acc {
                None => js.iter().map(|j| j.scale(*w)).collect(),
                Some(a) => a.iter().zip(&js).map(|(x, y)| x + &y.scale(*w)).collect(),
            });
        }
        Ok(acc.unwrap_or_default())
    });
    let residual_norm = basis.iter().zip(weights).map(|(b, w)| w.abs() * b.residual_norm).sum();
    MobilitySolution::new(WeightedTensorField::new(chart, 2, 0, 2.0, comps)?, residual_norm)
}

/// `σ^{ij} = g^{ij} |det g|^{1/(n+1)}`.
pub fn sigma_from_metric(g: &MetricField) -> Result<MobilitySolution> {
    let n = g.dim();
    let metric = g.clone();
    let comps = Components::computed(move |p, order| {
        let gj = metric.jets(p, order)?;
        let singular = || Error::Singular { what: "metric".into(), point: p.to_vec() };
        let inv = jet_inverse(&gj, n).ok_or_else(singular)?;
        let f = jet_det(&gj, n).abs().powf(1.0 / (n + 1) as f64).ok_or_else(singular)?;
        Ok(inv.iter().map(|j| j.mul_jet(&f)).collect())
    });
    let sigma = WeightedTensorField::new(g.chart().clone(), 2, 0, 2.0, comps)?;
    MobilitySolution::verified(sigma, &christoffel(g), &verification_grid(g.chart()))
}

/// `g^{ij} = |det σ| σ^{ij}`; fails where `σ` degenerates.
pub fn metric_from_sigma(sol: &MobilitySolution) -> Result<MetricField> {
    metric_from_sigma_checked(sol, &verification_grid(sol.chart()))
}

pub fn metric_from_sigma_checked(sol: &MobilitySolution, points: &[Vec<f64>]) -> Result<MetricField> {
    if let Some(p) = sol.degeneracy_witness(points)? {
        return Err(Error::Singular { what: "sigma (det σ = 0)".into(), point: p });
    }
    let n = sol.sigma.dim();
    let sigma = sol.sigma.clone();
    let comps = Components::computed(move |p, order| {
        let s = sigma.jets(p, order)?;
        let singular = || Error::Singular { what: "sigma (det σ = 0)".into(), point: p.to_vec() };
        let d = jet_det(&s, n).abs();
        let scaled: Vec<Jet> = s.iter().map(|j| j.mul_jet(&d)).collect();
        jet_inverse(&scaled, n).ok_or_else(singular)
    });
    Ok(MetricField::computed(sol.chart().clone(), comps, None))
}

/// The `(1,1)` tensor `A^i_j`, stored row-major.
#[derive(Clone, Debug)]
pub struct ATensor {
    chart: Chart,
    comps: Components,
}

impl ATensor {
    pub fn new(chart: Chart, comps: Components) -> Self {
        Self { chart, comps }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn jets(&self, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.comps.jets(p, order)
    }

    pub fn matrix(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        Ok(DMatrix::from_row_slice(n, n, &self.comps.values(p)?))
    }

    /// As a plain `(1,1)` field.
    pub fn as_tensor_field(&self) -> WeightedTensorField {
        WeightedTensorField::new(self.chart.clone(), 1, 1, 0.0, self.comps.clone()).expect("n x n components")
    }

    /// `max |g_is A^s_j - g_js A^s_i|`.
    pub fn self_adjoint_defect(&self, g: &MetricField, p: &[f64]) -> Result<f64> {
        let ga = g.matrix(p)? * self.matrix(p)?;
        Ok((&ga - ga.transpose()).amax())
    }

    /// Eigenvalues at `p`, ascending (real parts; A is g-self-adjoint).
    pub fn eigenvalues(&self, g: &MetricField, p: &[f64]) -> Result<Vec<f64>> {
        Ok(adapted_frame(g, self, p)?.eigen.eigenvalues_ascending())
    }
}

/// `A = σ̄ σ^{-1}`.
pub fn a_tensor(sigma: &MobilitySolution, sigma_bar: &MobilitySolution) -> Result<ATensor> {
    sigma.chart().ensure_compatible(sigma_bar.chart())?;
    let n = sigma.sigma.dim();
    let (s, sb) = (sigma.sigma.clone(), sigma_bar.sigma.clone());
    let comps = Components::computed(move |p, order| {
        let inv = jet_inverse(&s.jets(p, order)?, n).ok_or_else(|| Error::Singular { what: "sigma".into(), point: p.to_vec() })?;
        Ok(crate::tensor::jet_matmul(&sb.jets(p, order)?, &inv, n))
    });
    Ok(ATensor::new(sigma.chart().clone(), comps))
}

/// `A = |det ḡ / det g|^{1/(n+1)} ḡ^{-1} g`.
pub fn a_tensor_from_metrics(g: &MetricField, g_bar: &MetricField) -> Result<ATensor> {
    g.chart().ensure_compatible(g_bar.chart())?;
    let n = g.dim();
    let (g, gb) = (g.clone(), g_bar.clone());
    let comps = Components::computed(move |p, order| {
        let singular = || Error::Singular { what: "metric".into(), point: p.to_vec() };
        let gj = g.jets(p, order)?;
        let gbj = gb.jets(p, order)?;
        let ratio = jet_det(&gbj, n).div_jet(&jet_det(&gj, n)).ok_or_else(singular)?;
        let f = ratio.abs().powf(1.0 / (n + 1) as f64).ok_or_else(singular)?;
        let inv = jet_inverse(&gbj, n).ok_or_else(singular)?;
        Ok(crate::tensor::jet_matmul(&inv, &gj, n).iter().map(|j| j.mul_jet(&f)).collect())
    });
    Ok(ATensor::new(g_bar.chart().clone(), comps))
}

/// `a^{ij}` and `λ^i` of the Sinjukov form of the metrisability equation.
#[derive(Clone, Debug)]
pub struct SinjukovForm {
    /// `a^{ij} = σ^{ij} |det g|^{-1/(n+1)}`, a plain tensor.
    pub a: WeightedTensorField,
    /// `λ^i = ½ g^{is} ∂_s (a^{pq} g_pq)`.
    pub lambda: WeightedTensorField,
    metric: MetricField,
}

impl SinjukovForm {
    /// `max |a^{ij}_{,k} - λ^i δ^j_k - λ^j δ^i_k|` at `p`, derivatives by `∇^g`.
    pub fn residual(&self, p: &[f64]) -> Result<f64> {
        let n = self.a.dim();
        let lc = christoffel(&self.metric);
        let da = self.a.covariant_derivative_jets(&lc, p, 0)?;
        let lam = self.lambda.at(p)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut r = da[(i * n + j) * n + k].value();
                    if j == k {
                        r -= lam.data()[i];
                    }
                    if i == k {
                        r -= lam.data()[j];
                    }
                    worst = worst.max(r.abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Tolerance on the metrisability residual accepted by [`sinjukov_form`].
pub const SOLUTION_TOLERANCE: f64 = 1e-6;

pub fn sinjukov_form(sigma: &MobilitySolution, g: &MetricField) -> Result<SinjukovForm> {
    sigma.chart().ensure_compatible(g.chart())?;
    let lc = christoffel(g);
    let mut worst = 0.0f64;
    for p in verification_grid(g.chart()) {
        worst = worst.max(metrisability_residual(&sigma.sigma, &lc, &p)?.max_abs());
    }
    if worst > SOLUTION_TOLERANCE {
        return Err(Error::NotASolution { residual: worst, tolerance: SOLUTION_TOLERANCE });
    }
    let n = g.dim();
    let a = sigma.sigma.times_scalar(&volume_weight_field(g, -2.0 / (n + 1) as f64))?;
    let (aa, gg) = (a.clone(), g.clone());
    let lambda_comps = Components::computed(move |p, order| {
        let aj = aa.jets(p, order + 1)?;
        let gj = gg.jets(p, order + 1)?;
        let mut trace = aj[0].mul_jet(&gj[0]);
        for k in 1..n * n {
            trace = &trace + &aj[k].mul_jet(&gj[k]);
        }
        let g0: Vec<Jet> = gj.iter().map(|j| j.truncate(order)).collect();
        let ginv = jet_inverse(&g0, n).ok_or_else(|| Error::Singular { what: "metric".into(), point: p.to_vec() })?;
        let grad: Vec<Jet> = (0..n).map(|s| trace.diff(s)).collect();
        Ok((0..n)
            .map(|i| {
                let mut acc = ginv[i * n].mul_jet(&grad[0]);
                for s in 1..n {
                    acc = &acc + &ginv[i * n + s].mul_jet(&grad[s]);
                }
                acc.scale(0.5)
            })
            .collect())
    });
    let lambda = WeightedTensorField::new(g.chart().clone(), 1, 0, 0.0, lambda_comps)?;
    Ok(SinjukovForm { a: a.with_weight(0.0), lambda, metric: g.clone() })
}

/// `K̂ = |det g / det ḡ|^{2/(n+1)} ḡ` and its Killing residual under `∇^g`.
#[derive(Clone, Debug)]
pub struct KillingPair {
    pub khat: WeightedTensorField,
    /// Max of the symmetrized `∇^g` derivative over the verification grid.
    pub residual: f64,
}

pub fn killing_tensor_from_pair(g: &MetricField, g_bar: &MetricField) -> Result<KillingPair> {
    g.chart().ensure_compatible(g_bar.chart())?;
    let n = g.dim();
    let w = 4.0 / (n + 1) as f64;
    let k = WeightedTensorField::from_metric(g_bar).times_scalar(&volume_weight_field(g_bar, -w))?;
    let khat = k.times_scalar(&volume_weight_field(g, w))?.with_weight(0.0);
    let lc = christoffel(g);
    let mut residual = 0.0f64;
    for p in verification_grid(g.chart()) {
        residual = residual.max(symmetrized_derivative(&khat, &lc, &p)?.max_abs());
    }
    Ok(KillingPair { khat, residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> Chart {
        Chart::cube(2, 1.0).unwrap()
    }

    #[test]
    fn sigma_of_scaled_identity() {
        let g = MetricField::parse(plane(), &["2", "0", "0", "2"], Some((2, 0))).unwrap();
        let s = sigma_from_metric(&g).unwrap();
        let v = s.sigma.at(&[0.1, 0.2]).unwrap();
        let expected = 4f64.powf(1.0 / 3.0) / 2.0;
        assert!((v.data()[0] - expected).abs() < 1e-15 && v.data()[1] == 0.0);
        let back = metric_from_sigma(&s).unwrap().matrix(&[0.0, 0.0]).unwrap();
        assert!((back[(0, 0)] - 2.0).abs() < 1e-14 && (back[(1, 1)] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_sigma_is_rejected() {
        let sigma = WeightedTensorField::parse(plane(), 2, 0, 2.0, &["x", "0", "0", "1"]).unwrap();
        let sol = MobilitySolution::new(sigma, 0.0).unwrap();
        match metric_from_sigma(&sol) {
            Err(Error::Singular { point, .. }) => assert_eq!(point[0], 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sinjukov_of_metric_itself() {
        let g = MetricField::parse(plane(), &["2 + sin(x)", "0.1*x*y", "0.1*x*y", "3 + y^2"], Some((2, 0))).unwrap();
        let form = sinjukov_form(&sigma_from_metric(&g).unwrap(), &g).unwrap();
        let p = [0.3, -0.6];
        let a = form.a.at(&p).unwrap();
        let ginv = g.matrix(&p).unwrap().try_inverse().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((a.get(&[i, j]) - ginv[(i, j)]).abs() < 1e-14);
            }
        }
        assert!(form.lambda.at(&p).unwrap().max_abs() < 1e-13);
        assert!(form.residual(&p).unwrap() < 1e-12);
    }

    #[test]
    fn identity_a_tensor() {
        let g = MetricField::parse(plane(), &["1 + x^2", "0", "0", "1"], Some((2, 0))).unwrap();
        let s = sigma_from_metric(&g).unwrap();
        let a = a_tensor(&s, &s).unwrap().matrix(&[0.5, 0.5]).unwrap();
        assert!((a - DMatrix::identity(2, 2)).amax() < 1e-15);
        let k = killing_tensor_from_pair(&g, &g).unwrap();
        assert!(k.residual < 1e-12);
        let kv = k.khat.at(&[0.5, 0.1]).unwrap();
        assert!((kv.data()[0] - 1.25).abs() < 1e-14);
    }
}
