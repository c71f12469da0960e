use super::MobilitySolution;
use crate::error::{Error, Result};
use crate::tensor::{pullback_weighted, ChartMap};
use nalgebra::{DMatrix, DVector};

/// Matrix of a pullback acting on a solution basis: column `a` holds the
/// coefficients of `φ*σ_a`, so `T_{φ∘ψ} = T_ψ T_φ`.
#[derive(Clone, Debug)]
pub struct TransformationMatrix {
    pub matrix: DMatrix<f64>,
    /// Max fit error relative to the largest pulled-back component.
    pub fit_residual: f64,
}

pub const DEFAULT_FIT_TOLERANCE: f64 = 1e-8;

fn stacked(sol: &MobilitySolution, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for p in points {
        out.extend_from_slice(sol.sigma.at(p)?.data());
    }
    Ok(out)
}

/// Least-squares representation of `map` on the span of `basis`, fitted on
/// a grid over the map's source chart.
pub fn transformation_matrix(map: &ChartMap, basis: &[MobilitySolution], tolerance: f64) -> Result<TransformationMatrix> {
    if basis.is_empty() {
        return Err(Error::Invalid("empty solution basis".into()));
    }
    let chart = map.source();
    for b in basis {
        b.chart().ensure_compatible(chart)?;
    }
    let points = chart.grid(if chart.dim() == 2 { 7 } else { 4 });
    map.validate(&points)?;
    let k = basis.len();
    let columns = basis.iter().map(|b| stacked(b, &points)).collect::<Result<Vec<_>>>()?;
    let design = DMatrix::from_fn(columns[0].len(), k, |r, c| columns[c][r]);
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-10 * smax {
        return Err(Error::Invalid("solution basis is linearly dependent on the fit grid".into()));
    }
    let mut matrix = DMatrix::zeros(k, k);
    let mut fit_residual = 0.0f64;
    for (a, b) in basis.iter().enumerate() {
        let pulled = pullback_weighted(&b.sigma, map)?;
        let target = DVector::from_vec(stacked(&MobilitySolution { sigma: pulled, residual_norm: 0.0 }, &points)?);
        let coeffs = svd.solve(&target, 1e-14 * smax).map_err(|e| Error::Invalid(e.to_string()))?;
        let err = (&design * &coeffs - &target).amax() / target.amax().max(f64::MIN_POSITIVE);
        fit_residual = fit_residual.max(err);
        matrix.set_column(a, &coeffs);
    }
    if fit_residual > tolerance {
        return Err(Error::NotProjective { residual: fit_residual, tolerance });
    }
    Ok(TransformationMatrix { matrix, fit_residual })
}
