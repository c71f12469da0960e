use super::ATensor;
use crate::error::{Error, Result};
use crate::tensor::MetricField;
use nalgebra::DMatrix;

/// The `(λ, 0, 1)` eigenvalue pattern: one simple eigenvalue `λ`, `0` with
/// multiplicity `m` and `1` with multiplicity `m_bar`.
#[derive(Clone, Debug, PartialEq)]
pub struct LcPattern {
    pub lambda: f64,
    pub m: usize,
    pub m_bar: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenStructure {
    /// Distinct eigenvalues with multiplicities, in frame order.
    pub groups: Vec<(f64, usize)>,
    pub pattern: Option<LcPattern>,
}

impl EigenStructure {
    pub fn eigenvalues_ascending(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.groups.iter().flat_map(|&(l, m)| std::iter::repeat_n(l, m)).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Eigenvalues in frame order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.groups.iter().flat_map(|&(l, m)| std::iter::repeat_n(l, m)).collect()
    }
}

#[derive(Clone, Debug)]
pub struct AdaptedFrame {
    /// Columns are the frame vectors.
    pub frame: DMatrix<f64>,
    pub eigen: EigenStructure,
}

const SELF_ADJOINT_TOL: f64 = 1e-8;
const CLUSTER_TOL: f64 = 1e-7;

/// A g-orthonormal frame diagonalizing `A` at `p`.
pub fn adapted_frame(g: &MetricField, a: &ATensor, p: &[f64]) -> Result<AdaptedFrame> {
    g.chart().ensure_compatible(a.chart())?;
    let n = g.dim();
    let gm = g.matrix(p)?;
    let am = a.matrix(p)?;
    let ga = &gm * &am;
    let defect = (&ga - ga.transpose()).amax();
    if defect > SELF_ADJOINT_TOL * (1.0 + ga.amax()) {
        return Err(Error::Asymmetric { what: "A (not g-self-adjoint)".into(), point: p.to_vec(), defect });
    }
    let chol = gm.clone().cholesky().ok_or_else(|| Error::Positivity { what: "metric positive definite".into(), point: p.to_vec() })?;
    let l = chol.l();
    let l_inv_t = l.clone().try_inverse().ok_or_else(|| Error::Singular { what: "metric".into(), point: p.to_vec() })?.transpose();
    // B = L^T A L^{-T} is symmetric when A is g-self-adjoint
    let b = l.transpose() * &am * &l_inv_t;
    let eig = ((&b + b.transpose()) * 0.5).symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let scale = eig.eigenvalues.amax().max(1.0);

    // cluster ascending eigenvalues
    let mut clusters: Vec<(f64, Vec<usize>)> = Vec::new();
    for &i in &idx {
        let lam = eig.eigenvalues[i];
        match clusters.last_mut() {
            Some((l0, members)) if (lam - *l0).abs() <= CLUSTER_TOL * scale => {
                members.push(i);
                *l0 = (*l0 * (members.len() - 1) as f64 + lam) / members.len() as f64;
            }
            _ => clusters.push((lam, vec![i])),
        }
    }

    let near = |x: f64, t: f64| (x - t).abs() <= CLUSTER_TOL * scale;
    let zero = clusters.iter().position(|c| near(c.0, 0.0));
    let one = clusters.iter().position(|c| near(c.0, 1.0));
    let pattern = match (zero, one) {
        (Some(z), Some(o)) if clusters.len() == 3 => {
            let s = (0..3).find(|&k| k != z && k != o).unwrap();
            (clusters[s].1.len() == 1).then(|| (s, z, o))
        }
        _ => None,
    };
    let ordered: Vec<usize> = match pattern {
        Some((s, z, o)) => vec![s, z, o],
        None => (0..clusters.len()).collect(),
    };

    let mut columns: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(n);
    let ip = |x: &nalgebra::DVector<f64>, y: &nalgebra::DVector<f64>| (x.transpose() * &gm * y)[(0, 0)];
    for &c in &ordered {
        let members = &clusters[c].1;
        // eigenspace basis in coordinates
        let v = DMatrix::from_columns(&members.iter().map(|&i| &l_inv_t * eig.eigenvectors.column(i)).collect::<Vec<_>>());
        let gram = v.transpose() * &gm * &v;
        let gram_inv = gram.try_inverse().ok_or_else(|| Error::Singular { what: "eigenspace".into(), point: p.to_vec() })?;
        let proj = &v * gram_inv * v.transpose() * &gm;
        let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
        for k in 0..n {
            if basis.len() == members.len() {
                break;
            }
            let mut w = proj.column(k).into_owned();
            for u in &basis {
                let c = ip(u, &w);
                w -= u * c;
            }
            let norm = ip(&w, &w).sqrt();
            if norm > 1e-8 {
                basis.push(w / norm);
            }
        }
        if basis.len() != members.len() {
            return Err(Error::Invalid("could not span an eigenspace from coordinate directions".into()));
        }
        columns.extend(basis);
    }
    let groups = ordered.iter().map(|&c| (clusters[c].0, clusters[c].1.len())).collect();
    let pattern = pattern.map(|(s, z, o)| LcPattern { lambda: clusters[s].0, m: clusters[z].1.len(), m_bar: clusters[o].1.len() });
    Ok(AdaptedFrame { frame: DMatrix::from_columns(&columns), eigen: EigenStructure { groups, pattern } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Chart, Components};
    use crate::exprjet::Jet;

    fn constant_a(values: Vec<f64>) -> ATensor {
        let n = (values.len() as f64).sqrt() as usize;
        let chart = Chart::cube(n, 1.0).unwrap();
        ATensor::new(chart, Components::computed(move |p, order| Ok(values.iter().map(|&v| Jet::constant(p.len(), order, v)).collect())))
    }

    #[test]
    fn identity_gives_orthonormalized_coordinate_frame() {
        let g = MetricField::parse(Chart::cube(2, 1.0).unwrap(), &["4", "0", "0", "9"], Some((2, 0))).unwrap();
        let f = adapted_frame(&g, &constant_a(vec![1.0, 0.0, 0.0, 1.0]), &[0.0, 0.0]).unwrap();
        assert!((f.frame[(0, 0)] - 0.5).abs() < 1e-15 && (f.frame[(1, 1)] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.eigen.groups, vec![(1.0, 2)]);
    }

    #[test]
    fn detects_lc_pattern() {
        let g = MetricField::euclidean(Chart::cube(3, 1.0).unwrap());
        let f = adapted_frame(&g, &constant_a(vec![1.0, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.0]), &[0.0; 3]).unwrap();
        assert_eq!(f.eigen.pattern, Some(LcPattern { lambda: 0.3, m: 1, m_bar: 1 }));
        assert_eq!(f.eigen.eigenvalues(), vec![0.3, 0.0, 1.0]);
        assert!((f.frame[(1, 0)] - 1.0).abs() < 1e-15 && (f.frame[(2, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_self_adjoint() {
        let g = MetricField::euclidean(Chart::cube(2, 1.0).unwrap());
        let err = adapted_frame(&g, &constant_a(vec![1.0, 1.0, 0.0, 2.0]), &[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Asymmetric { .. }));
    }
}
