use super::chart::Chart;
use crate::error::{Error, Result};
use crate::exprjet::{Expr, Jet, ScalarField};
use nalgebra::DMatrix;

/// A smooth map `F: source -> target` given by closed-form components
/// `y^i = F^i(x)` in the source coordinates.
#[derive(Clone, Debug)]
pub struct ChartMap {
    source: Chart,
    target: Chart,
    fields: Vec<ScalarField>,
}

impl ChartMap {
    pub fn new(source: Chart, target: Chart, exprs: Vec<Expr>) -> Result<Self> {
        if source.dim() != target.dim() {
            return Err(Error::Dimension { expected: format!("{}", source.dim()), found: target.dim() });
        }
        if exprs.len() != target.dim() {
            return Err(Error::Invalid(format!("chart map needs {} components, got {}", target.dim(), exprs.len())));
        }
        if let Some(v) = exprs.iter().filter_map(Expr::max_var).max() {
            if v >= source.dim() {
                return Err(Error::Invalid(format!("component refers to coordinate {v} beyond the source chart")));
            }
        }
        let coords = source.coords().clone();
        let fields = exprs.into_iter().map(|e| ScalarField::new(e, coords.clone())).collect();
        Ok(Self { source, target, fields })
    }

    pub fn parse(source: Chart, target: Chart, sources: &[&str]) -> Result<Self> {
        let exprs = sources
            .iter()
            .map(|s| crate::exprjet::parse_expression(s, source.coords()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(source, target, exprs)
    }

    pub fn identity(chart: &Chart) -> Self {
        let exprs = (0..chart.dim()).map(Expr::var).collect();
        Self::new(chart.clone(), chart.clone(), exprs).expect("identity map is valid")
    }

    pub fn source(&self) -> &Chart {
        &self.source
    }

    pub fn target(&self) -> &Chart {
        &self.target
    }

    pub fn fields(&self) -> &[ScalarField] {
        &self.fields
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.fields.iter().map(|f| f.eval(p).map_err(Error::from)).collect()
    }

    pub fn jets(&self, p: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.fields.iter().map(|f| f.eval_jet(p, order).map_err(Error::from)).collect()
    }

    /// `J[i][a] = dF^i / dx^a`.
    pub fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let f = self.jets(p, 1)?;
        Ok(DMatrix::from_fn(n, n, |i, a| f[i].partial(&[a])))
    }

    /// Symbolic Jacobian, row-major `i*n + a`.
    pub fn jacobian_exprs(&self) -> Vec<Expr> {
        let n = self.dim();
        (0..n * n).map(|k| self.fields[k / n].expr().diff(k % n)).collect()
    }

    /// `self ∘ inner`: first `inner`, then `self`.
    pub fn compose(&self, inner: &ChartMap) -> Result<ChartMap> {
        inner.target.ensure_compatible(&self.source)?;
        let subs: Vec<Expr> = inner.fields.iter().map(|f| f.expr().clone()).collect();
        let exprs = self.fields.iter().map(|f| f.expr().substitute(&subs)).collect();
        ChartMap::new(inner.source.clone(), self.target.clone(), exprs)
    }

    /// Checks `det J != 0` at the given points.
    pub fn validate(&self, points: &[Vec<f64>]) -> Result<()> {
        for p in points {
            let j = self.jacobian(p)?;
            let d = j.determinant();
            if !(d.abs() > 1e-12 * j.amax().powi(self.dim() as i32).max(f64::MIN_POSITIVE)) {
                return Err(Error::Singular { what: "chart map Jacobian".into(), point: p.clone() });
            }
        }
        Ok(())
    }
}
