use super::chart::Chart;
use super::chartmap::ChartMap;
use super::components::{jet_det, jet_inverse, Components};
use crate::error::{Error, Result};
use crate::exprjet::{Expr, Jet, ScalarField};
use nalgebra::DMatrix;

const SYMMETRY_TOL: f64 = 1e-12;

/// A (pseudo-)Riemannian metric `g_ij` on a chart.
#[derive(Clone, Debug)]
pub struct MetricField {
    chart: Chart,
    comps: Components,
    /// `(positive, negative)` eigenvalue counts, if declared.
    signature: Option<(usize, usize)>,
}

impl MetricField {
    /// Metric from `n*n` row-major component fields. Symmetry is checked
    /// structurally, falling back to sampling on a coarse grid.
    pub fn from_fields(chart: Chart, fields: Vec<ScalarField>, signature: Option<(usize, usize)>) -> Result<Self> {
        let n = chart.dim();
        if fields.len() != n * n {
            return Err(Error::Invalid(format!("metric needs {} components, got {}", n * n, fields.len())));
        }
        let g = Self { chart, comps: Components::Fields(fields.clone()), signature };
        let needs_sampling = (0..n).any(|i| (0..i).any(|j| fields[i * n + j] != fields[j * n + i]));
        if needs_sampling {
            for p in g.chart.grid(3) {
                let v = g.comps.values(&p)?;
                for i in 0..n {
                    for j in 0..i {
                        let d = (v[i * n + j] - v[j * n + i]).abs();
                        if d > SYMMETRY_TOL * (1.0 + v[i * n + j].abs()) {
                            return Err(Error::Asymmetric { what: "metric".into(), point: p, defect: d });
                        }
                    }
                }
            }
        }
        Ok(g)
    }

    pub fn parse(chart: Chart, sources: &[&str], signature: Option<(usize, usize)>) -> Result<Self> {
        let fields = sources
            .iter()
            .map(|s| ScalarField::parse(s, chart.coords().clone()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_fields(chart, fields, signature)
    }

    pub fn from_exprs(chart: Chart, exprs: Vec<Expr>, signature: Option<(usize, usize)>) -> Result<Self> {
        let coords = chart.coords().clone();
        let fields = exprs.into_iter().map(|e| ScalarField::new(e, coords.clone())).collect();
        Self::from_fields(chart, fields, signature)
    }

    pub fn diagonal(chart: Chart, diag: Vec<Expr>, signature: Option<(usize, usize)>) -> Result<Self> {
        let n = chart.dim();
        let mut exprs = vec![Expr::Num(0.0); n * n];
        for (i, e) in diag.into_iter().enumerate() {
            exprs[i * n + i] = e;
        }
        Self::from_exprs(chart, exprs, signature)
    }

    pub fn euclidean(chart: Chart) -> Self {
        let n = chart.dim();
        Self::diagonal(chart, vec![Expr::Num(1.0); n], Some((n, 0))).expect("identity metric is valid")
    }

    /// Metric from derived components; symmetry is the caller's contract.
    pub fn computed(chart: Chart, comps: Components, signature: Option<(usize, usize)>) -> Self {
        Self { chart, comps, signature }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn components(&self) -> &Components {
        &self.comps
    }

    pub fn signature(&self) -> Option<(usize, usize)> {
        self.signature
    }

    pub fn jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.comps.jets(point, order)
    }

    pub fn matrix(&self, point: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        Ok(DMatrix::from_row_slice(n, n, &self.comps.values(point)?))
    }

    pub fn inverse_jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        let g = self.jets(point, order)?;
        jet_inverse(&g, self.dim()).ok_or_else(|| Error::Singular { what: "metric".into(), point: point.to_vec() })
    }

    pub fn det_jet(&self, point: &[f64], order: usize) -> Result<Jet> {
        Ok(jet_det(&self.jets(point, order)?, self.dim()))
    }

    /// Checks nondegeneracy and the declared signature at the given points.
    pub fn validate(&self, points: &[Vec<f64>]) -> Result<()> {
        let n = self.dim();
        for p in points {
            let m = self.matrix(p)?;
            let sym = (&m + m.transpose()) * 0.5;
            let defect = (&m - &sym).amax();
            if defect > SYMMETRY_TOL * (1.0 + m.amax()) {
                return Err(Error::Asymmetric { what: "metric".into(), point: p.clone(), defect });
            }
            let eig = sym.symmetric_eigenvalues();
            let scale = eig.amax();
            if eig.iter().any(|l| l.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE)) {
                return Err(Error::Singular { what: "metric".into(), point: p.clone() });
            }
            if let Some((pos, neg)) = self.signature {
                let found_pos = eig.iter().filter(|&&l| l > 0.0).count();
                if found_pos != pos || n - found_pos != neg {
                    return Err(Error::Positivity {
                        what: format!("declared signature ({pos},{neg}), found ({found_pos},{})", n - found_pos),
                        point: p.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Pullback `J^T g(F(u)) J` along `map`. Expression metrics stay
    /// expressions (symbolic Jacobian); derived metrics pull back through jets.
    pub fn pullback(&self, map: &ChartMap) -> Result<MetricField> {
        self.chart.ensure_compatible(map.target())?;
        let n = self.dim();
        let chart = map.source().clone();
        if let Some(fields) = self.comps.fields() {
            let subs: Vec<Expr> = map.fields().iter().map(|f| f.expr().clone()).collect();
            let jac: Vec<Expr> = map.jacobian_exprs();
            let gf: Vec<Expr> = fields.iter().map(|f| f.expr().substitute(&subs)).collect();
            let mut exprs = Vec::with_capacity(n * n);
            for a in 0..n {
                for b in 0..n {
                    let terms = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| {
                        Expr::mul(Expr::mul(jac[i * n + a].clone(), jac[j * n + b].clone()), gf[i * n + j].clone())
                    });
                    exprs.push(Expr::sum(terms));
                }
            }
            let coords = chart.coords().clone();
            let fields = exprs.into_iter().map(|e| ScalarField::new(e, coords.clone())).collect();
            return Ok(MetricField { chart, comps: Components::Fields(fields), signature: self.signature });
        }
        let base = self.clone();
        let map = map.clone();
        let comps = Components::computed(move |p, order| {
            let f = map.jets(p, order + 1)?;
            let jac: Vec<Jet> = (0..n * n).map(|k| f[k / n].diff(k % n)).collect();
            let fp: Vec<f64> = f.iter().map(Jet::value).collect();
            let inner: Vec<Jet> = f.iter().map(|j| j.truncate(order)).collect();
            let g: Vec<Jet> = base.jets(&fp, order)?.iter().map(|j| j.compose(&inner)).collect();
            let mut out = Vec::with_capacity(n * n);
            for a in 0..n {
                for b in 0..n {
                    let mut acc = Jet::constant(n, order, 0.0);
                    for i in 0..n {
                        for j in 0..n {
                            acc = &acc + &jac[i * n + a].mul_jet(&jac[j * n + b]).mul_jet(&g[i * n + j]);
                        }
                    }
                    out.push(acc);
                }
            }
            Ok(out)
        });
        Ok(MetricField { chart, comps, signature: self.signature })
    }
}

/// A torsion-free affine connection `Gamma^i_jk`, stored at `i*n*n + j*n + k`.
#[derive(Clone, Debug)]
pub struct ConnectionField {
    chart: Chart,
    comps: Components,
}

impl ConnectionField {
    pub fn from_fields(chart: Chart, fields: Vec<ScalarField>) -> Result<Self> {
        let n = chart.dim();
        if fields.len() != n * n * n {
            return Err(Error::Invalid(format!("connection needs {} components, got {}", n * n * n, fields.len())));
        }
        let conn = Self { chart, comps: Components::Fields(fields.clone()) };
        let structural = (0..n).all(|i| (0..n).all(|j| (0..j).all(|k| fields[(i * n + j) * n + k] == fields[(i * n + k) * n + j])));
        if !structural {
            for p in conn.chart.grid(3) {
                conn.check_torsion_free(&p)?;
            }
        }
        Ok(conn)
    }

    pub fn from_exprs(chart: Chart, exprs: Vec<Expr>) -> Result<Self> {
        let coords = chart.coords().clone();
        Self::from_fields(chart, exprs.into_iter().map(|e| ScalarField::new(e, coords.clone())).collect())
    }

    pub fn computed(chart: Chart, comps: Components) -> Self {
        Self { chart, comps }
    }

    pub fn flat(chart: Chart) -> Self {
        let n = chart.dim();
        Self::from_exprs(chart, vec![Expr::Num(0.0); n * n * n]).expect("zero connection is valid")
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn components(&self) -> &Components {
        &self.comps
    }

    pub fn jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.comps.jets(point, order)
    }

    pub fn values(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.comps.values(point)
    }

    pub fn check_torsion_free(&self, p: &[f64]) -> Result<()> {
        let n = self.dim();
        let v = self.values(p)?;
        for i in 0..n {
            for j in 0..n {
                for k in 0..j {
                    let d = (v[(i * n + j) * n + k] - v[(i * n + k) * n + j]).abs();
                    if d > SYMMETRY_TOL * (1.0 + v[(i * n + j) * n + k].abs()) {
                        return Err(Error::Asymmetric { what: "connection (torsion)".into(), point: p.to_vec(), defect: d });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Levi-Civita connection of `g`.
pub fn christoffel(g: &MetricField) -> ConnectionField {
    let n = g.dim();
    let metric = g.clone();
    let comps = Components::computed(move |p, order| {
        let gj = metric.jets(p, order + 1)?;
        let g_low: Vec<Jet> = gj.iter().map(|j| j.truncate(order)).collect();
        let ginv = jet_inverse(&g_low, n).ok_or_else(|| Error::Singular { what: "metric".into(), point: p.to_vec() })?;
        // dg[(l*n + j)*n + k] = d_k g_lj
        let dg: Vec<Jet> = (0..n * n * n).map(|idx| gj[idx / n].diff(idx % n)).collect();
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut acc = Jet::constant(n, order, 0.0);
                    for l in 0..n {
                        let bracket = &(&dg[(l * n + k) * n + j] + &dg[(l * n + j) * n + k]) - &dg[(j * n + k) * n + l];
                        acc = &acc + &ginv[i * n + l].mul_jet(&bracket);
                    }
                    out.push(acc.scale(0.5));
                }
            }
        }
        Ok(out)
    });
    ConnectionField { chart: g.chart().clone(), comps }
}

impl MetricField {
    pub fn levi_civita(&self) -> ConnectionField {
        christoffel(self)
    }
}

/// A 1-form `phi_i`.
#[derive(Clone, Debug)]
pub struct OneForm {
    chart: Chart,
    comps: Components,
}

impl OneForm {
    pub fn from_exprs(chart: Chart, exprs: Vec<Expr>) -> Result<Self> {
        if exprs.len() != chart.dim() {
            return Err(Error::Invalid(format!("1-form needs {} components", chart.dim())));
        }
        let coords = chart.coords().clone();
        let fields = exprs.into_iter().map(|e| ScalarField::new(e, coords.clone())).collect();
        Ok(Self { chart, comps: Components::Fields(fields) })
    }

    pub fn parse(chart: Chart, sources: &[&str]) -> Result<Self> {
        let exprs = sources
            .iter()
            .map(|s| crate::exprjet::parse_expression(s, chart.coords()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_exprs(chart, exprs)
    }

    pub fn computed(chart: Chart, comps: Components) -> Self {
        Self { chart, comps }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.comps.jets(point, order)
    }

    pub fn negated(&self) -> OneForm {
        let inner = self.clone();
        OneForm {
            chart: self.chart.clone(),
            comps: Components::computed(move |p, order| Ok(inner.jets(p, order)?.into_iter().map(|j| -j).collect())),
        }
    }
}

/// `Gamma-bar^i_jk = Gamma^i_jk + phi_k delta^i_j + phi_j delta^i_k`.
pub fn projective_shift(conn: &ConnectionField, phi: &OneForm) -> Result<ConnectionField> {
    conn.chart().ensure_compatible(phi.chart())?;
    let n = conn.dim();
    let (base, phi) = (conn.clone(), phi.clone());
    let comps = Components::computed(move |p, order| {
        let mut g = base.jets(p, order)?;
        let f = phi.jets(p, order)?;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let idx = (i * n + j) * n + k;
                    if i == j {
                        g[idx] = &g[idx] + &f[k];
                    }
                    if i == k {
                        g[idx] = &g[idx] + &f[j];
                    }
                }
            }
        }
        Ok(g)
    });
    Ok(ConnectionField::computed(conn.chart().clone(), comps))
}
