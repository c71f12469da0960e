use super::chart::Chart;
use super::chartmap::ChartMap;
use super::components::{jet_det, jet_inverse, Components};
use super::fields::{ConnectionField, MetricField};
use super::point::{IndexIter, PointTensor};
use crate::error::{Error, Result};
use crate::exprjet::{Expr, Jet, ScalarField};

/// A section of `T^(p,q)M(k)`, represented by its components relative to
/// the coordinate volume form. Indices: upper first, then lower.
#[derive(Clone, Debug)]
pub struct WeightedTensorField {
    chart: Chart,
    upper: usize,
    lower: usize,
    weight: f64,
    comps: Components,
}

impl WeightedTensorField {
    pub fn new(chart: Chart, upper: usize, lower: usize, weight: f64, comps: Components) -> Result<Self> {
        if let Components::Fields(fs) = &comps {
            let want = chart.dim().pow((upper + lower) as u32);
            if fs.len() != want {
                return Err(Error::Invalid(format!("valence ({upper},{lower}) needs {want} components, got {}", fs.len())));
            }
        }
        Ok(Self { chart, upper, lower, weight, comps })
    }

    pub fn from_exprs(chart: Chart, upper: usize, lower: usize, weight: f64, exprs: Vec<Expr>) -> Result<Self> {
        let coords = chart.coords().clone();
        let fields = exprs.into_iter().map(|e| ScalarField::new(e, coords.clone())).collect();
        Self::new(chart, upper, lower, weight, Components::Fields(fields))
    }

    pub fn parse(chart: Chart, upper: usize, lower: usize, weight: f64, sources: &[&str]) -> Result<Self> {
        let exprs = sources
            .iter()
            .map(|s| crate::exprjet::parse_expression(s, chart.coords()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_exprs(chart, upper, lower, weight, exprs)
    }

    /// The metric as a weight-0 `(0,2)` field.
    pub fn from_metric(g: &MetricField) -> Self {
        Self { chart: g.chart().clone(), upper: 0, lower: 2, weight: 0.0, comps: g.components().clone() }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn valence(&self) -> (usize, usize) {
        (self.upper, self.lower)
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn components(&self) -> &Components {
        &self.comps
    }

    pub fn jets(&self, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.comps.jets(point, order)
    }

    pub fn at(&self, point: &[f64]) -> Result<PointTensor> {
        Ok(PointTensor::from_vec(self.dim(), self.upper, self.lower, self.comps.values(point)?))
    }

    pub fn require(&self, upper: usize, lower: usize, weight: f64) -> Result<()> {
        if (self.upper, self.lower) != (upper, lower) || (self.weight - weight).abs() > 1e-12 {
            return Err(Error::Valence {
                expected: format!("({upper},{lower}) of weight {weight}"),
                found: format!("({},{}) of weight {}", self.upper, self.lower, self.weight),
            });
        }
        Ok(())
    }

    /// Checks that a rank-2 field is symmetric at the given points.
    pub fn check_symmetric(&self, points: &[Vec<f64>]) -> Result<()> {
        let n = self.dim();
        if self.upper + self.lower != 2 {
            return Err(Error::Valence { expected: "rank 2".into(), found: format!("({},{})", self.upper, self.lower) });
        }
        for p in points {
            let v = self.comps.values(p)?;
            for i in 0..n {
                for j in 0..i {
                    let d = (v[i * n + j] - v[j * n + i]).abs();
                    if d > 1e-12 * (1.0 + v[i * n + j].abs()) {
                        return Err(Error::Asymmetric { what: "tensor".into(), point: p.clone(), defect: d });
                    }
                }
            }
        }
        Ok(())
    }

    /// Product with a weighted scalar: weights add.
    pub fn times_scalar(&self, s: &WeightedTensorField) -> Result<WeightedTensorField> {
        self.chart.ensure_compatible(&s.chart)?;
        s.require(0, 0, s.weight)?;
        let (a, b) = (self.clone(), s.clone());
        let comps = Components::computed(move |p, order| {
            let f = b.jets(p, order)?.remove(0);
            Ok(a.jets(p, order)?.iter().map(|j| j.mul_jet(&f)).collect())
        });
        Ok(WeightedTensorField { chart: self.chart.clone(), upper: self.upper, lower: self.lower, weight: self.weight + s.weight, comps })
    }

    /// Same components with a different declared weight.
    pub fn with_weight(&self, weight: f64) -> WeightedTensorField {
        WeightedTensorField { weight, ..self.clone() }
    }

    /// Jets of `∇T` to `order` (needs components to `order + 1`).
    /// The derivative index is appended last.
    pub fn covariant_derivative_jets(&self, conn: &ConnectionField, point: &[f64], order: usize) -> Result<Vec<Jet>> {
        self.chart.ensure_compatible(conn.chart())?;
        let n = self.dim();
        let rank = self.upper + self.lower;
        let t1 = self.jets(point, order + 1)?;
        let t: Vec<Jet> = t1.iter().map(|j| j.truncate(order)).collect();
        let gamma = conn.jets(point, order)?;
        let gam = |i: usize, j: usize, k: usize| &gamma[(i * n + j) * n + k];
        let trace: Vec<Jet> = (0..n)
            .map(|j| {
                let mut acc = gam(0, j, 0).clone();
                for s in 1..n {
                    acc = &acc + gam(s, j, s);
                }
                acc
            })
            .collect();
        let c = self.weight / (n + 1) as f64;
        let flat = |idx: &[usize]| idx.iter().fold(0, |a, &i| a * n + i);
        let mut out = Vec::with_capacity(t.len() * n);
        for idx in IndexIter::new(n, rank) {
            let base = flat(&idx);
            for j in 0..n {
                let mut acc = t1[base].diff(j);
                let mut sidx = idx.clone();
                for a in 0..rank {
                    for s in 0..n {
                        sidx[a] = s;
                        let ts = &t[flat(&sidx)];
                        if a < self.upper {
                            acc = &acc + &gam(idx[a], j, s).mul_jet(ts);
                        } else {
                            acc = &acc - &gam(s, j, idx[a]).mul_jet(ts);
                        }
                    }
                    sidx[a] = idx[a];
                }
                if c != 0.0 {
                    acc = &acc - &trace[j].mul_jet(&t[base]).scale(c);
                }
                out.push(acc);
            }
        }
        Ok(out)
    }

    /// `∇T` as a derived field of valence `(p, q+1)` and the same weight.
    pub fn covariant_derivative(&self, conn: &ConnectionField) -> Result<WeightedTensorField> {
        self.chart.ensure_compatible(conn.chart())?;
        let (t, c) = (self.clone(), conn.clone());
        let comps = Components::computed(move |p, order| t.covariant_derivative_jets(&c, p, order));
        Ok(WeightedTensorField { chart: self.chart.clone(), upper: self.upper, lower: self.lower + 1, weight: self.weight, comps })
    }
}

/// Weighted covariant derivative of `t` at a point, valence `(p, q+1)`.
pub fn weighted_covariant_derivative(t: &WeightedTensorField, conn: &ConnectionField, point: &[f64]) -> Result<PointTensor> {
    let jets = t.covariant_derivative_jets(conn, point, 0)?;
    Ok(PointTensor::from_vec(t.dim(), t.upper, t.lower + 1, jets.iter().map(Jet::value).collect()))
}

/// `(Vol_g)^beta`: the scalar `(sqrt|det g|)^beta` of weight `(n+1) beta`.
pub fn volume_weight_field(g: &MetricField, beta: f64) -> WeightedTensorField {
    let n = g.dim();
    let metric = g.clone();
    let comps = Components::computed(move |p, order| {
        let d = metric.det_jet(p, order)?.abs();
        d.powf(0.5 * beta)
            .map(|j| vec![j])
            .ok_or_else(|| Error::Singular { what: "metric".into(), point: p.to_vec() })
    });
    WeightedTensorField { chart: g.chart().clone(), upper: 0, lower: 0, weight: (n + 1) as f64 * beta, comps }
}

/// Pullback along `map` (source -> target, `t` lives on the target):
/// classical tensor rule times `|det J|^(k/(n+1))`.
pub fn pullback_weighted(t: &WeightedTensorField, map: &ChartMap) -> Result<WeightedTensorField> {
    t.chart.ensure_compatible(map.target())?;
    map.validate(&[map.source().center()])?;
    let n = t.dim();
    let (upper, rank) = (t.upper, t.upper + t.lower);
    let expo = t.weight / (n + 1) as f64;
    let (field, map_c) = (t.clone(), map.clone());
    let comps = Components::computed(move |p, order| {
        let f = map_c.jets(p, order + 1)?;
        let jac: Vec<Jet> = (0..n * n).map(|k| f[k / n].diff(k % n)).collect();
        let singular = || Error::Singular { what: "chart map Jacobian".into(), point: p.to_vec() };
        let jinv = if upper > 0 { jet_inverse(&jac, n).ok_or_else(singular)? } else { Vec::new() };
        let scale = if expo != 0.0 {
            jet_det(&jac, n).abs().powf(expo).ok_or_else(singular)?
        } else {
            Jet::constant(n, order, 1.0)
        };
        let fp: Vec<f64> = f.iter().map(Jet::value).collect();
        let inner: Vec<Jet> = f.iter().map(|j| j.truncate(order)).collect();
        let tv: Vec<Jet> = field.jets(&fp, order)?.iter().map(|j| j.compose(&inner)).collect();
        // contract one slot at a time: slot a, new index b
        let mut cur = tv;
        for slot in 0..rank {
            let mut next = Vec::with_capacity(cur.len());
            for idx in IndexIter::new(n, rank) {
                let mut acc = Jet::constant(n, order, 0.0);
                let mut sidx = idx.clone();
                for s in 0..n {
                    sidx[slot] = s;
                    let k = sidx.iter().fold(0, |a, &i| a * n + i);
                    let factor = if slot < upper { &jinv[idx[slot] * n + s] } else { &jac[s * n + idx[slot]] };
                    acc = &acc + &factor.mul_jet(&cur[k]);
                }
                next.push(acc);
            }
            cur = next;
        }
        Ok(cur.iter().map(|j| j.mul_jet(&scale)).collect())
    });
    Ok(WeightedTensorField { chart: map.source().clone(), upper: t.upper, lower: t.lower, weight: t.weight, comps })
}
