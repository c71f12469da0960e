//! Geodesic integration and first-integral tracking.

use crate::error::{Error, Result};
use crate::mobility::ATensor;
use crate::projinv::ProjectiveClass2D;
use crate::tensor::{ConnectionField, MetricField};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicState {
    pub time: f64,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl GeodesicState {
    pub fn new(position: Vec<f64>, velocity: Vec<f64>) -> Self {
        Self { time: 0.0, position, velocity }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum StopReason {
    Completed,
    /// The next step would leave the chart; `time` is the last sample inside.
    LeftDomain { time: f64 },
}

#[derive(Clone, Debug)]
pub struct GeodesicTrajectory {
    pub states: Vec<GeodesicState>,
    pub step: f64,
    pub method: &'static str,
    pub stop: StopReason,
}

fn acceleration(conn: &ConnectionField, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let g = conn.values(x)?;
    Ok((0..n)
        .map(|i| {
            let mut a = 0.0;
            for j in 0..n {
                for k in 0..n {
                    a -= g[(i * n + j) * n + k] * v[j] * v[k];
                }
            }
            a
        })
        .collect())
}

fn axpy(x: &[f64], h: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + h * b).collect()
}

/// Classical RK4 for `γ̈^i + Γ^i_jk γ̇^j γ̇^k = 0` with a fixed step.
pub fn integrate_geodesic(conn: &ConnectionField, start: &GeodesicState, t_max: f64, step: f64) -> Result<GeodesicTrajectory> {
    if !(step > 0.0) {
        return Err(Error::Invalid(format!("step must be positive, got {step}")));
    }
    let chart = conn.chart();
    chart.check(&start.position)?;
    if start.velocity.len() != chart.dim() {
        return Err(Error::Dimension { expected: chart.dim().to_string(), found: start.velocity.len() });
    }
    let steps = ((t_max - start.time) / step).round().max(0.0) as usize;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(start.clone());
    let (mut x, mut v) = (start.position.clone(), start.velocity.clone());
    let mut stop = StopReason::Completed;
    for s in 1..=steps {
        let h = step;
        let a1 = acceleration(conn, &x, &v)?;
        let (x2, v2) = (axpy(&x, h / 2.0, &v), axpy(&v, h / 2.0, &a1));
        let a2 = acceleration(conn, &x2, &v2)?;
        let (x3, v3) = (axpy(&x, h / 2.0, &v2), axpy(&v, h / 2.0, &a2));
        let a3 = acceleration(conn, &x3, &v3)?;
        let (x4, v4) = (axpy(&x, h, &v3), axpy(&v, h, &a3));
        let a4 = acceleration(conn, &x4, &v4)?;
        let nx: Vec<f64> = (0..x.len()).map(|i| x[i] + h / 6.0 * (v[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i])).collect();
        let nv: Vec<f64> = (0..x.len()).map(|i| v[i] + h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i])).collect();
        let t = start.time + s as f64 * step;
        if nx.iter().chain(&nv).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { t });
        }
        if !chart.contains(&nx) {
            stop = StopReason::LeftDomain { time: t - step };
            break;
        }
        x = nx;
        v = nv;
        states.push(GeodesicState { time: t, position: x.clone(), velocity: v.clone() });
    }
    Ok(GeodesicTrajectory { states, step, method: "rk4", stop })
}

/// Independent trajectories, integrated in parallel.
pub fn integrate_many(conn: &ConnectionField, starts: &[GeodesicState], t_max: f64, step: f64) -> Vec<Result<GeodesicTrajectory>> {
    starts.par_iter().map(|s| integrate_geodesic(conn, s, t_max, step)).collect()
}

/// A sample `(x, y(x), y'(x))` of a solution of the projective ODE.
pub type CurveSample = [f64; 3];

#[derive(Clone, Debug)]
pub struct ProjectiveCurve {
    pub samples: Vec<CurveSample>,
    /// `x` of the last sample if the curve left the chart before `x_max`.
    pub left_domain_at: Option<f64>,
}

fn ode_rhs(class: &ProjectiveClass2D, x: f64, y: f64, p: f64) -> Result<f64> {
    let k = class.values(&[x, y])?;
    Ok(k[0] + p * (k[1] + p * (k[2] + p * k[3])))
}

/// RK4 for `y'' = K0 + K1 y' + K2 y'^2 + K3 y'^3` from `x0` to `x_max`
/// (either direction).
pub fn integrate_projective_ode(class: &ProjectiveClass2D, x0: f64, y0: f64, slope0: f64, x_max: f64, step: f64) -> Result<ProjectiveCurve> {
    if !(step > 0.0) {
        return Err(Error::Invalid(format!("step must be positive, got {step}")));
    }
    let steps = ((x_max - x0).abs() / step).round() as usize;
    let h = if x_max >= x0 { step } else { -step };
    let mut samples = vec![[x0, y0, slope0]];
    let (mut y, mut p) = (y0, slope0);
    let mut left_domain_at = None;
    for s in 0..steps {
        let x = x0 + s as f64 * h;
        let k1 = (p, ode_rhs(class, x, y, p)?);
        let k2 = (p + h / 2.0 * k1.1, ode_rhs(class, x + h / 2.0, y + h / 2.0 * k1.0, p + h / 2.0 * k1.1)?);
        let k3 = (p + h / 2.0 * k2.1, ode_rhs(class, x + h / 2.0, y + h / 2.0 * k2.0, p + h / 2.0 * k2.1)?);
        let k4 = (p + h * k3.1, ode_rhs(class, x + h, y + h * k3.0, p + h * k3.1)?);
        let ny = y + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        let np = p + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !ny.is_finite() || !np.is_finite() || np.abs() > 1e8 {
            return Err(Error::BlowUp { x });
        }
        let nx = x0 + (s + 1) as f64 * h;
        if !class.chart().contains(&[nx, ny]) {
            left_domain_at = Some(x);
            break;
        }
        y = ny;
        p = np;
        samples.push([nx, y, p]);
    }
    Ok(ProjectiveCurve { samples, left_domain_at })
}

/// A curve point for [`reparameterization_check`]; a missing acceleration
/// is estimated from neighbouring velocities.
#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub t: f64,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Option<Vec<f64>>,
}

impl CurvePoint {
    pub fn from_state(s: &GeodesicState) -> Self {
        Self { t: s.time, position: s.position.clone(), velocity: s.velocity.clone(), acceleration: None }
    }

    /// `γ(x) = (x, y(x))` with the exact second derivative from the ODE.
    pub fn from_ode_sample(class: &ProjectiveClass2D, s: &CurveSample) -> Result<Self> {
        let ypp = ode_rhs(class, s[0], s[1], s[2])?;
        Ok(Self { t: s[0], position: vec![s[0], s[1]], velocity: vec![1.0, s[2]], acceleration: Some(vec![0.0, ypp]) })
    }
}

/// Weights of the derivative at `t` of the quadratic through three nodes.
fn lagrange_derivative_weights(ts: [f64; 3], t: f64) -> [f64; 3] {
    let mut w = [0.0; 3];
    for j in 0..3 {
        let (a, b) = ((j + 1) % 3, (j + 2) % 3);
        w[j] = ((t - ts[a]) + (t - ts[b])) / ((ts[j] - ts[a]) * (ts[j] - ts[b]));
    }
    w
}

/// Max over samples of the Euclidean norm of the part of `γ̈ + Γ(γ̇, γ̇)`
/// orthogonal to `γ̇`.
pub fn reparameterization_check(conn: &ConnectionField, curve: &[CurvePoint]) -> Result<f64> {
    if curve.len() < 3 {
        return Err(Error::Invalid("reparameterization check needs at least 3 samples".into()));
    }
    let n = conn.dim();
    let mut worst = 0.0f64;
    for (k, c) in curve.iter().enumerate() {
        let acc = match &c.acceleration {
            Some(a) => a.clone(),
            None => {
                let k0 = k.saturating_sub(1).min(curve.len() - 3);
                let w = lagrange_derivative_weights([curve[k0].t, curve[k0 + 1].t, curve[k0 + 2].t], c.t);
                (0..n).map(|i| (0..3).map(|j| w[j] * curve[k0 + j].velocity[i]).sum()).collect()
            }
        };
        let g = conn.values(&c.position)?;
        let v = &c.velocity;
        let w: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = acc[i];
                for j in 0..n {
                    for l in 0..n {
                        s += g[(i * n + j) * n + l] * v[j] * v[l];
                    }
                }
                s
            })
            .collect();
        let vv: f64 = v.iter().map(|a| a * a).sum();
        let wv: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
        let perp: f64 = w.iter().zip(v).map(|(a, b)| (a - wv / vv * b).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(perp);
    }
    Ok(worst)
}

/// A first integral evaluated at one state.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralEvaluation {
    pub label: String,
    /// Family parameter, if any.
    pub t: Option<f64>,
    pub value: f64,
    /// `|value - value_at_start|`.
    pub drift: f64,
}

impl IntegralEvaluation {
    pub fn relative_to(mut self, start_value: f64) -> Self {
        self.drift = (self.value - start_value).abs();
        self
    }
}

fn quad(m: &DMatrix<f64>, xi: &[f64]) -> f64 {
    let x = DVector::from_column_slice(xi);
    (x.transpose() * m * &x)[(0, 0)]
}

/// `I(ξ) = |det g / det ḡ|^{2/(n+1)} ḡ(ξ, ξ)`.
pub fn painleve_integral(g: &MetricField, g_bar: &MetricField, state: &GeodesicState) -> Result<IntegralEvaluation> {
    let n = g.dim();
    let (gm, gb) = (g.matrix(&state.position)?, g_bar.matrix(&state.position)?);
    let (dg, db) = (gm.determinant(), gb.determinant());
    if dg == 0.0 || db == 0.0 {
        return Err(Error::Singular { what: "metric".into(), point: state.position.clone() });
    }
    let f = (dg / db).abs().powf(2.0 / (n + 1) as f64);
    Ok(IntegralEvaluation { label: "painleve".into(), t: None, value: f * quad(&gb, &state.velocity), drift: 0.0 })
}

/// Adjugate by cofactor expansion.
pub fn adjugate_cofactor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    DMatrix::from_fn(n, n, |i, j| {
        // (adj M)_ij = (-1)^{i+j} det(M without row j, column i)
        let minor = m.clone().remove_row(j).remove_column(i);
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor.determinant()
    })
}

/// Adjugate from the Faddeev-LeVerrier recursion.
pub fn adjugate_faddeev(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut mk = DMatrix::<f64>::zeros(n, n);
    let mut c = 1.0;
    for k in 1..=n {
        mk = m * &mk + &id * c;
        c = -(m * &mk).trace() / k as f64;
    }
    if n % 2 == 0 {
        -mk
    } else {
        mk
    }
}

/// Comatrix: cofactors for `n ≤ 4`, Faddeev-LeVerrier above.
pub fn comatrix(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() <= 4 {
        adjugate_cofactor(m)
    } else {
        adjugate_faddeev(m)
    }
}

/// `I_t(ξ) = g(co(t·id - A) ξ, ξ)`.
pub fn integral_family(g: &MetricField, a: &ATensor, t: f64, state: &GeodesicState) -> Result<IntegralEvaluation> {
    let n = g.dim();
    let gm = g.matrix(&state.position)?;
    let am = a.matrix(&state.position)?;
    let co = comatrix(&(DMatrix::identity(n, n) * t - am));
    Ok(IntegralEvaluation { label: format!("family:{t}"), t: Some(t), value: quad(&(gm * co), &state.velocity), drift: 0.0 })
}

/// Coefficients `c_0..c_{n-1}` of `I_t = Σ c_k t^k`, from the
/// Faddeev-LeVerrier expansion `co(t·id - A) = Σ t^{n-1-k} B_k`.
pub fn integral_family_coefficients(g: &MetricField, a: &ATensor, state: &GeodesicState) -> Result<Vec<f64>> {
    let n = g.dim();
    let gm = g.matrix(&state.position)?;
    let am = a.matrix(&state.position)?;
    let id = DMatrix::<f64>::identity(n, n);
    let mut coeffs = vec![0.0; n];
    let mut b = id.clone();
    for k in 0..n {
        if k > 0 {
            let ab = &am * &b;
            let c = -ab.trace() / k as f64;
            b = ab + &id * c;
        }
        coeffs[n - 1 - k] = quad(&(&gm * &b), &state.velocity);
    }
    Ok(coeffs)
}

/// A named quantity to track along a trajectory.
pub struct NamedIntegral<'a> {
    pub name: String,
    pub eval: Box<dyn Fn(&GeodesicState) -> Result<f64> + 'a>,
}

impl<'a> NamedIntegral<'a> {
    pub fn new(name: impl Into<String>, eval: impl Fn(&GeodesicState) -> Result<f64> + 'a) -> Self {
        Self { name: name.into(), eval: Box::new(eval) }
    }

    /// `g(γ̇, γ̇)`.
    pub fn energy(g: &'a MetricField) -> Self {
        Self::new("energy", move |s| Ok(quad(&g.matrix(&s.position)?, &s.velocity)))
    }

    pub fn painleve(g: &'a MetricField, g_bar: &'a MetricField) -> Self {
        Self::new("painleve", move |s| Ok(painleve_integral(g, g_bar, s)?.value))
    }

    pub fn family(g: &'a MetricField, a: &'a ATensor, t: f64) -> Self {
        Self::new(format!("family:{t}"), move |s| Ok(integral_family(g, a, t, s)?.value))
    }

    /// `K̂(γ̇, γ̇)` for a plain `(0,2)` field.
    pub fn quadratic(name: &str, k: &'a crate::tensor::WeightedTensorField) -> Self {
        Self::new(name, move |s| {
            let n = s.position.len();
            Ok(quad(&DMatrix::from_row_slice(n, n, k.at(&s.position)?.data()), &s.velocity))
        })
    }
}

#[derive(Clone, Debug)]
pub struct IntegralDrift {
    pub name: String,
    pub initial: f64,
    pub max_abs_drift: f64,
    /// Drift relative to `|initial|` (or to the largest value seen if the
    /// initial value is zero).
    pub max_rel_drift: f64,
    /// `(time, value - initial)` per sample.
    pub series: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct ConservationReport {
    pub integrals: Vec<IntegralDrift>,
    /// `values[sample][integral]`.
    pub values: Vec<Vec<f64>>,
}

pub fn conservation_report(traj: &GeodesicTrajectory, integrals: &[NamedIntegral<'_>]) -> Result<ConservationReport> {
    if traj.states.is_empty() {
        return Err(Error::Invalid("empty trajectory".into()));
    }
    let values = traj
        .states
        .iter()
        .map(|s| integrals.iter().map(|i| (i.eval)(s)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let rows = integrals
        .iter()
        .enumerate()
        .map(|(k, i)| {
            let initial = values[0][k];
            let series: Vec<(f64, f64)> = traj.states.iter().zip(&values).map(|(s, v)| (s.time, v[k] - initial)).collect();
            let max_abs_drift = series.iter().fold(0.0f64, |m, (_, d)| m.max(d.abs()));
            let scale = if initial != 0.0 { initial.abs() } else { values.iter().fold(0.0f64, |m, v| m.max(v[k].abs())) };
            let max_rel_drift = if scale > 0.0 { max_abs_drift / scale } else { 0.0 };
            IntegralDrift { name: i.name.clone(), initial, max_abs_drift, max_rel_drift, series }
        })
        .collect();
    Ok(ConservationReport { integrals: rows, values })
}
