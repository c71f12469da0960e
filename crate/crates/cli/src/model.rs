//! Model files: TOML with a `[chart]` block, optional `[params]`, named
//! `[metric.<name>]` blocks, `[connection]`, `[class2d]` and a
//! `[construction]` block that stands in for explicit objects.

use crate::CliError;
use projcalc::constructions::{dini_pair, flat_model, levi_civita_model, sphere_gnomonic_model, LeviCivitaData};
use projcalc::exprjet::{parse_with_params, Expr};
use projcalc::mobility::ATensor;
use projcalc::projinv::ProjectiveClass2D;
use projcalc::tensor::{Chart, ConnectionField, MetricField};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChart {
    pub coords: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawMetric {
    /// Row-major component matrix.
    pub components: Vec<Vec<String>>,
    /// `[positive, negative]` counts, checked on a grid when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<[usize; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConnection {
    /// `gamma[i][j][k]` is `Γ^i_jk`.
    pub gamma: Vec<Vec<Vec<String>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawClass {
    #[serde(rename = "K0")]
    pub k0: String,
    #[serde(rename = "K1")]
    pub k1: String,
    #[serde(rename = "K2")]
    pub k2: String,
    #[serde(rename = "K3")]
    pub k3: String,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RawConstruction {
    Dini {
        #[serde(rename = "X", alias = "x")]
        x: String,
        #[serde(rename = "Y", alias = "y")]
        y: String,
    },
    LeviCivita {
        lambda: String,
        #[serde(default = "one")]
        sign: f64,
        h: Vec<Vec<String>>,
        h_bar: Vec<Vec<String>>,
    },
    Sphere,
    Flat,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    pub chart: Option<RawChart>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metric: BTreeMap<String, RawMetric>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connection: Option<RawConnection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class2d: Option<RawClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<RawConstruction>,
}

impl RawModel {
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Input(format!("cannot serialize model: {e}")))
    }
}

/// A loaded model with every object built and validated.
pub struct Model {
    pub chart: Chart,
    pub metrics: BTreeMap<String, MetricField>,
    pub connection: Option<ConnectionField>,
    pub class2d: Option<ProjectiveClass2D>,
    pub a_tensor: Option<ATensor>,
    pub raw: RawModel,
    /// SHA-256 of the file bytes, hex.
    pub digest: String,
}

pub fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load_model(path: &Path) -> Result<Model, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Input(format!("{}: not valid UTF-8", path.display())))?;
    let raw: RawModel = toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut model = build(raw, &text)?;
    model.digest = digest(&bytes);
    Ok(model)
}

/// Builds a model from its raw form; `text` is only used to locate
/// expressions in error messages.
pub fn build(raw: RawModel, text: &str) -> Result<Model, CliError> {
    let rc = raw.chart.as_ref().ok_or_else(|| CliError::Input("missing [chart] block with coordinate declarations".into()))?;
    let n = rc.coords.len();
    let domain = match &rc.domain {
        Some(d) => d.iter().map(|[a, b]| (*a, *b)).collect(),
        None => vec![(-1.0, 1.0); n],
    };
    let chart = Chart::new(rc.coords.clone(), domain).map_err(|e| CliError::Input(format!("[chart]: {e}")))?;
    let params: Vec<(String, f64)> = raw.params.iter().map(|(k, v)| (k.clone(), *v)).collect();
    let parse = |what: &str, src: &str| -> Result<Expr, CliError> {
        parse_with_params(src, chart.coords(), &params).map_err(|e| CliError::Input(format!("{what}: {}{e}", locate(text, src))))
    };

    let mut metrics = BTreeMap::new();
    for (name, m) in &raw.metric {
        let what = format!("[metric.{name}]");
        if m.components.len() != n || m.components.iter().any(|r| r.len() != n) {
            return Err(CliError::Input(format!("{what}: components must be a {n}x{n} matrix")));
        }
        let exprs = m.components.iter().flatten().map(|s| parse(&what, s)).collect::<Result<Vec<_>, _>>()?;
        let g = MetricField::from_exprs(chart.clone(), exprs, m.signature.map(|[p, q]| (p, q))).map_err(lib(what.as_str()))?;
        g.validate(&chart.grid(3)).map_err(lib(what.as_str()))?;
        metrics.insert(name.clone(), g);
    }
    let mut connection = match &raw.connection {
        Some(c) => {
            if c.gamma.len() != n || c.gamma.iter().any(|m| m.len() != n || m.iter().any(|r| r.len() != n)) {
                return Err(CliError::Input(format!("[connection]: gamma must be {n}x{n}x{n}")));
            }
            let exprs = c.gamma.iter().flatten().flatten().map(|s| parse("[connection]", s)).collect::<Result<Vec<_>, _>>()?;
            Some(ConnectionField::from_exprs(chart.clone(), exprs).map_err(lib("[connection]"))?)
        }
        None => None,
    };
    let class2d = match &raw.class2d {
        Some(k) => {
            let e = [&k.k0, &k.k1, &k.k2, &k.k3].map(|s| parse("[class2d]", s));
            let [a, b, c, d] = e;
            Some(ProjectiveClass2D::from_exprs(chart.clone(), [a?, b?, c?, d?]).map_err(lib("[class2d]"))?)
        }
        None => None,
    };

    let mut a_tensor = None;
    let define = |metrics: &mut BTreeMap<String, MetricField>, name: &str, g: MetricField| -> Result<(), CliError> {
        if metrics.insert(name.to_string(), g).is_some() {
            return Err(CliError::Input(format!("metric `{name}` is defined by both a [metric.{name}] block and the construction")));
        }
        Ok(())
    };
    match &raw.construction {
        None => {}
        Some(RawConstruction::Dini { x, y }) => {
            let d = dini_pair(&chart, parse("[construction] X", x)?, parse("[construction] Y", y)?).map_err(lib("[construction]"))?;
            define(&mut metrics, "g", d.g)?;
            define(&mut metrics, "g_bar", d.g_bar)?;
            a_tensor = Some(d.a);
        }
        Some(RawConstruction::LeviCivita { lambda, sign, h, h_bar }) => {
            let flat = |what: &str, m: &Vec<Vec<String>>| m.iter().flatten().map(|s| parse(what, s)).collect::<Result<Vec<_>, _>>();
            let data = LeviCivitaData { chart: chart.clone(), lambda: parse("[construction] lambda", lambda)?, sign: *sign, h: flat("[construction] h", h)?, h_bar: flat("[construction] h_bar", h_bar)? };
            let lc = levi_civita_model(&data).map_err(lib("[construction]"))?;
            define(&mut metrics, "g", lc.g)?;
            a_tensor = Some(lc.a);
        }
        Some(RawConstruction::Sphere) => {
            let s = sphere_gnomonic_model(n, 1.0).map_err(lib("[construction]"))?;
            let exprs = s.components().fields().expect("gnomonic metric is symbolic").iter().map(|f| f.expr().clone()).collect();
            define(&mut metrics, "g", MetricField::from_exprs(chart.clone(), exprs, Some((n, 0))).map_err(lib("[construction]"))?)?;
        }
        Some(RawConstruction::Flat) => {
            flat_model(n).map_err(lib("[construction]"))?;
            if connection.is_some() {
                return Err(CliError::Input("the connection is defined by both a [connection] block and the flat construction".into()));
            }
            connection = Some(ConnectionField::flat(chart.clone()));
            define(&mut metrics, "g", MetricField::euclidean(chart.clone()))?;
        }
    }
    Ok(Model { chart, metrics, connection, class2d, a_tensor, raw, digest: String::new() })
}

fn lib(what: &str) -> impl Fn(projcalc::Error) -> CliError + '_ {
    move |e| CliError::Input(format!("{what}: {e}"))
}

/// "line L: " for the first line of `text` holding `src` as a quoted string.
fn locate(text: &str, src: &str) -> String {
    let quoted = [format!("\"{src}\""), format!("'{src}'")];
    text.lines()
        .position(|l| quoted.iter().any(|q| l.contains(q.as_str())))
        .map(|k| format!("line {}: ", k + 1))
        .unwrap_or_default()
}

/// Default chart for `make`: `x, y (, z)` or `x1..xn` on `[-r, r]^n`.
pub fn cube_chart(n: usize, r: f64) -> Result<RawChart, CliError> {
    let c = Chart::cube(n, r).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(RawChart { coords: c.coords().to_vec(), domain: Some(c.domain().iter().map(|&(a, b)| [a, b]).collect()) })
}

/// Explicit `[metric.<name>]` block of a symbolic metric.
pub fn metric_block(g: &MetricField) -> Result<RawMetric, CliError> {
    let n = g.dim();
    let fields = g.components().fields().ok_or_else(|| CliError::Input("metric has no symbolic components".into()))?;
    let components = (0..n).map(|i| (0..n).map(|j| fields[i * n + j].source()).collect()).collect();
    Ok(RawMetric { components, signature: g.signature().map(|(p, q)| [p, q]) })
}
