use crate::model::{build, cube_chart, digest, load_model, metric_block, Model, RawConstruction, RawModel};
use crate::report::Report;
use crate::CliError;
use nalgebra::DMatrix;
use projcalc::constructions::beltrami_transform;
use projcalc::flows::{conservation_report, integrate_geodesic, GeodesicState, NamedIntegral, StopReason};
use projcalc::mobility::{a_tensor_from_metrics, killing_tensor_from_pair, solve_mobility, ATensor, MobilityInput, MobilityOptions, SOLUTION_TOLERANCE};
use projcalc::projinv::{k_coefficients, liouville_from_class, liouville_tensor, metrisability_residual, projective_equivalence_defect, weyl_tensor};
use projcalc::sampling::{halton_points, rng};
use projcalc::tensor::{christoffel, curvature_tensor, ricci_tensor, ChartMap, ConnectionField, MetricField};
use rand::Rng;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

/// What a command produced: text for stdout and whether its checks passed.
pub struct Outcome {
    pub stdout: String,
    pub pass: bool,
}

impl From<Report> for Outcome {
    fn from(r: Report) -> Self {
        Outcome { pass: r.pass, stdout: r.to_json() }
    }
}

pub struct Context {
    pub argv: Vec<String>,
    pub seed: u64,
}

impl Context {
    fn report(&self, model: Option<&Model>) -> Report {
        Report::new(self.argv.clone(), model.map(|m| m.digest.clone()), self.seed)
    }
}

/// A connection picked from the model, with the metric it came from if any.
struct Selected {
    conn: ConnectionField,
    metric: Option<(String, MetricField)>,
    source: String,
}

fn metric<'m>(model: &'m Model, name: &str) -> Result<&'m MetricField, CliError> {
    model.metrics.get(name).ok_or_else(|| {
        let known: Vec<&str> = model.metrics.keys().map(String::as_str).collect();
        CliError::Input(format!("no metric named `{name}` (known: {})", known.join(", ")))
    })
}

/// `name` is a metric name, `connection` or `class2d`; without a name the
/// connection block wins, then the 2D class, then a unique metric.
fn select(model: &Model, name: Option<&str>) -> Result<Selected, CliError> {
    let from_metric = |n: &str| -> Result<Selected, CliError> {
        let g = metric(model, n)?;
        Ok(Selected { conn: christoffel(g), metric: Some((n.to_string(), g.clone())), source: format!("metric {n}") })
    };
    match name {
        Some("connection") => {
            let c = model.connection.as_ref().ok_or_else(|| CliError::Input("model has no connection".into()))?;
            Ok(Selected { conn: c.clone(), metric: None, source: "connection".into() })
        }
        Some("class2d") => {
            let k = model.class2d.as_ref().ok_or_else(|| CliError::Input("model has no class2d block".into()))?;
            Ok(Selected { conn: k.representative(), metric: None, source: "class2d".into() })
        }
        Some(n) => from_metric(n),
        None => {
            if let Some(c) = &model.connection {
                Ok(Selected { conn: c.clone(), metric: None, source: "connection".into() })
            } else if let Some(k) = &model.class2d {
                Ok(Selected { conn: k.representative(), metric: None, source: "class2d".into() })
            } else if model.metrics.len() == 1 {
                from_metric(model.metrics.keys().next().unwrap())
            } else {
                Err(CliError::Input("model defines several objects; choose one with --metric".into()))
            }
        }
    }
}

fn check_dim(what: &str, v: &[f64], n: usize) -> Result<(), CliError> {
    if v.len() != n {
        return Err(CliError::Input(format!("{what} has {} entries, the chart has dimension {n}", v.len())));
    }
    Ok(())
}

pub fn invariants(ctx: &Context, model_path: &Path, at: &[f64], name: Option<&str>) -> Result<Outcome, CliError> {
    let model = load_model(model_path)?;
    let n = model.chart.dim();
    check_dim("--at", at, n)?;
    model.chart.check(at)?;
    let sel = select(&model, name)?;
    let mut results = json!({
        "point": at,
        "source": sel.source,
        "dimension": n,
        "christoffel": sel.conn.values(at)?,
        "curvature": curvature_tensor(&sel.conn, at)?.data(),
        "ricci": ricci_tensor(&sel.conn, at)?.data(),
        "weyl": weyl_tensor(&sel.conn, at)?.data(),
    });
    if n == 2 {
        let k = k_coefficients(&sel.conn)?;
        results["k_coefficients"] = json!(k.values(at)?);
        results["liouville_from_class"] = json!(liouville_from_class(&k, at)?);
        if let Some((_, g)) = &sel.metric {
            results["liouville"] = json!(liouville_tensor(g, at)?.components);
        }
    }
    let mut report = ctx.report(Some(&model));
    report.results = results;
    Ok(report.into())
}

pub struct GeodesicArgs<'a> {
    pub model: &'a Path,
    pub metric: Option<&'a str>,
    pub partner: Option<&'a str>,
    pub from: &'a [f64],
    pub dir: &'a [f64],
    pub tmax: f64,
    pub step: f64,
    pub integrals: &'a [String],
    pub out: Option<&'a Path>,
    pub drift_tol: f64,
}

fn partner_name(model: &Model, metric: &str, partner: Option<&str>) -> Option<String> {
    partner.map(str::to_string).or_else(|| {
        let others: Vec<&String> = model.metrics.keys().filter(|k| k.as_str() != metric).collect();
        (others.len() == 1).then(|| others[0].clone())
    })
}

pub fn geodesic(ctx: &Context, a: &GeodesicArgs<'_>) -> Result<Outcome, CliError> {
    let model = load_model(a.model)?;
    let n = model.chart.dim();
    check_dim("--from", a.from, n)?;
    check_dim("--dir", a.dir, n)?;
    let sel = select(&model, a.metric)?;
    let gname = sel.metric.as_ref().map(|(k, _)| k.clone());
    let g = sel.metric.as_ref().map(|(_, g)| g);
    let partner = gname.as_deref().and_then(|m| partner_name(&model, m, a.partner));
    let g_bar = partner.as_deref().map(|p| metric(&model, p)).transpose()?;
    let need = |what: &str| CliError::Input(format!("integral `{what}` needs a metric and a projectively equivalent partner (--metric, --partner)"));
    let a_tensor: Option<ATensor> = match (g, g_bar) {
        (Some(g), Some(gb)) => Some(a_tensor_from_metrics(g, gb)?),
        (Some(_), None) if gname.as_deref() == Some("g") => model.a_tensor.clone(),
        _ => None,
    };
    let killing = match (g, g_bar) {
        (Some(g), Some(gb)) if a.integrals.iter().any(|s| s == "killing") => Some(killing_tensor_from_pair(g, gb)?),
        _ => None,
    };
    let mut named = Vec::new();
    for spec in a.integrals {
        let item = match spec.as_str() {
            "energy" => NamedIntegral::energy(g.ok_or_else(|| CliError::Input("integral `energy` needs --metric".into()))?),
            "painleve" => NamedIntegral::painleve(g.ok_or_else(|| need(spec))?, g_bar.ok_or_else(|| need(spec))?),
            "killing" => NamedIntegral::quadratic("killing", &killing.as_ref().ok_or_else(|| need(spec))?.khat),
            s if s.starts_with("family:") => {
                let t: f64 = s["family:".len()..].parse().map_err(|_| CliError::Input(format!("malformed integral `{s}`")))?;
                NamedIntegral::family(g.ok_or_else(|| need(s))?, a_tensor.as_ref().ok_or_else(|| need(s))?, t)
            }
            other => return Err(CliError::Input(format!("unknown integral `{other}` (energy, painleve, killing, family:<t>)"))),
        };
        named.push(item);
    }
    let traj = integrate_geodesic(&sel.conn, &GeodesicState::new(a.from.to_vec(), a.dir.to_vec()), a.tmax, a.step)?;
    let rep = conservation_report(&traj, &named)?;
    if let Some(out) = a.out {
        let io = |e: csv::Error| CliError::Input(format!("{}: {e}", out.display()));
        let mut w = csv::Writer::from_path(out).map_err(io)?;
        let mut header = vec!["t".to_string()];
        for prefix in ["x", "v"] {
            header.extend((1..=n).map(|i| format!("{prefix}^{i}")));
        }
        header.extend(named.iter().map(|i| i.name.clone()));
        w.write_record(&header).map_err(io)?;
        for (s, vals) in traj.states.iter().zip(&rep.values) {
            let row = std::iter::once(s.time).chain(s.position.iter().copied()).chain(s.velocity.iter().copied()).chain(vals.iter().copied());
            w.write_record(row.map(|v| v.to_string())).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Input(format!("{}: {e}", out.display())))?;
    }
    let last = traj.states.last().expect("trajectory has a start");
    let stop = match traj.stop {
        StopReason::Completed => json!({ "reason": "completed" }),
        StopReason::LeftDomain { time } => json!({ "reason": "left-domain", "time": time }),
    };
    let mut report = ctx.report(Some(&model));
    report.tolerance("drift", a.drift_tol);
    let drifts: Vec<Value> = rep
        .integrals
        .iter()
        .map(|d| json!({ "name": d.name, "initial": d.initial, "max_abs_drift": d.max_abs_drift, "max_rel_drift": d.max_rel_drift }))
        .collect();
    for d in &rep.integrals {
        report.check(&format!("drift:{}", d.name), d.max_rel_drift <= a.drift_tol);
    }
    report.results = json!({
        "source": sel.source,
        "partner": partner,
        "method": traj.method,
        "step": traj.step,
        "samples": traj.states.len(),
        "stop": stop,
        "final": { "t": last.time, "position": last.position, "velocity": last.velocity },
        "integrals": drifts,
        "csv": a.out.map(|p| p.display().to_string()),
    });
    Ok(report.into())
}

pub struct MobilityArgs<'a> {
    pub model: &'a Path,
    pub metric: Option<&'a str>,
    pub degree: usize,
    pub grid: usize,
    pub svtol: f64,
    pub region: Option<Vec<(f64, f64)>>,
    pub points: usize,
}

pub fn mobility(ctx: &Context, a: &MobilityArgs<'_>) -> Result<Outcome, CliError> {
    let model = load_model(a.model)?;
    let sel = select(&model, a.metric)?;
    let opts = MobilityOptions { degree: a.degree, per_axis: a.grid, sv_threshold: a.svtol, region: a.region.clone() };
    let rep = solve_mobility(MobilityInput::Connection(&sel.conn), &opts)?;
    let chart = match &a.region {
        Some(r) => model.chart.with_domain(r.clone())?,
        None => model.chart.clone(),
    };
    let probes = halton_points(&chart, a.points, ctx.seed, 0.01);
    let mut report = ctx.report(Some(&model));
    report.tolerance("singular_value_threshold", a.svtol);
    report.tolerance("solution_residual", SOLUTION_TOLERANCE);
    let mut solutions = Vec::new();
    let mut worst = 0.0f64;
    for (s, c) in rep.solutions.iter().zip(&rep.coefficients) {
        let mut r = 0.0f64;
        for p in &probes {
            r = r.max(metrisability_residual(&s.sigma, &sel.conn, p)?.max_abs());
        }
        worst = worst.max(r);
        solutions.push(json!({ "coefficients": c, "collocation_residual": s.residual_norm, "probe_residual": r }));
    }
    report.check("solutions_verified", worst <= SOLUTION_TOLERANCE);
    report.results = json!({
        "source": sel.source,
        "degree": a.degree,
        "grid": a.grid,
        "region": chart.domain(),
        "rows": rep.rows,
        "unknowns": rep.unknowns,
        "dimension": rep.dimension,
        "singular_values": rep.singular_values,
        "warning": rep.warning,
        "probe_points": a.points,
        "solutions": solutions,
    });
    Ok(report.into())
}

pub struct EquivalenceArgs<'a> {
    pub model: &'a Path,
    pub first: Option<&'a str>,
    pub second: Option<&'a str>,
    pub points: usize,
    pub tol: f64,
    pub geodesics: usize,
    pub tmax: f64,
    pub step: f64,
    pub drift_tol: f64,
}

pub fn check_equivalence(ctx: &Context, a: &EquivalenceArgs<'_>) -> Result<Outcome, CliError> {
    let model = load_model(a.model)?;
    let (first, second) = match (a.first, a.second) {
        (Some(x), Some(y)) => (x.to_string(), y.to_string()),
        (None, None) if model.metrics.len() == 2 => {
            let mut k = model.metrics.keys();
            (k.next().unwrap().clone(), k.next().unwrap().clone())
        }
        _ => return Err(CliError::Input("name both objects with --first and --second".into())),
    };
    let (sa, sb) = (select(&model, Some(&first))?, select(&model, Some(&second))?);
    let n = model.chart.dim();
    let points = halton_points(&model.chart, a.points, ctx.seed, 0.05);
    let mut report = ctx.report(Some(&model));
    report.tolerance("equivalence", a.tol);
    let mut defect = 0.0f64;
    for p in &points {
        defect = defect.max(projective_equivalence_defect(&sa.conn, &sb.conn, p)?);
    }
    report.check("connection_shift", defect <= a.tol);
    let mut results = json!({ "first": sa.source, "second": sb.source, "points": a.points, "shift_defect": defect });
    if n == 2 {
        let (ka, kb) = (k_coefficients(&sa.conn)?, k_coefficients(&sb.conn)?);
        let mut gap = 0.0f64;
        for p in &points {
            for (x, y) in ka.values(p)?.iter().zip(kb.values(p)?) {
                gap = gap.max((x - y).abs());
            }
        }
        report.check("k_coefficients", gap <= a.tol);
        results["k_gap"] = json!(gap);
    }
    if let (Some((_, g)), Some((_, gb))) = (&sa.metric, &sb.metric) {
        report.tolerance("painleve_drift", a.drift_tol);
        let mut r = rng(ctx.seed);
        let starts = halton_points(&model.chart, a.geodesics, ctx.seed ^ 0x9e37_79b9, 0.25);
        let mut runs = Vec::new();
        let mut worst = 0.0f64;
        for x in starts {
            let v: Vec<f64> = (0..n).map(|_| r.random_range(-0.5..0.5)).collect();
            let traj = integrate_geodesic(&sa.conn, &GeodesicState::new(x.clone(), v.clone()), a.tmax, a.step)?;
            let rep = conservation_report(&traj, &[NamedIntegral::painleve(g, gb)])?;
            let d = rep.integrals[0].max_rel_drift;
            worst = worst.max(d);
            runs.push(json!({ "from": x, "dir": v, "samples": traj.states.len(), "max_rel_drift": d }));
        }
        report.check("painleve_drift", worst <= a.drift_tol);
        results["painleve"] = json!({ "max_rel_drift": worst, "geodesics": runs });
    }
    report.results = results;
    Ok(report.into())
}

/// Emits `raw` to `out`, or returns it as stdout, after checking that it
/// loads.
fn emit(ctx: &Context, raw: RawModel, out: Option<&Path>, extra: Value) -> Result<Outcome, CliError> {
    let text = raw.to_toml()?;
    build(toml::from_str(&text).map_err(|e| CliError::Input(format!("emitted model does not re-parse: {e}")))?, &text)?;
    match out {
        None => Ok(Outcome { stdout: text, pass: true }),
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let mut report = ctx.report(None);
            report.results = json!({ "written": path.display().to_string(), "digest": digest(text.as_bytes()), "details": extra });
            Ok(report.into())
        }
    }
}

pub enum MakeKind {
    Dini { x: String, y: String, half_width: f64 },
    LeviCivita { lambda: String, sign: f64, h: Vec<Vec<String>>, h_bar: Vec<Vec<String>>, half_width: f64 },
    Sphere { dim: usize, half_width: f64 },
    Flat { dim: usize },
}

pub fn make(ctx: &Context, kind: MakeKind, out: Option<&PathBuf>) -> Result<Outcome, CliError> {
    let (chart, construction) = match kind {
        MakeKind::Dini { x, y, half_width } => (cube_chart(2, half_width)?, RawConstruction::Dini { x, y }),
        MakeKind::LeviCivita { lambda, sign, h, h_bar, half_width } => {
            (cube_chart(1 + h.len() + h_bar.len(), half_width)?, RawConstruction::LeviCivita { lambda, sign, h, h_bar })
        }
        MakeKind::Sphere { dim, half_width } => (cube_chart(dim, half_width)?, RawConstruction::Sphere),
        MakeKind::Flat { dim } => (cube_chart(dim, 1.0)?, RawConstruction::Flat),
    };
    let raw = RawModel { chart: Some(chart), construction: Some(construction), ..Default::default() };
    emit(ctx, raw, out.map(PathBuf::as_path), Value::Null)
}

pub enum MapSpec {
    Beltrami(DMatrix<f64>),
    Exprs(Vec<String>),
}

pub fn transform(ctx: &Context, model_path: &Path, spec: MapSpec, out: Option<&PathBuf>) -> Result<Outcome, CliError> {
    let model = load_model(model_path)?;
    if model.connection.is_some() || model.class2d.is_some() {
        return Err(CliError::Input("transform acts on metric models only (found a connection or class2d)".into()));
    }
    if model.metrics.is_empty() {
        return Err(CliError::Input("model has no metrics to transform".into()));
    }
    let chart = model.chart.clone();
    let map = match &spec {
        MapSpec::Beltrami(m) => beltrami_transform(m, &chart)?.map,
        MapSpec::Exprs(e) => {
            if e.len() != chart.dim() {
                return Err(CliError::Input(format!("--map needs {} components, got {}", chart.dim(), e.len())));
            }
            ChartMap::parse(chart.clone(), chart.clone(), &e.iter().map(String::as_str).collect::<Vec<_>>())?
        }
    };
    map.validate(&chart.grid(5))?;
    let mut raw = RawModel { chart: model.raw.chart.clone(), ..Default::default() };
    for (name, g) in &model.metrics {
        raw.metric.insert(name.clone(), metric_block(&g.pullback(&map)?)?);
    }
    let details = json!({ "source_digest": model.digest, "metrics": model.metrics.keys().collect::<Vec<_>>() });
    emit(ctx, raw, out.map(PathBuf::as_path), details)
}
