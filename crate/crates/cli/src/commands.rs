use std::fs;
use std::path::Path;

use fieldsup::constants::{
    estimate, known_constant, ConstantEstimate, ConstantKind, ConstantRegistry, Drift, Estimator, LimitFieldSpec,
    McSettings,
};
use fieldsup::params::{validate_params, SegmentGeometry};
use fieldsup::sim::{incremental_field, CovarianceModel, Grid1D, PathSimulator, SamplePath, SimOptions};
use fieldsup::tail::{
    bb_span_tail, fbm_span_tail, max_loss_span_tail, shepp_bb_tail, shepp_fbm_tail, shepp_stationary_tail,
    theorem_tail, AsymptoticResult, MaxLossSpec, SheppStationarySpec, Which,
};
use fieldsup::validation::{
    estimate_tail, ratio_report, records, RatioReport, Scenario, ScenarioKind, StationaryModel, TailRecord,
};
use fieldsup::Error;
use serde::{Deserialize, Serialize};

use crate::config::{Command, Params, RunConfig};

/// Why a run stopped, mapped onto the process exit status.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or parameters: exit 2.
    Invalid(Vec<String>),
    /// A formula needs a constant nobody supplied: exit 3.
    MissingConstant(String),
    /// Anything else: exit 1.
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::MissingConstant(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::MissingConstant(name) => Failure::MissingConstant(name),
            Error::Params(errs) => Failure::Invalid(errs.iter().map(|e| e.to_string()).collect()),
            Error::InvalidGrid(_)
            | Error::InvalidModel(_)
            | Error::InvalidSpec(_)
            | Error::InvalidThreshold(_)
            | Error::InvalidScenario(_)
            | Error::InvalidMonteCarlo(_)
            | Error::GridMismatch(_) => Failure::Invalid(vec![e.to_string()]),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunResult {
    Tail(AsymptoticResult),
    Constant(ConstantEstimate),
    Validate(ValidationResult),
    Simulate(SimulationResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationResult {
    pub records: Vec<TailRecord>,
    pub report: Option<RatioReport>,
    /// Why `report` is absent.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub process: String,
    pub dt: f64,
    /// Path grid, or the start-point grid of a Shepp field.
    pub s_points: Vec<f64>,
    /// Lag grid of a Shepp field.
    pub t_points: Option<Vec<f64>>,
    /// One entry per sample; fields are stored row by row in `s`.
    pub samples: Vec<Vec<f64>>,
}

/// A run's full record: the resolved configuration and what it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub result: RunResult,
}

pub fn execute(cfg: &RunConfig) -> Result<RunResult, Failure> {
    let p = Params::new(&cfg.parameters);
    let out = match cfg.command {
        Command::Tail => tail(&p),
        Command::Constant => constant(&p, cfg.seed),
        Command::Validate => validate(&p, cfg.seed),
        Command::Simulate => simulate(&p, cfg.seed),
    };
    let diag = p.finish();
    match out {
        Ok(pending) if diag.is_empty() => pending.run(),
        Ok(_) => Err(Failure::Invalid(diag)),
        Err(Failure::Invalid(mut msgs)) => {
            for d in diag {
                if !msgs.contains(&d) {
                    msgs.push(d);
                }
            }
            Err(Failure::Invalid(msgs))
        }
        // Parameter diagnostics take precedence over whatever they caused downstream.
        Err(_) if !diag.is_empty() => Err(Failure::Invalid(diag)),
        Err(e) => Err(e),
    }
}

/// Work deferred until every parameter has been checked.
pub struct Pending(Box<dyn FnOnce() -> Result<RunResult, Failure>>);

impl Pending {
    fn new(f: impl FnOnce() -> Result<RunResult, Failure> + 'static) -> Self {
        Pending(Box::new(f))
    }

    fn run(self) -> Result<RunResult, Failure> {
        (self.0)()
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(vec![msg.into()])
}

fn load_registry(p: &Params) -> Result<ConstantRegistry, Failure> {
    match p.path("registry") {
        None => Ok(ConstantRegistry::new()),
        Some(path) => read_registry(&path),
    }
}

fn read_registry(path: &Path) -> Result<ConstantRegistry, Failure> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("registry {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("registry {}: {e}", path.display())))
}

fn stationary_model(p: &Params) -> Option<StationaryModel> {
    let name = p.choice("model", &[("slepian", 0u8), ("ornstein-uhlenbeck", 1), ("ou", 1), ("damped-cosine", 2)])?;
    Some(match name {
        0 => StationaryModel::Slepian,
        1 => StationaryModel::OrnsteinUhlenbeck,
        _ => StationaryModel::DampedCosine { lambda: p.need("lambda"), omega: p.need("omega") },
    })
}

fn which(p: &Params, default: Which) -> Which {
    p.choice("which", &[("chi1", Which::Chi1), ("chi2", Which::Chi2)]).unwrap_or(default)
}

#[derive(Clone, Copy)]
enum Formula {
    Theorem,
    SheppStationary,
    SheppBb,
    SheppFbm,
    MaxLoss,
    Span,
    BbSpan,
    FbmSpan,
}

fn tail(p: &Params) -> Result<Pending, Failure> {
    let formula = p
        .choice(
            "formula",
            &[
                ("theorem", Formula::Theorem),
                ("shepp-stationary", Formula::SheppStationary),
                ("shepp-bb", Formula::SheppBb),
                ("shepp-fbm", Formula::SheppFbm),
                ("maxloss", Formula::MaxLoss),
                ("span", Formula::Span),
                ("bb-span", Formula::BbSpan),
                ("fbm-span", Formula::FbmSpan),
            ],
        )
        .unwrap_or(Formula::Theorem);
    let u = p.need("u");
    let registry = load_registry(p)?;
    let result: Box<dyn FnOnce() -> fieldsup::Result<AsymptoticResult>> = match formula {
        Formula::Theorem => {
            let keys = ["alpha1", "alpha2", "beta", "b", "a1", "a2", "a3", "S", "T"];
            let raw = keys.iter().filter_map(|k| p.raw(k).map(|v| (k.to_string(), v.to_string()))).collect();
            let interior = p.real("interior");
            let params =
                validate_params(&raw).map_err(|e| Failure::Invalid(e.iter().map(|e| e.to_string()).collect()))?;
            let geom = match interior {
                Some(len) => SegmentGeometry::interior(len)
                    .map_err(|e| Failure::Invalid(e.iter().map(|e| e.to_string()).collect()))?,
                None => SegmentGeometry::boundary(&params),
            };
            Box::new(move || theorem_tail(&params, &geom, u, &registry))
        }
        Formula::SheppStationary => {
            let spec = match stationary_model(p) {
                Some(model) => {
                    let default_t = if model == StationaryModel::Slepian { 0.5 } else { 1.0 };
                    let (s, t) = (p.real_or("S", 1.0), p.real_or("T", default_t));
                    model.shepp_spec(s, t)?
                }
                None => SheppStationarySpec {
                    r_t: p.need("r_T"),
                    a1: p.need("a1"),
                    alpha1: p.need("alpha1"),
                    a2: p.need("a2"),
                    alpha2: p.need("alpha2"),
                    s: p.need("S"),
                    t: p.need("T"),
                },
            };
            Box::new(move || shepp_stationary_tail(&spec, u, &registry))
        }
        Formula::SheppBb => Box::new(move || shepp_bb_tail(u)),
        Formula::SheppFbm => {
            let (alpha, s) = (p.need("alpha"), p.real_or("S", 1.0));
            Box::new(move || shepp_fbm_tail(alpha, s, u, &registry))
        }
        Formula::MaxLoss | Formula::Span => {
            let w = if matches!(formula, Formula::MaxLoss) { Which::Chi1 } else { Which::Chi2 };
            let spec = match stationary_model(p) {
                Some(model) => model.max_loss_spec()?,
                None => MaxLossSpec {
                    t_m: p.need("t_m"),
                    r_tm: p.need("r_tm"),
                    a1: p.need("a1"),
                    alpha1: p.need("alpha1"),
                    a2: p.need("a2"),
                    alpha2: p.need("alpha2"),
                },
            };
            Box::new(move || max_loss_span_tail(&spec, u, w, &registry))
        }
        Formula::BbSpan => {
            let w = which(p, Which::Chi2);
            Box::new(move || bb_span_tail(u, w))
        }
        Formula::FbmSpan => {
            let (alpha, w) = (p.need("alpha"), which(p, Which::Chi2));
            Box::new(move || fbm_span_tail(alpha, u, w, &registry))
        }
    };
    Ok(Pending::new(move || Ok(RunResult::Tail(result()?))))
}

fn constant_kind(p: &Params) -> Option<ConstantKind> {
    #[derive(Clone, Copy)]
    enum K {
        Pickands,
        Piterbarg,
        PiterbargTwo,
        Generalized,
        GeneralizedTwo,
    }
    let kind = p.choice(
        "kind",
        &[
            ("pickands", K::Pickands),
            ("piterbarg", K::Piterbarg),
            ("piterbarg-two-sided", K::PiterbargTwo),
            ("generalized", K::Generalized),
            ("generalized-two-sided", K::GeneralizedTwo),
        ],
    );
    let kind = match kind {
        Some(k) => k,
        None => {
            if !p.has("kind") {
                p.error("kind", "missing");
            }
            return None;
        }
    };
    let spec = || -> Option<LimitFieldSpec> {
        if let Some(preset) = p.choice("preset", &[("slepian", 0u8), ("fbm-shepp", 1)]) {
            return Some(if preset == 0 { LimitFieldSpec::slepian() } else { LimitFieldSpec::fbm_shepp() });
        }
        let drift = match p.real("drift_b") {
            Some(b) => Drift::Power { b, beta: p.real("beta").unwrap_or_else(|| p.real_or("alpha2", f64::NAN)) },
            None => Drift::None,
        };
        let variant = p.choice("variant", &[("y1", 1u8), ("y2", 2)]).unwrap_or(1);
        let built = if variant == 1 {
            LimitFieldSpec::y1(p.need("a1"), p.need("a2"), p.need("a3"), p.need("alpha"), drift)
        } else {
            LimitFieldSpec::y2(p.need("a1"), p.need("a2"), p.need("alpha1"), p.need("alpha2"), drift)
        };
        match built {
            Ok(s) => Some(s),
            Err(e) => {
                p.error("spec", e);
                None
            }
        }
    };
    Some(match kind {
        K::Pickands => ConstantKind::Pickands { alpha: p.need("alpha") },
        K::Piterbarg => ConstantKind::Piterbarg { alpha: p.need("alpha"), b: p.need("b") },
        K::PiterbargTwo => ConstantKind::PiterbargTwoSided { alpha: p.need("alpha"), b: p.need("b") },
        K::Generalized => ConstantKind::Generalized { spec: spec()? },
        K::GeneralizedTwo => ConstantKind::GeneralizedTwoSided { spec: spec()? },
    })
}

fn constant(p: &Params, seed: u64) -> Result<Pending, Failure> {
    let kind = constant_kind(p);
    let defaults = McSettings::default();
    let settings = McSettings {
        horizon_s: p.real_or("horizon_s", defaults.horizon_s),
        horizon_t: p.real_or("horizon_t", defaults.horizon_t),
        grid_dt: p.real_or("dt", defaults.grid_dt),
        replications: p.count("reps").map_or(defaults.replications, |r| r as usize),
        seed,
        estimator: p
            .choice(
                "estimator",
                &[
                    ("sup-over-integral", Estimator::SupOverIntegral),
                    ("truncated-average", Estimator::TruncatedAverage),
                ],
            )
            .unwrap_or_default(),
    };
    let user_value = p.real("value");
    let user_se = p.real_or("std_error", 0.0);
    let save_to = p.path("save_to");
    let Some(kind) = kind else {
        return Err(invalid("no constant selected"));
    };
    Ok(Pending::new(move || {
        let est = match (known_constant(&kind), user_value) {
            (Some(exact), _) => exact,
            (None, Some(v)) => {
                let reg = ConstantRegistry::new().with_user(kind, v, user_se)?;
                reg.resolve(&kind)?
            }
            (None, None) => estimate(&kind, &settings)?,
        };
        if let Some(path) = save_to {
            let mut reg = if path.exists() { read_registry(&path)? } else { ConstantRegistry::new() };
            match est.source {
                fieldsup::constants::ConstantSource::MonteCarlo => reg.insert_estimate(est.clone())?,
                fieldsup::constants::ConstantSource::UserSupplied => reg.insert_user(kind, est.value, est.std_error)?,
                fieldsup::constants::ConstantSource::ClosedForm => {}
            }
            let text = serde_json::to_string_pretty(&reg).map_err(|e| Failure::Runtime(e.to_string()))?;
            fs::write(&path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
        }
        Ok(RunResult::Constant(est))
    }))
}

fn scenario_kind(p: &Params) -> Option<ScenarioKind> {
    #[derive(Clone, Copy)]
    enum K {
        SheppFbm,
        SheppStationary,
        SheppBb,
        MaxLoss,
        Span,
        BbSpan,
        FbmSpan,
        BmSup,
        BridgeSup,
    }
    let k = p.choice(
        "scenario",
        &[
            ("shepp-fbm", K::SheppFbm),
            ("shepp-stationary", K::SheppStationary),
            ("shepp-bb", K::SheppBb),
            ("maxloss", K::MaxLoss),
            ("span", K::Span),
            ("bb-span", K::BbSpan),
            ("fbm-span", K::FbmSpan),
            ("bm-sup-oracle", K::BmSup),
            ("bridge-sup-oracle", K::BridgeSup),
        ],
    );
    let Some(k) = k else {
        if !p.has("scenario") {
            p.error("scenario", "missing");
        }
        return None;
    };
    let model = || {
        let m = stationary_model(p);
        if m.is_none() && !p.has("model") {
            p.error("model", "missing");
        }
        m
    };
    Some(match k {
        K::SheppFbm => ScenarioKind::SheppFbm { alpha: p.need("alpha"), s: p.real_or("S", 1.0) },
        K::SheppStationary => {
            let model = model()?;
            let default_t = if model == StationaryModel::Slepian { 0.5 } else { 1.0 };
            ScenarioKind::SheppStationary { model, s: p.real_or("S", 1.0), t: p.real_or("T", default_t) }
        }
        K::SheppBb => ScenarioKind::SheppBb,
        K::MaxLoss => ScenarioKind::MaxLoss { model: model()? },
        K::Span => ScenarioKind::Span { model: model()? },
        K::BbSpan => ScenarioKind::BbSpan,
        K::FbmSpan => ScenarioKind::FbmSpan { alpha: p.need("alpha") },
        K::BmSup => ScenarioKind::BmSupOracle,
        K::BridgeSup => ScenarioKind::BridgeSupOracle,
    })
}

fn validate(p: &Params, seed: u64) -> Result<Pending, Failure> {
    let kind = scenario_kind(p);
    let thresholds = p.reals("u").unwrap_or_default();
    if !p.has("u") {
        p.error("u", "missing");
    }
    let replications = p.count("reps").unwrap_or(100_000);
    let dt = p.real("dt");
    let registry = load_registry(p)?;
    let Some(kind) = kind else {
        return Err(invalid("no scenario selected"));
    };
    let sc = Scenario { kind, thresholds, replications, seed, dt };
    sc.validate()?;
    Ok(Pending::new(move || {
        let est = estimate_tail(&sc, &registry)?;
        let (report, note) = match ratio_report(&est) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Ok(RunResult::Validate(ValidationResult { records: records(&sc, &est), report, note }))
    }))
}

fn simulate(p: &Params, seed: u64) -> Result<Pending, Failure> {
    let process = p.choice(
        "process",
        &[("fbm", 0u8), ("brownian-bridge", 1), ("slepian", 2), ("ornstein-uhlenbeck", 3), ("damped-cosine", 4)],
    );
    let model = match process {
        Some(0) => Some(CovarianceModel::Fbm { alpha: p.real_or("alpha", 1.0) }),
        Some(1) => Some(CovarianceModel::BrownianBridge),
        Some(2) => Some(CovarianceModel::Slepian),
        Some(3) => Some(CovarianceModel::OrnsteinUhlenbeck),
        Some(_) => Some(CovarianceModel::damped_cosine(p.need("lambda"), p.need("omega"))),
        None => {
            if !p.has("process") {
                p.error("process", "missing");
            }
            None
        }
    };
    let dt = p.real_or("dt", 1.0 / 256.0);
    let paths = p.count("paths").unwrap_or(1);
    let shepp = p.choice("field", &[("none", false), ("shepp", true)]).unwrap_or(false);
    let (s, t) = if shepp { (p.real_or("S", 0.5), p.real_or("T", 0.5)) } else { (0.0, 0.0) };
    let length = if shepp { s + t } else { p.real_or("length", 1.0) };
    let Some(model) = model else {
        return Err(invalid("no process selected"));
    };
    let steps = |len: f64, what: &str| -> Result<usize, Failure> {
        let k = len / dt;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) || k.round() < 1.0 {
            return Err(invalid(format!("{what} = {len} is not a whole number of steps {dt}")));
        }
        Ok(k.round() as usize)
    };
    let n = steps(length, "length")?;
    let (ns, nt) = if shepp { (steps(s, "S")?, steps(t, "T")?) } else { (0, 0) };
    if paths == 0 {
        return Err(invalid("parameter `paths`: must be at least 1"));
    }
    let grid = Grid1D::new(n + 1, dt, 0.0)?;
    let sim = PathSimulator::new(&model, grid, SimOptions::default())?;
    let name = model.name();
    Ok(Pending::new(move || {
        let raw = sim.map_paths(paths as usize, seed, |x| x.to_vec());
        let result = if shepp {
            let sgrid = Grid1D::new(ns + 1, dt, 0.0)?;
            let tgrid = Grid1D::new(nt + 1, dt, 0.0)?;
            let samples = raw
                .into_iter()
                .map(|values| {
                    let path = SamplePath::new(grid, values)?;
                    Ok(incremental_field(&path, sgrid, tgrid)?.values)
                })
                .collect::<fieldsup::Result<Vec<_>>>()?;
            SimulationResult {
                process: format!("shepp-field({name})"),
                dt,
                s_points: sgrid.points().collect(),
                t_points: Some(tgrid.points().collect()),
                samples,
            }
        } else {
            SimulationResult { process: name, dt, s_points: grid.points().collect(), t_points: None, samples: raw }
        };
        Ok(RunResult::Simulate(result))
    }))
}
