use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use fieldsup::validation::to_csv;
use serde::Serialize;

use crate::commands::{RunRecord, RunResult};
use crate::config::Format;

pub fn render(record: &RunRecord, format: Format) -> Result<String, String> {
    match format {
        Format::Json => serde_json::to_string_pretty(record).map(|s| s + "\n").map_err(|e| e.to_string()),
        Format::Csv => csv_document(record),
        Format::Pretty => Ok(pretty(&record.result)),
    }
}

/// First line of every CSV document; the only line that varies between identical runs.
pub fn timestamp_line() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("# fieldsup {} generated at unix time {secs}\n", env!("CARGO_PKG_VERSION"))
}

fn csv_document(record: &RunRecord) -> Result<String, String> {
    let config = serde_json::to_string(&record.config).map_err(|e| e.to_string())?;
    let body = match &record.result {
        RunResult::Tail(r) => {
            let constants = r
                .constants_used
                .iter()
                .map(|c| format!("{}^{}={}±{}", c.name, c.power, c.value, c.std_error))
                .collect::<Vec<_>>()
                .join(";");
            rows(&[TailRow {
                formula: &r.formula,
                case: &r.case,
                u: r.u,
                value: r.value,
                prefactor: r.prefactor,
                polynomial_exponent: r.polynomial_exponent,
                gaussian_argument: r.gaussian_argument,
                log_value: r.log_value,
                underflow: r.underflow,
                value_low: r.value_interval.map(|i| i[0]),
                value_high: r.value_interval.map(|i| i[1]),
                constants,
            }])?
        }
        RunResult::Constant(c) => rows(&[ConstantRow {
            constant: c.name(),
            value: c.value,
            std_error: c.std_error,
            source: serde_json::to_value(c.source).map_err(|e| e.to_string())?.as_str().unwrap_or("").to_string(),
            horizon_t: c.horizon_t,
            horizon_s: c.horizon_s,
            grid_dt: c.grid_dt,
            replications: c.replications,
            seed: c.seed,
        }])?,
        RunResult::Validate(v) => to_csv(&v.records).map_err(|e| e.to_string())?,
        RunResult::Simulate(s) => {
            let mut out = String::new();
            match &s.t_points {
                None => {
                    out.push_str("sample,t,value\n");
                    for (k, path) in s.samples.iter().enumerate() {
                        for (t, v) in s.s_points.iter().zip(path) {
                            let _ = writeln!(out, "{k},{t},{v}");
                        }
                    }
                }
                Some(tp) => {
                    out.push_str("sample,s,t,value\n");
                    for (k, field) in s.samples.iter().enumerate() {
                        for (i, sv) in s.s_points.iter().enumerate() {
                            for (j, tv) in tp.iter().enumerate() {
                                let _ = writeln!(out, "{k},{sv},{tv},{}", field[i * tp.len() + j]);
                            }
                        }
                    }
                }
            }
            out
        }
    };
    Ok(format!("{}# config {config}\n{body}", timestamp_line()))
}

#[derive(Serialize)]
struct TailRow<'a> {
    formula: &'a str,
    case: &'a str,
    u: f64,
    value: f64,
    prefactor: f64,
    polynomial_exponent: f64,
    gaussian_argument: f64,
    log_value: f64,
    underflow: bool,
    value_low: Option<f64>,
    value_high: Option<f64>,
    constants: String,
}

#[derive(Serialize)]
struct ConstantRow {
    constant: String,
    value: f64,
    std_error: f64,
    source: String,
    horizon_t: Option<f64>,
    horizon_s: Option<f64>,
    grid_dt: Option<f64>,
    replications: Option<u64>,
    seed: Option<u64>,
}

fn rows<T: Serialize>(items: &[T]) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for it in items {
        w.serialize(it).map_err(|e| e.to_string())?;
    }
    String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn pretty(result: &RunResult) -> String {
    let mut out = String::new();
    match result {
        RunResult::Tail(r) => {
            let _ = writeln!(out, "{} case {}", r.formula, r.case);
            let _ = writeln!(
                out,
                "P(sup > {}) ≈ {:e} = {:e} · u^{} · Ψ({})",
                r.u, r.value, r.prefactor, r.polynomial_exponent, r.gaussian_argument
            );
            if r.underflow {
                let _ = writeln!(out, "value underflows; ln value = {}", r.log_value);
            }
            if let Some([lo, hi]) = r.value_interval {
                let _ = writeln!(out, "95% range from constant errors: [{lo:e}, {hi:e}]");
            }
            for c in &r.constants_used {
                let _ = writeln!(out, "  {}^{} = {} ± {} ({:?})", c.name, c.power, c.value, c.std_error, c.source);
            }
        }
        RunResult::Constant(c) => {
            let _ = writeln!(out, "{} = {} ± {} ({:?})", c.name(), c.value, c.std_error, c.source);
            if let (Some(t), Some(dt), Some(n)) = (c.horizon_t, c.grid_dt, c.replications) {
                let s = c.horizon_s.map(|s| format!(" S = {s}")).unwrap_or_default();
                let _ = writeln!(out, "  T = {t}{s} dt = {dt} replications = {n}");
            }
        }
        RunResult::Validate(v) => {
            let _ = writeln!(out, "{:>8} {:>12} {:>25} {:>12} {:>8}", "u", "p_hat", "95% CI", "asymptotic", "ratio");
            let usable =
                |u: f64| v.report.as_ref().and_then(|r| r.rows.iter().find(|x| x.estimate.u == u)).map(|x| x.usable);
            for r in &v.records {
                let ratio = r.ratio.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
                let flag = if usable(r.u) == Some(false) { " (excluded)" } else { "" };
                let _ = writeln!(
                    out,
                    "{:>8} {:>12.4e} [{:>10.4e}, {:>10.4e}] {:>12.4e} {:>8}{flag}",
                    r.u, r.p_hat, r.ci_low, r.ci_high, r.asymptotic, ratio
                );
            }
            match (&v.report, &v.note) {
                (Some(rep), _) => {
                    let _ = writeln!(out, "|ratio − 1| nonincreasing over usable thresholds: {}", rep.trend_toward_one);
                }
                (None, Some(note)) => {
                    let _ = writeln!(out, "no trend: {note}");
                }
                _ => {}
            }
            if let Some(r) = v.records.first() {
                let _ = writeln!(out, "{} replications, dt = {}, seed = {}", r.replications, r.dt, r.seed);
            }
        }
        RunResult::Simulate(s) => {
            let _ = writeln!(out, "{}: {} sample(s), dt = {}", s.process, s.samples.len(), s.dt);
            for (k, x) in s.samples.iter().enumerate() {
                let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
                let _ = writeln!(out, "  sample {k}: {} values, min {min:.4}, max {max:.4}", x.len());
            }
            let _ = writeln!(out, "use --format csv or json for the values");
        }
    }
    out
}
