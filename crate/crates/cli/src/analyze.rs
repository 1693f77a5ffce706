use anyhow::{ensure, Result};
use pathreg_core::logistic::{scan_pathological_logistic, SampleWeights, ScanOptions};
use pathreg_core::ridge::{exact_regimes, trend_curve, RidgeProblem};
use pathreg_core::tables::{simpson_verdict_within, Stratifier};
use pathreg_core::{ContingencyTable222, Dataset, Endpoint, Error, RegGrid, Regime};
use serde_json::{json, Value};

use crate::{Model, ModelArgs};

pub struct Analysis {
    pub json: Value,
    pub csv: String,
    pub pathological: bool,
}

fn endpoint_text(e: &Endpoint) -> String {
    match e.as_exact() {
        Some(r) if *r.denom() == 1 => r.numer().to_string(),
        Some(r) => format!("{}/{}", r.numer(), r.denom()),
        None => format!("{:e}", e.value()),
    }
}

fn regime_text(r: &Regime) -> Vec<String> {
    r.intervals()
        .iter()
        .map(|iv| {
            let hi = iv.hi.as_ref().map_or("inf".to_string(), endpoint_text);
            format!("({}, {hi})", endpoint_text(&iv.lo))
        })
        .collect()
}

fn csv_rows(out: &mut String, variable: usize, value: Option<usize>, r: &Regime) {
    for iv in r.intervals() {
        let exact = |e: &Endpoint| e.as_exact().map(|_| endpoint_text(e)).unwrap_or_default();
        out.push_str(&format!(
            "{variable},{},{:e},{},{},{}\n",
            value.map(|v| v.to_string()).unwrap_or_default(),
            iv.lo.value(),
            iv.hi.as_ref().map_or("inf".to_string(), |h| format!("{:e}", h.value())),
            exact(&iv.lo),
            iv.hi.as_ref().map(exact).unwrap_or_default(),
        ));
    }
}

fn simpson_json(table: &ContingencyTable222) -> Result<Value> {
    Ok(json!({
        "x1_strata": simpson_verdict_within(table, Stratifier::X1)?,
        "x2_strata": simpson_verdict_within(table, Stratifier::X2)?,
    }))
}

fn warning(avoid: Vec<Value>) -> Value {
    if avoid.is_empty() {
        return Value::Null;
    }
    json!({
        "message": "regularization strengths in these ranges reverse the sign of a trend relative to the unregularized fit",
        "avoid": avoid,
    })
}

pub fn analyze(table: &ContingencyTable222, args: &ModelArgs) -> Result<Analysis> {
    let ds = table.encode()?;
    let mut csv = String::from("variable,value,lower,upper,lower_exact,upper_exact\n");
    let mut avoid = Vec::new();
    let (regimes, extra) = match args.model {
        Model::Ridge => {
            let reports = exact_regimes(&RidgeProblem::new(&ds, args.intercept))?;
            for r in reports.iter().filter(|r| r.is_pathological()) {
                csv_rows(&mut csv, r.variable, None, &r.intervals);
                avoid.push(json!({ "variable": r.variable, "intervals": regime_text(&r.intervals) }));
            }
            (serde_json::to_value(&reports)?, json!({ "intercept": args.intercept }))
        }
        Model::Logistic => {
            let grid = args.grid.clone().unwrap_or_else(RegGrid::logistic_default);
            let weights = SampleWeights::from_scheme(args.weights, &ds.labels())?;
            let scan = scan_pathological_logistic(&ds, &grid, &weights, &ScanOptions::default())?;
            for c in scan.conditions.iter().filter(|c| !c.intervals.is_empty()) {
                csv_rows(&mut csv, c.variable, Some(c.value), &c.intervals);
                avoid.push(json!({ "variable": c.variable, "value": c.value, "intervals": regime_text(&c.intervals) }));
            }
            (
                serde_json::to_value(&scan.conditions)?,
                json!({
                    "weights": args.weights,
                    "grid": grid,
                    "baseline_c": scan.baseline_c,
                    "not_converged": scan.not_converged,
                }),
            )
        }
    };
    let pathological = !avoid.is_empty();
    let json = json!({
        "model": match args.model { Model::Ridge => "ridge", Model::Logistic => "logistic" },
        "settings": extra,
        "sample_size": table.sample_size(),
        "table": table,
        "simpson": simpson_json(table)?,
        "regimes": regimes,
        "pathological": pathological,
        "warning": warning(avoid),
    });
    Ok(Analysis { json, csv, pathological })
}

pub struct Crossing {
    pub c: f64,
    pub label: String,
}

/// Sampled trend of one variable with its regime.
pub struct Curve {
    pub title: String,
    pub points: Vec<(f64, f64)>,
    pub true_trend: f64,
    pub regime: Regime,
    pub crossings: Vec<Crossing>,
}

impl Curve {
    pub fn csv(&self) -> String {
        let mut s = String::from("c,trend\n");
        for (c, t) in &self.points {
            s.push_str(&format!("{c:e},{t:e}\n"));
        }
        s
    }

    pub fn json(&self) -> Value {
        json!({
            "title": self.title,
            "true_trend": self.true_trend,
            "regime": self.regime,
            "crossings": self.crossings.iter().map(|x| json!({ "c": x.c, "label": x.label })).collect::<Vec<_>>(),
            "points": self.points.iter().map(|(c, t)| json!({ "c": c, "trend": t })).collect::<Vec<_>>(),
        })
    }
}

fn crossings(regime: &Regime) -> Vec<Crossing> {
    let mut out = Vec::new();
    for iv in regime.intervals() {
        for e in std::iter::once(&iv.lo).chain(iv.hi.as_ref()) {
            let label = match e.as_exact() {
                Some(_) => format!("{} = {:.4}", endpoint_text(e), e.value()),
                None => format!("{:.4}", e.value()),
            };
            out.push(Crossing { c: e.value(), label });
        }
    }
    out
}

fn check_variable(ds: &Dataset, variable: usize) -> Result<()> {
    ensure!((1..=ds.p()).contains(&variable), Error::IndexOutOfRange { index: variable, p: ds.p() });
    Ok(())
}

pub fn curve(table: &ContingencyTable222, args: &ModelArgs, variable: usize, value: usize) -> Result<Curve> {
    let ds = table.encode()?;
    check_variable(&ds, variable)?;
    match args.model {
        Model::Ridge => {
            let grid = args.grid.clone().unwrap_or_else(RegGrid::ridge_default);
            let tc = trend_curve(&ds, variable, &grid, args.intercept)?;
            let regime = exact_regimes(&RidgeProblem::new(&ds, args.intercept))?.swap_remove(variable - 1).intervals;
            Ok(Curve {
                title: format!("ridge trend of x{variable}"),
                points: tc.points.iter().map(|p| (p.c, p.trend)).collect(),
                true_trend: tc.true_trend,
                crossings: crossings(&regime),
                regime,
            })
        }
        Model::Logistic => {
            ensure!(value <= 1, Error::InvalidParameter(format!("conditioning value must be 0 or 1, got {value}")));
            let grid = args.grid.clone().unwrap_or_else(RegGrid::logistic_default);
            let weights = SampleWeights::from_scheme(args.weights, &ds.labels())?;
            let opts = ScanOptions { conditioning: vec![variable], ..ScanOptions::default() };
            let scan = scan_pathological_logistic(&ds, &grid, &weights, &opts)?;
            let cond = scan.conditions.into_iter().find(|c| c.value == value).expect("both values are scanned");
            Ok(Curve {
                title: format!("logistic trend given x{variable} = {value}"),
                points: scan.points.iter().map(|p| (p.c, p.trends[variable - 1][value])).collect(),
                true_trend: cond.baseline_trend,
                crossings: crossings(&cond.intervals),
                regime: cond.intervals,
            })
        }
    }
}
