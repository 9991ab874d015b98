//! Plot-ready series and the percentage summary from a comparison CSV.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use games_core::gtep::{summarize, ComparisonRow, QUANTITIES};
use games_core::repdays::Source;

use crate::{at, CliError, FailureKind};

/// Column names of the comparison CSV, in order.
pub const COMPARISON_HEADER: [&str; 9] = ["K", "source", "goal", "total", "power", "ng", "invest_fom", "shed", "emission"];

/// File stems of the per-quantity series, in [`QUANTITIES`] order.
pub const PLOT_FILES: [&str; 6] = ["total", "power", "ng", "invest_fom", "shed", "emission"];

#[derive(Debug, Deserialize)]
struct Record {
    #[serde(rename = "K")]
    k: usize,
    source: Source,
    goal: f64,
    total: f64,
    power: f64,
    ng: f64,
    invest_fom: f64,
    shed: f64,
    emission: f64,
}

/// Parses a comparison CSV into rows.
pub fn read_comparison(path: &Path) -> Result<Vec<ComparisonRow>, CliError> {
    let stage = "report";
    let mut rdr = csv::Reader::from_path(path).map_err(at(stage))?;
    let header: Vec<String> = rdr.headers().map_err(at(stage))?.iter().map(str::to_string).collect();
    if header != COMPARISON_HEADER {
        return Err(CliError::stage(stage, FailureKind::Input, format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        let r: Record = rec.map_err(at(stage))?;
        rows.push(ComparisonRow {
            k: r.k,
            source: r.source,
            goal: r.goal,
            emission_cap: f64::NAN,
            total: r.total,
            power: r.power,
            ng: r.ng,
            invest_fom: r.invest_fom,
            shed: r.shed,
            emission: r.emission,
            emission_total: f64::NAN,
            max_violation: f64::NAN,
            medoids: Vec::new(),
        });
    }
    if rows.is_empty() {
        return Err(CliError::stage(stage, FailureKind::Input, "comparison CSV has no rows"));
    }
    Ok(rows)
}

/// Writes one CSV per reported quantity (x = K, one column per
/// source/goal series) and `summary.csv` with the average percentage change
/// per goal. Returns the written paths.
pub fn report_plots(comparison: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let rows = read_comparison(comparison)?;
    std::fs::create_dir_all(out_dir).map_err(at("report"))?;
    let mut series: Vec<(f64, Source)> = rows.iter().map(|r| (r.goal, r.source)).collect();
    series.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    series.dedup();
    let mut ks: Vec<usize> = rows.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut index: BTreeMap<(usize, u64, Source), &ComparisonRow> = BTreeMap::new();
    for r in &rows {
        index.insert((r.k, r.goal.to_bits(), r.source), r);
    }
    let mut written = Vec::new();
    for (q, stem) in PLOT_FILES.iter().enumerate() {
        let mut text = String::from("K");
        for (goal, source) in &series {
            text.push_str(&format!(",{source}_{goal}"));
        }
        text.push('\n');
        for &k in &ks {
            text.push_str(&k.to_string());
            for (goal, source) in &series {
                match index.get(&(k, goal.to_bits(), *source)) {
                    Some(r) => text.push_str(&format!(",{}", r.values()[q])),
                    None => text.push(','),
                }
            }
            text.push('\n');
        }
        let path = out_dir.join(format!("plot_{stem}.csv"));
        std::fs::write(&path, text).map_err(at("report"))?;
        written.push(path);
    }
    let mut text = format!("goal,{}\n", QUANTITIES.join(","));
    for row in summarize(&rows) {
        text.push_str(&row.goal.to_string());
        for v in row.values {
            text.push_str(&format!(",{v:.4}"));
        }
        text.push('\n');
    }
    let path = out_dir.join("summary.csv");
    std::fs::write(&path, text).map_err(at("report"))?;
    written.push(path);
    Ok(written)
}
