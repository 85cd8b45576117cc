//! CSV input and output.
//!
//! Numeric output uses `Display` formatting, i.e. the shortest decimal that
//! round-trips the exact binary value, so identical runs produce identical
//! bytes.

use std::path::Path;

use mpoc::eif::Target;
use mpoc::montecarlo::{CurveTable, SimulationReport};
use mpoc::world::{ObservedRecord, PotentialWorld};

use crate::config::ReferenceTruth;
use crate::CliError;

fn open_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn finish(mut w: csv::Writer<std::fs::File>, path: &Path) -> Result<(), CliError> {
    w.flush()
        .map_err(|e| CliError::Config(format!("cannot flush {}: {e}", path.display())))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn write_report_csv(path: &Path, report: &SimulationReport) -> Result<(), CliError> {
    let mut w = open_writer(path)?;
    w.write_record([
        "target",
        "alpha_rate",
        "truth",
        "bias",
        "rmse",
        "coverage",
        "mc_se_coverage",
        "n_fail",
    ])
    .map_err(|e| CliError::Config(e.to_string()))?;
    for r in &report.rows {
        w.write_record([
            r.target.name().to_string(),
            fmt(r.alpha_rate),
            fmt(r.truth),
            fmt(r.bias),
            fmt(r.rmse),
            fmt(r.coverage),
            fmt(r.mc_se_coverage),
            r.n_fail.to_string(),
        ])
        .map_err(|e| CliError::Config(e.to_string()))?;
    }
    finish(w, path)
}

/// Text table mirroring the usual simulation-report layout, one row per
/// estimand, with the configured reference truths alongside.
pub fn render_report(report: &SimulationReport, reference: &ReferenceTruth) -> String {
    let alphas: Vec<f64> = {
        let mut seen = Vec::new();
        for r in &report.rows {
            if !seen.contains(&r.alpha_rate) {
                seen.push(r.alpha_rate);
            }
        }
        seen
    };
    let mut out = String::new();
    out.push_str(&format!(
        "Simulation results ({} replicates)\n",
        report.n_reps
    ));
    let mut header = format!("{:<10} {:>8} {:>8}", "Estimand", "Truth", "Ref");
    for a in &alphas {
        header.push_str(&format!(
            " | a={:<4} {:>7} {:>7} {:>9}",
            a, "Bias", "RMSE", "Coverage"
        ));
    }
    out.push_str(&header);
    out.push('\n');
    out.push_str(&"-".repeat(header.len()));
    out.push('\n');
    for target in [Target::Psi, Target::Zeta, Target::Delta] {
        let Some(first) = report.rows.iter().find(|r| r.target == target) else {
            continue;
        };
        let mut line = format!(
            "{:<10} {:>8.4} {:>8.2}",
            capitalize(target.label()),
            first.truth,
            reference.for_target(target)
        );
        for a in &alphas {
            if let Some(r) = report.row(target, *a) {
                line.push_str(&format!(
                    " | {:>6} {:>+7.3} {:>7.3} {:>9.3}",
                    "", r.bias, r.rmse, r.coverage
                ));
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(
        "Truth is the population projection of this generating process; Ref is the\n\
         published reference value for the corresponding experiment design.\n",
    );
    out
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

pub fn write_nuisances_csv(path: &Path, table: &CurveTable) -> Result<(), CliError> {
    let mut w = open_writer(path)?;
    w.write_record([
        "x", "pi", "gamma0", "gamma1", "mu00", "mu01", "mu10", "mu11",
    ])
    .map_err(|e| CliError::Config(e.to_string()))?;
    for p in &table.points {
        let nu = &p.nuisance;
        w.write_record([
            fmt(p.x),
            fmt(nu.pi),
            fmt(nu.gamma0),
            fmt(nu.gamma1),
            fmt(nu.mu00),
            fmt(nu.mu01),
            fmt(nu.mu10),
            fmt(nu.mu11),
        ])
        .map_err(|e| CliError::Config(e.to_string()))?;
    }
    finish(w, path)
}

pub fn write_estimands_csv(path: &Path, table: &CurveTable) -> Result<(), CliError> {
    let mut w = open_writer(path)?;
    let mut header = vec!["x".to_string(), "ate_mediator".into(), "ate_outcome".into()];
    header.extend(
        table.points[0]
            .estimands
            .as_pairs()
            .iter()
            .map(|(n, _)| n.to_string()),
    );
    w.write_record(&header)
        .map_err(|e| CliError::Config(e.to_string()))?;
    for p in &table.points {
        let mut row = vec![fmt(p.x), fmt(p.ate_mediator), fmt(p.ate_outcome)];
        row.extend(p.estimands.as_pairs().iter().map(|&(_, v)| fmt(v)));
        w.write_record(&row)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    finish(w, path)
}

pub fn write_projections_csv(
    path: &Path,
    table: &CurveTable,
    basis: &mpoc::basis::Basis,
) -> Result<(), CliError> {
    let mut w = open_writer(path)?;
    w.write_record([
        "x",
        "psi_curve",
        "delta_curve",
        "zeta_curve",
        "psi_projection",
        "delta_projection",
        "zeta_projection",
    ])
    .map_err(|e| CliError::Config(e.to_string()))?;
    for p in &table.points {
        w.write_record([
            fmt(p.x),
            fmt(p.estimands.psi),
            fmt(p.estimands.delta),
            fmt(p.estimands.zeta),
            fmt(table.projection_value(Target::Psi, basis, p.x)),
            fmt(table.projection_value(Target::Delta, basis, p.x)),
            fmt(table.projection_value(Target::Zeta, basis, p.x)),
        ])
        .map_err(|e| CliError::Config(e.to_string()))?;
    }
    finish(w, path)
}

pub fn write_records_csv(path: &Path, records: &[ObservedRecord]) -> Result<(), CliError> {
    let mut w = open_writer(path)?;
    w.write_record(["x", "a", "m", "y"])
        .map_err(|e| CliError::Config(e.to_string()))?;
    for r in records {
        w.write_record([
            fmt(r.x),
            u8::from(r.a).to_string(),
            u8::from(r.m).to_string(),
            u8::from(r.y).to_string(),
        ])
        .map_err(|e| CliError::Config(e.to_string()))?;
    }
    finish(w, path)
}

pub fn write_worlds_csv(path: &Path, worlds: &[PotentialWorld]) -> Result<(), CliError> {
    let mut w = open_writer(path)?;
    w.write_record(["x", "a", "m0", "m1", "y00", "y01", "y10", "y11"])
        .map_err(|e| CliError::Config(e.to_string()))?;
    for p in worlds {
        w.write_record([
            fmt(p.x),
            u8::from(p.a).to_string(),
            u8::from(p.m0).to_string(),
            u8::from(p.m1).to_string(),
            u8::from(p.y00).to_string(),
            u8::from(p.y01).to_string(),
            u8::from(p.y10).to_string(),
            u8::from(p.y11).to_string(),
        ])
        .map_err(|e| CliError::Config(e.to_string()))?;
    }
    finish(w, path)
}

/// Per-record pseudo-outcome diagnostics.
pub fn write_pseudo_outcomes_csv(
    path: &Path,
    data: &Dataset,
    phi_psi: &[f64],
    phi_delta: &[f64],
) -> Result<(), CliError> {
    let mut w = open_writer(path)?;
    let mut header: Vec<String> = (0..data.dim).map(|j| format!("x{}", j + 1)).collect();
    header.extend(["a", "m", "y", "phi_psi", "phi_delta", "phi_zeta"].map(String::from));
    w.write_record(&header)
        .map_err(|e| CliError::Config(e.to_string()))?;
    for i in 0..data.len() {
        let mut row: Vec<String> = data.covariates(i).iter().map(|v| fmt(*v)).collect();
        row.push(u8::from(data.a[i]).to_string());
        row.push(u8::from(data.m[i]).to_string());
        row.push(u8::from(data.y[i]).to_string());
        row.push(fmt(phi_psi[i]));
        row.push(fmt(phi_delta[i]));
        row.push(fmt(phi_delta[i] - phi_psi[i]));
        w.write_record(&row)
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    finish(w, path)
}

/// Observed dataset with possibly multivariate covariates.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// Row-major covariates, `n` rows of dimension `dim`.
    pub x: Vec<f64>,
    pub dim: usize,
    pub a: Vec<bool>,
    pub m: Vec<bool>,
    pub y: Vec<bool>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn covariates(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }
}

fn parse_binary(field: &str, name: &str, row: usize) -> Result<bool, CliError> {
    match field.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(CliError::Data(format!(
            "row {row}: column {name} must be 0 or 1, got {other:?}"
        ))),
    }
}

/// Read a dataset with columns `x` (repeatable, or `x1..xd`), `a`, `m`, `y`.
pub fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(e.to_string()))?
        .clone();
    let mut x_cols = Vec::new();
    let mut a_col = None;
    let mut m_col = None;
    let mut y_col = None;
    for (idx, name) in headers.iter().enumerate() {
        let name = name.trim();
        if name == "x" || (name.starts_with('x') && name[1..].chars().all(|c| c.is_ascii_digit())) {
            x_cols.push(idx);
        } else {
            match name {
                "a" => a_col = Some(idx),
                "m" => m_col = Some(idx),
                "y" => y_col = Some(idx),
                other => {
                    return Err(CliError::Data(format!(
                        "unexpected column {other:?}; expected x/x1../a/m/y"
                    )))
                }
            }
        }
    }
    if x_cols.is_empty() {
        return Err(CliError::Data("no covariate column named x".into()));
    }
    let (a_col, m_col, y_col) = match (a_col, m_col, y_col) {
        (Some(a), Some(m), Some(y)) => (a, m, y),
        _ => return Err(CliError::Data("columns a, m, y are all required".into())),
    };

    let dim = x_cols.len();
    let mut data = Dataset {
        x: Vec::new(),
        dim,
        a: Vec::new(),
        m: Vec::new(),
        y: Vec::new(),
    };
    for (i, rec) in reader.records().enumerate() {
        let row = i + 2; // 1-based, after the header line
        let rec = rec.map_err(|e| CliError::Data(format!("row {row}: {e}")))?;
        for &c in &x_cols {
            let v: f64 = rec[c]
                .trim()
                .parse()
                .map_err(|_| CliError::Data(format!("row {row}: column x is not numeric")))?;
            if !v.is_finite() {
                return Err(CliError::Data(format!("row {row}: non-finite covariate")));
            }
            data.x.push(v);
        }
        data.a.push(parse_binary(&rec[a_col], "a", row)?);
        data.m.push(parse_binary(&rec[m_col], "m", row)?);
        data.y.push(parse_binary(&rec[y_col], "y", row)?);
    }
    if data.is_empty() {
        return Err(CliError::Data("dataset has no rows".into()));
    }
    Ok(data)
}
