//! File formats: the dataset JSON schema, frozen oracle specs, fitted
//! model exports, design CSVs, learning-curve CSVs, and the joined metric
//! tables emitted by `compare`.
//!
//! Floating-point fields round-trip bit-exactly: serde_json and the csv
//! writer both print the shortest representation that parses back to the
//! same f64.

use std::path::Path;

use gpal_core::{
    Bounds, Dataset, DesignMatrix, FittedModel, ForcePoint, LearningCurve, OracleSpec, Strategy,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, text)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// dataset JSON: {q, p, bounds, points: [{force, replicates}]}
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetFile {
    pub q: usize,
    pub p: usize,
    pub bounds: BoundsFile,
    pub points: Vec<PointFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoundsFile {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PointFile {
    pub force: Vec<f64>,
    /// One inner vector per replicate, `p` responses each.
    pub replicates: Vec<Vec<f64>>,
}

impl DatasetFile {
    pub fn from_dataset(d: &Dataset) -> Self {
        Self {
            q: d.q(),
            p: d.p(),
            bounds: BoundsFile {
                lo: d.bounds().lo().iter().copied().collect(),
                hi: d.bounds().hi().iter().copied().collect(),
            },
            points: (0..d.k())
                .map(|t| PointFile {
                    force: d.design().row(t).as_slice().to_vec(),
                    replicates: (0..d.replications()[t])
                        .map(|i| {
                            (0..d.p()).map(|j| d.responses()[t][(i, j)]).collect()
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn into_dataset(self) -> CliResult<Dataset> {
        let as_err = |e: gpal_core::Error| CliError::runtime(format!("invalid dataset: {e}"));
        let bounds = Bounds::new(self.bounds.lo, self.bounds.hi).map_err(as_err)?;
        let rows = self
            .points
            .iter()
            .map(|pt| ForcePoint::new(pt.force.clone()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(as_err)?;
        let design = DesignMatrix::new(rows).map_err(as_err)?;
        let responses = self
            .points
            .iter()
            .map(|pt| {
                DMatrix::from_fn(pt.replicates.len(), self.p, |i, j| pt.replicates[i][j])
            })
            .collect();
        Dataset::new(design, responses, bounds).map_err(as_err)
    }
}

pub fn save_dataset(d: &Dataset, path: &Path) -> CliResult<()> {
    let text = serde_json::to_string_pretty(&DatasetFile::from_dataset(d))
        .map_err(|e| CliError::runtime(e.to_string()))?;
    write(path, &text)
}

pub fn load_dataset(path: &Path) -> CliResult<Dataset> {
    let file: DatasetFile = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::runtime(format!("cannot parse {}: {e}", path.display())))?;
    file.into_dataset()
}

// ---------------------------------------------------------------------------
// oracle spec JSON (anchors and drawn values included, so a run replays)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleFile {
    pub q: usize,
    pub p: usize,
    pub bounds: BoundsFile,
    /// Row-major `q x p`.
    pub s_star: Vec<Vec<f64>>,
    pub tau_star2: f64,
    pub theta_star: Vec<f64>,
    /// Row-major `q x q`.
    pub sigma_f_star: Vec<Vec<f64>>,
    pub sigma_eps_star: Vec<f64>,
    /// Row-major `n_anchors x q`.
    pub anchors: Vec<Vec<f64>>,
    /// Row-major `n_anchors x p`.
    pub anchor_values: Vec<Vec<f64>>,
    pub seed: u64,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows_matrix(rows: &[Vec<f64>], context: &str) -> CliResult<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(CliError::runtime(format!("ragged or empty matrix in {context}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl OracleFile {
    pub fn from_spec(spec: &OracleSpec) -> Self {
        Self {
            q: spec.q,
            p: spec.p,
            bounds: BoundsFile {
                lo: spec.bounds.lo().iter().copied().collect(),
                hi: spec.bounds.hi().iter().copied().collect(),
            },
            s_star: matrix_rows(&spec.s_star),
            tau_star2: spec.tau_star2,
            theta_star: spec.theta_star.iter().copied().collect(),
            sigma_f_star: matrix_rows(&spec.sigma_f_star),
            sigma_eps_star: spec.sigma_eps_star.iter().copied().collect(),
            anchors: matrix_rows(&spec.anchors.to_matrix()),
            anchor_values: matrix_rows(&spec.anchor_values),
            seed: spec.seed,
        }
    }

    pub fn into_spec(self) -> CliResult<OracleSpec> {
        let as_err = |e: gpal_core::Error| CliError::runtime(format!("invalid oracle: {e}"));
        let bounds = Bounds::new(self.bounds.lo, self.bounds.hi).map_err(as_err)?;
        let anchors =
            DesignMatrix::from_matrix(&rows_matrix(&self.anchors, "anchors")?).map_err(as_err)?;
        Ok(OracleSpec {
            q: self.q,
            p: self.p,
            bounds,
            s_star: rows_matrix(&self.s_star, "s_star")?,
            tau_star2: self.tau_star2,
            theta_star: DVector::from_vec(self.theta_star),
            sigma_f_star: rows_matrix(&self.sigma_f_star, "sigma_f_star")?,
            sigma_eps_star: DVector::from_vec(self.sigma_eps_star),
            anchors,
            anchor_values: rows_matrix(&self.anchor_values, "anchor_values")?,
            seed: self.seed,
        })
    }
}

pub fn save_oracle(spec: &OracleSpec, path: &Path) -> CliResult<()> {
    let text = serde_json::to_string(&OracleFile::from_spec(spec))
        .map_err(|e| CliError::runtime(e.to_string()))?;
    write(path, &text)
}

pub fn load_oracle(path: &Path) -> CliResult<OracleSpec> {
    let file: OracleFile = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::runtime(format!("cannot parse {}: {e}", path.display())))?;
    file.into_spec()
}

// ---------------------------------------------------------------------------
// fitted model export (hyperparameters, coefficients, diagnostics)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ModelFile {
    pub variant: String,
    pub q: usize,
    pub p: usize,
    pub isotropic: bool,
    pub n_samples: usize,
    pub outputs: Vec<ModelOutputFile>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelOutputFile {
    pub tau2: f64,
    pub theta: Vec<f64>,
    pub sigma2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi2: Option<f64>,
    pub coefficients: Vec<f64>,
    pub loglik: f64,
    pub jitter: f64,
    pub restarts: usize,
    pub evals: usize,
    pub converged: bool,
}

impl ModelFile {
    pub fn from_model(m: &FittedModel) -> Self {
        Self {
            variant: m.spec().variant.tag().to_string(),
            q: m.spec().q,
            p: m.spec().p,
            isotropic: m.spec().is_isotropic(),
            n_samples: m.dataset().k(),
            outputs: m
                .outputs()
                .iter()
                .map(|o| ModelOutputFile {
                    tau2: o.hp().tau2(),
                    theta: o.hp().theta().iter().copied().collect(),
                    sigma2: o.hp().sigma2(),
                    phi2: o.hp().phi2(),
                    coefficients: o.s_hat().iter().copied().collect(),
                    loglik: o.diagnostics().loglik,
                    jitter: o.diagnostics().jitter,
                    restarts: o.diagnostics().restarts,
                    evals: o.diagnostics().evals,
                    converged: o.diagnostics().converged,
                })
                .collect(),
        }
    }
}

pub fn save_model(m: &FittedModel, path: &Path) -> CliResult<()> {
    let text = serde_json::to_string_pretty(&ModelFile::from_model(m))
        .map_err(|e| CliError::runtime(e.to_string()))?;
    write(path, &text)
}

// ---------------------------------------------------------------------------
// design CSV: one row per point, q columns, no header
// ---------------------------------------------------------------------------

pub fn save_design_csv(design: &DesignMatrix, path: &Path) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    for row in design.rows() {
        w.write_record(row.as_slice().iter().map(|v| format_f64(*v)))
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::runtime(e.to_string()))
}

/// Shortest-roundtrip float formatting (what serde_json uses) so replays
/// are byte-identical.
fn format_f64(v: f64) -> String {
    let mut buf = ryu::Buffer::new();
    buf.format(v).to_string()
}

// ---------------------------------------------------------------------------
// learning-curve CSV
// ---------------------------------------------------------------------------

pub const CURVE_HEADER: [&str; 10] = [
    "iteration",
    "n_samples",
    "strategy",
    "selected_point_id",
    "mean_mad",
    "max_mad",
    "cv_mse",
    "fit_loglik",
    "wall_ms",
    "stop_reason",
];

pub fn save_curve_csv(curve: &LearningCurve, path: &Path) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::runtime(e.to_string()))?;
    w.write_record(CURVE_HEADER)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    for row in &curve.rows {
        let selected = row.selected.map_or(-1i64, |s| s as i64);
        w.write_record([
            row.iteration.to_string(),
            row.n_samples.to_string(),
            curve.strategy.tag().to_string(),
            selected.to_string(),
            format_f64(row.mean_mad),
            format_f64(row.max_mad),
            format_f64(row.cv_mse),
            format_f64(row.fit_loglik),
            row.wall_ms.to_string(),
            row.stop.map_or(String::new(), |s| s.tag().to_string()),
        ])
        .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::runtime(e.to_string()))
}

/// The columns `compare` needs back from a curve CSV.
#[derive(Debug, Clone)]
pub struct CurveTable {
    pub strategy: String,
    pub n_samples: Vec<usize>,
    pub mean_mad: Vec<f64>,
    pub max_mad: Vec<f64>,
    pub cv_mse: Vec<f64>,
}

pub fn load_curve_csv(path: &Path) -> CliResult<CurveTable> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::runtime(e.to_string()))?
        .clone();
    let col = |name: &str| -> CliResult<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::runtime(format!("{}: missing column {name}", path.display())))
    };
    let (c_n, c_strat, c_mean, c_max, c_cv) = (
        col("n_samples")?,
        col("strategy")?,
        col("mean_mad")?,
        col("max_mad")?,
        col("cv_mse")?,
    );
    let mut out = CurveTable {
        strategy: String::new(),
        n_samples: Vec::new(),
        mean_mad: Vec::new(),
        max_mad: Vec::new(),
        cv_mse: Vec::new(),
    };
    for record in reader.records() {
        let record = record.map_err(|e| CliError::runtime(e.to_string()))?;
        let parse_f = |i: usize| -> CliResult<f64> {
            record[i]
                .parse()
                .map_err(|e| CliError::runtime(format!("{}: bad float: {e}", path.display())))
        };
        out.strategy = record[c_strat].to_string();
        out.n_samples.push(
            record[c_n]
                .parse()
                .map_err(|e| CliError::runtime(format!("{}: bad count: {e}", path.display())))?,
        );
        out.mean_mad.push(parse_f(c_mean)?);
        out.max_mad.push(parse_f(c_max)?);
        out.cv_mse.push(parse_f(c_cv)?);
    }
    if out.n_samples.is_empty() {
        return Err(CliError::runtime(format!("{}: empty curve", path.display())));
    }
    Ok(out)
}

/// Join curve tables on `n_samples` and write one tidy CSV per metric
/// (`mean_mad.csv`, `max_mad.csv`, `cv_mse.csv`): a `n_samples` column
/// plus one value column per strategy. Only sample counts present in
/// every curve are kept; an empty intersection is an error naming the
/// offending files.
pub fn write_metric_tables(
    curves: &[(std::path::PathBuf, CurveTable)],
    out_dir: &Path,
) -> CliResult<Vec<std::path::PathBuf>> {
    if curves.len() < 2 {
        return Err(CliError::config("compare needs at least two curve files"));
    }
    let mut grid: Vec<usize> = curves[0].1.n_samples.clone();
    grid.retain(|n| curves.iter().all(|(_, c)| c.n_samples.contains(n)));
    if grid.is_empty() {
        let files: Vec<String> = curves
            .iter()
            .map(|(p, _)| p.display().to_string())
            .collect();
        return Err(CliError::runtime(format!(
            "curves share no n_samples values; offending files: {}",
            files.join(", ")
        )));
    }
    grid.sort_unstable();

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let metrics: [(&str, fn(&CurveTable) -> &Vec<f64>); 3] = [
        ("mean_mad", |c| &c.mean_mad),
        ("max_mad", |c| &c.max_mad),
        ("cv_mse", |c| &c.cv_mse),
    ];
    let mut written = Vec::new();
    for (name, getter) in metrics {
        let path = out_dir.join(format!("{name}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::runtime(e.to_string()))?;
        let mut header = vec!["n_samples".to_string()];
        header.extend(curves.iter().map(|(_, c)| c.strategy.clone()));
        w.write_record(&header)
            .map_err(|e| CliError::runtime(e.to_string()))?;
        for n in &grid {
            let mut rec = vec![n.to_string()];
            for (_, c) in curves {
                let idx = c.n_samples.iter().position(|x| x == n).expect("in grid");
                rec.push(format_f64(getter(c)[idx]));
            }
            w.write_record(&rec)
                .map_err(|e| CliError::runtime(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::runtime(e.to_string()))?;
        written.push(path);
    }
    Ok(written)
}

// re-export for the binary's version stamp
pub use curve_util::strategy_filename;

mod curve_util {
    use super::Strategy;

    /// `curve_<tag>.csv`, with the tag's hyphens kept.
    pub fn strategy_filename(s: Strategy) -> String {
        format!("curve_{}.csv", s.tag())
    }
}
