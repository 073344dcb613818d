//! Output formats: CSV and JSON for machines, a "mean (sd)" table for people.
//!
//! Machine formats print every float with 17 significant digits so values
//! survive a text round trip unchanged.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::gwishart::BandPosterior;
use crate::harness::config::Bandwidth;
use crate::harness::experiment::{CellSummary, ExperimentRun, ResultTable, TableMeta};
use crate::matrix::SymMatrix;
use crate::scenarios::ScenarioKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(invalid(format!("unknown output format `{other}`"))),
        }
    }
}

pub const TABLE_COLUMNS: [&str; 14] = [
    "model",
    "model_param",
    "n",
    "p",
    "bandwidth",
    "seed",
    "replications",
    "estimator",
    "norm",
    "mean",
    "sd",
    "sd_defined",
    "successes",
    "failures",
];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn model_fields(kind: &ScenarioKind) -> (&'static str, String) {
    match kind {
        ScenarioKind::Ar1 { rho } => ("ar1", num(*rho)),
        ScenarioKind::Ar4 => ("ar4", String::new()),
        ScenarioKind::Fgn { hurst } => ("fgn", num(*hurst)),
    }
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| invalid(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| invalid(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv writer emits utf-8"))
}

pub fn table_to_csv(table: &ResultTable) -> Result<String> {
    let m = &table.meta;
    let (model, param) = model_fields(&m.model);
    let rows = table.cells.iter().map(|c| {
        vec![
            model.to_string(),
            param.clone(),
            m.n.to_string(),
            m.p.to_string(),
            m.bandwidth.to_string(),
            m.seed.to_string(),
            m.replications.to_string(),
            c.estimator.name().to_string(),
            c.norm.name().to_string(),
            num(c.mean),
            num(c.sd),
            c.sd_defined.to_string(),
            c.successes.to_string(),
            c.failures.to_string(),
        ]
    });
    csv_text(&TABLE_COLUMNS, rows)
}

/// Inverse of [`table_to_csv`].
pub fn table_from_csv(text: &str) -> Result<ResultTable> {
    let origin = Path::new("<table>");
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| invalid(format!("csv header: {e}")))?
        .clone();
    if header.iter().ne(TABLE_COLUMNS) {
        return Err(Error::Parse {
            path: origin.into(),
            line: 1,
            message: "unexpected columns".into(),
        });
    }
    let mut meta: Option<TableMeta> = None;
    let mut cells = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            path: origin.into(),
            line,
            message: e.to_string(),
        })?;
        let field = |j: usize| -> Result<&str> {
            rec.get(j).ok_or_else(|| Error::Parse {
                path: origin.into(),
                line,
                message: format!("missing column `{}`", TABLE_COLUMNS[j]),
            })
        };
        fn p<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
            s.parse().map_err(|_| Error::Parse {
                path: Path::new("<table>").into(),
                line,
                message: format!("cannot parse `{s}`"),
            })
        }
        let model = match field(0)? {
            "ar1" => ScenarioKind::Ar1 { rho: p(field(1)?, line)? },
            "ar4" => ScenarioKind::Ar4,
            "fgn" => ScenarioKind::Fgn { hurst: p(field(1)?, line)? },
            other => return Err(invalid(format!("line {line}: unknown model `{other}`"))),
        };
        let row_meta = TableMeta {
            model,
            n: p(field(2)?, line)?,
            p: p(field(3)?, line)?,
            bandwidth: field(4)?.parse::<Bandwidth>()?,
            seed: p(field(5)?, line)?,
            replications: p(field(6)?, line)?,
        };
        match &meta {
            None => meta = Some(row_meta),
            Some(m) if *m != row_meta => {
                return Err(invalid(format!("line {line}: metadata differs from the first row")))
            }
            _ => {}
        }
        cells.push(CellSummary {
            estimator: field(7)?.parse()?,
            norm: field(8)?.parse()?,
            mean: p(field(9)?, line)?,
            sd: p(field(10)?, line)?,
            sd_defined: p(field(11)?, line)?,
            successes: p(field(12)?, line)?,
            failures: p(field(13)?, line)?,
        });
    }
    let meta = meta.ok_or_else(|| invalid("table has no rows"))?;
    Ok(ResultTable { meta, cells })
}

/// Full run, including the configuration, per-replication bandwidths and
/// failures.
pub fn run_to_json(run: &ExperimentRun) -> Result<String> {
    Ok(serde_json::to_string_pretty(run)? + "\n")
}

/// Estimators as rows, norms as columns, cells as `mean (sd)`.
pub fn table_summary(table: &ResultTable) -> String {
    let m = &table.meta;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{}  n={}  p={}  k={}  seed={}  replications={}",
        m.model, m.n, m.p, m.bandwidth, m.seed, m.replications
    );
    let mut estimators = Vec::new();
    let mut norms = Vec::new();
    for c in &table.cells {
        if !estimators.contains(&c.estimator) {
            estimators.push(c.estimator);
        }
        if !norms.contains(&c.norm) {
            norms.push(c.norm);
        }
    }
    let _ = write!(out, "{:<12}", "");
    for n in &norms {
        let _ = write!(out, "{:>18}", n.name());
    }
    out.push('\n');
    for e in &estimators {
        let _ = write!(out, "{:<12}", e.name());
        for n in &norms {
            let cell = table
                .cells
                .iter()
                .find(|c| c.estimator == *e && c.norm == *n)
                .map(|c| {
                    let sd = if c.sd_defined { format!("{:.3}", c.sd) } else { "-".into() };
                    let flag = if c.failures > 0 { "*" } else { "" };
                    format!("{:.3} ({sd}){flag}", c.mean)
                })
                .unwrap_or_default();
            let _ = write!(out, "{cell:>18}");
        }
        out.push('\n');
    }
    if table.cells.iter().any(|c| c.failures > 0) {
        out.push_str("* some replications failed for this estimator\n");
    }
    out
}

pub fn posterior_to_csv(bp: &BandPosterior) -> Result<String> {
    let rows = (0..bp.k_values.len()).map(|i| {
        vec![
            bp.k_values[i].to_string(),
            num(bp.log_marginals[i]),
            num(bp.log_prior[i]),
            num(bp.log_posterior[i]),
            num(bp.posterior[i]),
        ]
    });
    csv_text(&["k", "log_marginal", "log_prior", "log_posterior", "posterior"], rows)
}

#[derive(Serialize)]
struct PosteriorReport<'a, M: Serialize> {
    settings: &'a M,
    #[serde(flatten)]
    posterior: &'a BandPosterior,
}

/// `settings` is any serializable description of the inputs (data file,
/// prior, k range) recorded alongside the posterior.
pub fn posterior_to_json<M: Serialize>(bp: &BandPosterior, settings: &M) -> Result<String> {
    let report = PosteriorReport { settings, posterior: bp };
    Ok(serde_json::to_string_pretty(&report)? + "\n")
}

/// Row-major matrix CSV without a header.
pub fn matrix_to_csv(m: &SymMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.dim() {
        let row: Vec<String> = m.row(i).iter().map(|x| num(*x)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Long format: one line per draw and band entry `i <= j`, 1-based indices.
pub fn draws_to_csv(draws: &[SymMatrix], k: usize) -> Result<String> {
    let mut rows = Vec::new();
    for (d, m) in draws.iter().enumerate() {
        for i in 0..m.dim() {
            for j in i..m.dim().min(i + k + 1) {
                rows.push(vec![
                    (d + 1).to_string(),
                    (i + 1).to_string(),
                    (j + 1).to_string(),
                    num(m.get(i, j)),
                ]);
            }
        }
    }
    csv_text(&["draw", "i", "j", "value"], rows)
}

#[derive(Serialize)]
struct DrawsReport<'a, M: Serialize> {
    settings: &'a M,
    draws: Vec<Vec<Vec<f64>>>,
}

pub fn draws_to_json<M: Serialize>(draws: &[SymMatrix], settings: &M) -> Result<String> {
    let draws = draws
        .iter()
        .map(|m| (0..m.dim()).map(|i| m.row(i).to_vec()).collect())
        .collect();
    Ok(serde_json::to_string_pretty(&DrawsReport { settings, draws })? + "\n")
}

/// Writes `contents` to `path`, or to standard output when `path` is `None`.
pub fn write_output(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, contents).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| Error::Io {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{EstimatorKind, PriorSpec, SampleStats};
    use crate::gwishart::{band_posterior, PriorOverK};
    use crate::harness::config::ExperimentConfig;
    use crate::harness::experiment::run_experiment;
    use crate::matrix::NormKind;
    use crate::scenarios::{ar1_covariance, sample_mvn, Scenario};

    fn small_run(kind: ScenarioKind, reps: usize) -> ExperimentRun {
        let cfg = ExperimentConfig {
            scenario: Scenario { kind, p: 10, n: 30, replications: reps, seed: 9 },
            estimators: EstimatorKind::ALL.to_vec(),
            bandwidth: Bandwidth::Auto { k_max: Some(4) },
            prior: PriorSpec::default(),
            rho_prior: PriorOverK::ExpQuartic,
            norms: NormKind::ALL.to_vec(),
        };
        run_experiment(&cfg).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        for (kind, reps) in [
            (ScenarioKind::Ar1 { rho: 0.3 }, 5),
            (ScenarioKind::Ar4, 1),
            (ScenarioKind::Fgn { hurst: 0.7 }, 3),
        ] {
            let t = small_run(kind, reps).table;
            let text = table_to_csv(&t).unwrap();
            assert_eq!(table_from_csv(&text).unwrap(), t);
        }
    }

    #[test]
    fn csv_round_trip_with_nan() {
        let mut t = small_run(ScenarioKind::Ar4, 2).table;
        t.cells[0].mean = f64::NAN;
        let back = table_from_csv(&table_to_csv(&t).unwrap()).unwrap();
        assert!(back.cells[0].mean.is_nan());
        assert_eq!(back.cells[1..], t.cells[1..]);
    }

    #[test]
    fn json_has_provenance() {
        let run = small_run(ScenarioKind::Ar1 { rho: 0.3 }, 2);
        let v: serde_json::Value = serde_json::from_str(&run_to_json(&run).unwrap()).unwrap();
        assert_eq!(v["config"]["scenario"]["seed"], 9);
        assert_eq!(v["table"]["meta"]["seed"], 9);
        assert_eq!(v["config"]["estimators"].as_array().unwrap().len(), 5);
        assert_eq!(v["bandwidths"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn summary_layout() {
        let run = small_run(ScenarioKind::Ar1 { rho: 0.3 }, 1);
        let s = table_summary(&run.table);
        assert!(s.contains("linf-op"));
        assert!(s.lines().any(|l| l.starts_with("mle") && l.contains("(-)")));
    }

    #[test]
    fn posterior_outputs() {
        let x = sample_mvn(&ar1_covariance(8, 0.5).unwrap(), 40, 2).unwrap();
        let stats = SampleStats::from_observations(&x);
        let bp = band_posterior(&stats, &PriorSpec::default(), &PriorOverK::Uniform, 5).unwrap();
        let csv = posterior_to_csv(&bp).unwrap();
        assert_eq!(csv.lines().count(), 7);
        assert!(csv.starts_with("k,log_marginal,"));
        let json = posterior_to_json(&bp, &serde_json::json!({"seed": 2})).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["log_marginals"].as_array().unwrap().len(), 6);
        assert_eq!(v["settings"]["seed"], 2);
    }

    #[test]
    fn matrix_and_draw_text() {
        let m = SymMatrix::from_fn(3, |i, j| if i == j { 2.0 } else if i + 1 == j { 0.5 } else { 0.0 });
        let text = matrix_to_csv(&m);
        let back: Vec<f64> = text
            .lines()
            .flat_map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect::<Vec<_>>())
            .collect();
        assert_eq!(back, m.as_slice());
        let d = draws_to_csv(&[m.clone(), m], 1).unwrap();
        assert_eq!(d.lines().count(), 1 + 2 * 5);
    }

    #[test]
    fn unwritable_path() {
        let err = write_output(Some(Path::new("/nonexistent-dir/out.csv")), "x").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
