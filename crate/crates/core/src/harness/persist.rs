//! Plain-text persistence of experiment results.
//!
//! A rows file holds one line per replication and round-trips exactly:
//!
//! ```text
//! # circulant-extremes v1
//! # config dist=gaussian delta=1 df=NA reps=2 seed=42 zero_index=true power=1 truncate=false smooth=false eta=0.05 dims=16
//! n,r,sigma_min,sigma_max,kappa,norm_max,norm_kappa
//! 16,0,8.1553690069786312e-1,...
//! ```
//!
//! Reals are written with 17 significant digits, undefined condition
//! numbers as `NA`. A summary file carries one row of moments per dimension
//! and is for reading only.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::Duration;

use thiserror::Error;

use super::{DimensionResult, ExperimentConfig, ExperimentResult, ReplicationRecord, SampleSummary};
use crate::generators::{DistributionKind, DistributionSpec};

pub const FORMAT_HEADER: &str = "# circulant-extremes v1";
const FORMAT_PREFIX: &str = "# circulant-extremes";
const SUMMARY_HEADER: &str = "# circulant-extremes v1 summary";
const ROW_COLUMNS: &str = "n,r,sigma_min,sigma_max,kappa,norm_max,norm_kappa";
const ROW_ARITY: usize = 7;
const SUMMARY_COLUMNS: &str = "n,replications,undefined,\
min_mean,min_sd,min_q10,min_q50,min_q90,\
max_mean,max_sd,max_q10,max_q50,max_q90,\
kappa_mean,kappa_sd,kappa_q10,kappa_q50,kappa_q90";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PersistFormat {
    Rows,
    Summary,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read results: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: not a results file (expected `{FORMAT_HEADER}`)")]
    MalformedHeader { line: usize },
    #[error("unsupported format version `{found}` (this build reads v1)")]
    VersionMismatch { found: String },
    #[error("this is a summary file; only rows files can be loaded")]
    SummaryFile,
    #[error("line {line}: bad configuration: {reason}")]
    Config { line: usize, reason: String },
    #[error("line {line}: {reason} (last good line {last_good_line})")]
    Row {
        line: usize,
        last_good_line: usize,
        reason: String,
    },
    #[error("truncated file: {found} of {expected} rows present (last good line {last_good_line})")]
    Truncated {
        last_good_line: usize,
        expected: usize,
        found: usize,
    },
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn optional(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), real)
}

fn config_line(c: &ExperimentConfig) -> String {
    let df = match c.distribution.kind {
        DistributionKind::StudentTStandardized { df } => df.to_string(),
        _ => "NA".to_string(),
    };
    let dims: Vec<String> = c.dimensions.iter().map(usize::to_string).collect();
    format!(
        "# config dist={} delta={} df={} reps={} seed={} zero_index={} power={} truncate={} smooth={} eta={} dims={}",
        c.distribution.name(),
        c.distribution.delta,
        df,
        c.replications,
        c.master_seed,
        c.include_zero_index,
        c.power_p,
        c.apply_truncation,
        c.apply_smoothing,
        c.eta,
        dims.join(";"),
    )
}

fn parse_config(line: &str, line_no: usize) -> Result<ExperimentConfig, LoadError> {
    let bad = |reason: String| LoadError::Config {
        line: line_no,
        reason,
    };
    let body = line
        .strip_prefix("# config ")
        .ok_or_else(|| bad("missing `# config` line".into()))?;
    let mut fields = std::collections::BTreeMap::new();
    for token in body.split_whitespace() {
        let (k, v) = token
            .split_once('=')
            .ok_or_else(|| bad(format!("token `{token}` is not key=value")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| bad(format!("missing key `{k}`")))
    };
    fn num<T: std::str::FromStr>(v: &str, k: &str, line: usize) -> Result<T, LoadError> {
        v.parse().map_err(|_| LoadError::Config {
            line,
            reason: format!("bad value `{v}` for `{k}`"),
        })
    }
    let kind = match get("dist")? {
        "gaussian" => DistributionKind::StandardGaussian,
        "rademacher" => DistributionKind::Rademacher,
        "uniform" => DistributionKind::UniformStandardized,
        "exp-centered" => DistributionKind::ExponentialCentered,
        "student-t" => DistributionKind::StudentTStandardized {
            df: num(get("df")?, "df", line_no)?,
        },
        other => return Err(bad(format!("unknown distribution `{other}`"))),
    };
    let delta: f64 = num(get("delta")?, "delta", line_no)?;
    let distribution = DistributionSpec::new(kind, delta).map_err(|e| bad(e.to_string()))?;
    let dimensions = get("dims")?
        .split(';')
        .map(|d| num::<usize>(d, "dims", line_no))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentConfig {
        dimensions,
        distribution,
        replications: num(get("reps")?, "reps", line_no)?,
        master_seed: num(get("seed")?, "seed", line_no)?,
        include_zero_index: num(get("zero_index")?, "zero_index", line_no)?,
        power_p: num(get("power")?, "power", line_no)?,
        apply_truncation: num(get("truncate")?, "truncate", line_no)?,
        apply_smoothing: num(get("smooth")?, "smooth", line_no)?,
        eta: num(get("eta")?, "eta", line_no)?,
        workers: None,
    })
}

fn summary_row(n: usize, reps: usize, undefined: usize, parts: &[SampleSummary; 3]) -> String {
    let mut row = format!("{n},{reps},{undefined}");
    for s in parts {
        for v in [s.mean, s.sd, s.q10, s.q50, s.q90] {
            let _ = write!(row, ",{}", if v.is_nan() { "NA".to_string() } else { real(v) });
        }
    }
    row
}

/// Write a result to `path` in the chosen format.
pub fn persist(result: &ExperimentResult, path: &Path, format: PersistFormat) -> io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let config = &result.config;
    match format {
        PersistFormat::Rows => {
            writeln!(out, "{FORMAT_HEADER}")?;
            writeln!(out, "{}", config_line(config))?;
            writeln!(out, "{ROW_COLUMNS}")?;
            for dim in &result.dimensions {
                for rec in &dim.records {
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        dim.n,
                        rec.replication,
                        real(rec.sigma_min),
                        real(rec.sigma_max),
                        optional(rec.kappa),
                        real(rec.norm_max),
                        optional(rec.norm_kappa),
                    )?;
                }
            }
        }
        PersistFormat::Summary => {
            writeln!(out, "{SUMMARY_HEADER}")?;
            writeln!(out, "# toolkit circex {}", crate::VERSION)?;
            writeln!(out, "{}", config_line(config))?;
            writeln!(out, "{SUMMARY_COLUMNS}")?;
            for dim in &result.dimensions {
                let parts = dim.summaries(config);
                writeln!(
                    out,
                    "{}",
                    summary_row(dim.n, dim.records.len(), dim.undefined_count(), &parts)
                )?;
            }
        }
    }
    out.flush()
}

fn parse_row(
    line: &str,
    line_no: usize,
    expected: (usize, usize),
) -> Result<ReplicationRecord, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != ROW_ARITY {
        return Err(format!("expected {ROW_ARITY} fields, found {}", fields.len()));
    }
    let int = |i: usize, name: &str| -> Result<usize, String> {
        fields[i]
            .parse()
            .map_err(|_| format!("bad {name} `{}`", fields[i]))
    };
    let float = |i: usize, name: &str| -> Result<f64, String> {
        match fields[i].parse::<f64>() {
            Ok(v) if !v.is_nan() => Ok(v),
            _ => Err(format!("bad {name} `{}`", fields[i])),
        }
    };
    let maybe = |i: usize, name: &str| -> Result<Option<f64>, String> {
        if fields[i] == "NA" {
            Ok(None)
        } else {
            float(i, name).map(Some)
        }
    };
    let (n, r) = (int(0, "n")?, int(1, "r")?);
    if (n, r) != expected {
        return Err(format!(
            "expected row n={} r={}, found n={n} r={r}",
            expected.0, expected.1
        ));
    }
    let rec = ReplicationRecord {
        replication: r,
        sigma_min: float(2, "sigma_min")?,
        sigma_max: float(3, "sigma_max")?,
        kappa: maybe(4, "kappa")?,
        norm_max: float(5, "norm_max")?,
        norm_kappa: maybe(6, "norm_kappa")?,
    };
    if rec.kappa.is_some() != rec.norm_kappa.is_some() {
        return Err(format!("kappa and norm_kappa disagree on definedness at line {line_no}"));
    }
    Ok(rec)
}

/// Read a rows file written by [`persist`].
pub fn load(path: &Path) -> Result<ExperimentResult, LoadError> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines.next().ok_or(LoadError::MalformedHeader { line: 1 })?;
    let header = header?;
    if header != FORMAT_HEADER {
        if header == SUMMARY_HEADER {
            return Err(LoadError::SummaryFile);
        }
        return Err(match header.strip_prefix(FORMAT_PREFIX) {
            Some(rest) => LoadError::VersionMismatch {
                found: rest.trim().to_string(),
            },
            None => LoadError::MalformedHeader { line: 1 },
        });
    }
    let (_, cfg) = lines.next().ok_or(LoadError::Config {
        line: 2,
        reason: "missing `# config` line".into(),
    })?;
    let config = parse_config(&cfg?, 2)?;
    config.validate().map_err(|e| LoadError::Config {
        line: 2,
        reason: e.to_string(),
    })?;
    match lines.next() {
        Some((_, Ok(cols))) if cols == ROW_COLUMNS => {}
        Some((_, Err(e))) => return Err(e.into()),
        _ => return Err(LoadError::MalformedHeader { line: 3 }),
    }

    let reps = config.replications;
    let expected_rows = config.dimensions.len() * reps;
    let mut dimensions: Vec<DimensionResult> = config
        .dimensions
        .iter()
        .map(|&n| DimensionResult {
            n,
            records: Vec::with_capacity(reps),
        })
        .collect();
    let mut found = 0usize;
    let mut last_good_line = 3usize;
    for (line_no, line) in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let row_error = |reason: String| LoadError::Row {
            line: line_no,
            last_good_line,
            reason,
        };
        if found == expected_rows {
            return Err(row_error(format!("more rows than the {expected_rows} declared")));
        }
        let d = found / reps;
        let expected = (config.dimensions[d], found % reps);
        let rec = parse_row(&line, line_no, expected).map_err(row_error)?;
        dimensions[d].records.push(rec);
        found += 1;
        last_good_line = line_no;
    }
    if found != expected_rows {
        return Err(LoadError::Truncated {
            last_good_line,
            expected: expected_rows,
            found,
        });
    }
    Ok(ExperimentResult {
        config,
        dimensions,
        wall_time: Duration::ZERO,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_keep_seventeen_digits() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e300, 5e-324, 0.0] {
            assert_eq!(real(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn config_line_round_trips() {
        let mut c = ExperimentConfig::new(
            vec![16, 1000],
            DistributionSpec::new(DistributionKind::StudentTStandardized { df: 5.0 }, 0.5).unwrap(),
            7,
            u64::MAX,
        );
        c.include_zero_index = false;
        c.power_p = 3;
        c.apply_smoothing = true;
        c.eta = 0.2;
        let back = parse_config(&config_line(&c), 2).unwrap();
        assert_eq!(back, c);
    }
}
