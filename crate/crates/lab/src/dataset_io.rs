//! Dataset files: whitespace-separated text with `#` metadata lines, or a
//! single JSON record. Both round-trip every value bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use qff::ode::{BenchmarkSystem, Dataset, NoiseSpec};
use serde::{Deserialize, Serialize};

use crate::config::DataFormat;
use crate::error::{LabError, Result};
use crate::table::write_file;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Record {
    system: String,
    noise: NoiseRecord,
    noise_variances: Vec<f64>,
    seed: u64,
    times: Vec<f64>,
    /// Row-major `N x K`.
    states: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum NoiseRecord {
    Variance(f64),
    Snr(f64),
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn to_record(d: &Dataset) -> Record {
    Record {
        system: d.system.name().to_string(),
        noise: match d.noise {
            NoiseSpec::Variance(v) => NoiseRecord::Variance(v),
            NoiseSpec::Snr(s) => NoiseRecord::Snr(s),
        },
        noise_variances: d.noise_variances.clone(),
        seed: d.seed,
        times: d.times.clone(),
        states: rows(&d.states),
        y: rows(&d.y),
    }
}

fn bad(path: &Path, message: impl Into<String>) -> LabError {
    LabError::Format { path: path.to_path_buf(), message: message.into() }
}

fn matrix(path: &Path, what: &str, r: &[Vec<f64>], k: usize) -> Result<DMatrix<f64>> {
    if r.iter().any(|row| row.len() != k) {
        return Err(bad(path, format!("{what}: every row needs {k} entries")));
    }
    Ok(DMatrix::from_fn(r.len(), k, |i, j| r[i][j]))
}

fn from_record(path: &Path, r: Record) -> Result<Dataset> {
    let system = BenchmarkSystem::from_name(&r.system).ok_or_else(|| bad(path, format!("unknown system {}", r.system)))?;
    let k = qff::ode::RealRhs::state_dim(&system);
    let n = r.times.len();
    if r.states.len() != n || r.y.len() != n || r.noise_variances.len() != k {
        return Err(bad(path, "inconsistent lengths"));
    }
    Ok(Dataset {
        system,
        times: r.times,
        states: matrix(path, "states", &r.states, k)?,
        y: matrix(path, "y", &r.y, k)?,
        noise: match r.noise {
            NoiseRecord::Variance(v) => NoiseSpec::Variance(v),
            NoiseRecord::Snr(s) => NoiseSpec::Snr(s),
        },
        noise_variances: r.noise_variances,
        seed: r.seed,
    })
}

pub fn to_text(d: &Dataset) -> String {
    let k = d.state_dim();
    let mut out = String::new();
    let _ = writeln!(out, "# system {}", d.system.name());
    let _ = match d.noise {
        NoiseSpec::Variance(v) => writeln!(out, "# noise variance {v:e}"),
        NoiseSpec::Snr(s) => writeln!(out, "# noise snr {s:e}"),
    };
    let vars: Vec<String> = d.noise_variances.iter().map(|v| format!("{v:e}")).collect();
    let _ = writeln!(out, "# noise_variances {}", vars.join(" "));
    let _ = writeln!(out, "# seed {}", d.seed);
    let mut header = vec!["time".to_string()];
    header.extend((0..k).map(|j| format!("x_{j}")));
    header.extend((0..k).map(|j| format!("y_{j}")));
    let _ = writeln!(out, "{}", header.join(" "));
    for i in 0..d.len() {
        let _ = write!(out, "{:e}", d.times[i]);
        for j in 0..k {
            let _ = write!(out, " {:e}", d.states[(i, j)]);
        }
        for j in 0..k {
            let _ = write!(out, " {:e}", d.y[(i, j)]);
        }
        out.push('\n');
    }
    out
}

pub fn from_text(path: &Path, src: &str) -> Result<Dataset> {
    let mut system = None;
    let mut noise = None;
    let mut variances = None;
    let mut seed = None;
    let mut header_seen = false;
    let mut data: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in src.lines().enumerate() {
        let loc = |m: &str| bad(path, format!("line {}: {m}", ln + 1));
        if let Some(meta) = line.strip_prefix('#') {
            let mut it = meta.split_whitespace();
            match it.next() {
                Some("system") => system = it.next().and_then(BenchmarkSystem::from_name),
                Some("noise") => {
                    let kind = it.next();
                    let v: Option<f64> = it.next().and_then(|s| s.parse().ok());
                    noise = match (kind, v) {
                        (Some("variance"), Some(v)) => Some(NoiseSpec::Variance(v)),
                        (Some("snr"), Some(s)) => Some(NoiseSpec::Snr(s)),
                        _ => return Err(loc("bad noise line")),
                    };
                }
                Some("noise_variances") => {
                    variances = Some(it.map(str::parse).collect::<std::result::Result<Vec<f64>, _>>().map_err(|e| loc(&e.to_string()))?)
                }
                Some("seed") => seed = it.next().and_then(|s| s.parse().ok()),
                _ => {}
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            header_seen = true;
            if line.starts_with("time") {
                continue;
            }
        }
        let row = line.split_whitespace().map(str::parse).collect::<std::result::Result<Vec<f64>, _>>();
        data.push(row.map_err(|e| loc(&e.to_string()))?);
    }
    let system = system.ok_or_else(|| bad(path, "missing `# system` line"))?;
    let k = qff::ode::RealRhs::state_dim(&system);
    let record = Record {
        system: system.name().to_string(),
        noise: match noise.ok_or_else(|| bad(path, "missing `# noise` line"))? {
            NoiseSpec::Variance(v) => NoiseRecord::Variance(v),
            NoiseSpec::Snr(s) => NoiseRecord::Snr(s),
        },
        noise_variances: variances.ok_or_else(|| bad(path, "missing `# noise_variances` line"))?,
        seed: seed.ok_or_else(|| bad(path, "missing `# seed` line"))?,
        times: data.iter().map(|r| r[0]).collect(),
        states: data.iter().map(|r| r.get(1..1 + k).unwrap_or_default().to_vec()).collect(),
        y: data.iter().map(|r| r.get(1 + k..).unwrap_or_default().to_vec()).collect(),
    };
    if data.iter().any(|r| r.len() != 1 + 2 * k) {
        return Err(bad(path, format!("every row needs {} columns", 1 + 2 * k)));
    }
    from_record(path, record)
}

pub fn to_json(d: &Dataset) -> String {
    serde_json::to_string(&to_record(d)).expect("dataset serializes")
}

pub fn from_json(path: &Path, src: &str) -> Result<Dataset> {
    let r: Record = serde_json::from_str(src).map_err(|e| bad(path, e.to_string()))?;
    from_record(path, r)
}

pub fn extension(format: DataFormat) -> &'static str {
    match format {
        DataFormat::Text => "txt",
        DataFormat::Json => "json",
    }
}

pub fn write_dataset(path: &Path, d: &Dataset, format: DataFormat) -> Result<()> {
    let body = match format {
        DataFormat::Text => to_text(d),
        DataFormat::Json => to_json(d),
    };
    write_file(path, &body)
}

/// Reads either format, chosen by the `.json` extension.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let src = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        from_json(path, &src)
    } else {
        from_text(path, &src)
    }
}
