//! Reading regression data and writing chains and run manifests.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samplers::{Chain, Counters};
use crate::targets::RegressionData;

/// Numeric table with optional column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

fn detect_delimiter(first_line: &str) -> Option<u8> {
    [b',', b'\t', b';'].into_iter().find(|&d| first_line.as_bytes().contains(&d))
}

/// Parses delimited numeric text, one observation per row. The delimiter is
/// a comma, tab or semicolon if the first line contains one, whitespace
/// otherwise. A first row that does not parse as numbers is the header.
pub fn read_table<R: Read>(mut input: R) -> Result<Table> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let records: Vec<Vec<String>> = match detect_delimiter(first) {
        Some(d) => csv::ReaderBuilder::new()
            .delimiter(d)
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes())
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(e.to_string()))?,
        None => text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_whitespace().map(str::to_string).collect())
            .collect(),
    };
    let mut it = records.into_iter().filter(|r| !(r.len() == 1 && r[0].is_empty())).peekable();
    let header = match it.peek() {
        Some(r) if r.iter().any(|f| f.parse::<f64>().is_err()) => it.next(),
        _ => None,
    };
    let mut rows = Vec::new();
    for (line, rec) in it.enumerate() {
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: '{f}' is not a number", line + 1))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(w) = rows.first().map(Vec::len).or(header.as_ref().map(Vec::len)) {
            if row.len() != w {
                return Err(Error::Parse(format!("row {} has {} fields, expected {w}", line + 1, row.len())));
            }
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

/// Loads a regression data set. The response is the named column, or the
/// last one; every other column is a predictor.
pub fn load_regression_data(path: &Path, response: Option<&str>) -> Result<RegressionData> {
    let table = read_table(File::open(path)?)?;
    let width = table.rows.first().map(Vec::len).ok_or_else(|| Error::Parse("data set has no rows".into()))?;
    if width < 2 {
        return Err(Error::Parse("need at least one predictor and a response".into()));
    }
    let col = match response {
        None => width - 1,
        Some(name) => table
            .header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| Error::Parse(format!("no column named '{name}'")))?,
    };
    let n = table.rows.len();
    let x = DMatrix::from_fn(n, width - 1, |i, j| table.rows[i][if j < col { j } else { j + 1 }]);
    let y = table.rows.iter().map(|r| r[col]).collect();
    RegressionData::new(x, y)
}

/// Writes one row per recorded sample: `iteration, beta_1..beta_D, log_weight, accepted`.
pub fn write_samples_csv<W: Write>(chain: &Chain, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["iteration".to_string()];
    header.extend((1..=chain.dim).map(|j| format!("beta_{j}")));
    header.extend(["log_weight".to_string(), "accepted".to_string()]);
    w.write_record(&header).map_err(csv_err)?;
    for (i, s) in chain.samples.iter().enumerate() {
        let mut rec = vec![(chain.config.burn_in + i).to_string()];
        rec.extend(s.beta.iter().map(|b| format!("{b:e}")));
        rec.push(format!("{:e}", s.log_weight));
        rec.push(u8::from(s.accepted).to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse(format!("{other:?}")),
    }
}

/// Per-chain entry of a run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub kernel: String,
    pub seed: u64,
    pub stream: u64,
    pub iterations: usize,
    pub burn_in: usize,
    pub elapsed_secs: f64,
    pub counters: Counters,
    pub samples_file: Option<String>,
}

impl ChainRecord {
    pub fn new(chain: &Chain, samples_file: Option<String>) -> Self {
        Self {
            kernel: chain.kernel.name().to_string(),
            seed: chain.config.seed,
            stream: chain.config.stream,
            iterations: chain.config.iterations,
            burn_in: chain.config.burn_in,
            elapsed_secs: chain.elapsed_secs,
            counters: chain.counters.clone(),
            samples_file,
        }
    }
}

/// Everything needed to rerun and audit an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub seed: u64,
    /// The configuration as read, echoed back.
    pub config: serde_json::Value,
    pub chains: Vec<ChainRecord>,
    pub total_secs: f64,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| Error::Parse(e.to_string()))?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_comma() {
        let t = read_table("a, b\n1, 2\n3,4.5\n".as_bytes()).unwrap();
        assert_eq!(t.header, Some(vec!["a".into(), "b".into()]));
        assert_eq!(t.rows, vec![vec![1.0, 2.0], vec![3.0, 4.5]]);
    }

    #[test]
    fn whitespace_without_header() {
        let t = read_table("1 2  3\n\n4\t5 6\n".as_bytes()).unwrap();
        assert!(t.header.is_none());
        assert_eq!(t.rows.len(), 2);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(matches!(read_table("1,2\n3\n".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(read_table("1,2\n3,x\n".as_bytes()), Err(Error::Parse(_))));
    }

    #[test]
    fn response_column_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "y,x1,x2\n1,2,3\n4,5,6\n7,8,10\n").unwrap();
        let d = load_regression_data(&p, Some("y")).unwrap();
        assert_eq!(d.y, vec![1.0, 4.0, 7.0]);
        assert_eq!(d.x[(2, 1)], 10.0);
        let d = load_regression_data(&p, None).unwrap();
        assert_eq!(d.y, vec![3.0, 6.0, 10.0]);
        assert!(load_regression_data(&p, Some("z")).is_err());
    }
}
