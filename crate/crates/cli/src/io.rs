use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use usable_info::{Arborescence, Dataset, Error};

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Dataset::read_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    data.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Square numeric matrix, one row per line. A first line that does not
/// parse as numbers is taken as a header.
pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(parse_entry).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if k == 0 => continue,
            Err(field) => {
                return Err(Error::Parse {
                    line,
                    message: format!("not a number: {field:?}"),
                })
                .with_context(|| format!("reading {}", path.display()))
            }
        }
    }
    let m = rows.len();
    if m < 2 {
        return Err(Error::Parse {
            line: 1,
            message: "need a square matrix with at least 2 rows".into(),
        })
        .with_context(|| format!("reading {}", path.display()));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: rows[i].len(),
        })
        .with_context(|| format!("row {} of {} is not of length {m}", i + 1, path.display()));
    }
    Ok(rows)
}

fn parse_entry(s: &str) -> std::result::Result<f64, String> {
    match s {
        "true" => Ok(1.0),
        "false" => Ok(0.0),
        _ => s.parse().map_err(|_| s.to_string()),
    }
}

pub fn write_matrix(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a tree from a `simulate` truth record, a tree record, or a bare
/// arborescence object.
pub fn read_tree(path: &Path) -> Result<Arborescence> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))?;
    let node = ["/results/truth/tree", "/results/tree", "/tree", ""]
        .iter()
        .find_map(|p| value.pointer(p).filter(|v| v.get("parents").is_some()))
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("{} holds no tree", path.display()),
        })?;
    let tree: Arborescence = serde_json::from_value(node.clone())?;
    tree.validate()?;
    Ok(tree)
}
