//! One CSV per split: `group_id,mode_id,ground_truth,label,f0..f{D-1}`.
//!
//! Features are written with 9 significant digits. Generated features are
//! already rounded to that precision, so a write/read cycle is bit-exact.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::types::{Dataset, GroundTruth, Label, Sample, Split};
use crate::error::{Error, Result};

pub fn header(dim: usize) -> String {
    let mut h = String::from("group_id,mode_id,ground_truth,label");
    for j in 0..dim {
        write!(h, ",f{j}").unwrap();
    }
    h
}

pub fn format_feature(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn write_csv<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    writeln!(out, "{}", header(dataset.dim))?;
    let mut line = String::new();
    for s in &dataset.samples {
        line.clear();
        write!(
            line,
            "{},{},{},{}",
            s.group_id,
            s.mode_id,
            s.ground_truth.as_str(),
            s.label.as_str()
        )
        .unwrap();
        for &v in &s.features {
            line.push(',');
            line.push_str(&format_feature(v));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R, split: Split) -> Result<Dataset> {
    let mut lines = BufReader::new(input).lines();
    let head = lines
        .next()
        .ok_or_else(|| Error::Schema("empty file, expected a header".into()))??;
    let cols: Vec<&str> = head.trim_end().split(',').collect();
    if cols.len() < 5 || cols[..4] != ["group_id", "mode_id", "ground_truth", "label"] {
        return Err(Error::Schema(format!("unexpected header `{head}`")));
    }
    let dim = cols.len() - 4;
    if head.trim_end() != header(dim) {
        return Err(Error::Schema(format!("feature columns must be f0..f{}", dim - 1)));
    }

    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let row = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 4 {
            return Err(Error::Schema(format!(
                "line {row}: {} fields, expected {}",
                fields.len(),
                dim + 4
            )));
        }
        let int = |s: &str, what: &str| {
            s.parse::<u64>()
                .map_err(|_| Error::Schema(format!("line {row}: bad {what} `{s}`")))
        };
        let group_id = int(fields[0], "group_id")?;
        let mode_id = int(fields[1], "mode_id")? as usize;
        let ground_truth =
            GroundTruth::parse(fields[2]).map_err(|e| Error::Schema(format!("line {row}: {e}")))?;
        let label = Label::parse(fields[3]).map_err(|e| Error::Schema(format!("line {row}: {e}")))?;
        let features = fields[4..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Schema(format!("line {row}: bad feature `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        samples.push(Sample {
            features,
            label,
            ground_truth,
            mode_id,
            group_id,
        });
    }
    let ds = Dataset { split, dim, samples };
    ds.validate()?;
    Ok(ds)
}

pub fn write_csv_file(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(dataset, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_csv_file(path: &Path, split: Split) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, split)
}
