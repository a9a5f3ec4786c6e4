use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::table::{num, Table};

/// Columns that identify a sweep cell; everything else except these is
/// aggregated.
const GROUP_KEYS: [&str; 3] = ["encoding", "layers", "scaling"];
const PASSTHROUGH: [&str; 2] = ["scaling_value", "seed"];

/// Mean and sample standard deviation (`n − 1`); a single value, or a set
/// of identical values, has std exactly 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.windows(2).all(|w| w[0] == w[1]) {
        return (values[0], 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Groups rows by (encoding, layers, scaling) and reports mean and std of
/// every value column. Groups keep the order of their first row.
pub fn aggregate_table(input: &Table, source: &str) -> Result<Table> {
    let keys: Vec<usize> = GROUP_KEYS
        .iter()
        .map(|k| input.require(k, source))
        .collect::<Result<_>>()?;
    let scaling_value = input.column("scaling_value");
    let value_cols: Vec<(usize, &String)> = input
        .header
        .iter()
        .enumerate()
        .filter(|(_, h)| !GROUP_KEYS.contains(&h.as_str()) && !PASSTHROUGH.contains(&h.as_str()))
        .collect();

    let mut groups: Vec<(Vec<String>, Vec<&Vec<String>>)> = Vec::new();
    for row in &input.rows {
        let key: Vec<String> = keys.iter().map(|&k| row[k].clone()).collect();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, rows)) => rows.push(row),
            None => groups.push((key, vec![row])),
        }
    }

    let mut header: Vec<String> = GROUP_KEYS.iter().map(|s| s.to_string()).collect();
    if scaling_value.is_some() {
        header.push("scaling_value".into());
    }
    header.push("n_samples".into());
    for (_, name) in &value_cols {
        header.push(format!("mean_{name}"));
        header.push(format!("std_{name}"));
    }
    header.push("single_sample".into());
    let mut out = Table { header, rows: Vec::new() };

    for (key, rows) in groups {
        let mut record = key.clone();
        if let Some(c) = scaling_value {
            record.push(rows[0][c].clone());
        }
        record.push(rows.len().to_string());
        for &(col, name) in &value_cols {
            let values: Vec<f64> = rows
                .iter()
                .filter(|r| !r[col].is_empty())
                .map(|r| {
                    r[col].parse::<f64>().map_err(|_| {
                        HarnessError::Schema(format!("{source}: column `{name}` has non-numeric value `{}`", r[col]))
                    })
                })
                .collect::<Result<_>>()?;
            if values.is_empty() {
                record.extend([String::new(), String::new()]);
            } else {
                let (m, s) = mean_std(&values);
                record.extend([num(m), num(s)]);
            }
        }
        record.push((rows.len() == 1).to_string());
        out.rows.push(record);
    }
    Ok(out)
}

/// Concatenates every CSV matching `pattern` (all must share a header) and
/// aggregates the result.
pub fn aggregate_files(pattern: &str) -> Result<(Table, Vec<PathBuf>)> {
    let paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| HarnessError::config(None, "pattern", e))?
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| {
            let path = e.path().to_path_buf();
            HarnessError::io(path, e.into())
        })?;
    if paths.is_empty() {
        return Err(HarnessError::config(None, "pattern", format!("`{pattern}` matches no files")));
    }
    let mut merged: Option<Table> = None;
    for path in &paths {
        let t = Table::read(path)?;
        match &mut merged {
            None => merged = Some(t),
            Some(m) if m.header == t.header => m.rows.extend(t.rows),
            Some(m) => {
                return Err(HarnessError::Schema(format!(
                    "{} has columns [{}], expected [{}]",
                    path.display(),
                    t.header.join(", "),
                    m.header.join(", ")
                )))
            }
        }
    }
    let merged = merged.expect("at least one file");
    Ok((aggregate_table(&merged, pattern)?, paths))
}

pub fn write_summary(summary: &Table, inputs: &[PathBuf], out: &Path) -> Result<()> {
    let preamble = format!(
        "qclab-harness {}\naggregate of {}",
        env!("CARGO_PKG_VERSION"),
        inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
    );
    summary.write_atomic(out, &preamble)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[[&str; 6]]) -> Table {
        let mut t = Table::new(["encoding", "layers", "scaling", "seed", "best_train_accuracy", "best_val_accuracy"]);
        t.rows = rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect();
        t
    }

    #[test]
    fn mean_std_examples() {
        assert_eq!(mean_std(&[0.7, 0.7, 0.7]), (0.7, 0.0));
        let (m, _) = mean_std(&[0.8, 0.9]);
        assert!((m - 0.85).abs() < 1e-15);
        assert_eq!(mean_std(&[0.4]), (0.4, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }

    #[test]
    fn groups_and_flags_single_samples() {
        let t = table(&[
            ["angle_x", "1", "pi/4", "0", "0.8", "0.7"],
            ["angle_x", "1", "pi/4", "1", "0.9", "0.7"],
            ["angle_y", "1", "pi/4", "0", "0.5", ""],
        ]);
        let s = aggregate_table(&t, "t").unwrap();
        assert_eq!(
            s.header,
            [
                "encoding",
                "layers",
                "scaling",
                "n_samples",
                "mean_best_train_accuracy",
                "std_best_train_accuracy",
                "mean_best_val_accuracy",
                "std_best_val_accuracy",
                "single_sample"
            ]
        );
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.rows[0][3], "2");
        assert!((s.rows[0][4].parse::<f64>().unwrap() - 0.85).abs() < 1e-15);
        assert_eq!(s.rows[0][6], "0.7");
        assert_eq!(s.rows[0][7], "0");
        assert_eq!(s.rows[0][8], "false");
        assert_eq!(&s.rows[1][5..], ["0", "", "", "true"]);
    }

    #[test]
    fn missing_key_or_bad_value_is_a_schema_error() {
        let mut t = table(&[["angle_x", "1", "pi", "0", "oops", "0.1"]]);
        assert!(matches!(aggregate_table(&t, "t"), Err(HarnessError::Schema(_))));
        t.header[0] = "enc".into();
        assert!(matches!(aggregate_table(&t, "t"), Err(HarnessError::Schema(_))));
    }
}
