use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};

/// String-valued CSV table with optional `#` preamble lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn require(&self, name: &str, source: &str) -> Result<usize> {
        self.column(name)
            .ok_or_else(|| HarnessError::Schema(format!("{source}: missing column `{name}`")))
    }

    /// Writes `preamble` as `# ` comment lines followed by the CSV, into a
    /// temporary sibling that is then renamed over `path`.
    pub fn write_atomic(&self, path: &Path, preamble: &str) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        }
        let tmp = tmp_path(path);
        let mut bytes = Vec::new();
        for line in preamble.lines() {
            bytes.extend_from_slice(format!("# {line}\n").as_bytes());
        }
        {
            let mut w = csv::Writer::from_writer(&mut bytes);
            w.write_record(&self.header).map_err(|e| HarnessError::csv(path, e))?;
            for row in &self.rows {
                w.write_record(row).map_err(|e| HarnessError::csv(path, e))?;
            }
            w.flush().map_err(|e| HarnessError::io(path, e))?;
        }
        fs::write(&tmp, &bytes).map_err(|e| HarnessError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| HarnessError::csv(path, e))?;
        let header = r
            .headers()
            .map_err(|e| HarnessError::csv(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| HarnessError::csv(path, e))?;
        Ok(Table { header, rows })
    }
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Shortest round-trip decimal form, so equal values print identically.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Reads the `# ` preamble lines of a CSV written by [`Table::write_atomic`].
pub fn read_preamble(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(text
        .lines()
        .map_while(|l| l.strip_prefix("# ").or_else(|| l.strip_prefix('#')))
        .map(str::to_string)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/t.csv");
        let mut t = Table::new(["a", "b"]);
        t.rows.push(vec!["1".into(), "x,y".into()]);
        t.write_atomic(&path, "version 1\nkind = test").unwrap();
        assert!(!tmp_path(&path).exists());
        assert_eq!(Table::read(&path).unwrap(), t);
        assert_eq!(read_preamble(&path).unwrap(), ["version 1", "kind = test"]);
    }
}
