use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use fracdual::principles::ScanRow;
use fracdual::HistoryField;

/// Shortest decimal that parses back to the same `f64`; both zeros print
/// as `0.0`.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        return "0.0".into();
    }
    format!("{v:?}")
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub kind: &'static str,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictEntry {
    pub name: String,
    pub verdict: fracdual::Verdict,
    pub expected: fracdual::Verdict,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    complete: bool,
    created_unix: u64,
    verdicts: &'a [VerdictEntry],
    files: Vec<FileEntry>,
}

/// All files of one run, buffered so that a single writer touches the
/// directory at the end.
#[derive(Debug, Default)]
pub struct Output {
    files: Vec<(String, &'static str, String)>,
    pub verdicts: Vec<VerdictEntry>,
}

impl Output {
    pub fn add(&mut self, path: impl Into<String>, kind: &'static str, contents: String) {
        self.files.push((path.into(), kind, contents));
    }

    pub fn json<T: Serialize>(&mut self, path: impl Into<String>, kind: &'static str, value: &T) {
        let mut s = serde_json::to_string_pretty(value).expect("serializable");
        s.push('\n');
        self.add(path, kind, s);
    }

    /// Two-column plot data.
    pub fn series(&mut self, path: impl Into<String>, cols: (&str, &str), rows: &[(f64, f64)]) {
        let mut s = format!("{},{}\n", cols.0, cols.1);
        for (a, b) in rows {
            let _ = writeln!(s, "{},{}", num(*a), num(*b));
        }
        self.add(path, "plot", s);
    }

    pub fn trajectory(&mut self, path: impl Into<String>, f: &HistoryField) {
        let grid = f.grid();
        let mut s = String::from("level,t,node,x,u\n");
        for (j, lv) in f.levels().iter().enumerate() {
            let t = num(f.time(j));
            for (k, u) in lv.iter().enumerate() {
                let _ = writeln!(s, "{j},{t},{k},{},{}", num(grid.x(k)), num(*u));
            }
        }
        self.add(path, "trajectory", s);
    }

    pub fn scan(&mut self, path: impl Into<String>, rows: &[ScanRow]) {
        let mut s = String::from("lambda,min_w,argmin_x,argmin_t\n");
        for r in rows {
            let _ = writeln!(s, "{},{},{},{}", num(r.lambda), num(r.min_w), num(r.argmin_x), num(r.argmin_t));
        }
        self.add(path, "scan", s);
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|f| f.0.as_str())
    }

    /// Writes the buffered files without a manifest.
    pub fn write_files(&self, dir: &Path) -> io::Result<Vec<FileEntry>> {
        let mut entries = Vec::new();
        for (path, kind, contents) in &self.files {
            let p = dir.join(path);
            if let Some(parent) = p.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&p, contents)?;
            entries.push(FileEntry { path: path.clone(), kind, bytes: contents.len() });
        }
        Ok(entries)
    }

    /// Writes every buffered file and the manifest.
    pub fn write(&self, dir: &Path, command: &str, complete: bool) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let entries = self.write_files(dir)?;
        let created_unix = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let m = Manifest { command, complete, created_unix, verdicts: &self.verdicts, files: entries };
        let mut s = serde_json::to_string_pretty(&m).expect("serializable");
        s.push('\n');
        std::fs::write(dir.join("MANIFEST.json"), s)
    }

    /// Compares buffered results with files already in `dir`; returns one
    /// message per difference.
    pub fn check(&self, dir: &Path, rel_tol: f64) -> Vec<String> {
        let mut diffs = Vec::new();
        for (path, _, fresh) in &self.files {
            let stored = match std::fs::read_to_string(dir.join(path)) {
                Ok(s) => s,
                Err(e) => {
                    diffs.push(format!("{path}: {e}"));
                    continue;
                }
            };
            let d = if path.ends_with(".json") {
                match (serde_json::from_str::<Value>(fresh), serde_json::from_str::<Value>(&stored)) {
                    (Ok(a), Ok(b)) => compare_json(&a, &b, rel_tol, "$"),
                    _ => Some("unreadable JSON".to_string()),
                }
            } else if path.ends_with(".csv") {
                compare_csv(fresh, &stored, rel_tol)
            } else if fresh != &stored {
                Some("contents differ".to_string())
            } else {
                None
            };
            if let Some(d) = d {
                diffs.push(format!("{path}: {d}"));
            }
        }
        diffs
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan()) || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn compare_csv(a: &str, b: &str, tol: f64) -> Option<String> {
    let (la, lb): (Vec<&str>, Vec<&str>) = (a.lines().collect(), b.lines().collect());
    if la.len() != lb.len() {
        return Some(format!("{} rows vs {} stored", la.len(), lb.len()));
    }
    for (i, (ra, rb)) in la.iter().zip(&lb).enumerate() {
        let (ca, cb): (Vec<&str>, Vec<&str>) = (ra.split(',').collect(), rb.split(',').collect());
        if ca.len() != cb.len() {
            return Some(format!("line {}: column count differs", i + 1));
        }
        for (x, y) in ca.iter().zip(&cb) {
            let same = match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(p), Ok(q)) => close(p, q, tol),
                _ => x == y,
            };
            if !same {
                return Some(format!("line {}: {x} vs stored {y}", i + 1));
            }
        }
    }
    None
}

fn compare_json(a: &Value, b: &Value, tol: f64, at: &str) -> Option<String> {
    match (a, b) {
        (Value::Number(p), Value::Number(q)) => {
            let (p, q) = (p.as_f64().unwrap_or(f64::NAN), q.as_f64().unwrap_or(f64::NAN));
            (!close(p, q, tol)).then(|| format!("{at}: {p} vs stored {q}"))
        }
        (Value::Array(p), Value::Array(q)) => {
            if p.len() != q.len() {
                return Some(format!("{at}: length {} vs stored {}", p.len(), q.len()));
            }
            p.iter().zip(q).enumerate().find_map(|(i, (x, y))| compare_json(x, y, tol, &format!("{at}[{i}]")))
        }
        (Value::Object(p), Value::Object(q)) => {
            if p.len() != q.len() || p.keys().any(|k| !q.contains_key(k)) {
                return Some(format!("{at}: keys differ"));
            }
            p.iter().find_map(|(k, x)| compare_json(x, &q[k], tol, &format!("{at}.{k}")))
        }
        _ => (a != b).then(|| format!("{at}: {a} vs stored {b}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 2.5e10, -7.25] {
            assert_eq!(num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(-0.0), "0.0");
    }

    #[test]
    fn csv_comparison_uses_tolerance() {
        assert!(compare_csv("a,b\n1,2.0\n", "a,b\n1,2.0000000001\n", 1e-9).is_none());
        assert!(compare_csv("a,b\n1,2.0\n", "a,b\n1,2.1\n", 1e-9).is_some());
        assert!(compare_csv("a\n1\n", "a\n1\n2\n", 1e-9).is_some());
    }

    #[test]
    fn json_comparison_walks_structure() {
        let a: Value = serde_json::json!({"x": [1.0, 2.0], "v": "holds"});
        let b: Value = serde_json::json!({"x": [1.0, 2.0 + 1e-12], "v": "holds"});
        let c: Value = serde_json::json!({"x": [1.0, 2.0], "v": "violated"});
        assert!(compare_json(&a, &b, 1e-9, "$").is_none());
        assert!(compare_json(&a, &c, 1e-9, "$").is_some());
    }
}
