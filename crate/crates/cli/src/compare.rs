//! Field-by-field comparison of two run directories.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

use schreier_liouville::numerics::{ExactWeight, Weight};
use schreier_liouville::{Error, Result};

use crate::config::read_manifest;

/// Absolute slack on top of the pruned mass when a float field is involved.
pub const FLOAT_SLACK: f64 = 1e-12;

const MODE_DEPENDENT: &[&str] = &["support_x", "support_y", "pruned_mass"];

#[derive(Clone, Debug, PartialEq)]
pub struct FieldDiff {
    pub file: String,
    /// 1-based, header included.
    pub line: usize,
    pub column: String,
    pub left: String,
    pub right: String,
}

impl fmt::Display for FieldDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {} != {}", self.file, self.line, self.column, self.left, self.right)
    }
}

fn numeric(s: &str) -> Option<f64> {
    if s.contains('/') {
        s.parse::<ExactWeight>().ok().map(|w| w.to_f64())
    } else {
        s.parse::<f64>().ok()
    }
}

fn manifest(dir: &Path) -> Result<std::collections::BTreeMap<String, String>> {
    let path = dir.join("manifest.txt");
    let text = fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(read_manifest(&text))
}

fn csv_files(dir: &Path) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for entry in fs::read_dir(dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if name.ends_with(".csv") {
            out.insert(name);
        }
    }
    Ok(out)
}

/// Differences between the CSV artifacts of two runs.
///
/// Two exact runs must agree byte for byte. When either run is in float mode,
/// numeric fields may differ by the row's pruned mass plus [`FLOAT_SLACK`]; if the
/// modes differ, support sizes and pruned mass are not compared.
pub fn compare_runs(a: &Path, b: &Path) -> Result<Vec<FieldDiff>> {
    let (ma, mb) = (manifest(a)?, manifest(b)?);
    let (sa, sb) = (ma.get("schema"), mb.get("schema"));
    if sa.is_none() || sa != sb {
        return Err(Error::Config(format!("schema mismatch: {sa:?} vs {sb:?}")));
    }
    let exact_a = ma.get("mode").map(String::as_str) == Some("exact");
    let exact_b = mb.get("mode").map(String::as_str) == Some("exact");
    let both_exact = exact_a && exact_b;
    let same_mode = exact_a == exact_b;

    let (fa, fb) = (csv_files(a)?, csv_files(b)?);
    let mut diffs = Vec::new();
    for name in fa.union(&fb) {
        if !fa.contains(name) || !fb.contains(name) {
            diffs.push(FieldDiff {
                file: name.clone(),
                line: 0,
                column: String::new(),
                left: if fa.contains(name) { "present" } else { "missing" }.into(),
                right: if fb.contains(name) { "present" } else { "missing" }.into(),
            });
            continue;
        }
        let ta = fs::read_to_string(a.join(name))?;
        let tb = fs::read_to_string(b.join(name))?;
        if both_exact {
            diff_exact(name, &ta, &tb, &mut diffs);
        } else {
            diff_tolerant(name, &ta, &tb, same_mode, &mut diffs);
        }
    }
    Ok(diffs)
}

fn diff_exact(name: &str, ta: &str, tb: &str, diffs: &mut Vec<FieldDiff>) {
    let header: Vec<&str> = ta.lines().next().unwrap_or("").split(',').collect();
    let (la, lb): (Vec<&str>, Vec<&str>) = (ta.lines().collect(), tb.lines().collect());
    for i in 0..la.len().max(lb.len()) {
        let (ra, rb) = (la.get(i).copied().unwrap_or(""), lb.get(i).copied().unwrap_or(""));
        if ra == rb {
            continue;
        }
        let (ca, cb): (Vec<&str>, Vec<&str>) = (ra.split(',').collect(), rb.split(',').collect());
        for k in 0..ca.len().max(cb.len()) {
            let (va, vb) = (ca.get(k).copied().unwrap_or(""), cb.get(k).copied().unwrap_or(""));
            if va != vb {
                diffs.push(FieldDiff {
                    file: name.into(),
                    line: i + 1,
                    column: header.get(k).map_or_else(|| k.to_string(), |h| h.to_string()),
                    left: va.into(),
                    right: vb.into(),
                });
            }
        }
    }
}

fn diff_tolerant(name: &str, ta: &str, tb: &str, same_mode: bool, diffs: &mut Vec<FieldDiff>) {
    let header: Vec<&str> = ta.lines().next().unwrap_or("").split(',').collect();
    let pruned_col = header.iter().position(|h| *h == "pruned_mass");
    let (la, lb): (Vec<&str>, Vec<&str>) = (ta.lines().collect(), tb.lines().collect());
    for i in 0..la.len().max(lb.len()) {
        let (ca, cb): (Vec<&str>, Vec<&str>) = (
            la.get(i).map(|l| l.split(',').collect()).unwrap_or_default(),
            lb.get(i).map(|l| l.split(',').collect()).unwrap_or_default(),
        );
        let pruned = |c: &[&str]| pruned_col.and_then(|k| c.get(k)).and_then(|v| numeric(v)).unwrap_or(0.0);
        let tol = pruned(&ca).max(pruned(&cb)) + FLOAT_SLACK;
        for k in 0..ca.len().max(cb.len()) {
            let column = header.get(k).map_or_else(|| k.to_string(), |h| h.to_string());
            if i > 0 && !same_mode && MODE_DEPENDENT.contains(&column.as_str()) {
                continue;
            }
            let (va, vb) = (ca.get(k).copied().unwrap_or(""), cb.get(k).copied().unwrap_or(""));
            let equal = match (numeric(va), numeric(vb)) {
                (Some(x), Some(y)) if i > 0 => (x - y).abs() <= tol,
                _ => va == vb,
            };
            if !equal {
                diffs.push(FieldDiff { file: name.into(), line: i + 1, column, left: va.into(), right: vb.into() });
            }
        }
    }
}
