//! Fixed-format MPS export and a small reader for round-trip checks.
//!
//! Column `k` of the model is named `X` followed by `k` in seven digits (base
//! 36 past ten million), rows are `R…` likewise, so names always fit the
//! eight-character field and map back to model indices without a side table.
//! All columns are binary (`BV` bounds).

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::SolveError;
use crate::ilp::{MilpModel, Sense};

const OBJ_ROW: &str = "OBJ";

fn encode(prefix: char, k: usize) -> String {
    if k < 10_000_000 {
        return format!("{prefix}{k:07}");
    }
    // past ten million: 'Z' marker plus six base-36 digits
    let mut digits = [b'0'; 6];
    let mut n = k;
    for d in digits.iter_mut().rev() {
        *d = char::from_digit((n % 36) as u32, 36).unwrap().to_ascii_uppercase() as u8;
        n /= 36;
    }
    format!("{prefix}Z{}", std::str::from_utf8(&digits).unwrap())
}

pub fn column_name(k: usize) -> String {
    encode('X', k)
}

pub fn row_name(k: usize) -> String {
    encode('R', k)
}

/// Inverse of [`column_name`].
pub fn column_index(name: &str) -> Option<usize> {
    let body = name.strip_prefix('X')?;
    match body.strip_prefix('Z') {
        Some(wide) => usize::from_str_radix(wide, 36).ok(),
        None => body.parse().ok(),
    }
}

/// Shortest decimal form fitting the 12-character numeric field.
pub fn format_number(x: f64) -> String {
    let s = format!("{x}");
    if s.len() <= 12 {
        return s;
    }
    for precision in (0..=11).rev() {
        let s = format!("{x:.precision$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{x:e}")
}

#[derive(Debug, Clone)]
pub struct MpsDocument {
    pub text: String,
    pub columns: usize,
    pub rows: usize,
}

pub fn export_mps(model: &MilpModel) -> MpsDocument {
    let mut text = String::new();
    let _ = writeln!(text, "* vEPC placement model: {} columns, {} rows", model.num_vars(), model.constraints().len());
    let _ = writeln!(text, "NAME          VEPC");
    let _ = writeln!(text, "ROWS");
    let _ = writeln!(text, " N  {OBJ_ROW}");
    for (k, row) in model.constraints().iter().enumerate() {
        let t = match row.sense {
            Sense::Le => 'L',
            Sense::Eq => 'E',
            Sense::Ge => 'G',
        };
        let _ = writeln!(text, " {t}  {}", row_name(k));
    }

    // column-major view of the coefficient matrix
    let mut by_col: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.num_vars()];
    for &(c, v) in &model.objective.terms {
        by_col[v.0].push((OBJ_ROW.to_owned(), c));
    }
    for (k, row) in model.constraints().iter().enumerate() {
        for &(c, v) in &row.terms {
            by_col[v.0].push((row_name(k), c));
        }
    }
    let _ = writeln!(text, "COLUMNS");
    for (k, entries) in by_col.iter().enumerate() {
        let col = column_name(k);
        if entries.is_empty() {
            let _ = writeln!(text, "    {col:<8}  {OBJ_ROW:<8}  {:>12}", "0");
        }
        for (row, c) in entries {
            let _ = writeln!(text, "    {col:<8}  {row:<8}  {:>12}", format_number(*c));
        }
    }
    let _ = writeln!(text, "RHS");
    for (k, row) in model.constraints().iter().enumerate() {
        if row.rhs != 0.0 {
            let _ = writeln!(text, "    {:<8}  {:<8}  {:>12}", "RHS", row_name(k), format_number(row.rhs));
        }
    }
    let _ = writeln!(text, "BOUNDS");
    for k in 0..model.num_vars() {
        let _ = writeln!(text, " BV {:<8}  {}", "BND", column_name(k));
    }
    let _ = writeln!(text, "ENDATA");
    MpsDocument { text, columns: model.num_vars(), rows: model.constraints().len() }
}

/// Parsed MPS content, enough to compare against the exporting model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MpsModel {
    pub name: String,
    /// Constraint rows (objective excluded) with their sense letter.
    pub rows: Vec<(String, char)>,
    pub columns: Vec<String>,
    /// (column, row) → coefficient; the objective row is included.
    pub coefficients: BTreeMap<(String, String), f64>,
    pub rhs: BTreeMap<String, f64>,
    pub binaries: Vec<String>,
}

pub fn parse_mps(text: &str) -> Result<MpsModel, SolveError> {
    let bad = |line: usize, msg: &str| SolveError::Unparsable(format!("MPS line {}: {msg}", line + 1));
    let mut out = MpsModel::default();
    let mut section = String::new();
    let mut objective: Option<String> = None;
    let mut seen_cols: HashMap<String, ()> = HashMap::new();
    for (ln, line) in text.lines().enumerate() {
        if line.starts_with('*') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !line.starts_with(' ') && !line.starts_with('\t') {
            section = fields[0].to_owned();
            if section == "NAME" {
                out.name = fields.get(1).unwrap_or(&"").to_string();
            }
            if section == "ENDATA" {
                break;
            }
            continue;
        }
        match section.as_str() {
            "ROWS" => {
                let [t, name] = fields[..] else { return Err(bad(ln, "expected sense and name")) };
                let t = t.chars().next().unwrap_or(' ');
                if t == 'N' {
                    objective.get_or_insert_with(|| name.to_owned());
                } else if matches!(t, 'L' | 'E' | 'G') {
                    out.rows.push((name.to_owned(), t));
                } else {
                    return Err(bad(ln, "unknown row sense"));
                }
            }
            "COLUMNS" => {
                if fields.len() < 3 || fields.len().is_multiple_of(2) {
                    return Err(bad(ln, "expected column and row/value pairs"));
                }
                let col = fields[0].to_owned();
                if seen_cols.insert(col.clone(), ()).is_none() {
                    out.columns.push(col.clone());
                }
                for pair in fields[1..].chunks(2) {
                    let v: f64 = pair[1].parse().map_err(|_| bad(ln, "bad number"))?;
                    if v != 0.0 {
                        out.coefficients.insert((col.clone(), pair[0].to_owned()), v);
                    }
                }
            }
            "RHS" => {
                if fields.len() < 3 {
                    return Err(bad(ln, "expected set, row, value"));
                }
                for pair in fields[1..].chunks(2) {
                    let v: f64 = pair.get(1).ok_or_else(|| bad(ln, "dangling row"))?.parse().map_err(|_| bad(ln, "bad number"))?;
                    out.rhs.insert(pair[0].to_owned(), v);
                }
            }
            "BOUNDS" => {
                if fields.first() == Some(&"BV") && fields.len() >= 3 {
                    out.binaries.push(fields[2].to_owned());
                } else {
                    return Err(bad(ln, "only BV bounds are supported"));
                }
            }
            "RANGES" => return Err(bad(ln, "RANGES not supported")),
            _ => return Err(bad(ln, "data outside a section")),
        }
    }
    if section != "ENDATA" {
        return Err(SolveError::Unparsable("missing ENDATA".into()));
    }
    if let Some(obj) = objective {
        if obj != OBJ_ROW {
            // normalise so callers can look the objective up by a fixed name
            out.coefficients = std::mem::take(&mut out.coefficients)
                .into_iter()
                .map(|((c, r), v)| ((c, if r == obj { OBJ_ROW.to_owned() } else { r }), v))
                .collect();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ilp::{Family, Provenance, VarRef};
    use crate::model::NodeId;

    #[test]
    fn names_round_trip() {
        for k in [0, 1, 42, 9_999_999, 10_000_000, 123_456_789] {
            let name = column_name(k);
            assert!(name.len() <= 8, "{name}");
            assert_eq!(column_index(&name), Some(k), "{name}");
        }
    }

    #[test]
    fn numbers_fit_field() {
        for x in [1.0, 0.1 + 0.2, 224.0 * 0.7119 / 85.0, -1.0 / 3.0, 1e-12, 6.02e23] {
            let s = format_number(x);
            assert!(s.len() <= 12, "{s}");
            let back: f64 = s.parse().unwrap();
            assert!((back - x).abs() <= 1e-7 * x.abs(), "{x} -> {s}");
        }
        assert_eq!(format_number(60.0), "60");
    }

    #[test]
    fn empty_model_is_valid() {
        let doc = export_mps(&MilpModel::new());
        let parsed = parse_mps(&doc.text).unwrap();
        assert!(parsed.rows.is_empty() && parsed.columns.is_empty());
    }

    #[test]
    fn fixed_columns_line_up() {
        let mut m = MilpModel::new();
        let x = m.var(VarRef::NodeUsed { node: NodeId(1) });
        m.objective.terms.push((1.0, x));
        m.add_constraint([(1.0, x)], Sense::Ge, 1.0, Family::NodeCount, Provenance::default());
        let doc = export_mps(&m);
        let line = doc.text.lines().find(|l| l.contains("R0000000") && l.starts_with("    X")).unwrap();
        assert_eq!(&line[4..12], "X0000000");
        assert_eq!(&line[14..22], "R0000000");
        assert_eq!(line[24..36].trim(), "1");
        let parsed = parse_mps(&doc.text).unwrap();
        assert_eq!(parsed.rows, vec![("R0000000".to_owned(), 'G')]);
        assert_eq!(parsed.rhs["R0000000"], 1.0);
        assert_eq!(parsed.binaries, vec!["X0000000".to_owned()]);
    }
}
