//! Fixed-form MPS writer and reader.
//!
//! Numbers are written with at most 12 significant digits in a 12-character
//! field, so a model read back equals the original rounded to that precision
//! and a second round trip is exact.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::FormatError;
use crate::fmt::format_fit;
use crate::model::{MilpModel, Relation, VarKind};

const OBJ_ROW: &str = "OBJ";
const NAME_WIDTH: usize = 8;
const NUM_WIDTH: usize = 12;
const NUM_SIG: usize = 12;

fn num(x: f64) -> String {
    format_fit(x, NUM_SIG, NUM_WIDTH)
}

fn check_name(name: &str) -> Result<(), FormatError> {
    if name.is_empty() || name.len() > NAME_WIDTH || name.contains(char::is_whitespace) {
        return Err(FormatError::NameTooLong(name.to_string()));
    }
    Ok(())
}

/// One data line: type code in columns 2-3, names in 5-12 and 15-22,
/// numbers in 25-36 and 50-61.
fn field_line(out: &mut String, code: &str, name1: &str, name2: &str, value: Option<f64>) {
    let mut line = format!(" {code:<2} {name1:<8}  {name2:<8}");
    if let Some(v) = value {
        let _ = write!(line, "  {:>12}", num(v));
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

pub fn export_mps(model: &MilpModel) -> Result<String, FormatError> {
    check_name(OBJ_ROW)?;
    for v in &model.variables {
        check_name(&v.name)?;
    }
    for c in &model.constraints {
        check_name(&c.name)?;
    }
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", model.name);
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for c in &model.constraints {
        let code = match c.relation {
            Relation::Le => "L",
            Relation::Eq => "E",
            Relation::Ge => "G",
        };
        let _ = writeln!(out, " {code}  {}", c.name);
    }

    // Column-major coefficients, duplicates summed, zeros dropped.
    let mut by_col: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); model.n_vars()];
    for (r, c) in model.constraints.iter().enumerate() {
        for &(j, a) in &c.terms {
            *by_col[j].entry(r).or_insert(0.0) += a;
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0;
    for (j, v) in model.variables.iter().enumerate() {
        if v.kind.is_integral() != in_int {
            in_int = !in_int;
            let tag = if in_int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    M{marker:<7}  'MARKER'                 {tag}");
            marker += 1;
        }
        let cost = model.objective[j];
        let entries: Vec<(usize, f64)> = by_col[j].iter().map(|(&r, &a)| (r, a)).filter(|e| e.1 != 0.0).collect();
        if cost != 0.0 || entries.is_empty() {
            field_line(&mut out, "", &v.name, OBJ_ROW, Some(cost));
        }
        for (r, a) in entries {
            field_line(&mut out, "", &v.name, &model.constraints[r].name, Some(a));
        }
    }
    if in_int {
        let _ = writeln!(out, "    M{marker:<7}  'MARKER'                 'INTEND'");
    }

    out.push_str("RHS\n");
    for c in &model.constraints {
        if c.rhs != 0.0 {
            field_line(&mut out, "", "RHS", &c.name, Some(c.rhs));
        }
    }

    let mut bounds = String::new();
    for v in &model.variables {
        let (lo, up) = (v.lower, v.upper);
        if v.kind == VarKind::Binary && lo == 0.0 && up == 1.0 {
            field_line(&mut bounds, "BV", "BND", &v.name, None);
            continue;
        }
        if lo == up {
            field_line(&mut bounds, "FX", "BND", &v.name, Some(lo));
            continue;
        }
        match (lo.is_finite(), up.is_finite()) {
            (false, false) => field_line(&mut bounds, "FR", "BND", &v.name, None),
            (false, true) => {
                field_line(&mut bounds, "MI", "BND", &v.name, None);
                field_line(&mut bounds, "UP", "BND", &v.name, Some(up));
            }
            (true, _) => {
                if lo != 0.0 {
                    field_line(&mut bounds, "LO", "BND", &v.name, Some(lo));
                }
                if up.is_finite() {
                    field_line(&mut bounds, "UP", "BND", &v.name, Some(up));
                } else if v.kind.is_integral() {
                    // Some readers default integer upper bounds to 1.
                    field_line(&mut bounds, "PL", "BND", &v.name, None);
                }
            }
        }
    }
    if !bounds.is_empty() {
        out.push_str("BOUNDS\n");
        out.push_str(&bounds);
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
}

/// Reads MPS text. Fields are split on whitespace, so both fixed and free
/// form files without embedded blanks are accepted.
pub fn import_mps(text: &str) -> Result<MilpModel, FormatError> {
    let mut model = MilpModel::new("");
    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut in_int = false;
    let mut ended = false;

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let err = |message: String| FormatError::Parse { line: line_no, message };
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match fields[0] {
                "NAME" => {
                    model.name = fields.get(1).copied().unwrap_or("").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => return Err(err(format!("unknown section {other}"))),
            };
            continue;
        }
        let parse_num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number '{s}'")));
        match section {
            Section::None => return Err(err("data line outside a section".into())),
            Section::Rows => {
                let [code, name] = fields[..] else {
                    return Err(err("expected row type and name".into()));
                };
                let relation = match code {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(name.to_string());
                        }
                        continue;
                    }
                    "L" => Relation::Le,
                    "G" => Relation::Ge,
                    "E" => Relation::Eq,
                    other => return Err(err(format!("unknown row type {other}"))),
                };
                if row_index.insert(name.to_string(), model.constraints.len()).is_some() {
                    return Err(err(format!("duplicate row {name}")));
                }
                model.add_constraint(name.to_string(), vec![], relation, 0.0);
            }
            Section::Columns => {
                if fields.get(1) == Some(&"'MARKER'") {
                    match fields.get(2).copied() {
                        Some("'INTORG'") => in_int = true,
                        Some("'INTEND'") => in_int = false,
                        _ => return Err(err("bad marker line".into())),
                    }
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err("expected column, row, value [, row, value]".into()));
                }
                let col = fields[0];
                let j = match col_index.get(col) {
                    Some(&j) => j,
                    None => {
                        let kind = if in_int { VarKind::Integer } else { VarKind::Continuous };
                        let j = model.add_var(col.to_string(), kind, 0.0, f64::INFINITY, 0.0);
                        col_index.insert(col.to_string(), j);
                        j
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let value = parse_num(pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        model.objective[j] += value;
                    } else {
                        let &r = row_index.get(pair[0]).ok_or_else(|| err(format!("unknown row {}", pair[0])))?;
                        model.constraints[r].terms.push((j, value));
                    }
                }
            }
            Section::Rhs => {
                // The RHS set name is optional in free form.
                let pairs = if fields.len() % 2 == 1 { &fields[1..] } else { &fields[..] };
                for pair in pairs.chunks(2) {
                    let value = parse_num(pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        continue;
                    }
                    let &r = row_index.get(pair[0]).ok_or_else(|| err(format!("unknown row {}", pair[0])))?;
                    model.constraints[r].rhs = value;
                }
            }
            Section::Ranges => return Err(err("RANGES are not supported".into())),
            Section::Bounds => {
                let (code, col, value) = match fields[..] {
                    [code, _, col, value] => (code, col, Some(parse_num(value)?)),
                    [code, _, col] => (code, col, None),
                    _ => return Err(err("expected bound type, set, column [, value]".into())),
                };
                let &j = col_index.get(col).ok_or_else(|| err(format!("unknown column {col}")))?;
                let need = |v: Option<f64>| v.ok_or_else(|| err(format!("{code} bound needs a value")));
                let v = &mut model.variables[j];
                match code {
                    "UP" => v.upper = need(value)?,
                    "LO" => v.lower = need(value)?,
                    "FX" => {
                        let x = need(value)?;
                        v.lower = x;
                        v.upper = x;
                    }
                    "FR" => {
                        v.lower = f64::NEG_INFINITY;
                        v.upper = f64::INFINITY;
                    }
                    "MI" => v.lower = f64::NEG_INFINITY,
                    "PL" => v.upper = f64::INFINITY,
                    "BV" => {
                        v.kind = VarKind::Binary;
                        v.lower = 0.0;
                        v.upper = 1.0;
                    }
                    other => return Err(err(format!("unknown bound type {other}"))),
                }
            }
        }
    }
    if !ended {
        return Err(FormatError::Parse { line: text.lines().count(), message: "missing ENDATA".into() });
    }
    Ok(model)
}
