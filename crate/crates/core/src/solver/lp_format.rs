//! CPLEX-style LP text writer and reader.
//!
//! Numbers are written in shortest round-trip form, so export followed by
//! import reproduces every coefficient exactly. Every column gets a line in
//! `Bounds`, which keeps columns without coefficients declared.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::FormatError;
use crate::model::{MilpModel, Relation, VarKind};

const WRAP: usize = 78;

fn num(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "+inf".into() } else { "-inf".into() };
    }
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:?}")
    }
}

/// Appends `label terms...` with continuation lines kept under [`WRAP`].
fn write_terms(out: &mut String, label: &str, terms: &[(f64, &str)], tail: &str) {
    let mut line = format!(" {label}:");
    if terms.is_empty() {
        line.push_str(" 0");
    }
    for (k, &(a, name)) in terms.iter().enumerate() {
        let piece = match (k, a < 0.0) {
            (0, false) => format!(" {} {name}", num(a)),
            (0, true) => format!(" - {} {name}", num(-a)),
            (_, false) => format!(" + {} {name}", num(a)),
            (_, true) => format!(" - {} {name}", num(-a)),
        };
        if line.len() + piece.len() > WRAP {
            out.push_str(&line);
            out.push('\n');
            line = String::from("  ");
            line.push_str(piece.trim_start());
        } else {
            line.push_str(&piece);
        }
    }
    if !tail.is_empty() {
        if line.len() + tail.len() + 1 > WRAP {
            out.push_str(&line);
            out.push('\n');
            line = String::from(" ");
        }
        line.push(' ');
        line.push_str(tail);
    }
    out.push_str(&line);
    out.push('\n');
}

fn write_names(out: &mut String, names: &[&str]) {
    let mut line = String::new();
    for name in names {
        if !line.is_empty() && line.len() + name.len() + 1 > WRAP {
            out.push_str(&line);
            out.push('\n');
            line.clear();
        }
        line.push(' ');
        line.push_str(name);
    }
    if !line.is_empty() {
        out.push_str(&line);
        out.push('\n');
    }
}

pub fn export_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ Problem name: {}", model.name);
    out.push_str("Minimize\n");
    let obj: Vec<(f64, &str)> = model
        .objective
        .iter()
        .zip(&model.variables)
        .filter(|(c, _)| **c != 0.0)
        .map(|(&c, v)| (c, v.name.as_str()))
        .collect();
    write_terms(&mut out, "obj", &obj, "");

    out.push_str("Subject To\n");
    for c in &model.constraints {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for &(j, a) in &c.terms {
            *merged.entry(j).or_insert(0.0) += a;
        }
        let terms: Vec<(f64, &str)> =
            merged.into_iter().filter(|e| e.1 != 0.0).map(|(j, a)| (a, model.variables[j].name.as_str())).collect();
        let tail = format!("{} {}", c.relation, num(c.rhs));
        write_terms(&mut out, &c.name, &terms, &tail);
    }

    out.push_str("Bounds\n");
    for v in &model.variables {
        let line = match (v.lower, v.upper) {
            (lo, up) if lo == up => format!(" {} = {}", v.name, num(lo)),
            (lo, up) if lo == f64::NEG_INFINITY && up == f64::INFINITY => format!(" {} free", v.name),
            (lo, up) if up == f64::INFINITY => format!(" {} >= {}", v.name, num(lo)),
            (lo, up) => format!(" {} <= {} <= {}", num(lo), v.name, num(up)),
        };
        out.push_str(&line);
        out.push('\n');
    }

    let generals: Vec<&str> =
        model.variables.iter().filter(|v| v.kind == VarKind::Integer).map(|v| v.name.as_str()).collect();
    if !generals.is_empty() {
        out.push_str("Generals\n");
        write_names(&mut out, &generals);
    }
    let binaries: Vec<&str> =
        model.variables.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        write_names(&mut out, &binaries);
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Id(String),
    Sign(f64),
    Rel(Relation),
    Colon,
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Tok>, FormatError> {
    let err = |message: String| FormatError::Parse { line, message };
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        match c {
            _ if c.is_whitespace() => k += 1,
            '+' => {
                toks.push(Tok::Sign(1.0));
                k += 1;
            }
            '-' => {
                toks.push(Tok::Sign(-1.0));
                k += 1;
            }
            ':' => {
                toks.push(Tok::Colon);
                k += 1;
            }
            '<' | '>' | '=' => {
                let mut op = String::from(c);
                k += 1;
                if k < chars.len() && matches!(chars[k], '<' | '>' | '=') {
                    op.push(chars[k]);
                    k += 1;
                }
                let rel = match op.as_str() {
                    "<" | "<=" | "=<" => Relation::Le,
                    ">" | ">=" | "=>" => Relation::Ge,
                    "=" | "==" => Relation::Eq,
                    _ => return Err(err(format!("bad operator {op}"))),
                };
                toks.push(Tok::Rel(rel));
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = k;
                while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                    k += 1;
                }
                if k < chars.len() && matches!(chars[k], 'e' | 'E') {
                    let mut e = k + 1;
                    if e < chars.len() && matches!(chars[e], '+' | '-') {
                        e += 1;
                    }
                    if e < chars.len() && chars[e].is_ascii_digit() {
                        k = e;
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                    }
                }
                let s: String = chars[start..k].iter().collect();
                toks.push(Tok::Num(s.parse().map_err(|_| err(format!("bad number '{s}'")))?));
            }
            _ => {
                let start = k;
                while k < chars.len()
                    && !chars[k].is_whitespace()
                    && !matches!(chars[k], '+' | '-' | ':' | '<' | '>' | '=')
                {
                    k += 1;
                }
                toks.push(Tok::Id(chars[start..k].iter().collect()));
            }
        }
    }
    Ok(toks)
}

fn is_inf(name: &str) -> bool {
    matches!(name.to_ascii_lowercase().as_str(), "inf" | "infinity")
}

/// Terms, constant, tokens consumed.
type Linear = (Vec<(f64, String)>, f64, usize);

/// Parses `[sign] [coef] name ...` up to the end of `toks` or a relation.
fn parse_linear(toks: &[Tok], line: usize) -> Result<Linear, FormatError> {
    let err = |message: &str| FormatError::Parse { line, message: message.to_string() };
    let mut terms = Vec::new();
    let mut constant = 0.0;
    let mut k = 0;
    while k < toks.len() {
        if matches!(toks[k], Tok::Rel(_)) {
            break;
        }
        let mut sign = 1.0;
        while let Some(Tok::Sign(s)) = toks.get(k) {
            sign *= s;
            k += 1;
        }
        let mut coef = 1.0;
        let mut had_num = false;
        if let Some(Tok::Num(v)) = toks.get(k) {
            coef = *v;
            had_num = true;
            k += 1;
        }
        match toks.get(k) {
            Some(Tok::Id(name)) => {
                terms.push((sign * coef, name.clone()));
                k += 1;
            }
            _ if had_num => constant += sign * coef,
            _ => return Err(err("expected a term")),
        }
    }
    Ok((terms, constant, k))
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Start,
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
}

fn section_keyword(line: &str) -> Option<Section> {
    let lower = line.trim().to_ascii_lowercase();
    let words: Vec<&str> = lower.split_whitespace().collect();
    match words[..] {
        ["minimize"] | ["minimise"] | ["minimum"] | ["min"] => Some(Section::Objective),
        ["subject", "to"] | ["such", "that"] | ["st"] | ["s.t."] => Some(Section::Constraints),
        ["bounds"] | ["bound"] => Some(Section::Bounds),
        ["generals"] | ["general"] | ["gen"] => Some(Section::Generals),
        ["binaries"] | ["binary"] | ["bin"] => Some(Section::Binaries),
        _ => None,
    }
}

/// Splits a section's token stream into labelled statements. A statement
/// ends after the number following a relation.
fn statements(toks: &[(Tok, usize)]) -> Vec<(Option<String>, Vec<Tok>, usize)> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < toks.len() {
        let line = toks[k].1;
        let mut name = None;
        if let (Tok::Id(id), Some((Tok::Colon, _))) = (&toks[k].0, toks.get(k + 1)) {
            name = Some(id.clone());
            k += 2;
        }
        let mut body = Vec::new();
        let mut seen_rel = false;
        while k < toks.len() {
            let t = toks[k].0.clone();
            // A new label starts the next statement.
            if matches!(t, Tok::Id(_)) && matches!(toks.get(k + 1), Some((Tok::Colon, _))) {
                break;
            }
            k += 1;
            let done = seen_rel && matches!(t, Tok::Num(_) | Tok::Id(_));
            if matches!(t, Tok::Rel(_)) {
                seen_rel = true;
            }
            body.push(t);
            if done {
                break;
            }
        }
        out.push((name, body, line));
    }
    out
}

pub fn import_lp(text: &str) -> Result<MilpModel, FormatError> {
    let mut name = String::new();
    let mut section = Section::Start;
    let mut obj_toks: Vec<(Tok, usize)> = Vec::new();
    let mut row_toks: Vec<(Tok, usize)> = Vec::new();
    let mut bound_lines: Vec<(Vec<Tok>, usize)> = Vec::new();
    let mut generals: Vec<String> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();
    let mut ended = false;

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let (content, comment) = match raw.split_once('\\') {
            Some((c, rest)) => (c, Some(rest)),
            None => (raw, None),
        };
        if let Some(rest) = comment {
            if let Some(n) = rest.trim().strip_prefix("Problem name:") {
                name = n.trim().to_string();
            }
        }
        if content.trim().is_empty() {
            continue;
        }
        if content.trim().eq_ignore_ascii_case("end") {
            ended = true;
            break;
        }
        let lower = content.trim().to_ascii_lowercase();
        if matches!(lower.as_str(), "maximize" | "maximise" | "maximum" | "max") {
            return Err(FormatError::Parse { line: line_no, message: "maximization is not supported".into() });
        }
        if let Some(s) = section_keyword(content) {
            section = s;
            continue;
        }
        let toks = tokenize(content, line_no)?;
        match section {
            Section::Start => {
                return Err(FormatError::Parse { line: line_no, message: "expected Minimize".into() });
            }
            Section::Objective => obj_toks.extend(toks.into_iter().map(|t| (t, line_no))),
            Section::Constraints => row_toks.extend(toks.into_iter().map(|t| (t, line_no))),
            Section::Bounds => bound_lines.push((toks, line_no)),
            Section::Generals | Section::Binaries => {
                for t in toks {
                    let Tok::Id(id) = t else {
                        return Err(FormatError::Parse { line: line_no, message: "expected a variable name".into() });
                    };
                    if section == Section::Generals {
                        generals.push(id);
                    } else {
                        binaries.push(id);
                    }
                }
            }
        }
    }
    if !ended {
        return Err(FormatError::Parse { line: text.lines().count(), message: "missing End".into() });
    }

    let mut model = MilpModel::new(name);
    let mut cols: HashMap<String, usize> = HashMap::new();
    let mut col = |model: &mut MilpModel, name: &str| -> usize {
        *cols
            .entry(name.to_string())
            .or_insert_with(|| model.add_var(name.to_string(), VarKind::Continuous, 0.0, f64::INFINITY, 0.0))
    };

    for (_, body, line) in statements(&obj_toks) {
        let (terms, constant, used) = parse_linear(&body, line)?;
        if used != body.len() || constant != 0.0 {
            return Err(FormatError::Parse { line, message: "unsupported objective".into() });
        }
        for (a, v) in terms {
            let j = col(&mut model, &v);
            model.objective[j] += a;
        }
    }

    let mut row_names = std::collections::HashSet::new();
    for (k, (label, body, line)) in statements(&row_toks).into_iter().enumerate() {
        let (terms, constant, used) = parse_linear(&body, line)?;
        let err = |message: &str| FormatError::Parse { line, message: message.to_string() };
        let Some(Tok::Rel(rel)) = body.get(used) else {
            return Err(err("constraint without relation"));
        };
        let rhs = match &body[used + 1..] {
            [Tok::Num(v)] => *v,
            [Tok::Sign(s), Tok::Num(v)] => s * v,
            _ => return Err(err("expected a numeric right-hand side")),
        };
        let row_name = label.unwrap_or_else(|| format!("R{}", k + 1));
        if !row_names.insert(row_name.clone()) {
            return Err(err("duplicate row name"));
        }
        let mut idx = Vec::with_capacity(terms.len());
        for (a, v) in terms {
            idx.push((col(&mut model, &v), a));
        }
        model.add_constraint(row_name, idx, *rel, rhs - constant);
    }

    for (toks, line) in bound_lines {
        let err = |message: &str| FormatError::Parse { line, message: message.to_string() };
        // Fold signs into the values they precede.
        let mut items: Vec<Tok> = Vec::new();
        let mut k = 0;
        while k < toks.len() {
            match (&toks[k], toks.get(k + 1)) {
                (Tok::Sign(s), Some(Tok::Num(v))) => {
                    items.push(Tok::Num(s * v));
                    k += 2;
                }
                (Tok::Sign(s), Some(Tok::Id(id))) if is_inf(id) => {
                    items.push(Tok::Num(s * f64::INFINITY));
                    k += 2;
                }
                (t, _) => {
                    items.push(t.clone());
                    k += 1;
                }
            }
        }
        let value = |t: &Tok| match t {
            Tok::Num(v) => Some(*v),
            Tok::Id(id) if is_inf(id) => Some(f64::INFINITY),
            _ => None,
        };
        match &items[..] {
            [Tok::Id(v), Tok::Id(kw)] if kw.eq_ignore_ascii_case("free") => {
                let j = col(&mut model, v);
                model.variables[j].lower = f64::NEG_INFINITY;
                model.variables[j].upper = f64::INFINITY;
            }
            [lo, Tok::Rel(Relation::Le), Tok::Id(v), Tok::Rel(Relation::Le), up] if value(lo).is_some() => {
                let (lo, up) = (value(lo).unwrap(), value(up).ok_or_else(|| err("bad upper bound"))?);
                let j = col(&mut model, v);
                model.variables[j].lower = lo;
                model.variables[j].upper = up;
            }
            [Tok::Id(v), Tok::Rel(rel), b] if value(b).is_some() => {
                let b = value(b).unwrap();
                let j = col(&mut model, v);
                match rel {
                    Relation::Le => model.variables[j].upper = b,
                    Relation::Ge => model.variables[j].lower = b,
                    Relation::Eq => {
                        model.variables[j].lower = b;
                        model.variables[j].upper = b;
                    }
                }
            }
            [b, Tok::Rel(rel), Tok::Id(v)] if value(b).is_some() => {
                let b = value(b).unwrap();
                let j = col(&mut model, v);
                match rel {
                    Relation::Le => model.variables[j].lower = b,
                    Relation::Ge => model.variables[j].upper = b,
                    Relation::Eq => {
                        model.variables[j].lower = b;
                        model.variables[j].upper = b;
                    }
                }
            }
            _ => return Err(err("unrecognized bound")),
        }
    }

    for v in generals {
        let j = col(&mut model, &v);
        model.variables[j].kind = VarKind::Integer;
    }
    for v in binaries {
        let j = col(&mut model, &v);
        let var = &mut model.variables[j];
        var.kind = VarKind::Binary;
        var.lower = var.lower.max(0.0);
        var.upper = var.upper.min(1.0);
    }
    Ok(model)
}
