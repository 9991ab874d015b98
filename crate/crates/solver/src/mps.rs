//! Fixed-format MPS export and import.
//!
//! The writer lays fields out at the classic fixed columns (2-3, 5-12,
//! 15-22, 25-36, 40-47, 50-61), one matrix entry per line, columns in index
//! order. Names longer than eight characters (or containing blanks) cannot
//! be represented, in which case every row and column is renamed `R<i>` /
//! `C<j>`. Numbers use the shortest representation that parses back to the
//! identical `f64`; a value that needs more than twelve characters widens
//! its field rather than being rounded.
//!
//! The reader is token based, so it accepts fixed and free layouts alike.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::lp::{RowSense, SparseLp, Triplet};
use crate::SolverError;

const OBJ_ROW: &str = "COST";

fn fits_fixed(name: &str) -> bool {
    !name.is_empty() && name.len() <= 8 && !name.chars().any(char::is_whitespace)
}

fn fmt_num(v: f64) -> String {
    let plain = format!("{v}");
    if plain.len() <= 12 {
        plain
    } else {
        format!("{v:e}")
    }
}

fn names_for(lp: &SparseLp) -> (Vec<String>, Vec<String>, String) {
    let unique = |names: &[String]| {
        let mut seen = std::collections::HashSet::new();
        names.iter().all(|s| seen.insert(s.as_str()))
    };
    let usable = lp.col_names.iter().chain(&lp.row_names).all(|s| fits_fixed(s))
        && unique(&lp.col_names)
        && unique(&lp.row_names);
    let (cols, rows) = if usable {
        (lp.col_names.clone(), lp.row_names.clone())
    } else {
        (
            (0..lp.num_cols()).map(|j| format!("C{j}")).collect(),
            (0..lp.num_rows()).map(|i| format!("R{i}")).collect::<Vec<_>>(),
        )
    };
    let mut obj = OBJ_ROW.to_string();
    let mut k = 0;
    while rows.contains(&obj) {
        k += 1;
        obj = format!("COST{k}");
    }
    (cols, rows, obj)
}

fn line2(out: &mut String, f1: &str, f2: &str, f3: &str, f4: &str) {
    let _ = writeln!(out, " {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}");
}

/// Renders `lp` as fixed-format MPS text.
pub fn to_mps_string(lp: &SparseLp) -> String {
    let (cols, rows, obj) = names_for(lp);
    let mut out = String::new();
    out.push_str("NAME          GAMESLP\n");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {obj}");
    for (i, name) in rows.iter().enumerate() {
        let t = match lp.senses[i] {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        let _ = writeln!(out, " {t}  {name}");
    }

    out.push_str("COLUMNS\n");
    let by_col = lp.columns();
    let mut in_int = false;
    for j in 0..lp.num_cols() {
        if lp.integer[j] != in_int {
            let tag = if lp.integer[j] { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARKER                 'MARKER'                 {tag}");
            in_int = lp.integer[j];
        }
        let mut wrote = false;
        if lp.cost[j] != 0.0 {
            line2(&mut out, "", &cols[j], &obj, &fmt_num(lp.cost[j]));
            wrote = true;
        }
        for &(i, v) in &by_col[j] {
            line2(&mut out, "", &cols[j], &rows[i], &fmt_num(v));
            wrote = true;
        }
        if !wrote {
            line2(&mut out, "", &cols[j], &obj, "0");
        }
    }
    if in_int {
        out.push_str("    MARKER                 'MARKER'                 'INTEND'\n");
    }

    out.push_str("RHS\n");
    if lp.obj_offset != 0.0 {
        line2(&mut out, "", "RHS", &obj, &fmt_num(-lp.obj_offset));
    }
    for (i, &b) in lp.rhs.iter().enumerate() {
        if b != 0.0 {
            line2(&mut out, "", "RHS", &rows[i], &fmt_num(b));
        }
    }

    out.push_str("RANGES\n");
    out.push_str("BOUNDS\n");
    for j in 0..lp.num_cols() {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let name = &cols[j];
        if lo == hi {
            line2(&mut out, "FX", "BND", name, &fmt_num(lo));
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let _ = writeln!(out, " FR BND       {name}");
            continue;
        }
        if lo == f64::NEG_INFINITY {
            let _ = writeln!(out, " MI BND       {name}");
        } else if lo != 0.0 || lo.is_sign_negative() {
            line2(&mut out, "LO", "BND", name, &fmt_num(lo));
        }
        if hi.is_finite() {
            line2(&mut out, "UP", "BND", name, &fmt_num(hi));
        } else if lp.integer[j] {
            let _ = writeln!(out, " PL BND       {name}");
        }
    }
    out.push_str("ENDATA\n");
    out
}

/// Writes `lp` to `path` in fixed-format MPS.
pub fn write_mps(lp: &SparseLp, path: impl AsRef<Path>) -> Result<(), SolverError> {
    std::fs::write(path, to_mps_string(lp))?;
    Ok(())
}

/// Reads an MPS file.
pub fn read_mps(path: impl AsRef<Path>) -> Result<SparseLp, SolverError> {
    let text = std::fs::read_to_string(path)?;
    parse_mps(&text)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    End,
}

fn perr(line: usize, msg: impl Into<String>) -> SolverError {
    SolverError::Parse { line, msg: msg.into() }
}

fn num(tok: &str, line: usize) -> Result<f64, SolverError> {
    tok.parse::<f64>()
        .map_err(|_| perr(line, format!("invalid number '{tok}'")))
}

/// Parses MPS text (fixed or free layout).
pub fn parse_mps(text: &str) -> Result<SparseLp, SolverError> {
    let mut lp = SparseLp::new();
    let mut section = Section::None;
    let mut obj_name: Option<String> = None;
    let mut maximize = false;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut entries: HashMap<(usize, usize), f64> = HashMap::new();
    let mut entry_order: Vec<(usize, usize)> = Vec::new();
    let mut ranges: Vec<(usize, f64)> = Vec::new();
    let mut in_int = false;
    let mut free_rows: std::collections::HashSet<String> = Default::default();

    for (ln0, raw) in text.lines().enumerate() {
        let ln = ln0 + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match toks[0] {
                "NAME" => Section::Name,
                "OBJSENSE" => {
                    if toks.get(1).is_some_and(|t| *t == "MAX" || *t == "MAXIMIZE") {
                        maximize = true;
                    }
                    Section::ObjSense
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(perr(ln, format!("unknown section '{other}'"))),
            };
            if section == Section::End {
                break;
            }
            continue;
        }
        match section {
            Section::None | Section::Name | Section::End => {
                return Err(perr(ln, "data line outside of a section"));
            }
            Section::ObjSense => {
                if toks[0] == "MAX" || toks[0] == "MAXIMIZE" {
                    maximize = true;
                }
            }
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(perr(ln, "ROWS entry needs a type and a name"));
                }
                let name = toks[1].to_string();
                let sense = match toks[0] {
                    "N" => {
                        if obj_name.is_none() {
                            obj_name = Some(name);
                        } else {
                            free_rows.insert(name);
                        }
                        continue;
                    }
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    t => return Err(perr(ln, format!("unknown row type '{t}'"))),
                };
                if row_index.contains_key(&name) {
                    return Err(perr(ln, format!("duplicate row '{name}'")));
                }
                row_index.insert(name.clone(), lp.rhs.len());
                lp.senses.push(sense);
                lp.rhs.push(0.0);
                lp.row_names.push(name);
            }
            Section::Columns => {
                if toks.len() >= 3 && toks[1] == "'MARKER'" {
                    match toks[2] {
                        "'INTORG'" => in_int = true,
                        "'INTEND'" => in_int = false,
                        t => return Err(perr(ln, format!("unknown marker {t}"))),
                    }
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(perr(ln, "COLUMNS entry needs 3 or 5 fields"));
                }
                let col = match col_index.get(toks[0]) {
                    Some(&c) => c,
                    None => {
                        let c = lp.add_col(toks[0], 0.0, 0.0, f64::INFINITY, in_int);
                        col_index.insert(toks[0].to_string(), c);
                        c
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let v = num(pair[1], ln)?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        lp.cost[col] = v;
                    } else if free_rows.contains(pair[0]) {
                        continue;
                    } else {
                        let &r = row_index
                            .get(pair[0])
                            .ok_or_else(|| perr(ln, format!("unknown row '{}'", pair[0])))?;
                        if entries.insert((r, col), v).is_some() {
                            return Err(perr(ln, "duplicate matrix entry"));
                        }
                        entry_order.push((r, col));
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                let body = if toks.len() % 2 == 1 { &toks[1..] } else { &toks[..] };
                if body.is_empty() {
                    return Err(perr(ln, "missing entries"));
                }
                for pair in body.chunks(2) {
                    if pair.len() != 2 {
                        return Err(perr(ln, "unpaired entry"));
                    }
                    let v = num(pair[1], ln)?;
                    if section == Section::Rhs && Some(pair[0]) == obj_name.as_deref() {
                        lp.obj_offset = -v;
                        continue;
                    }
                    let &r = row_index
                        .get(pair[0])
                        .ok_or_else(|| perr(ln, format!("unknown row '{}'", pair[0])))?;
                    if section == Section::Rhs {
                        lp.rhs[r] = v;
                    } else {
                        ranges.push((r, v));
                    }
                }
            }
            Section::Bounds => {
                let kind = toks[0];
                let needs_value = !matches!(kind, "FR" | "MI" | "PL" | "BV");
                let (col_tok, val_tok) = match (needs_value, toks.len()) {
                    (true, 4) => (toks[2], Some(toks[3])),
                    (true, 3) => (toks[1], Some(toks[2])),
                    (false, 3) => (toks[2], None),
                    (false, 2) => (toks[1], None),
                    (false, 4) if kind == "BV" => (toks[2], None),
                    _ => return Err(perr(ln, "malformed BOUNDS entry")),
                };
                let &c = col_index
                    .get(col_tok)
                    .ok_or_else(|| perr(ln, format!("unknown column '{col_tok}'")))?;
                let v = val_tok.map(|t| num(t, ln)).transpose()?;
                match kind {
                    "UP" => lp.upper[c] = v.unwrap_or(0.0),
                    "LO" => lp.lower[c] = v.unwrap_or(0.0),
                    "FX" => {
                        lp.lower[c] = v.unwrap_or(0.0);
                        lp.upper[c] = v.unwrap_or(0.0);
                    }
                    "FR" => {
                        lp.lower[c] = f64::NEG_INFINITY;
                        lp.upper[c] = f64::INFINITY;
                    }
                    "MI" => lp.lower[c] = f64::NEG_INFINITY,
                    "PL" => lp.upper[c] = f64::INFINITY,
                    "BV" => {
                        lp.lower[c] = 0.0;
                        lp.upper[c] = 1.0;
                        lp.integer[c] = true;
                    }
                    "LI" => {
                        lp.lower[c] = v.unwrap_or(0.0);
                        lp.integer[c] = true;
                    }
                    "UI" => {
                        lp.upper[c] = v.unwrap_or(0.0);
                        lp.integer[c] = true;
                    }
                    t => return Err(perr(ln, format!("unknown bound type '{t}'"))),
                }
            }
        }
    }
    if section != Section::End {
        return Err(perr(text.lines().count(), "missing ENDATA"));
    }

    if maximize {
        for c in &mut lp.cost {
            *c = -*c;
        }
        lp.obj_offset = -lp.obj_offset;
    }
    entry_order.sort_unstable();
    lp.triplets = entry_order
        .iter()
        .map(|&(row, col)| Triplet { row, col, value: entries[&(row, col)] })
        .collect();

    // A ranged row becomes the original row plus a mirrored copy.
    for (r, range) in ranges {
        let b = lp.rhs[r];
        let (lo, hi) = match lp.senses[r] {
            RowSense::Eq if range >= 0.0 => (b, b + range),
            RowSense::Eq => (b + range, b),
            RowSense::Le => (b - range.abs(), b),
            RowSense::Ge => (b, b + range.abs()),
        };
        lp.senses[r] = RowSense::Ge;
        lp.rhs[r] = lo;
        let coeffs: Vec<(usize, f64)> = lp
            .triplets
            .iter()
            .filter(|t| t.row == r)
            .map(|t| (t.col, t.value))
            .collect();
        let name = format!("{}_rng", lp.row_names[r]);
        lp.add_row(name, &coeffs, RowSense::Le, hi);
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_columns_are_wrapped_in_markers() {
        let mut lp = SparseLp::new();
        let x = lp.add_col("x", 1.0, 0.0, 3.0, true);
        let y = lp.add_col("y", 0.0, 0.0, f64::INFINITY, false);
        lp.add_row("c1", &[(x, 1.0), (y, 1.0)], RowSense::Le, 2.5);
        let text = to_mps_string(&lp);
        let start = text.find("'INTORG'").unwrap();
        let end = text.find("'INTEND'").unwrap();
        let block = &text[start..end];
        assert!(block.contains(" x "));
        assert!(!block.contains(" y "));
    }

    #[test]
    fn empty_objective_writes_no_cost_entries() {
        let mut lp = SparseLp::new();
        let x = lp.add_col("x", 0.0, 0.0, 1.0, false);
        lp.add_row("c1", &[(x, 2.0)], RowSense::Ge, 1.0);
        let text = to_mps_string(&lp);
        assert!(!text.lines().any(|l| l.contains("COST") && l.starts_with("    ")));
        let back = parse_mps(&text).unwrap();
        assert_eq!(back.cost, vec![0.0]);
    }

    #[test]
    fn missing_rhs_defaults_to_zero() {
        let text = "NAME t\nROWS\n N obj\n L r1\nCOLUMNS\n    x obj 1 r1 1\nRHS\nBOUNDS\nENDATA\n";
        let lp = parse_mps(text).unwrap();
        assert_eq!(lp.rhs, vec![0.0]);
        assert_eq!(lp.senses, vec![RowSense::Le]);
    }

    #[test]
    fn unknown_section_is_rejected_with_line_number() {
        let text = "NAME t\nROWS\n N obj\nFOO\nENDATA\n";
        match parse_mps(text) {
            Err(SolverError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ranges_split_into_two_rows() {
        let text = "NAME t\nROWS\n N obj\n L r1\nCOLUMNS\n    x obj 1 r1 1\nRHS\n    RHS r1 4\nRANGES\n    RNG r1 3\nENDATA\n";
        let lp = parse_mps(text).unwrap();
        assert_eq!(lp.num_rows(), 2);
        assert_eq!(lp.row_bounds(0), (1.0, f64::INFINITY));
        assert_eq!(lp.row_bounds(1), (f64::NEG_INFINITY, 4.0));
    }
}
