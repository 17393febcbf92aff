//! MPS reader and writer.
//!
//! Free format is the native dialect; fixed-format files are read by the same
//! whitespace tokenizer, which works as long as names contain no spaces.
//! Section headers are recognised only when they start in column one, so a
//! column called `RHS` inside the COLUMNS section is fine. Integrality markers
//! are skipped: the LP relaxation is what gets solved.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, ObjSense, RowSense};
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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

#[derive(Debug, Clone, Copy)]
enum RowKind {
    Objective,
    Free,
    Constraint(usize),
}

struct Builder<T> {
    name: String,
    sense: ObjSense,
    obj_row: Option<String>,
    row_index: HashMap<String, RowKind>,
    row_names: Vec<String>,
    row_senses: Vec<RowSense>,
    rhs: Vec<T>,
    ranges: Vec<Option<T>>,
    col_index: HashMap<String, usize>,
    col_names: Vec<String>,
    objective: Vec<T>,
    lower: Vec<T>,
    upper: Vec<T>,
    offset: T,
    entries: HashMap<(usize, usize), T>,
    triplets: Vec<(usize, usize, T)>,
}

fn err<V>(line: usize, message: impl Into<String>) -> Result<V> {
    Err(Error::Mps {
        line,
        message: message.into(),
    })
}

fn parse_number<T: Scalar>(tok: &str, line: usize) -> Result<T> {
    let cleaned: String = tok.chars().map(|c| if c == 'd' || c == 'D' { 'e' } else { c }).collect();
    let lower = cleaned.to_ascii_lowercase();
    let v = match lower.as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" | "1e30" | "1e+30" => f64::INFINITY,
        "-inf" | "-infinity" | "-1e30" | "-1e+30" => f64::NEG_INFINITY,
        _ => match cleaned.parse::<f64>() {
            Ok(v) if v.is_nan() => return err(line, format!("NaN value `{tok}`")),
            Ok(v) if v >= 1e30 => f64::INFINITY,
            Ok(v) if v <= -1e30 => f64::NEG_INFINITY,
            Ok(v) => v,
            Err(_) => return err(line, format!("cannot parse number `{tok}`")),
        },
    };
    Ok(T::lit(v))
}

impl<T: Scalar> Builder<T> {
    fn new() -> Self {
        Self {
            name: String::new(),
            sense: ObjSense::Min,
            obj_row: None,
            row_index: HashMap::new(),
            row_names: Vec::new(),
            row_senses: Vec::new(),
            rhs: Vec::new(),
            ranges: Vec::new(),
            col_index: HashMap::new(),
            col_names: Vec::new(),
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            offset: T::zero(),
            entries: HashMap::new(),
            triplets: Vec::new(),
        }
    }

    fn row(&self, name: &str, line: usize) -> Result<RowKind> {
        match self.row_index.get(name) {
            Some(&k) => Ok(k),
            None => err(line, format!("unknown row `{name}`")),
        }
    }

    fn add_row(&mut self, kind: &str, name: &str, line: usize) -> Result<()> {
        if self.row_index.contains_key(name) {
            return err(line, format!("duplicate row name `{name}`"));
        }
        let sense = match kind.to_ascii_uppercase().as_str() {
            "N" => {
                let k = match &self.obj_row {
                    None => {
                        self.obj_row = Some(name.to_string());
                        RowKind::Objective
                    }
                    Some(obj) if obj == name => RowKind::Objective,
                    Some(_) => RowKind::Free,
                };
                self.row_index.insert(name.to_string(), k);
                return Ok(());
            }
            "L" => RowSense::Le,
            "G" => RowSense::Ge,
            "E" => RowSense::Eq,
            other => return err(line, format!("unknown row type `{other}`")),
        };
        let i = self.row_names.len();
        self.row_index.insert(name.to_string(), RowKind::Constraint(i));
        self.row_names.push(name.to_string());
        self.row_senses.push(sense);
        self.rhs.push(T::zero());
        self.ranges.push(None);
        Ok(())
    }

    fn column(&mut self, name: &str) -> usize {
        if let Some(&j) = self.col_index.get(name) {
            return j;
        }
        let j = self.col_names.len();
        self.col_index.insert(name.to_string(), j);
        self.col_names.push(name.to_string());
        self.objective.push(T::zero());
        self.lower.push(T::zero());
        self.upper.push(T::infinity());
        j
    }

    fn add_coefficient(&mut self, col: usize, row: &str, val: T, line: usize) -> Result<()> {
        match self.row(row, line)? {
            RowKind::Objective => self.objective[col] += val,
            RowKind::Free => {}
            RowKind::Constraint(i) => {
                if self.entries.insert((i, col), val).is_some() {
                    return err(line, format!("duplicate entry for row `{row}` in column `{}`", self.col_names[col]));
                }
                self.triplets.push((i, col, val));
            }
        }
        Ok(())
    }

    fn set_rhs(&mut self, row: &str, val: T, line: usize) -> Result<()> {
        match self.row(row, line)? {
            RowKind::Objective => self.offset = -val,
            RowKind::Free => {}
            RowKind::Constraint(i) => self.rhs[i] = val,
        }
        Ok(())
    }

    fn set_range(&mut self, row: &str, val: T, line: usize) -> Result<()> {
        match self.row(row, line)? {
            RowKind::Constraint(i) => self.ranges[i] = Some(val),
            _ => return err(line, format!("RANGES entry on objective/free row `{row}`")),
        }
        Ok(())
    }

    fn set_bound(&mut self, kind: &str, col: &str, val: Option<T>, line: usize) -> Result<()> {
        let Some(&j) = self.col_index.get(col) else {
            return err(line, format!("bound on unknown column `{col}`"));
        };
        let need = |v: Option<T>| -> Result<T> {
            match v {
                Some(v) => Ok(v),
                None => err(line, format!("bound type {kind} needs a value")),
            }
        };
        let inf = T::infinity();
        match kind {
            "UP" | "UI" => {
                let v = need(val)?;
                self.upper[j] = v;
                // Common convention: a negative upper bound on a column with
                // the default lower bound makes the column unbounded below.
                if v < T::zero() && self.lower[j] == T::zero() {
                    self.lower[j] = -inf;
                }
            }
            "LO" | "LI" => self.lower[j] = need(val)?,
            "FX" => {
                let v = need(val)?;
                self.lower[j] = v;
                self.upper[j] = v;
            }
            "FR" => {
                self.lower[j] = -inf;
                self.upper[j] = inf;
            }
            "MI" => self.lower[j] = -inf,
            "PL" => self.upper[j] = inf,
            "BV" => {
                self.lower[j] = T::zero();
                self.upper[j] = T::one();
            }
            other => return err(line, format!("unsupported bound type `{other}`")),
        }
        Ok(())
    }

    fn finish(self) -> Result<LinearProgram<T>> {
        let m = self.row_names.len();
        let n = self.col_names.len();
        let matrix = SparseMatrix::from_triplets(m, n, &self.triplets)?;
        let lp = LinearProgram {
            name: self.name,
            sense: self.sense,
            objective: self.objective,
            obj_offset: self.offset,
            matrix,
            rhs: self.rhs,
            row_senses: self.row_senses,
            ranges: self.ranges,
            col_lower: self.lower,
            col_upper: self.upper,
            row_names: self.row_names,
            col_names: self.col_names,
        };
        lp.validate()?;
        Ok(lp)
    }
}

/// Parses MPS text. See the module docs for the accepted dialect.
pub fn parse_mps<T: Scalar>(text: &str) -> Result<LinearProgram<T>> {
    let mut b = Builder::<T>::new();
    let mut section = Section::None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed_end = raw.trim_end();
        if trimmed_end.trim().is_empty() || trimmed_end.starts_with('*') {
            continue;
        }
        let is_header = !raw.starts_with(' ') && !raw.starts_with('\t');
        let toks: Vec<&str> = trimmed_end.split_whitespace().collect();

        if is_header {
            let head = toks[0].to_ascii_uppercase();
            section = match head.as_str() {
                "NAME" => {
                    b.name = toks[1..].join(" ");
                    Section::Name
                }
                "OBJSENSE" => {
                    if let Some(s) = toks.get(1) {
                        b.sense = parse_sense(s, line)?;
                    }
                    Section::ObjSense
                }
                "OBJSENSE:" => Section::ObjSense,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                "OBJNAME" => {
                    if let Some(s) = toks.get(1) {
                        b.obj_row = Some(s.to_string());
                    }
                    Section::Name
                }
                other => return err(line, format!("unknown section `{other}`")),
            };
            if section == Section::End {
                break;
            }
            continue;
        }

        match section {
            Section::None | Section::End => return err(line, "data line outside any section"),
            Section::Name => return err(line, "unexpected data after NAME"),
            Section::ObjSense => b.sense = parse_sense(toks[0], line)?,
            Section::Rows => {
                if toks.len() != 2 {
                    return err(line, "ROWS entry needs a type and a name");
                }
                b.add_row(toks[0], toks[1], line)?;
            }
            Section::Columns => {
                if toks.len() >= 3 && toks[1].trim_matches('\'').eq_ignore_ascii_case("MARKER") {
                    let kind = toks[2].trim_matches('\'').to_ascii_uppercase();
                    if kind != "INTORG" && kind != "INTEND" {
                        return err(line, format!("unknown marker `{kind}`"));
                    }
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return err(line, "COLUMNS entry needs a column and one or two (row, value) pairs");
                }
                let j = b.column(toks[0]);
                for pair in toks[1..].chunks(2) {
                    let v = parse_number::<T>(pair[1], line)?;
                    if !v.is_finite() {
                        return err(line, "infinite matrix coefficient");
                    }
                    b.add_coefficient(j, pair[0], v, line)?;
                }
            }
            Section::Rhs | Section::Ranges => {
                let pairs = match toks.len() {
                    2 | 4 => &toks[..],
                    3 | 5 => &toks[1..],
                    _ => return err(line, "RHS/RANGES entry needs one or two (row, value) pairs"),
                };
                for pair in pairs.chunks(2) {
                    let v = parse_number::<T>(pair[1], line)?;
                    if !v.is_finite() {
                        return err(line, "infinite RHS/RANGES value");
                    }
                    if section == Section::Rhs {
                        b.set_rhs(pair[0], v, line)?;
                    } else {
                        b.set_range(pair[0], v, line)?;
                    }
                }
            }
            Section::Bounds => {
                let kind = toks[0].to_ascii_uppercase();
                let valueless = matches!(kind.as_str(), "FR" | "MI" | "PL" | "BV");
                let (col, val) = match (valueless, toks.len()) {
                    (true, 2) => (toks[1], None),
                    (true, 3) => (toks[2], None),
                    // BV sometimes carries a dummy value
                    (true, 4) => (toks[2], None),
                    (false, 3) => (toks[1], Some(toks[2])),
                    (false, 4) => (toks[2], Some(toks[3])),
                    _ => return err(line, "malformed BOUNDS entry"),
                };
                let val = val.map(|v| parse_number::<T>(v, line)).transpose()?;
                b.set_bound(&kind, col, val, line)?;
            }
        }
    }
    b.finish()
}

fn parse_sense(tok: &str, line: usize) -> Result<ObjSense> {
    match tok.to_ascii_uppercase().as_str() {
        "MIN" | "MINIMIZE" | "MINIMISE" => Ok(ObjSense::Min),
        "MAX" | "MAXIMIZE" | "MAXIMISE" => Ok(ObjSense::Max),
        other => err(line, format!("unknown objective sense `{other}`")),
    }
}

/// Parses raw bytes, transparently inflating gzip input.
pub fn parse_mps_bytes<T: Scalar>(bytes: &[u8]) -> Result<LinearProgram<T>> {
    let text = if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut s = String::new();
        flate2::read::GzDecoder::new(bytes).read_to_string(&mut s)?;
        s
    } else {
        String::from_utf8(bytes.to_vec()).map_err(|e| Error::Mps {
            line: 0,
            message: format!("input is not UTF-8: {e}"),
        })?
    };
    parse_mps(&text)
}

pub fn read_mps_file<T: Scalar>(path: impl AsRef<Path>) -> Result<LinearProgram<T>> {
    let bytes = std::fs::read(path)?;
    parse_mps_bytes(&bytes)
}

/// Writes free-format MPS that [`parse_mps`] reads back to the same data.
/// Names must not contain whitespace.
pub fn write_mps<T: Scalar>(lp: &LinearProgram<T>) -> String {
    let mut out = String::new();
    let name = if lp.name.is_empty() { "LP" } else { &lp.name };
    let _ = writeln!(out, "NAME {name}");
    if lp.sense == ObjSense::Max {
        let _ = writeln!(out, "OBJSENSE\n    MAX");
    }
    let obj = unused_name(lp, "OBJ");
    let _ = writeln!(out, "ROWS\n N {obj}");
    for (i, s) in lp.row_senses.iter().enumerate() {
        let k = match s {
            RowSense::Le => "L",
            RowSense::Eq => "E",
            RowSense::Ge => "G",
        };
        let _ = writeln!(out, " {k} {}", lp.row_names[i]);
    }
    let _ = writeln!(out, "COLUMNS");
    for j in 0..lp.ncols() {
        let c = &lp.col_names[j];
        let mut any = false;
        if lp.objective[j] != T::zero() {
            let _ = writeln!(out, "    {c} {obj} {}", lp.objective[j]);
            any = true;
        }
        for (i, v) in lp.matrix.col(j) {
            let _ = writeln!(out, "    {c} {} {v}", lp.row_names[i]);
            any = true;
        }
        if !any {
            // keep empty columns visible to the reader
            let _ = writeln!(out, "    {c} {obj} 0");
        }
    }
    let _ = writeln!(out, "RHS");
    if lp.obj_offset != T::zero() {
        let _ = writeln!(out, "    RHS {obj} {}", -lp.obj_offset);
    }
    for i in 0..lp.nrows() {
        if lp.rhs[i] != T::zero() {
            let _ = writeln!(out, "    RHS {} {}", lp.row_names[i], lp.rhs[i]);
        }
    }
    if lp.ranges.iter().any(Option::is_some) {
        let _ = writeln!(out, "RANGES");
        for i in 0..lp.nrows() {
            if let Some(r) = lp.ranges[i] {
                let _ = writeln!(out, "    RNG {} {r}", lp.row_names[i]);
            }
        }
    }
    let _ = writeln!(out, "BOUNDS");
    for j in 0..lp.ncols() {
        let c = &lp.col_names[j];
        let (l, u) = (lp.col_lower[j], lp.col_upper[j]);
        if l == u {
            let _ = writeln!(out, " FX BND {c} {l}");
            continue;
        }
        if l == T::neg_infinity() && u == T::infinity() {
            let _ = writeln!(out, " FR BND {c}");
            continue;
        }
        if l == T::neg_infinity() {
            let _ = writeln!(out, " MI BND {c}");
        } else if l != T::zero() {
            let _ = writeln!(out, " LO BND {c} {l}");
        }
        if u != T::infinity() {
            let _ = writeln!(out, " UP BND {c} {u}");
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}

fn unused_name<T>(lp: &LinearProgram<T>, base: &str) -> String {
    let mut name = base.to_string();
    while lp.row_names.contains(&name) {
        name.push('_');
    }
    name
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_VAR: &str = "NAME TWOVAR
ROWS
 N COST
 E R1
COLUMNS
    X1 COST 1 R1 1
    X2 COST 2 R1 1
RHS
    RHS R1 2
ENDATA
";

    #[test]
    fn two_variable_transcription() {
        let lp: LinearProgram<f64> = parse_mps(TWO_VAR).unwrap();
        assert_eq!(lp.nrows(), 1);
        assert_eq!(lp.ncols(), 2);
        assert_eq!(lp.objective, vec![1.0, 2.0]);
        assert_eq!(lp.rhs, vec![2.0]);
        assert_eq!(lp.row_senses, vec![RowSense::Eq]);
        assert_eq!(lp.col_lower, vec![0.0, 0.0]);
        assert_eq!(lp.col_upper, vec![f64::INFINITY; 2]);
    }

    #[test]
    fn empty_columns_section() {
        let lp: LinearProgram<f64> = parse_mps("NAME E\nROWS\n N OBJ\n L R\nCOLUMNS\nRHS\n    RHS R 1\nENDATA\n").unwrap();
        assert_eq!(lp.ncols(), 0);
        assert_eq!(lp.nrows(), 1);
    }

    #[test]
    fn duplicate_row_is_an_error_with_line() {
        let e = parse_mps::<f64>("NAME D\nROWS\n N OBJ\n L R\n G R\nENDATA\n").unwrap_err();
        assert!(matches!(e, Error::Mps { line: 5, .. }), "{e}");
    }

    #[test]
    fn bound_on_unknown_column_is_an_error() {
        let text = "NAME B\nROWS\n N OBJ\nCOLUMNS\n    X OBJ 1\nBOUNDS\n UP BND Y 4\nENDATA\n";
        let e = parse_mps::<f64>(text).unwrap_err();
        assert!(matches!(e, Error::Mps { line: 7, .. }), "{e}");
    }

    #[test]
    fn malformed_entries_and_sections() {
        assert!(matches!(parse_mps::<f64>("FOO\n").unwrap_err(), Error::Mps { line: 1, .. }));
        assert!(parse_mps::<f64>("NAME X\nROWS\n N OBJ\nCOLUMNS\n    X OBJ\nENDATA\n").is_err());
        assert!(parse_mps::<f64>("NAME X\nROWS\n Q R\nENDATA\n").is_err());
        assert!(parse_mps::<f64>("NAME X\nROWS\n N OBJ\nCOLUMNS\n    X R9 1\nENDATA\n").is_err());
        assert!(parse_mps::<f64>("NAME X\nROWS\n N OBJ\nCOLUMNS\n    X OBJ abc\nENDATA\n").is_err());
    }

    #[test]
    fn objective_sense_inline_and_section() {
        let a: LinearProgram<f64> = parse_mps("NAME A\nOBJSENSE MAX\nROWS\n N OBJ\nCOLUMNS\n    X OBJ 1\nENDATA\n").unwrap();
        assert_eq!(a.sense, ObjSense::Max);
        let b: LinearProgram<f64> =
            parse_mps("NAME A\nOBJSENSE\n    MAXIMIZE\nROWS\n N OBJ\nCOLUMNS\n    X OBJ 1\nENDATA\n").unwrap();
        assert_eq!(b.sense, ObjSense::Max);
    }

    #[test]
    fn fortran_exponents_and_bound_types() {
        let text = "NAME B
ROWS
 N OBJ
COLUMNS
    A OBJ -1.0
    B OBJ 1
    C OBJ 1
    D OBJ 1
    E OBJ 1
BOUNDS
 UP BND A 1.0D3
 FR BND B
 MI BND C
 UP BND C 5
 FX BND D 2.5
 UP BND E -3
ENDATA
";
        let lp: LinearProgram<f64> = parse_mps(text).unwrap();
        assert_eq!(lp.col_upper[0], 1000.0);
        assert_eq!((lp.col_lower[1], lp.col_upper[1]), (f64::NEG_INFINITY, f64::INFINITY));
        assert_eq!((lp.col_lower[2], lp.col_upper[2]), (f64::NEG_INFINITY, 5.0));
        assert_eq!((lp.col_lower[3], lp.col_upper[3]), (2.5, 2.5));
        assert_eq!((lp.col_lower[4], lp.col_upper[4]), (f64::NEG_INFINITY, -3.0));
    }

    #[test]
    fn objective_rhs_is_negated_offset() {
        let lp: LinearProgram<f64> =
            parse_mps("NAME O\nROWS\n N OBJ\nCOLUMNS\n    X OBJ 1\nRHS\n    RHS OBJ 7.5\nENDATA\n").unwrap();
        assert_eq!(lp.obj_offset, -7.5);
    }

    #[test]
    fn gzip_input() {
        use flate2::write::GzEncoder;
        use std::io::Write;
        let mut enc = GzEncoder::new(Vec::new(), flate2::Compression::default());
        enc.write_all(TWO_VAR.as_bytes()).unwrap();
        let lp: LinearProgram<f64> = parse_mps_bytes(&enc.finish().unwrap()).unwrap();
        assert_eq!(lp.ncols(), 2);
    }

    #[test]
    fn extra_free_rows_are_dropped() {
        let text = "NAME F\nROWS\n N OBJ\n N SPARE\n L R\nCOLUMNS\n    X OBJ 1 SPARE 4\n    X R 1\nENDATA\n";
        let lp: LinearProgram<f64> = parse_mps(text).unwrap();
        assert_eq!(lp.nrows(), 1);
        assert_eq!(lp.objective, vec![1.0]);
    }
}
