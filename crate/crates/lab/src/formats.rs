//! Text formats: experiment tables, frames, duals and quantizations.
//!
//! Every file starts with `#`-prefixed metadata lines. Reals are written
//! with 17 significant digits in the style of C's `%.17g`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use noiseshape::frames::{DualFrame, Frame};
use noiseshape::noise_shaping::{Alphabet, QuantizationResult};

use crate::error::{LabError, LabResult};

/// `%.17g`: shortest of fixed or exponent notation, trailing zeros removed.
pub fn fmt_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (16 - exp) as usize, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Uint(u64),
    Real(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Uint(v) => v.to_string(),
            Cell::Real(v) => fmt_g17(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Uint(v as u64)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Uint(v)
    }
}
impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Uint(v as u64)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// A table with metadata lines and a mandatory header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub metadata: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { metadata: Vec::new(), header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.metadata {
            for line in m.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> LabResult<()> {
        write_text(path, &self.render())
    }
}

pub fn write_text(path: &Path, text: &str) -> LabResult<()> {
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

pub fn read_text(path: &Path) -> LabResult<String> {
    fs::read_to_string(path).map_err(|e| LabError::io(path, e))
}

/// A table read back from text, all cells as strings.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub metadata: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedTable {
    pub fn parse(text: &str) -> LabResult<Self> {
        let mut metadata = Vec::new();
        let mut body_start = text.len();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            match line.strip_prefix('#') {
                Some(rest) => metadata.push(rest.trim().to_string()),
                None => {
                    body_start = offset;
                    break;
                }
            }
            offset += line.len();
        }
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(&text.as_bytes()[body_start..]);
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| LabError::Format(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(LabError::Format("missing header row".into()));
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| LabError::Format(e.to_string()))?;
            rows.push(rec.iter().map(|c| c.trim().to_string()).collect());
        }
        Ok(Self { metadata, header, rows })
    }

    pub fn read(path: &Path) -> LabResult<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn column_index(&self, name: &str) -> LabResult<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LabError::Format(format!("no column named `{name}`")))
    }

    /// Values in `name`; empty cells are `None`.
    pub fn reals(&self, name: &str) -> LabResult<Vec<Option<f64>>> {
        let i = self.column_index(name)?;
        self.rows
            .iter()
            .map(|r| {
                let c = r[i].as_str();
                if c.is_empty() {
                    Ok(None)
                } else {
                    c.parse::<f64>()
                        .map(Some)
                        .map_err(|_| LabError::Format(format!("`{c}` in column `{name}` is not a number")))
                }
            })
            .collect()
    }

    pub fn texts(&self, name: &str) -> LabResult<Vec<&str>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

/// `key=value` pairs of a metadata line such as `frame kind=gaussian m=8`.
pub fn metadata_fields(line: &str) -> Vec<(&str, &str)> {
    line.split_whitespace().filter_map(|w| w.split_once('=')).collect()
}

fn field<'a>(fields: &[(&'a str, &'a str)], key: &str) -> LabResult<&'a str> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| LabError::Format(format!("metadata lacks `{key}`")))
}

fn parse_field<T: std::str::FromStr>(fields: &[(&str, &str)], key: &str) -> LabResult<T> {
    let v = field(fields, key)?;
    v.parse().map_err(|_| LabError::Format(format!("bad value `{v}` for `{key}`")))
}

fn render_matrix(out: &mut String, a: &DMatrix<f64>) {
    for r in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols()).map(|c| fmt_g17(a[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
}

fn parse_matrix(text: &str, rows: usize, cols: usize) -> LabResult<DMatrix<f64>> {
    let data: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|_| LabError::Format(format!("`{c}` is not a number"))))
                .collect()
        })
        .collect::<LabResult<_>>()?;
    if data.len() != rows || data.iter().any(|r| r.len() != cols) {
        return Err(LabError::Format(format!("expected {rows} rows of {cols} values")));
    }
    Ok(DMatrix::from_fn(rows, cols, |r, c| data[r][c]))
}

fn first_metadata<'a>(text: &'a str, tag: &str) -> LabResult<Vec<(&'a str, &'a str)>> {
    let line = text
        .lines()
        .filter_map(|l| l.strip_prefix('#'))
        .map(str::trim)
        .find(|l| l.split_whitespace().next() == Some(tag))
        .ok_or_else(|| LabError::Format(format!("missing `# {tag} ...` line")))?;
    Ok(metadata_fields(line))
}

/// `# frame kind=<tag> m=<m> k=<k> seed=<seed>` then `m` rows of `k` values.
pub fn render_frame(frame: &Frame) -> String {
    let mut out = format!("# frame kind={} m={} k={} seed={}\n", frame.kind(), frame.m(), frame.k(), frame.seed());
    render_matrix(&mut out, frame.matrix());
    out
}

/// Reads a frame file; the stored kind tag and seed are returned alongside.
pub fn parse_frame(text: &str) -> LabResult<(Frame, String, u64)> {
    let fields = first_metadata(text, "frame")?;
    let m = parse_field(&fields, "m")?;
    let k = parse_field(&fields, "k")?;
    let seed = parse_field(&fields, "seed")?;
    let kind = field(&fields, "kind")?.to_string();
    Ok((Frame::from_matrix(parse_matrix(text, m, k)?)?, kind, seed))
}

/// `# dual kind=<label> k=<k> m=<m>` then `k` rows of `m` values.
pub fn render_dual(dual: &DualFrame) -> String {
    let a = dual.matrix();
    let mut out = format!("# dual kind={} k={} m={}\n", dual.label(), a.nrows(), a.ncols());
    render_matrix(&mut out, a);
    out
}

pub fn parse_dual(text: &str) -> LabResult<(DMatrix<f64>, String)> {
    let fields = first_metadata(text, "dual")?;
    let k = parse_field(&fields, "k")?;
    let m = parse_field(&fields, "m")?;
    Ok((parse_matrix(text, k, m)?, field(&fields, "kind")?.to_string()))
}

/// `# quantization scheme=.. levels=.. delta=.. overloaded=.. u_inf=..`,
/// then columns `index,y,q,u`.
pub fn quantization_table(scheme: &str, alphabet: &Alphabet, y: &[f64], quant: &QuantizationResult) -> Table {
    let mut t = Table::new(["index", "y", "q", "u"]);
    t.metadata.push(format!(
        "quantization scheme={scheme} levels={} delta={} overloaded={} u_inf={}",
        alphabet.levels(),
        fmt_g17(alphabet.delta()),
        quant.overloaded,
        fmt_g17(quant.u_inf)
    ));
    for (i, ((&yv, &q), &u)) in y.iter().zip(&quant.q).zip(&quant.u).enumerate() {
        t.push(vec![i.into(), yv.into(), q.into(), u.into()]);
    }
    t
}

/// Scheme tag and the `q` column of a quantization file.
pub fn parse_quantization(text: &str) -> LabResult<(String, Vec<f64>)> {
    let fields = first_metadata(text, "quantization")?;
    let scheme = field(&fields, "scheme")?.to_string();
    let table = ParsedTable::parse(text)?;
    let q = table
        .reals("q")?
        .into_iter()
        .map(|v| v.ok_or_else(|| LabError::Format("empty q cell".into())))
        .collect::<LabResult<_>>()?;
    Ok((scheme, q))
}
