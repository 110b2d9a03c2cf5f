//! Matrix files: CSV, NPY (v1.0/2.0, little-endian f32/f64, C order, 2-D)
//! and raw little-endian f32 with a `(N, D)` u32 prefix.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use topoembed_core::{PointCloud, Points};

use crate::error::{Result, TopoError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Npy,
    RawF32,
}

impl Format {
    /// `.csv`, `.npy`, or `.bin` / `.f32` / `.raw`.
    pub fn from_path(path: &Path) -> Option<Format> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "csv" | "txt" => Some(Format::Csv),
            "npy" => Some(Format::Npy),
            "bin" | "f32" | "raw" => Some(Format::RawF32),
            _ => None,
        }
    }

    pub fn parse(s: &str) -> Option<Format> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "npy" => Some(Format::Npy),
            "raw" | "raw-f32" | "f32" => Some(Format::RawF32),
            _ => None,
        }
    }

    fn resolve(path: &Path, given: Option<Format>) -> Result<Format> {
        given.or_else(|| Format::from_path(path)).ok_or_else(|| {
            TopoError::Usage(format!("cannot infer the format of {}; pass --format", path.display()))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CsvOptions {
    /// Last column holds integer class labels.
    pub labels_last: bool,
    /// Skip the first record.
    pub header: bool,
}

/// Data rows from CSV text. Rows and columns in errors are 1-based and
/// count the header line when there is one.
pub fn read_csv<R: Read>(reader: R, opts: &CsvOptions, origin: &Path) -> Result<PointCloud> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(opts.header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut n = 0usize;
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1 + opts.header as usize;
        let rec = rec.map_err(|e| TopoError::format(origin, Some(row), None, e.to_string()))?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        match width {
            None => width = Some(rec.len()),
            Some(w) if w != rec.len() => {
                return Err(TopoError::format(
                    origin,
                    Some(row),
                    None,
                    format!("expected {w} fields, found {}", rec.len()),
                ))
            }
            _ => {}
        }
        let features = if opts.labels_last { rec.len() - 1 } else { rec.len() };
        if features == 0 {
            return Err(TopoError::format(origin, Some(row), None, "no feature columns"));
        }
        for (c, cell) in rec.iter().enumerate() {
            if c == features {
                labels.push(parse_label(cell).ok_or_else(|| {
                    TopoError::format(origin, Some(row), Some(c + 1), format!("label {cell:?} is not an integer"))
                })?);
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| TopoError::format(origin, Some(row), Some(c + 1), format!("{cell:?} is not a number")))?;
            if !v.is_finite() {
                return Err(TopoError::format(origin, Some(row), Some(c + 1), "non-finite value"));
            }
            data.push(v);
        }
        n += 1;
    }
    let Some(w) = width else {
        return Err(TopoError::format(origin, None, None, "no data rows"));
    };
    let dim = if opts.labels_last { w - 1 } else { w };
    let cloud = PointCloud::new(data, n, dim)?;
    Ok(if opts.labels_last { cloud.with_labels(labels)? } else { cloud })
}

fn parse_label(cell: &str) -> Option<i64> {
    cell.parse::<i64>().ok().or_else(|| {
        let v: f64 = cell.parse().ok()?;
        (v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
    })
}

/// One value per row; `labels`, when given, becomes a last integer column.
/// Floats use the shortest round-trip representation, so output is
/// byte-stable for identical values.
pub fn write_csv<W: Write>(mut w: W, data: &[f64], n: usize, dim: usize, labels: Option<&[i64]>) -> std::io::Result<()> {
    let mut line = String::new();
    for i in 0..n {
        line.clear();
        for (c, v) in data[i * dim..(i + 1) * dim].iter().enumerate() {
            if c > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v}"));
        }
        if let Some(l) = labels {
            line.push_str(&format!(",{}", l[i]));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NpyDtype {
    F32,
    F64,
}

const NPY_MAGIC: &[u8] = b"\x93NUMPY";

/// Parses a 2-D little-endian f32/f64 C-order array.
pub fn read_npy<R: Read>(mut r: R, origin: &Path) -> Result<(Vec<f64>, usize, usize)> {
    let bad = |msg: &str| TopoError::format(origin, None, None, format!("npy: {msg}"));
    let mut pre = [0u8; 8];
    r.read_exact(&mut pre).map_err(|_| bad("truncated preamble"))?;
    if &pre[..6] != NPY_MAGIC {
        return Err(bad("bad magic"));
    }
    let header_len = match pre[6] {
        1 => {
            let mut b = [0u8; 2];
            r.read_exact(&mut b).map_err(|_| bad("truncated header"))?;
            u16::from_le_bytes(b) as usize
        }
        2 | 3 => {
            let mut b = [0u8; 4];
            r.read_exact(&mut b).map_err(|_| bad("truncated header"))?;
            u32::from_le_bytes(b) as usize
        }
        v => return Err(bad(&format!("unsupported version {v}"))),
    };
    let mut header = vec![0u8; header_len];
    r.read_exact(&mut header).map_err(|_| bad("truncated header"))?;
    let header = String::from_utf8_lossy(&header);
    let descr = dict_value(&header, "descr").ok_or_else(|| bad("missing descr"))?;
    let dtype = match descr.trim_matches(|c| c == '\'' || c == '"') {
        "<f4" => NpyDtype::F32,
        "<f8" => NpyDtype::F64,
        other => return Err(bad(&format!("unsupported dtype {other}; expected <f4 or <f8"))),
    };
    let fortran = dict_value(&header, "fortran_order").ok_or_else(|| bad("missing fortran_order"))?;
    if fortran.trim() != "False" {
        return Err(bad("Fortran order is not supported"));
    }
    let shape = dict_value(&header, "shape").ok_or_else(|| bad("missing shape"))?;
    let dims: Vec<usize> = shape
        .trim_matches(|c| c == '(' || c == ')')
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| bad("bad shape")))
        .collect::<Result<_>>()?;
    let [n, d] = dims[..] else {
        return Err(bad(&format!("expected a 2-D array, got shape {shape}")));
    };
    let width = if dtype == NpyDtype::F32 { 4 } else { 8 };
    let mut raw = vec![0u8; n * d * width];
    r.read_exact(&mut raw).map_err(|_| bad("truncated data"))?;
    let data = match dtype {
        NpyDtype::F32 => raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect(),
        NpyDtype::F64 => raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
    };
    Ok((data, n, d))
}

/// Value text of `key` in a Python dict literal, up to the next top-level comma.
fn dict_value<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    let start = header.find(&format!("'{key}'")).or_else(|| header.find(&format!("\"{key}\"")))?;
    let rest = &header[start + key.len() + 2..];
    let rest = rest[rest.find(':')? + 1..].trim_start();
    let mut depth = 0i32;
    for (k, ch) in rest.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&rest[..=k]);
                }
            }
            ',' | '}' if depth == 0 => return Some(rest[..k].trim()),
            _ => {}
        }
    }
    None
}

pub fn write_npy<W: Write>(mut w: W, data: &[f64], n: usize, d: usize, dtype: NpyDtype) -> std::io::Result<()> {
    let descr = if dtype == NpyDtype::F32 { "<f4" } else { "<f8" };
    let mut header = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': ({n}, {d}), }}");
    // Magic (6) + version (2) + length (2) + header + '\n' aligned to 64.
    let unpadded = 10 + header.len() + 1;
    header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    header.push('\n');
    w.write_all(NPY_MAGIC)?;
    w.write_all(&[1, 0])?;
    w.write_all(&(header.len() as u16).to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    match dtype {
        NpyDtype::F32 => data.iter().try_for_each(|v| w.write_all(&(*v as f32).to_le_bytes()))?,
        NpyDtype::F64 => data.iter().try_for_each(|v| w.write_all(&v.to_le_bytes()))?,
    }
    w.flush()
}

pub fn read_raw_f32<R: Read>(mut r: R, origin: &Path) -> Result<(Vec<f64>, usize, usize)> {
    let bad = |msg: &str| TopoError::format(origin, None, None, format!("raw f32: {msg}"));
    let mut pre = [0u8; 8];
    r.read_exact(&mut pre).map_err(|_| bad("missing (N, D) prefix"))?;
    let n = u32::from_le_bytes(pre[..4].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(pre[4..].try_into().unwrap()) as usize;
    let mut raw = vec![0u8; n * d * 4];
    r.read_exact(&mut raw).map_err(|_| bad(&format!("expected {n}×{d} values")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra).map_err(|e| TopoError::io(origin, e))? != 0 {
        return Err(bad("trailing bytes after the declared matrix"));
    }
    Ok((raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect(), n, d))
}

pub fn write_raw_f32<W: Write>(mut w: W, data: &[f64], n: usize, d: usize) -> std::io::Result<()> {
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&(d as u32).to_le_bytes())?;
    for v in data {
        w.write_all(&(*v as f32).to_le_bytes())?;
    }
    w.flush()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| TopoError::io(path, e))
}

/// Load a matrix. `labels_last` applies to CSV only.
pub fn load_matrix(path: &Path, format: Option<Format>, csv: &CsvOptions) -> Result<PointCloud> {
    let format = Format::resolve(path, format)?;
    let r = open(path)?;
    match format {
        Format::Csv => read_csv(r, csv, path),
        Format::Npy => {
            let (data, n, d) = read_npy(r, path)?;
            Ok(PointCloud::new(data, n, d)?)
        }
        Format::RawF32 => {
            let (data, n, d) = read_raw_f32(r, path)?;
            Ok(PointCloud::new(data, n, d)?)
        }
    }
}

/// Single-column integer labels, one per line.
pub fn load_labels(path: &Path) -> Result<Vec<i64>> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text).map_err(|e| TopoError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            parse_label(l.trim())
                .ok_or_else(|| TopoError::format(path, Some(k + 1), Some(1), format!("label {l:?} is not an integer")))
        })
        .collect()
}

/// Write a matrix; NPY output is f64.
pub fn save_matrix(path: &Path, format: Option<Format>, m: &dyn Points, labels: Option<&[i64]>) -> Result<()> {
    let format = Format::resolve(path, format)?;
    let f = File::create(path).map_err(|e| TopoError::io(path, e))?;
    let w = BufWriter::new(f);
    match format {
        Format::Csv => write_csv(w, m.data(), m.n(), m.dim(), labels),
        Format::Npy => write_npy(w, m.data(), m.n(), m.dim(), NpyDtype::F64),
        Format::RawF32 => write_raw_f32(w, m.data(), m.n(), m.dim()),
    }
    .map_err(|e| TopoError::io(path, e))
}

/// Write text, mapping errors to the path.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| TopoError::io(path, e))
}
