//! File formats: the `CTF1` dense binary format, coordinate (COO) text input
//! and CSV traces.
//!
//! `CTF1` layout: the four bytes `CTF1`, one byte holding the order `N ≥ 1`,
//! `N` little-endian `u64` dimensions, then the entries as little-endian
//! `f64` in row-major order.
//!
//! COO layout: a first nonblank line `dims: I1 I2 ... IN`, then one line
//! `i1 i2 ... iN v` per entry with zero-based indices. Repeated coordinates
//! accumulate. Blank lines and lines starting with `#` are ignored.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::config::TraceRecord;
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const MAGIC: &[u8; 4] = b"CTF1";

/// Default limit on the number of dense entries accepted from a file.
pub const DEFAULT_MAX_ENTRIES: usize = 1 << 27;

pub fn write_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    let order = u8::try_from(t.order()).map_err(|_| Error::Format(format!("order {} exceeds 255", t.order())))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&[order])?;
    for &d in t.shape() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    read_tensor_with_limit(path, DEFAULT_MAX_ENTRIES)
}

pub fn read_tensor_with_limit(path: impl AsRef<Path>, max_entries: usize) -> Result<DenseTensor> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_tensor(&bytes, max_entries)
}

/// Decodes an in-memory `CTF1` image.
pub fn decode_tensor(bytes: &[u8], max_entries: usize) -> Result<DenseTensor> {
    if bytes.len() < 5 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing CTF1 magic".into()));
    }
    let order = bytes[4] as usize;
    if order == 0 {
        return Err(Error::Format("tensor order is zero".into()));
    }
    let header = 5 + 8 * order;
    if bytes.len() < header {
        return Err(Error::Format("truncated dimension header".into()));
    }
    let mut shape = Vec::with_capacity(order);
    let mut entries: usize = 1;
    for k in 0..order {
        let raw = u64::from_le_bytes(bytes[5 + 8 * k..13 + 8 * k].try_into().unwrap());
        let d = usize::try_from(raw).map_err(|_| Error::Format(format!("dimension {raw} too large")))?;
        if d == 0 {
            return Err(Error::Format(format!("dimension {k} is zero")));
        }
        entries = entries
            .checked_mul(d)
            .filter(|&e| e <= max_entries)
            .ok_or_else(|| Error::Format(format!("tensor exceeds the limit of {max_entries} entries")))?;
        shape.push(d);
    }
    let payload = &bytes[header..];
    if payload.len() != entries * 8 {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {} for shape {shape:?}",
            payload.len(),
            entries * 8
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseTensor::new(shape, data)
}

/// Whether the file starts with the `CTF1` magic.
pub fn is_ctf(path: impl AsRef<Path>) -> Result<bool> {
    let mut head = [0u8; 4];
    let mut f = File::open(path)?;
    let mut read = 0;
    while read < 4 {
        let k = f.read(&mut head[read..])?;
        if k == 0 {
            return Ok(false);
        }
        read += k;
    }
    Ok(&head == MAGIC)
}

pub fn read_coo(path: impl AsRef<Path>) -> Result<DenseTensor> {
    parse_coo(BufReader::new(File::open(path)?), DEFAULT_MAX_ENTRIES)
}

/// Parses COO text into a dense tensor of at most `max_entries` entries.
pub fn parse_coo(reader: impl BufRead, max_entries: usize) -> Result<DenseTensor> {
    let mut tensor: Option<DenseTensor> = None;
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        match &mut tensor {
            None => {
                let rest = text
                    .strip_prefix("dims:")
                    .ok_or_else(|| err("expected a 'dims:' header".into()))?;
                let shape = rest
                    .split_whitespace()
                    .map(|s| s.parse::<usize>().map_err(|_| err(format!("invalid dimension '{s}'"))))
                    .collect::<Result<Vec<_>>>()?;
                if shape.is_empty() || shape.contains(&0) {
                    return Err(err(format!("dimensions must be positive, got {shape:?}")));
                }
                let total = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
                if total.is_none_or(|t| t > max_entries) {
                    return Err(err(format!("tensor exceeds the limit of {max_entries} entries")));
                }
                tensor = Some(DenseTensor::zeros(shape)?);
            }
            Some(t) => {
                let fields: Vec<&str> = text.split_whitespace().collect();
                let order = t.order();
                if fields.len() != order + 1 {
                    return Err(err(format!("expected {} fields, found {}", order + 1, fields.len())));
                }
                let mut offset = 0;
                for (m, s) in fields[..order].iter().enumerate() {
                    let i: usize = s.parse().map_err(|_| err(format!("invalid index '{s}'")))?;
                    let d = t.shape()[m];
                    if i >= d {
                        return Err(err(format!("index {i} out of range for mode {m} of size {d}")));
                    }
                    offset = offset * d + i;
                }
                let v: f64 = fields[order]
                    .parse()
                    .map_err(|_| err(format!("invalid value '{}'", fields[order])))?;
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(err(format!("value {v} is not a finite nonnegative number")));
                }
                t.data_mut()[offset] += v;
            }
        }
    }
    tensor.ok_or_else(|| Error::Parse {
        line: 1,
        msg: "missing 'dims:' header".into(),
    })
}

/// `X ← max(X, floor)`.
pub fn apply_floor(t: &mut DenseTensor, floor: f64) {
    for v in t.data_mut() {
        *v = v.max(floor);
    }
}

fn format_loss(loss: f64) -> String {
    format!("{loss:.16e}")
}

/// Writes `iter,time_s,loss` rows; losses carry 17 significant digits.
pub fn write_trace(path: impl AsRef<Path>, records: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iter", "time_s", "loss"])?;
    for r in records {
        w.write_record([r.iter.to_string(), r.time_s.to_string(), format_loss(r.loss)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let bad = |msg: &str| Error::Parse {
            line: k + 2,
            msg: msg.into(),
        };
        out.push(TraceRecord {
            iter: field(0).parse().map_err(|_| bad("invalid iter"))?,
            time_s: field(1).parse().map_err(|_| bad("invalid time_s"))?,
            loss: field(2).parse().map_err(|_| bad("invalid loss"))?,
        });
    }
    Ok(out)
}

/// One row of a benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub algo: String,
    pub seed: u64,
    pub record: TraceRecord,
}

/// Writes `algo,seed,iter,time_s,loss` rows.
pub fn write_bench(writer: impl Write, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["algo", "seed", "iter", "time_s", "loss"])?;
    for row in rows {
        w.write_record([
            row.algo.clone(),
            row.seed.to_string(),
            row.record.iter.to_string(),
            row.record.time_s.to_string(),
            format_loss(row.record.loss),
        ])?;
    }
    w.flush()?;
    Ok(())
}
