//! Record serialization: CSV rows, JSON lines and one-byte frames.
//!
//! * CSV: `a,b,i,j\n` with `a, b ∈ {-1, 1}`, no header line. Decoding
//!   tolerates a leading `a,b,i,j` header and blank lines.
//! * JSONL: `{"a":1,"b":-1,"i":1,"j":2}\n`, keys in that order.
//! * Binary: one byte per record; bit0 = a (+1 → 1), bit1 = b, bit2 = i − 1,
//!   bit3 = j − 1, high nibble zero.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{SettingIndex, Sign};
use crate::sampler::Record;

use super::WireError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Csv,
    Jsonl,
    Bin,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Csv, Format::Jsonl, Format::Bin];

    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
            Format::Bin => "bin",
        }
    }

    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "jsonl" | "json" => Some(Format::Jsonl),
            "bin" => Some(Format::Bin),
            _ => None,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Format::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown format {s:?}; expected csv, jsonl or bin"))
    }
}

pub fn frame_byte(r: &Record) -> u8 {
    u8::from(r.a == Sign::Plus) | u8::from(r.b == Sign::Plus) << 1 | (r.i.index() as u8) << 2 | (r.j.index() as u8) << 3
}

pub fn record_from_frame_byte(byte: u8) -> Result<Record, WireError> {
    if byte & 0xF0 != 0 {
        return Err(WireError::BadFrameByte(byte));
    }
    let sign = |bit: u8| if byte & bit != 0 { Sign::Plus } else { Sign::Minus };
    Ok(Record::new(
        sign(0x01),
        sign(0x02),
        SettingIndex::from_index(usize::from(byte >> 2 & 1)),
        SettingIndex::from_index(usize::from(byte >> 3 & 1)),
    ))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    a: i64,
    b: i64,
    i: i64,
    j: i64,
}

impl JsonRecord {
    fn from_record(r: &Record) -> Self {
        Self {
            a: r.a.value().into(),
            b: r.b.value().into(),
            i: r.i.value().into(),
            j: r.j.value().into(),
        }
    }
}

fn record_from_fields(a: i64, b: i64, i: i64, j: i64) -> Result<Record, String> {
    let err = |e: crate::model::ModelError| e.to_string();
    Ok(Record::new(
        Sign::try_from(a).map_err(err)?,
        Sign::try_from(b).map_err(err)?,
        SettingIndex::try_from(i).map_err(err)?,
        SettingIndex::try_from(j).map_err(err)?,
    ))
}

pub fn encode_record(r: &Record, format: Format) -> Vec<u8> {
    match format {
        Format::Csv => format!("{},{},{},{}\n", r.a.value(), r.b.value(), r.i.value(), r.j.value()).into_bytes(),
        Format::Jsonl => {
            let mut line = serde_json::to_vec(&JsonRecord::from_record(r)).expect("plain struct serializes");
            line.push(b'\n');
            line
        }
        Format::Bin => vec![frame_byte(r)],
    }
}

pub fn encode_records<'a>(records: impl IntoIterator<Item = &'a Record>, format: Format) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        out.extend_from_slice(&encode_record(r, format));
    }
    out
}

fn parse_csv_line(line: &str) -> Result<Record, String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 fields, got {}", fields.len()));
    }
    let mut v = [0i64; 4];
    for (slot, field) in v.iter_mut().zip(&fields) {
        *slot = field.parse().map_err(|e| format!("field {field:?}: {e}"))?;
    }
    record_from_fields(v[0], v[1], v[2], v[3])
}

fn parse_json_line(line: &str) -> Result<Record, String> {
    let j: JsonRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    record_from_fields(j.a, j.b, j.i, j.j)
}

pub fn decode_records<R: Read>(input: R, format: Format) -> Result<Vec<Record>, WireError> {
    let mut out = Vec::new();
    match format {
        Format::Bin => {
            for byte in BufReader::new(input).bytes() {
                out.push(record_from_frame_byte(byte?)?);
            }
        }
        Format::Csv | Format::Jsonl => {
            for (k, line) in BufReader::new(input).lines().enumerate() {
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || (format == Format::Csv && k == 0 && trimmed == "a,b,i,j") {
                    continue;
                }
                let parsed = match format {
                    Format::Csv => parse_csv_line(trimmed),
                    _ => parse_json_line(trimmed),
                };
                out.push(parsed.map_err(|message| WireError::BadLine { line: k + 1, message })?);
            }
        }
    }
    Ok(out)
}

pub fn decode_record(bytes: &[u8], format: Format) -> Result<Record, WireError> {
    let mut records = decode_records(bytes, format)?;
    match (records.pop(), records.is_empty()) {
        (Some(r), true) => Ok(r),
        _ => Err(WireError::BadLine {
            line: 1,
            message: "expected exactly one record".into(),
        }),
    }
}

pub fn read_records_file(path: &Path, format: Format) -> Result<Vec<Record>, WireError> {
    let file = std::fs::File::open(path).map_err(|e| WireError::File {
        path: path.display().to_string(),
        source: e,
    })?;
    decode_records(file, format)
}

/// Buffered streaming writer for any record format.
pub struct RecordWriter<W: Write> {
    inner: BufWriter<W>,
    format: Format,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(inner: W, format: Format) -> Self {
        Self {
            inner: BufWriter::with_capacity(1 << 16, inner),
            format,
        }
    }

    pub fn write(&mut self, r: &Record) -> std::io::Result<()> {
        match self.format {
            Format::Bin => self.inner.write_all(&[frame_byte(r)]),
            Format::Csv => writeln!(
                self.inner,
                "{},{},{},{}",
                r.a.value(),
                r.b.value(),
                r.i.value(),
                r.j.value()
            ),
            Format::Jsonl => self.inner.write_all(&encode_record(r, Format::Jsonl)),
        }
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        self.inner.flush()?;
        self.inner.into_inner().map_err(|e| e.into_error())
    }
}
