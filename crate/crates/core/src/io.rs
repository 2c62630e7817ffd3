//! Audio and tensor files: WAV in/out, CSV, the "SPSC" binary tensor format, 16-bit PGM
//! images and JSON matrices.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayD, IxDyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magic bytes of the binary tensor format.
pub const SPSC_MAGIC: &[u8; 4] = b"SPSC";
pub const SPSC_VERSION: u32 = 1;

/// Mono samples in [-1, 1] and their rate in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Audio {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

fn wav_error(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(source) => Error::io(path, source),
        hound::Error::Unsupported => Error::UnsupportedCodec {
            path: path.into(),
            reason: "only PCM 16-bit and IEEE float 32-bit are supported".into(),
        },
        other => Error::MalformedWav {
            path: path.into(),
            reason: other.to_string(),
        },
    }
}

/// Read a PCM16 or float32 WAV file; channels are averaged to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Audio> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| wav_error(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::MalformedWav {
            path: path.into(),
            reason: "zero channels".into(),
        });
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>(),
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>(),
        (fmt, bits) => {
            return Err(Error::UnsupportedCodec {
                path: path.into(),
                reason: format!("{bits}-bit {fmt:?} samples"),
            })
        }
    }
    .map_err(|e| wav_error(path, e))?;
    if channels > 1 {
        log::warn!("{}: averaging {channels} channels to mono", path.display());
    }
    let samples = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    Ok(Audio {
        samples,
        sample_rate: spec.sample_rate as f64,
    })
}

/// Write mono 16-bit PCM; samples are scaled by 32768, rounded and clipped.
pub fn write_wav(path: impl AsRef<Path>, samples: &[f64], sample_rate: f64) -> Result<()> {
    let path = path.as_ref();
    if !(sample_rate >= 1.0) || sample_rate > u32::MAX as f64 || sample_rate.fract() != 0.0 {
        return Err(Error::param(format!("WAV sample rate must be a positive integer, got {sample_rate}")));
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: sample_rate as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| wav_error(path, e))?;
    for s in samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        w.write_sample(v).map_err(|e| wav_error(path, e))?;
    }
    w.finalize().map_err(|e| wav_error(path, e))
}

/// Output formats of [`write_matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Bin,
    Pgm,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "bin" => Ok(OutputFormat::Bin),
            "pgm" => Ok(OutputFormat::Pgm),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::param(format!("unknown output format {other:?}"))),
        }
    }
}

/// A matrix with one label per column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub values: Array2<f64>,
}

impl Table {
    pub fn new(columns: Vec<String>, values: Array2<f64>) -> Result<Self> {
        if columns.len() != values.ncols() {
            return Err(Error::param(format!(
                "{} column labels for {} columns",
                columns.len(),
                values.ncols()
            )));
        }
        Ok(Table { columns, values })
    }

    /// Columns labelled by their index.
    pub fn unlabelled(values: Array2<f64>) -> Self {
        Table {
            columns: (0..values.ncols()).map(|c| format!("c{c}")).collect(),
            values,
        }
    }
}

/// Options of the PGM writer.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PgmOptions {
    /// Dark means large: 0 maps to white.
    pub inverted: bool,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Serialize a table in `format`.
pub fn write_matrix(table: &Table, format: OutputFormat, path: impl AsRef<Path>, pgm: PgmOptions) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    match format {
        OutputFormat::Csv => write_csv(table, &mut bytes),
        OutputFormat::Bin => write_spsc(&table.values.clone().into_dyn(), &mut bytes),
        OutputFormat::Pgm => write_pgm(&table.values, pgm, &mut bytes)?,
        OutputFormat::Json => {
            bytes = serde_json::to_vec(&JsonMatrix::from(table)).map_err(|source| Error::Json {
                path: path.into(),
                source,
            })?;
            bytes.push(b'\n');
        }
    }
    let mut w = create(path)?;
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn write_csv(table: &Table, out: &mut Vec<u8>) {
    out.extend_from_slice(table.columns.join(",").as_bytes());
    out.push(b'\n');
    for row in table.values.rows() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.extend_from_slice(line.join(",").as_bytes());
        out.push(b'\n');
    }
}

/// Parse a CSV written by [`write_matrix`].
pub fn read_csv(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: String| Error::MalformedTensor {
        path: path.into(),
        reason,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let vals = line
            .split(',')
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("line {}: {e}", i + 2)))?;
        if vals.len() != columns.len() {
            return Err(bad(format!("line {} has {} fields, expected {}", i + 2, vals.len(), columns.len())));
        }
        data.extend(vals);
        rows += 1;
    }
    let values = Array2::from_shape_vec((rows, columns.len()), data).map_err(|e| bad(e.to_string()))?;
    Ok(Table { columns, values })
}

fn write_spsc(t: &ArrayD<f64>, out: &mut Vec<u8>) {
    out.extend_from_slice(SPSC_MAGIC);
    out.extend_from_slice(&SPSC_VERSION.to_le_bytes());
    out.extend_from_slice(&(t.ndim() as u32).to_le_bytes());
    for d in t.shape() {
        out.extend_from_slice(&(*d as u64).to_le_bytes());
    }
    // iter() walks in logical (row-major) order whatever the memory layout
    for v in t.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Write an n-dimensional tensor in the SPSC binary format.
pub fn write_tensor(t: &ArrayD<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    write_spsc(t, &mut bytes);
    let mut w = create(path)?;
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Read an SPSC tensor.
pub fn read_tensor(path: impl AsRef<Path>) -> Result<ArrayD<f64>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .map(BufReader::new)
        .and_then(|mut r| r.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::MalformedTensor {
        path: path.into(),
        reason: reason.into(),
    };
    let mut pos = 0;
    let mut take = |n: usize| -> Result<&[u8]> {
        let s = bytes.get(pos..pos + n).ok_or_else(|| bad("truncated"))?;
        pos += n;
        Ok(s)
    };
    if take(4)? != SPSC_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != SPSC_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let ndim = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let mut shape = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let d = u64::from_le_bytes(take(8)?.try_into().unwrap());
        shape.push(usize::try_from(d).map_err(|_| bad("dimension overflows usize"))?);
    }
    let count = shape
        .iter()
        .try_fold(1usize, |a, d| a.checked_mul(*d))
        .ok_or_else(|| bad("element count overflows"))?;
    let payload = take(count.checked_mul(8).ok_or_else(|| bad("payload overflows"))?)?;
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if pos != bytes.len() {
        return Err(bad("trailing bytes after payload"));
    }
    ArrayD::from_shape_vec(IxDyn(&shape), data).map_err(|e| bad(&e.to_string()))
}

fn write_pgm(m: &Array2<f64>, opts: PgmOptions, out: &mut Vec<u8>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("PGM export needs finite values"));
    }
    let max = m.iter().cloned().fold(0.0, f64::max);
    let (h, w) = m.dim();
    out.extend_from_slice(format!("P5\n# max={max}\n{w} {h}\n65535\n").as_bytes());
    for v in m.iter() {
        let level = if max > 0.0 {
            (v.max(0.0) / max * 65535.0).round() as u16
        } else {
            0
        };
        let level = if opts.inverted { 65535 - level } else { level };
        out.extend_from_slice(&level.to_be_bytes());
    }
    Ok(())
}

/// Header and raw 16-bit levels of a PGM written by [`write_matrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub max: f64,
    pub levels: Vec<u16>,
}

/// Read back a 16-bit binary PGM.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<Pgm> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::MalformedTensor {
        path: path.into(),
        reason: reason.into(),
    };
    // header: four newline-terminated lines
    let mut lines = Vec::new();
    let mut start = 0;
    for (i, b) in bytes.iter().enumerate() {
        if *b == b'\n' {
            lines.push(std::str::from_utf8(&bytes[start..i]).map_err(|_| bad("non-UTF-8 header"))?);
            start = i + 1;
            if lines.len() == 4 {
                break;
            }
        }
    }
    if lines.len() != 4 || lines[0] != "P5" || lines[3] != "65535" {
        return Err(bad("not a 16-bit binary PGM"));
    }
    let max = lines[1]
        .strip_prefix("# max=")
        .and_then(|m| m.parse().ok())
        .ok_or_else(|| bad("missing max comment"))?;
    let dims: Vec<usize> = lines[2].split(' ').filter_map(|d| d.parse().ok()).collect();
    if dims.len() != 2 {
        return Err(bad("bad dimensions"));
    }
    let body = &bytes[start..];
    if body.len() != 2 * dims[0] * dims[1] {
        return Err(bad("pixel payload does not match dimensions"));
    }
    Ok(Pgm {
        width: dims[0],
        height: dims[1],
        max,
        levels: body
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect(),
    })
}

#[derive(Serialize)]
struct JsonMatrix<'a> {
    columns: &'a [String],
    rows: Vec<Vec<f64>>,
}

impl<'a> From<&'a Table> for JsonMatrix<'a> {
    fn from(t: &'a Table) -> Self {
        JsonMatrix {
            columns: &t.columns,
            rows: t.values.rows().into_iter().map(|r| r.to_vec()).collect(),
        }
    }
}
