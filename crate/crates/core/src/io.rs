//! On-disk formats.
//!
//! Embeddings use a fixed 24-byte little-endian header followed by the
//! row-major `f32` payload:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "CSETEMB1"
//! 8       8     n      (u64)
//! 16      4     d      (u32)
//! 20      4     dtype  (u32, 0 = f32)
//! 24      n*d*4 values (f32)
//! ```
//!
//! Labels are a UTF-8 CSV with header `index,label`. Results are pretty-printed
//! JSON with a fixed key order and every real number written with 17
//! significant digits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ClassResult, ConfigEcho, CoresetResult, PhaseTimings, Totals};

pub const EMBEDDING_MAGIC: [u8; 8] = *b"CSETEMB1";
pub const HEADER_LEN: usize = 24;
pub const DTYPE_F32: u32 = 0;

/// Writes `rows` as `f32` in the embedding container format.
pub fn write_embeddings(path: impl AsRef<Path>, rows: ArrayView2<'_, f64>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let (n, d) = rows.dim();
    let d32 = u32::try_from(d).map_err(|_| crate::error::invalid("dimension exceeds u32"))?;
    out.write_all(&EMBEDDING_MAGIC)?;
    out.write_all(&(n as u64).to_le_bytes())?;
    out.write_all(&d32.to_le_bytes())?;
    out.write_all(&DTYPE_F32.to_le_bytes())?;
    for &v in rows.iter() {
        out.write_all(&(v as f32).to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads an embedding file into an `n x d` matrix widened to `f64`.
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    decode_embeddings(&bytes).map_err(|e| match e {
        Error::UnrecognizedFormat(_) => Error::UnrecognizedFormat(path.to_path_buf()),
        other => other,
    })
}

/// Decodes an in-memory embedding file.
pub fn decode_embeddings(bytes: &[u8]) -> Result<Array2<f64>> {
    if bytes.len() < HEADER_LEN || bytes[..8] != EMBEDDING_MAGIC {
        return Err(Error::UnrecognizedFormat("<memory>".into()));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let d = u32::from_le_bytes(bytes[16..20].try_into().expect("4 bytes"));
    let dtype = u32::from_le_bytes(bytes[20..24].try_into().expect("4 bytes"));
    if dtype != DTYPE_F32 {
        return Err(Error::UnsupportedDtype(dtype));
    }
    let found = (bytes.len() - HEADER_LEN) as u64;
    let expected = n
        .checked_mul(d as u64)
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| crate::error::invalid("header size overflows"))?;
    if found < expected {
        return Err(Error::TruncatedPayload { expected, found });
    }
    if found > expected {
        return Err(Error::TrailingData {
            extra: found - expected,
        });
    }
    let (n, d) = (n as usize, d as usize);
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: pos.checked_div(d).unwrap_or(0),
        });
    }
    Ok(Array2::from_shape_vec((n, d), values).expect("length checked"))
}

#[derive(Debug, Deserialize)]
struct LabelRecord {
    index: String,
    label: String,
}

/// Reads an `index,label` CSV into labels ordered by index.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<u32>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "index" || &headers[1] != "label" {
        return Err(Error::Labels {
            line: 1,
            message: "expected header 'index,label'".into(),
        });
    }
    let mut entries: Vec<(usize, u32, u64)> = Vec::new();
    for record in reader.deserialize() {
        let record: LabelRecord = record?;
        // header is line 1
        let line = entries.len() as u64 + 2;
        let index = record.index.parse::<usize>().map_err(|_| Error::Labels {
            line,
            message: format!("non-integer index '{}'", record.index),
        })?;
        let label = record.label.parse::<u32>().map_err(|_| Error::Labels {
            line,
            message: format!("non-integer label '{}'", record.label),
        })?;
        entries.push((index, label, line));
    }
    let n = entries.len();
    let mut labels: Vec<Option<u32>> = vec![None; n];
    for &(index, label, line) in &entries {
        if index >= n {
            continue;
        }
        if labels[index].replace(label).is_some() {
            return Err(Error::DuplicateIndex { index, line });
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or(Error::MissingIndex(i)))
        .collect()
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[u32]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["index", "label"])?;
    for (i, l) in labels.iter().enumerate() {
        writer.write_record([i.to_string(), l.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Wall-clock seconds per phase, summed over classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingsDoc {
    pub distances: f64,
    pub similarities: f64,
    pub density: f64,
    pub greedy: f64,
    pub total: f64,
}

impl From<&PhaseTimings> for TimingsDoc {
    fn from(t: &PhaseTimings) -> Self {
        Self {
            distances: t.distances.as_secs_f64(),
            similarities: t.similarities.as_secs_f64(),
            density: t.density.as_secs_f64(),
            greedy: t.greedy.as_secs_f64(),
            total: t.total.as_secs_f64(),
        }
    }
}

/// The serialized form of a [`CoresetResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub config: ConfigEcho,
    pub per_class: Vec<ClassResult>,
    pub totals: Totals,
    /// `null` unless timings were requested; wall-clock values would make
    /// repeated runs differ.
    pub timings: Option<TimingsDoc>,
}

impl ResultDocument {
    pub fn from_result(result: &CoresetResult, include_timings: bool) -> Self {
        Self {
            config: result.config.clone(),
            per_class: result.per_class.clone(),
            totals: result.totals.clone(),
            timings: include_timings.then(|| TimingsDoc::from(&result.timings)),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits::default());
        self.serialize(&mut ser)?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
    }
}

/// Pretty JSON formatter that prints every `f64` with 17 significant digits.
#[derive(Default)]
struct FixedDigits(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Writes the deterministic result document (no timings).
pub fn write_result(result: &CoresetResult, path: impl AsRef<Path>) -> Result<()> {
    write_result_with(result, path, false)
}

pub fn write_result_with(
    result: &CoresetResult,
    path: impl AsRef<Path>,
    include_timings: bool,
) -> Result<()> {
    let json = ResultDocument::from_result(result, include_timings).to_json()?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_result(path: impl AsRef<Path>) -> Result<ResultDocument> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn header(n: u64, d: u32) -> Vec<u8> {
        let mut b = EMBEDDING_MAGIC.to_vec();
        b.extend(n.to_le_bytes());
        b.extend(d.to_le_bytes());
        b.extend(DTYPE_F32.to_le_bytes());
        b
    }

    #[test]
    fn embedding_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("e.bin");
        let rows = Array2::from_shape_fn((7, 3), |(i, j)| ((i * 3 + j) as f32 * 0.37 - 2.0) as f64);
        write_embeddings(&path, rows.view()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 7 * 3 * 4);
        assert_eq!(read_embeddings(&path).unwrap(), rows);
    }

    #[test]
    fn embedding_errors() {
        let mut b = header(10, 2);
        b.extend(vec![0u8; 9 * 2 * 4]);
        assert!(matches!(
            decode_embeddings(&b),
            Err(Error::TruncatedPayload {
                expected: 80,
                found: 72
            })
        ));
        let mut wrong = b.clone();
        wrong[..8].copy_from_slice(b"NPYFILE1");
        assert!(matches!(
            decode_embeddings(&wrong),
            Err(Error::UnrecognizedFormat(_))
        ));

        let mut nan = header(2, 1);
        nan.extend(1.0f32.to_le_bytes());
        nan.extend(f32::NAN.to_le_bytes());
        assert!(matches!(
            decode_embeddings(&nan),
            Err(Error::NonFinite { row: 1 })
        ));

        let mut extra = header(1, 1);
        extra.extend([0u8; 5]);
        assert!(matches!(
            decode_embeddings(&extra),
            Err(Error::TrailingData { extra: 1 })
        ));

        let mut dtype = header(1, 1);
        dtype[20] = 1;
        dtype.extend([0u8; 4]);
        assert!(matches!(
            decode_embeddings(&dtype),
            Err(Error::UnsupportedDtype(1))
        ));
    }

    #[test]
    fn bad_magic_names_the_file() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("x.npy");
        std::fs::write(&path, b"\x93NUMPY\x01\x00 garbage garbage garbage").unwrap();
        let err = read_embeddings(&path).unwrap_err();
        assert!(err.to_string().starts_with("unrecognized format"));
    }

    fn labels_file(body: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        std::fs::write(&path, body).unwrap();
        (dir, path)
    }

    #[test]
    fn labels_parse() {
        let (_d, p) = labels_file("index,label\n2,1\n0,0\n1,0\n");
        assert_eq!(read_labels(&p).unwrap(), vec![0, 0, 1]);
    }

    #[test]
    fn labels_errors() {
        let (_d, p) = labels_file("index,label\n0,0\n1,0\n1,1\n");
        let err = read_labels(&p).unwrap_err();
        assert!(matches!(err, Error::DuplicateIndex { index: 1, line: 4 }));
        assert!(err.to_string().contains("line 4"));

        let (_d, p) = labels_file("index,label\n0,0\n1,0\n3,1\n4,1\n");
        assert_eq!(read_labels(&p).unwrap_err().to_string(), "missing index 2");

        let (_d, p) = labels_file("index,label\n0,cat\n");
        assert!(matches!(
            read_labels(&p),
            Err(Error::Labels { line: 2, .. })
        ));

        let (_d, p) = labels_file("id,class\n0,0\n");
        assert!(matches!(
            read_labels(&p),
            Err(Error::Labels { line: 1, .. })
        ));
    }

    #[test]
    fn labels_round_trip() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("l.csv");
        write_labels(&p, &[3, 1, 4, 1, 5]).unwrap();
        assert_eq!(read_labels(&p).unwrap(), vec![3, 1, 4, 1, 5]);
    }

    #[test]
    fn numbers_use_seventeen_digits() {
        let doc = TimingsDoc {
            distances: 0.1,
            similarities: 1.0,
            density: 2.5e-7,
            greedy: 0.0,
            total: 123.456,
        };
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits::default());
        doc.serialize(&mut ser).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"distances\": 1.0000000000000001e-1"));
        assert!(text.contains("\"similarities\": 1.0000000000000000e0"));
        let back: TimingsDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
    }
}
