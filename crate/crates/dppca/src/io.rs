//! CSV and binary matrix formats.
//!
//! CSV is comma-separated dot-decimal (locale-independent); a header row is
//! accepted on input and detected by failure to parse as numbers. Values are
//! written with Rust's shortest round-trip float formatting, so write/read is
//! lossless and byte-deterministic.
//!
//! The binary frame format is a 16-byte header (8-byte magic `DPPCAFV1`,
//! `u32` p, `u32` k, little-endian) followed by `p * k` little-endian `f64`
//! values in column-major order.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mechanism::OrthoFrame;

const FRAME_MAGIC: &[u8; 8] = b"DPPCAFV1";

/// Reads a numeric CSV matrix; rows are samples. A single leading header row
/// is skipped when its fields do not parse as numbers.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    parse_matrix_csv(&text)
}

/// Parses CSV text into a matrix (see [`read_matrix_csv`]).
pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(values) => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        context: format!("line {}", lineno + 1),
                    });
                }
                match width {
                    None => width = Some(values.len()),
                    Some(w) if w != values.len() => {
                        return Err(Error::Parse(format!(
                            "line {} has {} fields, expected {w}",
                            lineno + 1,
                            values.len()
                        )));
                    }
                    _ => {}
                }
                rows.push(values);
            }
            Err(_) => {
                // only the first non-empty line may be a header
                if rows.is_empty() && width.is_none() {
                    continue;
                }
                return Err(Error::Parse(format!(
                    "line {} is not numeric",
                    lineno + 1
                )));
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (n, p) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

/// Writes a matrix as plain numeric CSV (shortest round-trip formatting).
pub fn write_matrix_csv(path: &Path, matrix: &DMatrix<f64>) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            if j > 0 {
                w.write_all(b",")?;
            }
            write!(w, "{}", matrix[(i, j)])?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a two-column CSV curve with a header line.
pub fn write_curve_csv(path: &Path, header: (&str, &str), rows: &[(f64, f64)]) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{},{}", header.0, header.1)?;
    for (x, y) in rows {
        writeln!(w, "{x},{y}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a frame in the binary format described in the module docs.
pub fn write_frame_binary(path: &Path, frame: &OrthoFrame) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(FRAME_MAGIC)?;
    w.write_all(&(frame.p() as u32).to_le_bytes())?;
    w.write_all(&(frame.k() as u32).to_le_bytes())?;
    let m = frame.matrix();
    for j in 0..frame.k() {
        for i in 0..frame.p() {
            w.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a binary frame and re-validates orthonormality.
pub fn read_frame_binary(path: &Path) -> Result<OrthoFrame> {
    let bytes = fs::read(path)?;
    if bytes.len() < 16 || &bytes[0..8] != FRAME_MAGIC {
        return Err(Error::Parse("not a dppca frame file".into()));
    }
    let p = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let k = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let expected = 16 + 8 * p * k;
    if bytes.len() != expected {
        return Err(Error::Parse(format!(
            "frame file has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let mut m = DMatrix::zeros(p, k);
    let mut off = 16;
    for j in 0..k {
        for i in 0..p {
            m[(i, j)] = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            off += 8;
        }
    }
    OrthoFrame::new(m)
}

/// Writes a matrix file, choosing the format by extension: `.bin` is the
/// binary frame format, anything else is CSV (`p` rows, `k` columns).
pub fn write_frame(path: &Path, frame: &OrthoFrame) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => write_frame_binary(path, frame),
        _ => write_matrix_csv(path, frame.matrix()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::sample_haar_frame;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    #[test]
    fn parse_with_and_without_header() {
        let plain = "1.0,2.0\n3.5,-4.25\n";
        let m = parse_matrix_csv(plain).unwrap();
        assert_eq!(m.nrows(), 2);
        assert_eq!(m[(1, 1)], -4.25);
        let with_header = "a,b\n1.0,2.0\n3.5,-4.25\n";
        assert_eq!(parse_matrix_csv(with_header).unwrap(), m);
    }

    #[test]
    fn parse_rejects_ragged_and_empty() {
        assert!(matches!(
            parse_matrix_csv("1,2\n3\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(parse_matrix_csv(""), Err(Error::EmptyDataset)));
        assert!(matches!(
            parse_matrix_csv("h1,h2\n"),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            parse_matrix_csv("1,2\nx,3\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_matrix_csv("1,inf\n"),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn frame_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.bin");
        let frame = sample_haar_frame(7, 3, &mut stream_rng(50, 0)).unwrap();
        write_frame_binary(&path, &frame).unwrap();
        let back = read_frame_binary(&path).unwrap();
        assert_eq!(back.matrix(), frame.matrix());
        // header sanity
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..8], b"DPPCAFV1");
        assert_eq!(bytes.len(), 16 + 8 * 21);
    }

    #[test]
    fn frame_binary_rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.bin");
        let frame = sample_haar_frame(4, 2, &mut stream_rng(51, 0)).unwrap();
        write_frame_binary(&path, &frame).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_frame_binary(&path), Err(Error::Parse(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        /// CSV write/read is lossless for arbitrary finite doubles.
        #[test]
        fn csv_round_trip(values in proptest::collection::vec(-1e12f64..1e12, 1..40)) {
            let n = values.len();
            let m = DMatrix::from_fn(n, 1, |i, _| values[i]);
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.csv");
            write_matrix_csv(&path, &m).unwrap();
            let back = read_matrix_csv(&path).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
