//! File formats: point-set CSV with a JSON sidecar, hoop constraints,
//! directional spectra and plain numeric tables.
//!
//! CSV numbers are rounded to 12 significant digits; JSON keeps full double
//! precision.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::direction::{Convention, PointSet};
use crate::error::{Error, Result};
use crate::hrtf::DirectionalSpectrum;
use crate::optimizer::HoopConstraintSet;

/// Significant digits written to CSV files.
pub const CSV_DIGITS: usize = 12;

/// Rounds to [`CSV_DIGITS`] significant digits and prints the shortest form.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{:.*e}", CSV_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    rounded.to_string()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidInput(format!("cannot open {}: {e}", path.display())))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}

/// Writes a header and rows of numbers.
pub fn write_table<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch(format!(
                "row has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        csv.write_record(row.iter().map(|&x| format_number(x)))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_table_file(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    write_table(create(path)?, header, rows)
}

/// Reads a numeric CSV with a header row; returns the header and the rows.
pub fn read_table<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (line, record) in csv.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("row {}: `{f}` is not a number: {e}", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Sidecar metadata of a point-set CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSetMeta {
    pub convention: Convention,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
}

/// `points.csv` → `points.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes `theta,phi` rows in the set's own convention.
pub fn write_points_csv<W: Write>(w: W, points: &PointSet) -> Result<()> {
    write_table(
        w,
        &["theta", "phi"],
        points.directions().iter().map(|d| vec![d.theta, d.phi]),
    )
}

pub fn read_points_csv<R: Read>(r: R, meta: &PointSetMeta) -> Result<PointSet> {
    let (header, rows) = read_table(r)?;
    if header != ["theta", "phi"] {
        return Err(Error::InvalidInput(format!(
            "point CSV header must be `theta,phi`, found `{}`",
            header.join(",")
        )));
    }
    let angles: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| match r.as_slice() {
            &[t, p] => Ok((t, p)),
            _ => Err(Error::InvalidInput("point rows need exactly two fields".into())),
        })
        .collect::<Result<_>>()?;
    let ps = PointSet::from_angles(&angles, meta.convention)?;
    match &meta.labels {
        Some(l) => ps.with_labels(l.clone()),
        None => Ok(ps),
    }
}

/// Writes the CSV and its sidecar JSON next to it.
pub fn save_point_set(csv_path: &Path, points: &PointSet) -> Result<()> {
    let mut w = create(csv_path)?;
    write_points_csv(&mut w, points)?;
    w.flush()?;
    write_json(
        &sidecar_path(csv_path),
        &PointSetMeta {
            convention: points.convention(),
            labels: points.labels().map(<[usize]>::to_vec),
        },
    )
}

/// Reads a point-set CSV; without a sidecar the angles are taken as
/// colatitudes from +z.
pub fn load_point_set(csv_path: &Path) -> Result<PointSet> {
    let sidecar = sidecar_path(csv_path);
    let meta = if sidecar.exists() {
        read_json(&sidecar)?
    } else {
        PointSetMeta {
            convention: Convention::FromZAxis,
            labels: None,
        }
    };
    read_points_csv(open(csv_path)?, &meta)
}

/// Hoop JSON `{"membership": [...], "caps": [...]}`, validated on load.
pub fn load_hoops(path: &Path) -> Result<HoopConstraintSet> {
    let raw: HoopConstraintSet = read_json(path)?;
    HoopConstraintSet::new(raw.membership, raw.caps)
}

pub fn save_hoops(path: &Path, hoops: &HoopConstraintSet) -> Result<()> {
    write_json(path, hoops)
}

/// JSON header of a stored spectrum. Paths are relative to the header file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumHeader {
    /// Point-set CSV of the directions.
    pub directions: String,
    pub wavenumbers: Vec<f64>,
    /// CSV with columns `re_0,im_0,re_1,im_1,…`, one row per direction.
    pub values: String,
}

fn resolve(base: &Path, relative: &str) -> PathBuf {
    base.parent().unwrap_or(Path::new("")).join(relative)
}

/// Writes `<stem>.json` (header), `<stem>.points.csv` (+ sidecar) and
/// `<stem>.values.csv` next to `header_path`.
pub fn save_spectrum(header_path: &Path, spectrum: &DirectionalSpectrum) -> Result<()> {
    let stem = header_path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidInput(format!("bad spectrum path {}", header_path.display())))?;
    let header = SpectrumHeader {
        directions: format!("{stem}.points.csv"),
        wavenumbers: spectrum.wavenumbers().to_vec(),
        values: format!("{stem}.values.csv"),
    };
    save_point_set(&resolve(header_path, &header.directions), spectrum.directions())?;
    let k = spectrum.wavenumbers().len();
    let names: Vec<String> = (0..k).flat_map(|i| [format!("re_{i}"), format!("im_{i}")]).collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let v = spectrum.values();
    write_table_file(
        &resolve(header_path, &header.values),
        &names,
        (0..v.nrows()).map(|r| v.row(r).iter().flat_map(|z| [z.re, z.im]).collect()),
    )?;
    write_json(header_path, &header)
}

pub fn load_spectrum(header_path: &Path) -> Result<DirectionalSpectrum> {
    let header: SpectrumHeader = read_json(header_path)?;
    let points = load_point_set(&resolve(header_path, &header.directions))?;
    let (_, rows) = read_table(open(&resolve(header_path, &header.values))?)?;
    let k = header.wavenumbers.len();
    if rows.len() != points.len() || rows.iter().any(|r| r.len() != 2 * k) {
        return Err(Error::DimensionMismatch(format!(
            "spectrum values must be {} rows × {} columns",
            points.len(),
            2 * k
        )));
    }
    let values = DMatrix::from_fn(points.len(), k, |i, j| {
        Complex64::new(rows[i][2 * j], rows[i][2 * j + 1])
    });
    DirectionalSpectrum::new(points, header.wavenumbers, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hrtf::{protocol_wavenumbers, synth_field};
    use crate::sampling;

    #[test]
    fn numbers_keep_twelve_digits() {
        assert_eq!(format_number(std::f64::consts::PI), "3.14159265359");
        assert_eq!(format_number(0.5), "0.5");
        assert_eq!(format_number(-1.234567890123456e-7), "-0.000000123456789012");
        assert_eq!(format_number(0.0), "0");
    }

    #[test]
    fn point_set_round_trip_keeps_labels_and_convention() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        let ps = sampling::ecc();
        save_point_set(&path, &ps).unwrap();
        let back = load_point_set(&path).unwrap();
        assert_eq!(back.len(), ps.len());
        assert_eq!(back.convention(), ps.convention());
        assert_eq!(back.labels(), ps.labels());
        for (a, b) in ps.directions().iter().zip(back.directions()) {
            assert!((a.theta - b.theta).abs() < 1e-11 && (a.phi - b.phi).abs() < 1e-11);
        }
        let meta: serde_json::Value = read_json(&dir.path().join("grid.json")).unwrap();
        assert_eq!(meta["convention"], "above_xy");
    }

    #[test]
    fn bad_point_csv_is_rejected() {
        let meta = PointSetMeta {
            convention: Convention::FromZAxis,
            labels: None,
        };
        assert!(read_points_csv("x,y\n0.1,0.2\n".as_bytes(), &meta).is_err());
        assert!(read_points_csv("theta,phi\n0.1,abc\n".as_bytes(), &meta).is_err());
        assert!(read_points_csv("theta,phi\n4.0,0.1\n".as_bytes(), &meta).is_err());
        assert!(load_point_set(Path::new("/nonexistent/p.csv")).is_err());
    }

    #[test]
    fn hoops_round_trip_and_validate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hoops.json");
        let h = HoopConstraintSet::new(vec![0, 0, 1], vec![1, 1]).unwrap();
        save_hoops(&path, &h).unwrap();
        assert_eq!(load_hoops(&path).unwrap(), h);
        std::fs::write(&path, r#"{"membership":[0,2],"caps":[1]}"#).unwrap();
        assert!(load_hoops(&path).is_err());
    }

    #[test]
    fn spectrum_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.json");
        let (s, _) = synth_field(3, 2, &protocol_wavenumbers()[..3], &sampling::fibonacci(20).unwrap());
        save_spectrum(&path, &s).unwrap();
        let back = load_spectrum(&path).unwrap();
        assert_eq!(back.wavenumbers(), s.wavenumbers());
        assert!((back.values() - s.values()).norm() < 1e-10 * s.values().norm());
    }
}
