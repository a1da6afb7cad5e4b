//! BFLD v1 field files and CSV export.
//!
//! Header: magic "BFLD", u32 version = 1, u32 n, f64 L, u8 dtype
//! (0 = f64 real, 1 = c128 complex), all little-endian, followed by the
//! row-major node values. Files store the total value at each node, so a
//! field read back is a plain sample table (no tail, no declared support).

use crate::anisotropic::MatrixField;
use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::grid::Grid;
use num_complex::Complex64;
use std::io::{BufWriter, Read as _, Write as _};
use std::path::Path;

const MAGIC: &[u8; 4] = b"BFLD";
const VERSION: u32 = 1;

fn write_header<W: std::io::Write>(w: &mut W, grid: Grid, dtype: u8) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.n() as u32).to_le_bytes())?;
    w.write_all(&grid.half_extent().to_le_bytes())?;
    w.write_all(&[dtype])?;
    Ok(())
}

fn read_header(bytes: &[u8]) -> Result<(Grid, u8, &[u8])> {
    if bytes.len() < 21 {
        return Err(Error::Format("file too short for a BFLD header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic (not a BFLD file)".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported BFLD version {}", version)));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let l = f64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let dtype = bytes[20];
    let grid = Grid::new(n, l)?;
    let payload = &bytes[21..];
    let want = n * n * if dtype == 1 { 16 } else { 8 };
    if dtype > 1 {
        return Err(Error::Format(format!("unknown dtype {}", dtype)));
    }
    if payload.len() != want {
        return Err(Error::Format(format!(
            "payload is {} bytes, expected {}",
            payload.len(),
            want
        )));
    }
    Ok((grid, dtype, payload))
}

pub fn write_real(path: &Path, f: &RealField) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut w, f.grid, 0)?;
    for v in f.total() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_complex(path: &Path, f: &ComplexField) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut w, f.grid, 1)?;
    for v in f.total() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_real(path: &Path) -> Result<RealField> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let (grid, dtype, payload) = read_header(&bytes)?;
    if dtype != 0 {
        return Err(Error::Format("expected a real (dtype 0) field".into()));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut out = RealField::zeros(grid);
    out.data = data;
    Ok(out)
}

pub fn read_complex(path: &Path) -> Result<ComplexField> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let (grid, dtype, payload) = read_header(&bytes)?;
    if dtype != 1 {
        return Err(Error::Format("expected a complex (dtype 1) field".into()));
    }
    let data = payload
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..16].try_into().unwrap()),
            )
        })
        .collect();
    let mut out = ComplexField::zeros(grid);
    out.data = data;
    Ok(out)
}

/// Peek at the dtype of a BFLD file without loading the payload.
pub fn probe_dtype(path: &Path) -> Result<u8> {
    let mut head = [0u8; 21];
    std::fs::File::open(path)?.read_exact(&mut head)?;
    if &head[0..4] != MAGIC {
        return Err(Error::Format("bad magic (not a BFLD file)".into()));
    }
    Ok(head[20])
}

/// CSV export, one line "x,y,re,im" per node (im = 0 for real fields).
pub fn export_csv(path: &Path, grid: Grid, values: &[Complex64]) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let n = grid.n();
    for k in 0..n {
        for j in 0..n {
            let z = grid.node(j, k);
            let v = values[grid.index(j, k)];
            writeln!(w, "{},{},{},{}", z.re, z.im, v.re, v.im)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write a matrix coefficient field as three BFLD files plus a JSON manifest
/// {"a11": path, "a12": path, "a22": path} with paths relative to the
/// manifest's directory.
pub fn write_matrix(manifest_path: &Path, a: &MatrixField) -> Result<()> {
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let stem = manifest_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("matrix");
    let mut names = serde_json::Map::new();
    for (key, field) in [("a11", &a.a11), ("a12", &a.a12), ("a22", &a.a22)] {
        let name = format!("{}_{}.bfld", stem, key);
        write_real(&dir.join(&name), field)?;
        names.insert(key.to_string(), serde_json::Value::String(name));
    }
    std::fs::write(
        manifest_path,
        serde_json::to_string_pretty(&serde_json::Value::Object(names))?,
    )?;
    Ok(())
}

pub fn read_matrix(manifest_path: &Path) -> Result<MatrixField> {
    let text = std::fs::read_to_string(manifest_path)?;
    let manifest: serde_json::Value = serde_json::from_str(&text)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut parts = Vec::new();
    for key in ["a11", "a12", "a22"] {
        let rel = manifest
            .get(key)
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Format(format!("manifest missing \"{}\"", key)))?;
        parts.push(read_real(&dir.join(rel))?);
    }
    let a22 = parts.pop().unwrap();
    let a12 = parts.pop().unwrap();
    let a11 = parts.pop().unwrap();
    MatrixField::new(a11, a12, a22)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::radial_bump;
    use num_complex::Complex64;

    #[test]
    fn real_roundtrip_is_exact() {
        let g = Grid::new(32, 2.0).unwrap();
        let f = radial_bump(g, 1.3, 0.7);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.bfld");
        write_real(&p, &f).unwrap();
        let back = read_real(&p).unwrap();
        assert_eq!(back.grid.n(), 32);
        assert_eq!(back.grid.half_extent(), 2.0);
        assert_eq!(back.data, f.data);
        assert_eq!(probe_dtype(&p).unwrap(), 0);
    }

    #[test]
    fn complex_roundtrip_is_exact() {
        let g = Grid::new(16, 1.0).unwrap();
        let f = ComplexField::sample(g, |z| z * z + Complex64::new(0.1, -0.4), None);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.bfld");
        write_complex(&p, &f).unwrap();
        let back = read_complex(&p).unwrap();
        assert_eq!(back.data, f.data);
        assert_eq!(probe_dtype(&p).unwrap(), 1);
    }

    #[test]
    fn rejects_corrupt_headers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.bfld");
        std::fs::write(&p, b"NOPE").unwrap();
        assert!(matches!(read_real(&p), Err(Error::Format(_))));
        std::fs::write(&p, b"BFLD\x02\x00\x00\x00rest of a header..").unwrap();
        assert!(matches!(read_real(&p), Err(Error::Format(_))));
    }

    #[test]
    fn matrix_manifest_roundtrip() {
        let g = Grid::new(16, 2.0).unwrap();
        let a = MatrixField::identity(g);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        write_matrix(&p, &a).unwrap();
        let back = read_matrix(&p).unwrap();
        assert_eq!(back.a11.data, a.a11.data);
        assert_eq!(back.a12.data, a.a12.data);
        assert_eq!(back.a22.data, a.a22.data);
    }

    #[test]
    fn csv_lines() {
        let g = Grid::new(16, 1.0).unwrap();
        let vals: Vec<Complex64> = (0..256).map(|i| Complex64::new(i as f64, 0.0)).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        export_csv(&p, g, &vals).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 256);
        assert!(text.lines().next().unwrap().starts_with("-1,-1,0,0"));
    }
}
