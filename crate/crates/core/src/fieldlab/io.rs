use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Boundary, Field, Grid};
use crate::error::{Error, Result};

pub const FIELD_MAGIC: &[u8; 8] = b"AQCFIELD";
pub const FIELD_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub schema_version: u32,
    pub n: usize,
    pub shape: Vec<usize>,
    pub extent: Vec<f64>,
    pub boundary: Boundary,
    pub codim: usize,
    /// Node counts per axis, i.e. the layout of the samples that follow.
    pub nodes: Vec<usize>,
}

/// Writes `magic | u64 header length | JSON header | f64 samples`, all
/// little-endian, samples row-major with components fastest.
pub fn write_field(path: impl AsRef<Path>, f: &Field) -> Result<()> {
    let g = f.grid();
    let header = FieldHeader {
        schema_version: FIELD_SCHEMA_VERSION,
        n: g.n(),
        shape: g.shape().to_vec(),
        extent: g.extent().to_vec(),
        boundary: g.boundary().clone(),
        codim: f.dim(),
        nodes: g.counts().to_vec(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<Field> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(Error::Malformed("not a field file".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 24 {
        return Err(Error::Malformed("field header too large".into()));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: FieldHeader = serde_json::from_slice(&json)?;
    if header.schema_version != FIELD_SCHEMA_VERSION {
        return Err(Error::Malformed(format!("unsupported field schema version {}", header.schema_version)));
    }
    let grid = Grid::new(header.shape, header.extent, header.boundary)?;
    if grid.counts() != header.nodes.as_slice() || grid.n() != header.n {
        return Err(Error::Malformed("field header layout is inconsistent".into()));
    }
    let count = grid.len() * header.codim;
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    Field::from_values(grid, header.codim, values)
}

/// CSV of a 1-D field or a 2-D slice: coordinates then components. For
/// `n > 2` the slice through the middle node of the trailing axes is written.
pub fn write_csv(w: &mut impl Write, f: &Field) -> Result<()> {
    let g = f.grid();
    let axes = g.n().min(2);
    let coords = ["x", "y"];
    let mut header: Vec<String> = coords[..axes].iter().map(|s| s.to_string()).collect();
    header.extend((0..f.dim()).map(|c| format!("u{c}")));
    writeln!(w, "{}", header.join(","))?;
    let mid: Vec<usize> = g.counts().iter().map(|c| c / 2).collect();
    for idx in 0..g.len() {
        let k = g.multi_index(idx);
        if (axes..g.n()).any(|a| k[a] != mid[a]) {
            continue;
        }
        let x = g.coords(idx);
        let row: Vec<String> =
            x[..axes].iter().map(|v| format!("{v}")).chain(f.at(idx).iter().map(|v| format!("{v:e}"))).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.aqcf");
        let g = Grid::new(vec![3, 5], vec![1.0, 2.0], Boundary::DirichletLayer { width: 1 }).unwrap();
        let f = Field::from_fn(g, 2, |x, o| {
            o[0] = x[0] * 1e-300;
            o[1] = -x[1] / 3.0;
        });
        write_field(&path, &f).unwrap();
        assert_eq!(read_field(&path).unwrap(), f);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad");
        std::fs::write(&path, b"NOTAFIELD-------").unwrap();
        assert!(matches!(read_field(&path), Err(Error::Malformed(_))));
    }

    #[test]
    fn csv_slice() {
        let g = Grid::unit(3, 2, Boundary::Periodic).unwrap();
        let f = Field::from_fn(g, 1, |x, o| o[0] = x[0] + x[1] + x[2]);
        let mut buf = Vec::new();
        write_csv(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("x,y,u0\n"));
    }
}
