//! Field snapshots on disk.
//!
//! Binary layout, all little-endian:
//! `b"NSFD"`, u32 version, u32 dim, u32 ncomp, u64 shape[dim], f64 origin[dim],
//! f64 spacing[dim], f64 t_start, f64 dt, u64 nt, then `nt * ncomp * nodes` f64
//! values ordered by time slice, then component, then node (axis 0 slowest).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::field::{SpaceTime, VectorField};
use crate::fields::grid::{Grid, TimeAxis};

const MAGIC: &[u8; 4] = b"NSFD";
const VERSION: u32 = 1;

/// A time series of vector fields, or a single snapshot when `nt == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: TimeAxis,
    pub slices: Vec<VectorField>,
}

impl From<&SpaceTime<VectorField>> for Snapshot {
    fn from(s: &SpaceTime<VectorField>) -> Self {
        Self { time: s.time, slices: s.slices.clone() }
    }
}

pub fn write_binary<W: Write>(mut w: W, snap: &Snapshot) -> Result<()> {
    let first = snap
        .slices
        .first()
        .ok_or_else(|| Error::ShapeMismatch("empty snapshot".into()))?;
    let g = &first.grid;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    w.write_all(&(first.ncomp() as u32).to_le_bytes())?;
    for &n in &g.shape {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for v in g.origin.iter().chain(&g.spacing) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&snap.time.start.to_le_bytes())?;
    w.write_all(&snap.time.dt.to_le_bytes())?;
    w.write_all(&(snap.slices.len() as u64).to_le_bytes())?;
    for s in &snap.slices {
        for c in &s.comps {
            for v in c {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Snapshot> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::ShapeMismatch("not a field snapshot".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::ShapeMismatch(format!("unsupported snapshot version {version}")));
    }
    let dim = read_u32(&mut r)? as usize;
    let ncomp = read_u32(&mut r)? as usize;
    let shape = (0..dim).map(|_| read_u64(&mut r).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let origin = (0..dim).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let spacing = (0..dim).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let start = read_f64(&mut r)?;
    let dt = read_f64(&mut r)?;
    let nt = read_u64(&mut r)? as usize;
    let grid = Grid { shape, origin, spacing };
    let n = grid.len();
    let mut slices = Vec::with_capacity(nt);
    for _ in 0..nt {
        let comps = (0..ncomp)
            .map(|_| (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        slices.push(VectorField { grid: grid.clone(), comps });
    }
    Ok(Snapshot { time: TimeAxis { start, dt, n: nt }, slices })
}

pub fn save_binary(path: &Path, snap: &Snapshot) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_binary(f, snap)
}

pub fn load_binary(path: &Path) -> Result<Snapshot> {
    read_binary(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// One CSV row per node and time slice: coordinates, time, then components.
pub fn write_csv<W: Write>(w: W, snap: &Snapshot) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let Some(first) = snap.slices.first() else {
        return Ok(());
    };
    let dim = first.grid.dim();
    let mut header: Vec<String> = (0..dim).map(|a| format!("x{}", a + 1)).collect();
    header.push("t".into());
    header.extend((0..first.ncomp()).map(|c| format!("c{c}")));
    out.write_record(&header)?;
    for (k, s) in snap.slices.iter().enumerate() {
        let t = snap.time.time(k);
        for i in 0..s.grid.len() {
            let x = s.grid.coords(i);
            let mut row: Vec<String> = x[..dim].iter().map(|v| format!("{v:e}")).collect();
            row.push(format!("{t:e}"));
            row.extend(s.comps.iter().map(|c| format!("{:e}", c[i])));
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_roundtrip_is_exact() {
        let g = Grid::new_box(&[0.0, -0.5], &[1.0, 2.0], &[4, 5]).unwrap();
        let ax = TimeAxis::symmetric(0.5, 0.1, 3);
        let slices = (0..ax.n)
            .map(|k| VectorField::from_fn(&g, 2, |x| [x[0].sin() + k as f64, x[1] / 3.0, 0.0]))
            .collect();
        let snap = Snapshot { time: ax, slices };
        let mut buf = Vec::new();
        write_binary(&mut buf, &snap).unwrap();
        let back = read_binary(buf.as_slice()).unwrap();
        assert_eq!(back, snap);
    }

    #[test]
    fn bad_magic_rejected() {
        assert!(read_binary(&b"XXXX\0\0\0\0"[..]).is_err());
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let g = Grid::new_box(&[0.0, 0.0], &[1.0, 1.0], &[3, 3]).unwrap();
        let snap = Snapshot {
            time: TimeAxis { start: 0.0, dt: 1.0, n: 1 },
            slices: vec![VectorField::zeros(&g, 2)],
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &snap).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 16);
        assert!(text.starts_with("x1,x2,t,c0,c1"));
    }
}
