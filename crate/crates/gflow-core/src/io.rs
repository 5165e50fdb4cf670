//! Snapshot persistence and diagnostics export.
//!
//! Snapshot format (little-endian), stable across versions of this crate:
//!
//! ```text
//! magic   8 bytes  "GFLOW1\0\0"
//! version u32      1
//! kind    u8       0 = gauged state, 1 = css state
//! mu      i8       +1 / -1 (0 for css)
//! N       u32      points per axis
//! L       f64      half-width
//! t       f64      time
//! g       f64      css coupling (0 for kind 0)
//! has_a0  u8       whether an A_0 array follows the others
//! data    f64 arrays, row-major:
//!         kind 0: Re psi1, Im psi1, Re psi2, Im psi2, A1, A2, [A0]
//!         kind 1: Re phi, Im phi, A0, A1, A2
//! ```
//!
//! Round trips are bit-exact. Snapshots always read back with the
//! dirichlet-zero boundary policy; the boundary is a property of the
//! operators, not of the stored fields.

use num_complex::Complex64;
use std::io::Write;
use std::path::Path;

use crate::diag::DiagRow;
use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::flows::CssState;
use crate::gauge::{GaugedState, Mu};
use crate::grid::{Boundary, Grid2D};

const MAGIC: &[u8; 8] = b"GFLOW1\0\0";
const VERSION: u32 = 1;

/// Either kind of persistable state.
#[derive(Clone, Debug)]
pub enum Snapshot {
    Gauged(GaugedState),
    Css(CssState),
}

impl Snapshot {
    pub fn grid(&self) -> &Grid2D {
        match self {
            Snapshot::Gauged(s) => &s.grid,
            Snapshot::Css(s) => &s.grid,
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            Snapshot::Gauged(s) => s.t,
            Snapshot::Css(s) => s.t,
        }
    }
}

fn push_f64s(buf: &mut Vec<u8>, it: impl Iterator<Item = f64>) {
    for v in it {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serialize a snapshot to its canonical byte layout.
pub fn snapshot_bytes(snap: &Snapshot) -> Vec<u8> {
    let grid = snap.grid();
    let mut buf = Vec::with_capacity(64 + 8 * 7 * grid.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    match snap {
        Snapshot::Gauged(s) => {
            buf.push(0u8);
            buf.push(s.mu.sign() as i8 as u8);
            buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
            buf.extend_from_slice(&grid.half_width().to_le_bytes());
            buf.extend_from_slice(&s.t.to_le_bytes());
            buf.extend_from_slice(&0.0f64.to_le_bytes());
            buf.push(u8::from(s.a0.is_some()));
            push_f64s(&mut buf, s.psi1.data().iter().map(|z| z.re));
            push_f64s(&mut buf, s.psi1.data().iter().map(|z| z.im));
            push_f64s(&mut buf, s.psi2.data().iter().map(|z| z.re));
            push_f64s(&mut buf, s.psi2.data().iter().map(|z| z.im));
            push_f64s(&mut buf, s.a1.data().iter().copied());
            push_f64s(&mut buf, s.a2.data().iter().copied());
            if let Some(a0) = &s.a0 {
                push_f64s(&mut buf, a0.data().iter().copied());
            }
        }
        Snapshot::Css(s) => {
            buf.push(1u8);
            buf.push(0u8); // mu unused for css
            buf.extend_from_slice(&(grid.n() as u32).to_le_bytes());
            buf.extend_from_slice(&grid.half_width().to_le_bytes());
            buf.extend_from_slice(&s.t.to_le_bytes());
            buf.extend_from_slice(&s.g.to_le_bytes());
            buf.push(1u8);
            push_f64s(&mut buf, s.phi.data().iter().map(|z| z.re));
            push_f64s(&mut buf, s.phi.data().iter().map(|z| z.im));
            push_f64s(&mut buf, s.a0.data().iter().copied());
            push_f64s(&mut buf, s.a1.data().iter().copied());
            push_f64s(&mut buf, s.a2.data().iter().copied());
        }
    }
    buf
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Snapshot(format!(
                "truncated payload: wanted {} bytes at offset {}, file has {}",
                n,
                self.pos,
                self.buf.len()
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_array(&mut self, len: usize) -> Result<Vec<f64>> {
        let raw = self.take(8 * len)?;
        let mut out = Vec::with_capacity(len);
        for chunk in raw.chunks_exact(8) {
            let v = f64::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::Snapshot("non-finite value in payload".into()));
            }
            out.push(v);
        }
        Ok(out)
    }
}

/// Parse a snapshot from its byte layout, validating the header, payload
/// length and finiteness.
pub fn snapshot_from_bytes(buf: &[u8]) -> Result<Snapshot> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Snapshot("bad magic; not a gflow snapshot".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let kind = r.u8()?;
    let mu_raw = r.u8()? as i8;
    let n = r.u32()? as usize;
    let l = r.f64()?;
    let t = r.f64()?;
    let g = r.f64()?;
    let has_a0 = r.u8()? != 0;
    let grid =
        Grid2D::new(l, n, Boundary::DirichletZero).map_err(|e| Error::Snapshot(e.to_string()))?;
    let len = grid.len();

    let complex_field = |re: Vec<f64>, im: Vec<f64>| -> Result<ComplexField> {
        let data = re
            .into_iter()
            .zip(im)
            .map(|(a, b)| Complex64::new(a, b))
            .collect();
        ComplexField::from_data(grid, data)
    };

    let snap = match kind {
        0 => {
            let mu = Mu::from_sign(mu_raw).map_err(|e| Error::Snapshot(e.to_string()))?;
            let p1 = complex_field(r.f64_array(len)?, r.f64_array(len)?)?;
            let p2 = complex_field(r.f64_array(len)?, r.f64_array(len)?)?;
            let a1 = RealField::from_data(grid, r.f64_array(len)?)?;
            let a2 = RealField::from_data(grid, r.f64_array(len)?)?;
            let a0 = if has_a0 {
                Some(RealField::from_data(grid, r.f64_array(len)?)?)
            } else {
                None
            };
            Snapshot::Gauged(GaugedState {
                grid,
                mu,
                psi1: p1,
                psi2: p2,
                a1,
                a2,
                a0,
                t,
            })
        }
        1 => {
            let phi = complex_field(r.f64_array(len)?, r.f64_array(len)?)?;
            let a0 = RealField::from_data(grid, r.f64_array(len)?)?;
            let a1 = RealField::from_data(grid, r.f64_array(len)?)?;
            let a2 = RealField::from_data(grid, r.f64_array(len)?)?;
            Snapshot::Css(CssState {
                grid,
                phi,
                a0,
                a1,
                a2,
                g,
                t,
            })
        }
        other => return Err(Error::Snapshot(format!("unknown state kind {other}"))),
    };
    if r.pos != buf.len() {
        return Err(Error::Snapshot(format!(
            "trailing bytes: payload ends at {} of {}",
            r.pos,
            buf.len()
        )));
    }
    Ok(snap)
}

pub fn write_snapshot(path: impl AsRef<Path>, snap: &Snapshot) -> Result<()> {
    let bytes = snapshot_bytes(snap);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&bytes)?;
    f.flush()?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let buf = std::fs::read(path)?;
    snapshot_from_bytes(&buf)
}

pub const CSV_HEADER: &str =
    "t,energy,charge,hamiltonian,h_har,virial,morawetz,res_law1,res_law2,res_theta,res_psi";

/// Render one diagnostics row as a CSV line; floats use the shortest
/// round-trip decimal form.
pub fn csv_line(r: &DiagRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.t,
        r.energy,
        r.charge,
        r.hamiltonian,
        r.h_har,
        r.virial,
        r.morawetz,
        r.res_law1,
        r.res_law2,
        r.res_theta,
        r.res_psi
    )
}

pub fn write_timeseries(path: impl AsRef<Path>, rows: &[DiagRow]) -> Result<()> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&csv_line(r));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parse a diagnostics CSV produced by `write_timeseries`; lossless for the
/// eleven stored columns.
pub fn read_timeseries(path: impl AsRef<Path>) -> Result<Vec<DiagRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(Error::Snapshot(format!(
                "bad csv header: {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| Error::Snapshot(format!("csv row {k}: {e}")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != 11 {
            return Err(Error::Snapshot(format!(
                "csv row {k} has {} columns, want 11",
                vals.len()
            )));
        }
        rows.push(DiagRow {
            t: vals[0],
            energy: vals[1],
            charge: vals[2],
            hamiltonian: vals[3],
            h_har: vals[4],
            virial: vals[5],
            morawetz: vals[6],
            res_law1: vals[7],
            res_law2: vals[8],
            res_theta: vals[9],
            res_psi: vals[10],
            css_curv: 0.0,
            sup_t00: 0.0,
        });
    }
    Ok(rows)
}
