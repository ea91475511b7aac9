//! Snapshot and table writers.
//!
//! 1-D snapshots are CSV (`x,re_u,im_u`). 2-D snapshots are binary: a
//! 24-byte little-endian header (`dim: u64`, `n: u64`, `period: f64`)
//! followed by row-major `(re, im)` pairs of `f64`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::eikonal::{boundary_modulus, RiccatiExample, RiccatiTrajectory};
use crate::phase_amplitude::WkbBundle;
use crate::spectral::{Field, Grid};

pub fn snapshot_csv(u: &Field) -> String {
    let grid = u.grid();
    let mut out = String::from("x,re_u,im_u\n");
    for (j, v) in u.values().iter().enumerate() {
        let x = grid.coords(j)[0];
        let _ = writeln!(out, "{x:.17e},{:.17e},{:.17e}", v.re, v.im);
    }
    out
}

pub fn write_snapshot_binary(u: &Field, mut w: impl Write) -> io::Result<()> {
    let grid = u.grid();
    w.write_all(&(grid.dim() as u64).to_le_bytes())?;
    w.write_all(&(grid.points_per_dim() as u64).to_le_bytes())?;
    w.write_all(&grid.period().to_le_bytes())?;
    for v in u.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot_binary(mut r: impl Read) -> io::Result<Field> {
    let invalid = |e: crate::Error| io::Error::new(io::ErrorKind::InvalidData, e.to_string());
    let mut word = [0u8; 8];
    let mut next = |r: &mut dyn Read| -> io::Result<[u8; 8]> {
        r.read_exact(&mut word)?;
        Ok(word)
    };
    let dim = u64::from_le_bytes(next(&mut r)?) as usize;
    let n = u64::from_le_bytes(next(&mut r)?) as usize;
    let period = f64::from_le_bytes(next(&mut r)?);
    let grid = Grid::new(dim, n, period).map_err(invalid)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = f64::from_le_bytes(next(&mut r)?);
        let im = f64::from_le_bytes(next(&mut r)?);
        values.push(Complex64::new(re, im));
    }
    Field::complex(&grid, values).map_err(invalid)
}

/// Writes a snapshot in the format matching its dimension.
pub fn save_snapshot(u: &Field, path: &Path) -> io::Result<()> {
    if u.grid().dim() == 1 {
        fs::write(path, snapshot_csv(u))
    } else {
        write_snapshot_binary(u, io::BufWriter::new(fs::File::create(path)?))
    }
}

/// One time slice of a bundle: `x,abs_a,phi,re_a1,im_a1,phi1` (1-D grids).
pub fn bundle_slice_csv(bundle: &WkbBundle, index: usize) -> String {
    let grid = bundle.grid();
    let mut out = String::from("x,abs_a,phi,re_a1,im_a1,phi1\n");
    for j in 0..grid.len() {
        let _ = writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            grid.coords(j)[0],
            bundle.a[index].values()[j].norm(),
            bundle.phi[index].values()[j].re,
            bundle.a1[index].values()[j].re,
            bundle.a1[index].values()[j].im,
            bundle.phi1[index].values()[j].re,
        );
    }
    out
}

/// `t, q_ij…, boundary_modulus[, exact_modulus]` at every stored sample.
pub fn riccati_csv(traj: &RiccatiTrajectory, exact: Option<&RiccatiExample>) -> crate::Result<String> {
    let dim = traj.dim();
    let mut out = String::from("t");
    for i in 0..dim {
        for j in 0..dim {
            let _ = write!(out, ",q{}{}", i + 1, j + 1);
        }
    }
    out.push_str(",boundary_modulus");
    if exact.is_some() {
        out.push_str(",exact_modulus");
    }
    out.push('\n');
    for (t, q) in traj.times().iter().zip(traj.q_samples()) {
        let _ = write!(out, "{t:.17e}");
        for i in 0..dim {
            for j in 0..dim {
                let _ = write!(out, ",{:.17e}", q[(i, j)]);
            }
        }
        let _ = write!(out, ",{:.17e}", boundary_modulus(traj, *t)?);
        if let Some(ex) = exact {
            let _ = write!(out, ",{:.17e}", ex.boundary_modulus_exact(*t, dim));
        }
        out.push('\n');
    }
    Ok(out)
}
