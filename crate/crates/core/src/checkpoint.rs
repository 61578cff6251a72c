//! Binary velocity checkpoints.
//!
//! Layout, all little-endian 64-bit words:
//!
//! | offset | content                                   |
//! |--------|-------------------------------------------|
//! | 0      | magic `b"VXALCKPT"`                       |
//! | 8      | format version (`u64`, currently 1)       |
//! | 16     | points per side `n` (`u64`)               |
//! | 24     | time (`f64`)                              |
//! | 32     | viscosity ν (`f64`)                       |
//! | 40     | coefficients                              |
//!
//! Coefficients follow for component x, then y, then z; each component is the
//! `n^3` spectral array in row-major order with real and imaginary parts
//! interleaved as `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{SpectralField, VectorField};
use crate::grid::Grid;
use crate::solver::SolverState;

pub const MAGIC: &[u8; 8] = b"VXALCKPT";
pub const VERSION: u64 = 1;
pub const HEADER_LEN: usize = 40;

pub fn write_state<W: Write>(mut w: W, state: &SolverState) -> Result<()> {
    let grid = state.grid();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.n() as u64).to_le_bytes())?;
    w.write_all(&state.time.to_le_bytes())?;
    w.write_all(&state.nu.to_le_bytes())?;
    for comp in state.u_hat.components() {
        for c in comp.coeffs() {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
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

pub fn read_state<R: Read>(mut r: R) -> Result<SolverState> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Checkpoint("truncated header".into()))?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let version = read_u64(&mut r)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let n = read_u64(&mut r)? as usize;
    let grid: Arc<Grid> = Grid::new(n)?;
    let time = read_f64(&mut r)?;
    let nu = read_f64(&mut r)?;
    let mut comps = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut coeffs = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = read_f64(&mut r)
                .map_err(|_| Error::Checkpoint("truncated coefficient block".into()))?;
            let im = read_f64(&mut r)
                .map_err(|_| Error::Checkpoint("truncated coefficient block".into()))?;
            coeffs.push(Complex64::new(re, im));
        }
        comps.push(SpectralField::from_coeffs(&grid, coeffs)?);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after coefficients".into()));
    }
    let comps: [SpectralField; 3] = comps.try_into().expect("three components");
    Ok(SolverState {
        u_hat: VectorField::from_components(comps)?,
        time,
        nu,
    })
}

pub fn save(path: &Path, state: &SolverState) -> Result<()> {
    write_state(BufWriter::new(File::create(path)?), state)
}

pub fn load(path: &Path) -> Result<SolverState> {
    read_state(BufReader::new(File::open(path)?))
}
