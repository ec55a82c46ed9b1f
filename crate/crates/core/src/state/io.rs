//! Binary and CSV serialisation of states.
//!
//! Binary layout (all little-endian):
//!
//! | field       | type            |
//! |-------------|-----------------|
//! | magic       | `b"GRWS"`       |
//! | version     | `u32` (= 1)     |
//! | dim         | `u32`           |
//! | n_particles | `u32`           |
//! | n_points    | `u32`           |
//! | spacing     | `f64`           |
//! | origins     | `f64 x dim x N` |
//! | count       | `u64`           |
//! | payload     | `(re, im) f64 x count` |

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{DensityMatrix, GridSpec, WaveFunction};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"GRWS";
const VERSION: u32 = 1;

pub fn write_wavefunction<W: Write>(psi: &WaveFunction, mut w: W) -> Result<()> {
    let g = psi.grid();
    w.write_all(MAGIC)?;
    for v in [VERSION, g.dim as u32, psi.n_particles() as u32, g.n_points as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&g.spacing.to_le_bytes())?;
    for grid in psi.grids() {
        for o in &grid.origin {
            w.write_all(&o.to_le_bytes())?;
        }
    }
    w.write_all(&(psi.len() as u64).to_le_bytes())?;
    for a in psi.amplitudes() {
        w.write_all(&a.re.to_le_bytes())?;
        w.write_all(&a.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_wavefunction<R: Read>(mut r: R) -> Result<WaveFunction> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a state file (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = read_u32(&mut r)? as usize;
    let n = read_u32(&mut r)? as usize;
    let n_points = read_u32(&mut r)? as usize;
    if n == 0 || n > 3 {
        return Err(Error::Format(format!("unsupported particle count {n}")));
    }
    let spacing = read_f64(&mut r)?;
    let mut grids = Vec::with_capacity(n);
    for _ in 0..n {
        let origin = (0..dim).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        grids.push(GridSpec::new(dim, n_points, spacing, origin)?);
    }
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    let count = u64::from_le_bytes(b) as usize;
    let expected = grids[0].len().pow(n as u32);
    if count != expected {
        return Err(Error::Format(format!(
            "payload holds {count} amplitudes, header implies {expected}"
        )));
    }
    let mut amps = Vec::with_capacity(count);
    for _ in 0..count {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        amps.push(Complex64::new(re, im));
    }
    WaveFunction::new(grids, amps)
}

/// One row per node: flat index, coordinates of every particle, re, im.
pub fn write_wavefunction_csv<W: Write>(psi: &WaveFunction, mut w: W) -> Result<()> {
    let dim = psi.dim();
    let axes = ["x", "y", "z"];
    let mut header = vec!["index".to_string()];
    for k in 0..psi.n_particles() {
        for a in axes.iter().take(dim) {
            header.push(format!("{a}{k}"));
        }
    }
    header.push("re".into());
    header.push("im".into());
    writeln!(w, "{}", header.join(","))?;
    for (idx, a) in psi.amplitudes().iter().enumerate() {
        let mut row = vec![idx.to_string()];
        for k in 0..psi.n_particles() {
            for c in psi.grids()[k].node(psi.particle_node(idx, k)) {
                row.push(format!("{c}"));
            }
        }
        row.push(format!("{:e}", a.re));
        row.push(format!("{:e}", a.im));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// One row per matrix entry: row, col, re, im.
pub fn write_density_csv<W: Write>(rho: &DensityMatrix, mut w: W) -> Result<()> {
    writeln!(w, "row,col,re,im")?;
    let m = rho.entries();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            writeln!(w, "{i},{j},{:e},{:e}", v.re, v.im)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::GaussianPacket;

    #[test]
    fn binary_round_trip_is_exact() {
        let g = GridSpec::centered(1, 16, 0.5, 0.0).unwrap();
        let psi = WaveFunction::gaussian_packets(
            vec![g.clone(), g.shifted(3.0)],
            &[
                GaussianPacket {
                    center: vec![0.1],
                    width: 1.1,
                    momentum: vec![0.7],
                },
                GaussianPacket::at_rest(vec![3.0], 1.2),
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_wavefunction(&psi, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 16 + 8 + 16 + 8 + 16 * 256);
        let back = read_wavefunction(buf.as_slice()).unwrap();
        assert_eq!(back, psi);
    }

    #[test]
    fn bad_magic_rejected() {
        assert!(matches!(
            read_wavefunction(&b"NOPE0000"[..]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let g = GridSpec::centered(1, 8, 0.5, 0.0).unwrap();
        let psi = WaveFunction::gaussian_packets(vec![g], &[GaussianPacket::at_rest(vec![0.0], 1.0)])
            .unwrap();
        let mut buf = Vec::new();
        write_wavefunction_csv(&psi, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("index,x0,re,im"));
    }
}
