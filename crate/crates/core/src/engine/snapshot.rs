//! Host copies of particle positions and their on-disk formats.
//!
//! CSV: header `id,group,<var names...>`, one row per particle.
//! Binary: magic `SWRM`, then little-endian `u32` particle count, `u32`
//! dimension count, `u32` layout code, then the `f32` values in that layout.

use std::io::{self, Read, Write};

use crate::layout::Layout;

pub const MAGIC: &[u8; 4] = b"SWRM";

/// Positions of a contiguous particle range, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub names: Vec<String>,
    pub first: usize,
    pub group_ids: Vec<u32>,
    pub values: Vec<f32>,
}

impl Snapshot {
    pub fn dims(&self) -> usize {
        self.names.len()
    }

    pub fn len(&self) -> usize {
        self.group_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group_ids.is_empty()
    }

    /// Components of the `i`-th particle in the snapshot.
    pub fn particle(&self, i: usize) -> &[f32] {
        let n = self.dims();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn particles(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.dims().max(1))
    }

    /// One variable across all particles.
    pub fn column(&self, dim: usize) -> Vec<f32> {
        self.particles().map(|p| p[dim]).collect()
    }

    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        write!(w, "id,group")?;
        for n in &self.names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for (i, p) in self.particles().enumerate() {
            write!(w, "{},{}", self.first + i, self.group_ids[i])?;
            for v in p {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_binary(&self, mut w: impl Write, layout: Layout) -> io::Result<()> {
        let (p, n) = (self.len(), self.dims());
        w.write_all(MAGIC)?;
        for v in [p as u32, n as u32, layout.code()] {
            w.write_all(&v.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(p * n * 4);
        for k in 0..p * n {
            let (i, d) = match layout {
                Layout::RowMajor => (k / n, k % n),
                Layout::ColumnMajor => (k % p, k / p),
            };
            buf.extend_from_slice(&self.values[i * n + d].to_le_bytes());
        }
        w.write_all(&buf)
    }
}

/// Contents of a binary snapshot file, returned row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySnapshot {
    pub particles: usize,
    pub dims: usize,
    pub layout: Layout,
    pub values: Vec<f32>,
}

pub fn read_binary(mut r: impl Read) -> io::Result<BinarySnapshot> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[..4] != MAGIC {
        return Err(bad("missing SWRM magic"));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let (p, n) = (word(4) as usize, word(8) as usize);
    let layout = Layout::from_code(word(12)).ok_or_else(|| bad("unknown layout code"))?;
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;
    if raw.len() != p * n * 4 {
        return Err(bad("payload length does not match header"));
    }
    let stored: Vec<f32> = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut values = vec![0.0; p * n];
    for i in 0..p {
        for d in 0..n {
            values[i * n + d] = stored[layout.index(i, d, p, n)];
        }
    }
    Ok(BinarySnapshot {
        particles: p,
        dims: n,
        layout,
        values,
    })
}
