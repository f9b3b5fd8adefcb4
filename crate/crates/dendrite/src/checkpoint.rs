//! Binary checkpoints for restart.
//!
//! Little-endian layout: magic `DNDRCKPT`, format version (u32), dimension
//! (u32), nodes per axis (3 x u64), spacing (3 x f64), origin (3 x f64),
//! step count (u64), time (f64), RNG seed (u64), RNG word position (u128),
//! then the scalar and phi nodal values (f64 each).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use dendrite_core::{FieldState, Grid};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DNDRCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub grid: Grid,
    pub steps: u64,
    pub rng_seed: u64,
    pub rng_word_pos: u128,
    pub state: FieldState,
}

pub fn write_checkpoint_to<W: Write>(mut w: W, c: &Checkpoint) -> std::io::Result<()> {
    let g = &c.grid;
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(g.dim() as u32).to_le_bytes())?;
    for n in g.nodes_per_axis() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    for v in g.spacing().into_iter().chain(g.origin()) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&c.steps.to_le_bytes())?;
    w.write_all(&c.state.time.to_le_bytes())?;
    w.write_all(&c.rng_seed.to_le_bytes())?;
    w.write_all(&c.rng_word_pos.to_le_bytes())?;
    for v in c.state.scalar.iter().chain(&c.state.phi) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn write_checkpoint(path: &Path, c: &Checkpoint) -> Result<()> {
    c.state.check(&c.grid)?;
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint_to(BufWriter::new(f), c).map_err(|e| Error::io(path, e))
}

struct Reader<'a, R> {
    r: R,
    path: &'a Path,
}

impl<R: Read> Reader<'_, R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.r.read_exact(&mut b).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                self.malformed("file is truncated")
            } else {
                Error::io(self.path, e)
            }
        })?;
        Ok(b)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn malformed(&self, reason: &str) -> Error {
        Error::Checkpoint {
            path: self.path.to_path_buf(),
            reason: reason.to_string(),
        }
    }
}

pub fn read_checkpoint_from<R: Read>(r: R, path: &Path) -> Result<Checkpoint> {
    let mut rd = Reader { r, path };
    if &rd.bytes::<8>()? != MAGIC {
        return Err(rd.malformed("not a checkpoint file"));
    }
    let version = rd.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::CheckpointVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let dim = rd.u32()? as usize;
    if !(dim == 2 || dim == 3) {
        return Err(rd.malformed("dimension must be 2 or 3"));
    }
    let mut n = [0usize; 3];
    for v in n.iter_mut() {
        *v = usize::try_from(rd.u64()?).map_err(|_| rd.malformed("node count overflows"))?;
    }
    let mut spacing = [0.0; 3];
    let mut origin = [0.0; 3];
    for v in spacing.iter_mut().chain(origin.iter_mut()) {
        *v = rd.f64()?;
    }
    let grid = Grid::new(&n[..dim], &spacing[..dim], &origin[..dim])
        .map_err(|e| rd.malformed(&format!("bad grid: {e}")))?;
    let steps = rd.u64()?;
    let time = rd.f64()?;
    let rng_seed = rd.u64()?;
    let rng_word_pos = u128::from_le_bytes(rd.bytes()?);
    let count = grid.node_count();
    let mut scalar = Vec::with_capacity(count);
    let mut phi = Vec::with_capacity(count);
    for _ in 0..count {
        scalar.push(rd.f64()?);
    }
    for _ in 0..count {
        phi.push(rd.f64()?);
    }
    let mut extra = [0u8; 1];
    match rd.r.read(&mut extra) {
        Ok(0) => {}
        Ok(_) => return Err(rd.malformed("trailing data")),
        Err(e) => return Err(Error::io(path, e)),
    }
    Ok(Checkpoint {
        grid,
        steps,
        rng_seed,
        rng_word_pos,
        state: FieldState { scalar, phi, time },
    })
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint_from(BufReader::new(f), path)
}
