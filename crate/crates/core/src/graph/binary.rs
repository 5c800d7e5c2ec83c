//! Binary graph format, all integers and floats little-endian:
//!
//! ```text
//! "SSAG"  u32 version  u64 n  u64 m
//! reverse CSR: (n+1) x u64 offsets, m x u32 targets, m x f64 weights
//! forward CSR: (n+1) x u64 offsets, m x u32 targets, m x f64 weights
//! ```

use std::io::{self, Read, Write};

use super::{Csr, Graph};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"SSAG";
pub const BINARY_VERSION: u32 = 1;

fn write_csr<W: Write>(w: &mut W, csr: &Csr) -> io::Result<()> {
    for &o in &csr.offsets {
        w.write_all(&o.to_le_bytes())?;
    }
    for &t in &csr.targets {
        w.write_all(&t.to_le_bytes())?;
    }
    for &x in &csr.weights {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_binary<W: Write>(graph: &Graph, writer: W) -> io::Result<()> {
    let mut w = io::BufWriter::new(writer);
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&(graph.n as u64).to_le_bytes())?;
    w.write_all(&(graph.m() as u64).to_le_bytes())?;
    write_csr(&mut w, &graph.rev)?;
    write_csr(&mut w, &graph.fwd)?;
    w.flush()
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner
            .read_exact(&mut buf)
            .map_err(|e| match e.kind() {
                io::ErrorKind::UnexpectedEof => {
                    Error::Format(format!("truncated while reading {what}"))
                }
                _ => Error::Io(e),
            })?;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        self.bytes::<4>(what).map(u32::from_le_bytes)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        self.bytes::<8>(what).map(u64::from_le_bytes)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        self.bytes::<8>(what).map(f64::from_le_bytes)
    }

    fn csr(&mut self, n: usize, m: usize, what: &str) -> Result<Csr> {
        let offsets = (0..=n)
            .map(|_| self.u64(what))
            .collect::<Result<Vec<_>>>()?;
        if offsets[0] != 0 || offsets[n] != m as u64 || offsets.windows(2).any(|p| p[0] > p[1]) {
            return Err(Error::Format(format!("{what} offsets are inconsistent")));
        }
        let targets = (0..m).map(|_| self.u32(what)).collect::<Result<Vec<_>>>()?;
        if targets.iter().any(|&t| t as usize >= n) {
            return Err(Error::Format(format!("{what} target out of range")));
        }
        let weights = (0..m).map(|_| self.f64(what)).collect::<Result<Vec<_>>>()?;
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::Format(format!("{what} weight outside [0, 1]")));
        }
        Ok(Csr {
            offsets,
            targets,
            weights,
        })
    }
}

pub fn read_binary<R: Read>(reader: R) -> Result<Graph> {
    let mut r = Reader {
        inner: io::BufReader::new(reader),
    };
    let magic = r.bytes::<4>("magic")?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = r.u32("version")?;
    if version != BINARY_VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version} (expected {BINARY_VERSION})"
        )));
    }
    let n = r.u64("n")? as usize;
    let m = r.u64("m")? as usize;
    if n > u32::MAX as usize {
        return Err(Error::Format(format!("node count {n} too large")));
    }
    let rev = r.csr(n, m, "reverse adjacency")?;
    let fwd = r.csr(n, m, "forward adjacency")?;
    let graph = Graph::from_forward(n, fwd);
    if graph.rev != rev {
        return Err(Error::Format(
            "reverse adjacency is not the transpose of forward adjacency".into(),
        ));
    }
    Ok(graph)
}
