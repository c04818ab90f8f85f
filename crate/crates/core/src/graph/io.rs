//! `GXG1` binary graph cache.
//!
//! Layout (all little-endian): magic `b"GXG1"`, `u64 n`, `u64 nnz`,
//! `row_ptr: [u64; n + 1]`, `col_idx: [u64; nnz]`, `weights: [f64; nnz]`,
//! `degrees: [f64; n]`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Graph, GraphError, Result};

pub const GRAPH_MAGIC: &[u8; 4] = b"GXG1";

pub fn write_graph<W: Write>(graph: &Graph, mut w: W) -> Result<()> {
    w.write_all(GRAPH_MAGIC)?;
    w.write_all(&(graph.n() as u64).to_le_bytes())?;
    w.write_all(&(graph.nnz() as u64).to_le_bytes())?;
    for &p in graph.row_ptr() {
        w.write_all(&(p as u64).to_le_bytes())?;
    }
    for &c in graph.col_idx() {
        w.write_all(&(c as u64).to_le_bytes())?;
    }
    for &x in graph.weights() {
        w.write_all(&x.to_le_bytes())?;
    }
    for &x in graph.degrees() {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_graph_file(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    write_graph(graph, BufWriter::new(File::create(path)?))
}

/// Reads a `GXG1` stream and validates every graph invariant. The stored
/// degrees must match the recomputed row sums exactly.
pub fn read_graph<R: Read>(mut r: R) -> Result<Graph> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != GRAPH_MAGIC {
        return Err(GraphError::Format(format!("bad magic {magic:?}")));
    }
    let n = read_len(&mut r)?;
    let nnz = read_len(&mut r)?;
    // Guard against absurd headers before allocating.
    if n == 0 || n > (1 << 40) || nnz > (1 << 44) {
        return Err(GraphError::Format(format!("implausible header n = {n}, nnz = {nnz}")));
    }
    let row_ptr = (0..=n).map(|_| read_len(&mut r)).collect::<Result<Vec<_>>>()?;
    let col_idx = (0..nnz).map(|_| read_len(&mut r)).collect::<Result<Vec<_>>>()?;
    let weights = (0..nnz).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let degrees = (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(GraphError::Format("trailing bytes after degree array".into()));
    }

    let graph = Graph::from_csr(n, row_ptr, col_idx, weights)?;
    if let Some(i) = (0..n).find(|&i| graph.degrees()[i].to_bits() != degrees[i].to_bits()) {
        return Err(GraphError::Format(format!(
            "stored degree {} of node {i} differs from row sum {}",
            degrees[i],
            graph.degrees()[i]
        )));
    }
    Ok(graph)
}

pub fn read_graph_file(path: impl AsRef<Path>) -> Result<Graph> {
    read_graph(BufReader::new(File::open(path)?))
}

fn truncated(e: std::io::Error) -> GraphError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        GraphError::Format("truncated file".into())
    } else {
        GraphError::Io(e)
    }
}

fn read_len<R: Read>(r: &mut R) -> Result<usize> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(truncated)?;
    usize::try_from(u64::from_le_bytes(buf)).map_err(|_| GraphError::Format("index exceeds usize".into()))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(truncated)?;
    Ok(f64::from_le_bytes(buf))
}
