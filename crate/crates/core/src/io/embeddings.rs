//! Embedding matrices: a small header then row-major little-endian `f32`.
//!
//! ```text
//! magic    8 bytes  "LSPIEMB\0"
//! version  u32      1
//! rows     u64
//! cols     u64
//! values   rows * cols f32
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use crate::error::{LspiError, Result};

pub const EMBEDDING_MAGIC: &[u8; 8] = b"LSPIEMB\0";
pub const EMBEDDING_VERSION: u32 = 1;

pub fn write_embeddings(z: &Array2<f64>, path: &Path) -> Result<()> {
    let io = |e| LspiError::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(EMBEDDING_MAGIC).map_err(io)?;
    w.write_u32::<LittleEndian>(EMBEDDING_VERSION).map_err(io)?;
    w.write_u64::<LittleEndian>(z.nrows() as u64).map_err(io)?;
    w.write_u64::<LittleEndian>(z.ncols() as u64).map_err(io)?;
    for &x in z.iter() {
        w.write_f32::<LittleEndian>(x as f32).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_embeddings(path: &Path) -> Result<Array2<f64>> {
    let io = |e| LspiError::io(path, e);
    let mut r = BufReader::new(File::open(path).map_err(io)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != EMBEDDING_MAGIC {
        return Err(LspiError::Schema {
            file: path.to_path_buf(),
            message: "not an embedding file".into(),
        });
    }
    let version = r.read_u32::<LittleEndian>().map_err(io)?;
    if version != EMBEDDING_VERSION {
        return Err(LspiError::UnsupportedVersion {
            found: version,
            supported: EMBEDDING_VERSION,
        });
    }
    let rows = r.read_u64::<LittleEndian>().map_err(io)? as usize;
    let cols = r.read_u64::<LittleEndian>().map_err(io)? as usize;
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        values.push(f64::from(r.read_f32::<LittleEndian>().map_err(io)?));
    }
    Ok(Array2::from_shape_vec((rows, cols), values).expect("length is rows * cols"))
}

/// Tab-separated text, one row per node, for plotting tools.
pub fn write_embeddings_tsv(z: &Array2<f64>, path: &Path) -> Result<()> {
    let mut text = String::new();
    for row in z.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{}", *v as f32)).collect();
        text.push_str(&cells.join("\t"));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| LspiError::io(path, e))
}
