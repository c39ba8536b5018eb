//! Binary model checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes  "LSPICKPT"
//! version      u32      1
//! meta_len     u32      length of the JSON model config that follows
//! meta         bytes    UTF-8 JSON of `ModelConfig`
//! count        u32      number of parameters
//! manifest     count x { name_len u16, name bytes, dtype u8 (0 = f64, 1 = f32),
//!                        ndim u8, dims u64 x ndim }
//! payloads     count x row-major values in manifest order
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;

use super::model::{Model, ModelConfig};
use crate::error::{LspiError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"LSPICKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

const DTYPE_F64: u8 = 0;
const DTYPE_F32: u8 = 1;

pub fn write_checkpoint<W: Write>(model: &Model, mut w: W) -> std::io::Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
    let meta = serde_json::to_vec(&model.config).map_err(std::io::Error::other)?;
    w.write_u32::<LittleEndian>(meta.len() as u32)?;
    w.write_all(&meta)?;
    let params = model.params();
    w.write_u32::<LittleEndian>(params.len() as u32)?;
    for (name, p) in &params {
        w.write_u16::<LittleEndian>(name.len() as u16)?;
        w.write_all(name.as_bytes())?;
        w.write_u8(DTYPE_F64)?;
        w.write_u8(2)?;
        w.write_u64::<LittleEndian>(p.nrows() as u64)?;
        w.write_u64::<LittleEndian>(p.ncols() as u64)?;
    }
    for (_, p) in &params {
        for &x in p.iter() {
            w.write_f64::<LittleEndian>(x)?;
        }
    }
    w.flush()
}

fn bad(msg: impl Into<String>) -> std::io::Error {
    std::io::Error::new(std::io::ErrorKind::InvalidData, msg.into())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Model> {
    let mut inner = || -> std::io::Result<std::result::Result<(ModelConfig, Vec<(String, Array2<f64>)>), u32>> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(bad("not an LSPI checkpoint"));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != CHECKPOINT_VERSION {
            return Ok(Err(version));
        }
        let meta_len = r.read_u32::<LittleEndian>()? as usize;
        let mut meta = vec![0u8; meta_len];
        r.read_exact(&mut meta)?;
        let config: ModelConfig = serde_json::from_slice(&meta).map_err(bad_json)?;
        let count = r.read_u32::<LittleEndian>()? as usize;
        let mut manifest = Vec::with_capacity(count);
        for _ in 0..count {
            let len = r.read_u16::<LittleEndian>()? as usize;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|e| bad(e.to_string()))?;
            let dtype = r.read_u8()?;
            let ndim = r.read_u8()?;
            let dims = (0..ndim)
                .map(|_| r.read_u64::<LittleEndian>().map(|d| d as usize))
                .collect::<std::io::Result<Vec<_>>>()?;
            let shape = match dims.as_slice() {
                [n] => (1, *n),
                [a, b] => (*a, *b),
                _ => return Err(bad(format!("parameter `{name}` has {ndim} dimensions"))),
            };
            manifest.push((name, dtype, shape));
        }
        let mut params = Vec::with_capacity(count);
        for (name, dtype, shape) in manifest {
            let n = shape.0 * shape.1;
            let values = match dtype {
                DTYPE_F64 => (0..n)
                    .map(|_| r.read_f64::<LittleEndian>())
                    .collect::<std::io::Result<Vec<_>>>()?,
                DTYPE_F32 => (0..n)
                    .map(|_| r.read_f32::<LittleEndian>().map(f64::from))
                    .collect::<std::io::Result<Vec<_>>>()?,
                other => return Err(bad(format!("unknown dtype {other}"))),
            };
            let arr = Array2::from_shape_vec(shape, values).map_err(|e| bad(e.to_string()))?;
            params.push((name, arr));
        }
        Ok(Ok((config, params)))
    };
    match inner() {
        Ok(Ok((config, params))) => Model::from_params(config, params),
        Ok(Err(found)) => Err(LspiError::UnsupportedVersion {
            found,
            supported: CHECKPOINT_VERSION,
        }),
        Err(e) => Err(LspiError::io("<checkpoint>", e)),
    }
}

fn bad_json(e: serde_json::Error) -> std::io::Error {
    bad(e.to_string())
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| LspiError::io(path, e))?;
    write_checkpoint(model, BufWriter::new(f)).map_err(|e| LspiError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    let f = File::open(path).map_err(|e| LspiError::io(path, e))?;
    match read_checkpoint(BufReader::new(f)) {
        Err(LspiError::Io { source, .. }) => Err(LspiError::io(path, source)),
        other => other,
    }
}
