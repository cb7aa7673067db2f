//! LDAD parameter checkpoint format.
//!
//! Layout: magic `LDAD`, version u32 LE, tensor count u32 LE, then per
//! tensor: name length u16 LE, UTF-8 name, rank u8, extents u32 LE,
//! values f64 LE. Round-trips bit-exactly. Optimizer moments are stored
//! as extra tensors suffixed `#m` / `#v`, the step count as `#step`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{AdError, Result};
use crate::optim::ParameterSet;
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"LDAD";
const VERSION: u32 = 1;

fn write_tensor<W: Write>(w: &mut W, name: &str, t: &Tensor) -> Result<()> {
    let nb = name.as_bytes();
    w.write_all(&(nb.len() as u16).to_le_bytes())?;
    w.write_all(nb)?;
    w.write_all(&[t.shape().len() as u8])?;
    for &e in t.shape() {
        w.write_all(&(e as u32).to_le_bytes())?;
    }
    for v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_tensor<R: Read>(r: &mut R) -> Result<(String, Tensor)> {
    let mut b2 = [0u8; 2];
    r.read_exact(&mut b2)?;
    let name_len = u16::from_le_bytes(b2) as usize;
    let mut nb = vec![0u8; name_len];
    r.read_exact(&mut nb)?;
    let name = String::from_utf8(nb)
        .map_err(|_| AdError::BadCheckpoint("tensor name is not UTF-8".into()))?;
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let rank = b1[0] as usize;
    let mut shape = Vec::with_capacity(rank);
    let mut b4 = [0u8; 4];
    for _ in 0..rank {
        r.read_exact(&mut b4)?;
        shape.push(u32::from_le_bytes(b4) as usize);
    }
    let n: usize = shape.iter().product();
    let mut data = Vec::with_capacity(n);
    let mut b8 = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b8)?;
        data.push(f64::from_le_bytes(b8));
    }
    Ok((name, Tensor::new(shape, data)?))
}

pub fn save(params: &ParameterSet, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let count = params.len() as u32 * 3 + 1;
    w.write_all(&count.to_le_bytes())?;
    for i in 0..params.len() {
        let name = &params.names()[i];
        write_tensor(&mut w, name, params.tensor(i))?;
        let (m, v) = params.moments(i);
        write_tensor(
            &mut w,
            &format!("{name}#m"),
            &Tensor::new(params.tensor(i).shape().to_vec(), m.to_vec())?,
        )?;
        write_tensor(
            &mut w,
            &format!("{name}#v"),
            &Tensor::new(params.tensor(i).shape().to_vec(), v.to_vec())?,
        )?;
    }
    write_tensor(&mut w, "#step", &Tensor::scalar(params.step_count() as f64))?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ParameterSet> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(AdError::BadCheckpoint(format!(
            "bad magic {magic:?} in {}",
            path.display()
        )));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(AdError::BadCheckpoint(format!(
            "unsupported version {version}"
        )));
    }
    r.read_exact(&mut b4)?;
    let count = u32::from_le_bytes(b4) as usize;
    let mut raw: Vec<(String, Tensor)> = Vec::with_capacity(count);
    for _ in 0..count {
        raw.push(read_tensor(&mut r)?);
    }
    let mut params = ParameterSet::new();
    let mut i = 0;
    while i < raw.len() {
        let (name, t) = raw[i].clone();
        if name == "#step" {
            params.set_step(t.scalar_value() as u64);
            i += 1;
            continue;
        }
        if name.contains('#') {
            return Err(AdError::BadCheckpoint(format!(
                "orphan state tensor `{name}`"
            )));
        }
        let m = raw
            .get(i + 1)
            .filter(|(n, _)| *n == format!("{name}#m"))
            .ok_or_else(|| AdError::BadCheckpoint(format!("missing moments for `{name}`")))?
            .1
            .data()
            .to_vec();
        let v = raw
            .get(i + 2)
            .filter(|(n, _)| *n == format!("{name}#v"))
            .ok_or_else(|| AdError::BadCheckpoint(format!("missing moments for `{name}`")))?
            .1
            .data()
            .to_vec();
        params.restore_entry(&name, t, m, v);
        i += 3;
    }
    Ok(params)
}
