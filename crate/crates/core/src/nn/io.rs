//! Binary model container.
//!
//! Layout, all integers `u32` and all floats `f64`, little-endian:
//!
//! ```text
//! "GAE1"
//! network count (2: encoder, decoder)
//! per network: layer count
//!   per layer: out, in, out·in weights row-major, out biases
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::nn::mlp::{Layer, Mlp};
use crate::nn::train::Autoencoder;
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 4] = b"GAE1";

fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("dimension {v} exceeds u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32<R: Read>(r: &mut R, what: &str) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::Format(format!("truncated while reading {what}")))?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_f64s<R: Read, T: Scalar>(r: &mut R, n: usize, what: &str) -> Result<Vec<T>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Format(format!("truncated while reading {what}")))?;
    let out: Vec<T> = buf
        .chunks_exact(8)
        .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format(format!("non-finite value in {what}")));
    }
    Ok(out)
}

fn write_mlp<W: Write, T: Scalar>(w: &mut W, mlp: &Mlp<T>) -> Result<()> {
    put_u32(w, mlp.layers().len())?;
    for layer in mlp.layers() {
        put_u32(w, layer.out_dim())?;
        put_u32(w, layer.in_dim())?;
        for v in layer.weight.data().iter().chain(layer.bias.data()) {
            w.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_mlp<R: Read, T: Scalar>(r: &mut R, net: usize) -> Result<Mlp<T>> {
    let count = get_u32(r, "layer count")?;
    if count == 0 {
        return Err(Error::Format(format!("network {net} has no layers")));
    }
    let mut layers = Vec::with_capacity(count);
    for k in 0..count {
        let out = get_u32(r, "layer dims")?;
        let inp = get_u32(r, "layer dims")?;
        if out == 0 || inp == 0 || out.checked_mul(inp).is_none_or(|n| n > 1 << 28) {
            return Err(Error::Format(format!(
                "network {net} layer {k} has bad dims {out}x{inp}"
            )));
        }
        let w = get_f64s(r, out * inp, "weights")?;
        let b = get_f64s(r, out, "biases")?;
        layers.push(Layer::new(Tensor::matrix(out, inp, w)?, Tensor::vector(b))?);
    }
    Mlp::new(layers).map_err(|e| Error::Format(format!("network {net}: {e}")))
}

pub fn write_model<W: Write, T: Scalar>(mut w: W, ae: &Autoencoder<T>) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(&mut w, 2)?;
    write_mlp(&mut w, &ae.encoder)?;
    write_mlp(&mut w, &ae.decoder)?;
    Ok(())
}

pub fn read_model<R: Read, T: Scalar>(mut r: R) -> Result<Autoencoder<T>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for magic bytes".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected GAE1")));
    }
    let nets = get_u32(&mut r, "network count")?;
    if nets != 2 {
        return Err(Error::Format(format!("expected 2 networks, found {nets}")));
    }
    let encoder = read_mlp(&mut r, 0)?;
    let decoder = read_mlp(&mut r, 1)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after decoder".into()));
    }
    Autoencoder::new(encoder, decoder).map_err(|e| Error::Format(e.to_string()))
}

pub fn model_to_bytes<T: Scalar>(ae: &Autoencoder<T>) -> Vec<u8> {
    let mut buf = Vec::new();
    write_model(&mut buf, ae).expect("writing to memory");
    buf
}

pub fn save_model<T: Scalar>(path: impl AsRef<Path>, ae: &Autoencoder<T>) -> Result<()> {
    std::fs::write(path, model_to_bytes(ae))?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<Autoencoder<T>> {
    let bytes = std::fs::read(path)?;
    read_model(bytes.as_slice())
}
