use std::fs;
use std::io;
use std::path::Path;

const MAGIC: &[u8; 8] = b"RVCWGT01";

/// Writes a flat parameter vector as a magic header, a little-endian `u64` count and
/// little-endian `f64` values.
pub fn write_weights(path: &Path, values: &[f64]) -> io::Result<()> {
    let mut bytes = Vec::with_capacity(16 + 8 * values.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)
}

pub fn read_weights(path: &Path) -> io::Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    let invalid = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {msg}", path.display()));
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(invalid("not a weight file"));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let body = &bytes[16..];
    if body.len() != count * 8 {
        return Err(invalid("truncated weight file"));
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}
