//! Self-describing binary container shared by gridded data files,
//! climatology tables and checkpoints:
//!
//! ```text
//! magic      8 bytes
//! header_len u64 little-endian
//! header     header_len bytes of UTF-8 JSON
//! payload    little-endian f32 values to end of file
//! ```

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{DuneError, Result};

pub(crate) fn write<'a, H, I>(path: &Path, magic: &[u8; 8], header: &H, payload: I) -> Result<()>
where
    H: Serialize,
    I: IntoIterator<Item = &'a [f32]>,
{
    let header = serde_json::to_vec(header)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut out = BufWriter::new(fs::File::create(&tmp)?);
        out.write_all(magic)?;
        out.write_all(&(header.len() as u64).to_le_bytes())?;
        out.write_all(&header)?;
        for chunk in payload {
            for v in chunk {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub(crate) fn read<H: DeserializeOwned>(path: &Path, magic: &[u8; 8]) -> Result<(H, Vec<f32>)> {
    let corrupt = |reason: String| DuneError::Corrupt {
        path: path.to_path_buf(),
        reason,
    };
    let mut input = BufReader::new(fs::File::open(path)?);
    let mut head = [0u8; 16];
    input
        .read_exact(&mut head)
        .map_err(|_| corrupt("truncated preamble".into()))?;
    if &head[..8] != magic {
        return Err(corrupt(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&head[..8]),
            String::from_utf8_lossy(magic)
        )));
    }
    let header_len = u64::from_le_bytes(head[8..16].try_into().expect("8 bytes")) as usize;
    if header_len > 1 << 30 {
        return Err(corrupt(format!("implausible header length {header_len}")));
    }
    let mut header = vec![0u8; header_len];
    input
        .read_exact(&mut header)
        .map_err(|_| corrupt("truncated header".into()))?;
    let header: H = serde_json::from_slice(&header).map_err(|e| corrupt(format!("bad header: {e}")))?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() % 4 != 0 {
        return Err(corrupt(format!("payload of {} bytes is not f32-aligned", bytes.len())));
    }
    let payload = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    Ok((header, payload))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_magic_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        write(&p, b"TESTMAG1", &vec![1, 2, 3], [&[1.0f32, 2.0][..]]).unwrap();
        let (h, data): (Vec<i32>, _) = read(&p, b"TESTMAG1").unwrap();
        assert_eq!(h, vec![1, 2, 3]);
        assert_eq!(data, vec![1.0, 2.0]);
        assert!(matches!(
            read::<Vec<i32>>(&p, b"OTHERMAG"),
            Err(DuneError::Corrupt { .. })
        ));
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 2]).unwrap();
        assert!(matches!(
            read::<Vec<i32>>(&p, b"TESTMAG1"),
            Err(DuneError::Corrupt { .. })
        ));
    }
}
