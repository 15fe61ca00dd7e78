//! Bit-exact sieve cache files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic   4 bytes  "LIOU"
//! version u16      1
//! lo      u64      first covered integer
//! hi      u64      one past the last covered integer
//! payload ceil((hi-lo)/8) bytes; bit j of byte i (bit 0 least significant)
//!                  is 1 iff lambda(lo + 8*i + j) = -1
//! crc     u32      CRC-32 (IEEE polynomial) of the payload
//! ```
//!
//! The payload layout coincides with the in-memory packed-word layout on a
//! little-endian view, so reads and writes are plain byte copies.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"LIOU";
pub const VERSION: u16 = 1;

/// Canonical file name for the segment `[lo, hi)`; zero-padded so
/// lexicographic order is range order.
pub fn segment_file_name(lo: u64, hi: u64) -> String {
    format!("liou_{lo:020}_{hi:020}.seg")
}

/// Parse a canonical segment file name back into `(lo, hi)`.
pub fn parse_segment_file_name(name: &str) -> Option<(u64, u64)> {
    let rest = name.strip_prefix("liou_")?.strip_suffix(".seg")?;
    let (lo, hi) = rest.split_once('_')?;
    Some((lo.parse().ok()?, hi.parse().ok()?))
}

fn payload_len(lo: u64, hi: u64) -> usize {
    ((hi - lo) as usize).div_ceil(8)
}

/// Write the packed λ words of `[lo, hi)` to `path` in cache format.
pub fn write_segment_file(path: &Path, lo: u64, hi: u64, words: &[u64]) -> Result<()> {
    if hi <= lo {
        return Err(Error::Domain(format!("cache range [{lo}, {hi}) is empty")));
    }
    let n_bytes = payload_len(lo, hi);
    if words.len() != n_bytes.div_ceil(8) {
        return Err(Error::Invariant(format!(
            "packed words do not match range [{lo}, {hi})"
        )));
    }
    let mut payload = Vec::with_capacity(n_bytes);
    for w in words {
        payload.extend_from_slice(&w.to_le_bytes());
    }
    payload.truncate(n_bytes);
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(&payload);
    let crc = hasher.finalize();

    let mut buf = Vec::with_capacity(4 + 2 + 16 + n_bytes + 4);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&lo.to_le_bytes());
    buf.extend_from_slice(&hi.to_le_bytes());
    buf.extend_from_slice(&payload);
    buf.extend_from_slice(&crc.to_le_bytes());

    let tmp = path.with_extension("seg.tmp");
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(&buf).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read and verify a cache file, returning `(lo, hi, packed words)`.
pub fn read_segment_file(path: &Path) -> Result<(u64, u64, Vec<u64>)> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    let header = parse_header(path, &bytes)?;
    let (lo, hi) = header;
    let n_bytes = payload_len(lo, hi);
    let expected_len = 22 + n_bytes + 4;
    if bytes.len() != expected_len {
        return Err(Error::format(
            path,
            format!(
                "file is {} bytes but range [{lo}, {hi}) implies {expected_len}",
                bytes.len()
            ),
        ));
    }
    let payload = &bytes[22..22 + n_bytes];
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(payload);
    let crc = hasher.finalize();
    let stored = u32::from_le_bytes(bytes[22 + n_bytes..].try_into().unwrap());
    if crc != stored {
        return Err(Error::format(
            path,
            format!("payload CRC-32 {crc:#010x} does not match stored {stored:#010x}"),
        ));
    }
    let mut words = vec![0u64; n_bytes.div_ceil(8)];
    for (i, w) in words.iter_mut().enumerate() {
        let mut chunk = [0u8; 8];
        let at = 22 + i * 8;
        let take = (n_bytes + 22 - at).min(8);
        chunk[..take].copy_from_slice(&bytes[at..at + take]);
        *w = u64::from_le_bytes(chunk);
    }
    Ok((lo, hi, words))
}

/// Read only the `(lo, hi)` header of a cache file.
pub fn read_segment_header(path: &Path) -> Result<(u64, u64)> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut head = [0u8; 22];
    file.read_exact(&mut head).map_err(|e| Error::io(path, e))?;
    parse_header(path, &head)
}

fn parse_header(path: &Path, bytes: &[u8]) -> Result<(u64, u64)> {
    if bytes.len() < 22 {
        return Err(Error::format(path, "file shorter than the 22-byte header"));
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::format(path, "bad magic, expected \"LIOU\""));
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != VERSION {
        return Err(Error::format(
            path,
            format!("unsupported version {version}, expected {VERSION}"),
        ));
    }
    let lo = u64::from_le_bytes(bytes[6..14].try_into().unwrap());
    let hi = u64::from_le_bytes(bytes[14..22].try_into().unwrap());
    if hi <= lo {
        return Err(Error::format(path, format!("empty range [{lo}, {hi})")));
    }
    Ok((lo, hi))
}

/// All cache segment files in `dir`, ascending by range.
pub fn list_segment_files(dir: &Path) -> Result<Vec<(PathBuf, u64, u64)>> {
    let mut out = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some((lo, hi)) = parse_segment_file_name(name) {
            out.push((entry.path(), lo, hi));
        }
    }
    out.sort_by_key(|&(_, lo, hi)| (lo, hi));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::{build_segment, Features};

    #[test]
    fn round_trip_is_byte_identical() {
        let dir = std::env::temp_dir().join(format!("liou-cache-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let seg = build_segment(1, 1_000, Features::default()).unwrap();
        let path = dir.join(segment_file_name(1, 1_000));
        write_segment_file(&path, 1, 1_000, seg.liouville_words()).unwrap();
        let first = fs::read(&path).unwrap();
        let (lo, hi, words) = read_segment_file(&path).unwrap();
        assert_eq!((lo, hi), (1, 1_000));
        write_segment_file(&path, lo, hi, &words).unwrap();
        let second = fs::read(&path).unwrap();
        assert_eq!(first, second);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn payload_bit_layout_is_lambda_negative() {
        // lambda(2) = -1 should set bit 1 of byte 0 for lo = 1.
        let seg = build_segment(1, 9, Features::default()).unwrap();
        let words = seg.liouville_words();
        let byte0 = (words[0] & 0xFF) as u8;
        // n = lo + 8*0 + j: lambda over 1..=8 is +--+-+-- giving bits
        // 0,1,1,0,1,0,1,1 from j = 0.
        assert_eq!(byte0, 0b1101_0110);
    }

    #[test]
    fn corrupt_payload_fails_crc() {
        let dir = std::env::temp_dir().join(format!("liou-crc-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let seg = build_segment(1, 1_000, Features::default()).unwrap();
        let path = dir.join(segment_file_name(1, 1_000));
        write_segment_file(&path, 1, 1_000, seg.liouville_words()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[30] ^= 0x40;
        fs::write(&path, &bytes).unwrap();
        let err = read_segment_file(&path).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "got {err}");
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn file_name_round_trip() {
        let name = segment_file_name(17, 1 << 40);
        assert_eq!(parse_segment_file_name(&name), Some((17, 1 << 40)));
        assert_eq!(parse_segment_file_name("liou_bad"), None);
    }
}
