//! `.vhr` files: the stored hashes of a reference video.
//!
//! Layout, little-endian:
//!
//! | offset | size | field         |
//! |--------|------|---------------|
//! | 0      | 4    | magic `VHR1`  |
//! | 4      | 2    | n             |
//! | 6      | 2    | tile width    |
//! | 8      | 2    | tile height   |
//! | 10     | 4    | frame count   |
//! | 14     | 2    | pad count     |
//! | 16     | 4    | block count   |
//! | 20     | 30·k | per block: primary hash, corner-to-center hash |

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended_frame::{block_layout, TileSize};
use crate::robust_hash::{HashValue, HASH_BYTES};

pub const MAGIC: [u8; 4] = *b"VHR1";
pub const HEADER_LEN: usize = 20;
pub const BLOCK_LEN: usize = 2 * HASH_BYTES;

/// Hashes of one frame-block under both grid orderings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockHashes {
    pub primary: HashValue,
    pub corner: HashValue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashRecord {
    pub n: u16,
    pub tile: TileSize,
    pub frame_count: u32,
    pub pad_count: u16,
    pub blocks: Vec<BlockHashes>,
}

impl HashRecord {
    /// Checks the header fields against each other and the block list.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InconsistentHeader(format!("grid side {} < 2", self.n)));
        }
        let (blocks, pad) = block_layout(self.frame_count as usize, self.n as usize);
        if blocks != self.blocks.len() {
            return Err(Error::InconsistentHeader(format!(
                "{} frames at n={} need {blocks} blocks, record has {}",
                self.frame_count,
                self.n,
                self.blocks.len()
            )));
        }
        if pad != self.pad_count as usize {
            return Err(Error::InconsistentHeader(format!(
                "pad count {} should be {pad}",
                self.pad_count
            )));
        }
        Ok(())
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.blocks.len() * BLOCK_LEN
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let to_u16 = |v: u32, what: &str| {
            u16::try_from(v)
                .map_err(|_| Error::InconsistentHeader(format!("{what} {v} exceeds u16")))
        };
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&to_u16(self.tile.width, "tile width")?.to_le_bytes());
        out.extend_from_slice(&to_u16(self.tile.height, "tile height")?.to_le_bytes());
        out.extend_from_slice(&self.frame_count.to_le_bytes());
        out.extend_from_slice(&self.pad_count.to_le_bytes());
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for block in &self.blocks {
            out.extend_from_slice(block.primary.as_bytes());
            out.extend_from_slice(block.corner.as_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            if bytes.len() >= 4 && bytes[..4] != MAGIC {
                return Err(Error::BadMagic(bytes[..4].try_into().unwrap()));
            }
            return Err(Error::TruncatedFile {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        let magic: [u8; 4] = bytes[..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(Error::BadMagic(magic));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());

        let n = u16_at(4);
        let tile = TileSize {
            width: u32::from(u16_at(6)),
            height: u32::from(u16_at(8)),
        };
        let frame_count = u32_at(10);
        let pad_count = u16_at(14);
        let block_count = u32_at(16) as usize;

        let expected = HEADER_LEN + block_count * BLOCK_LEN;
        if bytes.len() < expected {
            return Err(Error::TruncatedFile {
                expected,
                found: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(Error::InconsistentHeader(format!(
                "{} trailing bytes after {block_count} blocks",
                bytes.len() - expected
            )));
        }

        let hash_at = |o: usize| HashValue::from_bytes(bytes[o..o + HASH_BYTES].try_into().unwrap());
        let blocks = (0..block_count)
            .map(|i| {
                let o = HEADER_LEN + i * BLOCK_LEN;
                BlockHashes {
                    primary: hash_at(o),
                    corner: hash_at(o + HASH_BYTES),
                }
            })
            .collect();
        let record = HashRecord {
            n,
            tile,
            frame_count,
            pad_count,
            blocks,
        };
        record.validate()?;
        Ok(record)
    }
}

pub fn write_record(record: &HashRecord, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, record.to_bytes()?)?;
    Ok(())
}

pub fn read_record(path: impl AsRef<Path>) -> Result<HashRecord> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    HashRecord::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(frame_count: u32, n: u16) -> HashRecord {
        let (blocks, pad) = block_layout(frame_count as usize, n as usize);
        HashRecord {
            n,
            tile: TileSize::DEFAULT,
            frame_count,
            pad_count: pad as u16,
            blocks: (0..blocks)
                .map(|i| BlockHashes {
                    primary: HashValue::from_bytes([i as u8; HASH_BYTES]),
                    corner: HashValue::from_bytes([!(i as u8); HASH_BYTES]),
                })
                .collect(),
        }
    }

    #[test]
    fn sizes() {
        assert_eq!(record(64, 8).to_bytes().unwrap().len(), 50);
        assert_eq!(record(3540, 8).to_bytes().unwrap().len(), 1700);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = record(64, 8).to_bytes().unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(
            HashRecord::from_bytes(&bytes),
            Err(Error::BadMagic(m)) if &m == b"XXXX"
        ));
    }

    #[test]
    fn truncated_payload() {
        let bytes = record(192, 8).to_bytes().unwrap();
        assert_eq!(bytes.len(), 20 + 3 * 30);
        assert!(matches!(
            HashRecord::from_bytes(&bytes[..20 + 2 * 30]),
            Err(Error::TruncatedFile { expected: 110, found: 80 })
        ));
        assert!(matches!(
            HashRecord::from_bytes(&bytes[..7]),
            Err(Error::TruncatedFile { .. })
        ));
    }

    #[test]
    fn inconsistent_header() {
        let mut bytes = record(192, 8).to_bytes().unwrap();
        // claim 64 frames while keeping three blocks
        bytes[10..14].copy_from_slice(&64u32.to_le_bytes());
        assert!(matches!(
            HashRecord::from_bytes(&bytes),
            Err(Error::InconsistentHeader(_))
        ));

        let mut bad_pad = record(130, 8);
        bad_pad.pad_count = 3;
        assert!(matches!(bad_pad.to_bytes(), Err(Error::InconsistentHeader(_))));

        let mut trailing = record(64, 8).to_bytes().unwrap();
        trailing.push(0);
        assert!(matches!(
            HashRecord::from_bytes(&trailing),
            Err(Error::InconsistentHeader(_))
        ));
    }

    #[test]
    fn header_fields_are_little_endian() {
        let bytes = record(130, 8).to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"VHR1");
        assert_eq!(&bytes[4..6], &[8, 0]);
        assert_eq!(&bytes[6..8], &[96, 0]);
        assert_eq!(&bytes[8..10], &[54, 0]);
        assert_eq!(&bytes[10..14], &[130, 0, 0, 0]);
        assert_eq!(&bytes[14..16], &[62, 0]);
        assert_eq!(&bytes[16..20], &[3, 0, 0, 0]);
    }
}
