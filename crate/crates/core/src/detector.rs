//! Hashing of whole videos and block-wise comparison of a query against a
//! reference.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended_frame::{load_block, tile_resized, validate_grid, GridOrdering, TileSize};
use crate::hash_store::{BlockHashes, HashRecord};
use crate::imaging::{Frame, FrameDir, FrameSource};
use crate::robust_hash::{compute_hash, hamming_distance, HASH_BITS};

/// Distance assigned to blocks that have no counterpart in the other video.
pub const UNMATCHED_DISTANCE: u32 = HASH_BITS as u32;

/// Which extended frames take part in the decision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Primary ordering only.
    Single,
    /// Maximum over both orderings.
    #[default]
    Dual,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "single" => Ok(Mode::Single),
            "dual" => Ok(Mode::Dual),
            other => Err(format!("unknown mode {other:?}, expected single or dual")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Single => "single",
            Mode::Dual => "dual",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockVerdict {
    pub block_index: usize,
    pub dist_primary: u32,
    pub dist_corner: u32,
    pub dist_combined: u32,
    pub operated: bool,
}

impl BlockVerdict {
    pub fn new(block_index: usize, dist_primary: u32, dist_corner: u32, d: u32, mode: Mode) -> Self {
        let dist_combined = dist_primary.max(dist_corner);
        BlockVerdict {
            block_index,
            dist_primary,
            dist_corner,
            dist_combined,
            operated: is_operated(score(dist_primary, dist_combined, mode), d),
        }
    }

    /// The distance the decision is based on in `mode`.
    pub fn score(&self, mode: Mode) -> u32 {
        score(self.dist_primary, self.dist_combined, mode)
    }
}

fn score(primary: u32, combined: u32, mode: Mode) -> u32 {
    match mode {
        Mode::Single => primary,
        Mode::Dual => combined,
    }
}

/// A block is operated when its distance reaches the threshold.
pub fn is_operated(distance: u32, d: u32) -> bool {
    distance >= d
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub n: u16,
    pub d: u32,
    pub mode: Mode,
    pub verdicts: Vec<BlockVerdict>,
    pub video_operated: bool,
    pub length_mismatch: bool,
}

impl DetectionReport {
    pub fn operated_blocks(&self) -> impl Iterator<Item = usize> + '_ {
        self.verdicts.iter().filter(|v| v.operated).map(|v| v.block_index)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("block_index,dist_primary,dist_corner,dist_combined,operated\n");
        for v in &self.verdicts {
            writeln!(
                out,
                "{},{},{},{},{}",
                v.block_index, v.dist_primary, v.dist_corner, v.dist_combined, v.operated
            )
            .unwrap();
        }
        out
    }
}

/// Hashes both extended frames of every block of a video.
///
/// Blocks are hashed in parallel on the current rayon pool; the result does
/// not depend on the number of threads.
pub fn hash_video<S: FrameSource + ?Sized>(video: &S, n: usize, tile: TileSize) -> Result<HashRecord> {
    validate_grid(n)?;
    tile.validate()?;
    let grid = u16::try_from(n).map_err(|_| Error::InvalidGrid(n))?;
    let frame_count = video.frame_count();
    if frame_count == 0 {
        return Err(Error::EmptyVideo);
    }
    let frame_count_u32 = u32::try_from(frame_count)
        .map_err(|_| Error::InconsistentHeader(format!("{frame_count} frames exceed u32")))?;
    let dims = video.frame(0)?.dimensions();
    let (block_count, pad_count) = crate::extended_frame::block_layout(frame_count, n);

    let blocks = (0..block_count)
        .into_par_iter()
        .map(|index| {
            let block = load_block(video, n, index, dims)?;
            let tiles = block
                .frames
                .iter()
                .map(|f| f.resized(tile.width, tile.height))
                .collect::<Result<Vec<Frame>>>()?;
            let hash = |ordering| -> Result<_> {
                let mosaic = tile_resized(&tiles, n, index, ordering, tile)?;
                compute_hash(&mosaic.image)
            };
            Ok(BlockHashes {
                primary: hash(GridOrdering::Primary)?,
                corner: hash(GridOrdering::CornerToCenter)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(HashRecord {
        n: grid,
        tile,
        frame_count: frame_count_u32,
        pad_count: pad_count as u16,
        blocks,
    })
}

/// Block-wise per-ordering distances; unmatched blocks get
/// [`UNMATCHED_DISTANCE`] for both orderings.
pub fn block_distances(reference: &HashRecord, query: &HashRecord) -> Result<Vec<(u32, u32)>> {
    if reference.n != query.n {
        return Err(Error::ConfigMismatch(format!(
            "reference n={} but query n={}",
            reference.n, query.n
        )));
    }
    if reference.tile != query.tile {
        return Err(Error::ConfigMismatch(format!(
            "reference tile {} but query tile {}",
            reference.tile, query.tile
        )));
    }
    let len = reference.blocks.len().max(query.blocks.len());
    Ok((0..len)
        .map(|i| match (reference.blocks.get(i), query.blocks.get(i)) {
            (Some(r), Some(q)) => (
                hamming_distance(&r.primary, &q.primary),
                hamming_distance(&r.corner, &q.corner),
            ),
            _ => (UNMATCHED_DISTANCE, UNMATCHED_DISTANCE),
        })
        .collect())
}

/// Compares a query's hashes against the stored reference hashes.
pub fn compare(reference: &HashRecord, query: &HashRecord, d: u32, mode: Mode) -> Result<DetectionReport> {
    let verdicts: Vec<_> = block_distances(reference, query)?
        .into_iter()
        .enumerate()
        .map(|(i, (p, c))| BlockVerdict::new(i, p, c, d, mode))
        .collect();
    let length_mismatch = reference.blocks.len() != query.blocks.len();
    let video_operated = length_mismatch || verdicts.iter().any(|v| v.operated);
    Ok(DetectionReport {
        n: reference.n,
        d,
        mode,
        verdicts,
        video_operated,
        length_mismatch,
    })
}

/// Grid side, tile size, threshold and mode of a detection run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DetectorConfig {
    pub n: usize,
    pub tile: TileSize,
    pub d: u32,
    pub mode: Mode,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            n: 8,
            tile: TileSize::DEFAULT,
            d: 23,
            mode: Mode::Dual,
        }
    }
}

/// Hashes two frame directories and compares them.
pub fn detect(
    reference_dir: impl AsRef<Path>,
    query_dir: impl AsRef<Path>,
    config: &DetectorConfig,
) -> Result<DetectionReport> {
    let reference = hash_video(&FrameDir::open(reference_dir)?, config.n, config.tile)?;
    let query = hash_video(&FrameDir::open(query_dir)?, config.n, config.tile)?;
    compare(&reference, &query, config.d, config.mode)
}
