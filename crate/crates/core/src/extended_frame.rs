//! Grouping of consecutive frames into n x n frame-blocks and tiling of each
//! block into an extended frame.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{Frame, FrameSource, CHANNELS};

/// Minimum tile side accepted by [`tile`].
pub const MIN_TILE_SIDE: u32 = 8;

/// Size each source frame is scaled to inside an extended frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TileSize {
    pub width: u32,
    pub height: u32,
}

impl TileSize {
    pub const DEFAULT: TileSize = TileSize {
        width: 96,
        height: 54,
    };

    pub fn new(width: u32, height: u32) -> Result<Self> {
        let size = Self { width, height };
        size.validate()?;
        Ok(size)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < MIN_TILE_SIDE || self.height < MIN_TILE_SIDE {
            return Err(Error::InvalidTileSize {
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }
}

impl Default for TileSize {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl std::fmt::Display for TileSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl std::str::FromStr for TileSize {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
        let parse = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("{v:?}: {e}"));
        Self::new(parse(w)?, parse(h)?).map_err(|e| e.to_string())
    }
}

/// Layout of frames inside an extended frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridOrdering {
    /// Frame `j` of the block at row `j / n`, column `j % n`.
    Primary,
    /// The [`corner_to_center_permutation`] of the primary layout.
    CornerToCenter,
}

impl GridOrdering {
    pub const ALL: [GridOrdering; 2] = [GridOrdering::Primary, GridOrdering::CornerToCenter];
}

/// `n * n` consecutive frames of a video, the last block padded with black.
#[derive(Clone, Debug)]
pub struct FrameBlock<'a> {
    pub index: usize,
    pub frames: Vec<Cow<'a, Frame>>,
    pub pad_count: usize,
}

/// Number of blocks needed for `frame_count` frames, and the padding of the
/// final block.
pub fn block_layout(frame_count: usize, n: usize) -> (usize, usize) {
    let per_block = n * n;
    let blocks = frame_count.div_ceil(per_block);
    (blocks, blocks * per_block - frame_count)
}

pub fn validate_grid(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidGrid(n));
    }
    Ok(())
}

/// Splits a video into frame-blocks of `n * n` frames in source order.
pub fn partition(video: &[Frame], n: usize) -> Result<Vec<FrameBlock<'_>>> {
    validate_grid(n)?;
    let first = video.first().ok_or(Error::EmptyVideo)?;
    check_dimensions(video.iter().enumerate(), first.dimensions())?;

    let per_block = n * n;
    let (_, pad_count) = block_layout(video.len(), n);
    let padding = Frame::filled(first.width(), first.height(), [0; 3])?;
    Ok(video
        .chunks(per_block)
        .enumerate()
        .map(|(index, chunk)| {
            let pad = per_block - chunk.len();
            let mut frames: Vec<_> = chunk.iter().map(Cow::Borrowed).collect();
            frames.extend(std::iter::repeat_n(Cow::Owned(padding.clone()), pad));
            FrameBlock {
                index,
                frames,
                pad_count: if pad > 0 { pad_count } else { 0 },
            }
        })
        .collect())
}

pub(crate) fn check_dimensions<'f>(
    frames: impl IntoIterator<Item = (usize, &'f Frame)>,
    expected: (u32, u32),
) -> Result<()> {
    for (index, frame) in frames {
        if frame.dimensions() != expected {
            return Err(Error::HeterogeneousDimensions {
                index,
                width: frame.width(),
                height: frame.height(),
                expected_w: expected.0,
                expected_h: expected.1,
            });
        }
    }
    Ok(())
}

/// Loads block `index` from a frame source, padding past the end with black.
pub fn load_block<'a, S: FrameSource + ?Sized>(
    source: &'a S,
    n: usize,
    index: usize,
    expected: (u32, u32),
) -> Result<FrameBlock<'a>> {
    validate_grid(n)?;
    let per_block = n * n;
    let total = source.frame_count();
    let start = index * per_block;
    if start >= total {
        return Err(Error::OutOfBounds { index, len: total.div_ceil(per_block) });
    }
    let end = (start + per_block).min(total);
    let mut frames = Vec::with_capacity(per_block);
    for i in start..end {
        let frame = source.frame(i)?;
        check_dimensions([(i, frame.as_ref())], expected)?;
        frames.push(frame);
    }
    let pad = per_block - frames.len();
    if pad > 0 {
        let padding = Frame::filled(expected.0, expected.1, [0; 3])?;
        frames.extend(std::iter::repeat_n(Cow::Owned(padding), pad));
    }
    Ok(FrameBlock {
        index,
        frames,
        pad_count: pad,
    })
}

// Twice the squared distance from grid cell (row, col) to the grid center,
// scaled so it stays an exact integer.
fn center_distance(row: usize, col: usize, n: usize) -> usize {
    let dr = (2 * row + 1).abs_diff(n);
    let dc = (2 * col + 1).abs_diff(n);
    dr * dr + dc * dc
}

/// Maps each primary-layout cell (row-major index) to its cell in the
/// corner-to-center layout.
///
/// Cells sorted farthest-first are paired with cells sorted nearest-first
/// (ties row-major in both lists), so the four corners land at the center
/// and the central cells are pushed outward.
pub fn corner_to_center_permutation(n: usize) -> Result<Vec<usize>> {
    validate_grid(n)?;
    let cells = n * n;
    let dist = |cell: usize| center_distance(cell / n, cell % n, n);

    let mut farthest: Vec<usize> = (0..cells).collect();
    farthest.sort_by_key(|&c| (std::cmp::Reverse(dist(c)), c));
    let mut nearest: Vec<usize> = (0..cells).collect();
    nearest.sort_by_key(|&c| (dist(c), c));

    let mut perm = vec![0; cells];
    for (from, to) in farthest.into_iter().zip(nearest) {
        perm[from] = to;
    }
    Ok(perm)
}

/// An n x n mosaic of one frame-block.
#[derive(Clone, Debug)]
pub struct ExtendedFrame {
    pub block_index: usize,
    pub ordering: GridOrdering,
    pub image: Frame,
}

/// Resizes every frame of the block to the tile size and assembles the mosaic.
pub fn tile(block: &FrameBlock<'_>, ordering: GridOrdering, tile: TileSize) -> Result<ExtendedFrame> {
    tile.validate()?;
    let n = (block.frames.len() as f64).sqrt().round() as usize;
    if n * n != block.frames.len() {
        return Err(Error::InvalidGrid(n));
    }
    let tiles = block
        .frames
        .iter()
        .map(|f| f.resized(tile.width, tile.height))
        .collect::<Result<Vec<_>>>()?;
    tile_resized(&tiles, n, block.index, ordering, tile)
}

/// Assembles already tile-sized frames into a mosaic.
pub(crate) fn tile_resized(
    tiles: &[Frame],
    n: usize,
    block_index: usize,
    ordering: GridOrdering,
    tile: TileSize,
) -> Result<ExtendedFrame> {
    let cell_of: Vec<usize> = match ordering {
        GridOrdering::Primary => (0..n * n).collect(),
        GridOrdering::CornerToCenter => corner_to_center_permutation(n)?,
    };
    let (tw, th) = (tile.width as usize, tile.height as usize);
    let row_bytes = tw * CHANNELS;
    let stride = n * row_bytes;
    let mut data = vec![0u8; stride * n * th];
    for (frame, &cell) in tiles.iter().zip(&cell_of) {
        let (row, col) = (cell / n, cell % n);
        let src = frame.data();
        for y in 0..th {
            let dst_start = (row * th + y) * stride + col * row_bytes;
            data[dst_start..dst_start + row_bytes]
                .copy_from_slice(&src[y * row_bytes..(y + 1) * row_bytes]);
        }
    }
    Ok(ExtendedFrame {
        block_index,
        ordering,
        image: Frame::new((n * tw) as u32, (n * th) as u32, data)?,
    })
}
