//! Detection of temporally operated (inter-frame tampered) videos.
//!
//! A video is cut into blocks of `n * n` consecutive frames. Each block is
//! tiled into two mosaics ("extended frames"), one in frame order and one
//! with corner frames moved to the middle, and each mosaic is reduced to a
//! 120-bit quaternion robust hash. A query video is judged block by block:
//! a block is operated when the Hamming distance between its hash and the
//! reference hash reaches the threshold `d`.

pub mod detector;
pub mod error;
pub mod eval;
pub mod extended_frame;
pub mod hash_store;
pub mod imaging;
pub mod robust_hash;
pub mod tamper_sim;

pub use detector::{compare, detect, hash_video, BlockVerdict, DetectionReport, DetectorConfig, Mode};
pub use error::{Error, Result};
pub use extended_frame::{GridOrdering, TileSize};
pub use hash_store::{read_record, write_record, BlockHashes, HashRecord};
pub use imaging::{Frame, FrameDir, FrameSource};
pub use robust_hash::{compute_hash, hamming_distance, HashValue};
