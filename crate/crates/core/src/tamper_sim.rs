//! Ground-truth dataset generation: inter-frame tampering (insert, delete,
//! reorder, replace), content-preserving distortions (JPEG recompression,
//! downscaling) and synthetic source videos.

use std::io::Cursor;
use std::path::PathBuf;

use image::codecs::jpeg::JpegEncoder;
use image::{ExtendedColorType, ImageFormat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended_frame::validate_grid;
use crate::imaging::{resize_bilinear, FloatImage, Frame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TamperOp {
    Insert,
    Delete,
    Reorder,
    Replace,
}

impl TamperOp {
    pub fn name(self) -> &'static str {
        match self {
            TamperOp::Insert => "insert",
            TamperOp::Delete => "delete",
            TamperOp::Reorder => "reorder",
            TamperOp::Replace => "replace",
        }
    }

    pub fn needs_donor(self) -> bool {
        matches!(self, TamperOp::Insert | TamperOp::Replace)
    }
}

/// One inter-frame operation.
///
/// `positions` index the input video for delete, reorder and replace. For
/// insert they are the indices the donor frames occupy in the output video.
/// Donor frames are consumed in order starting at `donor_start`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TamperSpec {
    pub op: TamperOp,
    pub positions: Vec<usize>,
    /// Donor frame directory, used when the spec is loaded from disk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<PathBuf>,
    #[serde(default)]
    pub donor_start: usize,
    #[serde(default)]
    pub seed: u64,
}

impl TamperSpec {
    pub fn new(op: TamperOp, positions: impl IntoIterator<Item = usize>) -> Self {
        Self {
            op,
            positions: positions.into_iter().collect(),
            source: None,
            donor_start: 0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_donor_start(mut self, start: usize) -> Self {
        self.donor_start = start;
        self
    }

    pub fn with_source(mut self, source: impl Into<PathBuf>) -> Self {
        self.source = Some(source.into());
        self
    }
}

/// Per-frame operated flags of a (possibly tampered) video.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub frame_flags: Vec<bool>,
}

impl GroundTruth {
    pub fn clean(frame_count: usize) -> Self {
        Self {
            frame_flags: vec![false; frame_count],
        }
    }

    pub fn operated_frames(&self) -> usize {
        self.frame_flags.iter().filter(|&&f| f).count()
    }

    /// A block is positive iff any of its real (non-padding) frames is flagged.
    pub fn block_labels(&self, n: usize) -> Result<Vec<bool>> {
        validate_grid(n)?;
        Ok(self
            .frame_flags
            .chunks(n * n)
            .map(|chunk| chunk.iter().any(|&f| f))
            .collect())
    }
}

/// Frames together with their operated flags, so that tampering can be
/// chained.
#[derive(Clone, Debug)]
pub struct LabeledVideo {
    pub frames: Vec<Frame>,
    pub truth: GroundTruth,
}

impl LabeledVideo {
    pub fn clean(frames: Vec<Frame>) -> Self {
        let truth = GroundTruth::clean(frames.len());
        Self { frames, truth }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Applies one operation, carrying existing flags along with their frames.
    pub fn tamper(self, spec: &TamperSpec, donor: Option<&[Frame]>) -> Result<Self> {
        let op = spec.op;
        let donor = match (op.needs_donor(), donor) {
            (true, None) => return Err(Error::MissingDonor(op.name())),
            (false, Some(_)) => return Err(Error::UnexpectedDonor(op.name())),
            (_, donor) => donor,
        };
        let len = self.frames.len();
        let positions = sorted_unique(&spec.positions)?;
        let bound = match op {
            TamperOp::Insert => len + positions.len(),
            _ => len,
        };
        if let Some(&index) = positions.iter().find(|&&p| p >= bound) {
            return Err(Error::OutOfBounds { index, len: bound });
        }

        let LabeledVideo { frames, truth } = self;
        let mut flags = truth.frame_flags;
        let mut frames = frames;
        match op {
            TamperOp::Insert => {
                let donors = donor_frames(donor.unwrap(), spec.donor_start, positions.len(), &frames)?;
                let mut donors = donors.into_iter();
                let mut originals = frames.into_iter().zip(flags);
                let mut out_frames = Vec::with_capacity(bound);
                let mut out_flags = Vec::with_capacity(bound);
                let mut next = positions.iter().peekable();
                for i in 0..bound {
                    if next.peek() == Some(&&i) {
                        next.next();
                        out_frames.push(donors.next().unwrap());
                        out_flags.push(true);
                    } else {
                        let (f, flag) = originals.next().unwrap();
                        out_frames.push(f);
                        out_flags.push(flag);
                    }
                }
                frames = out_frames;
                flags = out_flags;
            }
            TamperOp::Delete => {
                let mut deleted = vec![false; len];
                positions.iter().for_each(|&p| deleted[p] = true);
                // survivor following each deleted run, or preceding it at the tail
                for (i, &del) in deleted.iter().enumerate() {
                    let run_end = del && deleted.get(i + 1) != Some(&true);
                    if !run_end {
                        continue;
                    }
                    if i + 1 < len {
                        flags[i + 1] = true;
                    } else if let Some(prev) = (0..i).rev().find(|&j| !deleted[j]) {
                        flags[prev] = true;
                    }
                }
                let (kept_frames, kept_flags): (Vec<_>, Vec<_>) = frames
                    .into_iter()
                    .zip(flags)
                    .zip(&deleted)
                    .filter(|(_, &del)| !del)
                    .map(|(pair, _)| pair)
                    .unzip();
                frames = kept_frames;
                flags = kept_flags;
            }
            TamperOp::Reorder => {
                let target = cyclic_shuffle(&positions, spec.seed);
                let moved: Vec<(Frame, bool)> =
                    positions.iter().map(|&p| (frames[p].clone(), flags[p])).collect();
                for ((frame, flag), (&from, &to)) in moved.into_iter().zip(positions.iter().zip(&target)) {
                    frames[to] = frame;
                    flags[to] = flag || from != to;
                }
            }
            TamperOp::Replace => {
                let donors = donor_frames(donor.unwrap(), spec.donor_start, positions.len(), &frames)?;
                for (&p, frame) in positions.iter().zip(donors) {
                    frames[p] = frame;
                    flags[p] = true;
                }
            }
        }
        Ok(LabeledVideo {
            frames,
            truth: GroundTruth { frame_flags: flags },
        })
    }
}

/// Applies one operation to an untampered video.
pub fn apply_tamper(
    video: &[Frame],
    spec: &TamperSpec,
    donor: Option<&[Frame]>,
) -> Result<(Vec<Frame>, GroundTruth)> {
    let out = LabeledVideo::clean(video.to_vec()).tamper(spec, donor)?;
    Ok((out.frames, out.truth))
}

fn sorted_unique(positions: &[usize]) -> Result<Vec<usize>> {
    let mut sorted = positions.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidPositions(format!("position {} repeated", w[0])));
    }
    Ok(sorted)
}

fn donor_frames(donor: &[Frame], start: usize, count: usize, like: &[Frame]) -> Result<Vec<Frame>> {
    let end = start + count;
    if end > donor.len() {
        return Err(Error::OutOfBounds {
            index: end - 1,
            len: donor.len(),
        });
    }
    let dims = like.first().map(Frame::dimensions);
    donor[start..end]
        .iter()
        .map(|f| match dims {
            Some((w, h)) => f.resized(w, h),
            None => Ok(f.clone()),
        })
        .collect()
}

/// Seeded single-cycle permutation (Sattolo's algorithm): every listed
/// position receives a frame from a different position.
///
/// Returns the destination of the frame at `positions[i]`.
fn cyclic_shuffle(positions: &[usize], seed: u64) -> Vec<usize> {
    let mut target = positions.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..target.len()).rev() {
        let j = rng.random_range(0..i);
        target.swap(i, j);
    }
    target
}

/// A content-preserving transformation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distortion {
    Jpeg { quality: u8 },
    Resize { scale: f64 },
}

impl Distortion {
    pub fn apply(&self, video: &[Frame]) -> Result<Vec<Frame>> {
        match *self {
            Distortion::Jpeg { quality } => distort_jpeg(video, quality),
            Distortion::Resize { scale } => distort_resize(video, scale),
        }
    }

    /// Recompression only.
    pub fn twitter_like() -> Vec<Distortion> {
        vec![Distortion::Jpeg { quality: 75 }]
    }

    /// Downscale to 90 %, then recompress.
    pub fn instagram_like() -> Vec<Distortion> {
        vec![Distortion::Resize { scale: 0.9 }, Distortion::Jpeg { quality: 75 }]
    }
}

pub fn jpeg_roundtrip(frame: &Frame, quality: u8) -> Result<Frame> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidQuality(quality));
    }
    let mut buf = Cursor::new(Vec::new());
    JpegEncoder::new_with_quality(&mut buf, quality)
        .encode(frame.data(), frame.width(), frame.height(), ExtendedColorType::Rgb8)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let decoded = image::load_from_memory_with_format(buf.get_ref(), ImageFormat::Jpeg)
        .map_err(|e| Error::CorruptImage(e.to_string()))?
        .to_rgb8();
    Frame::new(frame.width(), frame.height(), decoded.into_raw())
}

/// Baseline JPEG encode/decode of every frame.
pub fn distort_jpeg(video: &[Frame], quality: u8) -> Result<Vec<Frame>> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidQuality(quality));
    }
    video.par_iter().map(|f| jpeg_roundtrip(f, quality)).collect()
}

/// Scales every frame to `floor(w * scale) x floor(h * scale)`.
pub fn distort_resize(video: &[Frame], scale: f64) -> Result<Vec<Frame>> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(Error::InvalidScale(scale));
    }
    video
        .par_iter()
        .map(|f| {
            // tolerate representation error such as 0.29 * 100 = 28.999...
            let w = (f64::from(f.width()) * scale + 1e-9).floor() as u32;
            let h = (f64::from(f.height()) * scale + 1e-9).floor() as u32;
            if w == 0 || h == 0 {
                return Err(Error::DegenerateOutput {
                    width: f.width(),
                    height: f.height(),
                    scale,
                });
            }
            f.resized(w, h)
        })
        .collect()
}

/// Kinds of generated source video.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthKind {
    Solid { rgb: [u8; 3] },
    /// Drifting, rotating color waves with a moving disc.
    GradientMotion,
    /// Smooth random color fields, redrawn every frame.
    NoiseTexture,
}

struct MotionParams {
    freq: [f64; 3],
    omega: [f64; 3],
    phase: [f64; 3],
    angle: f64,
    spin: f64,
    disc_rgb: [f64; 3],
    disc_speed: [f64; 2],
    disc_phase: [f64; 2],
}

impl MotionParams {
    fn sample(rng: &mut ChaCha8Rng) -> Self {
        use std::f64::consts::TAU;
        let spin = rng.random_range(0.004..0.01) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        Self {
            freq: std::array::from_fn(|_| rng.random_range(0.6..1.6)),
            omega: std::array::from_fn(|_| rng.random_range(0.06..0.16)),
            phase: std::array::from_fn(|_| rng.random_range(0.0..TAU)),
            angle: rng.random_range(0.0..TAU),
            spin,
            disc_rgb: std::array::from_fn(|_| rng.random_range(0.0..1.0)),
            disc_speed: std::array::from_fn(|_| rng.random_range(0.03..0.07)),
            disc_phase: std::array::from_fn(|_| rng.random_range(0.0..TAU)),
        }
    }

    fn render(&self, t: usize, width: u32, height: u32) -> Frame {
        use std::f64::consts::TAU;
        let t = t as f64;
        let (w, h) = (f64::from(width), f64::from(height));
        let angle = self.angle + self.spin * t;
        let (ca, sa) = (angle.cos(), angle.sin());
        let cx = 0.5 + 0.35 * (self.disc_speed[0] * t + self.disc_phase[0]).sin();
        let cy = 0.5 + 0.35 * (self.disc_speed[1] * t + self.disc_phase[1]).sin();
        let radius = 0.15 * h.min(w);

        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                let (px, py) = (f64::from(x) + 0.5, f64::from(y) + 0.5);
                let u = px / w - 0.5;
                let v = (py / h - 0.5) * h / w;
                let proj = u * ca + v * sa;
                let in_disc = (px - cx * w).hypot(py - cy * h) < radius;
                for c in 0..3 {
                    let value = if in_disc {
                        self.disc_rgb[c]
                    } else {
                        0.5 + 0.35 * (TAU * self.freq[c] * proj + self.phase[c] - self.omega[c] * t).sin()
                    };
                    data.push((value * 255.0).round() as u8);
                }
            }
        }
        Frame::new(width, height, data).expect("dimensions checked by caller")
    }
}

fn noise_frame(seed: u64, t: usize, width: u32, height: u32) -> Result<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64 + 1);
    let (gw, gh) = (8u32, 5u32);
    let coarse: Vec<f64> = (0..gw * gh * 3).map(|_| rng.random_range(0.0..1.0)).collect();
    let coarse = FloatImage::from_samples(gw, gh, coarse)?;
    let smooth = resize_bilinear(&coarse, width, height)?;
    let data = smooth
        .data()
        .iter()
        .map(|&v| {
            let grain: f64 = rng.random_range(-0.08..0.08);
            ((v + grain).clamp(0.0, 1.0) * 255.0).round() as u8
        })
        .collect();
    Frame::new(width, height, data)
}

/// Deterministic synthetic video.
pub fn synth_video(kind: SynthKind, frames: usize, width: u32, height: u32, seed: u64) -> Result<Vec<Frame>> {
    if frames == 0 {
        return Err(Error::EmptyVideo);
    }
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    match kind {
        SynthKind::Solid { rgb } => {
            let frame = Frame::filled(width, height, rgb)?;
            Ok(vec![frame; frames])
        }
        SynthKind::GradientMotion => {
            let params = MotionParams::sample(&mut ChaCha8Rng::seed_from_u64(seed));
            Ok((0..frames)
                .into_par_iter()
                .map(|t| params.render(t, width, height))
                .collect())
        }
        SynthKind::NoiseTexture => (0..frames)
            .into_par_iter()
            .map(|t| noise_frame(seed, t, width, height))
            .collect(),
    }
}

/// Everything `simulate` applies to a source video: tampering first, then
/// distortions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    #[serde(default)]
    pub tampers: Vec<TamperSpec>,
    #[serde(default)]
    pub distortions: Vec<Distortion>,
}

impl SimulationSpec {
    /// Runs the spec; `donor_for` resolves the donor frames of each tamper.
    pub fn run<'d>(
        &self,
        source: Vec<Frame>,
        mut donor_for: impl FnMut(&TamperSpec) -> Result<Option<&'d [Frame]>>,
    ) -> Result<LabeledVideo> {
        let mut video = LabeledVideo::clean(source);
        for spec in &self.tampers {
            let donor = donor_for(spec)?;
            video = video.tamper(spec, donor)?;
        }
        for distortion in &self.distortions {
            video.frames = distortion.apply(&video.frames)?;
        }
        Ok(video)
    }
}

/// Contents of `truth.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthManifest {
    pub n: usize,
    pub frame_flags: Vec<bool>,
    pub block_labels: Vec<bool>,
    pub spec: SimulationSpec,
}

impl TruthManifest {
    pub fn new(truth: &GroundTruth, n: usize, spec: SimulationSpec) -> Result<Self> {
        Ok(Self {
            n,
            frame_flags: truth.frame_flags.clone(),
            block_labels: truth.block_labels(n)?,
            spec,
        })
    }

    /// Block labels for grid side `n`, recomputed from the frame flags.
    pub fn labels_for(&self, n: usize) -> Result<Vec<bool>> {
        GroundTruth {
            frame_flags: self.frame_flags.clone(),
        }
        .block_labels(n)
    }
}
