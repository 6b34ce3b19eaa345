//! Frames, frame-sequence directories, and the two raster kernels used by the
//! hash pipeline: a 5x5 Gaussian blur and a bilinear resize.

use std::borrow::Cow;
use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{ImageFormat, RgbImage};

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;

/// Standard deviation of the pre-hash Gaussian filter.
pub const BLUR_SIGMA: f64 = 1.0;
/// Radius of the 5-tap Gaussian kernel.
pub const BLUR_RADIUS: usize = 2;

/// An 8-bit RGB raster stored row-major, three interleaved samples per pixel.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Frame")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl Frame {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        let expected = width as usize * height as usize * CHANNELS;
        if data.len() != expected {
            return Err(Error::CorruptImage(format!(
                "{width}x{height} frame needs {expected} samples, got {}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// A frame where every pixel has the given color.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let pixels = width as usize * height as usize;
        let data = rgb.iter().copied().cycle().take(pixels * CHANNELS).collect();
        Self::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn put_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * CHANNELS;
        self.data[i..i + CHANNELS].copy_from_slice(&rgb);
    }

    pub fn to_float(&self) -> FloatImage {
        FloatImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f64::from(v) / 255.0).collect(),
        }
    }

    /// Bilinear resize through the float pipeline, rounding back to 8 bits.
    pub fn resized(&self, width: u32, height: u32) -> Result<Frame> {
        if (width, height) == self.dimensions() {
            return Ok(self.clone());
        }
        Ok(resize_bilinear(&self.to_float(), width, height)?.to_frame())
    }
}

/// Real-valued RGB raster with samples nominally in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatImage {
    width: u32,
    height: u32,
    data: Vec<f64>,
}

impl FloatImage {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sample(&self, x: u32, y: u32, channel: usize) -> f64 {
        self.data[(y as usize * self.width as usize + x as usize) * CHANNELS + channel]
    }

    pub fn to_frame(&self) -> Frame {
        let data = self
            .data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        Frame {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn from_samples(width: u32, height: u32, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if data.len() != width as usize * height as usize * CHANNELS {
            return Err(Error::CorruptImage(format!(
                "{width}x{height} image needs {} samples, got {}",
                width as usize * height as usize * CHANNELS,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }
}

/// Normalized 5-tap kernel sampled from N(0, 1) at offsets -2..=2.
pub fn gaussian_kernel() -> [f64; 2 * BLUR_RADIUS + 1] {
    let mut kernel = [0.0; 2 * BLUR_RADIUS + 1];
    for (i, w) in kernel.iter_mut().enumerate() {
        let offset = i as f64 - BLUR_RADIUS as f64;
        *w = (-offset * offset / (2.0 * BLUR_SIGMA * BLUR_SIGMA)).exp();
    }
    let sum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|w| *w /= sum);
    kernel
}

/// Separable 5x5 Gaussian blur (sigma 1) with clamp-to-edge borders.
pub fn gaussian_blur_5x5(img: &FloatImage) -> FloatImage {
    let kernel = gaussian_kernel();
    let (w, h) = (img.width as usize, img.height as usize);
    let r = BLUR_RADIUS as isize;

    let mut horizontal = vec![0.0; img.data.len()];
    for y in 0..h {
        let row = &img.data[y * w * CHANNELS..(y + 1) * w * CHANNELS];
        let out = &mut horizontal[y * w * CHANNELS..(y + 1) * w * CHANNELS];
        for x in 0..w {
            for c in 0..CHANNELS {
                let mut acc = 0.0;
                for (k, weight) in kernel.iter().enumerate() {
                    let sx = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
                    acc += weight * row[sx * CHANNELS + c];
                }
                out[x * CHANNELS + c] = acc;
            }
        }
    }

    let mut data = vec![0.0; img.data.len()];
    let stride = w * CHANNELS;
    for y in 0..h {
        for (k, weight) in kernel.iter().enumerate() {
            let sy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
            let src = &horizontal[sy * stride..(sy + 1) * stride];
            let dst = &mut data[y * stride..(y + 1) * stride];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += weight * s;
            }
        }
    }

    FloatImage {
        width: img.width,
        height: img.height,
        data,
    }
}

// Source coordinate for output index `i` under half-pixel-centered sampling.
fn source_taps(i: u32, out_len: u32, in_len: u32) -> (usize, usize, f64) {
    let scale = f64::from(in_len) / f64::from(out_len);
    let pos = ((f64::from(i) + 0.5) * scale - 0.5).clamp(0.0, f64::from(in_len - 1));
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(in_len as usize - 1);
    (lo, hi, pos - lo as f64)
}

/// Bilinear resize with half-pixel-centered sampling and clamped source
/// coordinates.
pub fn resize_bilinear(img: &FloatImage, out_w: u32, out_h: u32) -> Result<FloatImage> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::InvalidDimensions {
            width: out_w,
            height: out_h,
        });
    }
    let xs: Vec<_> = (0..out_w).map(|x| source_taps(x, out_w, img.width)).collect();
    let stride = img.width as usize * CHANNELS;
    let mut data = Vec::with_capacity(out_w as usize * out_h as usize * CHANNELS);
    for y in 0..out_h {
        let (y0, y1, ty) = source_taps(y, out_h, img.height);
        let row0 = &img.data[y0 * stride..(y0 + 1) * stride];
        let row1 = &img.data[y1 * stride..(y1 + 1) * stride];
        for &(x0, x1, tx) in &xs {
            for c in 0..CHANNELS {
                let top = row0[x0 * CHANNELS + c] * (1.0 - tx) + row0[x1 * CHANNELS + c] * tx;
                let bottom = row1[x0 * CHANNELS + c] * (1.0 - tx) + row1[x1 * CHANNELS + c] * tx;
                data.push(top * (1.0 - ty) + bottom * ty);
            }
        }
    }
    Ok(FloatImage {
        width: out_w,
        height: out_h,
        data,
    })
}

/// On-disk image encodings understood by [`load_frame`] and [`save_frame`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FrameFormat {
    Png,
    Ppm,
}

impl FrameFormat {
    pub fn extension(self) -> &'static str {
        match self {
            FrameFormat::Png => "png",
            FrameFormat::Ppm => "ppm",
        }
    }

    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "png" => Some(FrameFormat::Png),
            "ppm" => Some(FrameFormat::Ppm),
            _ => None,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        path.extension()
            .and_then(|e| e.to_str())
            .and_then(Self::from_extension)
            .ok_or_else(|| Error::UnsupportedFormat(path.display().to_string()))
    }
}

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Decodes a PNG or binary PNM (P6, or P5 replicated to RGB) file.
pub fn load_frame(path: impl AsRef<Path>) -> Result<Frame> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    decode_frame(&bytes)
}

pub fn decode_frame(bytes: &[u8]) -> Result<Frame> {
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.starts_with(b"P6") || bytes.starts_with(b"P5") {
        decode_pnm(bytes)
    } else {
        Err(Error::UnsupportedFormat(
            "expected PNG or binary PPM data".to_string(),
        ))
    }
}

fn decode_png(bytes: &[u8]) -> Result<Frame> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::CorruptImage(e.to_string()))?;
    let rgb = img.to_rgb8();
    let (width, height) = rgb.dimensions();
    Frame::new(width, height, rgb.into_raw())
}

struct PnmHeader {
    channels: usize,
    width: u32,
    height: u32,
    maxval: u32,
    data_offset: usize,
}

fn parse_pnm_header(bytes: &[u8]) -> Result<PnmHeader> {
    let channels = if bytes[1] == b'6' { 3 } else { 1 };
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::CorruptImage("truncated PNM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::CorruptImage("malformed PNM header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::CorruptImage("PNM header value out of range".into()))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::CorruptImage("missing PNM raster separator".into())),
    }
    let [width, height, maxval] = fields;
    Ok(PnmHeader {
        channels,
        width,
        height,
        maxval,
        data_offset: pos,
    })
}

fn decode_pnm(bytes: &[u8]) -> Result<Frame> {
    let header = parse_pnm_header(bytes)?;
    if header.width == 0 || header.height == 0 {
        return Err(Error::CorruptImage("PNM with zero dimension".into()));
    }
    if header.maxval == 0 || header.maxval > 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PNM maxval {} (only 8-bit rasters are supported)",
            header.maxval
        )));
    }
    let pixels = header.width as usize * header.height as usize;
    let needed = pixels * header.channels;
    let raster = &bytes[header.data_offset..];
    if raster.len() < needed {
        return Err(Error::CorruptImage(format!(
            "PNM raster truncated: {} of {needed} bytes",
            raster.len()
        )));
    }
    let raster = &raster[..needed];
    let rescale = |v: u8| -> u8 {
        if header.maxval == 255 {
            v
        } else {
            ((u32::from(v).min(header.maxval) * 255 + header.maxval / 2) / header.maxval) as u8
        }
    };
    let data = if header.channels == 3 {
        raster.iter().map(|&v| rescale(v)).collect()
    } else {
        raster
            .iter()
            .flat_map(|&v| [rescale(v); CHANNELS])
            .collect()
    };
    Frame::new(header.width, header.height, data)
}

/// Encodes the frame using the format implied by the path's extension.
pub fn save_frame(frame: &Frame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_frame(frame, FrameFormat::from_path(path)?)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn encode_frame(frame: &Frame, format: FrameFormat) -> Result<Vec<u8>> {
    match format {
        FrameFormat::Ppm => {
            let mut out = format!("P6\n{} {}\n255\n", frame.width, frame.height).into_bytes();
            out.extend_from_slice(&frame.data);
            Ok(out)
        }
        FrameFormat::Png => {
            let img = RgbImage::from_raw(frame.width, frame.height, frame.data.clone())
                .expect("frame buffer length is validated on construction");
            let mut out = Cursor::new(Vec::new());
            img.write_to(&mut out, ImageFormat::Png)
                .map_err(|e| Error::Io(std::io::Error::other(e)))?;
            Ok(out.into_inner())
        }
    }
}

/// Random access to the frames of a video.
pub trait FrameSource: Sync {
    fn frame_count(&self) -> usize;

    fn frame(&self, index: usize) -> Result<Cow<'_, Frame>>;
}

impl FrameSource for [Frame] {
    fn frame_count(&self) -> usize {
        self.len()
    }

    fn frame(&self, index: usize) -> Result<Cow<'_, Frame>> {
        self.get(index).map(Cow::Borrowed).ok_or(Error::OutOfBounds {
            index,
            len: self.len(),
        })
    }
}

impl FrameSource for Vec<Frame> {
    fn frame_count(&self) -> usize {
        self.len()
    }

    fn frame(&self, index: usize) -> Result<Cow<'_, Frame>> {
        self.as_slice().frame(index)
    }
}

/// A directory of `frame_%06d.{png,ppm}` files numbered contiguously from 1.
///
/// Frames are decoded lazily so that long videos need not fit in memory.
#[derive(Clone, Debug)]
pub struct FrameDir {
    dir: PathBuf,
    paths: Vec<PathBuf>,
}

fn parse_frame_name(name: &str) -> Option<(usize, FrameFormat)> {
    let (stem, ext) = name.rsplit_once('.')?;
    let digits = stem.strip_prefix("frame_")?;
    if digits.len() < 6 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((digits.parse().ok()?, FrameFormat::from_extension(ext)?))
}

impl FrameDir {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        let entries = fs::read_dir(&dir).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(dir.clone()),
            _ => Error::Io(e),
        })?;
        let mut numbered = Vec::new();
        for entry in entries {
            let entry = entry?;
            let name = entry.file_name();
            if let Some((index, _)) = name.to_str().and_then(parse_frame_name) {
                numbered.push((index, entry.path()));
            }
        }
        if numbered.is_empty() {
            return Err(Error::EmptyVideo);
        }
        numbered.sort();
        for (expected, (index, path)) in (1..).zip(&numbered) {
            if *index != expected {
                let reason = if *index > expected {
                    format!("frame {expected} is missing")
                } else {
                    format!("unexpected frame file {}", path.display())
                };
                return Err(Error::FrameDirectory { dir, reason });
            }
        }
        Ok(Self {
            dir,
            paths: numbered.into_iter().map(|(_, p)| p).collect(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn frame_paths(&self) -> &[PathBuf] {
        &self.paths
    }

    pub fn load_all(&self) -> Result<Vec<Frame>> {
        self.paths.iter().map(load_frame).collect()
    }
}

impl FrameSource for FrameDir {
    fn frame_count(&self) -> usize {
        self.paths.len()
    }

    fn frame(&self, index: usize) -> Result<Cow<'_, Frame>> {
        let path = self.paths.get(index).ok_or(Error::OutOfBounds {
            index,
            len: self.paths.len(),
        })?;
        load_frame(path).map(Cow::Owned)
    }
}

pub fn frame_file_name(index: usize, format: FrameFormat) -> String {
    format!("frame_{:06}.{}", index + 1, format.extension())
}

/// Writes frames as `frame_000001.<ext>`, `frame_000002.<ext>`, ... into an
/// existing or newly created directory.
pub fn save_frame_dir(frames: &[Frame], dir: impl AsRef<Path>, format: FrameFormat) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    for (i, frame) in frames.iter().enumerate() {
        save_frame(frame, dir.join(frame_file_name(i, format)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn float(width: u32, height: u32, f: impl Fn(u32, u32, usize) -> f64) -> FloatImage {
        let mut data = Vec::new();
        for y in 0..height {
            for x in 0..width {
                for c in 0..CHANNELS {
                    data.push(f(x, y, c));
                }
            }
        }
        FloatImage::from_samples(width, height, data).unwrap()
    }

    #[test]
    fn frame_rejects_wrong_length() {
        assert!(matches!(
            Frame::new(2, 2, vec![0; 11]),
            Err(Error::CorruptImage(_))
        ));
        assert!(matches!(
            Frame::new(0, 2, vec![]),
            Err(Error::InvalidDimensions { .. })
        ));
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel();
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(k[0], k[4]);
        assert_eq!(k[1], k[3]);
        assert!((k[1] / k[2] - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn blur_preserves_constant() {
        let img = float(9, 6, |_, _, c| 0.25 + 0.25 * c as f64);
        let out = gaussian_blur_5x5(&img);
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn blur_of_center_impulse_matches_direct_convolution() {
        let img = float(7, 7, |x, y, _| if (x, y) == (3, 3) { 1.0 } else { 0.0 });
        let out = gaussian_blur_5x5(&img);

        // direct 2-D convolution with the outer-product kernel
        let k = gaussian_kernel();
        for y in 0..7i32 {
            for x in 0..7i32 {
                let (dx, dy) = (3 - x, 3 - y);
                let expected = if dx.abs() <= 2 && dy.abs() <= 2 {
                    k[(dx + 2) as usize] * k[(dy + 2) as usize]
                } else {
                    0.0
                };
                assert!((out.sample(x as u32, y as u32, 0) - expected).abs() < 1e-15);
            }
        }
        assert!((out.sample(3, 3, 1) - k[2] * k[2]).abs() < 1e-15);
    }

    #[test]
    fn blur_is_not_idempotent() {
        let img = float(8, 8, |x, y, _| ((x * 3 + y * 5) % 7) as f64 / 7.0);
        let once = gaussian_blur_5x5(&img);
        let twice = gaussian_blur_5x5(&once);
        assert_ne!(once, twice);
    }

    #[test]
    fn resize_identity_scale() {
        let img = float(5, 3, |x, y, c| (x + 2 * y) as f64 / 11.0 + c as f64 * 0.01);
        let out = resize_bilinear(&img, 5, 3).unwrap();
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn resize_two_pixels_to_four() {
        let img = float(2, 1, |x, _, _| x as f64);
        let out = resize_bilinear(&img, 4, 1).unwrap();
        let red: Vec<f64> = out.data().iter().step_by(3).copied().collect();
        let expected = [0.0, 0.25, 0.75, 1.0];
        for (a, b) in red.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{red:?}");
        }
    }

    #[test]
    fn resize_rejects_zero() {
        let img = float(2, 2, |_, _, _| 0.0);
        assert!(matches!(
            resize_bilinear(&img, 0, 3),
            Err(Error::InvalidDimensions { .. })
        ));
    }

    #[test]
    fn pnm_decoding() {
        let mut bytes = b"P6\n2 2\n255\n".to_vec();
        bytes.extend([255u8; 12]);
        let frame = decode_frame(&bytes).unwrap();
        assert_eq!(frame, Frame::filled(2, 2, [255; 3]).unwrap());

        let with_comment = b"P6 # comment\n1 1\n255\n\x01\x02\x03";
        assert_eq!(decode_frame(with_comment).unwrap().pixel(0, 0), [1, 2, 3]);

        let gray = b"P5\n2 1\n255\n\x07\x09";
        let frame = decode_frame(gray).unwrap();
        assert_eq!(frame.pixel(0, 0), [7; 3]);
        assert_eq!(frame.pixel(1, 0), [9; 3]);

        let truncated = b"P6\n2 2\n255\n\x00\x00\x00";
        assert!(matches!(
            decode_frame(truncated),
            Err(Error::CorruptImage(_))
        ));
        assert!(matches!(
            decode_frame(b"P6\n2 2\n65535\n"),
            Err(Error::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_frame(b"GIF89a"),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn frame_names() {
        assert_eq!(parse_frame_name("frame_000001.png"), Some((1, FrameFormat::Png)));
        assert_eq!(parse_frame_name("frame_000012.ppm"), Some((12, FrameFormat::Ppm)));
        assert_eq!(parse_frame_name("frame_1.png"), None);
        assert_eq!(parse_frame_name("truth.json"), None);
        assert_eq!(frame_file_name(0, FrameFormat::Png), "frame_000001.png");
    }
}
