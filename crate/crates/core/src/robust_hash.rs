//! Quaternion polar cosine transform (QPCT) robust hash.
//!
//! An image is blurred, resized to 128x128 and treated as a pure quaternion
//! field `f = iR + jG + kB` over the disk inscribed in the square. The hash
//! is built from the magnitudes of 120 low-order moments
//!
//! ```text
//! M(s, l) = sum f(x, y) * cos(pi * s * rho^2) * exp(-mu * l * theta) * dA
//! ```
//!
//! with `mu = (i + j + k) / sqrt(3)`, `s < 8` and `l < 15`, binarized against
//! their median. Pixels outside the disk never contribute, so the corners of
//! the input are invisible to the hash.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::imaging::{gaussian_blur_5x5, resize_bilinear, FloatImage, Frame, CHANNELS};

/// Number of bits in a hash value.
pub const HASH_BITS: usize = 120;
/// Packed size of a hash value.
pub const HASH_BYTES: usize = HASH_BITS / 8;
/// Side of the square raster the moments are computed on.
pub const HASH_SIDE: u32 = 128;
pub const RADIAL_ORDERS: usize = 8;
pub const ANGULAR_ORDERS: usize = 15;

/// A 120-bit robust hash, packed LSB-first: bit `k` lives in byte `k / 8` at
/// position `k % 8`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct HashValue([u8; HASH_BYTES]);

impl HashValue {
    pub const fn from_bytes(bytes: [u8; HASH_BYTES]) -> Self {
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; HASH_BYTES] {
        &self.0
    }

    /// Packs an iterator of exactly [`HASH_BITS`] bits.
    ///
    /// Panics if the iterator yields a different number of bits.
    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        let mut bytes = [0u8; HASH_BYTES];
        let mut count = 0;
        for (k, bit) in bits.into_iter().enumerate() {
            assert!(k < HASH_BITS, "more than {HASH_BITS} bits");
            if bit {
                bytes[k / 8] |= 1 << (k % 8);
            }
            count += 1;
        }
        assert_eq!(count, HASH_BITS, "expected exactly {HASH_BITS} bits");
        Self(bytes)
    }

    pub fn bit(&self, k: usize) -> bool {
        self.0[k / 8] >> (k % 8) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..HASH_BITS).map(|k| self.bit(k))
    }

    pub fn count_ones(&self) -> u32 {
        self.0.iter().map(|b| b.count_ones()).sum()
    }

    pub fn complement(&self) -> Self {
        Self(self.0.map(|b| !b))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for HashValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for HashValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HashValue({})", self.to_hex())
    }
}

#[derive(thiserror::Error, Debug, PartialEq, Eq)]
#[error("hash must be {} lowercase hex digits", HASH_BYTES * 2)]
pub struct ParseHashError;

impl FromStr for HashValue {
    type Err = ParseHashError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.len() != HASH_BYTES * 2 || s.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(ParseHashError);
        }
        let mut bytes = [0u8; HASH_BYTES];
        hex::decode_to_slice(s, &mut bytes).map_err(|_| ParseHashError)?;
        Ok(Self(bytes))
    }
}

impl Serialize for HashValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for HashValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of differing bits between two hashes.
pub fn hamming_distance(a: &HashValue, b: &HashValue) -> u32 {
    a.0.iter().zip(&b.0).map(|(x, y)| (x ^ y).count_ones()).sum()
}

/// QPCT moment magnitudes, entry `(s, l)` stored at `s * 15 + l`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(pub [f64; HASH_BITS]);

impl FeatureVector {
    pub fn get(&self, radial: usize, angular: usize) -> f64 {
        self.0[radial * ANGULAR_ORDERS + angular]
    }

    pub fn values(&self) -> &[f64; HASH_BITS] {
        &self.0
    }
}

/// Blur, then resize to the 128x128 moment raster.
pub fn preprocess(frame: &Frame) -> FloatImage {
    let blurred = gaussian_blur_5x5(&frame.to_float());
    resize_bilinear(&blurred, HASH_SIDE, HASH_SIDE).expect("hash side is nonzero")
}

struct DiskSample {
    pixel: usize,
    radial: [f64; RADIAL_ORDERS],
    cos: [f64; ANGULAR_ORDERS],
    sin: [f64; ANGULAR_ORDERS],
}

/// Kernel values at every pixel center inside the inscribed unit disk.
static DISK: LazyLock<Vec<DiskSample>> = LazyLock::new(|| {
    let side = HASH_SIDE as usize;
    let half = f64::from(HASH_SIDE) / 2.0;
    let mut samples = Vec::new();
    for row in 0..side {
        let y = 1.0 - (row as f64 + 0.5) / half;
        for col in 0..side {
            let x = (col as f64 + 0.5) / half - 1.0;
            let rho2 = x * x + y * y;
            if rho2 > 1.0 {
                continue;
            }
            let theta = y.atan2(x);
            let radial = std::array::from_fn(|s| (std::f64::consts::PI * s as f64 * rho2).cos());
            let cos = std::array::from_fn(|l| (l as f64 * theta).cos());
            let sin = std::array::from_fn(|l| (l as f64 * theta).sin());
            samples.push(DiskSample {
                pixel: row * side + col,
                radial,
                cos,
                sin,
            });
        }
    }
    samples
});

/// Computes the 120 QPCT moment magnitudes of a 128x128 image.
pub fn qpct_features(img: &FloatImage) -> Result<FeatureVector> {
    if img.width() != HASH_SIDE || img.height() != HASH_SIDE {
        return Err(Error::DimensionMismatch {
            expected_w: HASH_SIDE,
            expected_h: HASH_SIDE,
            width: img.width(),
            height: img.height(),
        });
    }
    let inv_sqrt3 = 1.0 / 3f64.sqrt();
    let data = img.data();
    let mut moments = [[[0.0f64; 4]; ANGULAR_ORDERS]; RADIAL_ORDERS];

    for sample in DISK.iter() {
        let px = &data[sample.pixel * CHANNELS..sample.pixel * CHANNELS + CHANNELS];
        let (r, g, b) = (px[0], px[1], px[2]);
        // f and f * mu as (scalar, i, j, k)
        let f = [0.0, r, g, b];
        let f_mu = [
            -(r + g + b) * inv_sqrt3,
            (g - b) * inv_sqrt3,
            (b - r) * inv_sqrt3,
            (r - g) * inv_sqrt3,
        ];
        for l in 0..ANGULAR_ORDERS {
            let (c, s) = (sample.cos[l], sample.sin[l]);
            // f * exp(-mu l theta) = cos(l theta) f - sin(l theta) f mu
            let v = std::array::from_fn::<f64, 4, _>(|q| c * f[q] - s * f_mu[q]);
            for (radial, moment) in sample.radial.iter().zip(moments.iter_mut()) {
                for q in 0..4 {
                    moment[l][q] += radial * v[q];
                }
            }
        }
    }

    let area = (2.0 / f64::from(HASH_SIDE)).powi(2);
    let mut features = [0.0; HASH_BITS];
    for (s, per_radial) in moments.iter().enumerate() {
        for (l, m) in per_radial.iter().enumerate() {
            let norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
            features[s * ANGULAR_ORDERS + l] = norm * area;
        }
    }
    Ok(FeatureVector(features))
}

/// Sets bit `k` when feature `k` is at least the lower median of all features.
pub fn binarize(features: &FeatureVector) -> Result<HashValue> {
    if let Some(index) = features.0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteFeature { index });
    }
    let mut sorted = features.0;
    sorted.sort_by(f64::total_cmp);
    let median = sorted[HASH_BITS / 2 - 1];
    Ok(HashValue::from_bits(features.0.iter().map(|&v| v >= median)))
}

pub fn compute_hash(frame: &Frame) -> Result<HashValue> {
    binarize(&qpct_features(&preprocess(frame))?)
}
