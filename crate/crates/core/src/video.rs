//! `T x H x W` intensity videos and the `LRMV` container.
//!
//! Layout (little-endian): `b"LRMV"`, `u32` version (1), `u32` T, `u32` H,
//! `u32` W, `T·H·W` `f64` intensities in frame-major row-major order, then a
//! `u32` CRC-32 (IEEE) of every preceding byte.

use std::path::Path;

use crate::error::{Error, FormatError, Result};
use crate::io::{format_err, put_f64s, put_u32, read_file, to_u32, write_atomic, Cursor};

pub const VIDEO_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Video {
    frames: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Video {
    /// Checks the shape and that every value is finite and in `[0, 1]`.
    pub fn new(frames: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if frames == 0 || height == 0 || width == 0 {
            return Err(Error::InvalidConfig(format!(
                "video dimensions must be positive, got {frames}x{height}x{width}"
            )));
        }
        if data.len() != frames * height * width {
            return Err(Error::dims("Video::new", frames * height * width, data.len()));
        }
        if let Some(i) = data.iter().position(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidConfig(format!(
                "video value {} at index {i} outside [0, 1]",
                data[i]
            )));
        }
        Ok(Video {
            frames,
            height,
            width,
            data,
        })
    }

    /// Clamps raw network output into `[0, 1]` (NaN becomes 0).
    pub fn from_unclamped(frames: usize, height: usize, width: usize, mut data: Vec<f64>) -> Result<Self> {
        for x in &mut data {
            *x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
        }
        Video::new(frames, height, width, data)
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.frames, self.height, self.width)
    }

    pub fn pixels_per_frame(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let n = self.pixels_per_frame();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn frame_means(&self) -> Vec<f64> {
        (0..self.frames)
            .map(|t| self.frame(t).iter().sum::<f64>() / self.pixels_per_frame() as f64)
            .collect()
    }

    /// Copy with frames reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> Result<Video> {
        let mut data = Vec::with_capacity(self.data.len());
        for &t in order {
            if t >= self.frames {
                return Err(Error::InvalidConfig(format!("frame {t} out of range")));
            }
            data.extend_from_slice(self.frame(t));
        }
        Video::new(order.len(), self.height, self.width, data)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(24 + 8 * self.data.len());
        out.extend_from_slice(b"LRMV");
        put_u32(&mut out, VIDEO_FORMAT_VERSION);
        put_u32(&mut out, to_u32(self.frames, "T")?);
        put_u32(&mut out, to_u32(self.height, "H")?);
        put_u32(&mut out, to_u32(self.width, "W")?);
        put_f64s(&mut out, &self.data);
        let crc = crc32fast::hash(&out);
        put_u32(&mut out, crc);
        Ok(out)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, FormatError> {
        let mut c = Cursor::new(buf);
        c.magic(b"LRMV")?;
        let version = c.u32()?;
        if version != VIDEO_FORMAT_VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let t = c.u32()? as usize;
        let h = c.u32()? as usize;
        let w = c.u32()? as usize;
        let n = t
            .checked_mul(h)
            .and_then(|x| x.checked_mul(w))
            .ok_or_else(|| FormatError::Malformed("video size overflows".into()))?;
        let data = c.f64s(n)?;
        let body_end = c.position();
        let stored = c.u32()?;
        c.finish()?;
        let computed = crc32fast::hash(&buf[..body_end]);
        if stored != computed {
            return Err(FormatError::CrcMismatch { stored, computed });
        }
        Video::new(t, h, w, data).map_err(|e| FormatError::Malformed(e.to_string()))
    }
}

pub fn write_video(path: &Path, video: &Video) -> Result<()> {
    write_atomic(path, &video.to_bytes()?)
}

pub fn read_video(path: &Path) -> Result<Video> {
    let buf = read_file(path)?;
    Video::from_bytes(&buf).map_err(|k| format_err(path, k))
}
