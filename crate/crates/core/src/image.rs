//! 8-bit grayscale rasters, binary PGM I/O and the reductions that relate a
//! minimal image to its sub-minimal descendants.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ImageError, PgmError};

/// Single-channel 8-bit image, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Image({}x{})", self.width, self.height)
    }
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::EmptyDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(ImageError::DataLength {
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    pub fn transposed(&self) -> Self {
        Self::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }

    /// Sub-window `[x, x + w) × [y, y + h)`; panics if out of bounds.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Self {
        assert!(x + w <= self.width && y + h <= self.height && w > 0 && h > 0);
        Self::from_fn(w, h, |cx, cy| self.get(x + cx, y + cy))
    }

    /// Area-averaging resample to `new_w × new_h`.
    ///
    /// Source and target pixel footprints are intersected on a common integer
    /// grid (source pixel = `new_w × new_h` units, target pixel = `w × h`
    /// units) so the result is exact up to the final round-half-up.
    pub fn resample_area(&self, new_w: usize, new_h: usize) -> Self {
        assert!(new_w > 0 && new_h > 0);
        let (w, h) = (self.width, self.height);
        let xs = overlap_table(w, new_w);
        let ys = overlap_table(h, new_h);
        let area = (w * h) as u64;
        Self::from_fn(new_w, new_h, |tx, ty| {
            let mut acc = 0u64;
            for &(sy, wy) in &ys[ty] {
                for &(sx, wx) in &xs[tx] {
                    acc += wx * wy * self.get(sx, sy) as u64;
                }
            }
            ((acc + area / 2) / area).min(255) as u8
        })
    }

    /// Nearest-neighbour resample, used only to composite glyphs.
    pub fn resample_nearest(&self, new_w: usize, new_h: usize) -> Self {
        Self::from_fn(new_w, new_h, |x, y| {
            let sx = (x * self.width) / new_w;
            let sy = (y * self.height) / new_h;
            self.get(sx.min(self.width - 1), sy.min(self.height - 1))
        })
    }

    /// Encodes as binary PGM (P5, maxval 255).
    pub fn to_pgm_bytes(&self, comment: Option<&str>) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() + 32);
        out.extend_from_slice(b"P5\n");
        if let Some(c) = comment {
            let line: String = c.chars().filter(|&ch| ch != '\n' && ch != '\r').collect();
            out.extend_from_slice(b"# ");
            out.extend_from_slice(line.as_bytes());
            out.push(b'\n');
        }
        out.extend_from_slice(format!("{} {}\n255\n", self.width, self.height).as_bytes());
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self, PgmError> {
        parse_pgm(bytes)
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<(), PgmError> {
        let mut f = fs::File::create(path.as_ref()).map_err(|e| PgmError::Io {
            path: path.as_ref().display().to_string(),
            source: e,
        })?;
        f.write_all(&self.to_pgm_bytes(None))
            .map_err(|e| PgmError::Io {
                path: path.as_ref().display().to_string(),
                source: e,
            })
    }

    /// 8-bit grayscale PNG, for rendering only.
    pub fn to_png_bytes(&self) -> Vec<u8> {
        use image::ImageEncoder;
        let mut out = Vec::new();
        image::codecs::png::PngEncoder::new(&mut out)
            .write_image(
                &self.data,
                self.width as u32,
                self.height as u32,
                image::ExtendedColorType::L8,
            )
            .expect("in-memory PNG encoding cannot fail");
        out
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        fs::write(path, self.to_png_bytes())
    }
}

/// For each target index, the list of `(source index, overlap)` on the
/// common grid where a source pixel spans `dst` units and a target `src`.
fn overlap_table(src: usize, dst: usize) -> Vec<Vec<(usize, u64)>> {
    (0..dst)
        .map(|t| {
            let lo = t * src;
            let hi = (t + 1) * src;
            let first = lo / dst;
            let last = (hi - 1) / dst;
            (first..=last)
                .filter_map(|s| {
                    let s_lo = s * dst;
                    let s_hi = (s + 1) * dst;
                    let ov = hi.min(s_hi).saturating_sub(lo.max(s_lo));
                    (ov > 0).then_some((s, ov as u64))
                })
                .collect()
        })
        .collect()
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Image, PgmError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            PgmError::Missing(path.display().to_string())
        } else {
            PgmError::Io {
                path: path.display().to_string(),
                source: e,
            }
        }
    })?;
    parse_pgm(&bytes)
}

fn parse_pgm(bytes: &[u8]) -> Result<Image, PgmError> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos).ok_or(PgmError::Header("missing magic"))?;
    match magic {
        b"P5" => {}
        b"P1" | b"P2" | b"P3" | b"P4" | b"P6" | b"P7" => {
            return Err(PgmError::Unsupported(
                String::from_utf8_lossy(magic).into_owned(),
            ))
        }
        _ => return Err(PgmError::Header("bad magic")),
    }
    let width = parse_header_num(bytes, &mut pos, "width")?;
    let height = parse_header_num(bytes, &mut pos, "height")?;
    let maxval = parse_header_num(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::Header("zero dimension"));
    }
    if maxval != 255 {
        return Err(PgmError::MaxVal(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(PgmError::Truncated {
            expected: width * height,
            actual: 0,
        });
    }
    pos += 1;
    let need = width * height;
    let avail = bytes.len() - pos;
    if avail < need {
        return Err(PgmError::Truncated {
            expected: need,
            actual: avail,
        });
    }
    Ok(Image {
        width,
        height,
        data: bytes[pos..pos + need].to_vec(),
    })
}

fn parse_header_num(bytes: &[u8], pos: &mut usize, what: &'static str) -> Result<usize, PgmError> {
    let tok = next_token(bytes, pos).ok_or(PgmError::Header(what))?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or(PgmError::Header(what))
}

/// Next whitespace-delimited header token, skipping `#` comment lines.
fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReductionKind {
    CropTopLeft,
    CropTopRight,
    CropBottomLeft,
    CropBottomRight,
    Resolution,
}

impl ReductionKind {
    pub const ALL: [ReductionKind; 5] = [
        ReductionKind::CropTopLeft,
        ReductionKind::CropTopRight,
        ReductionKind::CropBottomLeft,
        ReductionKind::CropBottomRight,
        ReductionKind::Resolution,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            ReductionKind::CropTopLeft => "crop-tl",
            ReductionKind::CropTopRight => "crop-tr",
            ReductionKind::CropBottomLeft => "crop-bl",
            ReductionKind::CropBottomRight => "crop-br",
            ReductionKind::Resolution => "resolution",
        }
    }
}

pub const DEFAULT_REDUCTION_FACTOR: f64 = 0.8;

/// One reduction step. Factors are in `(0, 1]`; 1 is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionStep {
    pub kind: ReductionKind,
    pub factor: f64,
}

impl ReductionStep {
    pub fn new(kind: ReductionKind, factor: f64) -> Self {
        Self { kind, factor }
    }
}

/// `⌈factor · n⌉`, with a small slack so that e.g. `0.8 · 30` is 24 and not 25.
pub fn reduced_len(n: usize, factor: f64) -> usize {
    let v = factor * n as f64;
    (v - 1e-9 * v.abs().max(1.0)).ceil().max(0.0) as usize
}

/// Offset of a crop of size `(cw, ch)` for the given corner.
pub fn crop_origin(kind: ReductionKind, w: usize, h: usize, cw: usize, ch: usize) -> (usize, usize) {
    match kind {
        ReductionKind::CropTopLeft | ReductionKind::Resolution => (0, 0),
        ReductionKind::CropTopRight => (w - cw, 0),
        ReductionKind::CropBottomLeft => (0, h - ch),
        ReductionKind::CropBottomRight => (w - cw, h - ch),
    }
}

pub fn reduce(img: &Image, step: ReductionStep) -> Result<Image, ImageError> {
    if !(step.factor > 0.0 && step.factor <= 1.0) {
        return Err(ImageError::BadFactor(step.factor));
    }
    let (w, h) = img.dims();
    let nw = reduced_len(w, step.factor);
    let nh = reduced_len(h, step.factor);
    // a proper reduction (factor < 1) must shrink the image and stay >= 2x2
    let stalled = step.factor < 1.0 && nw == w && nh == h;
    if nw < 2 || nh < 2 || stalled {
        return Err(ImageError::ReductionExhausted { width: nw, height: nh });
    }
    if nw == w && nh == h {
        return Ok(img.clone());
    }
    Ok(match step.kind {
        ReductionKind::Resolution => img.resample_area(nw, nh),
        kind => {
            let (x, y) = crop_origin(kind, w, h, nw, nh);
            img.crop(x, y, nw, nh)
        }
    })
}

/// The four corner crops and one resolution reduction, in
/// [`ReductionKind::ALL`] order. Either all five succeed or none is returned.
pub fn descendants(img: &Image, factor: f64) -> Result<Vec<(ReductionStep, Image)>, ImageError> {
    ReductionKind::ALL
        .iter()
        .map(|&kind| {
            let step = ReductionStep::new(kind, factor);
            reduce(img, step).map(|out| (step, out))
        })
        .collect()
}
