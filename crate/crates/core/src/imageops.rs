//! Grayscale raster utilities: PGM I/O, blank detection, y-cut line
//! segmentation and white-border trimming. Pixels are row-major bytes with
//! 0 = black and 255 = white.

use std::fs;
use std::io::{self, Write};
use std::ops::Range;
use std::path::Path;

use thiserror::Error;

pub const DEFAULT_WHITE_THRESHOLD: u8 = 250;
pub const DEFAULT_MIN_GAP: usize = 20;
pub const DEFAULT_MIN_SEGMENT: usize = 8;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("not a PGM file (magic must be P2 or P5)")]
    BadMagic,
    #[error("malformed PGM header: {0}")]
    BadHeader(String),
    #[error("unsupported maxval {0} (must be 1..=255)")]
    UnsupportedMaxval(u32),
    #[error("pixel data truncated: expected {expected} samples, found {found}")]
    TruncatedPixelData { expected: usize, found: usize },
    #[error("image dimensions must be at least 1x1 and match the pixel count")]
    BadDimensions,
    #[error("image is entirely white")]
    FullyBlank,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmEncoding {
    Ascii,
    Binary,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<GrayImage, ImageError> {
        if width == 0 || height == 0 || width.checked_mul(height) != Some(pixels.len()) {
            return Err(ImageError::BadDimensions);
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<GrayImage, ImageError> {
        GrayImage::new(width, height, vec![value; width.saturating_mul(height)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    /// Paints rows `rows` (all columns) with `value`.
    pub fn fill_rows(&mut self, rows: Range<usize>, value: u8) {
        let w = self.width;
        self.pixels[rows.start * w..rows.end * w].fill(value);
    }

    pub fn crop(&self, x: Range<usize>, y: Range<usize>) -> Result<GrayImage, ImageError> {
        if x.end > self.width || y.end > self.height {
            return Err(ImageError::BadDimensions);
        }
        let mut pixels = Vec::with_capacity(x.len() * y.len());
        for row in y.clone() {
            pixels.extend_from_slice(&self.row(row)[x.clone()]);
        }
        GrayImage::new(x.len(), y.len(), pixels)
    }

    /// Surrounds the image with `margin` pixels of `value` on every side.
    pub fn pad(&self, margin: usize, value: u8) -> GrayImage {
        let w = self.width + 2 * margin;
        let h = self.height + 2 * margin;
        let mut pixels = vec![value; w * h];
        for y in 0..self.height {
            let start = (y + margin) * w + margin;
            pixels[start..start + self.width].copy_from_slice(self.row(y));
        }
        GrayImage {
            width: w,
            height: h,
            pixels,
        }
    }

    pub fn to_pgm(&self, encoding: PgmEncoding) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() * 4 + 32);
        match encoding {
            PgmEncoding::Binary => {
                write!(out, "P5\n{} {}\n255\n", self.width, self.height).unwrap();
                out.extend_from_slice(&self.pixels);
            }
            PgmEncoding::Ascii => {
                write!(out, "P2\n{} {}\n255\n", self.width, self.height).unwrap();
                for row in self.pixels.chunks(self.width) {
                    let line: Vec<String> = row.iter().map(u8::to_string).collect();
                    out.extend_from_slice(line.join(" ").as_bytes());
                    out.push(b'\n');
                }
            }
        }
        out
    }

    pub fn from_pgm(data: &[u8]) -> Result<GrayImage, ImageError> {
        let binary = match data.get(..2) {
            Some(b"P5") => true,
            Some(b"P2") => false,
            _ => return Err(ImageError::BadMagic),
        };
        let mut pos = 2;
        let mut header = [0u32; 3];
        for (i, field) in header.iter_mut().enumerate() {
            *field = read_header_number(data, &mut pos).ok_or_else(|| {
                ImageError::BadHeader(["width", "height", "maxval"][i].to_owned())
            })?;
        }
        let [width, height, maxval] = header;
        if maxval == 0 || maxval > 255 {
            return Err(ImageError::UnsupportedMaxval(maxval));
        }
        let (width, height) = (width as usize, height as usize);
        if width == 0 || height == 0 {
            return Err(ImageError::BadDimensions);
        }
        let expected = width * height;
        let mut pixels = if binary {
            // exactly one whitespace byte separates the header from the raster
            if pos >= data.len() || !data[pos].is_ascii_whitespace() {
                return Err(ImageError::TruncatedPixelData { expected, found: 0 });
            }
            let raster = &data[pos + 1..];
            if raster.len() < expected {
                return Err(ImageError::TruncatedPixelData {
                    expected,
                    found: raster.len(),
                });
            }
            raster[..expected].to_vec()
        } else {
            let mut px = Vec::with_capacity(expected);
            while px.len() < expected {
                match read_header_number(data, &mut pos) {
                    Some(v) if v <= maxval => px.push(v as u8),
                    Some(_) => {
                        return Err(ImageError::BadHeader("sample exceeds maxval".to_owned()))
                    }
                    None => {
                        return Err(ImageError::TruncatedPixelData {
                            expected,
                            found: px.len(),
                        })
                    }
                }
            }
            px
        };
        if maxval != 255 {
            for p in &mut pixels {
                *p = ((u32::from(*p) * 255 + maxval / 2) / maxval) as u8;
            }
        }
        GrayImage::new(width, height, pixels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<GrayImage, ImageError> {
        GrayImage::from_pgm(&fs::read(path)?)
    }

    /// Writes binary PGM.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ImageError> {
        self.save_as(path, PgmEncoding::Binary)
    }

    pub fn save_as(&self, path: impl AsRef<Path>, encoding: PgmEncoding) -> Result<(), ImageError> {
        fs::write(path, self.to_pgm(encoding))?;
        Ok(())
    }
}

/// Skips whitespace and `#` comments, then reads an unsigned decimal.
fn read_header_number(data: &[u8], pos: &mut usize) -> Option<u32> {
    loop {
        match data.get(*pos)? {
            b'#' => {
                while *pos < data.len() && data[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            c if c.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
    let start = *pos;
    while *pos < data.len() && data[*pos].is_ascii_digit() {
        *pos += 1;
    }
    std::str::from_utf8(&data[start..*pos]).ok()?.parse().ok()
}

pub fn is_blank(image: &GrayImage, white_threshold: u8) -> bool {
    image.pixels.iter().all(|&p| p >= white_threshold)
}

fn row_is_blank(image: &GrayImage, y: usize, white_threshold: u8) -> bool {
    image.row(y).iter().all(|&p| p >= white_threshold)
}

/// Splits an image into horizontal strips.
///
/// Blank runs of at least `min_gap` rows separate segments; shorter runs stay
/// inside a segment. Each segment spans from its first to its last non-blank
/// row. Segments shorter than `min_segment` rows are merged into the neighbor
/// across the smaller gap (the previous one on ties).
pub fn ycut(
    image: &GrayImage,
    white_threshold: u8,
    min_gap: usize,
    min_segment: usize,
) -> Vec<Range<usize>> {
    let mut segments: Vec<Range<usize>> = Vec::new();
    let mut blank_run = 0usize;
    for y in 0..image.height {
        if row_is_blank(image, y, white_threshold) {
            blank_run += 1;
            continue;
        }
        match segments.last_mut() {
            Some(last) if blank_run < min_gap.max(1) => last.end = y + 1,
            _ => segments.push(y..y + 1),
        }
        blank_run = 0;
    }

    while segments.len() > 1 {
        let Some(i) = segments.iter().position(|s| s.len() < min_segment) else {
            break;
        };
        let gap_before = (i > 0).then(|| segments[i].start - segments[i - 1].end);
        let gap_after = segments.get(i + 1).map(|n| n.start - segments[i].end);
        let into_prev = match (gap_before, gap_after) {
            (Some(b), Some(a)) => b <= a,
            (Some(_), None) => true,
            _ => false,
        };
        let (a, b) = if into_prev { (i - 1, i) } else { (i, i + 1) };
        segments[a].end = segments[b].end;
        segments.remove(b);
    }
    segments
}

/// Removes all-white margin rows and columns.
pub fn trim_border(image: &GrayImage, white_threshold: u8) -> Result<GrayImage, ImageError> {
    let ink = |p: u8| p < white_threshold;
    let rows: Vec<usize> = (0..image.height)
        .filter(|&y| image.row(y).iter().any(|&p| ink(p)))
        .collect();
    let (Some(&top), Some(&bottom)) = (rows.first(), rows.last()) else {
        return Err(ImageError::FullyBlank);
    };
    let col_has_ink = |x: usize| (top..=bottom).any(|y| ink(image.get(x, y)));
    let left = (0..image.width).find(|&x| col_has_ink(x)).unwrap_or(0);
    let right = (0..image.width)
        .rev()
        .find(|&x| col_has_ink(x))
        .unwrap_or(0);
    image.crop(left..right + 1, top..bottom + 1)
}
