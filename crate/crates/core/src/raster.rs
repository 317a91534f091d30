//! 8-bit raster images and the binary PPM/PGM formats.
//!
//! PPM (P6, maxval 255) is the only raster format parsed natively; the
//! writer emits a canonical header so write/read round trips are bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::{DataMatrix, Matrix};

/// An RGB image, row-major, 8 bits per channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        RgbImage { width, height, pixels: vec![[0, 0, 0]; width * height] }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::SizeMismatch { expected: width * height, actual: pixels.len() });
        }
        Ok(RgbImage { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> [u8; 3] {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        self.pixels[row * self.width + col] = rgb;
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    /// Flatten to an N x 3 sample matrix in row-major pixel order, with
    /// `(pixel_row, pixel_col)` provenance.
    pub fn to_data_matrix(&self) -> Result<DataMatrix> {
        let n = self.width * self.height;
        let mut data = Vec::with_capacity(n * 3);
        let mut index = Vec::with_capacity(n);
        for r in 0..self.height {
            for c in 0..self.width {
                let px = self.get(r, c);
                data.extend_from_slice(&[px[0] as f64, px[1] as f64, px[2] as f64]);
                index.push((r as u32, c as u32));
            }
        }
        DataMatrix::new(Matrix::from_vec(n, 3, data), index)
    }

    pub fn write_ppm<W: Write>(&self, w: &mut W) -> Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        let mut buf = Vec::with_capacity(self.pixels.len() * 3);
        for px in &self.pixels {
            buf.extend_from_slice(px);
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_ppm<R: Read>(r: &mut R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let mut pos = 0usize;
        let magic = next_token(&bytes, &mut pos)
            .ok_or_else(|| Error::UnsupportedRaster("empty PPM".into()))?;
        if magic != b"P6" {
            return Err(Error::UnsupportedRaster(format!(
                "expected P6 magic, got {:?}",
                String::from_utf8_lossy(magic)
            )));
        }
        let width = next_usize(&bytes, &mut pos, "width")?;
        let height = next_usize(&bytes, &mut pos, "height")?;
        let maxval = next_usize(&bytes, &mut pos, "maxval")?;
        if maxval != 255 {
            return Err(Error::UnsupportedRaster(format!("unsupported maxval {maxval}")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        pos += 1;
        let need = width * height * 3;
        if bytes.len() < pos + need {
            return Err(Error::SizeMismatch { expected: pos + need, actual: bytes.len() });
        }
        let pixels = bytes[pos..pos + need]
            .chunks_exact(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        RgbImage::from_pixels(width, height, pixels)
    }

    pub fn save_ppm(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        self.write_ppm(&mut f)
    }

    pub fn load_ppm(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path)?;
        Self::read_ppm(&mut f)
    }
}

/// Skip whitespace and `#` comments, then return the next token.
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
    if *pos >= bytes.len() {
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(&bytes[start..*pos])
}

fn next_usize(bytes: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = next_token(bytes, pos)
        .ok_or_else(|| Error::UnsupportedRaster(format!("missing {what}")))?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::UnsupportedRaster(format!("bad {what}")))
}

/// Write an 8-bit grayscale PGM (P5, maxval 255).
pub fn write_pgm<W: Write>(w: &mut W, width: usize, height: usize, gray: &[u8]) -> Result<()> {
    if gray.len() != width * height {
        return Err(Error::SizeMismatch { expected: width * height, actual: gray.len() });
    }
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(gray)?;
    Ok(())
}

/// Fixed label palette for footprint overlays; label 0 stays black.
pub const LABEL_PALETTE: [[u8; 3]; 10] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
];

/// Color-code a label image (0 = unlabeled) for a PPM overlay.
pub fn labels_to_rgb(width: usize, height: usize, labels: &[u8]) -> Result<RgbImage> {
    if labels.len() != width * height {
        return Err(Error::SizeMismatch { expected: width * height, actual: labels.len() });
    }
    let pixels = labels
        .iter()
        .map(|&l| {
            if l == 0 {
                [0, 0, 0]
            } else {
                LABEL_PALETTE[(l as usize - 1) % LABEL_PALETTE.len()]
            }
        })
        .collect();
    RgbImage::from_pixels(width, height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ppm_roundtrip_bit_exact() {
        let mut img = RgbImage::new(3, 2);
        img.set(0, 0, [1, 2, 3]);
        img.set(1, 2, [255, 0, 128]);
        let mut buf = Vec::new();
        img.write_ppm(&mut buf).unwrap();
        let back = RgbImage::read_ppm(&mut buf.as_slice()).unwrap();
        assert_eq!(img, back);
        let mut buf2 = Vec::new();
        back.write_ppm(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn ppm_reader_skips_comments() {
        let mut data = b"P6 # comment\n# another\n2 1\n255\n".to_vec();
        data.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        let img = RgbImage::read_ppm(&mut data.as_slice()).unwrap();
        assert_eq!(img.get(0, 1), [4, 5, 6]);
    }

    #[test]
    fn ppm_rejects_wrong_magic() {
        let data = b"P5\n1 1\n255\n\0".to_vec();
        assert!(RgbImage::read_ppm(&mut data.as_slice()).is_err());
    }

    #[test]
    fn ppm_rejects_truncated_raster() {
        let mut data = b"P6\n2 2\n255\n".to_vec();
        data.extend_from_slice(&[0; 5]);
        assert!(matches!(
            RgbImage::read_ppm(&mut data.as_slice()),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn data_matrix_row_major_order() {
        let mut img = RgbImage::new(2, 2);
        img.set(0, 1, [10, 20, 30]);
        let dm = img.to_data_matrix().unwrap();
        assert_eq!(dm.n_rows(), 4);
        assert_eq!(dm.row(1), &[10.0, 20.0, 30.0]);
        assert_eq!(dm.row_index()[1], (0, 1));
        assert_eq!(dm.row_index()[2], (1, 0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn ppm_roundtrip_any_image(w in 1usize..12, h in 1usize..12, seed in 0u64..1000) {
            let mut v = seed;
            let mut img = RgbImage::new(w, h);
            for r in 0..h {
                for c in 0..w {
                    v = v.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    let b = v.to_le_bytes();
                    img.set(r, c, [b[0], b[1], b[2]]);
                }
            }
            let mut buf = Vec::new();
            img.write_ppm(&mut buf).unwrap();
            let back = RgbImage::read_ppm(&mut buf.as_slice()).unwrap();
            prop_assert_eq!(img, back);
        }
    }
}
