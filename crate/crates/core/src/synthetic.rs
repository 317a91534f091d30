//! Deterministic synthetic test images: a grayscale chip grid, a
//! binary-color-mixture mosaic, and a continuous/discrete color table.
//! These are the desk-scale fixtures for the whole pipeline.

use crate::raster::RgbImage;

/// Gray level of chip `(i, j)` in the 10x10 grid: linear black to white
/// along `i + j`, so every anti-diagonal of chips shares one value.
fn chip_gray(i: usize, j: usize) -> u8 {
    (255.0 * (i + j) as f64 / 18.0).round() as u8
}

/// Channel level for binary mixing at chip index `t` in 0..=9.
fn mix_level(t: usize) -> u8 {
    (255.0 * t as f64 / 9.0).round() as u8
}

/// 100x100 image of 10x10 monoshade chips ramping from black `[0,0,0]` to
/// white `[255,255,255]`; every pixel has r = g = b.
pub fn gen_grayscale_grid() -> RgbImage {
    let mut img = RgbImage::new(100, 100);
    for r in 0..100 {
        for c in 0..100 {
            let g = chip_gray(r / 10, c / 10);
            img.set(r, c, [g, g, g]);
        }
    }
    img
}

/// 200x200 mosaic of four 100x100 submatrices (each a 10x10 chip grid):
/// grayscale (top left), (R,G) mixing (top right), (R,B) mixing (bottom
/// left) and (G,B) mixing (bottom right).
pub fn gen_binary_mixture() -> RgbImage {
    let mut img = RgbImage::new(200, 200);
    for r in 0..200 {
        for c in 0..200 {
            let (i, j) = ((r % 100) / 10, (c % 100) / 10);
            let rgb = match (r < 100, c < 100) {
                (true, true) => {
                    let g = chip_gray(i, j);
                    [g, g, g]
                }
                (true, false) => [mix_level(i), mix_level(j), 0],
                (false, true) => [mix_level(i), 0, mix_level(j)],
                (false, false) => [0, mix_level(i), mix_level(j)],
            };
            img.set(r, c, rgb);
        }
    }
    img
}

/// Standard HSV to 8-bit RGB, s and v in [0,1], hue in degrees.
pub fn hsv_to_rgb(hue: f64, s: f64, v: f64) -> [u8; 3] {
    let h = hue.rem_euclid(360.0) / 60.0;
    let i = h.floor() as i64 % 6;
    let f = h - h.floor();
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    let (r, g, b) = match i {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    [
        (255.0 * r).round() as u8,
        (255.0 * g).round() as u8,
        (255.0 * b).round() as u8,
    ]
}

/// 256x256 color-table image. The top half is a continuous ramp (hue
/// linear across columns, value linear down rows, full saturation). The
/// bottom half is a 16x8 grid of uniform 16x16 chips: a gray row, then the
/// RGB cube corners, face centers and center, then discrete hue/value
/// swatches.
pub fn gen_continuous_discrete() -> RgbImage {
    let mut img = RgbImage::new(256, 256);
    for r in 0..128 {
        let v = 1.0 - 0.75 * r as f64 / 127.0;
        for c in 0..256 {
            let hue = 360.0 * c as f64 / 256.0;
            img.set(r, c, hsv_to_rgb(hue, 1.0, v));
        }
    }
    for r in 128..256 {
        let chip_row = (r - 128) / 16;
        for c in 0..256 {
            img.set(r, c, discrete_chip(chip_row, c / 16));
        }
    }
    img
}

/// Fixed discrete palette law for the bottom half of the color table.
fn discrete_chip(row: usize, col: usize) -> [u8; 3] {
    match row {
        // Gray row, 16 levels black to white.
        0 => {
            let g = (255.0 * col as f64 / 15.0).round() as u8;
            [g, g, g]
        }
        // Cube corners, face centers, and the cube center.
        1 => {
            const LANDMARKS: [[u8; 3]; 16] = [
                [0, 0, 0],
                [255, 0, 0],
                [0, 255, 0],
                [0, 0, 255],
                [255, 255, 0],
                [0, 255, 255],
                [255, 0, 255],
                [255, 255, 255],
                [128, 128, 0],
                [128, 128, 255],
                [128, 0, 128],
                [128, 255, 128],
                [0, 128, 128],
                [255, 128, 128],
                [128, 128, 128],
                [64, 64, 64],
            ];
            LANDMARKS[col]
        }
        // Discrete hue wheel at six value levels.
        _ => {
            let hue = 360.0 * col as f64 / 16.0;
            let v = (9 - row) as f64 / 7.0;
            hsv_to_rgb(hue, 1.0, v.min(1.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn grayscale_endpoints_and_equal_channels() {
        let img = gen_grayscale_grid();
        assert_eq!(img.get(0, 0), [0, 0, 0]);
        assert_eq!(img.get(99, 99), [255, 255, 255]);
        for px in img.pixels() {
            assert_eq!(px[0], px[1]);
            assert_eq!(px[1], px[2]);
        }
    }

    #[test]
    fn grayscale_has_19_distinct_triples() {
        let img = gen_grayscale_grid();
        let distinct: BTreeSet<[u8; 3]> = img.pixels().iter().copied().collect();
        // Enumeration oracle: one value per anti-diagonal index 0..=18.
        let expected: BTreeSet<[u8; 3]> = (0..=18u32)
            .map(|k| {
                let g = (255.0 * k as f64 / 18.0).round() as u8;
                [g, g, g]
            })
            .collect();
        assert_eq!(expected.len(), 19);
        assert_eq!(distinct, expected);
    }

    #[test]
    fn grayscale_chips_are_uniform() {
        let img = gen_grayscale_grid();
        for ci in 0..10 {
            for cj in 0..10 {
                let v = img.get(ci * 10, cj * 10);
                for r in 0..10 {
                    for c in 0..10 {
                        assert_eq!(img.get(ci * 10 + r, cj * 10 + c), v);
                    }
                }
            }
        }
    }

    #[test]
    fn mixture_reuses_grayscale_quadrant() {
        let gray = gen_grayscale_grid();
        let mix = gen_binary_mixture();
        for r in 0..100 {
            for c in 0..100 {
                assert_eq!(mix.get(r, c), gray.get(r, c));
            }
        }
    }

    #[test]
    fn mixture_quadrant_corner_chips() {
        let img = gen_binary_mixture();
        // (R,G) quadrant corners: sample one pixel inside each corner chip.
        assert_eq!(img.get(0, 100), [0, 0, 0]);
        assert_eq!(img.get(99, 100), [255, 0, 0]);
        assert_eq!(img.get(0, 199), [0, 255, 0]);
        assert_eq!(img.get(99, 199), [255, 255, 0]);
        // (R,B) and (G,B) quadrants contribute magenta and cyan corners.
        assert_eq!(img.get(199, 99), [255, 0, 255]);
        assert_eq!(img.get(199, 199), [0, 255, 255]);
    }

    #[test]
    fn mixture_distinct_triples_match_enumeration() {
        let img = gen_binary_mixture();
        let distinct: BTreeSet<[u8; 3]> = img.pixels().iter().copied().collect();
        // Exhaustive oracle: build the union of the four quadrant palettes
        // directly from the chip laws.
        let mut expected = BTreeSet::new();
        for k in 0..=18usize {
            let g = (255.0 * k as f64 / 18.0).round() as u8;
            expected.insert([g, g, g]);
        }
        for i in 0..10usize {
            for j in 0..10usize {
                let (a, b) = (
                    (255.0 * i as f64 / 9.0).round() as u8,
                    (255.0 * j as f64 / 9.0).round() as u8,
                );
                expected.insert([a, b, 0]);
                expected.insert([a, 0, b]);
                expected.insert([0, a, b]);
            }
        }
        assert_eq!(distinct, expected);
        assert_eq!(distinct.len(), 289);
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(gen_grayscale_grid(), gen_grayscale_grid());
        assert_eq!(gen_binary_mixture(), gen_binary_mixture());
        assert_eq!(gen_continuous_discrete(), gen_continuous_discrete());
    }

    #[test]
    fn color_table_hue_zero_is_red_dominant() {
        let img = gen_continuous_discrete();
        for r in 0..128 {
            for c in 0..8 {
                let [red, g, b] = img.get(r, c);
                assert!(red >= g && red >= b, "pixel ({r},{c}) = {:?}", img.get(r, c));
            }
        }
    }

    #[test]
    fn color_table_gray_row_is_gray() {
        let img = gen_continuous_discrete();
        for r in 128..144 {
            for c in 0..256 {
                let [red, g, b] = img.get(r, c);
                assert_eq!(red, g);
                assert_eq!(g, b);
            }
        }
    }

    #[test]
    fn color_table_chips_are_uniform() {
        let img = gen_continuous_discrete();
        for chip_row in 0..8 {
            for chip_col in 0..16 {
                let base = img.get(128 + chip_row * 16, chip_col * 16);
                for r in 0..16 {
                    for c in 0..16 {
                        assert_eq!(img.get(128 + chip_row * 16 + r, chip_col * 16 + c), base);
                    }
                }
            }
        }
    }

    #[test]
    fn color_table_spans_three_dimensions() {
        // PCA-rank oracle: the pixel set must need 3 PCs.
        let img = gen_continuous_discrete();
        let dm = img.to_data_matrix().unwrap();
        let model = crate::pca::fit_pca(&dm, 3, false).unwrap();
        assert!(model.eigenvalues[2] > 1e-6 * model.eigenvalues[0]);
    }
}
