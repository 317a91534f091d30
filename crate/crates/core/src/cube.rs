//! ENVI-style hyperspectral cube ingestion: text header parsing, flat
//! binary bodies in any of the three interleaves, band exclusion masks,
//! spatial subsetting, and flattening to a sample matrix.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::matrix::{DataMatrix, Matrix};

/// On-disk orderings of a cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interleave {
    Bsq,
    Bil,
    Bip,
}

impl Interleave {
    pub fn as_str(&self) -> &'static str {
        match self {
            Interleave::Bsq => "bsq",
            Interleave::Bil => "bil",
            Interleave::Bip => "bip",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataType {
    Int16,
    Uint16,
    Float32,
}

impl DataType {
    pub fn bytes_per_sample(&self) -> usize {
        match self {
            DataType::Int16 | DataType::Uint16 => 2,
            DataType::Float32 => 4,
        }
    }

    /// ENVI numeric code.
    pub fn code(&self) -> i64 {
        match self {
            DataType::Int16 => 2,
            DataType::Float32 => 4,
            DataType::Uint16 => 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    Little,
    Big,
}

/// Parsed ENVI header.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeMeta {
    pub samples: usize,
    pub lines: usize,
    pub bands: usize,
    pub interleave: Interleave,
    pub data_type: DataType,
    pub byte_order: ByteOrder,
    pub header_offset: usize,
    pub wavelengths: Option<Vec<f64>>,
    /// Multiplier applied to integer samples on load. Never auto-detected;
    /// set it explicitly (AVIRIS int16 reflectance products use 1e-4).
    pub reflectance_scale: f64,
}

impl CubeMeta {
    pub fn expected_file_size(&self) -> usize {
        self.header_offset
            + self.samples * self.lines * self.bands * self.data_type.bytes_per_sample()
    }
}

/// A loaded cube: reflectance values addressable as (line, sample, band),
/// a boolean retain-mask over bands, and the origin of this cube within
/// its parent (nonzero after spatial subsetting).
#[derive(Debug, Clone)]
pub struct SpectralCube {
    pub meta: CubeMeta,
    values: Vec<f64>, // (line, sample, band) order
    band_mask: Vec<bool>,
    origin: (usize, usize),
}

impl SpectralCube {
    pub fn new(meta: CubeMeta, values: Vec<f64>) -> Result<Self> {
        let expected = meta.lines * meta.samples * meta.bands;
        if values.len() != expected {
            return Err(Error::SizeMismatch { expected, actual: values.len() });
        }
        let bands = meta.bands;
        Ok(SpectralCube { meta, values, band_mask: vec![true; bands], origin: (0, 0) })
    }

    #[inline]
    pub fn value(&self, line: usize, sample: usize, band: usize) -> f64 {
        self.values[(line * self.meta.samples + sample) * self.meta.bands + band]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn band_mask(&self) -> &[bool] {
        &self.band_mask
    }

    pub fn retained_bands(&self) -> usize {
        self.band_mask.iter().filter(|&&b| b).count()
    }

    /// Wavelengths of the retained bands, when the header had them.
    pub fn retained_wavelengths(&self) -> Option<Vec<f64>> {
        self.meta.wavelengths.as_ref().map(|w| {
            w.iter()
                .zip(&self.band_mask)
                .filter(|&(_, &keep)| keep)
                .map(|(&wl, _)| wl)
                .collect()
        })
    }

    /// Offset of this cube within its parent (line, sample).
    pub fn origin(&self) -> (usize, usize) {
        self.origin
    }

    /// Map subset-local pixel coordinates back to the parent cube.
    pub fn parent_coords(&self, line: usize, sample: usize) -> (usize, usize) {
        (self.origin.0 + line, self.origin.1 + sample)
    }
}

/// Paper-default exclusion ranges for 224-band AVIRIS cubes (1-based,
/// inclusive); applying them retains 107 bands.
pub const DEFAULT_AVIRIS_EXCLUSIONS: [(usize, usize); 6] =
    [(1, 14), (49, 64), (75, 84), (90, 120), (150, 180), (210, 224)];

/// Parse `--exclude-bands` style range syntax: `1-14,49-64,210-224` with
/// single-band entries allowed (`5`).
pub fn parse_band_ranges(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (start, end) = match part.split_once('-') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (part, part),
        };
        let s: usize = start
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad band range `{part}`")))?;
        let e: usize = end
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad band range `{part}`")))?;
        out.push((s, e));
    }
    Ok(out)
}

fn header_value_end(lines: &[&str], start: usize, key: &str) -> Result<(String, usize)> {
    // Join a `{ ... }` list that may span lines.
    let mut buf = String::new();
    let mut i = start;
    loop {
        if i >= lines.len() {
            return Err(Error::MalformedList(key.to_string()));
        }
        buf.push_str(lines[i]);
        buf.push(' ');
        if lines[i].contains('}') {
            return Ok((buf, i));
        }
        i += 1;
    }
}

/// Parse the text of an ENVI header. Unknown keys are ignored; the
/// required keys are `samples`, `lines`, `bands`, `interleave` and
/// `data type`. A `wavelength = { ... }` list is parsed when present and
/// must be strictly increasing with one entry per band.
pub fn parse_envi_header(text: &str) -> Result<CubeMeta> {
    let lines: Vec<&str> = text.lines().collect();
    let mut samples = None;
    let mut nlines = None;
    let mut bands = None;
    let mut interleave = None;
    let mut data_type = None;
    let mut byte_order = ByteOrder::Little;
    let mut header_offset = 0usize;
    let mut wavelengths: Option<Vec<f64>> = None;

    let mut i = 0;
    while i < lines.len() {
        let raw = lines[i];
        let line = raw.trim();
        i += 1;
        if line.is_empty() || line.eq_ignore_ascii_case("envi") {
            continue;
        }
        let Some(eq) = line.find('=') else { continue };
        let key = line[..eq].trim().to_ascii_lowercase();
        let key = key.split_whitespace().collect::<Vec<_>>().join(" ");
        let mut value = line[eq + 1..].trim().to_string();
        if value.starts_with('{') && !value.contains('}') {
            let (joined, end) = header_value_end(&lines, i, &key)?;
            value.push(' ');
            value.push_str(&joined);
            i = end + 1;
        }

        match key.as_str() {
            "samples" => samples = Some(parse_count(&key, &value)?),
            "lines" => nlines = Some(parse_count(&key, &value)?),
            "bands" => bands = Some(parse_count(&key, &value)?),
            "header offset" => header_offset = parse_count(&key, &value)?,
            "byte order" => {
                byte_order = match value.as_str() {
                    "0" => ByteOrder::Little,
                    "1" => ByteOrder::Big,
                    other => {
                        return Err(Error::InvalidHeader(format!("byte order `{other}`")))
                    }
                }
            }
            "data type" => {
                let code: i64 = value
                    .parse()
                    .map_err(|_| Error::InvalidHeader(format!("data type `{value}`")))?;
                data_type = Some(match code {
                    2 => DataType::Int16,
                    4 => DataType::Float32,
                    12 => DataType::Uint16,
                    other => return Err(Error::UnsupportedDataType(other)),
                });
            }
            "interleave" => {
                interleave = Some(match value.to_ascii_lowercase().as_str() {
                    "bsq" => Interleave::Bsq,
                    "bil" => Interleave::Bil,
                    "bip" => Interleave::Bip,
                    other => {
                        return Err(Error::InvalidHeader(format!("interleave `{other}`")))
                    }
                });
            }
            "wavelength" => {
                wavelengths = Some(parse_list(&key, &value)?);
            }
            _ => {} // unknown keys ignored
        }
    }

    let meta = CubeMeta {
        samples: samples.ok_or_else(|| Error::MissingKey("samples".into()))?,
        lines: nlines.ok_or_else(|| Error::MissingKey("lines".into()))?,
        bands: bands.ok_or_else(|| Error::MissingKey("bands".into()))?,
        interleave: interleave.ok_or_else(|| Error::MissingKey("interleave".into()))?,
        data_type: data_type.ok_or_else(|| Error::MissingKey("data type".into()))?,
        byte_order,
        header_offset,
        wavelengths,
        reflectance_scale: 1.0,
    };
    if let Some(w) = &meta.wavelengths {
        if w.len() != meta.bands {
            return Err(Error::InvalidHeader(format!(
                "{} wavelengths for {} bands",
                w.len(),
                meta.bands
            )));
        }
        if w.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::InvalidHeader("wavelengths not strictly increasing".into()));
        }
    }
    Ok(meta)
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::InvalidHeader(format!("{key} = `{value}` is not a count")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    let open = value.find('{').ok_or_else(|| Error::MalformedList(key.to_string()))?;
    let close = value.rfind('}').ok_or_else(|| Error::MalformedList(key.to_string()))?;
    if close < open {
        return Err(Error::MalformedList(key.to_string()));
    }
    value[open + 1..close]
        .split([',', ' ', '\t'])
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::MalformedList(key.to_string())))
        .collect()
}

/// Render a header that [`parse_envi_header`] reads back.
pub fn format_envi_header(meta: &CubeMeta) -> String {
    let mut s = String::from("ENVI\n");
    let _ = writeln!(s, "samples = {}", meta.samples);
    let _ = writeln!(s, "lines = {}", meta.lines);
    let _ = writeln!(s, "bands = {}", meta.bands);
    let _ = writeln!(s, "header offset = {}", meta.header_offset);
    let _ = writeln!(s, "data type = {}", meta.data_type.code());
    let _ = writeln!(s, "interleave = {}", meta.interleave.as_str());
    let _ = writeln!(
        s,
        "byte order = {}",
        if meta.byte_order == ByteOrder::Little { 0 } else { 1 }
    );
    if let Some(w) = &meta.wavelengths {
        let list: Vec<String> = w.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(s, "wavelength = {{ {} }}", list.join(", "));
    }
    s
}

#[inline]
fn disk_index(meta: &CubeMeta, line: usize, sample: usize, band: usize) -> usize {
    match meta.interleave {
        Interleave::Bsq => (band * meta.lines + line) * meta.samples + sample,
        Interleave::Bil => (line * meta.bands + band) * meta.samples + sample,
        Interleave::Bip => (line * meta.samples + sample) * meta.bands + band,
    }
}

/// Decode a cube body (the full file bytes including any header offset)
/// into (line, sample, band)-ordered reflectance values. Integer samples
/// are multiplied by `meta.reflectance_scale`.
pub fn load_cube(meta: &CubeMeta, bytes: &[u8]) -> Result<SpectralCube> {
    let expected = meta.expected_file_size();
    if bytes.len() != expected {
        return Err(Error::SizeMismatch { expected, actual: bytes.len() });
    }
    let body = &bytes[meta.header_offset..];
    let bps = meta.data_type.bytes_per_sample();
    let total = meta.lines * meta.samples * meta.bands;
    let mut values = vec![0.0f64; total];
    for line in 0..meta.lines {
        for sample in 0..meta.samples {
            for band in 0..meta.bands {
                let src = disk_index(meta, line, sample, band) * bps;
                let raw = &body[src..src + bps];
                let v = match (meta.data_type, meta.byte_order) {
                    (DataType::Int16, ByteOrder::Little) => {
                        i16::from_le_bytes([raw[0], raw[1]]) as f64 * meta.reflectance_scale
                    }
                    (DataType::Int16, ByteOrder::Big) => {
                        i16::from_be_bytes([raw[0], raw[1]]) as f64 * meta.reflectance_scale
                    }
                    (DataType::Uint16, ByteOrder::Little) => {
                        u16::from_le_bytes([raw[0], raw[1]]) as f64 * meta.reflectance_scale
                    }
                    (DataType::Uint16, ByteOrder::Big) => {
                        u16::from_be_bytes([raw[0], raw[1]]) as f64 * meta.reflectance_scale
                    }
                    (DataType::Float32, ByteOrder::Little) => {
                        f32::from_le_bytes([raw[0], raw[1], raw[2], raw[3]]) as f64
                    }
                    (DataType::Float32, ByteOrder::Big) => {
                        f32::from_be_bytes([raw[0], raw[1], raw[2], raw[3]]) as f64
                    }
                };
                values[(line * meta.samples + sample) * meta.bands + band] = v;
            }
        }
    }
    SpectralCube::new(meta.clone(), values)
}

/// Encode raw f32 samples (given in line, sample, band order) to the
/// byte layout described by `meta`, including `header_offset` padding.
pub fn encode_cube_f32(meta: &CubeMeta, bip: &[f32]) -> Result<Vec<u8>> {
    if meta.data_type != DataType::Float32 {
        return Err(Error::InvalidConfig("meta.data_type must be float32".into()));
    }
    encode_cube(meta, bip.len(), |idx, out| {
        let b = match meta.byte_order {
            ByteOrder::Little => bip[idx].to_le_bytes(),
            ByteOrder::Big => bip[idx].to_be_bytes(),
        };
        out.extend_from_slice(&b);
    })
}

/// Encode raw int16 samples; see [`encode_cube_f32`].
pub fn encode_cube_i16(meta: &CubeMeta, bip: &[i16]) -> Result<Vec<u8>> {
    if meta.data_type != DataType::Int16 {
        return Err(Error::InvalidConfig("meta.data_type must be int16".into()));
    }
    encode_cube(meta, bip.len(), |idx, out| {
        let b = match meta.byte_order {
            ByteOrder::Little => bip[idx].to_le_bytes(),
            ByteOrder::Big => bip[idx].to_be_bytes(),
        };
        out.extend_from_slice(&b);
    })
}

/// Encode raw uint16 samples; see [`encode_cube_f32`].
pub fn encode_cube_u16(meta: &CubeMeta, bip: &[u16]) -> Result<Vec<u8>> {
    if meta.data_type != DataType::Uint16 {
        return Err(Error::InvalidConfig("meta.data_type must be uint16".into()));
    }
    encode_cube(meta, bip.len(), |idx, out| {
        let b = match meta.byte_order {
            ByteOrder::Little => bip[idx].to_le_bytes(),
            ByteOrder::Big => bip[idx].to_be_bytes(),
        };
        out.extend_from_slice(&b);
    })
}

fn encode_cube(
    meta: &CubeMeta,
    len: usize,
    mut push: impl FnMut(usize, &mut Vec<u8>),
) -> Result<Vec<u8>> {
    let total = meta.lines * meta.samples * meta.bands;
    if len != total {
        return Err(Error::SizeMismatch { expected: total, actual: len });
    }
    let mut out = vec![0u8; meta.header_offset];
    // Walk positions in disk order, pulling from the logical BIP index.
    let mut disk_to_bip = vec![0usize; total];
    for line in 0..meta.lines {
        for sample in 0..meta.samples {
            for band in 0..meta.bands {
                let disk = disk_index(meta, line, sample, band);
                disk_to_bip[disk] = (line * meta.samples + sample) * meta.bands + band;
            }
        }
    }
    out.reserve(total * meta.data_type.bytes_per_sample());
    for disk in 0..total {
        push(disk_to_bip[disk], &mut out);
    }
    Ok(out)
}

/// Replace the band mask: `false` exactly on the union of the 1-based
/// inclusive ranges. The paper's default ranges on a 224-band cube retain
/// exactly 107 bands.
pub fn apply_band_exclusions(
    cube: &SpectralCube,
    ranges: &[(usize, usize)],
) -> Result<SpectralCube> {
    let bands = cube.meta.bands;
    let mut mask = vec![true; bands];
    for &(start, end) in ranges {
        if start < 1 || end > bands || start > end {
            return Err(Error::RangeOutOfBounds { start, end, bands });
        }
        for slot in mask.iter_mut().take(end).skip(start - 1) {
            *slot = false;
        }
    }
    let mut out = cube.clone();
    out.band_mask = mask;
    Ok(out)
}

/// Copy a spatial window. The output records its origin so pixel
/// coordinates map back to the parent cube.
pub fn spatial_subset(
    cube: &SpectralCube,
    origin_line: usize,
    origin_sample: usize,
    height: usize,
    width: usize,
) -> Result<SpectralCube> {
    let meta = &cube.meta;
    if height == 0
        || width == 0
        || origin_line + height > meta.lines
        || origin_sample + width > meta.samples
    {
        return Err(Error::WindowOutOfBounds {
            line: origin_line,
            sample: origin_sample,
            height,
            width,
            lines: meta.lines,
            samples: meta.samples,
        });
    }
    let mut values = Vec::with_capacity(height * width * meta.bands);
    for l in 0..height {
        for s in 0..width {
            for b in 0..meta.bands {
                values.push(cube.value(origin_line + l, origin_sample + s, b));
            }
        }
    }
    let mut new_meta = meta.clone();
    new_meta.lines = height;
    new_meta.samples = width;
    Ok(SpectralCube {
        meta: new_meta,
        values,
        band_mask: cube.band_mask.clone(),
        origin: (cube.origin.0 + origin_line, cube.origin.1 + origin_sample),
    })
}

/// Flatten to N = lines x samples rows (row-major pixel order) over the
/// D retained bands; `row_index` carries (line, sample).
pub fn flatten_cube(cube: &SpectralCube) -> Result<DataMatrix> {
    let d = cube.retained_bands();
    if d == 0 {
        return Err(Error::NoBandsRetained);
    }
    let meta = &cube.meta;
    let n = meta.lines * meta.samples;
    let mut data = Vec::with_capacity(n * d);
    let mut index = Vec::with_capacity(n);
    for l in 0..meta.lines {
        for s in 0..meta.samples {
            for b in 0..meta.bands {
                if cube.band_mask[b] {
                    data.push(cube.value(l, s, b));
                }
            }
            index.push((l as u32, s as u32));
        }
    }
    DataMatrix::new(Matrix::from_vec(n, d, data), index)
}

/// Out-of-range reflectance bounds after scaling; values outside are
/// treated as no-data. Deliberately loose so real reflectance noise
/// passes; sentinel values (e.g. -9999 scaled) do not.
pub const REFLECTANCE_VALID_MIN: f64 = -0.5;
pub const REFLECTANCE_VALID_MAX: f64 = 1.5;

/// Per-row validity of a flattened cube: true where every band lies in
/// the plausible reflectance range.
pub fn valid_pixel_mask(x: &DataMatrix) -> Vec<bool> {
    (0..x.n_rows())
        .map(|i| {
            x.row(i)
                .iter()
                .all(|&v| (REFLECTANCE_VALID_MIN..=REFLECTANCE_VALID_MAX).contains(&v))
        })
        .collect()
}
