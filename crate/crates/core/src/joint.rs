//! The joint feature space: PC scores and t-SNE coordinates fused into one
//! queryable record set, with polygon ROIs, spectral statistics,
//! separability scoring, geographic footprints, and the perplexity sweep.

use rayon::prelude::*;

use crate::csvio::fmt_g9;
use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigendecomposition, spd_inverse};
use crate::matrix::{DataMatrix, Matrix};
use crate::tsne::{run_tsne, Embedding, TsneConfig};

/// One sample's combined coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct JointRecord {
    pub pixel_row: u32,
    pub pixel_col: u32,
    pub pc_scores: Vec<f64>,
    pub tsne: [f64; 2],
}

/// All samples' joint coordinates plus the axis catalog
/// (`PC1..PCk, TSNE1, TSNE2`). Record order always equals input row order.
#[derive(Debug, Clone)]
pub struct JointSpace {
    records: Vec<JointRecord>,
    axes: Vec<String>,
}

impl JointSpace {
    pub fn records(&self) -> &[JointRecord] {
        &self.records
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn n_pcs(&self) -> usize {
        self.axes.len() - 2
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    /// Case-insensitive axis lookup.
    pub fn axis_index(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.eq_ignore_ascii_case(name))
    }

    pub fn axis_value(&self, record: &JointRecord, axis: usize) -> f64 {
        let k = self.n_pcs();
        if axis < k {
            record.pc_scores[axis]
        } else {
            record.tsne[axis - k]
        }
    }

    /// Join scores and t-SNE coordinates that came from the same rows.
    /// The two provenance indexes must match entry for entry.
    pub fn from_parts(
        scores: &Matrix,
        scores_index: &[(u32, u32)],
        tsne: &Matrix,
        tsne_index: &[(u32, u32)],
    ) -> Result<Self> {
        let n = scores.rows();
        if scores_index.len() != n {
            return Err(Error::LengthMismatch { left: n, right: scores_index.len() });
        }
        if tsne.rows() != n || tsne_index.len() != n {
            return Err(Error::LengthMismatch { left: n, right: tsne.rows() });
        }
        if tsne.cols() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: tsne.cols() });
        }
        for i in 0..n {
            if scores_index[i] != tsne_index[i] {
                return Err(Error::RowOrderMismatch {
                    index: i,
                    left_row: scores_index[i].0,
                    left_col: scores_index[i].1,
                    right_row: tsne_index[i].0,
                    right_col: tsne_index[i].1,
                });
            }
        }
        let k = scores.cols();
        let mut axes: Vec<String> = (1..=k).map(|i| format!("PC{i}")).collect();
        axes.push("TSNE1".into());
        axes.push("TSNE2".into());
        let records = (0..n)
            .map(|i| JointRecord {
                pixel_row: scores_index[i].0,
                pixel_col: scores_index[i].1,
                pc_scores: scores.row(i).to_vec(),
                tsne: [tsne[(i, 0)], tsne[(i, 1)]],
            })
            .collect();
        Ok(JointSpace { records, axes })
    }
}

/// Fuse PC scores with an embedding produced from the same rows.
pub fn build_joint_space(
    scores: &Matrix,
    row_index: &[(u32, u32)],
    embedding: &Embedding,
) -> Result<JointSpace> {
    JointSpace::from_parts(scores, row_index, &embedding.coords, &embedding.row_index)
}

/// A named polygon over two axes of the joint space.
#[derive(Debug, Clone, PartialEq)]
pub struct Roi {
    pub name: String,
    pub x_axis: String,
    pub y_axis: String,
    pub polygon: Vec<(f64, f64)>,
}

impl Roi {
    pub fn validate(&self) -> Result<()> {
        if self.polygon.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "`{}` has {} vertices, need at least 3",
                self.name,
                self.polygon.len()
            )));
        }
        if self.x_axis.eq_ignore_ascii_case(&self.y_axis) {
            return Err(Error::InvalidPolygon(format!(
                "`{}` uses the same axis twice",
                self.name
            )));
        }
        if !polygon_is_simple(&self.polygon) {
            return Err(Error::InvalidPolygon(format!("`{}` self-intersects", self.name)));
        }
        Ok(())
    }

    /// Axis-aligned rectangle helper.
    pub fn rect(name: &str, x_axis: &str, y_axis: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> Roi {
        Roi {
            name: name.to_string(),
            x_axis: x_axis.to_string(),
            y_axis: y_axis.to_string(),
            polygon: vec![(x0, y0), (x1, y0), (x1, y1), (x0, y1)],
        }
    }
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |d: f64, a: (f64, f64), b: (f64, f64), p: (f64, f64)| {
        d == 0.0
            && p.0 >= a.0.min(b.0)
            && p.0 <= a.0.max(b.0)
            && p.1 >= a.1.min(b.1)
            && p.1 <= a.1.max(b.1)
    };
    on(d1, q1, q2, p1) || on(d2, q1, q2, p2) || on(d3, p1, p2, q1) || on(d4, p1, p2, q2)
}

/// No two non-adjacent edges may touch; zero-length edges are rejected.
fn polygon_is_simple(poly: &[(f64, f64)]) -> bool {
    let n = poly.len();
    for i in 0..n {
        if poly[i] == poly[(i + 1) % n] {
            return false;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            // Skip adjacent edges (they share a vertex by construction).
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (p1, p2) = (poly[i], poly[(i + 1) % n]);
            let (q1, q2) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(p1, p2, q1, q2) {
                return false;
            }
        }
    }
    true
}

/// Even-odd test with boundary points counted as inside.
pub(crate) fn point_in_polygon(px: f64, py: f64, poly: &[(f64, f64)]) -> bool {
    let n = poly.len();
    // Boundary check.
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cross = (b.0 - a.0) * (py - a.1) - (b.1 - a.1) * (px - a.0);
        if cross == 0.0
            && px >= a.0.min(b.0)
            && px <= a.0.max(b.0)
            && py >= a.1.min(b.1)
            && py <= a.1.max(b.1)
        {
            return true;
        }
    }
    // Even-odd ray cast toward +x.
    let mut inside = false;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (a.1 > py) != (b.1 > py) {
            let x_cross = a.0 + (py - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if px < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Membership mask of a polygon ROI over the joint space.
pub fn select_roi(space: &JointSpace, roi: &Roi) -> Result<Vec<bool>> {
    roi.validate()?;
    let xa = space
        .axis_index(&roi.x_axis)
        .ok_or_else(|| Error::UnknownAxis(roi.x_axis.clone()))?;
    let ya = space
        .axis_index(&roi.y_axis)
        .ok_or_else(|| Error::UnknownAxis(roi.y_axis.clone()))?;
    Ok(space
        .records()
        .iter()
        .map(|rec| {
            point_in_polygon(space.axis_value(rec, xa), space.axis_value(rec, ya), &roi.polygon)
        })
        .collect())
}

/// Parse the declarative ROI file format: one ROI per line,
/// `name;x_axis;y_axis;x1,y1 x2,y2 x3,y3 ...`. `#` lines and blank lines
/// are skipped. Errors carry the 1-based line number.
pub fn parse_roi_file(text: &str, path_label: &str) -> Result<Vec<Roi>> {
    let mut rois = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::ParseLine {
            path: path_label.to_string(),
            line: lineno + 1,
            message,
        };
        let parts: Vec<&str> = line.split(';').collect();
        if parts.len() != 4 {
            return Err(err(format!("expected 4 `;`-separated fields, got {}", parts.len())));
        }
        let mut polygon = Vec::new();
        for vtx in parts[3].split_whitespace() {
            let (x, y) = vtx
                .split_once(',')
                .ok_or_else(|| err(format!("vertex `{vtx}` is not `x,y`")))?;
            let x: f64 = x.parse().map_err(|_| err(format!("bad x in `{vtx}`")))?;
            let y: f64 = y.parse().map_err(|_| err(format!("bad y in `{vtx}`")))?;
            polygon.push((x, y));
        }
        let roi = Roi {
            name: parts[0].trim().to_string(),
            x_axis: parts[1].trim().to_string(),
            y_axis: parts[2].trim().to_string(),
            polygon,
        };
        roi.validate().map_err(|e| err(e.to_string()))?;
        rois.push(roi);
    }
    Ok(rois)
}

/// Per-ROI spectral statistics: member count, mean spectrum, and a
/// regularized covariance (present when at least two members).
#[derive(Debug, Clone)]
pub struct RoiStats {
    pub member_count: usize,
    pub mean_spectrum: Vec<f64>,
    pub wavelengths: Option<Vec<f64>>,
    pub covariance: Option<Matrix>,
}

/// Regularization strength: `1e-6 * trace / D` added to the diagonal, so
/// ROIs with fewer members than bands stay invertible.
const COV_REG: f64 = 1e-6;

/// Mean spectrum and covariance of the masked rows of `x`.
pub fn roi_stats(x: &DataMatrix, mask: &[bool], wavelengths: Option<&[f64]>) -> Result<RoiStats> {
    if mask.len() != x.n_rows() {
        return Err(Error::LengthMismatch { left: x.n_rows(), right: mask.len() });
    }
    let members: Vec<usize> = mask
        .iter()
        .enumerate()
        .filter(|&(_, &m)| m)
        .map(|(i, _)| i)
        .collect();
    if members.is_empty() {
        return Err(Error::EmptyRoi);
    }
    let d = x.n_cols();
    if let Some(w) = wavelengths {
        if w.len() != d {
            return Err(Error::GridMismatch(format!("{} wavelengths for {d} bands", w.len())));
        }
    }
    let m = members.len();
    let mut mean = vec![0.0; d];
    for &i in &members {
        for (j, v) in x.row(i).iter().enumerate() {
            mean[j] += v;
        }
    }
    for v in mean.iter_mut() {
        *v /= m as f64;
    }
    let covariance = if m >= 2 {
        let mut cov = Matrix::zeros(d, d);
        for &i in &members {
            let row = x.row(i);
            for a in 0..d {
                let da = row[a] - mean[a];
                for b in a..d {
                    cov[(a, b)] += da * (row[b] - mean[b]);
                }
            }
        }
        let denom = (m - 1) as f64;
        for a in 0..d {
            for b in a..d {
                let v = cov[(a, b)] / denom;
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        let trace: f64 = (0..d).map(|i| cov[(i, i)]).sum();
        let eps = COV_REG * trace / d as f64;
        for i in 0..d {
            cov[(i, i)] += eps;
        }
        Some(cov)
    } else {
        None
    };
    Ok(RoiStats {
        member_count: m,
        mean_spectrum: mean,
        wavelengths: wavelengths.map(<[f64]>::to_vec),
        covariance,
    })
}

/// Elementwise difference of two mean spectra on the same wavelength grid.
pub fn pairwise_spectrum_difference(a: &RoiStats, b: &RoiStats) -> Result<Vec<f64>> {
    if a.mean_spectrum.len() != b.mean_spectrum.len() {
        return Err(Error::GridMismatch(format!(
            "spectra have {} vs {} bands",
            a.mean_spectrum.len(),
            b.mean_spectrum.len()
        )));
    }
    if let (Some(wa), Some(wb)) = (&a.wavelengths, &b.wavelengths) {
        if wa != wb {
            return Err(Error::GridMismatch("wavelength grids differ".into()));
        }
    }
    Ok(a.mean_spectrum
        .iter()
        .zip(&b.mean_spectrum)
        .map(|(x, y)| x - y)
        .collect())
}

/// Gaussian transformed divergence between two ROI distributions:
/// `TD = 2 (1 - exp(-Dv / 8))` with
/// `Dv = 1/2 tr[(S1 - S2)(S2^-1 - S1^-1)]
///     + 1/2 tr[(S1^-1 + S2^-1)(m1 - m2)(m1 - m2)^T]`.
/// Symmetric in its arguments; always in [0, 2]; 2 means complete
/// separability.
pub fn transformed_divergence(a: &RoiStats, b: &RoiStats) -> Result<f64> {
    if a.mean_spectrum.len() != b.mean_spectrum.len() {
        return Err(Error::GridMismatch(format!(
            "spectra have {} vs {} bands",
            a.mean_spectrum.len(),
            b.mean_spectrum.len()
        )));
    }
    let s1 = a
        .covariance
        .as_ref()
        .ok_or(Error::InsufficientRoiMembers(a.member_count))?;
    let s2 = b
        .covariance
        .as_ref()
        .ok_or(Error::InsufficientRoiMembers(b.member_count))?;
    let inv1 = invert_or_condition(s1)?;
    let inv2 = invert_or_condition(s2)?;
    let d = s1.rows();

    let mut term1 = 0.0;
    for i in 0..d {
        for j in 0..d {
            term1 += (s1[(i, j)] - s2[(i, j)]) * (inv2[(j, i)] - inv1[(j, i)]);
        }
    }
    let delta: Vec<f64> = a
        .mean_spectrum
        .iter()
        .zip(&b.mean_spectrum)
        .map(|(x, y)| x - y)
        .collect();
    let mut term2 = 0.0;
    for i in 0..d {
        let mut row = 0.0;
        for j in 0..d {
            row += (inv1[(i, j)] + inv2[(i, j)]) * delta[j];
        }
        term2 += delta[i] * row;
    }
    let dv = 0.5 * term1 + 0.5 * term2;
    Ok((2.0 * (1.0 - (-dv / 8.0).exp())).clamp(0.0, 2.0))
}

fn invert_or_condition(s: &Matrix) -> Result<Matrix> {
    spd_inverse(s).map_err(|_| {
        let condition = match jacobi_eigendecomposition(s) {
            Ok((vals, _)) => {
                let max = vals.first().copied().unwrap_or(0.0).abs();
                let min = vals.last().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
                max / min
            }
            Err(_) => f64::INFINITY,
        };
        Error::SingularCovariance { condition }
    })
}

/// Rasterize priority-ordered membership masks to a label image:
/// 0 = unlabeled, i = i-th mask (1-based, first match wins).
pub fn geographic_footprint(
    space: &JointSpace,
    masks: &[Vec<bool>],
    lines: usize,
    samples: usize,
) -> Result<Vec<u8>> {
    if masks.len() > 255 {
        return Err(Error::InvalidConfig(format!("{} ROIs exceed the 255 label limit", masks.len())));
    }
    for m in masks {
        if m.len() != space.n() {
            return Err(Error::LengthMismatch { left: space.n(), right: m.len() });
        }
    }
    let mut labels = vec![0u8; lines * samples];
    for (i, rec) in space.records().iter().enumerate() {
        let (r, c) = (rec.pixel_row as usize, rec.pixel_col as usize);
        if r >= lines || c >= samples {
            return Err(Error::CoordinateOutOfBounds {
                row: rec.pixel_row,
                col: rec.pixel_col,
                lines,
                samples,
            });
        }
        for (label, mask) in masks.iter().enumerate() {
            if mask[i] {
                labels[r * samples + c] = (label + 1) as u8;
                break;
            }
        }
    }
    Ok(labels)
}

/// Mean pairwise distance within each group of embedding points,
/// normalized by the global mean pairwise distance (t-SNE scale is
/// arbitrary, so only the ratio is meaningful).
pub fn cluster_dispersion(y: &Matrix, groups: &[Vec<usize>]) -> Result<Vec<f64>> {
    let n = y.rows();
    for (g, group) in groups.iter().enumerate() {
        if group.is_empty() {
            return Err(Error::EmptyGroup(g));
        }
        if let Some(&bad) = group.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidConfig(format!("group {g} references row {bad} of {n}")));
        }
    }
    let global = mean_pairwise_distance_all(y);
    Ok(groups
        .iter()
        .map(|group| {
            if group.len() < 2 || global == 0.0 {
                return 0.0;
            }
            let mut acc = 0.0;
            let mut pairs = 0usize;
            for (a, &i) in group.iter().enumerate() {
                for &j in &group[a + 1..] {
                    let dx = y[(i, 0)] - y[(j, 0)];
                    let dy = y[(i, 1)] - y[(j, 1)];
                    acc += (dx * dx + dy * dy).sqrt();
                    pairs += 1;
                }
            }
            (acc / pairs as f64) / global
        })
        .collect())
}

fn mean_pairwise_distance_all(y: &Matrix) -> f64 {
    let n = y.rows();
    if n < 2 {
        return 0.0;
    }
    let partials: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let yi = y.row(i);
            let mut acc = 0.0;
            for j in (i + 1)..n {
                let yj = y.row(j);
                let dx = yi[0] - yj[0];
                let dy = yi[1] - yj[1];
                acc += (dx * dx + dy * dy).sqrt();
            }
            acc
        })
        .collect();
    let total: f64 = partials.iter().sum();
    total / (n * (n - 1) / 2) as f64
}

/// Group sample indices by exact (bitwise) feature-vector equality, in
/// first-occurrence order. Labels join the representative values with `_`.
pub fn group_by_value(x: &DataMatrix) -> Vec<(String, Vec<usize>)> {
    use std::collections::HashMap;
    let mut order: Vec<(String, Vec<usize>)> = Vec::new();
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    for i in 0..x.n_rows() {
        let key: Vec<u64> = x.row(i).iter().map(|v| v.to_bits()).collect();
        match seen.get(&key) {
            Some(&g) => order[g].1.push(i),
            None => {
                let label = x
                    .row(i)
                    .iter()
                    .map(|&v| fmt_g9(v))
                    .collect::<Vec<_>>()
                    .join("_");
                seen.insert(key, order.len());
                order.push((label, vec![i]));
            }
        }
    }
    order
}

/// One row of the perplexity sweep output table.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionRow {
    pub perplexity: f64,
    pub seed: u64,
    pub group: String,
    pub dispersion: f64,
}

/// Run t-SNE for every (perplexity, seed) pair and tabulate normalized
/// per-group dispersion, long format.
pub fn perplexity_sweep(
    x: &DataMatrix,
    groups: &[(String, Vec<usize>)],
    perplexities: &[f64],
    seeds: &[u64],
    base: &TsneConfig,
) -> Result<Vec<DispersionRow>> {
    let index_groups: Vec<Vec<usize>> = groups.iter().map(|(_, g)| g.clone()).collect();
    let mut rows = Vec::with_capacity(perplexities.len() * seeds.len() * groups.len());
    for &perplexity in perplexities {
        for &seed in seeds {
            let config = TsneConfig { perplexity, seed, ..base.clone() };
            let emb = run_tsne(x, &config)?;
            let dispersion = cluster_dispersion(&emb.coords, &index_groups)?;
            for ((label, _), &value) in groups.iter().zip(&dispersion) {
                rows.push(DispersionRow {
                    perplexity,
                    seed,
                    group: label.clone(),
                    dispersion: value,
                });
            }
        }
    }
    Ok(rows)
}
