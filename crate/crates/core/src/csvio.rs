//! CSV and sidecar text formats shared by the library and the CLI.
//!
//! Dialect: comma separators, `.` decimal point, mandatory header row,
//! LF line endings, UTF-8, floats printed with 9 significant digits.

use std::io::Write;

use crate::error::{Error, Result};
use crate::matrix::{DataMatrix, Matrix};
use crate::pca::PcaModel;

/// Format with 9 significant digits, printf `%.9g` style: plain decimal
/// for exponents in [-4, 9), scientific otherwise, trailing zeros
/// trimmed.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    // Rebuild a plain decimal from the 9 mantissa digits.
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 9);
    let point = exp + 1; // digits before the decimal point
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if point <= 0 {
        out.push_str("0.");
        for _ in 0..(-point) {
            out.push('0');
        }
        out.push_str(&digits);
    } else if (point as usize) >= digits.len() {
        out.push_str(&digits);
        for _ in 0..(point as usize - digits.len()) {
            out.push('0');
        }
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    } else {
        out
    }
}

fn trim_zeros(mantissa: &str) -> String {
    if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        mantissa.to_string()
    }
}

/// A parsed CSV: header names plus rows of string cells.
#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h.eq_ignore_ascii_case(name))
    }
}

/// Parse a simple (unquoted) CSV with a mandatory header row.
pub fn parse_csv(text: &str, path_label: &str) -> Result<Table> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::ParseLine {
            path: path_label.into(),
            line: 1,
            message: "empty file".into(),
        })?;
    let headers: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (lineno, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        let cells: Vec<String> = raw.split(',').map(|s| s.trim().to_string()).collect();
        if cells.len() != headers.len() {
            return Err(Error::ParseLine {
                path: path_label.into(),
                line: lineno + 1,
                message: format!("{} cells, expected {}", cells.len(), headers.len()),
            });
        }
        rows.push(cells);
    }
    Ok(Table { headers, rows })
}

fn parse_cell_f64(cell: &str, path: &str, line: usize) -> Result<f64> {
    cell.parse().map_err(|_| Error::ParseLine {
        path: path.into(),
        line,
        message: format!("`{cell}` is not a number"),
    })
}

/// Read a numeric table into a `DataMatrix`. When the first two columns
/// are `pixel_row, pixel_col` they become the provenance index; otherwise
/// rows index as `(i, 0)`.
pub fn read_data_csv(text: &str, path_label: &str) -> Result<DataMatrix> {
    let table = parse_csv(text, path_label)?;
    let has_provenance = table.headers.len() >= 3
        && table.headers[0].eq_ignore_ascii_case("pixel_row")
        && table.headers[1].eq_ignore_ascii_case("pixel_col");
    let skip = if has_provenance { 2 } else { 0 };
    let d = table.headers.len() - skip;
    let n = table.rows.len();
    let mut data = Vec::with_capacity(n * d);
    let mut index = Vec::with_capacity(n);
    for (i, row) in table.rows.iter().enumerate() {
        let line = i + 2;
        if has_provenance {
            let r = parse_cell_f64(&row[0], path_label, line)? as u32;
            let c = parse_cell_f64(&row[1], path_label, line)? as u32;
            index.push((r, c));
        } else {
            index.push((i as u32, 0));
        }
        for cell in &row[skip..] {
            data.push(parse_cell_f64(cell, path_label, line)?);
        }
    }
    DataMatrix::new(Matrix::from_vec(n, d, data), index)
}

/// `pixel_row,pixel_col,<names...>` matrix writer (scores, embeddings,
/// joint tables).
pub fn write_indexed_matrix<W: Write>(
    w: &mut W,
    index: &[(u32, u32)],
    matrix: &Matrix,
    value_headers: &[String],
) -> Result<()> {
    debug_assert_eq!(matrix.cols(), value_headers.len());
    write!(w, "pixel_row,pixel_col")?;
    for h in value_headers {
        write!(w, ",{h}")?;
    }
    writeln!(w)?;
    for (i, &(r, c)) in index.iter().enumerate() {
        write!(w, "{r},{c}")?;
        for v in matrix.row(i) {
            write!(w, ",{}", fmt_g9(*v))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Read back an indexed matrix; returns the value headers too.
pub fn read_indexed_matrix(
    text: &str,
    path_label: &str,
) -> Result<(Vec<(u32, u32)>, Matrix, Vec<String>)> {
    let table = parse_csv(text, path_label)?;
    if table.headers.len() < 3
        || !table.headers[0].eq_ignore_ascii_case("pixel_row")
        || !table.headers[1].eq_ignore_ascii_case("pixel_col")
    {
        return Err(Error::ParseLine {
            path: path_label.into(),
            line: 1,
            message: "expected pixel_row,pixel_col,... header".into(),
        });
    }
    let d = table.headers.len() - 2;
    let n = table.rows.len();
    let mut index = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * d);
    for (i, row) in table.rows.iter().enumerate() {
        let line = i + 2;
        let r = parse_cell_f64(&row[0], path_label, line)? as u32;
        let c = parse_cell_f64(&row[1], path_label, line)? as u32;
        index.push((r, c));
        for cell in &row[2..] {
            data.push(parse_cell_f64(cell, path_label, line)?);
        }
    }
    Ok((index, Matrix::from_vec(n, d, data), table.headers[2..].to_vec()))
}

/// Model CSV: `component_index,eigenvalue,ratio,v_1..v_D` rows, then the
/// mean vector tagged `mean` (and the column scale tagged `scale` for
/// standardized models).
pub fn write_model_csv<W: Write>(w: &mut W, model: &PcaModel) -> Result<()> {
    let d = model.n_features();
    write!(w, "component_index,eigenvalue,ratio")?;
    for j in 1..=d {
        write!(w, ",v_{j}")?;
    }
    writeln!(w)?;
    for i in 0..model.n_components() {
        write!(
            w,
            "{},{},{}",
            i + 1,
            fmt_g9(model.eigenvalues[i]),
            fmt_g9(model.explained_variance_ratio[i])
        )?;
        for v in model.components.row(i) {
            write!(w, ",{}", fmt_g9(*v))?;
        }
        writeln!(w)?;
    }
    write!(w, "mean,,")?;
    for v in &model.mean {
        write!(w, ",{}", fmt_g9(*v))?;
    }
    writeln!(w)?;
    if let Some(scale) = &model.scale {
        write!(w, "scale,,")?;
        for v in scale {
            write!(w, ",{}", fmt_g9(*v))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Parse a model CSV back into a `PcaModel`.
pub fn read_model_csv(text: &str, path_label: &str) -> Result<PcaModel> {
    let table = parse_csv(text, path_label)?;
    if table.headers.len() < 4 || !table.headers[0].eq_ignore_ascii_case("component_index") {
        return Err(Error::ParseLine {
            path: path_label.into(),
            line: 1,
            message: "expected component_index,eigenvalue,ratio,v_1... header".into(),
        });
    }
    let d = table.headers.len() - 3;
    let mut eigenvalues = Vec::new();
    let mut ratios = Vec::new();
    let mut rows = Vec::new();
    let mut mean = None;
    let mut scale = None;
    for (i, row) in table.rows.iter().enumerate() {
        let line = i + 2;
        let values: Result<Vec<f64>> =
            row[3..].iter().map(|c| parse_cell_f64(c, path_label, line)).collect();
        let values = values?;
        match row[0].as_str() {
            "mean" => mean = Some(values),
            "scale" => scale = Some(values),
            _ => {
                eigenvalues.push(parse_cell_f64(&row[1], path_label, line)?);
                ratios.push(parse_cell_f64(&row[2], path_label, line)?);
                rows.push(values);
            }
        }
    }
    let mean = mean.ok_or_else(|| Error::ParseLine {
        path: path_label.into(),
        line: table.rows.len() + 1,
        message: "missing mean row".into(),
    })?;
    if mean.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: mean.len() });
    }
    Ok(PcaModel {
        mean,
        components: Matrix::from_rows(&rows),
        eigenvalues,
        explained_variance_ratio: ratios,
        scale,
    })
}

/// Sidecar metadata: `key=value` lines.
pub fn write_key_values<W: Write>(w: &mut W, pairs: &[(String, String)]) -> Result<()> {
    for (k, v) in pairs {
        writeln!(w, "{k}={v}")?;
    }
    Ok(())
}

/// ROI statistics CSV: wavelength (or band index when the input has no
/// wavelength grid) against mean reflectance.
pub fn write_roi_stats_csv<W: Write>(
    w: &mut W,
    mean: &[f64],
    wavelengths: Option<&[f64]>,
) -> Result<()> {
    writeln!(w, "wavelength_nm,mean_reflectance")?;
    for (j, v) in mean.iter().enumerate() {
        let wl = wavelengths.map_or(j as f64, |ws| ws[j]);
        writeln!(w, "{},{}", fmt_g9(wl), fmt_g9(*v))?;
    }
    Ok(())
}

/// Square matrix CSV with row/column labels (the TD matrix).
pub fn write_labeled_matrix_csv<W: Write>(
    w: &mut W,
    labels: &[String],
    m: &Matrix,
) -> Result<()> {
    write!(w, "roi")?;
    for l in labels {
        write!(w, ",{l}")?;
    }
    writeln!(w)?;
    for (i, l) in labels.iter().enumerate() {
        write!(w, "{l}")?;
        for j in 0..m.cols() {
            write!(w, ",{}", fmt_g9(m[(i, j)]))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Long-format dispersion table.
pub fn write_dispersion_csv<W: Write>(
    w: &mut W,
    rows: &[crate::joint::DispersionRow],
) -> Result<()> {
    writeln!(w, "perplexity,seed,group,dispersion")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", fmt_g9(r.perplexity), r.seed, r.group, fmt_g9(r.dispersion))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn g9_basic_forms() {
        assert_eq!(fmt_g9(0.0), "0");
        assert_eq!(fmt_g9(1.0), "1");
        assert_eq!(fmt_g9(-2.5), "-2.5");
        assert_eq!(fmt_g9(0.1 + 0.2), "0.3");
        assert_eq!(fmt_g9(123456789.0), "123456789");
        assert_eq!(fmt_g9(1234567890.0), "1.23456789e9");
        assert_eq!(fmt_g9(0.00012345), "0.00012345");
        assert_eq!(fmt_g9(0.000012345), "1.2345e-5");
        assert_eq!(fmt_g9(255.0), "255");
    }

    #[test]
    fn model_csv_roundtrip() {
        use crate::matrix::DataMatrix;
        let x = DataMatrix::with_default_index(Matrix::from_rows(&[
            vec![1.0, 5.0, 2.0],
            vec![2.0, 4.0, 3.0],
            vec![4.0, 1.0, 9.0],
            vec![0.5, 2.5, 7.0],
        ]))
        .unwrap();
        let model = crate::pca::fit_pca(&x, 2, false).unwrap();
        let mut buf = Vec::new();
        write_model_csv(&mut buf, &model).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back = read_model_csv(&text, "model.csv").unwrap();
        assert_eq!(back.n_components(), 2);
        assert_eq!(back.n_features(), 3);
        for (a, b) in model.mean.iter().zip(&back.mean) {
            assert!((a - b).abs() < 1e-7 * a.abs().max(1.0));
        }
        for (a, b) in model.components.data().iter().zip(back.components.data()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn indexed_matrix_roundtrip() {
        let m = Matrix::from_rows(&[vec![1.5, -2.25], vec![0.125, 1e-7]]);
        let idx = vec![(3, 4), (5, 6)];
        let mut buf = Vec::new();
        write_indexed_matrix(&mut buf, &idx, &m, &["a".into(), "b".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let (idx2, m2, headers) = read_indexed_matrix(&text, "t.csv").unwrap();
        assert_eq!(idx, idx2);
        assert_eq!(headers, vec!["a", "b"]);
        for (x, y) in m.data().iter().zip(m2.data()) {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn data_csv_without_provenance() {
        let dm = read_data_csv("a,b\n1,2\n3,4\n", "t.csv").unwrap();
        assert_eq!(dm.n_rows(), 2);
        assert_eq!(dm.n_cols(), 2);
        assert_eq!(dm.row_index()[1], (1, 0));
    }

    #[test]
    fn data_csv_with_provenance() {
        let dm = read_data_csv("pixel_row,pixel_col,v\n0,0,9\n0,1,8\n", "t.csv").unwrap();
        assert_eq!(dm.n_cols(), 1);
        assert_eq!(dm.row_index()[1], (0, 1));
        assert_eq!(dm.row(1), &[8.0]);
    }

    #[test]
    fn csv_errors_cite_lines() {
        let err = read_data_csv("a,b\n1\n", "bad.csv").unwrap_err();
        match err {
            Error::ParseLine { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let err = read_data_csv("a,b\n1,x\n", "bad.csv").unwrap_err();
        match err {
            Error::ParseLine { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn g9_roundtrips_to_nine_digits(x in -1e12f64..1e12) {
            let s = fmt_g9(x);
            let back: f64 = s.parse().unwrap();
            let tol = 1e-8 * x.abs().max(1e-300);
            prop_assert!((back - x).abs() <= tol, "{x} -> {s} -> {back}");
        }
    }
}
