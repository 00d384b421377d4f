//! Decay-rate fits on per-grid-point medians.

use crate::error::{LabError, LabResult};
use crate::formats::ParsedTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitScale {
    /// `log₁₀ y` against `log₁₀ x`.
    LogLog,
    /// `log₁₀ y` against `x`.
    SemiLog,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Ordinary least squares line through `(x, y)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> LabResult<SlopeFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(LabError::Format("a line fit needs at least two points".into()));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(LabError::Format("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(SlopeFit { slope, intercept, r2, points: n })
}

/// `(x, median y)` per distinct `x`, in first-appearance order.
pub fn medians_by(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        match groups.iter_mut().find(|(g, _)| *g == x) {
            Some((_, v)) => v.push(y),
            None => groups.push((x, vec![y])),
        }
    }
    groups.into_iter().map(|(x, v)| (x, median(&v))).collect()
}

/// Fit on the medians of `y_col` grouped by `x_col`. Rows with an empty
/// `y_col`, or not matching `filter = (column, value)`, are skipped.
pub fn fit_slope(
    table: &ParsedTable,
    x_col: &str,
    y_col: &str,
    scale: FitScale,
    filter: Option<(&str, &str)>,
) -> LabResult<SlopeFit> {
    let xs = table.reals(x_col)?;
    let ys = table.reals(y_col)?;
    let keep: Vec<bool> = match filter {
        Some((col, val)) => table.texts(col)?.iter().map(|v| *v == val).collect(),
        None => vec![true; xs.len()],
    };
    let (mut px, mut py) = (Vec::new(), Vec::new());
    for ((x, y), k) in xs.into_iter().zip(ys).zip(keep) {
        if let (Some(x), Some(y), true) = (x, y, k) {
            px.push(x);
            py.push(y);
        }
    }
    let med = medians_by(&px, &py);
    let mut fx = Vec::with_capacity(med.len());
    let mut fy = Vec::with_capacity(med.len());
    for (x, y) in med {
        if !(y > 0.0) || (scale == FitScale::LogLog && !(x > 0.0)) {
            return Err(LabError::Format(format!("cannot take logarithms at x = {x}, median = {y}")));
        }
        fx.push(if scale == FitScale::LogLog { x.log10() } else { x });
        fy.push(y.log10());
    }
    fit_line(&fx, &fy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_lines() {
        let f = fit_line(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15 && (f.intercept - 1.0).abs() < 1e-15);
        assert!((f.r2 - 1.0).abs() < 1e-15);
        assert!(fit_line(&[1.0, 1.0], &[0.0, 2.0]).is_err());
        assert!(fit_line(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(medians_by(&[1.0, 2.0, 1.0], &[5.0, 6.0, 7.0]), [(1.0, 6.0), (2.0, 6.0)]);
    }

    #[test]
    fn table_fits() {
        // err = m^-2 with one outlier per grid point that the median ignores
        let mut text = String::from("# test\nscheme,m,err2\n");
        for m in [10.0f64, 100.0, 1000.0] {
            for (s, e) in [("a", m.powi(-2)), ("a", m.powi(-2)), ("a", 1e3), ("b", 1.0)] {
                text.push_str(&format!("{s},{m},{e}\n"));
            }
        }
        text.push_str("a,5000,\n");
        let t = ParsedTable::parse(&text).unwrap();
        let f = fit_slope(&t, "m", "err2", FitScale::LogLog, Some(("scheme", "a"))).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12, "{f:?}");
        assert_eq!(f.points, 3);
        let f = fit_slope(&t, "m", "err2", FitScale::SemiLog, Some(("scheme", "b"))).unwrap();
        assert!(f.slope.abs() < 1e-15);
        assert!(fit_slope(&t, "m", "nope", FitScale::LogLog, None).is_err());
    }
}
