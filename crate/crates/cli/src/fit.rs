//! Least-squares fits for the coarsening laws.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination.
    pub r2: f64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ slope·x + intercept`; `None` below two distinct `x`.
pub fn line_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x[..n].iter().zip(&y[..n]) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(LineFit { slope, intercept: my - slope * mx, r2, points: n })
}

fn window(t: &[f64], y: &[f64], from: f64) -> (Vec<f64>, Vec<f64>) {
    t.iter().zip(y).filter(|(&t, &v)| t >= from && t > 0.0 && v.is_finite()).map(|(&t, &v)| (t, v)).unzip()
}

/// `y ≈ a·ln(t) + b` over `t ≥ from`.
pub fn log_fit(t: &[f64], y: &[f64], from: f64) -> Option<LineFit> {
    let (t, y) = window(t, y, from);
    let x: Vec<f64> = t.iter().map(|t| t.ln()).collect();
    line_fit(&x, &y)
}

/// `ln y ≈ b·ln(t) + ln c` over `t ≥ from`; the slope is the exponent.
pub fn power_fit(t: &[f64], y: &[f64], from: f64) -> Option<LineFit> {
    let (t, y) = window(t, y, from);
    let (x, ly): (Vec<f64>, Vec<f64>) = t.iter().zip(&y).filter(|(_, &v)| v > 0.0).map(|(t, v)| (t.ln(), v.ln())).unzip();
    line_fit(&x, &ly)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|x| 2.0 * x - 1.0).collect();
        let f = line_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14);
        assert!(line_fit(&[1.0], &[1.0]).is_none());
        assert!(line_fit(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn law_fits_recover_parameters() {
        let t: Vec<f64> = (1..=200).map(|i| i as f64).collect();
        let e: Vec<f64> = t.iter().map(|t| -40.0 * t.ln() - 50.0).collect();
        let h: Vec<f64> = t.iter().map(|t| 0.3 * t.powf(0.5)).collect();
        let f = log_fit(&t, &e, 100.0).unwrap();
        assert!((f.slope + 40.0).abs() < 1e-9 && (f.intercept + 50.0).abs() < 1e-8);
        assert_eq!(f.points, 101);
        let p = power_fit(&t, &h, 10.0).unwrap();
        assert!((p.slope - 0.5).abs() < 1e-12);
        assert!(power_fit(&t, &h, 1e4).is_none());
    }
}
