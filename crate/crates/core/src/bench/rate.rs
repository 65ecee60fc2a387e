//! Empirical convergence orders from `(resolution, error)` pairs.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Ordinary least-squares line through `(log r, log e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Half-width of the 95% Student-t confidence interval of the slope,
    /// from the least-squares residuals.
    pub half_width: f64,
}

/// Measured errors with the fitted order. `resolution` is a mesh width or
/// time step, so a positive slope means convergence.
#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub points: Vec<(f64, f64)>,
    pub fit: Option<SlopeFit>,
    /// All errors vanished, so there is nothing to fit.
    pub degenerate: bool,
}

impl RateResult {
    /// Fit the points, or flag them as degenerate when every error is zero.
    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.iter().all(|&(_, e)| e == 0.0) {
            if points.is_empty() {
                return Err(Error::TooFewPoints(0));
            }
            return Ok(Self {
                points,
                fit: None,
                degenerate: true,
            });
        }
        let fit = fit_rate(&points)?;
        Ok(Self {
            points,
            fit: Some(fit),
            degenerate: false,
        })
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

/// OLS slope of `log e` against `log r`. Needs at least three points and
/// strictly positive resolutions and errors.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    for &(r, e) in points {
        if !(r > 0.0 && e > 0.0) || !r.is_finite() || !e.is_finite() {
            return Err(Error::NonPositive {
                resolution: r,
                error: e,
            });
        }
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("resolutions must not all coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let dof = n - 2.0;
    let se = (rss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(SlopeFit {
        slope,
        intercept,
        half_width: t * se,
    })
}
