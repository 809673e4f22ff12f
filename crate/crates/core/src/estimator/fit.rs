use serde::Serialize;

use super::McEstimate;
use crate::error::{Error, Result};

/// ln E(t) = ln c − β t − γ ln t
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub c: f64,
    pub beta: f64,
    pub gamma: f64,
    pub residual_rms: f64,
    /// covariance of (ln c, β, γ)
    pub cov: [[f64; 3]; 3],
    /// 95% normal intervals for (ln c, β, γ)
    pub ci95: [(f64, f64); 3],
    pub points: usize,
    /// true when standard errors supplied the weights
    pub weighted: bool,
}

/// Smallest accepted t_max / t_min; β and γ are nearly collinear on shorter ranges.
pub const MIN_SPAN: f64 = 16.0;

/// Weighted least squares with weights (mean/stderr)², the delta-method
/// inverse variance of ln(mean). If any stderr is zero, unit weights are used
/// and the covariance is scaled by the residual variance.
pub fn rate_fit(estimates: &[McEstimate]) -> Result<RateFit> {
    let n = estimates.len();
    if n < 4 {
        return Err(Error::InsufficientData(format!("rate fit needs at least 4 points, got {n}")));
    }
    if let Some(e) = estimates.iter().find(|e| !(e.mean > 0.0 && e.mean.is_finite())) {
        return Err(Error::InvalidInput(format!("nonpositive mean {} at t = {}", e.mean, e.t)));
    }
    let tmin = estimates.iter().map(|e| e.t).fold(f64::INFINITY, f64::min);
    let tmax = estimates.iter().map(|e| e.t).fold(0.0, f64::max);
    if !(tmin > 0.0) || tmax / tmin < MIN_SPAN * (1.0 - 1e-12) {
        return Err(Error::InsufficientData(format!("t_max/t_min = {} is below {MIN_SPAN}", tmax / tmin)));
    }
    let weighted = estimates.iter().all(|e| e.stderr > 0.0 && e.stderr.is_finite());
    let rows: Vec<([f64; 3], f64, f64)> = estimates
        .iter()
        .map(|e| {
            let w = if weighted { (e.mean / e.stderr).powi(2) } else { 1.0 };
            ([1.0, -e.t, -e.t.ln()], e.mean.ln(), w)
        })
        .collect();
    let mut xtx = [[0.0; 3]; 3];
    let mut xty = [0.0; 3];
    for (x, y, w) in &rows {
        for i in 0..3 {
            xty[i] += w * x[i] * y;
            for j in 0..3 {
                xtx[i][j] += w * x[i] * x[j];
            }
        }
    }
    let inv = invert3(&xtx).ok_or_else(|| Error::Numerical("singular normal equations".into()))?;
    let coef: Vec<f64> = (0..3).map(|i| (0..3).map(|j| inv[i][j] * xty[j]).sum()).collect();
    let resid: Vec<f64> = rows.iter().map(|(x, y, _)| y - (0..3).map(|i| x[i] * coef[i]).sum::<f64>()).collect();
    let residual_rms = (resid.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    let scale = if weighted {
        1.0
    } else if n > 3 {
        resid.iter().map(|r| r * r).sum::<f64>() / (n - 3) as f64
    } else {
        0.0
    };
    let mut cov = inv;
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    let ci = |i: usize| {
        let h = 1.959_963_984_540_054 * cov[i][i].max(0.0).sqrt();
        (coef[i] - h, coef[i] + h)
    };
    Ok(RateFit {
        c: coef[0].exp(),
        beta: coef[1],
        gamma: coef[2],
        residual_rms,
        cov,
        ci95: [ci(0), ci(1), ci(2)],
        points: n,
        weighted,
    })
}

fn invert3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(det.abs() > 1e-14 * scale.powi(3)) {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, d) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[a][c] * m[b][d] - m[a][d] * m[b][c]) / det;
        }
    }
    Some(inv)
}
