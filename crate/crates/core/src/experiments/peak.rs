use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Vertex of the fitted parabola, or the grid point itself at a boundary.
    pub lambda_c: f64,
    /// Second derivative of the parabola (negative at a maximum).
    pub curvature: f64,
    pub value: f64,
    /// The maximum sits on the first or last grid point.
    pub at_boundary: bool,
}

/// Locates the maximum of `(lambda, value)` points, sorted by `lambda`, by a
/// parabola through the largest sample and its two neighbours.
pub fn detect_peak(points: &[(f64, f64)]) -> Result<Peak> {
    if points.len() < 5 {
        return Err(Error::InsufficientData(format!("peak detection needs 5 points, got {}", points.len())));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Validation("peak detection needs strictly increasing lambda".into()));
    }
    if points.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::NonFinite);
    }
    let i = (0..points.len())
        .max_by(|&a, &b| points[a].1.total_cmp(&points[b].1))
        .expect("nonempty");
    if i == 0 || i == points.len() - 1 {
        return Ok(Peak { lambda_c: points[i].0, curvature: f64::NAN, value: points[i].1, at_boundary: true });
    }
    let (x0, y0) = points[i - 1];
    let (x1, y1) = points[i];
    let (x2, y2) = points[i + 1];
    // Newton form: y = y0 + d1 (x - x0) + d2 (x - x0)(x - x1).
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let d2 = (d12 - d01) / (x2 - x0);
    if d2 == 0.0 {
        return Ok(Peak { lambda_c: x1, curvature: 0.0, value: y1, at_boundary: false });
    }
    let xv = 0.5 * (x0 + x1) - d01 / (2.0 * d2);
    let yv = y0 + d01 * (xv - x0) + d2 * (xv - x0) * (xv - x1);
    Ok(Peak { lambda_c: xv, curvature: 2.0 * d2, value: yv, at_boundary: false })
}
