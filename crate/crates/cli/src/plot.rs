//! SVG figures: red boundary marginals, blue rollout marginals, green
//! waypoint potentials and black sampled trajectories.
//!
//! States with `d ≥ 2` are drawn in their first two coordinates with an
//! isotropic scale. One-dimensional states are drawn against the step index.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::scenario_file::{Matrix, ScenarioFile};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 800.0;

/// Ellipse in data coordinates: centre, semi-axes, rotation of the first
/// axis (radians, counter-clockwise).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub rx: f64,
    pub ry: f64,
    pub angle: f64,
}

impl Ellipse {
    /// `{x : (x−c)ᵀ C⁻¹ (x−c) ≤ sigma²}` for a 2×2 covariance.
    pub fn from_cov(center: (f64, f64), cov: &DMatrix<f64>, sigma: f64) -> Option<Self> {
        let eig = SymmetricEigen::new(cov.clone());
        let (i, j) = if eig.eigenvalues[0] >= eig.eigenvalues[1] {
            (0, 1)
        } else {
            (1, 0)
        };
        let (l1, l2) = (eig.eigenvalues[i], eig.eigenvalues[j]);
        if l2.is_nan() || l2 <= 0.0 || !l1.is_finite() {
            return None;
        }
        let v = eig.eigenvectors.column(i);
        Some(Self {
            cx: center.0,
            cy: center.1,
            rx: sigma * l1.sqrt(),
            ry: sigma * l2.sqrt(),
            angle: v[1].atan2(v[0]),
        })
    }

    fn extent(&self) -> (f64, f64) {
        let (c, s) = (self.angle.cos(), self.angle.sin());
        let ex = ((self.rx * c).powi(2) + (self.ry * s).powi(2)).sqrt();
        let ey = ((self.rx * s).powi(2) + (self.ry * c).powi(2)).sqrt();
        (ex, ey)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Figure {
    pub boundaries: Vec<Ellipse>,
    pub marginals: Vec<Ellipse>,
    pub waypoints: Vec<Ellipse>,
    pub paths: Vec<Vec<(f64, f64)>>,
    /// Isotropic axes when the two plotted coordinates share units.
    pub isotropic: bool,
}

fn block(cov: &DMatrix<f64>) -> DMatrix<f64> {
    cov.view((0, 0), (2, 2)).into_owned()
}

fn to_dmatrix(rows: &Matrix) -> DMatrix<f64> {
    let d = rows.len();
    DMatrix::from_fn(d, d, |i, j| rows[i][j])
}

/// Inverse of an SPD matrix through its eigendecomposition; `None` when
/// singular.
fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().any(|&l| l.is_nan() || l <= 1e-12) {
        return None;
    }
    let inv = eig.eigenvalues.map(|l| 1.0 / l);
    Some(&eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose())
}

impl Figure {
    /// Assemble a figure; waypoint potentials are drawn as the Gaussians
    /// `N(x*_k, ε Q_k⁻¹)`.
    pub fn build(
        doc: &ScenarioFile,
        marginals: &[(DVector<f64>, DMatrix<f64>)],
        paths: &[Vec<Vec<f64>>],
        sigma: f64,
    ) -> Self {
        let d = doc.dim;
        let mut fig = Figure {
            isotropic: d >= 2,
            ..Default::default()
        };
        let eps = doc.epsilon;

        let place = |k: f64, mean: &[f64], cov: &DMatrix<f64>| -> Option<Ellipse> {
            if d == 1 {
                let sd = cov[(0, 0)].max(0.0).sqrt();
                Some(Ellipse {
                    cx: k,
                    cy: mean[0],
                    rx: 0.3,
                    ry: sigma * sd,
                    angle: 0.0,
                })
            } else {
                Ellipse::from_cov((mean[0], mean[1]), &block(cov), sigma)
            }
        };

        for (k, (mean, cov)) in marginals.iter().enumerate() {
            if let Some(e) = place(k as f64, mean.as_slice(), cov) {
                fig.marginals.push(e);
            }
        }
        let horizon = doc.horizon as f64;
        for (k, g) in [(0.0, &doc.p0), (horizon, &doc.pk)] {
            if let Some(e) = place(k, &g.mean, &to_dmatrix(&g.cov)) {
                fig.boundaries.push(e);
            }
        }

        let pot = &doc.potential;
        let mut potentials: Vec<(f64, Vec<f64>, DMatrix<f64>)> = Vec::new();
        if pot.default_q > 0.0 {
            let x = pot.default_x_star.clone().unwrap_or_else(|| vec![0.0; d]);
            potentials.push((horizon / 2.0, x, DMatrix::identity(d, d) * pot.default_q));
        }
        for w in &pot.waypoints {
            let q = match (&w.q, &w.matrix) {
                (Some(q), _) => DMatrix::identity(d, d) * *q,
                (None, Some(m)) => to_dmatrix(m),
                _ => continue,
            };
            potentials.push((w.k as f64, w.x_star.clone(), q));
        }
        for (k, x, q) in potentials {
            if let Some(cov) = spd_inverse(&q).map(|c| c * eps) {
                if let Some(e) = place(k, &x, &cov) {
                    fig.waypoints.push(e);
                }
            }
        }

        for p in paths {
            let pts = p
                .iter()
                .enumerate()
                .map(|(k, x)| {
                    if d == 1 {
                        (k as f64, x[0])
                    } else {
                        (x[0], x[1])
                    }
                })
                .collect();
            fig.paths.push(pts);
        }
        fig
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        let mut grow = |x: f64, y: f64| {
            if x.is_finite() && y.is_finite() {
                b.0 = b.0.min(x);
                b.1 = b.1.max(x);
                b.2 = b.2.min(y);
                b.3 = b.3.max(y);
            }
        };
        for e in self
            .boundaries
            .iter()
            .chain(&self.marginals)
            .chain(&self.waypoints)
        {
            let (ex, ey) = e.extent();
            grow(e.cx - ex, e.cy - ey);
            grow(e.cx + ex, e.cy + ey);
        }
        for p in &self.paths {
            for &(x, y) in p {
                grow(x, y);
            }
        }
        if !b.0.is_finite() {
            return (-1.0, 1.0, -1.0, 1.0);
        }
        let pad = |lo: f64, hi: f64| {
            let span = (hi - lo).max(1e-9);
            (lo - 0.1 * span, hi + 0.1 * span)
        };
        let (x0, x1) = pad(b.0, b.1);
        let (y0, y1) = pad(b.2, b.3);
        (x0, x1, y0, y1)
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let (mut sx, mut sy) = (WIDTH / (x1 - x0), HEIGHT / (y1 - y0));
        if self.isotropic {
            let s = sx.min(sy);
            sx = s;
            sy = s;
        }
        let (w, h) = ((x1 - x0) * sx, (y1 - y0) * sy);
        let px = |x: f64| (x - x0) * sx;
        let py = |y: f64| (y1 - y) * sy;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.3} {h:.3}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);

        let _ = writeln!(
            out,
            r#"<g id="paths" fill="none" stroke="black" stroke-width="0.5" stroke-opacity="0.6">"#
        );
        for p in &self.paths {
            let pts: Vec<String> = p
                .iter()
                .map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline class="path" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let _ = writeln!(out, "</g>");

        let mut group = |id: &str, class: &str, color: &str, width: f64, items: &[Ellipse]| {
            let _ = writeln!(
                out,
                r#"<g id="{id}" fill="none" stroke="{color}" stroke-width="{width}">"#
            );
            for e in items {
                let _ = writeln!(
                    out,
                    r#"<ellipse class="{class}" cx="{:.3}" cy="{:.3}" rx="{:.3}" ry="{:.3}" transform="rotate({:.3} {:.3} {:.3})"/>"#,
                    px(e.cx),
                    py(e.cy),
                    e.rx * sx,
                    e.ry * sy,
                    -e.angle.to_degrees(),
                    px(e.cx),
                    py(e.cy),
                );
            }
            let _ = writeln!(out, "</g>");
        };
        group("marginals", "marginal", "blue", 0.8, &self.marginals);
        group("waypoints", "waypoint", "green", 1.5, &self.waypoints);
        group("boundaries", "boundary", "red", 1.5, &self.boundaries);
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ellipse_axes_follow_eigenvectors() {
        let cov = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let e = Ellipse::from_cov((1.0, 2.0), &cov, 3.0).unwrap();
        assert!((e.rx - 6.0).abs() < 1e-12);
        assert!((e.ry - 3.0).abs() < 1e-12);
        assert!(e.angle.sin().abs() < 1e-12);

        let rot = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let e = Ellipse::from_cov((0.0, 0.0), &rot, 1.0).unwrap();
        assert!((e.angle.cos()).abs() < 1e-12);
        assert!(Ellipse::from_cov((0.0, 0.0), &DMatrix::zeros(2, 2), 1.0).is_none());
    }
}
