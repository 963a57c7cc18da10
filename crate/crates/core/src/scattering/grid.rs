//! Out-momentum grids: tensor products of axes, or rotated (K, r) grids with
//! K = p₁ + p₂ and r = p₁ − p₂.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::quadrature::{composite_gauss, trapezoid_weights};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Axis {
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 || !(b > a) {
            return Err(Error::Validation(format!("axis needs n ≥ 2 and b > a, got [{a}, {b}] with {n}")));
        }
        let h = (b - a) / (n - 1) as f64;
        Ok(Self { nodes: (0..n).map(|i| a + i as f64 * h).collect(), weights: trapezoid_weights(n, h) })
    }

    /// Union of windows [c − half, c + half] restricted to the lattice
    /// origin + jh, each node weighted h.
    pub fn lattice_patches(centers: &[f64], half: f64, h: f64, origin: f64) -> Result<Self> {
        if !(h > 0.0 && half > 0.0) {
            return Err(Error::Validation("patch spacing and half-width must be positive".into()));
        }
        let mut idx: Vec<i64> = Vec::new();
        for &c in centers {
            let lo = ((c - half - origin) / h).ceil() as i64;
            let hi = ((c + half - origin) / h).floor() as i64;
            idx.extend(lo..=hi);
        }
        idx.sort_unstable();
        idx.dedup();
        let nodes: Vec<f64> = idx.iter().map(|&j| origin + j as f64 * h).collect();
        let weights = vec![h; nodes.len()];
        Ok(Self { nodes, weights })
    }

    /// Whole real line through x = c + s·tan θ, Gauss–Legendre panels in θ.
    pub fn tan_mapped(c: f64, s: f64, panels: usize, order: usize) -> Self {
        let (th, w) = composite_gauss(-FRAC_PI_2, FRAC_PI_2, panels, order);
        let nodes = th.iter().map(|t| c + s * t.tan()).collect();
        let weights = th.iter().zip(&w).map(|(t, w)| w * s / t.cos().powi(2)).collect();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum Layout {
    Tensor { a: Axis, b: Axis },
    Rotated { k: Axis, r: Axis },
    /// Arbitrary points with unit weights, one row.
    Scattered,
}

/// Flattened 2-D quadrature over (p₁, p₂), stored row by row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutGrid {
    pub layout: Layout,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub row_len: usize,
}

impl OutGrid {
    pub fn tensor(a: Axis, b: Axis) -> Self {
        let mut points = Vec::with_capacity(a.len() * b.len());
        let mut weights = Vec::with_capacity(a.len() * b.len());
        for (x, wx) in a.nodes.iter().zip(&a.weights) {
            for (y, wy) in b.nodes.iter().zip(&b.weights) {
                points.push([*x, *y]);
                weights.push(wx * wy);
            }
        }
        let row_len = b.len();
        Self { layout: Layout::Tensor { a, b }, points, weights, row_len }
    }

    pub fn square(axis: Axis) -> Self {
        Self::tensor(axis.clone(), axis)
    }

    /// p₁ = (K + r)/2, p₂ = (K − r)/2; every row shares one K.
    pub fn rotated(k: Axis, r: Axis) -> Self {
        let mut points = Vec::with_capacity(k.len() * r.len());
        let mut weights = Vec::with_capacity(k.len() * r.len());
        for (kk, wk) in k.nodes.iter().zip(&k.weights) {
            for (rr, wr) in r.nodes.iter().zip(&r.weights) {
                points.push([0.5 * (kk + rr), 0.5 * (kk - rr)]);
                weights.push(0.5 * wk * wr);
            }
        }
        let row_len = r.len();
        Self { layout: Layout::Rotated { k, r }, points, weights, row_len }
    }

    /// Evaluation points only; weights are 1 and carry no quadrature meaning.
    pub fn scattered(points: Vec<[f64; 2]>) -> Self {
        let n = points.len();
        Self { layout: Layout::Scattered, weights: vec![1.0; n], points, row_len: n }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        (0..self.points.len()).step_by(self.row_len.max(1)).map(move |s| s..(s + self.row_len).min(self.points.len()))
    }

    pub fn shares_row_sum(&self) -> bool {
        matches!(self.layout, Layout::Rotated { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tan_mapping_integrates_lorentzian() {
        let ax = Axis::tan_mapped(0.4, 1.5, 40, 8);
        let s: f64 = ax.nodes.iter().zip(&ax.weights).map(|(x, w)| w / (1.0 + (x - 1.0).powi(2))).sum();
        assert!((s - std::f64::consts::PI).abs() < 1e-12, "{s}");
    }

    #[test]
    fn patches_share_lattice() {
        let ax = Axis::lattice_patches(&[0.0, 0.35, 5.0], 0.52, 0.1, 0.05).unwrap();
        for w in ax.nodes.windows(2) {
            let d = (w[1] - w[0]) / 0.1;
            assert!(d > 0.5 && (d - d.round()).abs() < 1e-9);
        }
        assert_eq!(ax.nodes.len(), 14 + 10);
    }

    #[test]
    fn rotated_grid_area() {
        let g = OutGrid::rotated(Axis::uniform(-1.0, 1.0, 201).unwrap(), Axis::uniform(-1.0, 1.0, 201).unwrap());
        let area: f64 = g.weights.iter().sum();
        assert!((area - 2.0).abs() < 1e-10, "{area}");
        assert_eq!(g.rows().count(), 201);
    }
}
