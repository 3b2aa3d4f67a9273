use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trap::TrapSpec;

/// Uniform grid `x_j = (start + j) h`, `j = 0..n_points`.
///
/// Symmetric grids have an integer `start = -(n_points - 1)/2`, which makes
/// `x_{n-1-j} = -x_j` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    start: f64,
    spacing: f64,
    n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points, got {n_points}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "need x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        let spacing = (x_max - x_min) / (n_points - 1) as f64;
        Ok(Grid {
            start: x_min / spacing,
            spacing,
            n_points,
        })
    }

    /// Symmetric grid with nodes at integer multiples of `spacing` covering
    /// at least `[-half_extent, half_extent]`.
    pub fn symmetric(half_extent: f64, spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        if !(half_extent.is_finite() && half_extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half extent must be positive, got {half_extent}"
            )));
        }
        let m = ((half_extent / spacing) - 1e-9).ceil().max(1.0) as usize;
        Ok(Grid {
            start: -(m as f64),
            spacing,
            n_points: 2 * m + 1,
        })
    }

    /// Symmetric grid over `[-half_extent, half_extent]` with (at least)
    /// `n_points` nodes; even counts are bumped to the next odd number.
    pub fn symmetric_with_points(half_extent: f64, n_points: usize) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points, got {n_points}"
            )));
        }
        let m = n_points / 2;
        Self::symmetric(half_extent, half_extent / m as f64)
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn x(&self, j: usize) -> f64 {
        (self.start + j as f64) * self.spacing
    }

    pub fn x_min(&self) -> f64 {
        self.x(0)
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n_points - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |j| self.x(j))
    }

    pub fn is_symmetric(&self) -> bool {
        self.n_points % 2 == 1 && self.start == -(((self.n_points - 1) / 2) as f64)
    }

    /// Index ranges of the nodes shared with `other`, as
    /// `(range in self, range in other)`, when both grids sit on the same
    /// lattice (equal spacing, integer offset between starts). Disjoint
    /// aligned grids give empty ranges; misaligned grids give `None`.
    pub fn common_range(&self, other: &Grid) -> Option<(Range<usize>, Range<usize>)> {
        if self.spacing != other.spacing {
            return None;
        }
        let shift = other.start - self.start;
        if shift != shift.round() {
            return None;
        }
        let shift = shift as i64;
        // global index g = j_self = j_other + shift
        let lo = 0i64.max(shift);
        let hi = (self.n_points as i64).min(other.n_points as i64 + shift);
        if hi <= lo {
            return Some((0..0, 0..0));
        }
        Some((
            lo as usize..hi as usize,
            (lo - shift) as usize..(hi - shift) as usize,
        ))
    }

    /// Same extent, spacing halved.
    pub fn refined(&self) -> Grid {
        Grid {
            start: 2.0 * self.start,
            spacing: 0.5 * self.spacing,
            n_points: 2 * self.n_points - 1,
        }
    }
}

/// Automatic grid selection for one or several traps solved together.
///
/// The spacing resolves the shortest de Broglie wavelength at the well
/// bottom, the wall smoothness and the trap width; the half extent adds
/// `margin_factor` evanescent decay lengths of the shallowest state that can
/// still count as bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridPolicy {
    pub points_per_wavelength: f64,
    pub points_per_smoothness: f64,
    pub points_per_half_width: f64,
    pub margin_factor: f64,
    /// Relative binding `|E|/V` of the shallowest state the margin must hold.
    pub shallowest_binding: f64,
    /// Fixed node count overriding the automatic spacing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy {
            points_per_wavelength: 64.0,
            points_per_smoothness: 8.0,
            points_per_half_width: 100.0,
            margin_factor: 8.0,
            shallowest_binding: crate::spectrum::DEFAULT_BOUND_THRESHOLD,
            n_points: None,
        }
    }
}

impl GridPolicy {
    pub fn spacing_for(&self, trap: &TrapSpec) -> f64 {
        let mut h = trap.half_width() / self.points_per_half_width;
        if trap.depth() > 0.0 {
            let lambda_min = 2.0 * PI / trap.depth().sqrt();
            h = h.min(lambda_min / self.points_per_wavelength);
        }
        if trap.smoothness() > 0.0 {
            h = h.min(trap.smoothness() / self.points_per_smoothness);
        }
        h
    }

    pub fn half_extent_for(&self, trap: &TrapSpec) -> f64 {
        let binding = self.shallowest_binding * trap.depth();
        let margin = if binding > 0.0 {
            self.margin_factor / binding.sqrt()
        } else {
            self.margin_factor * trap.half_width()
        };
        trap.reach() + margin
    }

    /// One grid fine enough and wide enough for every trap in `traps`.
    pub fn grid_for(&self, traps: &[&TrapSpec]) -> Result<Grid> {
        if traps.is_empty() {
            return Err(Error::InvalidGrid("no traps to size a grid for".into()));
        }
        let half_extent = traps
            .iter()
            .map(|t| self.half_extent_for(t))
            .fold(0.0, f64::max);
        match self.n_points {
            Some(n) => Grid::symmetric_with_points(half_extent, n),
            None => {
                let h = traps
                    .iter()
                    .map(|t| self.spacing_for(t))
                    .fold(f64::INFINITY, f64::min);
                Grid::symmetric(half_extent, h)
            }
        }
    }

    /// Grids for an initial/final pair. Each trap gets its own extent on a
    /// common lattice (the finer of the two spacings), so the smaller grid
    /// is a node subset of the larger one and overlaps need no
    /// interpolation. A fixed node count instead puts both traps on one
    /// shared grid.
    pub fn pair_grids(&self, initial: &TrapSpec, fin: &TrapSpec) -> Result<(Grid, Grid)> {
        if self.n_points.is_some() {
            let g = self.grid_for(&[initial, fin])?;
            return Ok((g, g));
        }
        let h = self.spacing_for(initial).min(self.spacing_for(fin));
        Ok((
            Grid::symmetric(self.half_extent_for(initial), h)?,
            Grid::symmetric(self.half_extent_for(fin), h)?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_grid_is_exactly_mirrored() {
        let g = Grid::symmetric(2.37, 0.013).unwrap();
        assert!(g.is_symmetric());
        let n = g.len();
        for j in 0..n {
            assert_eq!(g.x(j), -g.x(n - 1 - j));
        }
        assert_eq!(g.x((n - 1) / 2), 0.0);
        assert!(g.x_max() >= 2.37);
    }

    #[test]
    fn refinement_keeps_nodes() {
        let g = Grid::symmetric(1.0, 0.1).unwrap();
        let f = g.refined();
        assert_eq!(f.len(), 2 * g.len() - 1);
        for j in 0..g.len() {
            assert!((f.x(2 * j) - g.x(j)).abs() < 1e-14);
        }
    }

    #[test]
    fn common_range_of_nested_grids() {
        let big = Grid::symmetric(1.0, 0.1).unwrap();
        let small = Grid::symmetric(0.3, 0.1).unwrap();
        let (rb, rs) = big.common_range(&small).unwrap();
        assert_eq!(rs, 0..small.len());
        assert_eq!(rb.len(), small.len());
        for (jb, js) in rb.zip(rs) {
            assert!((big.x(jb) - small.x(js)).abs() < 1e-14);
        }
        let (rs, rb) = small.common_range(&big).unwrap();
        assert_eq!((rs.len(), rb.start), (small.len(), 7));
        assert!(big
            .common_range(&Grid::symmetric(0.3, 0.05).unwrap())
            .is_none());
    }

    #[test]
    fn pair_grids_share_a_lattice() {
        let p = GridPolicy::default();
        let a = TrapSpec::bathtub(100.0, 1.0, 0.05).unwrap();
        let b = TrapSpec::bathtub(400.0, 0.5, 0.025).unwrap();
        let (ga, gb) = p.pair_grids(&a, &b).unwrap();
        assert_eq!(ga.spacing(), gb.spacing());
        assert!(ga.common_range(&gb).is_some());
        assert!(ga.x_max() >= p.half_extent_for(&a) && gb.x_max() >= p.half_extent_for(&b));
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::new(0.0, 1.0, 2).is_err());
        assert!(Grid::new(1.0, 1.0, 5).is_err());
        assert!(Grid::symmetric(1.0, 0.0).is_err());
        assert!(Grid::symmetric(1.0, -0.1).is_err());
    }

    #[test]
    fn policy_spacing_scales_with_trap() {
        let p = GridPolicy::default();
        let a = TrapSpec::bathtub(100.0, 1.0, 0.05).unwrap();
        let b = TrapSpec::bathtub(400.0, 0.5, 0.025).unwrap();
        assert!((p.spacing_for(&a) / p.spacing_for(&b) - 2.0).abs() < 1e-12);
        assert!((p.half_extent_for(&a) / p.half_extent_for(&b) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn override_sets_node_count() {
        let p = GridPolicy {
            n_points: Some(1001),
            ..GridPolicy::default()
        };
        let t = TrapSpec::square_well(10.0, 1.0).unwrap();
        assert_eq!(p.grid_for(&[&t]).unwrap().len(), 1001);
    }
}
