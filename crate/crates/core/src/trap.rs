//! One-dimensional trapping potentials and their isospectral labeling.
//!
//! Units throughout the crate: `ħ²/2m = 1` and lengths in units of a
//! reference length (the initial trap half-width in every scenario), so a
//! depth `V` and a half-width `L` are plain numbers. In these units the
//! kinetic operator is `-d²/dx²`.
//!
//! Every trap is labeled by a dimensionless depth `U` that is invariant under
//! `(V, L) -> (s²V, L/s)`. Two traps with the same shape, the same `U` and
//! (for the bathtub) the same relative smoothness `σ/L` have identical
//! spectra once energies are measured in units of `1/L²`.
//!
//! * bathtub / square well: `U = V (2L)²`, i.e. the full width enters, which
//!   puts the square-well bound-state count at `⌈√U/π⌉`;
//! * inverted Gaussian: `U = V δ²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `U = BATHTUB_U_FACTOR · V · L²` for bathtub and square wells.
pub const BATHTUB_U_FACTOR: f64 = 4.0;

/// `U = GAUSSIAN_U_FACTOR · V · δ²` for the inverted Gaussian.
pub const GAUSSIAN_U_FACTOR: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrapShape {
    /// `-(V/2) [1 - tanh((|x| - L)/σ)]`
    Bathtub,
    /// `-V exp(-x²/2δ²)`, with `δ` stored as the half-width.
    InvertedGaussian,
    /// Zero-smoothness limit of the bathtub.
    SquareWell,
}

impl TrapShape {
    /// Width factor of the `U ∝ V L²` convention for this shape.
    pub fn u_factor(self) -> f64 {
        match self {
            TrapShape::Bathtub | TrapShape::SquareWell => BATHTUB_U_FACTOR,
            TrapShape::InvertedGaussian => GAUSSIAN_U_FACTOR,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TrapShape::Bathtub => "bathtub",
            TrapShape::InvertedGaussian => "inverted_gaussian",
            TrapShape::SquareWell => "square_well",
        }
    }
}

/// A validated, immutable trap description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapSpec {
    shape: TrapShape,
    depth: f64,
    half_width: f64,
    smoothness: f64,
}

impl TrapSpec {
    /// Builds a trap. A bathtub with zero smoothness is stored as a square
    /// well so `tanh` is never evaluated with `σ = 0`.
    pub fn new(shape: TrapShape, depth: f64, half_width: f64, smoothness: f64) -> Result<Self> {
        if !depth.is_finite() || depth < 0.0 {
            return Err(Error::InvalidTrap {
                name: "depth",
                value: depth,
                reason: "must be finite and non-negative",
            });
        }
        if !half_width.is_finite() || half_width <= 0.0 {
            return Err(Error::InvalidTrap {
                name: "half_width",
                value: half_width,
                reason: "must be finite and positive",
            });
        }
        if !smoothness.is_finite() || smoothness < 0.0 {
            return Err(Error::InvalidTrap {
                name: "smoothness",
                value: smoothness,
                reason: "must be finite and non-negative",
            });
        }
        let shape = match shape {
            TrapShape::Bathtub if smoothness == 0.0 => TrapShape::SquareWell,
            TrapShape::SquareWell | TrapShape::InvertedGaussian if smoothness != 0.0 => {
                return Err(Error::InvalidTrap {
                    name: "smoothness",
                    value: smoothness,
                    reason: "only the bathtub shape has a smoothness parameter",
                })
            }
            s => s,
        };
        Ok(TrapSpec {
            shape,
            depth,
            half_width,
            smoothness,
        })
    }

    pub fn bathtub(depth: f64, half_width: f64, smoothness: f64) -> Result<Self> {
        Self::new(TrapShape::Bathtub, depth, half_width, smoothness)
    }

    pub fn square_well(depth: f64, half_width: f64) -> Result<Self> {
        Self::new(TrapShape::SquareWell, depth, half_width, 0.0)
    }

    pub fn inverted_gaussian(depth: f64, width: f64) -> Result<Self> {
        Self::new(TrapShape::InvertedGaussian, depth, width, 0.0)
    }

    /// The member of the isospectral family `(U, σ̃)` with half-width `L`.
    ///
    /// `sigma_tilde` is ignored for shapes without a smoothness parameter.
    pub fn family_member(
        u: f64,
        sigma_tilde: f64,
        half_width: f64,
        shape: TrapShape,
    ) -> Result<Self> {
        if !u.is_finite() || u <= 0.0 {
            return Err(Error::InvalidTrap {
                name: "U",
                value: u,
                reason: "must be finite and positive",
            });
        }
        if !half_width.is_finite() || half_width <= 0.0 {
            return Err(Error::InvalidTrap {
                name: "half_width",
                value: half_width,
                reason: "must be finite and positive",
            });
        }
        if !sigma_tilde.is_finite() || sigma_tilde < 0.0 {
            return Err(Error::InvalidTrap {
                name: "sigma_tilde",
                value: sigma_tilde,
                reason: "must be finite and non-negative",
            });
        }
        let depth = u / (shape.u_factor() * half_width * half_width);
        let smoothness = match shape {
            TrapShape::Bathtub => sigma_tilde * half_width,
            _ => 0.0,
        };
        Self::new(shape, depth, half_width, smoothness)
    }

    pub fn shape(&self) -> TrapShape {
        self.shape
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    /// `L` for bathtub and square well, `δ` for the Gaussian.
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    /// `σ/L`.
    pub fn relative_smoothness(&self) -> f64 {
        self.smoothness / self.half_width
    }

    /// The isospectral label `U`.
    pub fn dimensionless_depth(&self) -> f64 {
        self.shape.u_factor() * self.depth * self.half_width * self.half_width
    }

    /// Potential energy at `x`; even in `x` and within `[-V, 0]`.
    pub fn potential(&self, x: f64) -> f64 {
        let v = self.depth;
        match self.shape {
            TrapShape::Bathtub => {
                // (1 - tanh u)/2 = 1/(1 + e^{2u}); no cancellation in the tails.
                let u = (x.abs() - self.half_width) / self.smoothness;
                -v / (1.0 + (2.0 * u).exp())
            }
            TrapShape::InvertedGaussian => {
                let d = self.half_width;
                -v * (-x * x / (2.0 * d * d)).exp()
            }
            TrapShape::SquareWell => {
                let ax = x.abs();
                if ax < self.half_width {
                    -v
                } else if ax == self.half_width {
                    -0.5 * v
                } else {
                    0.0
                }
            }
        }
    }

    /// Potential value assigned to the grid node at `x` with spacing `h`.
    ///
    /// Smooth shapes are point-sampled. The square well is averaged over the
    /// node's cell `[x - h/2, x + h/2]`, which keeps the finite-difference
    /// eigenvalues second-order accurate wherever the walls fall relative to
    /// the nodes.
    pub fn sampled_potential(&self, x: f64, h: f64) -> f64 {
        match self.shape {
            TrapShape::SquareWell => {
                let lo = x.abs() - 0.5 * h;
                let inside = ((self.half_width - lo) / h).clamp(0.0, 1.0);
                -self.depth * inside
            }
            _ => self.potential(x),
        }
    }

    /// Distance beyond which the potential is negligible on the scale of the
    /// bound-state threshold.
    pub fn reach(&self) -> f64 {
        match self.shape {
            TrapShape::Bathtub => self.half_width + 5.0 * self.smoothness,
            TrapShape::SquareWell => self.half_width,
            TrapShape::InvertedGaussian => 4.0 * self.half_width,
        }
    }
}
