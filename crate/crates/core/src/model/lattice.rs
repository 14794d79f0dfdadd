//! Lattice sites, spin labels, boxes and the graph metric on two glued copies of Z^d.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// A point of Z^d.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(pub Vec<i64>);

impl Site {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Site(coords.into())
    }

    pub fn origin(dim: usize) -> Self {
        Site(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// ℓ¹ norm |x| = Σ|x_j|.
    pub fn l1_norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).sum()
    }

    /// ℓ¹ distance. Panics on dimension mismatch; use [`Site::try_l1_dist`] when
    /// the dimensions are not known to agree.
    pub fn l1_dist(&self, other: &Site) -> u64 {
        self.try_l1_dist(other).expect("site dimension mismatch")
    }

    pub fn try_l1_dist(&self, other: &Site) -> Result<u64, ModelError> {
        if self.dim() != other.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).unsigned_abs())
            .sum())
    }

    pub fn linf_dist(&self, other: &Site) -> u64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn scaled(&self, factor: i64) -> Site {
        Site(self.0.iter().map(|c| c * factor).collect())
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn sign(self) -> i8 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Result<Self, ModelError> {
        match sign {
            1 => Ok(Spin::Up),
            -1 => Ok(Spin::Down),
            other => Err(ModelError::InvalidSpin(other)),
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    /// Block offset in the spin-site basis: spin up occupies the first block.
    pub(crate) fn block(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }
}

/// A vertex (x, i) of the doubled lattice.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpinSite {
    pub x: Site,
    pub spin: Spin,
}

impl SpinSite {
    pub fn new(x: Site, spin: Spin) -> Self {
        SpinSite { x, spin }
    }

    pub fn up(coords: impl Into<Vec<i64>>) -> Self {
        SpinSite::new(Site::new(coords), Spin::Up)
    }

    pub fn down(coords: impl Into<Vec<i64>>) -> Self {
        SpinSite::new(Site::new(coords), Spin::Down)
    }
}

/// Graph distance on two copies of Z^d joined by a single edge between the origins.
///
/// Equal spins use the ℓ¹ distance; opposite spins must travel through the origin,
/// giving `1 + |x| + |y|`.
pub fn graph_metric(a: &SpinSite, b: &SpinSite) -> Result<u64, ModelError> {
    if a.spin == b.spin {
        a.x.try_l1_dist(&b.x)
    } else {
        if a.x.dim() != b.x.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: a.x.dim(),
                found: b.x.dim(),
            });
        }
        Ok(1 + a.x.l1_norm() + b.x.l1_norm())
    }
}

/// The ℓ^∞ cube Λ_L(u) = {x : |x − u|_∞ ≤ L}, enumerated lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    center: Site,
    radius: u64,
}

impl LatticeBox {
    pub fn new(center: Site, radius: u64) -> Result<Self, ModelError> {
        if center.dim() == 0 {
            return Err(ModelError::ZeroDimension);
        }
        Ok(LatticeBox { center, radius })
    }

    /// Box of radius `radius` centered at the origin of Z^dim.
    pub fn centered(dim: usize, radius: u64) -> Result<Self, ModelError> {
        LatticeBox::new(Site::origin(dim), radius)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn center(&self) -> &Site {
        &self.center
    }

    pub fn radius(&self) -> u64 {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    /// Number of sites, (2L+1)^d.
    pub fn len(&self) -> usize {
        self.side().pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, x: &Site) -> bool {
        x.dim() == self.dim() && self.center.linf_dist(x) <= self.radius
    }

    /// Position of `x` in the lexicographic enumeration.
    pub fn index_of(&self, x: &Site) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let side = self.side() as i64;
        let mut idx: i64 = 0;
        for (c, u) in x.0.iter().zip(&self.center.0) {
            idx = idx * side + (c - u + self.radius as i64);
        }
        Some(idx as usize)
    }

    pub fn site_at(&self, index: usize) -> Site {
        let side = self.side();
        let mut rem = index;
        let mut coords = vec![0i64; self.dim()];
        for k in (0..self.dim()).rev() {
            let offset = (rem % side) as i64;
            rem /= side;
            coords[k] = self.center.0[k] - self.radius as i64 + offset;
        }
        Site(coords)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |i| self.site_at(i))
    }

    /// Λ_{L+ℓ}(u) for ℓ ≥ −L.
    pub fn fattened(&self, ell: i64) -> Result<LatticeBox, ModelError> {
        let r = self.radius as i64 + ell;
        if r < 0 {
            return Err(ModelError::NegativeRadius(r));
        }
        LatticeBox::new(self.center.clone(), r as u64)
    }

    /// Same center, radius replaced.
    pub fn with_radius(&self, radius: u64) -> LatticeBox {
        LatticeBox {
            center: self.center.clone(),
            radius,
        }
    }

    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        other.dim() == self.dim()
            && self.center.linf_dist(&other.center) + other.radius <= self.radius
    }

    pub fn intersects(&self, other: &LatticeBox) -> bool {
        other.dim() == self.dim()
            && self
                .center
                .0
                .iter()
                .zip(&other.center.0)
                .all(|(a, b)| (a - b).unsigned_abs() <= self.radius + other.radius)
    }

    /// Nearest-neighbour pairs (i < j in enumeration order) fully inside the box.
    pub fn neighbor_pairs(&self) -> Vec<(usize, usize)> {
        let side = self.side();
        let dim = self.dim();
        let mut pairs = Vec::with_capacity(dim * self.len());
        for i in 0..self.len() {
            let mut stride = 1usize;
            let mut rem = i;
            for _ in 0..dim {
                // coordinate in this axis, counted from the last axis backwards
                let digit = rem % side;
                rem /= side;
                if digit + 1 < side {
                    pairs.push((i, i + stride));
                }
                stride *= side;
            }
        }
        pairs.sort_unstable();
        pairs
    }
}

impl fmt::Display for LatticeBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Λ_{}{}", self.radius, self.center)
    }
}
