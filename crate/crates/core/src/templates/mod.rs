//! Isohedral templates, point-assignment enumeration and tile-shape bases.

mod basis;
mod catalog;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use basis::{
    build_basis, build_constraints, build_difference_basis, validate_tile, BasisMatrix, ConstraintSystem,
    DifferenceBasis,
};

/// Deformation class of a tiling edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    /// Paired with a congruent partner edge.
    J,
    /// Point-symmetric about its midpoint.
    S,
    /// Mirror-symmetric about its perpendicular bisector.
    U,
    /// Straight.
    I,
}

/// Isometry class relating a J edge to its partner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairMap {
    Translate,
    Rotate60,
    Rotate90,
    Rotate120,
    /// Glide reflection along the x-axis: linear part `diag(1, -1)`.
    GlideX,
    /// Glide reflection along the y-axis: linear part `diag(-1, 1)`.
    GlideY,
}

const HALF_SQRT3: f64 = 0.866_025_403_784_438_6;

impl PairMap {
    /// Row-major 2x2 linear part.
    pub fn linear(self) -> [[f64; 2]; 2] {
        match self {
            PairMap::Translate => [[1.0, 0.0], [0.0, 1.0]],
            PairMap::Rotate60 => [[0.5, -HALF_SQRT3], [HALF_SQRT3, 0.5]],
            PairMap::Rotate90 => [[0.0, -1.0], [1.0, 0.0]],
            PairMap::Rotate120 => [[-0.5, -HALF_SQRT3], [HALF_SQRT3, -0.5]],
            PairMap::GlideX => [[1.0, 0.0], [0.0, -1.0]],
            PairMap::GlideY => [[-1.0, 0.0], [0.0, 1.0]],
        }
    }

    pub fn preserves_orientation(self) -> bool {
        !matches!(self, PairMap::GlideX | PairMap::GlideY)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeRole {
    Paired {
        partner: usize,
        map: PairMap,
        /// The lower-numbered edge of the pair.
        leader: bool,
    },
    Symmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeSpec {
    pub kind: EdgeKind,
    pub role: EdgeRole,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceMode {
    EuclideanOk,
    /// The glide axes fix the tile's orientation, so the goal must be
    /// compared up to rotation.
    ProcrustesRequired,
}

/// A group of tiling edges that share one point count `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeClass {
    Pair { a: usize, b: usize, map: PairMap },
    Symmetric { e: usize },
}

impl EdgeClass {
    pub fn multiplicity(self) -> usize {
        match self {
            EdgeClass::Pair { .. } => 2,
            EdgeClass::Symmetric { .. } => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IsohedralType {
    IH1,
    IH2,
    IH3,
    IH4,
    IH5,
    IH6,
    IH7,
    IH21,
    IH28,
    IH47,
}

impl IsohedralType {
    pub const ALL: [IsohedralType; 10] = [
        IsohedralType::IH1,
        IsohedralType::IH2,
        IsohedralType::IH3,
        IsohedralType::IH4,
        IsohedralType::IH5,
        IsohedralType::IH6,
        IsohedralType::IH7,
        IsohedralType::IH21,
        IsohedralType::IH28,
        IsohedralType::IH47,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IsohedralType::IH1 => "IH1",
            IsohedralType::IH2 => "IH2",
            IsohedralType::IH3 => "IH3",
            IsohedralType::IH4 => "IH4",
            IsohedralType::IH5 => "IH5",
            IsohedralType::IH6 => "IH6",
            IsohedralType::IH7 => "IH7",
            IsohedralType::IH21 => "IH21",
            IsohedralType::IH28 => "IH28",
            IsohedralType::IH47 => "IH47",
        }
    }

    /// Position in [`IsohedralType::ALL`].
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&t| t == self).unwrap()
    }

    pub fn edge_spec(self) -> &'static [EdgeSpec] {
        match self {
            IsohedralType::IH1 => &catalog::IH1,
            IsohedralType::IH2 => &catalog::IH2,
            IsohedralType::IH3 => &catalog::IH3,
            IsohedralType::IH4 => &catalog::IH4,
            IsohedralType::IH5 => &catalog::IH5,
            IsohedralType::IH6 => &catalog::IH6,
            IsohedralType::IH7 => &catalog::IH7,
            IsohedralType::IH21 => &catalog::IH21,
            IsohedralType::IH28 => &catalog::IH28,
            IsohedralType::IH47 => &catalog::IH47,
        }
    }

    /// Number of tiling vertices, which is also the number of tiling edges.
    pub fn vertex_count(self) -> usize {
        self.edge_spec().len()
    }

    pub fn distance_mode(self) -> DistanceMode {
        let glide = self.edge_spec().iter().any(|e| {
            matches!(e.role, EdgeRole::Paired { map, .. } if !map.preserves_orientation())
        });
        if glide {
            DistanceMode::ProcrustesRequired
        } else {
            DistanceMode::EuclideanOk
        }
    }

    pub fn requires_procrustes(self) -> bool {
        self.distance_mode() == DistanceMode::ProcrustesRequired
    }

    /// Edge classes in order of first appearance.
    pub fn classes(self) -> Vec<EdgeClass> {
        self.edge_spec()
            .iter()
            .enumerate()
            .filter_map(|(e, spec)| match spec.role {
                EdgeRole::Paired {
                    partner,
                    map,
                    leader: true,
                } => Some(EdgeClass::Pair { a: e, b: partner, map }),
                EdgeRole::Paired { leader: false, .. } => None,
                EdgeRole::Symmetric => Some(EdgeClass::Symmetric { e }),
            })
            .collect()
    }
}

impl fmt::Display for IsohedralType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IsohedralType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        let key = if up.starts_with("IH") { up } else { format!("IH{up}") };
        IsohedralType::ALL
            .into_iter()
            .find(|t| t.name() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown isohedral type {s:?}")))
    }
}

/// An isohedral type with a point count per edge class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    ty: IsohedralType,
    k: Vec<usize>,
    n: usize,
}

impl Configuration {
    pub fn new(ty: IsohedralType, k: Vec<usize>, n: usize) -> Result<Self> {
        let classes = ty.classes();
        if k.len() != classes.len() {
            return Err(Error::DimensionMismatch {
                expected: classes.len(),
                found: k.len(),
            });
        }
        let used: usize = classes.iter().zip(&k).map(|(c, &k)| c.multiplicity() * k).sum();
        if used + ty.vertex_count() != n {
            return Err(Error::InvalidParameter(format!(
                "{ty} assignment {k:?} places {} points, expected {n}",
                used + ty.vertex_count()
            )));
        }
        Ok(Self { ty, k, n })
    }

    pub fn ty(&self) -> IsohedralType {
        self.ty
    }

    /// Points per edge class.
    pub fn k(&self) -> &[usize] {
        &self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Interior point count of every tiling edge.
    pub fn edge_counts(&self) -> Vec<usize> {
        let mut out = vec![0; self.ty.vertex_count()];
        for (class, &k) in self.ty.classes().iter().zip(&self.k) {
            match *class {
                EdgeClass::Pair { a, b, .. } => {
                    out[a] = k;
                    out[b] = k;
                }
                EdgeClass::Symmetric { e } => out[e] = k,
            }
        }
        out
    }

    /// Zero-based tiling-vertex indices followed by the sentinel `n`.
    pub fn tiling_vertex_indices(&self) -> Vec<usize> {
        let mut h = Vec::with_capacity(self.ty.vertex_count() + 1);
        h.push(0);
        for k in self.edge_counts() {
            h.push(h.last().unwrap() + k + 1);
        }
        h
    }
}

pub fn tiling_vertex_indices(c: &Configuration) -> Vec<usize> {
    c.tiling_vertex_indices()
}

/// Lexicographic stream over every point assignment of a type.
#[derive(Clone, Debug)]
pub struct Configurations {
    ty: IsohedralType,
    n: usize,
    mult: Vec<usize>,
    budget: usize,
    state: Option<Vec<usize>>,
}

impl Configurations {
    fn used(&self, free: &[usize]) -> usize {
        free.iter().zip(&self.mult).map(|(k, m)| k * m).sum()
    }

    fn advance(&mut self) {
        let Some(state) = self.state.as_mut() else { return };
        let mult = &self.mult;
        let budget = self.budget;
        let mut pos = state.len();
        loop {
            if pos == 0 {
                self.state = None;
                return;
            }
            pos -= 1;
            state[pos] += 1;
            let used: usize = state.iter().zip(mult).map(|(k, m)| k * m).sum();
            if used <= budget {
                return;
            }
            state[pos] = 0;
        }
    }
}

impl Iterator for Configurations {
    type Item = Configuration;

    fn next(&mut self) -> Option<Configuration> {
        let last_mult = *self.mult.last().unwrap();
        loop {
            let free = self.state.clone()?;
            let used = self.used(&free[..]);
            self.advance();
            let rest = self.budget - used;
            if rest % last_mult == 0 {
                let mut k = free;
                k.push(rest / last_mult);
                return Some(Configuration {
                    ty: self.ty,
                    k,
                    n: self.n,
                });
            }
        }
    }
}

pub fn enumerate_configurations(ty: IsohedralType, n: usize) -> Result<Configurations> {
    let v = ty.vertex_count();
    if n < v {
        return Err(Error::EmptyConfigurationSet {
            ty: ty.name(),
            n,
            min: v,
        });
    }
    let mult: Vec<usize> = ty.classes().iter().map(|c| c.multiplicity()).collect();
    // The odometer covers every class but the last, which takes the remainder.
    let free = mult.len() - 1;
    Ok(Configurations {
        ty,
        n,
        mult,
        budget: n - v,
        state: Some(vec![0; free]),
    })
}

/// `|K_i|` for one type; zero when `n` is below the vertex count.
pub fn count_configurations(ty: IsohedralType, n: usize) -> usize {
    enumerate_configurations(ty, n).map(|it| it.count()).unwrap_or(0)
}
