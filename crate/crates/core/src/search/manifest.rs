use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{stack_coords, unstack_coords, Point2};
use crate::goal::GoalPolygon;
use crate::templates::{Configuration, IsohedralType};

use super::stats::SearchStats;
use super::topk::{Candidate, TopK};
use super::{Mode, SearchParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestParams {
    pub gamma: f64,
    pub alpha: f64,
    pub topk: usize,
    pub types: Vec<IsohedralType>,
    pub complete: bool,
    pub workers: usize,
    #[serde(default)]
    pub gad2_crossing: bool,
}

impl From<&SearchParams> for ManifestParams {
    fn from(p: &SearchParams) -> Self {
        Self {
            gamma: p.gamma,
            alpha: p.alpha,
            topk: p.topk,
            types: p.types.clone(),
            complete: p.complete,
            workers: p.workers,
            gad2_crossing: p.gad2_crossing,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestCandidate {
    #[serde(rename = "type")]
    pub ty: IsohedralType,
    pub k: Vec<usize>,
    pub j: usize,
    pub eval: f64,
    pub points: Vec<[f64; 2]>,
}

impl ManifestCandidate {
    pub fn from_candidate(c: &Candidate) -> Self {
        Self {
            ty: c.ty,
            k: c.k.clone(),
            j: c.j,
            eval: c.eval,
            points: unstack_coords(&c.u_star).iter().map(|p| [p.x, p.y]).collect(),
        }
    }

    /// Rebuilds the candidate; the basis coefficients are not stored and come
    /// back empty.
    pub fn to_candidate(&self) -> Result<Candidate> {
        let pts: Vec<Point2> = self.points.iter().map(|&[x, y]| Point2::new(x, y)).collect();
        let u_star = stack_coords(&pts)?;
        Configuration::new(self.ty, self.k.clone(), pts.len())?;
        Ok(Candidate {
            ty: self.ty,
            k: self.k.clone(),
            j: self.j,
            eval: self.eval,
            xi_star: Vec::new(),
            u_star,
            simple: true,
        })
    }
}

/// JSON record of one search run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub mode: Mode,
    pub params: ManifestParams,
    pub stats: SearchStats,
    pub goal: Vec<[f64; 2]>,
    pub candidates: Vec<ManifestCandidate>,
}

impl Manifest {
    pub fn new(mode: Mode, params: &SearchParams, stats: &SearchStats, goal: &GoalPolygon, top: &TopK) -> Self {
        Self {
            mode,
            params: params.into(),
            stats: stats.clone(),
            goal: goal.points().iter().map(|p| [p.x, p.y]).collect(),
            candidates: top.entries().iter().map(ManifestCandidate::from_candidate).collect(),
        }
    }

    pub fn goal_polygon(&self) -> Result<GoalPolygon> {
        GoalPolygon::from_points(self.goal.iter().map(|&[x, y]| Point2::new(x, y)).collect())
    }

    pub fn candidates(&self) -> Result<Vec<Candidate>> {
        self.candidates.iter().map(ManifestCandidate::to_candidate).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<manifest>".into(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }
}
