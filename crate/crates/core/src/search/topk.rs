use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::geometry::CoordVec;
use crate::templates::{Configuration, IsohedralType};

pub const DEFAULT_CAPACITY: usize = 10;

/// One solved triplet `(type, k, j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub ty: IsohedralType,
    pub k: Vec<usize>,
    /// One-based start point of the goal renumbering.
    pub j: usize,
    pub eval: f64,
    pub xi_star: Vec<f64>,
    pub u_star: CoordVec,
    pub simple: bool,
}

impl Candidate {
    pub fn configuration(&self) -> Configuration {
        Configuration::new(self.ty, self.k.clone(), self.u_star.n()).expect("candidate configuration is valid")
    }

    pub fn triplet(&self) -> (IsohedralType, Vec<usize>, usize) {
        (self.ty, self.k.clone(), self.j)
    }
}

/// Total order: eval, then type, then `k`, then `j`.
pub(crate) fn rank_cmp(eval_a: f64, ty_a: IsohedralType, k_a: &[usize], j_a: usize, b: &Candidate) -> Ordering {
    eval_a
        .total_cmp(&b.eval)
        .then(ty_a.index().cmp(&b.ty.index()))
        .then_with(|| k_a.cmp(&b.k))
        .then(j_a.cmp(&b.j))
}

/// Bounded ranking of the best candidates seen so far.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopK {
    capacity: usize,
    entries: Vec<Candidate>,
}

impl TopK {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "TopK capacity must be positive");
        Self {
            capacity,
            entries: Vec::with_capacity(capacity + 1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    /// Eval of the last retained entry when full, `+inf` otherwise.
    pub fn threshold(&self) -> f64 {
        if self.is_full() {
            self.entries[self.capacity - 1].eval
        } else {
            f64::INFINITY
        }
    }

    pub fn entries(&self) -> &[Candidate] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Candidate> {
        self.entries
    }

    /// Whether a candidate with this key would be retained.
    pub fn admits(&self, eval: f64, ty: IsohedralType, k: &[usize], j: usize) -> bool {
        match self.entries.get(self.capacity - 1) {
            Some(worst) if self.is_full() => rank_cmp(eval, ty, k, j, worst) == Ordering::Less,
            _ => true,
        }
    }

    /// Inserts in rank order; returns false if the candidate did not make the cut.
    pub fn insert(&mut self, cand: Candidate) -> bool {
        if !self.admits(cand.eval, cand.ty, &cand.k, cand.j) {
            return false;
        }
        let pos = self
            .entries
            .partition_point(|e| rank_cmp(cand.eval, cand.ty, &cand.k, cand.j, e) == Ordering::Greater);
        self.entries.insert(pos, cand);
        self.entries.truncate(self.capacity);
        true
    }

    pub fn merge(&mut self, other: TopK) {
        for c in other.entries {
            self.insert(c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(eval: f64, j: usize) -> Candidate {
        Candidate {
            ty: IsohedralType::IH47,
            k: vec![0, 0, 0],
            j,
            eval,
            xi_star: vec![],
            u_star: CoordVec::zeros(4),
            simple: true,
        }
    }

    #[test]
    fn keeps_best() {
        let mut t = TopK::new(3);
        assert_eq!(t.threshold(), f64::INFINITY);
        for (i, e) in [5.0, 1.0, 4.0, 3.0, 2.0].into_iter().enumerate() {
            t.insert(cand(e, i + 1));
        }
        let evals: Vec<f64> = t.entries().iter().map(|c| c.eval).collect();
        assert_eq!(evals, vec![1.0, 2.0, 3.0]);
        assert_eq!(t.threshold(), 3.0);
        assert!(!t.insert(cand(3.5, 9)));
    }

    #[test]
    fn ties_break_on_key() {
        let mut t = TopK::new(1);
        t.insert(cand(1.0, 3));
        assert!(t.insert(cand(1.0, 2)));
        assert!(!t.insert(cand(1.0, 4)));
        assert_eq!(t.entries()[0].j, 2);
    }
}
