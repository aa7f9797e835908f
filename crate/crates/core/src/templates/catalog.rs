//! Per-type tiling edge specifications.
//!
//! Edges are numbered from 0 clockwise starting at the first tiling vertex.
//! A paired edge `a` with partner `b` is congruent to `b` under the linear part
//! of its [`PairMap`]:
//!
//! * orientation preserving maps (translation, rotation) traverse `b` backwards,
//!   `u[b_end - i] - u[b_end] = M (u[a_start + i] - u[a_start])`;
//! * glide reflections traverse both edges forwards,
//!   `u[b_start + i] - u[b_start] = F (u[a_start + i] - u[a_start])`.
//!
//! Rotation angles are counter-clockwise in the y-up frame.

use super::{EdgeKind, EdgeRole, EdgeSpec, PairMap};

const fn pair(partner: usize, map: PairMap, leader: bool) -> EdgeSpec {
    EdgeSpec {
        kind: EdgeKind::J,
        role: EdgeRole::Paired {
            partner,
            map,
            leader,
        },
    }
}

const S: EdgeSpec = EdgeSpec {
    kind: EdgeKind::S,
    role: EdgeRole::Symmetric,
};

use PairMap::{GlideX, GlideY, Rotate120, Rotate60, Rotate90, Translate};

// TTTTTT
pub(super) const IH1: [EdgeSpec; 6] = [
    pair(3, Translate, true),
    pair(4, Translate, true),
    pair(5, Translate, true),
    pair(0, Translate, false),
    pair(1, Translate, false),
    pair(2, Translate, false),
];

// TG1G1TG2G2
pub(super) const IH2: [EdgeSpec; 6] = [
    pair(3, Translate, true),
    pair(2, GlideX, true),
    pair(1, GlideX, false),
    pair(0, Translate, false),
    pair(5, GlideX, true),
    pair(4, GlideX, false),
];

// TG1G2TG2G1
pub(super) const IH3: [EdgeSpec; 6] = [
    pair(3, Translate, true),
    pair(5, GlideY, true),
    pair(4, GlideY, true),
    pair(0, Translate, false),
    pair(2, GlideY, false),
    pair(1, GlideY, false),
];

// TCCTCC
pub(super) const IH4: [EdgeSpec; 6] = [
    pair(3, Translate, true),
    S,
    S,
    pair(0, Translate, false),
    S,
    S,
];

// TCCTGG
pub(super) const IH5: [EdgeSpec; 6] = [
    pair(3, Translate, true),
    S,
    S,
    pair(0, Translate, false),
    pair(5, GlideX, true),
    pair(4, GlideX, false),
];

// CG1CG2G1G2
pub(super) const IH6: [EdgeSpec; 6] = [
    S,
    pair(4, GlideX, true),
    S,
    pair(5, GlideY, true),
    pair(1, GlideX, false),
    pair(3, GlideY, false),
];

// C3C3C3C3C3C3
pub(super) const IH7: [EdgeSpec; 6] = [
    pair(1, Rotate120, true),
    pair(0, Rotate120, false),
    pair(3, Rotate120, true),
    pair(2, Rotate120, false),
    pair(5, Rotate120, true),
    pair(4, Rotate120, false),
];

// CC3C3C6C6
pub(super) const IH21: [EdgeSpec; 5] = [
    S,
    pair(2, Rotate120, true),
    pair(1, Rotate120, false),
    pair(4, Rotate60, true),
    pair(3, Rotate60, false),
];

// CC4C4C4C4
pub(super) const IH28: [EdgeSpec; 5] = [
    S,
    pair(2, Rotate90, true),
    pair(1, Rotate90, false),
    pair(4, Rotate90, true),
    pair(3, Rotate90, false),
];

// TCTC
pub(super) const IH47: [EdgeSpec; 4] = [
    pair(2, Translate, true),
    S,
    pair(0, Translate, false),
    S,
];
