//! Covers of a rectangular phase-space domain by overlapping axis-aligned
//! patches, and the overlap combinatorics up to quadruples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{PhasePoint, PhaseSpaceDomain};

/// Axis-aligned rectangle `[q_lo, q_hi] × [p_lo, p_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub q_lo: f64,
    pub q_hi: f64,
    pub p_lo: f64,
    pub p_hi: f64,
}

impl Rect {
    pub fn new(q_lo: f64, q_hi: f64, p_lo: f64, p_hi: f64) -> Self {
        Self {
            q_lo,
            q_hi,
            p_lo,
            p_hi,
        }
    }

    /// True when the open interior is nonempty.
    pub fn is_open_nonempty(&self) -> bool {
        self.q_lo < self.q_hi && self.p_lo < self.p_hi
    }

    /// Intersection of the open interiors, if nonempty.
    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let r = Rect::new(
            self.q_lo.max(other.q_lo),
            self.q_hi.min(other.q_hi),
            self.p_lo.max(other.p_lo),
            self.p_hi.min(other.p_hi),
        );
        r.is_open_nonempty().then_some(r)
    }

    pub fn contains(&self, pt: PhasePoint) -> bool {
        pt.q >= self.q_lo && pt.q <= self.q_hi && pt.p >= self.p_lo && pt.p <= self.p_hi
    }

    pub fn contains_strictly(&self, pt: PhasePoint) -> bool {
        pt.q > self.q_lo && pt.q < self.q_hi && pt.p > self.p_lo && pt.p < self.p_hi
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.q_lo >= self.q_lo
            && other.q_hi <= self.q_hi
            && other.p_lo >= self.p_lo
            && other.p_hi <= self.p_hi
    }

    pub fn center(&self) -> PhasePoint {
        PhasePoint::new(0.5 * (self.q_lo + self.q_hi), 0.5 * (self.p_lo + self.p_hi))
    }

    pub fn width_q(&self) -> f64 {
        self.q_hi - self.q_lo
    }

    pub fn width_p(&self) -> f64 {
        self.p_hi - self.p_lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub index: usize,
    pub rect: Rect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CechCover {
    pub domain: PhaseSpaceDomain,
    pub nx: usize,
    pub ny: usize,
    pub overlap_fraction: f64,
    pub patches: Vec<Patch>,
}

impl CechCover {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Indices of the patches whose closure contains `pt`.
    pub fn locate(&self, pt: PhasePoint) -> Vec<usize> {
        self.patches
            .iter()
            .filter(|patch| patch.rect.contains(pt))
            .map(|patch| patch.index)
            .collect()
    }
}

/// Tiles the domain into an `nx × ny` grid and pushes every interior side
/// outward by `overlap_fraction` of the tile width along that axis, so
/// neighbouring patches share a strip of width `2·overlap_fraction·tile`.
/// Patch `(ix, iy)` gets index `ix·ny + iy`.
pub fn build_cover(
    domain: PhaseSpaceDomain,
    nx: usize,
    ny: usize,
    overlap_fraction: f64,
) -> Result<CechCover> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidCover(format!(
            "nx and ny must be at least 1, got {nx} x {ny}"
        )));
    }
    if !(overlap_fraction > 0.0 && overlap_fraction < 0.5) {
        return Err(Error::InvalidCover(format!(
            "overlap_fraction must lie in (0, 0.5), got {overlap_fraction}"
        )));
    }
    let wq = domain.width_q() / nx as f64;
    let wp = domain.width_p() / ny as f64;
    let edge = |lo: f64, hi: f64, w: f64, n: usize, i: usize| -> (f64, f64) {
        let a = if i == 0 {
            lo
        } else {
            lo + i as f64 * w - overlap_fraction * w
        };
        let b = if i + 1 == n {
            hi
        } else {
            lo + (i + 1) as f64 * w + overlap_fraction * w
        };
        (a, b)
    };
    let mut patches = Vec::with_capacity(nx * ny);
    for ix in 0..nx {
        let (q_lo, q_hi) = edge(domain.q_min, domain.q_max, wq, nx, ix);
        for iy in 0..ny {
            let (p_lo, p_hi) = edge(domain.p_min, domain.p_max, wp, ny, iy);
            patches.push(Patch {
                index: ix * ny + iy,
                rect: Rect::new(q_lo, q_hi, p_lo, p_hi),
            });
        }
    }
    Ok(CechCover {
        domain,
        nx,
        ny,
        overlap_fraction,
        patches,
    })
}

/// Sorted index tuples of one arity with their common intersections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapIndex {
    pub arity: usize,
    pub entries: Vec<(Vec<usize>, Rect)>,
}

impl OverlapIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn tuples(&self) -> impl Iterator<Item = &[usize]> {
        self.entries.iter().map(|(t, _)| t.as_slice())
    }

    pub fn get(&self, tuple: &[usize]) -> Option<&Rect> {
        self.entries
            .binary_search_by(|(t, _)| t.as_slice().cmp(tuple))
            .ok()
            .map(|k| &self.entries[k].1)
    }
}

/// All ascending tuples of `arity` patches with a common open intersection.
/// Tuples are grown one index at a time from the previous level, so the
/// result is lexicographically sorted.
pub fn enumerate_overlaps(cover: &CechCover, arity: usize) -> Result<OverlapIndex> {
    if !(1..=4).contains(&arity) {
        return Err(Error::InvalidCover(format!(
            "arity must be 1..=4, got {arity}"
        )));
    }
    let mut level: Vec<(Vec<usize>, Rect)> = cover
        .patches
        .iter()
        .map(|patch| (vec![patch.index], patch.rect))
        .collect();
    for _ in 1..arity {
        let mut next = Vec::new();
        for (tuple, rect) in &level {
            let last = *tuple.last().expect("tuples are nonempty");
            for patch in &cover.patches[last + 1..] {
                if let Some(r) = rect.intersect(&patch.rect) {
                    let mut t = tuple.clone();
                    t.push(patch.index);
                    next.push((t, r));
                }
            }
        }
        level = next;
    }
    Ok(OverlapIndex {
        arity,
        entries: level,
    })
}

/// How representative points are drawn inside an overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleMode {
    Center,
    Seeded(u64),
}

/// Deterministic point strictly inside `rect`.
pub fn sample_point(rect: &Rect, mode: SampleMode) -> Result<PhasePoint> {
    if !rect.is_open_nonempty() {
        return Err(Error::EmptyRectangle);
    }
    match mode {
        SampleMode::Center => Ok(rect.center()),
        SampleMode::Seeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            loop {
                let u: f64 = rng.gen();
                let v: f64 = rng.gen();
                let pt = PhasePoint::new(
                    rect.q_lo + u * rect.width_q(),
                    rect.p_lo + v * rect.width_p(),
                );
                if rect.contains_strictly(pt) {
                    return Ok(pt);
                }
            }
        }
    }
}

/// Seed for the `k`-th entry of a table, mixed so neighbouring entries get
/// unrelated streams.
pub fn entry_seed(seed: u64, k: usize) -> u64 {
    let mut z = seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
