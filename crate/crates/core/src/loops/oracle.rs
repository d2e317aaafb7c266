//! Upper-bound oracle for `ℓ_g(Γ)`: shortest lattice path in the universal
//! cover from a base node to its `Γ`-translate.
//!
//! The 16-neighbour stencil uses offsets `(±1, 0)`, `(0, ±1)`, `(±1, ±1)`,
//! `(±1, ±2)`, `(±2, ±1)`. Edge weights integrate the metric along each straight
//! edge (composite Simpson), so every lattice path length is the length of an
//! actual closed curve in the class and the result bounds `ℓ_g` from above.
//! The widest angular gap between stencil directions is `atan(1/2)`, which
//! caps the anisotropy bias at `1/cos(atan(1/2)/2) − 1 ≈ 2.75%`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{LoopSurface, WindingClass};
use crate::error::{Error, Result};

/// Largest lattice the oracle builds.
pub const LATTICE_NODE_CAP: usize = 4_000_000;
/// Worst-case relative excess of a lattice path over the straight segment.
pub const STENCIL_BIAS: f64 = 0.0275;

const OFFSETS: [(i64, i64); 16] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
    (1, 2),
    (1, -2),
    (-1, 2),
    (-1, -2),
    (2, 1),
    (2, -1),
    (-2, 1),
    (-2, -1),
];

/// Base nodes tried along the transversal.
const BASES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub length: f64,
    pub nodes: usize,
    /// Path vertices in universal-cover coordinates.
    pub path: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn edge_length(s: &LoopSurface, a: [f64; 2], d: [f64; 2]) -> f64 {
    // composite Simpson on 4 intervals
    const W: [f64; 5] = [1.0, 4.0, 2.0, 4.0, 1.0];
    let mut acc = 0.0;
    for (k, w) in W.iter().enumerate() {
        let t = k as f64 / 4.0;
        acc += w * s.norm(a[0] + t * d[0], a[1] + t * d[1], d);
    }
    acc / 12.0
}

/// Shortest lattice loop in class `w`. The lattice has `refinement` nodes per
/// period in each direction and spans the box between the base and its
/// translate, padded by `copies` periods on every side.
pub fn dijkstra_cover_oracle(w: WindingClass, s: &LoopSurface, copies: usize, refinement: usize) -> Result<OracleResult> {
    if w.is_trivial() {
        return Err(Error::InvalidLoop("trivial winding class".into()));
    }
    if refinement < 4 {
        return Err(Error::InvalidGrid(format!("oracle refinement {refinement} below 4")));
    }
    let [p, q] = w.vector();
    let r = refinement as i64;
    let c = copies as i64;
    let (i0, i1) = (p.min(0) * r - c * r, p.max(0) * r + c * r);
    let (j0, j1) = (q.min(0) * r - c * r, q.max(0) * r + c * r);
    let (wi, wj) = ((i1 - i0 + 1) as usize, (j1 - j0 + 1) as usize);
    let nodes = wi * wj;
    if nodes > LATTICE_NODE_CAP {
        let scale = (LATTICE_NODE_CAP as f64 / nodes as f64).sqrt();
        return Err(Error::LatticeTooLarge {
            nodes,
            cap: LATTICE_NODE_CAP,
            suggested: ((refinement as f64 * scale).floor() as usize).max(4),
        });
    }
    let per = s.periods();
    let (hx, hy) = (per[0] / refinement as f64, per[1] / refinement as f64);
    // weights depend only on the node modulo the period
    let mut weights = vec![0.0; refinement * refinement * OFFSETS.len()];
    for b in 0..refinement {
        for a in 0..refinement {
            let x = [a as f64 * hx, b as f64 * hy];
            for (o, &(di, dj)) in OFFSETS.iter().enumerate() {
                weights[(b * refinement + a) * OFFSETS.len() + o] =
                    edge_length(s, x, [di as f64 * hx, dj as f64 * hy]);
            }
        }
    }
    let weight = |i: i64, j: i64, o: usize| {
        let a = i.rem_euclid(r) as usize;
        let b = j.rem_euclid(r) as usize;
        weights[(b * refinement + a) * OFFSETS.len() + o]
    };
    let index = |i: i64, j: i64| ((j - j0) as usize) * wi + (i - i0) as usize;

    let mut best = f64::INFINITY;
    let mut best_path = Vec::new();
    let mut dist = vec![f64::INFINITY; nodes];
    let mut prev = vec![usize::MAX; nodes];
    let mut heap = BinaryHeap::new();
    for k in 0..BASES.min(refinement) {
        let off = (k * refinement / BASES.min(refinement)) as i64;
        let (bi, bj) = if p != 0 { (0, off) } else { (off, 0) };
        let (ti, tj) = (bi + p * r, bj + q * r);
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        prev.iter_mut().for_each(|v| *v = usize::MAX);
        heap.clear();
        let start = index(bi, bj);
        let target = index(ti, tj);
        dist[start] = 0.0;
        heap.push(Entry(0.0, start));
        while let Some(Entry(d, u)) = heap.pop() {
            if d > dist[u] || d >= best {
                if d >= best {
                    break;
                }
                continue;
            }
            if u == target {
                break;
            }
            let i = (u % wi) as i64 + i0;
            let j = (u / wi) as i64 + j0;
            for (o, &(di, dj)) in OFFSETS.iter().enumerate() {
                let (ni, nj) = (i + di, j + dj);
                if ni < i0 || ni > i1 || nj < j0 || nj > j1 {
                    continue;
                }
                let v = index(ni, nj);
                let nd = d + weight(i, j, o);
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(Entry(nd, v));
                }
            }
        }
        if dist[target] < best {
            best = dist[target];
            let mut path = Vec::new();
            let mut v = target;
            while v != usize::MAX {
                let i = (v % wi) as i64 + i0;
                let j = (v / wi) as i64 + j0;
                path.push([i as f64 * hx, j as f64 * hy]);
                v = prev[v];
            }
            path.reverse();
            best_path = path;
        }
    }
    Ok(OracleResult {
        length: best,
        nodes,
        path: best_path,
    })
}
