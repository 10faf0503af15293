//! Periodic scatterer configurations.
//!
//! A [`BilliardTable`] is a finite list of disks inside the unit cell,
//! repeated over every translate by `ℤ²`. Construction validates that all
//! translates have pairwise disjoint closures and classifies the horizon
//! with an exact corridor-coverage test.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use thiserror::Error;

/// Absolute tolerance when comparing projected interval endpoints.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Most disks a table may hold; the site key reserves 8 bits for the index.
pub const MAX_DISKS: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("table has no disks")]
    EmptyTable,
    #[error("table has {count} disks, at most {MAX_DISKS} are supported")]
    TooManyDisks { count: usize },
    #[error("disk {index}: {reason}")]
    InvalidDisk { index: usize, reason: &'static str },
    /// Indices are 1-based, `offset` is the lattice translate of disk `j`.
    #[error("disks {i} and {j} overlap at translate ({}, {}) (gap {gap:.6})", offset[0], offset[1])]
    Overlap {
        i: usize,
        j: usize,
        offset: [i64; 2],
        gap: f64,
    },
}

/// A circular scatterer in cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Disk {
    pub const fn new(center: [f64; 2], radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * PI * self.radius
    }

    fn check(&self, index: usize) -> Result<(), GeometryError> {
        let bad = |reason| GeometryError::InvalidDisk { index, reason };
        if !(self.center[0].is_finite() && self.center[1].is_finite() && self.radius.is_finite()) {
            return Err(bad("non-finite value"));
        }
        if !(self.radius > 0.0 && self.radius < 0.5) {
            return Err(bad("radius must lie in (0, 0.5)"));
        }
        if self.center.iter().any(|&c| !(0.0..1.0).contains(&c)) {
            return Err(bad("center must lie in [0, 1)^2"));
        }
        Ok(())
    }
}

/// An open strip avoiding every obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corridor {
    /// Coprime lattice direction `(p, q)`.
    pub direction: [i64; 2],
    pub gap_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHorizonReport {
    pub finite: bool,
    /// Certified upper bound on any free flight; present only when `finite`
    /// (and absent if certification fails, see [`free_path_bound`]).
    pub max_free_path_bound: Option<f64>,
    pub open_corridor: Option<Corridor>,
    pub directions_checked: usize,
}

/// A disk translate that meets the closed unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Translate {
    pub disk: usize,
    pub offset: [i64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct BilliardTable {
    disks: Vec<Disk>,
    min_gap: f64,
    horizon: FiniteHorizonReport,
    cell_candidates: Vec<Translate>,
}

impl BilliardTable {
    pub fn new(disks: Vec<Disk>) -> Result<Self, GeometryError> {
        if disks.is_empty() {
            return Err(GeometryError::EmptyTable);
        }
        if disks.len() > MAX_DISKS {
            return Err(GeometryError::TooManyDisks { count: disks.len() });
        }
        for (i, d) in disks.iter().enumerate() {
            d.check(i + 1)?;
        }
        let min_gap = validate_disjoint(&disks)?;
        let horizon = corridor_check(&disks);
        let cell_candidates = unit_cell_candidates(&disks);
        Ok(Self {
            disks,
            min_gap,
            horizon,
            cell_candidates,
        })
    }

    /// Disks `{(0,0), r=0.4}` and `{(0.5,0.5), r=0.3}`: finite horizon with
    /// a narrow but positive gap along the diagonal.
    pub fn canonical() -> Self {
        Self::new(alloc::vec![
            Disk::new([0.0, 0.0], 0.4),
            Disk::new([0.5, 0.5], 0.3)
        ])
        .expect("canonical table is valid")
    }

    pub fn disks(&self) -> &[Disk] {
        &self.disks
    }

    pub fn len(&self) -> usize {
        self.disks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disks.is_empty()
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn horizon(&self) -> &FiniteHorizonReport {
        &self.horizon
    }

    pub fn max_radius(&self) -> f64 {
        self.disks.iter().map(|d| d.radius).fold(0.0, f64::max)
    }

    pub fn total_perimeter(&self) -> f64 {
        self.disks.iter().map(Disk::perimeter).sum()
    }

    /// `Σ|∂O_i|² / (Σ|∂O_i|)²`, the obstacle-weight factor in `c₀`.
    pub fn perimeter_factor(&self) -> f64 {
        let total = self.total_perimeter();
        let sq: f64 = self.disks.iter().map(|d| d.perimeter() * d.perimeter()).sum();
        sq / (total * total)
    }

    pub(crate) fn cell_candidates(&self) -> &[Translate] {
        &self.cell_candidates
    }
}

/// Minimum clearance between distinct disk translates.
///
/// Only translates with `|ℓ|_∞ ≤ 1` are inspected: centers lie in `[0,1)²`
/// and radii are below `1/2`, so farther copies are at least one unit apart.
pub fn validate_disjoint(disks: &[Disk]) -> Result<f64, GeometryError> {
    if disks.is_empty() {
        return Err(GeometryError::EmptyTable);
    }
    let mut worst: Option<(f64, usize, usize, [i64; 2])> = None;
    for (i, a) in disks.iter().enumerate() {
        for (j, b) in disks.iter().enumerate().skip(i) {
            for lx in -1..=1i64 {
                for ly in -1..=1i64 {
                    if i == j && lx == 0 && ly == 0 {
                        continue;
                    }
                    let dx = a.center[0] - b.center[0] - lx as f64;
                    let dy = a.center[1] - b.center[1] - ly as f64;
                    let gap = libm::hypot(dx, dy) - (a.radius + b.radius);
                    if worst.is_none_or(|w| gap < w.0) {
                        worst = Some((gap, i, j, [lx, ly]));
                    }
                }
            }
        }
    }
    let (gap, i, j, offset) = worst.expect("at least one pair is inspected");
    if gap <= 0.0 {
        // the offending translate of disk j is c_j + ℓ
        return Err(GeometryError::Overlap {
            i: i + 1,
            j: j + 1,
            offset,
            gap,
        });
    }
    Ok(gap)
}

/// Coprime directions `(p, q)` with `p² + q² < limit`, one per line
/// orientation, ordered by length.
fn lattice_directions(limit: f64) -> Vec<[i64; 2]> {
    let max = libm::ceil(libm::sqrt(limit)) as i64;
    let mut dirs = Vec::new();
    for p in 0..=max {
        for q in -max..=max {
            if p == 0 && q <= 0 {
                continue;
            }
            if ((p * p + q * q) as f64) >= limit || gcd(p, q.abs()) != 1 {
                continue;
            }
            dirs.push([p, q]);
        }
    }
    dirs.sort_by(|a, b| {
        let na = a[0] * a[0] + a[1] * a[1];
        let nb = b[0] * b[0] + b[1] * b[1];
        na.cmp(&nb).then(b[0].cmp(&a[0])).then(b[1].cmp(&a[1]))
    });
    dirs
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Widest uncovered arc of the circle of length `period` left by the
/// intervals `[m_k - r_k, m_k + r_k]`; negative when coverage overlaps.
fn widest_gap(period: f64, intervals: &mut [(f64, f64)]) -> f64 {
    if intervals.iter().any(|&(_, w)| w >= period) {
        return -period;
    }
    for iv in intervals.iter_mut() {
        iv.0 -= libm::floor(iv.0 / period) * period;
    }
    // unroll the circle: copies one period either side cover every wrap
    let mut line: Vec<(f64, f64)> = Vec::with_capacity(3 * intervals.len());
    for shift in [-period, 0.0, period] {
        line.extend(intervals.iter().map(|&(s, w)| (s + shift, w)));
    }
    line.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal));
    let mut reach = line[0].0 + line[0].1;
    let mut widest = f64::NEG_INFINITY;
    for &(start, width) in &line[1..] {
        // each gap on the circle ends at exactly one start in (0, period]
        if start > 0.0 && start <= period {
            widest = widest.max(start - reach);
        }
        reach = reach.max(start + width);
    }
    widest
}

/// Decide finite horizon by checking every rational direction a corridor
/// could follow.
///
/// A corridor in direction `(p, q)` exists iff the projections of all
/// disk translates onto the normal `(-q, p)/|(p,q)|` leave part of one
/// period `1/|(p,q)|` uncovered. Directions with `|(p,q)| ≥ 1/(2 r_max)`
/// are covered by the largest disk alone. Touching intervals (within
/// [`ENDPOINT_TOL`]) count as a gap.
pub fn corridor_check(disks: &[Disk]) -> FiniteHorizonReport {
    let r_max = disks.iter().map(|d| d.radius).fold(0.0, f64::max);
    let limit = {
        let k = 1.0 / (2.0 * r_max);
        k * k
    };
    let dirs = lattice_directions(limit);
    let mut open: Option<Corridor> = None;
    let mut intervals = Vec::with_capacity(disks.len());
    for &[p, q] in &dirs {
        let len = libm::sqrt((p * p + q * q) as f64);
        let period = 1.0 / len;
        let normal = [-(q as f64) / len, p as f64 / len];
        intervals.clear();
        intervals.extend(disks.iter().map(|d| {
            let m = d.center[0] * normal[0] + d.center[1] * normal[1];
            (m - d.radius, 2.0 * d.radius)
        }));
        let gap = widest_gap(period, &mut intervals);
        if gap > -ENDPOINT_TOL {
            let corridor = Corridor {
                direction: [p, q],
                gap_width: gap.max(0.0),
            };
            if open.is_none_or(|c| corridor.gap_width > c.gap_width) {
                open = Some(corridor);
            }
        }
    }
    let finite = open.is_none();
    FiniteHorizonReport {
        finite,
        max_free_path_bound: if finite { free_path_bound(disks) } else { None },
        open_corridor: open,
        directions_checked: dirs.len(),
    }
}

/// Longest direction searched by [`free_path_bound`].
const BOUND_MAX_LENGTH: f64 = 16384.0;
/// Fractions of a direction's coverage depth tried as drift allowance.
const BOUND_DEPTH_FRACTIONS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 0.95];

/// `(x, y)` with `a x + b y = 1` for coprime `a`, `b`.
fn bezout(a: i64, b: i64) -> (i64, i64) {
    let (mut r0, mut r1, mut x0, mut x1, mut y0, mut y1) = (a, b, 1, 0, 0, 1);
    while r1 != 0 {
        let k = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - k * r1);
        (x0, x1) = (x1, x0 - k * x1);
        (y0, y1) = (y1, y0 - k * y1);
    }
    if r0 < 0 {
        (-x0, -y0)
    } else {
        (x0, y0)
    }
}

/// Lines of translates seen from direction `(p, q)`: every translate of a
/// disk sits on a line parallel to the direction at normal offset
/// `h + m/L`, with along-line position `u + m·shift (mod L)`.
struct DirectionFrame {
    angle: f64,
    len: f64,
    period: f64,
    shift: f64,
    /// `(h, u, r)` per disk.
    disks: Vec<(f64, f64, f64)>,
}

impl DirectionFrame {
    fn new(disks: &[Disk], [p, q]: [i64; 2]) -> Self {
        let len = libm::sqrt((p * p + q * q) as f64);
        let e = [p as f64 / len, q as f64 / len];
        let n = [-e[1], e[0]];
        // ℓ* = (a, b) has normal offset exactly one period
        let (x, y) = bezout(p, q);
        let (a, b) = (-y, x);
        let shift = (a * p + b * q) as f64 / len;
        let mut angle = libm::atan2(q as f64, p as f64);
        if angle < 0.0 {
            angle += PI;
        }
        Self {
            angle,
            len,
            period: 1.0 / len,
            shift,
            disks: disks
                .iter()
                .map(|d| {
                    let h = d.center[0] * n[0] + d.center[1] * n[1];
                    let u = d.center[0] * e[0] + d.center[1] * e[1];
                    (h, u, d.radius)
                })
                .collect(),
        }
    }

    /// Largest `δ` such that every line in this direction passes within
    /// `r_i - δ` of some translate's center.
    fn depth(&self) -> f64 {
        let covered = |delta: f64| {
            let mut iv: Vec<(f64, f64)> = self
                .disks
                .iter()
                .filter(|d| d.2 > delta)
                .map(|&(h, _, r)| (h - (r - delta), 2.0 * (r - delta)))
                .collect();
            !iv.is_empty() && widest_gap(self.period, &mut iv) < 0.0
        };
        if !covered(0.0) {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, 0.5);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if covered(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Longest along-line stretch, over all line offsets, free of
    /// translates whose center is closer than `r_i - δ` to the line.
    fn max_along_gap(&self, delta: f64, scratch: &mut Vec<f64>) -> Option<f64> {
        let mut probes = Vec::new();
        for &(h, _, r) in &self.disks {
            if r > delta {
                for edge in [h - (r - delta), h + (r - delta)] {
                    probes.push(edge - libm::floor(edge / self.period) * self.period);
                }
            }
        }
        probes.sort_by(f64::total_cmp);
        let mids: Vec<f64> = probes
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .chain(probes.first().map(|&f| 0.5 * (f + probes[probes.len() - 1] - self.period)))
            .collect();
        let mut worst: f64 = 0.0;
        for &v0 in probes.iter().chain(&mids) {
            scratch.clear();
            for &(h, u, r) in &self.disks {
                let reach = r - delta - ENDPOINT_TOL;
                if reach <= 0.0 {
                    continue;
                }
                let m_lo = libm::ceil((v0 - reach - h) / self.period) as i64;
                let m_hi = libm::floor((v0 + reach - h) / self.period) as i64;
                for m in m_lo..=m_hi {
                    if libm::fabs(h + m as f64 * self.period - v0) < reach {
                        let pos = u + m as f64 * self.shift;
                        scratch.push(pos - libm::floor(pos / self.len) * self.len);
                    }
                }
            }
            if scratch.is_empty() {
                return None;
            }
            scratch.sort_by(f64::total_cmp);
            let wrap = scratch[0] + self.len - scratch[scratch.len() - 1];
            let gap = scratch.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max);
            worst = worst.max(gap);
        }
        Some(worst)
    }
}

/// Directions in `[lo, hi]` (mod π) whose free flights are at most `bound`.
#[derive(Debug, Clone, Copy)]
struct Arc {
    lo: f64,
    hi: f64,
    bound: f64,
}

/// Parts of `[0, π)` that no arc reaches.
fn uncovered(arcs: &[Arc]) -> Vec<(f64, f64)> {
    let mut pieces: Vec<(f64, f64)> = Vec::with_capacity(2 * arcs.len());
    for a in arcs {
        if a.hi - a.lo >= PI {
            return Vec::new();
        }
        if a.lo < 0.0 {
            pieces.push((a.lo + PI, PI));
            pieces.push((0.0, a.hi));
        } else if a.hi > PI {
            pieces.push((a.lo, PI));
            pieces.push((0.0, a.hi - PI));
        } else {
            pieces.push((a.lo, a.hi));
        }
    }
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut gaps = Vec::new();
    let mut reach = 0.0;
    for (lo, hi) in pieces {
        if lo > reach {
            gaps.push((reach, lo));
        }
        reach = f64::max(reach, hi);
    }
    if reach < PI {
        gaps.push((reach, PI));
    }
    gaps
}

fn push_arcs(disks: &[Disk], dir: [i64; 2], arcs: &mut Vec<Arc>, scratch: &mut Vec<f64>) {
    let frame = DirectionFrame::new(disks, dir);
    let depth = frame.depth();
    if depth <= 0.0 {
        return;
    }
    for f in BOUND_DEPTH_FRACTIONS {
        let delta = f * depth;
        if let Some(g) = frame.max_along_gap(delta, scratch) {
            let half = libm::atan2(delta, g);
            arcs.push(Arc {
                lo: frame.angle - half,
                hi: frame.angle + half,
                bound: libm::hypot(g, delta),
            });
        }
    }
}

fn angle_of(v: [i64; 2]) -> f64 {
    libm::atan2(v[1] as f64, v[0] as f64)
}

/// A certified upper bound on the length of any free flight, or `None` if
/// the search below cannot certify one.
///
/// Take a coprime direction `(p, q)` of length `L` and a line in that
/// direction. If some translate's center is within `r_i - δ` of the line,
/// and `G` is the longest along-line stretch free of such centers, then a
/// ray at angle `α ≤ atan(δ/G)` to the direction drifts by at most `δ`
/// before passing a center's foot point, and so enters that disk within
/// `√(G² + δ²)`. Short directions are all used; longer ones are searched
/// (Stern–Brocot order) only inside angles still uncovered, up to length
/// [`BOUND_MAX_LENGTH`]. The bound is the smallest value whose arcs cover
/// every direction.
pub fn free_path_bound(disks: &[Disk]) -> Option<f64> {
    let r_max = disks.iter().map(|d| d.radius).fold(0.0, f64::max);
    let mut arcs = Vec::new();
    let mut scratch = Vec::new();
    let mut cap = libm::ceil(2.0 / r_max).max(4.0);
    for dir in lattice_directions(cap * cap + 0.5) {
        push_arcs(disks, dir, &mut arcs, &mut scratch);
    }
    loop {
        let gaps = uncovered(&arcs);
        if gaps.is_empty() {
            break;
        }
        if cap >= BOUND_MAX_LENGTH {
            return None;
        }
        let searched = cap;
        cap = (2.0 * cap).min(BOUND_MAX_LENGTH);
        let hits_gap = |lo: f64, hi: f64| gaps.iter().any(|&(g0, g1)| lo < g1 && g0 < hi);
        let mut stack = alloc::vec![([1i64, 0i64], [0i64, 1i64]), ([0, 1], [-1, 0])];
        while let Some((u, v)) = stack.pop() {
            let w = [u[0] + v[0], u[1] + v[1]];
            let len = libm::sqrt((w[0] * w[0] + w[1] * w[1]) as f64);
            if len > cap {
                continue;
            }
            let (lo, hi) = (angle_of(u), angle_of(v));
            if !hits_gap(lo, hi) {
                continue;
            }
            if len > searched {
                let dir = if w[0] < 0 { [-w[0], -w[1]] } else { w };
                push_arcs(disks, dir, &mut arcs, &mut scratch);
            }
            stack.push((u, w));
            stack.push((w, v));
        }
    }
    arcs.sort_by(|a, b| a.bound.total_cmp(&b.bound));
    // smallest prefix (by bound) that still covers
    let (mut lo, mut hi) = (0, arcs.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if uncovered(&arcs[..=mid]).is_empty() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(arcs[lo].bound)
}

/// Translates `(i, ℓ)`, `ℓ ∈ {-1,0,1}²`, whose disk meets `[0,1]²`. Any disk
/// meeting a cell has its center in that cell or one of its 8 neighbors.
fn unit_cell_candidates(disks: &[Disk]) -> Vec<Translate> {
    const MARGIN: f64 = 1e-9;
    let mut out = Vec::new();
    for (i, d) in disks.iter().enumerate() {
        for lx in -1..=1i64 {
            for ly in -1..=1i64 {
                let cx = d.center[0] + lx as f64;
                let cy = d.center[1] + ly as f64;
                let nx = cx.clamp(0.0, 1.0);
                let ny = cy.clamp(0.0, 1.0);
                if libm::hypot(cx - nx, cy - ny) <= d.radius + MARGIN {
                    out.push(Translate {
                        disk: i,
                        offset: [lx, ly],
                    });
                }
            }
        }
    }
    out
}
