//! The billiard collision map on a periodic table.
//!
//! States live on obstacle boundaries. A flight is found by walking the unit
//! cells crossed by the ray in order and testing the disk translates that
//! can reach each cell; the first cell whose exit parameter exceeds the best
//! hit so far ends the search. Positions are kept relative to the cell of
//! the current obstacle so precision does not degrade as the particle
//! diffuses.

use core::f64::consts::PI;

use rand::Rng;
use thiserror::Error;

use crate::geometry::{BilliardTable, Corridor};
use crate::real::{Real, Vec2};
use crate::selfintersect::Site;

/// Hits with `|⟨v, n⟩|` below this are treated as tangential.
pub const GRAZE_EPS: f64 = 1e-12;

/// Default traversal cap for tables without a verified finite horizon.
pub const DEFAULT_CELL_CAP: usize = 1_000_000;

/// Rotation applied to the direction on each grazing retry.
const GRAZE_NUDGE: f64 = 4.0 * f64::EPSILON;
const MAX_GRAZE_RETRIES: u32 = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("strict mode requires a finite horizon, found corridor along ({}, {}) of width {}", .0.direction[0], .0.direction[1], .0.gap_width)]
    InfiniteHorizon(Corridor),
    #[error("free flight crossed more than {cells} cells")]
    HorizonExceeded { cells: usize },
    #[error("tangential hit with |<v,n>| = {cosine:e}")]
    GrazingAnomaly { cosine: f64 },
    #[error("no point outside the obstacles found after {attempts} attempts")]
    NoFreeSpace { attempts: usize },
    #[error("cell ({}, {}) outside the packable site range", .cell[0], .cell[1])]
    SiteOutOfRange { cell: [i64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HorizonMode {
    /// Table must have a finite horizon; traversal is capped by its bound.
    Strict,
    Permissive { cell_cap: usize },
}

impl HorizonMode {
    pub fn permissive() -> Self {
        HorizonMode::Permissive {
            cell_cap: DEFAULT_CELL_CAP,
        }
    }
}

/// How the collision at step 0 is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Directly from the invariant collision measure.
    #[default]
    Stationary,
    /// Uniform position in the free region of the unit cell and uniform
    /// direction, flowed back to the previous reflection.
    UniformQ,
}

/// A post-collision phase point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionState<T = f64> {
    /// 0-based obstacle index.
    pub obstacle: usize,
    /// Lattice cell of the obstacle's translate.
    pub cell: [i64; 2],
    /// Outward unit normal at the collision point.
    pub normal: Vec2<T>,
    /// Outgoing unit velocity.
    pub dir: Vec2<T>,
}

impl<T: Real> CollisionState<T> {
    /// Collision point relative to the origin of `self.cell`.
    pub fn local_position(&self, table: &BilliardTable) -> Vec2<T> {
        let d = table.disks()[self.obstacle];
        Vec2::from_f64(d.center).add(&self.normal.scale(&T::from_f64(d.radius)))
    }

    pub fn position(&self, table: &BilliardTable) -> [f64; 2] {
        let p = self.local_position(table).to_f64();
        [p[0] + self.cell[0] as f64, p[1] + self.cell[1] as f64]
    }

    /// Angle of the collision point on its circle, in `[0, 2π)`.
    pub fn boundary_angle(&self) -> f64 {
        let n = self.normal.to_f64();
        let a = libm::atan2(n[1], n[0]);
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    }

    /// Signed angle from the outward normal to the outgoing velocity.
    pub fn incidence(&self) -> f64 {
        libm::atan2(self.sin_incidence(), self.cos_incidence())
    }

    pub fn sin_incidence(&self) -> f64 {
        self.normal.cross(&self.dir).to_f64()
    }

    pub fn cos_incidence(&self) -> f64 {
        self.normal.dot(&self.dir).to_f64()
    }

    /// Velocity just before this collision.
    pub fn incoming_dir(&self) -> Vec2<T> {
        self.dir.reflect(&self.normal)
    }

    /// The same collision with time reversed: leaving along the negated
    /// incoming velocity, so the next flight retraces the previous one.
    pub fn reversed(&self) -> Self {
        Self {
            dir: self.incoming_dir().neg(),
            ..self.clone()
        }
    }

    pub fn site(&self) -> Site {
        Site::new(self.obstacle, self.cell)
    }

    /// Re-express in another scalar type, renormalizing both unit vectors.
    pub fn convert<U: Real>(&self) -> CollisionState<U> {
        let lift = |v: &Vec2<T>| Vec2::<U>::from_f64(v.to_f64()).normalized();
        CollisionState {
            obstacle: self.obstacle,
            cell: self.cell,
            normal: lift(&self.normal),
            dir: lift(&self.dir),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightRecord<T = f64> {
    pub from: CollisionState<T>,
    pub to: CollisionState<T>,
    pub free_path: T,
}

struct Hit<T> {
    t: T,
    disk: usize,
    /// Cell of the hit translate relative to the ray's base cell.
    rel: [i64; 2],
}

/// A table plus the traversal policy and initial law.
#[derive(Debug, Clone)]
pub struct Billiard {
    table: BilliardTable,
    cell_cap: usize,
    init: Init,
}

impl Billiard {
    pub fn new(table: BilliardTable, mode: HorizonMode) -> Result<Self, DynamicsError> {
        let cell_cap = match mode {
            HorizonMode::Strict => {
                let h = table.horizon();
                match (h.finite, h.max_free_path_bound, h.open_corridor) {
                    // a segment of length L crosses at most 2(L + 1) cell walls
                    (true, Some(bound), _) => 2 * (libm::ceil(bound) as usize + 2),
                    (_, _, Some(c)) => return Err(DynamicsError::InfiniteHorizon(c)),
                    // finite, but no bound could be certified
                    _ => DEFAULT_CELL_CAP,
                }
            }
            HorizonMode::Permissive { cell_cap } => cell_cap,
        };
        Ok(Self {
            table,
            cell_cap,
            init: Init::Stationary,
        })
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn table(&self) -> &BilliardTable {
        &self.table
    }

    pub fn init(&self) -> Init {
        self.init
    }

    pub fn cell_cap(&self) -> usize {
        self.cell_cap
    }

    pub fn free_path_bound(&self) -> Option<f64> {
        self.table.horizon().max_free_path_bound
    }

    /// Draw from the invariant collision measure: obstacle with probability
    /// proportional to its perimeter, uniform arc position, and `sin φ`
    /// uniform on `(-1, 1)`.
    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> CollisionState {
        let disks = self.table.disks();
        let mut pick = rng.random::<f64>() * self.table.total_perimeter();
        let mut obstacle = disks.len() - 1;
        for (i, d) in disks.iter().enumerate() {
            pick -= d.perimeter();
            if pick < 0.0 {
                obstacle = i;
                break;
            }
        }
        let theta = 2.0 * PI * rng.random::<f64>();
        let s = loop {
            let s = 2.0 * rng.random::<f64>() - 1.0;
            if s > -1.0 {
                break s;
            }
        };
        let c = libm::sqrt(1.0 - s * s);
        let (sin_t, cos_t) = libm::sincos(theta);
        let normal = Vec2::new(cos_t, sin_t);
        let tangent = Vec2::new(-sin_t, cos_t);
        CollisionState {
            obstacle,
            cell: [0, 0],
            dir: normal.scale(&c).add(&tangent.scale(&s)),
            normal,
        }
    }

    /// Uniform point of the free region in `[0,1)²` with a uniform
    /// direction, traced backwards to the reflection that produced it.
    pub fn sample_uniform_q<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<CollisionState, DynamicsError> {
        const ATTEMPTS: usize = 1_000_000;
        for _ in 0..ATTEMPTS {
            let x = Vec2::new(rng.random::<f64>(), rng.random::<f64>());
            if self.inside_obstacle(&x) {
                continue;
            }
            let (sin_a, cos_a) = libm::sincos(2.0 * PI * rng.random::<f64>());
            let v = Vec2::new(cos_a, sin_a);
            let hit = self.cast(&x, &v.neg(), None)?;
            let d = self.table.disks()[hit.disk];
            let center = translate_center::<f64>(d.center, hit.rel);
            let p = x.sub(&v.scale(&hit.t));
            let normal = p.sub(&center).normalized();
            return Ok(CollisionState {
                obstacle: hit.disk,
                cell: hit.rel,
                normal,
                dir: v,
            });
        }
        Err(DynamicsError::NoFreeSpace { attempts: ATTEMPTS })
    }

    pub fn sample_initial<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<CollisionState, DynamicsError> {
        match self.init {
            Init::Stationary => Ok(self.sample_stationary(rng)),
            Init::UniformQ => self.sample_uniform_q(rng),
        }
    }

    fn inside_obstacle(&self, x: &Vec2<f64>) -> bool {
        let disks = self.table.disks();
        self.table.cell_candidates().iter().any(|c| {
            let d = disks[c.disk];
            let center = translate_center::<f64>(d.center, c.offset);
            x.sub(&center).norm_sq() <= d.radius * d.radius
        })
    }

    /// Follow the outgoing ray of `state` to the next obstacle and reflect.
    pub fn next_collision<T: Real>(
        &self,
        state: &CollisionState<T>,
    ) -> Result<FlightRecord<T>, DynamicsError> {
        let origin = state.local_position(&self.table);
        let hit = self.cast(&origin, &state.dir, Some((state.obstacle, [0, 0])))?;
        let d = self.table.disks()[hit.disk];
        let center = translate_center::<T>(d.center, hit.rel);
        let p = origin.add(&state.dir.scale(&hit.t));
        // project the hit point back onto the exact circle
        let normal = p.sub(&center).normalized();
        let cosine = state.dir.dot(&normal);
        if cosine.abs() < T::from_f64(GRAZE_EPS) {
            return Err(DynamicsError::GrazingAnomaly {
                cosine: cosine.to_f64(),
            });
        }
        let dir = state.dir.reflect(&normal);
        let to = CollisionState {
            obstacle: hit.disk,
            cell: [state.cell[0] + hit.rel[0], state.cell[1] + hit.rel[1]],
            normal,
            dir,
        };
        Ok(FlightRecord {
            from: state.clone(),
            to,
            free_path: hit.t,
        })
    }

    /// [`next_collision`](Self::next_collision) with tangential hits
    /// resolved by retrying with the outgoing direction rotated by a few
    /// ulps, alternating sides and doubling the angle each time. Returns the
    /// flight and the number of retries used.
    pub fn step<T: Real>(
        &self,
        state: &CollisionState<T>,
    ) -> Result<(FlightRecord<T>, u32), DynamicsError> {
        let mut current = state.clone();
        let mut retries = 0;
        loop {
            match self.next_collision(&current) {
                Err(DynamicsError::GrazingAnomaly { .. }) if retries < MAX_GRAZE_RETRIES => {
                    let sign = if retries % 2 == 0 { 1.0 } else { -1.0 };
                    let k = T::from_f64(sign * GRAZE_NUDGE * (1u64 << retries) as f64);
                    retries += 1;
                    let v = &state.dir;
                    current.dir = Vec2::new(
                        v.x.clone() - k.clone() * v.y.clone(),
                        v.y.clone() + k * v.x.clone(),
                    )
                    .normalized();
                }
                other => return other.map(|f| (f, retries)),
            }
        }
    }

    /// First obstacle met by the ray `origin + t·dir`, `t > 0`. The origin is
    /// relative to the base cell; `skip` names a translate to ignore (the
    /// obstacle the ray leaves from).
    fn cast<T: Real>(
        &self,
        origin: &Vec2<T>,
        dir: &Vec2<T>,
        skip: Option<(usize, [i64; 2])>,
    ) -> Result<Hit<T>, DynamicsError> {
        let zero = T::zero();
        let one = T::from_f64(1.0);
        let mut cell = [origin.x.floor_i64(), origin.y.floor_i64()];
        let axis = |o: &T, v: &T, c: i64| -> (i64, Option<T>, Option<T>) {
            if *v > T::zero() {
                let next = (T::from_i64(c + 1) - o.clone()) / v.clone();
                (1, Some(next), Some(one.clone() / v.clone()))
            } else if *v < T::zero() {
                let next = (T::from_i64(c) - o.clone()) / v.clone();
                (-1, Some(next), Some(-(one.clone() / v.clone())))
            } else {
                (0, None, None)
            }
        };
        let (step_x, mut next_x, delta_x) = axis(&origin.x, &dir.x, cell[0]);
        let (step_y, mut next_y, delta_y) = axis(&origin.y, &dir.y, cell[1]);

        let disks = self.table.disks();
        let mut best: Option<Hit<T>> = None;
        for _ in 0..self.cell_cap {
            for cand in self.table.cell_candidates() {
                let rel = [cell[0] + cand.offset[0], cell[1] + cand.offset[1]];
                if skip == Some((cand.disk, rel)) {
                    continue;
                }
                let d = disks[cand.disk];
                let oc = translate_center::<T>(d.center, rel).sub(origin);
                let b = oc.dot(dir);
                if b <= zero {
                    continue;
                }
                let r = T::from_f64(d.radius);
                let c = oc.norm_sq() - r.clone() * r;
                let disc = b.clone() * b.clone() - c.clone();
                if disc < zero {
                    continue;
                }
                // smaller root of t² - 2bt + c, in the cancellation-free form
                let t = c / (b + disc.sqrt());
                if t <= zero {
                    continue;
                }
                if best.as_ref().is_none_or(|h| t < h.t) {
                    best = Some(Hit {
                        t,
                        disk: cand.disk,
                        rel,
                    });
                }
            }
            let x_first = match (&next_x, &next_y) {
                (Some(x), Some(y)) => x <= y,
                (Some(_), None) => true,
                (None, _) => false,
            };
            let exit = if x_first { next_x.clone() } else { next_y.clone() };
            let exit = exit.expect("direction is nonzero");
            if let Some(h) = best.take() {
                if h.t <= exit {
                    return Ok(h);
                }
                best = Some(h);
            }
            if x_first {
                cell[0] += step_x;
                next_x = Some(exit + delta_x.clone().expect("x moves"));
            } else {
                cell[1] += step_y;
                next_y = Some(exit + delta_y.clone().expect("y moves"));
            }
        }
        Err(DynamicsError::HorizonExceeded {
            cells: self.cell_cap,
        })
    }
}

#[inline]
fn translate_center<T: Real>(center: [f64; 2], rel: [i64; 2]) -> Vec2<T> {
    Vec2::new(
        T::from_f64(center[0]) + T::from_i64(rel[0]),
        T::from_f64(center[1]) + T::from_i64(rel[1]),
    )
}

/// One emitted collision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub site: Site,
    pub free_path: f64,
}

/// Sequential collision stream `(I_k, S_k)`, `k = 1, 2, ...`.
///
/// The initial collision `(I_0, S_0)` is available through
/// [`origin`](Self::origin) but is not emitted.
#[derive(Debug, Clone)]
pub struct Trajectory<'a> {
    billiard: &'a Billiard,
    state: CollisionState,
    origin: Site,
    grazing_retries: u64,
}

impl<'a> Trajectory<'a> {
    pub fn new(billiard: &'a Billiard, seed: u64, stream: u64) -> Result<Self, DynamicsError> {
        let mut rng = crate::walk::stream_rng(seed, stream);
        let state = billiard.sample_initial(&mut rng)?;
        Ok(Self::from_state(billiard, state))
    }

    pub fn from_state(billiard: &'a Billiard, state: CollisionState) -> Self {
        Self {
            billiard,
            origin: state.site(),
            state,
            grazing_retries: 0,
        }
    }

    pub fn state(&self) -> &CollisionState {
        &self.state
    }

    pub fn origin(&self) -> Site {
        self.origin
    }

    pub fn grazing_retries(&self) -> u64 {
        self.grazing_retries
    }

    pub fn advance(&mut self) -> Result<FlightRecord, DynamicsError> {
        let (flight, retries) = self.billiard.step(&self.state)?;
        self.grazing_retries += u64::from(retries);
        self.state = flight.to.clone();
        Ok(flight)
    }
}

impl Iterator for Trajectory<'_> {
    type Item = Result<Step, DynamicsError>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.advance().map(|f| Step {
            site: f.to.site(),
            free_path: f.free_path,
        }))
    }
}
