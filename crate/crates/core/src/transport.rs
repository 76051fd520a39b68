//! Particle trajectories and the parallel batch engine.
//!
//! A trajectory starts on a reservoir side, flies freely with specular
//! reflections on the reflecting boundary, jumps in velocity at exponential
//! times and ends when it reaches either open side. Every straight piece of
//! path is handed to a sink; the batch engine slices those pieces exactly
//! into grid cells.
//!
//! Batches are split into fixed-size chunks of consecutive particle
//! indices. Particle `i` always draws from stream `(seed, i)` and chunk
//! tallies are merged in chunk order, so a batch result does not depend on
//! the number of worker threads.

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::RegionDecomposition;
use crate::density::SojournGrid;
use crate::geometry::{reflect, BoundaryKind, DomainConfig, Obstacle, StripSpec, Vec2, Violation, REFLECTION_NUDGE};
use crate::grid::{GridError, GridLayout, GridSpec};
use crate::rng::RngStream;
use crate::scattering::{sample_entry, sample_flight_time, sample_impact, scatter, Entry, KernelParams, Side};

pub const DEFAULT_MAX_EVENTS: u64 = 10_000_000;
pub const DEFAULT_BATCHES: usize = 20;

/// Particles per chunk of the batch engine. Part of the determinism
/// contract: changing it changes the floating-point summation order.
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("invalid domain: {}", join_violations(.0))]
    InvalidDomain(Vec<Violation>),
    #[error("mean flight time must be positive (got {0})")]
    InvalidKernel(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("region decomposition [{x_left}, {x_right}] is not inside [0, {length_x}]")]
    InvalidRegions { x_left: f64, x_right: f64, length_x: f64 },
    #[error("batch needs at least one particle")]
    NoParticles,
    #[error("could not start worker pool: {0}")]
    WorkerPool(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Phase point of a particle plus the time since it was injected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub clock: f64,
}

/// A straight piece of path at unit speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: Vec2,
    pub direction: Vec2,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOutcome {
    pub entry_side: Side,
    pub exit_side: Side,
    pub residence_time: f64,
    /// Time spent left of, between and right of the decomposition bounds.
    pub region_times: [f64; 3],
    pub n_scatters: u64,
    pub n_reflections: u64,
}

/// Trajectory exceeded the event budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aborted {
    pub events: u64,
    pub clock: f64,
}

/// Result of advancing a particle up to a clock limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Propagation {
    Exited(Side),
    ReachedLimit,
}

/// Mutable trajectory state carried between propagation calls.
#[derive(Debug, Clone, Copy)]
pub struct Walker {
    pub state: ParticleState,
    /// Flight time left until the next velocity jump.
    pub time_to_jump: f64,
    pub region_times: [f64; 3],
    pub n_scatters: u64,
    pub n_reflections: u64,
    events: u64,
    just_reflected: bool,
}

impl Walker {
    pub fn new(position: Vec2, velocity: Vec2, time_to_jump: f64) -> Self {
        Self {
            state: ParticleState {
                position,
                velocity,
                clock: 0.0,
            },
            time_to_jump,
            region_times: [0.0; 3],
            n_scatters: 0,
            n_reflections: 0,
            events: 0,
            just_reflected: false,
        }
    }
}

/// Trajectory engine for one domain and kernel.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    config: &'a DomainConfig,
    params: KernelParams,
    regions: RegionDecomposition,
    max_events: u64,
}

impl<'a> Simulator<'a> {
    pub fn new(config: &'a DomainConfig, params: KernelParams) -> Result<Self, TransportError> {
        let violations = config.validate();
        if !violations.is_empty() {
            return Err(TransportError::InvalidDomain(violations));
        }
        if !params.is_valid() {
            return Err(TransportError::InvalidKernel(params.mean_flight_time));
        }
        Ok(Self {
            config,
            params,
            regions: RegionDecomposition::for_config(config),
            max_events: DEFAULT_MAX_EVENTS,
        })
    }

    pub fn with_regions(mut self, regions: RegionDecomposition) -> Result<Self, TransportError> {
        let length_x = self.config.strip.length_x;
        if !regions.is_valid(length_x) {
            return Err(TransportError::InvalidRegions {
                x_left: regions.x_left,
                x_right: regions.x_right,
                length_x,
            });
        }
        self.regions = regions;
        Ok(self)
    }

    pub fn with_max_events(mut self, max_events: u64) -> Self {
        self.max_events = max_events;
        self
    }

    pub fn config(&self) -> &DomainConfig {
        self.config
    }

    pub fn params(&self) -> KernelParams {
        self.params
    }

    pub fn regions(&self) -> RegionDecomposition {
        self.regions
    }

    /// Injects a particle from the reservoirs and follows it to exit.
    pub fn simulate_particle(
        &self,
        rng: &mut RngStream,
        sink: &mut impl FnMut(Segment),
    ) -> Result<TrajectoryOutcome, Aborted> {
        let entry = sample_entry(self.config, rng);
        self.simulate_from(entry, rng, sink)
    }

    /// Follows a particle from a given entry until it leaves the strip.
    pub fn simulate_from(
        &self,
        entry: Entry,
        rng: &mut RngStream,
        sink: &mut impl FnMut(Segment),
    ) -> Result<TrajectoryOutcome, Aborted> {
        let first_jump = sample_flight_time(&self.params, rng);
        let mut walker = Walker::new(entry.position, entry.velocity, first_jump);
        match self.propagate(&mut walker, f64::INFINITY, rng, sink)? {
            Propagation::Exited(exit_side) => Ok(TrajectoryOutcome {
                entry_side: entry.side,
                exit_side,
                residence_time: walker.state.clock,
                region_times: walker.region_times,
                n_scatters: walker.n_scatters,
                n_reflections: walker.n_reflections,
            }),
            Propagation::ReachedLimit => unreachable!("unbounded propagation ends only at an exit"),
        }
    }

    /// Advances `walker` until it exits or its clock reaches `until`.
    ///
    /// The jump clock runs over flight time and is not reset by wall
    /// reflections; a new flight time is drawn after every jump.
    pub fn propagate(
        &self,
        walker: &mut Walker,
        until: f64,
        rng: &mut RngStream,
        sink: &mut impl FnMut(Segment),
    ) -> Result<Propagation, Aborted> {
        loop {
            if walker.events >= self.max_events {
                return Err(Aborted {
                    events: walker.events,
                    clock: walker.state.clock,
                });
            }
            let remaining = until - walker.state.clock;
            if remaining <= 0.0 {
                return Ok(Propagation::ReachedLimit);
            }
            let budget = walker.time_to_jump.min(remaining);
            let ParticleState { position, velocity, .. } = walker.state;

            let nudge = if walker.just_reflected { REFLECTION_NUDGE } else { 0.0 };
            let hit = if budget > nudge {
                self.config
                    .first_hit(position + velocity * nudge, velocity, budget - nudge)
                    .map(|mut h| {
                        h.time += nudge;
                        h
                    })
            } else {
                None
            };
            walker.events += 1;
            walker.just_reflected = false;

            match hit {
                Some(hit) => {
                    self.advance(walker, hit.time, sink);
                    walker.state.position = hit.point;
                    walker.time_to_jump -= hit.time;
                    match hit.kind {
                        BoundaryKind::OpenLeft => return Ok(Propagation::Exited(Side::Left)),
                        BoundaryKind::OpenRight => return Ok(Propagation::Exited(Side::Right)),
                        BoundaryKind::Elastic => {
                            walker.state.velocity = reflect(velocity, hit.inward_normal);
                            walker.n_reflections += 1;
                            walker.just_reflected = true;
                        }
                    }
                }
                None => {
                    self.advance(walker, budget, sink);
                    walker.state.position = position + velocity * budget;
                    if walker.time_to_jump <= remaining {
                        walker.state.velocity = scatter(velocity, sample_impact(rng));
                        walker.time_to_jump = sample_flight_time(&self.params, rng);
                        walker.n_scatters += 1;
                    } else {
                        walker.time_to_jump -= budget;
                        return Ok(Propagation::ReachedLimit);
                    }
                }
            }
        }
    }

    #[inline]
    fn advance(&self, walker: &mut Walker, length: f64, sink: &mut impl FnMut(Segment)) {
        let ParticleState { position, velocity, .. } = walker.state;
        let split = self.regions.split(position.x, velocity.x, length);
        for (acc, t) in walker.region_times.iter_mut().zip(split) {
            *acc += t;
        }
        walker.state.clock += length;
        sink(Segment {
            start: position,
            direction: velocity,
            length,
        });
    }
}

/// Per-(entry, exit) class statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassStats {
    pub count: u64,
    pub time_sum: f64,
    pub time_sq_sum: f64,
    pub region_sums: [f64; 3],
    pub scatter_sum: f64,
}

impl ClassStats {
    fn record(&mut self, o: &TrajectoryOutcome) {
        self.count += 1;
        self.time_sum += o.residence_time;
        self.time_sq_sum += o.residence_time * o.residence_time;
        for (acc, t) in self.region_sums.iter_mut().zip(o.region_times) {
            *acc += t;
        }
        self.scatter_sum += o.n_scatters as f64;
    }

    fn merge(&mut self, other: &ClassStats) {
        self.count += other.count;
        self.time_sum += other.time_sum;
        self.time_sq_sum += other.time_sq_sum;
        for (a, b) in self.region_sums.iter_mut().zip(other.region_sums) {
            *a += b;
        }
        self.scatter_sum += other.scatter_sum;
    }

    pub fn mean_time(&self) -> Option<f64> {
        (self.count > 0).then(|| self.time_sum / self.count as f64)
    }

    pub fn mean_region_times(&self) -> Option<[f64; 3]> {
        (self.count > 0).then(|| self.region_sums.map(|s| s / self.count as f64))
    }
}

/// Per-cell statistics of the time left-to-right crossers spend in each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingGrid {
    pub time_sum: Vec<f64>,
    pub time_sq_sum: Vec<f64>,
    pub count: Vec<u64>,
}

impl CrossingGrid {
    fn new(len: usize) -> Self {
        Self {
            time_sum: vec![0.0; len],
            time_sq_sum: vec![0.0; len],
            count: vec![0; len],
        }
    }

    fn merge(&mut self, other: &CrossingGrid) {
        for (a, b) in self.time_sum.iter_mut().zip(&other.time_sum) {
            *a += b;
        }
        for (a, b) in self.time_sq_sum.iter_mut().zip(&other.time_sq_sum) {
            *a += b;
        }
        for (a, b) in self.count.iter_mut().zip(&other.count) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchSettings {
    pub n_particles: u64,
    pub grid: GridSpec,
    pub seed: u64,
    /// Worker threads; zero picks the rayon default. Never affects results.
    pub workers: usize,
    pub max_events: u64,
    pub regions: Option<RegionDecomposition>,
    /// Number of contiguous particle-index groups for batch-means errors.
    pub batches: usize,
}

impl BatchSettings {
    pub fn new(n_particles: u64, grid: GridSpec, seed: u64) -> Self {
        Self {
            n_particles,
            grid,
            seed,
            workers: 0,
            max_events: DEFAULT_MAX_EVENTS,
            regions: None,
            batches: DEFAULT_BATCHES,
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn regions(mut self, regions: RegionDecomposition) -> Self {
        self.regions = Some(regions);
        self
    }
}

/// Merged estimators of a batch of trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub layout: GridLayout,
    pub sojourn: SojournGrid,
    /// Indexed `[entry][exit]` by [`Side::index`].
    pub classes: [[ClassStats; 2]; 2],
    pub crossing: CrossingGrid,
    /// Left-to-right crosser statistics per particle-index group.
    pub crossing_batches: Vec<ClassStats>,
    pub n_particles: u64,
    pub aborted: u64,
    pub regions: RegionDecomposition,
    /// Sum of residence times of all completed trajectories.
    pub total_time: f64,
}

impl BatchResult {
    pub fn class(&self, entry: Side, exit: Side) -> &ClassStats {
        &self.classes[entry.index()][exit.index()]
    }

    pub fn crossers(&self) -> &ClassStats {
        self.class(Side::Left, Side::Right)
    }

    pub fn injected(&self, side: Side) -> u64 {
        self.classes[side.index()].iter().map(|c| c.count).sum()
    }

    pub fn exits(&self, side: Side) -> u64 {
        self.classes.iter().map(|row| row[side.index()].count).sum()
    }

    pub fn completed(&self) -> u64 {
        self.injected(Side::Left) + self.injected(Side::Right)
    }

    /// Mean left-to-right residence time with its batch-means standard error.
    pub fn residence_time(&self) -> Option<(f64, f64)> {
        let mean = self.crossers().mean_time()?;
        Some((mean, batch_means_stderr(&self.crossing_batches, |c| c.mean_time())))
    }
}

/// Standard error of the mean of per-batch estimates.
pub fn batch_means_stderr(batches: &[ClassStats], estimate: impl Fn(&ClassStats) -> Option<f64>) -> f64 {
    let values: Vec<f64> = batches.iter().filter_map(estimate).collect();
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Per-particle cell times, reset cheaply between particles.
struct Scratch {
    time: Vec<f64>,
    stamp: Vec<u32>,
    touched: Vec<u32>,
    current: u32,
}

impl Scratch {
    fn new(len: usize) -> Self {
        Self {
            time: vec![0.0; len],
            stamp: vec![0; len],
            touched: Vec::new(),
            current: 0,
        }
    }

    fn begin(&mut self) {
        self.touched.clear();
        self.current = self.current.wrapping_add(1);
        if self.current == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.current = 1;
        }
    }

    #[inline]
    fn add(&mut self, cell: usize, dt: f64) {
        if self.stamp[cell] != self.current {
            self.stamp[cell] = self.current;
            self.time[cell] = dt;
            self.touched.push(cell as u32);
        } else {
            self.time[cell] += dt;
        }
    }
}

struct Tally {
    sojourn: Vec<f64>,
    classes: [[ClassStats; 2]; 2],
    crossing: CrossingGrid,
    crossing_batches: Vec<ClassStats>,
    aborted: u64,
    total_time: f64,
}

impl Tally {
    fn new(cells: usize, batches: usize) -> Self {
        Self {
            sojourn: vec![0.0; cells],
            classes: Default::default(),
            crossing: CrossingGrid::new(cells),
            crossing_batches: vec![ClassStats::default(); batches],
            aborted: 0,
            total_time: 0.0,
        }
    }

    fn merge(&mut self, other: &Tally) {
        for (a, b) in self.sojourn.iter_mut().zip(&other.sojourn) {
            *a += b;
        }
        for (row, orow) in self.classes.iter_mut().zip(&other.classes) {
            for (c, oc) in row.iter_mut().zip(orow) {
                c.merge(oc);
            }
        }
        self.crossing.merge(&other.crossing);
        for (a, b) in self.crossing_batches.iter_mut().zip(&other.crossing_batches) {
            a.merge(b);
        }
        self.aborted += other.aborted;
        self.total_time += other.total_time;
    }
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool, TransportError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| TransportError::WorkerPool(e.to_string()))
}

/// Runs chunks `0..n_chunks` on the pool and folds their results in chunk order.
fn run_chunks<T: Send>(
    workers: usize,
    n_chunks: u64,
    init: T,
    run: impl Fn(u64) -> T + Sync,
    mut merge: impl FnMut(&mut T, T),
) -> Result<T, TransportError> {
    let pool = worker_pool(workers)?;
    let wave = (pool.current_num_threads() as u64 * 4).max(4);
    let mut total = init;
    let mut start = 0;
    while start < n_chunks {
        let end = (start + wave).min(n_chunks);
        let parts: Vec<T> = pool.install(|| (start..end).into_par_iter().map(&run).collect());
        for part in parts {
            merge(&mut total, part);
        }
        start = end;
    }
    Ok(total)
}

/// Simulates `settings.n_particles` independent trajectories and merges
/// their estimators.
pub fn run_batch(
    config: &DomainConfig,
    params: KernelParams,
    settings: &BatchSettings,
) -> Result<BatchResult, TransportError> {
    if settings.n_particles == 0 {
        return Err(TransportError::NoParticles);
    }
    let mut sim = Simulator::new(config, params)?.with_max_events(settings.max_events);
    if let Some(regions) = settings.regions {
        sim = sim.with_regions(regions)?;
    }
    let layout = settings.grid.layout(&config.strip)?;
    let cells = layout.spec.len();
    let n = settings.n_particles;
    let batches = settings.batches.max(1);
    let n_chunks = n.div_ceil(CHUNK);

    let run_chunk = |chunk: u64| -> Tally {
        let mut tally = Tally::new(cells, batches);
        let mut scratch = Scratch::new(cells);
        let lo = chunk * CHUNK;
        let hi = (lo + CHUNK).min(n);
        for idx in lo..hi {
            let mut rng = RngStream::new(settings.seed, idx);
            scratch.begin();
            let result = sim.simulate_particle(&mut rng, &mut |seg: Segment| {
                layout.slice_segment(seg.start, seg.direction, seg.length, |k, dt| scratch.add(k, dt))
            });
            let outcome = match result {
                Ok(o) => o,
                Err(_) => {
                    tally.aborted += 1;
                    continue;
                }
            };
            let crosser = outcome.entry_side == Side::Left && outcome.exit_side == Side::Right;
            for &k in &scratch.touched {
                let k = k as usize;
                let dt = scratch.time[k];
                tally.sojourn[k] += dt;
                if crosser {
                    tally.crossing.time_sum[k] += dt;
                    tally.crossing.time_sq_sum[k] += dt * dt;
                    tally.crossing.count[k] += 1;
                }
            }
            tally.classes[outcome.entry_side.index()][outcome.exit_side.index()].record(&outcome);
            if crosser {
                let group = (idx as u128 * batches as u128 / n as u128) as usize;
                tally.crossing_batches[group].record(&outcome);
            }
            tally.total_time += outcome.residence_time;
        }
        tally
    };

    let total = run_chunks(
        settings.workers,
        n_chunks,
        Tally::new(cells, batches),
        run_chunk,
        |acc, part| acc.merge(&part),
    )?;

    let sojourn = SojournGrid::from_times(layout, config, total.sojourn);
    Ok(BatchResult {
        layout,
        sojourn,
        classes: total.classes,
        crossing: total.crossing,
        crossing_batches: total.crossing_batches,
        n_particles: n,
        aborted: total.aborted,
        regions: sim.regions(),
        total_time: total.total_time,
    })
}

/// Mean-square displacement of free particles at fixed sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdTable {
    pub times: Vec<f64>,
    pub msd: Vec<f64>,
    /// Standard error of each MSD value.
    pub stderr: Vec<f64>,
    pub n_particles: u64,
    /// Particles that reached an open side before the last sample time.
    pub escaped: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionFit {
    pub slope: f64,
    pub intercept: f64,
    /// Slope divided by four (two dimensions).
    pub diffusion: f64,
}

/// A square strip large enough that particles started at its center
/// rarely touch a wall before `horizon`.
pub fn quasi_free_domain(params: &KernelParams, horizon: f64) -> DomainConfig {
    let spread = (4.0 * crate::scattering::diffusion_coefficient(params) * horizon).sqrt();
    let side = 40.0 * spread + 10.0 * params.mean_flight_time;
    DomainConfig {
        strip: StripSpec::new(side, side),
        obstacles: Vec::<Obstacle>::new(),
        rho_left: 1.0,
        rho_right: 1.0,
        injection: Default::default(),
    }
}

/// MSD of particles started at the center of `config` with a uniformly
/// random direction, sampled at increasing `times`.
pub fn mean_square_displacement(
    config: &DomainConfig,
    params: KernelParams,
    times: &[f64],
    n_particles: u64,
    seed: u64,
    workers: usize,
) -> Result<MsdTable, TransportError> {
    if n_particles == 0 {
        return Err(TransportError::NoParticles);
    }
    let sim = Simulator::new(config, params)?;
    let origin = Vec2::new(0.5 * config.strip.length_x, 0.5 * config.strip.length_y);
    let m = times.len();

    struct Sums {
        sum: Vec<f64>,
        sum_sq: Vec<f64>,
        kept: u64,
        escaped: u64,
    }
    let run_chunk = |chunk: u64| -> Sums {
        let mut out = Sums {
            sum: vec![0.0; m],
            sum_sq: vec![0.0; m],
            kept: 0,
            escaped: 0,
        };
        let mut row = vec![0.0; m];
        let lo = chunk * CHUNK;
        let hi = (lo + CHUNK).min(n_particles);
        'particles: for idx in lo..hi {
            let mut rng = RngStream::new(seed, idx);
            let theta = std::f64::consts::TAU * rng.uniform();
            let first = sample_flight_time(&params, &mut rng);
            let mut walker = Walker::new(origin, Vec2::from_angle(theta), first);
            for (slot, &t) in row.iter_mut().zip(times) {
                match sim.propagate(&mut walker, t, &mut rng, &mut |_| {}) {
                    Ok(Propagation::ReachedLimit) => *slot = (walker.state.position - origin).norm_sq(),
                    _ => {
                        out.escaped += 1;
                        continue 'particles;
                    }
                }
            }
            out.kept += 1;
            for (k, &r2) in row.iter().enumerate() {
                out.sum[k] += r2;
                out.sum_sq[k] += r2 * r2;
            }
        }
        out
    };
    let total = run_chunks(
        workers,
        n_particles.div_ceil(CHUNK),
        Sums {
            sum: vec![0.0; m],
            sum_sq: vec![0.0; m],
            kept: 0,
            escaped: 0,
        },
        run_chunk,
        |acc, part| {
            for k in 0..m {
                acc.sum[k] += part.sum[k];
                acc.sum_sq[k] += part.sum_sq[k];
            }
            acc.kept += part.kept;
            acc.escaped += part.escaped;
        },
    )?;
    let kept = total.kept.max(1) as f64;
    let msd: Vec<f64> = total.sum.iter().map(|s| s / kept).collect();
    let stderr = total
        .sum_sq
        .iter()
        .zip(&msd)
        .map(|(sq, mean)| ((sq / kept - mean * mean).max(0.0) / kept).sqrt())
        .collect();
    Ok(MsdTable {
        times: times.to_vec(),
        msd,
        stderr,
        n_particles,
        escaped: total.escaped,
    })
}

/// Least-squares line through the MSD samples with `t >= t_min`.
pub fn fit_diffusion(table: &MsdTable, t_min: f64) -> Option<DiffusionFit> {
    let pts: Vec<(f64, f64)> = table
        .times
        .iter()
        .zip(&table.msd)
        .filter(|(t, _)| **t >= t_min)
        .map(|(t, m)| (*t, *m))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mm)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let slope = sxy / sxx;
    Some(DiffusionFit {
        slope,
        intercept: mm - slope * mt,
        diffusion: 0.25 * slope,
    })
}
