//! The fitting loop: scene initialization, Adam updates with the positivity
//! projection and gauge renormalization, convex/plane purging, densification
//! and spawning on a schedule.
//!
//! Offsets are kept positive by clamping after every step, so every convex
//! always contains its local origin and the duality construction never needs
//! a feasible-point search. Scaling a plane's (normal, offset) jointly is a
//! gauge freedom; renormalizing the normal back toward unit length keeps
//! effective learning rates stable without moving any vertex.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::diffgeom::{backprop_vertices, DiffError, ParamGradients};
use crate::hull::convex_hull_3d;
use crate::math::{Aabb, Vec3};
use crate::polytope::{
    build_mesh, intersect_halfspaces, loop_subdivide, redundant_planes, signed_volume,
    ConvexPolyhedron, Hyperplane, Mesh, PolytopeError, PolytopeTopology,
};
use crate::render::{backward_from_tape, image_l1, raster_soft_forward, RenderError, RenderTarget, SoftRasterConfig};
use crate::rng::Rng;

/// Initial offset (convex "size") as a fraction of the region diagonal.
pub const INIT_SIZE_REL: f64 = 0.15;
/// Offsets are clamped to at least this after every optimizer step.
pub const B_MIN: f64 = 1e-4;

#[derive(Error, Debug)]
pub enum OptimizeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("gradient set does not match scene layout")]
    GradientMismatch,
    #[error("convex geometry failed: {0}")]
    Geometry(#[from] PolytopeError),
    #[error("rendering failed: {0}")]
    Render(#[from] RenderError),
    #[error("gradient accumulation failed: {0}")]
    Diff(#[from] DiffError),
    #[error("could not respawn a buildable convex after {0} attempts")]
    RespawnFailed(usize),
}

/// Ordered set of convexes plus the bounding region they live in.
#[derive(Clone, Debug)]
pub struct Scene {
    pub convexes: Vec<ConvexPolyhedron>,
    pub region: Aabb,
    pub seed: u64,
    next_id: usize,
}

impl Scene {
    pub fn from_convexes(convexes: Vec<ConvexPolyhedron>, region: Aabb, seed: u64) -> Scene {
        let next_id = convexes.iter().map(|c| c.id + 1).max().unwrap_or(0);
        Scene {
            convexes,
            region,
            seed,
            next_id,
        }
    }

    pub fn meshes(&self, tolerance: f64) -> Result<Vec<Mesh>, OptimizeError> {
        self.convexes
            .iter()
            .map(|c| {
                let topo = intersect_halfspaces(&c.planes, tolerance)?;
                Ok(build_mesh(c, &topo)?)
            })
            .collect()
    }
}

/// Scene with `n_convex` convexes of `n_planes` planes each: normals uniform
/// on the sphere, all offsets at the uniform initial size, translations
/// uniform in the region. Deterministic in `seed`.
pub fn init_scene(
    n_convex: usize,
    n_planes: usize,
    seed: u64,
    region: Aabb,
) -> Result<Scene, OptimizeError> {
    if n_convex < 1 {
        return Err(OptimizeError::InvalidConfig("need at least 1 convex".into()));
    }
    if n_planes < 4 {
        return Err(OptimizeError::InvalidConfig("need at least 4 planes".into()));
    }
    let mut rng = Rng::new(seed);
    let mut scene = Scene {
        convexes: Vec::with_capacity(n_convex),
        region,
        seed,
        next_id: 0,
    };
    for _ in 0..n_convex {
        let c = random_convex(&mut rng, &mut scene.next_id, n_planes, &region);
        scene.convexes.push(c);
    }
    Ok(scene)
}

fn random_convex(
    rng: &mut Rng,
    next_id: &mut usize,
    n_planes: usize,
    region: &Aabb,
) -> ConvexPolyhedron {
    let size = INIT_SIZE_REL * region.diagonal();
    let planes = (0..n_planes)
        .map(|_| Hyperplane::new(rng.unit_vector(), size))
        .collect();
    let id = *next_id;
    *next_id += 1;
    ConvexPolyhedron::new(id, planes, rng.in_aabb(region))
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Debug, Default)]
struct ConvexMoments {
    m_normals: Vec<Vec3>,
    v_normals: Vec<Vec3>,
    m_offsets: Vec<f64>,
    v_offsets: Vec<f64>,
    m_translation: Vec3,
    v_translation: Vec3,
    /// Steps since the plane moments were (re)created; drives bias
    /// correction so respawn/densify resets do not spike the step size.
    plane_steps: usize,
    trans_steps: usize,
}

impl ConvexMoments {
    fn zeros(n_planes: usize) -> ConvexMoments {
        ConvexMoments {
            m_normals: vec![Vec3::ZERO; n_planes],
            v_normals: vec![Vec3::ZERO; n_planes],
            m_offsets: vec![0.0; n_planes],
            v_offsets: vec![0.0; n_planes],
            ..ConvexMoments::default()
        }
    }

    fn reset_planes(&mut self, n_planes: usize) {
        self.m_normals = vec![Vec3::ZERO; n_planes];
        self.v_normals = vec![Vec3::ZERO; n_planes];
        self.m_offsets = vec![0.0; n_planes];
        self.v_offsets = vec![0.0; n_planes];
        self.plane_steps = 0;
    }

    fn remove_plane_entries(&mut self, removed: &[usize]) {
        for &i in removed.iter().rev() {
            self.m_normals.remove(i);
            self.v_normals.remove(i);
            self.m_offsets.remove(i);
            self.v_offsets.remove(i);
        }
    }
}

/// Adam moments per convex, keyed by convex id so purging and spawning keep
/// state aligned.
#[derive(Clone, Debug, Default)]
pub struct OptimizerState {
    pub step: usize,
    moments: BTreeMap<usize, ConvexMoments>,
}

impl OptimizerState {
    pub fn new() -> OptimizerState {
        OptimizerState::default()
    }
}

/// One Adam step over all scene parameters, followed by the positivity
/// projection (`b >= B_MIN`) and gauge renormalization when a normal has
/// drifted out of [0.5, 2.0] in length.
pub fn optimizer_step(
    scene: &mut Scene,
    state: &mut OptimizerState,
    grads: &[ParamGradients],
    schedule: &Schedule,
) -> Result<(), OptimizeError> {
    if grads.len() != scene.convexes.len() {
        return Err(OptimizeError::GradientMismatch);
    }
    state.step += 1;
    for (convex, g) in scene.convexes.iter_mut().zip(grads) {
        if g.grad_normals.len() != convex.planes.len() {
            return Err(OptimizeError::GradientMismatch);
        }
        let mom = state
            .moments
            .entry(convex.id)
            .or_insert_with(|| ConvexMoments::zeros(convex.planes.len()));
        if mom.m_normals.len() != convex.planes.len() {
            mom.reset_planes(convex.planes.len());
        }
        mom.plane_steps += 1;
        mom.trans_steps += 1;
        let bc = |t: usize| (1.0 - BETA1.powi(t as i32), 1.0 - BETA2.powi(t as i32));
        let (bc1_p, bc2_p) = bc(mom.plane_steps);
        let (bc1_t, bc2_t) = bc(mom.trans_steps);

        let adam_scalar = |m: &mut f64, v: &mut f64, g: f64, lr: f64, bc1: f64, bc2: f64| {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS)
        };
        let adam_vec = |m: &mut Vec3, v: &mut Vec3, g: Vec3, lr: f64, bc1: f64, bc2: f64| {
            let dx = adam_scalar(&mut m.x, &mut v.x, g.x, lr, bc1, bc2);
            let dy = adam_scalar(&mut m.y, &mut v.y, g.y, lr, bc1, bc2);
            let dz = adam_scalar(&mut m.z, &mut v.z, g.z, lr, bc1, bc2);
            Vec3 {
                x: dx,
                y: dy,
                z: dz,
            }
        };

        for (i, plane) in convex.planes.iter_mut().enumerate() {
            plane.normal -= adam_vec(
                &mut mom.m_normals[i],
                &mut mom.v_normals[i],
                g.grad_normals[i],
                schedule.lr_planes,
                bc1_p,
                bc2_p,
            );
            plane.offset -= adam_scalar(
                &mut mom.m_offsets[i],
                &mut mom.v_offsets[i],
                g.grad_offsets[i],
                schedule.lr_planes,
                bc1_p,
                bc2_p,
            );
            // Positivity projection keeps the origin feasible.
            plane.offset = plane.offset.max(schedule.b_min);
            // Gauge renormalization; the polytope is invariant under it.
            let len = plane.normal.norm();
            if !(0.5..=2.0).contains(&len) && len > 0.0 {
                plane.normal = plane.normal / len;
                plane.offset /= len;
                plane.offset = plane.offset.max(schedule.b_min);
            }
        }
        convex.translation -= adam_vec(
            &mut mom.m_translation,
            &mut mom.v_translation,
            g.grad_translation,
            schedule.lr_translation,
            bc1_t,
            bc2_t,
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Schedule
// ---------------------------------------------------------------------------

/// Step counts, event placement and annealing for [`fit`].
#[derive(Clone, Debug)]
pub struct Schedule {
    pub total_steps: usize,
    /// Steps (1-based) at which densify + spawn events run.
    pub densify_steps: Vec<usize>,
    /// Purge cadence in steps; 0 disables purging.
    pub purge_every: usize,
    /// Convex purge threshold as a fraction of the region volume.
    pub volume_threshold_rel: f64,
    /// Soft-rasterizer falloff annealed geometrically from start to end.
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub lr_translation: f64,
    pub lr_planes: f64,
    pub b_min: f64,
    /// Relative geometric tolerance for hulls and topology.
    pub tolerance: f64,
}

impl Schedule {
    /// Defaults for a run of `total_steps`: 10 densify/spawn events evenly
    /// spaced over the first 80% of steps, purging every 250.
    pub fn for_steps(total_steps: usize) -> Schedule {
        let events = 10usize;
        let densify_steps = (1..=events)
            .map(|i| ((i as f64 / events as f64) * 0.8 * total_steps as f64).round() as usize)
            .filter(|&s| s >= 1 && s < total_steps)
            .collect();
        Schedule {
            total_steps,
            densify_steps,
            purge_every: 250,
            volume_threshold_rel: 1e-5,
            sigma_start: 1.0,
            sigma_end: 0.0625,
            lr_translation: 1e-2,
            lr_planes: 1e-3,
            b_min: B_MIN,
            tolerance: crate::hull::DEFAULT_TOLERANCE,
        }
    }

    pub fn sigma_at(&self, step: usize) -> f64 {
        if self.total_steps <= 1 {
            return self.sigma_start;
        }
        let t = step as f64 / (self.total_steps - 1) as f64;
        self.sigma_start * (self.sigma_end / self.sigma_start).powf(t)
    }
}

impl Default for Schedule {
    fn default() -> Schedule {
        Schedule::for_steps(20000)
    }
}

// ---------------------------------------------------------------------------
// Purging, densification, spawning
// ---------------------------------------------------------------------------

/// Removes convexes whose mesh volume falls below `threshold` (absolute,
/// scene units cubed); unbuildable convexes count as zero volume. Returns
/// the removed ids. Remaining convexes are untouched.
pub fn purge_convexes(
    scene: &mut Scene,
    state: &mut OptimizerState,
    threshold: f64,
    tolerance: f64,
) -> Vec<usize> {
    let mut removed = Vec::new();
    scene.convexes.retain(|c| {
        let volume = intersect_halfspaces(&c.planes, tolerance)
            .and_then(|topo| build_mesh(c, &topo))
            .map(|mesh| signed_volume(&mesh))
            .unwrap_or(0.0);
        if volume < threshold {
            removed.push(c.id);
            false
        } else {
            true
        }
    });
    for id in &removed {
        state.moments.remove(id);
    }
    removed
}

/// Drops planes whose dual point lies strictly inside the dual hull, never
/// going below 4 planes per convex; optimizer moments are compacted to
/// match. Returns the number of removed planes.
pub fn purge_planes(scene: &mut Scene, state: &mut OptimizerState, tolerance: f64) -> usize {
    let mut removed_total = 0;
    for convex in &mut scene.convexes {
        let Ok(redundant) = redundant_planes(&convex.planes, tolerance) else {
            continue;
        };
        if redundant.is_empty() {
            continue;
        }
        let keep_floor = convex.planes.len().saturating_sub(4);
        let removed: Vec<usize> = redundant.into_iter().take(keep_floor).collect();
        if removed.is_empty() {
            continue;
        }
        for &i in removed.iter().rev() {
            convex.planes.remove(i);
        }
        if let Some(mom) = state.moments.get_mut(&convex.id) {
            if mom.m_normals.len() > convex.planes.len() {
                mom.remove_plane_entries(&removed);
            }
        }
        removed_total += removed.len();
    }
    removed_total
}

/// Adds curvature capacity to one convex: mesh it in the local frame, apply
/// one Loop subdivision, and refit one plane per merged facet of the
/// subdivided hull. Loop shrinkage keeps the local origin interior, so all
/// new offsets stay positive.
pub fn densify(poly: &ConvexPolyhedron, tolerance: f64) -> Result<ConvexPolyhedron, OptimizeError> {
    let topo = intersect_halfspaces(&poly.planes, tolerance)?;
    let local = ConvexPolyhedron::new(poly.id, poly.planes.clone(), Vec3::ZERO);
    let mesh = build_mesh(&local, &topo)?;
    let subdivided = loop_subdivide(&mesh)?;
    let points: Vec<Vec3> = subdivided.positions().collect();
    let hull = convex_hull_3d(&points, tolerance).map_err(PolytopeError::Hull)?;
    let planes: Vec<Hyperplane> = hull
        .facets
        .iter()
        .map(|f| Hyperplane::new(f.normal, f.offset))
        .collect();
    if planes.len() < 4 || planes.iter().any(|p| p.offset <= 0.0) {
        return Err(OptimizeError::Geometry(PolytopeError::UnboundedOrDegenerate));
    }
    Ok(ConvexPolyhedron::new(poly.id, planes, poly.translation))
}

/// Restores the convex count by drawing fresh random convexes; existing
/// convexes are untouched. Deterministic in `seed`.
pub fn spawn(
    scene: &mut Scene,
    state: &mut OptimizerState,
    target_count: usize,
    n_planes: usize,
    seed: u64,
) -> usize {
    let mut rng = Rng::new(seed);
    spawn_with_rng(scene, state, target_count, n_planes, &mut rng)
}

fn spawn_with_rng(
    scene: &mut Scene,
    state: &mut OptimizerState,
    target_count: usize,
    n_planes: usize,
    rng: &mut Rng,
) -> usize {
    let mut added = 0;
    while scene.convexes.len() < target_count {
        let region = scene.region;
        let c = random_convex(rng, &mut scene.next_id, n_planes, &region);
        state.moments.insert(c.id, ConvexMoments::zeros(n_planes));
        scene.convexes.push(c);
        added += 1;
    }
    added
}

// ---------------------------------------------------------------------------
// Fit loop
// ---------------------------------------------------------------------------

/// Observation hooks for [`fit`]; all methods default to no-ops.
pub trait FitObserver {
    fn on_step(&mut self, _step: usize, _loss: f64, _scene: &Scene) {}
    fn on_event(&mut self, _step: usize, _event: &FitEvent) {}
}

/// Silent observer.
pub struct NullObserver;

impl FitObserver for NullObserver {}

#[derive(Clone, Debug)]
pub enum FitEvent {
    PlanesPurged(usize),
    ConvexesPurged(Vec<usize>),
    Densified(usize),
    Spawned(usize),
    Respawned(usize),
}

pub struct FitResult {
    pub scene: Scene,
    pub loss_history: Vec<f64>,
}

/// Runs the full optimization: per step, build every convex's topology and
/// mesh, render all views softly, backpropagate the image L1 loss to plane
/// parameters, and take an Adam step; purge/densify/spawn on the schedule.
/// A convex whose intersection degenerates is respawned randomly.
pub fn fit(
    mut scene: Scene,
    targets: &[RenderTarget],
    schedule: &Schedule,
    observer: &mut dyn FitObserver,
) -> Result<FitResult, OptimizeError> {
    if targets.is_empty() {
        return Err(OptimizeError::InvalidConfig("need at least 1 target view".into()));
    }
    let mut state = OptimizerState::new();
    let mut rng = Rng::new(scene.seed ^ 0x50_4f_4c_59);
    let target_count = scene.convexes.len();
    let init_planes = scene.convexes.first().map_or(8, |c| c.planes.len());
    let volume_threshold = schedule.volume_threshold_rel * scene.region.volume();
    let mut loss_history = Vec::with_capacity(schedule.total_steps);

    for step in 0..schedule.total_steps {
        let cfg = SoftRasterConfig::with_sigma(schedule.sigma_at(step));

        // Geometry, respawning any convex that degenerated.
        let mut geoms: Vec<(PolytopeTopology, Mesh)> = Vec::with_capacity(scene.convexes.len());
        for ci in 0..scene.convexes.len() {
            let mut attempts = 0;
            loop {
                match build_geometry(&scene.convexes[ci], schedule.tolerance) {
                    Ok(g) => {
                        geoms.push(g);
                        break;
                    }
                    Err(_) => {
                        attempts += 1;
                        if attempts > 32 {
                            return Err(OptimizeError::RespawnFailed(attempts));
                        }
                        let region = scene.region;
                        let fresh =
                            random_convex(&mut rng, &mut scene.next_id, init_planes, &region);
                        state.moments.remove(&scene.convexes[ci].id);
                        state
                            .moments
                            .insert(fresh.id, ConvexMoments::zeros(init_planes));
                        observer.on_event(step, &FitEvent::Respawned(fresh.id));
                        scene.convexes[ci] = fresh;
                    }
                }
            }
        }
        let meshes: Vec<Mesh> = geoms.iter().map(|(_, m)| m.clone()).collect();

        // Render all views; deterministic order via indexed collect.
        let view_results: Result<Vec<(f64, Vec<Vec<Vec3>>)>, OptimizeError> = targets
            .par_iter()
            .map(|target| {
                let (img, tape) = raster_soft_forward(&meshes, &target.camera, &cfg);
                let (loss, pixel_grads) = image_l1(&img, &target.silhouette)?;
                let vgrads =
                    backward_from_tape(&meshes, &target.camera, &cfg, &tape, &pixel_grads)?;
                Ok((loss, vgrads))
            })
            .collect();
        let view_results = view_results?;

        let inv_views = 1.0 / targets.len() as f64;
        let mut loss = 0.0;
        let mut mesh_grads: Vec<Vec<Vec3>> = meshes
            .iter()
            .map(|m| vec![Vec3::ZERO; m.vertices.len()])
            .collect();
        for (view_loss, vgrads) in &view_results {
            loss += view_loss * inv_views;
            for (acc, g) in mesh_grads.iter_mut().zip(vgrads) {
                for (a, b) in acc.iter_mut().zip(g) {
                    *a += *b * inv_views;
                }
            }
        }

        // Mesh-vertex gradients back to plane parameters.
        let mut grads: Vec<ParamGradients> = Vec::with_capacity(scene.convexes.len());
        for (ci, (topo, mesh)) in geoms.iter().enumerate() {
            let mut topo_grads = vec![Vec3::ZERO; topo.vertices.len()];
            for (v, g) in mesh.vertices.iter().zip(&mesh_grads[ci]) {
                if let Some(src) = v.source {
                    topo_grads[src] += *g;
                }
            }
            grads.push(backprop_vertices(topo, &scene.convexes[ci], &topo_grads)?);
        }

        optimizer_step(&mut scene, &mut state, &grads, schedule)?;
        loss_history.push(loss);
        observer.on_step(step, loss, &scene);

        // Scheduled maintenance (1-based step counting for cadence).
        let now = step + 1;
        let densify_now = schedule.densify_steps.contains(&now);
        let purge_now =
            schedule.purge_every != 0 && now % schedule.purge_every == 0 && now < schedule.total_steps;
        if purge_now || densify_now {
            let removed = purge_planes(&mut scene, &mut state, schedule.tolerance);
            if removed > 0 {
                observer.on_event(step, &FitEvent::PlanesPurged(removed));
            }
            let purged = purge_convexes(&mut scene, &mut state, volume_threshold, schedule.tolerance);
            if !purged.is_empty() {
                observer.on_event(step, &FitEvent::ConvexesPurged(purged));
            }
        }
        if densify_now {
            let mut densified = 0;
            for ci in 0..scene.convexes.len() {
                match densify(&scene.convexes[ci], schedule.tolerance) {
                    Ok(updated) => {
                        let n = updated.planes.len();
                        scene.convexes[ci] = updated;
                        if let Some(mom) = state.moments.get_mut(&scene.convexes[ci].id) {
                            mom.reset_planes(n);
                        }
                        densified += 1;
                    }
                    Err(_) => {
                        // Degenerate during densification: leave it to the
                        // respawn path on the next step.
                        continue;
                    }
                }
            }
            observer.on_event(step, &FitEvent::Densified(densified));
            let added = spawn_with_rng(&mut scene, &mut state, target_count, init_planes, &mut rng);
            if added > 0 {
                observer.on_event(step, &FitEvent::Spawned(added));
            }
        }
    }

    Ok(FitResult {
        scene,
        loss_history,
    })
}

fn build_geometry(
    poly: &ConvexPolyhedron,
    tolerance: f64,
) -> Result<(PolytopeTopology, Mesh), PolytopeError> {
    let topo = intersect_halfspaces(&poly.planes, tolerance)?;
    let mesh = build_mesh(poly, &topo)?;
    Ok((topo, mesh))
}
