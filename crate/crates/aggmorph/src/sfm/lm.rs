//! Levenberg-Marquardt refinement of the mask-weighted reprojection error.
//!
//! Parametrization per iteration: rotations move on the group via right
//! multiplication `R * exp(skew(delta))`, translations and points move
//! additively. The gauge is fixed by freezing camera 0 completely and
//! restricting camera 1's translation to the sphere of its current norm,
//! leaving exactly `6(m-1) - 1 + 3n` free parameters. Intrinsics stay
//! fixed.
//!
//! Damping starts at 1e-3 and scales by 10 on rejected steps and 0.1 on
//! accepted ones; only strictly decreasing steps are accepted, so the
//! sequence of accepted objectives is monotone by construction.

use super::{masked_error, project, SfmError, SfmScene};
use crate::mesh::skew;
use nalgebra::{DMatrix, DVector, Matrix2x3, Matrix3x2, Matrix3x4, Rotation3, Vector2, Vector3};

#[derive(Debug, Clone, PartialEq)]
pub struct BundleOptions {
    pub max_iterations: usize,
    pub initial_damping: f64,
    pub damping_increase: f64,
    pub damping_decrease: f64,
    /// Exceeding this damping aborts with `DivergenceDetected`.
    pub max_damping: f64,
    /// Relative objective decrease below which iteration stops.
    pub objective_tolerance: f64,
    /// Infinity-norm of the objective gradient below which iteration stops.
    pub gradient_tolerance: f64,
}

impl Default for BundleOptions {
    fn default() -> Self {
        BundleOptions {
            max_iterations: 100,
            initial_damping: 1e-3,
            damping_increase: 10.0,
            damping_decrease: 0.1,
            max_damping: 1e12,
            objective_tolerance: 1e-10,
            gradient_tolerance: 1e-8,
        }
    }
}

/// Why the iteration stopped. All three are successful terminations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ObjectiveConverged,
    GradientConverged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleReport {
    pub initial_objective: f64,
    pub final_objective: f64,
    /// Outer iterations that attempted at least one step.
    pub iterations: usize,
    pub termination: Termination,
    /// Objective after the initial evaluation and after every accepted
    /// step; strictly decreasing from the second entry on.
    pub accepted_objectives: Vec<f64>,
}

/// Column layout of the packed parameter vector.
struct Layout {
    /// Column of each camera's first parameter; `None` for frozen camera 0.
    cam_offset: Vec<Option<usize>>,
    point_offset: usize,
    n_params: usize,
}

impl Layout {
    fn build(scene: &SfmScene) -> Result<Layout, SfmError> {
        let mut cam_offset = Vec::with_capacity(scene.cameras.len());
        let mut col = 0;
        for i in 0..scene.cameras.len() {
            match i {
                0 => cam_offset.push(None),
                1 => {
                    if scene.cameras[1].translation.norm() <= 1e-12 {
                        return Err(SfmError::InvalidConfig(
                            "camera 1 translation has zero norm; the scale gauge is undefined"
                                .to_string(),
                        ));
                    }
                    cam_offset.push(Some(col));
                    col += 5;
                }
                _ => {
                    cam_offset.push(Some(col));
                    col += 6;
                }
            }
        }
        Ok(Layout {
            cam_offset,
            point_offset: col,
            n_params: col + 3 * scene.points.len(),
        })
    }

    fn cam_dof(&self, cam: usize) -> usize {
        match cam {
            0 => 0,
            1 => 5,
            _ => 6,
        }
    }
}

/// Orthonormal basis of the plane perpendicular to camera 1's translation;
/// moving inside it keeps the gauge-fixing norm to first order, and the
/// retraction in [`apply_step`] keeps it exactly.
fn tangent_basis(t: &Vector3<f64>) -> Matrix3x2<f64> {
    let dir = t.normalize();
    let seed = if dir.x.abs() <= dir.y.abs() && dir.x.abs() <= dir.z.abs() {
        Vector3::x()
    } else if dir.y.abs() <= dir.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let b1 = dir.cross(&seed).normalize();
    let b2 = dir.cross(&b1).normalize();
    Matrix3x2::from_columns(&[b1, b2])
}

/// Moves every free parameter by the packed step and returns the new scene.
/// This is the exact map the Jacobian from [`linearize`] is taken against.
pub fn apply_step(scene: &SfmScene, step: &DVector<f64>) -> Result<SfmScene, SfmError> {
    let layout = Layout::build(scene)?;
    if step.len() != layout.n_params {
        return Err(SfmError::InvalidConfig(format!(
            "step has {} entries, layout needs {}",
            step.len(),
            layout.n_params
        )));
    }
    let mut out = scene.clone();
    for (i, cam) in out.cameras.iter_mut().enumerate() {
        let Some(o) = layout.cam_offset[i] else {
            continue;
        };
        let delta = Vector3::new(step[o], step[o + 1], step[o + 2]);
        let rotated =
            Rotation3::from_scaled_axis(cam.rotation) * Rotation3::from_scaled_axis(delta);
        cam.rotation = rotated.scaled_axis();
        if i == 1 {
            let basis = tangent_basis(&cam.translation);
            let radius = cam.translation.norm();
            let moved = cam.translation + basis * Vector2::new(step[o + 3], step[o + 4]);
            cam.translation = moved * (radius / moved.norm());
        } else {
            cam.translation += Vector3::new(step[o + 3], step[o + 4], step[o + 5]);
        }
    }
    for (j, point) in out.points.iter_mut().enumerate() {
        let o = layout.point_offset + 3 * j;
        point.coords += Vector3::new(step[o], step[o + 1], step[o + 2]);
    }
    Ok(out)
}

/// Weighted residual vector and its dense Jacobian, two rows per
/// observation in scene order. Zero-weight observations contribute zero
/// rows and are never projected.
pub fn linearize(scene: &SfmScene) -> Result<(DVector<f64>, DMatrix<f64>), SfmError> {
    scene.validate()?;
    let layout = Layout::build(scene)?;
    let mut residuals = DVector::zeros(2 * scene.observations.len());
    let mut jacobian = DMatrix::zeros(2 * scene.observations.len(), layout.n_params);
    for_each_block(scene, &layout, |oi, ctx| {
        let row = 2 * oi;
        residuals[row] = ctx.residual.x;
        residuals[row + 1] = ctx.residual.y;
        for c in 0..3 {
            jacobian[(row, ctx.point_col + c)] = ctx.point_block[(0, c)];
            jacobian[(row + 1, ctx.point_col + c)] = ctx.point_block[(1, c)];
        }
        if let Some((col, dof)) = ctx.cam_cols {
            for c in 0..dof {
                jacobian[(row, col + c)] = ctx.cam_block[(0, c)];
                jacobian[(row + 1, col + c)] = ctx.cam_block[(1, c)];
            }
        }
    })?;
    Ok((residuals, jacobian))
}

/// Per-observation linearization handed to the accumulation callback.
struct BlockContext {
    residual: Vector2<f64>,
    point_col: usize,
    point_block: Matrix2x3<f64>,
    /// Camera column offset and parameter count, when the camera is free.
    cam_cols: Option<(usize, usize)>,
    cam_block: nalgebra::SMatrix<f64, 2, 6>,
}

fn for_each_block(
    scene: &SfmScene,
    layout: &Layout,
    mut sink: impl FnMut(usize, &BlockContext),
) -> Result<(), SfmError> {
    let rotations: Vec<_> = scene.cameras.iter().map(|c| c.rotation_matrix()).collect();
    let projections: Vec<Matrix3x4<f64>> = scene
        .cameras
        .iter()
        .map(|c| c.projection_matrix())
        .collect();
    let t1_basis = if scene.cameras.len() > 1 {
        Some(tangent_basis(&scene.cameras[1].translation))
    } else {
        None
    };
    for (oi, obs) in scene.observations.iter().enumerate() {
        if obs.weight == 0.0 {
            continue;
        }
        let sqrt_w = obs.weight.sqrt();
        let cam = &scene.cameras[obs.camera];
        let x = &scene.points[obs.point];
        let predicted =
            project(&projections[obs.camera], x).map_err(|failure| SfmError::Projection {
                camera: obs.camera,
                point: obs.point,
                failure,
            })?;
        let r = rotations[obs.camera];
        let u = r * x.coords + cam.translation;
        let f = cam.focal_px;
        let d_pix_d_u = Matrix2x3::new(
            f / u.z,
            0.0,
            -f * u.x / (u.z * u.z),
            0.0,
            f / u.z,
            -f * u.y / (u.z * u.z),
        );

        let point_block = -sqrt_w * d_pix_d_u * r;
        let mut cam_block = nalgebra::SMatrix::<f64, 2, 6>::zeros();
        let cam_cols = layout.cam_offset[obs.camera].map(|col| {
            let rot_block = sqrt_w * d_pix_d_u * r * skew(&x.coords);
            cam_block.fixed_view_mut::<2, 3>(0, 0).copy_from(&rot_block);
            if obs.camera == 1 {
                let basis = t1_basis.expect("camera 1 exists");
                let t_block = -sqrt_w * d_pix_d_u * basis;
                cam_block.fixed_view_mut::<2, 2>(0, 3).copy_from(&t_block);
            } else {
                let t_block = -sqrt_w * d_pix_d_u;
                cam_block.fixed_view_mut::<2, 3>(0, 3).copy_from(&t_block);
            }
            (col, layout.cam_dof(obs.camera))
        });

        let ctx = BlockContext {
            residual: sqrt_w * (obs.pixel - predicted),
            point_col: layout.point_offset + 3 * obs.point,
            point_block,
            cam_cols,
            cam_block,
        };
        sink(oi, &ctx);
    }
    Ok(())
}

/// Normal equations accumulated block-wise: `(J^T J, J^T r)`.
fn normal_equations(
    scene: &SfmScene,
    layout: &Layout,
) -> Result<(DMatrix<f64>, DVector<f64>), SfmError> {
    let n = layout.n_params;
    let mut jtj = DMatrix::zeros(n, n);
    let mut jtr = DVector::zeros(n);
    for_each_block(scene, layout, |_, ctx| {
        let p = ctx.point_col;
        let pb = &ctx.point_block;
        let ptp = pb.transpose() * pb;
        for a in 0..3 {
            for b in 0..3 {
                jtj[(p + a, p + b)] += ptp[(a, b)];
            }
        }
        let ptr = pb.transpose() * ctx.residual;
        for a in 0..3 {
            jtr[p + a] += ptr[a];
        }
        if let Some((c, dof)) = ctx.cam_cols {
            let cb = &ctx.cam_block;
            for a in 0..dof {
                for b in 0..dof {
                    let mut acc = 0.0;
                    for row in 0..2 {
                        acc += cb[(row, a)] * cb[(row, b)];
                    }
                    jtj[(c + a, c + b)] += acc;
                }
                for b in 0..3 {
                    let mut acc = 0.0;
                    for row in 0..2 {
                        acc += cb[(row, a)] * pb[(row, b)];
                    }
                    jtj[(c + a, p + b)] += acc;
                    jtj[(p + b, c + a)] += acc;
                }
                let mut acc = 0.0;
                for row in 0..2 {
                    acc += cb[(row, a)] * ctx.residual[row];
                }
                jtr[c + a] += acc;
            }
        }
    })?;
    Ok((jtj, jtr))
}

/// Refines cameras and points to minimize the mask-weighted reprojection
/// error. Returns the refined scene and a convergence report.
///
/// Fails up front when any point has fewer than two positively weighted
/// observations, and during iteration when the damping escalates past
/// `max_damping` without finding a decreasing step.
pub fn bundle_adjust(
    scene: &SfmScene,
    options: &BundleOptions,
) -> Result<(SfmScene, BundleReport), SfmError> {
    scene.validate()?;
    let mut weighted_views = vec![0usize; scene.points.len()];
    for obs in &scene.observations {
        if obs.weight > 0.0 {
            weighted_views[obs.point] += 1;
        }
    }
    for (point, &views) in weighted_views.iter().enumerate() {
        if views < 2 {
            return Err(SfmError::UnderConstrained {
                point,
                weighted_views: views,
            });
        }
    }
    let layout = Layout::build(scene)?;

    let mut current = scene.clone();
    let mut objective = masked_error(&current)?;
    let initial_objective = objective;
    let mut accepted = vec![objective];
    let mut damping = options.initial_damping;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    'outer: for _ in 0..options.max_iterations {
        let (jtj, jtr) = normal_equations(&current, &layout)?;
        if !jtr.iter().all(|g| g.is_finite()) {
            return Err(SfmError::SingularSystem);
        }
        let gradient_inf = 2.0 * jtr.amax();
        if gradient_inf < options.gradient_tolerance || layout.n_params == 0 {
            termination = Termination::GradientConverged;
            break;
        }
        iterations += 1;

        loop {
            let mut damped = jtj.clone();
            for d in 0..layout.n_params {
                damped[(d, d)] += damping * jtj[(d, d)].max(1e-12);
            }
            let step = nalgebra::Cholesky::new(damped).map(|ch| ch.solve(&(-&jtr)));
            let candidate_obj = step.as_ref().and_then(|s| {
                let candidate = apply_step(&current, s).ok()?;
                let obj = masked_error(&candidate).ok()?;
                obj.is_finite().then_some((candidate, obj))
            });
            match candidate_obj {
                Some((candidate, new_obj)) if new_obj < objective => {
                    let rel = (objective - new_obj) / objective.max(f64::MIN_POSITIVE);
                    current = candidate;
                    objective = new_obj;
                    accepted.push(objective);
                    damping = (damping * options.damping_decrease).max(1e-15);
                    if rel < options.objective_tolerance {
                        termination = Termination::ObjectiveConverged;
                        break 'outer;
                    }
                    break;
                }
                _ => {
                    damping *= options.damping_increase;
                    if damping > options.max_damping {
                        return Err(SfmError::DivergenceDetected { damping });
                    }
                }
            }
        }
    }

    let report = BundleReport {
        initial_objective,
        final_objective: objective,
        iterations,
        termination,
        accepted_objectives: accepted,
    };
    Ok((current, report))
}
