//! Penalty contact between fingertip spheres and the handle box.
//!
//! Both fingertips are spheres of `ArmConfig::fingertip_radius`; the
//! handle is an axis-aligned box (widgets sit axis-aligned on the table).
//! Contact produces a normal force `k·penetration + c·approach_speed`,
//! with the damping term capped at a small multiple of the elastic term
//! so impacts ramp in smoothly, and the total clamped to be non-adhesive.
//! The same law, with the table plane as the surface, keeps fingertips
//! above the desk.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

/// Number of fingertip contact spheres.
pub const FINGER_COUNT: usize = 2;

/// Per-step contact summary, reported in world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactReport {
    /// Fingertip sphere centers.
    pub fingertip_pos: [[f64; 3]; FINGER_COUNT],
    /// Smallest signed fingertip-surface-to-handle-surface distance over
    /// both fingers (negative when penetrating).
    pub min_distance: f64,
    /// Total force the fingertips exert on the handle.
    pub contact_force: [f64; 3],
    /// Deepest fingertip penetration into the handle seen at any substep
    /// boundary during the step (0 when the step stayed clear).
    pub deepest_penetration: f64,
}

impl ContactReport {
    /// Deepest fingertip penetration into the handle (0 when clear).
    pub fn penetration(&self) -> f64 {
        (-self.min_distance).max(0.0)
    }

    pub fn contact_force_vec(&self) -> Vector3<f64> {
        Vector3::new(self.contact_force[0], self.contact_force[1], self.contact_force[2])
    }
}

/// Signed surface distance between a sphere and an axis-aligned box, plus
/// the outward unit normal (pointing from the box toward the sphere).
///
/// When the sphere center is inside the box the normal points out through
/// the nearest face and the distance is `-(face depth + radius)`.
pub fn sphere_box_distance(
    box_center: &Point3<f64>,
    half_extents: &Vector3<f64>,
    sphere_center: &Point3<f64>,
    radius: f64,
) -> (f64, Vector3<f64>) {
    let d = sphere_center - box_center;
    let clamped = Vector3::new(
        d.x.clamp(-half_extents.x, half_extents.x),
        d.y.clamp(-half_extents.y, half_extents.y),
        d.z.clamp(-half_extents.z, half_extents.z),
    );
    let delta = d - clamped;
    let dist = delta.norm();
    if dist > 0.0 {
        return (dist - radius, delta / dist);
    }

    // Center inside the box: exit through the nearest face.
    let depths = [
        half_extents.x - d.x.abs(),
        half_extents.y - d.y.abs(),
        half_extents.z - d.z.abs(),
    ];
    let mut axis = 0;
    for (i, depth) in depths.iter().enumerate() {
        if *depth < depths[axis] {
            axis = i;
        }
    }
    let mut normal = Vector3::zeros();
    normal[axis] = if d[axis] >= 0.0 { 1.0 } else { -1.0 };
    (-(depths[axis] + radius), normal)
}

/// The damping part of a penalty contact may not exceed this multiple of
/// the elastic part. A fixed damping coefficient sized for steady pushing
/// (tens of newtons at tens of microns) would otherwise produce a huge
/// spike on first touch, when penetration is still microscopic but the
/// approach speed is not, and the contact would whack the handle into a
/// rebound cycle instead of settling against it. Scaling the admissible
/// damping with penetration (as in Hunt-Crossley models) makes the force
/// ramp in continuously from zero.
const DAMPING_CAP_RATIO: f64 = 3.0;

/// Normal force magnitude for a penetrating contact.
///
/// `approach_speed` is the closing speed along the contact normal
/// (positive while the bodies move toward each other). The damping term is
/// limited to `DAMPING_CAP_RATIO` times the elastic term, and the result is
/// clamped at zero so the contact can push but never pull.
pub fn penalty_force(penetration: f64, approach_speed: f64, stiffness: f64, damping: f64) -> f64 {
    let elastic = stiffness * penetration;
    let cap = DAMPING_CAP_RATIO * elastic.max(0.0);
    let dissipative = (damping * approach_speed).clamp(-cap, cap);
    (elastic + dissipative).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_box() -> (Point3<f64>, Vector3<f64>) {
        (Point3::origin(), Vector3::new(0.5, 0.5, 0.5))
    }

    #[test]
    fn sphere_above_face() {
        let (c, h) = unit_box();
        let (dist, n) = sphere_box_distance(&c, &h, &Point3::new(0.0, 0.0, 1.0), 0.1);
        assert_relative_eq!(dist, 0.4, epsilon = 1e-12);
        assert_relative_eq!(n, Vector3::z(), epsilon = 1e-12);
    }

    #[test]
    fn sphere_at_corner_uses_diagonal_normal() {
        let (c, h) = unit_box();
        let (dist, n) = sphere_box_distance(&c, &h, &Point3::new(1.0, 1.0, 1.0), 0.1);
        let corner_gap = (3.0f64).sqrt() * 0.5;
        assert_relative_eq!(dist, corner_gap - 0.1, epsilon = 1e-12);
        assert_relative_eq!(n, Vector3::new(1.0, 1.0, 1.0).normalize(), epsilon = 1e-12);
    }

    #[test]
    fn sphere_center_inside_box() {
        let (c, h) = unit_box();
        let (dist, n) = sphere_box_distance(&c, &h, &Point3::new(0.0, 0.45, 0.0), 0.1);
        // Nearest face is +Y at depth 0.05; the sphere surface is another
        // radius past the center.
        assert_relative_eq!(dist, -0.15, epsilon = 1e-12);
        assert_relative_eq!(n, Vector3::y(), epsilon = 1e-12);
    }

    #[test]
    fn touching_surface_is_zero_distance() {
        let (c, h) = unit_box();
        let (dist, _) = sphere_box_distance(&c, &h, &Point3::new(0.6, 0.0, 0.0), 0.1);
        assert_relative_eq!(dist, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn penalty_force_never_pulls() {
        // Slow approach: damping well under the cap, plain sum.
        assert_eq!(penalty_force(0.001, 0.1, 1e5, 1e3), 100.0 + 100.0);
        // Fast separation while still penetrating: clamped to zero rather
        // than sticking (the damping cap alone would leave -200).
        assert_eq!(penalty_force(0.001, -10.0, 1e5, 1e3), 0.0);
        assert_eq!(penalty_force(0.0, 0.0, 1e5, 1e3), 0.0);
    }

    #[test]
    fn impact_damping_scales_with_penetration() {
        // First touch at speed: microscopic penetration, so the damping
        // term is capped at a multiple of the (tiny) elastic term instead
        // of delivering damping·speed all at once.
        let shallow = penalty_force(1e-6, 0.5, 1e5, 1e3);
        assert_relative_eq!(shallow, 0.4, epsilon = 1e-12);
        // Same speed at working penetration: cap no longer binds.
        let deep = penalty_force(1e-3, 0.05, 1e5, 1e3);
        assert_relative_eq!(deep, 150.0, epsilon = 1e-12);
    }
}
