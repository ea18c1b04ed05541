//! Widget geometry and 1-DOF handle mechanics.
//!
//! A widget is a fixed base on the table plus a cuboid handle that moves
//! along a single mechanism axis:
//!
//! - **Press** mechanisms (buttons and the deceptive widget): the handle
//!   travels straight down against a return spring; displacement is
//!   measured in metres of downward travel, starting at 0.
//! - **Slide** mechanisms (sliders): the handle rides a horizontal rail
//!   along the widget's width axis (+X), free inside the rail limits with
//!   stiff end stops; displacement starts at 0 (mid-rail) and the goal
//!   lies in the +X direction.
//!
//! `triggered` latches true the first time displacement reaches
//! `goal_displacement` toward the goal and never reverts within an
//! episode.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Result, SimError};

/// Maximum downward travel of press-mechanism handles (m).
pub const PRESS_TRAVEL_MAX: f64 = 0.025;
/// Default return-spring stiffness for press mechanisms (force/m).
pub const DEFAULT_SPRING_K: f64 = 60.0;
/// Default rail end-stop stiffness (force/m).
pub const DEFAULT_STOP_STIFFNESS: f64 = 5.0e4;

const GEOM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WidgetKind {
    Button,
    Slider,
    Deceptive,
}

impl WidgetKind {
    pub fn label(self) -> &'static str {
        match self {
            WidgetKind::Button => "button",
            WidgetKind::Slider => "slider",
            WidgetKind::Deceptive => "deceptive",
        }
    }
}

impl std::str::FromStr for WidgetKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "button" => Ok(WidgetKind::Button),
            "slider" => Ok(WidgetKind::Slider),
            "deceptive" => Ok(WidgetKind::Deceptive),
            other => Err(format!("unknown widget kind '{other}'")),
        }
    }
}

/// How the handle actually moves (hidden from observations).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mechanism {
    Press,
    Slide,
}

/// Static description of one widget instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidgetSpec {
    pub kind: WidgetKind,
    /// Handle (width, length, height) in metres; width along X, length
    /// along Y, height along Z.
    pub handle_dims: [f64; 3],
    /// Base (width, length) in metres; the base has no height.
    pub base_dims: [f64; 2],
    /// Base center on the table surface (z = 0).
    pub origin: [f64; 3],
    /// Unit direction of positive displacement: -Z for press mechanisms,
    /// +X for slide mechanisms.
    pub travel_axis: [f64; 3],
    /// Return-spring stiffness (press mechanisms; unused for sliders).
    pub spring_k: f64,
    /// Allowed displacement interval `(lo, hi)`.
    pub rail_limits: (f64, f64),
    /// Displacement at which the widget triggers: 0.02 m for press
    /// mechanisms, 0.04 m for slide mechanisms.
    pub goal_displacement: f64,
    /// End-stop stiffness used outside `rail_limits`.
    pub stop_stiffness: f64,
}

impl WidgetSpec {
    /// Square button: handle footprint `w × w × 0.03`, base one
    /// centimetre larger in each in-plane dimension.
    pub fn button(handle_side: f64, origin: [f64; 3], spring_k: f64) -> Self {
        Self {
            kind: WidgetKind::Button,
            handle_dims: [handle_side, handle_side, 0.03],
            base_dims: [handle_side + 0.01, handle_side + 0.01],
            origin,
            travel_axis: [0.0, 0.0, -1.0],
            spring_k,
            rail_limits: (0.0, PRESS_TRAVEL_MAX),
            goal_displacement: 0.02,
            stop_stiffness: DEFAULT_STOP_STIFFNESS,
        }
    }

    /// Slider: rectangular handle `w × l × 0.04` riding a rail along X;
    /// the base is 1 cm longer and 10 cm wider than the handle.
    pub fn slider(handle_width: f64, handle_length: f64, origin: [f64; 3]) -> Self {
        let half_travel = 0.05;
        Self {
            kind: WidgetKind::Slider,
            handle_dims: [handle_width, handle_length, 0.04],
            base_dims: [handle_width + 0.10, handle_length + 0.01],
            origin,
            travel_axis: [1.0, 0.0, 0.0],
            spring_k: 0.0,
            rail_limits: (-half_travel, half_travel),
            goal_displacement: 0.04,
            stop_stiffness: DEFAULT_STOP_STIFFNESS,
        }
    }

    /// The deceptive widget: slider-shaped (handle 2.5 cm × 5 cm × 4 cm on
    /// a 12.5 cm × 6 cm base) but press-operated with a 2 cm goal.
    pub fn deceptive(origin: [f64; 3], spring_k: f64) -> Self {
        Self {
            kind: WidgetKind::Deceptive,
            handle_dims: [0.025, 0.05, 0.04],
            base_dims: [0.125, 0.06],
            origin,
            travel_axis: [0.0, 0.0, -1.0],
            spring_k,
            rail_limits: (0.0, PRESS_TRAVEL_MAX),
            goal_displacement: 0.02,
            stop_stiffness: DEFAULT_STOP_STIFFNESS,
        }
    }

    pub fn mechanism(&self) -> Mechanism {
        match self.kind {
            WidgetKind::Button | WidgetKind::Deceptive => Mechanism::Press,
            WidgetKind::Slider => Mechanism::Slide,
        }
    }

    pub fn origin_point(&self) -> Point3<f64> {
        Point3::new(self.origin[0], self.origin[1], self.origin[2])
    }

    pub fn travel_dir(&self) -> Vector3<f64> {
        Vector3::new(self.travel_axis[0], self.travel_axis[1], self.travel_axis[2])
    }

    /// Handle center at the given displacement.
    pub fn handle_center(&self, displacement: f64) -> Point3<f64> {
        let rest = self.origin_point() + Vector3::new(0.0, 0.0, self.handle_dims[2] / 2.0);
        rest + self.travel_dir() * displacement
    }

    /// Handle center at zero displacement.
    pub fn rest_handle_center(&self) -> Point3<f64> {
        self.handle_center(0.0)
    }

    pub fn handle_half_extents(&self) -> Vector3<f64> {
        Vector3::new(
            self.handle_dims[0] / 2.0,
            self.handle_dims[1] / 2.0,
            self.handle_dims[2] / 2.0,
        )
    }

    /// Check the per-kind geometric invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SimError::BadWidgetSpec(msg));
        let [hw, hl, hh] = self.handle_dims;
        let [bw, bl] = self.base_dims;
        if self.handle_dims.iter().chain(self.base_dims.iter()).any(|d| *d <= 0.0) {
            return bad("dimensions must be positive".into());
        }
        match self.kind {
            WidgetKind::Button => {
                if (hw - hl).abs() > GEOM_TOL {
                    return bad(format!("button handle must be square, got {hw} x {hl}"));
                }
                if !(0.03 - GEOM_TOL..=0.05 + GEOM_TOL).contains(&hw) {
                    return bad(format!("button handle side {hw} outside [0.03, 0.05]"));
                }
                if (hh - 0.03).abs() > GEOM_TOL {
                    return bad(format!("button handle height must be 0.03, got {hh}"));
                }
                if (bw - (hw + 0.01)).abs() > GEOM_TOL || (bl - (hl + 0.01)).abs() > GEOM_TOL {
                    return bad("button base must be handle footprint + 0.01 per dimension".into());
                }
                if (self.goal_displacement - 0.02).abs() > GEOM_TOL {
                    return bad("press goal displacement must be 0.02".into());
                }
            }
            WidgetKind::Slider => {
                if !(0.04 - GEOM_TOL..=0.06 + GEOM_TOL).contains(&hl) {
                    return bad(format!("slider handle length {hl} outside [0.04, 0.06]"));
                }
                if !(0.01 - GEOM_TOL..=0.02 + GEOM_TOL).contains(&hw) {
                    return bad(format!("slider handle width {hw} outside [0.01, 0.02]"));
                }
                if hl <= hw {
                    return bad("slider handle length must exceed width".into());
                }
                if (hh - 0.04).abs() > GEOM_TOL {
                    return bad(format!("slider handle height must be 0.04, got {hh}"));
                }
                if (bl - (hl + 0.01)).abs() > GEOM_TOL || (bw - (hw + 0.10)).abs() > GEOM_TOL {
                    return bad("slider base must be length+0.01, width+0.10".into());
                }
                if (self.goal_displacement - 0.04).abs() > GEOM_TOL {
                    return bad("slide goal displacement must be 0.04".into());
                }
            }
            WidgetKind::Deceptive => {
                let want_handle = [0.025, 0.05, 0.04];
                let want_base = [0.125, 0.06];
                if self
                    .handle_dims
                    .iter()
                    .zip(want_handle.iter())
                    .any(|(a, b)| (a - b).abs() > GEOM_TOL)
                    || self.base_dims.iter().zip(want_base.iter()).any(|(a, b)| (a - b).abs() > GEOM_TOL)
                {
                    return bad("deceptive widget dimensions are fixed".into());
                }
                if (self.goal_displacement - 0.02).abs() > GEOM_TOL {
                    return bad("press goal displacement must be 0.02".into());
                }
            }
        }
        let axis = self.travel_dir();
        let want_axis = match self.mechanism() {
            Mechanism::Press => Vector3::new(0.0, 0.0, -1.0),
            Mechanism::Slide => Vector3::new(1.0, 0.0, 0.0),
        };
        if (axis - want_axis).norm() > GEOM_TOL {
            return bad("travel axis inconsistent with mechanism".into());
        }
        if self.rail_limits.0 >= self.rail_limits.1 {
            return bad("rail limits must satisfy lo < hi".into());
        }
        Ok(())
    }
}

/// Runtime state of the handle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidgetState {
    /// Displacement along the mechanism axis (m).
    pub displacement: f64,
    /// Displacement rate (m/s).
    pub velocity: f64,
    /// Latches true once displacement reaches the goal; never reverts.
    pub triggered: bool,
}

impl Default for WidgetState {
    fn default() -> Self {
        Self { displacement: 0.0, velocity: 0.0, triggered: false }
    }
}

impl WidgetState {
    /// Latch the trigger if the goal displacement has been reached.
    pub fn update_trigger(&mut self, spec: &WidgetSpec) {
        if self.displacement >= spec.goal_displacement {
            self.triggered = true;
        }
    }

    /// Handle velocity as a world-frame vector.
    pub fn world_velocity(&self, spec: &WidgetSpec) -> Vector3<f64> {
        spec.travel_dir() * self.velocity
    }
}

/// Passive force on the handle along the mechanism axis.
///
/// Press mechanisms: Hooke's-law return spring `-spring_k · displacement`.
/// Slide mechanisms: zero inside the rail limits. Both get a stiff
/// end-stop force outside the limits.
pub fn widget_restoring_force(spec: &WidgetSpec, state: &WidgetState) -> f64 {
    let s = state.displacement;
    let spring = match spec.mechanism() {
        Mechanism::Press => -spec.spring_k * s,
        Mechanism::Slide => 0.0,
    };
    let (lo, hi) = spec.rail_limits;
    let stop = if s < lo {
        spec.stop_stiffness * (lo - s)
    } else if s > hi {
        -spec.stop_stiffness * (s - hi)
    } else {
        0.0
    };
    spring + stop
}
