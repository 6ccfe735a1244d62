//! Executes high-level actions as throttle and steering on a kinematic
//! bicycle model.

mod action;
mod executor;
mod vehicle;

pub use action::{ActionError, ActionKind, Direction, LightState, PhysicalAction, SpeedDelta, SPEED_STEP_KMH};
pub use executor::{
    apply_action, available_exit, effective_accel, plan_controls, update_tracking, ExecutorState, JunctionTraversal,
    Maneuver, TrackingEvent,
};
pub use vehicle::{step_vehicle, vehicle_footprint, ControlCommand, STANDSTILL_SPEED};

use thiserror::Error;

use crate::world::WorldError;

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("time step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("cannot switch lanes to the {0}: no lane available")]
    NoLaneAvailable(&'static str),
    #[error("cannot {0} while inside a junction")]
    InJunction(&'static str),
    #[error("cannot {action} while {maneuver}")]
    Busy { action: &'static str, maneuver: &'static str },
    #[error("no opposing road within reach for a U-turn")]
    NoOpposingRoad,
    #[error("vehicle is off-road at ({x:.2}, {y:.2}); external reset required")]
    OffRoad { x: f64, y: f64 },
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    World(#[from] WorldError),
}
