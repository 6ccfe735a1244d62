//! Single-writer tick loop tying the world, executor and vehicle model
//! together.

use std::sync::Arc;

use thiserror::Error;

use crate::config::SimConfig;
use crate::motion::{
    apply_action, plan_controls, step_vehicle, update_tracking, vehicle_footprint, ControlCommand, ExecutorState,
    MotionError, PhysicalAction, TrackingEvent,
};
use crate::world::{step_world, MapGraph, WorldError, WorldState};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Outcome of one control tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickReport {
    pub command: ControlCommand,
    pub events: Vec<TrackingEvent>,
    /// Kind of the obstacle hit during this tick, if any.
    pub collision: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    pub map: Arc<MapGraph>,
    pub world: WorldState,
    pub exec: ExecutorState,
    pub cfg: SimConfig,
    pub tick: u64,
}

impl Simulator {
    pub fn new(map: Arc<MapGraph>, mut world: WorldState, cfg: SimConfig) -> Self {
        world.ego_front_reach = cfg.vehicle.wheelbase / 2.0 + cfg.vehicle.length / 2.0;
        let exec = ExecutorState::new(&world.vehicle);
        Self { map, world, exec, cfg, tick: 0 }
    }

    pub fn dt(&self) -> f64 {
        self.cfg.dt()
    }

    /// Applies an action; on error the executor is left unchanged.
    pub fn apply(&mut self, action: PhysicalAction) -> Result<(), MotionError> {
        self.exec = apply_action(&self.exec, action, &self.map, &self.world.vehicle, &self.cfg.vehicle)?;
        self.world.vehicle.lights_on = self.exec.lights_on;
        self.world.vehicle.cruise_kmh = self.exec.target_cruise_kmh;
        Ok(())
    }

    pub fn step(&mut self) -> Result<TickReport, SimError> {
        let dt = self.dt();
        let command = plan_controls(&self.exec, &self.world, &self.map, &self.cfg.vehicle, &self.cfg.control)?;
        let mut vehicle = step_vehicle(&self.world.vehicle, command, dt, &self.cfg.vehicle)?;
        let mut world = step_world(&self.world, dt)?;
        let events = update_tracking(&mut self.exec, &mut vehicle, &self.map, dt, &self.cfg.control)?;
        world.vehicle = vehicle;
        let body = vehicle_footprint(&world.vehicle, &self.cfg.vehicle);
        let collision = world.obstacles.iter().find(|o| o.footprint.overlaps(&body)).map(|o| o.kind.clone());
        self.world = world;
        self.tick += 1;
        Ok(TickReport { command, events, collision })
    }
}
