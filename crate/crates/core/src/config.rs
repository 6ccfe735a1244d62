//! Simulation and harness configuration (`sdnloop-sim/1`). Every key is
//! optional; missing keys take the defaults below.

use serde::{Deserialize, Serialize};

use crate::features::WindowMode;

pub const SIM_SCHEMA: &str = "sdnloop-sim/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    /// Wheelbase, m.
    pub wheelbase: f64,
    pub max_steer_deg: f64,
    /// Peak acceleration and braking, m/s².
    pub a_max: f64,
    /// Speed cap, m/s.
    pub v_cap: f64,
    /// Body length and width for collision checks, m.
    pub length: f64,
    pub width: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self { wheelbase: 2.9, max_steer_deg: 35.0, a_max: 3.0, v_cap: 20.0, length: 4.6, width: 1.9 }
    }
}

impl VehicleParams {
    pub fn max_steer(&self) -> f64 {
        self.max_steer_deg.to_radians()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlParams {
    pub lookahead_min: f64,
    pub lookahead_time: f64,
    /// Throttle per m/s of speed error.
    pub speed_gain: f64,
    pub safety_gap: f64,
    pub red_light_window: f64,
    pub lane_switch_duration: f64,
    pub auto_safety_stop: bool,
    /// Multiplier on `a_max` in rain or fog.
    pub weather_accel_factor: f64,
    /// Fraction of available deceleration used for planned stops.
    pub comfort_decel_fraction: f64,
    pub uturn_speed: f64,
}

impl Default for ControlParams {
    fn default() -> Self {
        Self {
            lookahead_min: 4.0,
            lookahead_time: 0.8,
            speed_gain: 1.0,
            safety_gap: 6.0,
            red_light_window: 12.0,
            lane_switch_duration: 3.0,
            auto_safety_stop: true,
            weather_accel_factor: 0.7,
            comfort_decel_fraction: 0.6,
            uturn_speed: 3.0,
        }
    }
}

/// History caps for decision requests; `None` keeps everything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextBudget {
    pub dialogue: Option<usize>,
    pub actions: Option<usize>,
}

impl Default for ContextBudget {
    fn default() -> Self {
        Self { dialogue: Some(40), actions: Some(60) }
    }
}

impl ContextBudget {
    pub const UNLIMITED: ContextBudget = ContextBudget { dialogue: None, actions: None };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub schema: String,
    pub vehicle: VehicleParams,
    pub control: ControlParams,
    pub default_cruise_kmh: f64,
    pub tick_hz: u32,
    pub decision_hz: u32,
    pub arrival_radius: f64,
    pub arrival_speed: f64,
    pub context: ContextBudget,
    pub agent_timeout_s: f64,
    pub allow_initial_uturn: bool,
    pub initial_uturn_penalty: f64,
    pub window_mode: WindowMode,
    pub move_set: Vec<String>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            schema: SIM_SCHEMA.to_string(),
            vehicle: VehicleParams::default(),
            control: ControlParams::default(),
            default_cruise_kmh: 30.0,
            tick_hz: 20,
            decision_hz: 2,
            arrival_radius: 15.0,
            arrival_speed: 0.5,
            context: ContextBudget::default(),
            agent_timeout_s: 10.0,
            allow_initial_uturn: false,
            initial_uturn_penalty: 40.0,
            window_mode: WindowMode::default(),
            move_set: crate::harness::DEFAULT_MOVE_SET.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config schema must be \"{SIM_SCHEMA}\", found \"{0}\"")]
    Schema(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig = serde_json::from_str(text)?;
        if cfg.schema != SIM_SCHEMA {
            return Err(ConfigError::Schema(cfg.schema));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.tick_hz == 0 || self.decision_hz == 0 {
            return bad("tick_hz and decision_hz must be positive");
        }
        if self.tick_hz % self.decision_hz != 0 {
            return bad("tick_hz must be a multiple of decision_hz");
        }
        if !(self.vehicle.wheelbase > 0.0 && self.vehicle.a_max > 0.0 && self.vehicle.v_cap > 0.0) {
            return bad("vehicle parameters must be positive");
        }
        if !(self.control.lane_switch_duration > 0.0) {
            return bad("lane_switch_duration must be positive");
        }
        if self.move_set.is_empty() {
            return bad("move_set must not be empty");
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.tick_hz as f64
    }

    pub fn ticks_per_decision(&self) -> u64 {
        (self.tick_hz / self.decision_hz) as u64
    }
}
