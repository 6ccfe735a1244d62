//! The high-level action space: eight physical actions and their arguments.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn label(self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LightState {
    On,
    Off,
}

/// SpeedChange argument: the desired cruise speed moves by exactly 5 km/h.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpeedDelta {
    Up,
    Down,
}

pub const SPEED_STEP_KMH: f64 = 5.0;

impl SpeedDelta {
    pub fn kmh(self) -> f64 {
        match self {
            SpeedDelta::Up => SPEED_STEP_KMH,
            SpeedDelta::Down => -SPEED_STEP_KMH,
        }
    }
}

/// Action name without its argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionKind {
    LaneFollow,
    LaneSwitch,
    JTurn,
    UTurn,
    Stop,
    Start,
    SpeedChange,
    LightChange,
}

impl ActionKind {
    pub const ALL: [ActionKind; 8] = [
        ActionKind::LaneFollow,
        ActionKind::LaneSwitch,
        ActionKind::JTurn,
        ActionKind::UTurn,
        ActionKind::Stop,
        ActionKind::Start,
        ActionKind::SpeedChange,
        ActionKind::LightChange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::LaneFollow => "LaneFollow",
            ActionKind::LaneSwitch => "LaneSwitch",
            ActionKind::JTurn => "JTurn",
            ActionKind::UTurn => "UTurn",
            ActionKind::Stop => "Stop",
            ActionKind::Start => "Start",
            ActionKind::SpeedChange => "SpeedChange",
            ActionKind::LightChange => "LightChange",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ActionKind::LaneFollow => "Default behaviour, follow the current lane.",
            ActionKind::LaneSwitch => "Switch to a neighboring lane.",
            ActionKind::JTurn => "Turn to a connecting road at a junction.",
            ActionKind::UTurn => "Make a U-turn to the opposite direction.",
            ActionKind::Stop => "Brake the vehicle manually.",
            ActionKind::Start => "Start the vehicle manually.",
            ActionKind::SpeedChange => "Change the desired cruise speed by 5 km/h.",
            ActionKind::LightChange => "Change the front light state.",
        }
    }

    /// Allowed argument labels, empty for argument-free actions.
    pub fn argument_options(self) -> &'static [&'static str] {
        match self {
            ActionKind::LaneSwitch | ActionKind::JTurn => &["left", "right"],
            ActionKind::SpeedChange => &["+5", "-5"],
            ActionKind::LightChange => &["on", "off"],
            _ => &[],
        }
    }

    pub fn takes_argument(self) -> bool {
        !self.argument_options().is_empty()
    }

    /// Case-insensitive name lookup; "SwitchLane" is accepted for LaneSwitch.
    pub fn parse(token: &str) -> Option<Self> {
        let t = token.trim();
        if t.eq_ignore_ascii_case("SwitchLane") {
            return Some(ActionKind::LaneSwitch);
        }
        ActionKind::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(t))
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhysicalAction {
    LaneFollow,
    LaneSwitch(Direction),
    JTurn(Direction),
    UTurn,
    Stop,
    Start,
    SpeedChange(SpeedDelta),
    LightChange(LightState),
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ActionError {
    #[error("unknown action {0:?}")]
    UnknownAction(String),
    #[error("{kind} requires an argument ({options})")]
    MissingArgument { kind: ActionKind, options: String },
    #[error("{kind} takes no argument, got {arg:?}")]
    UnexpectedArgument { kind: ActionKind, arg: String },
    #[error("invalid argument {arg:?} for {kind}")]
    InvalidArgument { kind: ActionKind, arg: String },
}

impl PhysicalAction {
    pub fn kind(&self) -> ActionKind {
        match self {
            PhysicalAction::LaneFollow => ActionKind::LaneFollow,
            PhysicalAction::LaneSwitch(_) => ActionKind::LaneSwitch,
            PhysicalAction::JTurn(_) => ActionKind::JTurn,
            PhysicalAction::UTurn => ActionKind::UTurn,
            PhysicalAction::Stop => ActionKind::Stop,
            PhysicalAction::Start => ActionKind::Start,
            PhysicalAction::SpeedChange(_) => ActionKind::SpeedChange,
            PhysicalAction::LightChange(_) => ActionKind::LightChange,
        }
    }

    pub fn argument(&self) -> Option<&'static str> {
        match self {
            PhysicalAction::LaneSwitch(d) | PhysicalAction::JTurn(d) => Some(d.label()),
            PhysicalAction::SpeedChange(SpeedDelta::Up) => Some("+5"),
            PhysicalAction::SpeedChange(SpeedDelta::Down) => Some("-5"),
            PhysicalAction::LightChange(LightState::On) => Some("on"),
            PhysicalAction::LightChange(LightState::Off) => Some("off"),
            _ => None,
        }
    }

    /// Builds an action from a kind and an optional argument, checking the
    /// argument against the kind.
    pub fn with_argument(kind: ActionKind, arg: Option<&str>) -> Result<Self, ActionError> {
        let arg = arg.map(str::trim).filter(|a| !a.is_empty());
        let bad = |a: &str| ActionError::InvalidArgument { kind, arg: a.to_string() };
        let missing = || ActionError::MissingArgument { kind, options: kind.argument_options().join("/") };
        let direction = |a: &str| match a.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Direction::Left),
            "right" | "r" => Ok(Direction::Right),
            _ => Err(bad(a)),
        };
        match kind {
            ActionKind::LaneSwitch | ActionKind::JTurn => {
                let d = direction(arg.ok_or_else(missing)?)?;
                Ok(if kind == ActionKind::JTurn { PhysicalAction::JTurn(d) } else { PhysicalAction::LaneSwitch(d) })
            }
            ActionKind::SpeedChange => {
                let a = arg.ok_or_else(missing)?;
                match a.replace(' ', "").to_ascii_lowercase().trim_end_matches("km/h") {
                    "+5" | "5" | "up" | "faster" => Ok(PhysicalAction::SpeedChange(SpeedDelta::Up)),
                    "-5" | "down" | "slower" => Ok(PhysicalAction::SpeedChange(SpeedDelta::Down)),
                    _ => Err(bad(a)),
                }
            }
            ActionKind::LightChange => {
                let a = arg.ok_or_else(missing)?;
                match a.to_ascii_lowercase().as_str() {
                    "on" => Ok(PhysicalAction::LightChange(LightState::On)),
                    "off" => Ok(PhysicalAction::LightChange(LightState::Off)),
                    _ => Err(bad(a)),
                }
            }
            _ => {
                if let Some(a) = arg {
                    return Err(ActionError::UnexpectedArgument { kind, arg: a.to_string() });
                }
                Ok(match kind {
                    ActionKind::LaneFollow => PhysicalAction::LaneFollow,
                    ActionKind::UTurn => PhysicalAction::UTurn,
                    ActionKind::Stop => PhysicalAction::Stop,
                    ActionKind::Start => PhysicalAction::Start,
                    _ => unreachable!(),
                })
            }
        }
    }
}

impl fmt::Display for PhysicalAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.argument() {
            Some(a) => write!(f, "{}({a})", self.kind()),
            None => f.write_str(self.kind().name()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ActionWire {
    p: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arg: Option<String>,
}

impl Serialize for PhysicalAction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ActionWire { p: self.kind().name().to_string(), arg: self.argument().map(str::to_string) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PhysicalAction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = ActionWire::deserialize(d)?;
        let kind =
            ActionKind::parse(&w.p).ok_or_else(|| serde::de::Error::custom(ActionError::UnknownAction(w.p.clone())))?;
        PhysicalAction::with_argument(kind, w.arg.as_deref()).map_err(serde::de::Error::custom)
    }
}
