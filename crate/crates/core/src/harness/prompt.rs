//! Prompt assembly in the two supported styles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::ActionKind;

use super::{DecisionRequest, Speaker, TaskKind};

pub const SYSTEM_MESSAGE: &str = "You are DriVLMe. You are responsible for safely piloting a car according to the instructions of a passenger. You must communicate with the passenger and make high-level decisions regarding the current navigational goals.";
pub const DESCRIBE_PROMPT: &str = "Describe what you see.";
pub const PLANNING_INSTRUCTION: &str = "You have a planning tool that you can plan your path to the destination. You can call it by plan(destination), and it will return you a plan to get to your destination. If you don't have a destination in your mind, you can return plan(None).";
pub const DECISION_PROMPT: &str = "You can select a new navigational action and reply to the passenger.";

/// Section markers of the baseline prompt, in emission order.
pub const BASELINE_MARKERS: [&str; 8] = [
    "[Image]",
    "[Header]",
    "[Dialogue History]",
    "[Current Map]",
    "[Physical Action History]",
    "[Planner]",
    "[Question 1]",
    "[Question 2]",
];

const HEADER: &str = "You are the chauffeur of this car. Pilot it safely while talking with your passenger, who sits in the back and tells you where to go.";
const PLANNER_CALL: &str = "To get directions, call the planning module by writing plan(landmark) with the name of a landmark on the map. It answers with the turn to take at each intersection on the way.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    #[default]
    Drivlme,
    Gpt4Baseline,
}

impl PromptStyle {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "drivlme" => Some(Self::Drivlme),
            "gpt4_baseline" | "gpt4" => Some(Self::Gpt4Baseline),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("question 2 needs an answer to question 1")]
    MissingQ1Answer,
    #[error("question 1 answer {0:?} is not an action name")]
    InvalidQ1Answer(String),
}

fn speaker(s: Speaker) -> &'static str {
    match s {
        Speaker::Human => "Passenger",
        Speaker::Agent => "Driver",
    }
}

fn dialogue_lines(req: &DecisionRequest) -> String {
    if req.dialogue.is_empty() {
        return "(none)".to_string();
    }
    req.dialogue
        .iter()
        .map(|d| format!("[{:.1}s] {}: {}", d.t, speaker(d.speaker), d.utterance))
        .collect::<Vec<_>>()
        .join("\n")
}

fn action_lines(req: &DecisionRequest) -> String {
    if req.actions.is_empty() {
        return "(none)".to_string();
    }
    req.actions.iter().map(|a| format!("[{:.1}s] {}", a.t, a.action)).collect::<Vec<_>>().join("\n")
}

/// Multiple-choice action list: `A) LaneFollow: ...`.
pub fn action_options() -> String {
    ActionKind::ALL
        .iter()
        .enumerate()
        .map(|(i, k)| format!("{}) {}: {}", (b'A' + i as u8) as char, k.name(), k.description()))
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn build_prompt(req: &DecisionRequest, style: PromptStyle, move_set: &[String]) -> Result<String, PromptError> {
    match style {
        PromptStyle::Drivlme => Ok(drivlme(req)),
        PromptStyle::Gpt4Baseline => baseline(req, move_set),
    }
}

fn drivlme(req: &DecisionRequest) -> String {
    let mut out = Vec::new();
    if let Some(frames) = &req.frames {
        out.push(format!("(Video): {}", frames.join(", ")));
    }
    out.push(format!("(System Message): {SYSTEM_MESSAGE}"));
    out.push(format!("(Prompt): {DESCRIBE_PROMPT}"));
    out.push(format!("(Description): {}", req.observation));
    out.push(format!("(Dialogue & Action History):\n{}\n{}", dialogue_lines(req), action_lines(req)));
    out.push(format!("(Route Planning Instruction): {PLANNING_INSTRUCTION}"));
    if req.phase >= 2 {
        if let Some(plan) = &req.plan {
            out.push(format!("(Route Planner): {plan}"));
        }
        out.push(format!("(Prompt): {DECISION_PROMPT}"));
    }
    out.join("\n")
}

fn baseline(req: &DecisionRequest, move_set: &[String]) -> Result<String, PromptError> {
    let rfn = req.task == TaskKind::RfN;
    let mut out = Vec::new();
    let image = match &req.frames {
        Some(f) if !f.is_empty() => format!("Frame {}", f.last().unwrap()),
        _ => "No image is attached for this model.".to_string(),
    };
    out.push(format!("{}\n{image}", BASELINE_MARKERS[0]));
    out.push(format!("{}\n{HEADER}", BASELINE_MARKERS[1]));
    out.push(format!("{}\n{}", BASELINE_MARKERS[2], dialogue_lines(req)));
    out.push(format!("{}\n{}\n{}", BASELINE_MARKERS[3], req.map_text, req.observation));
    out.push(format!("{}\n{}", BASELINE_MARKERS[4], action_lines(req)));
    let plan = match &req.plan {
        Some(p) => format!("{PLANNER_CALL}\nPlan: {p}"),
        None => PLANNER_CALL.to_string(),
    };
    out.push(format!("{}\n{plan}", BASELINE_MARKERS[5]));
    let q1 = if rfn {
        format!("What type of dialogue move would you like to output? Choose one of: {}.", move_set.join(", "))
    } else {
        format!("Which navigational action should the car take now? Choose one option.\n{}", action_options())
    };
    out.push(format!("{}\n{q1}", BASELINE_MARKERS[6]));
    if req.phase >= 2 {
        let answer = req.q1_answer.as_deref().ok_or(PromptError::MissingQ1Answer)?;
        let q2 = if rfn {
            format!("The dialogue move is {answer}. What do you say to the passenger?")
        } else {
            let kind = ActionKind::parse(answer).ok_or_else(|| PromptError::InvalidQ1Answer(answer.to_string()))?;
            let opts = kind.argument_options();
            if opts.is_empty() {
                format!("The action is {}. It takes no argument; answer \"-\".", kind.name())
            } else {
                format!("The action is {}. Which argument? Choose one of: {}.", kind.name(), opts.join(", "))
            }
        };
        out.push(format!("{}\n{q2}", BASELINE_MARKERS[7]));
    }
    Ok(out.join("\n\n"))
}
