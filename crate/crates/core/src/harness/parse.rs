//! Extraction of plan calls, actions, utterances and moves from agent replies.

use crate::motion::{ActionError, ActionKind, Direction, PhysicalAction};
use crate::planner::{parse_plan_call, PlanCall};

use super::{AgentReply, DecisionRequest};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedReply {
    pub description: Option<String>,
    pub plan_call: Option<PlanCall>,
    pub action: Option<Result<PhysicalAction, ActionError>>,
    pub utterance: Option<String>,
    pub dialogue_move: Option<String>,
}

/// Labelled lines such as `Action: JTurn(left)` or `(LLM, Dialogue): "Ok"`.
fn labelled_lines(text: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        let (label, rest) = if let Some(inner) = line.strip_prefix('(') {
            match inner.find("):") {
                Some(end) => {
                    let tag = &inner[..end];
                    (tag.rsplit(',').next().unwrap_or(tag).trim().to_string(), inner[end + 2..].trim())
                }
                None => continue,
            }
        } else {
            match line.find(':') {
                Some(i) if !line[..i].contains(char::is_whitespace) && i > 0 => {
                    (line[..i].to_string(), line[i + 1..].trim())
                }
                _ => continue,
            }
        };
        out.push((label.to_ascii_lowercase(), rest.to_string()));
    }
    out
}

fn label<'a>(lines: &'a [(String, String)], names: &[&str]) -> Option<&'a str> {
    lines.iter().find(|(l, _)| names.contains(&l.as_str())).map(|(_, v)| v.as_str())
}

pub fn strip_quotes(s: &str) -> String {
    let t = s.trim();
    let t = t.strip_prefix(['"', '“', '\'']).unwrap_or(t);
    let t = t.strip_suffix(['"', '”', '\'']).unwrap_or(t);
    t.trim().to_string()
}

fn tokens(text: &str) -> Vec<&str> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '+' || c == '-' || c == '_')).filter(|t| !t.is_empty()).collect()
}

/// Switch direction implied by the observation's affordance sentence when
/// exactly one side is available.
fn implied_switch(req: &DecisionRequest) -> Option<Direction> {
    if req.observation.contains("I'm only able to change to the left lane") {
        Some(Direction::Left)
    } else if req.observation.contains("I'm only able to change to the right lane") {
        Some(Direction::Right)
    } else {
        None
    }
}

/// First action token in `text` and its argument, if any. A bare
/// `SwitchLane` takes its direction from the observation when only one side
/// is open.
pub fn parse_action_text(text: &str, req: &DecisionRequest) -> Option<Result<PhysicalAction, ActionError>> {
    let toks = tokens(text);
    let (i, kind) = toks.iter().enumerate().find_map(|(i, t)| ActionKind::parse(t).map(|k| (i, k)))?;
    let next = toks.get(i + 1).copied();
    if !kind.takes_argument() {
        return Some(PhysicalAction::with_argument(kind, None));
    }
    match next.map(|a| PhysicalAction::with_argument(kind, Some(a))) {
        Some(Ok(a)) => Some(Ok(a)),
        _ if kind == ActionKind::LaneSwitch => Some(
            implied_switch(req)
                .map(PhysicalAction::LaneSwitch)
                .ok_or(ActionError::MissingArgument { kind, options: "left/right".into() }),
        ),
        Some(Err(e)) => Some(Err(e)),
        None => Some(PhysicalAction::with_argument(kind, None)),
    }
}

fn normalize_move(m: &str, move_set: &[String]) -> Option<String> {
    let m = strip_quotes(m);
    move_set.iter().find(|x| x.eq_ignore_ascii_case(&m)).cloned()
}

pub fn parse_reply(reply: &AgentReply, req: &DecisionRequest, move_set: &[String]) -> ParsedReply {
    let text = reply.text.as_deref().unwrap_or("");
    let lines = labelled_lines(text);
    let mut out =
        ParsedReply { description: label(&lines, &["description"]).map(strip_quotes), ..ParsedReply::default() };

    out.plan_call = match &reply.plan_call {
        Some(p) => {
            let p = strip_quotes(p);
            Some(PlanCall { target: (!p.is_empty() && !p.eq_ignore_ascii_case("none")).then_some(p) })
        }
        None => parse_plan_call(text),
    };

    out.action = match &reply.action {
        Some(a) => Some(match ActionKind::parse(a) {
            Some(kind) => {
                let r = PhysicalAction::with_argument(kind, reply.args.as_deref());
                match (r, kind) {
                    (Err(ActionError::MissingArgument { .. }), ActionKind::LaneSwitch)
                        if implied_switch(req).is_some() =>
                    {
                        Ok(PhysicalAction::LaneSwitch(implied_switch(req).unwrap()))
                    }
                    (r, _) => r,
                }
            }
            None => Err(ActionError::UnknownAction(a.clone())),
        }),
        None => {
            let source = match label(&lines, &["action"]) {
                Some(a) => a.to_string(),
                None => strip_quoted(&strip_plan_calls(&unlabelled(text))),
            };
            parse_action_text(&source, req)
        }
    };

    out.utterance = reply
        .utterance
        .clone()
        .or_else(|| label(&lines, &["dialogue", "utterance", "reply", "say"]).map(strip_quotes))
        .or_else(|| first_quoted(text))
        .filter(|u| !u.trim().is_empty());

    out.dialogue_move = reply
        .dialogue_move
        .as_deref()
        .or_else(|| label(&lines, &["move", "dialogue move"]))
        .and_then(|m| normalize_move(m, move_set));
    out
}

fn unlabelled(text: &str) -> String {
    text.lines().filter(|l| labelled_lines(l).is_empty()).collect::<Vec<_>>().join("\n")
}

fn strip_quoted(text: &str) -> String {
    let mut out = String::new();
    let mut inside = false;
    for c in text.chars() {
        match c {
            '"' => inside = !inside,
            '“' => inside = true,
            '”' => inside = false,
            _ if !inside => out.push(c),
            _ => {}
        }
    }
    out
}

fn strip_plan_calls(text: &str) -> String {
    let mut out = String::new();
    let mut rest = text;
    while let Some(i) = rest.to_ascii_lowercase().find("plan(") {
        out.push_str(&rest[..i]);
        match rest[i..].find(')') {
            Some(j) => rest = &rest[i + j + 1..],
            None => {
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

fn first_quoted(text: &str) -> Option<String> {
    let start = text.find(['"', '“'])?;
    let body = &text[start + text[start..].chars().next()?.len_utf8()..];
    let end = body.find(['"', '”'])?;
    Some(body[..end].trim().to_string())
}
