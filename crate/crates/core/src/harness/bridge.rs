//! Remote agents over the `sdnloop-agent/1` wire protocol: one JSON request
//! per line over TCP, or one JSON body per HTTP POST.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;

use super::{
    build_prompt, ActionRecord, AgentBackend, AgentError, AgentReply, Capabilities, DecisionRequest, DialogueEvent,
    PromptStyle, TaskKind,
};

pub const AGENT_WIRE_VERSION: &str = "sdnloop-agent/1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Transport {
    /// `tcp://host:port`, newline-delimited JSON.
    Tcp(String),
    /// `http://host:port/path`, JSON POST.
    Http(String),
}

impl Transport {
    pub fn parse(endpoint: &str) -> Option<Self> {
        if let Some(addr) = endpoint.strip_prefix("tcp://") {
            Some(Transport::Tcp(addr.to_string()))
        } else if endpoint.starts_with("http://") {
            Some(Transport::Http(endpoint.to_string()))
        } else {
            None
        }
    }
}

/// Request as sent on the wire. Privileged state never leaves the process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub v: String,
    pub phase: u8,
    pub task: TaskKind,
    pub tau: f64,
    pub observation: String,
    pub map_text: String,
    pub dialogue: Vec<DialogueEvent>,
    pub actions: Vec<ActionRecord>,
    pub plan: Option<String>,
    pub frames: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q1_answer: Option<String>,
    /// Fully assembled prompt for agents that forward text to a model.
    pub prompt: String,
}

pub struct RemoteAgent {
    endpoint: String,
    transport: Transport,
    timeout: Duration,
    style: PromptStyle,
    move_set: Vec<String>,
    capabilities: Capabilities,
}

impl RemoteAgent {
    /// Checks the endpoint syntax and, for TCP, that it resolves.
    pub fn connect(endpoint: &str, cfg: &SimConfig) -> Result<Self, AgentError> {
        let transport = Transport::parse(endpoint).ok_or_else(|| AgentError::Connect {
            endpoint: endpoint.to_string(),
            reason: "endpoint must start with tcp:// or http://".into(),
        })?;
        if let Transport::Tcp(addr) = &transport {
            addr.to_socket_addrs()
                .map_err(|e| AgentError::Connect { endpoint: endpoint.to_string(), reason: e.to_string() })?;
        }
        Ok(Self {
            endpoint: endpoint.to_string(),
            transport,
            timeout: Duration::from_secs_f64(cfg.agent_timeout_s.max(0.001)),
            style: PromptStyle::Drivlme,
            move_set: cfg.move_set.clone(),
            capabilities: Capabilities::TextOnly,
        })
    }

    pub fn with_style(mut self, style: PromptStyle) -> Self {
        self.style = style;
        self
    }

    pub fn with_capabilities(mut self, caps: Capabilities) -> Self {
        self.capabilities = caps;
        self
    }

    pub fn wire_request(&self, req: &DecisionRequest) -> Result<WireRequest, AgentError> {
        let prompt = build_prompt(req, self.style, &self.move_set).map_err(|e| AgentError::Failed(e.to_string()))?;
        Ok(WireRequest {
            v: AGENT_WIRE_VERSION.to_string(),
            phase: req.phase,
            task: req.task,
            tau: req.tau,
            observation: req.observation.clone(),
            map_text: req.map_text.clone(),
            dialogue: req.dialogue.clone(),
            actions: req.actions.clone(),
            plan: req.plan.clone(),
            frames: req.frames.clone(),
            q1_answer: req.q1_answer.clone(),
            prompt,
        })
    }

    fn connect_err(&self, e: impl ToString) -> AgentError {
        AgentError::Connect { endpoint: self.endpoint.clone(), reason: e.to_string() }
    }

    fn exchange_tcp(&self, addr: &str, body: &str) -> Result<String, AgentError> {
        let sock = addr
            .to_socket_addrs()
            .map_err(|e| self.connect_err(e))?
            .next()
            .ok_or_else(|| self.connect_err("no address"))?;
        let mut stream = TcpStream::connect_timeout(&sock, self.timeout).map_err(|e| self.connect_err(e))?;
        stream.set_read_timeout(Some(self.timeout)).map_err(|e| self.connect_err(e))?;
        stream.set_write_timeout(Some(self.timeout)).map_err(|e| self.connect_err(e))?;
        stream.write_all(body.as_bytes()).and_then(|_| stream.write_all(b"\n")).map_err(|e| self.connect_err(e))?;
        let mut line = String::new();
        match BufReader::new(stream).read_line(&mut line) {
            Ok(0) => {
                Err(AgentError::Malformed { raw: String::new(), reason: "connection closed without a reply".into() })
            }
            Ok(_) => Ok(line),
            Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {
                Err(AgentError::Timeout(self.timeout.as_secs_f64()))
            }
            Err(e) => Err(self.connect_err(e)),
        }
    }

    fn exchange_http(&self, url: &str, body: &str) -> Result<String, AgentError> {
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(self.timeout)).build().into();
        let resp = agent.post(url).header("content-type", "application/json").send(body);
        match resp {
            Ok(mut r) => r.body_mut().read_to_string().map_err(|e| self.connect_err(e)),
            Err(ureq::Error::Timeout(_)) => Err(AgentError::Timeout(self.timeout.as_secs_f64())),
            Err(e) => Err(self.connect_err(e)),
        }
    }
}

/// Parses a wire reply: either `{"text": ...}` or the structured fields.
pub fn parse_wire_reply(raw: &str) -> Result<AgentReply, AgentError> {
    let malformed = |reason: String| AgentError::Malformed { raw: raw.trim_end().to_string(), reason };
    let value: serde_json::Value = serde_json::from_str(raw.trim()).map_err(|e| malformed(e.to_string()))?;
    if !value.is_object() {
        return Err(malformed("reply must be a JSON object".into()));
    }
    let reply: AgentReply = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
    if reply == AgentReply::default() {
        return Err(malformed("reply has neither text nor structured fields".into()));
    }
    Ok(reply)
}

impl AgentBackend for RemoteAgent {
    fn name(&self) -> String {
        format!("remote:{}", self.endpoint)
    }

    fn capabilities(&self) -> Capabilities {
        self.capabilities
    }

    fn decide(&mut self, req: &DecisionRequest) -> Result<AgentReply, AgentError> {
        let body = serde_json::to_string(&self.wire_request(req)?).expect("wire request serializes");
        let raw = match &self.transport {
            Transport::Tcp(addr) => self.exchange_tcp(addr, &body)?,
            Transport::Http(url) => self.exchange_http(url, &body)?,
        };
        parse_wire_reply(&raw)
    }
}
