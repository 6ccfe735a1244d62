//! Closed-loop situated-dialogue navigation testbed.

pub mod assets;
pub mod config;
pub mod features;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod motion;
pub mod planner;
pub mod scenario;
pub mod sim;
pub mod verbalizer;
pub mod world;
