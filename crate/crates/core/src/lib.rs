//! Interactive task learning for a simulated kitchen robot.
//!
//! An agent learns to "tidy the kitchen" one object at a time. Goals and
//! action steps come from three sources: a human instructor, a bounded
//! iterative-deepening planner, and a large language model queried through
//! a template prompt. Everything the agent is told gets compiled into
//! variable-lifted production rules so the task later runs with no outside
//! help.
//!
//! Start with [`agent::Agent`] and the runnable programs under `examples/`.

pub mod agent;
pub mod harness;
pub mod instructor;
pub mod knowledge;
pub mod language;
pub mod lexicon;
pub mod llm;
pub mod planner;
pub mod world;
