//! Frogger agent workbench: a deterministic Frogger clone, object-centric and
//! pixel observations, a depth-first "Brute" planner, a prioritized replay
//! DQN that can be bootstrapped from demonstrations, and an LLM agent harness.

pub mod dqn;
pub mod env;
pub mod llm;
pub mod obs;
pub mod replay;
pub mod search;
