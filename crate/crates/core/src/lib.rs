//! Soundscape affect estimation and emotion-augmented caption data generation.
//!
//! The pipeline: summarize clips into acoustic features ([`dsp`]), regress
//! valence and arousal ([`regression`]), discretize affect into qualified
//! soundscape emotions ([`circumplex`]), turn strong-label annotations into
//! ordered event lists ([`events`]), prompt a chat model for captions
//! ([`prompting`]) and assemble/measure the resulting subsets ([`dataset`]).

pub mod circumplex;
pub mod dataset;
pub mod dsp;
pub mod events;
pub mod fixture;
pub mod jsonl;
pub mod prompting;
pub mod regression;
