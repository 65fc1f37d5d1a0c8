//! Scenario scripts, their canonical action-sequence encoding and the token
//! vocabulary shared with the generator.

mod codec;
mod model;
mod sample;
mod vocab;

pub use codec::{decode, decode_structure, encode, Action, ActionSequence, DecodeError, TokenErrorKind};
pub use model::{
    EgoSpec, NpcAction, NpcSpec, PedSpec, Scenario, ScenarioError, ScheduleItem, TimeOfDay, WeatherKind, MAX_NPCS,
    MAX_SPEED, MAX_TIME, SCENARIO_SCHEMA_VERSION,
};
pub use sample::sample_scenario;
pub use vocab::{quantize_program, Bins, Entry, Head, ValueKind, VocabError, Vocabulary, BOS, EOS, MAX_LANES, PAD, VOCAB_SCHEMA_VERSION};
