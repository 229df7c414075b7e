//! The three component block ciphers. Every function here is pure; key
//! schedules are plain values that can be shared read-only across threads.

pub mod idea;
pub mod raiden;
pub mod skipjack;

pub use idea::{Direction, IdeaKeySchedule, IdeaRounds};
