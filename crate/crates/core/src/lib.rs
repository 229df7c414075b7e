//! IDEA/Skipjack/Raiden product cipher, run either as one monolithic loop or
//! as an N-stage worker pipeline over bounded buffers, together with a
//! cycle-level cost model of a heterogeneous multi-core pipeline and a
//! strengthen/prune optimizer for its per-core feature sets.

pub mod block;
pub mod cipher;
pub mod cli;
pub mod pipeline;
pub mod perf;
pub mod product;

pub use block::{Block64, HexError, MasterKey128, RaidenKey, SkipjackKey80};
pub use product::{CipherId, ProductCipherSpec, StageSpec};
