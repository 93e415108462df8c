//! Operator-tree question answering over heterogeneous personal event data.

pub mod bench;
pub mod decompose;
pub mod event;
pub mod exec;
pub mod extract;
pub mod ingest;
pub mod persona;
pub mod plan;
pub mod plugin;
pub mod retrieve;
pub mod store;
pub mod value;

pub use event::{Event, EventId, Source, TimeSpan};
pub use store::{EventStore, StoreBuilder};
pub use value::Value;
