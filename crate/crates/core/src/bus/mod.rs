//! Framed device bus: typed messages, the wire codec, FIFO links with
//! latency and a zero-latency E-stop lane, capture files and heartbeats.

mod codec;
mod dump;
mod heartbeat;
mod link;
pub mod message;

pub use codec::{canonical_payload, decode_all, decode_frame, encode_frame, Frame, HEADER_LEN, MAX_PAYLOAD};
pub use dump::{read_dump, BusDump, DumpRecord};
pub use heartbeat::HeartbeatMonitor;
pub use link::{Link, LinkParams};
pub use message::Message;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BusError {
    #[error("need more bytes")]
    NeedMoreBytes { consumed: usize },
    #[error("bad frame (seq {seq}): {reason}")]
    FrameError { seq: u32, reason: String },
    #[error("schema violation: {0}")]
    SchemaViolation(String),
}
