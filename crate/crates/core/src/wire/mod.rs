//! Record serialization and the two-wing session protocol.

pub mod codec;
pub mod frame;
pub mod session;
pub mod transport;

use thiserror::Error;

pub use codec::{decode_record, decode_records, encode_record, encode_records, Format, RecordWriter};
pub use frame::{decode_messages, read_message, write_message, Message, MessageType, WingHalf};
pub use session::{
    run_merger, run_session, run_source, run_wing, SessionConfig, SessionOutput, SessionTransport, Side,
};

#[derive(Debug, Error)]
pub enum WireError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    BadLine { line: usize, message: String },
    #[error("invalid record frame byte {0:#04x}: high nibble must be zero")]
    BadFrameByte(u8),
    #[error("stream ended inside a frame")]
    Truncated,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("session aborted after {contiguous} contiguous events: {reason}")]
    Aborted { contiguous: u64, reason: String },
    #[error("sequence gap at merge: event {missing} is missing")]
    SequenceGap { missing: u64 },
    #[error("locality breach: {side} wing received a {kind:?} frame")]
    Locality { side: Side, kind: MessageType },
}
