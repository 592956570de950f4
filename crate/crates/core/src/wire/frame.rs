//! Session protocol frames.
//!
//! ```text
//! +----------------+--------+----------------+-----------+
//! | length: u32 LE | type u8 | seq: u64 LE    | payload   |
//! +----------------+--------+----------------+-----------+
//! ```
//!
//! `length` counts everything after itself (`9 + payload.len()`).
//!
//! | type | name       | seq                          | payload                          |
//! |------|------------|------------------------------|----------------------------------|
//! | 1    | DATA_LEFT  | event index                  | 1 byte: bit0 = a, bit1 = i − 1   |
//! | 2    | DATA_RIGHT | event index                  | 1 byte: bit0 = b, bit1 = j − 1   |
//! | 3    | END        | number of events sent        | empty                            |
//! | 4    | ABORT      | contiguous events delivered  | UTF-8 reason                     |

use std::io::{self, Read, Write};

use crate::model::{SettingIndex, Sign};

use super::WireError;

pub const HEADER_LEN: usize = 4 + 1 + 8;
pub const MAX_FRAME_LEN: u32 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageType {
    DataLeft = 1,
    DataRight = 2,
    End = 3,
    Abort = 4,
}

impl TryFrom<u8> for MessageType {
    type Error = WireError;

    fn try_from(v: u8) -> Result<Self, WireError> {
        match v {
            1 => Ok(MessageType::DataLeft),
            2 => Ok(MessageType::DataRight),
            3 => Ok(MessageType::End),
            4 => Ok(MessageType::Abort),
            other => Err(WireError::Protocol(format!("unknown message type {other}"))),
        }
    }
}

/// What one wing learns about one event: its own setting and outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WingHalf {
    pub setting: SettingIndex,
    pub outcome: Sign,
}

impl WingHalf {
    pub fn to_byte(self) -> u8 {
        u8::from(self.outcome == Sign::Plus) | (self.setting.index() as u8) << 1
    }

    pub fn from_byte(byte: u8) -> Result<Self, WireError> {
        if byte & !0x03 != 0 {
            return Err(WireError::Protocol(format!("invalid wing payload byte {byte:#04x}")));
        }
        Ok(Self {
            outcome: if byte & 1 != 0 { Sign::Plus } else { Sign::Minus },
            setting: SettingIndex::from_index(usize::from(byte >> 1)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub kind: MessageType,
    pub seq: u64,
    pub payload: Vec<u8>,
}

impl Message {
    pub fn data(kind: MessageType, seq: u64, half: WingHalf) -> Self {
        Self {
            kind,
            seq,
            payload: vec![half.to_byte()],
        }
    }

    pub fn end(total: u64) -> Self {
        Self {
            kind: MessageType::End,
            seq: total,
            payload: Vec::new(),
        }
    }

    pub fn abort(contiguous: u64, reason: &str) -> Self {
        Self {
            kind: MessageType::Abort,
            seq: contiguous,
            payload: reason.as_bytes().to_vec(),
        }
    }

    pub fn half(&self) -> Result<WingHalf, WireError> {
        match (self.kind, self.payload.as_slice()) {
            (MessageType::DataLeft | MessageType::DataRight, [byte]) => WingHalf::from_byte(*byte),
            _ => Err(WireError::Protocol(format!(
                "{:?} frame with {}-byte payload carries no wing half",
                self.kind,
                self.payload.len()
            ))),
        }
    }

    pub fn reason(&self) -> String {
        String::from_utf8_lossy(&self.payload).into_owned()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&(9 + self.payload.len() as u32).to_le_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.seq.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }
}

pub fn write_message<W: Write>(out: &mut W, msg: &Message) -> io::Result<()> {
    out.write_all(&msg.encode())
}

/// Reads one frame; `Ok(None)` on a clean end of stream at a frame boundary.
pub fn read_message<R: Read>(input: &mut R) -> Result<Option<Message>, WireError> {
    let mut len_bytes = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match input.read(&mut len_bytes[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(WireError::Truncated),
            Ok(k) => filled += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_le_bytes(len_bytes);
    if !(9..=MAX_FRAME_LEN).contains(&len) {
        return Err(WireError::Protocol(format!("invalid frame length {len}")));
    }
    let mut body = vec![0u8; len as usize];
    input.read_exact(&mut body).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => WireError::Truncated,
        _ => e.into(),
    })?;
    let kind = MessageType::try_from(body[0])?;
    let seq = u64::from_le_bytes(body[1..9].try_into().expect("eight bytes"));
    Ok(Some(Message {
        kind,
        seq,
        payload: body[9..].to_vec(),
    }))
}

/// Splits a captured byte stream back into frames.
pub fn decode_messages(mut bytes: &[u8]) -> Result<Vec<Message>, WireError> {
    let mut out = Vec::new();
    while let Some(m) = read_message(&mut bytes)? {
        out.push(m);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn frame_layout() {
        let half = WingHalf {
            setting: SettingIndex::Two,
            outcome: Sign::Plus,
        };
        let bytes = Message::data(MessageType::DataLeft, 0x0102, half).encode();
        assert_eq!(bytes, [10, 0, 0, 0, 1, 0x02, 0x01, 0, 0, 0, 0, 0, 0, 0b11]);
        assert_eq!(Message::end(3).encode(), [9, 0, 0, 0, 3, 3, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn truncation_and_garbage() {
        let bytes = Message::end(7).encode();
        assert!(matches!(decode_messages(&bytes[..5]), Err(WireError::Truncated)));
        assert!(matches!(decode_messages(&bytes[..2]), Err(WireError::Truncated)));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(decode_messages(&bad), Err(WireError::Protocol(_))));
        assert!(decode_messages(&[2, 0, 0, 0, 1, 1]).is_err());
        assert!(WingHalf::from_byte(0x04).is_err());
    }

    proptest! {
        #[test]
        fn messages_round_trip(kind in 1u8..=4, seq: u64, payload in proptest::collection::vec(any::<u8>(), 0..64)) {
            let msg = Message { kind: MessageType::try_from(kind).unwrap(), seq, payload };
            let mut buf = Vec::new();
            write_message(&mut buf, &msg).unwrap();
            write_message(&mut buf, &msg).unwrap();
            prop_assert_eq!(decode_messages(&buf).unwrap(), vec![msg.clone(), msg]);
        }
    }
}
