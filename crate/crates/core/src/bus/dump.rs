//! `.busdump` capture: each record is an 8-byte big-endian millisecond
//! timestamp followed by one encoded frame.

use super::codec::{decode_frame, Frame, HEADER_LEN};
use super::BusError;
use std::io::{self, Write};

#[derive(Debug, Default, Clone)]
pub struct BusDump {
    bytes: Vec<u8>,
}

impl BusDump {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, t_ms: u64, frame: &[u8]) {
        self.bytes.extend_from_slice(&t_ms.to_be_bytes());
        self.bytes.extend_from_slice(frame);
    }

    /// Append another capture.
    pub fn extend(&mut self, other: &BusDump) {
        self.bytes.extend_from_slice(&other.bytes);
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        w.write_all(&self.bytes)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DumpRecord {
    pub t_ms: u64,
    pub frame: Frame,
}

/// Parse a whole capture. A trailing partial record is an error.
pub fn read_dump(mut bytes: &[u8]) -> Result<Vec<DumpRecord>, BusError> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        if bytes.len() < 8 + HEADER_LEN {
            return Err(BusError::NeedMoreBytes { consumed: 0 });
        }
        let t_ms = u64::from_be_bytes(bytes[..8].try_into().expect("eight bytes"));
        let (frame, n) = decode_frame(&bytes[8..])?;
        out.push(DumpRecord { t_ms, frame });
        bytes = &bytes[8 + n..];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bus::codec::encode_frame;
    use crate::bus::message::*;

    #[test]
    fn dump_round_trip() {
        let mut d = BusDump::new();
        let a = Message::EStop(EStop {});
        let b = Message::Heartbeat(Heartbeat {
            component: "robot".into(),
            schema: SCHEMA_VERSION,
        });
        d.record(10, &encode_frame(0, &a).unwrap());
        d.record(1_000_000, &encode_frame(1, &b).unwrap());
        let recs = read_dump(d.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].t_ms, 1_000_000);
        assert_eq!(recs[1].frame.msg, b);
        assert!(read_dump(&d.as_bytes()[..d.as_bytes().len() - 1]).is_err());
    }
}
