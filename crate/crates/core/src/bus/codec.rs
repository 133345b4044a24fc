//! Frame layout: 4-byte big-endian payload length, 1-byte message type,
//! 4-byte big-endian sequence number, then the canonical JSON payload.

use super::message::Message;
use super::BusError;
use serde_json::Value;
use std::fmt::Write;

pub const HEADER_LEN: usize = 9;
/// Larger declared payloads are rejected rather than waited for.
pub const MAX_PAYLOAD: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub seq: u32,
    pub msg: Message,
}

/// Sorted keys, no whitespace, floats in their shortest `f32` form.
pub fn canonical_payload(v: &Value) -> Result<String, BusError> {
    let mut out = String::new();
    write_value(&mut out, v)?;
    Ok(out)
}

fn write_value(out: &mut String, v: &Value) -> Result<(), BusError> {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                write!(out, "{i}").unwrap();
            } else if let Some(u) = n.as_u64() {
                write!(out, "{u}").unwrap();
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                let g = f as f32;
                if !g.is_finite() || g as f64 != f {
                    return Err(BusError::SchemaViolation(format!("{f} is not a finite f32")));
                }
                let s = format!("{g:?}");
                out.push_str(if s == "-0.0" { "0.0" } else { &s });
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item)?;
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("strings serialize"));
                out.push(':');
                write_value(out, &map[k])?;
            }
            out.push('}');
        }
    }
    Ok(())
}

pub fn encode_frame(seq: u32, msg: &Message) -> Result<Vec<u8>, BusError> {
    let value = msg
        .payload_value()
        .map_err(|e| BusError::SchemaViolation(e.to_string()))?;
    let payload = canonical_payload(&value)?;
    // non-finite floats serialize as null; reject anything that would not
    // come back as the same message
    match Message::from_payload(msg.type_code(), payload.as_bytes()) {
        Ok(back) if back == *msg => {}
        _ => return Err(BusError::SchemaViolation(format!("{} does not round-trip", payload))),
    }
    if payload.len() > MAX_PAYLOAD {
        return Err(BusError::SchemaViolation(format!("payload of {} bytes", payload.len())));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.push(msg.type_code());
    out.extend_from_slice(&seq.to_be_bytes());
    out.extend_from_slice(payload.as_bytes());
    Ok(out)
}

/// Decode one frame from the front of `bytes`, returning it with the number
/// of bytes consumed.
pub fn decode_frame(bytes: &[u8]) -> Result<(Frame, usize), BusError> {
    if bytes.len() < HEADER_LEN {
        return Err(BusError::NeedMoreBytes { consumed: 0 });
    }
    let len = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    let code = bytes[4];
    let seq = u32::from_be_bytes([bytes[5], bytes[6], bytes[7], bytes[8]]);
    if len > MAX_PAYLOAD {
        return Err(BusError::FrameError {
            seq,
            reason: format!("declared length {len} exceeds limit"),
        });
    }
    if Message::type_name(code).is_none() {
        return Err(BusError::FrameError {
            seq,
            reason: format!("unknown message type 0x{code:02X}"),
        });
    }
    if bytes.len() < HEADER_LEN + len {
        return Err(BusError::NeedMoreBytes { consumed: 0 });
    }
    let payload = &bytes[HEADER_LEN..HEADER_LEN + len];
    let msg = Message::from_payload(code, payload).map_err(|reason| BusError::FrameError { seq, reason })?;
    Ok((Frame { seq, msg }, HEADER_LEN + len))
}

/// Decode every complete frame in `bytes`; stops at the first error.
pub fn decode_all(mut bytes: &[u8]) -> (Vec<Frame>, Option<BusError>) {
    let mut frames = Vec::new();
    while !bytes.is_empty() {
        match decode_frame(bytes) {
            Ok((f, n)) => {
                frames.push(f);
                bytes = &bytes[n..];
            }
            Err(e) => return (frames, Some(e)),
        }
    }
    (frames, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bus::message::*;

    #[test]
    fn estop_frame_is_eleven_bytes() {
        let b = encode_frame(7, &Message::EStop(EStop {})).unwrap();
        assert_eq!(b.len(), 11);
        assert_eq!(&b[..4], &[0, 0, 0, 2]);
        assert_eq!(b[4], 0x0A);
        assert_eq!(&b[5..9], &[0, 0, 0, 7]);
        assert_eq!(&b[9..], b"{}");
    }

    #[test]
    fn keys_are_sorted_and_floats_short() {
        let m = Message::RobotMove(RobotMove {
            move_id: 3,
            target: MoveTarget::Grasp,
            x: 0.1,
            y: -0.25,
            z: 0.0,
            yaw: 1.5707964,
        });
        let b = encode_frame(1, &m).unwrap();
        let text = std::str::from_utf8(&b[HEADER_LEN..]).unwrap();
        assert_eq!(text, r#"{"move_id":3,"target":"Grasp","x":0.1,"y":-0.25,"yaw":1.5707964,"z":0.0}"#);
        assert_eq!(decode_frame(&b).unwrap(), (Frame { seq: 1, msg: m }, b.len()));
    }

    #[test]
    fn nan_is_a_schema_violation() {
        let m = Message::GripperStatus(GripperStatus {
            cmd_id: 1,
            command: GripperCommand::Read,
            width: f32::NAN,
        });
        assert!(matches!(encode_frame(0, &m), Err(BusError::SchemaViolation(_))));
    }

    #[test]
    fn partial_input_needs_more() {
        assert_eq!(decode_frame(&[]), Err(BusError::NeedMoreBytes { consumed: 0 }));
        let b = encode_frame(2, &Message::EStop(EStop {})).unwrap();
        assert_eq!(decode_frame(&b[..10]), Err(BusError::NeedMoreBytes { consumed: 0 }));
    }

    #[test]
    fn unknown_type_names_the_seq() {
        let mut b = encode_frame(0x0102_0304, &Message::EStop(EStop {})).unwrap();
        b[4] = 0x7F;
        match decode_frame(&b) {
            Err(BusError::FrameError { seq, .. }) => assert_eq!(seq, 0x0102_0304),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn decoder_stops_at_declared_length() {
        let mut b = encode_frame(1, &Message::EStop(EStop {})).unwrap();
        b.extend_from_slice(b"garbage");
        let (f, n) = decode_frame(&b).unwrap();
        assert_eq!(n, 11);
        assert_eq!(f.msg, Message::EStop(EStop {}));
    }
}
