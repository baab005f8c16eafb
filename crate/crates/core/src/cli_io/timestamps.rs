//! Binary timestamp files.
//!
//! Layout, all little-endian: the 8-byte magic `PDCTIME1`, the acquisition
//! duration as an `i64` in picoseconds, then one `i64` picosecond timestamp
//! per detection, non-decreasing.

use std::path::Path;

use super::fs::write_atomic;
use crate::error::{Error, Result};
use crate::model::Channel;
use crate::montecarlo::EventStream;

pub const MAGIC: [u8; 8] = *b"PDCTIME1";
const PS: f64 = 1e12;

pub fn encode_timestamps(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * stream.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&((stream.duration * PS).round() as i64).to_le_bytes());
    for t in &stream.timestamps {
        out.extend_from_slice(&((t * PS).round() as i64).to_le_bytes());
    }
    out
}

pub fn decode_timestamps(bytes: &[u8], channel: Channel, source: &str) -> Result<EventStream> {
    let bad = |msg: String| Error::Parse {
        path: source.to_string(),
        line: 0,
        msg,
    };
    if bytes.len() < 16 || bytes[..8] != MAGIC {
        return Err(bad("not a timestamp file (bad magic)".to_string()));
    }
    if (bytes.len() - 16) % 8 != 0 {
        return Err(bad(format!("truncated body: {} trailing bytes", (bytes.len() - 16) % 8)));
    }
    let word = |k: usize| i64::from_le_bytes(bytes[k..k + 8].try_into().expect("8 bytes"));
    let duration = word(8);
    if duration <= 0 {
        return Err(bad(format!("duration must be positive, got {duration} ps")));
    }
    let mut ts = Vec::with_capacity((bytes.len() - 16) / 8);
    let mut last = i64::MIN;
    for k in (16..bytes.len()).step_by(8) {
        let t = word(k);
        if t < last {
            return Err(bad(format!("timestamp {} out of order", (k - 16) / 8)));
        }
        last = t;
        ts.push(t as f64 / PS);
    }
    Ok(EventStream::new(channel, duration as f64 / PS, ts))
}

pub fn write_timestamps(path: &Path, stream: &EventStream) -> Result<()> {
    write_atomic(path, &encode_timestamps(stream))
}

pub fn read_timestamps(path: &Path, channel: Channel) -> Result<EventStream> {
    decode_timestamps(&std::fs::read(path)?, channel, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_at_picosecond_resolution() {
        let s = EventStream::new(Channel::Idler, 2.5, vec![0.0, 1.3e-9, 1.3e-9, 0.75, 2.4999]);
        let bytes = encode_timestamps(&s);
        assert_eq!(&bytes[..8], b"PDCTIME1");
        assert_eq!(bytes.len(), 16 + 8 * 5);
        let back = decode_timestamps(&bytes, Channel::Idler, "mem").unwrap();
        assert_eq!(back.duration, 2.5);
        for (a, b) in back.timestamps.iter().zip(&s.timestamps) {
            assert!((a - b).abs() <= 0.5e-12);
        }
        assert_eq!(encode_timestamps(&back), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let s = EventStream::new(Channel::Signal, 1.0, vec![0.1, 0.2]);
        let mut bytes = encode_timestamps(&s);
        assert!(decode_timestamps(&bytes[..bytes.len() - 3], Channel::Signal, "m").is_err());
        bytes[0] = b'X';
        assert!(decode_timestamps(&bytes, Channel::Signal, "m").is_err());
        let mut swapped = encode_timestamps(&EventStream::new(Channel::Signal, 1.0, vec![0.2, 0.1]));
        assert!(decode_timestamps(&swapped, Channel::Signal, "m").is_err());
        swapped.truncate(8);
        assert!(decode_timestamps(&swapped, Channel::Signal, "m").is_err());
    }
}
