//! Compact binary trajectory frames.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                                            |
//! |--------|------|--------------------------------------------------|
//! | 0      | 4    | magic `LCTR`                                     |
//! | 4      | 2    | format version (`1`)                             |
//! | 6      | 1    | variant: 0 modified, 1 unmodified                |
//! | 7      | 1    | flags: bit 0 exploratory                         |
//! | 8      | 8    | `b` (f64)                                        |
//! | 16     | 8    | `mu` (f64)                                       |
//! | 24     | 8    | `gamma` (f64)                                    |
//! | 32     | 8    | `L` (u64)                                        |
//! | 40     | 8    | seed (u64)                                       |
//! | 48     | 8    | end time (f64)                                   |
//! | 56     | 1    | stop reason: 0 time limit, 1 hit target, 2 absorbed |
//! | 57     | 7    | zero padding                                     |
//! | 64     | 8    | hit target state (u64, 0 unless reason is 1)     |
//! | 72     | 8    | event count `n` (u64)                            |
//! | 80     | 16n  | records: time (f64), state (u64)                 |

use std::io::{Read, Write};

use crate::chain::{ChainParams, Variant};
use crate::error::{Error, Result};
use crate::simulation::{Event, StopReason, Trajectory};

pub const MAGIC: [u8; 4] = *b"LCTR";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 80;
pub const RECORD_LEN: usize = 16;

fn io_err(e: std::io::Error) -> Error {
    Error::Format(e.to_string())
}

pub fn write_trajectory<W: Write>(traj: &Trajectory, mut w: W) -> Result<()> {
    let p = &traj.params;
    let mut h = Vec::with_capacity(HEADER_LEN);
    h.extend_from_slice(&MAGIC);
    h.extend_from_slice(&VERSION.to_le_bytes());
    h.push(match p.variant {
        Variant::Modified => 0,
        Variant::Unmodified => 1,
    });
    h.push(u8::from(p.exploratory));
    h.extend_from_slice(&p.b.to_le_bytes());
    h.extend_from_slice(&p.mu.to_le_bytes());
    h.extend_from_slice(&p.gamma.to_le_bytes());
    h.extend_from_slice(&p.l.to_le_bytes());
    h.extend_from_slice(&traj.seed.to_le_bytes());
    h.extend_from_slice(&traj.end_time.to_le_bytes());
    let (reason, target) = match traj.stop_reason {
        StopReason::TimeLimit => (0u8, 0u64),
        StopReason::HitTarget(x) => (1, x),
        StopReason::Absorbed => (2, 0),
    };
    h.push(reason);
    h.extend_from_slice(&[0u8; 7]);
    h.extend_from_slice(&target.to_le_bytes());
    h.extend_from_slice(&(traj.events.len() as u64).to_le_bytes());
    debug_assert_eq!(h.len(), HEADER_LEN);
    w.write_all(&h).map_err(io_err)?;
    let mut rec = [0u8; RECORD_LEN];
    for e in &traj.events {
        rec[..8].copy_from_slice(&e.time.to_le_bytes());
        rec[8..].copy_from_slice(&e.state.to_le_bytes());
        w.write_all(&rec).map_err(io_err)?;
    }
    Ok(())
}

pub fn encode(traj: &Trajectory) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * traj.events.len());
    write_trajectory(traj, &mut out).expect("writing to a Vec cannot fail");
    out
}

fn f64_at(b: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(b[off..off + 8].try_into().unwrap())
}

fn u64_at(b: &[u8], off: usize) -> u64 {
    u64::from_le_bytes(b[off..off + 8].try_into().unwrap())
}

pub fn read_trajectory<R: Read>(mut r: R) -> Result<Trajectory> {
    let mut h = [0u8; HEADER_LEN];
    r.read_exact(&mut h).map_err(io_err)?;
    if h[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u16::from_le_bytes([h[4], h[5]]);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let variant = match h[6] {
        0 => Variant::Modified,
        1 => Variant::Unmodified,
        v => return Err(Error::Format(format!("unknown variant tag {v}"))),
    };
    let params = ChainParams {
        b: f64_at(&h, 8),
        mu: f64_at(&h, 16),
        gamma: f64_at(&h, 24),
        l: u64_at(&h, 32),
        variant,
        exploratory: h[7] & 1 == 1,
    };
    let stop_reason = match h[56] {
        0 => StopReason::TimeLimit,
        1 => StopReason::HitTarget(u64_at(&h, 64)),
        2 => StopReason::Absorbed,
        v => return Err(Error::Format(format!("unknown stop reason {v}"))),
    };
    let n = u64_at(&h, 72);
    let mut events = Vec::with_capacity(n.min(1 << 20) as usize);
    let mut rec = [0u8; RECORD_LEN];
    for _ in 0..n {
        r.read_exact(&mut rec).map_err(io_err)?;
        events.push(Event {
            time: f64_at(&rec, 0),
            state: u64_at(&rec, 8),
        });
    }
    Ok(Trajectory {
        params,
        seed: u64_at(&h, 40),
        events,
        end_time: f64_at(&h, 48),
        stop_reason,
    })
}

pub fn decode(bytes: &[u8]) -> Result<Trajectory> {
    let t = read_trajectory(bytes)?;
    let expected = HEADER_LEN + RECORD_LEN * t.events.len();
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "frame length {} does not match header ({expected})",
            bytes.len()
        )));
    }
    Ok(t)
}

/// CSV rendering `time,state` with round-trip float formatting.
pub fn to_csv(traj: &Trajectory) -> String {
    let mut s = String::from("time,state\n");
    for e in &traj.events {
        s.push_str(&format!("{:?},{}\n", e.time, e.state));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{simulate, StopRule};

    fn sample() -> Trajectory {
        let p = ChainParams::modified(2.0, 1.0, 1.0, 20).unwrap();
        simulate(&p, 20, &StopRule::TimeLimit(3.0), 42).unwrap()
    }

    #[test]
    fn round_trip() {
        let t = sample();
        let bytes = encode(&t);
        assert_eq!(&bytes[..4], b"LCTR");
        assert_eq!(bytes.len(), HEADER_LEN + RECORD_LEN * t.events.len());
        assert_eq!(decode(&bytes).unwrap(), t);
    }

    #[test]
    fn round_trip_hit_target() {
        let p = ChainParams::modified(2.0, 1.0, 1.0, 20).unwrap();
        let t = simulate(&p, 20, &StopRule::hit([15]), 7).unwrap();
        assert_eq!(t.stop_reason, StopReason::HitTarget(15));
        assert_eq!(decode(&encode(&t)).unwrap(), t);
    }

    #[test]
    fn rejects_corruption() {
        let mut bytes = encode(&sample());
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(Error::Format(_))));
        let mut bytes = encode(&sample());
        bytes[4] = 9;
        assert!(decode(&bytes).is_err());
    }

    #[test]
    fn csv_header() {
        let csv = to_csv(&sample());
        assert!(csv.starts_with("time,state\n0.0,20\n"));
    }
}
