//! Snapshot serialization: columnar CSV and a compact binary form.
//!
//! CSV layout: header `position,type,transform_time,transform_position`, one
//! row per retained particle, 17 significant digits (round-trip exact).
//!
//! Binary layout: 16-byte magic `BBMLAB-SNAPSHOT1`, then a little-endian u64
//! particle count, then four little-endian f64 words per particle in CSV
//! column order, with the type encoded as 1.0 / 2.0.

use std::io::{self, Read, Write};
use thiserror::Error;

use super::{ParticleRecord, ParticleType};

pub const MAGIC: &[u8; 16] = b"BBMLAB-SNAPSHOT1";

#[derive(Debug, Error)]
pub enum SnapshotIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic header")]
    BadMagic,
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("type code must be 1 or 2 (got {0})")]
    BadTypeCode(f64),
}

fn type_code(kind: ParticleType) -> f64 {
    match kind {
        ParticleType::One => 1.0,
        ParticleType::Two => 2.0,
    }
}

fn kind_from_code(code: f64) -> Result<ParticleType, SnapshotIoError> {
    if code == 1.0 {
        Ok(ParticleType::One)
    } else if code == 2.0 {
        Ok(ParticleType::Two)
    } else {
        Err(SnapshotIoError::BadTypeCode(code))
    }
}

pub fn write_csv<W: Write>(records: &[ParticleRecord], mut w: W) -> io::Result<()> {
    writeln!(w, "position,type,transform_time,transform_position")?;
    for r in records {
        writeln!(
            w,
            "{:.16e},{},{:.16e},{:.16e}",
            r.position,
            type_code(r.kind) as u8,
            r.transform_time,
            r.transform_position
        )?;
    }
    Ok(())
}

pub fn read_csv<R: Read>(mut r: R) -> Result<Vec<ParticleRecord>, SnapshotIoError> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(SnapshotIoError::Csv {
                line: i + 1,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| SnapshotIoError::Csv {
                line: i + 1,
                message: e.to_string(),
            })
        };
        out.push(ParticleRecord {
            position: parse(fields[0])?,
            kind: kind_from_code(parse(fields[1])?)?,
            transform_time: parse(fields[2])?,
            transform_position: parse(fields[3])?,
        });
    }
    Ok(out)
}

pub fn write_binary<W: Write>(records: &[ParticleRecord], mut w: W) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(records.len() as u64).to_le_bytes())?;
    for r in records {
        for value in [
            r.position,
            type_code(r.kind),
            r.transform_time,
            r.transform_position,
        ] {
            w.write_all(&value.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<Vec<ParticleRecord>, SnapshotIoError> {
    let mut magic = [0u8; 16];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SnapshotIoError::BadMagic);
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let count = u64::from_le_bytes(word) as usize;
    let mut out = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let mut values = [0.0f64; 4];
        for v in &mut values {
            r.read_exact(&mut word)?;
            *v = f64::from_le_bytes(word);
        }
        out.push(ParticleRecord {
            position: values[0],
            kind: kind_from_code(values[1])?,
            transform_time: values[2],
            transform_position: values[3],
        });
    }
    Ok(out)
}
