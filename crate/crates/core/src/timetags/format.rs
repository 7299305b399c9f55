//! Binary time-tag stream format, documented for bit-exact replay.
//!
//! Little-endian layout:
//!
//! ```text
//! magic   4 bytes  "TTAG"
//! version u16      currently 1
//! n_det   u8       detector count
//! res     u32      time resolution in ps (tags are integer multiples)
//! records repeated { detector u8, time_ps u64 }
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::EventStream;

const MAGIC: &[u8; 4] = b"TTAG";
const VERSION: u16 = 1;

pub fn write_stream<W: Write>(stream: &EventStream, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&[stream.n_detectors])?;
    out.write_all(&stream.resolution_ps.to_le_bytes())?;
    for &(det, t) in &stream.records {
        out.write_all(&[det])?;
        out.write_all(&t.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_stream<R: Read>(mut input: R) -> Result<EventStream> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Parse("not a TTAG stream".into()));
    }
    let mut b2 = [0u8; 2];
    input.read_exact(&mut b2)?;
    let version = u16::from_le_bytes(b2);
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported TTAG version {version}")));
    }
    let mut b1 = [0u8; 1];
    input.read_exact(&mut b1)?;
    let n_detectors = b1[0];
    let mut b4 = [0u8; 4];
    input.read_exact(&mut b4)?;
    let resolution_ps = u32::from_le_bytes(b4);

    let mut records = Vec::new();
    let mut rec = [0u8; 9];
    loop {
        match input.read_exact(&mut rec) {
            Ok(()) => {
                let det = rec[0];
                if det >= n_detectors {
                    return Err(Error::Parse(format!("detector id {det} out of range")));
                }
                let t = u64::from_le_bytes(rec[1..9].try_into().unwrap());
                records.push((det, t));
            }
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(EventStream { n_detectors, resolution_ps, records })
}
