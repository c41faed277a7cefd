//! FTAG1: a 16-byte header (`"FTAG1\0\0\0"`, u64 LE record count) followed by
//! 16-byte records (u8 channel, 7 zero bytes, u64 LE time in ps).

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::optics::TimeTag;

pub const FTAG_MAGIC: [u8; 8] = *b"FTAG1\0\0\0";
pub const RECORD_BYTES: u64 = 16;
const HEADER_BYTES: u64 = 16;

/// Serializes `tags`, which must be sorted by time.
pub fn write_tags_to<W: Write>(mut out: W, tags: &[TimeTag]) -> Result<()> {
    if let Some(k) = tags.windows(2).position(|w| w[1].time < w[0].time) {
        return Err(Error::Unsorted {
            offset: HEADER_BYTES + RECORD_BYTES * (k as u64 + 1),
            previous: tags[k].time,
            current: tags[k + 1].time,
        });
    }
    out.write_all(&FTAG_MAGIC)?;
    out.write_all(&(tags.len() as u64).to_le_bytes())?;
    let mut record = [0u8; RECORD_BYTES as usize];
    for tag in tags {
        record[0] = tag.channel;
        record[8..].copy_from_slice(&tag.time.to_le_bytes());
        out.write_all(&record)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads and checks a complete FTAG1 stream.
pub fn read_tags_from<R: Read>(input: R) -> Result<Vec<TimeTag>> {
    let mut input = BufReader::new(input);
    let mut header = [0u8; HEADER_BYTES as usize];
    let got = read_full(&mut input, &mut header)?;
    if got < 8 || header[..8] != FTAG_MAGIC {
        return Err(Error::BadMagic { offset: 0 });
    }
    if got < HEADER_BYTES as usize {
        return Err(Error::Truncated { offset: got as u64, message: "header ends before the record count".into() });
    }
    let count = u64::from_le_bytes(header[8..].try_into().expect("8 bytes"));
    let mut tags = Vec::with_capacity(count.min(1 << 26) as usize);
    let mut record = [0u8; RECORD_BYTES as usize];
    let mut previous = 0u64;
    for k in 0..count {
        let offset = HEADER_BYTES + k * RECORD_BYTES;
        let got = read_full(&mut input, &mut record)?;
        if got < RECORD_BYTES as usize {
            return Err(Error::Truncated {
                offset: offset + got as u64,
                message: format!("header announces {count} records, body ends inside record {k}"),
            });
        }
        let time = u64::from_le_bytes(record[8..].try_into().expect("8 bytes"));
        if k > 0 && time < previous {
            return Err(Error::Unsorted { offset, previous, current: time });
        }
        previous = time;
        tags.push(TimeTag { channel: record[0], time });
    }
    let mut extra = [0u8; 1];
    if read_full(&mut input, &mut extra)? > 0 {
        return Err(Error::Truncated {
            offset: HEADER_BYTES + count * RECORD_BYTES,
            message: format!("data continue past the {count} records announced in the header"),
        });
    }
    Ok(tags)
}

fn read_full<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}

pub fn read_time_tags(path: &Path) -> Result<Vec<TimeTag>> {
    read_tags_from(fs::File::open(path)?)
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_time_tags(path: &Path, tags: &[TimeTag]) -> Result<()> {
    let tmp = super::temp_sibling(path);
    let result = (|| {
        let file = fs::File::create(&tmp)?;
        let mut out = BufWriter::new(file);
        write_tags_to(&mut out, tags)?;
        out.into_inner().map_err(|e| Error::Io(e.into_error()))?.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
