//! IP-pair trace files.
//!
//! Binary: an 8-byte header (`b"SSPT"`, version `u32` LE) followed by 12-byte
//! little-endian records `(ts, cip, oip)`. Text: one `ts,cip,oip` line per
//! record, addresses either dotted quads or plain decimal. Blank lines and
//! lines starting with `#` are skipped. Timestamps must never decrease.

use std::io::{self, BufRead, Read, Write};
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;

use crate::error::{Error, Result};

pub const TRACE_MAGIC: [u8; 4] = *b"SSPT";
pub const TRACE_VERSION: u32 = 1;
const RECORD_LEN: usize = 12;

/// One oriented IP pair observed at `ts` (epoch seconds).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TraceRecord {
    pub ts: u32,
    pub cip: u32,
    pub oip: u32,
}

impl TraceRecord {
    pub fn new(ts: u32, cip: u32, oip: u32) -> Self {
        Self { ts, cip, oip }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceFormat {
    Binary,
    Text,
}

/// Parses a dotted quad (`192.168.1.1`) or a decimal `u32`.
pub fn parse_addr(s: &str) -> Option<u32> {
    let s = s.trim();
    if s.contains('.') {
        s.parse::<Ipv4Addr>().ok().map(u32::from)
    } else {
        s.parse::<u32>().ok()
    }
}

pub fn format_addr(addr: u32) -> String {
    Ipv4Addr::from(addr).to_string()
}

/// Streaming trace decoder. Error positions are record indices for binary
/// input and 1-based line numbers for text.
pub struct TraceReader<R> {
    inner: R,
    format: TraceFormat,
    header_done: bool,
    records: u64,
    line_no: u64,
    prev_ts: Option<u32>,
    line: String,
    done: bool,
}

/// Wraps `source` as a record stream in the given format.
pub fn read_trace<R: BufRead>(source: R, format: TraceFormat) -> TraceReader<R> {
    TraceReader {
        inner: source,
        format,
        header_done: false,
        records: 0,
        line_no: 0,
        prev_ts: None,
        line: String::new(),
        done: false,
    }
}

/// Picks the format by sniffing for the binary magic.
pub fn read_trace_auto<R: BufRead>(mut source: R) -> Result<TraceReader<R>> {
    let head = source.fill_buf()?;
    let format = if head.starts_with(&TRACE_MAGIC) || head.is_empty() {
        TraceFormat::Binary
    } else {
        TraceFormat::Text
    };
    Ok(read_trace(source, format))
}

/// Reads until `buf` is full or the stream ends; returns bytes read.
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

impl<R: BufRead> TraceReader<R> {
    fn read_header(&mut self) -> Result<bool> {
        let mut header = [0u8; 8];
        let n = read_full(&mut self.inner, &mut header)?;
        if n == 0 {
            return Ok(false);
        }
        if n < header.len() {
            return Err(Error::Truncated {
                expected: header.len() as u64,
                actual: n as u64,
            });
        }
        let magic: [u8; 4] = header[..4].try_into().expect("4 bytes");
        if magic != TRACE_MAGIC {
            return Err(Error::BadMagic {
                expected: TRACE_MAGIC,
                found: magic,
            });
        }
        let version = u32::from_le_bytes(header[4..].try_into().expect("4 bytes"));
        if version != TRACE_VERSION {
            return Err(Error::UnsupportedVersion {
                expected: TRACE_VERSION,
                found: version,
            });
        }
        Ok(true)
    }

    fn next_binary(&mut self) -> Result<Option<TraceRecord>> {
        if !self.header_done {
            self.header_done = true;
            if !self.read_header()? {
                return Ok(None);
            }
        }
        let mut buf = [0u8; RECORD_LEN];
        let n = read_full(&mut self.inner, &mut buf)?;
        if n == 0 {
            return Ok(None);
        }
        if n < RECORD_LEN {
            return Err(Error::MalformedRecord {
                position: self.records,
                reason: format!("truncated record: {n} of {RECORD_LEN} bytes"),
            });
        }
        let word =
            |i: usize| u32::from_le_bytes(buf[i * 4..i * 4 + 4].try_into().expect("4 bytes"));
        Ok(Some(TraceRecord::new(word(0), word(1), word(2))))
    }

    fn next_text(&mut self) -> Result<Option<TraceRecord>> {
        loop {
            self.line.clear();
            if self.inner.read_line(&mut self.line)? == 0 {
                return Ok(None);
            }
            self.line_no += 1;
            let line = self.line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let malformed = |reason: &str| Error::MalformedRecord {
                position: self.line_no,
                reason: format!("{reason}: {line:?}"),
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(malformed("expected ts,cip,oip"));
            }
            let ts = fields[0]
                .parse::<u32>()
                .map_err(|_| malformed("bad timestamp"))?;
            let cip = parse_addr(fields[1]).ok_or_else(|| malformed("bad cip"))?;
            let oip = parse_addr(fields[2]).ok_or_else(|| malformed("bad oip"))?;
            return Ok(Some(TraceRecord::new(ts, cip, oip)));
        }
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<TraceRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let next = match self.format {
            TraceFormat::Binary => self.next_binary(),
            TraceFormat::Text => self.next_text(),
        };
        let out = match next {
            Ok(Some(rec)) => {
                let position = match self.format {
                    TraceFormat::Binary => self.records,
                    TraceFormat::Text => self.line_no,
                };
                self.records += 1;
                match self.prev_ts {
                    Some(prev) if rec.ts < prev => Err(Error::TimestampRegression {
                        position,
                        prev,
                        ts: rec.ts,
                    }),
                    _ => {
                        self.prev_ts = Some(rec.ts);
                        Ok(rec)
                    }
                }
            }
            Ok(None) => {
                self.done = true;
                return None;
            }
            Err(e) => Err(e),
        };
        if out.is_err() {
            self.done = true;
        }
        Some(out)
    }
}

/// Streaming trace encoder.
pub struct TraceWriter<W: Write> {
    inner: W,
    format: TraceFormat,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut inner: W, format: TraceFormat) -> Result<Self> {
        match format {
            TraceFormat::Binary => {
                inner.write_all(&TRACE_MAGIC)?;
                inner.write_all(&TRACE_VERSION.to_le_bytes())?;
            }
            TraceFormat::Text => writeln!(inner, "# ts,cip,oip")?,
        }
        Ok(Self { inner, format })
    }

    pub fn write(&mut self, rec: &TraceRecord) -> Result<()> {
        match self.format {
            TraceFormat::Binary => {
                let mut buf = [0u8; RECORD_LEN];
                buf[..4].copy_from_slice(&rec.ts.to_le_bytes());
                buf[4..8].copy_from_slice(&rec.cip.to_le_bytes());
                buf[8..].copy_from_slice(&rec.oip.to_le_bytes());
                self.inner.write_all(&buf)?;
            }
            TraceFormat::Text => writeln!(
                self.inner,
                "{},{},{}",
                rec.ts,
                format_addr(rec.cip),
                format_addr(rec.oip)
            )?,
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Writes a whole trace.
pub fn write_trace<'a, W: Write>(
    out: W,
    records: impl IntoIterator<Item = &'a TraceRecord>,
    format: TraceFormat,
) -> Result<W> {
    let mut writer = TraceWriter::new(out, format)?;
    for rec in records {
        writer.write(rec)?;
    }
    writer.finish()
}

/// The inside network, as a set of IPv4 prefixes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnetSpec {
    prefixes: Vec<Ipv4Net>,
}

impl CnetSpec {
    pub fn new(prefixes: Vec<Ipv4Net>) -> Result<Self> {
        if prefixes.is_empty() {
            return Err(Error::InvalidConfig(vec![
                "inside network needs at least one prefix".into(),
            ]));
        }
        Ok(Self { prefixes })
    }

    /// Parses a comma-separated CIDR list such as `10.0.0.0/8,192.168.0.0/16`.
    pub fn parse(list: &str) -> Result<Self> {
        let prefixes = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<Ipv4Net>()
                    .map_err(|e| Error::InvalidConfig(vec![format!("bad prefix {s:?}: {e}")]))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(prefixes)
    }

    pub fn contains(&self, addr: u32) -> bool {
        let addr = Ipv4Addr::from(addr);
        self.prefixes.iter().any(|p| p.contains(&addr))
    }
}

/// Orients a raw `(src, dst)` pair as `(inside, outside)`; pairs that do not
/// cross the network edge yield nothing.
pub fn orient_pairs(src: u32, dst: u32, cnet: &CnetSpec) -> Option<(u32, u32)> {
    match (cnet.contains(src), cnet.contains(dst)) {
        (true, false) => Some((src, dst)),
        (false, true) => Some((dst, src)),
        _ => None,
    }
}
