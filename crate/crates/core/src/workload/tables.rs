//! Plain-text tables for truth, detection reports and accuracy.
//!
//! Every table is comma-separated with a header row. A `# slots=N` comment
//! records how many slots the producer covered, so slots with no rows are
//! still accounted for when tables are compared.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::rsea::DetectionReport;

use super::metrics::{mean_rates, AccuracyResult};
use super::oracle::GroundTruth;
use super::trace::{format_addr, parse_addr};

pub const TRUTH_HEADER: &str = "slot,cip,count";
pub const REPORT_HEADER: &str = "slot,cip,estimate";
pub const EVAL_HEADER: &str = "slot,fpr,fnr,tfr";

fn slots_comment(line: &str) -> Option<&str> {
    line.strip_prefix('#')?.trim().strip_prefix("slots=")
}

type Rows = (Option<u64>, Vec<(u64, Vec<String>)>);

/// Data rows of a table, with the declared slot count if present.
fn rows<R: BufRead>(source: R, header: &str) -> Result<Rows> {
    let mut slots = None;
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        let position = i as u64 + 1;
        if line.is_empty() || line == header {
            continue;
        }
        if line.starts_with('#') {
            if let Some(n) = slots_comment(line) {
                slots = Some(n.trim().parse().map_err(|_| Error::MalformedRecord {
                    position,
                    reason: format!("bad slot count {n:?}"),
                })?);
            }
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if fields.len() != header.split(',').count() {
            return Err(Error::MalformedRecord {
                position,
                reason: format!("expected {header}: {line:?}"),
            });
        }
        out.push((position, fields));
    }
    Ok((slots, out))
}

fn field<T: std::str::FromStr>(position: u64, name: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::MalformedRecord {
        position,
        reason: format!("bad {name} {value:?}"),
    })
}

fn addr_field(position: u64, value: &str) -> Result<u32> {
    parse_addr(value).ok_or_else(|| Error::MalformedRecord {
        position,
        reason: format!("bad address {value:?}"),
    })
}

/// Writes every `(slot, cip, count)` with `count >= min_count`.
pub fn write_truth<W: Write>(mut out: W, truth: &GroundTruth, min_count: u32) -> Result<()> {
    writeln!(out, "# slots={}", truth.slots())?;
    writeln!(out, "{TRUTH_HEADER}")?;
    for (slot, window) in truth.iter() {
        for &(cip, count) in window.iter().filter(|&&(_, c)| c >= min_count) {
            writeln!(out, "{slot},{},{count}", format_addr(cip))?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_truth<R: BufRead>(source: R) -> Result<GroundTruth> {
    let (declared, rows) = rows(source, TRUTH_HEADER)?;
    let mut per_slot: Vec<Vec<(u32, u32)>> = Vec::new();
    for (position, f) in rows {
        let slot: u64 = field(position, "slot", &f[0])?;
        let cip = addr_field(position, &f[1])?;
        let count: u32 = field(position, "count", &f[2])?;
        let slot = usize::try_from(slot).map_err(|_| Error::MalformedRecord {
            position,
            reason: format!("slot {slot} out of range"),
        })?;
        if per_slot.len() <= slot {
            per_slot.resize_with(slot + 1, Vec::new);
        }
        per_slot[slot].push((cip, count));
    }
    if let Some(n) = declared {
        if (per_slot.len() as u64) > n {
            return Err(Error::SlotMisalignment(format!(
                "truth declares {n} slots but has rows for slot {}",
                per_slot.len() - 1
            )));
        }
        per_slot.resize_with(n as usize, Vec::new);
    }
    let mut truth = GroundTruth::new();
    for window in per_slot {
        truth.push_slot(window);
    }
    Ok(truth)
}

/// Streams detection reports, one row per detected host.
pub struct ReportWriter<W: Write> {
    out: W,
    slots: u64,
}

impl<W: Write> ReportWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        writeln!(out, "{REPORT_HEADER}")?;
        Ok(Self { out, slots: 0 })
    }

    pub fn write(&mut self, report: &DetectionReport) -> Result<()> {
        for d in &report.hosts {
            writeln!(
                self.out,
                "{},{},{:.2}",
                report.slot,
                format_addr(d.cip),
                d.estimate
            )?;
        }
        self.slots = self.slots.max(report.slot + 1);
        self.out.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        writeln!(self.out, "# slots={}", self.slots)?;
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Reported hosts per slot.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReportTable {
    pub slots: Vec<BTreeSet<u32>>,
}

pub fn read_reports<R: BufRead>(source: R) -> Result<ReportTable> {
    let (declared, rows) = rows(source, REPORT_HEADER)?;
    let mut slots: Vec<BTreeSet<u32>> = Vec::new();
    for (position, f) in rows {
        let slot: usize = field(position, "slot", &f[0])?;
        let cip = addr_field(position, &f[1])?;
        let _: f64 = field(position, "estimate", &f[2])?;
        if slots.len() <= slot {
            slots.resize_with(slot + 1, BTreeSet::new);
        }
        slots[slot].insert(cip);
    }
    if let Some(n) = declared {
        if (slots.len() as u64) > n {
            return Err(Error::SlotMisalignment(format!(
                "reports declare {n} slots but have rows for slot {}",
                slots.len() - 1
            )));
        }
        slots.resize_with(n as usize, BTreeSet::new);
    }
    Ok(ReportTable { slots })
}

/// Writes per-slot rates followed by a `mean` row.
pub fn write_eval<W: Write>(mut out: W, results: &[(u64, AccuracyResult)]) -> Result<()> {
    writeln!(
        out,
        "# rates are normalized by the number of true super points"
    )?;
    writeln!(out, "{EVAL_HEADER}")?;
    for (slot, r) in results {
        writeln!(out, "{slot},{:.6},{:.6},{:.6}", r.fpr, r.fnr, r.tfr)?;
    }
    let plain: Vec<AccuracyResult> = results.iter().map(|(_, r)| *r).collect();
    let (fpr, fnr, tfr) = mean_rates(&plain);
    writeln!(out, "mean,{fpr:.6},{fnr:.6},{tfr:.6}")?;
    let degenerate: Vec<String> = results
        .iter()
        .filter(|(_, r)| r.degenerate)
        .map(|(s, _)| s.to_string())
        .collect();
    if !degenerate.is_empty() {
        writeln!(
            out,
            "# no true super points but reports present (fpr holds the report count) in slots {}",
            degenerate.join(" ")
        )?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rsea::Detection;
    use std::io::Cursor;

    #[test]
    fn truth_round_trip() {
        let mut truth = GroundTruth::new();
        truth.push_slot(vec![(0x0A00_0001, 7), (3, 1)]);
        truth.push_slot(vec![]);
        truth.push_slot(vec![(0xFFFF_FFFF, 2)]);
        let mut buf = Vec::new();
        write_truth(&mut buf, &truth, 0).unwrap();
        assert_eq!(read_truth(Cursor::new(&buf)).unwrap(), truth);

        let mut buf = Vec::new();
        write_truth(&mut buf, &truth, 5).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("0,10.0.0.1,7"));
        let back = read_truth(Cursor::new(&buf)).unwrap();
        assert_eq!(back.slots(), 3);
        assert_eq!(back.count(0, 3), 0);
    }

    #[test]
    fn reports_round_trip() {
        let mut w = ReportWriter::new(Vec::new()).unwrap();
        let d = |cip| Detection {
            cip,
            estimate: 1500.25,
        };
        w.write(&DetectionReport {
            slot: 0,
            hosts: vec![d(1), d(2)],
        })
        .unwrap();
        w.write(&DetectionReport {
            slot: 1,
            hosts: vec![],
        })
        .unwrap();
        w.write(&DetectionReport {
            slot: 2,
            hosts: vec![d(2)],
        })
        .unwrap();
        w.write(&DetectionReport {
            slot: 3,
            hosts: vec![],
        })
        .unwrap();
        let buf = w.finish().unwrap();
        let table = read_reports(Cursor::new(&buf)).unwrap();
        assert_eq!(table.slots.len(), 4);
        assert_eq!(table.slots[0], BTreeSet::from([1, 2]));
        assert!(table.slots[1].is_empty() && table.slots[3].is_empty());
    }

    #[test]
    fn malformed_rows() {
        let err = read_truth(Cursor::new("slot,cip,count\n0,1.2.3,4\n")).unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { position: 2, .. }));
        let err = read_reports(Cursor::new("# slots=1\n3,1.2.3.4,5.0\n")).unwrap_err();
        assert!(matches!(err, Error::SlotMisalignment(_)));
    }

    #[test]
    fn eval_table() {
        let good = AccuracyResult {
            fpr: 0.1,
            fnr: 0.0,
            tfr: 0.1,
            ..Default::default()
        };
        let bad = AccuracyResult {
            fpr: 2.0,
            tfr: 2.0,
            degenerate: true,
            ..Default::default()
        };
        let mut buf = Vec::new();
        write_eval(&mut buf, &[(0, good), (1, bad)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("0,0.100000,0.000000,0.100000"));
        assert!(text.contains("mean,1.050000,0.000000,1.050000"));
        assert!(text.contains("in slots 1"));
    }
}
