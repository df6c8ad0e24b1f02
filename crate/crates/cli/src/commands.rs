use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ssp_core::distributed::{
    export_snapshot, import_snapshot, merge_snapshots, simulate_nodes, split_shards, RseaSnapshot,
    MERGED_NODE,
};
use ssp_core::pipeline::{Detector, DetectorConfig};
use ssp_core::rsea::{DetectionReport, Rsea};
use ssp_core::workload::{
    evaluate_sets, exact_counts, orient_pairs, read_reports, read_trace, read_trace_auto,
    read_truth, synth_trace, write_eval, write_truth, CnetSpec, ReportWriter, SynthSpec,
    TraceFormat, TraceRecord, TraceWriter,
};
use ssp_core::{Error, Result};

use crate::params::Params;
use crate::FormatArg;

type Records = Box<dyn Iterator<Item = Result<TraceRecord>>>;

fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if is_stdio(path) {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        Ok(Box::new(BufReader::new(File::open(path)?)))
    }
}

fn open_output(path: &Path) -> Result<Box<dyn Write>> {
    if is_stdio(path) {
        Ok(Box::new(BufWriter::new(io::stdout())))
    } else {
        Ok(Box::new(BufWriter::new(File::create(path)?)))
    }
}

fn records(path: &Path, format: FormatArg, cnet: Option<&str>) -> Result<Records> {
    let source = open_input(path)?;
    let reader = match format {
        FormatArg::Auto => read_trace_auto(source)?,
        FormatArg::Binary => read_trace(source, TraceFormat::Binary),
        FormatArg::Text => read_trace(source, TraceFormat::Text),
    };
    Ok(match cnet {
        None => Box::new(reader),
        Some(list) => {
            let cnet = CnetSpec::parse(list)?;
            Box::new(reader.filter_map(move |rec| {
                match rec {
                    Ok(r) => orient_pairs(r.cip, r.oip, &cnet)
                        .map(|(cip, oip)| Ok(TraceRecord::new(r.ts, cip, oip))),
                    Err(e) => Some(Err(e)),
                }
            }))
        }
    })
}

fn write_snapshot(path: &Path, rsea: &Rsea, cfg: &DetectorConfig, node: u32) -> Result<()> {
    let out = open_output(path)?;
    export_snapshot(rsea, cfg.window.k, cfg.theta, node, out)
}

fn summarize(slots: u64, reports: &[usize]) {
    let total: usize = reports.iter().sum();
    let busiest = reports.iter().copied().max().unwrap_or(0);
    eprintln!("ssp: {slots} slots, {total} detections, at most {busiest} hosts in one window");
}

pub struct DetectArgs<'a> {
    pub params: &'a Params,
    pub inputs: &'a [std::path::PathBuf],
    pub nodes: usize,
    pub shard_seed: u64,
    pub format: FormatArg,
    pub cnet: Option<&'a str>,
    pub output: &'a Path,
    pub slots: u64,
    pub snapshot: Option<&'a Path>,
}

pub fn detect(args: DetectArgs<'_>) -> Result<()> {
    let cfg = args.params.resolve()?;
    if args.nodes == 0 {
        return Err(Error::InvalidConfig(
            vec!["--nodes must be positive".into()],
        ));
    }
    if args.inputs.len() > 1 && args.nodes > 1 {
        return Err(Error::InvalidConfig(vec![
            "--nodes splits a single input; with several inputs each file is a node".into(),
        ]));
    }
    if args.inputs.iter().filter(|p| is_stdio(p)).count() > 1 {
        return Err(Error::InvalidConfig(vec![
            "stdin can feed only one input".into()
        ]));
    }
    let mut writer = ReportWriter::new(open_output(args.output)?)?;
    let mut sizes = Vec::new();
    let mut emit = |report: &DetectionReport| {
        sizes.push(report.hosts.len());
        writer.write(report)
    };

    if args.inputs.len() == 1 && args.nodes == 1 {
        let mut det = Detector::new(cfg)?;
        det.run(
            records(&args.inputs[0], args.format, args.cnet)?,
            args.slots,
            &mut emit,
        )?;
        if let Some(path) = args.snapshot {
            write_snapshot(path, det.rsea(), &cfg, 0)?;
        }
    } else {
        let shards: Vec<Records> = if args.inputs.len() == 1 {
            let all: Vec<TraceRecord> =
                records(&args.inputs[0], args.format, args.cnet)?.collect::<Result<_>>()?;
            split_shards(&all, args.nodes, args.shard_seed)
                .into_iter()
                .map(|s| Box::new(s.into_iter().map(Ok)) as Records)
                .collect()
        } else {
            args.inputs
                .iter()
                .map(|p| records(p, args.format, args.cnet))
                .collect::<Result<_>>()?
        };
        let mut last_global: Option<Rsea> = None;
        simulate_nodes(shards, cfg, args.params.policy(), args.slots, |outcome| {
            emit(&outcome.report)?;
            if args.snapshot.is_some() {
                last_global = Some(outcome.global.clone());
            }
            Ok(())
        })?;
        if let (Some(path), Some(global)) = (args.snapshot, last_global) {
            write_snapshot(path, &global, &cfg, MERGED_NODE)?;
        }
    }
    writer.finish()?;
    summarize(sizes.len() as u64, &sizes);
    Ok(())
}

pub fn oracle(
    params: &Params,
    input: &Path,
    format: FormatArg,
    cnet: Option<&str>,
    output: &Path,
    min_count: u32,
    slots: u64,
) -> Result<()> {
    let cfg = params.resolve()?;
    let truth = exact_counts(records(input, format, cnet)?, &cfg.window, slots)?;
    write_truth(open_output(output)?, &truth, min_count)?;
    let supers: usize = (0..truth.slots())
        .map(|s| truth.supers(s, cfg.theta).len())
        .sum();
    eprintln!(
        "ssp: {} slots, {supers} super point windows at theta={}",
        truth.slots(),
        cfg.theta
    );
    Ok(())
}

pub fn eval(params: &Params, reports: &Path, truth: &Path, output: &Path) -> Result<()> {
    let cfg = params.resolve()?;
    let reports = read_reports(open_input(reports)?)?;
    let truth = read_truth(open_input(truth)?)?;
    if reports.slots.len() as u64 != truth.slots() {
        return Err(Error::SlotMisalignment(format!(
            "reports cover {} slots but truth covers {}",
            reports.slots.len(),
            truth.slots()
        )));
    }
    let results: Vec<_> = reports
        .slots
        .iter()
        .enumerate()
        .map(|(slot, reported)| {
            let slot = slot as u64;
            let supers: BTreeSet<u32> = truth.supers(slot, cfg.theta).into_iter().collect();
            (slot, evaluate_sets(reported, &supers))
        })
        .collect();
    write_eval(open_output(output)?, &results)
}

pub fn synth(
    params: &Params,
    spec: &Path,
    output: &Path,
    truth: Option<&Path>,
    format: FormatArg,
) -> Result<()> {
    let cfg = params.resolve()?;
    let text = std::fs::read_to_string(spec)?;
    let spec: SynthSpec = toml::from_str(&text)
        .map_err(|e| Error::InvalidConfig(vec![format!("{}: {}", spec.display(), e.message())]))?;
    let out = synth_trace(&spec, &cfg.window, params.seed())?;
    let format = match format {
        FormatArg::Text => TraceFormat::Text,
        FormatArg::Binary | FormatArg::Auto => TraceFormat::Binary,
    };
    let mut writer = TraceWriter::new(open_output(output)?, format)?;
    for rec in &out.records {
        writer.write(rec)?;
    }
    writer.finish()?;
    if let Some(path) = truth {
        write_truth(open_output(path)?, &out.truth, 1)?;
    }
    eprintln!(
        "ssp: {} records over {} slots",
        out.records.len(),
        spec.slots
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn snapshot_export(
    params: &Params,
    input: &Path,
    format: FormatArg,
    cnet: Option<&str>,
    output: &Path,
    node: u32,
    slots: u64,
    reports: Option<&Path>,
) -> Result<()> {
    let cfg = params.resolve()?;
    let mut det = Detector::new(cfg)?;
    let mut writer = reports
        .map(|p| open_output(p).and_then(ReportWriter::new))
        .transpose()?;
    det.run(
        records(input, format, cnet)?,
        slots,
        |report| match writer.as_mut() {
            Some(w) => w.write(report),
            None => Ok(()),
        },
    )?;
    if let Some(w) = writer {
        w.finish()?;
    }
    write_snapshot(output, det.rsea(), &cfg, node)?;
    eprintln!("ssp: node {node} snapshot at slot {}", det.rsea().slot());
    Ok(())
}

/// Detector settings for a snapshot: its recorded layout and window, with
/// explicit flags allowed to change only the non-layout settings.
fn snapshot_config(params: &Params, snap: &RseaSnapshot) -> Result<DetectorConfig> {
    let mut cfg = params.base();
    cfg.rhfg = snap.meta.rhfg;
    cfg.eta = snap.meta.eta as usize;
    cfg.window.k = snap.meta.k;
    cfg.theta = snap.meta.theta;
    params.check_layout(&cfg)?;
    let cfg = params.apply(cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn write_report(path: &Path, cfg: &DetectorConfig, rsea: &Rsea) -> Result<()> {
    let report = rsea.reconstruct(cfg.window.k, cfg.theta, &cfg.reconstruct_options())?;
    let mut writer = ReportWriter::new(open_output(path)?)?;
    writer.write(&report)?;
    writer.finish()?;
    eprintln!(
        "ssp: slot {}, {} detections",
        report.slot,
        report.hosts.len()
    );
    Ok(())
}

pub fn snapshot_import(params: &Params, input: &Path, output: &Path) -> Result<()> {
    let snap = import_snapshot(open_input(input)?)?;
    let cfg = snapshot_config(params, &snap)?;
    write_report(output, &cfg, &snap.rsea)
}

pub fn snapshot_merge(
    params: &Params,
    inputs: &[std::path::PathBuf],
    output: &Path,
    reports: Option<&Path>,
) -> Result<()> {
    let snaps: Vec<RseaSnapshot> = inputs
        .iter()
        .map(|p| import_snapshot(open_input(p)?))
        .collect::<Result<_>>()?;
    let merged = merge_snapshots(&snaps, params.policy(), params.workers.unwrap_or(1))?;
    let cfg = snapshot_config(params, &merged)?;
    write_snapshot(output, &merged.rsea, &cfg, MERGED_NODE)?;
    if let Some(path) = reports {
        write_report(path, &cfg, &merged.rsea)?;
    }
    Ok(())
}
