use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::Instant;

use lnn412_core::analysis::{
    crossing_estimate, log_grid, read_curve_csv, read_ri_csv, write_curve_csv, write_ri_csv,
    RiEstimate,
};
use lnn412_core::builder::{
    build_cnot_exrec, build_level_circuit, build_nonlocal_syndrome_extraction,
};
use lnn412_core::{
    Crossing, DecoderMode, FailureCurve, Hierarchy, Injection, RectKind, RiRow, RiTable,
    RunManifest, RunSummary, Simulator,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{
    BuildArgs, CliError, Decoder, ExpandArgs, GridArgs, ManifestArgs, McArgs, RsubsetArgs,
    ScanArgs, SimArgs,
};

/// Largest level written out gate by gate.
const MAX_FLAT_LEVEL: u8 = 3;

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

fn runtime(m: impl Into<String>) -> CliError {
    CliError::Runtime(m.into())
}

fn mode(d: Decoder) -> DecoderMode {
    match d {
        Decoder::Literal => DecoderMode::Literal,
        Decoder::Extended => DecoderMode::Extended,
    }
}

fn workers(sim: &SimArgs) -> usize {
    sim.workers
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1)
}

fn with_context<T, E: std::fmt::Display>(r: Result<T, E>, what: &Path) -> Result<T, CliError> {
    r.map_err(|e| runtime(format!("{}: {e}", what.display())))
}

struct Run {
    manifest: RunManifest,
    clock: Instant,
}

impl Run {
    fn start<A: Serialize>(
        command: &str,
        args: &A,
        argv: &[String],
        seed: Option<u64>,
        workers: usize,
    ) -> Run {
        let config = json!({ "argv": argv, "args": args });
        Run {
            manifest: RunManifest::new(command, config, seed, workers),
            clock: Instant::now(),
        }
    }

    fn finish(
        mut self,
        totals: serde_json::Value,
        m: &ManifestArgs,
        out: Option<&Path>,
    ) -> Result<(), CliError> {
        self.manifest.elapsed_secs = self.clock.elapsed().as_secs_f64();
        self.manifest.totals = totals;
        let path = m
            .manifest
            .clone()
            .or_else(|| out.map(|o| sidecar(o, "manifest.json")));
        match path {
            Some(p) => {
                let f = with_context(File::create(&p), &p)?;
                self.manifest.write(f)?;
            }
            None => eprintln!("manifest: {}", serde_json::to_string(&self.manifest)?),
        }
        Ok(())
    }
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

enum Gadget {
    Exrec,
    Rect(RectKind),
}

fn parse_gadget(s: &str) -> Result<Gadget, CliError> {
    if s == "exrec-cnot" {
        return Ok(Gadget::Exrec);
    }
    s.parse::<RectKind>().map(Gadget::Rect).map_err(|_| {
        let names: Vec<&str> = RectKind::ALL.iter().map(|k| k.name()).collect();
        usage(format!(
            "unknown gadget `{s}`; expected exrec-cnot or one of {}",
            names.join(", ")
        ))
    })
}

pub fn build(a: &BuildArgs, argv: &[String]) -> Result<(), CliError> {
    let gadget = parse_gadget(&a.gadget)?;
    let level = a.level as usize;
    if a.out.is_some() && a.level > MAX_FLAT_LEVEL {
        return Err(usage(format!(
            "circuits are only written for levels up to {MAX_FLAT_LEVEL}"
        )));
    }
    let run = Run::start("build", a, argv, None, 1);
    let h = Hierarchy::new(level);
    let (name, counts, depth) = match gadget {
        Gadget::Exrec => (
            "exrec-cnot".to_string(),
            h.exrec_counts_by_kind(level),
            h.exrec_duration(level),
        ),
        Gadget::Rect(k) => (
            k.name().to_string(),
            h.counts_by_kind(level, k),
            h.duration(level, k),
        ),
    };
    println!("gadget {name} level {level}");
    println!("counts {counts}");
    println!("depth {depth}");

    let mut totals =
        json!({ "gadget": name, "level": level, "total": counts.total, "depth": depth });
    if a.level <= MAX_FLAT_LEVEL {
        let c = match gadget {
            Gadget::Exrec => build_cnot_exrec(level),
            Gadget::Rect(k) => build_level_circuit(k, level),
        };
        c.validate_linear()
            .map_err(|v| runtime(format!("generated circuit is not nearest-neighbor: {v}")))?;
        println!("data-data swaps {}", c.data_data_swaps());
        totals["data_data_swaps"] = json!(c.data_data_swaps());
        if let Some(out) = &a.out {
            with_context(fs::write(out, c.serialize()), out)?;
        }
    }
    if a.compare_nonlocal {
        let r = build_nonlocal_syndrome_extraction();
        println!(
            "nonlocal-ec depth {} counts {}",
            r.depth(),
            r.count_locations()
        );
        totals["nonlocal_depth"] = json!(r.depth());
        if let Some(out) = &a.out {
            let p = sidecar(out, "nonlocal");
            with_context(fs::write(&p, r.serialize()), &p)?;
        }
    }
    run.finish(totals, &a.manifest, a.out.as_deref())
}

fn simulator(sim: &SimArgs) -> Result<Simulator, CliError> {
    Simulator::new(sim.level as usize, mode(sim.decoder)).map_err(|e| usage(e.to_string()))
}

fn dump_trial(s: &Simulator, sim: &SimArgs, injection: Injection) -> Result<(), CliError> {
    let (Some(index), Some(path)) = (sim.dump_trial, &sim.dump) else {
        return Ok(());
    };
    let mut ws = s.workspace();
    ws.dump = Some(Vec::new());
    let outcome = s.trial(&mut ws, injection, sim.seed, index)?;
    let records = ws.dump.take().unwrap_or_default();
    let doc = json!({
        "trial": index,
        "success": outcome.success(),
        "aborted": outcome.aborted,
        "logical": outcome.logical,
        "matches": records,
    });
    let f = with_context(File::create(path), path)?;
    serde_json::to_writer_pretty(f, &doc)?;
    Ok(())
}

fn append_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let f = with_context(
        OpenOptions::new().create(true).append(true).open(path),
        path,
    )?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(f);
    for r in rows {
        w.serialize(r).map_err(|e| runtime(e.to_string()))?;
    }
    w.flush().map_err(|e| runtime(e.to_string()))?;
    Ok(())
}

pub fn rsubset(a: &RsubsetArgs, argv: &[String]) -> Result<(), CliError> {
    if a.trials == 0 {
        return Err(usage("--trials must be positive"));
    }
    let s = simulator(&a.sim)?;
    if a.errors > s.locations {
        return Err(usage(format!(
            "cannot place {} errors in {} locations",
            a.errors, s.locations
        )));
    }
    let w = workers(&a.sim);
    let run = Run::start("rsubset", a, argv, Some(a.sim.seed), w);
    let sum = s.estimate_ri(a.errors, a.trials, a.sim.seed, w)?;
    let row = RiRow {
        level: s.level,
        i: a.errors,
        trials: sum.trials,
        failures: sum.failures,
    };
    match &a.out {
        Some(p) => append_csv(p, &[row])?,
        None => write_ri_csv(std::io::stdout().lock(), &[row], true)?,
    }
    let est = RiEstimate::from_counts(a.errors, sum.trials, sum.failures);
    eprintln!(
        "level {} i {}: r = {:.6e} band [{:.3e}, {:.3e}]{} aborted {}",
        s.level,
        a.errors,
        est.r,
        est.lo,
        est.hi,
        if est.wilson { " (wilson)" } else { "" },
        sum.aborted
    );
    dump_trial(&s, &a.sim, Injection::Exact(a.errors))?;
    let totals = json!({ "locations": s.locations, "summary": sum, "wilson": est.wilson });
    run.finish(totals, &a.manifest, a.out.as_deref())
}

#[derive(Clone, Copy, Serialize, Deserialize, PartialEq, Debug)]
struct McKey {
    level: usize,
    p: f64,
    trials: u64,
    seed: u64,
    decoder: Decoder,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    key: McKey,
    done: u64,
    summary: RunSummary,
}

#[derive(Serialize)]
struct McRow {
    level: usize,
    p: f64,
    trials: u64,
    failures: u64,
    aborted: u64,
    pfail: f64,
    plo: f64,
    phi: f64,
}

fn save_checkpoint(path: &Path, c: &Checkpoint) -> Result<(), CliError> {
    let tmp = sidecar(path, "tmp");
    with_context(fs::write(&tmp, serde_json::to_vec(c)?), &tmp)?;
    with_context(fs::rename(&tmp, path), path)
}

pub fn mc(a: &McArgs, argv: &[String]) -> Result<(), CliError> {
    if a.trials == 0 || a.chunk == 0 {
        return Err(usage("--trials and --chunk must be positive"));
    }
    if !(0.0..=1.0).contains(&a.p) {
        return Err(usage(format!("--p {} outside [0, 1]", a.p)));
    }
    let s = simulator(&a.sim)?;
    let w = workers(&a.sim);
    let run = Run::start("mc", a, argv, Some(a.sim.seed), w);
    let key = McKey {
        level: s.level,
        p: a.p,
        trials: a.trials,
        seed: a.sim.seed,
        decoder: a.sim.decoder,
    };

    let mut done = 0;
    let mut sum = RunSummary::default();
    if let Some(cp) = &a.checkpoint {
        if let Ok(bytes) = fs::read(cp) {
            let c: Checkpoint = serde_json::from_slice(&bytes)
                .map_err(|e| runtime(format!("{}: {e}", cp.display())))?;
            if c.key != key {
                return Err(usage(format!(
                    "{} belongs to a different run",
                    cp.display()
                )));
            }
            done = c.done;
            sum = c.summary;
            eprintln!("resuming at trial {done}");
        }
    }
    while done < a.trials {
        let n = a.chunk.min(a.trials - done);
        sum = sum.merge(s.estimate_range(Injection::Iid(a.p), a.sim.seed, done, n, w)?);
        done += n;
        eprintln!("{done}/{} trials, {} failures", a.trials, sum.failures);
        if let Some(cp) = &a.checkpoint {
            save_checkpoint(
                cp,
                &Checkpoint {
                    key,
                    done,
                    summary: sum.clone(),
                },
            )?;
        }
    }

    let est = RiEstimate::from_counts(0, sum.trials, sum.failures);
    let row = McRow {
        level: s.level,
        p: a.p,
        trials: sum.trials,
        failures: sum.failures,
        aborted: sum.aborted,
        pfail: est.r,
        plo: est.lo,
        phi: est.hi,
    };
    match &a.out {
        Some(p) => append_csv(p, &[row])?,
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            w.serialize(row).map_err(|e| runtime(e.to_string()))?;
            w.flush()?;
        }
    }
    dump_trial(&s, &a.sim, Injection::Iid(a.p))?;
    let totals = json!({ "summary": sum, "wilson": est.wilson });
    run.finish(totals, &a.manifest, a.out.as_deref())
}

fn check_grid(g: &GridArgs) -> Result<Vec<f64>, CliError> {
    if !(g.p_min > 0.0 && g.p_min < g.p_max && g.p_max < 1.0) || g.points < 2 {
        return Err(usage("need 0 < p-min < p-max < 1 and at least 2 points"));
    }
    Ok(log_grid(g.p_min, g.p_max, g.points))
}

fn load_rows(files: &[PathBuf]) -> Result<Vec<RiRow>, CliError> {
    let mut rows = Vec::new();
    for f in files {
        let file = with_context(File::open(f), f)?;
        rows.extend(with_context(read_ri_csv(file), f)?);
    }
    Ok(rows)
}

fn expand_tables(
    rows: &[RiRow],
    only: &[usize],
    g: &GridArgs,
) -> Result<Vec<FailureCurve>, CliError> {
    let grid = check_grid(g)?;
    let mut levels: Vec<usize> = rows.iter().map(|r| r.level).collect();
    levels.sort_unstable();
    levels.dedup();
    if !only.is_empty() {
        levels.retain(|l| only.contains(l));
    }
    if levels.is_empty() {
        return Err(usage("no r_i rows for the requested levels"));
    }
    let top = *levels.last().unwrap();
    let h = Hierarchy::new(top);
    let mut curves = Vec::new();
    for level in levels {
        if level == 0 {
            return Err(usage("r_i rows must have level >= 1"));
        }
        let table = RiTable::from_rows(level, h.exrec_count(level), rows, None)?;
        let (curve, warn) = FailureCurve::expand(&table, &grid, g.tail_fraction);
        if let Some(first) = warn.first() {
            eprintln!(
                "warning: level {level}: neglected terms beyond i = {} exceed {} of P_fail for p >= {first:.3e}",
                table.i_max(),
                g.tail_fraction
            );
        }
        curves.push(curve);
    }
    Ok(curves)
}

pub fn expand(a: &ExpandArgs, argv: &[String]) -> Result<(), CliError> {
    let run = Run::start("expand", a, argv, None, 1);
    let rows = load_rows(&a.ri)?;
    let curves = expand_tables(&rows, &a.levels, &a.grid)?;
    with_context(fs::create_dir_all(&a.out_dir), &a.out_dir)?;
    let mut files = Vec::new();
    for c in &curves {
        let p = a.out_dir.join(format!("curve_n{}.csv", c.level));
        let f = with_context(File::create(&p), &p)?;
        write_curve_csv(f, std::slice::from_ref(c))?;
        println!("{}", p.display());
        files.push(p);
    }
    let m = match &a.manifest.manifest {
        Some(_) => None,
        None => Some(a.out_dir.join("expand")),
    };
    run.finish(json!({ "files": files }), &a.manifest, m.as_deref())
}

#[derive(Serialize)]
struct CrossingReport {
    lower: usize,
    upper: usize,
    crossing: Crossing,
}

pub fn scan(a: &ScanArgs, argv: &[String]) -> Result<(), CliError> {
    if a.ri.is_empty() && a.curves.is_empty() {
        return Err(usage("give --ri and/or --curves"));
    }
    let run = Run::start("scan", a, argv, None, 1);
    let mut curves = if a.ri.is_empty() {
        Vec::new()
    } else {
        expand_tables(&load_rows(&a.ri)?, &[], &a.grid)?
    };
    for f in &a.curves {
        let file = with_context(File::open(f), f)?;
        for c in with_context(read_curve_csv(file), f)? {
            match curves
                .iter_mut()
                .find(|x: &&mut FailureCurve| x.level == c.level)
            {
                // Measured points replace the expansion at the same level.
                Some(x) => *x = c,
                None => curves.push(c),
            }
        }
    }
    curves.sort_by_key(|c| c.level);
    let mut reports = Vec::new();
    for pair in curves.windows(2) {
        let crossing = crossing_estimate(&pair[0], &pair[1]);
        match crossing {
            Crossing::At { p, lo, hi } => {
                println!(
                    "levels {}-{}: crossing at p = {p:.4e}, interval [{lo:.4e}, {hi:.4e}]",
                    pair[0].level, pair[1].level
                )
            }
            Crossing::NoCrossing => {
                println!("levels {}-{}: no crossing", pair[0].level, pair[1].level)
            }
            Crossing::NoUniqueCrossing => println!(
                "levels {}-{}: no unique crossing",
                pair[0].level, pair[1].level
            ),
        }
        reports.push(CrossingReport {
            lower: pair[0].level,
            upper: pair[1].level,
            crossing,
        });
    }
    if let Some(out) = &a.out {
        let f = with_context(File::create(out), out)?;
        serde_json::to_writer_pretty(f, &reports)?;
    }
    run.finish(
        json!({ "crossings": reports }),
        &a.manifest,
        a.out.as_deref(),
    )
}
