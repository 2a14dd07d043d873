//! Trial engine: co-simulates the Pauli frame and the decoders of every
//! level through the CNOT extended rectangle.
//!
//! Rectangles are walked recursively in the same order the builder emits
//! physical locations, so a fault index is a position in that traversal. A
//! rectangle with no faults in its index range and a clear frame on its
//! blocks only updates decoder weights; those updates are memoized.

use std::collections::HashMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builder::{pow6, EventKind, Hierarchy, RectKind, DATA_SLOTS};
use crate::circuit::LocationKind;
use crate::code::{logical_support, pair_of, representative, Parity};
use crate::decoder::{
    carry_over, fixup, match_and_correct, meas_basis, pass_through, raise_correlated_flag,
    raise_flag, Bins, Comp, DecoderMode, EffectMap, MatchOutcome, Origin, Pending, Weight, CLEAR,
    INF,
};
use crate::error::{DecodeError, SimError};
use crate::pauli::{error_count, nth_error, reduce, Basis, ErrorFrame, Pauli};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaultError {
    /// Uniform draw, reduced to one of the location's nontrivial errors.
    Draw(u64),
    Fixed(Pauli, Pauli),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fault {
    pub index: u64,
    pub error: FaultError,
}

impl Fault {
    pub fn fixed(index: u64, a: Pauli, b: Pauli) -> Fault {
        Fault {
            index,
            error: FaultError::Fixed(a, b),
        }
    }

    fn paulis(&self, kind: LocationKind) -> (Pauli, Pauli) {
        match self.error {
            FaultError::Draw(d) => nth_error(kind, reduce(d, error_count(kind))),
            FaultError::Fixed(a, b) => (a, b),
        }
    }
}

/// `i` distinct locations out of `n`, uniformly, each with a random error.
pub fn inject_exact<R: Rng + ?Sized>(n: u64, i: u64, rng: &mut R) -> Result<Vec<Fault>, SimError> {
    if i > n {
        return Err(SimError::TooManyErrors {
            errors: i,
            locations: n,
        });
    }
    let mut idx: Vec<u64> = sample(rng, n as usize, i as usize)
        .into_iter()
        .map(|x| x as u64)
        .collect();
    idx.sort_unstable();
    Ok(idx
        .into_iter()
        .map(|index| Fault {
            index,
            error: FaultError::Draw(rng.random()),
        })
        .collect())
}

/// Every location fails independently with probability `p`.
pub fn inject_iid<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> Result<Vec<Fault>, SimError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(SimError::Probability(p));
    }
    let mut out = Vec::new();
    if p == 0.0 {
        return Ok(out);
    }
    let gap = Geometric::new(p).map_err(|_| SimError::Probability(p))?;
    let mut at = 0u64;
    loop {
        at = match at.checked_add(gap.sample(rng)) {
            Some(x) if x < n => x,
            _ => break,
        };
        out.push(Fault {
            index: at,
            error: FaultError::Draw(rng.random()),
        });
        at += 1;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Injection {
    Exact(u64),
    Iid(f64),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RectOut {
    /// Flag weights per (block, error type) for the level above.
    pub ce: [[Weight; 2]; 2],
    /// Decoded readout flip of a measurement rectangle.
    pub flip: bool,
}

const PHYSICAL: RectOut = RectOut {
    ce: [[1; 2]; 2],
    flip: false,
};
const SILENT: RectOut = RectOut {
    ce: [[INF; 2]; 2],
    flip: false,
};

/// One decoding decision, recorded when a match dump is requested.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub level: usize,
    pub rect: RectKind,
    pub base: u64,
    pub block: usize,
    pub basis: Basis,
    pub odd: bool,
    pub bins: [Weight; 6],
    pub correction: Option<usize>,
    pub c1: Weight,
    pub c2: Weight,
    pub ce: Weight,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    /// Logical error per (block, error type) after the ideal decode.
    pub logical: [[bool; 2]; 2],
    /// The decoder hit an odd parity with no explanation.
    pub aborted: bool,
    /// Odd parities seen, per level (index 0 unused).
    pub odd: Vec<u32>,
}

impl TrialOutcome {
    /// Correct X-basis result: no Z-type logical error on either block.
    pub fn success_x(&self) -> bool {
        !self.aborted && !self.logical[0][Basis::Z.index()] && !self.logical[1][Basis::Z.index()]
    }

    pub fn success_z(&self) -> bool {
        !self.aborted && !self.logical[0][Basis::X.index()] && !self.logical[1][Basis::X.index()]
    }

    pub fn success(&self) -> bool {
        self.success_x() && self.success_z()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub trials: u64,
    pub failures: u64,
    /// Trials stopped by a decoder inconsistency; also counted as failures.
    pub aborted: u64,
    pub odd: Vec<u64>,
}

impl RunSummary {
    pub fn add(&mut self, t: &TrialOutcome) {
        self.trials += 1;
        self.failures += !t.success() as u64;
        self.aborted += t.aborted as u64;
        if self.odd.len() < t.odd.len() {
            self.odd.resize(t.odd.len(), 0);
        }
        for (a, b) in self.odd.iter_mut().zip(&t.odd) {
            *a += *b as u64;
        }
    }

    pub fn merge(mut self, other: RunSummary) -> RunSummary {
        self.trials += other.trials;
        self.failures += other.failures;
        self.aborted += other.aborted;
        if self.odd.len() < other.odd.len() {
            self.odd.resize(other.odd.len(), 0);
        }
        for (a, b) in self.odd.iter_mut().zip(&other.odd) {
            *a += b;
        }
        self
    }

    pub fn estimate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.failures as f64 / self.trials as f64
        }
    }

    pub fn std_err(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let r = self.estimate();
        (r * (1.0 - r) / self.trials as f64).sqrt()
    }
}

/// Result of trying every single error at every location.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Census {
    pub locations: u64,
    pub trials: u64,
    /// Mean over locations of the fraction of that location's errors that fail.
    pub r1: f64,
    /// (fault index, error number) of every failing single error.
    pub failing: Vec<(u64, usize)>,
}

/// Shared, immutable description of the level-n experiment.
pub struct Simulator {
    pub level: usize,
    pub mode: DecoderMode,
    pub h: Hierarchy,
    pub maps: Vec<EffectMap>,
    pub locations: u64,
}

/// Trials are grouped into fixed chunks so results never depend on how
/// many workers run them.
const CHUNK: u64 = 256;
const MEMO_CAP: usize = 1 << 16;

/// Per-chunk census: summed failing fraction, runs, failing (index, error).
type CensusPart = (f64, u64, Vec<(u64, usize)>);

type MemoKey = (u8, u8, Vec<Pending>);

#[derive(Clone)]
struct MemoEntry {
    pending: Vec<Pending>,
    ce: [[Weight; 2]; 2],
}

/// Mutable per-worker state.
pub struct Workspace {
    frame: ErrorFrame,
    /// `pending[j][b]`: weights of the level-j block starting at `b * 6^j`.
    pending: Vec<Vec<Pending>>,
    faults: Vec<Fault>,
    cursor: usize,
    idx: u64,
    odd: Vec<u32>,
    memo: HashMap<MemoKey, MemoEntry>,
    pub dump: Option<Vec<MatchRecord>>,
    pub use_memo: bool,
    /// Skip corrections and block clearing, leaving the bare propagated frame.
    passive: bool,
}

impl Simulator {
    pub fn new(level: usize, mode: DecoderMode) -> Result<Simulator, SimError> {
        if level == 0 {
            return Err(SimError::Level(level));
        }
        let h = Hierarchy::new(level);
        let maps = h.templates.iter().map(EffectMap::new).collect();
        let locations = h.exrec_count(level);
        Ok(Simulator {
            level,
            mode,
            h,
            maps,
            locations,
        })
    }

    pub fn width(&self) -> usize {
        2 * pow6(self.level) as usize
    }

    pub fn workspace(&self) -> Workspace {
        let w = self.width();
        Workspace {
            frame: ErrorFrame::new(w),
            pending: (0..=self.level)
                .map(|j| vec![CLEAR; w / pow6(j) as usize])
                .collect(),
            faults: Vec::new(),
            cursor: 0,
            idx: 0,
            odd: vec![0; self.level + 1],
            memo: HashMap::new(),
            dump: None,
            use_memo: true,
            passive: false,
        }
    }

    /// Runs the exRec with the given faults (sorted by index), then an
    /// errorless EC on both blocks, then the ideal decode.
    pub fn run_faults(
        &self,
        ws: &mut Workspace,
        faults: &[Fault],
    ) -> Result<TrialOutcome, SimError> {
        self.run_faults_with_passes(ws, faults, 1)
    }

    pub fn run_faults_with_passes(
        &self,
        ws: &mut Workspace,
        faults: &[Fault],
        passes: usize,
    ) -> Result<TrialOutcome, SimError> {
        if let Some(f) = faults.iter().find(|f| f.index >= self.locations) {
            return Err(SimError::FaultIndex {
                index: f.index,
                locations: self.locations,
            });
        }
        ws.reset(faults);
        let n = self.level;
        let span = pow6(n);
        let aborted = (|| -> Result<(), DecodeError> {
            ws.rect(self, n, RectKind::Ec, [0, 0])?;
            ws.rect(self, n, RectKind::Ec, [span, 0])?;
            ws.rect(self, n, RectKind::Cnot, [0, span])?;
            for _ in 0..passes {
                ws.rect(self, n, RectKind::Ec, [0, 0])?;
                ws.rect(self, n, RectKind::Ec, [span, 0])?;
            }
            Ok(())
        })()
        .is_err();
        let mut logical = [[false; 2]; 2];
        if !aborted {
            for (b, row) in logical.iter_mut().enumerate() {
                for basis in Basis::BOTH {
                    row[basis.index()] = ws.ideal_logical(n, b as u64 * span, basis);
                }
            }
        }
        Ok(TrialOutcome {
            logical,
            aborted,
            odd: ws.odd.clone(),
        })
    }

    /// Trial `index` of a run seeded with `seed`.
    pub fn trial(
        &self,
        ws: &mut Workspace,
        injection: Injection,
        seed: u64,
        index: u64,
    ) -> Result<TrialOutcome, SimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let faults = match injection {
            Injection::Exact(i) => inject_exact(self.locations, i, &mut rng)?,
            Injection::Iid(p) => inject_iid(self.locations, p, &mut rng)?,
        };
        self.run_faults(ws, &faults)
    }

    /// Trials `start..start + count` on `workers` threads.
    pub fn estimate_range(
        &self,
        injection: Injection,
        seed: u64,
        start: u64,
        count: u64,
        workers: usize,
    ) -> Result<RunSummary, SimError> {
        match injection {
            Injection::Exact(i) if i > self.locations => {
                return Err(SimError::TooManyErrors {
                    errors: i,
                    locations: self.locations,
                })
            }
            Injection::Iid(p) if !(0.0..=1.0).contains(&p) => return Err(SimError::Probability(p)),
            _ => {}
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()?;
        let chunks = count.div_ceil(CHUNK);
        pool.install(|| {
            (0..chunks)
                .into_par_iter()
                .map_init(
                    || self.workspace(),
                    |ws, c| {
                        let lo = start + c * CHUNK;
                        let hi = (lo + CHUNK).min(start + count);
                        let mut s = RunSummary::default();
                        for t in lo..hi {
                            s.add(&self.trial(ws, injection, seed, t)?);
                        }
                        Ok(s)
                    },
                )
                .try_reduce(RunSummary::default, |a, b| Ok(a.merge(b)))
        })
    }

    /// Conditional failure rate with exactly `i` errors.
    pub fn estimate_ri(
        &self,
        i: u64,
        trials: u64,
        seed: u64,
        workers: usize,
    ) -> Result<RunSummary, SimError> {
        if trials == 0 {
            return Err(SimError::NoTrials);
        }
        self.estimate_range(Injection::Exact(i), seed, 0, trials, workers)
    }

    /// Failure rate with independent errors of probability `p`.
    pub fn monte_carlo(
        &self,
        p: f64,
        trials: u64,
        seed: u64,
        workers: usize,
    ) -> Result<RunSummary, SimError> {
        if trials == 0 {
            return Err(SimError::NoTrials);
        }
        self.estimate_range(Injection::Iid(p), seed, 0, trials, workers)
    }

    /// Every location with every one of its nontrivial errors.
    pub fn enumerate_single_errors(&self, workers: usize) -> Result<Census, SimError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()?;
        let n = self.locations;
        let chunks = n.div_ceil(CHUNK);
        let parts: Result<Vec<CensusPart>, SimError> = pool.install(|| {
            (0..chunks)
                .into_par_iter()
                .map_init(
                    || self.workspace(),
                    |ws, c| {
                        let mut frac = 0.0;
                        let mut trials = 0;
                        let mut failing = Vec::new();
                        for index in c * CHUNK..((c + 1) * CHUNK).min(n) {
                            let kind = self.locate(index).expect("index in range");
                            let m = error_count(kind);
                            let mut bad = 0;
                            for k in 0..m {
                                let (a, b) = nth_error(kind, k);
                                let out = self.run_faults(ws, &[Fault::fixed(index, a, b)])?;
                                trials += 1;
                                if !out.success() {
                                    bad += 1;
                                    failing.push((index, k));
                                }
                            }
                            frac += bad as f64 / m as f64;
                        }
                        Ok((frac, trials, failing))
                    },
                )
                .collect()
        });
        let mut census = Census {
            locations: n,
            ..Default::default()
        };
        let mut sum = 0.0;
        for (f, t, fail) in parts? {
            sum += f;
            census.trials += t;
            census.failing.extend(fail);
        }
        census.r1 = sum / n as f64;
        Ok(census)
    }

    /// Kind of the physical location at a traversal index.
    pub fn locate(&self, mut idx: u64) -> Option<LocationKind> {
        let n = self.level;
        for kind in [RectKind::Ec, RectKind::Ec, RectKind::Cnot] {
            let c = self.h.count(n, kind);
            if idx < c {
                return Some(self.locate_in(n, kind, idx));
            }
            idx -= c;
        }
        None
    }

    fn locate_in(&self, k: usize, kind: RectKind, mut idx: u64) -> LocationKind {
        if k == 0 {
            return kind.location().expect("physical location");
        }
        if kind == RectKind::Memory {
            return LocationKind::Memory;
        }
        let t = self.h.template(kind);
        for (s, slice) in t.circuit.slices.iter().enumerate() {
            let d = self.h.slice_duration(k, kind, s);
            for l in slice {
                let sub = RectKind::of(l);
                let c = self.h.count(k - 1, sub);
                if idx < c {
                    return self.locate_in(k - 1, sub, idx);
                }
                idx -= c;
                let pad = (d - self.h.duration(k - 1, sub)) * pow6(k - 1) * sub.blocks() as u64;
                if idx < pad {
                    return LocationKind::Memory;
                }
                idx -= pad;
            }
        }
        unreachable!("index beyond rectangle")
    }
}

fn logical_slots(basis: Basis) -> [u64; 2] {
    logical_support(basis).map(|d| DATA_SLOTS[d] as u64)
}

impl Workspace {
    fn reset(&mut self, faults: &[Fault]) {
        self.frame.clear();
        for level in &mut self.pending {
            level.iter_mut().for_each(|p| *p = CLEAR);
        }
        self.faults.clear();
        self.faults.extend_from_slice(faults);
        self.faults.sort_by_key(|f| f.index);
        self.cursor = 0;
        self.idx = 0;
        self.odd.iter_mut().for_each(|o| *o = 0);
        if self.memo.len() > MEMO_CAP {
            self.memo.clear();
        }
    }

    #[inline]
    fn next_fault(&self) -> u64 {
        self.faults.get(self.cursor).map_or(u64::MAX, |f| f.index)
    }

    fn physical(&mut self, kind: RectKind, bases: [u64; 2]) -> RectOut {
        let loc = kind.location().expect("physical location");
        let (p, q) = match kind {
            RectKind::CnotRev => (bases[1] as usize, Some(bases[0] as usize)),
            _ => (
                bases[0] as usize,
                loc.is_two_qubit().then_some(bases[1] as usize),
            ),
        };
        if !loc.is_measurement() {
            self.frame
                .apply_gate(loc, p, q)
                .expect("nearest-neighbor gate");
        }
        while self.next_fault() == self.idx {
            let (a, b) = self.faults[self.cursor].paulis(loc);
            self.frame.apply(p, a);
            if let Some(q) = q {
                self.frame.apply(q, b);
            }
            self.cursor += 1;
        }
        self.idx += 1;
        if loc.is_measurement() {
            let flip = self.frame.flips_measurement(p, meas_basis(loc));
            self.frame.set(p, Pauli::I);
            return RectOut { flip, ..PHYSICAL };
        }
        PHYSICAL
    }

    /// Physical idles on `len` positions from `base` for `slices` steps.
    fn idle(&mut self, base: u64, len: u64, slices: u64) {
        let total = len * slices;
        while self.next_fault() < self.idx + total {
            let f = self.faults[self.cursor];
            let (a, _) = f.paulis(LocationKind::Memory);
            self.frame
                .apply((base + (f.index - self.idx) % len) as usize, a);
            self.cursor += 1;
        }
        self.idx += total;
        if len >= 6 {
            for b in base / 6..(base + len) / 6 {
                raise_flag(&mut self.pending[1][b as usize], 1);
            }
        }
    }

    fn nested(&self, k: usize, kind: RectKind, bases: [u64; 2]) -> Vec<Pending> {
        let mut v = Vec::new();
        for &base in &bases[..kind.blocks()] {
            for j in 1..=k {
                let s = (base / pow6(j)) as usize;
                v.extend_from_slice(&self.pending[j][s..s + pow6(k - j) as usize]);
            }
        }
        v
    }

    fn restore(&mut self, k: usize, kind: RectKind, bases: [u64; 2], v: &[Pending]) {
        let mut at = 0;
        for &base in &bases[..kind.blocks()] {
            for j in 1..=k {
                let s = (base / pow6(j)) as usize;
                let n = pow6(k - j) as usize;
                self.pending[j][s..s + n].copy_from_slice(&v[at..at + n]);
                at += n;
            }
        }
    }

    fn rect(
        &mut self,
        sim: &Simulator,
        k: usize,
        kind: RectKind,
        bases: [u64; 2],
    ) -> Result<RectOut, DecodeError> {
        if k == 0 {
            return Ok(self.physical(kind, bases));
        }
        if kind == RectKind::Memory {
            self.idle(bases[0], pow6(k), 1);
            return Ok(SILENT);
        }
        let count = sim.h.count(k, kind);
        let span = pow6(k) as usize;
        let clean = self.use_memo
            && self.dump.is_none()
            && self.next_fault() >= self.idx + count
            && bases[..kind.blocks()]
                .iter()
                .all(|&b| self.frame.is_clear(b as usize, span));
        if !clean {
            return self.run_template(sim, k, kind, bases);
        }
        let key = (k as u8, kind.index() as u8, self.nested(k, kind, bases));
        if let Some(e) = self.memo.get(&key).cloned() {
            self.restore(k, kind, bases, &e.pending);
            self.idx += count;
            return Ok(RectOut {
                ce: e.ce,
                flip: false,
            });
        }
        let out = self.run_template(sim, k, kind, bases)?;
        let pending = self.nested(k, kind, bases);
        self.memo.insert(
            key,
            MemoEntry {
                pending,
                ce: out.ce,
            },
        );
        Ok(out)
    }

    fn run_template(
        &mut self,
        sim: &Simulator,
        k: usize,
        kind: RectKind,
        bases: [u64; 2],
    ) -> Result<RectOut, DecodeError> {
        let t = sim.h.template(kind);
        let em = &sim.maps[kind.index()];
        let pitch = pow6(k - 1);
        let span = pow6(k);
        let at = |p: u32| bases[(p / 6) as usize] + (p % 6) as u64 * pitch;
        let nb = kind.blocks();
        let inp: Vec<Pending> = match kind {
            // Preparation discards whatever the block held.
            RectKind::PrepZ | RectKind::PrepX => vec![CLEAR; nb],
            _ => (0..nb)
                .map(|b| self.pending[k][(bases[b] / span) as usize])
                .collect(),
        };
        let mut outs = vec![SILENT; t.circuit.locations().count()];
        let mut decided: Vec<Option<(Bins, MatchOutcome)>> = vec![None; t.events.len()];
        let mut out = SILENT;

        for (s, slice) in t.circuit.slices.iter().enumerate() {
            let d = sim.h.slice_duration(k, kind, s);
            for l in slice {
                let sub = RectKind::of(l);
                let sb = match l.q {
                    Some(q) => [at(l.p.min(q)), at(l.p.max(q))],
                    None => [at(l.p), 0],
                };
                outs[l.id] = self.rect(sim, k - 1, sub, sb)?;
                let extra = d - sim.h.duration(k - 1, sub);
                if extra > 0 {
                    for &b in &sb[..sub.blocks()] {
                        self.idle(b, pitch, extra);
                    }
                }
            }
            for (i, ev) in t.events.iter().enumerate() {
                if ev.slice != s {
                    continue;
                }
                let weight = |o: &Origin| location_weight(&outs, o);
                let lw: Option<&dyn Fn(&Origin) -> Weight> =
                    if k == 1 { None } else { Some(&weight) };
                let bins = em.bins(i, &inp, lw);
                let (odd, r1) = match ev.kind {
                    EventKind::Readout => {
                        let mut r = [false; 2];
                        for &id in &ev.meas {
                            let p = t.circuit.location(id).unwrap().p as usize;
                            let (_, dd) = t.roles[s][p].expect("data readout");
                            r[pair_of(ev.basis, dd as usize)] ^= outs[id].flip;
                        }
                        (r[0] ^ r[1], r[0])
                    }
                    _ => (
                        ev.meas.iter().fold(false, |a, &id| a ^ outs[id].flip),
                        false,
                    ),
                };
                let parity = Parity::from_bool(odd);
                let m = match ev.kind {
                    EventKind::FixUp => fixup(parity, &bins),
                    _ => match_and_correct(parity, &bins, sim.mode)?,
                };
                if odd {
                    self.odd[k] += 1;
                }
                if let Some(dump) = &mut self.dump {
                    dump.push(MatchRecord {
                        level: k,
                        rect: kind,
                        base: bases[ev.block],
                        block: ev.block,
                        basis: ev.basis,
                        odd,
                        bins: bins.0,
                        correction: m.correction,
                        c1: m.c[0],
                        c2: m.c[1],
                        ce: m.ce,
                    });
                }
                match ev.kind {
                    EventKind::Readout => out.flip = r1 ^ (m.correction == Some(0)),
                    _ if self.passive => {}
                    _ => {
                        if let Some(pair) = m.correction {
                            let pos =
                                t.data_position(s + 1, ev.block, representative(ev.basis, pair));
                            self.apply_logical(k - 1, at(pos as u32), ev.basis);
                        }
                    }
                }
                out.ce[ev.block][ev.basis.index()] = m.ce;
                decided[i] = Some((bins, m));
            }
        }

        if matches!(kind, RectKind::MeasZ | RectKind::MeasX) && !self.passive {
            // Measured blocks are re-prepared before reuse.
            self.frame.clear_range(bases[0] as usize, span as usize);
            for j in 1..=k {
                let s = (bases[0] / pow6(j)) as usize;
                self.pending[j][s..s + pow6(k - j) as usize].fill(CLEAR);
            }
            return Ok(out);
        }
        let weight = |o: &Origin| location_weight(&outs, o);
        let lw: Option<&dyn Fn(&Origin) -> Weight> = if k == 1 { None } else { Some(&weight) };
        for b in 0..nb {
            let slot = (bases[b] / span) as usize;
            for basis in Basis::BOTH {
                let post = em.posts(b, basis, &inp, lw);
                self.pending[k][slot][basis.index()] = match em.event_of[b][basis.index()] {
                    Some(i) => {
                        let (bins, m) = decided[i].expect("event decided");
                        carry_over(&bins, &m, post, sim.mode)
                    }
                    None => pass_through(post, sim.mode),
                };
            }
        }
        Ok(out)
    }

    /// Applies the level-`j` logical operator of type `basis` to the block at
    /// `base`.
    fn apply_logical(&mut self, j: usize, base: u64, basis: Basis) {
        if j == 0 {
            self.frame.apply(base as usize, basis.pauli());
            return;
        }
        let pitch = pow6(j - 1);
        for s in logical_slots(basis) {
            self.apply_logical(j - 1, base + s * pitch, basis);
        }
    }

    /// Ideal bottom-up decode: whether the level-`j` block at `base` carries
    /// a logical error of type `basis`. An odd pair parity left at some level
    /// is resolved toward the pair the decoder considers more likely.
    pub fn ideal_logical(&self, j: usize, base: u64, basis: Basis) -> bool {
        if j == 0 {
            return self.frame.get(base as usize).has(basis);
        }
        let pitch = pow6(j - 1);
        let mut r = [false; 2];
        for (d, &slot) in DATA_SLOTS.iter().enumerate() {
            if self.ideal_logical(j - 1, base + slot as u64 * pitch, basis) {
                r[pair_of(basis, d)] ^= true;
            }
        }
        if r[0] != r[1] {
            let p = self.pending[j][(base / pow6(j)) as usize][basis.index()];
            if p[1] < p[0] {
                r[1] ^= true;
            } else {
                r[0] ^= true;
            }
        }
        r[0]
    }

    pub fn frame(&self) -> &ErrorFrame {
        &self.frame
    }

    pub fn pending(&self, level: usize, block: usize) -> Pending {
        self.pending[level][block]
    }
}

fn location_weight(outs: &[RectOut], o: &Origin) -> Weight {
    match *o {
        Origin::Location { id, comp, basis } => {
            let ce = &outs[id].ce;
            let b = basis.index();
            match comp {
                Comp::P => ce[0][b],
                Comp::Q => ce[1][b],
                Comp::PQ => raise_correlated_flag(ce[0][b], ce[1][b]),
            }
        }
        Origin::Input { .. } => unreachable!("inputs are weighted by pending state"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_cnot_exrec, Flattener};

    #[test]
    fn no_faults_succeeds() {
        for level in 1..=2 {
            let sim = Simulator::new(level, DecoderMode::Literal).unwrap();
            let mut ws = sim.workspace();
            let out = sim.run_faults(&mut ws, &[]).unwrap();
            assert!(out.success());
            assert!(out.odd.iter().all(|&o| o == 0));
        }
    }

    #[test]
    fn level_zero_is_rejected() {
        assert!(matches!(
            Simulator::new(0, DecoderMode::Literal),
            Err(SimError::Level(0))
        ));
    }

    #[test]
    fn locate_matches_flattened_order() {
        for level in 1..=2 {
            let sim = Simulator::new(level, DecoderMode::Literal).unwrap();
            let mut f = Flattener::new(&sim.h);
            f.exrec(level);
            assert_eq!(f.out.len() as u64, sim.locations);
            for (i, l) in f.out.iter().enumerate() {
                assert_eq!(sim.locate(i as u64), Some(l.kind), "index {i}");
            }
            assert_eq!(sim.locate(sim.locations), None);
        }
    }

    // With decoding switched off, the recursive walk must leave the same
    // frame as a plain time-ordered replay of the flattened circuit.
    #[test]
    fn recursive_walk_matches_flattened_replay() {
        for level in 1..=2 {
            let sim = Simulator::new(level, DecoderMode::Literal).unwrap();
            let c = build_cnot_exrec(level);
            let mut rng = ChaCha8Rng::seed_from_u64(level as u64);
            let mut f = Flattener::new(&sim.h);
            f.exrec(level);
            let mut by_time: Vec<usize> = (0..f.out.len()).collect();
            by_time.sort_by_key(|&i| (f.out[i].time, f.out[i].p));
            for _ in 0..20 {
                let faults = inject_exact(sim.locations, 6, &mut rng).unwrap();
                let mut ws = sim.workspace();
                ws.passive = true;
                ws.reset(&faults);
                let span = pow6(level);
                ws.rect(&sim, level, RectKind::Ec, [0, 0]).unwrap();
                ws.rect(&sim, level, RectKind::Ec, [span, 0]).unwrap();
                ws.rect(&sim, level, RectKind::Cnot, [0, span]).unwrap();

                let mut direct = ErrorFrame::new(sim.width());
                for &i in &by_time {
                    let l = f.out[i];
                    let (p, q) = (l.p as usize, l.q.map(|q| q as usize));
                    if !l.kind.is_measurement() {
                        direct.apply_gate(l.kind, p, q).unwrap();
                    }
                    for fault in faults.iter().filter(|x| x.index == i as u64) {
                        let (a, b) = fault.paulis(l.kind);
                        direct.apply(p, a);
                        if let Some(q) = q {
                            direct.apply(q, b);
                        }
                    }
                    if l.kind.is_measurement() {
                        direct.set(p, Pauli::I);
                    }
                }
                assert_eq!(ws.frame.support(), direct.support());
                assert_eq!(c.count_locations().total, sim.locations);
            }
        }
    }

    #[test]
    fn exact_injection_places_distinct_sorted_faults() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = inject_exact(204, 10, &mut rng).unwrap();
        assert_eq!(f.len(), 10);
        assert!(f.windows(2).all(|w| w[0].index < w[1].index));
        assert!(inject_exact(204, 205, &mut rng).is_err());
        assert_eq!(inject_exact(5, 5, &mut rng).unwrap().len(), 5);
        assert!(inject_exact(5, 0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn iid_injection_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(inject_iid(100, 0.0, &mut rng).unwrap().is_empty());
        assert_eq!(inject_iid(100, 1.0, &mut rng).unwrap().len(), 100);
        assert!(inject_iid(100, 1.5, &mut rng).is_err());
        let total: usize = (0..2000)
            .map(|_| inject_iid(172, 1e-2, &mut rng).unwrap().len())
            .sum();
        let mean = total as f64 / 2000.0;
        assert!((mean - 1.72).abs() < 0.15, "{mean}");
    }

    #[test]
    fn results_do_not_depend_on_workers() {
        let sim = Simulator::new(1, DecoderMode::Literal).unwrap();
        let a = sim.estimate_ri(2, 3000, 7, 1).unwrap();
        let b = sim.estimate_ri(2, 3000, 7, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.failures > 0);
    }

    #[test]
    fn ranges_merge_to_the_full_run() {
        let sim = Simulator::new(1, DecoderMode::Literal).unwrap();
        let full = sim
            .estimate_range(Injection::Iid(0.01), 3, 0, 1000, 2)
            .unwrap();
        let a = sim
            .estimate_range(Injection::Iid(0.01), 3, 0, 512, 2)
            .unwrap();
        let b = sim
            .estimate_range(Injection::Iid(0.01), 3, 512, 488, 3)
            .unwrap();
        assert_eq!(full, a.merge(b));
    }

    #[test]
    fn memo_does_not_change_outcomes() {
        let sim = Simulator::new(2, DecoderMode::Literal).unwrap();
        let mut with = sim.workspace();
        let mut without = sim.workspace();
        without.use_memo = false;
        for t in 0..40 {
            let a = sim.trial(&mut with, Injection::Exact(3), 11, t).unwrap();
            let b = sim.trial(&mut without, Injection::Exact(3), 11, t).unwrap();
            assert_eq!(a, b, "trial {t}");
        }
    }

    #[test]
    fn zero_errors_never_fail() {
        let sim = Simulator::new(1, DecoderMode::Literal).unwrap();
        let s = sim.estimate_ri(0, 500, 1, 2).unwrap();
        assert_eq!(s.failures, 0);
    }

    #[test]
    fn second_errorless_pass_keeps_the_verdict() {
        let sim = Simulator::new(1, DecoderMode::Literal).unwrap();
        let mut ws = sim.workspace();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let f = inject_exact(sim.locations, 2, &mut rng).unwrap();
            let a = sim.run_faults_with_passes(&mut ws, &f, 1).unwrap();
            let b = sim.run_faults_with_passes(&mut ws, &f, 2).unwrap();
            assert_eq!(a.success(), b.success());
        }
    }

    #[test]
    fn fault_index_out_of_range_is_rejected() {
        let sim = Simulator::new(1, DecoderMode::Literal).unwrap();
        let mut ws = sim.workspace();
        let bad = Fault::fixed(sim.locations, Pauli::X, Pauli::I);
        assert!(sim.run_faults(&mut ws, &[bad]).is_err());
    }
}
