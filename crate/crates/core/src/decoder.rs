//! Message-passing decoder for one concatenation level.
//!
//! Each block carries, per error type, the weights of the cheapest
//! undetected errors on pair 1, pair 2 and both pairs. At an event the
//! possible causes of the observed parity are sorted into bins by their
//! effect, the decode table picks a correction and the leftover weights
//! are carried to the next event. Weights are fault counts; `INF` means impossible.

use serde::{Deserialize, Serialize};

use crate::builder::{EventKind, Template};
use crate::code::{pair_of, representative, Parity};
use crate::error::DecodeError;
use crate::pauli::{Basis, ErrorFrame, Pauli};

pub type Weight = u16;
pub const INF: Weight = Weight::MAX;

#[inline]
pub fn wadd(a: Weight, b: Weight) -> Weight {
    if a == INF || b == INF {
        INF
    } else {
        a.saturating_add(b).min(INF - 1)
    }
}

#[inline]
pub fn wsub(a: Weight, b: Weight) -> Weight {
    if a == INF {
        INF
    } else {
        a.saturating_sub(b)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecoderMode {
    /// The decode table as written: pending joint errors are folded into both pairs.
    #[default]
    Literal,
    /// Also tracks undetected joint errors, which lowers the even-parity flag.
    Extended,
}

/// Per error type: pending weights on pair 1, pair 2 and both pairs.
pub type Pending = [[Weight; 3]; 2];
pub const CLEAR: Pending = [[INF; 3]; 2];

pub const AG1: usize = 0;
pub const AG2: usize = 1;
pub const A: usize = 2;
pub const G1: usize = 3;
pub const G2: usize = 4;
pub const JOINT: usize = 5;

/// Cheapest weight seen for each effect class at one event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bins(pub [Weight; 6]);

impl Default for Bins {
    fn default() -> Self {
        Bins([INF; 6])
    }
}

impl Bins {
    /// Lowers every bin in `mask` to at most `w`.
    #[inline]
    pub fn raise(&mut self, mask: u8, w: Weight) {
        for i in 0..6 {
            if mask & (1 << i) != 0 && w < self.0[i] {
                self.0[i] = w;
            }
        }
    }

    pub fn merge(&mut self, other: &Bins) {
        for i in 0..6 {
            self.0[i] = self.0[i].min(other.0[i]);
        }
    }
}

/// Effect of one error on an event, from (parity flipped, residual on pair 1,
/// residual on pair 2), as a mask over bins.
pub fn effect_class(flip: bool, r1: bool, r2: bool) -> u8 {
    let bit = |i: usize| 1u8 << i;
    match (flip, r1, r2) {
        (false, false, false) => 0,
        (true, true, false) => bit(AG1),
        (true, false, true) => bit(AG2),
        (true, false, false) => bit(A),
        (false, true, false) => bit(G1),
        (false, false, true) => bit(G2),
        (false, true, true) => bit(JOINT),
        (true, true, true) => bit(AG1) | bit(AG2) | bit(G1) | bit(G2),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchOutcome {
    /// Pair to correct, if any.
    pub correction: Option<usize>,
    /// Weight left on pair 1 and pair 2 after the correction.
    pub c: [Weight; 2],
    /// Flag weight passed to the level above.
    pub ce: Weight,
}

/// The flag-weight decode table.
pub fn match_and_correct(
    parity: Parity,
    b: &Bins,
    mode: DecoderMode,
) -> Result<MatchOutcome, DecodeError> {
    let [ag1, ag2, a, _, _, joint] = b.0;
    if parity.is_odd() {
        let m = ag1.min(ag2).min(a);
        if m == INF {
            return Err(DecodeError::Inconsistent);
        }
        Ok(if ag1 == m {
            MatchOutcome {
                correction: Some(0),
                c: [wsub(a, ag1), wadd(ag2, a)],
                ce: wsub(ag2, ag1),
            }
        } else if ag2 == m {
            MatchOutcome {
                correction: Some(1),
                c: [wadd(ag1, a), wsub(a, ag2)],
                ce: wsub(ag1, ag2),
            }
        } else {
            MatchOutcome {
                correction: None,
                c: [wsub(ag1, a), wsub(ag2, a)],
                ce: wadd(ag1, ag2),
            }
        })
    } else {
        let mut ce = wadd(ag1, ag2);
        if mode == DecoderMode::Extended {
            ce = ce.min(joint);
        }
        Ok(MatchOutcome {
            correction: None,
            c: [wadd(ag1, a), wadd(ag2, a)],
            ce,
        })
    }
}

/// First syndrome of a freshly prepared block in the basis whose gauges are
/// random: odd parity is always fixed on pair 1 and no flag is raised.
pub fn fixup(parity: Parity, b: &Bins) -> MatchOutcome {
    let [ag1, ag2, a, ..] = b.0;
    if parity.is_odd() {
        let m = ag1.min(ag2).min(a);
        MatchOutcome {
            correction: Some(0),
            c: [wsub(a, m), wsub(wadd(wadd(ag1, ag2), a), m)],
            ce: INF,
        }
    } else {
        MatchOutcome {
            correction: None,
            c: [wadd(ag1, a), wadd(ag2, a)],
            ce: INF,
        }
    }
}

/// Pending weights after an event, given the weights of errors that enter
/// after it (`post`).
pub fn carry_over(b: &Bins, m: &MatchOutcome, post: [Weight; 3], mode: DecoderMode) -> [Weight; 3] {
    let j = b.0[JOINT];
    [
        b.0[G1].min(j).min(m.c[0]).min(post[0]).min(post[2]),
        b.0[G2].min(j).min(m.c[1]).min(post[1]).min(post[2]),
        if mode == DecoderMode::Extended {
            post[2]
        } else {
            INF
        },
    ]
}

/// Pending weights of a block with no event in this basis.
pub fn pass_through(post: [Weight; 3], mode: DecoderMode) -> [Weight; 3] {
    [
        post[0].min(post[2]),
        post[1].min(post[2]),
        if mode == DecoderMode::Extended {
            post[2]
        } else {
            INF
        },
    ]
}

/// Lowers pending weights to at most `w`, as for a block exposed to one
/// physical fault.
pub fn raise_flag(p: &mut Pending, w: Weight) {
    for basis in p.iter_mut() {
        basis[0] = basis[0].min(w);
        basis[1] = basis[1].min(w);
    }
}

/// Which part of a location an error source sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Comp {
    /// Left position (the only one for single-qubit locations).
    P,
    Q,
    PQ,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    /// Failure of template location `id` in `basis`.
    Location { id: usize, comp: Comp, basis: Basis },
    /// Pending error on entry: pair 0, 1, or 2 for both.
    Input {
        block: usize,
        basis: Basis,
        which: usize,
    },
}

/// Weight of a two-qubit correlated source.
#[inline]
pub fn raise_correlated_flag(wp: Weight, wq: Weight) -> Weight {
    wp.max(wq)
}

#[derive(Clone, Debug)]
pub struct Source {
    pub origin: Origin,
    /// (event index, bin mask)
    pub hits: Vec<(usize, u8)>,
    /// (block, error type, pair mask: bit 0 pair 1, bit 1 pair 2)
    pub outs: Vec<(usize, Basis, u8)>,
}

/// Where every single-component failure of a template ends up.
#[derive(Clone, Debug)]
pub struct EffectMap {
    pub sources: Vec<Source>,
    /// Per event: (source index, bin mask) for location sources.
    pub loc_hits: Vec<Vec<(usize, u8)>>,
    /// Per event: (input source index, bin mask).
    pub input_hits: Vec<Vec<(usize, u8)>>,
    /// Per (block, basis): (source index, pair mask) for location sources.
    pub loc_outs: Vec<[Vec<(usize, u8)>; 2]>,
    pub input_outs: Vec<[Vec<(usize, u8)>; 2]>,
    /// Bins when every location has weight 1, as at level 1.
    pub unit_bins: Vec<Bins>,
    pub unit_posts: Vec<[[Weight; 3]; 2]>,
    /// Event index per (block, basis), if any.
    pub event_of: Vec<[Option<usize>; 2]>,
}

fn post_slot(mask: u8) -> usize {
    match mask {
        1 => 0,
        2 => 1,
        _ => 2,
    }
}

impl EffectMap {
    pub fn new(t: &Template) -> EffectMap {
        let c = &t.circuit;
        let mut sources = Vec::new();
        for loc in c.locations() {
            for basis in Basis::BOTH {
                let comps: &[Comp] = if loc.kind.is_two_qubit() {
                    &[Comp::P, Comp::Q, Comp::PQ]
                } else {
                    &[Comp::P]
                };
                for &comp in comps {
                    let (lo, hi) = match loc.q {
                        Some(q) => (loc.p.min(q) as usize, loc.p.max(q) as usize),
                        None => (loc.p as usize, loc.p as usize),
                    };
                    let mut f = ErrorFrame::new(c.width);
                    match comp {
                        Comp::P => f.set(lo, basis.pauli()),
                        Comp::Q => f.set(hi, basis.pauli()),
                        Comp::PQ => {
                            f.set(lo, basis.pauli());
                            f.set(hi, basis.pauli());
                        }
                    }
                    // Faults on measurements act before the readout; all
                    // others act after their slice.
                    let (start, skip) = if loc.kind.is_measurement() {
                        (loc.slice, true)
                    } else {
                        (loc.slice + 1, false)
                    };
                    let (hits, outs) = propagate(t, f, start, skip);
                    sources.push(Source {
                        origin: Origin::Location {
                            id: loc.id,
                            comp,
                            basis,
                        },
                        hits,
                        outs,
                    });
                }
            }
        }
        for block in 0..t.blocks() {
            for basis in Basis::BOTH {
                for which in 0..3 {
                    let mut f = ErrorFrame::new(c.width);
                    for pair in 0..2 {
                        if which == pair || which == 2 {
                            f.set(
                                t.data_position(0, block, representative(basis, pair)),
                                basis.pauli(),
                            );
                        }
                    }
                    let (hits, outs) = propagate(t, f, 0, false);
                    sources.push(Source {
                        origin: Origin::Input {
                            block,
                            basis,
                            which,
                        },
                        hits,
                        outs,
                    });
                }
            }
        }

        let n = t.events.len();
        let mut m = EffectMap {
            loc_hits: vec![Vec::new(); n],
            input_hits: vec![Vec::new(); n],
            loc_outs: vec![Default::default(); t.blocks()],
            input_outs: vec![Default::default(); t.blocks()],
            unit_bins: vec![Bins::default(); n],
            unit_posts: vec![[[INF; 3]; 2]; t.blocks()],
            event_of: vec![[None; 2]; t.blocks()],
            sources: Vec::new(),
        };
        for (i, ev) in t.events.iter().enumerate() {
            m.event_of[ev.block][ev.basis.index()] = Some(i);
        }
        for (s, src) in sources.iter().enumerate() {
            let is_loc = matches!(src.origin, Origin::Location { .. });
            for &(ev, mask) in &src.hits {
                if is_loc {
                    m.loc_hits[ev].push((s, mask));
                    m.unit_bins[ev].raise(mask, 1);
                } else {
                    m.input_hits[ev].push((s, mask));
                }
            }
            for &(block, basis, mask) in &src.outs {
                if is_loc {
                    m.loc_outs[block][basis.index()].push((s, mask));
                    let slot = &mut m.unit_posts[block][basis.index()][post_slot(mask)];
                    *slot = (*slot).min(1);
                } else {
                    m.input_outs[block][basis.index()].push((s, mask));
                }
            }
        }
        m.sources = sources;
        m
    }

    pub fn input_weight(&self, s: usize, pending: &[Pending]) -> Weight {
        match self.sources[s].origin {
            Origin::Input {
                block,
                basis,
                which,
            } => pending[block][basis.index()][which],
            Origin::Location { .. } => unreachable!("not an input source"),
        }
    }

    /// Bins at event `ev`. `loc_weight` gives the weight of a location
    /// source; `None` means every location has weight 1.
    pub fn bins(
        &self,
        ev: usize,
        pending: &[Pending],
        loc_weight: Option<&dyn Fn(&Origin) -> Weight>,
    ) -> Bins {
        let mut b = match loc_weight {
            None => self.unit_bins[ev],
            Some(w) => {
                let mut b = Bins::default();
                for &(s, mask) in &self.loc_hits[ev] {
                    b.raise(mask, w(&self.sources[s].origin));
                }
                b
            }
        };
        for &(s, mask) in &self.input_hits[ev] {
            b.raise(mask, self.input_weight(s, pending));
        }
        b
    }

    /// Weights of errors that survive to the end of the rectangle on
    /// (block, basis), as [pair 1, pair 2, both].
    pub fn posts(
        &self,
        block: usize,
        basis: Basis,
        pending: &[Pending],
        loc_weight: Option<&dyn Fn(&Origin) -> Weight>,
    ) -> [Weight; 3] {
        let mut p = match loc_weight {
            None => self.unit_posts[block][basis.index()],
            Some(w) => {
                let mut p = [INF; 3];
                for &(s, mask) in &self.loc_outs[block][basis.index()] {
                    let slot = &mut p[post_slot(mask)];
                    *slot = (*slot).min(w(&self.sources[s].origin));
                }
                p
            }
        };
        for &(s, mask) in &self.input_outs[block][basis.index()] {
            let slot = &mut p[post_slot(mask)];
            *slot = (*slot).min(self.input_weight(s, pending));
        }
        p
    }
}

/// Pair parities of the `basis` part of the frame on `block`'s data at
/// boundary `t`.
fn residual(
    t: &Template,
    f: &ErrorFrame,
    boundary: usize,
    block: usize,
    basis: Basis,
) -> (bool, bool) {
    let mut r = [false; 2];
    for (pos, role) in t.roles[boundary].iter().enumerate() {
        if let Some((b, d)) = *role {
            if b as usize == block && f.get(pos).has(basis) {
                r[pair_of(basis, d as usize)] ^= true;
            }
        }
    }
    (r[0], r[1])
}

fn strip(f: &mut ErrorFrame, pos: usize, basis: Basis) {
    let p = f.get(pos);
    if p.has(basis) {
        f.set(pos, p * basis.pauli());
    }
}

type Hits = Vec<(usize, u8)>;
type Outs = Vec<(usize, Basis, u8)>;

fn propagate(t: &Template, mut f: ErrorFrame, start: usize, skip_first: bool) -> (Hits, Outs) {
    let c = &t.circuit;
    let mut hits = Vec::new();
    for s in start..c.depth() {
        if !(skip_first && s == start) {
            for loc in &c.slices[s] {
                f.apply_gate(loc.kind, loc.p as usize, loc.q.map(|q| q as usize))
                    .expect("templates are nearest-neighbor");
            }
        }
        for (i, ev) in t.events.iter().enumerate().filter(|(_, e)| e.slice == s) {
            let (r1, r2) = residual(t, &f, s + 1, ev.block, ev.basis);
            let flip = match ev.kind {
                EventKind::Readout => r1 ^ r2,
                _ => ev.meas.iter().fold(false, |acc, &id| {
                    let m = c.location(id).unwrap();
                    acc ^ f.flips_measurement(m.p as usize, meas_basis(m.kind))
                }),
            };
            let mask = effect_class(flip, r1, r2);
            if mask != 0 {
                hits.push((i, mask));
            }
            for (pos, role) in t.roles[s + 1].iter().enumerate() {
                if matches!(role, Some((b, _)) if *b as usize == ev.block) {
                    strip(&mut f, pos, ev.basis);
                }
            }
        }
        for loc in &c.slices[s] {
            if loc.kind.is_measurement() {
                f.set(loc.p as usize, Pauli::I);
            }
        }
    }
    let mut outs = Vec::new();
    for block in 0..t.blocks() {
        for basis in Basis::BOTH {
            let (r1, r2) = residual(t, &f, c.depth(), block, basis);
            let mask = r1 as u8 | (r2 as u8) << 1;
            if mask != 0 {
                outs.push((block, basis, mask));
            }
        }
    }
    (hits, outs)
}

/// Readout basis of a measurement location.
pub fn meas_basis(kind: crate::circuit::LocationKind) -> Basis {
    match kind {
        crate::circuit::LocationKind::MeasX => Basis::X,
        _ => Basis::Z,
    }
}

/// Effect maps for every template, indexed by [`crate::builder::RectKind::index`].
pub fn compute_effect_maps(templates: &[Template]) -> Vec<EffectMap> {
    templates.iter().map(EffectMap::new).collect()
}
