//! Gadget templates on one or two level-1 blocks and their recursive
//! expansion into level-n circuits.
//!
//! Every template is written at level 1, on positions `0..6` (one block) or
//! `0..12` (two blocks). At level k the same template acts on level-(k-1)
//! blocks: template position `p` becomes the sub-block whose first qubit is
//! `base[p / 6] + (p % 6) * 6^(k-1)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{BlockLayout, Circuit, Counts, LocationKind, Op};
use crate::pauli::Basis;

use LocationKind::*;

/// Slots of a block in layout order.
pub const D1: u32 = 0;
pub const A1: u32 = 1;
pub const D2: u32 = 2;
pub const D3: u32 = 3;
pub const A2: u32 = 4;
pub const D4: u32 = 5;

/// Layout slot of each data index d1..d4.
pub const DATA_SLOTS: [u32; 4] = [D1, D2, D3, D4];
pub const ANCILLA_SLOTS: [u32; 2] = [A1, A2];

/// Rectangle kinds: an encoded location followed by its error correction,
/// plus bare error correction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RectKind {
    Ec,
    Cnot,
    /// Encoded CNOT whose control block is the right-hand one.
    CnotRev,
    Swap,
    H,
    PrepZ,
    PrepX,
    MeasZ,
    MeasX,
    Memory,
}

impl RectKind {
    pub const ALL: [RectKind; 10] = [
        RectKind::Ec,
        RectKind::Cnot,
        RectKind::CnotRev,
        RectKind::Swap,
        RectKind::H,
        RectKind::PrepZ,
        RectKind::PrepX,
        RectKind::MeasZ,
        RectKind::MeasX,
        RectKind::Memory,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Rectangle kind of a template location. Two-block rectangles are always
    /// addressed left block first, so a CNOT pointing left becomes
    /// [`RectKind::CnotRev`].
    pub fn of(loc: &crate::circuit::Location) -> RectKind {
        match (loc.kind, loc.q) {
            (Cnot, Some(q)) if q < loc.p => RectKind::CnotRev,
            (k, _) => RectKind::from_location(k),
        }
    }

    pub fn from_location(kind: LocationKind) -> RectKind {
        match kind {
            PrepZ => RectKind::PrepZ,
            PrepX => RectKind::PrepX,
            MeasZ => RectKind::MeasZ,
            MeasX => RectKind::MeasX,
            Memory => RectKind::Memory,
            Cnot => RectKind::Cnot,
            Swap => RectKind::Swap,
            H => RectKind::H,
        }
    }

    pub fn blocks(self) -> usize {
        match self {
            RectKind::Cnot | RectKind::CnotRev | RectKind::Swap => 2,
            _ => 1,
        }
    }

    /// Physical location kind this rectangle encodes.
    pub fn location(self) -> Option<LocationKind> {
        Some(match self {
            RectKind::Ec => return None,
            RectKind::Cnot | RectKind::CnotRev => Cnot,
            RectKind::Swap => Swap,
            RectKind::H => H,
            RectKind::PrepZ => PrepZ,
            RectKind::PrepX => PrepX,
            RectKind::MeasZ => MeasZ,
            RectKind::MeasX => MeasX,
            RectKind::Memory => Memory,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            RectKind::Ec => "ec",
            RectKind::Cnot => "cnot",
            RectKind::CnotRev => "cnot-rev",
            RectKind::Swap => "swap",
            RectKind::H => "h",
            RectKind::PrepZ => "prep-z",
            RectKind::PrepX => "prep-x",
            RectKind::MeasZ => "meas-z",
            RectKind::MeasX => "meas-x",
            RectKind::Memory => "memory",
        }
    }
}

impl fmt::Display for RectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RectKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        RectKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown gadget `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// Gauge measurements whose parity is decoded with the flag-weight table.
    Syndrome,
    /// First syndrome of a freshly prepared block in the basis whose gauge
    /// values are random; odd parity is fixed up instead of corrected.
    FixUp,
    /// Transversal readout of the block's data.
    Readout,
}

/// A point where the decoder of one block acts on one error type.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    /// The event happens at the end of this slice.
    pub slice: usize,
    pub block: usize,
    /// Error type the measurements expose.
    pub basis: Basis,
    pub kind: EventKind,
    /// Template location ids of the measurements read at this event.
    pub meas: Vec<usize>,
}

/// Data role held by a position: (block, data index 0..4).
pub type Role = Option<(u8, u8)>;

/// A level-1 rectangle template with the metadata the decoder needs.
#[derive(Clone, Debug)]
pub struct Template {
    pub kind: RectKind,
    pub circuit: Circuit,
    pub events: Vec<Event>,
    /// `roles[t][pos]`: data role at `pos` on the boundary before slice `t`;
    /// `roles[depth]` is the output boundary.
    pub roles: Vec<Vec<Role>>,
}

impl Template {
    pub fn blocks(&self) -> usize {
        self.kind.blocks()
    }

    pub fn width(&self) -> usize {
        self.circuit.width
    }

    pub fn depth(&self) -> usize {
        self.circuit.depth()
    }

    /// Position of data index `d` of `block` at boundary `t`.
    pub fn data_position(&self, t: usize, block: usize, d: usize) -> usize {
        self.roles[t]
            .iter()
            .position(|r| *r == Some((block as u8, d as u8)))
            .expect("every data role is placed")
    }
}

fn ec_slices(base: u32) -> Vec<Vec<Op>> {
    let b = |s: u32| base + s;
    vec![
        vec![Op::one(PrepX, b(A1)), Op::one(PrepX, b(A2))],
        vec![Op::two(Cnot, b(A1), b(D1)), Op::two(Cnot, b(A2), b(D4))],
        vec![Op::two(Cnot, b(A1), b(D2)), Op::two(Cnot, b(A2), b(D3))],
        vec![
            Op::one(MeasX, b(A1)),
            Op::one(MeasX, b(A2)),
            Op::two(Swap, b(D2), b(D3)),
        ],
        vec![Op::one(PrepZ, b(A1)), Op::one(PrepZ, b(A2))],
        vec![Op::two(Cnot, b(D1), b(A1)), Op::two(Cnot, b(D4), b(A2))],
        // d3 now sits next to a1 and d2 next to a2.
        vec![Op::two(Cnot, b(D2), b(A1)), Op::two(Cnot, b(D3), b(A2))],
        vec![
            Op::one(MeasZ, b(A1)),
            Op::one(MeasZ, b(A2)),
            Op::two(Swap, b(D2), b(D3)),
        ],
    ]
}

/// Level-1 syndrome extraction on `[d1, a1, d2, d3, a2, d4]`. The first half
/// measures X1X2 and X3X4, the second Z1Z3 and Z2Z4; the two data-data
/// swaps bring d3 (then d2) next to the ancilla that needs it and restore
/// the layout.
pub fn build_syndrome_extraction() -> Circuit {
    Circuit::from_ops(6, 1, ec_slices(0), vec![BlockLayout::standard(0, 1)])
}

/// The same measurements without the data-data swaps. Two of its CNOTs are
/// not nearest-neighbor; it exists only for comparison.
pub fn build_nonlocal_syndrome_extraction() -> Circuit {
    let mut s = ec_slices(0);
    s[3].pop();
    s[7].pop();
    s[6] = vec![Op::two(Cnot, D3, A1), Op::two(Cnot, D2, A2)];
    Circuit::from_ops(6, 1, s, vec![BlockLayout::standard(0, 1)])
}

/// Odd-even transposition sort of `keys`, starting with the odd phase.
/// Returns the swapped left positions of each nonempty round.
fn odd_even_network(mut keys: Vec<u32>) -> Vec<Vec<u32>> {
    let mut rounds = Vec::new();
    let mut phase = 1;
    let mut idle = 0;
    while idle < 2 {
        let mut swaps = Vec::new();
        let mut i = phase;
        while i + 1 < keys.len() {
            if keys[i] > keys[i + 1] {
                keys.swap(i, i + 1);
                swaps.push(i as u32);
            }
            i += 2;
        }
        if swaps.is_empty() {
            idle += 1;
        } else {
            idle = 0;
            rounds.push(swaps);
        }
        phase ^= 1;
    }
    rounds
}

/// Interleaving network for two adjacent blocks: afterwards the ancillas of
/// the first block sit at the left end, those of the second at the right
/// end, and data pairs (A.di, B.di) are adjacent with A.di on the left.
pub fn interleave_network() -> Vec<Vec<u32>> {
    // Target position of each starting position.
    let target = [2, 0, 4, 6, 1, 8, 3, 10, 5, 7, 11, 9];
    odd_even_network(target.to_vec())
}

fn gadget_slices(kind: RectKind) -> Vec<Vec<Op>> {
    let net = interleave_network();
    let layer = |swaps: &Vec<u32>| {
        swaps
            .iter()
            .map(|&i| Op::two(Swap, i, i + 1))
            .collect::<Vec<_>>()
    };
    let mut out: Vec<Vec<Op>> = net.iter().map(layer).collect();
    out.push(
        (0..4)
            .map(|d| match kind {
                RectKind::Cnot => Op::two(Cnot, 2 + 2 * d, 3 + 2 * d),
                RectKind::CnotRev => Op::two(Cnot, 3 + 2 * d, 2 + 2 * d),
                _ => Op::two(Swap, 2 + 2 * d, 3 + 2 * d),
            })
            .collect(),
    );
    out.extend(net.iter().rev().map(layer));
    out
}

/// Encoded CNOT or SWAP between two adjacent blocks, without the trailing
/// error correction.
pub fn build_encoded_gate(kind: RectKind) -> Circuit {
    assert_eq!(kind.blocks(), 2, "encoded gates act on two blocks");
    Circuit::from_ops(
        12,
        1,
        gadget_slices(kind),
        vec![BlockLayout::standard(0, 1), BlockLayout::standard(6, 1)],
    )
}

fn h_slices() -> Vec<Vec<Op>> {
    vec![
        DATA_SLOTS.iter().map(|&d| Op::one(H, d)).collect(),
        // After the transversal H the X and Z gauge groups trade places, which
        // is the standard code with d2 and d3 relabeled. The Z half therefore
        // comes first and one swap suffices to restore the layout.
        vec![Op::one(PrepZ, A1), Op::one(PrepZ, A2)],
        vec![Op::two(Cnot, D1, A1), Op::two(Cnot, D4, A2)],
        vec![Op::two(Cnot, D2, A1), Op::two(Cnot, D3, A2)],
        vec![
            Op::one(MeasZ, A1),
            Op::one(MeasZ, A2),
            Op::two(Swap, D2, D3),
        ],
        vec![Op::one(PrepX, A1), Op::one(PrepX, A2)],
        vec![Op::two(Cnot, A1, D1), Op::two(Cnot, A2, D4)],
        vec![Op::two(Cnot, A1, D2), Op::two(Cnot, A2, D3)],
        vec![Op::one(MeasX, A1), Op::one(MeasX, A2)],
    ]
}

/// Transversal Hadamard with its error correction built in.
pub fn build_encoded_h() -> Circuit {
    Circuit::from_ops(6, 1, h_slices(), vec![BlockLayout::standard(0, 1)])
}

/// Transversal preparation on the data qubits followed by one EC cycle.
pub fn build_encoded_prep(basis: Basis) -> Circuit {
    template(if basis == Basis::Z {
        RectKind::PrepZ
    } else {
        RectKind::PrepX
    })
    .circuit
}

/// Transversal measurement of the data qubits.
pub fn build_encoded_meas(basis: Basis) -> Circuit {
    template(if basis == Basis::Z {
        RectKind::MeasZ
    } else {
        RectKind::MeasX
    })
    .circuit
}

fn transversal(kind: LocationKind) -> Vec<Op> {
    DATA_SLOTS.iter().map(|&d| Op::one(kind, d)).collect()
}

fn meas_ids(c: &Circuit, slice: usize, positions: &[u32]) -> Vec<usize> {
    positions
        .iter()
        .map(|&p| {
            c.slices[slice]
                .iter()
                .find(|l| l.kind.is_measurement() && l.p == p)
                .expect("measurement present")
                .id
        })
        .collect()
}

fn ec_events(c: &Circuit, start: usize, block: usize, first_fixup: Option<Basis>) -> Vec<Event> {
    let base = 6 * block as u32;
    let anc = [base + A1, base + A2];
    let mk = |slice: usize, basis: Basis| Event {
        slice,
        block,
        basis,
        kind: if first_fixup == Some(basis) {
            EventKind::FixUp
        } else {
            EventKind::Syndrome
        },
        meas: meas_ids(c, slice, &anc),
    };
    vec![mk(start + 3, Basis::Z), mk(start + 7, Basis::X)]
}

/// Data roles at every slice boundary. `resets` lists boundaries at which
/// roles are re-read from the standard positional layout; `relabels` lists
/// (boundary, position, position) pairs whose roles trade places without any
/// movement of qubits.
fn track_roles(c: &Circuit, resets: &[usize], relabels: &[(usize, u32, u32)]) -> Vec<Vec<Role>> {
    let standard = |w: usize| -> Vec<Role> {
        (0..w)
            .map(|p| {
                let slot = (p % 6) as u32;
                DATA_SLOTS
                    .iter()
                    .position(|&s| s == slot)
                    .map(|d| ((p / 6) as u8, d as u8))
            })
            .collect()
    };
    let mut cur = standard(c.width);
    let mut out = Vec::with_capacity(c.depth() + 1);
    for t in 0..=c.depth() {
        if resets.contains(&t) {
            cur = standard(c.width);
        }
        for &(b, x, y) in relabels {
            if b == t {
                cur.swap(x as usize, y as usize);
            }
        }
        out.push(cur.clone());
        if t < c.depth() {
            for loc in &c.slices[t] {
                if let (Swap, Some(q)) = (loc.kind, loc.q) {
                    cur.swap(loc.p as usize, q as usize);
                }
            }
        }
    }
    out
}

/// The level-1 template of a rectangle.
pub fn template(kind: RectKind) -> Template {
    let one = vec![BlockLayout::standard(0, 1)];
    match kind {
        RectKind::Ec => {
            let c = Circuit::from_ops(6, 1, ec_slices(0), one);
            let events = ec_events(&c, 0, 0, None);
            let roles = track_roles(&c, &[], &[]);
            Template {
                kind,
                circuit: c,
                events,
                roles,
            }
        }
        RectKind::Cnot | RectKind::CnotRev | RectKind::Swap => {
            let mut s = gadget_slices(kind);
            let g = s.len();
            let (a, b) = (ec_slices(0), ec_slices(6));
            s.extend(a.into_iter().zip(b).map(|(mut x, y)| {
                x.extend(y);
                x
            }));
            let c = Circuit::from_ops(
                12,
                1,
                s,
                vec![BlockLayout::standard(0, 1), BlockLayout::standard(6, 1)],
            );
            let mut events = ec_events(&c, g, 0, None);
            events.extend(ec_events(&c, g, 1, None));
            events.sort_by_key(|e| (e.slice, e.block));
            let roles = track_roles(&c, &[g], &[]);
            Template {
                kind,
                circuit: c,
                events,
                roles,
            }
        }
        RectKind::H => {
            let c = Circuit::from_ops(6, 1, h_slices(), one);
            let events = vec![
                Event {
                    slice: 4,
                    block: 0,
                    basis: Basis::X,
                    kind: EventKind::Syndrome,
                    meas: meas_ids(&c, 4, &[A1, A2]),
                },
                Event {
                    slice: 8,
                    block: 0,
                    basis: Basis::Z,
                    kind: EventKind::Syndrome,
                    meas: meas_ids(&c, 8, &[A1, A2]),
                },
            ];
            let roles = track_roles(&c, &[], &[(1, D2, D3)]);
            Template {
                kind,
                circuit: c,
                events,
                roles,
            }
        }
        RectKind::PrepZ | RectKind::PrepX => {
            let (loc, fix) = if kind == RectKind::PrepZ {
                (PrepZ, Basis::Z)
            } else {
                (PrepX, Basis::X)
            };
            let mut s = vec![transversal(loc)];
            s.extend(ec_slices(0));
            let c = Circuit::from_ops(6, 1, s, one);
            let events = ec_events(&c, 1, 0, Some(fix));
            let roles = track_roles(&c, &[], &[]);
            Template {
                kind,
                circuit: c,
                events,
                roles,
            }
        }
        RectKind::MeasZ | RectKind::MeasX => {
            let (loc, basis) = if kind == RectKind::MeasZ {
                (MeasZ, Basis::X)
            } else {
                (MeasX, Basis::Z)
            };
            let c = Circuit::from_ops(6, 1, vec![transversal(loc)], one);
            let meas = meas_ids(&c, 0, &DATA_SLOTS);
            let events = vec![Event {
                slice: 0,
                block: 0,
                basis,
                kind: EventKind::Readout,
                meas,
            }];
            let roles = track_roles(&c, &[], &[]);
            Template {
                kind,
                circuit: c,
                events,
                roles,
            }
        }
        RectKind::Memory => {
            let c = Circuit::from_ops(6, 1, vec![vec![]], one);
            let roles = track_roles(&c, &[], &[]);
            Template {
                kind,
                circuit: c,
                events: vec![],
                roles,
            }
        }
    }
}

/// All templates, indexed by [`RectKind::index`].
pub fn templates() -> Vec<Template> {
    RectKind::ALL.iter().map(|&k| template(k)).collect()
}

pub fn pow6(k: usize) -> u64 {
    6u64.pow(k as u32)
}

/// Location counts and durations of rectangles at every level up to `max`.
///
/// A level-k template slice lasts as long as its longest sub-rectangle;
/// shorter ones are padded with physical idles on their blocks.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    pub max_level: usize,
    pub templates: Vec<Template>,
    count: Vec<[u64; 10]>,
    dur: Vec<[u64; 10]>,
    slice_dur: Vec<Vec<Vec<u64>>>,
    by_kind: Vec<Vec<Counts>>,
}

impl Hierarchy {
    pub fn new(max_level: usize) -> Self {
        let templates = templates();
        let mut count = vec![[1u64; 10]];
        let mut dur = vec![[1u64; 10]];
        let mut slice_dur = vec![vec![Vec::new(); 10]];
        let mut by_kind = vec![RectKind::ALL
            .iter()
            .map(|k| {
                let mut c = Counts::default();
                if let Some(l) = k.location() {
                    c.bump(l, 1);
                }
                c
            })
            .collect::<Vec<_>>()];
        for k in 1..=max_level {
            let pad = pow6(k - 1);
            let mut cnt = [0u64; 10];
            let mut du = [0u64; 10];
            let mut sd = vec![Vec::new(); 10];
            let mut bk = vec![Counts::default(); 10];
            for t in &templates {
                let i = t.kind.index();
                for slice in &t.circuit.slices {
                    let d = slice
                        .iter()
                        .map(|l| dur[k - 1][RectKind::of(l).index()])
                        .max()
                        .unwrap_or(1);
                    for l in slice {
                        let sub = RectKind::of(l).index();
                        let nb = if l.kind.is_two_qubit() { 2 } else { 1 };
                        let idle = (d - dur[k - 1][sub]) * pad * nb;
                        cnt[i] += count[k - 1][sub] + idle;
                        bk[i].add(&by_kind[k - 1][sub]);
                        bk[i].bump(Memory, idle);
                    }
                    du[i] += d;
                    sd[i].push(d);
                }
            }
            count.push(cnt);
            dur.push(du);
            slice_dur.push(sd);
            by_kind.push(bk);
        }
        Hierarchy {
            max_level,
            templates,
            count,
            dur,
            slice_dur,
            by_kind,
        }
    }

    pub fn template(&self, kind: RectKind) -> &Template {
        &self.templates[kind.index()]
    }

    /// Number of physical locations in a level-k rectangle (level 0 is one
    /// physical location).
    pub fn count(&self, level: usize, kind: RectKind) -> u64 {
        self.count[level][kind.index()]
    }

    pub fn counts_by_kind(&self, level: usize, kind: RectKind) -> Counts {
        self.by_kind[level][kind.index()]
    }

    /// Duration in physical time slices.
    pub fn duration(&self, level: usize, kind: RectKind) -> u64 {
        self.dur[level][kind.index()]
    }

    /// Duration of template slice `t` of a level-k rectangle.
    pub fn slice_duration(&self, level: usize, kind: RectKind, t: usize) -> u64 {
        self.slice_dur[level][kind.index()][t]
    }

    /// Leading EC on both blocks, then the CNOT rectangle (which carries the
    /// trailing EC on both blocks).
    pub fn exrec_count(&self, level: usize) -> u64 {
        2 * self.count(level, RectKind::Ec) + self.count(level, RectKind::Cnot)
    }

    pub fn exrec_counts_by_kind(&self, level: usize) -> Counts {
        let mut c = self.counts_by_kind(level, RectKind::Ec).scaled(2);
        c.add(&self.counts_by_kind(level, RectKind::Cnot));
        c
    }

    pub fn exrec_duration(&self, level: usize) -> u64 {
        self.duration(level, RectKind::Ec) + self.duration(level, RectKind::Cnot)
    }
}

/// One physical location of a flattened circuit, in traversal order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PhysLoc {
    pub kind: LocationKind,
    pub p: u32,
    pub q: Option<u32>,
    pub time: u64,
    pub level: u8,
}

/// Flattens rectangles into physical locations. The emission order is the
/// traversal order used for fault indices by the simulator.
pub struct Flattener<'a> {
    h: &'a Hierarchy,
    pub out: Vec<PhysLoc>,
}

impl<'a> Flattener<'a> {
    pub fn new(h: &'a Hierarchy) -> Self {
        Flattener { h, out: Vec::new() }
    }

    /// Physical idles on `len` positions from `base`, for `slices` steps.
    fn idle(&mut self, base: u64, len: u64, time: u64, slices: u64, level: u8) {
        for s in 0..slices {
            for p in 0..len {
                self.out.push(PhysLoc {
                    kind: Memory,
                    p: (base + p) as u32,
                    q: None,
                    time: time + s,
                    level,
                });
            }
        }
    }

    pub fn rect(&mut self, level: usize, kind: RectKind, bases: [u64; 2], time: u64) {
        if level == 0 {
            let loc = kind.location().expect("EC is not a physical location");
            let (p, q) = match kind {
                RectKind::CnotRev => (bases[1], Some(bases[0] as u32)),
                _ => (bases[0], loc.is_two_qubit().then_some(bases[1] as u32)),
            };
            self.out.push(PhysLoc {
                kind: loc,
                p: p as u32,
                q,
                time,
                level: 1,
            });
            return;
        }
        if kind == RectKind::Memory {
            self.idle(bases[0], pow6(level), time, 1, level as u8);
            return;
        }
        let h = self.h;
        let t = h.template(kind);
        let pitch = pow6(level - 1);
        let mut now = time;
        for (s, slice) in t.circuit.slices.iter().enumerate() {
            let d = h.slice_duration(level, kind, s);
            for l in slice {
                let sub = RectKind::of(l);
                let at = |p: u32| bases[(p / 6) as usize] + (p % 6) as u64 * pitch;
                let sb = match l.q {
                    Some(q) => [at(l.p.min(q)), at(l.p.max(q))],
                    None => [at(l.p), 0],
                };
                self.rect(level - 1, sub, sb, now);
                let extra = d - h.duration(level - 1, sub);
                if extra > 0 {
                    let start = now + h.duration(level - 1, sub);
                    for &b in sb.iter().take(if l.q.is_some() { 2 } else { 1 }) {
                        self.idle(b, pitch, start, extra, level as u8);
                    }
                }
            }
            now += d;
        }
    }

    pub fn exrec(&mut self, level: usize) {
        let n = pow6(level);
        self.rect(level, RectKind::Ec, [0, 0], 0);
        self.rect(level, RectKind::Ec, [n, 0], 0);
        let t = self.h.duration(level, RectKind::Ec);
        self.rect(level, RectKind::Cnot, [0, n], t);
    }
}

fn assemble(width: usize, level: usize, locs: &[PhysLoc], blocks: Vec<BlockLayout>) -> Circuit {
    let depth = locs.iter().map(|l| l.time + 1).max().unwrap_or(0) as usize;
    let mut slices = vec![Vec::new(); depth];
    for l in locs {
        slices[l.time as usize].push(crate::circuit::Location {
            id: 0,
            kind: l.kind,
            p: l.p,
            q: l.q,
            slice: 0,
            level: l.level,
        });
    }
    let mut c = Circuit {
        width,
        level: level as u8,
        slices,
        blocks,
        perm: Vec::new(),
    };
    c.renumber();
    c.perm = c.compute_perm();
    c
}

/// A level-`level` rectangle flattened to physical locations.
pub fn build_level_circuit(kind: RectKind, level: usize) -> Circuit {
    assert!(level >= 1);
    let h = Hierarchy::new(level);
    let mut f = Flattener::new(&h);
    let n = pow6(level);
    f.rect(level, kind, [0, n], 0);
    let pitch = pow6(level - 1) as u32;
    let blocks = (0..kind.blocks())
        .map(|b| BlockLayout::standard(b as u32 * n as u32, pitch))
        .collect();
    assemble(kind.blocks() * n as usize, level, &f.out, blocks)
}

/// The level-n CNOT extended rectangle flattened to physical locations.
pub fn build_cnot_exrec(level: usize) -> Circuit {
    assert!(level >= 1);
    let h = Hierarchy::new(level);
    let mut f = Flattener::new(&h);
    f.exrec(level);
    let n = pow6(level) as u32;
    let pitch = pow6(level - 1) as u32;
    assemble(
        2 * n as usize,
        level,
        &f.out,
        vec![
            BlockLayout::standard(0, pitch),
            BlockLayout::standard(n, pitch),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code;
    use crate::pauli::{ErrorFrame, Pauli};

    #[test]
    fn syndrome_extraction_shape() {
        let c = build_syndrome_extraction();
        c.validate_linear().unwrap();
        assert_eq!(c.depth(), 8);
        let n = c.count_locations();
        assert_eq!(n.total, 38);
        assert_eq!(n.get(Cnot), 8);
        assert_eq!(n.get(Swap), 2);
        assert_eq!(c.data_data_swaps(), 2);
        assert_eq!(c.perm, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn nonlocal_reference_has_same_depth_and_no_swaps() {
        let c = build_nonlocal_syndrome_extraction();
        assert_eq!(c.depth(), build_syndrome_extraction().depth());
        assert_eq!(c.data_data_swaps(), 0);
        assert_eq!(c.count_locations().get(Cnot), 8);
        assert!(c.validate_linear().is_err());
    }

    // Heisenberg check: with ideal gates, the operator each ancilla reads
    // equals a gauge generator of the code, and the two readings of each half
    // multiply to a stabilizer.
    #[test]
    fn ancillas_read_gauge_generators() {
        let c = build_syndrome_extraction();
        let t = template(RectKind::Ec);
        for ev in &t.events {
            let mut seen = Vec::new();
            for &id in &ev.meas {
                let loc = c.location(id).unwrap();
                let mut read = [false; 4];
                // A data error of type ev.basis flips this readout iff it
                // lies in the measured operator's support.
                for d in 0..4 {
                    let pos = t.data_position(0, 0, d);
                    let mut f = ErrorFrame::new(6);
                    f.set(pos, ev.basis.pauli());
                    for s in &c.slices[..ev.slice] {
                        for l in s {
                            f.apply_gate(l.kind, l.p as usize, l.q.map(|q| q as usize))
                                .unwrap();
                        }
                    }
                    read[d] = f.flips_measurement(loc.p as usize, ev.basis.dual());
                }
                seen.push(read);
            }
            let gauges = match ev.basis {
                Basis::Z => code::GAUGE_X,
                Basis::X => code::GAUGE_Z,
            };
            for (read, g) in seen.iter().zip(gauges) {
                let support: Vec<bool> = g.iter().map(|p| *p != Pauli::I).collect();
                assert_eq!(read.to_vec(), support);
            }
        }
    }

    #[test]
    fn interleave_is_three_rounds_of_fourteen_swaps() {
        let net = interleave_network();
        assert_eq!(net.len(), 3);
        assert_eq!(net.iter().map(Vec::len).sum::<usize>(), 14);
        let g = build_encoded_gate(RectKind::Cnot);
        g.validate_linear().unwrap();
        assert_eq!(g.depth(), 7);
        assert_eq!(g.perm, (0..12).collect::<Vec<_>>());
        let s = build_encoded_gate(RectKind::Swap);
        assert_eq!(s.count_locations().total, g.count_locations().total);
    }

    #[test]
    fn encoded_cnot_pairs_corresponding_data() {
        let g = build_encoded_gate(RectKind::Cnot);
        let t = g.depth() / 2;
        // Track which starting position sits where at the middle slice.
        let mut content: Vec<u32> = (0..12).collect();
        for s in &g.slices[..t] {
            for l in s {
                if l.kind == Swap {
                    content.swap(l.p as usize, l.q.unwrap() as usize);
                }
            }
        }
        let mut pairs: Vec<(u32, u32)> = g.slices[t]
            .iter()
            .filter(|l| l.kind == Cnot)
            .map(|l| (content[l.p as usize], content[l.q.unwrap() as usize]))
            .collect();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 6), (2, 8), (3, 9), (5, 11)]);
    }

    #[test]
    fn h_template_shape() {
        let c = build_encoded_h();
        c.validate_linear().unwrap();
        assert_eq!(c.depth(), build_syndrome_extraction().depth() + 1);
        assert_eq!(c.data_data_swaps(), 1);
        let t = template(RectKind::H);
        assert_eq!(t.roles[t.depth()], t.roles[0]);
    }

    #[test]
    fn every_template_validates() {
        for t in templates() {
            t.circuit.validate_linear().unwrap();
            assert_eq!(t.roles.len(), t.depth() + 1);
            assert_eq!(t.roles[t.depth()], t.roles[0], "{}", t.kind);
        }
    }

    #[test]
    fn level_one_counts() {
        let h = Hierarchy::new(1);
        assert_eq!(h.count(1, RectKind::Ec), 38);
        assert_eq!(h.duration(1, RectKind::Ec), 8);
        assert_eq!(h.count(1, RectKind::Memory), 6);
        assert_eq!(h.count(1, RectKind::Cnot), 7 * 12 - 32 + 76);
        assert_eq!(h.exrec_count(1), 204);
    }

    #[test]
    fn flattened_counts_match_recursion() {
        for level in 1..=2 {
            let h = Hierarchy::new(level);
            let c = build_cnot_exrec(level);
            c.validate_linear().unwrap();
            assert_eq!(c.count_locations().total, h.exrec_count(level));
            assert_eq!(c.count_locations(), h.exrec_counts_by_kind(level));
            assert_eq!(c.depth() as u64, h.exrec_duration(level));
            for kind in RectKind::ALL {
                let r = build_level_circuit(kind, level);
                r.validate_linear().unwrap();
                assert_eq!(
                    r.count_locations().total,
                    h.count(level, kind),
                    "{kind} at {level}"
                );
            }
        }
    }

    #[test]
    fn exrec_has_four_top_level_ecs() {
        // Two leading ECs plus the CNOT rectangle's two trailing ones.
        let h = Hierarchy::new(1);
        let ec = h.count(1, RectKind::Ec);
        let gadget = build_encoded_gate(RectKind::Cnot).count_locations().total;
        assert_eq!(h.exrec_count(1), 4 * ec + gadget);
    }

    #[test]
    fn builds_are_deterministic() {
        assert_eq!(build_cnot_exrec(2), build_cnot_exrec(2));
    }

    #[test]
    fn rect_kind_names_round_trip() {
        for k in RectKind::ALL {
            assert_eq!(k.name().parse::<RectKind>().unwrap(), k);
        }
    }
}
