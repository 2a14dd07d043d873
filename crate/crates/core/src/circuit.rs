//! Time-sliced circuits on a line of qubits, with nearest-neighbor
//! validation, location accounting and a canonical text form.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CircuitError, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LocationKind {
    PrepZ,
    PrepX,
    MeasZ,
    MeasX,
    Memory,
    Cnot,
    Swap,
    H,
}

impl LocationKind {
    pub const ALL: [LocationKind; 8] = [
        LocationKind::PrepZ,
        LocationKind::PrepX,
        LocationKind::MeasZ,
        LocationKind::MeasX,
        LocationKind::Memory,
        LocationKind::Cnot,
        LocationKind::Swap,
        LocationKind::H,
    ];

    pub fn is_two_qubit(self) -> bool {
        matches!(self, LocationKind::Cnot | LocationKind::Swap)
    }

    pub fn is_measurement(self) -> bool {
        matches!(self, LocationKind::MeasZ | LocationKind::MeasX)
    }

    pub fn is_preparation(self) -> bool {
        matches!(self, LocationKind::PrepZ | LocationKind::PrepX)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            LocationKind::PrepZ => "PrepZ",
            LocationKind::PrepX => "PrepX",
            LocationKind::MeasZ => "MeasZ",
            LocationKind::MeasX => "MeasX",
            LocationKind::Memory => "Memory",
            LocationKind::Cnot => "CNOT",
            LocationKind::Swap => "SWAP",
            LocationKind::H => "H",
        }
    }
}

impl fmt::Display for LocationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LocationKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        LocationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown location kind `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Location {
    pub id: usize,
    pub kind: LocationKind,
    pub p: u32,
    pub q: Option<u32>,
    pub slice: usize,
    pub level: u8,
}

impl Location {
    pub fn positions(&self) -> impl Iterator<Item = u32> {
        std::iter::once(self.p).chain(self.q)
    }

    pub fn min_pos(&self) -> u32 {
        self.q.map_or(self.p, |q| q.min(self.p))
    }
}

/// A location before it is placed in a circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Op {
    pub kind: LocationKind,
    pub p: u32,
    pub q: Option<u32>,
    pub level: u8,
}

impl Op {
    pub fn one(kind: LocationKind, p: u32) -> Op {
        Op {
            kind,
            p,
            q: None,
            level: 1,
        }
    }

    pub fn two(kind: LocationKind, p: u32, q: u32) -> Op {
        Op {
            kind,
            p,
            q: Some(q),
            level: 1,
        }
    }

    pub fn at_level(mut self, level: u8) -> Op {
        self.level = level;
        self
    }
}

/// Line positions of one code block: data roles d1..d4 and ancillas a1, a2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockLayout {
    pub d: [u32; 4],
    pub a: [u32; 2],
}

impl BlockLayout {
    /// The standard `[d1, a1, d2, d3, a2, d4]` layout starting at `base`,
    /// with `pitch` positions per slot.
    pub fn standard(base: u32, pitch: u32) -> Self {
        BlockLayout {
            d: [base, base + 2 * pitch, base + 3 * pitch, base + 5 * pitch],
            a: [base + pitch, base + 4 * pitch],
        }
    }

    pub fn positions(&self) -> impl Iterator<Item = u32> + '_ {
        self.d.iter().chain(self.a.iter()).copied()
    }

    fn shifted(&self, offset: u32) -> Self {
        BlockLayout {
            d: self.d.map(|x| x + offset),
            a: self.a.map(|x| x + offset),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub by_kind: [u64; 8],
    pub total: u64,
}

impl Counts {
    pub fn get(&self, kind: LocationKind) -> u64 {
        self.by_kind[kind.index()]
    }

    pub fn add(&mut self, other: &Counts) {
        for (a, b) in self.by_kind.iter_mut().zip(other.by_kind) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn scaled(&self, k: u64) -> Counts {
        Counts {
            by_kind: self.by_kind.map(|c| c * k),
            total: self.total * k,
        }
    }

    pub fn bump(&mut self, kind: LocationKind, n: u64) {
        self.by_kind[kind.index()] += n;
        self.total += n;
    }
}

impl fmt::Display for Counts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "total {}", self.total)?;
        for kind in LocationKind::ALL {
            write!(f, " {}={}", kind, self.get(kind))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub width: usize,
    pub level: u8,
    pub slices: Vec<Vec<Location>>,
    pub blocks: Vec<BlockLayout>,
    /// `perm[i]` is the position holding, at the end, what started at `i`.
    pub perm: Vec<u32>,
}

impl Circuit {
    pub fn empty(width: usize) -> Self {
        Circuit {
            width,
            level: 1,
            slices: Vec::new(),
            blocks: Vec::new(),
            perm: (0..width as u32).collect(),
        }
    }

    /// Builds a circuit from per-slice operations. Positions not touched in a
    /// slice get an explicit `Memory` location; ids follow the canonical order.
    pub fn from_ops(
        width: usize,
        level: u8,
        slices: Vec<Vec<Op>>,
        blocks: Vec<BlockLayout>,
    ) -> Self {
        let mut out = Vec::with_capacity(slices.len());
        for ops in slices {
            let mut used = vec![false; width];
            let mut slice: Vec<Location> = Vec::with_capacity(width);
            for op in ops {
                for pos in std::iter::once(op.p).chain(op.q) {
                    if let Some(u) = used.get_mut(pos as usize) {
                        *u = true;
                    }
                }
                slice.push(Location {
                    id: 0,
                    kind: op.kind,
                    p: op.p,
                    q: op.q,
                    slice: 0,
                    level: op.level,
                });
            }
            for (pos, u) in used.iter().enumerate() {
                if !u {
                    slice.push(Location {
                        id: 0,
                        kind: LocationKind::Memory,
                        p: pos as u32,
                        q: None,
                        slice: 0,
                        level,
                    });
                }
            }
            out.push(slice);
        }
        let mut c = Circuit {
            width,
            level,
            slices: out,
            blocks,
            perm: Vec::new(),
        };
        c.renumber();
        c.perm = c.compute_perm();
        c
    }

    /// Restores canonical slice order and dense ids.
    pub fn renumber(&mut self) {
        let mut id = 0;
        for (t, slice) in self.slices.iter_mut().enumerate() {
            slice.sort_by_key(|l| l.min_pos());
            for loc in slice.iter_mut() {
                loc.id = id;
                loc.slice = t;
                id += 1;
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.slices.len()
    }

    pub fn locations(&self) -> impl Iterator<Item = &Location> {
        self.slices.iter().flatten()
    }

    pub fn location(&self, id: usize) -> Option<&Location> {
        self.locations().find(|l| l.id == id)
    }

    pub fn compute_perm(&self) -> Vec<u32> {
        // content[pos] = starting position of what sits at pos now.
        let mut content: Vec<u32> = (0..self.width as u32).collect();
        for loc in self.locations() {
            if loc.kind == LocationKind::Swap {
                if let Some(q) = loc.q {
                    let (p, q) = (loc.p as usize, q as usize);
                    if p < self.width && q < self.width {
                        content.swap(p, q);
                    }
                }
            }
        }
        let mut perm = vec![0; self.width];
        for (pos, &start) in content.iter().enumerate() {
            perm[start as usize] = pos as u32;
        }
        perm
    }

    /// Checks adjacency, slice coverage and id density; reports the first
    /// offending location.
    pub fn validate_linear(&self) -> Result<(), Violation> {
        let mut expected_id = 0;
        for (t, slice) in self.slices.iter().enumerate() {
            let mut seen = vec![false; self.width];
            for loc in slice {
                let fail = |reason: String| Violation {
                    slice: t,
                    id: loc.id,
                    reason,
                };
                if loc.id != expected_id {
                    return Err(fail(format!(
                        "id {} out of sequence, expected {expected_id}",
                        loc.id
                    )));
                }
                expected_id += 1;
                if loc.slice != t {
                    return Err(fail(format!("tagged with slice {}", loc.slice)));
                }
                match (loc.kind.is_two_qubit(), loc.q) {
                    (true, None) => return Err(fail(format!("{} needs two positions", loc.kind))),
                    (false, Some(_)) => {
                        return Err(fail(format!("{} takes one position", loc.kind)))
                    }
                    (true, Some(q)) if loc.p.abs_diff(q) != 1 => {
                        return Err(fail(format!(
                            "{} on non-adjacent positions {} and {q}",
                            loc.kind, loc.p
                        )))
                    }
                    _ => {}
                }
                for pos in loc.positions() {
                    let Some(s) = seen.get_mut(pos as usize) else {
                        return Err(fail(format!("position {pos} outside width {}", self.width)));
                    };
                    if *s {
                        return Err(fail(format!("position {pos} used twice")));
                    }
                    *s = true;
                }
            }
            if let Some(pos) = seen.iter().position(|s| !s) {
                return Err(Violation {
                    slice: t,
                    id: slice.last().map_or(expected_id, |l| l.id),
                    reason: format!("position {pos} not covered"),
                });
            }
        }
        Ok(())
    }

    pub fn count_locations(&self) -> Counts {
        let mut c = Counts::default();
        for loc in self.locations() {
            c.bump(loc.kind, 1);
        }
        c
    }

    /// Number of SWAP locations acting on two data qubits, following data
    /// roles through earlier swaps.
    pub fn data_data_swaps(&self) -> usize {
        let mut is_data = vec![false; self.width];
        for b in &self.blocks {
            for &d in &b.d {
                if let Some(x) = is_data.get_mut(d as usize) {
                    *x = true;
                }
            }
        }
        let mut n = 0;
        for loc in self.locations() {
            if let (LocationKind::Swap, Some(q)) = (loc.kind, loc.q) {
                let (p, q) = (loc.p as usize, q as usize);
                if is_data[p] && is_data[q] {
                    n += 1;
                }
                is_data.swap(p, q);
            }
        }
        n
    }

    /// Appends the slices of `other`, shifted right by `offset`, after the
    /// slices of `self`. Positions outside the shifted circuit idle.
    pub fn concatenate(&self, other: &Circuit, offset: usize) -> Result<Circuit, CircuitError> {
        if other.width + offset > self.width {
            return Err(CircuitError::Overflow {
                inner: other.width,
                offset,
                outer: self.width,
            });
        }
        let mut blocks = self.blocks.clone();
        for b in &other.blocks {
            let b = b.shifted(offset as u32);
            if blocks.contains(&b) {
                continue;
            }
            for pos in b.positions() {
                if blocks.iter().any(|x| x.positions().any(|y| y == pos)) {
                    return Err(CircuitError::Overlap(pos as usize));
                }
            }
            blocks.push(b);
        }
        let mut slices = self.slices.clone();
        for s in &other.slices {
            let mut covered = vec![false; self.width];
            let mut slice: Vec<Location> = s
                .iter()
                .map(|l| {
                    let mut l = *l;
                    l.p += offset as u32;
                    l.q = l.q.map(|q| q + offset as u32);
                    for pos in l.positions() {
                        covered[pos as usize] = true;
                    }
                    l
                })
                .collect();
            for (pos, c) in covered.iter().enumerate() {
                if !c {
                    slice.push(Location {
                        id: 0,
                        kind: LocationKind::Memory,
                        p: pos as u32,
                        q: None,
                        slice: 0,
                        level: self.level,
                    });
                }
            }
            slices.push(slice);
        }
        let mut c = Circuit {
            width: self.width,
            level: self.level,
            slices,
            blocks,
            perm: Vec::new(),
        };
        c.renumber();
        c.perm = c.compute_perm();
        Ok(c)
    }

    /// Canonical text form: header lines, then one slice per line.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "width {}", self.width);
        let _ = writeln!(s, "level {}", self.level);
        for b in &self.blocks {
            let _ = writeln!(
                s,
                "block d1={} a1={} d2={} d3={} a2={} d4={}",
                b.d[0], b.a[0], b.d[1], b.d[2], b.a[1], b.d[3]
            );
        }
        if self.perm.iter().enumerate().any(|(i, &p)| i as u32 != p) {
            s.push_str("perm");
            for p in &self.perm {
                let _ = write!(s, " {p}");
            }
            s.push('\n');
        }
        for slice in &self.slices {
            let mut first = true;
            for loc in slice {
                if !first {
                    s.push(' ');
                }
                first = false;
                let _ = write!(s, "{}@{}", loc.kind, loc.p);
                if let Some(q) = loc.q {
                    let _ = write!(s, ",{q}");
                }
                if loc.level != self.level {
                    let _ = write!(s, "^{}", loc.level);
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
        let mut width = None;
        let mut level = 1u8;
        let mut blocks = Vec::new();
        let mut perm = None;
        let mut slices: Vec<Vec<Location>> = Vec::new();
        let mut next_id = 0usize;
        for (ln, raw) in text.lines().enumerate() {
            let line_no = ln + 1;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let err = |column: usize, message: String| CircuitError::Parse {
                line: line_no,
                column,
                message,
            };
            let mut tokens = tokens_with_columns(content);
            let (col0, head) = tokens[0];
            match head {
                "width" | "level" => {
                    if tokens.len() != 2 {
                        return Err(err(col0, format!("`{head}` takes one value")));
                    }
                    let (c, v) = tokens[1];
                    let v: usize = v.parse().map_err(|_| err(c, format!("bad number `{v}`")))?;
                    if head == "width" {
                        width = Some(v);
                    } else {
                        level = u8::try_from(v).map_err(|_| err(c, "level too large".into()))?;
                    }
                }
                "block" => {
                    let mut roles = [None; 6];
                    for &(c, tok) in &tokens[1..] {
                        let (name, v) = tok
                            .split_once('=')
                            .ok_or_else(|| err(c, format!("expected role=pos, got `{tok}`")))?;
                        let slot = ["d1", "a1", "d2", "d3", "a2", "d4"]
                            .iter()
                            .position(|r| *r == name)
                            .ok_or_else(|| err(c, format!("unknown role `{name}`")))?;
                        let v: u32 = v
                            .parse()
                            .map_err(|_| err(c, format!("bad position `{v}`")))?;
                        roles[slot] = Some(v);
                    }
                    let get = |i: usize| {
                        roles[i].ok_or_else(|| err(col0, "block needs all six roles".into()))
                    };
                    blocks.push(BlockLayout {
                        d: [get(0)?, get(2)?, get(3)?, get(5)?],
                        a: [get(1)?, get(4)?],
                    });
                }
                "perm" => {
                    let mut v = Vec::with_capacity(tokens.len() - 1);
                    for &(c, tok) in &tokens[1..] {
                        v.push(
                            tok.parse::<u32>()
                                .map_err(|_| err(c, format!("bad position `{tok}`")))?,
                        );
                    }
                    perm = Some(v);
                }
                _ => {
                    let t = slices.len();
                    let mut slice = Vec::with_capacity(tokens.len());
                    for (c, tok) in tokens.drain(..) {
                        let loc = parse_token(tok, level, t, next_id).map_err(|m| err(c, m))?;
                        next_id += 1;
                        slice.push(loc);
                    }
                    slices.push(slice);
                }
            }
        }
        let width = width.ok_or(CircuitError::Parse {
            line: 1,
            column: 1,
            message: "missing `width` line".into(),
        })?;
        let mut c = Circuit {
            width,
            level,
            slices,
            blocks,
            perm: Vec::new(),
        };
        c.validate_linear()?;
        let computed = c.compute_perm();
        if let Some(p) = perm {
            if p != computed {
                return Err(CircuitError::Parse {
                    line: 1,
                    column: 1,
                    message: "declared perm disagrees with swaps".into(),
                });
            }
        }
        c.perm = computed;
        Ok(c)
    }
}

fn tokens_with_columns(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn parse_token(tok: &str, default_level: u8, slice: usize, id: usize) -> Result<Location, String> {
    let (body, level) = match tok.split_once('^') {
        Some((b, l)) => (
            b,
            l.parse::<u8>()
                .map_err(|_| format!("bad level suffix in `{tok}`"))?,
        ),
        None => (tok, default_level),
    };
    let (kind, pos) = body
        .split_once('@')
        .ok_or_else(|| format!("expected Kind@pos, got `{tok}`"))?;
    let kind: LocationKind = kind.parse()?;
    let mut parts = pos.split(',');
    let p: u32 = parts
        .next()
        .unwrap_or("")
        .parse()
        .map_err(|_| format!("bad position in `{tok}`"))?;
    let q = match parts.next() {
        Some(q) => Some(
            q.parse::<u32>()
                .map_err(|_| format!("bad position in `{tok}`"))?,
        ),
        None => None,
    };
    if parts.next().is_some() {
        return Err(format!("too many positions in `{tok}`"));
    }
    match (kind.is_two_qubit(), q) {
        (true, None) => return Err(format!("location {id}: {kind} needs two positions")),
        (false, Some(_)) => return Err(format!("location {id}: {kind} takes one position")),
        (true, Some(q)) if p.abs_diff(q) != 1 => {
            return Err(format!(
                "location {id}: {kind} on non-adjacent positions {p} and {q}"
            ))
        }
        _ => {}
    }
    Ok(Location {
        id,
        kind,
        p,
        q,
        slice,
        level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use LocationKind::*;

    fn small() -> Circuit {
        Circuit::from_ops(
            4,
            1,
            vec![
                vec![Op::one(PrepZ, 0), Op::two(Cnot, 1, 2)],
                vec![Op::two(Swap, 2, 3), Op::one(MeasX, 0)],
            ],
            vec![],
        )
    }

    #[test]
    fn fills_idles_and_numbers_densely() {
        let c = small();
        c.validate_linear().unwrap();
        assert_eq!(c.count_locations().total, 6);
        assert_eq!(c.count_locations().get(Memory), 2);
        let ids: Vec<_> = c.locations().map(|l| l.id).collect();
        assert_eq!(ids, (0..6).collect::<Vec<_>>());
        assert_eq!(c.perm, vec![0, 1, 3, 2]);
    }

    #[test]
    fn rejects_non_adjacent_gate() {
        let c = Circuit::from_ops(3, 1, vec![vec![Op::two(Cnot, 0, 2)]], vec![]);
        let v = c.validate_linear().unwrap_err();
        assert_eq!(v.id, 0);
        assert!(v.reason.contains("non-adjacent"));
    }

    #[test]
    fn rejects_double_use() {
        let mut c = small();
        c.slices[0][1].p = 0;
        c.slices[0][1].q = Some(1);
        let v = c.validate_linear().unwrap_err();
        assert!(v.reason.contains("used twice"), "{v}");
    }

    #[test]
    fn empty_counts_zero() {
        assert_eq!(Circuit::empty(5).count_locations().total, 0);
    }

    #[test]
    fn concatenation_adds_counts() {
        let a = small();
        let both = a.concatenate(&a, 0).unwrap();
        assert_eq!(both.count_locations().total, 2 * a.count_locations().total);
        both.validate_linear().unwrap();
        let same = a.concatenate(&Circuit::empty(4), 0).unwrap();
        assert_eq!(same, a);
        assert!(matches!(
            a.concatenate(&a, 1),
            Err(CircuitError::Overflow { .. })
        ));
    }

    #[test]
    fn concatenation_rejects_overlapping_blocks() {
        let mut a = Circuit::empty(12);
        a.blocks.push(BlockLayout::standard(0, 1));
        let mut b = Circuit::empty(6);
        b.blocks.push(BlockLayout::standard(0, 1));
        assert!(a.concatenate(&b, 0).is_ok());
        assert!(matches!(
            a.concatenate(&b, 3),
            Err(CircuitError::Overlap(_))
        ));
    }

    #[test]
    fn text_round_trip() {
        let mut c = small();
        c.blocks.push(BlockLayout {
            d: [0, 1, 2, 3],
            a: [0, 0],
        });
        c.slices[1][0].level = 2;
        let text = c.serialize();
        let back = Circuit::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.serialize(), text);
    }

    #[test]
    fn parse_reports_non_adjacent_with_id() {
        let text = "width 3\nMemory@0 Memory@1 Memory@2\nCNOT@0,2 Memory@1 # bad\n";
        match Circuit::parse(text) {
            Err(CircuitError::Parse {
                line,
                column,
                message,
            }) => {
                assert_eq!((line, column), (3, 1));
                assert!(message.contains("location 3"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(Circuit::parse("width 2\nFoo@0 Memory@1\n").is_err());
        assert!(Circuit::parse("width 2\nMemory@0\n").is_err());
        assert!(Circuit::parse("Memory@0\n").is_err());
    }

    #[test]
    fn data_swaps_follow_roles() {
        let blocks = vec![BlockLayout::standard(0, 1)];
        let c = Circuit::from_ops(
            6,
            1,
            vec![vec![Op::two(Swap, 1, 2)], vec![Op::two(Swap, 0, 1)]],
            blocks,
        );
        assert_eq!(c.data_data_swaps(), 1);
    }
}
