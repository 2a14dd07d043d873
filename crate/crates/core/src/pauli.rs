//! Phase-free Pauli algebra and the error frame that stands in for the
//! quantum state during simulation.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::LocationKind;
use crate::error::FrameError;

/// Single-qubit Pauli with phases discarded. Bit 0 is the X component and
/// bit 1 the Z component, so composition is XOR.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[repr(u8)]
pub enum Pauli {
    #[default]
    I = 0,
    X = 1,
    Z = 2,
    Y = 3,
}

/// Error type (or measurement basis) of a CSS component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

impl Basis {
    pub const BOTH: [Basis; 2] = [Basis::X, Basis::Z];

    pub fn index(self) -> usize {
        match self {
            Basis::X => 0,
            Basis::Z => 1,
        }
    }

    pub fn dual(self) -> Basis {
        match self {
            Basis::X => Basis::Z,
            Basis::Z => Basis::X,
        }
    }

    /// Bit of a [`Pauli`] carrying this component.
    pub fn bit(self) -> u8 {
        match self {
            Basis::X => 1,
            Basis::Z => 2,
        }
    }

    pub fn pauli(self) -> Pauli {
        Pauli::from_bits(self.bit())
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::X => "X",
            Basis::Z => "Z",
        })
    }
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    pub const NONTRIVIAL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    #[inline]
    pub fn from_bits(bits: u8) -> Pauli {
        match bits & 3 {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Z,
            _ => Pauli::Y,
        }
    }

    #[inline]
    pub fn bits(self) -> u8 {
        self as u8
    }

    #[inline]
    pub fn has(self, basis: Basis) -> bool {
        self.bits() & basis.bit() != 0
    }

    pub fn is_identity(self) -> bool {
        self == Pauli::I
    }

    /// True when `self` and `other` anticommute.
    pub fn anticommutes(self, other: Pauli) -> bool {
        let (a, b) = (self.bits(), other.bits());
        let x = (a & 1) & (b >> 1);
        let z = (a >> 1) & (b & 1);
        x ^ z == 1
    }

    pub fn conjugate_h(self) -> Pauli {
        let b = self.bits();
        Pauli::from_bits(((b & 1) << 1) | (b >> 1))
    }
}

/// Phase-free product of two Paulis.
#[inline]
pub fn compose(a: Pauli, b: Pauli) -> Pauli {
    Pauli::from_bits(a.bits() ^ b.bits())
}

impl std::ops::Mul for Pauli {
    type Output = Pauli;
    fn mul(self, rhs: Pauli) -> Pauli {
        compose(self, rhs)
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        })
    }
}

/// Whether a readout in `basis` is flipped by the error `p` sitting on the
/// measured qubit.
#[inline]
pub fn flips_readout(p: Pauli, basis: Basis) -> bool {
    p.has(basis.dual())
}

/// The 15 nontrivial two-qubit Paulis in a fixed order.
pub fn two_qubit_paulis() -> [(Pauli, Pauli); 15] {
    let mut out = [(Pauli::I, Pauli::I); 15];
    let mut k = 0;
    for a in Pauli::ALL {
        for b in Pauli::ALL {
            if a.is_identity() && b.is_identity() {
                continue;
            }
            out[k] = (a, b);
            k += 1;
        }
    }
    out
}

/// Number of distinct nontrivial errors at a location of this kind.
pub fn error_count(kind: LocationKind) -> usize {
    if kind.is_two_qubit() {
        15
    } else {
        3
    }
}

/// Maps a uniform 64-bit draw to an index in `0..n` by multiply-shift.
#[inline]
pub fn reduce(draw: u64, n: usize) -> usize {
    ((draw as u128 * n as u128) >> 64) as usize
}

/// The `k`-th nontrivial error for a location of this kind, in the order used
/// by [`error_count`]. The second Pauli is `I` for single-qubit kinds.
pub fn nth_error(kind: LocationKind, k: usize) -> (Pauli, Pauli) {
    if kind.is_two_qubit() {
        two_qubit_paulis()[k]
    } else {
        (Pauli::NONTRIVIAL[k], Pauli::I)
    }
}

/// Draws the error for a failed location: uniform over X, Y, Z for single-qubit
/// kinds and uniform over the 15 nontrivial pairs otherwise.
pub fn sample_error<R: Rng + ?Sized>(kind: LocationKind, rng: &mut R) -> (Pauli, Pauli) {
    let n = error_count(kind);
    nth_error(kind, rng.random_range(0..n))
}

/// Dense Pauli frame over a line of qubits.
///
/// Besides the entries, the frame keeps nonzero counts for every aligned
/// window of `6^j` positions so that the simulator can test whether an
/// encoded block is error-free in constant time.
#[derive(Clone, Debug)]
pub struct ErrorFrame {
    entries: Vec<u8>,
    counts: Vec<Vec<u32>>,
    total: u32,
}

impl ErrorFrame {
    pub fn new(width: usize) -> Self {
        let mut counts = Vec::new();
        let mut pitch = 6usize;
        while pitch <= width {
            counts.push(vec![0; width.div_ceil(pitch)]);
            pitch *= 6;
        }
        ErrorFrame {
            entries: vec![0; width],
            counts,
            total: 0,
        }
    }

    pub fn width(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn get(&self, pos: usize) -> Pauli {
        Pauli::from_bits(self.entries[pos])
    }

    #[inline]
    pub fn set(&mut self, pos: usize, p: Pauli) {
        let old = self.entries[pos];
        let new = p.bits();
        if (old == 0) != (new == 0) {
            let up = new != 0;
            let mut idx = pos;
            for level in self.counts.iter_mut() {
                idx /= 6;
                if up {
                    level[idx] += 1;
                } else {
                    level[idx] -= 1;
                }
            }
            if up {
                self.total += 1;
            } else {
                self.total -= 1;
            }
        }
        self.entries[pos] = new;
    }

    /// Multiplies `p` into the entry at `pos`.
    #[inline]
    pub fn apply(&mut self, pos: usize, p: Pauli) {
        if p != Pauli::I {
            let cur = self.get(pos);
            self.set(pos, cur * p);
        }
    }

    pub fn clear(&mut self) {
        self.entries.iter_mut().for_each(|e| *e = 0);
        for level in &mut self.counts {
            level.iter_mut().for_each(|c| *c = 0);
        }
        self.total = 0;
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Number of non-identity entries.
    pub fn weight(&self) -> usize {
        self.total as usize
    }

    /// True when no entry in `start..start + len` is set.
    pub fn is_clear(&self, start: usize, len: usize) -> bool {
        if self.total == 0 {
            return true;
        }
        let mut pitch = 6usize;
        for level in &self.counts {
            if pitch == len && start.is_multiple_of(pitch) {
                return level[start / pitch] == 0;
            }
            pitch *= 6;
        }
        self.entries[start..start + len].iter().all(|&e| e == 0)
    }

    pub fn clear_range(&mut self, start: usize, len: usize) {
        if self.is_clear(start, len) {
            return;
        }
        for pos in start..start + len {
            self.set(pos, Pauli::I);
        }
    }

    /// Non-identity entries in position order.
    pub fn support(&self) -> Vec<(usize, Pauli)> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &e)| e != 0)
            .map(|(i, &e)| (i, Pauli::from_bits(e)))
            .collect()
    }

    /// Conjugates the frame by a location. Preparations reset their entry;
    /// measurements and idles leave the frame unchanged.
    pub fn apply_gate(
        &mut self,
        kind: LocationKind,
        p: usize,
        q: Option<usize>,
    ) -> Result<(), FrameError> {
        if kind.is_two_qubit() {
            let q = q.ok_or(FrameError::MissingTarget(kind))?;
            if p.abs_diff(q) != 1 {
                return Err(FrameError::NotAdjacent { kind, p, q });
            }
            self.two_qubit(kind, p, q);
        } else {
            self.one_qubit(kind, p);
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn one_qubit(&mut self, kind: LocationKind, p: usize) {
        match kind {
            LocationKind::PrepZ | LocationKind::PrepX => self.set(p, Pauli::I),
            LocationKind::H => {
                let e = self.get(p);
                self.set(p, e.conjugate_h());
            }
            _ => {}
        }
    }

    #[inline]
    pub(crate) fn two_qubit(&mut self, kind: LocationKind, p: usize, q: usize) {
        let (a, b) = (self.entries[p], self.entries[q]);
        if a | b == 0 {
            return;
        }
        match kind {
            LocationKind::Cnot => {
                // X spreads control -> target, Z spreads target -> control.
                let na = a ^ (b & 2);
                let nb = b ^ (a & 1);
                self.set(p, Pauli::from_bits(na));
                self.set(q, Pauli::from_bits(nb));
            }
            LocationKind::Swap => {
                self.set(p, Pauli::from_bits(b));
                self.set(q, Pauli::from_bits(a));
            }
            _ => unreachable!("{kind} is not a two-qubit kind"),
        }
    }

    /// Whether the entry at `pos` flips a readout in `basis`.
    pub fn flips_measurement(&self, pos: usize, basis: Basis) -> bool {
        flips_readout(self.get(pos), basis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn composition_table() {
        assert_eq!(compose(Pauli::X, Pauli::Z), Pauli::Y);
        assert_eq!(compose(Pauli::X, Pauli::X), Pauli::I);
        assert_eq!(compose(Pauli::I, Pauli::Y), Pauli::Y);
        for a in Pauli::ALL {
            assert_eq!(a * a, Pauli::I);
            for b in Pauli::ALL {
                assert_eq!(a * b, b * a);
            }
        }
    }

    #[test]
    fn anticommutation() {
        assert!(Pauli::X.anticommutes(Pauli::Z));
        assert!(Pauli::Y.anticommutes(Pauli::X));
        assert!(!Pauli::Y.anticommutes(Pauli::Y));
        assert!(!Pauli::I.anticommutes(Pauli::Z));
    }

    #[test]
    fn cnot_rules() {
        let mut f = ErrorFrame::new(2);
        f.set(0, Pauli::X);
        f.apply_gate(LocationKind::Cnot, 0, Some(1)).unwrap();
        assert_eq!(f.support(), vec![(0, Pauli::X), (1, Pauli::X)]);

        let mut f = ErrorFrame::new(2);
        f.set(1, Pauli::Z);
        f.apply_gate(LocationKind::Cnot, 0, Some(1)).unwrap();
        assert_eq!(f.support(), vec![(0, Pauli::Z), (1, Pauli::Z)]);
    }

    #[test]
    fn hadamard_fixes_y() {
        let mut f = ErrorFrame::new(1);
        f.set(0, Pauli::Y);
        f.apply_gate(LocationKind::H, 0, None).unwrap();
        assert_eq!(f.get(0), Pauli::Y);
        f.set(0, Pauli::X);
        f.apply_gate(LocationKind::H, 0, None).unwrap();
        assert_eq!(f.get(0), Pauli::Z);
    }

    #[test]
    fn prep_resets() {
        let mut f = ErrorFrame::new(3);
        f.set(1, Pauli::Y);
        f.apply_gate(LocationKind::PrepX, 1, None).unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn rejects_non_adjacent() {
        let mut f = ErrorFrame::new(3);
        let err = f.apply_gate(LocationKind::Cnot, 0, Some(2)).unwrap_err();
        assert!(matches!(err, FrameError::NotAdjacent { p: 0, q: 2, .. }));
    }

    #[test]
    fn measurement_flips() {
        let mut f = ErrorFrame::new(1);
        assert!(!f.flips_measurement(0, Basis::X));
        f.set(0, Pauli::X);
        assert!(f.flips_measurement(0, Basis::Z));
        f.set(0, Pauli::Z);
        assert!(!f.flips_measurement(0, Basis::Z));
        assert!(f.flips_measurement(0, Basis::X));
    }

    #[test]
    fn swap_is_involution() {
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let mut f = ErrorFrame::new(2);
                f.set(0, a);
                f.set(1, b);
                f.apply_gate(LocationKind::Swap, 0, Some(1)).unwrap();
                f.apply_gate(LocationKind::Swap, 0, Some(1)).unwrap();
                assert_eq!((f.get(0), f.get(1)), (a, b));
            }
        }
    }

    #[test]
    fn conjugation_is_linear() {
        let kinds = [LocationKind::Cnot, LocationKind::Swap];
        for kind in kinds {
            for a in two_qubit_paulis() {
                for b in two_qubit_paulis() {
                    let run = |x: (Pauli, Pauli)| {
                        let mut f = ErrorFrame::new(2);
                        f.set(0, x.0);
                        f.set(1, x.1);
                        f.apply_gate(kind, 0, Some(1)).unwrap();
                        (f.get(0), f.get(1))
                    };
                    let (fa, fb) = (run(a), run(b));
                    let merged = run((a.0 * b.0, a.1 * b.1));
                    assert_eq!(merged, (fa.0 * fb.0, fa.1 * fb.1));
                }
            }
        }
    }

    #[test]
    fn block_counts_track_entries() {
        let mut f = ErrorFrame::new(72);
        assert!(f.is_clear(36, 36));
        f.set(40, Pauli::Z);
        assert!(!f.is_clear(36, 36));
        assert!(!f.is_clear(36, 6));
        assert!(f.is_clear(42, 6));
        assert!(f.is_clear(0, 36));
        f.apply(40, Pauli::Z);
        assert!(f.is_clear(0, 72));
        assert!(f.is_empty());
    }

    #[test]
    fn sampled_errors_are_nontrivial() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let (a, b) = sample_error(LocationKind::Swap, &mut rng);
            assert!(!(a.is_identity() && b.is_identity()));
            let (a, b) = sample_error(LocationKind::Memory, &mut rng);
            assert!(!a.is_identity() && b.is_identity());
        }
    }

    #[test]
    fn two_qubit_list_is_complete() {
        let all = two_qubit_paulis();
        let mut seen = std::collections::HashSet::new();
        for p in all {
            assert!(seen.insert(p));
        }
        assert_eq!(seen.len(), 15);
    }
}
