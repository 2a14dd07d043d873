//! The [[4,1,2]] subsystem code: gauge group, logical operators, parity
//! decoding and logical-action classification.
//!
//! Data qubits are indexed 0..4 for d1..d4. For X-type errors the data pairs
//! are {d1,d2} and {d3,d4}; for Z-type errors they are {d1,d3} and {d2,d4}.
//! A single error on either member of a pair has the same effect, and one
//! error on each pair is the logical operator of that type.

use serde::{Deserialize, Serialize};

use crate::pauli::{Basis, Pauli};

/// A four-qubit Pauli operator on d1..d4.
pub type BlockPauli = [Pauli; 4];

const fn op(x: [bool; 4], z: [bool; 4]) -> BlockPauli {
    let mut out = [Pauli::I; 4];
    let mut i = 0;
    while i < 4 {
        out[i] = match (x[i], z[i]) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (false, true) => Pauli::Z,
            (true, true) => Pauli::Y,
        };
        i += 1;
    }
    out
}

const T: bool = true;
const F: bool = false;

pub const STABILIZERS: [BlockPauli; 2] = [op([T, T, T, T], [F; 4]), op([F; 4], [T, T, T, T])];
pub const GAUGE_X: [BlockPauli; 2] = [op([T, T, F, F], [F; 4]), op([F, F, T, T], [F; 4])];
pub const GAUGE_Z: [BlockPauli; 2] = [op([F; 4], [T, F, T, F]), op([F; 4], [F, T, F, T])];
pub const LOGICAL_X: BlockPauli = op([T, F, T, F], [F; 4]);
pub const LOGICAL_Z: BlockPauli = op([F; 4], [T, T, F, F]);

/// Data pairs for errors of type `basis`, as data indices.
pub const fn pairs(basis: Basis) -> [[usize; 2]; 2] {
    match basis {
        Basis::X => [[0, 1], [2, 3]],
        Basis::Z => [[0, 2], [1, 3]],
    }
}

/// Which pair (0 or 1) data qubit `d` belongs to for errors of type `basis`.
pub const fn pair_of(basis: Basis, d: usize) -> usize {
    match basis {
        Basis::X => d / 2,
        Basis::Z => d % 2,
    }
}

/// Data index used to correct (or represent) an error on `pair`:
/// X1 or X3 for X errors, Z1 or Z2 for Z errors.
pub const fn representative(basis: Basis, pair: usize) -> usize {
    pairs(basis)[pair][0]
}

/// Data qubits carrying the logical operator of this type.
pub const fn logical_support(basis: Basis) -> [usize; 2] {
    match basis {
        Basis::X => [0, 2],
        Basis::Z => [0, 1],
    }
}

pub fn commutes(a: &BlockPauli, b: &BlockPauli) -> bool {
    a.iter().zip(b).filter(|(x, y)| x.anticommutes(**y)).count() % 2 == 0
}

pub fn product(a: &BlockPauli, b: &BlockPauli) -> BlockPauli {
    [a[0] * b[0], a[1] * b[1], a[2] * b[2], a[3] * b[3]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn from_bool(odd: bool) -> Parity {
        if odd {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }
}

/// Parity of two gauge outcomes given as ±1.
pub fn decode_parity(m1: i8, m2: i8) -> Parity {
    Parity::from_bool(m1 * m2 < 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Trivial,
    Logical,
    Detectable,
}

/// Pair parities of the `basis`-type part of `e`.
pub fn pair_parities(e: &BlockPauli, basis: Basis) -> [bool; 2] {
    pairs(basis).map(|pr| e[pr[0]].has(basis) ^ e[pr[1]].has(basis))
}

/// Classifies the `basis`-type part of an operator on one block.
pub fn classify(e: &BlockPauli, basis: Basis) -> Action {
    match pair_parities(e, basis) {
        [false, false] => Action::Trivial,
        [true, true] => Action::Logical,
        _ => Action::Detectable,
    }
}

/// Logical action of a block operator, as (X-type, Z-type).
pub fn logical_action(e: &BlockPauli) -> (Action, Action) {
    (classify(e, Basis::X), classify(e, Basis::Z))
}

/// Classical decode of a destructive transversal measurement. `outcomes`
/// are ±1 per data qubit; returns the logical outcome and whether the
/// same-basis gauge values disagree in parity.
pub fn decode_transversal_measurement(outcomes: [i8; 4], basis: Basis) -> (i8, bool) {
    let [l0, l1] = logical_support(basis);
    let logical = outcomes[l0] * outcomes[l1];
    // Same-type gauge generators are products over the pairs of that type.
    let g = pairs(basis).map(|[a, b]| outcomes[a] * outcomes[b]);
    (logical, decode_parity(g[0], g[1]).is_odd())
}

/// Distance after `l` levels of concatenation.
pub fn distance_at_level(l: u32) -> u64 {
    1u64 << (l + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(d: usize, p: Pauli) -> BlockPauli {
        let mut e = [Pauli::I; 4];
        e[d] = p;
        e
    }

    fn all_block_paulis() -> impl Iterator<Item = BlockPauli> {
        (0..256u32).map(|k| [0, 1, 2, 3].map(|i| Pauli::from_bits(((k >> (2 * i)) & 3) as u8)))
    }

    #[test]
    fn structure() {
        assert_eq!(product(&GAUGE_X[0], &GAUGE_X[1]), STABILIZERS[0]);
        assert_eq!(product(&GAUGE_Z[0], &GAUGE_Z[1]), STABILIZERS[1]);
        for g in GAUGE_X.iter().chain(&GAUGE_Z) {
            for s in &STABILIZERS {
                assert!(commutes(g, s));
            }
            assert!(commutes(g, &LOGICAL_X));
            assert!(commutes(g, &LOGICAL_Z));
        }
        assert!(!commutes(&LOGICAL_X, &LOGICAL_Z));
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify(&GAUGE_X[0], Basis::X), Action::Trivial);
        assert_eq!(classify(&LOGICAL_X, Basis::X), Action::Logical);
        assert_eq!(classify(&single(0, Pauli::X), Basis::X), Action::Detectable);
        assert_eq!(classify(&LOGICAL_Z, Basis::Z), Action::Logical);
        assert_eq!(
            logical_action(&LOGICAL_X),
            (Action::Logical, Action::Trivial)
        );
    }

    // Oracle: an operator is detectable iff it anticommutes with the
    // opposite-type stabilizer; otherwise it is logical iff it anticommutes
    // with the opposite-type bare logical.
    #[test]
    fn classification_matches_commutation_oracle() {
        for e in all_block_paulis() {
            for basis in Basis::BOTH {
                let part = e.map(|p| {
                    if p.has(basis) {
                        basis.pauli()
                    } else {
                        Pauli::I
                    }
                });
                let (stabilizer, other_logical) = match basis {
                    Basis::X => (&STABILIZERS[1], &LOGICAL_Z),
                    Basis::Z => (&STABILIZERS[0], &LOGICAL_X),
                };
                let detect = !commutes(&part, stabilizer);
                let expected = if detect {
                    Action::Detectable
                } else if !commutes(&part, other_logical) {
                    Action::Logical
                } else {
                    Action::Trivial
                };
                assert_eq!(classify(&e, basis), expected, "{e:?} {basis}");
            }
        }
    }

    #[test]
    fn pair_members_are_degenerate() {
        for basis in Basis::BOTH {
            for pr in pairs(basis) {
                for p in Pauli::NONTRIVIAL {
                    let a = single(pr[0], p);
                    let b = single(pr[1], p);
                    assert_eq!(classify(&a, basis), classify(&b, basis));
                    assert_eq!(pair_parities(&a, basis), pair_parities(&b, basis));
                }
            }
        }
    }

    #[test]
    fn pair_spanning_errors_are_never_detectable() {
        for basis in Basis::BOTH {
            for i in 0..4 {
                for j in 0..4 {
                    if i == j || pair_of(basis, i) == pair_of(basis, j) {
                        continue;
                    }
                    let mut e = [Pauli::I; 4];
                    e[i] = basis.pauli();
                    e[j] = basis.pauli();
                    assert_ne!(classify(&e, basis), Action::Detectable);
                }
            }
        }
    }

    #[test]
    fn parity() {
        assert_eq!(decode_parity(1, 1), Parity::Even);
        assert_eq!(decode_parity(1, -1), Parity::Odd);
        assert_eq!(decode_parity(-1, -1), Parity::Even);
    }

    #[test]
    fn transversal_readout() {
        assert_eq!(
            decode_transversal_measurement([1, 1, 1, 1], Basis::Z),
            (1, false)
        );
        assert_eq!(
            decode_transversal_measurement([-1, 1, 1, -1], Basis::Z),
            (-1, false)
        );
        assert_eq!(
            decode_transversal_measurement([-1, 1, 1, 1], Basis::Z),
            (-1, true)
        );
        assert_eq!(
            decode_transversal_measurement([1, 1, -1, 1], Basis::X),
            (-1, true)
        );
        assert_eq!(
            decode_transversal_measurement([-1, 1, -1, 1], Basis::X),
            (1, false)
        );
    }

    #[test]
    fn distance() {
        assert_eq!(distance_at_level(0), 2);
        assert_eq!(distance_at_level(1), 4);
        assert_eq!(distance_at_level(5), 64);
    }

    #[test]
    fn representatives() {
        assert_eq!(representative(Basis::X, 0), 0);
        assert_eq!(representative(Basis::X, 1), 2);
        assert_eq!(representative(Basis::Z, 1), 1);
        for basis in Basis::BOTH {
            for d in 0..4 {
                assert!(pairs(basis)[pair_of(basis, d)].contains(&d));
            }
        }
    }
}
