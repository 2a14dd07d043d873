use lnn412_core::pauli::{error_count, nth_error};
use lnn412_core::sim::inject_exact;
use lnn412_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn only(p: Pauli, basis: Basis) -> bool {
    !p.has(basis.dual()) || p.is_identity()
}

/// Failing single errors whose every component is of `basis` type.
fn failing_of_type(sim: &Simulator, basis: Basis) -> usize {
    let mut ws = sim.workspace();
    let mut bad = 0;
    for index in 0..sim.locations {
        let kind = sim.locate(index).unwrap();
        for k in 0..error_count(kind) {
            let (a, b) = nth_error(kind, k);
            let pure = a.has(basis) || b.has(basis);
            if pure && only(a, basis) && only(b, basis) {
                bad += !sim
                    .run_faults(&mut ws, &[Fault::fixed(index, a, b)])
                    .unwrap()
                    .success() as usize;
            }
        }
    }
    bad
}

#[test]
fn x_and_z_single_error_failures_balance() {
    let sim = Simulator::new(1, DecoderMode::Literal).unwrap();
    let (x, z) = (
        failing_of_type(&sim, Basis::X),
        failing_of_type(&sim, Basis::Z),
    );
    assert!(x > 0);
    assert_eq!(x, z);
}

#[test]
fn exact_injection_is_uniform() {
    let (n, i, draws) = (50u64, 5u64, 20_000u64);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut counts = vec![0u64; n as usize];
    for _ in 0..draws {
        let faults = inject_exact(n, i, &mut rng).unwrap();
        let mut idx: Vec<u64> = faults.iter().map(|f| f.index).collect();
        idx.dedup();
        assert_eq!(idx.len() as u64, i);
        for f in faults {
            counts[f.index as usize] += 1;
        }
    }
    let expect = (draws * i) as f64 / n as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expect).powi(2) / expect)
        .sum();
    // 49 degrees of freedom; 85.4 is the 0.1% critical value.
    assert!(chi2 < 85.4, "chi2 = {chi2}");
}

#[test]
fn failure_rate_grows_with_error_count_at_level_1() {
    let sim = Simulator::new(1, DecoderMode::Literal).unwrap();
    let rs: Vec<RunSummary> = (0..=3)
        .map(|i| sim.estimate_ri(i, 20_000, 5, 1).unwrap())
        .collect();
    assert_eq!(rs[0].failures, 0);
    for w in rs.windows(2) {
        let slack = 3.0 * (w[0].std_err().powi(2) + w[1].std_err().powi(2)).sqrt();
        assert!(w[1].estimate() + slack >= w[0].estimate());
    }
}

#[test]
fn seed_and_index_fix_the_outcome() {
    let sim = Simulator::new(2, DecoderMode::Extended).unwrap();
    let mut ws = sim.workspace();
    let forward: Vec<TrialOutcome> = (0..200)
        .map(|t| sim.trial(&mut ws, Injection::Exact(3), 17, t).unwrap())
        .collect();
    let mut ws = sim.workspace();
    let mut backward: Vec<TrialOutcome> = (0..200)
        .rev()
        .map(|t| sim.trial(&mut ws, Injection::Exact(3), 17, t).unwrap())
        .collect();
    backward.reverse();
    assert_eq!(forward, backward);
}
