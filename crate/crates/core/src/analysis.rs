//! Failure-rate curves from conditional failure rates, their error bands,
//! threshold crossings and slopes, plus the CSV and manifest formats.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha1::{Digest, Sha1};

use crate::builder::templates;
use crate::error::AnalysisError;

/// One `level,i,trials,failures` row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiRow {
    pub level: usize,
    pub i: u64,
    pub trials: u64,
    pub failures: u64,
}

/// Below this many failures the normal approximation is replaced by a
/// Wilson interval.
pub const WILSON_BELOW: u64 = 10;
/// Band half-width in standard deviations.
pub const Z: f64 = 2.0;

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let r = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (r + z2 / (2.0 * n)) / denom;
    let half = z / denom * (r * (1.0 - r) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiEstimate {
    pub i: u64,
    pub r: f64,
    pub sigma: f64,
    /// Band edges at `Z` standard deviations.
    pub lo: f64,
    pub hi: f64,
    pub wilson: bool,
}

impl RiEstimate {
    pub fn from_counts(i: u64, trials: u64, failures: u64) -> RiEstimate {
        let r = if trials == 0 {
            0.0
        } else {
            failures as f64 / trials as f64
        };
        let sigma = if trials == 0 {
            0.0
        } else {
            (r * (1.0 - r) / trials as f64).sqrt()
        };
        if failures < WILSON_BELOW {
            let (lo, hi) = wilson(failures, trials, Z);
            RiEstimate {
                i,
                r,
                sigma,
                lo,
                hi,
                wilson: true,
            }
        } else {
            RiEstimate {
                i,
                r,
                sigma,
                lo: (r - Z * sigma).max(0.0),
                hi: (r + Z * sigma).min(1.0),
                wilson: false,
            }
        }
    }

    /// Exact value with no uncertainty.
    pub fn exact(i: u64, r: f64) -> RiEstimate {
        RiEstimate {
            i,
            r,
            sigma: 0.0,
            lo: r,
            hi: r,
            wilson: false,
        }
    }
}

pub fn default_i_max(level: usize) -> Option<u64> {
    match level {
        1 => Some(6),
        2 => Some(10),
        3 => Some(21),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiTable {
    pub level: usize,
    /// Locations in the extended rectangle.
    pub n: u64,
    /// Entries for i = 0..=i_max, in order.
    pub rows: Vec<RiEstimate>,
}

impl RiTable {
    /// Builds the table for `level` from raw rows, summing repeated rows.
    /// The `i = 0` row is optional; any other gap is an error.
    pub fn from_rows(
        level: usize,
        n: u64,
        rows: &[RiRow],
        i_max: Option<u64>,
    ) -> Result<RiTable, AnalysisError> {
        let mut acc: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
        for r in rows.iter().filter(|r| r.level == level) {
            if r.failures > r.trials {
                return Err(AnalysisError::InvalidRow(format!(
                    "{} failures in {} trials",
                    r.failures, r.trials
                )));
            }
            let e = acc.entry(r.i).or_default();
            e.0 += r.trials;
            e.1 += r.failures;
        }
        let i_max = match i_max.or(default_i_max(level)) {
            Some(m) => m,
            None => *acc
                .keys()
                .last()
                .ok_or(AnalysisError::MissingRow { level, i: 1 })?,
        };
        let mut out = Vec::with_capacity(i_max as usize + 1);
        for i in 0..=i_max {
            match acc.get(&i) {
                Some(&(_, f)) if i == 0 && f > 0 => {
                    return Err(AnalysisError::InvalidRow(format!(
                        "level {level}: {f} failures with no errors"
                    )))
                }
                // Error-free trials cannot fail, so r₀ carries no band.
                _ if i == 0 => out.push(RiEstimate::exact(0, 0.0)),
                Some(&(t, f)) => out.push(RiEstimate::from_counts(i, t, f)),
                None => {
                    return Err(AnalysisError::MissingRow {
                        level,
                        i: i as usize,
                    })
                }
            }
        }
        Ok(RiTable {
            level,
            n,
            rows: out,
        })
    }

    pub fn i_max(&self) -> u64 {
        self.rows.len() as u64 - 1
    }
}

/// ln C(n, i), by summation.
pub fn ln_binom(n: u64, i: u64) -> f64 {
    let i = i.min(n);
    let i = i.min(n - i);
    (1..=i)
        .map(|k| ((n - i + k) as f64).ln() - (k as f64).ln())
        .sum()
}

/// C(n, i) pⁱ (1 − p)^(n − i), in log space.
pub fn binom_term(n: u64, i: u64, p: f64) -> f64 {
    if i > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if i == n { 1.0 } else { 0.0 };
    }
    (ln_binom(n, i) + i as f64 * p.ln() + (n - i) as f64 * (-p).ln_1p()).exp()
}

/// Probability of more than `i_max` errors.
pub fn tail_mass(n: u64, i_max: u64, p: f64) -> f64 {
    let mean = n as f64 * p;
    let mut sum = 0.0;
    let mut i = i_max + 1;
    while i <= n {
        let t = binom_term(n, i, p);
        sum += t;
        if i as f64 > mean && t <= sum * 1e-17 {
            break;
        }
        i += 1;
    }
    sum.min(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub p: f64,
    pub pfail: f64,
    pub plo: f64,
    pub phi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Expansion {
    pub point: CurvePoint,
    /// Probability of more errors than the table covers.
    pub tail: f64,
    /// The tail exceeds the requested fraction of the estimate.
    pub truncation_warning: bool,
}

/// Truncated binomial expansion of the failure rate, with the band carried
/// linearly through the nonnegative binomial weights.
pub fn expand_binomial(table: &RiTable, p: f64, tail_fraction: f64) -> Expansion {
    let (mut f, mut lo, mut hi) = (0.0, 0.0, 0.0);
    for r in &table.rows {
        let w = binom_term(table.n, r.i, p);
        f += w * r.r;
        lo += w * r.lo;
        hi += w * r.hi;
    }
    let tail = tail_mass(table.n, table.i_max(), p);
    let point = CurvePoint {
        p,
        pfail: f.clamp(0.0, 1.0),
        plo: lo.clamp(0.0, 1.0),
        phi: hi.clamp(0.0, 1.0),
    };
    Expansion {
        point,
        tail,
        truncation_warning: tail > tail_fraction * point.pfail,
    }
}

/// `count` points spaced evenly in log p from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureCurve {
    pub level: usize,
    pub points: Vec<CurvePoint>,
}

impl FailureCurve {
    /// Expands `table` on `grid`; also returns the p values that triggered
    /// the truncation warning.
    pub fn expand(table: &RiTable, grid: &[f64], tail_fraction: f64) -> (FailureCurve, Vec<f64>) {
        let mut warn = Vec::new();
        let points = grid
            .iter()
            .map(|&p| {
                let e = expand_binomial(table, p, tail_fraction);
                if e.truncation_warning {
                    warn.push(p);
                }
                e.point
            })
            .collect();
        (
            FailureCurve {
                level: table.level,
                points,
            },
            warn,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Crossing {
    At {
        p: f64,
        lo: f64,
        hi: f64,
    },
    NoCrossing,
    /// The curves coincide, so every point is a crossing.
    NoUniqueCrossing,
}

const FLOOR: f64 = 1e-300;

fn ln_floor(x: f64) -> f64 {
    x.max(FLOOR).ln()
}

/// First p at which `f(p) − g(p)` changes sign, by linear interpolation in
/// log-log coordinates over the shared grid.
fn first_sign_change(ps: &[f64], f: &[f64], g: &[f64]) -> Option<f64> {
    let d: Vec<f64> = f
        .iter()
        .zip(g)
        .map(|(a, b)| ln_floor(*a) - ln_floor(*b))
        .collect();
    for k in 0..ps.len() {
        if d[k] == 0.0 {
            return Some(ps[k]);
        }
        if k + 1 < ps.len() && d[k].signum() != d[k + 1].signum() && d[k + 1] != 0.0 {
            let t = d[k] / (d[k] - d[k + 1]);
            let (a, b) = (ps[k].ln(), ps[k + 1].ln());
            return Some((a + t * (b - a)).exp());
        }
    }
    None
}

fn resample(curve: &FailureCurve, ps: &[f64], pick: fn(&CurvePoint) -> f64) -> Vec<f64> {
    ps.iter()
        .map(|&p| {
            let pts = &curve.points;
            let k = pts.partition_point(|q| q.p < p);
            if k < pts.len() && pts[k].p == p {
                return pick(&pts[k]);
            }
            let k = k.clamp(1, pts.len() - 1);
            let (a, b) = (&pts[k - 1], &pts[k]);
            let t = (p.ln() - a.p.ln()) / (b.p.ln() - a.p.ln());
            (ln_floor(pick(a)) + t * (ln_floor(pick(b)) - ln_floor(pick(a)))).exp()
        })
        .collect()
}

/// Where two curves cross, with an interval from crossing their bands.
pub fn crossing_estimate(a: &FailureCurve, b: &FailureCurve) -> Crossing {
    if a.points.len() < 2 || b.points.len() < 2 {
        return Crossing::NoCrossing;
    }
    let lo_p = a.points[0].p.max(b.points[0].p);
    let hi_p = a.points.last().unwrap().p.min(b.points.last().unwrap().p);
    let ps: Vec<f64> = a
        .points
        .iter()
        .map(|q| q.p)
        .filter(|&p| p >= lo_p && p <= hi_p)
        .collect();
    if ps.len() < 2 {
        return Crossing::NoCrossing;
    }
    let fa = resample(a, &ps, |q| q.pfail);
    let fb = resample(b, &ps, |q| q.pfail);
    if fa
        .iter()
        .zip(&fb)
        .all(|(x, y)| (ln_floor(*x) - ln_floor(*y)).abs() < 1e-12)
    {
        return Crossing::NoUniqueCrossing;
    }
    let Some(p) = first_sign_change(&ps, &fa, &fb) else {
        return Crossing::NoCrossing;
    };
    let a_lo = resample(a, &ps, |q| q.plo);
    let a_hi = resample(a, &ps, |q| q.phi);
    let b_lo = resample(b, &ps, |q| q.plo);
    let b_hi = resample(b, &ps, |q| q.phi);
    let mut lo = p;
    let mut hi = p;
    for (f, g) in [(&a_lo, &b_hi), (&a_hi, &b_lo)] {
        match first_sign_change(&ps, f, g) {
            Some(x) => {
                lo = lo.min(x);
                hi = hi.max(x);
            }
            // The bands overlap across the whole range.
            None => {
                lo = lo.min(ps[0]);
                hi = hi.max(*ps.last().unwrap());
            }
        }
    }
    Crossing::At { p, lo, hi }
}

/// Least-squares slope of ln P against ln p over points with p in
/// `[p_lo, p_hi]` and P > 0.
pub fn slope_estimate(curve: &FailureCurve, p_lo: f64, p_hi: f64) -> Result<f64, AnalysisError> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|q| q.p >= p_lo && q.p <= p_hi && q.pfail > 0.0)
        .map(|q| (q.p.ln(), q.pfail.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(AnalysisError::TooFewPoints {
            needed: 3,
            found: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

pub fn read_ri_csv<R: Read>(r: R) -> Result<Vec<RiRow>, AnalysisError> {
    let mut rd = csv::Reader::from_reader(r);
    rd.deserialize()
        .map(|row| row.map_err(AnalysisError::from))
        .collect()
}

/// Writes rows, with a header unless `header` is false (for appending).
pub fn write_ri_csv<W: Write>(w: W, rows: &[RiRow], header: bool) -> Result<(), AnalysisError> {
    let mut wr = csv::WriterBuilder::new().has_headers(header).from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct CurveRow {
    level: usize,
    p: f64,
    pfail: f64,
    plo: f64,
    phi: f64,
}

pub fn write_curve_csv<W: Write>(w: W, curves: &[FailureCurve]) -> Result<(), AnalysisError> {
    let mut wr = csv::Writer::from_writer(w);
    for c in curves {
        for q in &c.points {
            wr.serialize(CurveRow {
                level: c.level,
                p: q.p,
                pfail: q.pfail,
                plo: q.plo,
                phi: q.phi,
            })?;
        }
    }
    wr.flush()?;
    Ok(())
}

pub fn read_curve_csv<R: Read>(r: R) -> Result<Vec<FailureCurve>, AnalysisError> {
    let mut rd = csv::Reader::from_reader(r);
    let mut by_level: BTreeMap<usize, Vec<CurvePoint>> = BTreeMap::new();
    for row in rd.deserialize() {
        let row: CurveRow = row?;
        by_level.entry(row.level).or_default().push(CurvePoint {
            p: row.p,
            pfail: row.pfail,
            plo: row.plo,
            phi: row.phi,
        });
    }
    Ok(by_level
        .into_iter()
        .map(|(level, mut points)| {
            points.sort_by(|a, b| a.p.total_cmp(&b.p));
            FailureCurve { level, points }
        })
        .collect())
}

/// Git blob hash of `data`.
pub fn git_blob_sha1(data: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", data.len()).as_bytes());
    h.update(data);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Content hash of every level-1 template in the text circuit format.
pub fn template_hashes() -> BTreeMap<String, String> {
    templates()
        .into_iter()
        .map(|t| {
            (
                t.kind.to_string(),
                git_blob_sha1(t.circuit.serialize().as_bytes()),
            )
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub workers: usize,
    pub template_hashes: BTreeMap<String, String>,
    pub started_unix: u64,
    pub elapsed_secs: f64,
    pub totals: serde_json::Value,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: serde_json::Value,
        seed: Option<u64>,
        workers: usize,
    ) -> RunManifest {
        let started_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            command: command.to_string(),
            config,
            seed,
            workers,
            template_hashes: template_hashes(),
            started_unix,
            elapsed_secs: 0.0,
            totals: serde_json::Value::Null,
        }
    }

    pub fn write<W: Write>(&self, w: W) -> Result<(), AnalysisError> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read<R: Read>(r: R) -> Result<RunManifest, AnalysisError> {
        Ok(serde_json::from_reader(r)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::RectKind;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};

    fn table(n: u64, r: &[f64]) -> RiTable {
        RiTable {
            level: 1,
            n,
            rows: r
                .iter()
                .enumerate()
                .map(|(i, &x)| RiEstimate::exact(i as u64, x))
                .collect(),
        }
    }

    #[test]
    fn two_locations_any_error_fails() {
        let t = table(2, &[0.0, 1.0, 1.0]);
        for p in [1e-6, 0.01, 0.3, 0.9] {
            let e = expand_binomial(&t, p, 0.01);
            assert!((e.point.pfail - (2.0 * p - p * p)).abs() < 1e-14);
            assert_eq!(e.tail, 0.0);
        }
    }

    #[test]
    fn zero_table_gives_zero() {
        let t = table(172, &[0.0; 7]);
        assert_eq!(expand_binomial(&t, 1e-3, 0.01).point.pfail, 0.0);
    }

    #[test]
    fn band_collapses_without_uncertainty() {
        let t = table(50, &[0.0, 0.1, 0.3, 0.5]);
        let e = expand_binomial(&t, 1e-3, 0.01).point;
        assert_eq!(e.plo, e.pfail);
        assert_eq!(e.phi, e.pfail);
    }

    fn rational_expansion(n: u64, r: &[BigRational], p: &BigRational) -> BigRational {
        let one = BigRational::one();
        let q = &one - p;
        let mut sum = BigRational::zero();
        for (i, ri) in r.iter().enumerate() {
            let i = i as u64;
            let mut c = BigInt::one();
            for k in 0..i {
                c = c * BigInt::from(n - k) / BigInt::from(k + 1);
            }
            let mut term = BigRational::from_integer(c);
            for _ in 0..i {
                term *= p;
            }
            for _ in 0..n - i {
                term *= &q;
            }
            sum += term * ri;
        }
        sum
    }

    #[test]
    fn matches_rational_evaluation() {
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 33) % 1000
        };
        for n in [1u64, 5, 12, 30] {
            for &(num, den) in &[(1i64, 1000i64), (3, 100), (1, 7), (1, 100000)] {
                let i_max = n.min(8);
                let r: Vec<BigRational> = (0..=i_max)
                    .map(|i| {
                        if i == 0 {
                            BigRational::zero()
                        } else {
                            BigRational::new(next().into(), 1000.into())
                        }
                    })
                    .collect();
                let p = BigRational::new(num.into(), den.into());
                let exact = rational_expansion(n, &r, &p).to_f64().unwrap();
                let t = table(
                    n,
                    &r.iter().map(|x| x.to_f64().unwrap()).collect::<Vec<_>>(),
                );
                let got = expand_binomial(&t, num as f64 / den as f64, 0.01)
                    .point
                    .pfail;
                if exact == 0.0 {
                    assert_eq!(got, 0.0);
                } else {
                    assert!(
                        ((got - exact) / exact).abs() < 1e-12,
                        "n={n} p={num}/{den}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn monotone_in_p_and_r() {
        let t = table(172, &[0.0, 0.3, 0.5, 0.6, 0.7, 0.8, 0.9]);
        let mut last = 0.0;
        for p in log_grid(1e-7, 1e-3, 40) {
            let f = expand_binomial(&t, p, 0.01).point.pfail;
            assert!(f >= last);
            last = f;
        }
        let bigger = table(172, &[0.0, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]);
        assert!(
            expand_binomial(&bigger, 1e-4, 0.01).point.pfail
                > expand_binomial(&t, 1e-4, 0.01).point.pfail
        );
    }

    #[test]
    fn synthetic_crossing() {
        let grid = log_grid(1e-7, 1e-3, 81);
        let mk = |level, f: &dyn Fn(f64) -> f64| FailureCurve {
            level,
            points: grid
                .iter()
                .map(|&p| CurvePoint {
                    p,
                    pfail: f(p),
                    plo: f(p) * 0.9,
                    phi: f(p) * 1.1,
                })
                .collect(),
        };
        let a = mk(3, &|p| p);
        let b = mk(4, &|p| 1e5 * p * p);
        match crossing_estimate(&a, &b) {
            Crossing::At { p, lo, hi } => {
                assert!((p / 1e-5 - 1.0).abs() < 1e-6, "{p}");
                assert!(lo < p && p < hi);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(crossing_estimate(&a, &a), Crossing::NoUniqueCrossing);
        let c = mk(4, &|p| 10.0 * p);
        assert_eq!(crossing_estimate(&a, &c), Crossing::NoCrossing);
    }

    #[test]
    fn slopes_follow_leading_order() {
        let grid = log_grid(1e-8, 1e-6, 20);
        let one = FailureCurve::expand(&table(172, &[0.0, 0.4, 0.6]), &grid, 0.01).0;
        assert!((slope_estimate(&one, 1e-8, 1e-6).unwrap() - 1.0).abs() < 0.01);
        let two = FailureCurve::expand(&table(1000, &[0.0, 0.0, 0.01, 0.1]), &grid, 0.01).0;
        assert!((slope_estimate(&two, 1e-8, 1e-6).unwrap() - 2.0).abs() < 0.01);
        assert!(slope_estimate(&one, 1.0, 2.0).is_err());
    }

    #[test]
    fn wilson_is_used_for_rare_failures() {
        let e = RiEstimate::from_counts(1, 100_000, 0);
        assert!(e.wilson);
        assert_eq!(e.lo, 0.0);
        assert!(e.hi > 0.0 && e.hi < 1e-4);
        let e = RiEstimate::from_counts(1, 1000, 500);
        assert!(!e.wilson);
        assert!((e.hi - e.lo - 4.0 * e.sigma).abs() < 1e-12);
    }

    #[test]
    fn missing_rows_are_named() {
        let rows = [
            RiRow {
                level: 1,
                i: 1,
                trials: 10,
                failures: 5,
            },
            RiRow {
                level: 1,
                i: 3,
                trials: 10,
                failures: 5,
            },
        ];
        match RiTable::from_rows(1, 204, &rows, Some(3)) {
            Err(AnalysisError::MissingRow { level: 1, i: 2 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn repeated_rows_are_pooled() {
        let rows = [
            RiRow {
                level: 2,
                i: 1,
                trials: 10,
                failures: 1,
            },
            RiRow {
                level: 2,
                i: 1,
                trials: 30,
                failures: 3,
            },
        ];
        let t = RiTable::from_rows(2, 100, &rows, Some(1)).unwrap();
        assert_eq!(t.rows[0].r, 0.0);
        assert!((t.rows[1].r - 0.1).abs() < 1e-15);
    }

    #[test]
    fn truncation_warning_fires_at_large_p() {
        let t = table(864_496, &[0.0; 22]);
        let mut t = t;
        t.rows[2].r = 1e-3;
        assert!(!expand_binomial(&t, 1e-7, 0.01).truncation_warning);
        assert!(expand_binomial(&t, 1e-4, 0.01).truncation_warning);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![RiRow {
            level: 1,
            i: 2,
            trials: 100,
            failures: 7,
        }];
        let mut buf = Vec::new();
        write_ri_csv(&mut buf, &rows, true).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "level,i,trials,failures\n1,2,100,7\n"
        );
        assert_eq!(read_ri_csv(&buf[..]).unwrap(), rows);

        let c = FailureCurve {
            level: 3,
            points: vec![CurvePoint {
                p: 1e-5,
                pfail: 1e-6,
                plo: 5e-7,
                phi: 2e-6,
            }],
        };
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, std::slice::from_ref(&c)).unwrap();
        assert!(String::from_utf8(buf.clone())
            .unwrap()
            .starts_with("level,p,pfail,plo,phi\n"));
        assert_eq!(read_curve_csv(&buf[..]).unwrap(), vec![c]);
    }

    #[test]
    fn blob_hash_matches_git() {
        // `printf 'hello\n' | git hash-object --stdin`
        assert_eq!(
            git_blob_sha1(b"hello\n"),
            "ce013625030ba8dba906f756967f9e9ca394464a"
        );
        assert_eq!(template_hashes().len(), RectKind::ALL.len());
    }

    #[test]
    fn ln_binom_small_values() {
        assert!((ln_binom(10, 3) - 120f64.ln()).abs() < 1e-12);
        assert_eq!(ln_binom(5, 0), 0.0);
        assert!((ln_binom(5, 5)).abs() < 1e-12);
    }
}
