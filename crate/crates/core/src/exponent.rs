//! Verification of `E(A) <= |A|^p` over every (or a sample of the) subsets
//! of a small cube, the sets attaining equality, and a level-set witness
//! search on `{0,...,n}^d`.

use num_bigint::BigInt;
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::certified::{integer_le_power, Certified, Exponent, Interval, LogExponent, Verdict};
use crate::energy::{energy, ln_bigint, EnergyKind};
use crate::error::{Error, Result};
use crate::lattice::PointSet;

/// Largest cube (in points) swept exhaustively.
pub const EXHAUSTIVE_POINT_LIMIT: usize = 24;

/// Masks per work unit; fixed so results never depend on the thread count.
const CHUNK: u64 = 1 << 12;

/// Ratios closer than this (relative) count as tied; ties prefer the larger
/// set, then the lower mask.
const RATIO_TIE: f64 = 1e-12;

/// Stored violations are capped; all are counted.
const MAX_LISTED: usize = 100;

/// `p_k = log2 binom(2k, k)`.
pub fn p_k(k: u32) -> LogExponent {
    LogExponent::log2(binomial(BigInt::from(2 * k), BigInt::from(k)))
}

/// `q_k = log2(2^k + 2)`.
pub fn q_k(k: u32) -> LogExponent {
    LogExponent::log2((BigInt::one() << k) + 2)
}

pub fn sharp_exponent(kind: EnergyKind, k: u32) -> LogExponent {
    match kind {
        EnergyKind::Additive => p_k(k),
        EnergyKind::Higher => q_k(k),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentTarget {
    pub kind: EnergyKind,
    pub k: u32,
    pub exponent: Exponent,
    #[serde(serialize_with = "crate::report::sig17")]
    pub exponent_value: f64,
}

impl ExponentTarget {
    /// The sharp exponent for `{0,1}^d`: `p_k` or `q_k`.
    pub fn sharp(kind: EnergyKind, k: u32) -> Self {
        Self::new(kind, k, Exponent::Log(sharp_exponent(kind, k)))
    }

    pub fn new(kind: EnergyKind, k: u32, exponent: Exponent) -> Self {
        ExponentTarget {
            kind,
            k,
            exponent_value: exponent.to_f64(),
            exponent,
        }
    }

    /// A user-supplied exponent, taken as the exact value of the double.
    pub fn custom(kind: EnergyKind, k: u32, exponent: f64) -> Result<Self> {
        let e = Exponent::from_f64(exponent)
            .ok_or_else(|| Error::out_of_range("exponent", format!("{exponent} is not finite")))?;
        Ok(Self::new(kind, k, e))
    }

    /// `p_k < 2k - 1`, resp. `k < q_k < k + 1`, by exact integer comparison.
    pub fn sharp_invariants_hold(kind: EnergyKind, k: u32) -> bool {
        let two = BigInt::from(2);
        let m = sharp_exponent(kind, k).arg;
        match kind {
            EnergyKind::Additive => m < num_traits::pow(two, 2 * k as usize - 1),
            EnergyKind::Higher => {
                num_traits::pow(two.clone(), k as usize) < m
                    && m < num_traits::pow(two, k as usize + 1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SweepMode {
    Exhaustive,
    Sampled { samples: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetRecord {
    /// Bit `i` selects the `i`-th cube point in lexicographic order.
    pub mask: u64,
    pub size: usize,
    #[serde(serialize_with = "crate::report::decimal")]
    pub energy: BigInt,
    #[serde(serialize_with = "crate::report::sig17_opt")]
    pub ratio: Option<f64>,
    pub verdict: Verdict,
    #[serde(skip)]
    pub precision: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub target: ExponentTarget,
    pub n: u32,
    pub d: usize,
    pub sweep: SweepMode,
    pub subsets_checked: u64,
    pub holds: u64,
    pub equalities: u64,
    pub violation_count: u64,
    pub inconclusive_count: u64,
    /// Max of `ln E / ln |A|` over checked subsets with `|A| >= 2`.
    #[serde(serialize_with = "crate::report::sig17_opt")]
    pub max_ratio: Option<f64>,
    pub witness: Option<SubsetRecord>,
    pub witness_points: Option<Vec<Vec<i64>>>,
    /// First violations in mask order.
    pub violations: Vec<SubsetRecord>,
    pub inconclusive: Vec<SubsetRecord>,
    pub max_precision_used: u32,
    /// Every checked subset, when requested.
    #[serde(skip)]
    pub rows: Vec<SubsetRecord>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0 && self.inconclusive_count == 0
    }
}

#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Keep one row per subset for CSV output.
    pub collect_rows: bool,
}

/// Partial result over a run of masks; merged in chunk order.
#[derive(Default)]
struct Tally {
    checked: u64,
    holds: u64,
    equalities: u64,
    violation_count: u64,
    inconclusive_count: u64,
    best: Option<SubsetRecord>,
    violations: Vec<SubsetRecord>,
    inconclusive: Vec<SubsetRecord>,
    max_precision: u32,
    rows: Vec<SubsetRecord>,
}

fn better(a: &SubsetRecord, b: &SubsetRecord) -> bool {
    let (ra, rb) = (a.ratio.unwrap(), b.ratio.unwrap());
    let tol = RATIO_TIE * ra.abs().max(rb.abs());
    if (ra - rb).abs() > tol {
        return ra > rb;
    }
    (a.size, std::cmp::Reverse(a.mask)) > (b.size, std::cmp::Reverse(b.mask))
}

impl Tally {
    fn push(&mut self, rec: SubsetRecord, keep_row: bool) {
        self.checked += 1;
        self.max_precision = self.max_precision.max(rec.precision);
        match rec.verdict {
            Verdict::Holds => self.holds += 1,
            Verdict::Equality => self.equalities += 1,
            Verdict::Fails => {
                self.violation_count += 1;
                if self.violations.len() < MAX_LISTED {
                    self.violations.push(rec.clone());
                }
            }
            Verdict::Inconclusive => {
                self.inconclusive_count += 1;
                if self.inconclusive.len() < MAX_LISTED {
                    self.inconclusive.push(rec.clone());
                }
            }
        }
        if rec.ratio.is_some() && self.best.as_ref().is_none_or(|b| better(&rec, b)) {
            self.best = Some(rec.clone());
        }
        if keep_row {
            self.rows.push(rec);
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checked += other.checked;
        self.holds += other.holds;
        self.equalities += other.equalities;
        self.violation_count += other.violation_count;
        self.inconclusive_count += other.inconclusive_count;
        self.max_precision = self.max_precision.max(other.max_precision);
        for v in other.violations {
            if self.violations.len() < MAX_LISTED {
                self.violations.push(v);
            }
        }
        for v in other.inconclusive {
            if self.inconclusive.len() < MAX_LISTED {
                self.inconclusive.push(v);
            }
        }
        if let Some(b) = other.best {
            if self.best.as_ref().is_none_or(|cur| better(&b, cur)) {
                self.best = Some(b);
            }
        }
        self.rows.extend(other.rows);
        self
    }
}

/// Decides `E <= |A|^e` for each set size, caching the 64-bit enclosure of
/// `|A|^e` and falling back to full escalation only near the boundary.
struct BoundTable {
    exponent: Exponent,
    fast: Vec<Interval>,
}

impl BoundTable {
    fn new(exponent: &Exponent, max_size: usize) -> Self {
        let fast = (0..=max_size)
            .map(|s| exponent.pow_of(64, &BigRational::from_integer(BigInt::from(s))))
            .collect();
        BoundTable {
            exponent: exponent.clone(),
            fast,
        }
    }

    fn decide(&self, value: &BigInt, size: usize) -> Certified {
        let bound = &self.fast[size];
        let lhs = Interval::from_integer(64, value);
        if lhs.certainly_lt(bound) {
            return Certified {
                verdict: Verdict::Holds,
                precision: 64,
            };
        }
        if lhs.certainly_gt(bound) {
            return Certified {
                verdict: Verdict::Fails,
                precision: 64,
            };
        }
        let base = BigRational::from_integer(BigInt::from(size));
        integer_le_power(value, &base, &self.exponent)
    }
}

fn check_subset(
    cube: &PointSet,
    mask: u64,
    target: &ExponentTarget,
    table: &BoundTable,
) -> Result<SubsetRecord> {
    let a = cube.subset_by_mask(mask);
    let e = energy(&a, target.k, target.kind)?.value;
    let c = table.decide(&e, a.len());
    let ratio = (a.len() >= 2).then(|| ln_bigint(&e) / (a.len() as f64).ln());
    Ok(SubsetRecord {
        mask,
        size: a.len(),
        energy: e,
        ratio,
        verdict: c.verdict,
        precision: c.precision,
    })
}

/// Checks `E_kind,k(A) <= |A|^exponent` over nonempty subsets of
/// `{0,...,n}^d`: all of them when the cube has at most
/// [`EXHAUSTIVE_POINT_LIMIT`] points, otherwise requires sampled mode.
pub fn sweep_cube(
    n: u32,
    d: usize,
    target: &ExponentTarget,
    mode: &SweepMode,
    options: &SweepOptions,
) -> Result<VerificationReport> {
    if n == 0 {
        return Err(Error::out_of_range("n", "cube side needs n >= 1"));
    }
    let cube = PointSet::cube(n, d);
    let points = cube.len();
    let table = BoundTable::new(&target.exponent, points);
    let tally = match mode {
        SweepMode::Exhaustive => {
            if points > EXHAUSTIVE_POINT_LIMIT {
                return Err(Error::BudgetExceeded(format!(
                    "{points} points means 2^{points} subsets; exhaustive sweeps stop at 2^{EXHAUSTIVE_POINT_LIMIT}"
                )));
            }
            let total = 1u64 << points;
            let chunks = total.div_ceil(CHUNK);
            let parts: Vec<Result<Tally>> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut t = Tally::default();
                    for mask in (c * CHUNK).max(1)..((c + 1) * CHUNK).min(total) {
                        t.push(
                            check_subset(&cube, mask, target, &table)?,
                            options.collect_rows,
                        );
                    }
                    Ok(t)
                })
                .collect();
            merge_all(parts)?
        }
        SweepMode::Sampled { samples, seed } => {
            if points > 64 {
                return Err(Error::BudgetExceeded(format!(
                    "sampling supports cubes of at most 64 points, not {points}"
                )));
            }
            let chunks = samples.div_ceil(CHUNK);
            let parts: Vec<Result<Tally>> = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    rng.set_stream(c);
                    let mut t = Tally::default();
                    let here = CHUNK.min(samples - c * CHUNK);
                    for _ in 0..here {
                        let mask = loop {
                            let m = if points == 64 {
                                rng.gen::<u64>()
                            } else {
                                rng.gen::<u64>() & ((1u64 << points) - 1)
                            };
                            if m != 0 {
                                break m;
                            }
                        };
                        t.push(
                            check_subset(&cube, mask, target, &table)?,
                            options.collect_rows,
                        );
                    }
                    Ok(t)
                })
                .collect();
            merge_all(parts)?
        }
    };
    let witness_points = tally
        .best
        .as_ref()
        .map(|b| rows_of(&cube.subset_by_mask(b.mask)));
    Ok(VerificationReport {
        target: target.clone(),
        n,
        d,
        sweep: mode.clone(),
        subsets_checked: tally.checked,
        holds: tally.holds,
        equalities: tally.equalities,
        violation_count: tally.violation_count,
        inconclusive_count: tally.inconclusive_count,
        max_ratio: tally.best.as_ref().and_then(|b| b.ratio),
        witness: tally.best,
        witness_points,
        violations: tally.violations,
        inconclusive: tally.inconclusive,
        max_precision_used: tally.max_precision,
        rows: tally.rows,
    })
}

fn merge_all(parts: Vec<Result<Tally>>) -> Result<Tally> {
    let mut acc = Tally::default();
    for p in parts {
        acc = acc.merge(p?);
    }
    Ok(acc)
}

pub fn rows_of(set: &PointSet) -> Vec<Vec<i64>> {
    set.iter().map(|p| p.coords().to_vec()).collect()
}

/// Subsets of `{0,1}^d` with `E = |A|^exponent` exactly, for the sharp
/// exponent of `kind`.
pub fn equality_witnesses(d: usize, k: u32, kind: EnergyKind) -> Result<Vec<PointSet>> {
    let target = ExponentTarget::sharp(kind, k);
    let report = sweep_cube(
        1,
        d,
        &target,
        &SweepMode::Exhaustive,
        &SweepOptions { collect_rows: true },
    )?;
    let cube = PointSet::cube(1, d);
    Ok(report
        .rows
        .iter()
        .filter(|r| r.verdict == Verdict::Equality)
        .map(|r| cube.subset_by_mask(r.mask))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelCandidate {
    pub d: usize,
    /// The level `theta` as an exact fraction.
    pub theta: String,
    pub size: usize,
    #[serde(serialize_with = "crate::report::decimal")]
    pub energy: BigInt,
    #[serde(serialize_with = "crate::report::sig17_opt")]
    pub ratio: Option<f64>,
    /// Comparison of `E` with `|A|^threshold`: `fails` means the ratio
    /// exceeds the threshold.
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessSearchReport {
    pub n: u32,
    pub k: u32,
    pub d_max: usize,
    pub threshold: Exponent,
    #[serde(serialize_with = "crate::report::sig17")]
    pub threshold_value: f64,
    pub letter_weights: Vec<String>,
    /// Best candidate for each `d`.
    pub best_per_d: Vec<LevelCandidate>,
    pub best: Option<LevelCandidate>,
    pub best_points: Option<Vec<Vec<i64>>>,
    /// Smallest `d` with a candidate certified above the threshold.
    pub first_crossing_d: Option<usize>,
    pub crossed: bool,
    pub summary: String,
}

/// Default letter weights for the search on `{0,1,2}`: `(1/2, 1, 1/2)`.
pub fn default_letter_weights(n: u32) -> Result<Vec<BigRational>> {
    if n != 2 {
        return Err(Error::Precondition(format!(
            "no default letter weights for n = {n}; pass them explicitly"
        )));
    }
    Ok(vec![
        BigRational::new(1.into(), 2.into()),
        BigRational::one(),
        BigRational::new(1.into(), 2.into()),
    ])
}

/// Energy budget of the level-set search, in cube points.
pub const WITNESS_POINT_LIMIT: usize = 100_000;

/// Sweeps the superlevel sets `{x : w(x_1)...w(x_d) >= theta}` of a tensor
/// power weight on `{0,...,n}^d` for `d = 1..=d_max`, computing `E_k`
/// exactly and comparing `ln E / ln |A|` with `threshold`.
pub fn witness_search_general_cube(
    n: u32,
    d_max: usize,
    k: u32,
    letter_weights: &[BigRational],
    threshold: &Exponent,
) -> Result<WitnessSearchReport> {
    if n < 1 {
        return Err(Error::out_of_range("n", "alphabet {0..n} needs n >= 1"));
    }
    if letter_weights.len() != n as usize + 1 {
        return Err(Error::Precondition(format!(
            "{} letter weights for an alphabet of {} letters",
            letter_weights.len(),
            n + 1
        )));
    }
    if letter_weights.iter().any(|w| *w < BigRational::zero()) {
        return Err(Error::out_of_range(
            "letter weight",
            "weights must be nonnegative",
        ));
    }
    let mut best_per_d = Vec::new();
    let mut best: Option<(LevelCandidate, PointSet)> = None;
    let mut first_crossing_d = None;
    for d in 1..=d_max {
        let size = (n as usize + 1).checked_pow(d as u32);
        if size.is_none_or(|s| s > WITNESS_POINT_LIMIT) {
            return Err(Error::BudgetExceeded(format!(
                "{{0..{n}}}^{d} exceeds {WITNESS_POINT_LIMIT} points"
            )));
        }
        let cube = PointSet::cube(n, d);
        let weight_of = |coords: &[i64]| -> BigRational {
            coords.iter().fold(BigRational::one(), |acc, &c| {
                acc * &letter_weights[c as usize]
            })
        };
        let weighted: Vec<BigRational> = cube.iter().map(|p| weight_of(p.coords())).collect();
        let mut levels: Vec<BigRational> =
            weighted.iter().filter(|w| !w.is_zero()).cloned().collect();
        levels.sort();
        levels.dedup();
        levels.reverse();
        let candidates: Vec<Result<(LevelCandidate, PointSet)>> = levels
            .par_iter()
            .map(|theta| {
                let mut it = weighted.iter();
                let a = cube.filter(|_| it.next().unwrap() >= theta);
                let e = energy(&a, k, EnergyKind::Additive)?.value;
                let base = BigRational::from_integer(BigInt::from(a.len()));
                let verdict = if a.len() >= 2 {
                    integer_le_power(&e, &base, threshold).verdict
                } else {
                    Verdict::Equality
                };
                let ratio = (a.len() >= 2).then(|| ln_bigint(&e) / (a.len() as f64).ln());
                Ok((
                    LevelCandidate {
                        d,
                        theta: theta.to_string(),
                        size: a.len(),
                        energy: e,
                        ratio,
                        verdict,
                    },
                    a,
                ))
            })
            .collect();
        let mut best_here: Option<(LevelCandidate, PointSet)> = None;
        for c in candidates {
            let c = c?;
            if c.0.ratio.is_none() {
                continue;
            }
            if best_here.as_ref().is_none_or(|b| c.0.ratio > b.0.ratio) {
                best_here = Some(c);
            }
        }
        if let Some((cand, set)) = best_here {
            if cand.verdict == Verdict::Fails && first_crossing_d.is_none() {
                first_crossing_d = Some(d);
            }
            if best.as_ref().is_none_or(|b| cand.ratio > b.0.ratio) {
                best = Some((cand.clone(), set));
            }
            best_per_d.push(cand);
        }
    }
    let threshold_value = threshold.to_f64();
    let crossed = first_crossing_d.is_some();
    let summary = match (&best, first_crossing_d) {
        (Some((b, _)), Some(d0)) => format!(
            "threshold {threshold_value:.6} crossed first at d = {d0}; best ratio {:.6} at d = {} (|A| = {})",
            b.ratio.unwrap(),
            b.d,
            b.size
        ),
        (Some((b, _)), None) => format!(
            "threshold {threshold_value:.6} not crossed for d <= {d_max}; best ratio {:.6} at d = {} (|A| = {})",
            b.ratio.unwrap(),
            b.d,
            b.size
        ),
        (None, _) => format!("no candidate with at least two points for d <= {d_max}"),
    };
    Ok(WitnessSearchReport {
        n,
        k,
        d_max,
        threshold: threshold.clone(),
        threshold_value,
        letter_weights: letter_weights.iter().map(|w| w.to_string()).collect(),
        best_points: best.as_ref().map(|(_, s)| rows_of(s)),
        best: best.map(|(c, _)| c),
        best_per_d,
        first_crossing_d,
        crossed,
        summary,
    })
}
