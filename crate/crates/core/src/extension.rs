//! Weighted energies and the discrete extension constants
//! `DE(A) = sup_f E_k(f)^(1/2k) / ||f||_q` (all weights) and its 0/1
//! restriction, with the tensorisation and dyadic comparison checks.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::certified::{certify_le, Interval, Verdict};
use crate::energy::interval_energy_closed_form;
use crate::error::{Error, Result};
use crate::lattice::{Point, PointSet, Weight, WeightFn};

/// `sum_s (sum_{x_1 + ... + x_k = s} f(x_1)...f(x_k))^2`.
pub fn weighted_energy<W: Weight>(f: &WeightFn<W>, k: u32) -> Result<W> {
    if k < 2 {
        return Err(Error::out_of_range("k", format!("{k} (need k >= 2)")));
    }
    let base: BTreeMap<Point, W> = f.iter().map(|(p, w)| (p.clone(), w.clone())).collect();
    let mut acc = base.clone();
    for _ in 1..k {
        let mut next: BTreeMap<Point, W> = BTreeMap::new();
        for (x, u) in &acc {
            for (y, v) in &base {
                let e = next.entry(x.add(y)).or_insert_with(W::zero);
                *e = e.clone() + u.clone() * v.clone();
            }
        }
        acc = next;
    }
    Ok(acc.into_values().fold(W::zero(), |s, v| s + v.clone() * v))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DEProblem {
    #[serde(serialize_with = "ser_rows")]
    pub alphabet: PointSet,
    pub k: u32,
    #[serde(serialize_with = "crate::report::sig17")]
    pub q: f64,
}

fn ser_rows<S: serde::Serializer>(set: &PointSet, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(set.iter().map(|p| p.coords().to_vec()))
}

impl DEProblem {
    /// Requires `0 < q <= 2k`, i.e. `p = 2k/q >= 1`.
    pub fn new(alphabet: PointSet, k: u32, q: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::out_of_range("k", "need k >= 1"));
        }
        if !(q > 0.0 && q <= 2.0 * k as f64) {
            return Err(Error::out_of_range(
                "q",
                format!("{q} not in (0, {}]", 2 * k),
            ));
        }
        if alphabet.is_empty() {
            return Err(Error::Precondition("empty alphabet".into()));
        }
        Ok(DEProblem { alphabet, k, q })
    }

    /// The problem whose ratio `<= 1` is equivalent to the energy exponent
    /// `p`: `q = 2k / p`.
    pub fn for_exponent(alphabet: PointSet, k: u32, p: f64) -> Result<Self> {
        Self::new(alphabet, k, 2.0 * k as f64 / p)
    }

    pub fn p(&self) -> f64 {
        2.0 * self.k as f64 / self.q
    }
}

/// `E_k(f)^(1/2k) / ||f||_q`.
pub fn de_ratio(f: &WeightFn<f64>, problem: &DEProblem) -> Result<f64> {
    if f.is_empty() {
        return Err(Error::ZeroFunction);
    }
    if let Some((p, _)) = f.iter().find(|(p, _)| !problem.alphabet.contains(p)) {
        return Err(Error::Precondition(format!(
            "{p} lies outside the alphabet"
        )));
    }
    let e = weighted_energy(f, problem.k)?;
    Ok(e.powf(1.0 / (2.0 * problem.k as f64)) / f.lq_norm(problem.q))
}

/// Precompiled `k`-fold sums over an indexed alphabet for fast `f64`
/// evaluation.
struct Kernel {
    m: usize,
    k: usize,
    /// `(sum index, alphabet indices)` for every ordered `k`-tuple.
    tuples: Vec<(usize, Vec<usize>)>,
    sums: usize,
}

/// Largest number of ordered `k`-tuples the optimiser will precompile.
const KERNEL_TUPLE_LIMIT: usize = 10_000_000;

impl Kernel {
    fn new(alphabet: &PointSet, k: u32) -> Result<Self> {
        let m = alphabet.len();
        let k = k as usize;
        let count = m.checked_pow(k as u32).filter(|&c| c <= KERNEL_TUPLE_LIMIT);
        let Some(count) = count else {
            return Err(Error::BudgetExceeded(format!(
                "{m}^{k} tuples exceeds the optimiser limit {KERNEL_TUPLE_LIMIT}"
            )));
        };
        let pts = alphabet.points();
        let mut index: HashMap<Point, usize> = HashMap::new();
        let mut tuples = Vec::with_capacity(count);
        let mut idx = vec![0usize; k];
        loop {
            let s = idx[1..]
                .iter()
                .fold(pts[idx[0]].clone(), |acc, &j| acc.add(&pts[j]));
            let next = index.len();
            let si = *index.entry(s).or_insert(next);
            tuples.push((si, idx.clone()));
            let mut pos = 0;
            while pos < k {
                idx[pos] += 1;
                if idx[pos] < m {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == k {
                break;
            }
        }
        Ok(Kernel {
            m,
            k,
            sums: index.len(),
            tuples,
        })
    }

    fn energy(&self, w: &[f64], buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.resize(self.sums, 0.0);
        for (s, t) in &self.tuples {
            buf[*s] += t.iter().map(|&j| w[j]).product::<f64>();
        }
        buf.iter().map(|v| v * v).sum()
    }

    /// `ln(ratio)`.
    fn log_ratio(&self, w: &[f64], q: f64, buf: &mut Vec<f64>) -> f64 {
        let e = self.energy(w, buf);
        let norm: f64 = w.iter().map(|x| x.powf(q)).sum();
        if e <= 0.0 || norm <= 0.0 {
            return f64::NEG_INFINITY;
        }
        e.ln() / (2 * self.k) as f64 - norm.ln() / q
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessEntry {
    pub point: Vec<i64>,
    #[serde(serialize_with = "crate::report::sig17")]
    pub weight: f64,
}

fn witness_entries(f: &WeightFn<f64>) -> Vec<WitnessEntry> {
    f.iter()
        .map(|(p, w)| WitnessEntry {
            point: p.coords().to_vec(),
            weight: *w,
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct OptimizerOptions {
    pub starts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    /// Extra starting weights, one value per alphabet point in order.
    pub initial: Vec<Vec<f64>>,
    /// Enumerate 0/1 witnesses exhaustively up to this alphabet size.
    pub exhaustive_limit: usize,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            starts: 32,
            seed: 0,
            max_sweeps: 200,
            initial: Vec::new(),
            exhaustive_limit: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DEEstimate {
    pub problem: DEProblem,
    /// Best ratio over all witnesses found; a true lower bound for `DE`.
    #[serde(serialize_with = "crate::report::sig17")]
    pub lower_bound: f64,
    #[serde(serialize_with = "ser_witness")]
    pub witness: WeightFn<f64>,
    /// Best 0/1 witness ratio (exact `tilde-DE` when enumerated).
    #[serde(serialize_with = "crate::report::sig17")]
    pub restricted_lower_bound: f64,
    pub restricted_witness: Vec<Vec<i64>>,
    pub restricted_exhaustive: bool,
    /// Best ratio of every start, in start order.
    #[serde(serialize_with = "crate::report::sig17_vec")]
    pub start_ratios: Vec<f64>,
    pub starts: usize,
    pub seed: u64,
    pub sweeps: usize,
    pub converged: bool,
    pub assumption: &'static str,
}

fn ser_witness<S: serde::Serializer>(
    f: &WeightFn<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&witness_entries(f), s)
}

pub const NONNEGATIVE_ASSUMPTION: &str =
    "weights restricted to nonnegative values; the optimum over real weights is assumed to be attained there";

const LOG_FLOOR: f64 = -40.0;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Coordinate ascent on log-weights (sup-normalised to 1): per coordinate a
/// coarse scan of `[LOG_FLOOR, 0]` then golden-section refinement.
fn ascend(
    kernel: &Kernel,
    q: f64,
    start: &[f64],
    max_sweeps: usize,
) -> (Vec<f64>, f64, usize, bool) {
    let mut buf = Vec::new();
    let mut u: Vec<f64> = start
        .iter()
        .map(|w| if *w > 0.0 { w.ln() } else { LOG_FLOOR })
        .collect();
    normalise(&mut u);
    let eval = |u: &[f64], buf: &mut Vec<f64>| {
        let w: Vec<f64> = u.iter().map(|x| x.exp()).collect();
        kernel.log_ratio(&w, q, buf)
    };
    let mut best = eval(&u, &mut buf);
    for sweep in 0..max_sweeps {
        let before = best;
        for i in 0..kernel.m {
            let mut probe = u.clone();
            let mut at = |x: f64, buf: &mut Vec<f64>| {
                probe[i] = x;
                eval(&probe, buf)
            };
            const SCAN: usize = 24;
            let step = -LOG_FLOOR / SCAN as f64;
            let mut bx = u[i];
            let mut bv = best;
            for j in 0..=SCAN {
                let x = LOG_FLOOR + j as f64 * step;
                let v = at(x, &mut buf);
                if v > bv {
                    bx = x;
                    bv = v;
                }
            }
            let (mut lo, mut hi) = ((bx - step).max(LOG_FLOOR), (bx + step).min(0.0));
            let mut x1 = hi - GOLDEN * (hi - lo);
            let mut x2 = lo + GOLDEN * (hi - lo);
            let mut f1 = at(x1, &mut buf);
            let mut f2 = at(x2, &mut buf);
            while hi - lo > 1e-11 {
                if f1 < f2 {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + GOLDEN * (hi - lo);
                    f2 = at(x2, &mut buf);
                } else {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - GOLDEN * (hi - lo);
                    f1 = at(x1, &mut buf);
                }
            }
            for (x, v) in [(x1, f1), (x2, f2)] {
                if v > bv {
                    bx = x;
                    bv = v;
                }
            }
            if bv > best {
                u[i] = bx;
                best = bv;
            }
        }
        normalise(&mut u);
        best = eval(&u, &mut buf);
        if best - before <= 1e-13 {
            return (u.iter().map(|x| x.exp()).collect(), best, sweep + 1, true);
        }
    }
    (u.iter().map(|x| x.exp()).collect(), best, max_sweeps, false)
}

fn normalise(u: &mut [f64]) {
    let top = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for x in u.iter_mut() {
        *x = (*x - top).max(LOG_FLOOR);
    }
}

/// Best 0/1 witness by exhaustive enumeration; ties keep the lower mask.
fn best_restricted(kernel: &Kernel, q: f64) -> (u64, f64) {
    let m = kernel.m;
    let total = 1u64 << m;
    let chunk = 1u64 << 10;
    let parts: Vec<(u64, f64)> = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut buf = Vec::new();
            let mut w = vec![0.0; m];
            let mut best = (0u64, f64::NEG_INFINITY);
            for mask in (c * chunk).max(1)..((c + 1) * chunk).min(total) {
                for (j, x) in w.iter_mut().enumerate() {
                    *x = (mask >> j & 1) as f64;
                }
                let v = kernel.log_ratio(&w, q, &mut buf);
                if v > best.1 {
                    best = (mask, v);
                }
            }
            best
        })
        .collect();
    parts
        .into_iter()
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

/// Multi-start maximisation of [`de_ratio`] over nonnegative weights on the
/// alphabet, plus the best 0/1 witness.
pub fn optimize_de(problem: &DEProblem, options: &OptimizerOptions) -> Result<DEEstimate> {
    let kernel = Kernel::new(&problem.alphabet, problem.k)?;
    let m = kernel.m;
    for w in &options.initial {
        if w.len() != m
            || w.iter().any(|x| !x.is_finite() || *x < 0.0)
            || w.iter().all(|x| *x == 0.0)
        {
            return Err(Error::Precondition(format!(
                "initial weights must be {m} finite nonnegative values, not all zero"
            )));
        }
    }
    let restricted_exhaustive = m <= options.exhaustive_limit && m < 64;
    let (rmask, _) = if restricted_exhaustive {
        best_restricted(&kernel, problem.q)
    } else {
        // singletons always give ratio 1
        (1, 0.0)
    };
    let mut starts: Vec<Vec<f64>> = vec![vec![1.0; m]];
    starts.push((0..m).map(|j| (rmask >> j & 1) as f64).collect());
    starts.extend(options.initial.iter().cloned());
    for s in 0..options.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        rng.set_stream(s as u64 + 1);
        starts.push((0..m).map(|_| rng.gen_range(-4.0f64..0.0).exp()).collect());
    }
    let runs: Vec<(Vec<f64>, f64, usize, bool)> = starts
        .par_iter()
        .map(|s| ascend(&kernel, problem.q, s, options.max_sweeps))
        .collect();
    let mut best_i = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.1 > runs[best_i].1 {
            best_i = i;
        }
    }
    let (w, _, _, _) = &runs[best_i];
    let witness = WeightFn::on_set(&problem.alphabet, w.iter().cloned())?;
    let restricted_set = problem.alphabet.subset_by_mask(rmask);
    let restricted_fn: WeightFn<f64> = WeightFn::indicator(&restricted_set);
    let restricted_lower_bound = de_ratio(&restricted_fn, problem)?;
    let mut lower_bound = de_ratio(&witness, problem)?;
    let mut witness = witness;
    if restricted_lower_bound > lower_bound {
        lower_bound = restricted_lower_bound;
        witness = restricted_fn;
    }
    Ok(DEEstimate {
        problem: problem.clone(),
        lower_bound,
        witness,
        restricted_lower_bound,
        restricted_witness: restricted_set.iter().map(|p| p.coords().to_vec()).collect(),
        restricted_exhaustive,
        start_ratios: runs.iter().map(|r| r.1.exp()).collect(),
        starts: runs.len(),
        seed: options.seed,
        sweeps: runs.iter().map(|r| r.2).max().unwrap_or(0),
        converged: runs.iter().all(|r| r.3),
        assumption: NONNEGATIVE_ASSUMPTION,
    })
}

/// `w^4 - w^2 - 12w - 6`: on `{0,1,2}` with weights `(1/2, 1, 1/2)` the
/// ratio exceeds 1 at exponent `p` exactly when this is negative at
/// `w = 2^(p/2)`.
pub fn separation_polynomial(w: f64) -> f64 {
    w.powi(4) - w * w - 12.0 * w - 6.0
}

/// Root of [`separation_polynomial`] in `[2, 2√2]` by bisection to `1e-8`.
pub fn separation_root() -> f64 {
    let (mut lo, mut hi) = (2.0f64, 2.0 * 2f64.sqrt());
    debug_assert!(separation_polynomial(lo) < 0.0 && separation_polynomial(hi) > 0.0);
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if separation_polynomial(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnivariateBound {
    #[serde(serialize_with = "crate::report::sig17")]
    pub root: f64,
    /// `2 log2(root)`.
    #[serde(serialize_with = "crate::report::sig17")]
    pub bound: f64,
    /// `log_3 19`, the full-cube ratio.
    #[serde(serialize_with = "crate::report::sig17")]
    pub full_cube_ratio: f64,
    #[serde(serialize_with = "crate::report::sig17")]
    pub margin: f64,
}

pub fn univariate_bound() -> UnivariateBound {
    let root = separation_root();
    let bound = 2.0 * root.log2();
    let full_cube_ratio = 19f64.ln() / 3f64.ln();
    UnivariateBound {
        root,
        bound,
        full_cube_ratio,
        margin: bound - full_cube_ratio,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalExponentReport {
    pub alphabet: Vec<Vec<i64>>,
    pub k: u32,
    /// Largest tested `p` with a witness of ratio `> 1`: a lower bound for
    /// the critical exponent backed by that witness (`1` if none).
    #[serde(serialize_with = "crate::report::sig17")]
    pub lower_bound: f64,
    /// Smallest tested `p` where the optimiser found nothing above 1.
    #[serde(serialize_with = "crate::report::sig17")]
    pub upper_estimate: f64,
    pub bisection_steps: usize,
    /// The closed univariate reduction, for `{0,1,2}` and `k = 2`.
    pub univariate: Option<UnivariateBound>,
}

/// Bisection on `p in [1, 2k]` for the threshold where the optimised ratio
/// drops to 1.
pub fn critical_exponent_lower_bound(
    alphabet: &PointSet,
    k: u32,
    tolerance: f64,
    options: &OptimizerOptions,
) -> Result<CriticalExponentReport> {
    let (mut lo, mut hi) = (1.0f64, 2.0 * k as f64);
    let exceeds = |p: f64| -> Result<bool> {
        let est = optimize_de(&DEProblem::for_exponent(alphabet.clone(), k, p)?, options)?;
        Ok(est.lower_bound > 1.0 + 1e-12)
    };
    let mut steps = 0;
    if exceeds(hi)? {
        lo = hi;
    } else {
        while hi - lo > tolerance {
            let mid = 0.5 * (lo + hi);
            if exceeds(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
            steps += 1;
        }
    }
    let is_012 =
        alphabet.dim() == 1 && alphabet.points() == PointSet::from_integers([0, 1, 2]).points();
    Ok(CriticalExponentReport {
        alphabet: alphabet.iter().map(|p| p.coords().to_vec()).collect(),
        k,
        lower_bound: lo,
        upper_estimate: hi,
        bisection_steps: steps,
        univariate: (is_012 && k == 2).then(univariate_bound),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TnInterval {
    pub n: u64,
    pub m: u64,
    #[serde(serialize_with = "crate::report::decimal")]
    pub energy: BigInt,
    /// `log_{n+1} E_2({0..n})`.
    #[serde(serialize_with = "crate::report::sig17")]
    pub lower: f64,
    #[serde(serialize_with = "crate::report::sig17")]
    pub upper: f64,
    /// `3 - ln(3/2) / ln(2m)`.
    #[serde(serialize_with = "crate::report::sig17")]
    pub chain_bound: f64,
    /// `lower > chain_bound`, certified.
    pub chain_holds: bool,
    /// `lower <= 3`, certified.
    pub below_three: bool,
}

/// Bounds for the sharp `E_2` exponent of `{0,...,n}^d`.
pub fn tn_interval(n: u64) -> Result<TnInterval> {
    let energy = interval_energy_closed_form(n)?;
    let m = n.div_ceil(2);
    let lower_iv = |prec| {
        Interval::from_integer(prec, &energy)
            .ln()
            .div(&Interval::from_integer(prec, &BigInt::from(n + 1)).ln())
    };
    let chain_iv = |prec| {
        let three_halves = BigRational::new(3.into(), 2.into());
        Interval::from_i64(prec, 3).sub(
            &Interval::from_rational(prec, &three_halves)
                .ln()
                .div(&Interval::from_i64(prec, 2 * m as i64).ln()),
        )
    };
    let chain_holds = certify_le(|prec| (chain_iv(prec), lower_iv(prec))).verdict == Verdict::Holds;
    let below_three = certify_le(|prec| (lower_iv(prec), Interval::from_i64(prec, 3)))
        .verdict
        .is_ok();
    Ok(TnInterval {
        n,
        m,
        lower: lower_iv(128).mid_f64(),
        upper: 3.0,
        chain_bound: chain_iv(128).mid_f64(),
        chain_holds,
        below_three,
        energy,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorizationReport {
    pub k: u32,
    #[serde(serialize_with = "crate::report::sig17")]
    pub q: f64,
    #[serde(serialize_with = "crate::report::sig17")]
    pub best_a: f64,
    #[serde(serialize_with = "crate::report::sig17")]
    pub best_b: f64,
    #[serde(serialize_with = "crate::report::sig17")]
    pub best_product_set: f64,
    #[serde(serialize_with = "crate::report::sig17")]
    pub product_of_bests: f64,
    /// Ratio of the tensor product of the two single witnesses.
    #[serde(serialize_with = "crate::report::sig17")]
    pub tensor_witness_ratio: f64,
    #[serde(serialize_with = "crate::report::sig17")]
    pub tolerance: f64,
    pub within_tolerance: bool,
    /// `best(A x B) >= ratio(f_A ⊗ f_B)`.
    pub witness_direction_holds: bool,
    pub converged: bool,
}

impl TensorizationReport {
    pub fn passed(&self) -> bool {
        self.within_tolerance && self.witness_direction_holds
    }
}

pub fn tensorization_check(
    a: &PointSet,
    b: &PointSet,
    k: u32,
    q: f64,
    tolerance: f64,
    options: &OptimizerOptions,
) -> Result<TensorizationReport> {
    let pa = DEProblem::new(a.clone(), k, q)?;
    let pb = DEProblem::new(b.clone(), k, q)?;
    let ea = optimize_de(&pa, options)?;
    let eb = optimize_de(&pb, options)?;
    let ab = a.product(b);
    let pab = DEProblem::new(ab.clone(), k, q)?;
    let tensor = ea.witness.tensor(&eb.witness);
    let tensor_witness_ratio = de_ratio(&tensor, &pab)?;
    let mut opts = options.clone();
    opts.initial = vec![ab.iter().map(|p| tensor.get(p)).collect()];
    let eab = optimize_de(&pab, &opts)?;
    let product_of_bests = ea.lower_bound * eb.lower_bound;
    Ok(TensorizationReport {
        k,
        q,
        best_a: ea.lower_bound,
        best_b: eb.lower_bound,
        best_product_set: eab.lower_bound,
        product_of_bests,
        tensor_witness_ratio,
        tolerance,
        within_tolerance: (eab.lower_bound - product_of_bests).abs() <= tolerance,
        witness_direction_holds: eab.lower_bound >= tensor_witness_ratio * (1.0 - 1e-12),
        converged: ea.converged && eb.converged && eab.converged,
    })
}

/// `f = sum_{i=1..L} 2^-i ε_i + f_0` with `ε_i` the binary digits of `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicDecomposition {
    pub base: WeightFn<BigRational>,
    pub domain_size: usize,
    /// `(i, support of ε_i)`.
    pub levels: Vec<(u32, PointSet)>,
    pub remainder: WeightFn<BigRational>,
}

/// Number of digit levels for a domain of `size` points: `ceil(log2 size)`,
/// so that the remainder is at most `2^-L <= 1/size`.
pub fn dyadic_level_count(size: usize) -> u32 {
    if size <= 1 {
        0
    } else {
        usize::BITS - (size - 1).leading_zeros()
    }
}

/// Binary-digit decomposition of `f` with values in `[0, 1]` on a domain of
/// `domain_size` points.
pub fn dyadic_decompose(
    f: &WeightFn<BigRational>,
    domain_size: usize,
) -> Result<DyadicDecomposition> {
    if domain_size == 0 || domain_size < f.len() {
        return Err(Error::Precondition(format!(
            "domain of {domain_size} points cannot hold a support of {}",
            f.len()
        )));
    }
    if let Some((p, w)) = f.iter().find(|(_, w)| **w > BigRational::one()) {
        return Err(Error::out_of_range(
            "weight",
            format!("{p} has weight {w} > 1"),
        ));
    }
    let levels_n = dyadic_level_count(domain_size);
    let mut rest: BTreeMap<Point, BigRational> =
        f.iter().map(|(p, w)| (p.clone(), w.clone())).collect();
    let mut levels = Vec::with_capacity(levels_n as usize);
    let mut digit = BigRational::one();
    for i in 1..=levels_n {
        digit /= BigInt::from(2);
        let mut ones = Vec::new();
        for (p, r) in rest.iter_mut() {
            if *r >= digit {
                *r -= &digit;
                ones.push(p.clone());
            }
        }
        levels.push((i, PointSet::new(f.dim(), ones)?));
    }
    Ok(DyadicDecomposition {
        base: f.clone(),
        domain_size,
        levels,
        remainder: WeightFn::from_entries(f.dim(), rest)?,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DyadicCheck {
    pub reconstructs: bool,
    pub remainder_bounded: bool,
    pub level_count_ok: bool,
}

impl DyadicCheck {
    pub fn passed(&self) -> bool {
        self.reconstructs && self.remainder_bounded && self.level_count_ok
    }
}

impl DyadicDecomposition {
    /// Checks the decomposition invariants exactly.
    pub fn verify(&self) -> DyadicCheck {
        let mut reconstructs = true;
        let mut points: Vec<&Point> = self.base.iter().map(|(p, _)| p).collect();
        points.extend(self.remainder.iter().map(|(p, _)| p));
        for p in points {
            let mut v = self.remainder.get(p);
            for (i, eps) in &self.levels {
                if eps.contains(p) {
                    v += BigRational::new(BigInt::one(), BigInt::one() << *i);
                }
            }
            reconstructs &= v == self.base.get(p);
        }
        for (_, eps) in &self.levels {
            reconstructs &= eps.iter().all(|p| !self.base.get(p).is_zero());
        }
        let cap = BigRational::new(BigInt::one(), BigInt::from(self.domain_size));
        let remainder_bounded = self
            .remainder
            .iter()
            .all(|(_, w)| *w >= BigRational::zero() && *w <= cap);
        // at most log2|A| + 1 levels: 2^(L-1) < |A|
        let l = self.levels.len() as u32;
        let level_count_ok = l == 0 || (1usize << (l - 1)) < self.domain_size;
        DyadicCheck {
            reconstructs,
            remainder_bounded,
            level_count_ok,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub k: u32,
    #[serde(serialize_with = "crate::report::sig17")]
    pub q: f64,
    pub set_size: usize,
    #[serde(serialize_with = "crate::report::sig17")]
    pub restricted: f64,
    pub restricted_exhaustive: bool,
    #[serde(serialize_with = "crate::report::sig17")]
    pub unrestricted: f64,
    /// `2 + ln|A|`.
    #[serde(serialize_with = "crate::report::sig17")]
    pub factor: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.lower_holds && self.upper_holds
    }
}

/// `tilde-DE <= DE <= (2 + ln|A|) tilde-DE` on the optimiser's output.
pub fn comparison_check(
    a: &PointSet,
    k: u32,
    q: f64,
    options: &OptimizerOptions,
) -> Result<ComparisonReport> {
    let est = optimize_de(&DEProblem::new(a.clone(), k, q)?, options)?;
    if !est.restricted_exhaustive {
        return Err(Error::BudgetExceeded(format!(
            "exact restricted constant needs 2^{} subsets; limit is 2^{}",
            a.len(),
            options.exhaustive_limit
        )));
    }
    let factor = 2.0 + (a.len() as f64).ln();
    Ok(ComparisonReport {
        k,
        q,
        set_size: a.len(),
        restricted: est.restricted_lower_bound,
        restricted_exhaustive: est.restricted_exhaustive,
        unrestricted: est.lower_bound,
        factor,
        lower_holds: est.restricted_lower_bound <= est.lower_bound,
        upper_holds: est.lower_bound <= factor * est.restricted_lower_bound,
    })
}

/// Sup-normalises a weight function to values in `[0, 1]`.
pub fn sup_normalise(f: &WeightFn<BigRational>) -> Result<WeightFn<BigRational>> {
    let top = f.sup();
    if top.is_zero() {
        return Err(Error::ZeroFunction);
    }
    f.map_values(|w| w / &top)
}
