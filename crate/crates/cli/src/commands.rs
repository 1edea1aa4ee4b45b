use clap::{Args, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use cube_energy::certified::{Exponent, LogExponent};
use cube_energy::energy::{
    brute_force_energy, decomposition_identity_check, energy as compute_energy, EnergyKind,
    EnergyReport, DEFAULT_BRUTE_FORCE_BUDGET,
};
use cube_energy::exponent::{
    default_letter_weights, rows_of, sweep_cube, witness_search_general_cube, ExponentTarget,
    SweepMode, SweepOptions,
};
use cube_energy::extension::{
    comparison_check, critical_exponent_lower_bound, dyadic_decompose, optimize_de, sup_normalise,
    tensorization_check, weighted_energy, DEProblem, OptimizerOptions,
};
use cube_energy::lattice::{io, PointSet, WeightFn};
use cube_energy::legendre::{certify_sign_patterns, curve_data, sign_table_csv, Curve};
use cube_energy::report::fmt_f64;

use crate::sets::{load, parse_cube};
use crate::{Failure, Outcome};

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn csv_rows<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 rows")
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EnergyArgs {
    /// `cube:NxD`, `list:a,b,...` or a point-set file.
    #[arg(long)]
    set: String,
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, default_value = "additive")]
    kind: EnergyKind,
    /// Count 2k-tuples directly instead of convolving.
    #[arg(long)]
    brute_force: bool,
    /// Tuple budget for --brute-force.
    #[arg(long, default_value_t = DEFAULT_BRUTE_FORCE_BUDGET)]
    budget: u64,
}

pub fn energy(a: &EnergyArgs) -> Result<Outcome, Failure> {
    let loaded = load(&a.set)?;
    let v = if a.brute_force {
        brute_force_energy(&loaded.set, a.k, a.kind, a.budget)?
    } else {
        compute_energy(&loaded.set, a.k, a.kind)?
    };
    let r = EnergyReport::new(&v, loaded.path);
    let csv = format!(
        "kind,k,set_size,energy,log_ratio\n{},{},{},{},{}\n",
        r.kind.name(),
        r.k,
        r.set_size,
        r.energy,
        opt_f64(r.log_ratio)
    );
    Ok(Outcome {
        violation: !r.trivial_bounds_hold,
        report: to_value(&r),
        csv: Some(csv),
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    /// The cube, as `cube:NxD` or `NxD`.
    #[arg(long)]
    cube: String,
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, default_value = "additive")]
    kind: EnergyKind,
    /// Exponent to test instead of the sharp one.
    #[arg(long)]
    exponent: Option<f64>,
    /// Check this many seeded random subsets instead of all of them.
    #[arg(long)]
    samples: Option<u64>,
}

pub fn verify(a: &VerifyArgs, seed: u64) -> Result<Outcome, Failure> {
    let (n, d) = parse_cube(&a.cube)?;
    let target = match a.exponent {
        Some(e) => ExponentTarget::custom(a.kind, a.k, e)?,
        None => ExponentTarget::sharp(a.kind, a.k),
    };
    let mode = match a.samples {
        Some(samples) => SweepMode::Sampled { samples, seed },
        None => SweepMode::Exhaustive,
    };
    let r = sweep_cube(n, d, &target, &mode, &SweepOptions { collect_rows: true })?;
    #[derive(Serialize)]
    struct Row {
        mask: u64,
        size: usize,
        energy: String,
        ratio: String,
        verdict: String,
    }
    let rows: Vec<Row> = r
        .rows
        .iter()
        .map(|s| Row {
            mask: s.mask,
            size: s.size,
            energy: s.energy.to_string(),
            ratio: opt_f64(s.ratio),
            verdict: to_value(&s.verdict)
                .as_str()
                .unwrap_or_default()
                .to_string(),
        })
        .collect();
    Ok(Outcome {
        violation: !r.passed(),
        report: to_value(&r),
        csv: Some(csv_rows(&rows)),
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SignsArgs {
    #[arg(long, default_value_t = 10)]
    k_max: u32,
}

pub fn signs(a: &SignsArgs) -> Result<Outcome, Failure> {
    let patterns = certify_sign_patterns(a.k_max)?;
    let uncertified: Vec<u32> = patterns
        .iter()
        .filter(|p| !p.certified)
        .map(|p| p.k)
        .collect();
    Ok(Outcome {
        violation: !uncertified.is_empty(),
        report: json!({ "patterns": patterns, "uncertified": uncertified }),
        csv: Some(sign_table_csv(&patterns)),
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CurvesArgs {
    /// `phi`, `psi` or `goal_q`.
    #[arg(long)]
    which: Curve,
    #[arg(long)]
    k: u32,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

pub fn curves(a: &CurvesArgs) -> Result<Outcome, Failure> {
    let data = curve_data(a.which, a.k, a.samples)?;
    Ok(Outcome {
        violation: false,
        report: to_value(&data),
        csv: Some(data.to_csv()),
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct NormArgs {
    /// Input norm index, at most 2k.
    #[arg(long, conflicts_with = "p", required_unless_present = "p")]
    q: Option<f64>,
    /// Energy exponent; sets q = 2k/p.
    #[arg(long)]
    p: Option<f64>,
}

impl NormArgs {
    fn q(&self, k: u32) -> f64 {
        match (self.q, self.p) {
            (Some(q), _) => q,
            (None, Some(p)) => 2.0 * k as f64 / p,
            (None, None) => unreachable!("clap requires one of --q and --p"),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OptimiserArgs {
    /// Random starts (on top of the uniform and best 0/1 starts).
    #[arg(long, default_value_t = 32)]
    starts: usize,
    #[arg(long, default_value_t = 200)]
    max_sweeps: usize,
    /// Largest alphabet for exhaustive 0/1 enumeration.
    #[arg(long, default_value_t = 20)]
    exhaustive_limit: usize,
}

impl OptimiserArgs {
    fn options(&self, seed: u64) -> OptimizerOptions {
        OptimizerOptions {
            starts: self.starts,
            seed,
            max_sweeps: self.max_sweeps,
            initial: Vec::new(),
            exhaustive_limit: self.exhaustive_limit,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rational,
    Float,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case", tag = "action")]
pub enum ExtensionCmd {
    /// Maximise the extension ratio over nonnegative weights.
    Optimize {
        #[arg(long)]
        alphabet: String,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[command(flatten)]
        #[serde(flatten)]
        norm: NormArgs,
        #[command(flatten)]
        #[serde(flatten)]
        optimiser: OptimiserArgs,
    },
    /// Bisect for the exponent where the optimised ratio drops to 1.
    Critical {
        #[arg(long)]
        alphabet: String,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[command(flatten)]
        #[serde(flatten)]
        optimiser: OptimiserArgs,
    },
    /// Compare the optimum on A x B with the product of optima.
    Tensor {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[command(flatten)]
        #[serde(flatten)]
        norm: NormArgs,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        #[command(flatten)]
        #[serde(flatten)]
        optimiser: OptimiserArgs,
    },
    /// Check the 0/1 versus general comparison sandwich.
    Compare {
        #[arg(long)]
        alphabet: String,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[command(flatten)]
        #[serde(flatten)]
        norm: NormArgs,
        #[command(flatten)]
        #[serde(flatten)]
        optimiser: OptimiserArgs,
    },
    /// Binary-digit decomposition of a weight file (values sup-normalised).
    Dyadic {
        /// CSV rows `point,weight`.
        #[arg(long)]
        weights: String,
        /// Size of the ambient set (default: the support size).
        #[arg(long)]
        domain_size: Option<usize>,
    },
    /// Weighted energy of a weight file.
    WeightedEnergy {
        #[arg(long)]
        weights: String,
        #[arg(long, default_value_t = 2)]
        k: u32,
        #[arg(long, value_enum, default_value_t = Mode::Rational)]
        mode: Mode,
    },
}

fn load_weights(path: &str) -> Result<WeightFn<BigRational>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read weights {path:?}: {e}")))?;
    Ok(io::parse_weights_csv(&text)?)
}

fn alphabet(spec: &str) -> Result<PointSet, Failure> {
    Ok(load(spec)?.set)
}

pub fn extension(c: &ExtensionCmd, seed: u64) -> Result<Outcome, Failure> {
    match c {
        ExtensionCmd::Optimize {
            alphabet: s,
            k,
            norm,
            optimiser,
        } => {
            let problem = DEProblem::new(alphabet(s)?, *k, norm.q(*k))?;
            let est = optimize_de(&problem, &optimiser.options(seed))?;
            Ok(Outcome {
                violation: false,
                csv: Some(io::weights_to_csv(&est.witness)),
                report: to_value(&est),
            })
        }
        ExtensionCmd::Critical {
            alphabet: s,
            k,
            tolerance,
            optimiser,
        } => {
            let r = critical_exponent_lower_bound(
                &alphabet(s)?,
                *k,
                *tolerance,
                &optimiser.options(seed),
            )?;
            let csv = format!(
                "lower_bound,upper_estimate\n{},{}\n",
                fmt_f64(r.lower_bound),
                fmt_f64(r.upper_estimate)
            );
            Ok(Outcome {
                violation: false,
                report: to_value(&r),
                csv: Some(csv),
            })
        }
        ExtensionCmd::Tensor {
            a,
            b,
            k,
            norm,
            tolerance,
            optimiser,
        } => {
            let r = tensorization_check(
                &alphabet(a)?,
                &alphabet(b)?,
                *k,
                norm.q(*k),
                *tolerance,
                &optimiser.options(seed),
            )?;
            Ok(Outcome {
                violation: !r.passed(),
                report: to_value(&r),
                csv: None,
            })
        }
        ExtensionCmd::Compare {
            alphabet: s,
            k,
            norm,
            optimiser,
        } => {
            let r = comparison_check(&alphabet(s)?, *k, norm.q(*k), &optimiser.options(seed))?;
            Ok(Outcome {
                violation: !r.passed(),
                report: to_value(&r),
                csv: None,
            })
        }
        ExtensionCmd::Dyadic {
            weights,
            domain_size,
        } => {
            let f = sup_normalise(&load_weights(weights)?)?;
            let d = dyadic_decompose(&f, domain_size.unwrap_or(f.len()))?;
            let check = d.verify();
            let rows = |g: &WeightFn<BigRational>| -> Vec<Value> {
                g.iter()
                    .map(|(p, w)| json!({ "point": p.coords(), "weight": w.to_string() }))
                    .collect()
            };
            let levels: Vec<Value> = d
                .levels
                .iter()
                .map(|(i, e)| json!({ "level": i, "points": rows_of(e) }))
                .collect();
            let mut csv = String::from("point,level,remainder\n");
            for p in d.base.iter().map(|(p, _)| p) {
                let coords = p
                    .coords()
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                let bits: String = d
                    .levels
                    .iter()
                    .map(|(_, e)| if e.contains(p) { '1' } else { '0' })
                    .collect();
                csv.push_str(&format!("{coords},{bits},{}\n", d.remainder.get(p)));
            }
            Ok(Outcome {
                violation: !check.passed(),
                report: json!({
                    "domain_size": d.domain_size,
                    "base": rows(&d.base),
                    "levels": levels,
                    "remainder": rows(&d.remainder),
                    "check": check,
                }),
                csv: Some(csv),
            })
        }
        ExtensionCmd::WeightedEnergy { weights, k, mode } => {
            let f = load_weights(weights)?;
            let value = match mode {
                Mode::Rational => weighted_energy(&f, *k)?.to_string(),
                Mode::Float => fmt_f64(weighted_energy(&f.to_f64(), *k)?),
            };
            Ok(Outcome {
                violation: false,
                csv: Some(format!(
                    "k,mode,energy\n{k},{},{value}\n",
                    to_value(mode).as_str().unwrap_or_default()
                )),
                report: json!({ "k": k, "support_size": f.len(), "energy": value }),
            })
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WitnessArgs {
    /// Alphabet {0..n}.
    #[arg(long, default_value_t = 2)]
    n: u32,
    #[arg(long, default_value_t = 8)]
    d_max: usize,
    #[arg(long, default_value_t = 2)]
    k: u32,
    /// Letter weights as comma-separated rationals (default 1/2,1,1/2 for n = 2).
    #[arg(long)]
    weights: Option<String>,
    /// Exponent to beat (default: log_{n+1} E_k({0..n})).
    #[arg(long)]
    threshold: Option<f64>,
}

pub fn witness(a: &WitnessArgs) -> Result<Outcome, Failure> {
    let weights = match &a.weights {
        Some(s) => s
            .split(',')
            .map(|t| io::parse_rational(t.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::Usage(format!("bad weights: {e}")))?,
        None => default_letter_weights(a.n)?,
    };
    let threshold = match a.threshold {
        Some(t) => {
            Exponent::from_f64(t).ok_or_else(|| Failure::Usage(format!("bad threshold {t}")))?
        }
        None => {
            let line = PointSet::from_integers(0..=a.n as i64);
            let e = compute_energy(&line, a.k, EnergyKind::Additive)?.value;
            Exponent::Log(LogExponent::log(BigInt::from(a.n + 1), e))
        }
    };
    let r = witness_search_general_cube(a.n, a.d_max, a.k, &weights, &threshold)?;
    #[derive(Serialize)]
    struct Row {
        d: usize,
        theta: String,
        size: usize,
        energy: String,
        ratio: String,
        verdict: String,
    }
    let rows: Vec<Row> = r
        .best_per_d
        .iter()
        .map(|c| Row {
            d: c.d,
            theta: c.theta.clone(),
            size: c.size,
            energy: c.energy.to_string(),
            ratio: opt_f64(c.ratio),
            verdict: to_value(&c.verdict)
                .as_str()
                .unwrap_or_default()
                .to_string(),
        })
        .collect();
    Ok(Outcome {
        violation: false,
        report: to_value(&r),
        csv: Some(csv_rows(&rows)),
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct IdentityArgs {
    /// A point set in {..} x {0,1}; omit to draw random subsets of {0,1}^d.
    #[arg(long)]
    set: Option<String>,
    /// Number of random subsets.
    #[arg(long, default_value_t = 100)]
    random: usize,
    #[arg(long, default_value_t = 4)]
    d: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![2u32, 3])]
    k: Vec<u32>,
    /// Energy kinds (default both).
    #[arg(long, value_delimiter = ',')]
    kind: Vec<EnergyKind>,
}

pub fn identity_check(a: &IdentityArgs, seed: u64) -> Result<Outcome, Failure> {
    let sets: Vec<PointSet> = match &a.set {
        Some(s) => vec![load(s)?.set],
        None => {
            if !(1..=6).contains(&a.d) {
                return Err(Failure::Usage("random subsets need 1 <= d <= 6".into()));
            }
            let cube = PointSet::cube(1, a.d);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let top = 1u64 << cube.len();
            (0..a.random)
                .map(|_| cube.subset_by_mask(rng.gen_range(1..top)))
                .collect()
        }
    };
    let kinds = if a.kind.is_empty() {
        EnergyKind::ALL.to_vec()
    } else {
        a.kind.clone()
    };
    let mut reports = Vec::new();
    #[derive(Serialize)]
    struct Row {
        set: usize,
        kind: &'static str,
        k: u32,
        size: usize,
        lhs: String,
        rhs: String,
        holds: bool,
    }
    let mut rows = Vec::new();
    for (i, s) in sets.iter().enumerate() {
        for &k in &a.k {
            for &kind in &kinds {
                let r = decomposition_identity_check(s, k, kind)?;
                rows.push(Row {
                    set: i,
                    kind: kind.name(),
                    k,
                    size: r.set_size,
                    lhs: r.lhs.to_string(),
                    rhs: r.rhs.to_string(),
                    holds: r.holds,
                });
                let mut v = to_value(&r);
                v["points"] = to_value(&rows_of(s));
                reports.push(v);
            }
        }
    }
    let failures = rows.iter().filter(|r| !r.holds).count();
    Ok(Outcome {
        violation: failures > 0,
        report: json!({ "checks": reports.len(), "failures": failures, "results": reports }),
        csv: Some(csv_rows(&rows)),
    })
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TnArgs {
    #[arg(long, default_value_t = 1)]
    n_min: u64,
    #[arg(long, default_value_t = 40)]
    n_max: u64,
}

pub fn tn_bounds(a: &TnArgs) -> Result<Outcome, Failure> {
    if a.n_min < 1 || a.n_min > a.n_max {
        return Err(Failure::Usage("need 1 <= n-min <= n-max".into()));
    }
    let rows = (a.n_min..=a.n_max)
        .map(cube_energy::extension::tn_interval)
        .collect::<Result<Vec<_>, _>>()?;
    #[derive(Serialize)]
    struct Row {
        n: u64,
        m: u64,
        energy: String,
        lower: String,
        upper: String,
        chain_bound: String,
        chain_holds: bool,
        below_three: bool,
    }
    let csv: Vec<Row> = rows
        .iter()
        .map(|t| Row {
            n: t.n,
            m: t.m,
            energy: t.energy.to_string(),
            lower: fmt_f64(t.lower),
            upper: fmt_f64(t.upper),
            chain_bound: fmt_f64(t.chain_bound),
            chain_holds: t.chain_holds,
            below_three: t.below_three,
        })
        .collect();
    Ok(Outcome {
        violation: rows.iter().any(|t| !t.chain_holds || !t.below_three),
        report: json!({ "intervals": rows }),
        csv: Some(csv_rows(&csv)),
    })
}
