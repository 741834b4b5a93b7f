//! The five subcommands. Each resolves its inputs from flags merged over the
//! config file, computes everything in memory, and hands back a table plus an
//! optional flag message when independent routes disagreed beyond tolerance.

use checkerboard::forests::{forward_boundaries, forward_choice_region, sample_choices};
use checkerboard::kernels::{
    a_crossing_bidirectional, a_crossing_determinant, a_crossing_erfc, a_crossing_poisson,
    a_crossing_skellam, a_crossing_terminal, w_asymmetric,
};
use checkerboard::montecarlo::sample_stream;
use checkerboard::pfaffian::{pfaffian_exact, pfaffian_float, SkewMatrix};
use checkerboard::{
    correlation_mobius, correlation_pfaffian, empty_interval_probability, enumerate_all_events,
    enumerate_event_probability, estimate_correlation, estimate_event, lineage_dp, Coord, Error,
    EventKind, IntervalSpec, KernelSpec, ProbabilityValue, RationalProbability, SiteSet,
    WeightField,
};
use num_rational::BigRational;
use num_traits::One;

use crate::config::{
    parse_float_list, parse_grid, parse_pair, parse_rational, resolve_field, FileConfig,
    KernelConfig, Profile,
};
use crate::table::{Cell, Table};
use crate::{CliError, CorrelateArgs, EmptyIntervalArgs, KernelTableArgs, SimulateArgs, VerifyArgs};

/// How far Monte Carlo may sit from a closed-form value before the run is
/// flagged; looser than the suite's own 4 sigma so arbitrary user configs
/// rarely false-alarm.
const MC_FLAG_SIGMA: f64 = 5.0;

pub struct CommandOutput {
    pub table: Table,
    pub flag: Option<String>,
}

fn internal(e: Error) -> CliError {
    CliError::Internal(e.to_string())
}

fn route_row(route: &str, value: &ProbabilityValue) -> Vec<Cell> {
    let exact = match value {
        ProbabilityValue::Exact(r) => Cell::Text(r.to_string()),
        ProbabilityValue::Float(_) => Cell::Empty,
    };
    vec![
        Cell::Text(route.into()),
        Cell::Float(value.to_f64()),
        exact,
        Cell::Empty,
        Cell::Empty,
    ]
}

fn intervals_from(
    args: &[String],
    file: &Option<Vec<(i64, i64)>>,
) -> Result<Vec<(i64, i64)>, CliError> {
    if !args.is_empty() {
        return args.iter().map(|text| parse_pair(text, ':')).collect();
    }
    match file {
        Some(pairs) if !pairs.is_empty() => Ok(pairs.clone()),
        _ => Err(CliError::Usage(
            "no intervals given: pass --interval a:b or put intervals in the config".into(),
        )),
    }
}

fn build_spec(horizon: i64, pairs: &[(i64, i64)]) -> Result<IntervalSpec, CliError> {
    let coords: Vec<_> = pairs
        .iter()
        .map(|&(a, b)| (Coord::half_odd(a), Coord::half_odd(b)))
        .collect();
    IntervalSpec::new(horizon, &coords).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn empty_interval(
    args: &EmptyIntervalArgs,
    file: &FileConfig,
    seed: Option<u64>,
    samples: Option<u64>,
) -> Result<CommandOutput, CliError> {
    let field = resolve_field(&args.p, &args.polya, &file.field)?;
    let horizon = args
        .horizon
        .or(file.horizon)
        .ok_or_else(|| CliError::Usage("no --horizon given".into()))?;
    let pairs = intervals_from(&args.intervals, &file.intervals)?;
    let spec = build_spec(horizon, &pairs)?;
    let run_exact = args.exact || file.exact.unwrap_or(false);
    let run_mc = args.mc || file.mc.unwrap_or(false);

    let mut table = Table::new(vec!["route", "value", "exact", "stderr", "samples"]);
    let mut flag = None;
    let pf = empty_interval_probability(&field, &spec).map_err(internal)?;
    table.push(route_row("pfaffian", &pf));

    if run_exact {
        let dp = lineage_dp(&field, &spec).map_err(internal)?;
        table.push(route_row("lineage-dp", &ProbabilityValue::Exact(dp.clone())));
        if pf.exact() == Some(&dp) || pf.exact().is_none() {
            // float pfaffians are checked below against the DP value instead
        } else {
            flag = Some(format!(
                "pfaffian {} disagrees with lineage DP {dp}",
                pf
            ));
        }
        if pf.exact().is_none() && (pf.to_f64() - dp.to_f64()).abs() > 1e-9 {
            flag = Some(format!(
                "float pfaffian {} drifted from lineage DP {}",
                pf.to_f64(),
                dp.to_f64()
            ));
        }
        match enumerate_event_probability(&field, &spec, EventKind::EmptyInterval) {
            Ok(enumerated) => {
                table.push(route_row(
                    "enumeration",
                    &ProbabilityValue::Exact(enumerated.clone()),
                ));
                if enumerated != dp {
                    flag = Some(format!(
                        "enumeration {enumerated} disagrees with lineage DP {dp}"
                    ));
                }
            }
            // too many undetermined vertices for a sweep; the DP already ran
            Err(Error::ConeTooLarge(..)) => {}
            Err(e) => return Err(internal(e)),
        }
    }

    if run_mc {
        let samples =
            samples.ok_or_else(|| CliError::Usage("--mc needs --samples".into()))?;
        let seed = seed.ok_or_else(|| CliError::Usage("--mc needs --seed".into()))?;
        let mc = estimate_event(&field, &spec, EventKind::EmptyInterval, samples, seed)
            .map_err(internal)?;
        table.push(vec![
            Cell::Text("monte-carlo".into()),
            Cell::Float(mc.mean),
            Cell::Empty,
            Cell::Float(mc.stderr),
            Cell::Uint(mc.samples),
        ]);
        let z = mc.z_score(pf.to_f64());
        if z > MC_FLAG_SIGMA {
            flag = Some(format!(
                "monte carlo {:.6} is {z:.1} sigma from pfaffian {:.6}",
                mc.mean,
                pf.to_f64()
            ));
        }
    }
    Ok(CommandOutput { table, flag })
}

pub fn correlate(
    args: &CorrelateArgs,
    file: &FileConfig,
    seed: Option<u64>,
    samples: Option<u64>,
) -> Result<CommandOutput, CliError> {
    let field = resolve_field(&args.p, &args.polya, &file.field)?;
    let horizon = args
        .horizon
        .or(file.horizon)
        .ok_or_else(|| CliError::Usage("no --horizon given".into()))?;
    let sites: Vec<i64> = match (&args.sites, &file.sites) {
        (Some(text), _) => parse_grid(text)?,
        (None, Some(sites)) => sites.clone(),
        (None, None) => {
            return Err(CliError::Usage(
                "no sites given: pass --sites or put sites in the config".into(),
            ))
        }
    };
    let set = SiteSet::new(horizon, &sites).map_err(|e| CliError::Usage(e.to_string()))?;
    let run_mc = args.mc || file.mc.unwrap_or(false);

    let mut table = Table::new(vec!["route", "value", "exact", "stderr", "samples"]);
    let mut flag = None;
    let pf = correlation_pfaffian(&field, &set).map_err(internal)?;
    let mobius = match correlation_mobius(&field, &set) {
        Ok(value) => Some(value),
        // inclusion-exclusion over 2^n subsets has a tighter size cap than
        // the Pfaffian; fall back to the Pfaffian alone
        Err(Error::SizeCap(..)) => None,
        Err(e) => return Err(internal(e)),
    };
    table.push(route_row("pfaffian", &pf));
    if let Some(mobius) = &mobius {
        table.push(route_row("mobius", mobius));
        let split = match (pf.exact(), mobius.exact()) {
            (Some(a), Some(b)) => a != b,
            _ => (pf.to_f64() - mobius.to_f64()).abs() > 1e-9,
        };
        if split {
            flag = Some(format!("pfaffian {pf} disagrees with mobius {mobius}"));
        }
    }

    if run_mc {
        let samples =
            samples.ok_or_else(|| CliError::Usage("--mc needs --samples".into()))?;
        let seed = seed.ok_or_else(|| CliError::Usage("--mc needs --seed".into()))?;
        let mc = estimate_correlation(&field, &set, samples, seed).map_err(internal)?;
        table.push(vec![
            Cell::Text("monte-carlo".into()),
            Cell::Float(mc.mean),
            Cell::Empty,
            Cell::Float(mc.stderr),
            Cell::Uint(mc.samples),
        ]);
        let z = mc.z_score(pf.to_f64());
        if z > MC_FLAG_SIGMA {
            flag = Some(format!(
                "monte carlo {:.6} is {z:.1} sigma from pfaffian {:.6}",
                mc.mean,
                pf.to_f64()
            ));
        }
    }
    Ok(CommandOutput { table, flag })
}

fn kernel_from_flags(
    args: &KernelTableArgs,
    horizon: i64,
) -> Result<Option<KernelSpec>, CliError> {
    let kind = match args.kind.as_deref() {
        Some(kind) => kind,
        None => return Ok(None),
    };
    let need_p = || {
        args.p
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("kind '{kind}' needs --p")))
            .and_then(parse_rational)
    };
    let need = |name: &str, value: Option<f64>| {
        value.ok_or_else(|| CliError::Usage(format!("kind '{kind}' needs --{name}")))
    };
    let spec = match kind {
        "biased" => KernelSpec::Biased {
            horizon,
            p: need_p()?,
        },
        "asymmetric" => KernelSpec::Asymmetric {
            horizon,
            p: need_p()?,
        },
        "poisson" => KernelSpec::Poisson {
            rate: need("rate", args.rate)?,
            time: need("time", args.time)?,
        },
        "bidirectional" => KernelSpec::Bidirectional {
            rate_up: need("rate-up", args.rate_up)?,
            rate_down: need("rate-down", args.rate_down)?,
            time: need("time", args.time)?,
        },
        "scaling-limit" => KernelSpec::ScalingLimit {
            horizon: horizon as f64,
        },
        other => {
            return Err(CliError::Usage(format!(
                "unknown kernel kind '{other}'; use biased, asymmetric, poisson, bidirectional, or scaling-limit"
            )))
        }
    };
    Ok(Some(spec))
}

fn kernel_from_config(config: &KernelConfig) -> Result<KernelSpec, CliError> {
    Ok(match config {
        KernelConfig::Biased { horizon, p } => KernelSpec::Biased {
            horizon: *horizon,
            p: parse_rational(p)?,
        },
        KernelConfig::Asymmetric { horizon, p } => KernelSpec::Asymmetric {
            horizon: *horizon,
            p: parse_rational(p)?,
        },
        KernelConfig::Poisson { rate, time } => KernelSpec::Poisson {
            rate: *rate,
            time: *time,
        },
        KernelConfig::Bidirectional {
            rate_up,
            rate_down,
            time,
        } => KernelSpec::Bidirectional {
            rate_up: *rate_up,
            rate_down: *rate_down,
            time: *time,
        },
        KernelConfig::ScalingLimit { horizon } => KernelSpec::ScalingLimit { horizon: *horizon },
    })
}

/// Reassembles the spec at another horizon so one flag drives a whole grid.
fn kernel_at(template: &KernelSpec, horizon: i64) -> KernelSpec {
    match template {
        KernelSpec::Biased { p, .. } => KernelSpec::Biased {
            horizon,
            p: p.clone(),
        },
        KernelSpec::Asymmetric { p, .. } => KernelSpec::Asymmetric {
            horizon,
            p: p.clone(),
        },
        KernelSpec::ScalingLimit { .. } => KernelSpec::ScalingLimit {
            horizon: horizon as f64,
        },
        other => other.clone(),
    }
}

pub fn kernel_table(args: &KernelTableArgs, file: &FileConfig) -> Result<CommandOutput, CliError> {
    let horizons = match args.horizons.as_deref().or(file.horizons.as_deref()) {
        Some(text) => parse_grid(text)?,
        None => vec![1],
    };
    let separations = match args.separations.as_deref().or(file.separations.as_deref()) {
        Some(text) => parse_grid(text)?,
        None => {
            return Err(CliError::Usage(
                "no separation grid given: pass --delta lo..hi".into(),
            ))
        }
    };
    let template = match kernel_from_flags(args, horizons[0])? {
        Some(spec) => spec,
        None => match &file.kernel {
            Some(config) => kernel_from_config(config)?,
            None => {
                return Err(CliError::Usage(
                    "no kernel given: pass --kind or put a kernel in the config".into(),
                ))
            }
        },
    };

    let continuum_times: Option<Vec<f64>> = match &template {
        KernelSpec::Poisson { .. } | KernelSpec::Bidirectional { .. } => Some(
            match args.times.as_deref() {
                Some(text) => parse_float_list(text)?,
                None => match &file.times {
                    Some(times) => times.clone(),
                    None => match &template {
                        KernelSpec::Poisson { time, .. }
                        | KernelSpec::Bidirectional { time, .. } => vec![*time],
                        _ => unreachable!(),
                    },
                },
            },
        ),
        _ => None,
    };

    let mut table = Table::new(vec!["t", "separation", "value", "exact"]);
    match continuum_times {
        Some(times) => {
            for &time in &times {
                let spec = match &template {
                    KernelSpec::Poisson { rate, .. } => KernelSpec::Poisson { rate: *rate, time },
                    KernelSpec::Bidirectional {
                        rate_up, rate_down, ..
                    } => KernelSpec::Bidirectional {
                        rate_up: *rate_up,
                        rate_down: *rate_down,
                        time,
                    },
                    _ => unreachable!(),
                };
                for &sep in &separations {
                    let value = spec.a_crossing_sites(sep).map_err(internal)?;
                    table.push(vec![
                        Cell::Float(time),
                        Cell::Int(sep),
                        Cell::Float(value.to_f64()),
                        Cell::Empty,
                    ]);
                }
            }
        }
        None => {
            for &t in &horizons {
                let spec = kernel_at(&template, t);
                for &sep in &separations {
                    let value = spec.a_crossing_sites(sep).map_err(internal)?;
                    let exact = match &value {
                        ProbabilityValue::Exact(r) => Cell::Text(r.to_string()),
                        ProbabilityValue::Float(_) => Cell::Empty,
                    };
                    table.push(vec![
                        Cell::Int(t),
                        Cell::Int(sep),
                        Cell::Float(value.to_f64()),
                        exact,
                    ]);
                }
            }
        }
    }
    Ok(CommandOutput { table, flag: None })
}

pub fn simulate(
    args: &SimulateArgs,
    file: &FileConfig,
    seed: Option<u64>,
) -> Result<CommandOutput, CliError> {
    let field = resolve_field(&args.p, &args.polya, &file.field)?;
    let horizon = args
        .horizon
        .or(file.horizon)
        .ok_or_else(|| CliError::Usage("no --horizon given".into()))?;
    if horizon < 0 {
        return Err(CliError::Usage("--horizon must be nonnegative".into()));
    }
    let (lo, hi) = match (&args.window, &file.window) {
        (Some(text), _) => {
            let grid = parse_grid(text)?;
            (*grid.first().unwrap(), *grid.last().unwrap())
        }
        (None, Some(pair)) => *pair,
        (None, None) => {
            return Err(CliError::Usage(
                "no --window given for the initial boundaries".into(),
            ))
        }
    };
    if lo > hi {
        return Err(CliError::Usage(format!("empty window {lo}..{hi}")));
    }
    let streams = args.streams.or(file.streams).unwrap_or(1);
    let seed = seed.ok_or_else(|| CliError::Usage("simulate needs --seed".into()))?;

    let region = forward_choice_region(lo..=hi, horizon);
    let mut table = Table::new(vec!["stream", "diagonal", "position"]);
    for k in 0..streams {
        let choices =
            sample_choices(&field, &region, sample_stream(seed, k)).map_err(internal)?;
        for m in 0..=horizon {
            let positions = forward_boundaries(&choices, lo..=hi, m).map_err(internal)?;
            for p in positions {
                table.push(vec![Cell::Uint(k), Cell::Int(m), Cell::Int(p)]);
            }
        }
    }
    Ok(CommandOutput { table, flag: None })
}

struct CheckSet {
    table: Table,
    failures: u32,
}

impl CheckSet {
    fn new() -> Self {
        CheckSet {
            table: Table::new(vec!["check", "status", "detail"]),
            failures: 0,
        }
    }

    fn run(&mut self, name: &str, check: impl FnOnce() -> Result<(), String>) {
        match check() {
            Ok(()) => self.table.push(vec![
                Cell::Text(name.into()),
                Cell::Text("ok".into()),
                Cell::Empty,
            ]),
            Err(detail) => {
                self.failures += 1;
                // commas would break the CSV row
                let detail = detail.replace(',', ";");
                self.table.push(vec![
                    Cell::Text(name.into()),
                    Cell::Text("FLAG".into()),
                    Cell::Text(detail),
                ]);
            }
        }
    }
}

fn expect(condition: bool, message: impl Into<String>) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(message.into())
    }
}

fn lib<T>(result: checkerboard::Result<T>) -> Result<T, String> {
    result.map_err(|e| e.to_string())
}

fn rational(n: i64, d: i64) -> RationalProbability {
    RationalProbability::from_ints(n, d).expect("verify constants are probabilities")
}

pub fn verify(
    args: &VerifyArgs,
    file: &FileConfig,
    seed: Option<u64>,
    samples: Option<u64>,
) -> Result<CommandOutput, CliError> {
    let profile = args
        .profile
        .or(file.profile)
        .unwrap_or(Profile::Quick);
    let seed = seed.unwrap_or(0x5eed);
    let mc_samples = samples.unwrap_or(match profile {
        Profile::Quick => 200_000,
        Profile::Full => 1_000_000,
    });
    let unit = |t: i64, sites: &[i64]| IntervalSpec::units(t, sites).expect("verify specs");
    let touching = |t: i64| {
        IntervalSpec::new(
            t,
            &[
                (Coord::half_odd(-1), Coord::half_odd(0)),
                (Coord::half_odd(0), Coord::half_odd(2)),
            ],
        )
        .expect("verify specs")
    };
    let ps = [rational(1, 2), rational(1, 3)];

    let mut checks = CheckSet::new();
    checks.run("duality-triple", || {
        let deep = if profile == Profile::Full { 3 } else { 2 };
        for p in &ps {
            let field = WeightField::constant(p.clone());
            for t in 1..=deep {
                for spec in [unit(t, &[0]), unit(t, &[0, 2]), touching(t)] {
                    let [a, b, c] = lib(enumerate_all_events(&field, &spec))?;
                    expect(a == b && b == c, format!("split at p={p}, T={t}"))?;
                }
            }
        }
        Ok(())
    });
    checks.run("pfaffian-vs-lineage-dp", || {
        for p in &ps {
            let field = WeightField::constant(p.clone());
            for spec in [unit(1, &[0]), unit(3, &[0]), unit(4, &[0, 3]), touching(2)] {
                let pf = lib(empty_interval_probability(&field, &spec))?;
                let dp = lib(lineage_dp(&field, &spec))?;
                expect(
                    pf.exact() == Some(&dp),
                    format!("pfaffian {pf} vs dp {dp} at p={p}"),
                )?;
            }
        }
        Ok(())
    });
    checks.run("terminal-vs-determinant", || {
        let deep = if profile == Profile::Full { 12 } else { 8 };
        for p in [rational(1, 2), rational(1, 3), rational(9, 10)] {
            for t in 0..=deep {
                for sep in 0..=(2 * t) {
                    let a = lib(a_crossing_terminal(t, &p, sep))?;
                    let b = lib(a_crossing_determinant(t, &p, sep))?;
                    expect(a == b, format!("T={t}, sep={sep}, p={p}"))?;
                }
            }
        }
        Ok(())
    });
    checks.run("asymmetric-normalization", || {
        for p in [rational(1, 2), rational(9, 10)] {
            for t in 0..=10 {
                let mut total = BigRational::from_integer(0.into());
                for displacement in -t..=0 {
                    total += w_asymmetric(t, &p, displacement);
                }
                expect(total.is_one(), format!("sums to {total} at T={t}, p={p}"))?;
            }
        }
        Ok(())
    });
    checks.run("continuum-kernels", || {
        for rate in [0.5, 2.0, 8.0] {
            for sep in [1, 2, 5] {
                let a = lib(a_crossing_poisson(rate, 1.0, sep))?;
                let b = lib(a_crossing_skellam(rate, 1.0, sep))?;
                let c = lib(a_crossing_bidirectional(rate / 2.0, rate / 2.0, 1.0, sep))?;
                expect(
                    (a - b).abs() <= 1e-12 && (a - c).abs() <= 1e-12,
                    format!("rate {rate}, sep {sep}: {a} vs {b} vs {c}"),
                )?;
            }
        }
        Ok(())
    });
    checks.run("mobius-vs-pfaffian", || {
        for p in &ps {
            let field = WeightField::constant(p.clone());
            for t in [1, 4] {
                for sites in [&[0][..], &[0, 2][..], &[0, 1, 4][..]] {
                    let set = lib(SiteSet::new(t, sites))?;
                    let a = lib(correlation_pfaffian(&field, &set))?;
                    let b = lib(correlation_mobius(&field, &set))?;
                    expect(
                        a.exact().is_some() && a.exact() == b.exact(),
                        format!("T={t}, p={p}, sites {sites:?}"),
                    )?;
                }
            }
        }
        Ok(())
    });
    checks.run("pfaffian-engines", || {
        let mut state = 0x7a11_5eedu64;
        let mut entry = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            BigRational::new(((state % 19) as i64 - 9).into(), 7.into())
        };
        for order in [4usize, 6, 8] {
            let mut upper = vec![BigRational::from_integer(0.into()); order * order];
            for r in 0..order {
                for c in (r + 1)..order {
                    upper[r * order + c] = entry();
                }
            }
            let matrix = SkewMatrix::try_from_upper(order, |r, c| {
                Ok(upper[r * order + c].clone())
            })
            .expect("skew assembly");
            let exact = lib(pfaffian_exact(&matrix))?;
            if order == 4 {
                let a = |r: usize, c: usize| matrix.get(r, c).clone();
                let expansion = a(0, 1) * a(2, 3) - a(0, 2) * a(1, 3) + a(0, 3) * a(1, 2);
                expect(exact == expansion, "4x4 expansion mismatch")?;
            }
            let float = lib(pfaffian_float(&matrix.to_float()))?;
            let reference = bigrational_f64(&exact);
            expect(
                (float - reference).abs() <= 1e-11 * reference.abs().max(1.0),
                format!("order {order}: float {float} vs exact {reference}"),
            )?;
        }
        Ok(())
    });
    checks.run("erfc-limit", || {
        let exact = lib(a_crossing_terminal(10_000, &rational(1, 2), 100))?.to_f64();
        let limit = a_crossing_erfc(100.0, 10_000.0);
        let rel = (exact - limit).abs() / limit;
        expect(rel <= 0.02, format!("rel {rel:.4}"))
    });
    checks.run("monte-carlo-empty-interval", || {
        let field = WeightField::constant(rational(1, 2));
        let spec = unit(8, &[0]);
        let pf = lib(empty_interval_probability(&field, &spec))?.to_f64();
        let mc = lib(estimate_event(
            &field,
            &spec,
            EventKind::EmptyInterval,
            mc_samples,
            seed,
        ))?;
        let z = mc.z_score(pf);
        expect(
            z <= MC_FLAG_SIGMA,
            format!("z = {z:.2}: mc {:.6} vs pf {pf:.6}", mc.mean),
        )
    });
    checks.run("monte-carlo-correlation", || {
        let field = WeightField::constant(rational(1, 3));
        let set = lib(SiteSet::new(4, &[0, 2]))?;
        let reference = lib(correlation_pfaffian(&field, &set))?.to_f64();
        let mc = lib(estimate_correlation(&field, &set, mc_samples, seed))?;
        let z = mc.z_score(reference);
        expect(
            z <= MC_FLAG_SIGMA,
            format!("z = {z:.2}: mc {:.6} vs pf {reference:.6}", mc.mean),
        )
    });

    if profile == Profile::Full {
        checks.run("duality-triple-deep", || {
            for p in &ps {
                let field = WeightField::constant(p.clone());
                let wide = IntervalSpec::new(
                    3,
                    &[(Coord::half_odd(-1), Coord::half_odd(3))],
                )
                .expect("verify specs");
                let [a, b, c] = lib(enumerate_all_events(&field, &wide))?;
                expect(a == b && b == c, format!("wide split at p={p}"))?;
            }
            Ok(())
        });
        checks.run("per-sample-duality", || {
            let field = WeightField::constant(rational(2, 5));
            let spec = unit(8, &[0, 3]);
            let region = forward_choice_region(spec.required_window(), spec.diagonal());
            for k in 0..20_000u64 {
                let choices = lib(sample_choices(&field, &region, sample_stream(seed, k)))?;
                let mut last = None;
                for event in EventKind::ALL {
                    let hit = lib(checkerboard::forests::event_indicator(
                        &choices, &spec, event,
                    ))?;
                    if let Some(previous) = last {
                        expect(previous == hit, format!("sample {k} split on {event}"))?;
                    }
                    last = Some(hit);
                }
            }
            Ok(())
        });
        checks.run("monte-carlo-deep", || {
            let field = WeightField::constant(rational(1, 2));
            for spec in [
                unit(16, &[0]),
                IntervalSpec::new(16, &[(Coord::half_odd(-1), Coord::half_odd(2))])
                    .expect("verify specs"),
            ] {
                let pf = lib(empty_interval_probability(&field, &spec))?.to_f64();
                let mc = lib(estimate_event(
                    &field,
                    &spec,
                    EventKind::EmptyInterval,
                    mc_samples,
                    seed,
                ))?;
                let z = mc.z_score(pf);
                expect(z <= MC_FLAG_SIGMA, format!("z = {z:.2} at depth 16"))?;
            }
            Ok(())
        });
        checks.run("quadrant-exact", || {
            let field = WeightField::polya_shifted(5, 9);
            let specs = [
                IntervalSpec::new(1, &[(Coord::half_odd(-1), Coord::half_odd(0))]),
                IntervalSpec::new(2, &[(Coord::half_odd(0), Coord::half_odd(2))]),
                IntervalSpec::new(3, &[(Coord::half_odd(1), Coord::half_odd(4))]),
                IntervalSpec::new(
                    2,
                    &[
                        (Coord::half_odd(0), Coord::half_odd(1)),
                        (Coord::half_odd(2), Coord::half_odd(3)),
                    ],
                ),
            ];
            for spec in specs {
                let spec = spec.expect("verify specs");
                let pf = lib(empty_interval_probability(&field, &spec))?;
                let enumerated =
                    lib(enumerate_event_probability(&field, &spec, EventKind::EmptyInterval))?;
                expect(
                    pf.exact() == Some(&enumerated),
                    format!("pfaffian {pf} vs enumeration {enumerated}"),
                )?;
            }
            Ok(())
        });
    }

    let failures = checks.failures;
    Ok(CommandOutput {
        table: checks.table,
        flag: (failures > 0).then(|| format!("{failures} verification check(s) flagged")),
    })
}

fn bigrational_f64(value: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    value.to_f64().expect("verify values are finite")
}
