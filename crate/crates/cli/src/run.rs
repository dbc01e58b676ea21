//! Subcommand execution: parse the plan's literals, drive the lab
//! modules, and assemble byte-stable reports.

use dirca_core::binom::{self, DigitStream, Variant};
use dirca_core::cone::{parse_rational, DirectionCone};
use dirca_core::cylinder::{
    cylinder_measure, event_measure_enumerated, event_measure_field, Cylinder, EventSpec,
};
use dirca_core::entropy::{sequence_entropy_profile, verify_atom_structure};
use dirca_core::mixing::{cone_average_deviation, decay_profile};
use dirca_core::orbit::{birkhoff_average, orbit_window_requirement, sample_config};
use dirca_core::rng::derive_seed;
use dirca_core::window::{column_trace, column_trace_generic};
use dirca_core::{
    ActionIndex, Error as CoreError, LocalRule, Modulus, Rational, SequenceS, WindowConfig,
};

use crate::config::{ExperimentPlan, LogBase};
use crate::report::{real17, Report};

/// Runner failure, tagged with the exit code it maps to.
#[derive(Debug)]
pub enum RunError {
    /// Exit 1: bad plan or bad input.
    Config(String),
    /// Exit 2: an enumeration exceeded the assignment budget.
    Budget(String),
    /// Exit 3: an internal invariant did not hold.
    Invariant(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Budget(_) => 2,
            RunError::Invariant(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Config(m) | RunError::Budget(m) | RunError::Invariant(m) => m,
        }
    }
}

impl From<crate::config::ConfigError> for RunError {
    fn from(e: crate::config::ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

fn lift(e: CoreError) -> RunError {
    match e {
        CoreError::BudgetExceeded { .. } => RunError::Budget(e.to_string()),
        CoreError::Overflow(_) => RunError::Invariant(e.to_string()),
        other => RunError::Config(other.to_string()),
    }
}

type RunResult = Result<Report, RunError>;

fn parse_rule(plan: &ExperimentPlan) -> Result<LocalRule, RunError> {
    LocalRule::parse(plan.require("rule")?).map_err(lift)
}

fn rebase(nats: f64, log_base: LogBase, a: u32) -> f64 {
    match log_base {
        LogBase::Nats => nats,
        LogBase::Bits => nats / std::f64::consts::LN_2,
        LogBase::BaseA => nats / (a as f64).ln(),
    }
}

pub fn run(plan: &ExperimentPlan) -> RunResult {
    match plan.subcommand {
        crate::config::Subcommand::Entropy => run_entropy(plan),
        crate::config::Subcommand::Mixing => run_mixing(plan),
        crate::config::Subcommand::Ergodic => run_ergodic(plan),
        crate::config::Subcommand::Binom => run_binom(plan),
        crate::config::Subcommand::Selftest => run_selftest(plan),
    }
}

fn run_entropy(plan: &ExperimentPlan) -> RunResult {
    let rule = parse_rule(plan)?;
    let partition_radius = plan.parse_u64("M")?.unwrap_or(1) as u32;
    let seq = SequenceS::parse(plan.require("seq")?).map_err(lift)?;
    let check_structure = match plan.get("structure") {
        None | Some("true") => true,
        Some("false") => false,
        Some(other) => {
            return Err(RunError::Config(format!(
                "key `structure`: expected true|false, got {other:?}"
            )))
        }
    };

    let profile =
        sequence_entropy_profile(&seq, partition_radius, &rule, plan.budget).map_err(lift)?;

    let mut columns = vec![
        "l",
        "H_nats",
        "H_per_step",
        "closed_form",
        "atoms",
        "window_lo",
        "window_hi",
        "uniform",
    ];
    let rebased = plan.log_base != LogBase::Nats;
    if rebased {
        columns.push("H_rebased");
    }
    let mut report = Report::new(plan, columns);

    let closed_form_nats = profile.closed_form.as_ref().map(|cf| cf.value_nats);
    for row in &profile.rows {
        let mut cells = vec![
            row.l.to_string(),
            real17(row.entropy_nats),
            real17(row.per_step_nats),
            closed_form_nats.map(real17).unwrap_or_default(),
            row.atoms.to_string(),
            row.window.lo.to_string(),
            row.window.hi.to_string(),
            row.uniform.to_string(),
        ];
        if rebased {
            cells.push(real17(rebase(
                row.entropy_nats,
                plan.log_base,
                rule.modulus().get(),
            )));
        }
        report.push(cells);
    }

    let nondecreasing = profile
        .rows
        .windows(2)
        .all(|w| w[1].entropy_nats >= w[0].entropy_nats - 1e-12);
    report.flag("entropy_nondecreasing", nondecreasing);
    report.flag("hypotheses_hold", profile.closed_form.is_some());
    if check_structure {
        let structure =
            verify_atom_structure(&seq, partition_radius, &rule, plan.budget).map_err(lift)?;
        report.flag("structure_pass", structure.pass());
    }
    Ok(report)
}

fn run_mixing(plan: &ExperimentPlan) -> RunResult {
    let rule = parse_rule(plan)?;
    let modulus = rule.modulus();
    let b_cyl = Cylinder::parse(plan.require("B")?, modulus).map_err(lift)?;
    let c_cyl = Cylinder::parse(plan.require("C")?, modulus).map_err(lift)?;
    let beta = parse_rational(plan.require("beta")?).map_err(lift)?;
    let width = parse_rational(plan.require("b")?).map_err(lift)?;
    let cone = DirectionCone::new(beta, width).map_err(lift)?;
    let k_max = plan.parse_u64("kmax")?.unwrap_or(20);

    let series = decay_profile(&b_cyl, &c_cyl, &cone, k_max, &rule, plan.budget).map_err(lift)?;

    let mut report = Report::new(plan, vec!["k", "cone_size", "D_k", "exact"]);
    for entry in &series.entries {
        report.push(vec![
            entry.k.to_string(),
            entry.cone_size.to_string(),
            real17(rational_f64(&entry.value)),
            entry.exact.to_string(),
        ]);
    }
    let first = &series.entries.first().expect("k_max >= 1").value;
    let last = &series.entries.last().expect("k_max >= 1").value;
    report.flag("deviation_decayed", last <= first);
    Ok(report)
}

fn rational_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn parse_direction(s: &str) -> Result<ActionIndex, RunError> {
    let bad = || RunError::Config(format!("key `dir`: expected m,n, got {s:?}"));
    let (m, n) = s.split_once(',').ok_or_else(bad)?;
    let m: u64 = m.parse().map_err(|_| bad())?;
    let n: i64 = n.parse().map_err(|_| bad())?;
    Ok(ActionIndex::new(m, n))
}

fn run_ergodic(plan: &ExperimentPlan) -> RunResult {
    let rule = parse_rule(plan)?;
    let modulus = rule.modulus();
    let b_cyl = Cylinder::parse(plan.require("B")?, modulus).map_err(lift)?;
    let dir = parse_direction(plan.require("dir")?)?;
    let horizon = plan.parse_u64("N")?.unwrap_or(10_000);
    let seeds = plan.parse_u64("seeds")?.unwrap_or(1);
    if horizon < 1 || seeds < 1 {
        return Err(RunError::Config("need N >= 1 and seeds >= 1".into()));
    }
    let stride = plan
        .parse_u64("stride")?
        .unwrap_or_else(|| (horizon / 100).max(1));
    if stride < 1 {
        return Err(RunError::Config("stride must be >= 1".into()));
    }
    let tolerance = plan.parse_f64("tolerance")?.unwrap_or(0.01);

    let expected = cylinder_measure(&b_cyl, modulus).to_f64();
    let window = orbit_window_requirement(dir, b_cyl.interval(), horizon, &rule);

    let mut report = Report::new(plan, vec!["seed", "t", "average"]);
    let mut within = 0usize;
    for i in 0..seeds {
        let seed = derive_seed(plan.seed, "orbit", i);
        let x = sample_config(seed, window, modulus);
        let stats = birkhoff_average(&x, dir, &b_cyl, horizon, &rule).map_err(lift)?;
        for (idx, &avg) in stats.running.iter().enumerate() {
            let t = idx as u64 + 1;
            if t.is_multiple_of(stride) || t == horizon {
                report.push(vec![seed.to_string(), t.to_string(), real17(avg)]);
            }
        }
        if (stats.final_average - expected).abs() < tolerance {
            within += 1;
        }
    }
    report.flag(
        "pass_fraction_ok",
        (within as f64 / seeds as f64) >= 0.95,
    );
    Ok(report)
}

fn run_binom(plan: &ExperimentPlan) -> RunResult {
    let base_k = plan.parse_u64("k")?.unwrap_or(2);
    let modulus = Modulus::new(base_k).map_err(lift)?;
    let n_spacing = plan.parse_u64("N")?.unwrap_or(1);
    let n_max = plan.parse_u64("nmax")?.unwrap_or(1000);
    let seeds = plan.parse_u64("seeds")?.unwrap_or(1);
    let tolerance = plan.parse_f64("tolerance")?.unwrap_or(0.01);
    let variants: Vec<Variant> = match plan.get("variant") {
        None | Some("paper") => vec![Variant::Paper],
        Some("action") => vec![Variant::Action],
        Some("both") => vec![Variant::Paper, Variant::Action],
        Some(other) => {
            return Err(RunError::Config(format!(
                "key `variant`: expected paper|action|both, got {other:?}"
            )))
        }
    };

    let mut columns: Vec<&'static str> = vec!["k", "N", "variant", "n_max", "seed"];
    let freq_names: Vec<String> = (0..base_k).map(|j| format!("freq_{j}")).collect();
    for name in &freq_names {
        columns.push(Box::leak(name.clone().into_boxed_str()));
    }
    columns.push("max_dev");
    let mut report = Report::new(plan, columns);

    let sweeps: Vec<Vec<binom::FreqReport>> = if variants.len() == 2 {
        let (paper, action) =
            binom::frequency_sweep_both(plan.seed, seeds, modulus, n_spacing, n_max)
                .map_err(lift)?;
        vec![paper, action]
    } else {
        vec![
            binom::frequency_sweep(plan.seed, seeds, modulus, n_spacing, n_max, variants[0])
                .map_err(lift)?,
        ]
    };
    for (variant, reports) in variants.iter().zip(&sweeps) {
        let within = reports
            .iter()
            .filter(|r| r.max_deviation < tolerance)
            .count();
        for (i, freq) in reports.iter().enumerate() {
            let seed = derive_seed(plan.seed, "binom", i as u64);
            let mut cells = vec![
                base_k.to_string(),
                n_spacing.to_string(),
                variant.tag().to_string(),
                n_max.to_string(),
                seed.to_string(),
            ];
            for &c in &freq.counts {
                cells.push(real17(c as f64 / freq.total as f64));
            }
            cells.push(real17(freq.max_deviation));
            report.push(cells);
        }
        report.flag(
            &format!("{}_pass_fraction_ok", variant.tag()),
            (within as f64 / seeds as f64) >= 0.95,
        );
    }

    if let Some(dump_path) = plan.get("dump-s") {
        if seeds != 1 || variants.len() != 1 {
            return Err(RunError::Config(
                "dump-s needs seeds=1 and a single variant".into(),
            ));
        }
        let variant = variants[0];
        let seed = derive_seed(plan.seed, "binom", 0);
        let len = match variant {
            Variant::Paper => (n_max * n_spacing + 1) as usize,
            Variant::Action => (n_max * (n_spacing + 1)) as usize,
        };
        let x = DigitStream::seeded(seed, modulus, len);
        let s = binom::sequence_s_engine(&x, n_spacing, n_max, variant).map_err(lift)?;
        let mut dump = String::from("n,s_n\n");
        for (i, &v) in s.iter().enumerate() {
            dump.push_str(&format!("{},{v}\n", i + 1));
        }
        crate::report::write_output(dump_path, &dump)
            .map_err(|e| RunError::Config(format!("cannot write {dump_path:?}: {e}")))?;
    }
    Ok(report)
}

/// The exact-invariant suite behind `dirca selftest`: fast, deterministic
/// checks that exercise every dual-route pairing. Exit 0 iff all pass.
fn run_selftest(plan: &ExperimentPlan) -> RunResult {
    let mut report = Report::new(plan, vec!["check", "pass"]);
    let budget = plan.budget;
    let mut checks: Vec<(&'static str, bool)> = Vec::new();

    let m2 = Modulus::new(2).unwrap();
    let rule90 = LocalRule::new(2, &[1, 0, 1]).unwrap();
    let pair = LocalRule::new(2, &[0, 1, 1]).unwrap();

    // packed vs generic column stepping
    {
        let mut ok = true;
        'outer: for len in [9usize, 12, 14] {
            let lo = -(len as i64 / 2);
            for pattern in 0..(1u32 << len) {
                let symbols: Vec<u8> = (0..len).map(|i| ((pattern >> i) & 1) as u8).collect();
                let w = WindowConfig::new(lo, symbols, m2).unwrap();
                for rule in [&rule90, &pair] {
                    let a = column_trace(&w, rule, 4, 0);
                    let b = column_trace_generic(&w, rule, 4, 0);
                    if a.ok() != b.ok() {
                        ok = false;
                        break 'outer;
                    }
                }
            }
        }
        checks.push(("packed_trace_matches_generic", ok));
    }

    // field route vs enumeration route
    {
        let b = Cylinder::new(0, vec![0], m2).unwrap();
        let mut ok = true;
        for n in -2..=4i64 {
            for m in 0..=3u64 {
                let e = EventSpec::new(vec![
                    (ActionIndex::new(m, n), b.clone()),
                    (ActionIndex::IDENTITY, b.clone()),
                ])
                .unwrap();
                let field = event_measure_field(&e, &rule90).unwrap();
                let enumerated = event_measure_enumerated(&e, &rule90, budget).unwrap();
                if field != enumerated {
                    ok = false;
                }
            }
        }
        checks.push(("field_route_matches_enumeration", ok));
    }

    // invariance of the measure under one automaton step (invertible ends)
    {
        let mut ok = true;
        for len in 1..=4usize {
            for pattern in 0..(1u32 << len) {
                let symbols: Vec<u8> = (0..len).map(|i| ((pattern >> i) & 1) as u8).collect();
                let b = Cylinder::new(0, symbols, m2).unwrap();
                let e = EventSpec::single(ActionIndex::new(1, 0), b.clone());
                let pulled = event_measure_field(&e, &rule90).unwrap();
                if pulled != cylinder_measure(&b, m2) {
                    ok = false;
                }
            }
        }
        checks.push(("measure_invariant_under_step", ok));
    }

    // Pascal rows against Lucas products
    {
        let mut ok = true;
        for p in [2u32, 3, 5] {
            let table = binom::LucasTable::new(p).unwrap();
            for n in 0..=128u64 {
                let row = binom::pascal_row_mod(n, p);
                for (l, &c) in row.iter().enumerate() {
                    if table.binom(n, l as u64) != c {
                        ok = false;
                    }
                }
            }
        }
        checks.push(("pascal_rows_match_lucas", ok));
    }

    // three-route digit sums
    {
        let x = DigitStream::seeded(derive_seed(plan.seed, "selftest", 0), m2, 500);
        let ok = binom::engine_vs_lucas_check(&x, 1, 200, Variant::Paper).unwrap()
            && binom::engine_vs_lucas_check(&x, 2, 150, Variant::Action).unwrap();
        checks.push(("digit_sum_routes_agree", ok));
    }

    // join structure for the invertible-ends rule
    {
        let seq = SequenceS::parse("syndetic:gap=1,len=3,n=0").unwrap();
        let ok = match verify_atom_structure(&seq, 1, &rule90, budget) {
            Ok(rep) => rep.pass(),
            Err(_) => false,
        };
        checks.push(("join_structure_full_partition", ok));
    }

    // first cone-averaged deviation of the one-sided pair rule
    {
        let b = Cylinder::new(0, vec![0, 0], m2).unwrap();
        let cone = DirectionCone::new(
            parse_rational("1").unwrap(),
            parse_rational("2").unwrap(),
        )
        .unwrap();
        let d1 = cone_average_deviation(&b, &b, &cone, 1, &pair, budget).unwrap();
        checks.push(("cone_average_depth_one", d1 == Rational::new(5, 48)));
    }

    // orbit evaluation against direct coordinate evaluation
    {
        let dir = ActionIndex::new(1, 1);
        let b = Cylinder::new(0, vec![0], m2).unwrap();
        let need = orbit_window_requirement(dir, b.interval(), 24, &pair);
        let x = sample_config(derive_seed(plan.seed, "selftest", 1), need, m2);
        let stats = birkhoff_average(&x, dir, &b, 24, &pair).unwrap();
        let mut hits = 0;
        for k in 0..24u64 {
            let act = ActionIndex::new(k, k as i64);
            if dirca_core::eval_coordinate(&x, act, &pair, 0).unwrap() == 0 {
                hits += 1;
            }
        }
        checks.push(("orbit_matches_direct_evaluation", stats.hits == hits));
    }

    let mut all = true;
    for (name, pass) in checks {
        println!("selftest {name}: {}", if pass { "PASS" } else { "FAIL" });
        report.push(vec![name.to_string(), pass.to_string()]);
        report.flag(name, pass);
        all &= pass;
    }
    if !all {
        return Err(RunError::Invariant("selftest failed".into()));
    }
    Ok(report)
}
