use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use weakdr::driver::solve;
use weakdr::guarantee::{csv_row, optimize_phi, PhiGrid, PhiResult, CSV_HEADER};
use weakdr::objective::{estimate_gamma, Objective};
use weakdr::verify::{run_suite, Suite, SuiteOptions, SuiteReport};

use crate::error::CliError;
use crate::instance::{instance_hash, InstanceFile};
use crate::report::{SolveReportFile, REPORT_SCHEMA_VERSION};
use crate::{Command, EstimateArgs, GuaranteeArgs, SolveArgs, SuiteArg, VerifyArgs};

pub fn dispatch(command: &Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Guarantee(args) => guarantee(args, out),
        Command::Solve(args) => solve_instance(args, out),
        Command::Verify(args) => verify(args, out),
        Command::EstimateGamma(args) => estimate(args, out),
    }
}

fn stdout_error(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Values of an inclusive `start:stop:step` range, snapped to 12 decimals so
/// that `0.1:1.0:0.1` yields exactly ten points.
pub fn parse_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |msg: &str| CliError::Usage(format!("--range {spec}: {msg}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, s] = parts[..] else {
        return Err(bad("expected start:stop:step"));
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad(&format!("`{x}` is not a number")));
    let (a, b, s) = (num(a)?, num(b)?, num(s)?);
    if !(s > 0.0) || !a.is_finite() || !b.is_finite() || b < a {
        return Err(bad("need start <= stop and step > 0"));
    }
    let count = ((b - a) / s + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| ((a + k as f64 * s) * 1e12).round() / 1e12).collect())
}

fn guarantee(args: &GuaranteeArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut gammas = args.gammas.clone();
    if let Some(range) = &args.range {
        gammas.extend(parse_range(range)?);
    }
    if gammas.is_empty() {
        return Err(CliError::Usage("give at least one --gamma or a --range".into()));
    }
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
        return Err(CliError::Usage(format!("gamma {g} lies outside (0, 1]")));
    }
    if args.shards == 0 {
        return Err(CliError::Usage("--shards must be at least 1".into()));
    }
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    let grid = PhiGrid {
        r_max: args.r_max,
        grid_r: args.grid_r,
        grid_t: args.grid_t,
        shards: args.shards,
    };
    let rows = gammas
        .iter()
        .map(|&g| optimize_phi(g, &grid).map_err(|e| CliError::Usage(e.to_string())))
        .collect::<Result<Vec<PhiResult>, _>>()?;
    let mut csv = format!("{CSV_HEADER}\n");
    for row in &rows {
        csv.push_str(&csv_row(row));
        csv.push('\n');
    }
    match &args.output {
        Some(path) => write_file(path, &csv)?,
        None => out.write_all(csv.as_bytes()).map_err(stdout_error)?,
    }
    Ok(0)
}

fn solve_instance(args: &SolveArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let file = InstanceFile::read(&args.instance)?;
    let mut inst = file.load()?;
    if args.max_calls == Some(0) || args.max_levels == Some(0) {
        return Err(CliError::Usage("budget limits must be at least 1".into()));
    }
    inst.budget.max_calls = args.max_calls.unwrap_or(inst.budget.max_calls);
    inst.budget.max_levels = args.max_levels.unwrap_or(inst.budget.max_levels);

    let started = Instant::now();
    let report = solve(&inst.objective, &inst.body, &inst.config, &inst.budget, inst.seed)?;
    let elapsed = started.elapsed().as_secs_f64();

    let file_report = SolveReportFile {
        schema_version: REPORT_SCHEMA_VERSION,
        library_version: weakdr::VERSION.to_string(),
        instance_hash: instance_hash(&file),
        wall_time_seconds: (!args.no_timestamp).then_some(elapsed),
        created_unix_seconds: (!args.no_timestamp)
            .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())),
        gamma: inst.gamma,
        gamma_source: inst.gamma_source,
        smoothness: inst.objective.smoothness(),
        smoothness_source: inst.smoothness_source,
        config: inst.config,
        budget: inst.budget,
        seed: inst.seed,
        report,
    };
    if let Some(path) = &args.output {
        write_file(path, &file_report.to_json())?;
    }
    let r = &file_report.report;
    writeln!(out, "best_value: {}", r.best_value).map_err(stdout_error)?;
    if r.partial {
        writeln!(out, "partial: call budget of {} exhausted", inst.budget.max_calls).map_err(stdout_error)?;
    }
    Ok(0)
}

fn suite_of(arg: SuiteArg) -> Vec<Suite> {
    match arg {
        SuiteArg::Lemmas => vec![Suite::Lemmas],
        SuiteArg::DoubleGreedy => vec![Suite::DoubleGreedy],
        SuiteArg::FwgConsistency => vec![Suite::FwgConsistency],
        SuiteArg::All => Suite::ALL.to_vec(),
    }
}

pub fn default_tolerance(suite: Suite) -> f64 {
    match suite {
        Suite::Lemmas => 1e-6,
        _ => 1e-7,
    }
}

fn print_suite(report: &SuiteReport, out: &mut dyn Write) -> std::io::Result<()> {
    let status = if report.passed() { "ok" } else { "FAILED" };
    writeln!(out, "{}: {} ({} trials)", report.suite.name(), status, report.trials)?;
    for (check, t) in &report.tallies {
        writeln!(out, "  {check}: {}/{} on {} instances", t.passed, t.total, t.instances)?;
    }
    Ok(())
}

fn verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if let Some(tol) = args.tol {
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(CliError::Usage("--tol must be finite and nonnegative".into()));
        }
    }
    let mut all_passed = true;
    for suite in suite_of(args.suite) {
        let opts = SuiteOptions {
            trials: args.trials,
            seed: args.seed,
            tol: args.tol.unwrap_or(default_tolerance(suite)),
        };
        let report = run_suite(suite, &opts)?;
        print_suite(&report, out).map_err(stdout_error)?;
        for failure in &report.failures {
            all_passed = false;
            writeln!(out, "  failure in {} (trial {}): {}", failure.check, failure.trial, failure.detail)
                .map_err(stdout_error)?;
            if let Some(inst) = &failure.instance {
                fs::create_dir_all(&args.replay_dir).map_err(|e| CliError::io(&args.replay_dir, e))?;
                let path = args
                    .replay_dir
                    .join(format!("replay-{}-{}-{}.json", suite.name(), failure.check, failure.trial));
                write_file(&path, &InstanceFile::from_certified(inst, args.seed).to_json())?;
                writeln!(out, "  counterexample written to {}", path.display()).map_err(stdout_error)?;
            }
        }
        all_passed &= report.passed();
    }
    Ok(if all_passed { 0 } else { 1 })
}

fn estimate(args: &EstimateArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let file = InstanceFile::read(&args.instance)?;
    let inst = file.load()?;
    if args.samples < 100 {
        return Err(CliError::Usage("--samples must be at least 100".into()));
    }
    let est = estimate_gamma(&inst.objective, args.samples, args.seed.unwrap_or(file.seed))?;
    let w = |e: std::io::Error| stdout_error(e);
    writeln!(out, "gamma_hat: {:.6}", est.gamma).map_err(w)?;
    writeln!(out, "samples: {}", est.samples).map_err(w)?;
    writeln!(out, "ratios_checked: {}", est.ratios_checked).map_err(w)?;
    match &est.worst {
        Some(p) => {
            writeln!(out, "worst_coordinate: {}", p.coordinate).map_err(w)?;
            writeln!(out, "worst_ratio: {:.6}", p.ratio).map_err(w)?;
            writeln!(out, "worst_lower: {:?}", p.lower.coords()).map_err(w)?;
            writeln!(out, "worst_upper: {:?}", p.upper.coords()).map_err(w)?;
        }
        None => writeln!(out, "worst_pair: none").map_err(w)?,
    }
    if est.degenerate {
        writeln!(out, "warning: no positive gradient was observed; the oracle is degenerate and gamma_hat defaults to 1")
            .map_err(w)?;
    }
    Ok(0)
}
