use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use scaledwave::exponents::{classify, ProblemParams};
use scaledwave::harness::{emit_report, run_sweep, RunConfig, SweepPlan, SweepRecord};
use scaledwave::ode_comparison::{
    fit_ode_lifespan_exponent, log_spaced_epsilons, IntegratorOptions, ProofLedger, SeedOptions,
};
use scaledwave::special_functions::TestFunctionContext;
use scaledwave::wave_solver::{run_until_blowup, LIFESPAN_CAVEAT};

#[derive(Parser)]
#[command(
    name = "scaledwave",
    version,
    about = "Blow-up experiments for the scale-invariant damped wave equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a parameter point against the known blow-up criteria.
    Classify {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
        a: u8,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(0..=1))]
        b: u8,
        /// One-line JSON record instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Tabulate the ball integral of psi^r against its growth bound.
    VerifyLemmas {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        tmax: f64,
        /// Spacing of the sampled times.
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Also write the rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the radial solver once and write its functional trace.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overwrite an existing trace.
        #[arg(long)]
        force: bool,
    },
    /// Fit the lifespan exponent of the comparison ODE.
    OdeFit {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        eps_start: f64,
        #[arg(long)]
        eps_decades: u32,
        #[arg(long)]
        points: usize,
        /// Forcing of the |u_t|^p channel relative to eps^p; 0 disables it.
        #[arg(long, default_value_t = 1.0)]
        source_kappa: f64,
        #[arg(long)]
        json: bool,
    },
    /// Epsilon sweep of the solver with a log-log lifespan fit.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        force: bool,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Classify {
            n,
            p,
            q,
            mu,
            a,
            b,
            json,
        } => cmd_classify(n, p, q, mu, a == 1, b == 1, json),
        Command::VerifyLemmas { n, r, tmax, step, csv } => cmd_verify_lemmas(n, r, tmax, step, csv),
        Command::Solve { config, out, force } => cmd_solve(config, out, force),
        Command::OdeFit {
            n,
            p,
            q,
            mu,
            eps_start,
            eps_decades,
            points,
            source_kappa,
            json,
        } => cmd_ode_fit(n, p, q, mu, eps_start, eps_decades, points, source_kappa, json),
        Command::Sweep {
            config,
            out,
            workers,
            force,
        } => cmd_sweep(config, out, workers, force),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_owned(), |v| format!("{v:.6}"))
}

fn cmd_classify(n: u32, p: f64, q: f64, mu: f64, a: bool, b: bool, as_json: bool) -> Result<()> {
    let params = ProblemParams::new(n, mu, p, q, 1.0)?.with_switches(a, b);
    let c = classify(&params)?;
    if as_json {
        println!("{}", serde_json::to_string(&c)?);
        return Ok(());
    }
    let ext = |e: scaledwave::Extended<f64>| match e {
        scaledwave::Extended::Finite(x) => format!("{x:.6}"),
        scaledwave::Extended::PosInfinity => "+inf".to_owned(),
    };
    let applicable: Vec<String> = c.applicable.iter().map(ToString::to_string).collect();
    println!("{:<20} {}", "strauss_q(N+mu)", ext(c.strauss_q));
    println!("{:<20} {}", "glassey_p(N+2mu)", ext(c.glassey_p));
    println!("{:<20} {:.6}", "lambda(p,q,N+2mu)", c.lambda_shifted);
    println!("{:<20} {:.6}", "mu_star", c.mu_star);
    println!("{:<20} {:.6}", "mu_cap", c.mu_cap);
    println!("{:<20} {}", "verdict", c.verdict);
    println!(
        "{:<20} {}",
        "applicable",
        if applicable.is_empty() {
            "-".into()
        } else {
            applicable.join(", ")
        }
    );
    println!("{:<20} {}", "lifespan_exponent", opt(c.lifespan_exponent));
    println!("{:<20} {}", "note", c.precedence_note);
    Ok(())
}

fn cmd_verify_lemmas(n: u32, r: f64, tmax: f64, step: f64, csv: Option<PathBuf>) -> Result<()> {
    if !(step > 0.0 && tmax >= 0.0) {
        bail!("need --step > 0 and --tmax >= 0");
    }
    let ctx = TestFunctionContext::<f64>::new(n)?;
    let power = ctx.lemma1_power(r);
    let count = (tmax / step + 1e-9).floor() as usize;
    let mut out = String::from("t,integral,bound_power,ratio\n");
    println!("{:>10} {:>22} {:>22} {:>22}", "t", "integral", "bound_power", "ratio");
    for i in 0..=count {
        let t = i as f64 * step;
        let integral = ctx.lemma1_integral(r, t)?;
        let bound = (1.0 + t).powf(power);
        let ratio = integral / bound;
        println!("{t:>10.4} {integral:>22.12e} {bound:>22.12e} {ratio:>22.12e}");
        out.push_str(&format!("{t:.16e},{integral:.16e},{bound:.16e},{ratio:.16e}\n"));
    }
    if let Some(path) = csv {
        fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_solve(config: PathBuf, out: PathBuf, force: bool) -> Result<()> {
    let cfg = RunConfig::<f64>::from_path(&config).with_context(|| format!("reading {}", config.display()))?;
    if out.exists() && !force {
        bail!(scaledwave::Error::OutputExists(out));
    }
    let grid = cfg.grid()?;
    let report = run_until_blowup(&cfg.params, &cfg.data, &grid, &cfg.controls)?;
    fs::write(&out, report.trace.to_csv()).with_context(|| format!("writing {}", out.display()))?;
    println!("outcome: {}", report.outcome);
    println!("steps: {}", report.steps);
    println!("rows: {}", report.trace.rows.len());
    eprintln!("note: {LIFESPAN_CAVEAT}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_ode_fit(
    n: u32,
    p: f64,
    q: f64,
    mu: f64,
    eps_start: f64,
    decades: u32,
    points: usize,
    source_kappa: f64,
    as_json: bool,
) -> Result<()> {
    let params = ProblemParams::new(n, mu, p, q, eps_start)?;
    let eps = log_spaced_epsilons(eps_start, decades, points)?;
    let seed = SeedOptions {
        source_kappa,
        ..SeedOptions::default()
    };
    let fit = fit_ode_lifespan_exponent(&params, &eps, &seed, &IntegratorOptions::default())?;
    let ledger = ProofLedger::from_fit(&params, &fit)?;
    if as_json {
        let rows: Vec<_> = fit
            .rows
            .iter()
            .map(|&(e, t)| json!({"epsilon": e, "escape_time": t}))
            .collect();
        let record = json!({
            "rows": rows,
            "slope": fit.fit.slope,
            "intercept": fit.fit.intercept,
            "max_residual": fit.fit.max_residual,
            "residual_norm": fit.fit.residual_norm,
            "predicted_slope": fit.predicted_slope,
            "relative_slope_error": fit.relative_slope_error,
            "ledger": ledger,
            "constants": "fitted",
        });
        println!("{}", serde_json::to_string(&record)?);
        return Ok(());
    }
    println!("{:>14} {:>22}", "epsilon", "escape_time");
    for (e, t) in &fit.rows {
        println!("{e:>14.6e} {t:>22.12e}");
    }
    println!("slope                 {:.6}", fit.fit.slope);
    println!("predicted slope       {:.6}", fit.predicted_slope);
    println!("relative slope error  {:.4}", fit.relative_slope_error);
    println!("max log residual      {:.3e}", fit.fit.max_residual);
    println!("delta0                {}", ledger.delta0);
    println!("gamma                 {:.6}", ledger.gamma);
    println!("C0 (fitted)           {:.6e}", ledger.c0_fitted);
    println!("C1 (fitted)           {:.6e}", ledger.c1_fitted);
    println!("T0 at eps_start       {:.6e}", ledger.t0);
    Ok(())
}

fn cmd_sweep(config: PathBuf, out: PathBuf, workers: usize, force: bool) -> Result<()> {
    let cfg = RunConfig::<f64>::from_path(&config).with_context(|| format!("reading {}", config.display()))?;
    let plan = SweepPlan::from_config(&cfg, workers)?;
    let fit = run_sweep(&plan)?;
    let record = SweepRecord::new(&plan, fit);
    let paths = emit_report(&record, &out, force)?;
    let fit = &record.fit;
    println!("{:>12} {:>22} {:>8}  note", "epsilon", "T_num", "outcome");
    for r in &fit.rows {
        let note = r.reason.as_deref().or(r.warning.as_deref()).unwrap_or("");
        println!("{:>12.6} {:>22} {:>8}  {note}", r.epsilon, opt(r.t_num), r.outcome);
    }
    match fit.failure.as_deref() {
        None => {
            println!("slope                 {}", opt(fit.slope));
            println!("predicted slope       {}", opt(fit.predicted_slope));
            println!("relative slope error  {}", opt(fit.relative_slope_error));
        }
        Some(why) => println!("fit failed: {why}"),
    }
    if !fit.monotonicity_violations.is_empty() {
        println!(
            "warning: T_num not monotone in eps at rows {:?}",
            fit.monotonicity_violations
        );
    }
    println!("config hash {}", record.config_hash);
    println!("wrote {} and {}", paths.record.display(), paths.csv.display());
    eprintln!("note: {}", record.inequality_note);
    eprintln!("note: {LIFESPAN_CAVEAT}");
    Ok(())
}
