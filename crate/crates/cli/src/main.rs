//! `mtbrw` — batch driver for the multitype branching random walk
//! toolkit. Reads one experiment config, runs one command, writes
//! machine-readable CSV or JSON-lines output with every number at 17
//! significant digits.
//!
//! Exit codes are contractual: 0 success, 2 validation/usage error,
//! 3 computational budget exceeded.

use std::io::Write;
use std::process::ExitCode;

use mtbrw_core::annealed::{annealed_moment_exact, annealed_moment_mc, asymptotic_fit};
use mtbrw_core::chain::SpatialChain;
use mtbrw_core::config::{ExperimentConfig, Method};
use mtbrw_core::environment::Environment;
use mtbrw_core::expectation::{
    expected_population, simulate_branching, MeanMatrix, PopulationState,
};
use mtbrw_core::typegraph::{enumerate_simple_cycles, girth, TypeGraph};
use mtbrw_core::variational::{
    chi_solve, frobenius_mu, frobenius_mu_variational, lambda_lp_oracle, lambda_max_mean_cycle,
    ChiOptions, FrobeniusOptions, ENUMERATION_LIMIT,
};
use mtbrw_core::Error;

const USAGE: &str = "\
usage: mtbrw <command> <config> [flags]

commands:
  validate   check the config and report girth, lambda and diagnostics
  lambda     leading exponent lambda(rho) with the optimal cycle set
  chi        second-order constant chi(rho) by constrained descent
  expect     exact expected population sizes u_n (CSV n,i,x,u_n)
  simulate   branching particle simulator (CSV run,n,total)
  anneal     annealed moments log<u_n> (CSV n,log_moment,stderr)
  fit        normalized remainders r_n from an anneal CSV (CSV n,r_n)
  frobenius  log Frobenius eigenvalue of the sampled mean matrix, both routes

flags:
  --output <path>      write the primary artifact to a file instead of stdout
  --no-timestamp       omit the timestamp header line
  --threads <k>        worker threads for Monte Carlo averaging (default 1)
  --method exact|mc    anneal only: moment engine (default from config)
  --n-grid \"4 8 12\"    anneal/expect: time grid
  --num-envs <k>       anneal mc: number of sampled environments
  --input <csv>        fit: anneal output to consume
  --lambda <x>         fit: exponent for the n! scale (default: from graph)
  --trace <path>       chi: write per-restart objective traces (CSV)
  --minimizer <path>   chi: write the minimizing pair measure (CSV)
  --save-env <path>    expect/simulate: dump the environment as CSV
  --per-cell           simulate: add one count column per (type, site) cell

environment:
  MTBRW_OUTPUT_DIR     directory prepended to relative output paths
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&args) {
        Ok(()) => ExitCode::from(0),
        Err(e) => {
            eprintln!("mtbrw: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::TooLarge { .. }
            | Error::DpBudgetExceeded { .. }
            | Error::EnumerationTooLarge { .. } => 3,
            _ => 2,
        };
        fail(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        fail(2, e.to_string())
    }
}

#[derive(Debug, Default)]
struct Flags {
    output: Option<String>,
    no_timestamp: bool,
    threads: Option<usize>,
    method: Option<Method>,
    n_grid: Option<Vec<usize>>,
    num_envs: Option<usize>,
    input: Option<String>,
    lambda: Option<f64>,
    trace: Option<String>,
    minimizer: Option<String>,
    save_env: Option<String>,
    per_cell: bool,
}

fn parse_flags(rest: &[String]) -> Result<Flags, Failure> {
    let mut flags = Flags::default();
    let mut it = rest.iter();
    while let Some(flag) = it.next() {
        let mut value = |name: &str| -> Result<String, Failure> {
            it.next()
                .cloned()
                .ok_or_else(|| fail(2, format!("flag {name} needs a value")))
        };
        match flag.as_str() {
            "--output" => flags.output = Some(value("--output")?),
            "--no-timestamp" => flags.no_timestamp = true,
            "--threads" => flags.threads = Some(parse_flag_num(&value("--threads")?, "--threads")?),
            "--method" => {
                flags.method = Some(match value("--method")?.as_str() {
                    "exact" => Method::Exact,
                    "mc" => Method::Mc,
                    other => return Err(fail(2, format!("unknown method `{other}`"))),
                })
            }
            "--n-grid" => {
                let grid: Result<Vec<usize>, Failure> = value("--n-grid")?
                    .split_whitespace()
                    .map(|t| parse_flag_num(t, "--n-grid"))
                    .collect();
                flags.n_grid = Some(grid?);
            }
            "--num-envs" => {
                flags.num_envs = Some(parse_flag_num(&value("--num-envs")?, "--num-envs")?)
            }
            "--input" => flags.input = Some(value("--input")?),
            "--lambda" => flags.lambda = Some(parse_flag_num(&value("--lambda")?, "--lambda")?),
            "--trace" => flags.trace = Some(value("--trace")?),
            "--minimizer" => flags.minimizer = Some(value("--minimizer")?),
            "--save-env" => flags.save_env = Some(value("--save-env")?),
            "--per-cell" => flags.per_cell = true,
            other => return Err(fail(2, format!("unknown flag `{other}`\n{USAGE}"))),
        }
    }
    Ok(flags)
}

fn parse_flag_num<T: std::str::FromStr>(token: &str, name: &str) -> Result<T, Failure> {
    token
        .parse()
        .map_err(|_| fail(2, format!("cannot parse `{token}` for {name}")))
}

/// Resolve an output path against MTBRW_OUTPUT_DIR.
fn resolve(path: &str) -> std::path::PathBuf {
    let p = std::path::Path::new(path);
    if p.is_absolute() {
        return p.to_path_buf();
    }
    match std::env::var("MTBRW_OUTPUT_DIR") {
        Ok(dir) if !dir.is_empty() => std::path::Path::new(&dir).join(p),
        _ => p.to_path_buf(),
    }
}

fn open_sink(flags: &Flags) -> Result<Box<dyn Write>, Failure> {
    Ok(match &flags.output {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(resolve(
            path,
        ))?)),
        None => Box::new(std::io::BufWriter::new(std::io::stdout())),
    })
}

/// 17 significant digits: enough to round-trip any f64.
fn g17(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(
    out: &mut dyn Write,
    command: &str,
    cfg: &ExperimentConfig,
    flags: &Flags,
) -> std::io::Result<()> {
    writeln!(out, "# mtbrw {command}")?;
    writeln!(out, "# seed: {}", cfg.seed)?;
    if !flags.no_timestamp {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        writeln!(out, "# timestamp: {now}")?;
    }
    Ok(())
}

fn run(args: &[String]) -> Result<(), Failure> {
    if args.is_empty() {
        return Err(fail(2, format!("missing command\n{USAGE}")));
    }
    let command = args[0].as_str();
    if matches!(command, "-h" | "--help" | "help") {
        print!("{USAGE}");
        return Ok(());
    }
    if !matches!(
        command,
        "validate" | "lambda" | "chi" | "expect" | "simulate" | "anneal" | "fit" | "frobenius"
    ) {
        return Err(fail(2, format!("unknown command `{command}`\n{USAGE}")));
    }
    let config_path = args
        .get(1)
        .ok_or_else(|| fail(2, format!("missing config path\n{USAGE}")))?;
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| fail(2, format!("cannot read `{config_path}`: {e}")))?;
    let cfg = ExperimentConfig::parse(&text)?;
    let flags = parse_flags(&args[2..])?;

    let g = cfg.build_graph()?;
    let chain = cfg.build_chain()?;
    if cfg.start_type >= g.n_types() || cfg.start_site >= chain.n_sites() {
        return Err(fail(
            2,
            format!(
                "start ({}, {}) outside {} types x {} sites",
                cfg.start_type,
                cfg.start_site,
                g.n_types(),
                chain.n_sites()
            ),
        ));
    }

    match command {
        "validate" => cmd_validate(&cfg, &flags, &g, &chain),
        "lambda" => cmd_lambda(&cfg, &flags, &g),
        "chi" => cmd_chi(&cfg, &flags, &g, &chain),
        "expect" => cmd_expect(&cfg, &flags, &g, &chain),
        "simulate" => cmd_simulate(&cfg, &flags, &g, &chain),
        "anneal" => cmd_anneal(&cfg, &flags, &g, &chain),
        "fit" => cmd_fit(&cfg, &flags, &g),
        "frobenius" => cmd_frobenius(&cfg, &flags, &g, &chain),
        _ => unreachable!(),
    }
}

fn cmd_validate(
    cfg: &ExperimentConfig,
    flags: &Flags,
    g: &TypeGraph,
    chain: &SpatialChain,
) -> Result<(), Failure> {
    let mut out = open_sink(flags)?;
    header(&mut *out, "validate", cfg, flags)?;
    let (lambda, _) = lambda_max_mean_cycle(g);
    writeln!(out, "types={}", g.n_types())?;
    writeln!(out, "sites={}", chain.n_sites())?;
    writeln!(out, "edges={}", g.n_edges())?;
    writeln!(out, "girth={}", girth(g))?;
    writeln!(out, "lambda={}", g17(lambda))?;
    writeln!(out, "strongly_connected={}", g.is_strongly_connected())?;
    out.flush()?;
    Ok(())
}

fn json_cycles(cycles: &[mtbrw_core::SimpleCycle]) -> String {
    let parts: Vec<String> = cycles
        .iter()
        .map(|c| {
            let verts: Vec<String> = c.vertices().iter().map(|v| v.to_string()).collect();
            format!("[{}]", verts.join(","))
        })
        .collect();
    format!("[{}]", parts.join(","))
}

fn cmd_lambda(cfg: &ExperimentConfig, flags: &Flags, g: &TypeGraph) -> Result<(), Failure> {
    let mut out = open_sink(flags)?;
    header(&mut *out, "lambda", cfg, flags)?;
    let (lambda, optimal) = lambda_max_mean_cycle(g);
    let lp = lambda_lp_oracle(g);
    let total = if g.n_types() <= ENUMERATION_LIMIT {
        format!("{}", enumerate_simple_cycles(g).len())
    } else {
        "null".to_string()
    };
    writeln!(
        out,
        "{{\"lambda\":{},\"lambda_lp\":{},\"num_cycles\":{},\"num_optimal_cycles\":{},\"optimal_cycles\":{}}}",
        g17(lambda),
        g17(lp),
        total,
        optimal.len(),
        json_cycles(&optimal)
    )?;
    out.flush()?;
    Ok(())
}

fn cmd_chi(
    cfg: &ExperimentConfig,
    flags: &Flags,
    g: &TypeGraph,
    chain: &SpatialChain,
) -> Result<(), Failure> {
    let opts = ChiOptions {
        restarts: cfg.restarts,
        seed: cfg.seed,
        ..ChiOptions::default()
    };
    let sol = chi_solve(g, chain, &opts)?;
    let mut out = open_sink(flags)?;
    header(&mut *out, "chi", cfg, flags)?;
    let objectives: Vec<String> = sol.objective_per_restart.iter().map(|&v| g17(v)).collect();
    let trace_field = match &flags.trace {
        Some(path) => {
            let mut tw = std::io::BufWriter::new(std::fs::File::create(resolve(path))?);
            writeln!(tw, "restart,iter,objective")?;
            for (r, trace) in sol.traces.iter().enumerate() {
                for (k, &v) in trace.iter().enumerate() {
                    writeln!(tw, "{r},{k},{}", g17(v))?;
                }
            }
            tw.flush()?;
            format!("\"{path}\"")
        }
        None => "null".to_string(),
    };
    if let Some(path) = &flags.minimizer {
        let mut mw = std::io::BufWriter::new(std::fs::File::create(resolve(path))?);
        writeln!(mw, "i,x,j,y,weight")?;
        let nu = &sol.minimizer;
        for i in 0..nu.n_types() {
            for x in 0..nu.n_sites() {
                for j in 0..nu.n_types() {
                    for y in 0..nu.n_sites() {
                        let w = nu.weight((i, x), (j, y));
                        if w > 0.0 {
                            writeln!(mw, "{i},{x},{j},{y},{}", g17(w))?;
                        }
                    }
                }
            }
        }
        mw.flush()?;
    }
    writeln!(
        out,
        "{{\"lambda\":{},\"chi\":{},\"cycles\":{},\"restarts\":{},\"objective_per_restart\":[{}],\"objective_trace_path\":{}}}",
        g17(sol.lambda),
        g17(sol.chi),
        json_cycles(&sol.optimal_cycles),
        sol.objective_per_restart.len(),
        objectives.join(","),
        trace_field
    )?;
    out.flush()?;
    Ok(())
}

/// The environment for commands that need one: loaded from CSV when the
/// config names one, sampled from the seed otherwise.
fn load_environment(
    cfg: &ExperimentConfig,
    g: &TypeGraph,
    chain: &SpatialChain,
) -> Result<Environment, Failure> {
    match &cfg.environment {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| fail(2, format!("cannot read environment `{path}`: {e}")))?;
            let mut reader = std::io::BufReader::new(file);
            Ok(Environment::from_csv(g, chain.n_sites(), &mut reader)?)
        }
        None => Ok(Environment::sample(g, chain.n_sites(), cfg.seed)),
    }
}

fn save_env_if_asked(
    env: &Environment,
    cfg: &ExperimentConfig,
    flags: &Flags,
) -> Result<(), Failure> {
    if let Some(path) = &flags.save_env {
        let mut w = std::io::BufWriter::new(std::fs::File::create(resolve(path))?);
        writeln!(w, "# seed: {}", cfg.seed)?;
        env.to_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn grid_for(cfg: &ExperimentConfig, flags: &Flags) -> Option<Vec<usize>> {
    flags
        .n_grid
        .clone()
        .or_else(|| cfg.n_grid.clone())
        .or_else(|| cfg.n.map(|n| (0..=n).collect()))
}

fn cmd_expect(
    cfg: &ExperimentConfig,
    flags: &Flags,
    g: &TypeGraph,
    chain: &SpatialChain,
) -> Result<(), Failure> {
    let grid = grid_for(cfg, flags).ok_or_else(|| fail(2, "expect needs `n` or `n_grid`"))?;
    let env = load_environment(cfg, g, chain)?;
    save_env_if_asked(&env, cfg, flags)?;
    let b = MeanMatrix::new(&env, chain, g)?;
    let mut out = open_sink(flags)?;
    header(&mut *out, "expect", cfg, flags)?;
    writeln!(out, "n,i,x,u_n")?;
    for &n in &grid {
        let u = expected_population(&b, cfg.start_type, cfg.start_site, n);
        writeln!(out, "{n},{},{},{}", cfg.start_type, cfg.start_site, g17(u))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_simulate(
    cfg: &ExperimentConfig,
    flags: &Flags,
    g: &TypeGraph,
    chain: &SpatialChain,
) -> Result<(), Failure> {
    let n = cfg.n.ok_or_else(|| fail(2, "simulate needs `n`"))?;
    let env = load_environment(cfg, g, chain)?;
    save_env_if_asked(&env, cfg, flags)?;
    let init =
        PopulationState::single(g.n_types(), chain.n_sites(), cfg.start_type, cfg.start_site);
    let mut out = open_sink(flags)?;
    header(&mut *out, "simulate", cfg, flags)?;
    if flags.per_cell {
        let cells: Vec<String> = (0..g.n_types())
            .flat_map(|i| (0..chain.n_sites()).map(move |x| format!("c_{i}_{x}")))
            .collect();
        writeln!(out, "run,n,total,{}", cells.join(","))?;
    } else {
        writeln!(out, "run,n,total")?;
    }
    let mut any_capped = false;
    for run in 0..cfg.runs {
        let result = simulate_branching(
            &env,
            chain,
            g,
            &init,
            n,
            mtbrw_core::rng::derive(cfg.seed, run as u64),
            cfg.cap,
        )?;
        any_capped |= result.cap_exceeded;
        for state in &result.trajectory {
            if flags.per_cell {
                let counts: Vec<String> = state.cells().map(|(_, c)| c.to_string()).collect();
                writeln!(
                    out,
                    "{run},{},{},{}",
                    state.generation(),
                    state.total(),
                    counts.join(",")
                )?;
            } else {
                writeln!(out, "{run},{},{}", state.generation(), state.total())?;
            }
        }
        if result.cap_exceeded {
            writeln!(out, "# run {run}: population cap {} exceeded", cfg.cap)?;
        }
    }
    out.flush()?;
    if any_capped {
        return Err(fail(3, format!("population cap {} exceeded", cfg.cap)));
    }
    Ok(())
}

fn cmd_anneal(
    cfg: &ExperimentConfig,
    flags: &Flags,
    g: &TypeGraph,
    chain: &SpatialChain,
) -> Result<(), Failure> {
    let method = flags.method.clone().unwrap_or(cfg.method.clone());
    let explicit_grid = flags.n_grid.clone().or_else(|| cfg.n_grid.clone());
    let default_grid = explicit_grid.is_none() && cfg.n.is_none();
    let grid = explicit_grid
        .or_else(|| cfg.n.map(|n| vec![n]))
        .unwrap_or_else(|| (1..=10).map(|k| 4 * k).collect());
    let threads = flags.threads.unwrap_or(cfg.threads).max(1);
    let num_envs = flags.num_envs.unwrap_or(cfg.num_envs);

    let mut out = open_sink(flags)?;
    header(&mut *out, "anneal", cfg, flags)?;
    writeln!(out, "# method: {}", method.as_str())?;
    writeln!(out, "n,log_moment,stderr")?;
    for &n in &grid {
        match method {
            Method::Exact => {
                match annealed_moment_exact(
                    g,
                    chain,
                    cfg.start_type,
                    cfg.start_site,
                    n,
                    Some(cfg.dp_budget),
                ) {
                    Ok(lm) => writeln!(out, "{n},{},{}", g17(lm), g17(0.0))?,
                    Err(e @ Error::DpBudgetExceeded { .. }) => {
                        if default_grid {
                            writeln!(out, "# stopped at n={n}: {e}")?;
                            break;
                        }
                        out.flush()?;
                        return Err(e.into());
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            Method::Mc => {
                let est = annealed_moment_mc(
                    g,
                    chain,
                    cfg.start_type,
                    cfg.start_site,
                    n,
                    num_envs,
                    cfg.seed,
                    threads,
                )?;
                if est.heavy_tail {
                    writeln!(
                        out,
                        "# warning: n={n} estimate dominated by one environment"
                    )?;
                }
                writeln!(out, "{n},{},{}", g17(est.log_mean), g17(est.stderr))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_fit(cfg: &ExperimentConfig, flags: &Flags, g: &TypeGraph) -> Result<(), Failure> {
    let input = flags
        .input
        .as_ref()
        .ok_or_else(|| fail(2, "fit needs --input <csv> from `anneal`"))?;
    let text = std::fs::read_to_string(input)
        .map_err(|e| fail(2, format!("cannot read `{input}`: {e}")))?;
    let mut ns = Vec::new();
    let mut lms = Vec::new();
    for line in text.lines() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with("n,") {
            continue;
        }
        let fields: Vec<&str> = t.split(',').collect();
        if fields.len() < 2 {
            return Err(fail(2, format!("bad anneal row `{t}`")));
        }
        ns.push(parse_flag_num::<usize>(fields[0], "fit input")?);
        lms.push(parse_flag_num::<f64>(fields[1], "fit input")?);
    }
    let lambda = flags
        .lambda
        .or(cfg.lambda)
        .unwrap_or_else(|| lambda_max_mean_cycle(g).0);
    let fit = asymptotic_fit(&ns, &lms, lambda)?;
    let mut out = open_sink(flags)?;
    header(&mut *out, "fit", cfg, flags)?;
    writeln!(out, "# lambda: {}", g17(lambda))?;
    writeln!(out, "# r_last: {}", g17(fit.last_r()))?;
    writeln!(out, "# trend_slope: {}", g17(fit.trend_slope()))?;
    writeln!(out, "n,r_n")?;
    for (&n, &r) in fit.ns.iter().zip(&fit.r) {
        writeln!(out, "{n},{}", g17(r))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_frobenius(
    cfg: &ExperimentConfig,
    flags: &Flags,
    g: &TypeGraph,
    chain: &SpatialChain,
) -> Result<(), Failure> {
    let env = load_environment(cfg, g, chain)?;
    let site = cfg.start_site;
    let t = g.n_types();
    let m: Vec<Vec<f64>> = (0..t)
        .map(|i| (0..t).map(|j| env.mean(i, j, site)).collect())
        .collect();
    let mu = frobenius_mu(&m)?;
    let opts = FrobeniusOptions {
        seed: cfg.seed,
        ..FrobeniusOptions::default()
    };
    let dual = frobenius_mu_variational(&m, &opts)?;
    let mut out = open_sink(flags)?;
    header(&mut *out, "frobenius", cfg, flags)?;
    writeln!(
        out,
        "{{\"mu_power\":{},\"mu_variational\":{},\"gap\":{},\"site\":{}}}",
        g17(mu),
        g17(dual),
        g17((mu - dual).abs()),
        site
    )?;
    out.flush()?;
    Ok(())
}
