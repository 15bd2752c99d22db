use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use routedisc_core::mobility::node_weights;
use routedisc_core::policy::{expected_raw_from_mdp, policy_gain, resolve_policy};
use routedisc_core::report::{policy_csv, sig10, sweep_csv};
use routedisc_core::{
    parse_config, route_throughput, simulate, solve_avg_reward, sweep_phi, Error, Mdp, Observation, PolicySpec,
    RunConfig, SolveOptions,
};

#[derive(Parser)]
#[command(
    name = "routedisc",
    version,
    about = "Route discovery initiation in a linear mobile ad hoc network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Configurations, routes, per-route schedules and E[raw throughput].
    Analyze { config: PathBuf },
    /// Solve the average-reward MDP and write the optimal policy as CSV.
    Solve {
        config: PathBuf,
        #[arg(long, default_value = "policy.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        epsilon: f64,
    },
    /// Exact long-run gain of a policy.
    Eval {
        config: PathBuf,
        #[arg(long)]
        policy: String,
    },
    /// Monte Carlo estimate of a policy's gain.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        policy: String,
        #[arg(long, value_enum, default_value_t = Observe::Current)]
        observe: Observe,
    },
    /// Gains of several policies over a list of discovery costs, as CSV.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        phis: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        policies: Vec<String>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Observe::Current)]
        observe: Observe,
    },
}

/// What threshold policies compare against their threshold.
#[derive(Clone, Copy, ValueEnum)]
enum Observe {
    /// Held route's throughput in the current slot.
    Current,
    /// Net reward of the previous slot (simulation only).
    Previous,
}

impl From<Observe> for Observation {
    fn from(o: Observe) -> Self {
        match o {
            Observe::Current => Observation::CurrentProbe,
            Observe::Previous => Observation::PreviousSlot,
        }
    }
}

enum Failure {
    Config(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_size_limit() { 2 } else { 1 })
        }
    }
}

fn load(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    if cfg.params.has_asymmetric_stuck_boundary() {
        eprintln!("warning: stuck-at-boundary mobility with p_l != p_r drifts to one end; the uniform steady state does not hold");
    }
    Ok(cfg)
}

fn parse_policy(text: &str) -> Result<PolicySpec, Failure> {
    text.parse().map_err(|e: Error| Failure::Config(e.to_string()))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Analyze { config } => analyze(&load(&config)?),
        Command::Solve { config, out, epsilon } => {
            let cfg = load(&config)?;
            let mdp = Mdp::build(&cfg.params)?;
            let opts = SolveOptions {
                epsilon,
                ..SolveOptions::default()
            };
            let sol = solve_avg_reward(&mdp, opts)?;
            fs::write(&out, policy_csv(&mdp, &sol)).map_err(|e| Failure::Config(format!("{}: {e}", out.display())))?;
            println!("gain = {}", sig10(sol.gain));
            println!("iterations = {}", sol.iterations);
            println!("span = {:e}", sol.span);
            println!("states = {}", mdp.state_count());
            println!("policy written to {}", out.display());
            Ok(())
        }
        Command::Eval { config, policy } => {
            let cfg = load(&config)?;
            let spec = parse_policy(&policy)?;
            let mdp = Mdp::build(&cfg.params)?;
            let resolved = resolve_policy(spec, &mdp)?;
            let eval = policy_gain(&mdp, &resolved.policy)?;
            println!("policy = {spec}");
            if let Some(t) = resolved.threshold {
                println!("threshold = {}", sig10(t));
            }
            println!("gain = {}", sig10(eval.gain));
            println!("discovery_rate = {}", sig10(eval.discovery_rate));
            Ok(())
        }
        Command::Simulate {
            config,
            policy,
            observe,
        } => {
            let cfg = load(&config)?;
            let mut sim = cfg.sim_config(parse_policy(&policy)?);
            sim.observation = observe.into();
            let report = simulate(&sim)?;
            let mc = report.monte_carlo.as_ref().expect("simulation reports Monte Carlo");
            println!("policy = {}", report.policy);
            if let Some(t) = report.threshold {
                println!("threshold = {}", sig10(t));
            }
            println!("mean = {}", sig10(mc.mean));
            println!("stderr = {}", sig10(mc.stderr));
            println!("discovery_rate = {}", sig10(mc.discovery_rate));
            println!(
                "settings: slots = {}, burn_in = {}, replications = {}, seed = {}",
                sim.slots, sim.burn_in, sim.replications, sim.seed
            );
            Ok(())
        }
        Command::Sweep {
            config,
            phis,
            policies,
            out,
            observe,
        } => {
            let cfg = load(&config)?;
            let specs = policies
                .iter()
                .map(|p| parse_policy(p))
                .collect::<Result<Vec<_>, _>>()?;
            let mut base = cfg.sim_config(PolicySpec::Optimal);
            base.observation = observe.into();
            let result = sweep_phi(&base, &phis, &specs)?;
            let csv = sweep_csv(&result);
            match out {
                Some(path) => fs::write(&path, csv).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?,
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

fn analyze(cfg: &RunConfig) -> Result<(), Failure> {
    let p = &cfg.params;
    let mdp = Mdp::build(p)?;
    let rates: Vec<String> = p.rates.iter().map(|r| r.to_string()).collect();
    println!(
        "K = {}, N = {}, m = {}, rates = [{}], p_l = {}, p_r = {}, boundary = {}, phi = {}",
        p.k,
        p.n,
        p.m,
        rates.join(" "),
        p.p_left,
        p.p_right,
        p.boundary,
        p.phi
    );
    println!("configurations = {}", mdp.config_count());
    let node: Vec<String> = node_weights(p)?.into_iter().map(sig10).collect();
    println!("stationary node distribution = {}", node.join(" "));
    println!("E[raw throughput] = {}", sig10(expected_raw_from_mdp(&mdp)?));
    let routes = mdp.routes();
    println!("routes = {} (+ null route)", routes.len() - 1);
    for route in routes.iter().filter(|r| !r.is_null()) {
        let schedule = route_throughput(route, p)?;
        let shares: Vec<String> = schedule
            .shares
            .iter()
            .map(|(set, share)| {
                let links: Vec<String> = set.iter().map(|&l| format!("e{}", l + 1)).collect();
                format!("{{{}}}:{}", links.join(","), sig10(*share))
            })
            .collect();
        println!(
            "  {:<16} throughput = {}  schedule = {}",
            route.to_string(),
            sig10(schedule.throughput),
            shares.join(" ")
        );
    }
    Ok(())
}
