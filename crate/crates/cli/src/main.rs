use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use vlm_hawkes::kalikow_cascade::DEFAULT_TAIL_TOLERANCE;
use vlm_hawkes::oracle::{default_burn_in, forward};
use vlm_hawkes::output::{Caps, Source};
use vlm_hawkes::perfect::NeighborhoodPolicySetting;
use vlm_hawkes::{
    check, clan_stats, compare, network_from_json, perfect_sample, replica_seed, CompareOptions, ModelKind, Network,
    ResidualMode, RunManifest, SamplerOptions, SpikeWindows, Trajectory, TrajectoryMeta, Verdict,
};

const EXIT_ERROR: u8 = 1;
const EXIT_FAIL: u8 = 2;

#[derive(Parser)]
#[command(name = "vlm-hawkes", version, about = "Perfect simulation of Hawkes networks with variable-length memory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the existence condition of the network's model.
    Check(CheckArgs),
    /// Draw spike trains with the perfect sampler or a forward oracle.
    Simulate(SimulateArgs),
    /// Compare a directory of perfect samples against a forward trajectory.
    Compare(CompareArgs),
    /// Offspring and generation statistics of clans of ancestors.
    ClanStats(ClanArgs),
}

#[derive(Args)]
struct CheckArgs {
    config: PathBuf,
    /// Truncation level of the condition series.
    #[arg(long, default_value_t = 64)]
    kmax: usize,
    /// Lipschitz constant used instead of the declared ones.
    #[arg(long)]
    gamma_override: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Directory for report.json, report.txt and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Perfect,
    Forward,
}

#[derive(Args)]
struct SamplerArgs {
    /// Decompose `φ` and clamp residual level laws instead of decomposing the residual law.
    #[arg(long)]
    clamp: bool,
    /// Split neighborhood levels by tie groups instead of single neurons.
    #[arg(long)]
    group_ties: bool,
    #[arg(long, default_value_t = vlm_hawkes::perfect::DEFAULT_MAX_GENERATIONS)]
    max_generations: usize,
    #[arg(long, default_value_t = vlm_hawkes::perfect::DEFAULT_MAX_SITES)]
    max_sites: usize,
    #[arg(long, default_value_t = vlm_hawkes::prm::DEFAULT_BACK_SCAN_CAP)]
    back_scan_cap: u64,
    /// Cascade history tail tolerance.
    #[arg(long, default_value_t = DEFAULT_TAIL_TOLERANCE)]
    tail_tolerance: f64,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

impl SamplerArgs {
    fn options(&self) -> SamplerOptions {
        SamplerOptions {
            mode: if self.clamp { ResidualMode::Clamp } else { ResidualMode::Strict },
            policy: if self.group_ties {
                NeighborhoodPolicySetting::GroupTies
            } else {
                NeighborhoodPolicySetting::Influence
            },
            max_generations: self.max_generations,
            max_sites: self.max_sites,
            tail_tolerance: self.tail_tolerance,
            back_scan_cap: self.back_scan_cap,
            threads: self.threads,
            ..SamplerOptions::default()
        }
    }

    fn caps(&self) -> Caps {
        Caps { max_generations: self.max_generations, max_sites: self.max_sites, back_scan_cap: self.back_scan_cap }
    }
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Perfect)]
    mode: Mode,
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true, default_values_t = [0.0, 1.0])]
    window: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    #[arg(long)]
    out: PathBuf,
    /// Sample even when the existence condition is not certified.
    #[arg(long)]
    force: bool,
    /// Forward burn-in; estimated from a pilot run when absent.
    #[arg(long)]
    burn_in: Option<f64>,
    #[arg(long, default_value_t = 64)]
    kmax: usize,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args)]
struct CompareArgs {
    perfect_dir: PathBuf,
    forward_file: PathBuf,
    /// Minimal interspike KS p-value.
    #[arg(long, default_value_t = 0.01)]
    level: f64,
    /// Allowed rate difference in standard errors.
    #[arg(long, default_value_t = 3.0)]
    z: f64,
    #[arg(long, default_value_t = 20)]
    batches: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClanArgs {
    config: PathBuf,
    #[arg(long, default_value_t = 1000)]
    replicas: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    sampler: SamplerArgs,
}

type CliResult<T> = Result<T, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::ClanStats(a) => cmd_clan_stats(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

struct LoadedConfig {
    path: PathBuf,
    hash: String,
    network: Network,
}

fn load_config(path: &Path) -> CliResult<LoadedConfig> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| format!("{}: {e}", path.display()))?;
    let network = network_from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(LoadedConfig { path: path.to_path_buf(), hash: hex::encode(Sha256::digest(&bytes)), network })
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

fn manifest(command: &str, config: Option<&LoadedConfig>, started: Instant, outcome: serde_json::Value) -> RunManifest {
    RunManifest {
        command: command.into(),
        config_path: config.map(|c| c.path.display().to_string()),
        config_sha256: config.map(|c| c.hash.clone()),
        seed: None,
        caps: None,
        tail_tolerance: None,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outcome,
    }
}

fn cmd_check(args: CheckArgs) -> CliResult<u8> {
    let started = Instant::now();
    let config = load_config(&args.config)?;
    let nbhd = config.network.neighborhoods(Default::default());
    let report = check(&config.network, &nbhd, args.kmax, args.gamma_override).map_err(|e| e.to_string())?;
    match args.format {
        Format::Table => print!("{}", report.table()),
        Format::Json => println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?),
    }
    if let Some(out) = &args.out {
        fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
        write_json(&out.join("report.json"), &report)?;
        fs::write(out.join("report.txt"), report.table()).map_err(|e| e.to_string())?;
        let outcome =
            serde_json::json!({ "verdict": report.verdict, "lhs": report.lhs, "lhs_upper": report.lhs_upper });
        write_json(&out.join("manifest.json"), &manifest("check", Some(&config), started, outcome))?;
    }
    Ok(report.verdict.exit_code() as u8)
}

/// Files created by a run, removed again if the run fails.
struct Staged {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
}

impl Staged {
    fn new(dir: &Path) -> CliResult<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), created_dir, files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn write_trajectory(&mut self, stem: &str, t: &Trajectory) -> CliResult<()> {
        let csv = self.path(&format!("{stem}.csv"));
        let file = fs::File::create(&csv).map_err(|e| format!("{}: {e}", csv.display()))?;
        t.write_csv(std::io::BufWriter::new(file)).map_err(|e| e.to_string())?;
        let jsonl = self.path(&format!("{stem}.jsonl"));
        let file = fs::File::create(&jsonl).map_err(|e| format!("{}: {e}", jsonl.display()))?;
        t.write_jsonl(std::io::BufWriter::new(file)).map_err(|e| e.to_string())
    }

    fn discard(self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

#[derive(Serialize)]
struct Summary {
    replicas: usize,
    window: [f64; 2],
    /// Mean over replicas of per-file accepted-spike rates, by neuron id.
    mean_rates: BTreeMap<u32, f64>,
    rates: Vec<BTreeMap<u32, f64>>,
    clamp_events: u64,
    n_stop_histogram: BTreeMap<usize, u64>,
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<u8> {
    let started = Instant::now();
    let config = load_config(&args.config)?;
    let (a, b) = (args.window[0], args.window[1]);
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(format!("window [{a}, {b}] is not a finite interval"));
    }
    if args.replicas == 0 {
        return Err("--replicas must be at least 1".into());
    }
    if args.mode == Mode::Perfect && !args.force {
        let nbhd = config.network.neighborhoods(Default::default());
        let report = check(&config.network, &nbhd, args.kmax, None).map_err(|e| e.to_string())?;
        if report.verdict != Verdict::Satisfied {
            return Err(format!(
                "existence condition is {:?} (lhs in [{}, {}], threshold {}); pass --force to sample anyway",
                report.verdict, report.lhs, report.lhs_upper, report.threshold
            ));
        }
    }
    let mut staged = Staged::new(&args.out)?;
    match simulate_into(&args, &config, &mut staged, started) {
        Ok(()) => Ok(0),
        Err(e) => {
            staged.discard();
            Err(e)
        }
    }
}

fn simulate_into(args: &SimulateArgs, config: &LoadedConfig, staged: &mut Staged, started: Instant) -> CliResult<()> {
    let net = &config.network;
    let (a, b) = (args.window[0], args.window[1]);
    let options = args.sampler.options();
    let ids: Vec<u32> = net.neurons().iter().map(|n| n.id).collect();
    let seeds: Vec<u64> = (0..args.replicas as u64).map(|r| replica_seed(args.seed, r)).collect();
    let mut burn_in = None;
    let mut hist = BTreeMap::new();
    let trajectories: Vec<Trajectory> = match args.mode {
        Mode::Perfect => {
            let run = |&s: &u64| perfect_sample(net, (a, b), s, &options);
            let samples: Vec<_> = if args.replicas > 1 {
                seeds.par_iter().map(run).collect::<Result<_, _>>()
            } else {
                seeds.iter().map(run).collect::<Result<_, _>>()
            }
            .map_err(|e| e.to_string())?;
            for s in &samples {
                for (&k, &v) in &s.n_stop_histogram {
                    *hist.entry(k).or_insert(0) += v;
                }
            }
            samples
                .iter()
                .map(|s| {
                    let mut t = Trajectory::from_sample(s, Some(config.hash.clone()));
                    if let Some(m) = t.meta.as_mut() {
                        m.max_generations = Some(options.max_generations);
                        m.max_sites = Some(options.max_sites);
                        m.neurons = ids.clone();
                    }
                    t
                })
                .collect()
        }
        Mode::Forward => {
            let tol = options.tail_tolerance;
            let b_in = match args.burn_in {
                Some(v) => v,
                None => default_burn_in(net, 1000.0, args.seed, tol).map_err(|e| e.to_string())?,
            };
            burn_in = Some(b_in);
            let source = match net.kind() {
                ModelKind::Saturation => Source::Gillespie,
                ModelKind::Cascade => Source::Ogata,
            };
            let horizon = b - a;
            seeds
                .par_iter()
                .map(|&s| {
                    let run = if horizon > 0.0 {
                        forward(net, horizon, b_in, s, tol)?
                    } else {
                        vlm_hawkes::ForwardRun { horizon, burn_in: b_in, events: Vec::new() }
                    };
                    let meta = TrajectoryMeta {
                        source,
                        seed: s,
                        model_kind: net.kind(),
                        window: [a, b],
                        mode: None,
                        max_generations: None,
                        max_sites: None,
                        clamp_events: 0,
                        tail_tolerance: (net.kind() == ModelKind::Cascade).then_some(tol),
                        burn_in: Some(b_in),
                        network_hash: Some(config.hash.clone()),
                        neurons: ids.clone(),
                    };
                    Ok(Trajectory::from_run(&run, meta))
                })
                .collect::<vlm_hawkes::Result<_>>()
                .map_err(|e| e.to_string())?
        }
    };

    let mut clamp_events = 0;
    let mut rates = Vec::with_capacity(trajectories.len());
    for (r, t) in trajectories.iter().enumerate() {
        staged.write_trajectory(&format!("replica_{r:05}"), t)?;
        let meta = t.meta.as_ref().expect("written trajectories carry metadata");
        clamp_events += meta.clamp_events;
        rates.push(ids.iter().map(|&id| (id, t.rate(id).unwrap_or(0.0))).collect::<BTreeMap<_, _>>());
    }
    let mean_rates =
        ids.iter().map(|&id| (id, rates.iter().map(|r| r[&id]).sum::<f64>() / rates.len() as f64)).collect();
    let summary =
        Summary { replicas: args.replicas, window: [a, b], mean_rates, rates, clamp_events, n_stop_histogram: hist };
    write_json(&staged.path("summary.json"), &summary)?;
    let mut m = manifest(
        "simulate",
        Some(config),
        started,
        serde_json::json!({
            "mode": match args.mode { Mode::Perfect => "perfect", Mode::Forward => "forward" },
            "residual_mode": options.mode.as_str(),
            "replicas": args.replicas,
            "window": [a, b],
            "burn_in": burn_in,
            "clamp_events": summary.clamp_events,
            "n_stop_histogram": summary.n_stop_histogram,
        }),
    );
    m.seed = Some(args.seed);
    m.caps = Some(args.sampler.caps());
    m.tail_tolerance = (net.kind() == ModelKind::Cascade).then_some(options.tail_tolerance);
    write_json(&staged.path("manifest.json"), &m)
}

fn cmd_compare(args: CompareArgs) -> CliResult<u8> {
    let started = Instant::now();
    let mut files: Vec<PathBuf> = fs::read_dir(&args.perfect_dir)
        .map_err(|e| format!("{}: {e}", args.perfect_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    let read = |p: &Path| -> CliResult<Trajectory> {
        let file = fs::File::open(p).map_err(|e| format!("{}: {e}", p.display()))?;
        Trajectory::read_csv(std::io::BufReader::new(file)).map_err(|e| format!("{}: {e}", p.display()))
    };
    let perfect = files.iter().map(|p| read(p)).collect::<CliResult<Vec<_>>>()?;
    let fwd = read(&args.forward_file)?;
    let fwd_meta = fwd.meta.as_ref().ok_or_else(|| format!("{}: no metadata line", args.forward_file.display()))?;
    let mut hashes = perfect.iter().map(|t| t.meta.as_ref().and_then(|m| m.network_hash.clone()));
    let first = hashes.next().ok_or_else(|| format!("{}: no perfect samples", args.perfect_dir.display()))?;
    if hashes.any(|h| h != first) || first != fwd_meta.network_hash {
        return Err("network hash mismatch between perfect samples and forward trajectory".into());
    }
    let ids = fwd_meta.neurons.clone();
    let a = SpikeWindows::from_trajectories(&ids, &perfect).map_err(|e| e.to_string())?;
    let run = fwd.to_run().map_err(|e| e.to_string())?;
    let b = SpikeWindows::from_run(&ids, &run, a.length).map_err(|e| e.to_string())?;
    let options = CompareOptions { z_level: args.z, ks_level: args.level, batches: args.batches, ..Default::default() };
    let report = compare(&a, &b, &options).map_err(|e| e.to_string())?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?);
    if let Some(out) = &args.out {
        fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
        write_json(&out.join("compare.json"), &report)?;
        let outcome = serde_json::json!({ "pass": report.pass, "perfect_files": files.len() });
        write_json(&out.join("manifest.json"), &manifest("compare", None, started, outcome))?;
    }
    Ok(if report.pass { 0 } else { EXIT_FAIL })
}

fn cmd_clan_stats(args: ClanArgs) -> CliResult<u8> {
    let started = Instant::now();
    let config = load_config(&args.config)?;
    let options = args.sampler.options();
    let stats = clan_stats(&config.network, args.replicas, args.seed, &options).map_err(|e| e.to_string())?;
    println!("{}", serde_json::to_string_pretty(&stats).map_err(|e| e.to_string())?);
    if let Some(out) = &args.out {
        fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
        write_json(&out.join("clan_stats.json"), &stats)?;
        let mut m = manifest("clan-stats", Some(&config), started, serde_json::json!({ "offspring": stats.offspring }));
        m.seed = Some(args.seed);
        m.caps = Some(args.sampler.caps());
        write_json(&out.join("manifest.json"), &m)?;
    }
    Ok(0)
}
