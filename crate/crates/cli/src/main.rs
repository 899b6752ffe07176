use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use sdqn_core::autodiff::Checkpoint;
use sdqn_core::env::make_env;
use sdqn_core::harness::{
    agent_from_checkpoint, eval_seed, evaluate_returns, export_q_surface, metrics_csv,
    parse_config_with_preset, run_training_with, surface_argmax, surface_csv, windowed_metric,
    ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "sdqn",
    version,
    about = "Train and inspect sequential Q-learning agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one seeded run and write its metrics and checkpoint.
    Train {
        /// `key = value` config file; may be omitted when a preset is given.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        preset: Option<String>,
        /// Directory for metrics.csv, checkpoint.txt and config.txt.
        #[arg(long, default_value = "run")]
        out: PathBuf,
    },
    /// Greedy evaluation of a saved agent.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        /// Rollout seed; defaults to the evaluation seed of the training run.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a grid of Q estimates over two action dimensions.
    ExportSurface {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Two action dimensions, e.g. `0,1`.
        #[arg(long, value_parser = parse_dims)]
        dims: (usize, usize),
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        /// Observation to evaluate at, comma separated; zeros by default.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        obs: Option<Vec<f64>>,
    },
    /// Independent seeded runs over the cross product of overrides.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// `key=v1,v2,...`; repeat for more keys.
        #[arg(long = "set", value_parser = parse_axis)]
        axes: Vec<(String, Vec<String>)>,
        /// Seeds 0..n for every combination.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
        /// Runs in flight at once.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (i, j) = s.split_once(',').ok_or("expected `i,j`")?;
    let p = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("`{x}`: {e}"));
    Ok((p(i)?, p(j)?))
}

fn parse_axis(s: &str) -> Result<(String, Vec<String>), String> {
    let (k, vs) = s.split_once('=').ok_or("expected `key=v1,v2,...`")?;
    let values: Vec<String> = vs
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(format!("no values for `{k}`"));
    }
    Ok((k.trim().to_string(), values))
}

fn load_config(path: Option<&Path>, preset: Option<&str>) -> Result<ExperimentConfig> {
    let text = match path {
        Some(p) => {
            fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?
        }
        None if preset.is_some() => String::new(),
        None => bail!("give --config, --preset or both"),
    };
    let cfg = parse_config_with_preset(&text, preset).with_context(|| {
        format!(
            "parsing config {}",
            path.map_or("<preset>".into(), |p| p.display().to_string())
        )
    })?;
    Ok(cfg)
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let f =
        fs::File::open(path).with_context(|| format!("opening checkpoint {}", path.display()))?;
    Checkpoint::read_from(BufReader::new(f))
        .with_context(|| format!("reading checkpoint {}", path.display()))
}

struct RunSummary {
    final_eval: f64,
    windowed: f64,
    partial: bool,
}

/// Trains `cfg` and writes its artifacts into `out`.
fn train_into(cfg: &ExperimentConfig, out: &Path, verbose: bool) -> Result<RunSummary> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let result = run_training_with(cfg, |row, _| {
        if verbose {
            eprintln!(
                "step {:>8}  eval {:>10.4}  train {:>10.4}  td {:.5}",
                row.step, row.eval_return_mean, row.train_episode_return, row.loss_td
            );
        }
        Ok(())
    })
    .with_context(|| format!("training {} on {} (seed {})", cfg.agent, cfg.env, cfg.seed))?;
    fs::write(out.join("metrics.csv"), metrics_csv(&result.metrics))?;
    fs::write(out.join("config.txt"), cfg.to_text())?;
    let ck = fs::File::create(out.join("checkpoint.txt"))?;
    result.checkpoint.write_to(std::io::BufWriter::new(ck))?;
    let w = windowed_metric(&result.eval_points);
    Ok(RunSummary {
        final_eval: result.eval_points.last().map_or(f64::NAN, |p| p.1),
        windowed: w.value,
        partial: w.partial,
    })
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train {
            config,
            seed,
            preset,
            out,
        } => {
            let mut cfg = load_config(config.as_deref(), preset.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let s = train_into(&cfg, &out, true)?;
            println!("final eval {:.4}", s.final_eval);
            println!(
                "windowed max {:.4}{}",
                s.windowed,
                if s.partial {
                    " (fewer evaluations than one window)"
                } else {
                    ""
                }
            );
            println!("wrote {}", out.display());
        }
        Command::Eval {
            checkpoint,
            episodes,
            seed,
        } => {
            let (cfg, agent) = agent_from_checkpoint(&load_checkpoint(&checkpoint)?)?;
            let mut env = make_env(&cfg.env)?;
            let returns = evaluate_returns(
                |o| agent.act_greedy(o),
                env.as_mut(),
                episodes,
                seed.unwrap_or(eval_seed(cfg.seed)),
            )?;
            let mean = returns.iter().sum::<f64>() / returns.len() as f64;
            let var =
                returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / returns.len() as f64;
            println!(
                "{} on {}: mean return {mean:.4} (std {:.4}, {episodes} episodes)",
                cfg.agent,
                cfg.env,
                var.sqrt()
            );
        }
        Command::ExportSurface {
            checkpoint,
            dims,
            grid,
            out,
            obs,
        } => {
            let (cfg, agent) = agent_from_checkpoint(&load_checkpoint(&checkpoint)?)?;
            let spec = make_env(&cfg.env)?.spec().clone();
            let obs = obs.unwrap_or_else(|| vec![0.0; spec.observation_dim]);
            if obs.len() != spec.observation_dim {
                bail!(
                    "--obs has {} values, {} expects {}",
                    obs.len(),
                    cfg.env,
                    spec.observation_dim
                );
            }
            let rows = export_q_surface(agent.as_ref(), &spec, &obs, dims, grid)?;
            fs::write(&out, surface_csv(&rows))
                .with_context(|| format!("writing {}", out.display()))?;
            if let Some(best) = surface_argmax(&rows) {
                println!(
                    "{} rows; largest Q at ({}, {}) = {:.4}",
                    rows.len(),
                    best.a_i,
                    best.a_j,
                    best.q_double
                );
            }
        }
        Command::Sweep {
            config,
            preset,
            axes,
            seeds,
            out,
            jobs,
        } => sweep(config, preset, axes, seeds, out, jobs)?,
    }
    Ok(())
}

fn sweep(
    config: Option<PathBuf>,
    preset: Option<String>,
    axes: Vec<(String, Vec<String>)>,
    seeds: u64,
    out: PathBuf,
    jobs: usize,
) -> Result<()> {
    let base = load_config(config.as_deref(), preset.as_deref())?;
    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in &axes {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push((key.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    let mut runs = Vec::new();
    for (ci, combo) in combos.iter().enumerate() {
        let mut cfg = base.clone();
        for (k, v) in combo {
            cfg.set(k, v).with_context(|| format!("override {k}={v}"))?;
        }
        cfg.validate()?;
        for seed in 0..seeds {
            let mut c = cfg.clone();
            c.seed = seed;
            runs.push((ci, c, out.join(format!("c{ci}-s{seed}"))));
        }
    }

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunSummary>>>> =
        Mutex::new((0..runs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1).min(runs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((_, cfg, dir)) = runs.get(i) else {
                    break;
                };
                let r = train_into(cfg, dir, false);
                eprintln!(
                    "finished {} ({})",
                    dir.display(),
                    r.as_ref()
                        .map_or("failed".into(), |s| format!("{:.4}", s.final_eval))
                );
                results
                    .lock()
                    .expect("no worker panics while holding the lock")[i] = Some(r);
            });
        }
    });

    let keys: Vec<&str> = axes.iter().map(|(k, _)| k.as_str()).collect();
    let mut csv = format!(
        "run,{}seed,final_eval,windowed_max,partial_window\n",
        keys.iter().map(|k| format!("{k},")).collect::<String>()
    );
    for ((ci, cfg, dir), r) in runs
        .iter()
        .zip(results.into_inner().expect("workers joined"))
    {
        let s = r.expect("every run was taken by a worker")?;
        let values: String = combos[*ci].iter().map(|(_, v)| format!("{v},")).collect();
        let name = dir
            .file_name()
            .map_or(String::new(), |n| n.to_string_lossy().into_owned());
        csv += &format!(
            "{name},{values}{},{},{},{}\n",
            cfg.seed, s.final_eval, s.windowed, s.partial
        );
    }
    fs::create_dir_all(&out)?;
    fs::write(out.join("summary.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}
