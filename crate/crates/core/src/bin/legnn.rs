use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use legnn::experiment::{
    run_ablation, run_experiment, run_synthetic_sweep, write_ablation, write_run, write_sweep, AblationKind,
    ExperimentConfig,
};
use legnn::graph::{compute_homophily, load_dataset, save_dataset};
use legnn::synthetic::{generate_synthetic, PlantedPartition};
use legnn::Error;

#[derive(Parser)]
#[command(name = "legnn", version, about = "Train and evaluate label-enhanced graph neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a config and write result.json, history.csv and plotdata/.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Add cross-label edges in increasing amounts and train each sweep method.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated numbers of added edges, e.g. 0,100,200.
        #[arg(long, value_delimiter = ',', required = true)]
        s_values: Vec<usize>,
    },
    /// Compare a config against one of its ablations.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        /// tns, tc, ec or both.
        #[arg(long)]
        kind: String,
    },
    /// Print the edge homophily of a dataset.
    Homophily {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Write a copy of a dataset with S added cross-label edges.
    GenSynthetic {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a planted-partition dataset.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        nodes: usize,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 16)]
        features: usize,
        #[arg(long, default_value_t = 6.0)]
        degree: f64,
        #[arg(long, default_value_t = 0.8)]
        homophily: f64,
        #[arg(long, default_value_t = 1.0)]
        signal: f64,
        #[arg(long, default_value_t = 0.4)]
        train_frac: f64,
        #[arg(long, default_value_t = 0.2)]
        valid_frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_config(path: &PathBuf) -> legnn::Result<ExperimentConfig> {
    ExperimentConfig::from_file(path)?.resolve()
}

fn run(command: Command) -> legnn::Result<()> {
    match command {
        Command::Train { config } => {
            let cfg = load_config(&config)?;
            let result = run_experiment(&cfg)?;
            let dir = cfg.effective_output_dir();
            write_run(&result, &dir)?;
            for s in &result.seeds {
                match (&s.metrics, &s.error) {
                    (Some(m), _) => {
                        println!("seed {}: test_acc {:.4} macro_f1 {:.4}", s.seed, m.test_acc, m.test_macro_f1)
                    }
                    (None, Some(e)) => println!("seed {}: failed ({e})", s.seed),
                    (None, None) => {}
                }
            }
            if let Some(m) = result.aggregate.test_acc {
                println!("test_acc {:.4} ± {:.4} over {} seeds", m.mean, m.std, m.n);
            }
            println!("wrote {}", dir.display());
        }
        Command::Sweep { config, s_values } => {
            let cfg = load_config(&config)?;
            let base = load_dataset(&cfg.dataset)?;
            let sweep = run_synthetic_sweep(&base, &s_values, &cfg)?;
            let dir = cfg.effective_output_dir();
            write_sweep(&sweep, &dir)?;
            for p in &sweep.points {
                let cells: Vec<String> = p
                    .results
                    .iter()
                    .map(|(m, r)| format!("{m} {}", r.map(|r| format!("{:.4}", r.mean)).unwrap_or_else(|| "-".into())))
                    .collect();
                println!("S={} homophily={:.4} {}", p.s, p.homophily, cells.join(" "));
            }
            println!("wrote {}", dir.display());
        }
        Command::Ablate { config, kind } => {
            let kind: AblationKind = kind.parse()?;
            let cfg = load_config(&config)?;
            let ab = run_ablation(&cfg, kind)?;
            let dir = cfg.effective_output_dir();
            write_ablation(&ab, &dir)?;
            for (name, run) in &ab.variants {
                let a = &run.aggregate;
                let f = |m: Option<legnn::experiment::MeanStd>| {
                    m.map(|m| format!("{:.4}", m.mean)).unwrap_or_else(|| "-".into())
                };
                println!("{name}: train {} val {} test {}", f(a.train_acc), f(a.val_acc), f(a.test_acc));
            }
            println!("wrote {}", dir.display());
        }
        Command::Homophily { dataset } => {
            let g = load_dataset(&dataset)?;
            println!("{:.6}", compute_homophily(&g)?);
        }
        Command::GenSynthetic { dataset, s, seed, out } => {
            let g = load_dataset(&dataset)?;
            let out_graph = generate_synthetic(&g, s, seed)?;
            save_dataset(&out_graph, &out)?;
            println!("homophily {:.6} -> {:.6}", compute_homophily(&g)?, compute_homophily(&out_graph)?);
        }
        Command::Fixture { out, nodes, classes, features, degree, homophily, signal, train_frac, valid_frac, seed } => {
            let g = PlantedPartition {
                num_nodes: nodes,
                num_classes: classes,
                feature_dim: features,
                avg_degree: degree,
                homophily,
                feature_signal: signal,
                train_frac,
                valid_frac,
                seed,
            }
            .generate()?;
            save_dataset(&g, &out)?;
            println!("{} nodes, {} edges, homophily {:.6}", g.num_nodes(), g.edges().len(), compute_homophily(&g)?);
        }
    }
    Ok(())
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("error[E_USAGE]: {}", one_line(first.trim_start_matches("error:")));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), one_line(&e.to_string()));
            ExitCode::from(if matches!(e, Error::Config { .. }) { 2 } else { 1 })
        }
    }
}
