use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use glovespot_core::domain::{read_stream, write_stream};
use glovespot_core::harness::{
    build_templates, evaluate, experiment_triplet, render_markdown, train_cascade,
    ExperimentConfig, DEFAULT_SEQUENCE,
};
use glovespot_core::robot::SimConfig;
use glovespot_core::spotter::{latency_probe, CascadeModel};
use glovespot_core::synth::{
    generate_stream, make_templates, make_templates_with_triplet, GestureTemplate, ScenarioScript,
    DEFAULT_MIN_SEPARATION, DEFAULT_SIGMA,
};

use crate::protocol::ServerMessage;
use crate::server::{self, AppState, DEFAULT_BIND};
use crate::session::Session;

#[derive(Debug, Parser)]
#[command(
    name = "glovespot",
    version,
    about = "Glove gesture spotting: data, training, evaluation and live service"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Seed override. Experiments use it for templates, training and
    /// evaluation as seed, seed+1 and seed+2.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Experiment configuration file (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory. Without it, data commands write to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate gesture templates.
    GenTemplates {
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Do not build the confusable G5/G6/G7 arrangement.
        #[arg(long)]
        no_triplet: bool,
        #[arg(long)]
        tightness: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_MIN_SEPARATION)]
        min_separation: f64,
    },
    /// Render an annotated glove stream as JSON lines.
    GenStream {
        #[arg(long)]
        templates: PathBuf,
        /// Scenario script (JSON). Overrides the sequence flags.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Comma-separated gesture indices.
        #[arg(long, value_delimiter = ',')]
        sequence: Vec<u16>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_SIGMA)]
        sigma: f64,
        /// Hold the glove button released instead of pressed.
        #[arg(long)]
        button_off: bool,
    },
    /// Train the cascade described by --config.
    Train,
    /// Run the full experiment described by --config and write its report.
    Eval {
        /// Also time the spotter on the trained model (not reproducible).
        #[arg(long)]
        latency: bool,
    },
    /// Run a trained model over a recorded stream, one decision per line.
    Spot {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        stream: PathBuf,
    },
    /// Serve the HTTP and WebSocket interface.
    Serve {
        #[arg(long)]
        model: PathBuf,
        /// Templates offered to clients as pose presets.
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long, env = "GLOVESPOT_BIND", default_value = DEFAULT_BIND)]
        bind: String,
    },
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes to `<out>/<name>` when an output directory is given, else stdout.
fn emit(out: Option<&Path>, name: &str, contents: &str) -> Result<()> {
    match out {
        Some(dir) => {
            let path = dir.join(name);
            write_file(&path, contents)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            io::stdout().write_all(contents.as_bytes())?;
            Ok(())
        }
    }
}

pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = match path {
        Some(p) => serde_json::from_str::<ExperimentConfig>(&read_file(p)?)
            .with_context(|| format!("invalid experiment config {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        config.template_seed = s;
        config.train_seed = s.wrapping_add(1);
        config.eval_seed = s.wrapping_add(2);
    }
    config.validate().context("invalid experiment config")?;
    Ok(config)
}

/// First 16 hex digits of the SHA-256 of the config's JSON form.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let json = serde_json::to_string(config).expect("config is always serialisable");
    hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string()
}

pub fn load_model(path: &Path) -> Result<CascadeModel> {
    CascadeModel::from_json(&read_file(path)?)
        .with_context(|| format!("invalid model file {}", path.display()))
}

pub fn load_templates(path: &Path) -> Result<Vec<GestureTemplate>> {
    serde_json::from_str(&read_file(path)?)
        .with_context(|| format!("invalid templates file {}", path.display()))
}

fn to_pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

pub fn run(cli: Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::GenTemplates {
            count,
            no_triplet,
            tightness,
            min_separation,
        } => {
            let templates = if let Some(path) = &cli.config {
                let mut config = load_config(Some(path), cli.seed)?;
                if no_triplet {
                    config.triplet = None;
                }
                build_templates(&config)?
            } else {
                let seed = cli.seed.unwrap_or(0);
                if no_triplet {
                    make_templates(count, seed, min_separation)?
                } else {
                    let mut t = experiment_triplet();
                    if let Some(x) = tightness {
                        t.tightness = x;
                    }
                    make_templates_with_triplet(count, seed, min_separation, t)?
                }
            };
            emit(out, "templates.json", &to_pretty(&templates))
        }
        Command::GenStream {
            templates,
            script,
            sequence,
            reps,
            sigma,
            button_off,
        } => {
            let templates = load_templates(&templates)?;
            let mut script = match script {
                Some(p) => serde_json::from_str::<ScenarioScript>(&read_file(&p)?)
                    .with_context(|| format!("invalid script {}", p.display()))?,
                None => {
                    let seq = if sequence.is_empty() {
                        DEFAULT_SEQUENCE.to_vec()
                    } else {
                        sequence
                    };
                    let mut s = ScenarioScript::sequence(&seq, reps, sigma, 0);
                    s.button.fill(!button_off);
                    s
                }
            };
            if let Some(seed) = cli.seed {
                script.seed = seed;
            }
            let stream = generate_stream(&script, &templates)?;
            let mut buf = Vec::new();
            write_stream(&mut buf, &stream.records())?;
            emit(out, "stream.jsonl", std::str::from_utf8(&buf)?)
        }
        Command::Train => {
            let config = load_config(cli.config.as_deref(), cli.seed)?;
            let dir = out.unwrap_or(Path::new("model"));
            let templates = build_templates(&config)?;
            let trained = train_cascade(&templates, &config)?;
            write_file(&dir.join("model.json"), &trained.cascade.to_json())?;
            write_file(&dir.join("templates.json"), &to_pretty(&templates))?;
            write_file(&dir.join("config.json"), &to_pretty(&config))?;
            write_file(&dir.join("training.json"), &to_pretty(&trained.training))?;
            println!(
                "trained {}: final loss {:.6}; model at {}",
                config.name,
                trained.training.comm_final_loss,
                dir.join("model.json").display()
            );
            Ok(())
        }
        Command::Eval { latency } => {
            let config = load_config(cli.config.as_deref(), cli.seed)?;
            let dir = out
                .unwrap_or(Path::new("results"))
                .join(config_hash(&config));
            let templates = build_templates(&config)?;
            let trained = train_cascade(&templates, &config)?;
            let mut report = evaluate(&templates, &trained.cascade, &config, trained.training)?;
            if latency {
                report.latency = Some(latency_probe(&trained.cascade, 10_000, config.eval_seed)?);
            }
            write_file(&dir.join("report.json"), &report.to_json())?;
            write_file(
                &dir.join("report.md"),
                &render_markdown(&[(config.name.as_str(), &report)]),
            )?;
            write_file(&dir.join("config.json"), &to_pretty(&config))?;
            match report.mean_rr {
                Some(rr) => println!("{}: mean RR {rr:.2}%", config.name),
                None => println!("{}: no gesture instances evaluated", config.name),
            }
            println!("report written to {}", dir.display());
            Ok(())
        }
        Command::Spot { model, stream } => {
            let model = Arc::new(load_model(&model)?);
            let file = fs::File::open(&stream)
                .with_context(|| format!("cannot read {}", stream.display()))?;
            let records = read_stream(BufReader::new(file))
                .with_context(|| format!("invalid stream {}", stream.display()))?;
            let mut session = Session::new(0, model, SimConfig::default());
            let sink: Box<dyn Write> = match out {
                Some(dir) => {
                    fs::create_dir_all(dir)
                        .with_context(|| format!("cannot create {}", dir.display()))?;
                    let path = dir.join("decisions.jsonl");
                    Box::new(
                        fs::File::create(&path)
                            .with_context(|| format!("cannot write {}", path.display()))?,
                    )
                }
                None => Box::new(io::stdout().lock()),
            };
            let mut sink = BufWriter::new(sink);
            for r in &records {
                let reply = session.process(r.to_frame()?)?;
                let msg = ServerMessage::Spot {
                    reply,
                    queue_depth: 0,
                };
                writeln!(sink, "{}", msg.to_json())?;
            }
            sink.flush()?;
            Ok(())
        }
        Command::Serve {
            model,
            templates,
            bind,
        } => {
            let model = load_model(&model)?;
            let templates = match templates {
                Some(p) => load_templates(&p)?,
                None => Vec::new(),
            };
            if bind.is_empty() {
                bail!("empty bind address");
            }
            let runtime = tokio::runtime::Runtime::new().context("cannot start async runtime")?;
            runtime.block_on(async move {
                let (listener, addr) = server::bind(&bind)
                    .await
                    .with_context(|| format!("cannot bind {bind}"))?;
                tracing::info!("listening on http://{addr}");
                server::serve(
                    listener,
                    AppState::new(model, templates, SimConfig::default()),
                )
                .await
                .context("server failed")
            })
        }
    }
}
