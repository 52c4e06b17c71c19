use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use vibroguide_core::feedback::ModalityKind;
use vibroguide_harness::campaign::{run_campaign, CampaignSpec, DEFAULT_JITTER};
use vibroguide_harness::protocol::{ErgonomicCondition, ProtocolKind, ProtocolSpec};
use vibroguide_harness::report::{load_logs, Report};
use vibroguide_harness::serve::{serve_session, ServeOptions};
use vibroguide_harness::trial::{log_file_name, plan_ergonomic, run_protocol};
use vibroguide_harness::{AgentChoice, ExperimentConfig, SessionConfig};

#[derive(Parser)]
#[command(name = "vibroguide", version, about = "Vibrotactile posture guidance experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    Modality,
    Ergonomic,
}

impl From<ProtocolArg> for ProtocolKind {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::Modality => ProtocolKind::ModalityTest,
            ProtocolArg::Ergonomic => ProtocolKind::ErgonomicTest,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON with schema_version); built-in defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Protocol, overriding the config.
    #[arg(long, value_enum)]
    protocol: Option<ProtocolArg>,
    /// SPOT, RAMP or PATTERN.
    #[arg(long)]
    modality: Option<ModalityKind>,
    /// ideal, noisy, sluggish or live.
    #[arg(long)]
    agent: Option<AgentChoice>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => ExperimentConfig::new(SessionConfig::default(), ProtocolSpec::new(ProtocolKind::ModalityTest)),
        };
        if let Some(p) = self.protocol {
            cfg.protocol.kind = p.into();
        }
        if let Some(m) = self.modality {
            cfg.session.modality = m;
        }
        if let Some(a) = self.agent {
            cfg.session.agent = a;
            cfg.session.agent_params = None;
        }
        if let Some(s) = self.seed {
            cfg.session.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.session.out_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a protocol with one simulated agent.
    Run(Common),
    /// Run a protocol over many jittered virtual subjects and aggregate.
    Campaign {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 15)]
        subjects: usize,
        #[arg(long, default_value_t = DEFAULT_JITTER)]
        jitter: f64,
    },
    /// Summarize a directory of trial logs into CSV tables.
    Report {
        /// Directory holding *.jsonl trial logs.
        logs: PathBuf,
        /// Where the CSV tables go; defaults to the logs directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve live sessions over WebSocket.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8765)]
        port: u16,
    },
    /// Solve one ergonomic condition and print the start and optimized postures.
    Solve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Hand distance in front of the heel, metres.
        #[arg(long, default_value_t = 0.5)]
        distance: f64,
        /// Load mass, kg.
        #[arg(long, default_value_t = 4.0)]
        load: f64,
        /// Object height, metres.
        #[arg(long, default_value_t = 0.5)]
        height: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn write_logs(dir: &Path, logs: &[vibroguide_core::TrialLog64]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for log in logs {
        let path = dir.join(log_file_name(log));
        std::fs::write(&path, log.to_jsonl()?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn print_report(report: &Report) {
    for c in &report.modality_table {
        let s = c.stat("success").map_or(f64::NAN, |s| s.mean);
        let rt = c.stat("reaching_time").map_or(f64::NAN, |s| s.mean);
        let conf = c.stat("confusion").map_or(f64::NAN, |s| s.mean);
        let joint = c.joint.map(|j| j.to_string()).unwrap_or_default();
        println!(
            "{joint:<9} {:<8} n={:<3} S={s:6.2}%  dt={rt:6.2}s  C={conf:6.2}%",
            c.modality, c.segments
        );
    }
    for c in &report.ergonomic_table {
        let d: Vec<String> = c
            .decrement
            .iter()
            .map(|s| s.as_ref().map_or("-".into(), |s| format!("{:.1}", s.mean)))
            .collect();
        println!("{:<12} n={:<3} D[ankle..elbow]% = {}", c.condition, c.trials, d.join(" "));
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(common) => {
            let cfg = common.resolve()?;
            if cfg.session.agent == AgentChoice::Live {
                bail!("a live agent needs `serve`");
            }
            let logs = run_protocol(&cfg)?;
            let out = &cfg.session.out_dir;
            write_logs(out, &logs)?;
            let report = Report::from_logs(&logs, &cfg.session.metrics)?;
            for p in report.write_csv(out)? {
                println!("wrote {}", p.display());
            }
            print_report(&report);
        }
        Command::Campaign {
            common,
            subjects,
            jitter,
        } => {
            let cfg = common.resolve()?;
            let spec = CampaignSpec {
                jitter,
                ..CampaignSpec::new(subjects)
            };
            let out = run_campaign(&cfg, &spec)?;
            let written = out.write(&cfg.session.out_dir)?;
            println!("wrote {} files under {}", written.len(), cfg.session.out_dir.display());
            print_report(&out.report);
        }
        Command::Report { logs, out } => {
            let loaded = load_logs(&logs)?;
            if loaded.is_empty() {
                bail!("no trial logs in {}", logs.display());
            }
            let report = Report::from_logs(&loaded, &Default::default())?;
            for p in report.write_csv(out.as_ref().unwrap_or(&logs))? {
                println!("wrote {}", p.display());
            }
            print_report(&report);
        }
        Command::Serve { common, host, port } => {
            let cfg = common.resolve()?;
            let addr: SocketAddr = format!("{host}:{port}").parse().context("bad host/port")?;
            let opts = ServeOptions {
                max_connections: None,
                out_dir: Some(cfg.session.out_dir.clone()),
            };
            println!("serving live sessions on ws://{addr}");
            serve_session(&cfg, addr, &opts)?;
        }
        Command::Solve {
            config,
            distance,
            load,
            height,
            seed,
        } => {
            let cfg = match config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => ExperimentConfig::new(SessionConfig::default(), ProtocolSpec::new(ProtocolKind::ErgonomicTest)),
            };
            let model = cfg.session.load_model()?;
            let cond = ErgonomicCondition {
                id: 0,
                distance,
                load_mass: load,
                object_height: height,
            };
            let plan = plan_ergonomic(&model, &cond, &cfg.protocol.ergonomic, seed)?;
            println!("{}", serde_json::to_string_pretty(&plan)?);
        }
    }
    Ok(())
}
