//! Command-line front end. Exit status: 0 on success, 2 for usage and
//! configuration errors, 1 for runtime failures (with a JSON diagnostic on
//! stderr).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use super::{build_dataset, psd_signals, resolve_datasets, write_atomic, write_cache, ExperimentConfig, RealData};
use crate::error::{Error, Result};
use crate::evaluation::{
    evaluate_cell_trained, format_table, reports_to_csv, run_grid, cell_seed, DatasetId, EvalReport, GridSpec,
    PremodelSelection,
};
use crate::frontend::SiDataset;
use crate::neuralnet::{save_checkpoint, ModelArch, ModelKind};
use crate::signal::welch_psd;
use crate::training::gradient_check;

#[derive(Parser, Debug)]
#[command(name = "fdsic", version, about = "Full-duplex self-interference cancellation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print (or write) the default configuration file.
    Init {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the synthetic datasets into `<out>/cache`.
    Gen(Common),
    /// Train the selected models and save checkpoints.
    Train(Common),
    /// Evaluate the full model × dataset × premodeling grid.
    Grid {
        #[command(flatten)]
        common: Common,
        /// Read datasets written by `gen` instead of regenerating them.
        #[arg(long)]
        from_cache: bool,
    },
    /// Welch PSDs of the transmit signal, SI targets and noise floors.
    Psd(Common),
    /// Finite-difference gradient check of every architecture.
    Check {
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<ModelKind>>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<ModelKind>>,
    #[arg(long, value_delimiter = ',')]
    datasets: Option<Vec<DatasetId>>,
    #[arg(long)]
    premodel: Option<PremodelSelection>,
    /// Recorded transmit and received sequences.
    #[arg(long, num_args = 2, value_names = ["INPUT", "TARGET"])]
    real_data: Option<Vec<PathBuf>>,
}

struct Resolved {
    cfg: ExperimentConfig,
    out: PathBuf,
    models: Vec<ModelKind>,
    datasets: Vec<DatasetId>,
    real: Option<RealData>,
}

impl Common {
    fn resolve(&self) -> Result<Resolved> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                ExperimentConfig::from_toml(&text)?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if cfg.jobs == 0 {
            cfg.jobs = crate::par::available_jobs();
        }
        if let Some(p) = self.premodel {
            cfg.grid.premodel = p;
        }
        if let Some(m) = &self.models {
            cfg.grid.models = m.clone();
        }
        let real = self.real_data.as_ref().map(|v| RealData {
            input: v[0].clone(),
            target: v[1].clone(),
        });
        let mut datasets = self.datasets.clone().unwrap_or_else(|| cfg.grid.datasets.clone());
        if real.is_some() && !datasets.contains(&DatasetId::Recorded) {
            datasets.push(DatasetId::Recorded);
        }
        cfg.grid.datasets = datasets.clone();
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
        Ok(Resolved {
            models: cfg.grid.models.clone(),
            cfg,
            out,
            datasets,
            real,
        })
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let diag = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{diag}");
            match e {
                Error::Config(_) | Error::Argument(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Init { out } => {
            let text = ExperimentConfig::default().to_toml()?;
            match out {
                Some(p) => write_atomic(&p, text.as_bytes()),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Gen(c) => gen(&c.resolve()?),
        Command::Train(c) => train(&c.resolve()?),
        Command::Grid { common, from_cache } => grid(&common.resolve()?, from_cache),
        Command::Psd(c) => psd(&c.resolve()?),
        Command::Check { models, seed } => check(&models.unwrap_or_else(|| ModelKind::ALL.to_vec()), seed),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serde(e.to_string()))?;
    write_atomic(path, text.as_bytes())
}

fn gen(r: &Resolved) -> Result<()> {
    let dir = r.out.join("cache");
    for &id in &r.datasets {
        if id == DatasetId::Recorded {
            continue;
        }
        let ds = build_dataset(&r.cfg, id)?;
        let stem = write_cache(&dir, &r.cfg, id, &ds)?;
        println!("{id}: {} samples -> {}", ds.len(), stem.display());
    }
    write_atomic(&r.out.join("config.toml"), r.cfg.to_toml()?.as_bytes())
}

fn datasets(r: &Resolved, from_cache: bool) -> Result<Vec<(DatasetId, SiDataset)>> {
    let cache = r.out.join("cache");
    resolve_datasets(&r.cfg, &r.datasets, r.real.as_ref(), from_cache.then_some(cache.as_path()))
}

fn cell_name(rep: &EvalReport) -> String {
    let flag = if rep.premodeling { "premodel" } else { "plain" };
    format!("{}-{}-{flag}", rep.model_kind, rep.dataset)
}

fn archs(r: &Resolved) -> Result<Vec<ModelArch>> {
    r.models
        .iter()
        .map(|&k| {
            let a = ModelArch::with_context(k, r.cfg.grid.context_len);
            a.validate()?;
            Ok(a)
        })
        .collect()
}

fn train(r: &Resolved) -> Result<()> {
    let data = datasets(r, false)?;
    let mut reports = vec![];
    for arch in archs(r)? {
        for (id, ds) in &data {
            for flag in r.cfg.grid.premodel.flags() {
                let mut cell = r.cfg.cell_config(arch.kind);
                cell.adam.seed = cell_seed(r.cfg.seed, arch.kind, *id, flag);
                let (rep, trained) = evaluate_cell_trained(&arch, *id, ds, flag, &cell, r.cfg.jobs);
                let name = cell_name(&rep);
                if let Some(t) = trained {
                    let dir = r.out.join("checkpoints");
                    save_checkpoint(&dir.join(&name), &arch, &t.params, cell.adam.seed)?;
                    if let Some(l) = &t.premodel {
                        save_checkpoint(
                            &dir.join(format!("{name}.linear")),
                            &ModelArch::linear(arch.context_len),
                            l,
                            cell.adam.seed,
                        )?;
                    }
                }
                write_json(&r.out.join("cells").join(format!("{name}.json")), &rep)?;
                reports.push(rep);
            }
        }
    }
    finish(r, &reports)
}

fn finish(r: &Resolved, reports: &[EvalReport]) -> Result<()> {
    let csv = reports_to_csv(reports, &r.cfg.hash(), r.cfg.seed)?;
    write_atomic(&r.out.join("table.csv"), csv.as_bytes())?;
    let table = format_table(reports);
    write_atomic(&r.out.join("table.txt"), table.as_bytes())?;
    print!("{table}");
    let failed = reports.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        return Err(Error::Numerical(format!("{failed} of {} cells failed", reports.len())));
    }
    Ok(())
}

fn grid(r: &Resolved, from_cache: bool) -> Result<()> {
    let data = datasets(r, from_cache)?;
    let training = |k: ModelKind| r.cfg.cell_config(k);
    let spec = GridSpec {
        models: archs(r)?,
        datasets: data.iter().map(|(id, d)| (*id, d)).collect(),
        premodel: r.cfg.grid.premodel,
        training: &training,
        seed: r.cfg.seed,
        jobs: r.cfg.jobs,
    };
    let started = Instant::now();
    let reports = run_grid(&spec);
    log::info!("grid finished in {:.1} s", started.elapsed().as_secs_f64());
    for rep in &reports {
        write_json(&r.out.join("cells").join(format!("{}.json", cell_name(rep))), rep)?;
    }
    write_atomic(&r.out.join("config.toml"), r.cfg.to_toml()?.as_bytes())?;
    finish(r, &reports)
}

fn psd(r: &Resolved) -> Result<()> {
    let dir = r.out.join("psd");
    let header = format!("# config_hash={} seed={}\n", r.cfg.hash(), r.cfg.seed);
    for (name, seq) in psd_signals(&r.cfg)? {
        let bins = welch_psd(&seq, r.cfg.welch.seg_len, r.cfg.welch.overlap)?;
        let mut text = header.clone();
        text.push_str("frequency_hz,density,density_db\n");
        for b in bins {
            let db = 10.0 * b.density.max(1e-300).log10();
            let _ = writeln!(text, "{},{},{db}", b.frequency_hz, b.density);
        }
        let path = dir.join(format!("{name}.csv"));
        write_atomic(&path, text.as_bytes())?;
        println!("{}", path.display());
    }
    Ok(())
}

/// Relative error above which a gradient check fails.
const GRADCHECK_TOL: f64 = 1e-5;

fn check(models: &[ModelKind], seed: u64) -> Result<()> {
    let mut worst = 0.0f64;
    for &k in models {
        let arch = ModelArch::default_for(k);
        let rep = gradient_check(&arch, 64, seed)?;
        println!("{:<20} {:>4} params  max rel error {:.2e}", k.as_str(), rep.n_params, rep.max_rel_error);
        worst = worst.max(rep.max_rel_error);
    }
    if worst > GRADCHECK_TOL {
        return Err(Error::Numerical(format!("gradient mismatch {worst:.2e} exceeds {GRADCHECK_TOL:.0e}")));
    }
    Ok(())
}
