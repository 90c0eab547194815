//! `betatensor` command-line tool: synthetic data, fitting and benchmarks.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure, 3 file format or I/O error. `BETATENSOR_EPS` overrides the
//! default ε when `--eps` is not given.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use betatensor::io::{is_ctf, read_coo, read_tensor, write_bench, write_tensor, write_trace, BenchRow};
use betatensor::{
    fit::initialize, fit_from, synth_cp, synth_tucker, Algorithm, DenseTensor, Error, ExtrapolationConfig, FitConfig,
    Model, ModelSpec, DEFAULT_EPS,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EPS_ENV: &str = "BETATENSOR_EPS";

#[derive(Parser)]
#[command(
    name = "betatensor",
    version,
    about = "Nonnegative CP and Tucker decompositions under the beta-divergence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a noiseless synthetic CP tensor.
    SynthCp {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output tensor file (CTF1).
        #[arg(long)]
        out: PathBuf,
        /// Directory for the ground-truth factors.
        #[arg(long)]
        truth_dir: Option<PathBuf>,
    },
    /// Write a noiseless synthetic Tucker tensor.
    SynthTucker {
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        truth_dir: Option<PathBuf>,
    },
    /// Fit a model to a tensor file.
    Fit {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = AlgoArg::Bcomm)]
        algo: AlgoArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the fitted factors (`factor_<n>.ctf`, `core.ctf`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trace CSV (`iter,time_s,loss`).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run several algorithms over several seeds and emit one long CSV.
    Bench {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "bcomm,jcomm,mu-unfold")]
        algos: Vec<AlgoArg>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        /// Output CSV (`algo,seed,iter,time_s,loss`); standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Input tensor: CTF1 binary or COO text.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::Cp)]
    model: ModelArg,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// CP rank.
    #[arg(long)]
    rank: Option<usize>,
    /// Tucker ranks, one per mode.
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    #[arg(long)]
    eps: Option<f64>,
    /// Inner sweeps per joint-MM outer iteration.
    #[arg(long, default_value_t = 3)]
    inner: usize,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
    #[arg(long)]
    extrapolate: bool,
    /// Floor applied to the data before fitting (needed for beta = 0 on data with zeros).
    #[arg(long)]
    data_floor: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Cp,
    Tucker,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Bcomm,
    Jcomm,
    MuUnfold,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Bcomm => Algorithm::BlockMm,
            AlgoArg::Jcomm => Algorithm::JointMm,
            AlgoArg::MuUnfold => Algorithm::MuUnfold,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Shape(_) => 1,
        Error::Numerical(_) | Error::Domain(_) => 2,
        Error::Format(_) | Error::Parse { .. } | Error::Io(_) | Error::Csv(_) => 3,
    }
}

fn run(command: Command) -> betatensor::Result<()> {
    match command {
        Command::SynthCp {
            dims,
            rank,
            seed,
            out,
            truth_dir,
        } => {
            let (x, truth) = synth_cp(&dims, rank, seed)?;
            write_tensor(&out, &x)?;
            if let Some(dir) = truth_dir {
                write_model(&dir, &Model::Cp(truth))?;
            }
            println!(
                "dims {dims:?} rank {rank} seed {seed}: wrote {} (mean divergence to truth 0)",
                out.display()
            );
            Ok(())
        }
        Command::SynthTucker {
            dims,
            ranks,
            seed,
            out,
            truth_dir,
        } => {
            let (x, truth) = synth_tucker(&dims, &ranks, seed)?;
            write_tensor(&out, &x)?;
            if let Some(dir) = truth_dir {
                write_model(&dir, &Model::Tucker(truth))?;
            }
            println!(
                "dims {dims:?} ranks {ranks:?} seed {seed}: wrote {} (mean divergence to truth 0)",
                out.display()
            );
            Ok(())
        }
        Command::Fit {
            model,
            algo,
            seed,
            out,
            trace,
        } => {
            let cfg = model.config()?.algorithm(algo.into()).seed(seed);
            let x = model.load(&cfg)?;
            let init = initialize(x.shape(), &cfg)?;
            let result = fit_from(&x, init, &cfg)?;
            if let Some(path) = trace {
                write_trace(path, &result.trace)?;
            }
            if let Some(dir) = out {
                write_model(&dir, &result.model)?;
            }
            let last = result.trace.last().expect("trace has the initial record");
            println!(
                "{} after {} iterations ({:.3} s): mean beta-divergence {:.16e}",
                cfg.algorithm, last.iter, last.time_s, last.loss
            );
            Ok(())
        }
        Command::Bench {
            model,
            algos,
            seeds,
            out,
        } => {
            let base = model.config()?;
            let x = model.load(&base)?;
            let mut rows = Vec::new();
            for &seed in &seeds {
                let init = initialize(x.shape(), &base.clone().seed(seed))?;
                for &algo in &algos {
                    let cfg = base.clone().algorithm(algo.into()).seed(seed);
                    let result = fit_from(&x, init.clone(), &cfg)?;
                    eprintln!("{} seed {seed}: final loss {:.6e}", cfg.algorithm, result.final_loss());
                    rows.extend(result.trace.iter().skip(1).map(|&record| BenchRow {
                        algo: cfg.algorithm.to_string(),
                        seed,
                        record,
                    }));
                }
            }
            match out {
                Some(path) => write_bench(fs::File::create(path)?, &rows),
                None => {
                    let stdout = io::stdout();
                    let mut lock = stdout.lock();
                    write_bench(&mut lock, &rows)?;
                    lock.flush()?;
                    Ok(())
                }
            }
        }
    }
}

impl ModelArgs {
    fn config(&self) -> betatensor::Result<FitConfig> {
        let spec = match self.model {
            ModelArg::Cp => ModelSpec::Cp {
                rank: self
                    .rank
                    .ok_or_else(|| Error::Config("--rank is required for CP models".into()))?,
            },
            ModelArg::Tucker => ModelSpec::Tucker {
                ranks: self
                    .ranks
                    .clone()
                    .ok_or_else(|| Error::Config("--ranks is required for Tucker models".into()))?,
            },
        };
        let eps = match self.eps {
            Some(eps) => eps,
            None => match std::env::var(EPS_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{EPS_ENV}='{v}' is not a number")))?,
                Err(_) => DEFAULT_EPS,
            },
        };
        let cfg = FitConfig {
            model: spec,
            algorithm: Algorithm::BlockMm,
            beta: self.beta,
            eps,
            inner_steps: self.inner,
            max_iters: self.max_iters,
            tol: self.tol,
            seed: 0,
            extrapolate: self.extrapolate.then(ExtrapolationConfig::default),
            data_floor: self.data_floor,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads the input (format sniffed from the magic bytes) and applies the
    /// data floor.
    fn load(&self, cfg: &FitConfig) -> betatensor::Result<DenseTensor> {
        let mut x = if is_ctf(&self.input)? {
            read_tensor(&self.input)?
        } else {
            read_coo(&self.input)?
        };
        if let Some(floor) = cfg.data_floor {
            betatensor::io::apply_floor(&mut x, floor);
        }
        Ok(x)
    }
}

fn write_model(dir: &Path, model: &Model) -> betatensor::Result<()> {
    fs::create_dir_all(dir)?;
    let factors = match model {
        Model::Cp(f) => f.factors(),
        Model::Tucker(m) => {
            write_tensor(dir.join("core.ctf"), m.core())?;
            m.factors()
        }
    };
    for (n, a) in factors.iter().enumerate() {
        write_tensor(dir.join(format!("factor_{n}.ctf")), &DenseTensor::from_matrix(a))?;
    }
    Ok(())
}
