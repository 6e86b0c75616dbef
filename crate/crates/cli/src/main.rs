use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lfnet::checkpoint::{self, Checkpoint};
use lfnet::config::load_config;
use lfnet::data::{generate_dataset, load_dir, read_png, write_png};
use lfnet::eval::{self, center_crop, stylize_all, ClassifierConfig, Metric, Report, Subject};
use lfnet::trainer::Trainer;
use lfnet::{Error, Networks, Result};
use rand::SeedableRng;

/// Style transfer with a content transformation block and local feature
/// normalization.
#[derive(Parser, Debug)]
#[command(name = "lfnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic photo/art dataset with a manifest.
    Datagen {
        #[arg(long)]
        out: PathBuf,
        /// Number of photos.
        #[arg(long)]
        photos: usize,
        /// Number of artworks per style.
        #[arg(long)]
        art: usize,
        #[arg(long, default_value_t = 2)]
        styles: usize,
        /// Image side in pixels.
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train on a dataset directory; writes checkpoints and metrics.log.
    Train {
        /// `key = value` configuration file.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Checkpoint manifest to continue from.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Stylize PNG images with a checkpoint.
    Stylize {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long = "in", num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Center-crop inputs to `size x size` first.
        #[arg(long)]
        size: Option<usize>,
        /// Bypass the content transformation block.
        #[arg(long)]
        no_transform: bool,
    },
    /// Evaluate a checkpoint on a dataset directory.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// rsscd, deception or retention.
        #[arg(long)]
        metric: String,
        /// Report path; a key-value copy is written to `<out>.kv`.
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::NonFiniteLoss { .. } | Error::NonFiniteGradient(_) => 3,
        _ => 2,
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
        Err(e @ Error::ClassifierFloor { .. }) => {
            eprintln!("error: evaluation refused, the toy classifier is not reliable enough: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Datagen {
            out,
            photos,
            art,
            styles,
            size,
            seed,
        } => {
            let manifest = generate_dataset(&out, photos, art, styles, size, seed)?;
            println!("wrote {}", manifest.display());
        }
        Command::Train {
            config,
            data,
            out,
            resume,
        } => {
            let cfg = load_config(&config)?;
            let data = load_dir(&data)?;
            let mut trainer = match resume {
                Some(path) => Trainer::resume(cfg, checkpoint::load(&path)?)?,
                None => Trainer::new(cfg)?,
            };
            let last = trainer.run(&data, &out)?;
            println!("wrote {}", last.display());
        }
        Command::Stylize {
            ckpt,
            inputs,
            out,
            size,
            no_transform,
        } => stylize(&ckpt, &inputs, &out, size, !no_transform)?,
        Command::Eval {
            ckpt,
            data,
            metric,
            out,
        } => {
            let metric: Metric = metric.parse()?;
            let (nets, ckpt) = load_model(&ckpt)?;
            let data = load_dir(&data)?;
            let subject = Subject {
                nets: &nets,
                params: &ckpt.state.params,
                target_style: ckpt.target_style,
                data: &data,
            };
            let report = eval::evaluate(metric, &subject, &ClassifierConfig::default())?;
            write_report(&report, &out)?;
            print!("{}", report.to_text());
        }
    }
    Ok(())
}

/// Loads a checkpoint and checks it against the architecture it records.
fn load_model(path: &Path) -> Result<(Networks, Checkpoint)> {
    let ckpt = checkpoint::load(path)?;
    let nets = Networks::new(ckpt.spec.clone())?;
    let expected = nets.init::<f32, _>(&mut rand_chacha::ChaCha8Rng::seed_from_u64(0))?;
    checkpoint::check_compatible(&expected, &ckpt.state.params)?;
    Ok((nets, ckpt))
}

fn write_report(report: &Report, out: &Path) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    report.write(out)?;
    Ok(())
}

fn stylize(ckpt: &Path, inputs: &[PathBuf], out: &Path, size: Option<usize>, use_transform: bool) -> Result<()> {
    let (nets, ckpt) = load_model(ckpt)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(format!("creating {}", out.display()), e))?;
    let mut names = std::collections::BTreeSet::new();
    for input in inputs {
        let name = input
            .file_stem()
            .ok_or_else(|| Error::Config(format!("input {} has no file name", input.display())))?
            .to_string_lossy()
            .into_owned();
        if !names.insert(name.clone()) {
            return Err(Error::Config(format!("two inputs would both be written to {name}.png")));
        }
        let image = read_png::<f32>(input)?;
        let s = image.shape();
        let (h, w) = match size {
            Some(n) if n == 0 || n % 16 != 0 => {
                return Err(Error::Config(format!("--size {n} is not a positive multiple of 16")));
            }
            Some(n) => (n, n),
            None => (s.height / 16 * 16, s.width / 16 * 16),
        };
        if h == 0 || w == 0 || h > s.height || w > s.width {
            return Err(Error::Shape(format!(
                "{} is {}x{}, too small for a {h}x{w} crop",
                input.display(),
                s.height,
                s.width
            )));
        }
        if size.is_none() && (h, w) != (s.height, s.width) {
            eprintln!(
                "warning: {} is {}x{}; center-cropping to {h}x{w}",
                input.display(),
                s.height,
                s.width
            );
        }
        let image = center_crop(&image, h, w)?;
        let styled = stylize_all(&nets, &ckpt.state.params, &[image], use_transform)?;
        let path = out.join(format!("{name}.png"));
        write_png(&path, &styled[0])?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
