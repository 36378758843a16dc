use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use stc_core::checkpoint::{load_checkpoint, save_checkpoint};
use stc_core::config::{parse_config, StcConfig};
use stc_core::data::{make_split, read_dataset_csv, shifted_subjects, synth_generate, write_dataset_csv, SubjectSpread};
use stc_core::evaluate::{pairwise_benchmark, probe as run_probe, report, BenchmarkConfig, ProbeMode, ProbeOn};
use stc_core::symbolize::{fit_channel_stats, make_cutlines, symbolize as symbolize_one, ChannelStats};

use crate::dataset::{self, cache_path};
use crate::exit::{CliError, Context};
use crate::ConfigArgs;

type Meta = Vec<(String, String)>;

/// Config file, then `--set` overrides, then the shorthand flags.
pub fn load_config(args: &ConfigArgs) -> Result<StcConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
        }
        None => StcConfig::default(),
    };
    for item in &args.overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got {item:?}")))?;
        cfg.set(key.trim(), value).map_err(|e| CliError::usage(format!("--set {item}: {e}")))?;
    }
    if let Some(seed) = args.seed {
        cfg.train.seed = seed;
        cfg.train.augment.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        cfg.train.epochs = epochs;
    }
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

fn meta(pairs: &[(&str, String)], cfg: Option<&StcConfig>) -> Meta {
    let mut out: Meta = pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    if let Some(cfg) = cfg {
        out.extend(cfg.entries());
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).context(path.display())
}

fn parse_probe_on(s: &str) -> Result<ProbeOn, CliError> {
    s.parse().map_err(|e: stc_core::StcError| CliError::usage(e.to_string()))
}

pub struct SynthArgs {
    pub out: PathBuf,
    pub subjects: usize,
    pub seed: u64,
    pub n_per_class: usize,
    pub length: usize,
    pub channels: usize,
    pub spread: SubjectSpread,
}

pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    if a.subjects < 2 {
        return Err(CliError::usage("--subjects must be at least 2"));
    }
    let specs = shifted_subjects(a.subjects, &a.spread, a.seed);
    let samples = synth_generate(&specs, a.n_per_class, a.length, a.channels)?;
    fs::create_dir_all(&a.out).context(a.out.display())?;
    for spec in &specs {
        let path = cache_path(&a.out, spec.subject);
        let rows: Vec<_> = samples.iter().filter(|s| s.subject == spec.subject).cloned().collect();
        let m = meta(
            &[
                ("generator", "synth".into()),
                ("seed", a.seed.to_string()),
                ("subject", spec.subject.to_string()),
                ("shift", format!("{:?}", spec.shift)),
                ("warp", format!("{:?}", spec.warp)),
                ("amplitude", format!("{:?}", spec.amplitude)),
                ("noise_std", format!("{:?}", spec.noise_std)),
                ("phase_jitter", format!("{:?}", spec.phase_jitter)),
                ("spec_seed", spec.seed.to_string()),
            ],
            None,
        );
        let file = File::create(&path).context(path.display())?;
        let mut w = BufWriter::new(file);
        write_dataset_csv(&mut w, &rows, &m).context(path.display())?;
        w.flush().context(path.display())?;
    }
    eprintln!("wrote {} subjects to {}", specs.len(), a.out.display());
    Ok(())
}

pub fn pretrain(data: &Path, source: u32, out: &Path, log: Option<PathBuf>, args: &ConfigArgs) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let ds = dataset::load(data, Some(&[source]), &cfg.data)?;
    let windows: Vec<_> = ds.samples.into_iter().filter(|s| s.subject == source).collect();
    if windows.is_empty() {
        return Err(CliError::data(format!("subject {source} has no windows")));
    }
    let unlabelled: Vec<_> = windows
        .into_iter()
        .map(|mut s| {
            s.label = None;
            s
        })
        .collect();
    let started = Instant::now();
    let (model, report) = stc_core::trainer::pretrain_samples(&unlabelled, &cfg.train).context("pretraining")?;
    save_checkpoint(&model, out)?;
    let log = log.unwrap_or_else(|| out.with_extension("log.csv"));
    let m = meta(&[("command", "pretrain".into()), ("source", source.to_string())], Some(&cfg));
    write_file(&log, &report.to_csv(&m))?;
    if let Some(last) = report.epochs.last() {
        eprintln!(
            "epoch {}: total {:.5} (L_T {:.5}, L_S {:.5}, L_TS {:.5}) in {:.1}s",
            last.epoch,
            last.total,
            last.time,
            last.symbol,
            last.consistency,
            started.elapsed().as_secs_f64()
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn probe(
    ckpt: &Path,
    data: &Path,
    source: u32,
    target: u32,
    mode: &str,
    probe_on: &str,
    out: Option<&Path>,
    args: &ConfigArgs,
) -> Result<(), CliError> {
    if source == target {
        return Err(CliError::usage("--source and --target must differ"));
    }
    let mode: ProbeMode = mode.parse().map_err(|e: stc_core::StcError| CliError::usage(e.to_string()))?;
    let on = parse_probe_on(probe_on)?;
    let cfg = load_config(args)?;
    if !ckpt.is_file() {
        return Err(CliError::usage(format!("{}: no such checkpoint", ckpt.display())));
    }
    let model = load_checkpoint(ckpt)?;
    let ds = dataset::load(data, Some(&[source, target]), &cfg.data)?;
    let split = make_split(&ds.samples, source, target)?;
    let accuracy = run_probe(&model, &split, mode, &cfg.probe, on)?;
    println!("source={source} target={target} mode={mode} probe_on={on} accuracy={accuracy:.6}");
    if let Some(path) = out {
        let mut text = String::new();
        let m = meta(
            &[
                ("command", "probe".into()),
                ("checkpoint_seed", model.config.seed.to_string()),
            ],
            Some(&cfg),
        );
        for (k, v) in &m {
            writeln!(text, "# {k}={v}").unwrap();
        }
        text.push_str("source,target,mode,probe_on,accuracy\n");
        writeln!(text, "{source},{target},{mode},{on},{accuracy:?}").unwrap();
        write_file(path, &text)?;
    }
    Ok(())
}

pub struct BenchmarkArgs {
    pub data: PathBuf,
    pub subjects: Option<Vec<u32>>,
    pub out: PathBuf,
    pub baselines: bool,
    pub mode: String,
    pub probe_on: String,
    pub jobs: usize,
    pub config: ConfigArgs,
}

pub fn benchmark(a: &BenchmarkArgs) -> Result<(), CliError> {
    let modes = match a.mode.as_str() {
        "both" => vec![ProbeMode::ZtOnly, ProbeMode::ZtPlusZs],
        m => vec![m.parse().map_err(|e: stc_core::StcError| CliError::usage(e.to_string()))?],
    };
    let probe_on = parse_probe_on(&a.probe_on)?;
    if a.jobs == 0 {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    let cfg = load_config(&a.config)?;
    let ds = dataset::load(&a.data, a.subjects.as_deref(), &cfg.data)?;
    if ds.subjects.len() < 2 {
        return Err(CliError::usage("benchmark needs at least two subjects"));
    }
    let bench = BenchmarkConfig {
        train: cfg.train.clone(),
        probe: cfg.probe,
        modes,
        probe_on,
        baselines: a.baselines,
        mlp: cfg.baseline.clone(),
        jobs: a.jobs,
    };
    let started = Instant::now();
    let matrix = pairwise_benchmark(&ds.samples, &ds.subjects, &bench).context("benchmark")?;
    let ids: Vec<String> = ds.subjects.iter().map(u32::to_string).collect();
    let m = meta(
        &[
            ("command", "benchmark".into()),
            ("data", ds.source.into()),
            ("subjects", ids.join(",")),
            ("probe_on", probe_on.to_string()),
        ],
        Some(&cfg),
    );
    report(&matrix, &a.out, &m)?;
    print!("{}", matrix.to_table());
    eprintln!("{} pairs in {:.1}s", matrix.pairs().len(), started.elapsed().as_secs_f64());
    Ok(())
}

pub fn symbolize(input: &Path, n_symbols: usize, stats_path: &Path, out: Option<&Path>) -> Result<(), CliError> {
    if !input.is_file() {
        return Err(CliError::usage(format!("{}: no such input file", input.display())));
    }
    let file = File::open(input).context(input.display())?;
    let csv = read_dataset_csv(BufReader::new(file)).context(input.display())?;
    if csv.samples.is_empty() {
        return Err(CliError::data(format!("{}: no samples", input.display())));
    }
    let stats = if stats_path.exists() {
        let f = File::open(stats_path).context(stats_path.display())?;
        ChannelStats::from_csv(BufReader::new(f)).context(stats_path.display())?
    } else {
        let stats = fit_channel_stats(&csv.samples)?;
        write_file(stats_path, &stats.to_csv())?;
        stats
    };
    let cuts = make_cutlines(&stats, n_symbols)?;
    let mut text = String::new();
    writeln!(text, "# n_symbols={n_symbols}").unwrap();
    writeln!(text, "# channels={}", csv.channels).unwrap();
    write!(text, "subject,label").unwrap();
    for k in 0..csv.channels {
        for j in 0..n_symbols {
            write!(text, ",c{k}s{j}").unwrap();
        }
    }
    text.push('\n');
    for s in &csv.samples {
        let v = symbolize_one(s, &cuts)?;
        write!(text, "{},", s.subject).unwrap();
        if let Some(l) = s.label {
            write!(text, "{l}").unwrap();
        }
        for x in v.normalized().expect("symbolize fills the normalized vector") {
            write!(text, ",{x:?}").unwrap();
        }
        text.push('\n');
    }
    match out {
        Some(path) => write_file(path, &text),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
