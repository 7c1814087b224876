//! Command line driver.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use recap_core::corruptions::{self, CorruptionKind, Provenance, SEVERITIES};
use recap_core::metrics::ErrorTable;
use recap_core::reservoir::build_reservoir;

use crate::config::{ModelKind, RunConfig};
use crate::container::{self, Model, ModelFile};
use crate::dataset::{self, Dataset, Split};
use crate::error::{Error, Result};
use crate::report::{hex, CorruptionReport, EvalReport, TrainReport};
use crate::{external, npy, pipeline, tables};

#[derive(Debug, Parser)]
#[command(name = "recap", version, about = "Reservoir co-activation prototype classifier")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "RECAP_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write it to a model file.
    Train(Box<TrainArgs>),
    /// Classify a labelled image set with a saved model.
    Eval(EvalArgs),
    /// Write corrupted copies of an image set.
    Corrupt(CorruptArgs),
    /// Evaluate a model on clean and corrupted test sets.
    Benchmark(BenchmarkArgs),
    /// Print template statistics and, given images, score histograms.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// TOML run configuration; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the training report as JSON here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub n_units: Option<usize>,
    #[arg(long)]
    pub input_dim: Option<usize>,
    #[arg(long)]
    pub spectral_radius: Option<f64>,
    #[arg(long)]
    pub leak_rate: Option<f64>,
    #[arg(long)]
    pub sparsity: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub washout: Option<usize>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub potentiation: Option<f64>,
    #[arg(long)]
    pub decay: Option<f64>,
    #[arg(long)]
    pub sparsity_fraction: Option<f64>,
    #[arg(long)]
    pub regularization: Option<f64>,
    #[arg(long)]
    pub include_bias: Option<bool>,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub subset: Option<usize>,
    #[arg(long)]
    pub subset_seed: Option<u64>,
    #[arg(long)]
    pub keep_states: bool,
    #[arg(long)]
    pub train_images: Option<PathBuf>,
    #[arg(long)]
    pub train_labels: Option<PathBuf>,
    /// Evaluated after training when set.
    #[arg(long)]
    pub test_images: Option<PathBuf>,
    #[arg(long)]
    pub test_labels: Option<PathBuf>,
    /// Recorded in the configuration for later benchmark runs.
    #[arg(long)]
    pub corruption_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub images: PathBuf,
    /// Label file; for `.npy` images defaults to the `_labels.npy` companion.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Corruption name, or `all` for every native kind.
    #[arg(long)]
    pub kind: String,
    /// 1..=5; every severity when omitted.
    #[arg(long)]
    pub severity: Option<u8>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output `.npy` file, or a directory when several batches are written.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Clean test images.
    #[arg(long)]
    pub clean: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Directory of `<kind>_<severity>.npy` batches.
    #[arg(long)]
    pub corruptions: Option<PathBuf>,
    /// Synthesize native kinds missing from the corruption directory.
    #[arg(long)]
    pub synthesize: bool,
    /// Reference error table (`kind,severity,error` lines) for CE and relative mCE.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Histogram bins.
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
}

impl TrainArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f.clone() { c.$f = v; })*};
        }
        set!(
            model,
            n_units,
            input_dim,
            spectral_radius,
            leak_rate,
            sparsity,
            steps,
            washout,
            levels,
            potentiation,
            decay,
            sparsity_fraction,
            regularization,
            include_bias,
            classes,
            epochs,
            seed,
            subset_seed,
            corruption_seed
        );
        if self.subset.is_some() {
            c.subset = self.subset;
        }
        if self.keep_states {
            c.keep_states = true;
        }
        for (src, dst) in [
            (&self.train_images, &mut c.train_images),
            (&self.train_labels, &mut c.train_labels),
            (&self.test_images, &mut c.test_images),
            (&self.test_labels, &mut c.test_labels),
        ] {
            if src.is_some() {
                dst.clone_from(src);
            }
        }
        c.validate()?;
        Ok(c)
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        // Fails only if the pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Train(a) => train(&a),
        Command::Eval(a) => eval(&a),
        Command::Corrupt(a) => corrupt(&a),
        Command::Benchmark(a) => benchmark(&a),
        Command::Inspect(a) => inspect(&a),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn train(a: &TrainArgs) -> Result<()> {
    let cfg = a.resolve()?;
    let images = cfg
        .train_images
        .as_deref()
        .ok_or_else(|| Error::Config("no training images (set train_images or --train-images)".into()))?;
    let mut data = dataset::load_any(images, cfg.train_labels.as_deref(), Split::Train)?;
    if let Some(n) = cfg.subset {
        data = data.subset(n, cfg.subset_seed)?;
    }
    log::info!("training {:?} on {} images", cfg.model, data.len());
    let reservoir = build_reservoir(&cfg.reservoir_spec())?;
    let (model, summary) = match cfg.model {
        ModelKind::Recap => {
            let (m, s) = pipeline::train_recap(
                reservoir,
                cfg.quantizer()?,
                cfg.hebb_spec(),
                &data,
                cfg.epochs,
                cfg.keep_states,
            )?;
            (Model::Recap(m), Some(s))
        }
        ModelKind::Ridge => (
            Model::Ridge(pipeline::train_ridge(reservoir, cfg.ridge_spec(), cfg.classes, &data)?),
            None,
        ),
    };
    let file = ModelFile {
        model,
        config_digest: cfg.digest(),
        dataset_digest: data.digest(),
        build_time: 0,
    };
    let bytes = container::save(&a.out, &file)?;
    let report = TrainReport::new(file.model.kind_name(), summary.as_ref(), data.len(), file.config_digest, file.dataset_digest);
    print!("{}", report.to_text());
    println!("wrote {} ({} bytes, checksum {})", a.out.display(), bytes.len(), hex(container::checksum(&bytes).unwrap()));
    if let Some(p) = &a.report {
        write(p, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    }
    if let Some(images) = &cfg.test_images {
        let test = load_test(images, cfg.test_labels.as_deref())?;
        print!("{}", EvalReport::from(&pipeline::evaluate(&file.model, test.images())?).to_text());
    }
    Ok(())
}

fn load_test(images: &Path, labels: Option<&Path>) -> Result<Dataset> {
    dataset::load_any(images, labels, Split::Test)
}

fn eval(a: &EvalArgs) -> Result<()> {
    let file = container::load(&a.model)?;
    let data = load_test(&a.images, a.labels.as_deref())?;
    let e = pipeline::evaluate(&file.model, data.images())?;
    let report = EvalReport::from(&e);
    print!("{}", report.to_text());
    if let Some(p) = &a.json {
        write(p, &serde_json::to_string_pretty(&report).expect("report serializes"))?;
    }
    Ok(())
}

fn parse_kinds(name: &str) -> Result<Vec<CorruptionKind>> {
    if name == "all" {
        return Ok(CorruptionKind::NATIVE.to_vec());
    }
    let kind = CorruptionKind::from_name(name).ok_or_else(|| Error::Config(format!("unknown corruption kind '{name}'")))?;
    if !kind.is_native() {
        return Err(recap_core::Error::ExternalOnly(kind.name()).into());
    }
    Ok(vec![kind])
}

fn corrupt(a: &CorruptArgs) -> Result<()> {
    let kinds = parse_kinds(&a.kind)?;
    let severities: Vec<u8> = match a.severity {
        Some(s) if SEVERITIES.contains(&s) => vec![s],
        Some(s) => return Err(recap_core::Error::InvalidSeverity(s).into()),
        None => SEVERITIES.to_vec(),
    };
    let data = load_test(&a.input, a.labels.as_deref())?;
    let single = kinds.len() == 1 && severities.len() == 1;
    if !single {
        fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    }
    for &k in &kinds {
        for &s in &severities {
            let out = pipeline::corrupt_batch(data.images(), k, s, a.seed)?;
            let path = if single { a.out.clone() } else { external::batch_path(&a.out, k, s) };
            npy::save_batch(&path, &out)?;
            log::info!("wrote {} ({})", path.display(), provenance_of(&out));
        }
    }
    println!("{} batch(es) of {} images", kinds.len() * severities.len(), data.len());
    Ok(())
}

fn benchmark(a: &BenchmarkArgs) -> Result<()> {
    let file = container::load(&a.model)?;
    let clean = load_test(&a.clean, a.labels.as_deref())?;
    let mut batches = match &a.corruptions {
        Some(dir) => external::load_external(dir, Some(clean.labels()))?,
        None => external::BatchMap::new(),
    };
    let mut sources: BTreeMap<(CorruptionKind, u8), &'static str> = batches.keys().map(|&k| (k, "external")).collect();
    if a.synthesize {
        for k in CorruptionKind::NATIVE {
            for s in SEVERITIES {
                if let std::collections::btree_map::Entry::Vacant(e) = batches.entry((k, s)) {
                    e.insert(pipeline::corrupt_batch(clean.images(), k, s, a.seed)?);
                    sources.insert((k, s), "native");
                }
            }
        }
    }
    if batches.is_empty() {
        log::warn!("no corrupted batches; only the clean error is reported");
    }
    let name = file.model.kind_name();
    let mut table = ErrorTable::new(name);
    table.set_clean(pipeline::evaluate(&file.model, clean.images())?.error_rate())?;
    for (&(k, s), batch) in &batches {
        let e = pipeline::evaluate(&file.model, batch)?;
        log::info!("{k} s{s}: {:.4}", e.error_rate());
        table.insert(k, s, e.error_rate())?;
    }
    let reference = a.reference.as_deref().map(tables::load_table).transpose()?;
    let report = CorruptionReport::new(
        name,
        &table,
        &|k, s| sources.get(&(k, s)).copied().unwrap_or("-"),
        reference.as_ref(),
        file.config_digest,
        clean.digest(),
        a.seed,
    )?;
    print!("{}", report.to_text());
    if let Some(p) = &a.csv {
        write(p, &report.to_csv())?;
    }
    if let Some(p) = &a.json {
        write(p, &report.to_json())?;
    }
    Ok(())
}

/// Counts of `values` in `bins` equal-width bins over their range.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (lo + i as f64 * width, lo + (i + 1) as f64 * width, c))
        .collect()
}

fn inspect(a: &InspectArgs) -> Result<()> {
    let file = container::load(&a.model)?;
    let spec = file.model.reservoir().spec();
    println!("kind       {}", file.model.kind_name());
    println!(
        "reservoir  N={} input={} radius={} leak={} sparsity={} steps={} seed={}",
        spec.n_units, spec.input_dim, spec.spectral_radius, spec.leak_rate, spec.sparsity, spec.steps, spec.seed
    );
    println!("config     {}", hex(file.config_digest));
    println!("dataset    {}", hex(file.dataset_digest));
    match &file.model {
        Model::Recap(m) => {
            println!("levels     {}", m.quantizer().levels());
            println!("class  density  threshold  updates");
            for (i, t) in m.templates().iter().enumerate() {
                let updates = m.states().map_or("-".to_string(), |s| s[i].update_count().to_string());
                println!("{:>5}  {:>7.4}  {:>9.4}  {:>7}", t.class_id(), t.density(), t.threshold(), updates);
            }
        }
        Model::Ridge(m) => {
            let w = m.readout().weights();
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            println!("readout    {} x {} (bias {}), |W| = {norm:.4}", m.readout().classes(), m.readout().features(), m.readout().include_bias());
        }
    }
    if let Some(images) = &a.images {
        let data = load_test(images, a.labels.as_deref())?;
        let classes = file.model.classes();
        let mut own = Vec::new();
        let mut other = Vec::new();
        for (x, label) in data.iter() {
            let (_, scores) = file.model.predict(x)?;
            for (c, &s) in scores.iter().enumerate().take(classes) {
                if c == label {
                    own.push(s);
                } else {
                    other.push(s);
                }
            }
        }
        for (title, values) in [("true-class scores", &own), ("other-class scores", &other)] {
            println!("{title} ({} values)", values.len());
            for (lo, hi, c) in histogram(values, a.bins) {
                println!("  [{lo:>12.3}, {hi:>12.3})  {c}");
            }
        }
    }
    Ok(())
}

pub fn provenance_of(batch: &recap_core::corruptions::ImageBatch) -> String {
    match batch.provenance() {
        Provenance::Clean => "clean".into(),
        Provenance::Corrupted { kind, severity, seed } => {
            format!("{kind} s{severity} seed {seed} ({})", corruptions::describe(*kind, *severity).unwrap_or_default())
        }
        Provenance::External { kind, severity, digest } => format!(
            "external {}{} digest {}",
            kind.map_or("?".into(), |k| k.to_string()),
            severity.map_or(String::new(), |s| format!(" s{s}")),
            hex(*digest)
        ),
    }
}
