//! Batch entry points: dataset synthesis, training, prediction, evaluation and
//! the attention/sparsity ablation.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use voxface::evaluation::{ce_metric, extract_surface, extract_surface_indexed, iou, per_point_distance_field, MetricReport, SampleMetrics};
use voxface::geometry::io::{
    decode_manifest, encode_manifest, read_depth, read_grid, write_depth, write_grid, write_obj, GridKind, ManifestRecord,
};
use voxface::geometry::{synth_sample, DepthView, VoxelGrid};
use voxface::model::generator_forward;
use voxface::training::{load_checkpoint, IterationLosses, log_line, model_config_from, save_checkpoint, TrainSample, Trainer};

pub mod config;

pub use config::RunConfig;

pub const MANIFEST: &str = "manifest.tsv";
pub const RESOLVED: &str = "resolved.cfg";
pub const TRAIN_LOG: &str = "train.log";
pub const FINAL_CHECKPOINT: &str = "final.agck";
pub const REPORT: &str = "report.tsv";
pub const ABLATION: &str = "ablation.tsv";

/// Failure classes, each with a stable process exit code.
#[derive(Debug, PartialEq)]
pub enum CliError {
    /// Bad flags or configuration (exit 1).
    Usage(String),
    /// Missing, unreadable or inconsistent data (exit 2).
    Data(String),
    /// Non-finite values during training (exit 3).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<voxface::Error> for CliError {
    fn from(e: voxface::Error) -> Self {
        match e {
            voxface::Error::NonFinite(_) => CliError::Numeric(e.to_string()),
            voxface::Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_resolved(dir: &Path, cfg: &RunConfig) -> Result<()> {
    write_text(&dir.join(RESOLVED), &cfg.to_text())
}

fn has_dataset_files(dir: &Path) -> bool {
    let Ok(entries) = fs::read_dir(dir) else { return false };
    entries.flatten().any(|e| {
        let name = e.file_name();
        let name = name.to_string_lossy();
        name == MANIFEST || name.ends_with(".dpth") || name.ends_with(".voxg")
    })
}

/// Maps `f` over `items` on all available cores, preserving order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(usize, &T) -> Result<R> + Sync) -> Result<Vec<R>> {
    if items.is_empty() {
        return Ok(Vec::new());
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len());
    let chunk = items.len().div_ceil(workers);
    let f = &f;
    let parts: Vec<Result<Vec<R>>> = std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .enumerate()
            .map(|(c, part)| s.spawn(move || part.iter().enumerate().map(|(j, x)| f(c * chunk + j, x)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(items.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Writes `cfg.samples` (corrupted depth, ground-truth grid) pairs with seeds
/// `cfg.seed + index`, then the manifest, whose presence marks completion.
pub fn cmd_synth(cfg: &RunConfig, out: &Path, force: bool) -> Result<Vec<ManifestRecord>> {
    if has_dataset_files(out) && !force {
        let state = if out.join(MANIFEST).exists() { "an existing dataset" } else { "a partial dataset" };
        return Err(CliError::Data(format!("{} holds {state}; pass --force to overwrite", out.display())));
    }
    create_dir(out)?;
    let _ = fs::remove_file(out.join(MANIFEST));
    let synth = cfg.synth();
    if cfg.samples == 0 {
        return Err(CliError::Usage("samples must be positive".into()));
    }
    let seeds: Vec<u64> = (0..cfg.samples as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let records = par_map(&seeds, |index, &seed| {
        let sample = synth_sample(seed, &synth)?;
        let depth_path = PathBuf::from(format!("{index:05}.dpth"));
        let grid_path = PathBuf::from(format!("{index:05}.voxg"));
        write_depth(&out.join(&depth_path), &sample.depth)?;
        write_grid(&out.join(&grid_path), &sample.grid, GridKind::Binary)?;
        let f = &sample.spec.face;
        Ok(ManifestRecord { depth_path, grid_path, seed, yaw: f.yaw, pitch: f.pitch, roll: f.roll, expression: f.expression })
    })?;
    write_resolved(out, cfg)?;
    write_text(&out.join(MANIFEST), &encode_manifest(&records))?;
    Ok(records)
}

/// A synthesized dataset loaded from its directory.
pub struct Dataset {
    pub dir: PathBuf,
    pub records: Vec<ManifestRecord>,
}

impl Dataset {
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::Data(format!("{}: {e} (incomplete or missing dataset)", path.display())))?;
        let records = decode_manifest(&text)?;
        let missing: Vec<String> = records
            .iter()
            .flat_map(|r| [&r.depth_path, &r.grid_path])
            .map(|p| dir.join(p))
            .filter(|p| !p.exists())
            .map(|p| p.display().to_string())
            .collect();
        if !missing.is_empty() {
            return Err(CliError::Data(format!("missing dataset files:\n  {}", missing.join("\n  "))));
        }
        Ok(Self { dir: dir.to_path_buf(), records })
    }

    pub fn load(&self) -> Result<Vec<(DepthView, VoxelGrid)>> {
        self.records
            .iter()
            .map(|r| Ok((read_depth(&self.dir.join(&r.depth_path))?, read_grid(&self.dir.join(&r.grid_path))?)))
            .collect()
    }
}

pub struct TrainOutcome {
    pub trainer: Trainer,
    pub final_checkpoint: PathBuf,
}

/// Trains on the dataset in manifest order, one sample per iteration, logging
/// each iteration and checkpointing every `eval_interval` iterations and at the end.
pub fn cmd_train(cfg: &RunConfig, data: &Path, out: &Path, resume: Option<&Path>) -> Result<TrainOutcome> {
    cmd_train_observed(cfg, data, out, resume, |_, _| {})
}

/// [`cmd_train`], calling `observe` with each completed iteration's losses.
pub fn cmd_train_observed(
    cfg: &RunConfig,
    data: &Path,
    out: &Path,
    resume: Option<&Path>,
    mut observe: impl FnMut(u64, &IterationLosses),
) -> Result<TrainOutcome> {
    let dataset = Dataset::open(data)?;
    let pairs = dataset.load()?;
    let samples: Vec<TrainSample> = pairs.iter().map(|(d, g)| TrainSample::new(d, g)).collect();
    create_dir(out)?;
    let mut trainer = match resume {
        Some(path) => {
            let mut t = Trainer::from_checkpoint(&load_checkpoint(path)?)?;
            t.schedule.iterations = cfg.iterations;
            t
        }
        None => Trainer::new(cfg.model()?, cfg.weights(), cfg.adam(), cfg.schedule())?,
    };
    let view = trainer.model.view_size;
    if let Some((d, _)) = pairs.iter().find(|(d, g)| d.width != view || g.n != trainer.model.grid_size) {
        return Err(CliError::Data(format!("dataset has {}-pixel views; the model expects {view}", d.width)));
    }
    write_resolved(out, cfg)?;
    let log_path = out.join(TRAIN_LOG);
    let mut log = fs::OpenOptions::new()
        .create(true)
        .append(resume.is_some())
        .write(true)
        .truncate(resume.is_none())
        .open(&log_path)
        .map_err(|e| io_err(&log_path, e))?;
    let start = Instant::now();
    while trainer.iteration < trainer.schedule.iterations {
        let k = trainer.next_index(samples.len());
        let losses = trainer.train_iteration(&samples[k])?;
        observe(trainer.iteration, &losses);
        writeln!(log, "{}", log_line(trainer.iteration, &losses, start.elapsed().as_millis())).map_err(|e| io_err(&log_path, e))?;
        if trainer.iteration % trainer.schedule.eval_interval == 0 {
            save_checkpoint(&out.join(format!("ckpt_{:06}.agck", trainer.iteration)), &trainer.to_checkpoint())?;
        }
    }
    let final_checkpoint = out.join(FINAL_CHECKPOINT);
    save_checkpoint(&final_checkpoint, &trainer.to_checkpoint())?;
    Ok(TrainOutcome { trainer, final_checkpoint })
}

fn depth_inputs(input: &Path) -> Result<Vec<PathBuf>> {
    if input.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(input)
            .map_err(|e| io_err(input, e))?
            .flatten()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "dpth"))
            .collect();
        files.sort();
        Ok(files)
    } else if input.exists() {
        Ok(vec![input.to_path_buf()])
    } else {
        Err(CliError::Data(format!("{}: no such file or directory", input.display())))
    }
}

/// Per-input outcome of [`cmd_predict`].
pub struct PredictSummary {
    pub written: Vec<PathBuf>,
    pub failures: Vec<String>,
}

/// One float grid `<stem>.voxg` (and with `mesh`, `<stem>.obj`) per depth file.
pub fn cmd_predict(checkpoint: &Path, input: &Path, out: &Path, mesh: bool, threshold: f32) -> Result<PredictSummary> {
    let ck = load_checkpoint(checkpoint)?;
    let model = model_config_from(&ck)?;
    create_dir(out)?;
    let mut summary = PredictSummary { written: Vec::new(), failures: Vec::new() };
    for path in depth_inputs(input)? {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let result = read_depth(&path).and_then(|d| generator_forward(&model, &ck.generator, &d));
        match result {
            Ok(grid) => {
                let target = out.join(format!("{stem}.voxg"));
                write_grid(&target, &grid, GridKind::Float)?;
                if mesh {
                    write_obj(&out.join(format!("{stem}.obj")), &extract_surface(&grid, threshold), None)?;
                }
                summary.written.push(target);
            }
            Err(e) => summary.failures.push(format!("{}: {e}", path.display())),
        }
    }
    Ok(summary)
}

/// IoU and cross-entropy of `<id>.voxg` predictions against every manifest
/// sample. With `surfaces`, also writes `<id>.obj` for each prediction with
/// `# d` lines giving each vertex's distance to the ground truth.
pub fn cmd_eval(pred: &Path, data: &Path, threshold: f32, report: &Path, surfaces: Option<&Path>) -> Result<MetricReport> {
    let dataset = Dataset::open(data)?;
    let missing: Vec<String> = dataset
        .records
        .iter()
        .map(|r| pred.join(format!("{}.voxg", r.sample_id())))
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Data(format!("missing predictions:\n  {}", missing.join("\n  "))));
    }
    if let Some(dir) = surfaces {
        create_dir(dir)?;
    }
    let rows = par_map(&dataset.records, |_, r| {
        let id = r.sample_id();
        let p = read_grid(&pred.join(format!("{id}.voxg")))?;
        let gt = read_grid(&data.join(&r.grid_path))?;
        if let Some(dir) = surfaces {
            export_surface(&dir.join(format!("{id}.obj")), &p, &gt, threshold)?;
        }
        Ok(SampleMetrics { iou: iou(&p, &gt, threshold)?, ce: ce_metric(&p, &gt)?, id })
    })?;
    let out = MetricReport::new(threshold, rows)?;
    write_text(report, &out.encode())?;
    Ok(out)
}

fn export_surface(path: &Path, pred: &VoxelGrid, gt: &VoxelGrid, threshold: f32) -> Result<()> {
    let (mesh, source) = extract_surface_indexed(pred, threshold);
    let distances = if gt.occupied_count() > 0 {
        let field = per_point_distance_field(pred, gt, threshold)?;
        Some(source.iter().map(|&k| field[k]).collect::<Vec<_>>())
    } else {
        None
    };
    write_obj(path, &mesh, distances.as_deref())?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub attention: bool,
    pub sparsity: bool,
    pub iou: f64,
    pub ce: f64,
}

pub const ABLATION_GRID: [(bool, bool); 4] = [(false, false), (true, false), (false, true), (true, true)];

/// Trains the four attention × sparsity variants with identical seed, data
/// and budget, evaluates each on the dataset and writes `ablation.tsv`.
pub fn cmd_ablate(cfg: &RunConfig, data: &Path, out: &Path) -> Result<Vec<AblationRow>> {
    create_dir(out)?;
    write_resolved(out, cfg)?;
    let mut rows = Vec::new();
    for (attention, sparsity) in ABLATION_GRID {
        let variant = RunConfig { attention, sparsity, ..cfg.clone() };
        let dir = out.join(format!("attention_{}_sparsity_{}", on_off(attention), on_off(sparsity)));
        let trained = cmd_train(&variant, data, &dir, None)?;
        let pred_dir = dir.join("predictions");
        let summary = cmd_predict(&trained.final_checkpoint, data, &pred_dir, false, variant.threshold)?;
        if let Some(f) = summary.failures.first() {
            return Err(CliError::Data(f.clone()));
        }
        let report = cmd_eval(&pred_dir, data, variant.threshold, &dir.join(REPORT), None)?;
        rows.push(AblationRow { attention, sparsity, iou: report.mean_iou, ce: report.mean_ce });
    }
    write_text(&out.join(ABLATION), &encode_ablation(&rows))?;
    Ok(rows)
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

pub fn encode_ablation(rows: &[AblationRow]) -> String {
    let mut s = String::from("attention\tsparsity\tiou\tce\n");
    for r in rows {
        s.push_str(&format!("{}\t{}\t{}\t{}\n", on_off(r.attention), on_off(r.sparsity), r.iou, r.ce));
    }
    s
}
