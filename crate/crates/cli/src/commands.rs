use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use vidseal_core::eval::{
    accuracy, average_precision, calibrate_threshold, heatmap_csv, heatmap_experiment, score_query, sweep_csv,
    sweep_scores, ConfusionCounts, LabeledRecord,
};
use vidseal_core::imaging::{save_frame_dir, Frame, FrameFormat};
use vidseal_core::tamper_sim::{synth_video, SimulationSpec, SynthKind, TruthManifest};
use vidseal_core::{compare, hash_video, read_record, write_record, Error, FrameDir, HashRecord, TileSize};

use crate::config::{ConfigFile, RunConfig};
use crate::CliError;

pub const TRUTH_FILE: &str = "truth.json";

const CLEAN: u8 = 0;
const OPERATED: u8 = 1;

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::output(format!("{}: {e}", path.display())))
}

fn write_frames(frames: &[Frame], dir: &Path, format: FrameFormat) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::output(format!("{}: {e}", dir.display())))?;
    let occupied = std::fs::read_dir(dir)
        .map_err(|e| CliError::output(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok())
        .any(|entry| entry.file_name().to_string_lossy().starts_with("frame_"));
    if occupied {
        return Err(CliError::input(format!("{} already contains frames", dir.display())));
    }
    save_frame_dir(frames, dir, format).map_err(|e| CliError::output(e.to_string()))
}

fn plural(count: usize, word: &str) -> String {
    if count == 1 {
        format!("{count} {word}")
    } else {
        format!("{count} {word}s")
    }
}

fn hash_dir(dir: &Path, n: usize, tile: TileSize) -> Result<HashRecord, CliError> {
    let video = FrameDir::open(dir).map_err(CliError::from_core)?;
    hash_video(&video, n, tile).map_err(CliError::from_core)
}

/// A record's own n and tile win unless the user set them, in which case they must agree.
fn check_record_config(record: &HashRecord, config: &RunConfig) -> Result<(), CliError> {
    if config.n_explicit && usize::from(record.n) != config.n {
        return Err(CliError::from_core(Error::ConfigMismatch(format!(
            "record uses n={}, requested n={}",
            record.n, config.n
        ))));
    }
    if config.tile_explicit && record.tile != config.tile {
        return Err(CliError::from_core(Error::ConfigMismatch(format!(
            "record uses tile {}, requested {}",
            record.tile, config.tile
        ))));
    }
    Ok(())
}

pub fn hash(frames: &Path, out: &Path, config: &RunConfig) -> Result<u8, CliError> {
    let record = hash_dir(frames, config.n, config.tile)?;
    write_record(&record, out).map_err(|e| CliError::output(format!("{}: {e}", out.display())))?;
    println!("{}", plural(record.blocks.len(), "block"));
    Ok(CLEAN)
}

pub fn detect(
    record: &Path,
    frames: &Path,
    out: Option<&Path>,
    csv: Option<&Path>,
    config: &RunConfig,
) -> Result<u8, CliError> {
    let reference = read_record(record).map_err(CliError::from_core)?;
    check_record_config(&reference, config)?;
    let query = hash_dir(frames, usize::from(reference.n), reference.tile)?;
    let report = compare(&reference, &query, config.d, config.mode).map_err(CliError::from_core)?;
    let json = report.to_json().map_err(|e| CliError::output(e.to_string()))?;
    match out {
        Some(path) => {
            write_text(path, &json)?;
            let flagged: Vec<String> = report.operated_blocks().map(|b| b.to_string()).collect();
            println!(
                "{}: {}",
                if report.video_operated { "operated" } else { "clean" },
                if flagged.is_empty() {
                    "no blocks flagged".to_string()
                } else {
                    format!("blocks {}", flagged.join(","))
                }
            );
        }
        None => print!("{json}"),
    }
    if let Some(path) = csv {
        write_text(path, &report.to_csv())?;
    }
    Ok(if report.video_operated { OPERATED } else { CLEAN })
}

fn resolve_relative(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn parent_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

/// Tamper seeds are offset by `--seed`, so one spec yields a family of runs.
pub fn simulate(
    frames: &Path,
    spec_path: &Path,
    out: &Path,
    format: FrameFormat,
    config: &RunConfig,
) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| CliError::input(format!("{}: {e}", spec_path.display())))?;
    let mut spec: SimulationSpec =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", spec_path.display())))?;
    for tamper in &mut spec.tampers {
        tamper.seed = tamper.seed.wrapping_add(config.seed);
    }

    let source = FrameDir::open(frames)
        .and_then(|dir| dir.load_all())
        .map_err(CliError::from_core)?;
    let base = parent_dir(spec_path);
    let mut donors: HashMap<PathBuf, Vec<Frame>> = HashMap::new();
    for tamper in &spec.tampers {
        if let Some(source) = &tamper.source {
            if !donors.contains_key(source) {
                let frames = FrameDir::open(resolve_relative(base, source))
                    .and_then(|dir| dir.load_all())
                    .map_err(CliError::from_core)?;
                donors.insert(source.clone(), frames);
            }
        }
    }

    let video = spec
        .run(source, |tamper| {
            Ok(tamper.source.as_ref().map(|s| donors[s].as_slice()))
        })
        .map_err(CliError::from_core)?;
    let truth = TruthManifest::new(&video.truth, config.n, spec).map_err(CliError::from_core)?;
    write_frames(&video.frames, out, format)?;
    let json = serde_json::to_string_pretty(&truth).map_err(|e| CliError::output(e.to_string()))?;
    write_text(&out.join(TRUTH_FILE), &(json + "\n"))?;
    println!(
        "{}, {} operated, {} of {} positive",
        plural(video.frames.len(), "frame"),
        video.truth.operated_frames(),
        truth.block_labels.iter().filter(|&&b| b).count(),
        plural(truth.block_labels.len(), "block"),
    );
    Ok(CLEAN)
}

/// Query sets for `vidseal eval`; paths are relative to the manifest.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalManifest {
    pub sets: Vec<QuerySet>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySet {
    pub name: String,
    pub queries: Vec<Query>,
}

/// A query video. Without `truth`, `<dir>/truth.json` is used if present and
/// the video is treated as clean otherwise.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Query {
    pub dir: PathBuf,
    #[serde(default)]
    pub truth: Option<PathBuf>,
}

fn load_labels(query: &Query, base: &Path, n: usize, blocks: usize) -> Result<Vec<bool>, CliError> {
    let dir = resolve_relative(base, &query.dir);
    let path = match &query.truth {
        Some(p) => resolve_relative(base, p),
        None => {
            let default = dir.join(TRUTH_FILE);
            if !default.exists() {
                return Ok(vec![false; blocks]);
            }
            default
        }
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let truth: TruthManifest =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    truth.labels_for(n).map_err(CliError::from_core)
}

fn format_fraction(value: Option<f64>) -> String {
    value.map_or_else(|| "not defined".to_string(), |v| format!("{v:.4}"))
}

pub fn eval(
    record: &Path,
    manifest_path: &Path,
    out: &Path,
    calibration: Option<&Path>,
    config: &RunConfig,
) -> Result<u8, CliError> {
    let reference = read_record(record).map_err(CliError::from_core)?;
    check_record_config(&reference, config)?;
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| CliError::input(format!("{}: {e}", manifest_path.display())))?;
    let manifest: EvalManifest =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", manifest_path.display())))?;
    let base = parent_dir(manifest_path);
    let n = usize::from(reference.n);

    let mut all_scores = Vec::new();
    let mut all_labels = Vec::new();
    for set in &manifest.sets {
        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for query in &set.queries {
            let record = hash_dir(&resolve_relative(base, &query.dir), n, reference.tile)?;
            let query_labels = load_labels(query, base, n, record.blocks.len())?;
            let labeled = LabeledRecord {
                record,
                labels: query_labels,
            };
            let (s, l) = score_query(&reference, &labeled, config.mode).map_err(CliError::from_core)?;
            scores.extend(s);
            labels.extend(l);
        }
        let counts = ConfusionCounts::classify(&scores, &labels, config.d).map_err(CliError::from_core)?;
        let acc = accuracy(&counts).map_err(|e| CliError::input(format!("set {:?}: {e}", set.name)))?;
        let ap = match average_precision(&scores, &labels) {
            Ok(ap) => Some(ap),
            Err(Error::NoPositives) => None,
            Err(e) => return Err(CliError::from_core(e)),
        };
        println!(
            "{}: {}, Acc {:.4}, AP {}",
            set.name,
            plural(counts.total(), "block"),
            acc,
            format_fraction(ap)
        );
        all_scores.extend(scores);
        all_labels.extend(labels);
    }

    let points = sweep_scores(&all_scores, &all_labels).map_err(CliError::from_core)?;
    write_text(out, &sweep_csv(&points))?;
    let d = calibrate_threshold(&points).map_err(CliError::from_core)?;
    println!("calibrated d = {d} (mode {}, n = {n})", config.mode);
    if let Some(path) = calibration {
        let file = ConfigFile {
            n: Some(n),
            d: Some(d),
            mode: Some(config.mode),
            tile: Some(reference.tile.to_string()),
            ..Default::default()
        };
        let json = serde_json::to_string_pretty(&file).map_err(|e| CliError::output(e.to_string()))?;
        write_text(path, &(json + "\n"))?;
    }
    Ok(CLEAN)
}

pub fn heatmap(out: &Path, config: &RunConfig) -> Result<u8, CliError> {
    let matrix = heatmap_experiment(config.n, config.mode, config.tile).map_err(CliError::from_core)?;
    write_text(out, &heatmap_csv(&matrix))?;
    for row in &matrix {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:3}")).collect();
        println!("{}", cells.join(" "));
    }
    Ok(CLEAN)
}

pub fn synth(
    kind: SynthKind,
    frames: usize,
    size: TileSize,
    out: &Path,
    format: FrameFormat,
    config: &RunConfig,
) -> Result<u8, CliError> {
    let video = synth_video(kind, frames, size.width, size.height, config.seed).map_err(CliError::from_core)?;
    write_frames(&video, out, format)?;
    println!("{}", plural(video.len(), "frame"));
    Ok(CLEAN)
}
