//! Command-line pipeline: every stage of the experiment as a subcommand with
//! reproducible seeds and machine-readable outputs.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error. Every
//! subcommand writes a sidecar `*.config.json` with its resolved settings,
//! and all outputs go through atomic temp-file renames.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{self, EvalMode, FoldPlan, ImageSet, RobustnessReport};
use crate::noise::{self, NoiseBank, NoiseKind, NoiseSegment, SnrPolicy};
use crate::preprocess::{self, FilterSpec};
use crate::scalogram::{self, MorseConfig, MorseFilterBank};
use crate::spar::{self, DensityScale, SparConfig};
use crate::store::{self, DatasetManifest, ImageFormat, LoadOptions, SignalFormat};
use crate::synth::{self, SynthConfig};
use crate::types::{DurationBounds, EcgRecord, ImageKind, Label, TransformImage};

const USAGE: &str = "\
ecg-robustness: ECG cleaning, SNR-controlled noise injection, attractor and
scalogram image transforms, and classifier robustness evaluation.

USAGE:
  ecg-robustness <COMMAND> [FLAGS]

COMMANDS:
  synth-corpus  generate a three-class synthetic ECG corpus
                --out DIR --seed N [--n-per-class 10] [--fs 500]
                [--duration 10] [--format binary|csv]
  clean         run the cleaning filter chain over a manifest
                --manifest M --out DIR [--lowpass 150] [--highpass 0.05]
                [--notch 49:51] [--order 3] [--strict]
  add-noise     produce bw/em/ma/all noisy variants at a target SNR
                --manifest M --out DIR --snr 5:10 --seed N
                [--noise-bank DIR | --synth] [--bank-duration 1800] [--lead 2]
                [--per-lead-windows]
  transform     render 150x150 grayscale images from records
                --kind attractor|scalogram --manifest M --out DIR [--lead 2]
                [--gamma 3] [--beta 20] [--voices 16] [--fixed-limit L]
                [--density log1p|linear] [--format pgm|png]
  folds         build a stratified 5-fold cross-validation plan
                --manifest M --seed N --out F.json
  evaluate      run one train/test variation of the robustness matrix
                --folds F.json --images DIR --mode same|train-clean|train-all
                --out report.json
  report        render robustness reports as aligned text tables
                --inputs A.json [B.json ...] --out report.txt

  --help        print this text
";

/// Entry point used by main(); returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(()) => 0,
        Err(CliError::Usage(message)) => {
            eprintln!("{message}\n\n{USAGE}");
            1
        }
        Err(CliError::Data(error)) => {
            eprintln!("error: {error}");
            let mut source = std::error::Error::source(&error);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            2
        }
    }
}

enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

type CliResult = std::result::Result<(), CliError>;

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

fn dispatch(args: &[String]) -> CliResult {
    let command = match args.first().map(|s| s.as_str()) {
        None | Some("--help") | Some("-h") | Some("help") => {
            println!("{USAGE}");
            return Ok(());
        }
        Some(c) => c,
    };
    let rest = &args[1..];
    match command {
        "synth-corpus" => cmd_synth_corpus(rest),
        "clean" => cmd_clean(rest),
        "add-noise" => cmd_add_noise(rest),
        "transform" => cmd_transform(rest),
        "folds" => cmd_folds(rest),
        "evaluate" => cmd_evaluate(rest),
        "report" => cmd_report(rest),
        other => Err(usage(format!("unknown command `{other}`"))),
    }
}

/// Tiny flag parser: every flag takes one value except the listed toggles.
struct Flags {
    values: BTreeMap<String, String>,
    toggles: Vec<String>,
    multi: BTreeMap<String, Vec<String>>,
}

impl Flags {
    fn parse(
        args: &[String],
        known: &[&str],
        known_toggles: &[&str],
        known_multi: &[&str],
    ) -> std::result::Result<Flags, CliError> {
        let mut values = BTreeMap::new();
        let mut toggles = Vec::new();
        let mut multi: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut iter = args.iter().peekable();
        while let Some(arg) = iter.next() {
            let name = arg
                .strip_prefix("--")
                .ok_or_else(|| usage(format!("expected a flag, got `{arg}`")))?;
            if known_toggles.contains(&name) {
                toggles.push(name.to_string());
            } else if known_multi.contains(&name) {
                let entry = multi.entry(name.to_string()).or_default();
                while let Some(next) = iter.peek() {
                    if next.starts_with("--") {
                        break;
                    }
                    entry.push(iter.next().unwrap().clone());
                }
                if entry.is_empty() {
                    return Err(usage(format!("--{name} needs at least one value")));
                }
            } else if known.contains(&name) {
                let value = iter
                    .next()
                    .ok_or_else(|| usage(format!("--{name} needs a value")))?;
                if values.insert(name.to_string(), value.clone()).is_some() {
                    return Err(usage(format!("--{name} given twice")));
                }
            } else {
                return Err(usage(format!("unknown flag `--{name}`")));
            }
        }
        Ok(Flags {
            values,
            toggles,
            multi,
        })
    }

    fn require(&self, name: &str) -> std::result::Result<&str, CliError> {
        self.values
            .get(name)
            .map(|s| s.as_str())
            .ok_or_else(|| usage(format!("missing required flag --{name}")))
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(|s| s.as_str())
    }

    fn has(&self, name: &str) -> bool {
        self.toggles.iter().any(|t| t == name)
    }

    fn parse_f64(&self, name: &str, default: f64) -> std::result::Result<f64, CliError> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| usage(format!("--{name}: `{v}` is not a number"))),
        }
    }

    fn parse_usize(&self, name: &str, default: usize) -> std::result::Result<usize, CliError> {
        match self.get(name) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| usage(format!("--{name}: `{v}` is not an integer"))),
        }
    }

    fn require_u64(&self, name: &str) -> std::result::Result<u64, CliError> {
        let v = self.require(name)?;
        v.parse()
            .map_err(|_| usage(format!("--{name}: `{v}` is not an integer seed")))
    }
}

fn parse_pair(raw: &str, flag: &str) -> std::result::Result<(f64, f64), CliError> {
    let (a, b) = raw
        .split_once(':')
        .ok_or_else(|| usage(format!("--{flag}: expected LO:HI, got `{raw}`")))?;
    let lo: f64 = a
        .parse()
        .map_err(|_| usage(format!("--{flag}: `{a}` is not a number")))?;
    let hi: f64 = b
        .parse()
        .map_err(|_| usage(format!("--{flag}: `{b}` is not a number")))?;
    Ok((lo, hi))
}

/// CLI leads are 1-based (lead II = 2); internals are 0-based.
fn parse_lead(flags: &Flags) -> std::result::Result<usize, CliError> {
    let lead = flags.parse_usize("lead", 2)?;
    if lead == 0 {
        return Err(usage("--lead is numbered from 1"));
    }
    Ok(lead - 1)
}

#[derive(Serialize)]
struct SidecarConfig<'a> {
    schema_version: u32,
    command: &'a str,
    flags: BTreeMap<String, String>,
}

/// Write the resolved configuration next to the command's output.
fn write_sidecar(
    out: &Path,
    out_is_dir: bool,
    command: &str,
    resolved: &BTreeMap<String, String>,
) -> Result<()> {
    let path = if out_is_dir {
        out.join(format!("{command}.config.json"))
    } else {
        let name = out
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_else(|| command.to_string());
        out.with_file_name(format!("{name}.config.json"))
    };
    let sidecar = SidecarConfig {
        schema_version: 1,
        command,
        flags: resolved.clone(),
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::InvalidArgument(format!("config serialization: {e}")))?;
    store::write_atomic(&path, json.as_bytes())
}

fn resolved_map(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn cmd_synth_corpus(args: &[String]) -> CliResult {
    let flags = Flags::parse(
        args,
        &["out", "seed", "n-per-class", "fs", "duration", "format"],
        &[],
        &[],
    )?;
    let out = PathBuf::from(flags.require("out")?);
    let seed = flags.require_u64("seed")?;
    let config = SynthConfig {
        n_per_class: flags.parse_usize("n-per-class", 10)?,
        fs: flags.parse_f64("fs", 500.0)?,
        duration_s: flags.parse_f64("duration", 10.0)?,
        seed,
        ..SynthConfig::default()
    };
    let format = match flags.get("format").unwrap_or("binary") {
        "binary" => SignalFormat::Binary,
        "csv" => SignalFormat::Csv,
        other => return Err(usage(format!("--format: unknown `{other}`"))),
    };

    let records = synth::synth_corpus(&config)?;
    let manifest = store::write_records(&records, &out, format)?;
    manifest.save(&out.join("manifest.csv"))?;

    write_sidecar(
        &out,
        true,
        "synth-corpus",
        &resolved_map(&[
            ("n_per_class", config.n_per_class.to_string()),
            ("fs", config.fs.to_string()),
            ("duration_s", config.duration_s.to_string()),
            ("seed", seed.to_string()),
            ("format", format.extension().to_string()),
            ("records", records.len().to_string()),
        ]),
    )?;
    println!(
        "synth-corpus: wrote {} records to {}",
        records.len(),
        out.display()
    );
    Ok(())
}

fn load_options(flags: &Flags) -> LoadOptions {
    if flags.has("strict") {
        LoadOptions {
            bounds: DurationBounds::strict(),
        }
    } else {
        LoadOptions::default()
    }
}

fn cmd_clean(args: &[String]) -> CliResult {
    let flags = Flags::parse(
        args,
        &["manifest", "out", "lowpass", "highpass", "notch", "order"],
        &["strict"],
        &[],
    )?;
    let manifest_path = PathBuf::from(flags.require("manifest")?);
    let out = PathBuf::from(flags.require("out")?);
    let notch = match flags.get("notch") {
        None => [49.0, 51.0],
        Some(raw) => {
            let (lo, hi) = parse_pair(raw, "notch")?;
            [lo, hi]
        }
    };
    let spec = FilterSpec {
        lowpass_hz: flags.parse_f64("lowpass", 150.0)?,
        highpass_hz: flags.parse_f64("highpass", 0.05)?,
        notch_band_hz: notch,
        filter_order: flags.parse_usize("order", 3)?,
        zero_phase: true,
    };

    let records = store::load_dataset(&manifest_path, load_options(&flags))?;
    let cleaned: Result<Vec<EcgRecord>> = records
        .par_iter()
        .map(|r| preprocess::clean_pipeline(r, &spec))
        .collect();
    let cleaned = cleaned?;
    let manifest = store::write_records(&cleaned, &out, SignalFormat::Binary)?;
    manifest.save(&out.join("manifest.csv"))?;

    write_sidecar(
        &out,
        true,
        "clean",
        &resolved_map(&[
            ("manifest", manifest_path.display().to_string()),
            ("lowpass_hz", spec.lowpass_hz.to_string()),
            ("highpass_hz", spec.highpass_hz.to_string()),
            ("notch_band_hz", format!("{}:{}", notch[0], notch[1])),
            ("filter_order", spec.filter_order.to_string()),
            ("strict", flags.has("strict").to_string()),
            ("records", cleaned.len().to_string()),
        ]),
    )?;
    println!("clean: wrote {} records to {}", cleaned.len(), out.display());
    Ok(())
}

fn load_noise_bank(dir: &Path, fs: f64) -> Result<NoiseBank> {
    let load_kind = |kind: NoiseKind| -> Result<NoiseSegment> {
        let stem = kind.as_str();
        let candidates = [format!("{stem}.ecgb"), format!("{stem}.csv")];
        let path = candidates
            .iter()
            .map(|name| dir.join(name))
            .find(|p| p.exists())
            .ok_or_else(|| Error::MissingFile {
                id: stem.to_string(),
                path: dir.join(format!("{stem}.ecgb")),
            })?;
        let (leads, file_fs, _) = store::read_signal_file(&path)?;
        if (file_fs - fs).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "noise bank {stem}: fs {file_fs} does not match record fs {fs}"
            )));
        }
        let samples = leads
            .into_iter()
            .next()
            .ok_or_else(|| Error::parse(&path, "noise file has no channel"))?;
        NoiseSegment::new(samples, file_fs, kind)
    };
    NoiseBank::new(
        load_kind(NoiseKind::Bw)?,
        load_kind(NoiseKind::Em)?,
        load_kind(NoiseKind::Ma)?,
    )
}

fn cmd_add_noise(args: &[String]) -> CliResult {
    let flags = Flags::parse(
        args,
        &["manifest", "out", "snr", "seed", "noise-bank", "bank-duration", "lead"],
        &["synth", "per-lead-windows"],
        &[],
    )?;
    let manifest_path = PathBuf::from(flags.require("manifest")?);
    let out = PathBuf::from(flags.require("out")?);
    let (snr_lo, snr_hi) = parse_pair(flags.get("snr").unwrap_or("5:10"), "snr")?;
    let seed = flags.require_u64("seed")?;
    let bank_duration = flags.parse_f64("bank-duration", 1800.0)?;
    let reference_lead = parse_lead(&flags)?;
    if flags.get("noise-bank").is_some() && flags.has("synth") {
        return Err(usage("--noise-bank and --synth are mutually exclusive"));
    }

    let records = store::load_dataset(&manifest_path, load_options(&flags))?;
    if records.is_empty() {
        return Err(Error::InvalidArgument("manifest has no records".into()).into());
    }
    let fs = records[0].fs;
    if let Some(r) = records.iter().find(|r| r.fs != fs) {
        return Err(Error::invariant(&r.id, format!("fs {} differs from dataset fs {fs}", r.fs)).into());
    }
    let longest = records
        .iter()
        .map(|r| r.duration_s())
        .fold(0.0f64, f64::max);

    let bank = match flags.get("noise-bank") {
        Some(dir) => load_noise_bank(Path::new(dir), fs)?,
        None => NoiseBank::synth(bank_duration.max(longest), fs, seed)?,
    };

    let mut policy = SnrPolicy::new(snr_lo, snr_hi, seed)?;
    policy.reference_lead = reference_lead;
    policy.per_lead_windows = flags.has("per-lead-windows");

    let variants: Result<Vec<noise::NoisyVariants>> = records
        .par_iter()
        .map(|r| noise::apply_noise(r, &bank, &policy))
        .collect();
    let variants = variants?;

    for kind in [NoiseKind::Bw, NoiseKind::Em, NoiseKind::Ma, NoiseKind::All] {
        let subset: Vec<EcgRecord> = variants
            .iter()
            .map(|v| match kind {
                NoiseKind::Bw => v.bw.clone(),
                NoiseKind::Em => v.em.clone(),
                NoiseKind::Ma => v.ma.clone(),
                NoiseKind::All => v.all.clone(),
            })
            .collect();
        let dir = out.join(kind.as_str());
        let manifest = store::write_records(&subset, &dir, SignalFormat::Binary)?;
        manifest.save(&dir.join("manifest.csv"))?;
    }

    write_sidecar(
        &out,
        true,
        "add-noise",
        &resolved_map(&[
            ("manifest", manifest_path.display().to_string()),
            ("snr_db", format!("{snr_lo}:{snr_hi}")),
            ("seed", seed.to_string()),
            ("bank", flags.get("noise-bank").unwrap_or("synthetic").to_string()),
            ("bank_duration_s", bank_duration.to_string()),
            ("reference_lead", (reference_lead + 1).to_string()),
            ("per_lead_windows", policy.per_lead_windows.to_string()),
            ("records", records.len().to_string()),
        ]),
    )?;
    println!(
        "add-noise: wrote 4 noisy variants of {} records to {}",
        records.len(),
        out.display()
    );
    Ok(())
}

fn cmd_transform(args: &[String]) -> CliResult {
    let flags = Flags::parse(
        args,
        &["kind", "manifest", "out", "lead", "gamma", "beta", "voices", "density", "format", "fixed-limit"],
        &["strict"],
        &[],
    )?;
    let kind = ImageKind::parse(flags.require("kind")?).map_err(|e| usage(e.to_string()))?;
    let manifest_path = PathBuf::from(flags.require("manifest")?);
    let out = PathBuf::from(flags.require("out")?);
    let lead = parse_lead(&flags)?;
    let format = match flags.get("format").unwrap_or("pgm") {
        "pgm" => ImageFormat::Pgm,
        "png" => ImageFormat::Png,
        other => return Err(usage(format!("--format: unknown `{other}`"))),
    };
    let density = match flags.get("density").unwrap_or("log1p") {
        "log1p" => DensityScale::Log1p,
        "linear" => DensityScale::Linear,
        other => return Err(usage(format!("--density: unknown `{other}`"))),
    };

    let records = store::load_dataset(&manifest_path, load_options(&flags))?;
    if records.is_empty() {
        return Err(Error::InvalidArgument("manifest has no records".into()).into());
    }

    let images: Result<Vec<TransformImage>> = match kind {
        ImageKind::Attractor => {
            let config = SparConfig {
                lead,
                density_scale: density,
                ..SparConfig::default()
            };
            records.par_iter().map(|r| spar::spar_image(r, &config)).collect()
        }
        ImageKind::Scalogram => {
            let config = MorseConfig {
                gamma: flags.parse_f64("gamma", 3.0)?,
                beta: flags.parse_f64("beta", 20.0)?,
                voices_per_octave: flags.parse_usize("voices", 16)?,
                lead,
                fixed_limit: flags
                    .get("fixed-limit")
                    .map(|v| v.parse())
                    .transpose()
                    .map_err(|_| usage("--fixed-limit: not a number"))?,
                ..MorseConfig::default()
            };
            // one filter bank per distinct signal length
            let mut banks: BTreeMap<usize, MorseFilterBank> = BTreeMap::new();
            for r in &records {
                let len = r.samples_per_lead();
                if !banks.contains_key(&len) {
                    banks.insert(len, MorseFilterBank::new(len, r.fs, &config)?);
                }
            }
            records
                .par_iter()
                .map(|r| {
                    let bank = &banks[&r.samples_per_lead()];
                    scalogram::scalogram_image_with_bank(r, &config, bank)
                })
                .collect()
        }
    };
    let images = images?;
    for image in images.iter().filter(|i| i.warning.is_some()) {
        eprintln!(
            "warning: {}: {}",
            image.source_id,
            image.warning.as_deref().unwrap_or_default()
        );
    }

    let variant = records[0].variant;
    let mut manifest = store::write_images(&images, &out, format)?;
    // rebind labels and rates from the source records
    for (entry, record) in manifest.entries.iter_mut().zip(&records) {
        entry.label = record.label;
        entry.fs = record.fs;
    }
    let manifest_name = format!("{}_{}_manifest.csv", variant, kind);
    manifest.save(&out.join(&manifest_name))?;

    write_sidecar(
        &out,
        true,
        &format!("transform-{variant}-{kind}"),
        &resolved_map(&[
            ("kind", kind.to_string()),
            ("manifest", manifest_path.display().to_string()),
            ("lead", (lead + 1).to_string()),
            ("density", format!("{density:?}").to_lowercase()),
            ("format", format.extension().to_string()),
            ("images", images.len().to_string()),
        ]),
    )?;
    println!(
        "transform: wrote {} {kind} images ({}) to {}",
        images.len(),
        variant,
        out.display()
    );
    Ok(())
}

fn cmd_folds(args: &[String]) -> CliResult {
    let flags = Flags::parse(args, &["manifest", "seed", "out"], &[], &[])?;
    let manifest_path = PathBuf::from(flags.require("manifest")?);
    let seed = flags.require_u64("seed")?;
    let out = PathBuf::from(flags.require("out")?);

    let manifest = DatasetManifest::load(&manifest_path)?;
    let ids: Vec<(String, Label)> = manifest
        .entries
        .iter()
        .map(|e| (e.id.clone(), e.label))
        .collect();
    let plan = eval::make_folds(&ids, seed)?;
    let json = serde_json::to_string_pretty(&plan)
        .map_err(|e| Error::InvalidArgument(format!("fold serialization: {e}")))?;
    store::write_atomic(&out, json.as_bytes())?;

    write_sidecar(
        &out,
        false,
        "folds",
        &resolved_map(&[
            ("manifest", manifest_path.display().to_string()),
            ("seed", seed.to_string()),
            ("records", ids.len().to_string()),
        ]),
    )?;
    println!("folds: wrote 5-fold plan for {} records to {}", ids.len(), out.display());
    Ok(())
}

/// Load every `<variant>_<kind>_manifest.csv` under the images directory.
fn load_image_sets(dir: &Path) -> Result<(Vec<ImageSet>, BTreeMap<String, Label>)> {
    let mut sets = Vec::new();
    let mut labels = BTreeMap::new();
    for variant in crate::types::VARIANTS {
        for kind in crate::types::IMAGE_KINDS {
            let manifest_path = dir.join(format!("{variant}_{kind}_manifest.csv"));
            if !manifest_path.exists() {
                continue;
            }
            let manifest = DatasetManifest::load(&manifest_path)?;
            let mut images = BTreeMap::new();
            for entry in &manifest.entries {
                let file = manifest.resolve(&manifest_path, entry);
                let image = store::read_image_file(&file, kind, &entry.id, variant)?;
                labels.insert(entry.id.clone(), entry.label);
                images.insert(entry.id.clone(), image);
            }
            sets.push(ImageSet {
                variant,
                kind,
                images,
            });
        }
    }
    if sets.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no image manifests found under {}",
            dir.display()
        )));
    }
    Ok((sets, labels))
}

fn cmd_evaluate(args: &[String]) -> CliResult {
    let flags = Flags::parse(args, &["folds", "images", "mode", "out"], &[], &[])?;
    let folds_path = PathBuf::from(flags.require("folds")?);
    let images_dir = PathBuf::from(flags.require("images")?);
    let mode = EvalMode::parse(flags.require("mode")?).map_err(|e| usage(e.to_string()))?;
    let out = PathBuf::from(flags.require("out")?);

    let plan_text = std::fs::read_to_string(&folds_path).map_err(|e| Error::io(&folds_path, e))?;
    let plan: FoldPlan = serde_json::from_str(&plan_text)
        .map_err(|e| Error::parse(&folds_path, format!("fold plan: {e}")))?;
    let (sets, labels) = load_image_sets(&images_dir)?;

    let report = eval::run_matrix(&plan, &sets, &labels, mode)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::InvalidArgument(format!("report serialization: {e}")))?;
    store::write_atomic(&out, json.as_bytes())?;

    write_sidecar(
        &out,
        false,
        "evaluate",
        &resolved_map(&[
            ("folds", folds_path.display().to_string()),
            ("images", images_dir.display().to_string()),
            ("mode", mode.as_str().to_string()),
            ("cells", report.cells.len().to_string()),
        ]),
    )?;
    println!("evaluate ({}):", mode.as_str());
    print!("{}", report.render_table());
    Ok(())
}

fn cmd_report(args: &[String]) -> CliResult {
    let flags = Flags::parse(args, &["out"], &[], &["inputs"])?;
    let out = PathBuf::from(flags.require("out")?);
    let inputs = flags
        .multi
        .get("inputs")
        .ok_or_else(|| usage("missing required flag --inputs"))?;

    let mut rendered = String::new();
    for input in inputs {
        let path = Path::new(input);
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: RobustnessReport = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path, format!("report: {e}")))?;
        rendered.push_str(&report.render_table());
        rendered.push('\n');
    }
    store::write_atomic(&out, rendered.as_bytes())?;

    write_sidecar(
        &out,
        false,
        "report",
        &resolved_map(&[("inputs", inputs.join(",")), ("reports", inputs.len().to_string())]),
    )?;
    print!("{rendered}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(args: &[&str]) -> Vec<String> {
        args.iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(&s(&["--help"])), 0);
        assert_eq!(run(&[]), 0);
    }

    #[test]
    fn unknown_command_and_flag_are_usage_errors() {
        assert_eq!(run(&s(&["frobnicate"])), 1);
        assert_eq!(run(&s(&["clean", "--wat", "1"])), 1);
        assert_eq!(run(&s(&["synth-corpus", "--out"])), 1);
    }

    #[test]
    fn missing_manifest_is_a_data_error() {
        assert_eq!(
            run(&s(&["clean", "--manifest", "/nonexistent/m.csv", "--out", "/tmp/x"])),
            2
        );
    }

    #[test]
    fn lead_zero_rejected() {
        assert_eq!(
            run(&s(&[
                "transform", "--kind", "attractor", "--manifest", "m.csv", "--out", "/tmp/x",
                "--lead", "0"
            ])),
            1
        );
    }
}
