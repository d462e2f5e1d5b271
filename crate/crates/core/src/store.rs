//! Ingest, validate, and persist records, noise segments, and images.
//!
//! Two signal file formats are supported:
//!
//! * a CSV text form: `fs,<rate>` and `label,<label>` header lines followed by
//!   one row per sample with one column per lead;
//! * a compact little-endian binary form: magic `ECGB`, u32 lead count,
//!   u32 sample count, f32 sampling rate, then f32 samples lead by lead.
//!
//! Sample payloads are f32 in both forms, so the binary format round-trips
//! bit-exactly and the text format carries the same 9 significant digits.
//!
//! A dataset is bound together by a manifest CSV with columns
//! `id,path,label,variant,fs,leads,samples,sha256`.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::{DurationBounds, EcgRecord, ImageKind, Label, TransformImage, Variant, IMAGE_SIZE};

const BINARY_MAGIC: &[u8; 4] = b"ECGB";

/// How record signal files are encoded on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalFormat {
    Csv,
    Binary,
}

impl SignalFormat {
    pub fn extension(self) -> &'static str {
        match self {
            SignalFormat::Csv => "csv",
            SignalFormat::Binary => "ecgb",
        }
    }
}

/// How image files are encoded on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Pgm => "pgm",
            ImageFormat::Png => "png",
        }
    }

    pub fn parse(s: &str) -> Result<ImageFormat> {
        match s {
            "pgm" => Ok(ImageFormat::Pgm),
            "png" => Ok(ImageFormat::Png),
            other => Err(Error::InvalidArgument(format!(
                "unknown image format `{other}`"
            ))),
        }
    }
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    /// relative to the manifest's directory unless absolute
    pub path: PathBuf,
    pub label: Label,
    pub variant: Variant,
    pub fs: f64,
    pub leads: usize,
    pub samples: usize,
    pub sha256: String,
}

/// Index of a dataset variant: one row per record or image file.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub dataset_variant: Variant,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>, dataset_variant: Variant) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::invariant(&e.id, "duplicate id in manifest"));
            }
        }
        Ok(DatasetManifest {
            entries,
            dataset_variant,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::from("id,path,label,variant,fs,leads,samples,sha256\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                e.id,
                e.path.display(),
                e.label,
                e.variant,
                format_f64(e.fs),
                e.leads,
                e.samples,
                e.sha256
            ));
        }
        write_atomic(path, out.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "id,path,label,variant,fs,leads,samples,sha256" => {}
            _ => return Err(Error::parse(path, "missing or malformed manifest header")),
        }
        let mut entries = Vec::new();
        let mut variant: Option<Variant> = None;
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 8 {
                return Err(Error::parse(
                    path,
                    format!("row {}: expected 8 fields, got {}", lineno + 2, fields.len()),
                ));
            }
            let entry = ManifestEntry {
                id: fields[0].to_string(),
                path: PathBuf::from(fields[1]),
                label: Label::parse(fields[2])?,
                variant: Variant::parse(fields[3])?,
                fs: fields[4]
                    .parse()
                    .map_err(|_| Error::parse(path, format!("row {}: bad fs", lineno + 2)))?,
                leads: fields[5]
                    .parse()
                    .map_err(|_| Error::parse(path, format!("row {}: bad lead count", lineno + 2)))?,
                samples: fields[6].parse().map_err(|_| {
                    Error::parse(path, format!("row {}: bad sample count", lineno + 2))
                })?,
                sha256: fields[7].to_string(),
            };
            variant.get_or_insert(entry.variant);
            entries.push(entry);
        }
        let dataset_variant = variant.unwrap_or(Variant::Raw);
        DatasetManifest::new(entries, dataset_variant)
    }

    /// Resolve an entry's path relative to the manifest location.
    pub fn resolve(&self, manifest_path: &Path, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            manifest_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(&entry.path)
        }
    }
}

fn format_f64(v: f64) -> String {
    // enough digits to round-trip the f32-precision payloads we store
    let s = format!("{v}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("nan") {
        s
    } else {
        format!("{v}.0")
    }
}

/// Write `bytes` to `path` via a temp file in the same directory plus an
/// atomic rename, so interrupted runs never leave partial files behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", file_name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in digest {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Encode a record as the compact binary form.
pub fn encode_record_binary(record: &EcgRecord) -> Vec<u8> {
    let samples = record.samples_per_lead();
    let mut out = Vec::with_capacity(16 + record.leads.len() * samples * 4);
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(record.leads.len() as u32).to_le_bytes());
    out.extend_from_slice(&(samples as u32).to_le_bytes());
    out.extend_from_slice(&(record.fs as f32).to_le_bytes());
    for lead in &record.leads {
        for &v in lead {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

fn decode_record_binary(path: &Path, bytes: &[u8]) -> Result<(Vec<Vec<f64>>, f64)> {
    if bytes.len() < 16 || &bytes[0..4] != BINARY_MAGIC {
        return Err(Error::parse(path, "bad magic bytes"));
    }
    let leads = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let samples = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let fs = f32::from_le_bytes(bytes[12..16].try_into().unwrap()) as f64;
    let expected = 16 + leads * samples * 4;
    if bytes.len() != expected {
        return Err(Error::parse(
            path,
            format!("expected {} bytes, got {}", expected, bytes.len()),
        ));
    }
    let mut data = Vec::with_capacity(leads);
    let mut off = 16;
    for _ in 0..leads {
        let mut lead = Vec::with_capacity(samples);
        for _ in 0..samples {
            lead.push(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64);
            off += 4;
        }
        data.push(lead);
    }
    Ok((data, fs))
}

/// Encode a record as the CSV text form.
pub fn encode_record_csv(record: &EcgRecord) -> String {
    let mut out = String::new();
    out.push_str(&format!("fs,{}\n", format_f64(record.fs)));
    out.push_str(&format!("label,{}\n", record.label));
    let samples = record.samples_per_lead();
    for i in 0..samples {
        for (l, lead) in record.leads.iter().enumerate() {
            if l > 0 {
                out.push(',');
            }
            // f32 payload precision, like the binary form
            out.push_str(&format!("{:e}", lead[i] as f32));
        }
        out.push('\n');
    }
    out
}

fn decode_record_csv(path: &Path, text: &str) -> Result<(Vec<Vec<f64>>, f64, Option<Label>)> {
    let mut lines = text.lines().peekable();
    let mut fs: Option<f64> = None;
    let mut label: Option<Label> = None;
    while let Some(line) = lines.peek() {
        if let Some(rest) = line.strip_prefix("fs,") {
            fs = Some(
                rest.trim()
                    .parse()
                    .map_err(|_| Error::parse(path, "bad fs header"))?,
            );
            lines.next();
        } else if let Some(rest) = line.strip_prefix("label,") {
            label = Some(Label::parse(rest.trim())?);
            lines.next();
        } else {
            break;
        }
    }
    let fs = fs.ok_or_else(|| Error::parse(path, "missing fs header"))?;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<&str> = line.split(',').collect();
        if columns.is_empty() {
            columns = vec![Vec::new(); row.len()];
        }
        if row.len() != columns.len() {
            return Err(Error::parse(
                path,
                format!("row {}: inconsistent column count", lineno + 1),
            ));
        }
        for (c, field) in row.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::parse(path, format!("row {}: bad sample `{field}`", lineno + 1))
            })?;
            columns[c].push(v as f32 as f64);
        }
    }
    Ok((columns, fs, label))
}

/// Parse signal bytes, format detected from the payload.
fn parse_signal_bytes(path: &Path, bytes: &[u8]) -> Result<(Vec<Vec<f64>>, f64, Option<Label>)> {
    if bytes.starts_with(BINARY_MAGIC) {
        let (leads, fs) = decode_record_binary(path, bytes)?;
        Ok((leads, fs, None))
    } else {
        let text = std::str::from_utf8(bytes)
            .map_err(|_| Error::parse(path, "signal file is neither binary nor utf-8 text"))?;
        decode_record_csv(path, text)
    }
}

/// Read one signal file, format detected from the payload.
pub fn read_signal_file(path: &Path) -> Result<(Vec<Vec<f64>>, f64, Option<Label>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_signal_bytes(path, &bytes)
}

/// Options controlling dataset loading.
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub bounds: DurationBounds,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            bounds: DurationBounds::unbounded(),
        }
    }
}

impl LoadOptions {
    pub fn strict() -> Self {
        LoadOptions {
            bounds: DurationBounds::strict(),
        }
    }
}

/// Load every record referenced by a manifest, in manifest order.
pub fn load_dataset(manifest_path: &Path, opts: LoadOptions) -> Result<Vec<EcgRecord>> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let mut records = Vec::with_capacity(manifest.len());
    for entry in &manifest.entries {
        let file = manifest.resolve(manifest_path, entry);
        if !file.exists() {
            return Err(Error::MissingFile {
                id: entry.id.clone(),
                path: file,
            });
        }
        let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
        if !entry.sha256.is_empty() && sha256_hex(&bytes) != entry.sha256 {
            return Err(Error::invariant(
                &entry.id,
                "file contents do not match the manifest checksum",
            ));
        }
        let (leads, fs, label) = parse_signal_bytes(&file, &bytes)?;
        let record = EcgRecord {
            id: entry.id.clone(),
            leads,
            fs,
            label: label.unwrap_or(entry.label),
            variant: entry.variant,
        };
        record.validate(opts.bounds)?;
        if record.leads.len() != entry.leads || record.samples_per_lead() != entry.samples {
            return Err(Error::invariant(
                &entry.id,
                format!(
                    "file has {} leads x {} samples, manifest says {} x {}",
                    record.leads.len(),
                    record.samples_per_lead(),
                    entry.leads,
                    entry.samples
                ),
            ));
        }
        if record.fs != entry.fs {
            return Err(Error::invariant(
                &entry.id,
                format!("file fs {} disagrees with manifest fs {}", record.fs, entry.fs),
            ));
        }
        if record.label != entry.label {
            return Err(Error::invariant(
                &entry.id,
                format!(
                    "file label {} disagrees with manifest label {}",
                    record.label, entry.label
                ),
            ));
        }
        records.push(record);
    }
    Ok(records)
}

/// Write records into `dir` and return the manifest describing them. The
/// manifest itself is not saved; callers decide where it lives.
pub fn write_records(
    records: &[EcgRecord],
    dir: &Path,
    format: SignalFormat,
) -> Result<DatasetManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(records.len());
    let mut variant = Variant::Raw;
    for record in records {
        let file_name = format!("{}.{}", record.id, format.extension());
        let path = dir.join(&file_name);
        let bytes = match format {
            SignalFormat::Binary => encode_record_binary(record),
            SignalFormat::Csv => encode_record_csv(record).into_bytes(),
        };
        write_atomic(&path, &bytes)?;
        // the binary payload carries fs at f32 precision; the manifest row
        // must agree with what a reload will see
        let stored_fs = match format {
            SignalFormat::Binary => record.fs as f32 as f64,
            SignalFormat::Csv => record.fs,
        };
        entries.push(ManifestEntry {
            id: record.id.clone(),
            path: PathBuf::from(file_name),
            label: record.label,
            variant: record.variant,
            fs: stored_fs,
            leads: record.leads.len(),
            samples: record.samples_per_lead(),
            sha256: sha256_hex(&bytes),
        });
        variant = record.variant;
    }
    DatasetManifest::new(entries, variant)
}

fn encode_pgm(bytes: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{IMAGE_SIZE} {IMAGE_SIZE}\n255\n").into_bytes();
    out.extend_from_slice(bytes);
    out
}

fn decode_pgm(path: &Path, data: &[u8]) -> Result<Vec<u8>> {
    // header: P5, whitespace, width, height, maxval, single whitespace, raster
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 && pos < data.len() {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < data.len() && data[pos] == b'#' {
            while pos < data.len() && data[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(&data[start..pos]);
    }
    pos += 1; // single whitespace after maxval
    if fields.len() != 4 || fields[0] != b"P5" {
        return Err(Error::parse(path, "not a binary PGM"));
    }
    let width: usize = std::str::from_utf8(fields[1])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(path, "bad PGM width"))?;
    let height: usize = std::str::from_utf8(fields[2])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse(path, "bad PGM height"))?;
    if width != IMAGE_SIZE || height != IMAGE_SIZE {
        return Err(Error::parse(
            path,
            format!("expected {IMAGE_SIZE}x{IMAGE_SIZE} PGM, got {width}x{height}"),
        ));
    }
    if fields[3] != b"255" {
        return Err(Error::parse(path, "PGM maxval must be 255"));
    }
    let raster = &data[pos..];
    if raster.len() != IMAGE_SIZE * IMAGE_SIZE {
        return Err(Error::parse(path, "truncated PGM raster"));
    }
    Ok(raster.to_vec())
}

fn encode_png(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, IMAGE_SIZE as u32, IMAGE_SIZE as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::InvalidArgument(format!("png encode: {e}")))?;
        writer
            .write_image_data(bytes)
            .map_err(|e| Error::InvalidArgument(format!("png encode: {e}")))?;
    }
    Ok(out)
}

fn decode_png(path: &Path, data: &[u8]) -> Result<Vec<u8>> {
    let decoder = png::Decoder::new(data);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::parse(path, format!("png decode: {e}")))?;
    let mut buf = vec![0u8; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::parse(path, format!("png decode: {e}")))?;
    if info.width as usize != IMAGE_SIZE
        || info.height as usize != IMAGE_SIZE
        || info.color_type != png::ColorType::Grayscale
        || info.bit_depth != png::BitDepth::Eight
    {
        return Err(Error::parse(path, "expected 150x150 8-bit grayscale PNG"));
    }
    buf.truncate(info.buffer_size());
    Ok(buf)
}

/// Write one image file; returns the encoded bytes' checksum.
pub fn write_image_file(image: &TransformImage, path: &Path, format: ImageFormat) -> Result<String> {
    let bytes = image.to_bytes();
    let encoded = match format {
        ImageFormat::Pgm => encode_pgm(&bytes),
        ImageFormat::Png => encode_png(&bytes)?,
    };
    write_atomic(path, &encoded)?;
    Ok(sha256_hex(&encoded))
}

/// Read one image file written by `write_image_file`.
pub fn read_image_file(
    path: &Path,
    kind: ImageKind,
    source_id: &str,
    variant: Variant,
) -> Result<TransformImage> {
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bytes = if data.starts_with(b"P5") {
        decode_pgm(path, &data)?
    } else {
        decode_png(path, &data)?
    };
    TransformImage::from_bytes(&bytes, kind, source_id, variant)
}

/// Write a collection of images into `dir`, one file per image, and return
/// the manifest binding ids to files.
pub fn write_images(
    images: &[TransformImage],
    dir: &Path,
    format: ImageFormat,
) -> Result<DatasetManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(images.len());
    let mut variant = Variant::Clean;
    for image in images {
        let file_name = format!(
            "{}_{}_{}.{}",
            image.source_id,
            image.variant,
            image.kind,
            format.extension()
        );
        let path = dir.join(&file_name);
        let sha = write_image_file(image, &path, format)?;
        entries.push(ManifestEntry {
            id: image.source_id.clone(),
            path: PathBuf::from(file_name),
            // labels are not known at the image layer; manifest rows for
            // images are rebound to labels by the caller when needed
            label: Label::Normal,
            variant: image.variant,
            fs: 0.0,
            leads: 1,
            samples: IMAGE_SIZE * IMAGE_SIZE,
            sha256: sha,
        });
        variant = image.variant;
    }
    DatasetManifest::new(entries, variant)
}
