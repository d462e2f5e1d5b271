//! Core domain types shared by every pipeline stage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagnostic class of a record. The order (AF, Normal, STD) is load-bearing:
/// confusion matrices, reports, and tie-breaking all index classes this way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "AF")]
    Af,
    Normal,
    #[serde(rename = "STD")]
    Std,
}

pub const LABELS: [Label; 3] = [Label::Af, Label::Normal, Label::Std];

impl Label {
    pub fn index(self) -> usize {
        match self {
            Label::Af => 0,
            Label::Normal => 1,
            Label::Std => 2,
        }
    }

    pub fn from_index(idx: usize) -> Label {
        LABELS[idx]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Af => "AF",
            Label::Normal => "Normal",
            Label::Std => "STD",
        }
    }

    pub fn parse(s: &str) -> Result<Label> {
        match s {
            "AF" => Ok(Label::Af),
            "Normal" => Ok(Label::Normal),
            "STD" => Ok(Label::Std),
            other => Err(Error::InvalidArgument(format!("unknown label `{other}`"))),
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which version of the dataset a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Raw,
    Clean,
    Bw,
    Em,
    Ma,
    All,
}

/// All six dataset variants in report order.
pub const VARIANTS: [Variant; 6] = [
    Variant::Raw,
    Variant::Clean,
    Variant::Bw,
    Variant::Em,
    Variant::Ma,
    Variant::All,
];

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Raw => "raw",
            Variant::Clean => "clean",
            Variant::Bw => "bw",
            Variant::Em => "em",
            Variant::Ma => "ma",
            Variant::All => "all",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        match s {
            "raw" => Ok(Variant::Raw),
            "clean" => Ok(Variant::Clean),
            "bw" => Ok(Variant::Bw),
            "em" => Ok(Variant::Em),
            "ma" => Ok(Variant::Ma),
            "all" => Ok(Variant::All),
            other => Err(Error::InvalidArgument(format!("unknown variant `{other}`"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The two image transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageKind {
    Attractor,
    Scalogram,
}

pub const IMAGE_KINDS: [ImageKind; 2] = [ImageKind::Attractor, ImageKind::Scalogram];

impl ImageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ImageKind::Attractor => "attractor",
            ImageKind::Scalogram => "scalogram",
        }
    }

    pub fn parse(s: &str) -> Result<ImageKind> {
        match s {
            "attractor" => Ok(ImageKind::Attractor),
            "scalogram" => Ok(ImageKind::Scalogram),
            other => Err(Error::InvalidArgument(format!(
                "unknown image kind `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for ImageKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Acceptable record duration on ingest. The strict defaults suit
/// full-length clinical recordings; tests use much shorter fixtures, so the
/// bounds are configurable.
#[derive(Debug, Clone, Copy)]
pub struct DurationBounds {
    pub min_s: f64,
    pub max_s: f64,
}

impl DurationBounds {
    /// 8 s to 138 s.
    pub fn strict() -> Self {
        DurationBounds {
            min_s: 8.0,
            max_s: 138.0,
        }
    }

    /// Accept anything with at least one sample.
    pub fn unbounded() -> Self {
        DurationBounds {
            min_s: 0.0,
            max_s: f64::INFINITY,
        }
    }
}

impl Default for DurationBounds {
    fn default() -> Self {
        DurationBounds::strict()
    }
}

/// A multi-lead sampled ECG signal with its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct EcgRecord {
    pub id: String,
    /// lead x time, millivolts; all leads equal length
    pub leads: Vec<Vec<f64>>,
    /// sampling rate, Hz
    pub fs: f64,
    pub label: Label,
    pub variant: Variant,
}

impl EcgRecord {
    pub fn new(
        id: impl Into<String>,
        leads: Vec<Vec<f64>>,
        fs: f64,
        label: Label,
        variant: Variant,
    ) -> Result<Self> {
        let record = EcgRecord {
            id: id.into(),
            leads,
            fs,
            label,
            variant,
        };
        record.validate(DurationBounds::unbounded())?;
        Ok(record)
    }

    pub fn samples_per_lead(&self) -> usize {
        self.leads.first().map(|l| l.len()).unwrap_or(0)
    }

    pub fn duration_s(&self) -> f64 {
        self.samples_per_lead() as f64 / self.fs
    }

    /// Check the record invariants: positive rate, equal-length finite leads,
    /// duration within bounds.
    pub fn validate(&self, bounds: DurationBounds) -> Result<()> {
        if !(self.fs > 0.0) || !self.fs.is_finite() {
            return Err(Error::invariant(&self.id, format!("fs {} not > 0", self.fs)));
        }
        if self.leads.is_empty() {
            return Err(Error::invariant(&self.id, "record has no leads"));
        }
        let len = self.leads[0].len();
        if len == 0 {
            return Err(Error::invariant(&self.id, "leads are empty"));
        }
        for (i, lead) in self.leads.iter().enumerate() {
            if lead.len() != len {
                return Err(Error::invariant(
                    &self.id,
                    format!("lead {} has {} samples, lead 0 has {}", i, lead.len(), len),
                ));
            }
            if let Some(pos) = lead.iter().position(|v| !v.is_finite()) {
                return Err(Error::invariant(
                    &self.id,
                    format!("lead {i} sample {pos} is not finite"),
                ));
            }
        }
        let dur = self.duration_s();
        if dur < bounds.min_s || dur > bounds.max_s {
            return Err(Error::invariant(
                &self.id,
                format!(
                    "duration {:.3} s outside [{}, {}] s",
                    dur, bounds.min_s, bounds.max_s
                ),
            ));
        }
        Ok(())
    }

    /// Borrow one lead by zero-based index.
    pub fn lead(&self, index: usize) -> Result<&[f64]> {
        self.leads.get(index).map(|l| l.as_slice()).ok_or({
            Error::MissingLead {
                id: self.id.clone(),
                lead: index,
                leads: self.leads.len(),
            }
        })
    }
}

/// Side length of every transform image.
pub const IMAGE_SIZE: usize = 150;

/// A 150x150 grayscale raster produced by one of the transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformImage {
    /// row-major, row 0 at the top; values in [0, 1]
    pub pixels: Vec<f64>,
    pub kind: ImageKind,
    pub source_id: String,
    pub variant: Variant,
    /// set when a stage fell back to a default (e.g. no periodicity found)
    pub warning: Option<String>,
}

impl TransformImage {
    pub fn new(
        pixels: Vec<f64>,
        kind: ImageKind,
        source_id: impl Into<String>,
        variant: Variant,
    ) -> Result<Self> {
        if pixels.len() != IMAGE_SIZE * IMAGE_SIZE {
            return Err(Error::DegenerateImage(format!(
                "expected {} pixels, got {}",
                IMAGE_SIZE * IMAGE_SIZE,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::DegenerateImage(format!(
                "pixel intensity {p} outside [0, 1]"
            )));
        }
        Ok(TransformImage {
            pixels,
            kind,
            source_id: source_id.into(),
            variant,
            warning: None,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * IMAGE_SIZE + col]
    }

    /// Quantize to 8-bit grayscale bytes, intensity i -> round(i * 255).
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    /// Rebuild from 8-bit bytes (inverse of `to_bytes` up to quantization).
    pub fn from_bytes(
        bytes: &[u8],
        kind: ImageKind,
        source_id: impl Into<String>,
        variant: Variant,
    ) -> Result<Self> {
        let pixels = bytes.iter().map(|&b| b as f64 / 255.0).collect();
        TransformImage::new(pixels, kind, source_id, variant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_order_is_af_normal_std() {
        assert_eq!(Label::Af.index(), 0);
        assert_eq!(Label::Normal.index(), 1);
        assert_eq!(Label::Std.index(), 2);
        assert!(Label::Af < Label::Normal && Label::Normal < Label::Std);
    }

    #[test]
    fn record_rejects_ragged_leads() {
        let err = EcgRecord::new(
            "r1",
            vec![vec![0.0; 10], vec![0.0; 9]],
            500.0,
            Label::Normal,
            Variant::Raw,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvariantViolation { .. }));
    }

    #[test]
    fn record_rejects_non_finite_samples() {
        let err = EcgRecord::new(
            "r1",
            vec![vec![0.0, f64::NAN, 1.0]],
            500.0,
            Label::Normal,
            Variant::Raw,
        )
        .unwrap_err();
        assert!(err.to_string().contains("not finite"));
    }

    #[test]
    fn duration_bounds_enforced_in_strict_mode() {
        let rec = EcgRecord::new(
            "short",
            vec![vec![0.0; 100]],
            500.0,
            Label::Af,
            Variant::Raw,
        )
        .unwrap();
        assert!(rec.validate(DurationBounds::unbounded()).is_ok());
        assert!(rec.validate(DurationBounds::strict()).is_err());
    }

    #[test]
    fn image_quantization_round_trips_within_one_step() {
        let pixels: Vec<f64> = (0..IMAGE_SIZE * IMAGE_SIZE)
            .map(|i| (i % 997) as f64 / 996.0)
            .collect();
        let img =
            TransformImage::new(pixels.clone(), ImageKind::Attractor, "x", Variant::Clean).unwrap();
        let back =
            TransformImage::from_bytes(&img.to_bytes(), ImageKind::Attractor, "x", Variant::Clean)
                .unwrap();
        let max_err = img
            .pixels
            .iter()
            .zip(&back.pixels)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err <= 1.0 / 255.0, "max quantization error {max_err}");
    }

    #[test]
    fn image_rejects_out_of_range_intensity() {
        let mut pixels = vec![0.0; IMAGE_SIZE * IMAGE_SIZE];
        pixels[7] = 1.5;
        assert!(TransformImage::new(pixels, ImageKind::Scalogram, "x", Variant::Clean).is_err());
    }
}
