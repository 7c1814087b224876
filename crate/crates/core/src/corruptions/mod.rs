//! Corrupted test-set synthesis for the native corruption kinds, with a
//! severity table per kind.

pub mod kernels;

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, tags};

/// Version tag of [`SEVERITY_TABLE`]; embedded in every benchmark report.
pub const TABLE_VERSION: &str = "recap-severity/v1";

pub const SEVERITIES: [u8; 5] = [1, 2, 3, 4, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Noise,
    Blur,
    Weather,
    Digital,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CorruptionKind {
    GaussianNoise,
    ShotNoise,
    ImpulseNoise,
    DefocusBlur,
    GlassBlur,
    MotionBlur,
    ZoomBlur,
    Brightness,
    Snow,
    Frost,
    Fog,
    Contrast,
    ElasticTransform,
    Pixelate,
    JpegCompression,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 15] = [
        CorruptionKind::GaussianNoise,
        CorruptionKind::ShotNoise,
        CorruptionKind::ImpulseNoise,
        CorruptionKind::DefocusBlur,
        CorruptionKind::GlassBlur,
        CorruptionKind::MotionBlur,
        CorruptionKind::ZoomBlur,
        CorruptionKind::Brightness,
        CorruptionKind::Snow,
        CorruptionKind::Frost,
        CorruptionKind::Fog,
        CorruptionKind::Contrast,
        CorruptionKind::ElasticTransform,
        CorruptionKind::Pixelate,
        CorruptionKind::JpegCompression,
    ];

    pub const NATIVE: [CorruptionKind; 11] = [
        CorruptionKind::GaussianNoise,
        CorruptionKind::ShotNoise,
        CorruptionKind::ImpulseNoise,
        CorruptionKind::DefocusBlur,
        CorruptionKind::GlassBlur,
        CorruptionKind::MotionBlur,
        CorruptionKind::ZoomBlur,
        CorruptionKind::Brightness,
        CorruptionKind::Contrast,
        CorruptionKind::ElasticTransform,
        CorruptionKind::Pixelate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorruptionKind::GaussianNoise => "gaussian_noise",
            CorruptionKind::ShotNoise => "shot_noise",
            CorruptionKind::ImpulseNoise => "impulse_noise",
            CorruptionKind::DefocusBlur => "defocus_blur",
            CorruptionKind::GlassBlur => "glass_blur",
            CorruptionKind::MotionBlur => "motion_blur",
            CorruptionKind::ZoomBlur => "zoom_blur",
            CorruptionKind::Brightness => "brightness",
            CorruptionKind::Snow => "snow",
            CorruptionKind::Frost => "frost",
            CorruptionKind::Fog => "fog",
            CorruptionKind::Contrast => "contrast",
            CorruptionKind::ElasticTransform => "elastic_transform",
            CorruptionKind::Pixelate => "pixelate",
            CorruptionKind::JpegCompression => "jpeg_compression",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn family(self) -> Family {
        use CorruptionKind::*;
        match self {
            GaussianNoise | ShotNoise | ImpulseNoise => Family::Noise,
            DefocusBlur | GlassBlur | MotionBlur | ZoomBlur => Family::Blur,
            Brightness | Snow | Frost | Fog => Family::Weather,
            Contrast | ElasticTransform | Pixelate | JpegCompression => Family::Digital,
        }
    }

    pub fn is_native(self) -> bool {
        !matches!(
            self,
            CorruptionKind::Snow | CorruptionKind::Frost | CorruptionKind::Fog | CorruptionKind::JpegCompression
        )
    }

    /// Position in [`ALL`](Self::ALL).
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of one native kind across severities 1..=5.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeverityParams {
    /// Additive noise standard deviation.
    Gaussian([f64; 5]),
    /// Photon count scale; smaller is noisier.
    Shot([f64; 5]),
    /// Fraction of salt-and-pepper pixels.
    Impulse([f64; 5]),
    /// Disk radius in pixels.
    Defocus([f64; 5]),
    /// `(sigma, max displacement, iterations)`.
    Glass([(f64, usize, usize); 5]),
    /// Kernel length in pixels.
    Motion([usize; 5]),
    /// Largest zoom factor; factors run from 1.02 in steps of 0.02.
    Zoom([f64; 5]),
    /// Additive brightness shift.
    Brightness([f64; 5]),
    /// Contrast factor; smaller is stronger.
    Contrast([f64; 5]),
    /// `(alpha, smoothing sigma)`.
    Elastic([(f64, f64); 5]),
    /// Intermediate side length; smaller is stronger.
    Pixelate([usize; 5]),
}

pub const SEVERITY_TABLE: [(CorruptionKind, SeverityParams); 11] = [
    (CorruptionKind::GaussianNoise, SeverityParams::Gaussian([0.08, 0.12, 0.18, 0.26, 0.38])),
    (CorruptionKind::ShotNoise, SeverityParams::Shot([60.0, 25.0, 12.0, 5.0, 3.0])),
    (CorruptionKind::ImpulseNoise, SeverityParams::Impulse([0.03, 0.06, 0.09, 0.17, 0.27])),
    (CorruptionKind::DefocusBlur, SeverityParams::Defocus([1.0, 1.5, 2.0, 2.5, 3.0])),
    (
        CorruptionKind::GlassBlur,
        SeverityParams::Glass([(0.5, 1, 1), (0.6, 1, 2), (0.7, 2, 2), (0.8, 2, 3), (0.9, 3, 3)]),
    ),
    (CorruptionKind::MotionBlur, SeverityParams::Motion([3, 5, 7, 9, 11])),
    (CorruptionKind::ZoomBlur, SeverityParams::Zoom([1.06, 1.12, 1.18, 1.24, 1.30])),
    (CorruptionKind::Brightness, SeverityParams::Brightness([0.1, 0.2, 0.3, 0.4, 0.5])),
    (CorruptionKind::Contrast, SeverityParams::Contrast([0.4, 0.3, 0.2, 0.1, 0.05])),
    (
        CorruptionKind::ElasticTransform,
        SeverityParams::Elastic([(10.0, 3.0), (17.0, 3.0), (24.0, 3.0), (31.0, 3.0), (38.0, 3.0)]),
    ),
    (CorruptionKind::Pixelate, SeverityParams::Pixelate([22, 18, 14, 11, 8])),
];

pub fn severity_params(kind: CorruptionKind) -> Result<SeverityParams> {
    SEVERITY_TABLE
        .iter()
        .find(|(k, _)| *k == kind)
        .map(|(_, p)| *p)
        .ok_or(Error::ExternalOnly(kind.name()))
}

fn check_severity(severity: u8) -> Result<usize> {
    if (1..=5).contains(&severity) {
        Ok(severity as usize - 1)
    } else {
        Err(Error::InvalidSeverity(severity))
    }
}

/// Human-readable parameter of one table cell, for reports.
pub fn describe(kind: CorruptionKind, severity: u8) -> Result<alloc::string::String> {
    use alloc::format;
    let s = check_severity(severity)?;
    Ok(match severity_params(kind)? {
        SeverityParams::Gaussian(t) => format!("sigma={}", t[s]),
        SeverityParams::Shot(t) => format!("photons={}", t[s]),
        SeverityParams::Impulse(t) => format!("amount={}", t[s]),
        SeverityParams::Defocus(t) => format!("radius={}", t[s]),
        SeverityParams::Glass(t) => format!("sigma={} delta={} iterations={}", t[s].0, t[s].1, t[s].2),
        SeverityParams::Motion(t) => format!("length={}", t[s]),
        SeverityParams::Zoom(t) => format!("max_zoom={}", t[s]),
        SeverityParams::Brightness(t) => format!("delta={}", t[s]),
        SeverityParams::Contrast(t) => format!("factor={}", t[s]),
        SeverityParams::Elastic(t) => format!("alpha={} sigma={}", t[s].0, t[s].1),
        SeverityParams::Pixelate(t) => format!("size={}", t[s]),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Clean,
    Corrupted { kind: CorruptionKind, severity: u8, seed: u64 },
    External { kind: Option<CorruptionKind>, severity: Option<u8>, digest: u64 },
}

/// `n` grayscale images of `height x width`, row-major, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBatch {
    height: usize,
    width: usize,
    pixels: Vec<f32>,
    labels: Vec<u8>,
    provenance: Provenance,
}

impl ImageBatch {
    pub fn new(height: usize, width: usize, pixels: Vec<f32>, labels: Vec<u8>, provenance: Provenance) -> Result<Self> {
        let per = height * width;
        if per == 0 {
            return Err(Error::InvalidParameter {
                name: "shape",
                reason: "image side must be positive",
            });
        }
        if pixels.len() != labels.len() * per {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * per,
                actual: pixels.len(),
            });
        }
        if !pixels.iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter {
                name: "pixels",
                reason: "values must lie in [0, 1]",
            });
        }
        Ok(ImageBatch {
            height,
            width,
            pixels,
            labels,
            provenance,
        })
    }

    /// Builds a batch from 8-bit pixels scaled by `1/255`.
    pub fn from_bytes(height: usize, width: usize, bytes: &[u8], labels: Vec<u8>, provenance: Provenance) -> Result<Self> {
        let pixels = bytes.iter().map(|&b| b as f32 / 255.0).collect();
        Self::new(height, width, pixels, labels, provenance)
    }

    /// Pixels rounded back to 8 bits.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&v| libm::round(v as f64 * 255.0).clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn image_len(&self) -> usize {
        self.height * self.width
    }

    pub fn image(&self, i: usize) -> &[f32] {
        let per = self.image_len();
        &self.pixels[i * per..(i + 1) * per]
    }

    pub fn images(&self) -> core::slice::ChunksExact<'_, f32> {
        self.pixels.chunks_exact(self.image_len())
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// New batch holding the listed images in the given order.
    pub fn select(&self, indices: &[usize]) -> ImageBatch {
        let mut pixels = Vec::with_capacity(indices.len() * self.image_len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            pixels.extend_from_slice(self.image(i));
            labels.push(self.labels[i]);
        }
        ImageBatch {
            height: self.height,
            width: self.width,
            pixels,
            labels,
            provenance: self.provenance.clone(),
        }
    }
}

/// Seed of the random stream used for image `index`; independent of severity,
/// so severities of one kind share their random draws.
pub fn image_seed(seed: u64, kind: CorruptionKind, index: u64) -> u64 {
    derive_seed(derive_seed(seed, tags::CORRUPT, kind.index() as u64), tags::CORRUPT, index)
}

/// Corrupts one image. `index` is the image's position in its batch and only
/// feeds the random stream.
pub fn corrupt_image(
    image: &[f32],
    height: usize,
    width: usize,
    kind: CorruptionKind,
    severity: u8,
    seed: u64,
    index: u64,
) -> Result<Vec<f32>> {
    use kernels::*;
    let s = check_severity(severity)?;
    let params = severity_params(kind)?;
    if image.len() != height * width {
        return Err(Error::DimensionMismatch {
            expected: height * width,
            actual: image.len(),
        });
    }
    let mut rng = stream(image_seed(seed, kind, index), tags::CORRUPT, 0);
    let (h, w) = (height, width);
    let mut x: Vec<f64> = image.iter().map(|&v| v as f64).collect();
    x = match params {
        SeverityParams::Gaussian(t) => {
            gaussian_noise(&mut x, t[s], &mut rng);
            x
        }
        SeverityParams::Shot(t) => {
            shot_noise(&mut x, t[s], &mut rng);
            x
        }
        SeverityParams::Impulse(t) => {
            impulse_noise(&mut x, t[s], &mut rng);
            x
        }
        SeverityParams::Defocus(t) => defocus_blur(&x, h, w, t[s]),
        SeverityParams::Glass(t) => glass_blur(&x, h, w, t[s].0, t[s].1, t[s].2, &mut rng),
        SeverityParams::Motion(t) => motion_blur(&x, h, w, t[s]),
        SeverityParams::Zoom(t) => {
            let steps = libm::round((t[s] - 1.0) / 0.02) as usize;
            let factors: Vec<f64> = (1..=steps).map(|k| 1.0 + 0.02 * k as f64).collect();
            zoom_blur(&x, h, w, &factors)
        }
        SeverityParams::Brightness(t) => {
            brightness(&mut x, t[s]);
            x
        }
        SeverityParams::Contrast(t) => {
            contrast(&mut x, t[s]);
            x
        }
        SeverityParams::Elastic(t) => elastic_transform(&x, h, w, t[s].0, t[s].1, &mut rng),
        SeverityParams::Pixelate(t) => pixelate(&x, h, w, t[s]),
    };
    Ok(x.into_iter().map(|v| v.clamp(0.0, 1.0) as f32).collect())
}

/// Corrupts every image of a batch; labels and order are kept.
pub fn corrupt(batch: &ImageBatch, kind: CorruptionKind, severity: u8, seed: u64) -> Result<ImageBatch> {
    check_severity(severity)?;
    severity_params(kind)?;
    let mut pixels = Vec::with_capacity(batch.pixels.len());
    for (i, img) in batch.images().enumerate() {
        pixels.extend(corrupt_image(img, batch.height, batch.width, kind, severity, seed, i as u64)?);
    }
    Ok(ImageBatch {
        height: batch.height,
        width: batch.width,
        pixels,
        labels: batch.labels.clone(),
        provenance: Provenance::Corrupted { kind, severity, seed },
    })
}
