//! Synthetic multi-modal benchmark.
//!
//! Samples live in `R^D`. A random `signal_dim`-dimensional subspace carries
//! the structure: `modes` Gaussian clusters of spread `mode_sigma`, with
//! centers at least `8·mode_sigma` apart. The orthogonal complement carries
//! nuisance noise whose scale is drawn per sample from
//! `[noise_min, noise_max]·mode_sigma`, so raw Euclidean geometry is
//! dominated by a factor that says nothing about normality.
//!
//! Anomalies are either a uniform shell at radius `4σ..8σ` around a random
//! mode center, or a cluster around the midpoint of two mode centers. They
//! share the nuisance noise of normal samples.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::types::{Dataset, GroundTruth, Label, Sample, Split};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Ratio of the minimum pairwise mode-center distance to `mode_sigma`.
pub const MIN_CENTER_SEPARATION: f64 = 8.0;
/// Shell radii around a mode center, in units of `mode_sigma`.
pub const SHELL_RADIUS: (f64, f64) = (4.0, 8.0);

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub dim: usize,
    pub modes: usize,
    pub signal_dim: usize,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    /// Abnormal fraction inside the training pool.
    pub contamination: f64,
    /// Abnormal fraction of the validation and test splits.
    pub eval_contamination: f64,
    /// Fraction of training samples that carry a label.
    pub labeled_ratio: f64,
    /// Share of the labeled samples that are abnormal.
    pub labeled_abnormal_fraction: f64,
    pub mode_sigma: f64,
    /// Radius of the sphere the mode centers are placed on, in `mode_sigma` units.
    pub center_radius: f64,
    /// Share of anomalies placed at mode midpoints (needs at least two modes).
    pub midpoint_fraction: f64,
    /// Range of the per-sample nuisance scale, in `mode_sigma` units.
    pub noise_min: f64,
    pub noise_max: f64,
    pub group_size: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            modes: 4,
            signal_dim: 8,
            n_train: 2000,
            n_val: 1000,
            n_test: 1000,
            contamination: 0.05,
            eval_contamination: 0.3,
            labeled_ratio: 0.05,
            labeled_abnormal_fraction: 0.5,
            mode_sigma: 0.1,
            center_radius: 8.0,
            midpoint_fraction: 0.5,
            noise_min: 0.5,
            noise_max: 1.5,
            group_size: 4,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.dim == 0 || self.modes == 0 || self.group_size == 0 {
            return fail("data.dim, data.modes and data.group_size must be >= 1".into());
        }
        if self.signal_dim == 0 || self.signal_dim > self.dim {
            return fail(format!(
                "data.signal_dim must be in 1..={}, got {}",
                self.dim, self.signal_dim
            ));
        }
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return fail("every split needs at least one sample".into());
        }
        for (name, v) in [
            ("data.contamination", self.contamination),
            ("data.eval_contamination", self.eval_contamination),
            ("data.labeled_ratio", self.labeled_ratio),
            ("data.labeled_abnormal_fraction", self.labeled_abnormal_fraction),
            ("data.midpoint_fraction", self.midpoint_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if !(self.mode_sigma > 0.0) || !(self.center_radius > 0.0) {
            return fail("data.mode_sigma and data.center_radius must be > 0".into());
        }
        if !(self.noise_min >= 0.0 && self.noise_max >= self.noise_min) {
            return fail(format!(
                "need 0 <= data.noise_min <= data.noise_max, got {} and {}",
                self.noise_min, self.noise_max
            ));
        }
        if self.modes > 1 {
            // Centers on a sphere of radius R are at most 2R apart.
            if 2.0 * self.center_radius < MIN_CENTER_SEPARATION {
                return fail(format!(
                    "data.center_radius {} cannot separate modes by {MIN_CENTER_SEPARATION} sigma",
                    self.center_radius
                ));
            }
        }
        let (abnormal, normal) = split_counts(self.n_train, self.contamination);
        let (lab_abn, lab_norm) = self.labeled_counts();
        if lab_abn > abnormal {
            return fail(format!(
                "{lab_abn} labeled abnormal samples requested but train holds only {abnormal} abnormal"
            ));
        }
        if lab_norm > normal {
            return fail(format!(
                "{lab_norm} labeled normal samples requested but train holds only {normal} normal"
            ));
        }
        Ok(())
    }

    /// (labeled abnormal, labeled normal) counts in the training split.
    pub fn labeled_counts(&self) -> (usize, usize) {
        let labeled = (self.labeled_ratio * self.n_train as f64).round() as usize;
        let abnormal = (self.labeled_abnormal_fraction * labeled as f64).round() as usize;
        (abnormal, labeled - abnormal)
    }
}

/// (abnormal, normal) sample counts for a split of `n` samples.
fn split_counts(n: usize, fraction: f64) -> (usize, usize) {
    let abnormal = ((fraction * n as f64).round() as usize).min(n);
    (abnormal, n - abnormal)
}

/// Rounds to the 9 significant digits used by the CSV format, so generated
/// data and data re-read from disk are bit-identical.
pub fn quantize(v: f64) -> f64 {
    format!("{v:.8e}").parse().expect("formatted float parses")
}

/// The fixed geometry shared by all splits of one generated benchmark.
struct World {
    /// Orthonormal basis of the signal subspace, `signal_dim` vectors of length `dim`.
    signal_basis: Vec<Vec<f64>>,
    /// Orthonormal basis of the complement.
    nuisance_basis: Vec<Vec<f64>>,
    /// Mode centers in signal coordinates.
    centers: Vec<Vec<f64>>,
}

fn gaussian_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Gram–Schmidt over random Gaussian vectors; returns a full orthonormal basis of `R^dim`.
fn random_orthonormal_basis(rng: &mut Rng, dim: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while basis.len() < dim {
        let mut v = gaussian_vec(rng, dim);
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}

fn unit_vec(rng: &mut Rng, n: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, n);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

impl World {
    fn new(cfg: &GeneratorConfig, seed: u64) -> Result<Self> {
        let mut rng = rng::stream(seed, "data.world", 0);
        let mut basis = random_orthonormal_basis(&mut rng, cfg.dim);
        let nuisance_basis = basis.split_off(cfg.signal_dim);
        let radius = cfg.center_radius * cfg.mode_sigma;
        let min_dist = MIN_CENTER_SEPARATION * cfg.mode_sigma;
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(cfg.modes);
        let mut attempts = 0usize;
        while centers.len() < cfg.modes {
            attempts += 1;
            if attempts > 100_000 {
                return Err(Error::Config(format!(
                    "could not place {} mode centers {min_dist} apart on a sphere of radius {radius} in {} dims",
                    cfg.modes, cfg.signal_dim
                )));
            }
            let c: Vec<f64> = unit_vec(&mut rng, cfg.signal_dim)
                .into_iter()
                .map(|x| x * radius)
                .collect();
            let far_enough = centers.iter().all(|o| {
                o.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() >= min_dist
            });
            if far_enough {
                centers.push(c);
            }
        }
        Ok(Self {
            signal_basis: basis,
            nuisance_basis,
            centers,
        })
    }

    /// Embeds signal coordinates and adds nuisance noise of a per-sample scale.
    fn embed(&self, cfg: &GeneratorConfig, signal: &[f64], rng: &mut Rng) -> Vec<f64> {
        let mut x = vec![0.0; cfg.dim];
        for (coef, b) in signal.iter().zip(&self.signal_basis) {
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += coef * bi);
        }
        let scale = cfg.mode_sigma
            * if cfg.noise_max > cfg.noise_min {
                rng.random_range(cfg.noise_min..cfg.noise_max)
            } else {
                cfg.noise_min
            };
        for b in &self.nuisance_basis {
            let coef: f64 = StandardNormal.sample(rng);
            x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += scale * coef * bi);
        }
        x.into_iter().map(quantize).collect()
    }

    fn around(&self, center: &[f64], sigma: f64, rng: &mut Rng) -> Vec<f64> {
        center
            .iter()
            .map(|c| c + sigma * Distribution::<f64>::sample(&StandardNormal, rng))
            .collect::<Vec<f64>>()
    }
}

enum GroupKind {
    Normal(usize),
    Shell(usize),
    Midpoint(usize, usize),
}

fn draw_group_kind(cfg: &GeneratorConfig, abnormal: bool, rng: &mut Rng) -> GroupKind {
    let mode = rng.random_range(0..cfg.modes);
    if !abnormal {
        return GroupKind::Normal(mode);
    }
    if cfg.modes >= 2 && rng.random::<f64>() < cfg.midpoint_fraction {
        let mut other = rng.random_range(0..cfg.modes - 1);
        if other >= mode {
            other += 1;
        }
        GroupKind::Midpoint(mode, other)
    } else {
        GroupKind::Shell(mode)
    }
}

fn draw_sample(world: &World, cfg: &GeneratorConfig, kind: &GroupKind, rng: &mut Rng) -> (Vec<f64>, usize) {
    let sigma = cfg.mode_sigma;
    let (signal, mode) = match *kind {
        GroupKind::Normal(m) => (world.around(&world.centers[m], sigma, rng), m),
        GroupKind::Shell(m) => {
            let u = unit_vec(rng, cfg.signal_dim);
            let r = rng.random_range(SHELL_RADIUS.0..SHELL_RADIUS.1) * sigma;
            let s = world.centers[m].iter().zip(&u).map(|(c, ui)| c + r * ui).collect();
            (s, m)
        }
        GroupKind::Midpoint(a, b) => {
            let mid: Vec<f64> = world.centers[a]
                .iter()
                .zip(&world.centers[b])
                .map(|(x, y)| 0.5 * (x + y))
                .collect();
            (world.around(&mid, sigma, rng), a)
        }
    };
    (world.embed(cfg, &signal, rng), mode)
}

fn generate_split(
    world: &World,
    cfg: &GeneratorConfig,
    split: Split,
    n: usize,
    contamination: f64,
    first_group: u64,
    seed: u64,
) -> Dataset {
    let mut rng = rng::stream(seed, "data.split", split as u64);
    let (abnormal, normal) = split_counts(n, contamination);
    let mut samples = Vec::with_capacity(n);
    let mut group_id = first_group;
    for (count, is_abnormal) in [(normal, false), (abnormal, true)] {
        let mut remaining = count;
        while remaining > 0 {
            let size = remaining.min(cfg.group_size);
            let kind = draw_group_kind(cfg, is_abnormal, &mut rng);
            for _ in 0..size {
                let (features, mode_id) = draw_sample(world, cfg, &kind, &mut rng);
                samples.push(Sample {
                    features,
                    label: Label::Unlabeled,
                    ground_truth: if is_abnormal {
                        GroundTruth::Abnormal
                    } else {
                        GroundTruth::Normal
                    },
                    mode_id,
                    group_id,
                });
            }
            group_id += 1;
            remaining -= size;
        }
    }
    samples.shuffle(&mut rng);
    Dataset {
        split,
        dim: cfg.dim,
        samples,
    }
}

/// Resets all labels, then labels a random subset of the training pool:
/// `round(labeled_ratio · n)` samples, `labeled_abnormal_fraction` of them abnormal.
pub fn assign_labels(train: &mut Dataset, labeled_ratio: f64, labeled_abnormal_fraction: f64, seed: u64) -> Result<()> {
    let labeled = (labeled_ratio * train.len() as f64).round() as usize;
    let want_abnormal = (labeled_abnormal_fraction * labeled as f64).round() as usize;
    let want_normal = labeled - want_abnormal;
    let mut abnormal: Vec<usize> = Vec::new();
    let mut normal: Vec<usize> = Vec::new();
    for (i, s) in train.samples.iter_mut().enumerate() {
        s.label = Label::Unlabeled;
        if s.ground_truth.is_abnormal() {
            abnormal.push(i);
        } else {
            normal.push(i);
        }
    }
    if want_abnormal > abnormal.len() {
        return Err(Error::Config(format!(
            "{want_abnormal} labeled abnormal samples requested but train holds only {}",
            abnormal.len()
        )));
    }
    if want_normal > normal.len() {
        return Err(Error::Config(format!(
            "{want_normal} labeled normal samples requested but train holds only {}",
            normal.len()
        )));
    }
    let mut rng = rng::stream(seed, "data.labels", 0);
    abnormal.shuffle(&mut rng);
    normal.shuffle(&mut rng);
    for &i in &abnormal[..want_abnormal] {
        train.samples[i].label = Label::KnownAbnormal;
    }
    for &i in &normal[..want_normal] {
        train.samples[i].label = Label::KnownNormal;
    }
    Ok(())
}

/// Train, validation and test splits.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

impl Splits {
    pub fn get(&self, split: Split) -> &Dataset {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.val,
            Split::Test => &self.test,
        }
    }
}

/// Generates the three splits. Group ids are disjoint across splits.
pub fn generate_synthetic(cfg: &GeneratorConfig, seed: u64) -> Result<Splits> {
    cfg.validate()?;
    let world = World::new(cfg, seed)?;
    // Groups per split are bounded by the sample count, so these offsets keep ids disjoint.
    let val_offset = cfg.n_train as u64;
    let test_offset = val_offset + cfg.n_val as u64;
    let mut train = generate_split(&world, cfg, Split::Train, cfg.n_train, cfg.contamination, 0, seed);
    let val = generate_split(
        &world,
        cfg,
        Split::Validation,
        cfg.n_val,
        cfg.eval_contamination,
        val_offset,
        seed,
    );
    let test = generate_split(&world, cfg, Split::Test, cfg.n_test, cfg.eval_contamination, test_offset, seed);
    assign_labels(&mut train, cfg.labeled_ratio, cfg.labeled_abnormal_fraction, seed)?;
    Ok(Splits { train, val, test })
}
