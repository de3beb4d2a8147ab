//! Sparse ground-truth systems and seeded sample streams.
//!
//! The observation model is `d(n) = w' x(n) + v(n)` where `w` is a sparse
//! tap-weight vector, `x(n)` is a most-recent-first sliding window over an
//! i.i.d. Gaussian input sequence and `v(n)` is i.i.d. Gaussian measurement
//! noise. The window starts as all zeros and fills as samples arrive.
//!
//! Randomness is fully reproducible: every generator is a `ChaCha8Rng` seeded
//! from a `u64`, Gaussians are drawn with the ziggurat sampler of
//! `rand_distr::StandardNormal` and scaled by the requested standard
//! deviation, and multi-trial experiments derive one substream seed per trial
//! via [`substream_seed`]. Bit patterns are stable for pinned crate versions;
//! cross-language reimplementations should match moments, not bits.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Ground-truth tap-weight vector with known support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    taps: DVector<f64>,
    support: Vec<usize>,
}

impl SparseSystem {
    /// Builds a system from an explicit tap vector; the support is derived
    /// from the exact nonzeros.
    pub fn from_taps(taps: DVector<f64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidArgument("taps must be non-empty".into()));
        }
        let support = taps
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(Self { taps, support })
    }

    pub fn taps(&self) -> &DVector<f64> {
        &self.taps
    }

    /// Indices of the nonzero taps, sorted ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Filter length M.
    pub fn m(&self) -> usize {
        self.taps.len()
    }

    /// Number of nonzero taps.
    pub fn r_true(&self) -> usize {
        self.support.len()
    }
}

/// Input/noise statistics and the stream seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalConfig {
    pub m: usize,
    /// Per-sample variance of the input sequence x(n).
    pub input_variance: f64,
    /// Variance of the observation noise v(n); zero gives a noiseless stream.
    pub noise_variance: f64,
    pub seed: u64,
}

impl SignalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidArgument("m must be positive".into()));
        }
        if !(self.input_variance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "input_variance must be > 0, got {}",
                self.input_variance
            )));
        }
        if !(self.noise_variance >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise_variance must be >= 0, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }
}

/// One (regressor, desired output) pair. `x` is most-recent-first.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub x: DVector<f64>,
    pub d: f64,
}

/// Derives the seed of substream `index` from a master seed.
///
/// This is one SplitMix64 output step on `master + (index + 1) * GAMMA`,
/// with GAMMA = 0x9E3779B97F4A7C15. The rule is part of the reproducibility
/// contract: trial `t` of an experiment uses substreams `2t` (system draw)
/// and `2t + 1` (sample stream).
pub fn substream_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws a system with exactly `r_true` nonzero taps at uniformly random
/// distinct positions, values i.i.d. standard normal. Deterministic given
/// the seed.
///
/// The positions come from a partial Fisher-Yates shuffle (`r_true` draws),
/// then values are assigned in ascending position order.
pub fn generate_sparse_system(m: usize, r_true: usize, seed: u64) -> Result<SparseSystem> {
    if r_true < 1 || r_true > m {
        return Err(Error::InvalidArgument(format!(
            "r_true must satisfy 1 <= r_true <= m, got r_true={r_true}, m={m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..m).collect();
    for i in 0..r_true {
        let j = rng.random_range(i..m);
        idx.swap(i, j);
    }
    let mut support: Vec<usize> = idx[..r_true].to_vec();
    support.sort_unstable();

    let mut taps = DVector::zeros(m);
    for &i in &support {
        taps[i] = StandardNormal.sample(&mut rng);
    }
    Ok(SparseSystem { taps, support })
}

/// Streaming sample generator for one (system, config) pair.
///
/// Single-owner state machine: distinct trials use independent instances and
/// may run concurrently.
#[derive(Debug, Clone)]
pub struct SampleStream {
    taps: DVector<f64>,
    window: DVector<f64>,
    input_std: f64,
    noise_std: f64,
    rng: ChaCha8Rng,
}

impl SampleStream {
    pub fn new(system: &SparseSystem, cfg: &SignalConfig) -> Result<Self> {
        cfg.validate()?;
        if system.m() != cfg.m {
            return Err(Error::InvalidArgument(format!(
                "system has {} taps but config says m={}",
                system.m(),
                cfg.m
            )));
        }
        Ok(Self {
            taps: system.taps().clone(),
            window: DVector::zeros(cfg.m),
            input_std: cfg.input_variance.sqrt(),
            noise_std: cfg.noise_variance.sqrt(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        })
    }

    /// Draws one fresh input and one noise value and advances the window.
    pub fn next_sample(&mut self) -> SamplePair {
        let z_in: f64 = StandardNormal.sample(&mut self.rng);
        let z_noise: f64 = StandardNormal.sample(&mut self.rng);
        self.advance_with(self.input_std * z_in, self.noise_std * z_noise)
    }

    /// Advances the window with an explicit input/noise pair.
    ///
    /// `x(n)` is `x(n-1)` shifted one slot toward the past with `input`
    /// prepended; `d(n) = taps . x(n) + noise`.
    pub fn advance_with(&mut self, input: f64, noise: f64) -> SamplePair {
        let m = self.window.len();
        let w = self.window.as_mut_slice();
        w.copy_within(0..m - 1, 1);
        w[0] = input;
        let d = self.taps.dot(&self.window) + noise;
        SamplePair {
            x: self.window.clone(),
            d,
        }
    }
}

impl Iterator for SampleStream {
    type Item = SamplePair;

    fn next(&mut self) -> Option<SamplePair> {
        Some(self.next_sample())
    }
}

/// Writes samples in the recorded-stream CSV format:
/// a `# m=<M>` header line, then one `x_0,...,x_{M-1},d` row per time step.
pub fn save_samples(path: &Path, samples: &[SamplePair]) -> Result<()> {
    let mut out = String::new();
    if let Some(first) = samples.first() {
        writeln!(out, "# m={}", first.x.len()).expect("string write");
        for s in samples {
            if s.x.len() != first.x.len() {
                return Err(Error::Format(format!(
                    "inconsistent sample length: expected {}, got {}",
                    first.x.len(),
                    s.x.len()
                )));
            }
            for v in s.x.iter() {
                write!(out, "{v:?},").expect("string write");
            }
            writeln!(out, "{:?}", s.d).expect("string write");
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a recorded sample sequence, in file order.
///
/// An empty file yields an empty sequence. A non-empty file must start with
/// the `# m=<M>` header; each row must have exactly M+1 parseable fields.
pub fn load_samples(path: &Path) -> Result<Vec<SamplePair>> {
    let text = std::fs::read_to_string(path)?;
    parse_samples(&text)
}

fn parse_samples(text: &str) -> Result<Vec<SamplePair>> {
    let mut lines = text.lines().enumerate();
    let m = loop {
        match lines.next() {
            None => return Ok(Vec::new()),
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((lineno, l)) => {
                let header = l.trim();
                let m: usize = header
                    .strip_prefix("# m=")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| {
                        Error::Format(format!(
                            "expected `# m=<M>` header, found {header:?} at line {}",
                            lineno + 1
                        ))
                    })?;
                if m == 0 {
                    return Err(Error::Format("header declares m=0".into()));
                }
                break m;
            }
        }
    };

    let mut samples = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != m + 1 {
            return Err(Error::Parse {
                line: lineno + 1,
                detail: format!("expected {} fields, found {}", m + 1, fields.len()),
            });
        }
        let mut values = Vec::with_capacity(m + 1);
        for f in &fields {
            values.push(f.trim().parse::<f64>().map_err(|e| Error::Parse {
                line: lineno + 1,
                detail: format!("bad float {f:?}: {e}"),
            })?);
        }
        let d = values.pop().expect("m + 1 >= 1 fields");
        samples.push(SamplePair {
            x: DVector::from_vec(values),
            d,
        });
    }
    Ok(samples)
}
