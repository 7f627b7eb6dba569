//! Variable-density sampling: probability maps, Bernoulli masks and the
//! noisy undersampled measurement model `y = M_Ω (F x₀ + ε)`.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{seeded, standard_complex};
use crate::transforms::{fft2_unitary, ComplexImage};

pub const DEFAULT_P_MIN: f64 = 0.01;
pub const DEFAULT_DECAY: f64 = 4.0;
pub const DEFAULT_CENTER_FRACTION: f64 = 1.0 / 32.0;

/// Sampling probability of every Fourier coefficient, in the centered layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityMap {
    height: usize,
    width: usize,
    p: Vec<f64>,
}

impl ProbabilityMap {
    pub fn new(height: usize, width: usize, p: Vec<f64>) -> Result<Self> {
        if p.len() != height * width {
            return Err(Error::LengthMismatch {
                expected: height * width,
                got: p.len(),
            });
        }
        if let Some((j, &v)) = p.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "sampling probability {v} at index {j} is outside (0, 1]"
            )));
        }
        Ok(Self { height, width, p })
    }

    pub fn uniform(height: usize, width: usize, p: f64) -> Result<Self> {
        Self::new(height, width, vec![p; height * width])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.p
    }

    /// Expected number of sampled coefficients, E|Ω| = Σ p_j.
    pub fn expected_samples(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Drawn sampling set Ω, the diagonal of M_Ω.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingSet {
    height: usize,
    width: usize,
    mask: Vec<bool>,
    n_observed: usize,
}

impl SamplingSet {
    pub fn new(height: usize, width: usize, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != height * width {
            return Err(Error::LengthMismatch {
                expected: height * width,
                got: mask.len(),
            });
        }
        let n_observed = mask.iter().filter(|&&m| m).count();
        Ok(Self {
            height,
            width,
            mask,
            n_observed,
        })
    }

    pub fn full(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            mask: vec![true; height * width],
            n_observed: height * width,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn n_observed(&self) -> usize {
        self.n_observed
    }

    pub fn contains(&self, j: usize) -> bool {
        self.mask[j]
    }

    /// Zeroes every entry of `data` outside Ω.
    pub fn apply(&self, data: &mut [Complex64]) {
        for (v, &m) in data.iter_mut().zip(&self.mask) {
            if !m {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }
}

/// Radial polynomial variable density with a fully sampled center.
///
/// Frequencies are measured in field-of-view units, `ρ ∈ [0, √½]`. Inside
/// `ρ ≤ center_fraction` every coefficient is sampled; outside,
/// `p = clamp(κ (1 − ρ/√½)^decay, p_min, 1)` with κ found by bisection so
/// that `Σ p = target_fraction · N`.
pub fn make_density(
    shape: (usize, usize),
    target_fraction: f64,
    center_fraction: f64,
    decay: f64,
    p_min: f64,
) -> Result<ProbabilityMap> {
    let (h, w) = shape;
    let n = h * w;
    if n == 0 {
        return Err(Error::Empty("probability map shape"));
    }
    if !(target_fraction > 0.0 && target_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target fraction {target_fraction} outside (0, 1]"
        )));
    }
    if !(p_min > 0.0 && p_min <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "p_min {p_min} outside (0, 1]"
        )));
    }
    if !(decay >= 0.0) || !(center_fraction >= 0.0) {
        return Err(Error::InvalidArgument(
            "decay and center fraction must be non-negative".into(),
        ));
    }
    if target_fraction == 1.0 {
        return ProbabilityMap::uniform(h, w, 1.0);
    }

    let rho_max = std::f64::consts::FRAC_1_SQRT_2;
    // None marks the fully sampled center
    let profile: Vec<Option<f64>> = (0..n)
        .map(|idx| {
            let ky = (idx / w) as f64 / h as f64 - (h / 2) as f64 / h as f64;
            let kx = (idx % w) as f64 / w as f64 - (w / 2) as f64 / w as f64;
            let rho = (kx * kx + ky * ky).sqrt();
            if rho <= center_fraction {
                None
            } else {
                Some((1.0 - rho / rho_max).max(0.0).powf(decay))
            }
        })
        .collect();

    let eval = |kappa: f64| -> Vec<f64> {
        profile
            .iter()
            .map(|f| match f {
                None => 1.0,
                Some(f) => (kappa * f).clamp(p_min, 1.0),
            })
            .collect()
    };
    let total = |kappa: f64| eval(kappa).iter().sum::<f64>();

    let target = target_fraction * n as f64;
    let floor = total(0.0);
    if floor > target * (1.0 + 1e-3) {
        return Err(Error::InfeasibleDensity(format!(
            "minimum achievable fraction {:.4} exceeds target {target_fraction:.4}",
            floor / n as f64
        )));
    }
    let ceiling: f64 = profile
        .iter()
        .map(|f| match f {
            Some(f) if *f == 0.0 => p_min,
            _ => 1.0,
        })
        .sum();
    if ceiling < target * (1.0 - 1e-3) {
        return Err(Error::InfeasibleDensity(format!(
            "maximum achievable fraction {:.4} falls short of target {target_fraction:.4}",
            ceiling / n as f64
        )));
    }
    let mut hi = 1.0;
    while total(hi) < target {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-14 * hi {
            break;
        }
    }
    let p = eval(hi);
    let achieved = p.iter().sum::<f64>();
    if (achieved - target).abs() > 1e-3 * target {
        return Err(Error::InfeasibleDensity(format!(
            "bisection reached fraction {:.5} for target {target_fraction:.5}",
            achieved / n as f64
        )));
    }
    ProbabilityMap::new(h, w, p)
}

/// Independent Bernoulli(p_j) draw of every coefficient.
pub fn draw_mask(prob: &ProbabilityMap, seed: u64) -> SamplingSet {
    let mut rng = seeded(seed);
    let mask = prob
        .values()
        .iter()
        .map(|&p| rng.random::<f64>() < p)
        .collect();
    SamplingSet::new(prob.height, prob.width, mask).expect("mask matches map shape")
}

/// `y = M_Ω (F x₀ + ε)` with ε ~ CN(0, σ² I): real and imaginary parts each
/// have variance σ²/2. Entries outside Ω are exactly zero.
pub fn measure(
    x0: &ComplexImage,
    mask: &SamplingSet,
    sigma_eps: f64,
    seed: u64,
) -> Result<ComplexImage> {
    x0.ensure_shape(mask.shape())?;
    if !(sigma_eps >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise level {sigma_eps} must be non-negative"
        )));
    }
    let mut y = fft2_unitary(x0);
    if sigma_eps > 0.0 {
        let mut rng = seeded(seed);
        for v in y.data_mut() {
            *v += standard_complex(&mut rng) * sigma_eps;
        }
    }
    mask.apply(y.data_mut());
    Ok(y)
}

/// σ_ε such that ‖x₀‖² / (N σ_ε²) equals `snr_db`.
pub fn snr_to_sigma(x0: &ComplexImage, snr_db: f64) -> Result<f64> {
    let energy = x0.norm_sqr();
    if energy == 0.0 {
        return Err(Error::InvalidArgument(
            "cannot set a relative noise level for an all-zero image".into(),
        ));
    }
    Ok((energy / (x0.len() as f64 * 10f64.powf(snr_db / 10.0))).sqrt())
}

const MAGIC: &[u8; 4] = b"VDMP";
const FORMAT_VERSION: u32 = 1;
const KIND_PROBABILITY: u8 = 0;
const KIND_MASK: u8 = 1;
const KIND_COMPLEX: u8 = 2;

fn write_header<W: Write>(w: &mut W, h: usize, wd: usize, kind: u8) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(h as u32).to_le_bytes())?;
    w.write_all(&(wd as u32).to_le_bytes())?;
    w.write_all(&[kind])?;
    Ok(())
}

fn read_header<R: Read>(r: &mut R) -> std::result::Result<(usize, usize, u8), String> {
    let mut buf = [0u8; 17];
    r.read_exact(&mut buf)
        .map_err(|e| format!("truncated header: {e}"))?;
    if &buf[0..4] != MAGIC {
        return Err("bad magic".into());
    }
    let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let h = u32::from_le_bytes(buf[8..12].try_into().unwrap()) as usize;
    let w = u32::from_le_bytes(buf[12..16].try_into().unwrap()) as usize;
    Ok((h, w, buf[16]))
}

impl ProbabilityMap {
    /// Little-endian: magic `VDMP`, version u32, h u32, w u32, kind u8 = 0,
    /// then N float64.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        write_header(&mut w, self.height, self.width, KIND_PROBABILITY)?;
        for p in &self.p {
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> std::result::Result<Self, String> {
        let (h, w, kind) = read_header(&mut r)?;
        if kind != KIND_PROBABILITY {
            return Err(format!(
                "expected probability map (kind 0), found kind {kind}"
            ));
        }
        let mut p = Vec::with_capacity(h * w);
        let mut buf = [0u8; 8];
        for _ in 0..h * w {
            r.read_exact(&mut buf)
                .map_err(|e| format!("truncated data: {e}"))?;
            p.push(f64::from_le_bytes(buf));
        }
        ProbabilityMap::new(h, w, p).map_err(|e| e.to_string())
    }
}

impl SamplingSet {
    /// Same header as [`ProbabilityMap::write_binary`] with kind 1, then N u8.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        write_header(&mut w, self.height, self.width, KIND_MASK)?;
        let bytes: Vec<u8> = self.mask.iter().map(|&m| m as u8).collect();
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> std::result::Result<Self, String> {
        let (h, w, kind) = read_header(&mut r)?;
        if kind != KIND_MASK {
            return Err(format!(
                "expected sampling mask (kind 1), found kind {kind}"
            ));
        }
        let mut bytes = vec![0u8; h * w];
        r.read_exact(&mut bytes)
            .map_err(|e| format!("truncated data: {e}"))?;
        if let Some(b) = bytes.iter().find(|&&b| b > 1) {
            return Err(format!("mask byte {b} is not 0 or 1"));
        }
        SamplingSet::new(h, w, bytes.iter().map(|&b| b == 1).collect()).map_err(|e| e.to_string())
    }
}

impl ComplexImage {
    /// Same header with kind 2, then N (re, im) float64 pairs.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let (h, wd) = self.shape();
        write_header(&mut w, h, wd, KIND_COMPLEX)?;
        for v in self.data() {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> std::result::Result<Self, String> {
        let (h, w, kind) = read_header(&mut r)?;
        if kind != KIND_COMPLEX {
            return Err(format!(
                "expected complex matrix (kind 2), found kind {kind}"
            ));
        }
        let mut data = Vec::with_capacity(h * w);
        let mut buf = [0u8; 16];
        for _ in 0..h * w {
            r.read_exact(&mut buf)
                .map_err(|e| format!("truncated data: {e}"))?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            data.push(Complex64::new(re, im));
        }
        ComplexImage::new(h, w, data).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_target_gives_ones() {
        let p = make_density((32, 32), 1.0, DEFAULT_CENTER_FRACTION, 4.0, 0.01).unwrap();
        assert!(p.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn density_hits_target_fraction() {
        for (shape, target) in [
            ((64, 64), 0.25),
            ((128, 64), 1.0 / 8.0),
            ((256, 256), 1.0 / 6.0),
        ] {
            let p = make_density(shape, target, DEFAULT_CENTER_FRACTION, 4.0, 0.01).unwrap();
            let frac = p.expected_samples() / p.len() as f64;
            assert!((frac - target).abs() <= 1e-3 * target, "{frac} vs {target}");
        }
    }

    #[test]
    fn density_shape_64() {
        let (h, w) = (64, 64);
        let p = make_density((h, w), 0.25, DEFAULT_CENTER_FRACTION, 4.0, 0.01).unwrap();
        let v = p.values();
        assert!(v.iter().all(|&x| x >= 0.01));
        assert_eq!(v[(h / 2) * w + w / 2], 1.0);
        // scan: sort by radius and check the profile never increases
        let mut by_radius: Vec<(f64, f64)> = (0..h * w)
            .map(|idx| {
                let dy = (idx / w) as f64 - (h / 2) as f64;
                let dx = (idx % w) as f64 - (w / 2) as f64;
                ((dx * dx + dy * dy).sqrt(), v[idx])
            })
            .collect();
        by_radius.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for pair in by_radius.windows(2) {
            if pair[1].0 > pair[0].0 {
                assert!(pair[1].1 <= pair[0].1 + 1e-15);
            } else {
                assert_eq!(pair[1].1, pair[0].1);
            }
        }
    }

    #[test]
    fn infeasible_targets() {
        // p_min = 0.5 everywhere already exceeds 10%
        assert!(matches!(
            make_density((32, 32), 0.1, 0.0, 4.0, 0.5),
            Err(Error::InfeasibleDensity(_))
        ));
        // a large fully sampled disc exceeds the target
        assert!(matches!(
            make_density((32, 32), 0.05, 0.3, 4.0, 0.01),
            Err(Error::InfeasibleDensity(_))
        ));
        assert!(make_density((32, 32), 0.0, 0.0, 4.0, 0.01).is_err());
        assert!(make_density((32, 32), 0.5, 0.0, 4.0, 0.0).is_err());
    }

    #[test]
    fn full_probability_gives_full_mask() {
        let p = ProbabilityMap::uniform(16, 16, 1.0).unwrap();
        let m = draw_mask(&p, 3);
        assert_eq!(m.n_observed(), 256);
    }

    #[test]
    fn half_probability_count_concentrates() {
        // Binomial(65536, 1/2): sd = 128, so ±0.01 N = ±655 is > 5 sd.
        let p = ProbabilityMap::uniform(256, 256, 0.5).unwrap();
        for seed in 0..5 {
            let frac = draw_mask(&p, seed).n_observed() as f64 / 65536.0;
            assert!((0.49..=0.51).contains(&frac), "seed {seed}: {frac}");
        }
    }

    #[test]
    fn mask_is_deterministic_per_seed() {
        let p = make_density((64, 64), 0.25, DEFAULT_CENTER_FRACTION, 4.0, 0.01).unwrap();
        assert_eq!(draw_mask(&p, 42), draw_mask(&p, 42));
        assert_ne!(draw_mask(&p, 42), draw_mask(&p, 43));
    }

    #[test]
    fn noiseless_full_measurement_is_fft() {
        let mut rng = seeded(1);
        let x = ComplexImage::from_fn(16, 16, |_, _| standard_complex(&mut rng));
        let y = measure(&x, &SamplingSet::full(16, 16), 0.0, 0).unwrap();
        assert_eq!(y, fft2_unitary(&x));
    }

    #[test]
    fn unobserved_entries_are_zero() {
        let mut rng = seeded(2);
        let x = ComplexImage::from_fn(16, 16, |_, _| standard_complex(&mut rng));
        let p = ProbabilityMap::uniform(16, 16, 0.3).unwrap();
        let mask = draw_mask(&p, 5);
        for sigma in [0.0, 0.5] {
            let y = measure(&x, &mask, sigma, 9).unwrap();
            for (j, v) in y.data().iter().enumerate() {
                if !mask.contains(j) {
                    assert_eq!(*v, Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn noise_power_matches_sigma() {
        // mean of 4096 Exp(1) variables: sd = 1/64, so ±0.05 is > 3 sd
        let x = ComplexImage::zeros(64, 64);
        let y = measure(&x, &SamplingSet::full(64, 64), 1.0, 17).unwrap();
        let mean = y.norm_sqr() / 4096.0;
        assert!((0.95..=1.05).contains(&mean), "{mean}");
    }

    #[test]
    fn negative_sigma_rejected() {
        let x = ComplexImage::zeros(8, 8);
        assert!(measure(&x, &SamplingSet::full(8, 8), -1.0, 0).is_err());
    }

    #[test]
    fn snr_conversion() {
        let n = 64;
        let ones = ComplexImage::from_fn(8, 8, |_, _| Complex64::new(1.0, 0.0));
        assert!((snr_to_sigma(&ones, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((snr_to_sigma(&ones, 40.0).unwrap() - 0.01).abs() < 1e-15);
        let twos = ComplexImage::from_fn(8, 8, |_, _| Complex64::new(0.0, 2.0));
        assert!((snr_to_sigma(&twos, 40.0).unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(ones.len(), n);
        assert!(snr_to_sigma(&ComplexImage::zeros(8, 8), 40.0).is_err());
    }

    #[test]
    fn invalid_probability_rejected() {
        assert!(ProbabilityMap::new(2, 2, vec![0.5, 0.0, 1.0, 1.0]).is_err());
        assert!(ProbabilityMap::new(2, 2, vec![0.5, 1.1, 1.0, 1.0]).is_err());
        assert!(ProbabilityMap::new(2, 2, vec![0.5; 3]).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let p = make_density((32, 16), 0.25, DEFAULT_CENTER_FRACTION, 4.0, 0.01).unwrap();
        let mut buf = Vec::new();
        p.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"VDMP");
        assert_eq!(buf.len(), 17 + 8 * 512);
        assert_eq!(ProbabilityMap::read_binary(&buf[..]).unwrap(), p);
        // kind byte distinguishes maps from masks
        assert!(SamplingSet::read_binary(&buf[..]).is_err());

        let m = draw_mask(&p, 1);
        let mut buf = Vec::new();
        m.write_binary(&mut buf).unwrap();
        assert_eq!(buf[16], 1);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 32);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 16);
        assert_eq!(SamplingSet::read_binary(&buf[..]).unwrap(), m);
        assert!(SamplingSet::read_binary(&buf[..20]).is_err());
    }

    #[test]
    fn complex_binary_round_trip() {
        let img = ComplexImage::from_fn(4, 8, |i, j| {
            Complex64::new(i as f64 - 0.5, -(j as f64) * 1e-300)
        });
        let mut buf = Vec::new();
        img.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 17 + 32 * 16);
        assert_eq!(ComplexImage::read_binary(&buf[..]).unwrap(), img);
        assert!(SamplingSet::read_binary(&buf[..]).is_err());
        assert!(ComplexImage::read_binary(&buf[..100]).is_err());
    }
}
