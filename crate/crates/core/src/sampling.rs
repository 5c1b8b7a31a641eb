//! Complete interpolating sampling sequences and their reconstruction functions.
//!
//! A [`SamplingSequence`] materializes the points `t_k`, `|k| ≤ K`, of either
//! the integer lattice or a Kadec perturbation of it (`t_k = k + δ_k`,
//! `|δ_k| ≤ δ < 1/4`, `δ_0 = 0`). Perturbations are confined to the window;
//! outside it the sequence continues as the integer lattice, which keeps it a
//! complete interpolating sequence and makes the generating function
//!
//! ```text
//! φ(z) = z · Π_{k≠0} (1 - z/t_k)
//! ```
//!
//! computable to rounding accuracy: the product is taken explicitly over
//! `0 < |k| ≤ N_prod` (paired as `k, -k`) and the remaining lattice tail
//! `Π_{k>N_prod} (1 - z²/k²)` is summed analytically through Hurwitz zeta
//! values.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{config, input, range, Error, Result};
use crate::spectral::{trig_poly_on_grid, SpectralGrid, Spectrum};

/// Default number of integer samples used for the Fourier series of `φ_k`.
pub const DEFAULT_SAMPLE_LENGTH: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingRule {
    Equidistant,
    /// `t_k = k + δ_k` with `δ_k` uniform on `[-delta, delta]`, keyed by `(seed, k)`.
    Kadec { delta: f64, seed: u64 },
}

impl SamplingRule {
    pub fn name(&self) -> &'static str {
        match self {
            SamplingRule::Equidistant => "equidistant",
            SamplingRule::Kadec { .. } => "kadec",
        }
    }
}

/// Deterministic Kadec offset for index `k`.
///
/// Each index draws from its own ChaCha8 stream, so the value does not depend
/// on the window or on evaluation order.
pub fn kadec_offset(delta: f64, seed: u64, k: i64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let stream = ((k << 1) ^ (k >> 63)) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let u: f64 = rng.gen();
    delta * (2.0 * u - 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSequence {
    rule: SamplingRule,
    window: usize,
    points: Vec<f64>,
}

impl SamplingSequence {
    pub fn equidistant(window: usize) -> Self {
        Self {
            rule: SamplingRule::Equidistant,
            window,
            points: (-(window as i64)..=window as i64).map(|k| k as f64).collect(),
        }
    }

    pub fn kadec(delta: f64, seed: u64, window: usize) -> Result<Self> {
        if !(0.0..0.25).contains(&delta) {
            return Err(input(format!(
                "Kadec perturbation bound must lie in [0, 1/4), got {delta}"
            )));
        }
        let points = (-(window as i64)..=window as i64)
            .map(|k| k as f64 + kadec_offset(delta, seed, k))
            .collect();
        Ok(Self {
            rule: SamplingRule::Kadec { delta, seed },
            window,
            points,
        })
    }

    pub fn new(rule: SamplingRule, window: usize) -> Result<Self> {
        match rule {
            SamplingRule::Equidistant => Ok(Self::equidistant(window)),
            SamplingRule::Kadec { delta, seed } => Self::kadec(delta, seed, window),
        }
    }

    pub fn rule(&self) -> SamplingRule {
        self.rule
    }

    /// Index window `K`.
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn is_equidistant(&self) -> bool {
        matches!(self.rule, SamplingRule::Equidistant)
    }

    /// `t_k` for `|k| ≤ K`.
    pub fn point(&self, k: i64) -> Result<f64> {
        if k.unsigned_abs() as usize > self.window {
            return Err(range(format!(
                "sampling index {k} outside the window |k| ≤ {}",
                self.window
            )));
        }
        Ok(self.points[(k + self.window as i64) as usize])
    }

    /// `t_k` for any `k`; beyond the window the sequence is the integer lattice.
    pub(crate) fn point_extended(&self, k: i64) -> f64 {
        if k.unsigned_abs() as usize <= self.window {
            self.points[(k + self.window as i64) as usize]
        } else {
            k as f64
        }
    }

    /// Smallest gap `t_{k+1} - t_k` inside the window.
    pub fn min_gap(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Free-function accessor for `t_k`.
pub fn points(seq: &SamplingSequence, k: i64) -> Result<f64> {
    seq.point(k)
}

/// Truncation order of the explicit product in `φ`.
///
/// The lattice tail beyond `N_prod` is summed as a power series in
/// `(z/(N_prod+1))²`, so evaluations are restricted to `|z| ≤ N_prod/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratingFunctionConfig {
    pub product_order: usize,
}

impl GeneratingFunctionConfig {
    pub const MIN_PRODUCT_ORDER: usize = 256;

    /// `N_prod = max(4K, 256)`.
    pub fn for_sequence(seq: &SamplingSequence) -> Self {
        Self {
            product_order: (4 * seq.window()).max(Self::MIN_PRODUCT_ORDER),
        }
    }

    /// Like [`Self::for_sequence`], enlarged so that `|z| ≤ radius` is admissible.
    pub fn covering(seq: &SamplingSequence, radius: f64) -> Self {
        let base = Self::for_sequence(seq);
        let needed = (2.0 * radius.abs()).ceil() as usize + 2;
        Self {
            product_order: base.product_order.max(needed),
        }
    }

    /// Radius of the disc on which `φ` may be evaluated.
    pub fn radius(&self) -> f64 {
        self.product_order as f64 / 2.0
    }

    fn validate(&self, seq: &SamplingSequence, z_abs: f64) -> Result<()> {
        if self.product_order < seq.window() {
            return Err(config(format!(
                "product order {} is smaller than the sequence window {}",
                self.product_order,
                seq.window()
            )));
        }
        if !z_abs.is_finite() || z_abs > self.radius() {
            return Err(config(format!(
                "|z| = {z_abs} exceeds the validated radius {} of product order {}",
                self.radius(),
                self.product_order
            )));
        }
        Ok(())
    }
}

// B_2, B_4, ..., B_14
const BERNOULLI_EVEN: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

/// `a^{s-1} ζ(s, a)` for integer `s ≥ 2` and large `a`, by Euler-Maclaurin.
fn scaled_hurwitz_zeta(s: u32, a: f64) -> f64 {
    let s_f = s as f64;
    let mut sum = 1.0 / (s_f - 1.0) + 0.5 / a;
    let mut factorial = 1.0; // (2p)!
    let mut rising = s_f; // s(s+1)...(s+2p-2)
    let mut a_pow = a * a; // a^{2p}
    for (p, b) in BERNOULLI_EVEN.iter().enumerate() {
        let p = p + 1;
        factorial *= (2 * p - 1) as f64 * (2 * p) as f64;
        if p > 1 {
            rising *= (s_f + (2 * p - 3) as f64) * (s_f + (2 * p - 2) as f64);
        }
        let term = b / factorial * rising / a_pow;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        a_pow *= a * a;
    }
    sum
}

/// `Π_{k > order} (1 - z²/k²)` for `|z| ≤ order/2`.
fn lattice_tail(z: Complex64, order: usize) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return Complex64::new(1.0, 0.0);
    }
    let a = (order + 1) as f64;
    let w = (z / a) * (z / a);
    let mut pow = Complex64::new(1.0, 0.0);
    let mut log = Complex64::new(0.0, 0.0);
    for j in 1..=400u32 {
        pow *= w;
        let term = pow * (a * scaled_hurwitz_zeta(2 * j, a) / j as f64);
        log -= term;
        if term.norm() < 1e-18 * (1.0 + log.norm()) {
            break;
        }
    }
    log.exp()
}

fn lattice_tail_real(t: f64, order: usize) -> f64 {
    lattice_tail(Complex64::new(t, 0.0), order).re
}

/// `Π_{0<|j|≤N_prod, j≠exclude} (t_j - z)/t_j`, times the lattice tail.
fn reduced_product(
    seq: &SamplingSequence,
    z: Complex64,
    exclude: Option<i64>,
    cfg: &GeneratingFunctionConfig,
) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for k in 1..=cfg.product_order as i64 {
        for j in [k, -k] {
            if Some(j) == exclude {
                continue;
            }
            let tj = seq.point_extended(j);
            acc *= (tj - z) / tj;
        }
    }
    acc * lattice_tail(z, cfg.product_order)
}

fn reduced_product_real(
    seq: &SamplingSequence,
    t: f64,
    exclude: Option<i64>,
    cfg: &GeneratingFunctionConfig,
) -> f64 {
    let mut acc = 1.0;
    for k in 1..=cfg.product_order as i64 {
        let (tp, tm) = (seq.point_extended(k), seq.point_extended(-k));
        let fp = if Some(k) == exclude { 1.0 } else { (tp - t) / tp };
        let fm = if Some(-k) == exclude { 1.0 } else { (tm - t) / tm };
        acc *= fp * fm;
    }
    acc * lattice_tail_real(t, cfg.product_order)
}

/// Generating function `φ(z)`, zero exactly at the sampling points.
pub fn generating_function(
    seq: &SamplingSequence,
    z: Complex64,
    cfg: &GeneratingFunctionConfig,
) -> Result<Complex64> {
    cfg.validate(seq, z.norm())?;
    Ok(z * reduced_product(seq, z, None, cfg))
}

/// `sin(πx)/(πx)`, exact at the integers.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.fract() == 0.0 {
        0.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Reconstruction functions `φ_k(t) = φ(t)/(φ'(t_k)(t - t_k))` for one sequence.
///
/// `φ'(t_k)` is obtained by removing the vanishing factor from the product
/// analytically and is cached for every index of the window.
#[derive(Debug, Clone)]
pub struct ReconstructionBasis {
    seq: SamplingSequence,
    cfg: GeneratingFunctionConfig,
    /// `R_k(t_k)`, where `R_k` is the product with the `k`-th factor removed.
    reduced_at_node: Vec<f64>,
}

impl ReconstructionBasis {
    pub fn new(seq: SamplingSequence, cfg: GeneratingFunctionConfig) -> Result<Self> {
        cfg.validate(&seq, seq.window() as f64 + 0.25)?;
        let window = seq.window() as i64;
        let reduced_at_node = if seq.is_equidistant() {
            Vec::new()
        } else {
            (-window..=window)
                .map(|k| {
                    let tk = seq.point_extended(k);
                    if k == 0 {
                        1.0
                    } else {
                        reduced_product_real(&seq, tk, Some(k), &cfg)
                    }
                })
                .collect()
        };
        Ok(Self {
            seq,
            cfg,
            reduced_at_node,
        })
    }

    /// Basis with `N_prod` chosen to cover evaluations up to `|t| ≤ radius`.
    pub fn covering(seq: SamplingSequence, radius: f64) -> Result<Self> {
        let cfg = GeneratingFunctionConfig::covering(&seq, radius);
        Self::new(seq, cfg)
    }

    pub fn sequence(&self) -> &SamplingSequence {
        &self.seq
    }

    pub fn config(&self) -> &GeneratingFunctionConfig {
        &self.cfg
    }

    fn check_index(&self, k: i64) -> Result<()> {
        if k.unsigned_abs() as usize > self.seq.window() {
            return Err(range(format!(
                "reconstruction index {k} outside the window |k| ≤ {}",
                self.seq.window()
            )));
        }
        Ok(())
    }

    /// `φ'(t_k)`.
    pub fn derivative_at_node(&self, k: i64) -> Result<f64> {
        self.check_index(k)?;
        if self.seq.is_equidistant() {
            return Ok(if k % 2 == 0 { 1.0 } else { -1.0 });
        }
        let r = self.reduced_at_node[(k + self.seq.window() as i64) as usize];
        Ok(if k == 0 { r } else { -r })
    }

    /// `φ(t)` for real `t` (via the product route, also for the lattice).
    pub fn phi(&self, t: f64) -> Result<f64> {
        self.cfg.validate(&self.seq, t.abs())?;
        Ok(t * reduced_product_real(&self.seq, t, None, &self.cfg))
    }

    /// `φ_k(t)`; equals 1 at `t = t_k` and 0 at the other sampling points.
    pub fn phi_k(&self, k: i64, t: f64) -> Result<f64> {
        self.check_index(k)?;
        if !t.is_finite() {
            return Err(input(format!("evaluation time must be finite, got {t}")));
        }
        if self.seq.is_equidistant() {
            return Ok(sinc(t - k as f64));
        }
        self.cfg.validate(&self.seq, t.abs())?;
        let tk = self.seq.point_extended(k);
        if t == tk {
            return Ok(1.0);
        }
        let rk = reduced_product_real(&self.seq, t, Some(k), &self.cfg);
        let node = self.reduced_at_node[(k + self.seq.window() as i64) as usize];
        Ok(if k == 0 { rk / node } else { t * rk / (tk * node) })
    }

    /// Integer samples `φ_k(n)` for `|k| ≤ k_max`, `|n| ≤ half_length`.
    pub fn sample_table(&self, k_max: usize, half_length: usize) -> Result<SampleTable> {
        if k_max > self.seq.window() {
            return Err(range(format!(
                "stage {k_max} exceeds the sequence window {}",
                self.seq.window()
            )));
        }
        let width = 2 * half_length + 1;
        let mut data = vec![0.0; (2 * k_max + 1) * width];
        if self.seq.is_equidistant() {
            for k in -(k_max as i64)..=k_max as i64 {
                if k.unsigned_abs() as usize <= half_length {
                    data[(k + k_max as i64) as usize * width + (k + half_length as i64) as usize] = 1.0;
                }
            }
            return Ok(SampleTable {
                k_max,
                half_length,
                data,
            });
        }
        self.cfg.validate(&self.seq, half_length as f64)?;
        let phis: Vec<f64> = (-(half_length as i64)..=half_length as i64)
            .map(|n| n as f64 * reduced_product_real(&self.seq, n as f64, None, &self.cfg))
            .collect();
        for k in -(k_max as i64)..=k_max as i64 {
            let tk = self.seq.point_extended(k);
            let deriv = self.derivative_at_node(k)?;
            let row = (k + k_max as i64) as usize * width;
            for (i, n) in (-(half_length as i64)..=half_length as i64).enumerate() {
                let t = n as f64;
                let gap = t - tk;
                data[row + i] = if gap.abs() >= 0.05 {
                    phis[i] / (deriv * gap)
                } else {
                    self.phi_k(k, t)?
                };
            }
        }
        Ok(SampleTable {
            k_max,
            half_length,
            data,
        })
    }

    /// `φ̂_k` on the grid, from the Fourier series of the integer samples.
    pub fn spectrum(&self, k: i64, grid: &SpectralGrid, half_length: usize) -> Result<Spectrum> {
        self.check_index(k)?;
        if half_length < self.seq.window() {
            return Err(config(format!(
                "sample length {half_length} does not cover the window {}; the Fourier series would be truncated",
                self.seq.window()
            )));
        }
        let k_abs = k.unsigned_abs() as usize;
        let table = self.sample_table(k_abs, half_length)?;
        let coeffs: Vec<Complex64> = table.row(k).iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Spectrum::new(*grid, trig_poly_on_grid(grid, &coeffs, half_length)?, PI)
    }
}

/// Table of integer samples `φ_k(n)`.
#[derive(Debug, Clone)]
pub struct SampleTable {
    k_max: usize,
    half_length: usize,
    data: Vec<f64>,
}

impl SampleTable {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn half_length(&self) -> usize {
        self.half_length
    }

    /// Samples `φ_k(n)`, `n = -L..=L`.
    pub fn row(&self, k: i64) -> &[f64] {
        let width = 2 * self.half_length + 1;
        let r = (k + self.k_max as i64) as usize;
        &self.data[r * width..(r + 1) * width]
    }

    pub fn get(&self, k: i64, n: i64) -> f64 {
        self.row(k)[(n + self.half_length as i64) as usize]
    }
}

/// Free-function form of [`ReconstructionBasis::phi_k`].
pub fn phi_k(seq: &SamplingSequence, k: i64, t: f64, cfg: &GeneratingFunctionConfig) -> Result<f64> {
    ReconstructionBasis::new(seq.clone(), *cfg)?.phi_k(k, t)
}

/// Free-function form of [`ReconstructionBasis::spectrum`].
pub fn phi_hat_k(
    seq: &SamplingSequence,
    k: i64,
    grid: &SpectralGrid,
    half_length: usize,
    cfg: &GeneratingFunctionConfig,
) -> Result<Spectrum> {
    ReconstructionBasis::new(seq.clone(), *cfg)?.spectrum(k, grid, half_length)
}

/// Finite-section Riesz bound estimates from the Gram matrix of `{φ_k}_{|k|≤n_max}`.
#[derive(Debug, Clone)]
pub struct RieszBounds {
    pub lower: f64,
    pub upper: f64,
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Gram matrix, row-major, indices `-n_max..=n_max`.
    pub gram: Vec<Complex64>,
    pub n_max: usize,
    /// `max |G_jk - conj(G_kj)|`.
    pub hermitian_defect: f64,
}

impl RieszBounds {
    pub fn gram_entry(&self, j: i64, k: i64) -> Complex64 {
        let dim = 2 * self.n_max + 1;
        self.gram[(j + self.n_max as i64) as usize * dim + (k + self.n_max as i64) as usize]
    }
}

/// Computes `G_jk = (1/2π) ∫ φ̂_j conj(φ̂_k) dω` on the grid and its eigenvalues.
pub fn riesz_bounds_estimate(
    basis: &ReconstructionBasis,
    n_max: usize,
    grid: &SpectralGrid,
    half_length: usize,
) -> Result<RieszBounds> {
    if n_max < 1 {
        return Err(input("n_max must be at least 1"));
    }
    let spectra: Vec<Spectrum> = (-(n_max as i64)..=n_max as i64)
        .map(|k| basis.spectrum(k, grid, half_length))
        .collect::<Result<_>>()?;
    let dim = spectra.len();
    let m = grid.size() as f64;
    let mut gram = vec![Complex64::new(0.0, 0.0); dim * dim];
    for j in 0..dim {
        for k in 0..dim {
            let s: Complex64 = spectra[j]
                .values()
                .iter()
                .zip(spectra[k].values())
                .map(|(a, b)| a * b.conj())
                .sum();
            gram[j * dim + k] = s / m;
        }
    }
    let mut hermitian_defect: f64 = 0.0;
    for j in 0..dim {
        for k in 0..dim {
            hermitian_defect = hermitian_defect.max((gram[j * dim + k] - gram[k * dim + j].conj()).norm());
        }
    }
    let matrix = DMatrix::from_fn(dim, dim, |j, k| gram[j * dim + k]);
    let mut eigenvalues: Vec<f64> = matrix.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let lower = eigenvalues[0];
    let upper = eigenvalues[dim - 1];
    if lower <= 0.0 {
        return Err(Error::NotPositiveDefinite {
            smallest: lower,
            eigenvalues,
        });
    }
    Ok(RieszBounds {
        lower,
        upper,
        eigenvalues,
        gram,
        n_max,
        hermitian_defect,
    })
}
