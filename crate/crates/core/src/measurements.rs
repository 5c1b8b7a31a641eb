//! Walsh-Paley measurement functionals.
//!
//! Walsh functions use the Paley ordering: for `k = Σ_j k_j 2^j` and
//! `x = Σ_j b_j 2^{-(j+1)}` (the terminating binary expansion, so every `w_k`
//! is right-continuous at dyadic points),
//!
//! ```text
//! w_k(x) = (-1)^{Σ_j k_j b_j}.
//! ```
//!
//! They are carried to `[-π, π)` by `θ̂_k(ω) = w_k((ω + π)/(2π))`. A grid of
//! `M = 2^L` nodes puts node `m` at the left end of the `m`-th dyadic interval
//! of level `L`, so the grid rule integrates products of Walsh functions of
//! index `< M` exactly.

use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{input, range, Result};
use crate::spectral::{SpectralGrid, Spectrum};

/// `w_k(x)` for `x ∈ [0, 1)`.
pub fn walsh(k: u64, x: f64) -> Result<i8> {
    if !(0.0..1.0).contains(&x) {
        return Err(input(format!("Walsh argument must lie in [0, 1), got {x}")));
    }
    let mut parity = 0u32;
    let mut bits = k;
    let mut scale = 2.0;
    while bits != 0 {
        if bits & 1 == 1 {
            // b_j = floor(x 2^{j+1}) mod 2; scaling by powers of two is exact
            parity ^= ((x * scale).floor() as u64 & 1) as u32;
        }
        bits >>= 1;
        scale *= 2.0;
    }
    Ok(if parity == 0 { 1 } else { -1 })
}

/// `w_k` on the `m`-th dyadic interval of level `level`; requires `k < 2^level`.
pub fn walsh_dyadic(k: u64, m: u64, level: u32) -> i8 {
    debug_assert!(level == 64 || k >> level == 0);
    let rev = if level == 0 { 0 } else { m.reverse_bits() >> (64 - level) };
    if (k & rev).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `θ̂_k(ω) = w_k((ω + π)/(2π))` for `ω ∈ [-π, π)`.
pub fn theta_hat(k: u64, omega: f64) -> Result<i8> {
    use std::f64::consts::PI;
    if !(-PI..PI).contains(&omega) {
        return Err(input(format!("θ̂ argument must lie in [-π, π), got {omega}")));
    }
    let x = (omega + PI) / (2.0 * PI);
    // (ω + π)/(2π) can round up to 1 for ω just below π
    walsh(k, x.min(1.0 - f64::EPSILON / 2.0))
}

fn check_grid_index(grid: &SpectralGrid, k: u64) -> Result<()> {
    if k >= grid.size() as u64 {
        return Err(range(format!(
            "Walsh index {k} is not resolved by a grid of {} nodes",
            grid.size()
        )));
    }
    Ok(())
}

/// `θ̂_k` sampled on the grid.
pub fn theta_hat_on_grid(grid: &SpectralGrid, k: u64) -> Result<Vec<f64>> {
    check_grid_index(grid, k)?;
    let level = grid.level();
    Ok((0..grid.size() as u64)
        .map(|m| walsh_dyadic(k, m, level) as f64)
        .collect())
}

/// Walsh functions `w_0..=w_{max_index}` resolved at a dyadic level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalshSystem {
    max_index: u64,
    level: u32,
}

impl WalshSystem {
    pub fn new(max_index: u64) -> Self {
        let level = 64 - max_index.leading_zeros();
        Self { max_index, level }
    }

    pub fn max_index(&self) -> u64 {
        self.max_index
    }

    /// Smallest `L` with `max_index < 2^L`.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// `(1/2π) ∫ θ̂_j θ̂_k` by exact dyadic quadrature at the system level.
    pub fn inner_product(&self, j: u64, k: u64) -> f64 {
        let cells = 1u64 << self.level;
        let sum: i64 = (0..cells)
            .map(|m| (walsh_dyadic(j, m, self.level) * walsh_dyadic(k, m, self.level)) as i64)
            .sum();
        sum as f64 / cells as f64
    }

    /// `sup_n ‖θ̂_n‖_∞`; every Walsh function is ±1-valued.
    pub fn uniform_bound(&self) -> f64 {
        1.0
    }
}

/// In-place unnormalized Walsh-Hadamard transform in natural (Hadamard) order.
pub fn fwht(buf: &mut [Complex64]) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in buf.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

fn bit_reverse_permute(grid: &SpectralGrid, values: &[Complex64]) -> Vec<Complex64> {
    let level = grid.level();
    (0..grid.size() as u64)
        .map(|m| {
            let rev = if level == 0 { 0 } else { m.reverse_bits() >> (64 - level) };
            values[rev as usize]
        })
        .collect()
}

/// All Paley-ordered Walsh coefficients `(1/2π) ∫ v(ω) θ̂_k(ω) dω`, `k < M`.
pub fn walsh_coefficients(grid: &SpectralGrid, values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = bit_reverse_permute(grid, values);
    fwht(&mut buf);
    let scale = 1.0 / grid.size() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// `Σ_k coeffs[k] θ̂_k(ω_m)` at every node.
pub fn walsh_synthesis(grid: &SpectralGrid, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    buf.resize(grid.size(), Complex64::new(0.0, 0.0));
    fwht(&mut buf);
    bit_reverse_permute(grid, &buf)
}

/// `c_k(f, t) = (1/2π) ∫ f̂(ω) θ̂_k(ω) e^{iωt} dω`.
pub fn measure_c(spec: &Spectrum, k: u64, t: f64) -> Result<Complex64> {
    let grid = spec.grid();
    check_grid_index(grid, k)?;
    if !t.is_finite() {
        return Err(input(format!("measurement time must be finite, got {t}")));
    }
    let level = grid.level();
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, f) in spec.values().iter().enumerate() {
        let (s, c) = (grid.node(m) * t).sin_cos();
        let w = walsh_dyadic(k, m as u64, level) as f64;
        acc += f * Complex64::new(c, s) * w;
    }
    Ok(acc / grid.size() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementKind {
    Walsh,
    /// `θ̂_n(ω) = e^{iων(n)}` with `ν = 0, 1, -1, 2, -2, ...`.
    FourierExponentials,
    /// Explicit grid values of each element.
    Custom(Vec<Vec<Complex64>>),
}

/// A finite family `{θ̂_n}_{n < len}` of orthonormal functions on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSystem {
    grid: SpectralGrid,
    kind: MeasurementKind,
    len: usize,
}

/// Frequency of the `n`-th Fourier exponential.
pub fn fourier_frequency(n: usize) -> i64 {
    if n % 2 == 1 {
        n.div_ceil(2) as i64
    } else {
        -((n / 2) as i64)
    }
}

impl MeasurementSystem {
    pub fn walsh(grid: SpectralGrid, len: usize) -> Result<Self> {
        if len == 0 || len > grid.size() {
            return Err(input(format!(
                "Walsh system of {len} elements does not fit a grid of {} nodes",
                grid.size()
            )));
        }
        Ok(Self {
            grid,
            kind: MeasurementKind::Walsh,
            len,
        })
    }

    pub fn fourier_exponentials(grid: SpectralGrid, len: usize) -> Result<Self> {
        if len == 0 || len >= grid.size() {
            return Err(input(format!(
                "{len} exponentials are not orthonormal on a grid of {} nodes",
                grid.size()
            )));
        }
        Ok(Self {
            grid,
            kind: MeasurementKind::FourierExponentials,
            len,
        })
    }

    /// Custom table; rejected unless orthonormal within `tol` and finite.
    pub fn custom(grid: SpectralGrid, elements: Vec<Vec<Complex64>>, tol: f64) -> Result<Self> {
        if elements.is_empty() {
            return Err(input("custom measurement system has no elements"));
        }
        if let Some(bad) = elements.iter().position(|e| e.len() != grid.size()) {
            return Err(input(format!("element {bad} does not match the grid size")));
        }
        if elements.iter().flatten().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(input("custom measurement system has non-finite values"));
        }
        let len = elements.len();
        let sys = Self {
            grid,
            kind: MeasurementKind::Custom(elements),
            len,
        };
        let defect = sys.orthonormality_defect();
        if defect > tol {
            return Err(input(format!(
                "custom measurement system is not orthonormal (defect {defect:e})"
            )));
        }
        Ok(sys)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn kind(&self) -> &MeasurementKind {
        &self.kind
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n >= self.len {
            return Err(range(format!(
                "measurement index {n} outside the system range 0..{}",
                self.len
            )));
        }
        Ok(())
    }

    /// Grid values of `θ̂_n`.
    pub fn element(&self, n: usize) -> Result<Vec<Complex64>> {
        self.check_index(n)?;
        Ok(match &self.kind {
            MeasurementKind::Walsh => theta_hat_on_grid(&self.grid, n as u64)?
                .into_iter()
                .map(|v| Complex64::new(v, 0.0))
                .collect(),
            MeasurementKind::FourierExponentials => {
                let nu = fourier_frequency(n) as f64;
                self.grid.nodes().map(|w| Complex64::from_polar(1.0, nu * w)).collect()
            }
            MeasurementKind::Custom(table) => table[n].clone(),
        })
    }

    /// `‖θ̂_n‖_∞` over the grid.
    pub fn sup_norm(&self, n: usize) -> Result<f64> {
        Ok(self.element(n)?.iter().map(|v| v.norm()).fold(0.0, f64::max))
    }

    /// `max_n ‖θ̂_n‖_∞` over the finite family.
    pub fn uniform_bound(&self) -> Result<f64> {
        match self.kind {
            MeasurementKind::Walsh | MeasurementKind::FourierExponentials => Ok(1.0),
            MeasurementKind::Custom(_) => (0..self.len)
                .map(|n| self.sup_norm(n))
                .try_fold(0.0, |acc, s| s.map(|s| f64::max(acc, s))),
        }
    }

    /// `max_{j,k} |(1/2π) ∫ θ̂_j conj(θ̂_k) - δ_jk|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let elements: Vec<Vec<Complex64>> = (0..self.len)
            .map(|n| self.element(n).expect("index in range"))
            .collect();
        let m = self.grid.size() as f64;
        let mut worst: f64 = 0.0;
        for (j, a) in elements.iter().enumerate() {
            for (k, b) in elements.iter().enumerate().skip(j) {
                let ip: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum::<Complex64>() / m;
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).norm());
            }
        }
        worst
    }

    /// `c_n(f)` for every `n < len`.
    pub fn coefficients(&self, spec: &Spectrum) -> Result<Vec<Complex64>> {
        if spec.grid() != &self.grid {
            return Err(crate::error::Error::GridMismatch {
                left: self.grid.size(),
                right: spec.grid().size(),
            });
        }
        match self.kind {
            MeasurementKind::Walsh => {
                let mut c = walsh_coefficients(&self.grid, spec.values());
                c.truncate(self.len);
                Ok(c)
            }
            _ => (0..self.len).map(|n| measure_general(spec, self, n)).collect(),
        }
    }

    /// `Σ_{n ≤ last} coeffs[n] θ̂_n(ω_m)` at every node.
    pub fn synthesize(&self, coeffs: &[Complex64], last: usize) -> Result<Vec<Complex64>> {
        self.check_index(last)?;
        let used = &coeffs[..=last];
        match self.kind {
            MeasurementKind::Walsh => Ok(walsh_synthesis(&self.grid, used)),
            _ => {
                let mut out = vec![Complex64::new(0.0, 0.0); self.grid.size()];
                for (n, c) in used.iter().enumerate() {
                    for (o, e) in out.iter_mut().zip(self.element(n)?) {
                        *o += c * e;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// `c_n(f) = (1/2π) ∫ f̂(ω) conj(θ̂_n(ω)) dω`.
pub fn measure_general(spec: &Spectrum, system: &MeasurementSystem, n: usize) -> Result<Complex64> {
    let theta = system.element(n)?;
    if spec.grid() != system.grid() {
        return Err(crate::error::Error::GridMismatch {
            left: system.grid().size(),
            right: spec.grid().size(),
        });
    }
    let sum: Complex64 = spec
        .values()
        .iter()
        .zip(&theta)
        .map(|(f, th)| f * th.conj())
        .sum();
    Ok(sum / spec.grid().size() as f64)
}

/// Writes a measurement vector as CSV `n,re,im`.
pub fn write_measurements_csv<W: Write>(values: &[Complex64], mut out: W) -> Result<()> {
    let mut buf = String::from("n,re,im\n");
    for (n, v) in values.iter().enumerate() {
        let _ = writeln!(buf, "{n},{},{}", v.re, v.im);
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}
