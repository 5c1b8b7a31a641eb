//! Frequency-domain representation of Paley-Wiener signals and stable LTI systems.
//!
//! Every object lives on a [`SpectralGrid`]: `M` equispaced nodes
//! `ω_m = -π + 2πm/M` covering `[-π, π)`. Integrals over `[-π, π]` are
//! evaluated with the left-endpoint rule on this periodic grid, which is exact
//! for trigonometric polynomials of degree below `M/2`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{config, input, Error, Result};

/// Uniform periodic discretization of `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectralGrid {
    size: usize,
}

impl SpectralGrid {
    pub const DEFAULT_SIZE: usize = 4096;

    pub fn new(size: usize) -> Result<Self> {
        if size < 2 || !size.is_power_of_two() {
            return Err(config(format!(
                "grid size must be a power of two >= 2, got {size}"
            )));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Dyadic level `L` with `M = 2^L`.
    pub fn level(&self) -> u32 {
        self.size.trailing_zeros()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.size as f64
    }

    pub fn node(&self, m: usize) -> f64 {
        -PI + self.spacing() * m as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.size).map(move |m| self.node(m))
    }

    fn check_same(&self, other: &SpectralGrid) -> Result<()> {
        if self.size != other.size {
            return Err(Error::GridMismatch {
                left: self.size,
                right: other.size,
            });
        }
        Ok(())
    }
}

impl Default for SpectralGrid {
    fn default() -> Self {
        Self {
            size: Self::DEFAULT_SIZE,
        }
    }
}

/// `(1/2π) Σ_m values[m] e^{iω_m t} Δω`, accumulated in node order.
pub fn inverse_transform_at(grid: &SpectralGrid, values: &[Complex64], t: f64) -> Complex64 {
    debug_assert_eq!(values.len(), grid.size());
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, v) in values.iter().enumerate() {
        let (s, c) = (grid.node(m) * t).sin_cos();
        acc += v * Complex64::new(c, s);
    }
    acc / grid.size() as f64
}

/// Inverse transform sampled at all integers `n` with `|n| < M/2`.
///
/// The returned vector is indexed by `n mod M`.
pub fn inverse_transform_at_integers(grid: &SpectralGrid, values: &[Complex64]) -> Vec<Complex64> {
    let m = grid.size();
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    buf.iter_mut()
        .enumerate()
        .for_each(|(n, v)| *v *= if n % 2 == 0 { scale } else { -scale });
    buf
}

/// `h(t - n)` for all integers `|n| < M/2`, where `h` is the inverse transform
/// of `values`; indexed by `n mod M`.
pub fn shifted_inverse_transform(
    grid: &SpectralGrid,
    values: &[Complex64],
    t: f64,
) -> Vec<Complex64> {
    let m = grid.size();
    let mut buf: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let (s, c) = (grid.node(j) * t).sin_cos();
            v * Complex64::new(c, s)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    buf.iter_mut()
        .enumerate()
        .for_each(|(n, v)| *v *= if n % 2 == 0 { scale } else { -scale });
    buf
}

/// Evaluates the trigonometric polynomial `Σ_n c_n e^{-inω}` at every grid node.
///
/// `coeffs[i]` is the coefficient of `n = i - half`, so the polynomial has
/// degree `half`; requires `2·half < M`.
pub fn trig_poly_on_grid(grid: &SpectralGrid, coeffs: &[Complex64], half: usize) -> Result<Vec<Complex64>> {
    let m = grid.size();
    if coeffs.len() != 2 * half + 1 {
        return Err(input(format!(
            "expected {} coefficients for degree {half}, got {}",
            2 * half + 1,
            coeffs.len()
        )));
    }
    if 2 * half >= m {
        return Err(config(format!(
            "degree {half} is not resolved by a grid of {m} nodes"
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (i, c) in coeffs.iter().enumerate() {
        let n = i as i64 - half as i64;
        let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        buf[n.rem_euclid(m as i64) as usize] = c * sign;
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    Ok(buf)
}

/// Reads the entry for integer `n` out of a vector indexed by `n mod M`.
pub fn at_integer(values: &[Complex64], n: i64) -> Complex64 {
    values[n.rem_euclid(values.len() as i64) as usize]
}

fn check_finite(values: &[Complex64]) -> Result<()> {
    if let Some(m) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(input(format!("non-finite spectral value at node {m}")));
    }
    Ok(())
}

/// Fourier transform `f̂` of a band-limited signal, sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: SpectralGrid,
    values: Vec<Complex64>,
    band: f64,
}

impl Spectrum {
    pub fn new(grid: SpectralGrid, values: Vec<Complex64>, band: f64) -> Result<Self> {
        if !(band > 0.0 && band <= PI) {
            return Err(input(format!("band must lie in (0, π], got {band}")));
        }
        if values.len() != grid.size() {
            return Err(input(format!(
                "{} spectral values for a grid of {} nodes",
                values.len(),
                grid.size()
            )));
        }
        check_finite(&values)?;
        for (m, v) in values.iter().enumerate() {
            if grid.node(m).abs() > band && *v != Complex64::new(0.0, 0.0) {
                return Err(input(format!(
                    "spectrum is nonzero at ω = {} outside the band {band}",
                    grid.node(m)
                )));
            }
        }
        Ok(Self { grid, values, band })
    }

    /// Samples `f` at in-band nodes and sets the remaining nodes to zero.
    pub fn from_fn(grid: SpectralGrid, band: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid
            .nodes()
            .map(|w| {
                if w.abs() <= band {
                    f(w)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self::new(grid, values, band)
    }

    pub fn zero(grid: SpectralGrid, band: f64) -> Result<Self> {
        Self::from_fn(grid, band, |_| Complex64::new(0.0, 0.0))
    }

    /// `f̂ ≡ 1` on `[-π, π]`.
    pub fn constant(grid: SpectralGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(1.0, 0.0); grid.size()],
            band: PI,
        }
    }

    /// `f̂(ω) = max(0, 1 - |ω|/σ)`.
    pub fn triangle(grid: SpectralGrid, band: f64) -> Result<Self> {
        Self::from_fn(grid, band, |w| Complex64::new((1.0 - w.abs() / band).max(0.0), 0.0))
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn band(&self) -> f64 {
        self.band
    }

    /// `f(t) = (1/2π) ∫ f̂(ω) e^{iωt} dω` on the grid.
    pub fn eval(&self, t: f64) -> Result<Complex64> {
        if !t.is_finite() {
            return Err(input(format!("evaluation time must be finite, got {t}")));
        }
        Ok(inverse_transform_at(&self.grid, &self.values, t))
    }

    /// `‖f‖_{PW¹} = (1/2π) ∫ |f̂|`.
    pub fn pw1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() / self.grid.size() as f64
    }

    /// `‖f‖_{PW²} = ((1/2π) ∫ |f̂|²)^{1/2}`.
    pub fn pw2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.grid.size() as f64).sqrt()
    }

    /// `α·self + β·other`; the band is the larger of the two.
    pub fn combine(&self, alpha: Complex64, other: &Spectrum, beta: Complex64) -> Result<Spectrum> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(Spectrum {
            grid: self.grid,
            values,
            band: self.band.max(other.band),
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_spectral_csv(&self.grid, &self.values, out)
    }

    pub fn read_csv<R: BufRead>(input: R, band: f64) -> Result<Self> {
        let (grid, values) = read_spectral_csv(input)?;
        Self::new(grid, values, band)
    }
}

/// Transfer function `ĥ_T` of a stable LTI system.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    grid: SpectralGrid,
    values: Vec<Complex64>,
    sup_norm: f64,
}

impl TransferFunction {
    pub fn new(grid: SpectralGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(input(format!(
                "{} transfer values for a grid of {} nodes",
                values.len(),
                grid.size()
            )));
        }
        check_finite(&values)?;
        let sup_norm = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(Self {
            grid,
            values,
            sup_norm,
        })
    }

    pub fn identity(grid: SpectralGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(1.0, 0.0); grid.size()],
            sup_norm: 1.0,
        }
    }

    /// `ĥ(ω) = -i·sign(ω)`, with `sign(0) = 0`.
    pub fn hilbert(grid: SpectralGrid) -> Self {
        let values = grid
            .nodes()
            .map(|w| {
                if w > 0.0 {
                    Complex64::new(0.0, -1.0)
                } else if w < 0.0 {
                    Complex64::new(0.0, 1.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self {
            grid,
            values,
            sup_norm: 1.0,
        }
    }

    /// Ideal low-pass: indicator of `[-cutoff, cutoff]`.
    pub fn lowpass(grid: SpectralGrid, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0 && cutoff <= PI) {
            return Err(input(format!("low-pass cutoff must lie in (0, π], got {cutoff}")));
        }
        let values = grid
            .nodes()
            .map(|w| Complex64::new(if w.abs() <= cutoff { 1.0 } else { 0.0 }, 0.0))
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Maximum modulus over the grid nodes (the operator norm `‖T‖`).
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `(Tf)^ = f̂·ĥ_T`; the output keeps the input band.
    pub fn apply(&self, spec: &Spectrum) -> Result<Spectrum> {
        self.grid.check_same(&spec.grid)?;
        let values = spec
            .values
            .iter()
            .zip(&self.values)
            .map(|(f, h)| f * h)
            .collect();
        Ok(Spectrum {
            grid: self.grid,
            values,
            band: spec.band,
        })
    }

    /// Impulse response `h_T(τ)`.
    pub fn impulse_response(&self, tau: f64) -> Result<Complex64> {
        if !tau.is_finite() {
            return Err(input(format!("evaluation time must be finite, got {tau}")));
        }
        Ok(inverse_transform_at(&self.grid, &self.values, tau))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_spectral_csv(&self.grid, &self.values, out)
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let (grid, values) = read_spectral_csv(input)?;
        Self::new(grid, values)
    }
}

/// Free-function form of [`Spectrum::eval`].
pub fn eval_signal(spec: &Spectrum, t: f64) -> Result<Complex64> {
    spec.eval(t)
}

/// Free-function form of [`TransferFunction::apply`].
pub fn apply_system(system: &TransferFunction, spec: &Spectrum) -> Result<Spectrum> {
    system.apply(spec)
}

fn write_spectral_csv<W: Write>(grid: &SpectralGrid, values: &[Complex64], mut out: W) -> Result<()> {
    let mut buf = String::with_capacity(48 * values.len());
    buf.push_str("omega,re,im\n");
    for (m, v) in values.iter().enumerate() {
        let _ = writeln!(buf, "{},{},{}", grid.node(m), v.re, v.im);
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

fn read_spectral_csv<R: BufRead>(input: R) -> Result<(SpectralGrid, Vec<Complex64>)> {
    let mut values = Vec::new();
    let mut saw_header = false;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != "omega,re,im" {
                return Err(Error::Csv {
                    line: i + 1,
                    message: format!("expected header `omega,re,im`, found `{line}`"),
                });
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Csv {
                line: i + 1,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::Csv {
                line: i + 1,
                message: format!("`{s}`: {e}"),
            })
        };
        let _omega = parse(fields[0])?;
        values.push(Complex64::new(parse(fields[1])?, parse(fields[2])?));
    }
    if !saw_header {
        return Err(Error::Csv {
            line: 0,
            message: "missing header row".into(),
        });
    }
    let grid = SpectralGrid::new(values.len())?;
    Ok((grid, values))
}
