//! Kernel norms, extremal transfer functions and growth fits.
//!
//! The sampling kernel at probe frequency `ω` and stage `N` is
//! `K(ω₁) = Σ_{|k|≤N} e^{iωt_k} φ̂_k(ω₁)`. Its samples `Σ_k e^{iωt_k} φ_k(n)`
//! are finitely supported, so `K` is a trigonometric polynomial evaluated on
//! the grid by one FFT.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::engines::reconstruction_responses;
use crate::error::{input, range, Result};
use crate::measurements::{theta_hat, walsh_synthesis};
use crate::sampling::ReconstructionBasis;
use crate::spectral::{trig_poly_on_grid, SpectralGrid, TransferFunction};

/// Largest stage accepted by [`walsh_dyadic_kernel_l1`].
pub const MAX_DYADIC_STAGE: u32 = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelProbe {
    pub sequence: String,
    pub omega: f64,
    pub stage: usize,
    pub l1_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelProfileRow {
    pub stage: usize,
    pub value: f64,
    /// `max_{1≤M≤N}` of the value; equals `value` at stage 0.
    pub running_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthFit {
    pub stages: Vec<usize>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

fn check_probe(basis: &ReconstructionBasis, omega: f64, stage: usize) -> Result<()> {
    if !(-PI..=PI).contains(&omega) {
        return Err(input(format!("probe frequency must lie in [-π, π], got {omega}")));
    }
    let window = basis.sequence().window();
    if stage > window {
        return Err(range(format!("stage {stage} exceeds the sequence window {window}")));
    }
    Ok(())
}

/// Degree of the kernel polynomial: `N` on the lattice, `K` otherwise.
fn kernel_degree(basis: &ReconstructionBasis, stage: usize) -> usize {
    if basis.sequence().is_equidistant() {
        stage
    } else {
        basis.sequence().window()
    }
}

/// Phases `e^{iωt_k}` for `|k| ≤ stage`.
fn probe_phases(basis: &ReconstructionBasis, omega: f64, stage: usize) -> Result<Vec<Complex64>> {
    let seq = basis.sequence();
    (-(stage as i64)..=stage as i64)
        .map(|k| Ok(Complex64::from_polar(1.0, omega * seq.point(k)?)))
        .collect()
}

/// Kernel coefficients `a_n = Σ_{|k|≤N} e^{iωt_k} φ_k(n)`, `|n| ≤ degree`.
fn kernel_coefficients(basis: &ReconstructionBasis, omega: f64, stage: usize) -> Result<(Vec<Complex64>, usize)> {
    let half = kernel_degree(basis, stage);
    let phases = probe_phases(basis, omega, stage)?;
    let table = basis.sample_table(stage, half)?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * half + 1];
    for (k, phase) in (-(stage as i64)..=stage as i64).zip(&phases) {
        for (c, &s) in coeffs.iter_mut().zip(table.row(k)) {
            if s != 0.0 {
                *c += phase * s;
            }
        }
    }
    Ok((coeffs, half))
}

/// `K(ω_m)` at every grid node.
pub fn kernel_values(basis: &ReconstructionBasis, omega: f64, stage: usize, grid: &SpectralGrid) -> Result<Vec<Complex64>> {
    check_probe(basis, omega, stage)?;
    let (coeffs, half) = kernel_coefficients(basis, omega, stage)?;
    trig_poly_on_grid(grid, &coeffs, half)
}

fn grid_l1(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm()).sum::<f64>() / values.len() as f64
}

/// `(1/2π) Σ_m |K(ω_m)| Δω`.
pub fn kernel_l1(basis: &ReconstructionBasis, omega: f64, stage: usize, grid: &SpectralGrid) -> Result<f64> {
    Ok(grid_l1(&kernel_values(basis, omega, stage, grid)?))
}

pub fn kernel_probe(basis: &ReconstructionBasis, omega: f64, stage: usize, grid: &SpectralGrid) -> Result<KernelProbe> {
    Ok(KernelProbe {
        sequence: basis.sequence().rule().name().to_string(),
        omega,
        stage,
        l1_value: kernel_l1(basis, omega, stage, grid)?,
    })
}

/// Kernel norms for every stage `0..=n_max`, with the running maximum over
/// stages `1..=M`.
pub fn kernel_l1_profile(
    basis: &ReconstructionBasis,
    omega: f64,
    n_max: usize,
    grid: &SpectralGrid,
) -> Result<Vec<KernelProfileRow>> {
    check_probe(basis, omega, n_max)?;
    let half = kernel_degree(basis, n_max);
    let phases = probe_phases(basis, omega, n_max)?;
    let table = basis.sample_table(n_max, half)?;
    let center = n_max;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * half + 1];
    let add_row = |k: i64, coeffs: &mut [Complex64]| {
        let phase = phases[(k + center as i64) as usize];
        for (c, &s) in coeffs.iter_mut().zip(table.row(k)) {
            *c += phase * s;
        }
    };
    let mut rows = Vec::with_capacity(n_max + 1);
    let mut running_max = f64::NEG_INFINITY;
    for stage in 0..=n_max {
        let k = stage as i64;
        add_row(k, &mut coeffs);
        if k != 0 {
            add_row(-k, &mut coeffs);
        }
        let value = grid_l1(&trig_poly_on_grid(grid, &coeffs, half)?);
        running_max = if stage <= 1 { value } else { running_max.max(value) };
        rows.push(KernelProfileRow {
            stage,
            value,
            running_max,
        });
    }
    Ok(rows)
}

/// `D_N(x) = sin((N + 1/2)x) / sin(x/2)`.
fn dirichlet_kernel(stage: usize, x: f64) -> f64 {
    let s = (0.5 * x).sin();
    if s.abs() < 1e-12 {
        return (2 * stage + 1) as f64;
    }
    ((stage as f64 + 0.5) * x).sin() / s
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// `L_N = (1/2π) ∫ |D_N|`.
///
/// `[0, π]` is split into cells 8× finer than the grid, each cell is cut at
/// the zeros `2πj/(2N+1)` it contains, and every piece gets an 8-point
/// Gauss-Legendre rule. `|D_N|` is smooth on each piece.
pub fn dirichlet_lebesgue(stage: usize, grid: &SpectralGrid) -> f64 {
    if stage == 0 {
        return 1.0;
    }
    let rule = gauss_legendre(8);
    let cells = 4 * grid.size();
    let width = PI / cells as f64;
    let zero_step = 2.0 * PI / (2 * stage + 1) as f64;
    let piece = |a: f64, b: f64| -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        half * rule
            .iter()
            .map(|&(x, w)| w * dirichlet_kernel(stage, mid + half * x).abs())
            .sum::<f64>()
    };
    let mut total = 0.0;
    let mut j = 1usize;
    for c in 0..cells {
        let mut a = c as f64 * width;
        let b = (c + 1) as f64 * width;
        while j <= stage && j as f64 * zero_step < b {
            let z = j as f64 * zero_step;
            if z > a {
                total += piece(a, z);
                a = z;
            }
            j += 1;
        }
        total += piece(a, b);
    }
    total / PI
}

/// `(1/M) Σ_m |D_N(ω - ω_m)|`: the grid quadrature of `|D_N|` sampled at the
/// nodes shifted by `ω`.
pub fn dirichlet_grid_sum(stage: usize, omega: f64, grid: &SpectralGrid) -> f64 {
    grid.nodes()
        .map(|w| dirichlet_kernel(stage, omega - w).abs())
        .sum::<f64>()
        / grid.size() as f64
}

/// `(1/2π) ∫ |Σ_{k=0}^{U} θ̂_k(ω) θ̂_k(ω₁)| dω₁` with `U = 2^N - 1`, or `2^N`
/// when `inclusive`.
///
/// The kernel is constant on dyadic intervals of level `N + 1`, so the
/// midpoint sum over those intervals is exact. `ω = π` is identified with
/// `-π`, the periodic extension of the Walsh functions.
pub fn walsh_dyadic_kernel_l1(omega: f64, stage: u32, inclusive: bool) -> Result<f64> {
    if stage > MAX_DYADIC_STAGE {
        return Err(input(format!("dyadic stage {stage} exceeds {MAX_DYADIC_STAGE}")));
    }
    if !(-PI..=PI).contains(&omega) {
        return Err(input(format!("probe frequency must lie in [-π, π], got {omega}")));
    }
    let omega = if omega == PI { -PI } else { omega };
    let upper = (1u64 << stage) - u64::from(!inclusive);
    let grid = SpectralGrid::new(1 << (stage + 1))?;
    let coeffs = (0..=upper)
        .map(|k| Ok(Complex64::new(theta_hat(k, omega)? as f64, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(grid_l1(&walsh_synthesis(&grid, &coeffs)))
}

/// The unimodular `ĝ(ω₁) = exp(-i arg(e^{iω₁t} K(ω₁)))`; `ĝ = 1` where the
/// kernel vanishes.
pub fn adversarial_transfer(
    basis: &ReconstructionBasis,
    omega: f64,
    t: f64,
    stage: usize,
    grid: &SpectralGrid,
) -> Result<TransferFunction> {
    if !t.is_finite() {
        return Err(input(format!("evaluation time must be finite, got {t}")));
    }
    let kernel = kernel_values(basis, omega, stage, grid)?;
    let values = kernel
        .iter()
        .zip(grid.nodes())
        .map(|(k, w)| {
            let z = Complex64::from_polar(1.0, w * t) * k;
            if z == Complex64::new(0.0, 0.0) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, -z.arg())
            }
        })
        .collect();
    TransferFunction::new(*grid, values)
}

/// `|Σ_{|k|≤N} e^{iωt_k} (Tφ_k)(t)|`.
pub fn achieved_value(
    system: &TransferFunction,
    basis: &ReconstructionBasis,
    omega: f64,
    t: f64,
    stage: usize,
) -> Result<f64> {
    check_probe(basis, omega, stage)?;
    let responses = reconstruction_responses(system, basis, stage, t)?;
    let phases = probe_phases(basis, omega, stage)?;
    Ok(phases.iter().zip(&responses).map(|(p, r)| p * r).sum::<Complex64>().norm())
}

/// `max_{|ω₁|≤σ} |Σ_{|k|≤N} e^{iω₁t_k} (Tφ_k)(t)|` over grid nodes, with the
/// first maximizing node.
pub fn worst_case_signal_value(
    system: &TransferFunction,
    basis: &ReconstructionBasis,
    stage: usize,
    t: f64,
    sigma: f64,
) -> Result<(f64, f64)> {
    if !(sigma > 0.0 && sigma <= PI) {
        return Err(input(format!("band must lie in (0, π], got {sigma}")));
    }
    let responses = reconstruction_responses(system, basis, stage, t)?;
    let seq = basis.sequence();
    let points = (-(stage as i64)..=stage as i64)
        .map(|k| seq.point(k))
        .collect::<Result<Vec<_>>>()?;
    let grid = system.grid();
    let values: Vec<(f64, f64)> = (0..grid.size())
        .into_par_iter()
        .map(|m| grid.node(m))
        .filter(|w| w.abs() <= sigma)
        .map(|w| {
            let s: Complex64 = points
                .iter()
                .zip(&responses)
                .map(|(tk, r)| Complex64::from_polar(1.0, w * tk) * r)
                .sum();
            (s.norm(), w)
        })
        .collect();
    let mut best = (f64::NEG_INFINITY, 0.0);
    for v in values {
        if v.0 > best.0 {
            best = v;
        }
    }
    Ok(best)
}

/// Least-squares fit `value ≈ slope·ln N + intercept` over the points with
/// `ln N ≥ 1`.
pub fn growth_fit(stages: &[usize], values: &[f64]) -> Result<GrowthFit> {
    if stages.len() != values.len() {
        return Err(input(format!(
            "{} stages but {} values",
            stages.len(),
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(input(format!("growth fit needs positive values, got {v}")));
    }
    let points: Vec<(f64, f64)> = stages
        .iter()
        .zip(values)
        .map(|(&n, &v)| ((n as f64).ln(), v))
        .filter(|(x, _)| *x >= 1.0)
        .collect();
    if points.len() < 3 {
        return Err(input(format!(
            "growth fit needs at least 3 stages with ln N ≥ 1, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(input("growth fit needs at least two distinct stages"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (points
        .iter()
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(GrowthFit {
        stages: stages.to_vec(),
        values: values.to_vec(),
        slope,
        intercept,
        residual,
    })
}

pub fn write_probes_csv<W: Write>(probes: &[KernelProbe], mut out: W) -> Result<()> {
    writeln!(out, "sequence,omega,N,l1_value")?;
    for p in probes {
        writeln!(out, "{},{:?},{},{:?}", p.sequence, p.omega, p.stage, p.l1_value)?;
    }
    Ok(())
}

pub fn write_fit_csv<W: Write>(fit: &GrowthFit, mut out: W) -> Result<()> {
    writeln!(out, "slope,intercept,residual")?;
    writeln!(out, "{:?},{:?},{:?}", fit.slope, fit.intercept, fit.residual)?;
    Ok(())
}
