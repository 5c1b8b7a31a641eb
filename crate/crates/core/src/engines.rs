//! Approximation processes for `(Tf)(t)`.
//!
//! Every engine is bound to a signal `f` and a system `T` at construction and
//! evaluates a list of stages at one time `t` in a single pass, sharing the
//! per-time work (shifted impulse responses, Walsh transforms) between stages.
//! Each result carries the direct frequency-domain value of `(Tf)(t)` as its
//! reference.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{config, input, range, Result};
use crate::measurements::{walsh_coefficients, MeasurementSystem};
use crate::sampling::{ReconstructionBasis, SampleTable};
use crate::spectral::{at_integer, inverse_transform_at, shifted_inverse_transform, Spectrum, TransferFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxResult {
    pub stage: usize,
    pub t: f64,
    pub value: Complex64,
    pub reference: Complex64,
    pub abs_error: f64,
}

impl ApproxResult {
    pub fn new(stage: usize, t: f64, value: Complex64, reference: Complex64) -> Self {
        Self {
            stage,
            t,
            value,
            reference,
            abs_error: (value - reference).norm(),
        }
    }
}

pub trait ApproxEngine: Sync {
    fn name(&self) -> &'static str;

    fn flags(&self) -> String {
        String::new()
    }

    /// Evaluates the listed stages at time `t`, in the given order.
    fn evaluate_stages(&self, stages: &[usize], t: f64) -> Result<Vec<ApproxResult>>;

    fn evaluate(&self, stage: usize, t: f64) -> Result<ApproxResult> {
        Ok(self.evaluate_stages(&[stage], t)?[0])
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(input(format!("evaluation time must be finite, got {t}")));
    }
    Ok(())
}

fn max_stage(stages: &[usize]) -> usize {
    stages.iter().copied().max().unwrap_or(0)
}

/// Output spectrum `f̂·ĥ_T`, whose inverse transform is the reference.
fn system_output(f: &Spectrum, system: &TransferFunction) -> Result<Spectrum> {
    system.apply(f)
}

/// `Σ_{k=-N}^{N} f(t_k) (Tφ_k)(t)`.
pub struct SamplingEngine {
    output: Spectrum,
    system: TransferFunction,
    equidistant: bool,
    max_stage: usize,
    samples: Vec<Complex64>,
    table: Option<SampleTable>,
}

impl SamplingEngine {
    /// Prepares stages up to `max_stage`; requires `max_stage ≤ K`.
    pub fn new(f: &Spectrum, system: &TransferFunction, basis: &ReconstructionBasis, max_stage: usize) -> Result<Self> {
        let seq = basis.sequence();
        if max_stage > seq.window() {
            return Err(range(format!(
                "stage {max_stage} exceeds the sequence window {}",
                seq.window()
            )));
        }
        let grid = f.grid();
        // φ_k(n) = 0 for integers |n| > K, so K samples give φ̂_k exactly
        let half_length = seq.window();
        if 2 * half_length >= grid.size() {
            return Err(config(format!(
                "sequence window {} is not resolved by a grid of {} nodes",
                half_length,
                grid.size()
            )));
        }
        let samples = (-(max_stage as i64)..=max_stage as i64)
            .map(|k| f.eval(seq.point(k)?))
            .collect::<Result<Vec<_>>>()?;
        let table = if seq.is_equidistant() {
            None
        } else {
            Some(basis.sample_table(max_stage, half_length)?)
        };
        Ok(Self {
            output: system_output(f, system)?,
            system: system.clone(),
            equidistant: seq.is_equidistant(),
            max_stage,
            samples,
            table,
        })
    }

    /// `(Tφ_k)(t)` for `|k| ≤ max_stage`.
    pub fn system_responses(&self, t: f64) -> Vec<Complex64> {
        responses_from_table(&self.system, self.table.as_ref(), self.max_stage, t)
    }

    pub fn is_equidistant(&self) -> bool {
        self.equidistant
    }
}

impl ApproxEngine for SamplingEngine {
    fn name(&self) -> &'static str {
        "sampling"
    }

    fn evaluate_stages(&self, stages: &[usize], t: f64) -> Result<Vec<ApproxResult>> {
        check_time(t)?;
        if max_stage(stages) > self.max_stage {
            return Err(range(format!(
                "stage {} exceeds the prepared maximum {}",
                max_stage(stages),
                self.max_stage
            )));
        }
        let responses = self.system_responses(t);
        let reference = self.output.eval(t)?;
        let center = self.max_stage;
        Ok(stages
            .iter()
            .map(|&n| {
                let value = (center - n..=center + n)
                    .map(|i| self.samples[i] * responses[i])
                    .sum();
                ApproxResult::new(n, t, value, reference)
            })
            .collect())
    }
}

/// `(Tφ_k)(t) = Σ_n φ_k(n) h_T(t - n)`; `table == None` means the lattice,
/// where `φ_k(n) = δ_kn`.
fn responses_from_table(
    system: &TransferFunction,
    table: Option<&SampleTable>,
    max_stage: usize,
    t: f64,
) -> Vec<Complex64> {
    let shifted = shifted_inverse_transform(system.grid(), system.values(), t);
    let n_max = max_stage as i64;
    match table {
        None => (-n_max..=n_max).map(|k| at_integer(&shifted, k)).collect(),
        Some(table) => {
            let half = table.half_length() as i64;
            (-n_max..=n_max)
                .map(|k| {
                    table
                        .row(k)
                        .iter()
                        .zip(-half..=half)
                        .filter(|(s, _)| **s != 0.0)
                        .map(|(s, n)| at_integer(&shifted, n) * *s)
                        .sum()
                })
                .collect()
        }
    }
}

/// `(Tφ_k)(t)` for `|k| ≤ max_stage`, for a one-off time `t`.
pub fn reconstruction_responses(
    system: &TransferFunction,
    basis: &ReconstructionBasis,
    max_stage: usize,
    t: f64,
) -> Result<Vec<Complex64>> {
    check_time(t)?;
    let seq = basis.sequence();
    if max_stage > seq.window() {
        return Err(range(format!(
            "stage {max_stage} exceeds the sequence window {}",
            seq.window()
        )));
    }
    if 2 * seq.window() >= system.grid().size() {
        return Err(config(format!(
            "sequence window {} is not resolved by a grid of {} nodes",
            seq.window(),
            system.grid().size()
        )));
    }
    let table = if seq.is_equidistant() {
        None
    } else {
        Some(basis.sample_table(max_stage, seq.window())?)
    };
    Ok(responses_from_table(system, table.as_ref(), max_stage, t))
}

/// `(1/a) Σ_{k=-N}^{N} f(k/a) h_T(t - k/a)`.
pub struct OversampledEngine {
    output: Spectrum,
    system: TransferFunction,
    factor: f64,
    max_stage: usize,
    samples: Vec<Complex64>,
}

impl OversampledEngine {
    pub fn new(f: &Spectrum, system: &TransferFunction, factor: f64, max_stage: usize) -> Result<Self> {
        if !(factor >= 1.0 && factor.is_finite()) {
            return Err(input(format!("oversampling factor must be at least 1, got {factor}")));
        }
        let samples = (-(max_stage as i64)..=max_stage as i64)
            .map(|k| f.eval(k as f64 / factor))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            output: system_output(f, system)?,
            system: system.clone(),
            factor,
            max_stage,
            samples,
        })
    }

    /// `h_T(t - k/a)` for `|k| ≤ max_stage`.
    fn impulse_samples(&self, t: f64) -> Vec<Complex64> {
        let grid = self.system.grid();
        let m = grid.size();
        let n_max = self.max_stage as i64;
        let a = self.factor;
        let integer_factor = a.fract() == 0.0 && a <= 64.0;
        let padded = (a as usize) * m;
        if integer_factor && 2 * self.max_stage < padded {
            // zero-padded DFT evaluates the shifts k/a in one transform
            let mut buf = vec![Complex64::new(0.0, 0.0); padded];
            for (j, h) in self.system.values().iter().enumerate() {
                let (s, c) = (grid.node(j) * t).sin_cos();
                buf[j] = h * Complex64::new(c, s);
            }
            FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
            (-n_max..=n_max)
                .map(|k| {
                    let phase = Complex64::from_polar(1.0 / m as f64, PI * k as f64 / a);
                    buf[k.rem_euclid(padded as i64) as usize] * phase
                })
                .collect()
        } else {
            (-n_max..=n_max)
                .map(|k| inverse_transform_at(grid, self.system.values(), t - k as f64 / a))
                .collect()
        }
    }
}

impl ApproxEngine for OversampledEngine {
    fn name(&self) -> &'static str {
        "oversampled"
    }

    fn flags(&self) -> String {
        format!("a={}", self.factor)
    }

    fn evaluate_stages(&self, stages: &[usize], t: f64) -> Result<Vec<ApproxResult>> {
        check_time(t)?;
        if max_stage(stages) > self.max_stage {
            return Err(range(format!(
                "stage {} exceeds the prepared maximum {}",
                max_stage(stages),
                self.max_stage
            )));
        }
        let h = self.impulse_samples(t);
        let reference = self.output.eval(t)?;
        let center = self.max_stage;
        Ok(stages
            .iter()
            .map(|&n| {
                let sum: Complex64 = (center - n..=center + n).map(|i| self.samples[i] * h[i]).sum();
                ApproxResult::new(n, t, sum / self.factor, reference)
            })
            .collect())
    }
}

/// `Σ_{n=0}^{N} c_n(f) (Tθ_n)(t)` for a general measurement system.
pub struct FunctionalEngine {
    output: Spectrum,
    system: TransferFunction,
    measurements: MeasurementSystem,
    coefficients: Vec<Complex64>,
}

impl FunctionalEngine {
    pub fn new(f: &Spectrum, system: &TransferFunction, measurements: &MeasurementSystem) -> Result<Self> {
        Ok(Self {
            output: system_output(f, system)?,
            system: system.clone(),
            coefficients: measurements.coefficients(f)?,
            measurements: measurements.clone(),
        })
    }
}

impl ApproxEngine for FunctionalEngine {
    fn name(&self) -> &'static str {
        "functional"
    }

    fn evaluate_stages(&self, stages: &[usize], t: f64) -> Result<Vec<ApproxResult>> {
        check_time(t)?;
        let grid = self.system.grid();
        let weighted: Vec<Complex64> = self
            .system
            .values()
            .iter()
            .enumerate()
            .map(|(m, h)| {
                let (s, c) = (grid.node(m) * t).sin_cos();
                h * Complex64::new(c, s)
            })
            .collect();
        let reference = self.output.eval(t)?;
        stages
            .iter()
            .map(|&n| {
                let g = self.measurements.synthesize(&self.coefficients, n)?;
                let sum: Complex64 = weighted.iter().zip(&g).map(|(w, g)| w * g).sum();
                Ok(ApproxResult::new(n, t, sum / grid.size() as f64, reference))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalshVariant {
    /// `Σ_{k≤U} c_k(f, 0) (Tθ_k)(t)`.
    A,
    /// `Σ_{k≤U} c_k(f, t) (Tθ_k)(0)`.
    B,
}

/// Dyadic Walsh processes; stage `N` sums `k = 0..=U` with `U = 2^N - 1`
/// (classical) or `U = 2^N` (inclusive limit).
pub struct WalshDyadicEngine {
    variant: WalshVariant,
    inclusive: bool,
    output: Spectrum,
    f: Spectrum,
    system: TransferFunction,
    /// `c_k(f, 0)` for variant A, `(Tθ_k)(0)` for variant B.
    fixed: Vec<Complex64>,
}

impl WalshDyadicEngine {
    pub fn new(variant: WalshVariant, f: &Spectrum, system: &TransferFunction, inclusive: bool) -> Result<Self> {
        let output = system_output(f, system)?;
        let grid = f.grid();
        let fixed = match variant {
            WalshVariant::A => walsh_coefficients(grid, f.values()),
            WalshVariant::B => walsh_coefficients(grid, system.values()),
        };
        Ok(Self {
            variant,
            inclusive,
            output,
            f: f.clone(),
            system: system.clone(),
            fixed,
        })
    }

    /// Last summation index `U` of stage `N`.
    pub fn upper_index(&self, stage: usize) -> Result<usize> {
        let base = 1usize
            .checked_shl(stage as u32)
            .filter(|_| stage < usize::BITS as usize)
            .ok_or_else(|| range(format!("dyadic stage {stage} overflows")))?;
        let upper = if self.inclusive { base } else { base - 1 };
        if upper >= self.f.grid().size() {
            return Err(range(format!(
                "dyadic stage {stage} needs Walsh index {upper}, beyond the {} resolved by the grid",
                self.f.grid().size() - 1
            )));
        }
        Ok(upper)
    }
}

impl ApproxEngine for WalshDyadicEngine {
    fn name(&self) -> &'static str {
        match self.variant {
            WalshVariant::A => "walsh_a",
            WalshVariant::B => "walsh_b",
        }
    }

    fn flags(&self) -> String {
        if self.inclusive {
            "limit=2^N".into()
        } else {
            "limit=2^N-1".into()
        }
    }

    fn evaluate_stages(&self, stages: &[usize], t: f64) -> Result<Vec<ApproxResult>> {
        check_time(t)?;
        let uppers = stages
            .iter()
            .map(|&s| self.upper_index(s))
            .collect::<Result<Vec<_>>>()?;
        let grid = self.f.grid();
        let source = match self.variant {
            WalshVariant::A => self.system.values(),
            WalshVariant::B => self.f.values(),
        };
        let modulated: Vec<Complex64> = source
            .iter()
            .enumerate()
            .map(|(m, v)| {
                let (s, c) = (grid.node(m) * t).sin_cos();
                v * Complex64::new(c, s)
            })
            .collect();
        let varying = walsh_coefficients(grid, &modulated);
        let reference = self.output.eval(t)?;
        Ok(stages
            .iter()
            .zip(uppers)
            .map(|(&stage, upper)| {
                let value = match self.variant {
                    WalshVariant::A => (0..=upper).map(|k| self.fixed[k] * varying[k]).sum(),
                    WalshVariant::B => (0..=upper).map(|k| varying[k] * self.fixed[k]).sum(),
                };
                ApproxResult::new(stage, t, value, reference)
            })
            .collect())
    }
}

/// Single evaluation of the sampling-based process.
pub fn sampling_system_approx(
    f: &Spectrum,
    system: &TransferFunction,
    basis: &ReconstructionBasis,
    stage: usize,
    t: f64,
) -> Result<ApproxResult> {
    SamplingEngine::new(f, system, basis, stage)?.evaluate(stage, t)
}

/// Single evaluation of the oversampled equidistant process.
pub fn shannon_oversampled(
    f: &Spectrum,
    system: &TransferFunction,
    factor: f64,
    stage: usize,
    t: f64,
) -> Result<ApproxResult> {
    OversampledEngine::new(f, system, factor, stage)?.evaluate(stage, t)
}

/// Single evaluation of the general measurement-functional process.
pub fn functional_system_approx(
    f: &Spectrum,
    system: &TransferFunction,
    measurements: &MeasurementSystem,
    stage: usize,
    t: f64,
) -> Result<ApproxResult> {
    FunctionalEngine::new(f, system, measurements)?.evaluate(stage, t)
}

pub fn walsh_dyadic_approx_a(
    f: &Spectrum,
    system: &TransferFunction,
    stage: usize,
    t: f64,
    inclusive: bool,
) -> Result<ApproxResult> {
    WalshDyadicEngine::new(WalshVariant::A, f, system, inclusive)?.evaluate(stage, t)
}

pub fn walsh_dyadic_approx_b(
    f: &Spectrum,
    system: &TransferFunction,
    stage: usize,
    t: f64,
    inclusive: bool,
) -> Result<ApproxResult> {
    WalshDyadicEngine::new(WalshVariant::B, f, system, inclusive)?.evaluate(stage, t)
}

/// `n` equispaced points on `[start, stop]`.
pub fn linear_time_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..points)
            .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// 257 points on `[-8, 8]`.
pub fn default_time_grid() -> Vec<f64> {
    linear_time_grid(-8.0, 8.0, 257)
}

/// Per-cell results of a sweep and the worst cell of every stage.
#[derive(Debug, Clone)]
pub struct ScanReport {
    pub engine: String,
    pub flags: String,
    /// Stage-major, times in grid order.
    pub cells: Vec<ApproxResult>,
    /// One entry per stage: the cell attaining the maximum error (first on ties).
    pub sup: Vec<ApproxResult>,
}

impl ScanReport {
    pub fn sup_errors(&self) -> Vec<f64> {
        self.sup.iter().map(|r| r.abs_error).collect()
    }
}

/// Maximum of `|value - reference|` over a finite time grid, per stage.
pub fn sup_error_scan(engine: &dyn ApproxEngine, stages: &[usize], t_grid: &[f64]) -> Result<ScanReport> {
    if stages.is_empty() {
        return Err(input("stage list is empty"));
    }
    if t_grid.is_empty() {
        return Err(input("time grid is empty"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0] || w[1].is_nan()) {
        return Err(input("time grid must be strictly increasing"));
    }
    let per_time: Vec<Vec<ApproxResult>> = t_grid
        .par_iter()
        .map(|&t| engine.evaluate_stages(stages, t))
        .collect::<Result<_>>()?;
    let mut cells = Vec::with_capacity(stages.len() * t_grid.len());
    let mut sup = Vec::with_capacity(stages.len());
    for (i, _) in stages.iter().enumerate() {
        let mut worst: Option<ApproxResult> = None;
        for column in &per_time {
            let cell = column[i];
            if worst.is_none_or(|w| cell.abs_error > w.abs_error) {
                worst = Some(cell);
            }
            cells.push(cell);
        }
        sup.push(worst.expect("non-empty time grid"));
    }
    Ok(ScanReport {
        engine: engine.name().to_string(),
        flags: engine.flags(),
        cells,
        sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::SamplingSequence;
    use crate::spectral::SpectralGrid;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(1024).unwrap()
    }

    #[test]
    fn single_term_sampling_stage() {
        let g = grid();
        let f = Spectrum::triangle(g, PI).unwrap();
        let h = TransferFunction::hilbert(g);
        let basis = ReconstructionBasis::covering(SamplingSequence::equidistant(4), 8.0).unwrap();
        let t = 0.3;
        let r = sampling_system_approx(&f, &h, &basis, 0, t).unwrap();
        // N = 0: f(0) (Tφ_0)(t), with φ̂_0 ≡ 1 so (Tφ_0)(t) = h_T(t)
        let expected = f.eval(0.0).unwrap() * h.impulse_response(t).unwrap();
        assert!((r.value - expected).norm() < 1e-14);
        assert!((r.reference - h.apply(&f).unwrap().eval(t).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn stage_beyond_window_is_rejected() {
        let g = grid();
        let f = Spectrum::constant(g);
        let basis = ReconstructionBasis::covering(SamplingSequence::equidistant(4), 8.0).unwrap();
        let id = TransferFunction::identity(g);
        assert!(matches!(
            sampling_system_approx(&f, &id, &basis, 5, 0.0),
            Err(crate::Error::Range(_))
        ));
    }

    #[test]
    fn oversampled_rejects_factor_below_one() {
        let g = grid();
        let f = Spectrum::constant(g);
        let id = TransferFunction::identity(g);
        assert!(shannon_oversampled(&f, &id, 0.5, 4, 0.0).is_err());
    }

    #[test]
    fn oversampled_fft_path_matches_direct() {
        let g = grid();
        let f = Spectrum::triangle(g, PI / 2.0).unwrap();
        let h = TransferFunction::hilbert(g);
        let fast = OversampledEngine::new(&f, &h, 2.0, 20).unwrap();
        let slow = OversampledEngine::new(&f, &h, 2.0 + 1e-12, 20).unwrap();
        let a = fast.evaluate(20, 0.41).unwrap();
        let b = slow.evaluate(20, 0.41).unwrap();
        assert!((a.value - b.value).norm() < 1e-9);
        let direct: Complex64 = (-20i64..=20)
            .map(|k| f.eval(k as f64 / 2.0).unwrap() * h.impulse_response(0.41 - k as f64 / 2.0).unwrap())
            .sum::<Complex64>()
            / 2.0;
        assert!((a.value - direct).norm() < 1e-13);
    }

    #[test]
    fn zero_signal_gives_zero() {
        let g = grid();
        let zero = Spectrum::zero(g, PI).unwrap();
        let h = TransferFunction::hilbert(g);
        for inclusive in [false, true] {
            assert_eq!(walsh_dyadic_approx_a(&zero, &h, 5, 1.3, inclusive).unwrap().value, Complex64::new(0.0, 0.0));
            assert_eq!(walsh_dyadic_approx_b(&zero, &h, 5, 1.3, inclusive).unwrap().value, Complex64::new(0.0, 0.0));
        }
        assert_eq!(shannon_oversampled(&zero, &h, 2.0, 8, 0.2).unwrap().value.norm(), 0.0);
        let sys = MeasurementSystem::walsh(g, 64).unwrap();
        assert_eq!(functional_system_approx(&zero, &h, &sys, 63, 0.2).unwrap().value.norm(), 0.0);
    }

    #[test]
    fn walsh_stage_zero_is_single_term() {
        let g = grid();
        let f = Spectrum::triangle(g, PI).unwrap();
        let h = TransferFunction::hilbert(g);
        let t = 0.7;
        let r = walsh_dyadic_approx_a(&f, &h, 0, t, false).unwrap();
        // θ̂_0 ≡ 1: c_0(f, 0) = f(0), (Tθ_0)(t) = h_T(t)
        let expected = f.eval(0.0).unwrap() * h.impulse_response(t).unwrap();
        assert!((r.value - expected).norm() < 1e-14);
    }

    #[test]
    fn walsh_stage_must_fit_grid() {
        let g = SpectralGrid::new(64).unwrap();
        let f = Spectrum::constant(g);
        let id = TransferFunction::identity(g);
        assert!(walsh_dyadic_approx_a(&f, &id, 6, 0.0, false).is_ok());
        assert!(walsh_dyadic_approx_a(&f, &id, 6, 0.0, true).is_err());
    }

    #[test]
    fn scan_validates_inputs() {
        let g = grid();
        let f = Spectrum::constant(g);
        let id = TransferFunction::identity(g);
        let e = WalshDyadicEngine::new(WalshVariant::A, &f, &id, false).unwrap();
        assert!(sup_error_scan(&e, &[], &[0.0]).is_err());
        assert!(sup_error_scan(&e, &[1], &[]).is_err());
        assert!(sup_error_scan(&e, &[1], &[1.0, 0.0]).is_err());
        let single = sup_error_scan(&e, &[3], &[0.25]).unwrap();
        assert_eq!(single.sup[0], e.evaluate(3, 0.25).unwrap());
    }

    #[test]
    fn default_time_grid_layout() {
        let t = default_time_grid();
        assert_eq!(t.len(), 257);
        assert_eq!(t[0], -8.0);
        assert_eq!(t[128], 0.0);
        assert_eq!(t[256], 8.0);
    }
}
