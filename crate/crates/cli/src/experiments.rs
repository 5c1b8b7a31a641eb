//! Experiment runners. Each returns the full CSV text of its report.

use std::f64::consts::PI;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use pwapprox_core::diagnostics::{
    adversarial_transfer, dirichlet_grid_sum, dirichlet_lebesgue, growth_fit, kernel_l1, worst_case_signal_value,
};
use pwapprox_core::engines::{
    sup_error_scan, ApproxEngine, ApproxResult, FunctionalEngine, OversampledEngine, SamplingEngine,
    WalshDyadicEngine, WalshVariant,
};
use pwapprox_core::measurements::MeasurementSystem;
use pwapprox_core::sampling::{riesz_bounds_estimate, ReconstructionBasis, SamplingSequence};
use pwapprox_core::spectral::{SpectralGrid, Spectrum, TransferFunction};

use crate::config::{EngineKind, Experiment, ExperimentConfig, MeasurementSpec, Rule, SignalSpec, SystemSpec};
use crate::report::{num, Report};

pub const FOUR_OVER_PI_SQUARED: f64 = 4.0 / (PI * PI);

pub fn run(experiment: Experiment, cfg: &ExperimentConfig) -> Result<String> {
    let report = match experiment {
        Experiment::Reconstruct => run_reconstruct(cfg)?,
        Experiment::WalshConverge => run_walsh_converge(cfg)?,
        Experiment::Divergence => run_divergence(cfg)?,
        Experiment::Lebesgue => run_lebesgue(cfg)?,
        Experiment::Riesz => run_riesz(cfg)?,
        Experiment::ExportKernel => return run_export_kernel(cfg),
    };
    Ok(report.render())
}

pub fn build_sequence(cfg: &ExperimentConfig) -> Result<SamplingSequence> {
    let spec = &cfg.sequence;
    Ok(match spec.rule {
        Rule::Equidistant => SamplingSequence::equidistant(spec.window),
        Rule::Kadec => SamplingSequence::kadec(spec.delta, spec.seed, spec.window).context("config key `sequence`")?,
    })
}

pub fn build_basis(cfg: &ExperimentConfig) -> Result<ReconstructionBasis> {
    let seq = build_sequence(cfg)?;
    let window = seq.window() as f64;
    ReconstructionBasis::covering(seq, window).context("config key `sequence`")
}

/// Smooth random spectrum on `[-σ, σ]`: a taper `(1 - (ω/σ)²)²` times a
/// random cosine series with eight terms.
pub fn random_spectrum(grid: SpectralGrid, band: f64, seed: u64) -> Result<Spectrum> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<Complex64> = (0..8)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    Ok(Spectrum::from_fn(grid, band, |w| {
        let x = w / band;
        let taper = (1.0 - x * x).powi(2);
        let series: Complex64 = coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * (j as f64 * PI * x / 2.0).cos())
            .sum();
        series * taper
    })?)
}

pub fn build_signal(cfg: &ExperimentConfig) -> Result<Spectrum> {
    let grid = cfg.spectral_grid()?;
    let spec = match &cfg.signal {
        SignalSpec::Constant => Spectrum::constant(grid),
        SignalSpec::Triangle { band } => Spectrum::triangle(grid, *band)?,
        SignalSpec::Random { seed, band } => random_spectrum(grid, *band, *seed)?,
        SignalSpec::Zero => Spectrum::zero(grid, PI)?,
    };
    Ok(spec)
}

pub fn build_system(cfg: &ExperimentConfig) -> Result<TransferFunction> {
    let grid = cfg.spectral_grid()?;
    Ok(match &cfg.system {
        SystemSpec::Identity => TransferFunction::identity(grid),
        SystemSpec::Hilbert => TransferFunction::hilbert(grid),
        SystemSpec::Lowpass { cutoff } => TransferFunction::lowpass(grid, *cutoff).context("config key `system.cutoff`")?,
        SystemSpec::Adversarial { omega, t, n } => {
            let basis = build_basis(cfg)?;
            adversarial_transfer(&basis, *omega, *t, *n, &grid).context("config key `system`")?
        }
    })
}

/// `(ω, t, N)` of the adversarial transfer: the `system` entry when it is
/// adversarial, otherwise the top-level `omega` and `t` at the largest stage.
fn adversarial_parameters(cfg: &ExperimentConfig) -> Result<(f64, f64, usize)> {
    match cfg.system {
        SystemSpec::Adversarial { omega, t, n } => Ok((omega, t, n)),
        _ => {
            let stages = cfg.require_stages()?;
            Ok((cfg.omega, cfg.t, stages.iter().copied().max().unwrap_or(0)))
        }
    }
}

const APPROX_COLUMNS: &[&str] = &[
    "row", "engine", "N", "t", "value_re", "value_im", "ref_re", "ref_im", "abs_error", "flags",
];

fn approx_row(kind: &str, engine: &dyn ApproxEngine, r: &ApproxResult) -> Vec<String> {
    vec![
        kind.to_string(),
        engine.name().to_string(),
        r.stage.to_string(),
        num(r.t),
        num(r.value.re),
        num(r.value.im),
        num(r.reference.re),
        num(r.reference.im),
        num(r.abs_error),
        engine.flags(),
    ]
}

fn scan_into(report: &mut Report, engine: &dyn ApproxEngine, cfg: &ExperimentConfig) -> Result<()> {
    let scan = sup_error_scan(engine, &cfg.stages, &cfg.t_grid.times())?;
    for r in &scan.sup {
        report.push(approx_row("sup", engine, r));
    }
    if cfg.cells {
        for r in &scan.cells {
            report.push(approx_row("cell", engine, r));
        }
    }
    Ok(())
}

pub fn run_reconstruct(cfg: &ExperimentConfig) -> Result<Report> {
    let stages = cfg.require_stages()?;
    let max_stage = stages.iter().copied().max().unwrap_or(0);
    let f = build_signal(cfg)?;
    let system = build_system(cfg)?;
    let engine: Box<dyn ApproxEngine> = match cfg.engine {
        EngineKind::Sampling => {
            let basis = build_basis(cfg)?;
            if max_stage > basis.sequence().window() {
                bail!(
                    "config key `stages`: stage {max_stage} exceeds sequence.window {}",
                    basis.sequence().window()
                );
            }
            Box::new(SamplingEngine::new(&f, &system, &basis, max_stage)?)
        }
        EngineKind::Oversampled => Box::new(OversampledEngine::new(&f, &system, cfg.oversampling, max_stage)?),
        EngineKind::Functional => {
            let grid = cfg.spectral_grid()?;
            let len = max_stage + 1;
            let measurements = match cfg.measurement {
                MeasurementSpec::Walsh => MeasurementSystem::walsh(grid, len),
                MeasurementSpec::FourierExponentials => MeasurementSystem::fourier_exponentials(grid, len),
            }
            .context("config key `measurement`")?;
            Box::new(FunctionalEngine::new(&f, &system, &measurements)?)
        }
        EngineKind::WalshA => Box::new(WalshDyadicEngine::new(WalshVariant::A, &f, &system, cfg.inclusive_limit)?),
        EngineKind::WalshB => Box::new(WalshDyadicEngine::new(WalshVariant::B, &f, &system, cfg.inclusive_limit)?),
    };
    let mut report = Report::new(Experiment::Reconstruct, cfg, APPROX_COLUMNS);
    scan_into(&mut report, engine.as_ref(), cfg)?;
    Ok(report)
}

/// Engines A and B with the classical limit, plus the inclusive limit when
/// requested.
pub fn run_walsh_converge(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.require_stages()?;
    let f = build_signal(cfg)?;
    let system = build_system(cfg)?;
    let limits: &[bool] = if cfg.inclusive_limit { &[false, true] } else { &[false] };
    let mut report = Report::new(Experiment::WalshConverge, cfg, APPROX_COLUMNS);
    for &inclusive in limits {
        for variant in [WalshVariant::A, WalshVariant::B] {
            let engine = WalshDyadicEngine::new(variant, &f, &system, inclusive)?;
            for &stage in &cfg.stages {
                engine.upper_index(stage).context("config key `stages`")?;
            }
            scan_into(&mut report, &engine, cfg)?;
        }
    }
    Ok(report)
}

pub const DIVERGENCE_COLUMNS: &[&str] = &[
    "row",
    "N",
    "worst_case",
    "argmax_omega",
    "kernel_l1",
    "dirichlet_grid",
    "dirichlet_lebesgue",
    "slope",
    "intercept",
    "residual",
    "note",
];

/// Worst-case values of the adversarial system and kernel norms per stage,
/// followed by log-growth fits of both columns.
///
/// `dirichlet_grid` is the grid quadrature of the shifted Dirichlet kernel,
/// which the equidistant kernel column reproduces to rounding;
/// `dirichlet_lebesgue` is the refined quadrature of the same integral.
pub fn run_divergence(cfg: &ExperimentConfig) -> Result<Report> {
    let stages = cfg.require_stages()?.to_vec();
    let grid = cfg.spectral_grid()?;
    let basis = build_basis(cfg)?;
    let window = basis.sequence().window();
    if let Some(&n) = stages.iter().find(|&&n| n > window) {
        bail!("config key `stages`: stage {n} exceeds sequence.window {window}");
    }
    let (omega, t, n_build) = adversarial_parameters(cfg)?;
    let system = adversarial_transfer(&basis, omega, t, n_build, &grid).context("config key `system`")?;
    let equidistant = basis.sequence().is_equidistant();
    let exploratory = cfg.exploratory || !equidistant;
    let note = if exploratory { "exploratory" } else { "" };

    let rows: Vec<(f64, f64, f64)> = stages
        .par_iter()
        .map(|&n| {
            let (worst, argmax) = worst_case_signal_value(&system, &basis, n, t, cfg.sigma)?;
            let l1 = kernel_l1(&basis, omega, n, &grid)?;
            Ok((worst, argmax, l1))
        })
        .collect::<pwapprox_core::Result<_>>()?;

    let mut report = Report::new(Experiment::Divergence, cfg, DIVERGENCE_COLUMNS);
    for (&n, &(worst, argmax, l1)) in stages.iter().zip(&rows) {
        let (grid_sum, lebesgue) = if equidistant {
            (num(dirichlet_grid_sum(n, omega, &grid)), num(dirichlet_lebesgue(n, &grid)))
        } else {
            (String::new(), String::new())
        };
        report.push(vec![
            "stage".into(),
            n.to_string(),
            num(worst),
            num(argmax),
            num(l1),
            grid_sum,
            lebesgue,
            String::new(),
            String::new(),
            String::new(),
            note.into(),
        ]);
    }
    let columns: [(&str, Vec<f64>); 2] = [
        ("fit_worst_case", rows.iter().map(|r| r.0).collect()),
        ("fit_kernel_l1", rows.iter().map(|r| r.2).collect()),
    ];
    for (label, values) in columns {
        match growth_fit(&stages, &values) {
            Ok(fit) => report.push(vec![
                label.into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                num(fit.slope),
                num(fit.intercept),
                num(fit.residual),
                note.into(),
            ]),
            Err(e) => {
                let mut row = vec![String::new(); DIVERGENCE_COLUMNS.len()];
                row[0] = "warning".into();
                row[10] = format!("{label} omitted: {e}");
                report.push(row);
            }
        }
    }
    Ok(report)
}

pub fn run_lebesgue(cfg: &ExperimentConfig) -> Result<Report> {
    let stages = cfg.require_stages()?;
    let grid = cfg.spectral_grid()?;
    let values: Vec<f64> = stages.par_iter().map(|&n| dirichlet_lebesgue(n, &grid)).collect();
    let mut report = Report::new(
        Experiment::Lebesgue,
        cfg,
        &["N", "value", "ratio_to_ln_n", "ratio_over_4_div_pi2"],
    );
    for (&n, &v) in stages.iter().zip(&values) {
        let (ratio, relative) = if n >= 2 {
            let r = v / (n as f64).ln();
            (num(r), num(r / FOUR_OVER_PI_SQUARED))
        } else {
            (String::new(), String::new())
        };
        report.push(vec![n.to_string(), num(v), ratio, relative]);
    }
    Ok(report)
}

pub fn run_riesz(cfg: &ExperimentConfig) -> Result<Report> {
    let grid = cfg.spectral_grid()?;
    let basis = build_basis(cfg)?;
    let window = basis.sequence().window();
    if cfg.n_max > window {
        bail!("config key `n_max`: {} exceeds sequence.window {window}", cfg.n_max);
    }
    let bounds = riesz_bounds_estimate(&basis, cfg.n_max, &grid, window).context("config key `n_max`")?;
    let mut report = Report::new(Experiment::Riesz, cfg, &["kind", "j", "k", "re", "im"]);
    let scalar = |kind: &str, v: f64| vec![kind.into(), String::new(), String::new(), num(v), num(0.0)];
    report.push(scalar("lower", bounds.lower));
    report.push(scalar("upper", bounds.upper));
    report.push(scalar("hermitian_defect", bounds.hermitian_defect));
    for (i, e) in bounds.eigenvalues.iter().enumerate() {
        report.push(vec!["eigenvalue".into(), i.to_string(), String::new(), num(*e), num(0.0)]);
    }
    if cfg.gram {
        let n = cfg.n_max as i64;
        for j in -n..=n {
            for k in -n..=n {
                let g = bounds.gram_entry(j, k);
                report.push(vec!["gram".into(), j.to_string(), k.to_string(), num(g.re), num(g.im)]);
            }
        }
    }
    Ok(report)
}

/// The adversarial transfer function in `omega,re,im` form, readable by
/// `TransferFunction::read_csv`.
pub fn run_export_kernel(cfg: &ExperimentConfig) -> Result<String> {
    let grid = cfg.spectral_grid()?;
    let basis = build_basis(cfg)?;
    let (omega, t, n) = adversarial_parameters(cfg)?;
    let system = adversarial_transfer(&basis, omega, t, n, &grid).context("config key `system`")?;
    let mut out = Report::header(Experiment::ExportKernel, cfg).into_bytes();
    system.write_csv(&mut out)?;
    Ok(String::from_utf8(out).expect("CSV is UTF-8"))
}
