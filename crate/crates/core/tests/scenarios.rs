use std::f64::consts::PI;

use pwapprox_core::engines::{
    default_time_grid, sup_error_scan, ApproxEngine, FunctionalEngine, OversampledEngine, SamplingEngine,
    WalshDyadicEngine, WalshVariant,
};
use pwapprox_core::measurements::MeasurementSystem;
use pwapprox_core::sampling::{riesz_bounds_estimate, ReconstructionBasis, SamplingSequence};
use pwapprox_core::spectral::{eval_signal, SpectralGrid, Spectrum, TransferFunction};
use pwapprox_core::{Complex64, Error};

fn grid(m: usize) -> SpectralGrid {
    SpectralGrid::new(m).unwrap()
}

/// Smooth band-π spectrum with nonzero phase.
fn bump(g: SpectralGrid) -> Spectrum {
    Spectrum::from_fn(g, PI, |w| {
        let x = w / PI;
        Complex64::new((1.0 - x * x).powi(3), 0.3 * x * (1.0 - x * x).powi(3))
    })
    .unwrap()
}

#[test]
fn parseval_on_full_band() {
    let g = grid(512);
    let f = bump(g);
    let half = g.size() as i64 / 2;
    let samples: f64 = (-half..half).map(|n| eval_signal(&f, n as f64).unwrap().norm_sqr()).sum();
    assert!((f.pw2_norm().powi(2) - samples).abs() < 1e-12 * samples);
}

#[test]
fn grid_refinement_is_consistent() {
    let coarse = bump(grid(2048));
    let fine = bump(grid(4096));
    for t in [0.0, 0.3, 2.7, -7.9] {
        let a = eval_signal(&coarse, t).unwrap();
        let b = eval_signal(&fine, t).unwrap();
        assert!((a - b).norm() < 1e-9, "t={t}: {a} vs {b}");
    }
}

#[test]
fn triangle_value_at_origin() {
    let f = Spectrum::triangle(grid(4096), PI).unwrap();
    assert!((eval_signal(&f, 0.0).unwrap().re - 0.5).abs() < 1e-12);
}

#[test]
fn kadec_reconstruction_interpolates() {
    let seq = SamplingSequence::kadec(0.1, 11, 32).unwrap();
    let basis = ReconstructionBasis::covering(seq.clone(), 32.0).unwrap();
    for k in -16i64..=16 {
        for l in -16i64..=16 {
            let v = basis.phi_k(k, seq.point(l).unwrap()).unwrap();
            let expected = if k == l { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-6, "φ_{k}(t_{l}) = {v}");
        }
    }
}

#[test]
fn riesz_bounds_shrink_with_perturbation() {
    let g = grid(4096);
    let bounds = |delta: f64| {
        let seq = SamplingSequence::kadec(delta, 5, 32).unwrap();
        let basis = ReconstructionBasis::covering(seq, 32.0).unwrap();
        riesz_bounds_estimate(&basis, 16, &g, 32).unwrap()
    };
    let mild = bounds(0.1);
    let strong = bounds(0.24);
    assert!(mild.lower >= 0.1);
    assert!(strong.lower < mild.lower);
    assert!(mild.hermitian_defect < 1e-12);

    let equi = ReconstructionBasis::covering(SamplingSequence::equidistant(16), 16.0).unwrap();
    let unit = riesz_bounds_estimate(&equi, 16, &g, 16).unwrap();
    assert!((unit.lower - 1.0).abs() < 1e-8 && (unit.upper - 1.0).abs() < 1e-8);
}

#[test]
fn riesz_needs_a_section() {
    let equi = ReconstructionBasis::covering(SamplingSequence::equidistant(4), 4.0).unwrap();
    assert!(matches!(riesz_bounds_estimate(&equi, 0, &grid(256), 4), Err(Error::Input(_))));
}

#[test]
fn functional_walsh_matches_dyadic_engine() {
    let g = grid(4096);
    let f = Spectrum::triangle(g, PI).unwrap();
    let t_sys = TransferFunction::identity(g);
    let stage = 8;
    let upper = (1 << stage) - 1;
    let walsh = MeasurementSystem::walsh(g, upper + 1).unwrap();
    let functional = FunctionalEngine::new(&f, &t_sys, &walsh).unwrap();
    let dyadic = WalshDyadicEngine::new(WalshVariant::A, &f, &t_sys, false).unwrap();
    for t in [-3.0, 0.0, 0.4, 5.5] {
        let a = functional.evaluate(upper, t).unwrap();
        let b = dyadic.evaluate(stage, t).unwrap();
        assert!((a.value - b.value).norm() < 1e-12, "t={t}");
        assert!((a.abs_error - b.abs_error).abs() < 1e-12);
    }
}

/// Engine A with `U = 2^N - 1` pairs `f̂` with the average of `ĥ e^{iωt}` over
/// each dyadic interval of level `N`.
#[test]
fn dyadic_engine_is_a_projection() {
    let g = grid(1024);
    let f = bump(g);
    let sys = TransferFunction::hilbert(g);
    let engine = WalshDyadicEngine::new(WalshVariant::A, &f, &sys, false).unwrap();
    for stage in [0usize, 3, 6] {
        for t in [0.0, 1.3] {
            let modulated: Vec<Complex64> = sys
                .values()
                .iter()
                .zip(g.nodes())
                .map(|(h, w)| h * Complex64::from_polar(1.0, w * t))
                .collect();
            let block = g.size() >> stage;
            let projected: Vec<Complex64> = modulated
                .chunks(block)
                .flat_map(|c| {
                    let mean = c.iter().sum::<Complex64>() / block as f64;
                    std::iter::repeat_n(mean, block)
                })
                .collect();
            let oracle: Complex64 =
                f.values().iter().zip(&projected).map(|(a, b)| a * b).sum::<Complex64>() / g.size() as f64;
            let value = engine.evaluate(stage, t).unwrap().value;
            assert!((value - oracle).norm() < 1e-13, "N={stage} t={t}");
        }
    }
}

#[test]
fn dyadic_engines_coincide_at_origin() {
    let g = grid(2048);
    let f = Spectrum::triangle(g, PI).unwrap();
    let sys = TransferFunction::hilbert(g);
    for inclusive in [false, true] {
        let a = WalshDyadicEngine::new(WalshVariant::A, &f, &sys, inclusive).unwrap();
        let b = WalshDyadicEngine::new(WalshVariant::B, &f, &sys, inclusive).unwrap();
        for stage in 0..9 {
            let (x, y) = (a.evaluate(stage, 0.0).unwrap(), b.evaluate(stage, 0.0).unwrap());
            assert!((x.value - y.value).norm() < 1e-15);
        }
    }
}

#[test]
fn equidistant_identity_error_decreases() {
    let g = grid(4096);
    let f = Spectrum::triangle(g, 0.8 * PI).unwrap();
    let sys = TransferFunction::identity(g);
    let basis = ReconstructionBasis::covering(SamplingSequence::equidistant(128), 128.0).unwrap();
    let engine = SamplingEngine::new(&f, &sys, &basis, 128).unwrap();
    let stages = [8, 16, 32, 64, 128];
    let errors: Vec<f64> = stages.iter().map(|&n| engine.evaluate(n, 0.3).unwrap().abs_error).collect();
    // decreasing until the grid quadrature floor near 1e-8
    assert!(errors.windows(2).all(|w| w[1] < w[0] || w[1] < 1e-8), "{errors:?}");
    assert!(errors[3] < 1e-2);
    let sup = sup_error_scan(&engine, &stages, &default_time_grid()).unwrap().sup_errors();
    assert!(sup[1..].iter().all(|&e| e < sup[0]), "{sup:?}");
    assert!(sup[4] < 1e-7, "{sup:?}");
}

#[test]
fn unit_oversampling_matches_lattice_sampling() {
    let g = grid(2048);
    let f = bump(g);
    let sys = TransferFunction::lowpass(g, 2.0).unwrap();
    let basis = ReconstructionBasis::covering(SamplingSequence::equidistant(32), 32.0).unwrap();
    let sampling = SamplingEngine::new(&f, &sys, &basis, 32).unwrap();
    let shannon = OversampledEngine::new(&f, &sys, 1.0, 32).unwrap();
    for t in [0.0, 0.45, -3.2] {
        let a = sampling.evaluate(32, t).unwrap().value;
        let b = shannon.evaluate(32, t).unwrap().value;
        assert!((a - b).norm() < 1e-13);
    }
}

#[test]
fn zero_signal_gives_zero_everywhere() {
    let g = grid(1024);
    let f = Spectrum::zero(g, PI).unwrap();
    let sys = TransferFunction::hilbert(g);
    let engines: Vec<Box<dyn ApproxEngine>> = vec![
        Box::new(OversampledEngine::new(&f, &sys, 2.0, 16).unwrap()),
        Box::new(WalshDyadicEngine::new(WalshVariant::B, &f, &sys, true).unwrap()),
    ];
    for e in &engines {
        let scan = sup_error_scan(e.as_ref(), &[1, 4], &[-1.0, 0.0, 2.0]).unwrap();
        assert!(scan.cells.iter().all(|c| c.value.norm() == 0.0 && c.abs_error == 0.0));
    }
}
