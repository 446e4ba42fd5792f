use fracspde_core::convergence::{
    error_spatial, error_temporal, holder_diagnostic, StudyConfig, StudyMode, StudyPlan,
};
use fracspde_core::cq::Discretization;
use fracspde_core::noise::{BoxIncrementField, HurstPair, NoiseGridSpec};
use fracspde_core::spectral::{spectral_reference_constant_source, SourceProfile};
use fracspde_core::{Error, NonlinearSource, ProblemSpec};

fn spec(alpha: f64, h1: f64, h2: f64, beta: f64, source: NonlinearSource) -> ProblemSpec {
    ProblemSpec::new(alpha, HurstPair::new(h1, h2).unwrap(), beta, 1.0, 1.0, source).unwrap()
}

#[test]
fn unforced_problem_has_zero_errors() {
    let s = spec(0.4, 0.3, 0.5, 0.0, NonlinearSource::Zero);
    assert_eq!(error_temporal(&s, 3, 8, 8).unwrap(), 0.0);
    assert_eq!(error_spatial(&s, 3, 8, 8).unwrap(), 0.0);
}

#[test]
fn error_samples_are_reproducible() {
    let s = spec(0.6, 0.4, 0.4, 1.0, NonlinearSource::Sine { amplitude: 1.0 });
    assert_eq!(error_temporal(&s, 11, 16, 16).unwrap(), error_temporal(&s, 11, 16, 16).unwrap());
    assert_eq!(error_spatial(&s, 11, 16, 32).unwrap(), error_spatial(&s, 11, 16, 32).unwrap());
    assert_ne!(error_temporal(&s, 11, 16, 16).unwrap(), error_temporal(&s, 12, 16, 16).unwrap());
}

#[test]
fn classical_limit_is_first_order_in_time() {
    let s = ProblemSpec::new(1.0, HurstPair::brownian(), 1e-5, 1.0, 0.1, NonlinearSource::Constant(1.0)).unwrap();
    let mut rms = Vec::new();
    for m_t in [16, 32, 64] {
        let sum: f64 = (0..50).map(|i| error_temporal(&s, i, m_t, 32).unwrap().powi(2)).sum();
        rms.push((sum / 50.0).sqrt());
    }
    for w in rms.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.4..=2.6).contains(&ratio), "{rms:?}");
    }
}

#[test]
fn deterministic_spatial_gap_is_second_order() {
    let s = spec(0.5, 0.5, 0.5, 0.0, NonlinearSource::Constant(1.0));
    let gaps: Vec<f64> = [8, 16, 32].iter().map(|&n| error_spatial(&s, 0, n, 256).unwrap()).collect();
    for w in gaps.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() < 0.25, "{gaps:?}");
    }
}

#[test]
fn deterministic_solution_approaches_spectral_reference() {
    let s = spec(0.7, 0.5, 0.5, 0.0, NonlinearSource::Constant(1.0));
    let reference = spectral_reference_constant_source(&SourceProfile::Constant(1.0), 1.0, 200, 0.7, 1.0).unwrap();
    let mut errors = Vec::new();
    for (m_t, n_x) in [(64, 16), (256, 32), (1024, 64)] {
        let noise = BoxIncrementField::zeros(NoiseGridSpec::new(m_t, n_x, 1.0, 1.0).unwrap());
        let u = Discretization::new(s, m_t, n_x).unwrap().run(&noise, &[]).unwrap().final_state;
        errors.push(reference.l2_distance(&u));
    }
    assert!(errors[0] > errors[1] && errors[1] > errors[2] && errors[2] < 1e-3, "{errors:?}");
}

#[test]
fn spatial_errors_decrease_for_smooth_noise_row() {
    let s = ProblemSpec::new(0.3, HurstPair::new(0.5, 0.5).unwrap(), 10.0, 0.1, 0.01, NonlinearSource::Sine {
        amplitude: 0.02,
    })
    .unwrap();
    let config =
        StudyConfig { spec: s, trajectories: 10, levels: vec![8, 16, 32], fixed: 256, base_seed: 42, mode: StudyMode::Spatial };
    let table = StudyPlan::new(config).unwrap().run().unwrap();
    assert!(table.errors.windows(2).all(|w| w[0] > w[1]), "{:?}", table.errors);
}

#[test]
fn single_trajectory_without_noise_reports_deterministic_gaps() {
    let s = spec(0.5, 0.4, 0.4, 0.0, NonlinearSource::Constant(1.0));
    let config =
        StudyConfig { spec: s, trajectories: 1, levels: vec![8, 16], fixed: 32, base_seed: 5, mode: StudyMode::Temporal };
    let table = StudyPlan::new(config).unwrap().run().unwrap();
    for (k, m_t) in [8, 16].into_iter().enumerate() {
        assert_eq!(table.errors[k], error_temporal(&s, 999, m_t, 32).unwrap());
    }
}

#[test]
fn holder_exponent_of_classical_heat_equation() {
    let s = spec(1.0, 0.5, 0.5, 1.0, NonlinearSource::Zero);
    let est = holder_diagnostic(&s, 256, 64, 60, &[2, 4, 8, 16], 1).unwrap();
    assert!((est.ms_exponent - 0.5).abs() < 0.15, "{est:?}");
}

#[test]
fn holder_exponent_of_rough_fractional_row() {
    let s = ProblemSpec::new(0.3, HurstPair::new(0.3, 0.5).unwrap(), 1.0, 0.5, 0.5, NonlinearSource::Sine {
        amplitude: 1.0,
    })
    .unwrap();
    let est = holder_diagnostic(&s, 256, 64, 60, &[2, 4, 8, 16], 1).unwrap();
    assert!((est.rms_slope - 0.395).abs() < 0.15, "{est:?}");
}

#[test]
fn holder_rejects_zero_increments() {
    let s = spec(0.5, 0.5, 0.5, 0.0, NonlinearSource::Zero);
    assert!(matches!(holder_diagnostic(&s, 32, 8, 50, &[1, 2, 4], 0), Err(Error::Degenerate(_))));
}
