use fracspde_core::noise::{
    aggregate, increment_autocovariance, HurstPair, NoiseGridSpec, SheetSampler,
};
use fracspde_core::Matrix;

/// Covariance of two fBm increments from `R(s, t) = (s^2H + t^2H - |t - s|^2H) / 2`.
fn fbm_box_covariance(hurst: f64, step: f64, i: usize, k: usize) -> f64 {
    let r = |s: f64, t: f64| 0.5 * (s.powf(2.0 * hurst) + t.powf(2.0 * hurst) - (t - s).abs().powf(2.0 * hurst));
    let (a0, a1) = (i as f64 * step, (i + 1) as f64 * step);
    let (b0, b1) = (k as f64 * step, (k + 1) as f64 * step);
    r(a1, b1) - r(a1, b0) - r(a0, b1) + r(a0, b0)
}

const PAIRS: [(f64, f64); 3] = [(0.5, 0.5), (0.25, 0.25), (0.2, 0.4)];

#[test]
fn autocovariance_matches_fbm_covariance() {
    for h in [0.1, 0.25, 0.4, 0.5] {
        for step in [0.03, 1.0] {
            for i in 0..6usize {
                for k in 0..6 {
                    let got = increment_autocovariance(h, step, i.abs_diff(k));
                    let want = fbm_box_covariance(h, step, i, k);
                    assert!((got - want).abs() < 1e-13, "H={h} step={step} ({i},{k}): {got} vs {want}");
                }
            }
        }
    }
}

fn empirical_covariance(sampler: &SheetSampler, samples: usize, seed: u64) -> (Vec<f64>, Matrix) {
    let mut rng = fracspde_core::noise::trajectory_rng(seed);
    let d = sampler.spec().m_t() * sampler.spec().n_x();
    let mut mean = vec![0.0; d];
    let mut second = Matrix::zeros(d, d);
    for _ in 0..samples {
        let v = sampler.sample(&mut rng).values().as_slice().to_vec();
        for a in 0..d {
            mean[a] += v[a] / samples as f64;
            for b in 0..d {
                second[(a, b)] += v[a] * v[b] / samples as f64;
            }
        }
    }
    let cov = Matrix::from_fn(d, d, |a, b| second[(a, b)] - mean[a] * mean[b]);
    (mean, cov)
}

#[test]
fn sheet_covariance_within_five_standard_errors() {
    let samples = 20_000;
    for (h1, h2) in PAIRS {
        let spec = NoiseGridSpec::new(4, 4, 2.0, 0.5).unwrap();
        let sampler = SheetSampler::new(spec, HurstPair::new(h1, h2).unwrap()).unwrap();
        let (mean, cov) = empirical_covariance(&sampler, samples, 31);
        let exact = |a: usize, b: usize| {
            fbm_box_covariance(h2, spec.tau(), a / 4, b / 4) * fbm_box_covariance(h1, spec.h(), a % 4, b % 4)
        };
        for a in 0..16 {
            let se = (exact(a, a) / samples as f64).sqrt();
            assert!(mean[a].abs() < 5.0 * se, "mean {a}: {}", mean[a]);
            for b in 0..16 {
                let se = ((exact(a, a) * exact(b, b) + exact(a, b).powi(2)) / samples as f64).sqrt();
                let z = (cov[(a, b)] - exact(a, b)) / se;
                assert!(z.abs() < 5.0, "H=({h1},{h2}) entry ({a},{b}): z = {z}");
            }
        }
    }
}

#[test]
fn diagonal_variance_is_product_of_box_sizes() {
    for (h1, h2) in PAIRS {
        let spec = NoiseGridSpec::new(8, 16, 0.5, 0.1).unwrap();
        let sampler = SheetSampler::new(spec, HurstPair::new(h1, h2).unwrap()).unwrap();
        let want = spec.tau().powf(2.0 * h2) * spec.h().powf(2.0 * h1);
        let lt = sampler.time_factor().reconstruct();
        let lx = sampler.space_factor().reconstruct();
        for i in 0..8 {
            for j in 0..16 {
                assert!((lt[(i, i)] * lx[(j, j)] - want).abs() < 1e-14 * want.max(1.0));
            }
        }
    }
}

#[test]
fn aggregated_fine_sheet_has_coarse_law() {
    let samples = 8_000;
    let (h1, h2) = (0.3, 0.4);
    let hurst = HurstPair::new(h1, h2).unwrap();
    let fine = SheetSampler::new(NoiseGridSpec::new(8, 8, 1.0, 1.0).unwrap(), hurst).unwrap();
    let coarse_spec = NoiseGridSpec::new(2, 2, 1.0, 1.0).unwrap();
    let mut rng = fracspde_core::noise::trajectory_rng(77);
    let mut second = [0.0f64; 4];
    for _ in 0..samples {
        let c = aggregate(&fine.sample(&mut rng), 4, 4).unwrap();
        for (s, v) in second.iter_mut().zip(c.values().as_slice()) {
            *s += v * v / samples as f64;
        }
    }
    let want = coarse_spec.tau().powf(2.0 * h2) * coarse_spec.h().powf(2.0 * h1);
    let se = want * (2.0 / samples as f64).sqrt();
    for s in second {
        assert!((s - want).abs() < 5.0 * se, "{s} vs {want}");
    }
}
