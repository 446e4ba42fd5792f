use alloc::format;
use alloc::string::String;

use crate::error::{Error, Result};
use crate::noise::HurstPair;

/// Globally Lipschitz source term `f(u)` with linear growth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonlinearSource {
    Zero,
    Constant(f64),
    Linear { slope: f64 },
    /// `amplitude * sin(u)`.
    Sine { amplitude: f64 },
}

impl NonlinearSource {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            NonlinearSource::Zero => 0.0,
            NonlinearSource::Constant(c) => c,
            NonlinearSource::Linear { slope } => slope * u,
            NonlinearSource::Sine { amplitude } => amplitude * libm::sin(u),
        }
    }

    pub fn lipschitz_constant(&self) -> f64 {
        match *self {
            NonlinearSource::Zero | NonlinearSource::Constant(_) => 0.0,
            NonlinearSource::Linear { slope } => slope.abs(),
            NonlinearSource::Sine { amplitude } => amplitude.abs(),
        }
    }

    /// `C` with `|f(u)| <= C (1 + |u|)`.
    pub fn growth_constant(&self) -> f64 {
        match *self {
            NonlinearSource::Zero => 0.0,
            NonlinearSource::Constant(c) => c.abs(),
            NonlinearSource::Linear { slope } => slope.abs(),
            NonlinearSource::Sine { amplitude } => amplitude.abs(),
        }
    }

    pub fn id(&self) -> String {
        match *self {
            NonlinearSource::Zero => "zero".into(),
            NonlinearSource::Constant(c) => format!("constant({c})"),
            NonlinearSource::Linear { slope } => format!("linear({slope})"),
            NonlinearSource::Sine { amplitude } => format!("sine({amplitude})"),
        }
    }

    fn validate(&self) -> Result<()> {
        let p = match *self {
            NonlinearSource::Zero => 0.0,
            NonlinearSource::Constant(c) => c,
            NonlinearSource::Linear { slope } => slope,
            NonlinearSource::Sine { amplitude } => amplitude,
        };
        if p.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid("f", "source parameter must be finite"))
        }
    }
}

/// `2 H2 + (H1 - 1) alpha`; the model is well posed only when positive.
pub fn regularity_index(alpha: f64, hurst: HurstPair) -> f64 {
    2.0 * hurst.h2() + (hurst.h1() - 1.0) * alpha
}

/// `u_t + D_t^{1-alpha} A u = f(u) + beta xi` on `(0, l) x (0, T]`, zero
/// initial and boundary data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    alpha: f64,
    hurst: HurstPair,
    beta: f64,
    length: f64,
    t_final: f64,
    source: NonlinearSource,
}

impl ProblemSpec {
    /// `alpha = 1` is accepted as the classical (heat equation) limit.
    pub fn new(
        alpha: f64,
        hurst: HurstPair,
        beta: f64,
        length: f64,
        t_final: f64,
        source: NonlinearSource,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid("alpha", format!("fractional order must lie in (0, 1], got {alpha}")));
        }
        let index = regularity_index(alpha, hurst);
        if !(index > 0.0) {
            return Err(Error::StandingAssumption { alpha, h1: hurst.h1(), h2: hurst.h2(), value: index });
        }
        if !beta.is_finite() {
            return Err(Error::invalid("beta", "noise amplitude must be finite"));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid("l", format!("domain length must be positive, got {length}")));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::invalid("t_final", format!("final time must be positive, got {t_final}")));
        }
        source.validate()?;
        Ok(ProblemSpec { alpha, hurst, beta, length, t_final, source })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn hurst(&self) -> HurstPair {
        self.hurst
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn source(&self) -> NonlinearSource {
        self.source
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_source(mut self, source: NonlinearSource) -> Self {
        self.source = source;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_violated_assumption() {
        // 2*0.1 + (0.1-1)*0.9 < 0
        let h = HurstPair::new(0.1, 0.1).unwrap();
        let err = ProblemSpec::new(0.9, h, 1.0, 1.0, 1.0, NonlinearSource::Zero).unwrap_err();
        assert!(matches!(err, Error::StandingAssumption { .. }));
    }

    #[test]
    fn rejects_alpha_outside_range() {
        let h = HurstPair::brownian();
        for a in [0.0, -0.5, 1.5, f64::NAN] {
            match ProblemSpec::new(a, h, 1.0, 1.0, 1.0, NonlinearSource::Zero) {
                Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "alpha"),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn sources_satisfy_growth_bound_on_grid() {
        let sources = [
            NonlinearSource::Zero,
            NonlinearSource::Constant(-2.0),
            NonlinearSource::Linear { slope: 0.5 },
            NonlinearSource::Sine { amplitude: 0.02 },
        ];
        for f in sources {
            let c = f.growth_constant();
            let lip = f.lipschitz_constant();
            for i in -200..=200 {
                let u = 0.37 * i as f64;
                assert!(f.eval(u).abs() <= c * (1.0 + u.abs()) + 1e-15);
                let v = u + 0.013;
                assert!((f.eval(u) - f.eval(v)).abs() <= lip * 0.013 * (1.0 + 1e-9) + 1e-15);
            }
        }
    }
}
