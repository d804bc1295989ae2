//! Random variate generation used by every sampler.
//!
//! All draws go through a caller-owned [`RngStream`]; nothing here keeps
//! generator state. Parameters are validated up front and rejected with a
//! domain error rather than silently producing NaN.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use rand_distr::{Distribution, StandardNormal};

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::Domain(format!("{name} must be finite and > 0, got {value}")));
    }
    Ok(())
}

/// Standard normal draw straight off the stream (never antithetically
/// flipped; see [`sample_normal`]).
pub fn standard_normal(rng: &mut RngStream) -> f64 {
    StandardNormal.sample(rng)
}

/// Draw from N(mean, variance).
///
/// This is the one entry point through which location-scale normals leave
/// the module; antithetic streams flip the underlying z here and nowhere
/// else, so squared-residual quantities stay paired across mirrored runs.
pub fn sample_normal(mean: f64, variance: f64, rng: &mut RngStream) -> Result<f64> {
    if !(variance >= 0.0) || !variance.is_finite() || !mean.is_finite() {
        return Err(Error::Domain(format!(
            "normal requires finite mean and variance >= 0, got ({mean}, {variance})"
        )));
    }
    let mut z: f64 = StandardNormal.sample(rng);
    if rng.antithetic() {
        z = -z;
    }
    Ok(mean + variance.sqrt() * z)
}

/// Draw from Gamma(shape, rate); density ∝ x^(shape-1) exp(-rate·x).
pub fn sample_gamma(shape: f64, rate: f64, rng: &mut RngStream) -> Result<f64> {
    check_positive("gamma shape", shape)?;
    check_positive("gamma rate", rate)?;
    let g = rand_distr::Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::Domain(format!("gamma({shape}, {rate}): {e}")))?;
    Ok(g.sample(rng))
}

/// Draw from Beta(a, b).
pub fn sample_beta(a: f64, b: f64, rng: &mut RngStream) -> Result<f64> {
    check_positive("beta a", a)?;
    check_positive("beta b", b)?;
    let d = rand_distr::Beta::new(a, b)
        .map_err(|e| Error::Domain(format!("beta({a}, {b}): {e}")))?;
    Ok(d.sample(rng))
}

/// Draw from Exponential(rate); mean 1/rate.
pub fn sample_exponential(rate: f64, rng: &mut RngStream) -> Result<f64> {
    check_positive("exponential rate", rate)?;
    let d = rand_distr::Exp::new(rate)
        .map_err(|e| Error::Domain(format!("exp({rate}): {e}")))?;
    Ok(d.sample(rng))
}

/// Draw from Inverse-Gaussian(mu, lambda); E = mu, Var = mu³/lambda.
///
/// Michael–Schucany–Haas transformation with rejection: one squared
/// normal, one uniform, no tuning. The smaller root of the transformed
/// quadratic is evaluated in a cancellation-free form so extreme normal
/// draws cannot round it to zero or below.
pub fn sample_inverse_gaussian(mu: f64, lambda: f64, rng: &mut RngStream) -> Result<f64> {
    check_positive("inverse-gaussian mu", mu)?;
    check_positive("inverse-gaussian lambda", lambda)?;
    let z: f64 = StandardNormal.sample(rng);
    let y = mu * z * z;
    let x = if y == 0.0 {
        mu
    } else {
        // mu + (mu/(2 lambda)) (y - sqrt(y^2 + 4 lambda y)), rewritten as
        // 4 mu lambda / (y (1 + sqrt(1 + 4 lambda / y))^2).
        let s = (1.0 + 4.0 * lambda / y).sqrt();
        (4.0 * mu * lambda / (y * (1.0 + s) * (1.0 + s))).max(f64::MIN_POSITIVE)
    };
    let u = rng.uniform();
    if u <= mu / (mu + x) {
        Ok(x)
    } else {
        Ok(mu * mu / x)
    }
}

/// Draw from Cauchy(0, 1) as a ratio of independent standard normals.
pub fn sample_standard_cauchy(rng: &mut RngStream) -> f64 {
    loop {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        if b != 0.0 {
            return a / b;
        }
    }
}

/// The five random-error regimes of the simulation study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ErrorLaw {
    /// Standard normal.
    Normal01,
    /// Student t with 2 degrees of freedom.
    StudentT2,
    /// Log-normal with log-mean 0 and log-sd 2.
    LogNormal02,
    /// 90% N(0,1) + 10% Cauchy(0,1).
    Mix90N10C,
    /// 80% N(0,1) + 20% Cauchy(0,1).
    Mix80N20C,
}

impl ErrorLaw {
    /// Normal-component weight for the contaminated variants.
    pub fn mixture_weight(&self) -> Option<f64> {
        match self {
            ErrorLaw::Mix90N10C => Some(0.9),
            ErrorLaw::Mix80N20C => Some(0.8),
            _ => None,
        }
    }

    /// Numeric label used on the command line (1-5).
    pub fn index(&self) -> u8 {
        match self {
            ErrorLaw::Normal01 => 1,
            ErrorLaw::StudentT2 => 2,
            ErrorLaw::LogNormal02 => 3,
            ErrorLaw::Mix90N10C => 4,
            ErrorLaw::Mix80N20C => 5,
        }
    }

    pub fn from_index(idx: u8) -> Result<Self> {
        match idx {
            1 => Ok(ErrorLaw::Normal01),
            2 => Ok(ErrorLaw::StudentT2),
            3 => Ok(ErrorLaw::LogNormal02),
            4 => Ok(ErrorLaw::Mix90N10C),
            5 => Ok(ErrorLaw::Mix80N20C),
            _ => Err(Error::Config(format!("unknown error law {idx}, expected 1-5"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ErrorLaw::Normal01 => "normal01",
            ErrorLaw::StudentT2 => "t2",
            ErrorLaw::LogNormal02 => "lognormal02",
            ErrorLaw::Mix90N10C => "mix90n10c",
            ErrorLaw::Mix80N20C => "mix80n20c",
        }
    }
}

impl std::str::FromStr for ErrorLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "normal01" | "normal" => Ok(ErrorLaw::Normal01),
            "2" | "t2" => Ok(ErrorLaw::StudentT2),
            "3" | "lognormal02" | "lognormal" => Ok(ErrorLaw::LogNormal02),
            "4" | "mix90n10c" => Ok(ErrorLaw::Mix90N10C),
            "5" | "mix80n20c" => Ok(ErrorLaw::Mix80N20C),
            other => Err(Error::Config(format!("unknown error law '{other}'"))),
        }
    }
}

/// n i.i.d. draws from the named law; mixtures flip a component
/// indicator per element.
pub fn sample_error(law: ErrorLaw, n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Config("sample_error requires n >= 1".into()));
    }
    let mut out = Vec::with_capacity(n);
    match law {
        ErrorLaw::Normal01 => {
            for _ in 0..n {
                out.push(standard_normal(rng));
            }
        }
        ErrorLaw::StudentT2 => {
            let t = rand_distr::StudentT::new(2.0)
                .map_err(|e| Error::Domain(format!("t(2): {e}")))?;
            for _ in 0..n {
                out.push(t.sample(rng));
            }
        }
        ErrorLaw::LogNormal02 => {
            let d = rand_distr::LogNormal::new(0.0, 2.0)
                .map_err(|e| Error::Domain(format!("lognormal(0,2): {e}")))?;
            for _ in 0..n {
                out.push(d.sample(rng));
            }
        }
        ErrorLaw::Mix90N10C | ErrorLaw::Mix80N20C => {
            let w = law.mixture_weight().expect("mixture law");
            for _ in 0..n {
                if rng.uniform() < w {
                    out.push(standard_normal(rng));
                } else {
                    out.push(sample_standard_cauchy(rng));
                }
            }
        }
    }
    Ok(out)
}
