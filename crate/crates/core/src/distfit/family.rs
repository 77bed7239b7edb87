use rand::Rng;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf_inv;
use statrs::function::gamma::{gamma_lr, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gamma,
    Exponential,
    Weibull,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Gamma, Family::Exponential, Family::Weibull];

    pub fn n_params(self) -> usize {
        match self {
            Family::Exponential => 1,
            Family::Gamma | Family::Weibull => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Gamma => "gamma",
            Family::Exponential => "exponential",
            Family::Weibull => "weibull",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gamma" => Ok(Family::Gamma),
            "exponential" | "exp" => Ok(Family::Exponential),
            "weibull" => Ok(Family::Weibull),
            other => Err(format!("unknown family '{other}'")),
        }
    }
}

/// Gamma distribution with shape α and rate β (mean α/β).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma {
    pub shape: f64,
    pub rate: f64,
}

impl Gamma {
    pub fn new(shape: f64, rate: f64) -> Option<Self> {
        (shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite())
            .then_some(Self { shape, rate })
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.shape * self.rate.ln() - ln_gamma(self.shape) + (self.shape - 1.0) * x.ln()
            - self.rate * x
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x.is_infinite() {
            1.0
        } else {
            gamma_lr(self.shape, self.rate * x)
        }
    }

    /// Inverse CDF by safeguarded Newton iteration on the standard gamma.
    pub fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        let a = self.shape;
        let lg = ln_gamma(a);
        // Wilson-Hilferty start
        let z = std::f64::consts::SQRT_2 * erf_inv(2.0 * p - 1.0);
        let c = 1.0 / (9.0 * a);
        let mut x = a * (1.0 - c + z * c.sqrt()).powi(3);
        if !(x > 0.0) || !x.is_finite() {
            x = ((p.ln() + ln_gamma(a + 1.0)) / a).exp().max(1e-300);
        }
        let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
        for _ in 0..200 {
            let f = gamma_lr(a, x) - p;
            if f == 0.0 {
                break;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let ln_pdf = (a - 1.0) * x.ln() - x - lg;
            let mut next = x - f / ln_pdf.exp();
            if !(next > lo && next < hi) || !next.is_finite() {
                next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x };
            }
            if (next - x).abs() <= 1e-15 * x.max(1e-300) {
                x = next;
                break;
            }
            x = next;
        }
        x / self.rate
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rand_distr::Gamma::new(self.shape, 1.0 / self.rate)
            .expect("valid gamma parameters")
            .sample(rng)
    }
}

/// Weibull distribution with shape k and scale λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weibull {
    pub shape: f64,
    pub scale: f64,
}

impl Weibull {
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let z = x / self.scale;
        self.shape.ln() - self.scale.ln() + (self.shape - 1.0) * z.ln() - z.powf(self.shape)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-(x / self.scale).powf(self.shape)).exp_m1()
        }
    }

    pub fn mean(&self) -> f64 {
        self.scale * ln_gamma(1.0 + 1.0 / self.shape).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rand_distr::Weibull::new(self.scale, self.shape)
            .expect("valid weibull parameters")
            .sample(rng)
    }
}

/// A fitted member of one of the candidate families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Distribution {
    Gamma(Gamma),
    Exponential { rate: f64 },
    Weibull(Weibull),
}

impl Distribution {
    pub fn family(&self) -> Family {
        match self {
            Distribution::Gamma(_) => Family::Gamma,
            Distribution::Exponential { .. } => Family::Exponential,
            Distribution::Weibull(_) => Family::Weibull,
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Gamma(g) => g.ln_pdf(x),
            Distribution::Exponential { rate } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    rate.ln() - rate * x
                }
            }
            Distribution::Weibull(w) => w.ln_pdf(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Gamma(g) => g.cdf(x),
            Distribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Distribution::Weibull(w) => w.cdf(x),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Distribution::Gamma(g) => g.mean(),
            Distribution::Exponential { rate } => 1.0 / rate,
            Distribution::Weibull(w) => w.mean(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Distribution::Gamma(g) => g.sample(rng),
            Distribution::Exponential { rate } => rand_distr::Exp::new(*rate)
                .expect("valid exponential rate")
                .sample(rng),
            Distribution::Weibull(w) => w.sample(rng),
        }
    }

    pub fn log_likelihood(&self, values: &[f64]) -> f64 {
        values.iter().map(|&x| self.ln_pdf(x)).sum()
    }
}

/// ψ'(x) by upward recurrence and the asymptotic series.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x
        + x2 / 2.0
        + (x2 / x)
            * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 * (1.0 / 30.0 - x2 * 5.0 / 66.0))))
}
