//! Phase-wise distribution fitting of PI values.
//!
//! Gamma, exponential and Weibull candidates are fitted by maximum
//! likelihood, the family with the smallest AIC is selected and the fit is
//! checked with a parametric-bootstrap Kolmogorov-Smirnov test. The gamma
//! fit of each phase doubles as the prediction fallback of the Markov model.

mod family;

pub use family::{trigamma, Distribution, Family, Gamma, Weibull};

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;
use thiserror::Error;

use crate::ingest::PiSequence;
use crate::phase::{Phase, PhaseScheme};

/// Smallest pool fitted by [`fit_phases`].
pub const MIN_FIT_SAMPLE: usize = 30;
pub const DEFAULT_BOOTSTRAP: usize = 1000;
const MAX_ITER: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("bootstrap size must be at least 100, got {0}")]
    BootstrapTooSmall(usize),
    #[error("{0}")]
    Io(String),
}

/// One fitted candidate family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFit {
    pub distribution: Distribution,
    pub n: usize,
    pub log_likelihood: f64,
    pub aic: f64,
    pub bic: f64,
    pub ks_statistic: f64,
    pub iterations: usize,
}

impl FamilyFit {
    pub fn family(&self) -> Family {
        self.distribution.family()
    }
}

fn check_sample(values: &[f64]) -> Result<(), FitError> {
    if values.is_empty() {
        return Err(FitError::DegenerateSample("empty sample".into()));
    }
    if let Some(x) = values.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(FitError::DegenerateSample(format!(
            "value {x} is not strictly positive"
        )));
    }
    Ok(())
}

fn is_constant(values: &[f64]) -> bool {
    values.iter().all(|&x| x == values[0])
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and `cdf`.
pub fn ks_statistic(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d.clamp(0.0, 1.0)
}

/// Solves `ln α − ψ(α) = s` for α by Newton steps on `ln α` inside a
/// shrinking bracket. The left side decreases strictly from +∞ to 0.
fn gamma_shape(s: f64, start: f64) -> (f64, usize) {
    let mut u = start.ln();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for it in 1..=MAX_ITER {
        let a = u.exp();
        let f = a.ln() - digamma(a) - s;
        if f > 0.0 {
            lo = lo.max(u);
        } else {
            hi = hi.min(u);
        }
        // d f / d ln α
        let df = 1.0 - a * trigamma(a);
        let mut next = u - f / df;
        if !next.is_finite() || next <= lo || next >= hi {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => u + 1.0,
                _ => u - 1.0,
            };
        }
        if (next - u).abs() < 1e-13 {
            return (next.exp(), it);
        }
        u = next;
    }
    (u.exp(), MAX_ITER)
}

fn fit_gamma(values: &[f64]) -> Result<(Distribution, usize), FitError> {
    if values.len() < 2 || is_constant(values) {
        return Err(FitError::DegenerateSample(
            "gamma needs at least two distinct values".into(),
        ));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mean_ln = values.iter().map(|x| x.ln()).sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let s = mean.ln() - mean_ln;
    if !(s > 0.0) {
        return Err(FitError::DegenerateSample("zero log-spread".into()));
    }
    let start = (mean * mean / var).clamp(1e-8, 1e8);
    let (shape, it) = gamma_shape(s, start);
    let rate = shape / mean;
    let g = Gamma::new(shape, rate)
        .ok_or_else(|| FitError::DegenerateSample("gamma MLE did not converge".into()))?;
    Ok((Distribution::Gamma(g), it))
}

fn fit_weibull(values: &[f64]) -> Result<(Distribution, usize), FitError> {
    if values.len() < 2 || is_constant(values) {
        return Err(FitError::DegenerateSample(
            "weibull needs at least two distinct values".into(),
        ));
    }
    let n = values.len() as f64;
    // normalise by the geometric mean so x^k stays near 1
    let mean_ln = values.iter().map(|x| x.ln()).sum::<f64>() / n;
    let gm = mean_ln.exp();
    let ly: Vec<f64> = values.iter().map(|x| x.ln() - mean_ln).collect();
    let sd_ln = (ly.iter().map(|l| l * l).sum::<f64>() / n).sqrt();
    // profile score in k: Σ y^k ln y / Σ y^k − 1/k − mean(ln y), increasing in k
    let score = |k: f64| {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &l in &ly {
            let w = (k * l).exp();
            s0 += w;
            s1 += w * l;
            s2 += w * l * l;
        }
        let g = s1 / s0 - 1.0 / k;
        let dg = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (k * k);
        (g, dg, s0)
    };
    let mut u = (1.2 / sd_ln).max(1e-3).ln();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut iterations = MAX_ITER;
    for it in 1..=MAX_ITER {
        let k = u.exp();
        let (g, dg, _) = score(k);
        if g < 0.0 {
            lo = lo.max(u);
        } else {
            hi = hi.min(u);
        }
        let mut next = u - g / (k * dg);
        if !next.is_finite() || next <= lo || next >= hi {
            next = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => u + 1.0,
                _ => u - 1.0,
            };
        }
        if (next - u).abs() < 1e-13 {
            u = next;
            iterations = it;
            break;
        }
        u = next;
    }
    let k = u.exp();
    let (_, _, s0) = score(k);
    let scale = gm * (s0 / n).powf(1.0 / k);
    Ok((Distribution::Weibull(Weibull { shape: k, scale }), iterations))
}

/// Maximum-likelihood fit of one family.
pub fn fit_family(values: &[f64], family: Family) -> Result<FamilyFit, FitError> {
    check_sample(values)?;
    let (distribution, iterations) = match family {
        Family::Exponential => {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            (Distribution::Exponential { rate: 1.0 / mean }, 0)
        }
        Family::Gamma => fit_gamma(values)?,
        Family::Weibull => fit_weibull(values)?,
    };
    let n = values.len();
    let ll = distribution.log_likelihood(values);
    let m = family.n_params() as f64;
    Ok(FamilyFit {
        distribution,
        n,
        log_likelihood: ll,
        aic: 2.0 * m - 2.0 * ll,
        bic: m * (n as f64).ln() - 2.0 * ll,
        ks_statistic: ks_statistic(values, |x| distribution.cdf(x)),
        iterations,
    })
}

/// All candidate fits plus the index of the min-AIC one. An exact AIC tie
/// goes to the family with fewer parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySelection {
    pub candidates: Vec<FamilyFit>,
    pub selected: Family,
}

impl FamilySelection {
    pub fn best(&self) -> &FamilyFit {
        self.get(self.selected).expect("selected family was fitted")
    }

    pub fn get(&self, f: Family) -> Option<&FamilyFit> {
        self.candidates.iter().find(|c| c.family() == f)
    }
}

pub fn select_family(values: &[f64]) -> Result<FamilySelection, FitError> {
    let candidates = Family::ALL
        .iter()
        .map(|&f| fit_family(values, f))
        .collect::<Result<Vec<_>, _>>()?;
    let best = candidates
        .iter()
        .min_by(|a, b| {
            a.aic
                .total_cmp(&b.aic)
                .then(a.family().n_params().cmp(&b.family().n_params()))
        })
        .expect("three candidates");
    Ok(FamilySelection {
        selected: best.family(),
        candidates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub family: Family,
    pub d_obs: f64,
    pub p_value: f64,
    pub n_bootstrap: usize,
    /// Resamples whose refit succeeded; the p-value denominator.
    pub effective: usize,
    pub seed: u64,
}

/// Parametric-bootstrap K-S test. Resample `b` draws from its own ChaCha
/// stream, so the result does not depend on thread scheduling.
pub fn bootstrap_ks(
    values: &[f64],
    family: Family,
    b: usize,
    seed: u64,
) -> Result<BootstrapResult, FitError> {
    if b < 100 {
        return Err(FitError::BootstrapTooSmall(b));
    }
    let fit = fit_family(values, family)?;
    let dist = fit.distribution;
    let n = values.len();
    let ds: Vec<Option<f64>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64 + 1);
            let sample: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
            match fit_family(&sample, family) {
                Ok(f) => Some(f.ks_statistic),
                Err(e) => {
                    tracing::debug!(resample = i, error = %e, "bootstrap refit failed");
                    None
                }
            }
        })
        .collect();
    let effective = ds.iter().flatten().count();
    let exceed = ds.iter().flatten().filter(|&&d| d >= fit.ks_statistic).count();
    Ok(BootstrapResult {
        family,
        d_obs: fit.ks_statistic,
        p_value: if effective == 0 {
            0.0
        } else {
            exceed as f64 / effective as f64
        },
        n_bootstrap: b,
        effective,
        seed,
    })
}

/// Over-end PI values grouped by phase, zeros removed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhasePools {
    pub pools: BTreeMap<Phase, Vec<f64>>,
    pub zeros_excluded: BTreeMap<Phase, usize>,
}

impl PhasePools {
    pub fn get(&self, p: Phase) -> &[f64] {
        self.pools.get(&p).map_or(&[], Vec::as_slice)
    }
}

pub fn partition_by_phase(seqs: &[PiSequence], scheme: &PhaseScheme) -> PhasePools {
    let mut out = PhasePools::default();
    for p in Phase::ALL {
        out.pools.insert(p, Vec::new());
        out.zeros_excluded.insert(p, 0);
    }
    for s in seqs {
        for (over, v) in s.overs() {
            let p = scheme.phase_of(over);
            if v > 0.0 {
                out.pools.get_mut(&p).unwrap().push(v);
            } else {
                *out.zeros_excluded.get_mut(&p).unwrap() += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Marginals {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
    pub p25: f64,
    pub p75: f64,
    pub iqr: f64,
}

/// Percentile by linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn marginals(values: &[f64]) -> Option<Marginals> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let p25 = percentile(&v, 0.25);
    let p75 = percentile(&v, 0.75);
    Some(Marginals {
        n,
        mean,
        median: percentile(&v, 0.5),
        sd,
        p25,
        p75,
        iqr: p75 - p25,
    })
}

pub fn phase_marginals(pools: &PhasePools) -> BTreeMap<Phase, Marginals> {
    pools
        .pools
        .iter()
        .filter_map(|(&p, v)| marginals(v).map(|m| (p, m)))
        .collect()
}

/// Fit report of one phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFit {
    pub phase: Phase,
    pub selection: FamilySelection,
    pub bootstrap: Option<BootstrapResult>,
    pub zeros_excluded: usize,
}

impl PhaseFit {
    pub fn best(&self) -> &FamilyFit {
        self.selection.best()
    }

    /// The phase's gamma fit, used as the prediction fallback.
    pub fn gamma(&self) -> Option<Gamma> {
        match self.selection.get(Family::Gamma)?.distribution {
            Distribution::Gamma(g) => Some(g),
            _ => None,
        }
    }
}

/// Contents of `fits.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFits {
    pub scheme: PhaseScheme,
    pub phases: Vec<PhaseFit>,
    pub marginals: BTreeMap<Phase, Marginals>,
    #[serde(default)]
    pub skipped: BTreeMap<Phase, String>,
}

impl PhaseFits {
    pub fn get(&self, p: Phase) -> Option<&PhaseFit> {
        self.phases.iter().find(|f| f.phase == p)
    }

    pub fn gamma(&self, p: Phase) -> Option<Gamma> {
        self.get(p).and_then(PhaseFit::gamma)
    }

    /// Fits built directly from gamma parameters, with no data behind them.
    pub fn from_gammas(scheme: PhaseScheme, gammas: &[(Phase, Gamma)]) -> Self {
        let phases = gammas
            .iter()
            .map(|&(phase, g)| {
                let fit = FamilyFit {
                    distribution: Distribution::Gamma(g),
                    n: 0,
                    log_likelihood: 0.0,
                    aic: 0.0,
                    bic: 0.0,
                    ks_statistic: 0.0,
                    iterations: 0,
                };
                PhaseFit {
                    phase,
                    selection: FamilySelection {
                        candidates: vec![fit],
                        selected: Family::Gamma,
                    },
                    bootstrap: None,
                    zeros_excluded: 0,
                }
            })
            .collect();
        Self {
            scheme,
            phases,
            marginals: BTreeMap::new(),
            skipped: BTreeMap::new(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), FitError> {
        let text = serde_json::to_string_pretty(self).expect("fits serialise");
        std::fs::write(path, text).map_err(|e| FitError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FitError> {
        let text = std::fs::read_to_string(path).map_err(|e| FitError::Io(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| FitError::Io(e.to_string()))
    }
}

/// Partitions, fits and bootstraps every phase. Phases with fewer than
/// [`MIN_FIT_SAMPLE`] positive values are recorded as skipped. `bootstrap`
/// of zero skips the bootstrap step.
pub fn fit_phases(
    seqs: &[PiSequence],
    scheme: &PhaseScheme,
    bootstrap: usize,
    seed: u64,
) -> Result<PhaseFits, FitError> {
    let pools = partition_by_phase(seqs, scheme);
    let mut phases = Vec::new();
    let mut skipped = BTreeMap::new();
    for (i, p) in Phase::ALL.into_iter().enumerate() {
        let v = pools.get(p);
        if v.len() < MIN_FIT_SAMPLE {
            skipped.insert(p, format!("{} positive values, need {MIN_FIT_SAMPLE}", v.len()));
            continue;
        }
        let selection = match select_family(v) {
            Ok(s) => s,
            Err(e) => {
                skipped.insert(p, e.to_string());
                continue;
            }
        };
        let boot = if bootstrap > 0 {
            Some(bootstrap_ks(v, selection.selected, bootstrap, seed.wrapping_add(i as u64))?)
        } else {
            None
        };
        phases.push(PhaseFit {
            phase: p,
            selection,
            bootstrap: boot,
            zeros_excluded: pools.zeros_excluded[&p],
        });
    }
    Ok(PhaseFits {
        scheme: *scheme,
        phases,
        marginals: phase_marginals(&pools),
        skipped,
    })
}
