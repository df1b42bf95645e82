//! Nested Monte Carlo estimation of the optimal RAD bound on a continuous
//! domain, for the one-dimensional exponential mechanism on `[0, 1]` with
//! absolute-difference error and no side information.
//!
//! The bound is `γ = ∫₀¹ max_x g(θ, x) dθ` with
//! `g(θ, x) = ∫_{|z − x| ≤ η} (p(θ|z) − p(θ)) π(z) dz`. Three estimators are
//! nested: the outer integral over released values θ, the marginal `p(θ)`, and
//! the inner success-window integral. The maximization over `x` is restricted
//! to the local maxima of `g(θ, ·)`, located from the sign of its derivative
//! `h(x + η)·1[x + η ≤ b] − h(x − η)·1[x − η ≥ a]`, `h(z) = (p(θ|z) − ŷ)π(z)`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::domain::ContinuousPrior;
use crate::error::{config, domain, Error, Result};
use crate::mechanisms::ExponentialMechanism1D;
use crate::numeric::{gauss_legendre, integrate, mean_std, quantile_sorted};
use crate::stream::StreamFactory;

/// Derivative evaluations per region when locating local maxima.
pub const GRID_PER_REGION: usize = 256;
const BISECTION_STEPS: usize = 12;

/// How the two inner integrals are approximated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerSampling {
    /// Fresh prior samples for every outer draw: `O(N_θ·(N_z + N_p))`.
    PerOutput,
    /// One sorted prior batch per repetition shared by all outer draws, with
    /// prefix sums: `O((N_θ + N_z + N_p) log N)`. Outer draws then share
    /// inner noise, which leaves each term's expectation unchanged.
    SharedBatch,
    /// Inner integrals by quadrature (uniform prior only); isolates the outer
    /// Monte Carlo error.
    ExactInner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedMcPlan {
    pub n_theta: usize,
    pub n_z: usize,
    pub n_p: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub eta: f64,
    pub sampling: InnerSampling,
    /// Deviation `t` at which to evaluate the analytic failure bound.
    pub tolerance: Option<f64>,
    /// Worker threads; 0 picks the number of available cores.
    pub threads: usize,
}

impl NestedMcPlan {
    /// `N_θ = N_z = N_p = n`, 500 repetitions, per-output inner sampling.
    pub fn new(n: usize, eta: f64, seed: u64) -> Self {
        Self {
            n_theta: n,
            n_z: n,
            n_p: n,
            repetitions: 500,
            seed,
            eta,
            sampling: InnerSampling::PerOutput,
            tolerance: None,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    /// Mean over repetitions.
    pub estimate: f64,
    /// Empirical 2.5% and 97.5% percentiles over repetitions.
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_dev: f64,
    pub replicates: Vec<f64>,
    pub density_cap: f64,
    pub kappa_plus: f64,
    /// Largest candidate set seen.
    pub max_candidates: usize,
    /// Analytic bound on `Pr(|γ̂ − γ| ≥ t)` for the plan's tolerance, when the
    /// prior lives on `[0, 1]`.
    pub failure_probability: Option<f64>,
}

impl McEstimate {
    pub fn ci_width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

/// Hoeffding-style bound on `Pr(|γ̂ − γ| ≥ t)` for the nested estimator.
///
/// Each exponential term is only meaningful when its inner deviation is
/// positive; otherwise the term is replaced by the trivial bound 1.
pub fn failure_probability(
    t: f64,
    n_theta: usize,
    n_z: usize,
    n_p: usize,
    density_cap: f64,
    kappa_plus: f64,
    candidates: usize,
) -> f64 {
    let m2 = density_cap * density_cap;
    let nt = n_theta as f64;
    let k = candidates.max(1) as f64;
    let outer = 2.0 * (-nt * t * t / (18.0 * m2)).exp();
    let term = |slack: f64| {
        if slack > 0.0 {
            (-(nt / (2.0 * m2)) * slack * slack).exp()
        } else {
            1.0
        }
    };
    let inner = term(t / 3.0 - density_cap / (n_z as f64).sqrt() * (2.0 * (2.0 * k).ln()).sqrt());
    let marginal = term(t / (3.0 * kappa_plus) - density_cap / (2.0 * (n_p as f64).sqrt()));
    (outer + inner + marginal).min(1.0)
}

/// Prior density with its normalizer computed once.
#[derive(Debug, Clone, Copy)]
enum Density {
    Uniform { lo: f64, hi: f64 },
    Beta { a1: f64, b1: f64, ln_norm: f64 },
}

impl Density {
    fn new(prior: &ContinuousPrior) -> Self {
        match *prior {
            ContinuousPrior::Uniform { lo, hi } => Self::Uniform { lo, hi },
            ContinuousPrior::Beta { alpha, beta } => {
                Self::Beta { a1: alpha - 1.0, b1: beta - 1.0, ln_norm: ln_beta(alpha, beta) }
            }
        }
    }

    fn eval(&self, z: f64) -> f64 {
        match *self {
            Self::Uniform { lo, hi } => {
                if (lo..=hi).contains(&z) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Self::Beta { a1, b1, ln_norm } => {
                if !(0.0..=1.0).contains(&z) {
                    return 0.0;
                }
                (a1 * z.ln() + b1 * (-z).ln_1p() - ln_norm).exp()
            }
        }
    }
}

/// Mechanism density split as `p(θ|z) = A(z)e^{θ/s}` for `z ≥ θ` and
/// `B(z)e^{(1−θ)/s}` for `z < θ`; both factors stay below `e^{1/s}`.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    inv_s: f64,
    mech: ExponentialMechanism1D,
}

impl Kernel {
    fn new(mech: &ExponentialMechanism1D) -> Result<Self> {
        let inv_s = 1.0 / mech.temperature();
        if inv_s > 600.0 {
            return config(format!("ε = {} is too large for the nested estimator", mech.epsilon()));
        }
        Ok(Self { inv_s, mech: *mech })
    }

    fn factors(&self, z: f64) -> (f64, f64) {
        let c = self.mech.normalizer(z);
        ((-z * self.inv_s).exp() / c, ((z - 1.0) * self.inv_s).exp() / c)
    }

    fn theta_factors(&self, theta: f64) -> (f64, f64) {
        ((theta * self.inv_s).exp(), ((1.0 - theta) * self.inv_s).exp())
    }
}

#[derive(Debug, Clone, Copy)]
struct Side {
    z: f64,
    a: f64,
    b: f64,
    prior: f64,
}

impl Side {
    fn new(z: f64, kernel: &Kernel, density: &Density) -> Self {
        let (a, b) = kernel.factors(z);
        Self { z, a, b, prior: density.eval(z) }
    }

    #[inline]
    fn h(&self, theta: f64, et: f64, e1t: f64, y: f64) -> f64 {
        let p = if self.z >= theta { self.a * et } else { self.b * e1t };
        (p - y) * self.prior
    }
}

#[derive(Debug, Clone)]
struct GridPoint {
    x: f64,
    plus: Option<Side>,
    minus: Option<Side>,
}

/// Precomputed derivative grid for one (mechanism, prior, η).
#[derive(Debug, Clone)]
pub struct CandidateFinder {
    lo: f64,
    hi: f64,
    eta: f64,
    kernel: Kernel,
    density: Density,
    points: Vec<GridPoint>,
    /// Index of the first point after a flat stretch of `g`, and a point on it.
    plateau: Option<(usize, f64)>,
    constant: bool,
}

impl CandidateFinder {
    pub fn new(mech: &ExponentialMechanism1D, prior: &ContinuousPrior, eta: f64) -> Result<Self> {
        let (lo, hi) = prior.support();
        if !(eta >= 0.0) {
            return domain(format!("threshold {eta} must be nonnegative"));
        }
        if eta > hi - lo {
            return domain(format!("threshold {eta} exceeds the domain width {}", hi - lo));
        }
        let kernel = Kernel::new(mech)?;
        let density = Density::new(prior);
        let mut f = Self { lo, hi, eta, kernel, density, points: Vec::new(), plateau: None, constant: false };
        if eta == 0.0 || eta >= hi - lo {
            f.constant = true;
            return Ok(f);
        }
        let regions: Vec<(f64, f64)> = if 2.0 * eta <= hi - lo {
            vec![(lo, lo + eta), (lo + eta, hi - eta), (hi - eta, hi)]
        } else {
            vec![(lo, hi - eta), (hi - eta, lo + eta), (lo + eta, hi)]
        };
        for (r, &(a, b)) in regions.iter().enumerate() {
            if b <= a {
                continue;
            }
            if 2.0 * eta > hi - lo && r == 1 {
                f.plateau = Some((f.points.len(), 0.5 * (a + b)));
                continue;
            }
            for k in 0..GRID_PER_REGION {
                let x = a + (k as f64 + 0.5) * (b - a) / GRID_PER_REGION as f64;
                f.points.push(f.grid_point(x));
            }
        }
        Ok(f)
    }

    fn grid_point(&self, x: f64) -> GridPoint {
        let plus = (x + self.eta <= self.hi).then(|| Side::new(x + self.eta, &self.kernel, &self.density));
        let minus = (x - self.eta >= self.lo).then(|| Side::new(x - self.eta, &self.kernel, &self.density));
        GridPoint { x, plus, minus }
    }

    fn slope(p: &GridPoint, theta: f64, et: f64, e1t: f64, y: f64) -> f64 {
        let up = p.plus.map_or(0.0, |s| s.h(theta, et, e1t, y));
        let down = p.minus.map_or(0.0, |s| s.h(theta, et, e1t, y));
        let d = up - down;
        if d.is_nan() {
            0.0
        } else {
            d
        }
    }

    /// Local maxima of `x ↦ g(θ, x)` given a marginal estimate `y`.
    pub fn candidates(&self, theta: f64, y: f64) -> Vec<f64> {
        if self.constant {
            return vec![self.lo];
        }
        let (et, e1t) = self.kernel.theta_factors(theta);
        let d: Vec<f64> = self.points.iter().map(|p| Self::slope(p, theta, et, e1t, y)).collect();
        let n = d.len();
        let mut out = Vec::new();
        if d[0] < 0.0 {
            out.push(self.lo);
        }
        for k in 0..n - 1 {
            if let Some((at, rep)) = self.plateau {
                if at == k + 1 {
                    if d[k] > 0.0 && d[k + 1] < 0.0 {
                        out.push(rep);
                    }
                    continue;
                }
            }
            if d[k] > 0.0 && d[k + 1] <= 0.0 {
                out.push(self.refine(theta, et, e1t, y, k, d[k], d[k + 1]));
            }
        }
        if d[n - 1] > 0.0 {
            out.push(self.hi);
        }
        if out.is_empty() {
            out.extend([self.lo, self.hi]);
        }
        out
    }

    /// Bisection on the derivative inside one grid cell, finished by linear
    /// interpolation.
    fn refine(&self, theta: f64, et: f64, e1t: f64, y: f64, k: usize, dl: f64, dr: f64) -> f64 {
        let (mut a, mut b) = (self.points[k].x, self.points[k + 1].x);
        let (mut fa, mut fb) = (dl, dr);
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (a + b);
            let fm = Self::slope(&self.grid_point(mid), theta, et, e1t, y);
            if fm > 0.0 {
                a = mid;
                fa = fm;
            } else {
                b = mid;
                fb = fm;
            }
        }
        if fa.is_finite() && fb.is_finite() && fa - fb > 0.0 {
            a + (b - a) * fa / (fa - fb)
        } else {
            0.5 * (a + b)
        }
    }
}

/// Local maxima of `g(θ, ·)` for one output and marginal estimate.
pub fn candidate_maximizers(
    mech: &ExponentialMechanism1D,
    prior: &ContinuousPrior,
    theta: f64,
    eta: f64,
    marginal: f64,
) -> Result<Vec<f64>> {
    Ok(CandidateFinder::new(mech, prior, eta)?.candidates(theta, marginal))
}

/// Sorted prior sample with prefix sums of the kernel factors.
struct Batch {
    z: Vec<f64>,
    pa: Vec<f64>,
    pb: Vec<f64>,
}

impl Batch {
    fn draw<R: Rng>(n: usize, prior: &ContinuousPrior, kernel: &Kernel, rng: &mut R) -> Self {
        let mut z: Vec<f64> = (0..n).map(|_| prior.sample(rng)).collect();
        z.sort_by(|a, b| a.total_cmp(b));
        let mut pa = Vec::with_capacity(n + 1);
        let mut pb = Vec::with_capacity(n + 1);
        let (mut sa, mut sb) = (0.0, 0.0);
        pa.push(0.0);
        pb.push(0.0);
        for &v in &z {
            let (a, b) = kernel.factors(v);
            sa += a;
            sb += b;
            pa.push(sa);
            pb.push(sb);
        }
        Self { z, pa, pb }
    }

    fn index(&self, v: f64) -> usize {
        self.z.partition_point(|&z| z < v)
    }

    fn index_le(&self, v: f64) -> usize {
        self.z.partition_point(|&z| z <= v)
    }

    /// `(Σ p(θ|z_j), count)` over `z_j ∈ [lo, hi]`.
    fn window(&self, lo: f64, hi: f64, theta: f64, et: f64, e1t: f64) -> (f64, usize) {
        let (i, j) = (self.index(lo), self.index_le(hi));
        if j <= i {
            return (0.0, 0);
        }
        let t = self.index(theta).clamp(i, j);
        let below = (self.pb[t] - self.pb[i]) * e1t;
        let above = (self.pa[j] - self.pa[t]) * et;
        (below + above, j - i)
    }
}

struct Setup<'a> {
    mech: &'a ExponentialMechanism1D,
    prior: &'a ContinuousPrior,
    finder: CandidateFinder,
    plan: &'a NestedMcPlan,
    rule: (Vec<f64>, Vec<f64>),
}

impl Setup<'_> {
    fn window(&self, x: f64) -> (f64, f64) {
        ((x - self.plan.eta).max(self.finder.lo), (x + self.plan.eta).min(self.finder.hi))
    }

    /// One outer estimate and the largest candidate set it used.
    fn replicate(&self, rep: usize, factory: &StreamFactory) -> (f64, usize) {
        let plan = self.plan;
        let mut rng = factory.stream(&[rep as u64]);
        let kernel = &self.finder.kernel;
        let thetas: Vec<f64> = (0..plan.n_theta).map(|_| rng.gen::<f64>()).collect();
        let mut total = 0.0;
        let mut widest = 0;
        match plan.sampling {
            InnerSampling::SharedBatch => {
                let zb = Batch::draw(plan.n_z, self.prior, kernel, &mut rng);
                let yb = Batch::draw(plan.n_p, self.prior, kernel, &mut rng);
                for &theta in &thetas {
                    let (et, e1t) = kernel.theta_factors(theta);
                    let (sy, _) = yb.window(f64::NEG_INFINITY, f64::INFINITY, theta, et, e1t);
                    let y = sy / plan.n_p as f64;
                    let k = self.finder.candidates(theta, y);
                    widest = widest.max(k.len());
                    let best = k
                        .iter()
                        .map(|&x| {
                            let (lo, hi) = self.window(x);
                            let (s, c) = zb.window(lo, hi, theta, et, e1t);
                            (s - c as f64 * y) / plan.n_z as f64
                        })
                        .fold(f64::NEG_INFINITY, f64::max);
                    total += best;
                }
            }
            InnerSampling::PerOutput => {
                let mut zs = vec![0.0; plan.n_z];
                for &theta in &thetas {
                    let y = (0..plan.n_p).map(|_| self.mech.density(theta, self.prior.sample(&mut rng))).sum::<f64>()
                        / plan.n_p as f64;
                    zs.iter_mut().for_each(|z| *z = self.prior.sample(&mut rng));
                    let k = self.finder.candidates(theta, y);
                    widest = widest.max(k.len());
                    let best = k
                        .iter()
                        .map(|&x| {
                            let (lo, hi) = self.window(x);
                            zs.iter()
                                .filter(|&&z| z >= lo && z <= hi)
                                .map(|&z| self.mech.density(theta, z) - y)
                                .sum::<f64>()
                                / plan.n_z as f64
                        })
                        .fold(f64::NEG_INFINITY, f64::max);
                    total += best;
                }
            }
            InnerSampling::ExactInner => {
                for &theta in &thetas {
                    let y = self.exact_integral(theta, self.finder.lo, self.finder.hi);
                    let k = self.finder.candidates(theta, y);
                    widest = widest.max(k.len());
                    let best = k
                        .iter()
                        .map(|&x| {
                            let (lo, hi) = self.window(x);
                            self.exact_integral(theta, lo, hi) - y * self.prior_mass(lo, hi)
                        })
                        .fold(f64::NEG_INFINITY, f64::max);
                    total += best;
                }
            }
        }
        (total / plan.n_theta as f64, widest)
    }

    fn prior_mass(&self, lo: f64, hi: f64) -> f64 {
        self.prior.cdf(hi) - self.prior.cdf(lo)
    }

    /// `∫_lo^hi p(θ|z) π(z) dz` for the uniform prior, split at θ.
    fn exact_integral(&self, theta: f64, lo: f64, hi: f64) -> f64 {
        exact_window_integral(self.mech, self.prior, theta, lo, hi, &self.rule)
    }
}

/// `∫_lo^hi p(θ|z) π(z) dz` by Gauss–Legendre quadrature split at θ.
pub fn exact_window_integral(
    mech: &ExponentialMechanism1D,
    prior: &ContinuousPrior,
    theta: f64,
    lo: f64,
    hi: f64,
    rule: &(Vec<f64>, Vec<f64>),
) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let f = |z: f64| mech.density(theta, z) * prior.density(z);
    if theta > lo && theta < hi {
        integrate(f, lo, theta, 4, rule) + integrate(f, theta, hi, 4, rule)
    } else {
        integrate(f, lo, hi, 4, rule)
    }
}

/// Nested Monte Carlo estimate of the optimal RAD bound.
pub fn nested_mc_bound(
    plan: &NestedMcPlan,
    mech: &ExponentialMechanism1D,
    prior: &ContinuousPrior,
) -> Result<McEstimate> {
    if plan.n_theta == 0 || plan.n_z == 0 || plan.n_p == 0 || plan.repetitions == 0 {
        return config("sample sizes and repetitions must be at least 1");
    }
    let (lo, hi) = prior.support();
    if lo < 0.0 || hi > 1.0 {
        return config(format!("prior support [{lo}, {hi}] must lie inside the mechanism's domain [0, 1]"));
    }
    if plan.sampling == InnerSampling::ExactInner && !matches!(prior, ContinuousPrior::Uniform { .. }) {
        return config("exact inner integration is only available for the uniform prior");
    }
    let setup = Setup {
        mech,
        prior,
        finder: CandidateFinder::new(mech, prior, plan.eta)?,
        plan,
        rule: gauss_legendre(16),
    };
    let factory = StreamFactory::new(plan.seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker threads: {e}")))?;
    let runs: Vec<(f64, usize)> =
        pool.install(|| (0..plan.repetitions).into_par_iter().map(|r| setup.replicate(r, &factory)).collect());
    let replicates: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let max_candidates = runs.iter().map(|r| r.1).max().unwrap_or(0);
    let mut sorted = replicates.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let (estimate, std_dev) = mean_std(&replicates);
    let density_cap = mech.density_cap();
    let kappa_plus = prior.kappa_plus(plan.eta)?;
    let on_unit = lo == 0.0 && hi == 1.0;
    let failure = plan.tolerance.filter(|_| on_unit).map(|t| {
        failure_probability(t, plan.n_theta, plan.n_z, plan.n_p, density_cap, kappa_plus, max_candidates)
    });
    Ok(McEstimate {
        estimate,
        ci_low: quantile_sorted(&sorted, 0.025),
        ci_high: quantile_sorted(&sorted, 0.975),
        std_dev,
        replicates,
        density_cap,
        kappa_plus,
        max_candidates,
        failure_probability: failure,
    })
}
