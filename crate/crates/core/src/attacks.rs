//! Reconstruction attacks: the optimal likelihood-weighted attack and an
//! oblivious baseline that only uses the prior.

use std::cell::RefCell;

use rand::Rng;

use crate::domain::{DiscretePrior, ThreatModel};
use crate::error::{contract, Result};
use crate::mechanisms::Mechanism;

/// Relative tolerance under which two evidence values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-10;

/// An attack maps an observed output and the target's aux value to a guess.
pub trait Attack<T>: Sync {
    fn guess<R: Rng + ?Sized>(&self, theta: &T, aux: usize, rng: &mut R) -> usize;
}

/// Indices whose value is within `tol` of the maximum.
pub fn argmax_set(values: &[f64], tol: f64) -> Vec<usize> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.iter().enumerate().filter(|(_, &v)| v >= max - tol).map(|(i, _)| i).collect()
}

/// Uniform draw from [`argmax_set`] without allocating.
pub fn select_argmax<R: Rng + ?Sized>(values: &[f64], tol: f64, rng: &mut R) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = max - tol;
    let ties = values.iter().filter(|&&v| v >= floor).count();
    let mut pick = if ties > 1 { rng.gen_range(0..ties) } else { 0 };
    for (i, &v) in values.iter().enumerate() {
        if v >= floor {
            if pick == 0 {
                return i;
            }
            pick -= 1;
        }
    }
    unreachable!("the maximum is always attained")
}

/// Per-output evidence `w(θ, z) = p(θ|z) − p(θ)`, up to a positive factor.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    /// `w(θ, z)·e^{−scale}`.
    pub weights: Vec<f64>,
    /// Log of the common factor.
    pub scale: f64,
}

impl WeightTable {
    pub fn compute<M: Mechanism>(mech: &M, prior: &DiscretePrior, theta: &M::Output) -> Self {
        let mut lik = vec![0.0; prior.len()];
        let scale = mech.scaled_likelihoods(theta, &mut lik);
        let marginal: f64 = lik.iter().zip(prior.weights()).map(|(l, p)| l * p).sum();
        lik.iter_mut().for_each(|l| *l -= marginal);
        Self { weights: lik, scale }
    }

    /// Unscaled `w(θ, z)`.
    pub fn weight(&self, z: usize) -> f64 {
        self.weights[z] * self.scale.exp()
    }
}

thread_local! {
    static SCRATCH: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
    static EVIDENCE: RefCell<Vec<f64>> = const { RefCell::new(Vec::new()) };
}

/// The attack that maximizes the posterior evidence mass of the guess's success
/// set, restricted to the records consistent with the side information.
#[derive(Debug, Clone, Copy)]
pub struct OptimalAttack<'a, M> {
    mech: &'a M,
    prior: &'a DiscretePrior,
    threat: &'a ThreatModel,
}

impl<'a, M: Mechanism> OptimalAttack<'a, M> {
    pub fn new(mech: &'a M, prior: &'a DiscretePrior, threat: &'a ThreatModel) -> Result<Self> {
        threat.check_prior(prior)?;
        if mech.universe_size() != prior.len() {
            return contract("mechanism and prior disagree on the universe size");
        }
        Ok(Self { mech, prior, threat })
    }

    /// Writes the evidence mass `W(z')` of every candidate into `out`, scaled
    /// by a positive factor; returns the tie tolerance at that scale.
    pub fn evidence(&self, theta: &M::Output, aux: usize, out: &mut [f64]) -> f64 {
        let m = self.prior.len();
        SCRATCH.with(|cell| {
            let mut buf = cell.borrow_mut();
            buf.resize(2 * m, 0.0);
            let (lik, v) = buf.split_at_mut(m);
            self.mech.scaled_likelihoods(theta, lik);
            let pi = self.prior.weights();
            let marginal: f64 = lik.iter().zip(pi).map(|(l, p)| l * p).sum();
            v.iter_mut().for_each(|x| *x = 0.0);
            let mut peak: f64 = 0.0;
            for &z in self.threat.aux().fiber(aux) {
                v[z] = (lik[z] - marginal) * pi[z];
                peak = peak.max(lik[z] * pi[z]).max(marginal * pi[z]);
            }
            self.threat.ball_sums(v, out);
            TIE_TOLERANCE * peak.max(f64::MIN_POSITIVE)
        })
    }

    /// Every equally good guess.
    pub fn argmax_set(&self, theta: &M::Output, aux: usize) -> Result<Vec<usize>> {
        self.check_aux(aux)?;
        let mut w = vec![0.0; self.prior.len()];
        let tol = self.evidence(theta, aux, &mut w);
        Ok(argmax_set(&w, tol))
    }

    fn check_aux(&self, aux: usize) -> Result<()> {
        let a = self.threat.aux();
        if aux >= a.fiber_count() || a.fiber(aux).is_empty() {
            return contract(format!("aux value {aux} is not realized by any record"));
        }
        Ok(())
    }
}

impl<M: Mechanism> Attack<M::Output> for OptimalAttack<'_, M> {
    fn guess<R: Rng + ?Sized>(&self, theta: &M::Output, aux: usize, rng: &mut R) -> usize {
        EVIDENCE.with(|cell| {
            let mut w = cell.borrow_mut();
            w.resize(self.prior.len(), 0.0);
            let tol = self.evidence(theta, aux, &mut w);
            select_argmax(&w, tol, rng)
        })
    }
}

/// Ignores the output and guesses the record whose success set carries the
/// most prior mass within the target's fiber.
#[derive(Debug, Clone)]
pub struct ObliviousPriorAttack {
    /// Per fiber, the tied best guesses.
    best: Vec<Vec<usize>>,
}

impl ObliviousPriorAttack {
    pub fn new(prior: &DiscretePrior, threat: &ThreatModel) -> Result<Self> {
        threat.check_prior(prior)?;
        let m = prior.len();
        let mut v = vec![0.0; m];
        let mut w = vec![0.0; m];
        let mut best = Vec::with_capacity(threat.aux().fiber_count());
        for fiber in threat.aux().fibers() {
            v.iter_mut().for_each(|x| *x = 0.0);
            let mut peak: f64 = 0.0;
            for &z in fiber {
                v[z] = prior.weight(z);
                peak = peak.max(v[z]);
            }
            threat.ball_sums(&v, &mut w);
            best.push(argmax_set(&w, TIE_TOLERANCE * peak.max(f64::MIN_POSITIVE)));
        }
        Ok(Self { best })
    }

    /// The tied best guesses for aux value `aux`.
    pub fn candidates(&self, aux: usize) -> &[usize] {
        &self.best[aux]
    }
}

impl<T> Attack<T> for ObliviousPriorAttack {
    fn guess<R: Rng + ?Sized>(&self, _theta: &T, aux: usize, rng: &mut R) -> usize {
        let c = &self.best[aux];
        c[if c.len() > 1 { rng.gen_range(0..c.len()) } else { 0 }]
    }
}
