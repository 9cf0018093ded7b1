//! Projection of the predicted configuration onto the local convex set by
//! Uzawa dual ascent on the contact multipliers.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::vec2::Vec2;

use super::contact::{Contact, ContactPair};

#[derive(Debug, Clone, Copy)]
pub struct SolverParams<S = f64> {
    /// Certificate tolerance on linearized gaps and on the complementarity
    /// products at the returned point.
    pub tol_kkt: S,
    /// Hard iteration cap; `None` picks 10 per constraint plus 1000.
    pub max_iter: Option<usize>,
}

/// Result of one saddle-point solve. The corrected configuration is unique;
/// the multipliers need not be when constraint gradients are dependent.
#[derive(Debug, Clone)]
pub struct SaddleSolution<S = f64> {
    pub positions: Vec<Vec2<S>>,
    pub multipliers: Vec<S>,
    pub iterations: usize,
    /// Worst linearized-gap violation at the returned point, >= 0.
    pub violation: S,
    /// Worst complementarity product |lambda * gap| at the returned point.
    pub complementarity: S,
}

/// Dual step size: one over a row-sum bound of the contact Gram matrix.
/// Each constraint touching a disk contributes at most 1 to the row of any
/// other constraint on that disk, and the diagonal is the gradient norm
/// squared, so the bound is the summed incidence of the two disks involved.
fn dual_step<S: Real>(contacts: &[Contact<S>], ndisks: usize) -> S {
    let mut incidence = vec![0usize; ndisks];
    for c in contacts {
        match c.pair {
            ContactPair::Disks { i, j } => {
                incidence[i] += 1;
                incidence[j] += 1;
            }
            ContactPair::Wall { i, .. } => incidence[i] += 1,
        }
    }
    let mut bound = 1usize;
    for c in contacts {
        let row = match c.pair {
            ContactPair::Disks { i, j } => incidence[i] + incidence[j],
            ContactPair::Wall { i, .. } => incidence[i],
        };
        bound = bound.max(row);
    }
    S::one() / S::from_usize(bound).unwrap()
}

/// Projects `predicted` onto the constraints linearized at `current`:
/// minimize |q - predicted|^2 subject to gap_l + G_l . (q - current) >= 0.
///
/// Iterates q = predicted + sum(lambda_l G_l), lambda_l <- max(0,
/// lambda_l - sigma g_l) until lambda >= 0, g_l >= -tol and
/// |lambda_l g_l| <= tol all hold, where g_l is the linearized gap at the
/// current q. `warm` seeds the multipliers (a pure initial guess; the
/// certificate is unaffected).
pub fn project_step_uzawa<S: Real>(
    current: &[Vec2<S>],
    predicted: &[Vec2<S>],
    contacts: &[Contact<S>],
    params: &SolverParams<S>,
    warm: Option<&[S]>,
) -> Result<SaddleSolution<S>> {
    let n_constraints = contacts.len();
    if n_constraints == 0 {
        return Ok(SaddleSolution {
            positions: predicted.to_vec(),
            multipliers: Vec::new(),
            iterations: 0,
            violation: S::zero(),
            complementarity: S::zero(),
        });
    }

    let max_iter = params.max_iter.unwrap_or(10 * n_constraints + 1000);
    let sigma = dual_step(contacts, current.len());

    let mut lambda: Vec<S> = match warm {
        Some(w) if w.len() == n_constraints => {
            w.iter().map(|&v| v.max(S::zero())).collect()
        }
        _ => vec![S::zero(); n_constraints],
    };
    let mut q = predicted.to_vec();
    let mut disp = vec![Vec2::zero(); current.len()];
    let mut gaps = vec![S::zero(); n_constraints];

    let mut violation = S::zero();
    let mut complementarity = S::zero();

    for iter in 0..=max_iter {
        // Primal point for the current multipliers.
        q.copy_from_slice(predicted);
        for (l, c) in contacts.iter().enumerate() {
            c.add_scaled_grad(lambda[l], &mut q);
        }
        for (d, (qi, ci)) in disp.iter_mut().zip(q.iter().zip(current)) {
            *d = *qi - *ci;
        }

        violation = S::zero();
        complementarity = S::zero();
        for (l, c) in contacts.iter().enumerate() {
            let g = c.gap + c.grad_dot(&disp);
            gaps[l] = g;
            violation = violation.max(-g);
            complementarity = complementarity.max((lambda[l] * g).abs());
        }
        if violation <= params.tol_kkt && complementarity <= params.tol_kkt {
            return Ok(SaddleSolution {
                positions: q,
                multipliers: lambda,
                iterations: iter,
                violation,
                complementarity,
            });
        }

        for (l, g) in gaps.iter().enumerate() {
            lambda[l] = (lambda[l] - sigma * *g).max(S::zero());
        }
    }

    Err(Error::UzawaNonConvergence {
        iterations: max_iter,
        violation: violation.to_f64_lossy(),
        complementarity: complementarity.to_f64_lossy(),
    })
}

/// Per-contact pressures: multipliers divided by the time step, so values
/// compare across runs with different steps. Gradients are kept at their
/// natural norm (sqrt(2) per pair), which fixes the unit convention.
pub fn pressures<S: Real>(
    contacts: &[Contact<S>],
    multipliers: &[S],
    tau: S,
) -> Vec<(ContactPair, S)> {
    contacts
        .iter()
        .zip(multipliers)
        .map(|(c, &l)| (c.pair, l / tau))
        .collect()
}

/// Sum of contact pressures per disk. Well defined even where individual
/// multipliers are not unique, as long as the gradients of the tied
/// constraints act on the same disks.
pub fn disk_pressure_sums<S: Real>(
    contacts: &[Contact<S>],
    multipliers: &[S],
    tau: S,
    ndisks: usize,
) -> Vec<S> {
    let mut sums = vec![S::zero(); ndisks];
    for (c, &l) in contacts.iter().zip(multipliers) {
        match c.pair {
            ContactPair::Disks { i, j } => {
                sums[i] += l / tau;
                sums[j] += l / tau;
            }
            ContactPair::Wall { i, .. } => sums[i] += l / tau,
        }
    }
    sums
}
