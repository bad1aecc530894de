//! Limited-memory BFGS with a backtracking Armijo line search.
//!
//! Every accepted step satisfies the sufficient-decrease condition along a
//! descent direction, so the objective never increases between iterations.

use std::collections::VecDeque;

#[derive(Clone, Debug, PartialEq)]
pub struct LbfgsParams {
    /// Number of correction pairs kept.
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when `|g| <= gradient_tolerance * max(1, |x|)`.
    pub gradient_tolerance: f64,
    /// Stop when the relative decrease over the last `past` iterations is below `delta`.
    pub past: usize,
    pub delta: f64,
    pub max_line_search: usize,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        LbfgsParams {
            memory: 10,
            max_iterations: 200,
            gradient_tolerance: 1e-5,
            past: 10,
            delta: 1e-6,
            max_line_search: 40,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No step along the search direction decreased the objective.
    LineSearchFailed,
    /// The per-iteration callback asked to stop.
    Stopped,
}

const ARMIJO: f64 = 1e-4;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Minimizes `f` starting from `x`, which holds the final iterate on return.
///
/// `on_iteration(k, x, fx)` runs after every accepted step and may return
/// `true` to stop. Returns the final objective value and why the run ended.
pub fn minimize<F, C>(x: &mut Vec<f64>, mut f: F, params: &LbfgsParams, mut on_iteration: C) -> (f64, Termination)
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
    C: FnMut(usize, &[f64], f64) -> bool,
{
    let (mut fx, mut g) = f(x);
    let converged = |x: &[f64], g: &[f64]| norm(g) <= params.gradient_tolerance * norm(x).max(1.0);
    if converged(x, &g) {
        return (fx, Termination::Converged);
    }
    let mut history: VecDeque<Pair> = VecDeque::with_capacity(params.memory);
    let mut past_values: VecDeque<f64> = VecDeque::new();
    past_values.push_back(fx);
    let mut alpha = vec![0.0; params.memory];

    for k in 1..=params.max_iterations {
        // Two-loop recursion: d = -H g.
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        for (i, p) in history.iter().enumerate().rev() {
            alpha[i] = p.rho * dot(&p.s, &d);
            for (dj, yj) in d.iter_mut().zip(&p.y) {
                *dj -= alpha[i] * yj;
            }
        }
        if let Some(last) = history.back() {
            let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
            d.iter_mut().for_each(|v| *v *= gamma);
        }
        for (i, p) in history.iter().enumerate() {
            let beta = p.rho * dot(&p.y, &d);
            for (dj, sj) in d.iter_mut().zip(&p.s) {
                *dj += (alpha[i] - beta) * sj;
            }
        }
        let mut dg = dot(&d, &g);
        // also catches a NaN direction
        if dg.is_nan() || dg >= 0.0 {
            history.clear();
            d = g.iter().map(|v| -v).collect();
            dg = dot(&d, &g);
        }
        let mut step = if history.is_empty() { 1.0 / norm(&d) } else { 1.0 };

        let mut accepted = None;
        for _ in 0..params.max_line_search {
            let candidate: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (f_new, g_new) = f(&candidate);
            if f_new.is_finite() && f_new <= fx + ARMIJO * step * dg {
                accepted = Some((candidate, f_new, g_new));
                break;
            }
            // Minimizer of the quadratic through fx, dg and f_new, kept in [0.1, 0.5] of the step.
            let next = if f_new.is_finite() {
                -dg * step * step / (2.0 * (f_new - fx - dg * step))
            } else {
                0.1 * step
            };
            step = next.clamp(0.1 * step, 0.5 * step);
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            return (fx, Termination::LineSearchFailed);
        };

        let s: Vec<f64> = x_new.iter().zip(x.iter()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-10 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if history.len() == params.memory {
                history.pop_front();
            }
            history.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        *x = x_new;
        fx = f_new;
        g = g_new;

        if on_iteration(k, x, fx) {
            return (fx, Termination::Stopped);
        }
        if converged(x, &g) {
            return (fx, Termination::Converged);
        }
        past_values.push_back(fx);
        if past_values.len() > params.past {
            let before = past_values.pop_front().unwrap();
            if (before - fx) / fx.abs().max(1.0) < params.delta {
                return (fx, Termination::Converged);
            }
        }
    }
    (fx, Termination::MaxIterations)
}
