//! Logarithmic Bethe equations for ground and particle-hole states.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{
    kernel, kernel_complex, p0, p0_complex, p0_inverse, p0_prime, p0_prime_complex, theta,
    theta_complex, ModelParams, Order, C64,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    /// Same sector as the ground state.
    Z,
    /// One extra down spin.
    Plus,
}

impl Channel {
    pub fn n_kappa(self, n: usize) -> usize {
        match self {
            Channel::Z => n,
            Channel::Plus => n + 1,
        }
    }
}

/// Particle/hole integers measured from the two Fermi edges.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrClass {
    pub r: i64,
    #[serde(default)]
    pub p_plus: Vec<i64>,
    #[serde(default)]
    pub h_plus: Vec<i64>,
    #[serde(default)]
    pub p_minus: Vec<i64>,
    #[serde(default)]
    pub h_minus: Vec<i64>,
}

impl PrClass {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_plus", &self.p_plus),
            ("h_plus", &self.h_plus),
            ("p_minus", &self.p_minus),
            ("h_minus", &self.h_minus),
        ] {
            if v.iter().any(|&x| x < 1) {
                return Err(Error::InvalidSpec(format!("{name} entries must be positive")));
            }
            if v.iter().collect::<BTreeSet<_>>().len() != v.len() {
                return Err(Error::InvalidSpec(format!("{name} entries must be distinct")));
            }
        }
        let right = self.p_plus.len() as i64 - self.h_plus.len() as i64;
        let left = self.h_minus.len() as i64 - self.p_minus.len() as i64;
        if right != self.r || left != self.r {
            return Err(Error::InvalidSpec(format!(
                "class balance violated: {right} and {left} transferred, r = {}",
                self.r
            )));
        }
        Ok(())
    }

    pub fn n_pairs(&self) -> usize {
        self.p_plus.len() + self.p_minus.len()
    }
}

/// Which integers are removed from and added to the ground-state set `{1..N_kappa}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcitationSpec {
    pub channel: Channel,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub holes: Vec<i64>,
    #[serde(default)]
    pub particles: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pr: Option<PrClass>,
}

impl ExcitationSpec {
    /// Twisted ground state of the channel's sector.
    pub fn ground(channel: Channel) -> Self {
        Self { channel, n: 0, holes: vec![], particles: vec![], pr: None }
    }

    pub fn particle_hole(channel: Channel, holes: Vec<i64>, particles: Vec<i64>) -> Self {
        Self { channel, n: holes.len(), holes, particles, pr: None }
    }

    pub fn from_pr(channel: Channel, pr: PrClass) -> Self {
        Self { channel, n: pr.n_pairs(), holes: vec![], particles: vec![], pr: Some(pr) }
    }

    /// Absolute `(holes, particles)` for a sector with `n_kappa` roots.
    pub fn resolve(&self, n_kappa: usize) -> Result<(Vec<i64>, Vec<i64>)> {
        let (holes, particles) = match (&self.pr, self.holes.is_empty() && self.particles.is_empty()) {
            (Some(pr), true) => {
                let s = pr_class_quantum_numbers(pr, n_kappa, self.channel)?;
                (s.holes, s.particles)
            }
            _ => (self.holes.clone(), self.particles.clone()),
        };
        let nk = n_kappa as i64;
        if holes.len() != particles.len() {
            return Err(Error::InvalidSpec("holes and particles differ in number".into()));
        }
        if self.pr.is_none() && self.n != holes.len() {
            return Err(Error::InvalidSpec(format!("n = {} but {} pairs given", self.n, holes.len())));
        }
        if holes.iter().any(|&h| h < 1 || h > nk) {
            return Err(Error::InvalidSpec(format!("holes must lie in 1..={nk}")));
        }
        if particles.iter().any(|&p| (1..=nk).contains(&p)) {
            return Err(Error::InvalidSpec(format!("particles must lie outside 1..={nk}")));
        }
        if holes.iter().collect::<BTreeSet<_>>().len() != holes.len()
            || particles.iter().collect::<BTreeSet<_>>().len() != particles.len()
        {
            return Err(Error::InvalidSpec("repeated particle or hole integer".into()));
        }
        Ok((holes, particles))
    }

    /// Sorted integers `l_j`.
    pub fn quantum_numbers(&self, n_kappa: usize) -> Result<Vec<i64>> {
        let (holes, particles) = self.resolve(n_kappa)?;
        let mut set: BTreeSet<i64> = (1..=n_kappa as i64).collect();
        for h in &holes {
            set.remove(h);
        }
        set.extend(particles.iter().copied());
        Ok(set.into_iter().collect())
    }
}

/// Absolute integers of a class representative.
pub fn pr_class_quantum_numbers(pr: &PrClass, n_kappa: usize, channel: Channel) -> Result<ExcitationSpec> {
    pr.validate()?;
    let nk = n_kappa as i64;
    let mut particles: Vec<i64> = pr.p_plus.iter().map(|p| p + nk).collect();
    particles.extend(pr.p_minus.iter().map(|p| 1 - p));
    let mut holes: Vec<i64> = pr.h_plus.iter().map(|h| nk + 1 - h).collect();
    holes.extend(pr.h_minus.iter().copied());
    if holes.iter().any(|&h| h < 1 || h > nk) {
        return Err(Error::InvalidSpec("hole offsets exceed the sector size".into()));
    }
    Ok(ExcitationSpec { channel, n: holes.len(), holes, particles, pr: Some(pr.clone()) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Bound on `max_j |xi_kappa(mu_j) - l_j / M|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_iter: 200 }
    }
}

/// A solved set of real roots together with its labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheState {
    /// `params.n` is the ground-state sector; the state has `channel.n_kappa(n)` roots.
    pub params: ModelParams,
    pub channel: Channel,
    pub spec: Option<ExcitationSpec>,
    pub ells: Vec<i64>,
    pub roots: Vec<f64>,
    pub residual: f64,
}

impl BetheState {
    pub fn n_kappa(&self) -> usize {
        self.roots.len()
    }

    pub fn alpha(&self) -> f64 {
        self.params.alpha
    }

    /// `2 n_j = 2 l_j - N_kappa - 1`.
    pub fn doubled_quantum_numbers(&self) -> Vec<i64> {
        let nk = self.n_kappa() as i64;
        self.ells.iter().map(|l| 2 * l - nk - 1).collect()
    }

    pub fn counting_function(&self, omega: f64, order: Order) -> f64 {
        counting(&self.roots, self.params.zeta, self.params.m, self.alpha(), omega, order)
    }

    pub fn counting_complex(&self, w: C64) -> C64 {
        let z = self.params.zeta;
        let m = self.params.m as f64;
        let nk = self.n_kappa() as f64;
        let s: C64 = self.roots.iter().map(|&mu| theta_complex(w - mu, z)).sum();
        p0_complex(w, z) / (2.0 * PI) - s / (2.0 * PI * m) + (nk + 1.0) / (2.0 * m) - self.alpha() / m
    }

    /// The point where `M xi(omega) = j`, for any integer `j`.
    pub fn counting_root(&self, j: i64) -> Result<f64> {
        let m = self.params.m as f64;
        let target = j as f64 / m;
        let f = |x: f64| self.counting_function(x, Order::Value) - target;
        let (mut lo, mut hi) = (-1.0, 1.0);
        let mut grow = 0;
        while f(lo) > 0.0 {
            lo *= 2.0;
            grow += 1;
            if grow > 8 {
                return Err(Error::NoBracket(target));
            }
        }
        grow = 0;
        while f(hi) < 0.0 {
            hi *= 2.0;
            grow += 1;
            if grow > 8 {
                return Err(Error::NoBracket(target));
            }
        }
        // safeguarded Newton
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let v = f(x);
            if v > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = self.counting_function(x, Order::Derivative);
            let mut nx = x - v / d;
            if !(nx > lo && nx < hi) {
                nx = 0.5 * (lo + hi);
            }
            if (nx - x).abs() < 1e-15 * (1.0 + x.abs()) {
                return Ok(nx);
            }
            x = nx;
        }
        Ok(x)
    }
}

fn counting(roots: &[f64], zeta: f64, m: usize, alpha: f64, omega: f64, order: Order) -> f64 {
    let mf = m as f64;
    match order {
        Order::Value => {
            let nk = roots.len() as f64;
            let s: f64 = roots.iter().map(|&mu| theta(omega - mu, zeta)).sum();
            p0(omega, zeta) / (2.0 * PI) - s / (2.0 * PI * mf) + (nk + 1.0) / (2.0 * mf) - alpha / mf
        }
        Order::Derivative => {
            let s: f64 = roots.iter().map(|&mu| kernel(omega - mu, zeta)).sum();
            p0_prime(omega, zeta) / (2.0 * PI) - s / (2.0 * PI * mf)
        }
    }
}

/// `M (xi(omega) - xi_kappa(omega))`.
pub fn finite_shift_function(ground: &BetheState, excited: &BetheState, omega: f64) -> f64 {
    let m = ground.params.m as f64;
    m * (ground.counting_function(omega, Order::Value) - excited.counting_function(omega, Order::Value))
}

/// Complex continuation; the bare momentum cancels between the two counting functions.
pub fn finite_shift_function_complex(ground: &BetheState, excited: &BetheState, w: C64) -> C64 {
    let z = ground.params.zeta;
    let a: C64 = excited.roots.iter().map(|&mu| theta_complex(w - mu, z)).sum();
    let b: C64 = ground.roots.iter().map(|&l| theta_complex(w - l, z)).sum();
    let dn = ground.n_kappa() as f64 - excited.n_kappa() as f64;
    (a - b) / (2.0 * PI) + 0.5 * dn + excited.alpha() - ground.alpha()
}

/// Largest admissible `|I + alpha|` for a real root.
fn quantum_number_bound(params: &ModelParams, n_kappa: usize) -> f64 {
    let z = params.zeta;
    (params.m as f64 * (PI - z) - (n_kappa as f64 - 1.0) * (PI - 2.0 * z)) / (2.0 * PI)
}

/// Whether the integer set admits real roots by the asymptotic range of the equations.
pub fn ells_in_range(params: &ModelParams, n_kappa: usize, ells: &[i64]) -> bool {
    let bound = quantum_number_bound(params, n_kappa);
    let half = (n_kappa as f64 + 1.0) / 2.0;
    ells.iter().all(|&l| (l as f64 - half + params.alpha).abs() < bound - 1e-9)
}

/// Ground state (untwisted) for `spec = None`, otherwise the twisted excited state.
pub fn solve_bethe_state(params: &ModelParams, spec: Option<&ExcitationSpec>) -> Result<BetheState> {
    solve_bethe_state_with(params, spec, &SolverOptions::default())
}

pub fn solve_bethe_state_with(
    params: &ModelParams,
    spec: Option<&ExcitationSpec>,
    opts: &SolverOptions,
) -> Result<BetheState> {
    let (channel, alpha, ells) = match spec {
        None => (Channel::Z, 0.0, (1..=params.n as i64).collect::<Vec<_>>()),
        Some(s) => (s.channel, params.alpha, s.quantum_numbers(s.channel.n_kappa(params.n))?),
    };
    let p = params.with_alpha(alpha);
    if ells.len() > params.m {
        return Err(Error::InvalidSpec("more roots than sites".into()));
    }
    if !ells_in_range(&p, ells.len(), &ells) {
        return Err(Error::InvalidSpec(format!(
            "quantum numbers {ells:?} exceed the real-root range of M = {}",
            params.m
        )));
    }
    let (roots, residual) = solve_real(&p, &ells, opts)?;
    Ok(BetheState { params: p, channel, spec: spec.cloned(), ells, roots, residual })
}

fn targets(m: usize, ells: &[i64], alpha: f64) -> Vec<f64> {
    let nk = ells.len() as f64;
    ells.iter()
        .map(|&l| 2.0 * PI * (l as f64 - (nk + 1.0) / 2.0 + alpha) / m as f64)
        .collect()
}

fn residuals(zeta: f64, m: usize, mu: &[f64], rhs: &[f64]) -> Vec<f64> {
    let mf = m as f64;
    mu.iter()
        .zip(rhs)
        .map(|(&x, &t)| {
            let s: f64 = mu.iter().map(|&y| theta(x - y, zeta)).sum();
            p0(x, zeta) - s / mf - t
        })
        .collect()
}

fn jacobian(zeta: f64, m: usize, mu: &[f64]) -> DMatrix<f64> {
    let n = mu.len();
    let mf = m as f64;
    let mut j = DMatrix::zeros(n, n);
    for a in 0..n {
        let mut diag = p0_prime(mu[a], zeta);
        for b in 0..n {
            if a != b {
                let k = kernel(mu[a] - mu[b], zeta) / mf;
                diag -= k;
                j[(a, b)] = k;
            }
        }
        j[(a, a)] = diag;
    }
    j
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Equations divided by `M`: `p0(mu_j) - sum theta / M = 2 pi (I_j + alpha) / M`.
fn solve_real(p: &ModelParams, ells: &[i64], opts: &SolverOptions) -> Result<(Vec<f64>, f64)> {
    let z = p.zeta;
    let m = p.m;
    let rhs = targets(m, ells, p.alpha);
    let edge = (PI - z) * (1.0 - 1e-12);
    let inv = |t: f64| p0_inverse(t.clamp(-edge, edge), z);

    let mut mu: Vec<f64> = rhs.iter().map(|&t| inv(t)).collect();
    // Jacobi sweeps bring the decoupled guess close to the interacting solution
    for _ in 0..30 {
        let next: Vec<f64> = (0..mu.len())
            .map(|a| {
                let s: f64 = mu.iter().map(|&y| theta(mu[a] - y, z)).sum();
                inv(rhs[a] + s / m as f64)
            })
            .collect();
        let moved = mu.iter().zip(&next).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        mu = next;
        if moved < 1e-6 {
            break;
        }
    }

    // residual in counting-function units is |f| / (2 pi)
    let scale = 1.0 / (2.0 * PI);
    let mut f = residuals(z, m, &mu, &rhs);
    let mut res = max_abs(&f) * scale;
    let mut polish = 0;
    for _ in 0..opts.max_iter {
        if res <= opts.tol {
            polish += 1;
            if polish > 2 {
                break;
            }
        }
        let jac = jacobian(z, m, &mu);
        let step = jac
            .lu()
            .solve(&DVector::from_column_slice(&f))
            .ok_or(Error::NonConvergence { iterations: 0, residual: res })?;
        let merit = f.iter().map(|x| x * x).sum::<f64>();
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = mu.iter().zip(step.iter()).map(|(a, d)| a - t * d).collect();
            let ft = residuals(z, m, &trial, &rhs);
            let mt = ft.iter().map(|x| x * x).sum::<f64>();
            if mt <= merit * (1.0 - 1e-4 * t) || t < 1e-6 || res <= opts.tol {
                let better = mt <= merit;
                if better || t < 1e-6 {
                    mu = trial;
                    f = ft;
                }
                break;
            }
            t *= 0.5;
        }
        res = max_abs(&f) * scale;
    }
    if res > opts.tol || mu.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonConvergence { iterations: opts.max_iter, residual: res });
    }
    Ok((mu, res))
}

/// Roots for a complex twist, continued from a real solution at `Re alpha`.
pub fn solve_complex_twist(state: &BetheState, alpha: C64) -> Result<Vec<C64>> {
    let z = state.params.zeta;
    let m = state.params.m;
    let mf = m as f64;
    let n = state.n_kappa();
    let base = targets(m, &state.ells, 0.0);
    let rhs: Vec<C64> = base.iter().map(|&t| t + 2.0 * PI * alpha / mf).collect();
    let jac_c = |mu: &[C64]| {
        let mut j = DMatrix::<C64>::zeros(n, n);
        for a in 0..n {
            let mut diag = p0_prime_complex(mu[a], z);
            for b in 0..n {
                if a != b {
                    let k = kernel_complex(mu[a] - mu[b], z) / mf;
                    diag -= k;
                    j[(a, b)] = k;
                }
            }
            j[(a, a)] = diag;
        }
        j
    };
    let resid = |mu: &[C64]| -> Vec<C64> {
        mu.iter()
            .zip(&rhs)
            .map(|(&x, &t)| {
                let s: C64 = mu.iter().map(|&y| theta_complex(x - y, z)).sum();
                p0_complex(x, z) - s / mf - t
            })
            .collect()
    };
    // predictor: d mu / d alpha = J^{-1} 2 pi / M
    let mut mu: Vec<C64> = state.roots.iter().map(|&x| C64::new(x, 0.0)).collect();
    let dalpha = alpha - state.alpha();
    let j0 = jac_c(&mu);
    let ones = DVector::from_element(n, C64::new(2.0 * PI / mf, 0.0) * dalpha);
    if let Some(d) = j0.lu().solve(&ones) {
        for (x, dx) in mu.iter_mut().zip(d.iter()) {
            *x += dx;
        }
    }
    let mut f = resid(&mu);
    let mut res = f.iter().fold(0.0f64, |a, x| a.max(x.norm())) / (2.0 * PI);
    let mut polish = 0;
    for _ in 0..100 {
        if res <= 1e-13 {
            polish += 1;
            if polish > 2 {
                break;
            }
        }
        let step = jac_c(&mu)
            .lu()
            .solve(&DVector::from_column_slice(&f))
            .ok_or(Error::NonConvergence { iterations: 0, residual: res })?;
        for (x, d) in mu.iter_mut().zip(step.iter()) {
            *x -= d;
        }
        f = resid(&mu);
        res = f.iter().fold(0.0f64, |a, x| a.max(x.norm())) / (2.0 * PI);
    }
    if res > 1e-11 {
        return Err(Error::NonConvergence { iterations: 100, residual: res });
    }
    Ok(mu)
}

/// All single particle-hole states of a channel whose integers admit real roots.
pub fn enumerate_single_pairs(params: &ModelParams, channel: Channel) -> Vec<ExcitationSpec> {
    let nk = channel.n_kappa(params.n);
    let p0 = params.with_alpha(0.0);
    let bound = quantum_number_bound(&p0, nk);
    let half = (nk as f64 + 1.0) / 2.0;
    let lo = (half - bound).floor() as i64 - 1;
    let hi = (half + bound).ceil() as i64 + 1;
    let mut out = Vec::new();
    for h in 1..=nk as i64 {
        for p in lo..=hi {
            if (1..=nk as i64).contains(&p) {
                continue;
            }
            let spec = ExcitationSpec::particle_hole(channel, vec![h], vec![p]);
            if let Ok(ells) = spec.quantum_numbers(nk) {
                if ells_in_range(&p0, nk, &ells) {
                    out.push(spec);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn free_fermion_roots() {
        let params = ModelParams::new(FRAC_PI_2, 8, 4, 0.0).unwrap();
        let g = solve_bethe_state(&params, None).unwrap();
        for (j, &l) in g.roots.iter().enumerate() {
            let nj = j as f64 + 1.0 - 2.5;
            let expect = 0.5 * (2.0 * PI * nj / 8.0).tan().asinh();
            assert_relative_eq!(l, expect, epsilon = 1e-12);
        }
        assert_eq!(g.doubled_quantum_numbers(), vec![-3, -1, 1, 3]);
    }

    #[test]
    fn ground_state_symmetric() {
        let params = ModelParams::new(PI / 3.0, 64, 16, 0.0).unwrap();
        let g = solve_bethe_state(&params, None).unwrap();
        let n = g.roots.len();
        for j in 0..n {
            assert!((g.roots[j] + g.roots[n - 1 - j]).abs() < 1e-12);
        }
        for (j, &l) in g.roots.iter().enumerate() {
            let v = g.counting_function(l, Order::Value) * 64.0;
            assert!((v - (j + 1) as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn excited_residual() {
        let params = ModelParams::new(PI / 3.0, 32, 8, 0.3).unwrap();
        let spec = ExcitationSpec::particle_hole(Channel::Z, vec![8], vec![10]);
        let e = solve_bethe_state(&params, Some(&spec)).unwrap();
        assert!(e.residual <= 1e-12);
        assert!(e.roots.windows(2).all(|w| w[0] < w[1]));
        for (&l, &mu) in e.ells.iter().zip(&e.roots) {
            assert!((e.counting_function(mu, Order::Value) - l as f64 / 32.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pr_mapping() {
        let pr = PrClass { r: 1, p_plus: vec![1], h_minus: vec![1], ..Default::default() };
        let s = pr_class_quantum_numbers(&pr, 8, Channel::Z).unwrap();
        assert_eq!(s.particles, vec![9]);
        assert_eq!(s.holes, vec![1]);
        let empty = pr_class_quantum_numbers(&PrClass::default(), 8, Channel::Z).unwrap();
        assert!(empty.holes.is_empty() && empty.particles.is_empty());
        let bad = PrClass { r: 1, p_plus: vec![1], ..Default::default() };
        assert!(matches!(pr_class_quantum_numbers(&bad, 8, Channel::Z), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn spec_validation() {
        let s = ExcitationSpec::particle_hole(Channel::Z, vec![9], vec![10]);
        assert!(s.quantum_numbers(8).is_err());
        let s = ExcitationSpec::particle_hole(Channel::Z, vec![3], vec![4]);
        assert!(s.quantum_numbers(8).is_err());
    }

    #[test]
    fn json_forms() {
        let s: ExcitationSpec =
            serde_json::from_str(r#"{"channel":"z","n":1,"holes":[8],"particles":[10]}"#).unwrap();
        assert_eq!(s.quantum_numbers(8).unwrap(), vec![1, 2, 3, 4, 5, 6, 7, 10]);
        let s: ExcitationSpec =
            serde_json::from_str(r#"{"channel":"plus","pr":{"r":1,"p_plus":[1],"h_minus":[1]}}"#).unwrap();
        assert_eq!(s.resolve(9).unwrap(), (vec![1], vec![10]));
    }

    #[test]
    fn complex_twist_matches_real_solution() {
        let params = ModelParams::new(PI / 3.0, 24, 6, 0.0).unwrap();
        let spec = ExcitationSpec::particle_hole(Channel::Z, vec![6], vec![8]);
        let e = solve_bethe_state(&params, Some(&spec)).unwrap();
        let c = solve_complex_twist(&e, C64::new(0.02, 0.0)).unwrap();
        let r = solve_bethe_state(&params.with_alpha(0.02), Some(&spec)).unwrap();
        for (a, b) in c.iter().zip(&r.roots) {
            assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }
}
