//! Exact diagonalization of short periodic chains in momentum-resolved spin sectors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::C64;

/// Largest chain handled by the dense solver.
pub const MAX_SITES: usize = 14;

/// Energies closer than this (relative to the bandwidth) are treated as one level.
const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Z,
    Plus,
    Minus,
}

impl Operator {
    /// Change in the number of down spins.
    pub fn sector_shift(self) -> i64 {
        match self {
            Operator::Z => 0,
            Operator::Plus => -1,
            Operator::Minus => 1,
        }
    }
}

/// Translation orbit of a configuration: representative, period, and the configurations it contains.
#[derive(Debug, Clone)]
struct Orbit {
    period: usize,
    members: Vec<u32>,
}

/// One momentum block `K = 2 pi k / M` of a sector.
#[derive(Debug, Clone)]
pub struct MomentumBlock {
    pub k: usize,
    orbits: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<C64>,
}

/// Fixed-magnetization sector with `n` down spins, diagonalized block by block in momentum.
#[derive(Debug, Clone)]
pub struct SpinSector {
    pub m: usize,
    pub n: usize,
    pub delta: f64,
    pub field: f64,
    pub basis: Vec<u32>,
    index: HashMap<u32, usize>,
    orbit_of: Vec<(usize, usize)>,
    orbits: Vec<Orbit>,
    pub blocks: Vec<MomentumBlock>,
}

/// A sector eigenstate: block, position in the block, energy, momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub block: usize,
    pub index: usize,
    pub energy: f64,
    pub momentum: f64,
}

fn rotate(s: u32, m: usize) -> u32 {
    let mask = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    ((s << 1) | (s >> (m - 1))) & mask
}

fn bit(s: u32, site: usize) -> bool {
    s >> site & 1 == 1
}

/// Diagonal energy and the hopping targets of a configuration.
fn hamiltonian_row(s: u32, m: usize, delta: f64, field: f64, n: usize) -> (f64, Vec<u32>) {
    let mut diag = -0.5 * field * (m as f64 - 2.0 * n as f64);
    let mut hops = Vec::new();
    for j in 0..m {
        let k = (j + 1) % m;
        if bit(s, j) != bit(s, k) {
            diag -= 2.0 * delta;
            hops.push(s ^ (1 << j) ^ (1 << k));
        }
    }
    (diag, hops)
}

/// Builds the `n`-down-spin sector of the periodic chain and diagonalizes every momentum block.
pub fn build_and_diagonalize(m: usize, delta: f64, field: f64, n: usize) -> Result<SpinSector> {
    if m > MAX_SITES {
        return Err(Error::SizeLimit(m));
    }
    if m < 2 || n > m {
        return Err(Error::InvalidParams(format!("sector N = {n} of a chain with M = {m}")));
    }
    if !(delta.is_finite() && field.is_finite()) {
        return Err(Error::NonFinite("anisotropy or field"));
    }
    let basis: Vec<u32> = (0u32..1 << m).filter(|s| s.count_ones() as usize == n).collect();
    let index: HashMap<u32, usize> = basis.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut orbit_of = vec![(usize::MAX, 0); basis.len()];
    let mut orbits = Vec::new();
    for (i, &s) in basis.iter().enumerate() {
        if orbit_of[i].0 != usize::MAX {
            continue;
        }
        let mut members = vec![s];
        let mut t = rotate(s, m);
        while t != s {
            members.push(t);
            t = rotate(t, m);
        }
        let id = orbits.len();
        for (shift, &c) in members.iter().enumerate() {
            orbit_of[index[&c]] = (id, shift);
        }
        orbits.push(Orbit { period: members.len(), members });
    }
    let mut sector = SpinSector { m, n, delta, field, basis, index, orbit_of, orbits, blocks: Vec::new() };
    for k in 0..m {
        sector.blocks.push(sector.diagonalize_block(k));
    }
    Ok(sector)
}

impl SpinSector {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn momentum(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.m as f64
    }

    fn diagonalize_block(&self, k: usize) -> MomentumBlock {
        let kk = self.momentum(k);
        let allowed: Vec<usize> =
            (0..self.orbits.len()).filter(|&o| (k * self.orbits[o].period) % self.m == 0).collect();
        let pos: HashMap<usize, usize> = allowed.iter().enumerate().map(|(i, &o)| (o, i)).collect();
        let dim = allowed.len();
        let mut h = DMatrix::<C64>::zeros(dim, dim);
        for (col, &o) in allowed.iter().enumerate() {
            let orbit = &self.orbits[o];
            let rep = orbit.members[0];
            let (diag, hops) = hamiltonian_row(rep, self.m, self.delta, self.field, self.n);
            h[(col, col)] += diag;
            for s in hops {
                let (target, shift) = self.orbit_of[self.index[&s]];
                if let Some(&row) = pos.get(&target) {
                    let ratio = (orbit.period as f64 / self.orbits[target].period as f64).sqrt();
                    h[(row, col)] += 2.0 * ratio * C64::from_polar(1.0, kk * shift as f64);
                }
            }
        }
        if dim == 0 {
            return MomentumBlock { k, orbits: allowed, eigenvalues: vec![], eigenvectors: h };
        }
        let eig = nalgebra::SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
        MomentumBlock { k, orbits: allowed, eigenvalues, eigenvectors }
    }

    /// All levels sorted by energy.
    pub fn levels(&self) -> Vec<Level> {
        let mut out: Vec<Level> = self
            .blocks
            .iter()
            .enumerate()
            .flat_map(|(b, blk)| {
                blk.eigenvalues.iter().enumerate().map(move |(i, &e)| Level {
                    block: b,
                    index: i,
                    energy: e,
                    momentum: 2.0 * PI * blk.k as f64 / self.m as f64,
                })
            })
            .collect();
        out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        out
    }

    pub fn ground_level(&self) -> Level {
        self.levels()[0]
    }

    /// Eigenvector of a level in the configuration basis.
    pub fn state(&self, level: &Level) -> DVector<C64> {
        let blk = &self.blocks[level.block];
        let kk = self.momentum(blk.k);
        let mut v = DVector::<C64>::zeros(self.dimension());
        for (row, &o) in blk.orbits.iter().enumerate() {
            let orbit = &self.orbits[o];
            let c = blk.eigenvectors[(row, level.index)] / (orbit.period as f64).sqrt();
            for (j, &s) in orbit.members.iter().enumerate() {
                v[self.index[&s]] += c * C64::from_polar(1.0, -kk * j as f64);
            }
        }
        v
    }

    /// Coefficients `<level|v>` of a configuration-basis vector for every level of one block.
    fn block_coefficients(&self, block: usize, v: &DVector<C64>) -> DVector<C64> {
        let blk = &self.blocks[block];
        let kk = self.momentum(blk.k);
        let proj = DVector::<C64>::from_iterator(
            blk.orbits.len(),
            blk.orbits.iter().map(|&o| {
                let orbit = &self.orbits[o];
                let s: C64 = orbit
                    .members
                    .iter()
                    .enumerate()
                    .map(|(j, &c)| C64::from_polar(1.0, kk * j as f64) * v[self.index[&c]])
                    .sum();
                s / (orbit.period as f64).sqrt()
            }),
        );
        blk.eigenvectors.adjoint() * proj
    }

    /// `H v` in the configuration basis.
    pub fn apply_hamiltonian(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::<C64>::zeros(self.dimension());
        for (i, &s) in self.basis.iter().enumerate() {
            let (diag, hops) = hamiltonian_row(s, self.m, self.delta, self.field, self.n);
            out[i] += diag * v[i];
            for t in hops {
                out[self.index[&t]] += 2.0 * v[i];
            }
        }
        out
    }

    /// Site translation `T`, moving site `j` to `j + 1`.
    pub fn translate(&self, v: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::<C64>::zeros(self.dimension());
        for (i, &s) in self.basis.iter().enumerate() {
            out[self.index[&rotate(s, self.m)]] += v[i];
        }
        out
    }
}

/// `sigma^s_site |v>` from sector `from` into sector `to`; sites are 1-based.
pub fn apply_operator(
    op: Operator,
    site: usize,
    from: &SpinSector,
    to: &SpinSector,
    v: &DVector<C64>,
) -> Result<DVector<C64>> {
    if from.m != to.m || to.n as i64 != from.n as i64 + op.sector_shift() {
        return Err(Error::SelectionRule(format!("{op:?} maps N = {} to N = {}", from.n, to.n)));
    }
    if site == 0 || site > from.m {
        return Err(Error::InvalidParams(format!("site {site} outside 1..={}", from.m)));
    }
    let b = site - 1;
    let mut out = DVector::<C64>::zeros(to.dimension());
    for (i, &s) in from.basis.iter().enumerate() {
        match op {
            Operator::Z => out[i] += if bit(s, b) { -v[i] } else { v[i] },
            Operator::Minus if !bit(s, b) => out[to.index[&(s | 1 << b)]] += v[i],
            Operator::Plus if bit(s, b) => out[to.index[&(s & !(1 << b))]] += v[i],
            _ => {}
        }
    }
    Ok(out)
}

/// Matrix elements `<psi'|sigma^s_m|psi_g>` at sites 1 and 2 for a cluster of degenerate levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdElement {
    pub energy: f64,
    /// Crystal momentum `K` of the cluster.
    pub momentum: f64,
    pub multiplicity: usize,
    /// Norm of the projection of `sigma^s_1 |psi_g>` onto the cluster.
    pub magnitude: f64,
    /// Phase of `<sigma_1 psi_g|P sigma_2 psi_g>`, the per-site phase of the element.
    pub phase_step: f64,
}

/// Elements of `sigma^s` between the ground level of `from` and every level cluster of `to`.
pub fn local_matrix_elements(from: &SpinSector, to: &SpinSector, op: Operator) -> Result<Vec<EdElement>> {
    let g = from.ground_level();
    let psi = from.state(&g);
    let v1 = apply_operator(op, 1, from, to, &psi)?;
    let v2 = apply_operator(op, 2, from, to, &psi)?;
    let scale = to.levels().iter().map(|l| l.energy.abs()).fold(1.0, f64::max);
    let mut out = Vec::new();
    for (b, blk) in to.blocks.iter().enumerate() {
        let c1 = to.block_coefficients(b, &v1);
        let c2 = to.block_coefficients(b, &v2);
        let mut i = 0;
        while i < blk.eigenvalues.len() {
            let mut j = i + 1;
            while j < blk.eigenvalues.len() && blk.eigenvalues[j] - blk.eigenvalues[j - 1] < DEGENERACY_TOL * scale {
                j += 1;
            }
            let norm2: f64 = (i..j).map(|t| c1[t].norm_sqr()).sum();
            let overlap: C64 = (i..j).map(|t| c1[t].conj() * c2[t]).sum();
            out.push(EdElement {
                energy: blk.eigenvalues[i],
                momentum: to.momentum(blk.k),
                multiplicity: j - i,
                magnitude: norm2.sqrt(),
                phase_step: overlap.arg(),
            });
            i = j;
        }
    }
    out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(out)
}

/// A determinant-side value to be found among the ED elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheValue {
    pub label: String,
    pub magnitude: f64,
    /// Expected per-site phase of the element.
    pub phase_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleMatch {
    pub label: String,
    pub bethe: f64,
    pub ed: f64,
    pub relative_error: f64,
    pub phase_error: f64,
    pub ed_energy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub matched: Vec<OracleMatch>,
    pub orphans: Vec<BetheValue>,
    pub tolerance: f64,
    pub phase_tolerance: f64,
    /// States are paired by magnitude and momentum only, never by energy.
    pub protocol: String,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.orphans.is_empty()
    }

    pub fn max_relative_error(&self) -> f64 {
        self.matched.iter().map(|m| m.relative_error).fold(0.0, f64::max)
    }

    pub fn max_phase_error(&self) -> f64 {
        self.matched.iter().map(|m| m.phase_error).fold(0.0, f64::max)
    }
}

/// Magnitudes below this are compared absolutely and carry no phase.
const ZERO_FLOOR: f64 = 1e-10;

fn phase_distance(a: f64, b: f64) -> f64 {
    crate::linalg::wrap_phase(a - b).abs()
}

/// Pairs every Bethe value with a distinct ED cluster of equal magnitude and momentum.
///
/// Values are visited from the largest down and take the closest unused cluster within tolerance.
pub fn oracle_compare(bethe: &[BetheValue], ed: &[EdElement], tolerance: f64, phase_tolerance: f64) -> OracleReport {
    let mut used = vec![false; ed.len()];
    let mut order: Vec<usize> = (0..bethe.len()).collect();
    order.sort_by(|&a, &b| bethe[b].magnitude.total_cmp(&bethe[a].magnitude));
    let mut report = OracleReport {
        tolerance,
        phase_tolerance,
        protocol: "multiset match on (magnitude, momentum)".into(),
        ..Default::default()
    };
    for &i in &order {
        let b = &bethe[i];
        let mut best: Option<(usize, f64, f64)> = None;
        for (j, e) in ed.iter().enumerate() {
            if used[j] {
                continue;
            }
            let zero = b.magnitude < ZERO_FLOOR && e.magnitude < ZERO_FLOOR;
            let rel = if zero { 0.0 } else { (b.magnitude - e.magnitude).abs() / b.magnitude.max(e.magnitude) };
            let ph = if zero { 0.0 } else { phase_distance(b.phase_step, e.phase_step) };
            if rel <= tolerance && ph <= phase_tolerance && best.map_or(true, |(_, r, _)| rel < r) {
                best = Some((j, rel, ph));
            }
        }
        match best {
            Some((j, rel, ph)) => {
                used[j] = true;
                report.matched.push(OracleMatch {
                    label: b.label.clone(),
                    bethe: b.magnitude,
                    ed: ed[j].magnitude,
                    relative_error: rel,
                    phase_error: ph,
                    ed_energy: ed[j].energy,
                });
            }
            None => report.orphans.push(b.clone()),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_sites_fully_polarized() {
        let s = build_and_diagonalize(2, 0.4, 0.7, 0).unwrap();
        assert_eq!(s.dimension(), 1);
        assert_relative_eq!(s.ground_level().energy, -0.7, epsilon = 1e-14);
    }

    #[test]
    fn sector_dimensions_and_orthonormality() {
        let s = build_and_diagonalize(10, 0.5, 0.0, 3).unwrap();
        assert_eq!(s.dimension(), 120);
        let levels = s.levels();
        assert_eq!(levels.len(), 120);
        let a = s.state(&levels[3]);
        let b = s.state(&levels[17]);
        assert_relative_eq!(a.norm(), 1.0, epsilon = 1e-12);
        assert!(a.dotc(&b).norm() < 1e-12);
    }

    #[test]
    fn eigenvectors_and_translation() {
        let s = build_and_diagonalize(8, 0.5, 0.3, 3).unwrap();
        for l in s.levels().iter().step_by(7) {
            let v = s.state(l);
            let hv = s.apply_hamiltonian(&v);
            assert!((hv - v.clone() * C64::new(l.energy, 0.0)).norm() < 1e-12);
            let tv = s.translate(&v);
            assert!((tv - v * C64::from_polar(1.0, l.momentum)).norm() < 1e-12);
        }
    }

    #[test]
    fn ground_state_magnetization_and_sum_rule() {
        let (m, n) = (10, 3);
        let s = build_and_diagonalize(m, 0.5, 0.0, n).unwrap();
        let psi = s.state(&s.ground_level());
        let v = apply_operator(Operator::Z, 4, &s, &s, &psi).unwrap();
        // sigma^z = +1 on up spins, so the magnetization per site is 1 - 2D
        let diag = psi.dotc(&v).re;
        assert_relative_eq!(diag, 1.0 - 2.0 * n as f64 / m as f64, epsilon = 1e-10);
        let elements = local_matrix_elements(&s, &s, Operator::Z).unwrap();
        let total: f64 = elements.iter().map(|e| e.magnitude.powi(2)).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn selection_rule_and_size_limit() {
        let a = build_and_diagonalize(6, 0.2, 0.0, 2).unwrap();
        let b = build_and_diagonalize(6, 0.2, 0.0, 2).unwrap();
        let psi = a.state(&a.ground_level());
        assert!(matches!(apply_operator(Operator::Minus, 1, &a, &b, &psi), Err(Error::SelectionRule(_))));
        assert!(matches!(build_and_diagonalize(16, 0.2, 0.0, 2), Err(Error::SizeLimit(16))));
    }

    #[test]
    fn oracle_protocol_controls() {
        let ed = vec![
            EdElement { energy: 0.0, momentum: 0.0, multiplicity: 1, magnitude: 0.3, phase_step: 0.5 },
            EdElement { energy: 1.0, momentum: 0.0, multiplicity: 1, magnitude: 0.2, phase_step: -1.0 },
        ];
        assert!(oracle_compare(&[], &ed, 1e-9, 1e-8).passed());
        let good = BetheValue { label: "a".into(), magnitude: 0.3, phase_step: 0.5 };
        assert!(oracle_compare(std::slice::from_ref(&good), &ed, 1e-9, 1e-8).passed());
        let bad = BetheValue { magnitude: 0.3 * 1.01, ..good.clone() };
        let r = oracle_compare(&[bad], &ed, 1e-9, 1e-8);
        assert_eq!(r.orphans.len(), 1);
        let wrong_phase = BetheValue { phase_step: 0.6, ..good };
        assert_eq!(oracle_compare(&[wrong_phase], &ed, 1e-9, 1e-8).orphans.len(), 1);
    }
}
