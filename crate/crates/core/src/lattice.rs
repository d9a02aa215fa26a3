//! Regular grid on the belief simplex with piecewise-linear interpolation.
//!
//! With `k` states and resolution `R`, the nodes are all beliefs whose entries are
//! multiples of `1/R`; there are `C(R + k - 1, k - 1)` of them. Interpolation uses the
//! Freudenthal triangulation in cumulative coordinates `w_j = R · Σ_{i ≥ j} z_i`
//! (`j = 1..k-1`), in which nodes are exactly the integer points with
//! `R ≥ w_1 ≥ … ≥ w_{k-1} ≥ 0`.
//!
//! Node order is the colexicographic rank of the strictly increasing sequence
//! `a_j = w_{k-j} + (j - 1)`. For two states this makes node `i` the belief
//! `(1 - i/R, i/R)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{BrcError, Result};
use crate::math::{floor, round};
use crate::model::{Belief, PROB_TOL};

/// Node indices and barycentric weights of the lattice simplex containing a belief.
pub type Stencil = SmallVec<[(usize, f64); 4]>;

const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeSpec", into = "LatticeSpec")]
pub struct BeliefLattice {
    num_states: usize,
    resolution: usize,
    nodes: Vec<Belief>,
    /// `binom[n * k + j] = C(n, j)` for `j < k`.
    binom: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct LatticeSpec {
    num_states: usize,
    resolution: usize,
}

impl TryFrom<LatticeSpec> for BeliefLattice {
    type Error = BrcError;
    fn try_from(spec: LatticeSpec) -> Result<Self> {
        BeliefLattice::new(spec.num_states, spec.resolution)
    }
}

impl From<BeliefLattice> for LatticeSpec {
    fn from(lattice: BeliefLattice) -> Self {
        LatticeSpec {
            num_states: lattice.num_states,
            resolution: lattice.resolution,
        }
    }
}

impl BeliefLattice {
    pub fn new(num_states: usize, resolution: usize) -> Result<Self> {
        if num_states == 0 || resolution == 0 {
            return Err(BrcError::InvalidArgument(
                "lattice needs at least one state and resolution >= 1".into(),
            ));
        }
        let k = num_states;
        let max_n = resolution + k;
        let mut binom = vec![0usize; (max_n + 1) * k];
        for n in 0..=max_n {
            for j in 0..k {
                binom[n * k + j] = if j == 0 {
                    1
                } else if n == 0 {
                    0
                } else {
                    binom[(n - 1) * k + j - 1] + binom[(n - 1) * k + j]
                };
            }
        }
        let mut lattice = Self {
            num_states,
            resolution,
            nodes: Vec::new(),
            binom,
        };
        let count = lattice.binom[(resolution + k - 1) * k + (k - 1)];
        let mut nodes: Vec<Option<Belief>> = vec![None; count];
        let mut w = vec![0usize; k.saturating_sub(1)];
        lattice.enumerate(0, resolution, &mut w, &mut nodes);
        lattice.nodes = nodes
            .into_iter()
            .map(|n| n.expect("rank is a bijection onto 0..count"))
            .collect();
        Ok(lattice)
    }

    fn enumerate(&self, depth: usize, upper: usize, w: &mut [usize], out: &mut [Option<Belief>]) {
        if depth == w.len() {
            let rank = self.rank(w);
            out[rank] = Some(self.belief_of(w));
            return;
        }
        for v in 0..=upper {
            w[depth] = v;
            self.enumerate(depth + 1, v, w, out);
        }
    }

    fn belief_of(&self, w: &[usize]) -> Belief {
        let r = self.resolution as f64;
        let k = self.num_states;
        let mut p = vec![0.0; k];
        if k == 1 {
            p[0] = 1.0;
        } else {
            p[0] = (self.resolution - w[0]) as f64 / r;
            for j in 1..k {
                let next = if j < k - 1 { w[j] } else { 0 };
                p[j] = (w[j - 1] - next) as f64 / r;
            }
        }
        Belief::new(p).expect("lattice node is on the simplex")
    }

    /// Rank of cumulative coordinates `w` (length `k - 1`, non-increasing).
    #[inline]
    fn rank(&self, w: &[usize]) -> usize {
        let m = w.len();
        let k = self.num_states;
        let mut rank = 0;
        for j in 1..=m {
            let a = w[m - j] + (j - 1);
            rank += self.binom[a * k + j];
        }
        rank
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Belief] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> &Belief {
        &self.nodes[index]
    }

    /// Vertices and barycentric weights of the lattice simplex that contains `belief`.
    /// Vertices with zero weight are omitted.
    pub fn stencil(&self, belief: &[f64]) -> Result<Stencil> {
        let k = self.num_states;
        if belief.len() != k {
            return Err(BrcError::OutsideSimplex(format!(
                "belief has {} entries, lattice has {k} states",
                belief.len()
            )));
        }
        let mut total = 0.0;
        for &p in belief {
            if !p.is_finite() || p < -PROB_TOL {
                return Err(BrcError::OutsideSimplex(format!("entry {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > PROB_TOL {
            return Err(BrcError::OutsideSimplex(format!("entries sum to {total}")));
        }
        let mut out = Stencil::new();
        if k == 1 {
            out.push((0, 1.0));
            return Ok(out);
        }
        let r = self.resolution as f64;
        let m = k - 1;
        let mut base: SmallVec<[usize; 8]> = SmallVec::from_elem(0, m);
        let mut frac: SmallVec<[f64; 8]> = SmallVec::from_elem(0.0, m);
        let mut acc = 0.0;
        for j in (0..m).rev() {
            acc += belief[j + 1].max(0.0) * r;
            let mut w = acc.clamp(0.0, r);
            let nearest = round(w);
            if (w - nearest).abs() < SNAP {
                w = nearest;
            }
            let b = floor(w);
            base[j] = b as usize;
            frac[j] = w - b;
        }
        // Freudenthal order: decreasing fractional part, ties by coordinate index.
        let mut order: SmallVec<[usize; 8]> = (0..m).collect();
        order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]).then(a.cmp(&b)));

        let mut vertex = base.clone();
        let first = 1.0 - frac[order[0]];
        if first > 0.0 {
            out.push((self.rank(&vertex), first));
        }
        for i in 0..m {
            let d = order[i];
            let weight = frac[d] - if i + 1 < m { frac[order[i + 1]] } else { 0.0 };
            if frac[d] == 0.0 {
                break;
            }
            vertex[d] += 1;
            if weight > 0.0 {
                out.push((self.rank(&vertex), weight));
            }
        }
        Ok(out)
    }

    /// Piecewise-linear interpolation of node values at `belief`.
    pub fn interpolate(&self, values: &[f64], belief: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(BrcError::InvalidArgument(format!(
                "{} values for {} lattice nodes",
                values.len(),
                self.len()
            )));
        }
        Ok(self
            .stencil(belief)?
            .iter()
            .map(|&(i, w)| w * values[i])
            .sum())
    }
}

/// Interpolates node values at an arbitrary belief.
pub fn lattice_interpolate(lattice: &BeliefLattice, values: &[f64], belief: &Belief) -> Result<f64> {
    lattice.interpolate(values, belief.probabilities())
}
