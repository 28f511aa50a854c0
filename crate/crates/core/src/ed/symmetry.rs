//! Block decomposition of a sector by an abelian group of commuting
//! involutions: lattice reflections, half-translations and (at `J^z = 0`)
//! the global spin flip. All characters are `±1`, so blocks stay real.

use nalgebra::DMatrix;

use super::basis::{BasisSet, SectorBasis};
use super::hamiltonian::SectorHamiltonian;
use crate::lattice::{CouplingMatrix, LatticeGeometry};

/// Generator: a site permutation, optionally combined with a spin flip.
#[derive(Debug, Clone, PartialEq)]
pub struct Involution {
    pub name: &'static str,
    pub perm: Vec<usize>,
    pub flip: bool,
}

/// Candidate lattice involutions of the torus.
pub fn lattice_involutions(g: &LatticeGeometry) -> Vec<Involution> {
    let n = g.n_sites();
    let map = |f: &dyn Fn(usize, usize) -> (usize, usize)| -> Vec<usize> {
        (0..n)
            .map(|i| {
                let (x, y) = g.coords(i);
                let (a, b) = f(x, y);
                g.site(a, b)
            })
            .collect()
    };
    let mut out = vec![
        Involution { name: "reflect-x", perm: map(&|x, y| ((g.lx - x) % g.lx, y)), flip: false },
        Involution { name: "reflect-y", perm: map(&|x, y| (x, (g.ly - y) % g.ly)), flip: false },
    ];
    if g.lx % 2 == 0 {
        out.push(Involution { name: "half-shift-x", perm: map(&|x, y| ((x + g.lx / 2) % g.lx, y)), flip: false });
    }
    if g.ly % 2 == 0 {
        out.push(Involution { name: "half-shift-y", perm: map(&|x, y| (x, (y + g.ly / 2) % g.ly)), flip: false });
    }
    out
}

/// Group generated by independent involutions; element `e` is the product of
/// the generators whose bits are set in `e`.
#[derive(Debug, Clone)]
pub struct InvolutionGroup {
    pub generators: Vec<Involution>,
    elements: Vec<(Vec<usize>, bool)>,
}

impl InvolutionGroup {
    /// Keeps each candidate that leaves the couplings invariant and is not
    /// already in the group generated by the previous ones.
    pub fn for_couplings(cm: &CouplingMatrix, include_flip: bool) -> Self {
        let n = cm.n_sites();
        let tol = 1e-12 * cm.j0.abs().max(1.0);
        let mut group = Self { generators: Vec::new(), elements: vec![((0..n).collect(), false)] };
        let mut candidates = lattice_involutions(&cm.geometry);
        if include_flip {
            candidates.push(Involution { name: "spin-flip", perm: (0..n).collect(), flip: true });
        }
        for c in candidates {
            if !cm.is_invariant_under(&c.perm, tol) {
                continue;
            }
            if group.elements.iter().any(|(p, f)| *p == c.perm && *f == c.flip) {
                continue;
            }
            group.push(c);
        }
        group
    }

    fn push(&mut self, g: Involution) {
        let new: Vec<(Vec<usize>, bool)> = self
            .elements
            .iter()
            .map(|(p, f)| (p.iter().map(|&i| g.perm[i]).collect(), *f ^ g.flip))
            .collect();
        self.elements.extend(new);
        self.generators.push(g);
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    /// Image of a basis state under element `e`.
    #[inline]
    pub fn act(&self, e: usize, state: u32, n: usize) -> u32 {
        let (perm, flip) = &self.elements[e];
        let mut out = 0u32;
        for (i, &p) in perm.iter().enumerate() {
            out |= ((state >> i) & 1) << p;
        }
        if *flip {
            out ^= (1u32 << n) - 1;
        }
        out
    }

    /// Character of element `e` in irrep `q`.
    #[inline]
    pub fn character(q: usize, e: usize) -> f64 {
        if (q & e).count_ones() % 2 == 0 { 1.0 } else { -1.0 }
    }
}

/// Orbit structure of one sector under the group.
#[derive(Debug, Clone)]
pub struct SectorOrbits {
    /// Position of the orbit representative for every basis state.
    pub rep_of: Vec<u32>,
    /// Element mapping the representative to this state.
    pub elem_of: Vec<u16>,
    /// Representatives with orbit size and stabilizer elements.
    pub reps: Vec<(u32, usize, Vec<u16>)>,
}

pub fn sector_orbits(group: &InvolutionGroup, sector: &SectorBasis, basis: &BasisSet) -> SectorOrbits {
    let n = basis.n;
    let dim = sector.dim();
    let mut rep_of = vec![u32::MAX; dim];
    let mut elem_of = vec![0u16; dim];
    let mut reps = Vec::new();
    for (pos, &s) in sector.states.iter().enumerate() {
        if rep_of[pos] != u32::MAX {
            continue;
        }
        // states are visited in increasing order, so `s` is the orbit minimum
        let mut stab = Vec::new();
        let mut orbit = 0;
        for e in 0..group.order() {
            let t = group.act(e, s, n);
            let tp = basis.position(t);
            if t == s {
                stab.push(e as u16);
            }
            if rep_of[tp] == u32::MAX {
                rep_of[tp] = pos as u32;
                elem_of[tp] = e as u16;
                orbit += 1;
            }
        }
        reps.push((pos as u32, orbit, stab));
    }
    SectorOrbits { rep_of, elem_of, reps }
}

/// Dense block of `h` in irrep `q`; rows/columns follow `block_reps`.
pub struct SymmetryBlock {
    pub q: usize,
    pub reps: Vec<u32>,
    pub matrix: DMatrix<f64>,
}

/// Representatives compatible with irrep `q` (all stabilizer characters `+1`).
pub fn block_reps(orbits: &SectorOrbits, q: usize) -> Vec<(u32, usize)> {
    orbits
        .reps
        .iter()
        .filter(|(_, _, stab)| stab.iter().all(|&e| InvolutionGroup::character(q, e as usize) > 0.0))
        .map(|(r, size, _)| (*r, *size))
        .collect()
}

/// `M[r', r] = Σ_t H_{t,r} χ(g_t) √(|O_r| / |O_r'|)` over states `t` reached from `r`.
pub fn symmetrize(h: &SectorHamiltonian, orbits: &SectorOrbits, reps: &[(u32, usize)], q: usize) -> DMatrix<f64> {
    let mut col_of = vec![u32::MAX; h.dim];
    for (k, &(r, _)) in reps.iter().enumerate() {
        col_of[r as usize] = k as u32;
    }
    let d = reps.len();
    let mut m = DMatrix::<f64>::zeros(d, d);
    for (c, &(r, size_r)) in reps.iter().enumerate() {
        for (t, v) in h.row(r as usize) {
            let rp = orbits.rep_of[t] as usize;
            let row = col_of[rp];
            if row == u32::MAX {
                continue;
            }
            let size_rp = reps[row as usize].1;
            let chi = InvolutionGroup::character(q, orbits.elem_of[t] as usize);
            m[(row as usize, c)] += v * chi * (size_r as f64 / size_rp as f64).sqrt();
        }
    }
    m
}
