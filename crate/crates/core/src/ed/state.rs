use num_complex::Complex64;

use super::basis::BasisSet;
use super::hamiltonian::SectorHamiltonian;

/// Many-body state stored as one amplitude block per `J^z` sector
/// (index = number of up spins).
#[derive(Debug, Clone, PartialEq)]
pub struct SectorState {
    pub n: usize,
    pub t: f64,
    pub blocks: Vec<Vec<Complex64>>,
}

/// `|→⟩^{⊗N}`: amplitude `2^{−N/2}` on every basis state.
pub fn css_state(basis: &BasisSet) -> SectorState {
    let a = Complex64::new(0.5f64.powf(0.5 * basis.n as f64), 0.0);
    SectorState {
        n: basis.n,
        t: 0.0,
        blocks: basis.sectors.iter().map(|s| vec![a; s.dim()]).collect(),
    }
}

impl SectorState {
    pub fn sector_weights(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| b.iter().map(|x| x.norm_sqr()).sum()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sector_weights().iter().sum()
    }

    /// `⟨ψ|H|ψ⟩` with one Hamiltonian per sector.
    pub fn energy(&self, hams: &[SectorHamiltonian]) -> f64 {
        self.blocks
            .iter()
            .zip(hams)
            .map(|(b, h)| {
                let mut w = vec![Complex64::default(); b.len()];
                h.apply(b, &mut w);
                b.iter().zip(&w).map(|(x, y)| (x.conj() * y).re).sum::<f64>()
            })
            .sum()
    }
}
