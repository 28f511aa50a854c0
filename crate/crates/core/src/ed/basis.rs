use crate::error::{Error, Result};

/// Largest system handled by the bitmask basis.
pub const MAX_SITES: usize = 24;

/// Basis states of one `J^z` sector: bitmasks with `n_up` set bits, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBasis {
    pub n: usize,
    pub n_up: usize,
    pub states: Vec<u32>,
}

impl SectorBasis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Total `J^z = n_up − N/2`.
    pub fn sz(&self) -> f64 {
        self.n_up as f64 - 0.5 * self.n as f64
    }
}

/// All `N + 1` sectors plus a global bitmask → in-sector position table.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    pub n: usize,
    pub sectors: Vec<SectorBasis>,
    index: Vec<u32>,
}

impl BasisSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_SITES {
            return Err(Error::Config(format!("ED supports 1..={MAX_SITES} sites, got {n}")));
        }
        let mut sectors: Vec<SectorBasis> =
            (0..=n).map(|n_up| SectorBasis { n, n_up, states: Vec::new() }).collect();
        let mut index = vec![0u32; 1 << n];
        for s in 0..(1u32 << n) {
            let sec = &mut sectors[s.count_ones() as usize];
            index[s as usize] = sec.states.len() as u32;
            sec.states.push(s);
        }
        Ok(Self { n, sectors, index })
    }

    #[inline]
    pub fn position(&self, state: u32) -> usize {
        self.index[state as usize] as usize
    }

    pub fn sector(&self, n_up: usize) -> &SectorBasis {
        &self.sectors[n_up]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sectors.iter().map(|s| s.dim()).collect()
    }
}

/// Binomial coefficient as `f64`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
