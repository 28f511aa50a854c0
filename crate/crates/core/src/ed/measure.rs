use num_complex::Complex64;

use super::basis::BasisSet;
use super::state::SectorState;
use crate::collective::{CollectiveMoments, RaisingMoments};
use crate::par::Exec;

/// `J⁺` applied to the block with `n_up` up spins; result lives in `n_up + 1`.
pub fn apply_raise(basis: &BasisSet, n_up: usize, psi: &[Complex64]) -> Vec<Complex64> {
    let n = basis.n;
    let mut out = vec![Complex64::default(); basis.sector(n_up + 1).dim()];
    for (&s, &a) in basis.sector(n_up).states.iter().zip(psi) {
        for i in 0..n {
            if s & (1 << i) == 0 {
                out[basis.position(s | (1 << i))] += a;
            }
        }
    }
    out
}

/// `J⁻` applied to the block with `n_up` up spins; result lives in `n_up − 1`.
pub fn apply_lower(basis: &BasisSet, n_up: usize, psi: &[Complex64]) -> Vec<Complex64> {
    let n = basis.n;
    let mut out = vec![Complex64::default(); basis.sector(n_up - 1).dim()];
    for (&s, &a) in basis.sector(n_up).states.iter().zip(psi) {
        for i in 0..n {
            if s & (1 << i) != 0 {
                out[basis.position(s & !(1 << i))] += a;
            }
        }
    }
    out
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Exact collective moments from cross-sector `J^±` maps:
/// `⟨J⁺⟩ = Σ_s ⟨ψ_{s+1}|J⁺ψ_s⟩`, `⟨J⁺²⟩ = Σ_s ⟨J⁻ψ_{s+2}|J⁺ψ_s⟩`,
/// `⟨J_x² + J_y²⟩ = ½ Σ_s (‖J⁺ψ_s‖² + ‖J⁻ψ_s‖²)`.
pub fn measure_collective(state: &SectorState, basis: &BasisSet, exec: Exec) -> CollectiveMoments {
    let n = state.n;
    let parts = exec.map_range(n + 1, |k| {
        let psi = &state.blocks[k];
        let sz = k as f64 - 0.5 * n as f64;
        let w: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
        let mut r = RaisingMoments { norm: w, jz: w * sz, jz2: w * sz * sz, ..Default::default() };
        if k < n {
            let up = apply_raise(basis, k, psi);
            let z = inner(&state.blocks[k + 1], &up);
            r.jp = z;
            r.jp_jz = z * (2.0 * sz + 1.0);
            r.perp2 += 0.5 * up.iter().map(|x| x.norm_sqr()).sum::<f64>();
            if k + 2 <= n {
                let down = apply_lower(basis, k + 2, &state.blocks[k + 2]);
                r.jp2 = inner(&down, &up);
            }
        }
        if k > 0 {
            let down = apply_lower(basis, k, psi);
            r.perp2 += 0.5 * down.iter().map(|x| x.norm_sqr()).sum::<f64>();
        }
        r
    });
    let mut total = RaisingMoments::default();
    for p in parts {
        total += p;
    }
    total.to_moments(state.t, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::state::css_state;

    #[test]
    fn css_moments() {
        for n in [1, 2, 7, 12] {
            let basis = BasisSet::new(n).unwrap();
            let m = measure_collective(&css_state(&basis), &basis, Exec::default());
            let nf = n as f64;
            let expect = CollectiveMoments::coherent_x(n);
            for a in 0..3 {
                assert!((m.mean[a] - expect.mean[a]).abs() < 1e-12);
                for b in 0..3 {
                    assert!((m.second[a][b] - expect.second[a][b]).abs() < 1e-11, "n={n} {a}{b}");
                }
            }
            assert!((m.variance(1) - nf / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn raise_and_lower_are_adjoint() {
        let basis = BasisSet::new(6).unwrap();
        let a: Vec<Complex64> =
            (0..basis.sector(2).dim()).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let b: Vec<Complex64> =
            (0..basis.sector(3).dim()).map(|i| Complex64::new((i * i) as f64, 0.5)).collect();
        let lhs = inner(&b, &apply_raise(&basis, 2, &a));
        let rhs = inner(&apply_lower(&basis, 3, &b), &a);
        assert!((lhs - rhs).norm() < 1e-10);
    }
}
