//! Quadrature rules used by the prior and Fisher modules.
//!
//! Expectations of smooth steering products against one Gaussian component
//! use Gauss-Hermite. Integrals whose integrand mixes all components (the
//! prior Fisher term, the average CRB) use composite Simpson over the merged
//! effective support, with one step halving for an error estimate.

use alloc::vec::Vec;

/// Accuracy knobs shared by the quadrature-backed operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss-Hermite nodes per mixture component.
    pub hermite_nodes: usize,
    /// Node count of the reference rule used for the error estimate.
    pub hermite_check_nodes: usize,
    /// Relative Frobenius tolerance on the moment error estimate.
    pub moment_tolerance: f64,
    /// Simpson step is at most `σ_min / simpson_divisor`.
    pub simpson_divisor: f64,
    /// Relative tolerance on Simpson error estimates.
    pub simpson_tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            hermite_nodes: 60,
            hermite_check_nodes: 90,
            moment_tolerance: 1e-8,
            simpson_divisor: 20.0,
            simpson_tolerance: 1e-6,
        }
    }
}

/// Gauss-Hermite rule for `∫ e^{-x²} f(x) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes from the eigenvalues of the Jacobi matrix, each polished by
    /// Newton iteration on the orthonormal Hermite recurrence, which also
    /// yields the weight.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        // π^{-1/4}
        const PIM4: f64 = 0.751_125_544_464_942_5;
        let nf = n as f64;
        let jacobi = nalgebra::DMatrix::<f64>::from_fn(n, n, |i, j| {
            if i + 1 == j || j + 1 == i {
                libm::sqrt(i.max(j) as f64 / 2.0)
            } else {
                0.0
            }
        });
        let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        guesses.sort_by(|a, b| b.total_cmp(a));
        let mut x = alloc::vec![0.0; n];
        let mut w = alloc::vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = guesses[i];
            if n % 2 == 1 && i == m - 1 {
                z = 0.0;
            }
            let mut pp = 0.0;
            for _ in 0..20 {
                let mut p1 = PIM4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * libm::sqrt(2.0 / (jf + 1.0)) * p2 - libm::sqrt(jf / (jf + 1.0)) * p3;
                }
                pp = libm::sqrt(2.0 * nf) * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        Self {
            nodes: x,
            weights: w,
        }
    }

    /// Nodes and weights for `E[f(θ)]` with `θ ~ N(mean, variance)`.
    pub fn gaussian_points(&self, mean: f64, variance: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let scale = libm::sqrt(2.0 * variance);
        let norm = 1.0 / libm::sqrt(core::f64::consts::PI);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mean + scale * x, w * norm))
    }
}

/// Composite Simpson result at step `h/2`, with the halving error estimate
/// `|S(h/2) - S(h)| / 15`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpsonEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

/// Simpson over a union of disjoint intervals, evaluating `f` once per node of
/// the fine grid. `f` may return several integrands at once; each gets its
/// own estimate.
pub fn simpson_multi<const N: usize, F>(intervals: &[(f64, f64)], max_step: f64, mut f: F) -> [SimpsonEstimate; N]
where
    F: FnMut(f64) -> [f64; N],
{
    let mut coarse = [0.0; N];
    let mut fine = [0.0; N];
    for &(lo, hi) in intervals {
        let len = hi - lo;
        if len <= 0.0 {
            continue;
        }
        // coarse grid has 2m panels of width h; fine grid has 4m of width h/2
        let mut panels = libm::ceil(len / max_step) as usize;
        panels += panels % 2;
        let panels = panels.max(2);
        let fine_panels = 2 * panels;
        let hf = len / fine_panels as f64;
        let hc = 2.0 * hf;
        for k in 0..=fine_panels {
            let vals = f(lo + k as f64 * hf);
            let wf = if k == 0 || k == fine_panels {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let wc = if k % 2 == 1 {
                0.0
            } else {
                let kc = k / 2;
                if kc == 0 || kc == panels {
                    1.0
                } else if kc % 2 == 1 {
                    4.0
                } else {
                    2.0
                }
            };
            for j in 0..N {
                fine[j] += wf * hf / 3.0 * vals[j];
                coarse[j] += wc * hc / 3.0 * vals[j];
            }
        }
    }
    core::array::from_fn(|j| SimpsonEstimate {
        value: fine[j],
        error_estimate: (fine[j] - coarse[j]).abs() / 15.0,
    })
}

/// Merges possibly overlapping intervals into a sorted disjoint union.
pub fn merge_intervals(mut intervals: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for (lo, hi) in intervals {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmax, max)`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut lo: f64, mut hi: f64, tol: f64, mut f: F) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid);
    [(x1, f1), (x2, f2), (mid, fm)]
        .into_iter()
        .fold((mid, fm), |best, c| if c.1 > best.1 { c } else { best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hermite_moments() {
        for n in [1, 2, 3, 5, 20, 60, 90, 200] {
            let gh = GaussHermite::new(n);
            let w0: f64 = gh.weights.iter().sum();
            assert!((w0 - PI.sqrt()).abs() < 1e-13, "n={n}: {w0}");
            if n >= 2 {
                let w2: f64 = gh.nodes.iter().zip(&gh.weights).map(|(x, w)| w * x * x).sum();
                assert!((w2 - PI.sqrt() / 2.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn hermite_integrates_cosine() {
        let gh = GaussHermite::new(20);
        let v: f64 = gh.nodes.iter().zip(&gh.weights).map(|(x, w)| w * x.cos()).sum();
        assert!((v - PI.sqrt() * (-0.25f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn gaussian_expectation_of_square() {
        let gh = GaussHermite::new(10);
        let m: f64 = gh.gaussian_points(0.7, 0.04).map(|(t, w)| w * t * t).sum();
        assert!((m - (0.49 + 0.04)).abs() < 1e-14);
    }

    #[test]
    fn simpson_is_exact_for_cubics_and_estimates_error() {
        let [est] = simpson_multi(&[(0.0, 1.0), (2.0, 3.0)], 0.1, |x| [x * x * x]);
        let exact = 0.25 + (81.0 - 16.0) / 4.0;
        assert!((est.value - exact).abs() < 1e-12);
        assert!(est.error_estimate < 1e-12);

        let [e] = simpson_multi(&[(0.0, PI)], 0.05, |x| [x.sin()]);
        assert!((e.value - 2.0).abs() < 1e-7);
        let actual = (e.value - 2.0).abs();
        // halving estimate tracks the true error of the coarse rule within a factor of ~20
        assert!(e.error_estimate > actual && e.error_estimate < 40.0 * actual.max(1e-16));
    }

    #[test]
    fn merge_overlapping() {
        let m = merge_intervals(alloc::vec![(2.0, 3.0), (0.0, 1.0), (0.5, 1.5), (3.0, 4.0)]);
        assert_eq!(m, alloc::vec![(0.0, 1.5), (2.0, 4.0)]);
    }

    #[test]
    fn golden_section_finds_peak() {
        let (x, v) = golden_section_max(0.0, 2.0, 1e-9, |x| -(x - 0.7) * (x - 0.7));
        assert!((x - 0.7).abs() < 1e-8);
        assert!(v <= 0.0 && v > -1e-15);
    }
}
