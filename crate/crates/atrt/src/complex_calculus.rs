//! Wirtinger calculus on the disc: ∂/∂̄, Dirichlet Poisson solves, elliptic splits,
//! Hodge decomposition of degree ±1 fields, Cauchy extension and the Poincaré constant.

use crate::error::{AtrtError, Result};
use crate::fields::quadrature::{barycentric_weights, bin, differentiation_matrix, fft_rows, freq};
use crate::fields::{DiscField, FiberField, PolarGrid, C64};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

const ZERO: C64 = C64::new(0.0, 0.0);
const FD_STEP: f64 = 2e-3;
const FD6: [(f64, f64); 6] = [
    (-3.0, -1.0 / 60.0),
    (-2.0, 9.0 / 60.0),
    (-1.0, -45.0 / 60.0),
    (1.0, 45.0 / 60.0),
    (2.0, -9.0 / 60.0),
    (3.0, 1.0 / 60.0),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wirtinger {
    /// ∂ = ½(∂x − i∂y)
    Del,
    /// ∂̄ = ½(∂x + i∂y)
    Dbar,
}

impl Wirtinger {
    pub fn conjugate(self) -> Self {
        match self {
            Wirtinger::Del => Wirtinger::Dbar,
            Wirtinger::Dbar => Wirtinger::Del,
        }
    }
}

/// ∂f or ∂̄f. Analytic inputs are differentiated by sixth-order central differences,
/// grid inputs spectrally (angular FFT, radial polynomial differentiation).
pub fn wirtinger(f: &DiscField, which: Wirtinger) -> DiscField {
    if let Some(a) = f.analytic_fn() {
        let s = if which == Wirtinger::Del { -1.0 } else { 1.0 };
        let g = move |z: C64| {
            let mut dx = ZERO;
            let mut dy = ZERO;
            for &(o, c) in &FD6 {
                dx += a(z + C64::new(o * FD_STEP, 0.0)) * c;
                dy += a(z + C64::new(0.0, o * FD_STEP)) * c;
            }
            (dx + C64::new(0.0, s) * dy) / (2.0 * FD_STEP)
        };
        return DiscField::analytic(f.grid(), &f.name, g);
    }
    spectral_wirtinger(f, which)
}

/// Wirtinger derivative applied to grid samples only (ignores any analytic evaluator).
pub fn spectral_wirtinger(f: &DiscField, which: Wirtinger) -> DiscField {
    let grid = f.grid();
    let (nr, nb) = (grid.n_rho(), grid.n_beta());
    let modes = f.modes();
    let d = grid.diff_matrix();
    let rho = grid.rho();
    let mut out = vec![ZERO; nr * nb];
    for b in 0..nb {
        if 2 * b == nb {
            continue;
        }
        let n = freq(b, nb);
        let m = if which == Wirtinger::Del { n - 1 } else { n + 1 };
        if 2 * m.abs() >= nb as i64 {
            continue;
        }
        let sgn = if which == Wirtinger::Del { 1.0 } else { -1.0 };
        let ob = bin(m, nb);
        for i in 0..nr {
            let mut dv = ZERO;
            for j in 0..nr {
                dv += modes[j * nb + b] * d[i * nr + j];
            }
            out[i * nb + ob] = (dv + modes[i * nb + b] * (sgn * n as f64 / rho[i])) * 0.5;
        }
    }
    DiscField::from_modes(grid, &f.name, out).expect("finite derivative")
}

/// Δf = 4∂̄∂f computed spectrally per angular mode.
pub fn laplacian(f: &DiscField) -> DiscField {
    let grid = f.grid();
    let (nr, nb) = (grid.n_rho(), grid.n_beta());
    let modes = f.modes();
    let d = grid.diff_matrix();
    let rho = grid.rho();
    let mut out = vec![ZERO; nr * nb];
    for b in 0..nb {
        if 2 * b == nb {
            continue;
        }
        let n2 = (freq(b, nb) as f64).powi(2);
        let col: Vec<C64> = (0..nr).map(|i| modes[i * nb + b]).collect();
        let d1: Vec<C64> = (0..nr).map(|i| (0..nr).map(|j| col[j] * d[i * nr + j]).sum()).collect();
        for i in 0..nr {
            let d2: C64 = (0..nr).map(|j| d1[j] * d[i * nr + j]).sum();
            out[i * nb + b] = d2 + d1[i] / rho[i] - col[i] * (n2 / (rho[i] * rho[i]));
        }
    }
    DiscField::from_modes(grid, &f.name, out).expect("finite laplacian")
}

/// Radial collocation operator on the Gauss–Legendre radii plus the boundary node ρ = 1.
struct RadialSystem {
    nodes: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

impl RadialSystem {
    fn new(grid: &PolarGrid) -> Self {
        let mut nodes = grid.rho().to_vec();
        nodes.push(1.0);
        let bary = barycentric_weights(&nodes);
        let d1 = differentiation_matrix(&nodes, &bary);
        let n = nodes.len();
        let mut d2 = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = d1[i * n + k];
                if a != 0.0 {
                    for j in 0..n {
                        d2[i * n + j] += a * d1[k * n + j];
                    }
                }
            }
        }
        Self { nodes, d1, d2 }
    }

    /// Solves ρ²v'' + ρv' − n²v = ρ²r at the interior nodes with v(1) = 0.
    fn solve(&self, n: i64, rhs: &[C64]) -> Result<Vec<C64>> {
        let m = self.nodes.len();
        let nr = m - 1;
        let n2 = (n * n) as f64;
        let mat = DMatrix::from_fn(m, m, |i, j| {
            if i == nr {
                if j == nr { 1.0 } else { 0.0 }
            } else {
                let r = self.nodes[i];
                r * r * self.d2[i * m + j] + r * self.d1[i * m + j] - if i == j { n2 } else { 0.0 }
            }
        });
        let lu = mat.lu();
        let mut re = nalgebra::DVector::zeros(m);
        let mut im = nalgebra::DVector::zeros(m);
        for i in 0..nr {
            let r2 = self.nodes[i] * self.nodes[i];
            re[i] = rhs[i].re * r2;
            im[i] = rhs[i].im * r2;
        }
        let xr = lu.solve(&re).ok_or(AtrtError::SolverFailure(n))?;
        let xi = lu.solve(&im).ok_or(AtrtError::SolverFailure(n))?;
        Ok((0..nr).map(|i| C64::new(xr[i], xi[i])).collect())
    }
}

/// v with Δv = rhs in M and v = 0 on ∂M.
pub fn poisson_dirichlet(rhs: &DiscField) -> Result<DiscField> {
    let grid = rhs.grid();
    let (nr, nb) = (grid.n_rho(), grid.n_beta());
    let sys = RadialSystem::new(grid);
    let modes = rhs.modes();
    let cols: Vec<Result<Vec<C64>>> = (0..nb)
        .into_par_iter()
        .map(|b| {
            if 2 * b == nb {
                return Ok(vec![ZERO; nr]);
            }
            let col: Vec<C64> = (0..nr).map(|i| modes[i * nb + b]).collect();
            sys.solve(freq(b, nb), &col)
        })
        .collect();
    let mut out = vec![ZERO; nr * nb];
    for (b, c) in cols.into_iter().enumerate() {
        for (i, v) in c?.into_iter().enumerate() {
            out[i * nb + b] = v;
        }
    }
    DiscField::from_modes(grid, &format!("poisson({})", rhs.name), out)
}

/// f = ∂v + g with ∂̄g = 0 (`Del`) or f = ∂̄v + g with ∂g = 0 (`Dbar`), v ∈ H¹₀.
#[derive(Clone, Debug)]
pub struct EllipticSplit {
    pub v: DiscField,
    pub g: DiscField,
    /// ‖∂̄g‖ (resp. ‖∂g‖) relative to ‖f‖.
    pub residual: f64,
    /// | ‖f‖² − ‖∂v‖² − ‖g‖² | / ‖f‖².
    pub norm_defect: f64,
}

pub fn elliptic_split(f: &DiscField, which: Wirtinger) -> Result<EllipticSplit> {
    let fg = f.to_grid_only();
    let rhs = spectral_wirtinger(&fg, which.conjugate()).scale(C64::new(4.0, 0.0));
    let v = poisson_dirichlet(&rhs)?;
    let dv = spectral_wirtinger(&v, which);
    let g = fg.sub(&dv);
    let fnorm = fg.norm_sq();
    let res = spectral_wirtinger(&g, which.conjugate()).norm();
    let (residual, norm_defect) = if fnorm > 0.0 {
        (res / fnorm.sqrt(), (fnorm - dv.norm_sq() - g.norm_sq()).abs() / fnorm)
    } else {
        (res, 0.0)
    };
    Ok(EllipticSplit { v, g, residual, norm_defect })
}

/// η₊u = e^{iθ}∂u: mode k ↦ ∂u_k in mode k+1.
pub fn eta_plus(u: &FiberField) -> FiberField {
    eta(u, Wirtinger::Del)
}

/// η₋u = e^{−iθ}∂̄u: mode k ↦ ∂̄u_k in mode k−1.
pub fn eta_minus(u: &FiberField) -> FiberField {
    eta(u, Wirtinger::Dbar)
}

fn eta(u: &FiberField, which: Wirtinger) -> FiberField {
    let shift = if which == Wirtinger::Del { 1 } else { -1 };
    let mut out = FiberField::zeros(u.grid(), u.k_max() + 1);
    for (&k, f) in u.stored_modes() {
        out.accumulate(k + shift, &wirtinger(f, which)).expect("k_max grown by one");
    }
    out
}

/// X = η₊ + η₋.
pub fn x_op(u: &FiberField) -> FiberField {
    eta_plus(u).add(&eta_minus(u))
}

/// X⊥ = (1/i)(η₊ − η₋).
pub fn x_perp(u: &FiberField) -> FiberField {
    eta_plus(u).sub(&eta_minus(u)).scale(C64::new(0.0, -1.0))
}

/// Result of a Hodge decomposition V = Xg + X⊥h of a degree-±1 field.
#[derive(Clone, Debug)]
pub struct Hodge {
    pub g: DiscField,
    pub h: DiscField,
    /// ‖V − Xg − X⊥h‖ / ‖V‖ on SM.
    pub residual: f64,
}

/// V = v₁e^{iθ} + v₋₁e^{−iθ} = Xg + X⊥h with g ∈ H¹₀ and h of zero boundary mean.
pub fn hodge_decompose(v: &FiberField) -> Result<Hodge> {
    let grid = v.grid().clone();
    let v1 = v.mode(1).to_grid_only();
    let vm = v.mode(-1).to_grid_only();
    let dv1 = spectral_wirtinger(&v1, Wirtinger::Dbar);
    let dvm = spectral_wirtinger(&vm, Wirtinger::Del);
    let g = poisson_dirichlet(&dv1.add(&dvm).scale(C64::new(2.0, 0.0)))?;
    let hp = poisson_dirichlet(&dv1.sub(&dvm).scale(C64::new(0.0, 2.0)))?;
    // remaining mismatch is fixed by a harmonic function Σ c_n z^n + d_n z̄^n
    let r1 = v1.sub(&spectral_wirtinger(&g, Wirtinger::Del)).add(&spectral_wirtinger(&hp, Wirtinger::Del).scale(C64::new(0.0, 1.0)));
    let rm = vm.sub(&spectral_wirtinger(&g, Wirtinger::Dbar)).sub(&spectral_wirtinger(&hp, Wirtinger::Dbar).scale(C64::new(0.0, 1.0)));
    let pts = grid.points();
    let nmax = (grid.n_beta() / 2) as i32 - 1;
    let mut harmonic = vec![ZERO; grid.len()];
    for n in 1..=nmax {
        let basis: Vec<C64> = pts.iter().map(|z| z.powi(n - 1)).collect();
        let bf = DiscField::from_values(&grid, "basis", basis.clone())?;
        let nrm = PI / n as f64;
        // −i n c_n z^{n-1} ≈ r1 and i n d_n z̄^{n-1} ≈ rm
        let c = r1.inner(&bf) / (nrm * C64::new(0.0, -(n as f64)));
        let d = rm.inner(&bf.conj()) / (nrm * C64::new(0.0, n as f64));
        for (hv, z) in harmonic.iter_mut().zip(&pts) {
            *hv += c * z.powi(n) + d * z.conj().powi(n);
        }
    }
    let h = hp.add(&DiscField::from_values(&grid, "harmonic", harmonic)?);
    let xg = x_op(&FiberField::from_disc(g.clone(), 1));
    let xh = x_perp(&FiberField::from_disc(h.clone(), 1));
    let vn = v.truncate(1).parseval_norm();
    let rn = v.truncate(1).sub(&xg).sub(&xh).parseval_norm();
    let residual = if vn > 0.0 { rn / vn } else { rn };
    Ok(Hodge { g, h, residual })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Holomorphy {
    Holo,
    Antiholo,
}

/// Extension of boundary data into the disc with the dropped-mode diagnostic.
#[derive(Clone, Debug)]
pub struct CauchyExtension {
    pub field: DiscField,
    /// √(Σ|b_k|²) over the modes inconsistent with the requested holomorphy.
    pub residual: f64,
    /// Fourier coefficients b_k, k = 0, 1, … of the kept side.
    pub coeffs: Vec<C64>,
}

/// Σ_{k≥0} b_k z^k (`Holo`) or Σ_{k≥0} b_{−k} z̄^k (`Antiholo`) from uniform boundary samples.
pub fn cauchy_extend(samples: &[C64], grid: &Arc<PolarGrid>, which: Holomorphy) -> CauchyExtension {
    let n = samples.len();
    let mut c = samples.to_vec();
    fft_rows(&mut c, n, false);
    c.iter_mut().for_each(|v| *v /= n as f64);
    let half = n.div_ceil(2);
    let mut kept = Vec::new();
    let mut dropped = 0.0;
    for k in 0..half {
        let (keep, drop) = match which {
            Holomorphy::Holo => (c[k], if k > 0 { c[n - k] } else { ZERO }),
            Holomorphy::Antiholo => (if k > 0 { c[n - k] } else { c[0] }, if k > 0 { c[k] } else { ZERO }),
        };
        kept.push(keep);
        dropped += drop.norm_sqr();
    }
    if n % 2 == 0 {
        dropped += c[n / 2].norm_sqr();
    }
    let coeffs = kept.clone();
    let field = DiscField::analytic(grid, "cauchy", move |z| {
        let w = if which == Holomorphy::Holo { z } else { z.conj() };
        let mut acc = ZERO;
        for b in kept.iter().rev() {
            acc = acc * w + b;
        }
        acc
    });
    CauchyExtension { field, residual: dropped.sqrt(), coeffs }
}

/// J₀ by its power series (accurate for |x| ≤ 4).
pub fn bessel_j0(x: f64) -> f64 {
    let q = -(x * x) / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= q / (k * k) as f64;
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// C_P = 1/j₀,₁², the inverse first Dirichlet eigenvalue of the unit disc.
pub fn poincare_constant() -> f64 {
    let (mut lo, mut hi) = (2.0f64, 3.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bessel_j0(lo) * bessel_j0(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let j = 0.5 * (lo + hi);
    1.0 / (j * j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Arc<PolarGrid> {
        PolarGrid::new(24, 32).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn wirtinger_examples() {
        let g = grid();
        let z = DiscField::analytic(&g, "z", |z| z);
        let zb = DiscField::analytic(&g, "zb", |z| z.conj());
        let r = DiscField::analytic(&g, "r", |z| c(z.norm_sqr() - 1.0, 0.0));
        for f in [z.clone(), z.to_grid_only()] {
            let d = wirtinger(&f, Wirtinger::Del);
            let db = wirtinger(&f, Wirtinger::Dbar);
            assert!(d.sub(&DiscField::constant(&g, "1", c(1.0, 0.0))).to_grid_only().max_abs() < 1e-10);
            assert!(db.max_abs() < 1e-10);
        }
        for f in [zb.clone(), zb.to_grid_only()] {
            assert!(wirtinger(&f, Wirtinger::Dbar).sub(&DiscField::constant(&g, "1", c(1.0, 0.0))).to_grid_only().max_abs() < 1e-10);
        }
        for f in [r.clone(), r.to_grid_only()] {
            assert!(wirtinger(&f, Wirtinger::Del).sub(&zb).to_grid_only().max_abs() < 1e-10);
        }
    }

    #[test]
    fn poisson_examples() {
        let g = grid();
        let v = poisson_dirichlet(&DiscField::constant(&g, "4", c(4.0, 0.0))).unwrap();
        let exact = DiscField::analytic(&g, "e", |z| c(z.norm_sqr() - 1.0, 0.0));
        let e = v.sub(&exact).to_grid_only().max_abs();
        assert!(e < 1e-10, "{e}");
        assert!(poisson_dirichlet(&DiscField::zeros(&g, "0")).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn poisson_residual_on_band_limited_rhs() {
        let g = PolarGrid::new(32, 32).unwrap();
        let rhs = DiscField::analytic(&g, "r", |z| z * z * z.conj() + c(0.5, -1.0) * z.conj().powi(4) + c(1.0, 0.0)).to_grid_only();
        let v = poisson_dirichlet(&rhs).unwrap();
        let res = laplacian(&v).sub(&rhs).norm() / rhs.norm();
        assert!(res < 1e-8, "{res}");
        assert!(v.boundary_values(16).iter().all(|b| b.norm() < 1e-10));
    }

    #[test]
    fn laplacian_is_four_dbar_del() {
        let g = grid();
        let f = DiscField::analytic(&g, "f", |z| z.powi(3) * z.conj().powi(2) + z.conj()).to_grid_only();
        let a = laplacian(&f);
        let b = spectral_wirtinger(&spectral_wirtinger(&f, Wirtinger::Del), Wirtinger::Dbar).scale(c(4.0, 0.0));
        assert!(a.sub(&b).max_abs() < 1e-9);
    }

    #[test]
    fn elliptic_split_examples() {
        let g = grid();
        let s = elliptic_split(&DiscField::analytic(&g, "zb", |z| z.conj()), Wirtinger::Del).unwrap();
        assert!(s.g.max_abs() < 1e-10);
        assert!(s.v.sub(&DiscField::analytic(&g, "e", |z| c(z.norm_sqr() - 1.0, 0.0))).to_grid_only().max_abs() < 1e-10);
        let s = elliptic_split(&DiscField::analytic(&g, "z3", |z| z.powi(3)), Wirtinger::Del).unwrap();
        assert!(s.v.max_abs() < 1e-10);
        let f = DiscField::analytic(&g, "m", |z| z * z.conj() * z.conj() + c(0.0, 2.0) * z.powi(2) + z.conj().powi(3));
        let s = elliptic_split(&f, Wirtinger::Del).unwrap();
        assert!(s.residual < 1e-6 && s.norm_defect < 1e-6, "{} {}", s.residual, s.norm_defect);
        let s = elliptic_split(&f, Wirtinger::Dbar).unwrap();
        assert!(s.residual < 1e-6 && s.norm_defect < 1e-6, "{} {}", s.residual, s.norm_defect);
    }

    #[test]
    fn hodge_examples() {
        let g = grid();
        let g0 = DiscField::analytic(&g, "g0", |z| c(1.0 - z.norm_sqr(), 0.0) * (z + c(0.3, 0.0)));
        let v = x_op(&FiberField::from_disc(g0.clone(), 1));
        let hd = hodge_decompose(&v).unwrap();
        assert!(hd.g.sub(&g0).to_grid_only().max_abs() < 1e-8);
        assert!(hd.h.max_abs() < 1e-8);
        let h0 = DiscField::analytic(&g, "h0", |z| c(1.0 - z.norm_sqr(), 0.0));
        let v = x_perp(&FiberField::from_disc(h0.clone(), 1));
        let hd = hodge_decompose(&v).unwrap();
        assert!(hd.g.max_abs() < 1e-8);
        assert!(hd.h.sub(&h0).to_grid_only().max_abs() < 1e-8);
        // boundary-supported harmonic part
        let hz = DiscField::analytic(&g, "z2", |z| z * z + z.conj() * c(0.0, 0.5));
        let v = x_perp(&FiberField::from_disc(hz.clone(), 1));
        let hd = hodge_decompose(&v).unwrap();
        assert!(hd.h.sub(&hz).to_grid_only().max_abs() < 1e-8);
        assert!(hd.residual < 1e-8);
    }

    #[test]
    fn cauchy_examples() {
        let g = grid();
        let n = 32;
        let b: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, 3.0 * 2.0 * PI * j as f64 / n as f64)).collect();
        let e = cauchy_extend(&b, &g, Holomorphy::Holo);
        assert!((e.field.eval(c(0.3, 0.4)) - c(0.3, 0.4).powi(3)).norm() < 1e-13);
        assert!(e.residual < 1e-13);
        let b: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, -2.0 * PI * j as f64 / n as f64)).collect();
        let e = cauchy_extend(&b, &g, Holomorphy::Holo);
        assert!(e.field.max_abs() < 1e-13);
        assert!((e.residual - 1.0).abs() < 1e-13);
        let e = cauchy_extend(&b, &g, Holomorphy::Antiholo);
        assert!((e.field.eval(c(0.3, 0.4)) - c(0.3, -0.4)).norm() < 1e-13);
        let one = vec![c(1.0, 0.0); n];
        for w in [Holomorphy::Holo, Holomorphy::Antiholo] {
            assert!((cauchy_extend(&one, &g, w).field.eval(c(0.1, 0.2)) - 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn poincare_constant_value_and_inequality() {
        let cp = poincare_constant();
        // j₀,₁ = 2.404825557695773
        assert!((cp - 1.0 / 2.404825557695773f64.powi(2)).abs() < 1e-13, "{cp}");
        assert!((cp - 0.1729151).abs() < 1e-7);
        let g = grid();
        let v = DiscField::analytic(&g, "v", |z| c(1.0 - z.norm_sqr(), 0.0));
        // |∇v|² = 4|∂v|² for real v
        let grad = wirtinger(&v, Wirtinger::Del).norm_sq() * 4.0;
        assert!(v.norm_sq() <= cp * grad);
        let j = 1.0 / cp.sqrt();
        let eig = DiscField::analytic(&g, "J0", move |z| c(bessel_j0(j * z.norm()), 0.0));
        let grad = wirtinger(&eig, Wirtinger::Del).norm_sq() * 4.0;
        assert!((eig.norm_sq() / (cp * grad) - 1.0).abs() < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn elliptic_split_annihilates(a in -1.0f64..1.0, b in -1.0f64..1.0, p in 0i32..4, q in 0i32..4) {
            let g = grid();
            let f = DiscField::analytic(&g, "f", move |z| c(a, b) * z.powi(p) * z.conj().powi(q) + c(b, 0.0) * z.conj());
            let s = elliptic_split(&f, Wirtinger::Del).unwrap();
            prop_assert!(s.residual < 1e-6);
            prop_assert!(s.v.boundary_values(8).iter().all(|v| v.norm() < 1e-9));
        }
    }
}
