use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{check_finite, displacement_guard, CMatrix, Mode, TruncationFlag, C64, DEFAULT_CUTOFF_GUARD};
use crate::error::{Error, Result};
use crate::fock::FockCutoff;

/// A matrix on a single-mode or two-mode truncated space.
#[derive(Clone, Debug)]
pub struct ModeOperator {
    pub matrix: CMatrix,
    pub label: String,
}

impl ModeOperator {
    pub fn new(matrix: CMatrix, label: impl Into<String>) -> Self {
        Self {
            matrix,
            label: label.into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `‖U†U − I‖_max` restricted to the leading `levels × levels` block.
    pub fn unitarity_residual(&self, levels: usize) -> f64 {
        let n = levels.min(self.dim());
        let prod = self.matrix.adjoint() * &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((prod[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LadderKind {
    Annihilate,
    Create,
    Number,
}

/// `a`, `a†` or `n = a†a` on `cutoff_dim` levels.
pub fn ladder_operator(cutoff_dim: usize, kind: LadderKind) -> Result<ModeOperator> {
    if cutoff_dim < 2 {
        return Err(Error::InvalidCutoff(format!(
            "ladder operator needs at least 2 levels, got {cutoff_dim}"
        )));
    }
    let d = cutoff_dim;
    let mut m = CMatrix::zeros(d, d);
    let label = match kind {
        LadderKind::Annihilate => {
            for n in 1..d {
                m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
            }
            "a"
        }
        LadderKind::Create => {
            for n in 1..d {
                m[(n, n - 1)] = C64::new((n as f64).sqrt(), 0.0);
            }
            "a†"
        }
        LadderKind::Number => {
            for n in 0..d {
                m[(n, n)] = C64::new(n as f64, 0.0);
            }
            "n"
        }
    };
    Ok(ModeOperator::new(m, label))
}

/// Eigendecomposition of the truncated quadrature `a + a†` on `dim` levels.
struct QuadratureSpectrum {
    vectors: DMatrix<f64>,
    values: DVector<f64>,
}

fn quadrature_spectrum(dim: usize) -> Arc<QuadratureSpectrum> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureSpectrum>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&dim) {
        return Arc::clone(hit);
    }
    let mut x = DMatrix::<f64>::zeros(dim, dim);
    for n in 1..dim {
        let s = (n as f64).sqrt();
        x[(n - 1, n)] = s;
        x[(n, n - 1)] = s;
    }
    let eig = SymmetricEigen::new(x);
    let spectrum = Arc::new(QuadratureSpectrum {
        vectors: eig.eigenvectors,
        values: eig.eigenvalues,
    });
    cache
        .lock()
        .unwrap()
        .entry(dim)
        .or_insert_with(|| Arc::clone(&spectrum))
        .clone()
}

/// `⟨m|exp(α a† − α* a)|n⟩` for `m < rows`, `n < cols`, with the generator
/// truncated to `dim` levels.
///
/// Uses `α a† − α* a = −i R (a + a†) R†` with `R = exp(i(φ + π/2) n)`, so the
/// exponential reduces to the real spectrum of the truncated quadrature.
fn truncated_exponential_entries(alpha: C64, dim: usize, rows: usize, cols: usize) -> CMatrix {
    let r = alpha.norm();
    if r == 0.0 {
        return CMatrix::from_fn(rows, cols, |m, n| {
            if m == n {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
    }
    let spec = quadrature_spectrum(dim);
    let p = dim;
    let left = spec.vectors.rows(0, rows);
    let right = spec.vectors.rows(0, cols);
    let mut scaled_cos = DMatrix::<f64>::zeros(rows, p);
    let mut scaled_sin = DMatrix::<f64>::zeros(rows, p);
    for k in 0..p {
        let (s, c) = (r * spec.values[k]).sin_cos();
        for m in 0..rows {
            let u = left[(m, k)];
            scaled_cos[(m, k)] = u * c;
            scaled_sin[(m, k)] = -u * s;
        }
    }
    let re = &scaled_cos * right.transpose();
    let im = &scaled_sin * right.transpose();
    let phase = alpha.arg() + std::f64::consts::FRAC_PI_2;
    CMatrix::from_fn(rows, cols, |m, n| {
        let shift = (m as f64 - n as f64) * phase;
        C64::new(re[(m, n)], im[(m, n)]) * C64::from_polar(1.0, shift)
    })
}

/// Internal generator size that makes the `levels`-block of `D(α)` accurate
/// to machine precision.
pub(crate) fn padded_dimension(levels: usize, amplitude: f64) -> usize {
    let pad = 16.0 + 2.5 * amplitude * (levels as f64).sqrt() + amplitude * amplitude;
    let raw = levels + pad.ceil() as usize;
    raw.div_ceil(16) * 16
}

/// Result of [`displacement_operator`].
#[derive(Clone, Debug)]
pub struct Displacement {
    pub operator: ModeOperator,
    /// `‖D†D − I‖_max` over the represented levels.
    pub unitarity_residual: f64,
    pub warning: Option<TruncationFlag>,
}

/// `exp(α a† − α* a)` with the generator truncated to `cutoff_dim` levels.
pub fn displacement_operator(alpha: C64, cutoff_dim: usize) -> Result<Displacement> {
    check_finite(alpha, "displacement amplitude")?;
    if cutoff_dim < 2 {
        return Err(Error::InvalidCutoff(format!(
            "displacement needs at least 2 levels, got {cutoff_dim}"
        )));
    }
    let matrix = truncated_exponential_entries(alpha, cutoff_dim, cutoff_dim, cutoff_dim);
    let operator = ModeOperator::new(matrix, format!("D({}{:+}i)", alpha.re, alpha.im));
    let unitarity_residual = operator.unitarity_residual(cutoff_dim);
    let warning = displacement_guard(Mode::A, alpha, cutoff_dim, DEFAULT_CUTOFF_GUARD);
    Ok(Displacement {
        operator,
        unitarity_residual,
        warning,
    })
}

/// Leading `rows × cols` block of the untruncated displacement `D(α)`,
/// computed from a padded generator.
pub fn displacement_block(alpha: C64, rows: usize, cols: usize) -> CMatrix {
    let dim = padded_dimension(rows.max(cols), alpha.norm());
    truncated_exponential_entries(alpha, dim, rows, cols)
}

/// Mode-transformation matrix `M` with `U†(a, b)ᵀU = M (a, b)ᵀ`:
/// `a → √τ e^{iθ} a + √(1−τ) b`, `b → √(1−τ) e^{iθ} a − √τ b`.
fn beamsplitter_modes(tau: f64, phase: f64) -> [[C64; 2]; 2] {
    let t = tau.sqrt();
    let r = (1.0 - tau).sqrt();
    let e = C64::from_polar(1.0, phase);
    [[e * t, C64::new(r, 0.0)], [e * r, C64::new(-t, 0.0)]]
}

/// Hermitian `H` with `exp(iH) = M` for a 2×2 unitary `M`.
fn unitary_log(m: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr - det * 4.0).sqrt();
    let l1 = (tr + disc) * 0.5;
    let l2 = (tr - disc) * 0.5;
    if (l1 - l2).norm() < 1e-12 {
        let a = l1.arg();
        let z = C64::new(0.0, 0.0);
        return [[C64::new(a, 0.0), z], [z, C64::new(a, 0.0)]];
    }
    let eigvec = |l: C64| {
        let v1 = [m[0][1], l - m[0][0]];
        let v2 = [l - m[1][1], m[1][0]];
        let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
        let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
        let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
        let n = n.sqrt();
        [v[0] / n, v[1] / n]
    };
    let v1 = eigvec(l1);
    let v2 = eigvec(l2);
    let (a1, a2) = (l1.arg(), l2.arg());
    let mut h = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            h[i][j] = v1[i] * v1[j].conj() * a1 + v2[i] * v2[j].conj() * a2;
        }
    }
    h
}

/// Exact action of the beamsplitter on the `n`-photon sector, basis
/// `|p, n−p⟩` for `p = 0..=n` (index = photons in mode a).
pub fn mode_transform_in_sector(tau: f64, phase: f64, n: usize) -> CMatrix {
    let h = unitary_log(&beamsplitter_modes(tau, phase));
    let size = n + 1;
    let mut g = CMatrix::zeros(size, size);
    for p in 0..=n {
        let q = n - p;
        g[(p, p)] = h[0][0] * p as f64 + h[1][1] * q as f64;
        if q > 0 {
            // a†b |p, q⟩ = √((p+1) q) |p+1, q−1⟩
            g[(p + 1, p)] += h[0][1] * (((p + 1) * q) as f64).sqrt();
        }
        if p > 0 {
            // b†a |p, q⟩ = √(p (q+1)) |p−1, q+1⟩
            g[(p - 1, p)] += h[1][0] * ((p * (q + 1)) as f64).sqrt();
        }
    }
    let eig = SymmetricEigen::new(super::hermitian_part(&g));
    let phases = CMatrix::from_diagonal(&eig.eigenvalues.map(|v| C64::from_polar(1.0, v)));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Two-mode beamsplitter with `U† a U = √τ e^{iθ} a + √(1−τ) b` and
/// `U† b U = √(1−τ) e^{iθ} a − √τ b`. At τ = 1/2 this is the balanced
/// splitter `c_θ = (e^{iθ}a + b)/√2`, `d_θ = (e^{iθ}a − b)/√2`.
pub fn beamsplitter_unitary(transmittivity: f64, phase: f64, cutoff: FockCutoff) -> Result<ModeOperator> {
    if !(0.0..=1.0).contains(&transmittivity) {
        return Err(Error::InvalidArgument(format!(
            "transmittivity {transmittivity} outside [0, 1]"
        )));
    }
    if !phase.is_finite() {
        return Err(Error::InvalidArgument("phase is not finite".into()));
    }
    if cutoff.dim_a() != cutoff.dim_b() {
        return Err(Error::InvalidCutoff(format!(
            "beamsplitter needs a square two-mode space, got {cutoff}"
        )));
    }
    let d = cutoff.dim_a();
    let mut u = CMatrix::zeros(d * d, d * d);
    for n in 0..=(2 * d - 2) {
        let sector = mode_transform_in_sector(transmittivity, phase, n);
        let lo = n.saturating_sub(d - 1);
        let hi = n.min(d - 1);
        for p_out in lo..=hi {
            for p_in in lo..=hi {
                u[(cutoff.index(p_out, n - p_out), cutoff.index(p_in, n - p_in))] =
                    sector[(p_out, p_in)];
            }
        }
    }
    Ok(ModeOperator::new(
        u,
        format!("BS(tau={transmittivity}, theta={phase})"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn ladder_entries() {
        let a2 = ladder_operator(2, LadderKind::Annihilate).unwrap().matrix;
        assert_eq!(a2[(0, 1)], c(1.0, 0.0));
        assert_eq!(a2.iter().filter(|z| z.norm() > 0.0).count(), 1);
        let a3 = ladder_operator(3, LadderKind::Annihilate).unwrap().matrix;
        assert!((a3[(1, 2)].re - std::f64::consts::SQRT_2).abs() < 1e-12);
        let n4 = ladder_operator(4, LadderKind::Number).unwrap().matrix;
        for k in 0..4 {
            assert_eq!(n4[(k, k)].re, k as f64);
        }
        assert!(matches!(
            ladder_operator(1, LadderKind::Create),
            Err(Error::InvalidCutoff(_))
        ));
    }

    #[test]
    fn number_is_create_times_annihilate() {
        for d in 2..8 {
            let a = ladder_operator(d, LadderKind::Annihilate).unwrap().matrix;
            let ad = ladder_operator(d, LadderKind::Create).unwrap().matrix;
            let n = ladder_operator(d, LadderKind::Number).unwrap().matrix;
            // √n·√n is exact up to one rounding.
            assert!((&ad * &a - n).camax() < 1e-14);
        }
    }

    #[test]
    fn commutator_is_identity_below_top_level() {
        let d = 9;
        let a = ladder_operator(d, LadderKind::Annihilate).unwrap().matrix;
        let ad = ladder_operator(d, LadderKind::Create).unwrap().matrix;
        let comm = &a * &ad - &ad * &a;
        for i in 0..d - 1 {
            for j in 0..d - 1 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((comm[(i, j)] - c(target, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_displacement_is_identity() {
        let d = displacement_operator(c(0.0, 0.0), 6).unwrap();
        assert_eq!(d.operator.matrix, CMatrix::identity(6, 6));
        assert_eq!(d.unitarity_residual, 0.0);
    }

    #[test]
    fn vacuum_overlap_of_displacement() {
        let d = displacement_operator(c(1.0, 0.0), 40).unwrap();
        assert!((d.operator.matrix[(0, 0)].re - (-0.5f64).exp()).abs() < 1e-10);
        assert!(d.operator.matrix[(0, 0)].im.abs() < 1e-10);
        assert!(d.warning.is_none());
    }

    #[test]
    fn displacement_rejects_nan() {
        assert!(matches!(
            displacement_operator(c(f64::NAN, 0.0), 4),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn displacement_warns_beyond_guard() {
        let d = displacement_operator(c(2.0, 0.0), 8).unwrap();
        assert!(d.warning.is_some());
    }

    #[test]
    fn displacement_moves_annihilator() {
        // D†(α) a D(α) = a + α on low levels.
        let alpha = c(0.4, -0.7);
        let d = 30;
        let dmat = displacement_block(alpha, d, d);
        let a = ladder_operator(d, LadderKind::Annihilate).unwrap().matrix;
        let lhs = dmat.adjoint() * &a * &dmat;
        for i in 0..10 {
            for j in 0..10 {
                let mut target = a[(i, j)];
                if i == j {
                    target += alpha;
                }
                assert!((lhs[(i, j)] - target).norm() < 1e-9, "({i},{j})");
            }
        }
    }

    #[test]
    fn balanced_splitter_conjugates_modes() {
        let cutoff = FockCutoff::square(4).unwrap();
        for (theta, ea) in [(0.0, c(1.0, 0.0)), (FRAC_PI_2, c(0.0, 1.0))] {
            let u = beamsplitter_unitary(0.5, theta, cutoff).unwrap().matrix;
            let a1 = ladder_operator(4, LadderKind::Annihilate).unwrap().matrix;
            let id = CMatrix::identity(4, 4);
            let a = a1.kronecker(&id);
            let b = id.kronecker(&a1);
            let lhs = u.adjoint() * &a * &u;
            let rhs = (a.map(|z| z * ea) + &b).scale(FRAC_1_SQRT_2);
            // States with at most two photons in total are closed under the splitter.
            let low: Vec<usize> = (0..16)
                .filter(|&k| {
                    let (i, j) = cutoff.levels(k);
                    i + j <= 2
                })
                .collect();
            for &r in &low {
                for &s in &low {
                    assert!((lhs[(r, s)] - rhs[(r, s)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn full_transmission_flips_b_only() {
        let cutoff = FockCutoff::square(3).unwrap();
        let u = beamsplitter_unitary(1.0, 0.0, cutoff).unwrap().matrix;
        for i in 0..3 {
            for j in 0..3 {
                let k = cutoff.index(i, j);
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                assert!((u[(k, k)] - c(sign, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn splitter_rejects_bad_transmittivity() {
        let cutoff = FockCutoff::square(3).unwrap();
        assert!(matches!(
            beamsplitter_unitary(1.2, 0.0, cutoff),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn sector_unitaries_are_unitary() {
        for n in [0, 1, 5, 20] {
            let u = mode_transform_in_sector(0.3, 0.7, n);
            let id = CMatrix::identity(n + 1, n + 1);
            assert!((u.adjoint() * &u - id).camax() < 1e-12);
        }
    }
}
