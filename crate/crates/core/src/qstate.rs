//! Two-qubit polarization states in the fixed `HH, HV, VH, VV` basis.
//!
//! [`DensityMatrix`] is the carrier used everywhere else in the crate. It can
//! only be obtained through a validating constructor, so every value in
//! circulation is Hermitian, unit-trace and positive semidefinite.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::linalg::{self, c, r, Ket4, Mat4, C64};

/// Basis labels in row/column order.
pub const BASIS: [&str; 4] = ["HH", "HV", "VH", "VV"];

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const NORM_TOL: f64 = 1e-12;

/// Index of a basis ket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    HH = 0,
    HV = 1,
    VH = 2,
    VV = 3,
}

#[derive(Clone, PartialEq)]
pub struct DensityMatrix {
    m: Mat4,
}

impl DensityMatrix {
    /// Validates all three invariants.
    pub fn new(m: Mat4) -> Result<Self> {
        let herm = linalg::max_abs_diff(&m, &m.adjoint());
        if !(herm <= HERMITIAN_TOL) {
            return Err(Error::InvalidState(format!(
                "not Hermitian (max |ρ - ρ†| = {herm:.3e})"
            )));
        }
        let tr = m.trace();
        if !((tr.re - 1.0).abs() <= TRACE_TOL && tr.im.abs() <= TRACE_TOL) {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        let min = linalg::eigvalsh(&m)[3];
        if !(min >= -PSD_TOL) {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self {
            m: linalg::hermitian_part(&m),
        })
    }

    /// Projects an arbitrary matrix onto the physical set: Hermitian part,
    /// negative eigenvalues clipped to zero, trace renormalized to one.
    ///
    /// This is the only place where invariant violations are silently fixed;
    /// callers opt in by name.
    pub fn repair(m: &Mat4) -> Result<Self> {
        let (vals, vecs) = linalg::eigh(m);
        let clipped: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidState("no positive spectral weight to repair".into()));
        }
        let d = Mat4::from_diagonal(&Ket4::from_fn(|i, _| r(clipped[i] / total)));
        Self::new(vecs * d * vecs.adjoint())
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            m: linalg::projector(psi.amplitudes()),
        }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            m: Mat4::identity() * r(0.25),
        }
    }

    /// Real symmetric matrix of the `A, B, C, D` family
    /// (diagonal `A, B, B, D`, coupling `C` between HV and VH).
    pub fn x_family(a: f64, b: f64, cpl: f64, d: f64) -> Result<Self> {
        let mut m = Mat4::zeros();
        m[(0, 0)] = r(a);
        m[(1, 1)] = r(b);
        m[(2, 2)] = r(b);
        m[(3, 3)] = r(d);
        m[(1, 2)] = r(cpl);
        m[(2, 1)] = r(cpl);
        Self::new(m)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.m
    }

    pub fn element(&self, row: Basis, col: Basis) -> C64 {
        self.m[(row as usize, col as usize)]
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        linalg::eigvalsh(&self.m)
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Tr(ρ O)` for a Hermitian observable, real part.
    pub fn expectation(&self, observable: &Mat4) -> f64 {
        linalg::trace_product_re(&self.m, observable)
    }

    /// Largest element-wise modulus of the difference.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        linalg::max_abs_diff(&self.m, &other.m)
    }

    /// Largest imaginary part of any element.
    pub fn max_imag(&self) -> f64 {
        self.m.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Multiplies every off-diagonal element by `v`. For `v` in `[0, 1]` this
    /// is the convex combination `v ρ + (1 - v) diag(ρ)`.
    pub fn with_coherence_visibility(&self, v: f64) -> Result<Self> {
        check_range("visibility", v, 0.0, 1.0, "[0, 1]")?;
        let m = Mat4::from_fn(|i, j| if i == j { self.m[(i, j)] } else { self.m[(i, j)] * v });
        Ok(Self { m })
    }

    /// White-noise admixture `v ρ + (1 - v) I/4`. Every correlation
    /// `Tr(ρ O₁⊗O₂)` with traceless observables scales by `v`.
    pub fn depolarized(&self, v: f64) -> Result<Self> {
        check_range("visibility", v, 0.0, 1.0, "[0, 1]")?;
        let m = self.m * r(v) + Mat4::identity() * r((1.0 - v) / 4.0);
        Ok(Self { m })
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.m)
    }

    pub fn from_json(json: &MatrixJson) -> Result<Self> {
        Self::new(json.to_matrix()?)
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DensityMatrix [{}]", BASIS.join(", "))?;
        for i in 0..4 {
            for j in 0..4 {
                let z = self.m[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// JSON layout shared by every file the crate reads or writes:
/// `{"basis": ["HH","HV","VH","VV"], "re": [[..]], "im": [[..]]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub basis: Vec<String>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &Mat4) -> Self {
        Self {
            basis: BASIS.iter().map(|s| s.to_string()).collect(),
            re: (0..4).map(|i| (0..4).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..4).map(|i| (0..4).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<Mat4> {
        if self.basis != BASIS {
            return Err(Error::format(
                None,
                format!("basis must be {:?}, got {:?}", BASIS, self.basis),
            ));
        }
        let shape_ok = |a: &Vec<Vec<f64>>| a.len() == 4 && a.iter().all(|row| row.len() == 4);
        if !shape_ok(&self.re) || !shape_ok(&self.im) {
            return Err(Error::format(None, "re and im must be 4x4 arrays"));
        }
        Ok(Mat4::from_fn(|i, j| c(self.re[i][j], self.im[i][j])))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: Ket4,
}

impl PureState {
    pub fn new(amps: Ket4) -> Result<Self> {
        let n = amps.norm_squared();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("squared norm is {n}")));
        }
        Ok(Self { amps })
    }

    /// Normalizes first; fails only for the zero vector.
    pub fn normalized(amps: Ket4) -> Result<Self> {
        let n = amps.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Ok(Self { amps: amps / r(n) })
    }

    pub fn basis(b: Basis) -> Self {
        let mut amps = Ket4::zeros();
        amps[b as usize] = r(1.0);
        Self { amps }
    }

    pub fn amplitudes(&self) -> &Ket4 {
        &self.amps
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    /// `|α/β|` for states of the form `α|HH⟩ + β|VV⟩`; infinite if `β = 0`.
    pub fn hh_vv_ratio(&self) -> f64 {
        self.amps[0].norm() / self.amps[3].norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BellKind {
    /// `|HH⟩ + e^{iφ}|VV⟩`
    Phi,
    /// `|HV⟩ + e^{iφ}|VH⟩`
    Psi,
}

pub fn bell_state(kind: BellKind, phase: f64) -> PureState {
    let s = FRAC_1_SQRT_2;
    let e = C64::from_polar(s, phase);
    let mut amps = Ket4::zeros();
    match kind {
        BellKind::Phi => {
            amps[0] = r(s);
            amps[3] = e;
        }
        BellKind::Psi => {
            amps[1] = r(s);
            amps[2] = e;
        }
    }
    PureState { amps }
}

/// `(|HV⟩ - |VH⟩)/√2`.
pub fn singlet() -> PureState {
    bell_state(BellKind::Psi, std::f64::consts::PI)
}

pub fn singlet_projector() -> DensityMatrix {
    singlet().density()
}

/// Non-maximally entangled `α|HH⟩ + β|VV⟩` set by the pump waveplate angle.
///
/// The amplitude ratio is taken as `γ = |α/β| = cos²(2θ_p)`, so `θ_p = 0`
/// gives the maximally entangled state and `θ_p = π/4` gives `|VV⟩`.
pub fn nonmax_state(theta_p: f64) -> Result<PureState> {
    check_range("theta_p", theta_p, 0.0, std::f64::consts::FRAC_PI_4, "[0, π/4]")?;
    let gamma = (2.0 * theta_p).cos().powi(2);
    let beta = 1.0 / (1.0 + gamma * gamma).sqrt();
    let mut amps = Ket4::zeros();
    amps[0] = r(gamma * beta);
    amps[3] = r(beta);
    Ok(PureState { amps })
}

/// Singlet weight of a Werner state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WernerParams {
    p: f64,
}

impl WernerParams {
    pub fn from_weight(p: f64) -> Result<Self> {
        check_range("p", p, 0.0, 1.0, "[0, 1]")?;
        Ok(Self { p })
    }

    /// Fidelity to the singlet, `F = (3p + 1)/4`.
    pub fn from_fidelity(f: f64) -> Result<Self> {
        check_range("F", f, 0.25, 1.0, "[1/4, 1]")?;
        Ok(Self {
            p: ((4.0 * f - 1.0) / 3.0).clamp(0.0, 1.0),
        })
    }

    pub fn weight(&self) -> f64 {
        self.p
    }

    pub fn fidelity(&self) -> f64 {
        (3.0 * self.p + 1.0) / 4.0
    }

    pub fn state(&self) -> DensityMatrix {
        let p = self.p;
        DensityMatrix::x_family((1.0 - p) / 4.0, (1.0 + p) / 4.0, -p / 2.0, (1.0 - p) / 4.0)
            .expect("Werner family is physical for p in [0, 1]")
    }
}

pub fn werner(p: f64) -> Result<DensityMatrix> {
    Ok(WernerParams::from_weight(p)?.state())
}

pub fn werner_from_fidelity(f: f64) -> Result<DensityMatrix> {
    Ok(WernerParams::from_fidelity(f)?.state())
}

/// Parameters of the maximally-entangled-mixed-state family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemsParams {
    p: f64,
}

impl MemsParams {
    pub fn new(p: f64) -> Result<Self> {
        check_range("p", p, 0.0, 1.0, "[0, 1]")?;
        Ok(Self { p })
    }

    pub fn weight(&self) -> f64 {
        self.p
    }

    /// `g(p) = p/2` for `p ≥ 2/3`, else `1/3`.
    pub fn g(&self) -> f64 {
        if self.p >= 2.0 / 3.0 {
            self.p / 2.0
        } else {
            1.0 / 3.0
        }
    }

    pub fn state(&self) -> DensityMatrix {
        let g = self.g();
        DensityMatrix::x_family(1.0 - 2.0 * g, g, -self.p / 2.0, 0.0).expect("MEMS family is physical for p in [0, 1]")
    }
}

pub fn mems(p: f64) -> Result<DensityMatrix> {
    Ok(MemsParams::new(p)?.state())
}

/// Werner state of fidelity `F` after the nonlocal unitary that maps the
/// singlet onto `√a|HH⟩ + √(1-a)|VV⟩`. Built from the explicit mixture, the
/// unitary itself is never formed.
pub fn tune_entanglement(f: f64, a: f64) -> Result<DensityMatrix> {
    check_range("F", f, 0.25, 1.0, "[1/4, 1]")?;
    check_range("a", a, 0.5, 1.0, "[1/2, 1]")?;
    let mut psi = Ket4::zeros();
    psi[0] = r(a.sqrt());
    psi[3] = r((1.0 - a).sqrt());
    let m = Mat4::identity() * r((1.0 - f) / 3.0) + linalg::projector(&psi) * r((4.0 * f - 1.0) / 3.0);
    DensityMatrix::new(m)
}

/// Upper end of the `a` interval over which [`tune_entanglement`] stays
/// entangled, clamped to 1. For `F ≤ 1/2` the interval is empty and `1/2`
/// is returned.
pub fn tuning_entanglement_bound(f: f64) -> Result<f64> {
    check_range("F", f, 0.25, 1.0, "[1/4, 1]")?;
    if f <= 0.5 {
        return Ok(0.5);
    }
    let a_max = 0.5 * (1.0 + (3.0 * (4.0 * f * f - 1.0)).sqrt() / (4.0 * f - 1.0));
    Ok(a_max.min(1.0))
}

/// Convex combination of states.
pub fn mix(components: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix> {
    if components.is_empty() {
        return Err(Error::Domain("cannot mix an empty list of states".into()));
    }
    if let Some((w, _)) = components.iter().find(|(w, _)| !(*w >= 0.0)) {
        return Err(Error::OutOfRange {
            name: "weight",
            value: *w,
            range: "[0, ∞)",
        });
    }
    let total: f64 = components.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("weights sum to {total}, not 1")));
    }
    let m = components
        .iter()
        .fold(Mat4::zeros(), |acc, (w, rho)| acc + rho.matrix() * r(*w));
    DensityMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

    fn amps(s: &PureState) -> [C64; 4] {
        let a = s.amplitudes();
        [a[0], a[1], a[2], a[3]]
    }

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn bell_states_match_definitions() {
        let s = FRAC_1_SQRT_2;
        let phi_plus = amps(&bell_state(BellKind::Phi, 0.0));
        for (got, want) in phi_plus.iter().zip([s, 0.0, 0.0, s]) {
            assert!(close(*got, r(want)));
        }
        let singlet = amps(&bell_state(BellKind::Psi, PI));
        for (got, want) in singlet.iter().zip([0.0, s, -s, 0.0]) {
            assert!(close(*got, r(want)));
        }
        let phi_i = amps(&bell_state(BellKind::Phi, FRAC_PI_2));
        assert!(close(phi_i[3], c(0.0, s)));
        assert!(close(phi_i[0], r(s)));
    }

    #[test]
    fn nonmax_endpoints_and_midpoint() {
        let top = nonmax_state(0.0).unwrap();
        assert!((top.hh_vv_ratio() - 1.0).abs() < 1e-12);
        let bottom = nonmax_state(FRAC_PI_4).unwrap();
        assert!(bottom.hh_vv_ratio() < 1e-15);
        assert!((bottom.amplitudes()[3].re - 1.0).abs() < 1e-12);
        let mid = nonmax_state(FRAC_PI_8).unwrap();
        assert!((mid.hh_vv_ratio() - 0.5).abs() < 1e-12);
        // (1/2, 1)/√(5/4)
        let n = (1.25f64).sqrt();
        assert!((mid.amplitudes()[0].re - 0.5 / n).abs() < 1e-12);
        assert!(nonmax_state(1.0).is_err());
        assert!(nonmax_state(-0.1).is_err());
    }

    #[test]
    fn werner_examples() {
        assert!(werner(0.0).unwrap().max_abs_diff(&DensityMatrix::maximally_mixed()) < 1e-15);
        assert!(werner(1.0).unwrap().max_abs_diff(&singlet_projector()) < 1e-15);
        let w = werner(0.82).unwrap();
        assert!((w.element(Basis::HH, Basis::HH).re - 0.045).abs() < 1e-12);
        assert!((w.element(Basis::VV, Basis::VV).re - 0.045).abs() < 1e-12);
        assert!((w.element(Basis::HV, Basis::HV).re - 0.455).abs() < 1e-12);
        assert!((w.element(Basis::HV, Basis::VH).re + 0.41).abs() < 1e-12);
        assert!(werner(1.01).is_err());
    }

    #[test]
    fn werner_fidelity_examples() {
        assert!(werner_from_fidelity(1.0).unwrap().max_abs_diff(&singlet_projector()) < 1e-15);
        assert!(
            werner_from_fidelity(0.25)
                .unwrap()
                .max_abs_diff(&DensityMatrix::maximally_mixed())
                < 1e-15
        );
        assert!(werner_from_fidelity(0.625).unwrap().max_abs_diff(&werner(0.5).unwrap()) < 1e-15);
        assert!(werner_from_fidelity(0.2).is_err());
    }

    #[test]
    fn mems_examples() {
        let one = mems(1.0).unwrap();
        assert!(one.max_abs_diff(&singlet_projector()) < 1e-15);
        let half = mems(0.5).unwrap();
        let third = 1.0 / 3.0;
        let diag = [third, third, third, 0.0];
        for (i, d) in diag.iter().enumerate() {
            assert!((half.matrix()[(i, i)].re - d).abs() < 1e-15);
        }
        assert!((half.element(Basis::HV, Basis::VH).re + 0.25).abs() < 1e-15);
        let m = mems(0.77).unwrap();
        for (i, d) in [0.23, 0.385, 0.385, 0.0].iter().enumerate() {
            assert!((m.matrix()[(i, i)].re - d).abs() < 1e-12);
        }
        assert!((m.element(Basis::VH, Basis::HV).re + 0.385).abs() < 1e-12);
    }

    #[test]
    fn tuning_bound_examples() {
        assert_eq!(tuning_entanglement_bound(1.0).unwrap(), 1.0);
        assert_eq!(tuning_entanglement_bound(0.5).unwrap(), 0.5);
        assert_eq!(tuning_entanglement_bound(0.3).unwrap(), 0.5);
        let a = tuning_entanglement_bound(0.75).unwrap();
        assert!((a - 0.5 * (1.0 + 3.75f64.sqrt() / 2.0)).abs() < 1e-15);
        assert!((a - 0.9841).abs() < 1e-4);
        assert!(tuning_entanglement_bound(1.2).is_err());
    }

    #[test]
    fn tune_entanglement_limits() {
        let pure = tune_entanglement(1.0, 0.5).unwrap();
        let phi_plus = bell_state(BellKind::Phi, 0.0).density();
        assert!(pure.max_abs_diff(&phi_plus) < 1e-15);
        assert!(tune_entanglement(0.9, 0.4).is_err());
        assert!(tune_entanglement(0.2, 0.6).is_err());
    }

    #[test]
    fn mix_examples_and_errors() {
        let rho = werner(0.3).unwrap();
        assert!(mix(&[(1.0, &rho)]).unwrap().max_abs_diff(&rho) < 1e-15);

        let phi_minus = bell_state(BellKind::Phi, PI).density();
        let s = singlet_projector();
        let fig6a = mix(&[(0.5, &phi_minus), (0.5, &s)]).unwrap();
        assert!((fig6a.element(Basis::HH, Basis::VV).re + 0.25).abs() < 1e-15);
        assert!((fig6a.element(Basis::HV, Basis::VH).re + 0.25).abs() < 1e-15);
        assert!((fig6a.element(Basis::HH, Basis::HH).re - 0.25).abs() < 1e-15);

        let products: Vec<DensityMatrix> = [Basis::HH, Basis::HV, Basis::VH, Basis::VV]
            .iter()
            .map(|b| PureState::basis(*b).density())
            .collect();
        let parts: Vec<(f64, &DensityMatrix)> = products.iter().map(|p| (0.25, p)).collect();
        assert!(mix(&parts).unwrap().max_abs_diff(&DensityMatrix::maximally_mixed()) < 1e-15);

        assert!(mix(&[]).is_err());
        assert!(mix(&[(0.6, &rho)]).is_err());
        assert!(mix(&[(1.5, &rho), (-0.5, &rho)]).is_err());
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let mut m = Mat4::identity() * r(0.25);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err()); // not Hermitian
        assert!(DensityMatrix::new(Mat4::identity() * r(0.3)).is_err()); // trace
        let mut neg = Mat4::zeros();
        neg[(0, 0)] = r(1.2);
        neg[(1, 1)] = r(-0.2);
        assert!(DensityMatrix::new(neg).is_err());
        let fixed = DensityMatrix::repair(&neg).unwrap();
        assert!((fixed.matrix()[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coherence_visibility_scales_off_diagonals() {
        let s = singlet_projector().with_coherence_visibility(0.9).unwrap();
        assert!((s.element(Basis::HV, Basis::VH).re + 0.45).abs() < 1e-15);
        assert!((s.element(Basis::HV, Basis::HV).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn depolarizing_a_werner_state_rescales_its_weight() {
        let w = werner(0.8).unwrap().depolarized(0.5).unwrap();
        assert!(w.max_abs_diff(&werner(0.4).unwrap()) < 1e-15);
        assert!(werner(0.8).unwrap().depolarized(1.2).is_err());
    }

    #[test]
    fn json_round_trip_and_basis_check() {
        let rho = tune_entanglement(0.8, 0.7).unwrap();
        let text = serde_json::to_string(&rho.to_json()).unwrap();
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        assert_eq!(DensityMatrix::from_json(&back).unwrap(), rho);
        let mut bad = back.clone();
        bad.basis.swap(1, 2);
        assert!(matches!(DensityMatrix::from_json(&bad), Err(Error::Format { .. })));
    }
}
