//! Mutual inductance between filamentary circular loops.
//!
//! [`mutual_inductance`] evaluates Neumann's double line integral with a
//! Gauss-Legendre product rule, so it handles arbitrary position and tilt.
//! [`coaxial_mutual_oracle`] is Maxwell's closed form for coaxial loops and is
//! kept as an independent check on the quadrature.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::units::{MU0, MU0_OVER_4PI};

pub const DEFAULT_QUADRATURE_POINTS: usize = 256;
pub const MIN_QUADRATURE_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("loop radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("loop needs at least one turn")]
    NoTurns,
    #[error("loop normal must be a unit vector (|n| = {0})")]
    NonUnitNormal(f64),
    #[error("quadrature needs at least {MIN_QUADRATURE_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("loops intersect or coincide")]
    Intersecting,
    #[error("coaxial loops of equal radius at zero separation are singular")]
    Singular,
    #[error("coupling coefficient {0} outside [0, 1)")]
    BadCoupling(f64),
    #[error("inductance must be positive, got {0}")]
    BadInductance(f64),
}

pub type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: Vec3) -> f64 {
    libm::sqrt(dot(a, a))
}

fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LoopGeometry {
    pub radius_m: f64,
    pub turns: u32,
    pub center: Vec3,
    pub normal: Vec3,
}

impl LoopGeometry {
    pub fn new(radius_m: f64, turns: u32, center: Vec3, normal: Vec3) -> Result<Self, GeometryError> {
        let g = Self { radius_m, turns, center, normal };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.radius_m > 0.0 && self.radius_m.is_finite()) {
            return Err(GeometryError::BadRadius(self.radius_m));
        }
        if self.turns == 0 {
            return Err(GeometryError::NoTurns);
        }
        let n = norm(self.normal);
        if (n - 1.0).abs() > 1e-9 {
            return Err(GeometryError::NonUnitNormal(n));
        }
        Ok(())
    }

    /// Orthonormal pair spanning the loop plane.
    fn plane_basis(&self) -> (Vec3, Vec3) {
        let n = self.normal;
        let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let u = cross(n, helper);
        let u = scale(u, 1.0 / norm(u));
        let v = cross(n, u);
        (u, v)
    }

    /// Points and tangent vectors (dl/dθ) at the given parameter angles.
    fn discretize(&self, thetas: &[f64]) -> Vec<(Vec3, Vec3)> {
        let (u, v) = self.plane_basis();
        let r = self.radius_m;
        thetas
            .iter()
            .map(|&t| {
                let (s, c) = libm::sincos(t);
                let p = [
                    self.center[0] + r * (c * u[0] + s * v[0]),
                    self.center[1] + r * (c * u[1] + s * v[1]),
                    self.center[2] + r * (c * u[2] + s * v[2]),
                ];
                let d = [r * (-s * u[0] + c * v[0]), r * (-s * u[1] + c * v[1]), r * (-s * u[2] + c * v[2])];
                (p, d)
            })
            .collect()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on Pₙ.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = alloc::vec![0.0; n];
    let mut weights = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut x = libm::cos(PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Mutual inductance in nH between two multi-turn filamentary loops, from
/// `M = N₁N₂ µ₀/4π ∮∮ dl₁·dl₂ / |r₁ − r₂|`.
pub fn mutual_inductance(a: &LoopGeometry, b: &LoopGeometry, quadrature_points: usize) -> Result<f64, GeometryError> {
    a.validate()?;
    b.validate()?;
    if quadrature_points < MIN_QUADRATURE_POINTS {
        return Err(GeometryError::TooFewPoints(quadrature_points));
    }
    let (x, w) = gauss_legendre(quadrature_points);
    // Map [-1, 1] onto [0, 2π].
    let thetas: Vec<f64> = x.iter().map(|&t| PI * (t + 1.0)).collect();
    let weights: Vec<f64> = w.iter().map(|&wi| PI * wi).collect();
    let pa = a.discretize(&thetas);
    let pb = b.discretize(&thetas);

    let too_close = 1e-9 * a.radius_m.min(b.radius_m);
    let mut total = 0.0;
    for (i, (p1, d1)) in pa.iter().enumerate() {
        let mut row = 0.0;
        for (j, (p2, d2)) in pb.iter().enumerate() {
            let r = norm([p1[0] - p2[0], p1[1] - p2[1], p1[2] - p2[2]]);
            if r < too_close {
                return Err(GeometryError::Intersecting);
            }
            row += weights[j] * dot(*d1, *d2) / r;
        }
        total += weights[i] * row;
    }
    let turns = f64::from(a.turns) * f64::from(b.turns);
    Ok(MU0_OVER_4PI * turns * total * 1.0e9)
}

/// Complete elliptic integrals K(m) and E(m), parameter `m = k²`, by the
/// arithmetic-geometric mean.
pub fn elliptic_ke(m: f64) -> (f64, f64) {
    let mut a = 1.0;
    let mut b = libm::sqrt(1.0 - m);
    let mut c = libm::sqrt(m);
    let mut sum = 0.5 * c * c;
    let mut pow2 = 0.5;
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        let bn = libm::sqrt(a * b);
        c = 0.5 * (a - b);
        pow2 *= 2.0;
        sum += pow2 * c * c;
        a = an;
        b = bn;
    }
    let k = PI / (2.0 * a);
    (k, k * (1.0 - sum))
}

/// Maxwell's formula for two coaxial single-turn loops, in nH.
pub fn coaxial_mutual_oracle(r1_m: f64, r2_m: f64, d_m: f64) -> Result<f64, GeometryError> {
    if !(r1_m > 0.0) {
        return Err(GeometryError::BadRadius(r1_m));
    }
    if !(r2_m > 0.0) {
        return Err(GeometryError::BadRadius(r2_m));
    }
    let d = d_m.abs();
    if d == 0.0 && r1_m == r2_m {
        return Err(GeometryError::Singular);
    }
    let m = 4.0 * r1_m * r2_m / ((r1_m + r2_m) * (r1_m + r2_m) + d * d);
    let k = libm::sqrt(m);
    let (ek, ee) = elliptic_ke(m);
    let mutual = MU0 * libm::sqrt(r1_m * r2_m) * ((2.0 / k - k) * ek - 2.0 / k * ee);
    Ok(mutual * 1.0e9)
}

/// `k = M / √(L₁L₂)`, with M in nH and inductances in µH.
pub fn coupling_coefficient(m_nh: f64, l1_uh: f64, l2_uh: f64) -> f64 {
    m_nh * 1.0e-9 / libm::sqrt(l1_uh * 1.0e-6 * l2_uh * 1.0e-6)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum LinkSource {
    #[default]
    MeasuredK,
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CouplingLink {
    pub k: f64,
    pub m_nh: f64,
    pub source: LinkSource,
}

impl CouplingLink {
    pub fn from_k(k: f64, ring_l_uh: f64, wrist_l_uh: f64) -> Result<Self, GeometryError> {
        if !(0.0..1.0).contains(&k) {
            return Err(GeometryError::BadCoupling(k));
        }
        check_inductances(ring_l_uh, wrist_l_uh)?;
        let m_nh = k * libm::sqrt(ring_l_uh * wrist_l_uh) * 1.0e3;
        Ok(Self { k, m_nh, source: LinkSource::MeasuredK })
    }

    /// Link from a computed mutual inductance; the sign of M is dropped.
    pub fn from_mutual(m_nh: f64, ring_l_uh: f64, wrist_l_uh: f64) -> Result<Self, GeometryError> {
        check_inductances(ring_l_uh, wrist_l_uh)?;
        let m = m_nh.abs();
        let k = coupling_coefficient(m, ring_l_uh, wrist_l_uh);
        if k >= 1.0 {
            return Err(GeometryError::BadCoupling(k));
        }
        Ok(Self { k, m_nh: m, source: LinkSource::Geometric })
    }
}

fn check_inductances(l1: f64, l2: f64) -> Result<(), GeometryError> {
    for l in [l1, l2] {
        if !(l > 0.0) {
            return Err(GeometryError::BadInductance(l));
        }
    }
    Ok(())
}

/// Ring-on-finger / coil-on-wrist arrangement used for the tilt study.
///
/// The wristband loop sits at the origin facing +z. The ring centre is
/// `separation_m` along z and `lateral_offset_m` along x; tilting rotates the
/// ring normal about y, positive angles leaning toward +x.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct GraspGeometry {
    pub ring_radius_m: f64,
    pub ring_turns: u32,
    pub wrist_radius_m: f64,
    pub wrist_turns: u32,
    pub separation_m: f64,
    pub lateral_offset_m: f64,
}

impl Default for GraspGeometry {
    fn default() -> Self {
        Self {
            ring_radius_m: 0.010,
            ring_turns: 8,
            wrist_radius_m: 0.030,
            wrist_turns: 6,
            separation_m: 0.100,
            lateral_offset_m: 0.015,
        }
    }
}

impl GraspGeometry {
    pub fn loops(&self, tilt_deg: f64) -> Result<(LoopGeometry, LoopGeometry), GeometryError> {
        let t = tilt_deg.to_radians();
        let ring = LoopGeometry::new(
            self.ring_radius_m,
            self.ring_turns,
            [self.lateral_offset_m, 0.0, self.separation_m],
            [libm::sin(t), 0.0, libm::cos(t)],
        )?;
        let wrist = LoopGeometry::new(self.wrist_radius_m, self.wrist_turns, [0.0; 3], [0.0, 0.0, 1.0])?;
        Ok((ring, wrist))
    }

    pub fn mutual_nh(&self, tilt_deg: f64, quadrature_points: usize) -> Result<f64, GeometryError> {
        let (ring, wrist) = self.loops(tilt_deg)?;
        mutual_inductance(&ring, &wrist, quadrature_points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn coaxial(r1: f64, r2: f64, d: f64) -> (LoopGeometry, LoopGeometry) {
        (
            LoopGeometry::new(r1, 1, [0.0; 3], [0.0, 0.0, 1.0]).unwrap(),
            LoopGeometry::new(r2, 1, [0.0, 0.0, d], [0.0, 0.0, 1.0]).unwrap(),
        )
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        let sum_w: f64 = w.iter().sum();
        assert_relative_eq!(sum_w, 2.0, epsilon = 1e-13);
        // ∫ x^30 over [-1, 1] = 2/31; degree 2n-1 = 31 is exact.
        let integral: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(30)).sum();
        assert_relative_eq!(integral, 2.0 / 31.0, max_relative = 1e-12);
    }

    #[test]
    fn elliptic_reference_values() {
        // K(0) = E(0) = π/2; K(0.5) and E(0.5) from standard tables.
        let (k, e) = elliptic_ke(0.0);
        assert_relative_eq!(k, PI / 2.0, epsilon = 1e-15);
        assert_relative_eq!(e, PI / 2.0, epsilon = 1e-15);
        let (k, e) = elliptic_ke(0.5);
        assert_relative_eq!(k, 1.854_074_677_301_372, max_relative = 1e-12);
        assert_relative_eq!(e, 1.350_643_881_047_675, max_relative = 1e-12);
    }

    #[test]
    fn neumann_matches_coaxial_closed_form() {
        let (a, b) = coaxial(0.010, 0.025, 0.100);
        let numeric = mutual_inductance(&a, &b, DEFAULT_QUADRATURE_POINTS).unwrap();
        let exact = coaxial_mutual_oracle(0.010, 0.025, 0.100).unwrap();
        assert_relative_eq!(numeric, exact, max_relative = 1e-3);
    }

    #[test]
    fn oracle_approaches_dipole_limit() {
        let r: f64 = 0.01;
        let d = 20.0 * r;
        let dipole = MU0 * PI * r.powi(4) / (2.0 * d.powi(3)) * 1e9;
        assert_relative_eq!(coaxial_mutual_oracle(r, r, d).unwrap(), dipole, max_relative = 0.01);
    }

    #[test]
    fn oracle_singular_geometry() {
        assert_eq!(coaxial_mutual_oracle(0.01, 0.01, 0.0), Err(GeometryError::Singular));
        assert!(coaxial_mutual_oracle(0.01, 0.02, 0.0).is_ok());
    }

    #[test]
    fn neumann_is_symmetric() {
        let g = GraspGeometry::default();
        let (ring, wrist) = g.loops(20.0).unwrap();
        let ab = mutual_inductance(&ring, &wrist, 64).unwrap();
        let ba = mutual_inductance(&wrist, &ring, 64).unwrap();
        assert_relative_eq!(ab, ba, max_relative = 1e-12);
    }

    #[test]
    fn perpendicular_loops_do_not_couple() {
        let a = LoopGeometry::new(0.01, 1, [0.0; 3], [0.0, 0.0, 1.0]).unwrap();
        let b = LoopGeometry::new(0.02, 1, [0.0, 0.0, 0.05], [1.0, 0.0, 0.0]).unwrap();
        let m = mutual_inductance(&a, &b, 128).unwrap();
        let reference = coaxial_mutual_oracle(0.01, 0.02, 0.05).unwrap();
        assert!(m.abs() < 1e-4 * reference, "M = {m}");
    }

    #[test]
    fn coincident_loops_rejected() {
        let a = LoopGeometry::new(0.01, 1, [0.0; 3], [0.0, 0.0, 1.0]).unwrap();
        assert_eq!(mutual_inductance(&a, &a, 32), Err(GeometryError::Intersecting));
    }

    #[test]
    fn input_validation() {
        assert!(LoopGeometry::new(0.0, 1, [0.0; 3], [0.0, 0.0, 1.0]).is_err());
        assert!(LoopGeometry::new(0.01, 0, [0.0; 3], [0.0, 0.0, 1.0]).is_err());
        assert!(LoopGeometry::new(0.01, 1, [0.0; 3], [0.0, 0.0, 1.1]).is_err());
        let (a, b) = coaxial(0.01, 0.02, 0.05);
        assert_eq!(mutual_inductance(&a, &b, 8), Err(GeometryError::TooFewPoints(8)));
    }

    #[test]
    fn coupling_coefficient_examples() {
        assert_relative_eq!(coupling_coefficient(12.58, 2.6, 4.0), 0.0039, epsilon = 5e-6);
        assert_relative_eq!(coupling_coefficient(10.0, 2.6, 4.0), 0.0031, epsilon = 5e-6);
        assert_eq!(coupling_coefficient(0.0, 2.6, 4.0), 0.0);
    }

    #[test]
    fn link_from_k_is_consistent() {
        let link = CouplingLink::from_k(0.0039, 2.6, 4.0).unwrap();
        assert_relative_eq!(coupling_coefficient(link.m_nh, 2.6, 4.0), 0.0039, max_relative = 1e-9);
        assert_relative_eq!(link.m_nh, 12.58, epsilon = 0.005);
        assert!(CouplingLink::from_k(1.0, 2.6, 4.0).is_err());
        assert!(CouplingLink::from_k(-0.1, 2.6, 4.0).is_err());
    }

    #[test]
    fn tilt_increases_coupling_for_default_grasp() {
        let g = GraspGeometry::default();
        let m0 = g.mutual_nh(0.0, DEFAULT_QUADRATURE_POINTS).unwrap().abs();
        let m20 = g.mutual_nh(20.0, DEFAULT_QUADRATURE_POINTS).unwrap().abs();
        assert!(m20 > m0, "M(20°) = {m20} nH, M(0°) = {m0} nH");
    }
}
