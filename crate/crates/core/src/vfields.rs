//! Vector fields of the coupled FitzHugh-Nagumo pair and of its cusp blowup.
//!
//! Every field here is a pure function of a state and a [`Params`] value.
//! States convert to and from `[f64; 4]` so that they can be fed to the
//! integrator directly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("coupling g = {0} must be negative (repulsive)")]
    NotRepulsive(f64),
    #[error("parameter {name} = {value} is not finite")]
    NonFinite { name: &'static str, value: f64 },
    #[error("eps = {0} must be non-negative")]
    NegativeEps(f64),
    #[error("saddle-node variant needs c2 to be set")]
    MissingC2,
    #[error("chart change needs {0}")]
    ChartOverlap(&'static str),
}

/// Coupling, threshold and timescale ratio. `c2` is set when the threshold
/// is written as `c = v_s + sqrt(eps) c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub g: f64,
    pub c: f64,
    pub eps: f64,
    #[serde(default)]
    pub c2: Option<f64>,
}

pub fn v_s(g: f64) -> f64 {
    (1.0 - 2.0 * g / 3.0).sqrt()
}

pub fn w_s(g: f64) -> f64 {
    let v = v_s(g);
    -v * v * v + 3.0 * v
}

impl Params {
    pub fn new(g: f64, c: f64, eps: f64) -> Self {
        Params { g, c, eps, c2: None }
    }

    /// Threshold placed at `v_s + sqrt(eps) c2`.
    pub fn saddle_node(g: f64, c2: f64, eps: f64) -> Self {
        Params {
            g,
            c: v_s(g) + eps.sqrt() * c2,
            eps,
            c2: Some(c2),
        }
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        for (name, value) in [("g", self.g), ("c", self.c), ("eps", self.eps)] {
            if !value.is_finite() {
                return Err(FieldError::NonFinite { name, value });
            }
        }
        if let Some(c2) = self.c2 {
            if !c2.is_finite() {
                return Err(FieldError::NonFinite { name: "c2", value: c2 });
            }
        }
        if self.g >= 0.0 {
            return Err(FieldError::NotRepulsive(self.g));
        }
        if self.eps < 0.0 {
            return Err(FieldError::NegativeEps(self.eps));
        }
        Ok(())
    }

    pub fn v_s(&self) -> f64 {
        v_s(self.g)
    }

    pub fn w_s(&self) -> f64 {
        w_s(self.g)
    }

    /// `9 v_s^2 + g`, the cubic coefficient of the cusp normal form.
    pub fn cusp_k(&self) -> f64 {
        let v = self.v_s();
        9.0 * v * v + self.g
    }

    /// Eigenvalue of the desingularized reduced flow at the cusp point along the synchronous direction.
    pub fn lambda1(&self) -> f64 {
        let v = self.v_s();
        -6.0 * v * (v - self.c)
    }

    pub fn lambda2(&self) -> f64 {
        -self.lambda1() + 2.0 * self.g
    }

    pub fn mu(&self) -> f64 {
        self.lambda2() / self.lambda1()
    }
}

/// Original coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateFull {
    pub v1: f64,
    pub v2: f64,
    pub w1: f64,
    pub w2: f64,
}

/// Symmetric coordinates: `x, u` are the mean and half-difference of the
/// voltages, `y` the mean recovery shifted by `w_s`, `z` the half-difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSym {
    pub x: f64,
    pub u: f64,
    pub y: f64,
    pub z: f64,
}

/// Entry chart of the cusp blowup (`y = -r1^2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateEntry {
    pub r1: f64,
    pub u1: f64,
    pub z1: f64,
    pub eps1: f64,
}

/// Scaling chart of the cusp blowup (`eps = r2^4`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateScaling {
    pub r2: f64,
    pub u2: f64,
    pub y2: f64,
    pub z2: f64,
}

/// A point of the 3D center-manifold model together with `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blowdown {
    pub u: f64,
    pub y: f64,
    pub z: f64,
    pub eps: f64,
}

macro_rules! array_conv {
    ($t:ident, $a:ident, $b:ident, $c:ident, $d:ident) => {
        impl $t {
            pub fn to_array(&self) -> [f64; 4] {
                [self.$a, self.$b, self.$c, self.$d]
            }
            pub fn from_array(s: [f64; 4]) -> Self {
                $t { $a: s[0], $b: s[1], $c: s[2], $d: s[3] }
            }
        }
        impl From<[f64; 4]> for $t {
            fn from(s: [f64; 4]) -> Self {
                $t::from_array(s)
            }
        }
        impl From<$t> for [f64; 4] {
            fn from(s: $t) -> Self {
                s.to_array()
            }
        }
    };
}

array_conv!(StateFull, v1, v2, w1, w2);
array_conv!(StateSym, x, u, y, z);
array_conv!(StateEntry, r1, u1, z1, eps1);
array_conv!(StateScaling, r2, u2, y2, z2);

impl StateFull {
    /// Swap the two units.
    pub fn swapped(&self) -> Self {
        StateFull { v1: self.v2, v2: self.v1, w1: self.w2, w2: self.w1 }
    }
}

pub fn to_sym(s: &StateFull, p: &Params) -> StateSym {
    StateSym {
        x: 0.5 * (s.v1 + s.v2),
        u: 0.5 * (s.v1 - s.v2),
        y: 0.5 * (s.w1 + s.w2) - p.w_s(),
        z: 0.5 * (s.w1 - s.w2),
    }
}

pub fn from_sym(s: &StateSym, p: &Params) -> StateFull {
    let wm = s.y + p.w_s();
    StateFull { v1: s.x + s.u, v2: s.x - s.u, w1: wm + s.z, w2: wm - s.z }
}

pub fn rhs_full(s: &StateFull, p: &Params) -> StateFull {
    let StateFull { v1, v2, w1, w2 } = *s;
    StateFull {
        v1: -v1 * v1 * v1 + 3.0 * v1 - w1 + p.g * (v2 - v1),
        v2: -v2 * v2 * v2 + 3.0 * v2 - w2 + p.g * (v1 - v2),
        w1: p.eps * (v1 - p.c),
        w2: p.eps * (v2 - p.c),
    }
}

pub fn rhs_sym(s: &StateSym, p: &Params) -> StateSym {
    let StateSym { x, u, y, z } = *s;
    let vs = p.v_s();
    StateSym {
        x: -x * x * x + 3.0 * x - (y + p.w_s()) - 3.0 * x * u * u,
        u: -z - u * u * u + 3.0 * (vs * vs - x * x) * u,
        y: p.eps * (x - p.c),
        z: p.eps * u,
    }
}

/// Array form of [`rhs_full`].
pub fn rhs_full_array(s: &[f64; 4], p: &Params) -> [f64; 4] {
    rhs_full(&StateFull::from_array(*s), p).to_array()
}

/// Array form of [`rhs_sym`].
pub fn rhs_sym_array(s: &[f64; 4], p: &Params) -> [f64; 4] {
    rhs_sym(&StateSym::from_array(*s), p).to_array()
}

/// The reduced flow on the critical manifold in `(v1, v2)`, multiplied by `det Dh`.
pub fn rhs_reduced_desing(v: [f64; 2], p: &Params) -> [f64; 2] {
    let [v1, v2] = v;
    let g = p.g;
    let a11 = -3.0 * v2 * v2 - g + 3.0;
    let a22 = -3.0 * v1 * v1 - g + 3.0;
    let (d1, d2) = (v1 - p.c, v2 - p.c);
    [a11 * d1 - g * d2, -g * d1 + a22 * d2]
}

/// Jacobian of [`rhs_reduced_desing`].
pub fn reduced_desing_jacobian(v: [f64; 2], p: &Params) -> [[f64; 2]; 2] {
    let [v1, v2] = v;
    let g = p.g;
    let (d1, d2) = (v1 - p.c, v2 - p.c);
    [
        [-3.0 * v2 * v2 - g + 3.0, -6.0 * v2 * d1 - g],
        [-6.0 * v1 * d2 - g, -3.0 * v1 * v1 - g + 3.0],
    ]
}

/// Truncated center-manifold graph `z = Q(u, y)` of the attracting and repelling sheets.
pub fn cusp_q(u: f64, y: f64, p: &Params) -> f64 {
    -(u / p.g) * (3.0 * p.v_s() * y + p.cusp_k() * u * u)
}

/// Desingularized reduced flow near the cusp in `(u, y)`.
pub fn rhs_reduced_cm(s: [f64; 2], p: &Params) -> [f64; 2] {
    let [u, y] = s;
    let vs = p.v_s();
    let g = p.g;
    let h = vs - p.c + y / (2.0 * g) + 3.0 * vs * u * u / (2.0 * g);
    let q_u = -(3.0 * vs * y + 3.0 * p.cusp_k() * u * u) / g;
    let q_y = -3.0 * vs * u / g;
    [-(u - q_y * h), -(q_u * h)]
}

/// The 3D center-manifold model in `(u, y, z)` with higher-order remainders dropped.
pub fn rhs_center_manifold(s: [f64; 3], p: &Params) -> [f64; 3] {
    let [u, y, z] = s;
    let vs = p.v_s();
    let g = p.g;
    [
        -z - (3.0 * vs * y + p.cusp_k() * u * u) * u / g,
        p.eps * (vs - p.c + y / (2.0 * g) + 3.0 * vs * u * u / (2.0 * g)),
        p.eps * u,
    ]
}

pub fn rhs_entry(s: &StateEntry, p: &Params) -> StateEntry {
    let StateEntry { r1, u1, z1, eps1 } = *s;
    let vs = p.v_s();
    let g = p.g;
    let b = vs - p.c + r1 * r1 * (-1.0 / (2.0 * g) + 3.0 * vs * u1 * u1 / (2.0 * g));
    StateEntry {
        r1: -0.5 * r1 * eps1 * b,
        u1: -z1 - (-3.0 * vs + p.cusp_k() * u1 * u1) * u1 / g + 0.5 * u1 * eps1 * b,
        z1: eps1 * (u1 + 1.5 * z1 * b),
        eps1: 2.0 * eps1 * eps1 * b,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingVariant {
    /// Threshold `c` fixed.
    Plain,
    /// Threshold `c = v_s + sqrt(eps) c2`, which turns the drift into `r2^2 (-c2 + ...)`.
    SaddleNode,
}

pub fn rhs_scaling(s: &StateScaling, p: &Params, variant: ScalingVariant) -> Result<StateScaling, FieldError> {
    let StateScaling { r2, u2, y2, z2 } = *s;
    let vs = p.v_s();
    let g = p.g;
    let slow = y2 / (2.0 * g) + 3.0 * vs * u2 * u2 / (2.0 * g);
    let y2_dot = match variant {
        ScalingVariant::Plain => vs - p.c + r2 * r2 * slow,
        ScalingVariant::SaddleNode => {
            let c2 = p.c2.ok_or(FieldError::MissingC2)?;
            r2 * r2 * (-c2 + slow)
        }
    };
    Ok(StateScaling {
        r2: 0.0,
        u2: -z2 - (3.0 * vs * y2 + p.cusp_k() * u2 * u2) * u2 / g,
        y2: y2_dot,
        z2: u2,
    })
}

/// Fast subsystem of the scaling chart with `y2` frozen.
pub fn rhs_lienard_fast(s: [f64; 2], y2: f64, p: &Params) -> [f64; 2] {
    let [u2, z2] = s;
    [-z2 - (3.0 * p.v_s() * y2 + p.cusp_k() * u2 * u2) * u2 / p.g, u2]
}

/// `U'' = Y U' - mu U` as a first-order system in `(U, U')`.
pub fn rhs_weber(y: f64, s: [f64; 2], mu: f64) -> [f64; 2] {
    [s[1], y * s[1] - mu * s[0]]
}

/// Entry to scaling chart. Needs `eps1 > 0`.
pub fn chart_entry_to_scaling(s: &StateEntry) -> Result<StateScaling, FieldError> {
    if !(s.eps1 > 0.0) {
        return Err(FieldError::ChartOverlap("eps1 > 0"));
    }
    let q = s.eps1.powf(0.25);
    Ok(StateScaling {
        r2: s.r1 * q,
        u2: s.u1 / q,
        y2: -1.0 / (q * q),
        z2: s.z1 / (q * q * q),
    })
}

/// Scaling to entry chart. Needs `y2 < 0`.
pub fn chart_scaling_to_entry(s: &StateScaling) -> Result<StateEntry, FieldError> {
    if !(s.y2 < 0.0) {
        return Err(FieldError::ChartOverlap("y2 < 0"));
    }
    let m = (-s.y2).sqrt();
    Ok(StateEntry {
        r1: s.r2 * m,
        u1: s.u2 / m,
        z1: s.z2 / (m * m * m),
        eps1: 1.0 / (s.y2 * s.y2),
    })
}

impl StateEntry {
    pub fn blowdown(&self) -> Blowdown {
        let r = self.r1;
        Blowdown { u: r * self.u1, y: -r * r, z: r * r * r * self.z1, eps: r.powi(4) * self.eps1 }
    }
}

impl StateScaling {
    pub fn blowdown(&self) -> Blowdown {
        let r = self.r2;
        Blowdown { u: r * self.u2, y: r * r * self.y2, z: r * r * r * self.z2, eps: r.powi(4) }
    }

    /// Scaling-chart coordinates of a center-manifold point with `eps > 0`.
    pub fn blowup(b: &Blowdown) -> Result<Self, FieldError> {
        if !(b.eps > 0.0) {
            return Err(FieldError::ChartOverlap("eps > 0"));
        }
        let r = b.eps.powf(0.25);
        Ok(StateScaling { r2: r, u2: b.u / r, y2: b.y / (r * r), z2: b.z / (r * r * r) })
    }
}

/// Center-manifold point of a symmetric-coordinate state.
pub fn sym_to_blowdown(s: &StateSym, p: &Params) -> Blowdown {
    Blowdown { u: s.u, y: s.y, z: s.z, eps: p.eps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(c: f64) -> Params {
        Params::new(-1.0, c, 0.01)
    }

    fn jacobian<F: Fn([f64; 4]) -> [f64; 4]>(f: F, s: [f64; 4]) -> [[f64; 4]; 4] {
        let mut j = [[0.0; 4]; 4];
        for k in 0..4 {
            let h = 1e-6 * (1.0 + s[k].abs());
            let mut a = s;
            let mut b = s;
            a[k] += h;
            b[k] -= h;
            let (fa, fb) = (f(a), f(b));
            for i in 0..4 {
                j[i][k] = (fa[i] - fb[i]) / (2.0 * h);
            }
        }
        j
    }

    #[test]
    fn cusp_constants_for_unit_repulsion() {
        let p = p(1.24);
        assert_relative_eq!(p.v_s(), 1.2909944487, epsilon = 1e-9);
        assert_relative_eq!(p.w_s(), 1.7213259316, epsilon = 1e-9);
        assert_relative_eq!(p.cusp_k(), 14.0, epsilon = 1e-12);
        assert_relative_eq!(p.lambda1(), -0.394997, epsilon = 1e-5);
        assert_relative_eq!(p.lambda2(), -1.605003, epsilon = 1e-5);
        assert_relative_eq!(p.mu(), 4.0633, epsilon = 1e-4);
    }

    #[test]
    fn sym_of_cusp_point_is_origin_with_shifted_x() {
        let p = p(1.24);
        let vs = p.v_s();
        let ws = p.w_s();
        let s = to_sym(&StateFull { v1: vs, v2: vs, w1: ws, w2: ws }, &p);
        assert_relative_eq!(s.x, vs);
        assert_eq!((s.u, s.y, s.z), (0.0, 0.0, 0.0));
    }

    #[test]
    fn sym_field_at_cusp_point() {
        let p = p(1.24);
        let s = StateSym { x: p.v_s(), u: 0.0, y: 0.0, z: 0.0 };
        let f = rhs_sym(&s, &p);
        assert!(f.x.abs() < 1e-14);
        assert_eq!(f.u, 0.0);
        assert_relative_eq!(f.y, 0.01 * (p.v_s() - 1.24), epsilon = 1e-15);
        assert_eq!(f.z, 0.0);
    }

    #[test]
    fn desing_field_vanishes_at_fold_point_and_threshold() {
        let p = p(1.24);
        let vs = p.v_s();
        for v in [[vs, vs], [1.24, 1.24], [-vs, -vs]] {
            let f = rhs_reduced_desing(v, &p);
            assert!(f[0].abs() < 1e-13 && f[1].abs() < 1e-13, "{v:?} {f:?}");
        }
    }

    #[test]
    fn desing_eigenvalues_at_cusp_point() {
        let p = p(1.24);
        let vs = p.v_s();
        let j = reduced_desing_jacobian([vs, vs], &p);
        // symmetric 2x2 with equal diagonal: eigenvalues a+b along (1,1), a-b along (1,-1)
        assert_relative_eq!(j[0][0] + j[0][1], p.lambda1(), epsilon = 1e-12);
        assert_relative_eq!(j[0][0] - j[0][1], p.lambda2(), epsilon = 1e-12);
    }

    #[test]
    fn cm_reduced_eigenvalues_are_rescaled_desing_eigenvalues() {
        let p = p(1.24);
        let h = 1e-6;
        let f = |u, y| rhs_reduced_cm([u, y], &p);
        let j = [
            [(f(h, 0.0)[0] - f(-h, 0.0)[0]) / (2.0 * h), (f(0.0, h)[0] - f(0.0, -h)[0]) / (2.0 * h)],
            [(f(h, 0.0)[1] - f(-h, 0.0)[1]) / (2.0 * h), (f(0.0, h)[1] - f(0.0, -h)[1]) / (2.0 * h)],
        ];
        assert!(j[0][1].abs() < 1e-9 && j[1][0].abs() < 1e-9);
        let mut eig = [j[0][0], j[1][1]];
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let scale = -2.0 * p.g;
        assert_relative_eq!(eig[0], p.lambda1() / scale, epsilon = 1e-8);
        assert_relative_eq!(eig[1], p.lambda2() / scale, epsilon = 1e-8);
        assert_relative_eq!(eig[0], -0.1975007, epsilon = 1e-6);
        assert_relative_eq!(eig[1], -0.8024993, epsilon = 1e-6);
        assert_relative_eq!(eig[1] / eig[0], p.mu(), epsilon = 1e-7);
    }

    #[test]
    fn cusp_graph_value() {
        assert_relative_eq!(cusp_q(0.1, -0.05, &p(1.24)), -0.00536492, epsilon = 1e-8);
    }

    #[test]
    fn weber_field() {
        assert_eq!(rhs_weber(0.0, [1.0, 0.0], 2.7), [0.0, -2.7]);
    }

    #[test]
    fn lienard_field_at_origin_and_on_axis() {
        let p = p(1.24);
        assert_eq!(rhs_lienard_fast([0.0, 0.0], -0.3, &p), [0.0, 0.0]);
        let f = rhs_lienard_fast([0.0, -0.5], -0.3, &p);
        assert_eq!(f, [0.5, 0.0]);
    }

    #[test]
    fn saddle_node_requires_c2() {
        let s = StateScaling { r2: 0.1, u2: 0.0, y2: 0.0, z2: 0.0 };
        assert_eq!(rhs_scaling(&s, &p(1.24), ScalingVariant::SaddleNode), Err(FieldError::MissingC2));
        let q = Params::saddle_node(-1.0, -0.1, 0.01);
        assert_relative_eq!(q.c, q.v_s() - 0.01, epsilon = 1e-15);
        let f = rhs_scaling(&s, &q, ScalingVariant::SaddleNode).unwrap();
        assert_relative_eq!(f.y2, 0.01 * 0.1, epsilon = 1e-15);
    }

    #[test]
    fn chart_change_needs_overlap() {
        let e = StateEntry { r1: 0.3, u1: 0.1, z1: 0.0, eps1: 0.0 };
        assert!(chart_entry_to_scaling(&e).is_err());
        let s = StateScaling { r2: 0.3, u2: 0.1, y2: 0.2, z2: 0.0 };
        assert!(chart_scaling_to_entry(&s).is_err());
    }

    #[test]
    fn validation() {
        assert!(Params::new(0.5, 1.0, 0.01).validate().is_err());
        assert!(Params::new(-1.0, f64::NAN, 0.01).validate().is_err());
        assert!(Params::new(-1.0, 1.0, -0.01).validate().is_err());
        assert!(Params::new(-1.0, 1.0, 0.0).validate().is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn sym_round_trip(v1 in -3.0..3.0f64, v2 in -3.0..3.0f64, w1 in -3.0..3.0f64, w2 in -3.0..3.0f64) {
            let p = p(1.2);
            let s = StateFull { v1, v2, w1, w2 };
            let back = from_sym(&to_sym(&s, &p), &p);
            for (a, b) in s.to_array().iter().zip(back.to_array()) {
                prop_assert!((a - b).abs() < 1e-14);
            }
        }

        #[test]
        fn swap_equivariance(v1 in -3.0..3.0f64, v2 in -3.0..3.0f64, w1 in -3.0..3.0f64, w2 in -3.0..3.0f64) {
            let p = p(1.2);
            let s = StateFull { v1, v2, w1, w2 };
            let a = rhs_full(&s.swapped(), &p);
            let b = rhs_full(&s, &p).swapped();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn sym_field_is_conjugate_to_full_field(v1 in -2.0..2.0f64, v2 in -2.0..2.0f64, w1 in -3.0..3.0f64, w2 in -3.0..3.0f64, c in 0.5..1.5f64) {
            let p = Params::new(-0.7, c, 0.03);
            let s = StateFull { v1, v2, w1, w2 };
            let pushed = to_sym(&rhs_full(&s, &p), &p);
            let ws = p.w_s();
            // to_sym is affine: the pushforward of a vector drops the w_s shift
            let pushed = StateSym { y: pushed.y + ws, ..pushed };
            let direct = rhs_sym(&to_sym(&s, &p), &p);
            for (a, b) in pushed.to_array().iter().zip(direct.to_array()) {
                prop_assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn synchronous_subspace_is_invariant(x in -2.0..2.0f64, y in -2.0..2.0f64) {
            let p = p(1.1);
            let f = rhs_sym(&StateSym { x, u: 0.0, y, z: 0.0 }, &p);
            prop_assert_eq!(f.u, 0.0);
            prop_assert_eq!(f.z, 0.0);
        }

        #[test]
        fn entry_chart_keeps_r_to_the_fourth_eps(r1 in 0.01..0.5f64, u1 in -1.0..1.0f64, z1 in -1.0..1.0f64, eps1 in 0.01..1.0f64) {
            let p = p(1.24);
            let s = StateEntry { r1, u1, z1, eps1 };
            let f = rhs_entry(&s, &p);
            let d = 4.0 * r1.powi(3) * f.r1 * eps1 + r1.powi(4) * f.eps1;
            prop_assert!(d.abs() < 1e-14);
        }

        #[test]
        fn chart_round_trip_and_blowdown(r1 in 0.01..0.5f64, u1 in -1.0..1.0f64, z1 in -1.0..1.0f64, eps1 in 0.01..1.0f64) {
            let e = StateEntry { r1, u1, z1, eps1 };
            let s = chart_entry_to_scaling(&e).unwrap();
            let back = chart_scaling_to_entry(&s).unwrap();
            for (a, b) in e.to_array().iter().zip(back.to_array()) {
                prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
            }
            let (be, bs) = (e.blowdown(), s.blowdown());
            for (a, b) in [(be.u, bs.u), (be.y, bs.y), (be.z, bs.z), (be.eps, bs.eps)] {
                prop_assert!((a - b).abs() < 1e-13);
            }
        }

        #[test]
        fn entry_field_is_rescaled_scaling_field(r1 in 0.05..0.5f64, u1 in -1.0..1.0f64, z1 in -1.0..1.0f64, eps1 in 0.05..1.0f64, c in 1.1..1.28f64) {
            let p = p(c);
            let e = StateEntry { r1, u1, z1, eps1 };
            let to_s = |a: [f64; 4]| chart_entry_to_scaling(&StateEntry::from_array(a)).unwrap().to_array();
            let j = jacobian(to_s, e.to_array());
            let fe = rhs_entry(&e, &p).to_array();
            let mut pushed = [0.0; 4];
            for i in 0..4 {
                for k in 0..4 {
                    pushed[i] += j[i][k] * fe[k];
                }
                pushed[i] /= eps1.sqrt();
            }
            let fs = rhs_scaling(&StateScaling::from_array(to_s(e.to_array())), &p, ScalingVariant::Plain).unwrap().to_array();
            for i in 0..4 {
                prop_assert!((pushed[i] - fs[i]).abs() < 1e-6 * (1.0 + fs[i].abs()), "{i}: {} vs {}", pushed[i], fs[i]);
            }
        }

        #[test]
        fn scaling_field_is_blown_up_center_manifold_field(r2 in 0.05..0.5f64, u2 in -1.0..1.0f64, y2 in -2.0..2.0f64, z2 in -1.0..1.0f64) {
            let p = Params::new(-1.0, 1.24, r2.powi(4));
            let s = StateScaling { r2, u2, y2, z2 };
            let b = s.blowdown();
            let f = rhs_center_manifold([b.u, b.y, b.z], &p);
            let fs = rhs_scaling(&s, &p, ScalingVariant::Plain).unwrap();
            let r = r2;
            prop_assert!((f[0] - r.powi(3) * fs.u2).abs() < 1e-13);
            prop_assert!((f[1] - r.powi(4) * fs.y2).abs() < 1e-13);
            prop_assert!((f[2] - r.powi(5) * fs.z2).abs() < 1e-13);
        }
    }
}
