//! Critical manifold, folded singularities and their bifurcations in `c`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::numerics::{brent, NumericsError};
use crate::vfields::{cusp_q, reduced_desing_jacobian, rhs_reduced_desing, Params};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("c = {c} sits on the asymptote sqrt(1 - g/3): the off-diagonal folded singularities are unbounded")]
    AsymptoteParameter { c: f64 },
    #[error("Newton polish of {label:?} stalled with residual {residual:e}")]
    PolishFailed { label: Singularity, residual: f64 },
    #[error("c range [{0}, {1}] must lie inside (0, 2)")]
    BadRange(f64, f64),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Default half-width of the band `|det Dh|` treated as the fold.
pub const FOLD_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    /// Repelling, both fast eigenvalues positive.
    RepellingNode,
    /// Fold line with `tr Dh > 0`.
    FoldUnstable,
    Saddle,
    /// Fold line with `tr Dh < 0`.
    FoldStable,
    /// Attracting, both fast eigenvalues negative.
    AttractingNode,
}

impl Region {
    pub fn tag(&self) -> &'static str {
        match self {
            Region::RepellingNode => "C_RN",
            Region::FoldUnstable => "F_u",
            Region::Saddle => "C_S",
            Region::FoldStable => "F_s",
            Region::AttractingNode => "C_AN",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManifoldPoint {
    pub v: [f64; 2],
    /// `w = h(v)`.
    pub w: [f64; 2],
    pub dh: [[f64; 2]; 2],
    pub trace: f64,
    pub det: f64,
    /// Always real: `tr^2 - 4 det = 9 (v1^2 - v2^2)^2 + 4 g^2`.
    pub eigenvalues: [f64; 2],
    pub region: Region,
}

pub fn critical_graph(v1: f64, v2: f64, p: &Params) -> ManifoldPoint {
    critical_graph_with_band(v1, v2, p, FOLD_BAND)
}

pub fn critical_graph_with_band(v1: f64, v2: f64, p: &Params, band: f64) -> ManifoldPoint {
    let g = p.g;
    let w = [-v1.powi(3) + 3.0 * v1 + g * (v2 - v1), -v2.powi(3) + 3.0 * v2 + g * (v1 - v2)];
    let dh = [[-3.0 * v1 * v1 + 3.0 - g, g], [g, -3.0 * v2 * v2 + 3.0 - g]];
    let trace = -3.0 * (v1 * v1 + v2 * v2) + 6.0 - 2.0 * g;
    let s = v1 * v1 + v2 * v2;
    let det = 9.0 * v1 * v1 * v2 * v2 - 3.0 * (3.0 - g) * s + 3.0 * (3.0 - 2.0 * g);
    let disc = (9.0 * (v1 * v1 - v2 * v2).powi(2) + 4.0 * g * g).sqrt();
    let eigenvalues = [(trace - disc) / 2.0, (trace + disc) / 2.0];
    let region = if det.abs() <= band {
        if trace > 0.0 { Region::FoldUnstable } else { Region::FoldStable }
    } else if det < 0.0 {
        Region::Saddle
    } else if trace > 0.0 {
        Region::RepellingNode
    } else {
        Region::AttractingNode
    };
    ManifoldPoint { v: [v1, v2], w, dh, trace, det, eigenvalues, region }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldRadii {
    pub m_u: f64,
    pub m_s: Option<f64>,
}

/// Polar radii at angle `theta` where `det Dh = 0`.
pub fn fold_radii(theta: f64, p: &Params) -> FoldRadii {
    let a = (theta.cos() * theta.sin()).powi(2);
    let b = 1.0 - p.g / 3.0;
    let c = 1.0 - 2.0 * p.g / 3.0;
    if a < 1e-300 {
        return FoldRadii { m_u: (c / b).sqrt(), m_s: None };
    }
    let root = (b * b - 4.0 * a * c).max(0.0).sqrt();
    let small = 2.0 * c / (b + root);
    let large = (b + root) / (2.0 * a);
    FoldRadii { m_u: small.sqrt(), m_s: Some(large.sqrt()) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Singularity {
    /// Regular equilibrium at `v1 = v2 = c`.
    Q,
    F1,
    F2,
    F3,
    F4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Kind {
    StableNode,
    UnstableNode,
    Saddle,
    StableFocus,
    UnstableFocus,
    /// A zero eigenvalue.
    Degenerate,
}

impl Kind {
    pub fn tag(&self) -> &'static str {
        match self {
            Kind::StableNode => "stable-node",
            Kind::UnstableNode => "unstable-node",
            Kind::Saddle => "saddle",
            Kind::StableFocus => "stable-focus",
            Kind::UnstableFocus => "unstable-focus",
            Kind::Degenerate => "degenerate",
        }
    }
}

pub fn eigenvalues_2x2(j: [[f64; 2]; 2]) -> [Complex64; 2] {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = Complex64::new(tr * tr / 4.0 - det, 0.0).sqrt();
    let half = Complex64::new(tr / 2.0, 0.0);
    [half - disc, half + disc]
}

fn classify(eig: &[Complex64; 2]) -> Kind {
    let scale = eig[0].norm().max(eig[1].norm()).max(1.0);
    if eig.iter().any(|e| e.norm() < 1e-12 * scale) {
        return Kind::Degenerate;
    }
    if eig[0].im.abs() > 0.0 {
        return if eig[0].re < 0.0 { Kind::StableFocus } else { Kind::UnstableFocus };
    }
    match (eig[0].re < 0.0, eig[1].re < 0.0) {
        (true, true) => Kind::StableNode,
        (false, false) => Kind::UnstableNode,
        _ => Kind::Saddle,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularityReport {
    pub label: Singularity,
    pub v: [f64; 2],
    pub x: f64,
    pub u: f64,
    /// Location in the shifted slow coordinates `(y, z)`.
    pub y: f64,
    pub z: f64,
    pub eigenvalues: [Complex64; 2],
    pub kind: Kind,
    pub region: Region,
    pub det_dh: f64,
    /// Norm of the desingularized reduced field at the reported point.
    pub residual: f64,
}

fn report(label: Singularity, v: [f64; 2], p: &Params) -> SingularityReport {
    // det Dh is quartic in v, so the fold band scales with |v|^4
    let scale = (1.0 + v[0] * v[0] + v[1] * v[1]).powi(2);
    let m = critical_graph_with_band(v[0], v[1], p, FOLD_BAND * scale);
    let eig = eigenvalues_2x2(reduced_desing_jacobian(v, p));
    let f = rhs_reduced_desing(v, p);
    SingularityReport {
        label,
        v,
        x: 0.5 * (v[0] + v[1]),
        u: 0.5 * (v[0] - v[1]),
        y: 0.5 * (m.w[0] + m.w[1]) - p.w_s(),
        z: 0.5 * (m.w[0] - m.w[1]),
        eigenvalues: eig,
        kind: classify(&eig),
        region: m.region,
        det_dh: m.det,
        residual: f[0].hypot(f[1]),
    }
}

fn newton_polish(v0: [f64; 2], p: &Params, label: Singularity) -> Result<[f64; 2], GeometryError> {
    let mut v = v0;
    let norm = |f: [f64; 2]| f[0].hypot(f[1]);
    for _ in 0..50 {
        let f = rhs_reduced_desing(v, p);
        if norm(f) < 1e-14 * (1.0 + v[0].abs() + v[1].abs()).powi(3) {
            return Ok(v);
        }
        let j = reduced_desing_jacobian(v, p);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 {
            break;
        }
        let dx = (j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let dy = (-j[1][0] * f[0] + j[0][0] * f[1]) / det;
        v = [v[0] - dx, v[1] - dy];
        if dx.hypot(dy) < 1e-15 * (1.0 + v[0].abs()) {
            return Ok(v);
        }
    }
    let residual = norm(rhs_reduced_desing(v, p));
    if residual < 1e-10 {
        Ok(v)
    } else {
        Err(GeometryError::PolishFailed { label, residual })
    }
}

/// The regular equilibrium of the reduced flow.
pub fn regular_singularity(p: &Params) -> SingularityReport {
    report(Singularity::Q, [p.c, p.c], p)
}

/// Folded singularities `f1, f2` and, where they exist, `f3, f4`.
pub fn folded_singularities(p: &Params) -> Result<Vec<SingularityReport>, GeometryError> {
    let g = p.g;
    let c = p.c;
    let vs = p.v_s();
    let mut out = vec![report(Singularity::F1, [vs, vs], p), report(Singularity::F2, [-vs, -vs], p)];
    let denom = 3.0 * c * c + g - 3.0;
    if denom.abs() <= 1e-14 * (3.0 - g) {
        return Err(GeometryError::AsymptoteParameter { c });
    }
    let x = g * c / denom;
    let u2 = (x - c).powi(2) + 1.0 - c * c;
    if u2 > 0.0 {
        let u = u2.sqrt();
        for (label, s) in [(Singularity::F3, 1.0), (Singularity::F4, -1.0)] {
            let v = newton_polish([x + s * u, x - s * u], p, label)?;
            out.push(report(label, v, p));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenSummary {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mu: Option<f64>,
    /// Eigenvalues of the full system at the equilibrium along the synchronous plane.
    pub nu12: [Complex64; 2],
    /// Eigenvalues transverse to the synchronous plane.
    pub nu34: [Complex64; 2],
    /// Set when `c = v_s` exactly.
    pub saddle_node_degenerate: bool,
}

fn pair(tr: f64, eps: f64) -> [Complex64; 2] {
    let root = Complex64::new(tr * tr - 4.0 * eps, 0.0).sqrt();
    let t = Complex64::new(tr, 0.0);
    [(t + root) / 2.0, (t - root) / 2.0]
}

pub fn eigen_summary(p: &Params) -> EigenSummary {
    let l1 = p.lambda1();
    let l2 = p.lambda2();
    let c2 = p.c * p.c;
    EigenSummary {
        lambda1: l1,
        lambda2: l2,
        mu: (l1 != 0.0).then(|| l2 / l1),
        nu12: pair(3.0 - 3.0 * c2, p.eps),
        nu34: pair(3.0 - 3.0 * c2 - 2.0 * p.g, p.eps),
        saddle_node_degenerate: l1 == 0.0,
    }
}

/// Threshold `c` in `bracket` where the transverse pair at the equilibrium crosses the imaginary axis.
pub fn hopf_threshold(p: &Params, bracket: (f64, f64)) -> Result<f64, GeometryError> {
    let re = |c: f64| eigen_summary(&Params { c, ..*p }).nu34[0].re;
    Ok(brent(re, bracket.0, bracket.1, 1e-14, 200)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BifurcationKind {
    /// Pitchfork of the regular equilibrium.
    P1,
    /// Pitchfork of the cusp point.
    P2,
    /// Transcritical exchange between the regular equilibrium and the cusp point.
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BifurcationEvent {
    pub kind: BifurcationKind,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchRow {
    pub c: f64,
    pub branch: Singularity,
    pub x: f64,
    pub u: f64,
    pub eig1: f64,
    pub eig2: f64,
    pub kind: Kind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BifurcationDiagram {
    pub rows: Vec<BranchRow>,
    pub events: Vec<BifurcationEvent>,
}

fn diag_det(a: f64, c: f64, p: &Params) -> f64 {
    let j = reduced_desing_jacobian([a, a], &Params { c, ..*p });
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// Tabulates the reduced-flow equilibria over `n` values of `c` in `c_range`
/// and locates the bifurcations where a branch eigenvalue changes sign.
pub fn bifurcation_scan(p: &Params, c_range: (f64, f64), n: usize) -> Result<BifurcationDiagram, GeometryError> {
    let (lo, hi) = c_range;
    if !(lo > 0.0 && hi < 2.0 && lo < hi) || n < 2 {
        return Err(GeometryError::BadRange(lo, hi));
    }
    let vs = p.v_s();
    let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let rows: Vec<BranchRow> = grid
        .par_iter()
        .flat_map_iter(|&c| {
            let q = Params { c, ..*p };
            let mut reps = vec![regular_singularity(&q)];
            match folded_singularities(&q) {
                Ok(f) => reps.extend(f),
                Err(_) => reps.extend([report(Singularity::F1, [vs, vs], &q), report(Singularity::F2, [-vs, -vs], &q)]),
            }
            reps.into_iter().map(move |r| BranchRow {
                c,
                branch: r.label,
                x: r.x,
                u: r.u,
                eig1: r.eigenvalues[0].re,
                eig2: r.eigenvalues[1].re,
                kind: r.kind,
            })
        })
        .collect();

    let q_det = |c: f64| diag_det(c, c, p);
    let f1_det = |c: f64| diag_det(vs, c, p);
    let roots = |f: &dyn Fn(f64) -> f64| -> Result<Vec<f64>, GeometryError> {
        let mut out = Vec::new();
        for w in grid.windows(2) {
            let (fa, fb) = (f(w[0]), f(w[1]));
            if fa == 0.0 {
                out.push(w[0]);
            } else if fa.signum() != fb.signum() && fb != 0.0 {
                out.push(brent(f, w[0], w[1], 1e-13, 200)?);
            }
        }
        if f(hi) == 0.0 {
            out.push(hi);
        }
        Ok(out)
    };
    let rq = roots(&q_det)?;
    let rf = roots(&f1_det)?;
    let mut events = Vec::new();
    for &c in &rq {
        let shared = rf.iter().any(|&d| (d - c).abs() < 1e-6);
        events.push(BifurcationEvent { kind: if shared { BifurcationKind::T } else { BifurcationKind::P1 }, c });
    }
    for &c in &rf {
        if !rq.iter().any(|&d| (d - c).abs() < 1e-6) {
            events.push(BifurcationEvent { kind: BifurcationKind::P2, c });
        }
    }
    events.sort_by(|a, b| a.c.total_cmp(&b.c));
    Ok(BifurcationDiagram { rows, events })
}

impl BifurcationDiagram {
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[String]) -> std::io::Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        for e in &self.events {
            writeln!(w, "# bifurcation {:?} at c = {:.12}", e.kind, e.c)?;
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["c", "branch", "x", "u", "eig1", "eig2", "stability"])?;
        for r in &self.rows {
            out.write_record([
                format!("{:.10}", r.c),
                format!("{:?}", r.branch),
                format!("{:.12e}", r.x),
                format!("{:.12e}", r.u),
                format!("{:.12e}", r.eig1),
                format!("{:.12e}", r.eig2),
                r.kind.tag().to_string(),
            ])?;
        }
        out.flush()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CuspData {
    pub v_s: f64,
    /// `9 v_s^2 + g`.
    pub k: f64,
    /// Normal-form constant `4 v_s^3 / ((9 v_s^2 + g) g^2)`.
    pub a: f64,
    g: f64,
    c: f64,
}

impl CuspData {
    pub fn q(&self, u: f64, y: f64) -> f64 {
        cusp_q(u, y, &Params::new(self.g, self.c, 0.0))
    }

    /// Fold curve `y = f(u^2)` to leading order.
    pub fn fold_y(&self, u_sq: f64) -> f64 {
        -(self.k / self.v_s) * u_sq
    }
}

pub fn cusp_data(p: &Params) -> CuspData {
    let vs = p.v_s();
    let k = p.cusp_k();
    CuspData { v_s: vs, k, a: 4.0 * vs.powi(3) / (k * p.g * p.g), g: p.g, c: p.c }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lyapunov {
    /// Coefficient of the blown-up layer problem.
    pub l1_hat: f64,
    /// `l1_hat / sqrt(eps)`, set when `eps > 0`.
    pub l1: Option<f64>,
}

pub fn lyapunov_coefficients(p: &Params) -> Lyapunov {
    let l1_hat = 3.0 * (p.g - 3.0) / (8.0 * p.g);
    Lyapunov { l1_hat, l1: (p.eps > 0.0).then(|| l1_hat / p.eps.sqrt()) }
}
