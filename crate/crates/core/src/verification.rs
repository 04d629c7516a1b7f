//! Exact solutions, body forces, error norms, and convergence rates for the
//! benchmark problems.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::material::{small_strain, Material};
use crate::pointcloud::Point;

/// Constants of the trigonometric/exponential manufactured field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for ManufacturedConstants {
    fn default() -> Self {
        Self { a: 0.2, b: -0.15, c: -0.15, d: 0.1 }
    }
}

pub fn manufactured_solution(p: &Point, k: &ManufacturedConstants) -> Vector2<f64> {
    let (sx, cx) = (0.5 * PI * p.x).sin_cos();
    let (sy, cy) = (0.5 * PI * p.y).sin_cos();
    let e = (p.x + p.y).exp();
    Vector2::new(k.a * sx * cy + k.b * e, k.c * cx * sy + k.d * e)
}

/// Body force balancing the manufactured field, `b = -div P(u)`.
pub fn manufactured_body_force(p: &Point, k: &ManufacturedConstants, m: &Material) -> Vector2<f64> {
    let (sx, cx) = (0.5 * PI * p.x).sin_cos();
    let (sy, cy) = (0.5 * PI * p.y).sin_cos();
    let e = (p.x + p.y).exp();
    let (l, mu) = (m.lambda, m.mu);
    let q = PI * PI / 4.0;
    let div1 = -q * ((k.a + k.c) * l + (3.0 * k.a + k.c) * mu) * sx * cy
        + ((k.b + k.d) * l + (3.0 * k.b + k.d) * mu) * e;
    let div2 = -q * ((k.a + k.c) * l + (k.a + 3.0 * k.c) * mu) * cx * sy
        + ((k.b + k.d) * l + (k.b + 3.0 * k.d) * mu) * e;
    -Vector2::new(div1, div2)
}

/// Ratio `u_r / (T r / 2 mu)` far from the hole for a traction-free hole
/// under equal bi-axial tension: `mu / (lambda + mu)`, i.e. `1 - 2 nu` in
/// plane strain.
pub fn airy_far_field_factor(m: &Material) -> f64 {
    m.mu / (m.lambda + m.mu)
}

/// Displacement around a traction-free circular hole of radius `a` under
/// far-field equal bi-axial tension `t`, in polar coordinates about the
/// hole centre.
pub fn airy_hole_displacement(r: f64, theta: f64, t: f64, a: f64, m: &Material) -> Result<Vector2<f64>> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("hole radius must be positive, got {a}")));
    }
    if !(r >= a * (1.0 - 1e-12)) {
        let (s, c) = theta.sin_cos();
        return Err(Error::OutOfDomain {
            x: r * c,
            y: r * s,
            detail: format!("radius {r} is inside the hole of radius {a}"),
        });
    }
    let amp = t * a / (2.0 * m.mu) * (airy_far_field_factor(m) * r / a + a / r);
    let (s, c) = theta.sin_cos();
    Ok(Vector2::new(amp * c, amp * s))
}

/// Exact displacement of a benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactField {
    Manufactured(ManufacturedConstants),
    PlateHole { tension: f64, radius: f64 },
    Affine { gradient: Matrix2<f64>, shift: Vector2<f64> },
}

impl ExactField {
    pub fn displacement(&self, p: &Point, m: &Material) -> Result<Vector2<f64>> {
        match self {
            ExactField::Manufactured(k) => Ok(manufactured_solution(p, k)),
            ExactField::PlateHole { tension, radius } => {
                airy_hole_displacement(p.norm(), p.y.atan2(p.x), *tension, *radius, m)
            }
            ExactField::Affine { gradient, shift } => Ok(gradient * p + shift),
        }
    }

    pub fn body_force(&self, p: &Point, m: &Material) -> Vector2<f64> {
        match self {
            ExactField::Manufactured(k) => manufactured_body_force(p, k, m),
            _ => Vector2::zeros(),
        }
    }
}

/// Root-mean-square over every displacement component of `nodes`.
pub fn rms_error(
    numeric: &[Vector2<f64>],
    exact: &dyn Fn(&Point) -> Vector2<f64>,
    positions: &[Point],
    nodes: &[usize],
) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::InvalidArgument("RMS error over an empty node set".into()));
    }
    let sum: f64 = nodes
        .iter()
        .map(|&i| (numeric[i] - exact(&positions[i])).norm_squared())
        .sum();
    Ok((sum / (2 * nodes.len()) as f64).sqrt())
}

/// Pairwise observed rates `log(e_k / e_k+1) / log(h_k / h_k+1)`; `None`
/// where an error is zero, negative, or not finite.
pub fn convergence_rate(errors: &[f64], spacings: &[f64]) -> Result<Vec<Option<f64>>> {
    if errors.len() != spacings.len() || errors.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least two matching errors and spacings, got {} and {}",
            errors.len(),
            spacings.len()
        )));
    }
    if spacings.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(Error::InvalidArgument("spacings must be positive and strictly decreasing".into()));
    }
    let ok = |e: f64| e > 0.0 && e.is_finite();
    Ok(errors
        .windows(2)
        .zip(spacings.windows(2))
        .map(|(e, h)| (ok(e[0]) && ok(e[1])).then(|| (e[0] / e[1]).ln() / (h[0] / h[1]).ln()))
        .collect())
}

/// Fourth-order central difference of `f` along `dir`.
fn central<T>(f: impl Fn(&Point) -> T, p: &Point, dir: Vector2<f64>, step: f64) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let at = |k: f64| f(&(p + dir * (k * step)));
    (at(-2.0) - at(2.0) + (at(1.0) - at(-1.0)) * 8.0) * (1.0 / (12.0 * step))
}

/// Finite-difference displacement gradient `du_a / dx_b`.
pub fn fd_gradient(u: &dyn Fn(&Point) -> Vector2<f64>, p: &Point, step: f64) -> Matrix2<f64> {
    let gx = central(u, p, Vector2::x(), step);
    let gy = central(u, p, Vector2::y(), step);
    Matrix2::from_columns(&[gx, gy])
}

/// Finite-difference `div P(u)` using nested fourth-order differences.
pub fn fd_stress_divergence(u: &dyn Fn(&Point) -> Vector2<f64>, p: &Point, m: &Material, step: f64) -> Vector2<f64> {
    let stress = |q: &Point| {
        let f = Matrix2::identity() + fd_gradient(u, q, step);
        let eps = small_strain(&f);
        Matrix2::identity() * (m.lambda * eps.trace()) + eps * (2.0 * m.mu)
    };
    let dx = central(stress, p, Vector2::x(), step);
    let dy = central(stress, p, Vector2::y(), step);
    dx.column(0) + dy.column(1)
}

/// Largest of `|b + div P(u)| / scale` over `points`. A non-positive
/// `scale` means the largest `|div P|` seen.
pub fn body_force_consistency(
    u: &dyn Fn(&Point) -> Vector2<f64>,
    b: &dyn Fn(&Point) -> Vector2<f64>,
    m: &Material,
    points: &[Point],
    step: f64,
    scale: f64,
) -> f64 {
    let divs: Vec<_> = points.iter().map(|p| fd_stress_divergence(u, p, m, step)).collect();
    let scale = if scale > 0.0 { scale } else { divs.iter().map(|d| d.norm()).fold(0.0, f64::max) };
    points
        .iter()
        .zip(&divs)
        .map(|(p, d)| (b(p) + d).norm() / scale)
        .fold(0.0, f64::max)
}

/// One line of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub case: String,
    pub formulation: String,
    pub order: usize,
    pub level: usize,
    pub h: f64,
    pub rms: Option<f64>,
    pub rate: Option<f64>,
    pub grid: String,
    pub delta: String,
    pub poisson: f64,
    pub seed: u64,
    pub status: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
}

pub const REPORT_HEADER: [&str; 12] =
    ["case", "formulation", "order", "level", "h", "rms", "rate", "grid", "delta", "nu", "seed", "status"];

impl ConvergenceReport {
    /// Fills `rate` of each row from the previous level of the same run.
    pub fn fill_rates(rows: &mut [ReportRow]) {
        for k in 1..rows.len() {
            let (prev, cur) = (&rows[k - 1], &rows[k]);
            let same = prev.case == cur.case
                && prev.formulation == cur.formulation
                && prev.order == cur.order
                && prev.grid == cur.grid
                && prev.delta == cur.delta
                && prev.level + 1 == cur.level;
            let rate = match (same, prev.rms, cur.rms) {
                (true, Some(e0), Some(e1)) if cur.h < prev.h => {
                    convergence_rate(&[e0, e1], &[prev.h, cur.h]).ok().and_then(|r| r[0])
                }
                _ => None,
            };
            rows[k].rate = rate;
        }
    }

    /// Rate over the last refinement interval of the run matching `pred`.
    pub fn final_rate(&self, pred: impl Fn(&ReportRow) -> bool) -> Option<f64> {
        self.rows.iter().filter(|r| pred(r)).last().and_then(|r| r.rate)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(REPORT_HEADER).map_err(csv_err)?;
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.6e}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.case.clone(),
                r.formulation.clone(),
                r.order.to_string(),
                r.level.to_string(),
                format!("{:.6e}", r.h),
                opt(r.rms),
                opt(r.rate),
                r.grid.clone(),
                r.delta.clone(),
                r.poisson.to_string(),
                r.seed.to_string(),
                r.status.clone(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn steel() -> Material {
        Material::plane_strain(100_000.0, 0.3).unwrap()
    }

    #[test]
    fn manufactured_reference_values() {
        let k = ManufacturedConstants::default();
        let u = manufactured_solution(&Point::new(0.0, 0.0), &k);
        assert!((u[0] + 0.15).abs() < 1e-15 && (u[1] - 0.1).abs() < 1e-15);
        let u = manufactured_solution(&Point::new(1.0, 0.0), &k);
        assert!((u[0] - (k.a + k.b * 1f64.exp())).abs() < 1e-14);
    }

    #[test]
    fn sine_part_is_odd_in_x() {
        let k = ManufacturedConstants { a: 0.7, b: 0.0, c: 0.0, d: 0.0 };
        for (x, y) in [(0.3, 0.1), (0.9, -0.4)] {
            let l = manufactured_solution(&Point::new(x, y), &k)[0];
            let r = manufactured_solution(&Point::new(-x, y), &k)[0];
            assert!((l + r).abs() < 1e-15);
        }
    }

    #[test]
    fn body_force_at_origin_and_zero_constants() {
        let m = steel();
        let k = ManufacturedConstants::default();
        let b = manufactured_body_force(&Point::new(0.0, 0.0), &k, &m);
        let expect = -((k.b + k.d) * m.lambda + (3.0 * k.b + k.d) * m.mu);
        assert!((b[0] - expect).abs() < 1e-9);
        let zero = ManufacturedConstants { a: 0.0, b: 0.0, c: 0.0, d: 0.0 };
        assert_eq!(manufactured_body_force(&Point::new(0.3, 0.2), &zero, &m), Vector2::zeros());
    }

    #[test]
    fn body_force_matches_finite_differences() {
        let m = steel();
        let k = ManufacturedConstants::default();
        let pts: Vec<Point> = (0..20)
            .map(|i| {
                let t = i as f64 / 20.0;
                Point::new((7.3 * t).sin(), (3.1 * t + 0.4).cos())
            })
            .collect();
        let err = body_force_consistency(
            &|p| manufactured_solution(p, &k),
            &|p| manufactured_body_force(p, &k, &m),
            &m,
            &pts,
            1e-3,
            0.0,
        );
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn airy_rim_and_axes() {
        let m = steel();
        let rim = airy_hole_displacement(1.0, 0.0, 1.0, 1.0, &m).unwrap();
        let expect = 1.0 / (2.0 * m.mu) * (airy_far_field_factor(&m) + 1.0);
        assert!((rim[0] - expect).abs() < 1e-18 && rim[1] == 0.0);
        let up = airy_hole_displacement(2.0, PI / 2.0, 1.0, 1.0, &m).unwrap();
        assert!(up[0].abs() < 1e-18);
        let far = airy_hole_displacement(1e8, 0.0, 1.0, 1.0, &m).unwrap();
        assert!((far[0] / 1e8 - airy_far_field_factor(&m) / (2.0 * m.mu)).abs() < 1e-12);
        assert!((airy_far_field_factor(&m) - 0.4).abs() < 1e-14);
    }

    #[test]
    fn airy_inside_hole_is_out_of_domain() {
        let err = airy_hole_displacement(0.5, 0.3, 1.0, 1.0, &steel()).unwrap_err();
        assert!(matches!(err, Error::OutOfDomain { .. }));
    }

    fn airy_stress(p: &Point, m: &Material) -> Matrix2<f64> {
        let u = |q: &Point| airy_hole_displacement(q.norm(), q.y.atan2(q.x), 1.0, 1.0, m).unwrap();
        let eps = small_strain(&(Matrix2::identity() + fd_gradient(&u, p, 1e-4)));
        Matrix2::identity() * (m.lambda * eps.trace()) + eps * (2.0 * m.mu)
    }

    #[test]
    fn airy_stress_is_lame_biaxial_field() {
        // sigma_rr = T (1 - a^2/r^2), sigma_tt = T (1 + a^2/r^2), no shear:
        // zero traction on the rim and bi-axial tension far away.
        let m = steel();
        for theta in [0.1, 0.7, 1.3] {
            let n = Vector2::new(f64::cos(theta), f64::sin(theta));
            let t = Vector2::new(-n.y, n.x);
            for r in [1.01, 1.5, 3.0, 1000.0] {
                let s = airy_stress(&(n * r), &m);
                let k = 1.0 / (r * r);
                assert!((n.dot(&(s * n)) - (1.0 - k)).abs() < 1e-6, "r = {r}");
                assert!((t.dot(&(s * t)) - (1.0 + k)).abs() < 1e-6, "r = {r}");
                assert!(t.dot(&(s * n)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn airy_field_is_in_equilibrium() {
        let m = steel();
        let u = |q: &Point| airy_hole_displacement(q.norm(), q.y.atan2(q.x), 1.0, 1.0, &m).unwrap();
        let pts = [Point::new(1.5, 0.5), Point::new(0.3, 2.0), Point::new(3.0, 3.0)];
        // relative to the stress scale T / a
        let err = body_force_consistency(&u, &|_| Vector2::zeros(), &m, &pts, 1e-3, 1.0);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn rms_reference_values() {
        let pos = [Point::new(0.0, 0.0)];
        let e = rms_error(&[Vector2::new(3.0, 4.0)], &|_| Vector2::zeros(), &pos, &[0]).unwrap();
        assert!((e - 5.0 / 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(rms_error(&[Vector2::new(3.0, 4.0)], &|_| Vector2::new(3.0, 4.0), &pos, &[0]).unwrap(), 0.0);
        assert!(rms_error(&[], &|_| Vector2::zeros(), &[], &[]).is_err());
    }

    #[test]
    fn rate_reference_values() {
        let r = convergence_rate(&[1e-2, 2.5e-3], &[0.2, 0.1]).unwrap();
        assert!((r[0].unwrap() - 2.0).abs() < 1e-12);
        let r = convergence_rate(&[1e-2, 5e-3], &[0.2, 0.1]).unwrap();
        assert!((r[0].unwrap() - 1.0).abs() < 1e-12);
        let r = convergence_rate(&[3.0, 3.0, 3.0], &[0.2, 0.1, 0.05]).unwrap();
        assert!(r.iter().all(|v| v.unwrap() == 0.0));
        assert_eq!(convergence_rate(&[0.0, 1.0], &[0.2, 0.1]).unwrap(), vec![None]);
        assert!(convergence_rate(&[1.0], &[0.1]).is_err());
        assert!(convergence_rate(&[1.0, 0.5], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn report_rates_and_csv() {
        let row = |level: usize, h: f64, rms: f64| ReportRow {
            case: "manufactured".into(),
            formulation: "ba_rk".into(),
            order: 2,
            level,
            h,
            rms: Some(rms),
            rate: None,
            grid: "uniform".into(),
            delta: "3.5h".into(),
            poisson: 0.3,
            seed: 7,
            status: "ok".into(),
        };
        let mut rows = vec![row(0, 0.2, 4e-3), row(1, 0.1, 1e-3)];
        ConvergenceReport::fill_rates(&mut rows);
        assert_eq!(rows[0].rate, None);
        assert!((rows[1].rate.unwrap() - 2.0).abs() < 1e-12);
        let report = ConvergenceReport { rows };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("case,formulation,order,level,h,rms,rate,"));
        assert_eq!(text.lines().count(), 3);
    }

    proptest! {
        #[test]
        fn rms_is_homogeneous(e in proptest::collection::vec(-10.0..10.0f64, 2..20), s in 0.1..10.0f64) {
            let pos: Vec<Point> = (0..e.len()).map(|i| Point::new(i as f64, 0.0)).collect();
            let u: Vec<_> = e.iter().map(|v| Vector2::new(*v, -v)).collect();
            let us: Vec<_> = u.iter().map(|v| v * s).collect();
            let nodes: Vec<usize> = (0..e.len()).collect();
            let a = rms_error(&u, &|_| Vector2::zeros(), &pos, &nodes).unwrap();
            let b = rms_error(&us, &|_| Vector2::zeros(), &pos, &nodes).unwrap();
            prop_assert!((b - s * a).abs() <= 1e-12 * (1.0 + b));
        }
    }
}
