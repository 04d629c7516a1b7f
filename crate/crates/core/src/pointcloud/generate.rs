use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{box_distance, Lattice, Node, Point, PointCloud, Role};
use crate::error::{Error, Result};

const ROLE_TOL: f64 = 1e-10;

fn classify(lo: &Point, hi: &Point, p: &Point, collar: f64, spacing: f64) -> Option<Role> {
    let d = box_distance(lo, hi, p);
    if d <= ROLE_TOL * spacing {
        Some(Role::Bulk)
    } else if d <= collar + ROLE_TOL * spacing {
        Some(Role::Dirichlet)
    } else {
        None
    }
}

/// Cell-centred square grid on `[lo, hi]`, padded with a Dirichlet collar of
/// the given width (Euclidean distance to the box).
pub fn generate_uniform_grid(lo: Point, hi: Point, h: f64, collar: f64) -> Result<PointCloud> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {h}")));
    }
    if !(collar >= 0.0) {
        return Err(Error::InvalidArgument(format!("collar width must be non-negative, got {collar}")));
    }
    if !(hi.x > lo.x && hi.y > lo.y) {
        return Err(Error::InvalidArgument("hi must exceed lo componentwise".into()));
    }
    let mut cells = [0i64; 2];
    for a in 0..2 {
        let len = hi[a] - lo[a];
        let n = (len / h).round();
        if n < 1.0 || (n * h - len).abs() > 1e-9 * len {
            return Err(Error::InvalidArgument(format!(
                "extent {len} is not an integer multiple of h = {h}"
            )));
        }
        cells[a] = n as i64;
    }
    let pad = (collar / h).ceil() as i64;
    let origin = lo + Point::new(0.5 * h, 0.5 * h);

    let mut nodes = Vec::new();
    let mut index = Vec::new();
    for j in -pad..cells[1] + pad {
        for i in -pad..cells[0] + pad {
            let p = origin + Point::new(i as f64, j as f64) * h;
            if let Some(role) = classify(&lo, &hi, &p, collar, h) {
                nodes.push(Node {
                    id: nodes.len(),
                    position: p,
                    volume: h * h,
                    role,
                    param: None,
                });
                index.push([i, j]);
            }
        }
    }
    Ok(PointCloud {
        nodes,
        dim: 2,
        h_avg: h,
        domain_tag: format!("uniform[h={h}]"),
        lattice: Some(Lattice {
            origin,
            spacing: h,
            index,
            lo,
            hi,
        }),
    })
}

/// Perturbs a base lattice grid with i.i.d. normal noise, then refines it
/// `levels` times by midpoint subdivision of the logical lattice.
///
/// The returned vector holds `levels + 1` clouds; level `k` has spacing
/// `h / 2^k` and every node of level `k - 1` reappears in level `k` at the
/// same position.
pub fn perturb_then_refine(
    cloud: &PointCloud,
    sigma: f64,
    levels: usize,
    seed: u64,
) -> Result<Vec<PointCloud>> {
    let lattice = cloud
        .lattice
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("perturb_then_refine needs a lattice grid".into()))?;
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be non-negative, got {sigma}")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let collar = cloud
        .lattice
        .as_ref()
        .map(|l| {
            (0..cloud.len())
                .map(|k| l.distance_outside(&l.logical_position(k)))
                .fold(0.0, f64::max)
        })
        .unwrap_or(0.0);

    let mut current: BTreeMap<(i64, i64), Point> = BTreeMap::new();
    for (k, node) in cloud.nodes.iter().enumerate() {
        let dx = normal.sample(&mut rng);
        let dy = normal.sample(&mut rng);
        let [i, j] = lattice.index[k];
        current.insert((j, i), node.position + Point::new(dx, dy));
    }

    let mut spacing = lattice.spacing;
    let mut out = Vec::with_capacity(levels + 1);
    out.push(lattice_cloud(&current, lattice, spacing, collar, 0));
    for level in 1..=levels {
        current = refine(&current);
        spacing *= 0.5;
        out.push(lattice_cloud(&current, lattice, spacing, collar, level));
    }
    Ok(out)
}

fn refine(coarse: &BTreeMap<(i64, i64), Point>) -> BTreeMap<(i64, i64), Point> {
    let mut fine = BTreeMap::new();
    for (&(j, i), &p) in coarse {
        fine.insert((2 * j, 2 * i), p);
        if let Some(q) = coarse.get(&(j, i + 1)) {
            fine.insert((2 * j, 2 * i + 1), 0.5 * (p + q));
        }
        if let Some(q) = coarse.get(&(j + 1, i)) {
            fine.insert((2 * j + 1, 2 * i), 0.5 * (p + q));
        }
        if let (Some(a), Some(b), Some(c)) = (
            coarse.get(&(j, i + 1)),
            coarse.get(&(j + 1, i)),
            coarse.get(&(j + 1, i + 1)),
        ) {
            fine.insert((2 * j + 1, 2 * i + 1), 0.25 * (p + a + b + c));
        }
    }
    fine
}

fn lattice_cloud(
    points: &BTreeMap<(i64, i64), Point>,
    base: &Lattice,
    spacing: f64,
    collar: f64,
    level: usize,
) -> PointCloud {
    let mut nodes = Vec::with_capacity(points.len());
    let mut index = Vec::with_capacity(points.len());
    for (&(j, i), &p) in points {
        let logical = base.origin + Point::new(i as f64, j as f64) * spacing;
        let role = classify(&base.lo, &base.hi, &logical, collar, spacing).unwrap_or(Role::Dirichlet);
        nodes.push(Node {
            id: nodes.len(),
            position: p,
            volume: spacing * spacing,
            role,
            param: None,
        });
        index.push([i, j]);
    }
    PointCloud {
        nodes,
        dim: 2,
        h_avg: spacing,
        domain_tag: format!("perturbed[level={level},h={spacing}]"),
        lattice: Some(Lattice {
            origin: base.origin,
            spacing,
            index,
            lo: base.lo,
            hi: base.hi,
        }),
    }
}

/// Drops Dirichlet nodes whose logical position lies farther than `width`
/// outside the lattice box, renumbering the survivors.
pub fn trim_collar(cloud: &PointCloud, width: f64) -> Result<PointCloud> {
    let lattice = cloud
        .lattice
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("trim_collar needs a lattice grid".into()))?;
    let tol = ROLE_TOL * lattice.spacing;
    let mut nodes = Vec::new();
    let mut index = Vec::new();
    for (k, node) in cloud.nodes.iter().enumerate() {
        let keep = node.role != Role::Dirichlet
            || lattice.distance_outside(&lattice.logical_position(k)) <= width + tol;
        if keep {
            let mut n = node.clone();
            n.id = nodes.len();
            nodes.push(n);
            index.push(lattice.index[k]);
        }
    }
    Ok(PointCloud {
        nodes,
        dim: cloud.dim,
        h_avg: cloud.h_avg,
        domain_tag: cloud.domain_tag.clone(),
        lattice: Some(Lattice {
            index,
            ..lattice.clone()
        }),
    })
}

/// Structured quarter plate with a hole of radius `a` in the square
/// `[0, L]^2`.
///
/// Cell corners sit on rays from the hole rim to the square boundary, with
/// uniform spacing along each ray and in angle. One node per quadrilateral
/// cell (centroid, area). Parametric coordinates are the integer cell
/// indices. `collar_cells` extra rings are added: outside the square and
/// across the two symmetry edges as Dirichlet nodes, and inside the hole as
/// free-surface nodes.
pub fn generate_polar_grid(
    a: f64,
    l: f64,
    n_r: usize,
    n_theta: usize,
    collar_cells: usize,
) -> Result<PointCloud> {
    if !(a > 0.0) || !(l > a) {
        return Err(Error::InvalidArgument(format!(
            "need L > a > 0, got a = {a}, L = {l}"
        )));
    }
    if n_r < 2 || n_theta < 2 {
        return Err(Error::InvalidArgument("n_r and n_theta must be at least 2".into()));
    }
    let c = collar_cells as i64;
    let (nr, nt) = (n_r as i64, n_theta as i64);
    let dtheta = FRAC_PI_2 / n_theta as f64;

    let corner = |i: i64, j: i64| -> Point {
        let theta = j as f64 * dtheta;
        let (s, co) = theta.sin_cos();
        let outer = l / co.abs().max(s.abs());
        let r = a + (outer - a) * (i as f64 / n_r as f64);
        Point::new(r * co, r * s)
    };

    // The innermost free-surface ring must stay clear of the origin.
    for j in -c..=nt + c {
        let p = corner(-c, j);
        let theta = j as f64 * dtheta;
        if p.dot(&Point::new(theta.cos(), theta.sin())) <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "{collar_cells} free-surface rings do not fit inside the hole at n_r = {n_r}"
            )));
        }
    }

    let mut nodes = Vec::new();
    for j in -c..nt + c {
        for i in -c..nr + c {
            let quad = [corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1)];
            let (area, centroid) = polygon_area_centroid(&quad);
            let role = if i < 0 {
                Role::FreeSurface
            } else if i >= nr || j < 0 || j >= nt {
                Role::Dirichlet
            } else {
                Role::Bulk
            };
            nodes.push(Node {
                id: nodes.len(),
                position: centroid,
                volume: area,
                role,
                param: Some(Point::new(i as f64, j as f64)),
            });
        }
    }
    let mut cloud = PointCloud {
        nodes,
        dim: 2,
        h_avg: 0.0,
        domain_tag: format!("polar[a={a},L={l},n_r={n_r},n_theta={n_theta}]"),
        lattice: None,
    };
    cloud.h_avg = cloud.spacing_from_volumes();
    Ok(cloud)
}

/// Shoelace area and centroid of a simple counter-clockwise polygon.
pub(crate) fn polygon_area_centroid(vertices: &[Point]) -> (f64, Point) {
    let mut area2 = 0.0;
    let mut cx = 0.0;
    let mut cy = 0.0;
    for k in 0..vertices.len() {
        let p = vertices[k];
        let q = vertices[(k + 1) % vertices.len()];
        let cross = p.x * q.y - q.x * p.y;
        area2 += cross;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    let area = 0.5 * area2;
    (area.abs(), Point::new(cx / (3.0 * area2), cy / (3.0 * area2)))
}
