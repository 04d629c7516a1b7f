use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pd_meshfree::operator::Formulation;
use pd_meshfree::pointcloud::{load_pointcloud, Point, Role};
use pd_meshfree::runner::{self, Benchmark, GridKind, PlateConfig, RunConfig};

const A: f64 = 1.0;
const L: f64 = 4.0;
const RINGS: i64 = 4;

/// Quarter plate split into triangles along rays from the hole to the
/// square edge, plus collar and in-hole rings; returns (triangles, role).
fn triangulate(n: i64) -> Vec<([Point; 3], &'static str)> {
    let corner = |i: i64, j: i64| {
        let t = j as f64 * FRAC_PI_2 / n as f64;
        let outer = L / t.cos().abs().max(t.sin().abs());
        let r = A + (outer - A) * i as f64 / n as f64;
        Point::new(r * t.cos(), r * t.sin())
    };
    let mut tris = Vec::new();
    for j in -RINGS..n + RINGS {
        for i in -RINGS..n + RINGS {
            let role = if i < 0 {
                "free_surface"
            } else if i >= n || j < 0 || j >= n {
                "dirichlet"
            } else {
                "bulk"
            };
            let (p00, p10, p11, p01) = (corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1));
            tris.push(([p00, p10, p11], role));
            tris.push(([p00, p11, p01], role));
        }
    }
    tris
}

fn area(t: &[Point; 3]) -> f64 {
    let (u, v) = (t[1] - t[0], t[2] - t[0]);
    0.5 * (u.x * v.y - u.y * v.x).abs()
}

fn export(tris: &[([Point; 3], &str)], path: &Path) {
    let mut text = String::from("id,x,y,volume,role\n");
    for (k, (t, role)) in tris.iter().enumerate() {
        let c = (t[0] + t[1] + t[2]) / 3.0;
        writeln!(text, "{k},{:.17e},{:.17e},{:.17e},{role}", c.x, c.y, area(t)).unwrap();
    }
    fs::write(path, text).unwrap();
}

#[test]
fn imported_mesh_preserves_area() {
    let dir = tempfile::tempdir().unwrap();
    let tris = triangulate(20);
    let path = dir.path().join("tri.csv");
    export(&tris, &path);
    let cloud = load_pointcloud(&path).unwrap();
    assert_eq!(cloud.len(), tris.len());
    let mesh_area: f64 = tris.iter().filter(|(_, r)| *r == "bulk").map(|(t, _)| area(t)).sum();
    let cloud_area: f64 = cloud.nodes.iter().filter(|n| n.role == Role::Bulk).map(|n| n.volume).sum();
    assert!((cloud_area - mesh_area).abs() <= 1e-10 * mesh_area);
    // the straight-edged rim cuts a little off the exact quarter disk
    let exact = L * L - std::f64::consts::PI * A * A / 4.0;
    assert!((mesh_area - exact).abs() < 0.01 * exact);
    let h = (cloud_area / cloud.count(Role::Bulk) as f64).sqrt();
    assert!((cloud.h_avg - h).abs() < 1e-12);
}

#[test]
fn plate_on_imported_triangles_converges_with_bond_association() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<_> = [16, 32]
        .iter()
        .map(|&n| {
            let p = dir.path().join(format!("tri{n}.csv"));
            export(&triangulate(n), &p);
            p
        })
        .collect();
    let cfg = RunConfig {
        benchmark: Benchmark::PlateHole,
        formulation: Formulation::BaGmls,
        order: 2,
        grid: GridKind::File(Default::default()),
        delta: None,
        material: Default::default(),
        seed: 0,
        ladder: Vec::new(),
        polar_cells: Vec::new(),
        files,
        sigma: None,
        plate: PlateConfig::default(),
        constants: None,
        expected_rate: None,
        output: None,
        sweep: None,
    };
    let outcome = runner::run(&cfg);
    assert!(outcome.error.is_none(), "{:?}", outcome.error);
    let e = outcome.errors();
    assert!(e[1] < 0.6 * e[0], "{e:?}");
    assert!(e[1] < 1e-2, "{e:?}");
}
