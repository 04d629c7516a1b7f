use std::collections::HashMap;

use rayon::prelude::*;

use super::{Point, PointCloud, Role};
use crate::error::{Error, Result};

/// Space in which bond lengths are measured when forming families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSpace {
    Physical,
    Parametric,
}

/// Neighbor families of every node.
///
/// `force[i]` holds every node within the horizon of `i`; `kinematic[i]` is
/// the subset that excludes free-surface nodes (and is empty for
/// free-surface nodes themselves). `bonds[i][k]` is the physical reference
/// vector from `i` to `force[i][k]`. All lists are sorted by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyGraph {
    pub delta: f64,
    pub space: MetricSpace,
    pub kinematic: Vec<Vec<usize>>,
    pub force: Vec<Vec<usize>>,
    pub bonds: Vec<Vec<Point>>,
}

impl FamilyGraph {
    pub fn len(&self) -> usize {
        self.force.len()
    }

    pub fn is_empty(&self) -> bool {
        self.force.is_empty()
    }

    /// Distance between two nodes in the family metric.
    pub fn metric_distance(&self, cloud: &PointCloud, i: usize, j: usize) -> f64 {
        (metric_point(cloud, self.space, j) - metric_point(cloud, self.space, i)).norm()
    }
}

fn metric_point(cloud: &PointCloud, space: MetricSpace, i: usize) -> Point {
    match space {
        MetricSpace::Physical => cloud.nodes[i].position,
        MetricSpace::Parametric => cloud.nodes[i].param.expect("parametric coordinates"),
    }
}

/// Closed-ball neighborhoods `0 < |P_J - P_I| <= delta` in the chosen metric.
pub fn build_families(cloud: &PointCloud, delta: f64, space: MetricSpace) -> Result<FamilyGraph> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {delta}")));
    }
    if space == MetricSpace::Parametric && !cloud.has_params() {
        return Err(Error::InvalidArgument(
            "parametric families need parametric coordinates on every node".into(),
        ));
    }
    let pts: Vec<Point> = (0..cloud.len()).map(|i| metric_point(cloud, space, i)).collect();
    let cell_of = |p: &Point| ((p.x / delta).floor() as i64, (p.y / delta).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        buckets.entry(cell_of(p)).or_default().push(i);
    }
    // Lattice ties at exactly delta must land inside regardless of rounding.
    let reach2 = delta * delta * (1.0 + 1e-12);

    let force: Vec<Vec<usize>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let p = pts[i];
            let (cx, cy) = cell_of(&p);
            let mut fam = Vec::new();
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(list) = buckets.get(&(cx + dx, cy + dy)) {
                        for &j in list {
                            if j == i {
                                continue;
                            }
                            let r2 = (pts[j] - p).norm_squared();
                            if r2 > 0.0 && r2 <= reach2 {
                                fam.push(j);
                            }
                        }
                    }
                }
            }
            fam.sort_unstable();
            fam
        })
        .collect();

    let kinematic = force
        .iter()
        .enumerate()
        .map(|(i, fam)| {
            if cloud.role(i) == Role::FreeSurface {
                Vec::new()
            } else {
                fam.iter()
                    .copied()
                    .filter(|&j| cloud.role(j) != Role::FreeSurface)
                    .collect()
            }
        })
        .collect();

    let bonds = force
        .iter()
        .enumerate()
        .map(|(i, fam)| fam.iter().map(|&j| cloud.position(j) - cloud.position(i)).collect())
        .collect();

    Ok(FamilyGraph {
        delta,
        space,
        kinematic,
        force,
        bonds,
    })
}
