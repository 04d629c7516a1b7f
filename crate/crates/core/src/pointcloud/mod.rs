//! Nodal discretizations: generation, import, and neighbor families.

mod family;
mod generate;
mod io;

pub use family::{build_families, FamilyGraph, MetricSpace};
pub use generate::{generate_polar_grid, generate_uniform_grid, perturb_then_refine, trim_collar};
pub use io::{load_pointcloud, read_pointcloud, write_pointcloud};

use nalgebra::Vector2;

pub type Point = Vector2<f64>;

/// What a node does in the discrete problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// Unknown displacement, carries an equilibrium equation.
    Bulk,
    /// Prescribed displacement on the fictitious collar.
    Dirichlet,
    /// Fictitious node beyond a traction-free surface; zero stress, no kinematics.
    FreeSurface,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Bulk => "bulk",
            Role::Dirichlet => "dirichlet",
            Role::FreeSurface => "free_surface",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "bulk" => Some(Role::Bulk),
            "dirichlet" => Some(Role::Dirichlet),
            "free_surface" => Some(Role::FreeSurface),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: usize,
    pub position: Point,
    pub volume: f64,
    pub role: Role,
    /// Coordinates in the parametric (index) space, when neighborhoods are
    /// formed there.
    pub param: Option<Point>,
}

/// Logical quad lattice underlying generated square grids.
///
/// `index[k]` is the integer lattice coordinate of node `k`; its unperturbed
/// position is `origin + spacing * index`. Roles are classified against the
/// closed box `[lo, hi]` using the unperturbed position.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub origin: Point,
    pub spacing: f64,
    pub index: Vec<[i64; 2]>,
    pub lo: Point,
    pub hi: Point,
}

impl Lattice {
    pub fn logical_position(&self, k: usize) -> Point {
        let [i, j] = self.index[k];
        self.origin + Point::new(i as f64, j as f64) * self.spacing
    }

    /// Euclidean distance from a point to the closed box `[lo, hi]`.
    pub fn distance_outside(&self, p: &Point) -> f64 {
        box_distance(&self.lo, &self.hi, p)
    }
}

pub(crate) fn box_distance(lo: &Point, hi: &Point, p: &Point) -> f64 {
    let dx = (lo.x - p.x).max(p.x - hi.x).max(0.0);
    let dy = (lo.y - p.y).max(p.y - hi.y).max(0.0);
    dx.hypot(dy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub nodes: Vec<Node>,
    pub dim: usize,
    pub h_avg: f64,
    pub domain_tag: String,
    pub lattice: Option<Lattice>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn position(&self, k: usize) -> Point {
        self.nodes[k].position
    }

    pub fn role(&self, k: usize) -> Role {
        self.nodes[k].role
    }

    pub fn has_params(&self) -> bool {
        !self.nodes.is_empty() && self.nodes.iter().all(|n| n.param.is_some())
    }

    pub fn count(&self, role: Role) -> usize {
        self.nodes.iter().filter(|n| n.role == role).count()
    }

    pub fn ids_with(&self, role: Role) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.role == role)
            .map(|n| n.id)
            .collect()
    }

    /// Total volume of bulk and Dirichlet nodes.
    pub fn material_volume(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|n| n.role != Role::FreeSurface)
            .map(|n| n.volume)
            .sum()
    }

    /// `sqrt(sum V / N)` over bulk nodes (all nodes if there are none).
    pub fn spacing_from_volumes(&self) -> f64 {
        let bulk: Vec<f64> = self
            .nodes
            .iter()
            .filter(|n| n.role == Role::Bulk)
            .map(|n| n.volume)
            .collect();
        let vols: Vec<f64> = if bulk.is_empty() {
            self.nodes.iter().map(|n| n.volume).collect()
        } else {
            bulk
        };
        if vols.is_empty() {
            return 0.0;
        }
        (vols.iter().sum::<f64>() / vols.len() as f64).sqrt()
    }

    /// Checks id density and volume positivity.
    pub fn validate(&self) -> crate::Result<()> {
        for (k, n) in self.nodes.iter().enumerate() {
            if n.id != k {
                return Err(crate::Error::Validation(format!(
                    "node ids must be dense 0..N-1, found id {} at position {k}",
                    n.id
                )));
            }
            if !(n.volume > 0.0) {
                return Err(crate::Error::Validation(format!(
                    "node {} ({}) has non-positive volume {}",
                    n.id,
                    n.role.as_str(),
                    n.volume
                )));
            }
            if !(n.position.x.is_finite() && n.position.y.is_finite()) {
                return Err(crate::Error::Validation(format!("node {} has a non-finite position", n.id)));
            }
        }
        Ok(())
    }
}
