//! Assembly and direct solution of the static equilibrium system
//! `div P + b = 0` at bulk nodes.
//!
//! Every non-local gradient is a linear stencil `grad u = sum_L u_L c_L^T`
//! over kinematic nodes, so the divergence of the small-strain stress is a
//! sum of 2x2 blocks per node pair. Rows are bulk nodes; Dirichlet columns
//! move to the right-hand side.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use crate::bond;
use crate::error::{Error, Result};
use crate::material::{small_strain, Material};
use crate::operator::{Formulation, GammaWeights};
use crate::pointcloud::{FamilyGraph, Point, PointCloud, Role};

/// Relative residual a direct solve must reach.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Everything that defines the discrete operator.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub cloud: &'a PointCloud,
    pub families: &'a FamilyGraph,
    pub weights: &'a GammaWeights,
    pub material: Material,
    pub formulation: Formulation,
}

impl<'a> Problem<'a> {
    pub fn new(
        cloud: &'a PointCloud,
        families: &'a FamilyGraph,
        weights: &'a GammaWeights,
        material: Material,
        formulation: Formulation,
    ) -> Result<Self> {
        if weights.scheme != formulation.scheme() {
            return Err(Error::InvalidArgument(format!(
                "formulation {formulation} does not match the {:?} weights",
                weights.scheme
            )));
        }
        if families.len() != cloud.len() || weights.kinematic.len() != cloud.len() {
            return Err(Error::InvalidArgument("families and weights do not match the point cloud".into()));
        }
        for (i, node) in cloud.nodes.iter().enumerate() {
            if node.role == Role::Bulk && (weights.force[i].is_none() || weights.kinematic[i].is_none()) {
                return Err(Error::InvalidArgument(format!("bulk node {i} has no operator weights")));
            }
        }
        Ok(Self { cloud, families, weights, material, formulation })
    }
}

/// Row-compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseRows {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<_> = (0..self.nrows)
            .flat_map(|r| self.row(r).map(move |(c, v)| Triplet::new(r, c, v)))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::Solver(format!("could not build sparse matrix: {e:?}")))
    }
}

/// Assembled system `A u = rhs` over bulk degrees of freedom.
#[derive(Debug, Clone)]
pub struct EquilibriumSystem {
    /// Bulk node ids in DOF order; node `bulk[k]` owns DOFs `2k` and `2k + 1`.
    pub bulk: Vec<usize>,
    /// Inverse of `bulk`.
    pub dof_of: Vec<Option<usize>>,
    /// Bulk-to-bulk operator.
    pub matrix: SparseRows,
    /// Bulk rows against every node DOF `2 * id + c`.
    pub full: SparseRows,
    pub rhs: Vec<f64>,
    /// Prescribed displacement per node, zero away from Dirichlet nodes.
    pub prescribed: Vec<Vector2<f64>>,
}

impl EquilibriumSystem {
    pub fn dofs(&self) -> usize {
        self.matrix.nrows
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveDiagnostics {
    pub dofs: usize,
    pub nnz: usize,
    pub residual_norm: f64,
    pub rhs_norm: f64,
}

impl SolveDiagnostics {
    pub fn relative_residual(&self) -> f64 {
        if self.rhs_norm > 0.0 {
            self.residual_norm / self.rhs_norm
        } else {
            self.residual_norm
        }
    }
}

/// Displacement and derived fields. Free-surface nodes carry zero
/// displacement and no gradient.
#[derive(Debug, Clone)]
pub struct Solution {
    pub displacement: Vec<Vector2<f64>>,
    pub deformation_gradient: Vec<Option<Matrix2<f64>>>,
    pub strain: Vec<Option<Matrix2<f64>>>,
    pub stress: Vec<Option<Matrix2<f64>>>,
    pub diagnostics: SolveDiagnostics,
}

type Stencil = Vec<(usize, Vector2<f64>)>;

fn nodal_stencils(problem: &Problem) -> Vec<Option<Stencil>> {
    let fam = problem.families;
    (0..problem.cloud.len())
        .into_par_iter()
        .map(|i| {
            problem.weights.kinematic[i].as_ref().map(|gamma| {
                let mut s = Vec::with_capacity(gamma.len() + 1);
                let mut sum = Vector2::zeros();
                for (&j, g) in fam.kinematic[i].iter().zip(gamma) {
                    s.push((j, *g));
                    sum += g;
                }
                s.push((i, -sum));
                s
            })
        })
        .collect()
}

/// Divergence block of `P(u_L c^T) gamma` acting on `u_L`.
fn stress_block(c: &Vector2<f64>, gamma: &Vector2<f64>, m: &Material) -> Matrix2<f64> {
    gamma * c.transpose() * m.lambda + Matrix2::identity() * (m.mu * c.dot(gamma)) + c * gamma.transpose() * m.mu
}

struct Accumulator {
    blocks: Vec<Matrix2<f64>>,
    seen: Vec<bool>,
    touched: Vec<usize>,
}

impl Accumulator {
    fn new(n: usize) -> Self {
        Self { blocks: vec![Matrix2::zeros(); n], seen: vec![false; n], touched: Vec::new() }
    }

    fn add(&mut self, node: usize, block: Matrix2<f64>) {
        if !self.seen[node] {
            self.seen[node] = true;
            self.touched.push(node);
        }
        self.blocks[node] += block;
    }

    fn drain(&mut self) -> Vec<(usize, Matrix2<f64>)> {
        self.touched.sort_unstable();
        let out = self.touched.iter().map(|&k| (k, self.blocks[k])).collect();
        for &k in &self.touched {
            self.blocks[k] = Matrix2::zeros();
            self.seen[k] = false;
        }
        self.touched.clear();
        out
    }
}

fn assemble_row(problem: &Problem, stencils: &[Option<Stencil>], i: usize, acc: &mut Accumulator) -> Vec<(usize, Matrix2<f64>)> {
    let m = &problem.material;
    let cloud = problem.cloud;
    let gamma = problem.weights.force[i].as_ref().expect("force weights for bulk node");
    let stencil_i = stencils[i].as_ref().expect("kinematic stencil for bulk node");
    let total: Vector2<f64> = gamma.iter().sum();
    for (l, c) in stencil_i {
        acc.add(*l, -stress_block(c, &total, m));
    }
    let x_i = cloud.position(i);
    for (&j, g) in problem.families.force[i].iter().zip(gamma) {
        let Some(stencil_j) = stencils[j].as_ref() else {
            // free-surface neighbor: its stress is taken as zero
            continue;
        };
        for (l, c) in stencil_j {
            acc.add(*l, stress_block(c, g, m));
        }
        if problem.formulation.is_bond_associated() {
            let xi = cloud.position(j) - x_i;
            let n = xi / xi.norm_squared();
            acc.add(j, stress_block(&n, g, m));
            acc.add(i, -stress_block(&n, g, m));
            for (l, c) in stencil_i.iter().chain(stencil_j) {
                acc.add(*l, -stress_block(&(n * (0.5 * c.dot(&xi))), g, m));
            }
        }
    }
    acc.drain()
}

/// Assembles the bulk equilibrium rows. `body_force` is sampled at bulk
/// nodes and `dirichlet` at Dirichlet nodes.
pub fn assemble(
    problem: &Problem,
    body_force: &(dyn Fn(&Point) -> Vector2<f64> + Sync),
    dirichlet: &(dyn Fn(&Point) -> Vector2<f64> + Sync),
) -> Result<EquilibriumSystem> {
    let cloud = problem.cloud;
    let n = cloud.len();
    let bulk = cloud.ids_with(Role::Bulk);
    if bulk.is_empty() {
        return Err(Error::InvalidArgument("point cloud has no bulk nodes".into()));
    }
    let mut dof_of = vec![None; n];
    for (k, &i) in bulk.iter().enumerate() {
        dof_of[i] = Some(k);
    }
    let prescribed: Vec<Vector2<f64>> = cloud
        .nodes
        .iter()
        .map(|node| match node.role {
            Role::Dirichlet => dirichlet(&node.position),
            _ => Vector2::zeros(),
        })
        .collect();

    let stencils = nodal_stencils(problem);
    let rows: Vec<Vec<(usize, Matrix2<f64>)>> = bulk
        .par_iter()
        .map_init(|| Accumulator::new(n), |acc, &i| assemble_row(problem, &stencils, i, acc))
        .collect();

    let dofs = 2 * bulk.len();
    let mut matrix = SparseRows { nrows: dofs, ncols: dofs, row_ptr: vec![0], col_idx: Vec::new(), values: Vec::new() };
    let mut full = SparseRows { nrows: dofs, ncols: 2 * n, row_ptr: vec![0], col_idx: Vec::new(), values: Vec::new() };
    let mut rhs = vec![0.0; dofs];
    for (k, row) in rows.iter().enumerate() {
        let b = body_force(&cloud.position(bulk[k]));
        for a in 0..2 {
            let r = 2 * k + a;
            rhs[r] = -b[a];
            for (l, block) in row {
                for c in 0..2 {
                    let v = block[(a, c)];
                    full.col_idx.push(2 * l + c);
                    full.values.push(v);
                    match dof_of[*l] {
                        Some(q) => {
                            matrix.col_idx.push(2 * q + c);
                            matrix.values.push(v);
                        }
                        None => rhs[r] -= v * prescribed[*l][c],
                    }
                }
            }
            matrix.row_ptr.push(matrix.values.len());
            full.row_ptr.push(full.values.len());
        }
    }
    Ok(EquilibriumSystem { bulk, dof_of, matrix, full, rhs, prescribed })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sparse LU solve of the bulk system followed by a residual check.
pub fn solve_linear(system: &EquilibriumSystem) -> Result<(Vec<f64>, SolveDiagnostics)> {
    let a = system.matrix.to_faer()?;
    let lu = a.sp_lu().map_err(|e| Error::Solver(format!("sparse LU failed: {e:?}")))?;
    let b = Col::from_fn(system.rhs.len(), |k| system.rhs[k]);
    let mut x: Vec<f64> = {
        let sol = lu.solve(&b);
        (0..sol.nrows()).map(|k| sol[k]).collect()
    };
    let rhs_norm = norm(&system.rhs);
    let residual = |x: &[f64]| -> Vec<f64> {
        system.matrix.matvec(x).iter().zip(&system.rhs).map(|(ax, b)| b - ax).collect()
    };
    let mut r = residual(&x);
    if norm(&r) > RESIDUAL_TOLERANCE * rhs_norm {
        // one step of iterative refinement
        let rc = Col::from_fn(r.len(), |k| r[k]);
        let dx = lu.solve(&rc);
        for (k, xk) in x.iter_mut().enumerate() {
            *xk += dx[k];
        }
        r = residual(&x);
    }
    let diagnostics = SolveDiagnostics {
        dofs: system.dofs(),
        nnz: system.matrix.nnz(),
        residual_norm: norm(&r),
        rhs_norm,
    };
    if !x.iter().all(|v| v.is_finite()) || diagnostics.residual_norm > RESIDUAL_TOLERANCE * rhs_norm {
        return Err(Error::Solver(format!(
            "relative residual {:.3e} exceeds {RESIDUAL_TOLERANCE:e}",
            diagnostics.relative_residual()
        )));
    }
    Ok((x, diagnostics))
}

/// Nodal displacement vector from bulk unknowns and prescribed values.
pub fn expand_displacement(system: &EquilibriumSystem, x: &[f64]) -> Vec<Vector2<f64>> {
    let mut u = system.prescribed.clone();
    for (k, &i) in system.bulk.iter().enumerate() {
        u[i] = Vector2::new(x[2 * k], x[2 * k + 1]);
    }
    u
}

/// Gradient, strain, and stress fields from a nodal displacement.
pub fn derived_fields(
    problem: &Problem,
    u: &[Vector2<f64>],
) -> (Vec<Option<Matrix2<f64>>>, Vec<Option<Matrix2<f64>>>, Vec<Option<Matrix2<f64>>>) {
    let f = problem.weights.deformation_gradients(problem.families, u);
    let strain = f.iter().map(|f| f.as_ref().map(small_strain)).collect();
    let stress = f.iter().map(|f| f.as_ref().map(|f| problem.material.stress(f))).collect();
    (f, strain, stress)
}

/// Assembles and solves; see [`assemble`].
pub fn solve(
    problem: &Problem,
    body_force: &(dyn Fn(&Point) -> Vector2<f64> + Sync),
    dirichlet: &(dyn Fn(&Point) -> Vector2<f64> + Sync),
) -> Result<Solution> {
    let system = assemble(problem, body_force, dirichlet)?;
    let (x, diagnostics) = solve_linear(&system)?;
    let displacement = expand_displacement(&system, &x);
    let (deformation_gradient, strain, stress) = derived_fields(problem, &displacement);
    Ok(Solution { displacement, deformation_gradient, strain, stress, diagnostics })
}

/// Matrix-free `div P` at every bulk node (in node order) for a nodal
/// displacement, following the pointwise definitions directly.
pub fn apply_operator(problem: &Problem, u: &[Vector2<f64>]) -> Result<Vec<Vector2<f64>>> {
    let cloud = problem.cloud;
    let (f, _, stress) = derived_fields(problem, u);
    cloud
        .ids_with(Role::Bulk)
        .into_par_iter()
        .map(|i| {
            let gamma = problem.weights.force[i].as_ref().expect("force weights for bulk node");
            let p_i = stress[i].expect("stress at bulk node");
            let f_i = f[i].expect("gradient at bulk node");
            let x_i = cloud.position(i) + u[i];
            let mut neighbor = Vec::with_capacity(gamma.len());
            for &j in &problem.families.force[i] {
                let p = match f[j] {
                    None => Matrix2::zeros(),
                    Some(f_j) if problem.formulation.is_bond_associated() => {
                        let x_j = cloud.position(j) + u[j];
                        let f_ji =
                            bond::bond_deformation_gradient(&f_i, &f_j, &x_i, &x_j, &cloud.position(i), &cloud.position(j))?;
                        problem.material.stress(&f_ji)
                    }
                    Some(_) => stress[j].expect("stress where gradient exists"),
                };
                neighbor.push(p);
            }
            Ok(if problem.formulation.is_bond_associated() {
                bond::ba_divergence(&p_i, &neighbor, gamma)
            } else {
                bond::base_divergence(&p_i, &neighbor, gamma)
            })
        })
        .collect()
}

/// Strong-form residual `div P + b` at bulk nodes.
pub fn residual(
    problem: &Problem,
    u: &[Vector2<f64>],
    body_force: &(dyn Fn(&Point) -> Vector2<f64> + Sync),
) -> Result<Vec<Vector2<f64>>> {
    let bulk = problem.cloud.ids_with(Role::Bulk);
    let div = apply_operator(problem, u)?;
    Ok(div.iter().zip(bulk).map(|(d, i)| d + body_force(&problem.cloud.position(i))).collect())
}
