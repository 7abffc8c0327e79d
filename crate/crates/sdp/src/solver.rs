use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::problem::{Relation, SdpProblem, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Target for the scaled primal and dual residuals and the relative gap.
    pub tol: f64,
    pub max_iterations: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iterations: 200,
            step_fraction: 0.98,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Primal matrix. Meaningful only when `status` is `Optimal`; for other
    /// statuses it holds the last iterate.
    pub w: DMatrix<f64>,
    pub objective_value: f64,
    pub status: SdpStatus,
    /// Absolute gap between the primal and dual objectives, in the units of
    /// the original objective.
    pub duality_gap: f64,
    pub iterations: usize,
    /// Human-readable reason for a non-optimal status.
    pub detail: Option<String>,
}

/// Block-diagonal standard form `min <C, X>` s.t. `<A_i, X> = b_i`, `X ⪰ 0`.
///
/// Block 0 is the `n × n` matrix variable. Block `k ≥ 1` is the 1×1 slack of
/// inequality `k`. Row 0 is the trace normalization.
struct StandardForm {
    c: Vec<DMatrix<f64>>,
    a: Vec<Vec<DMatrix<f64>>>,
    b: DVector<f64>,
    c_scale: f64,
}

impl StandardForm {
    fn build(problem: &SdpProblem) -> Self {
        let n = problem.dim();
        let k = problem.constraints().len();
        let nblocks = 1 + k;
        let zero_block = |blk: usize| {
            if blk == 0 {
                DMatrix::zeros(n, n)
            } else {
                DMatrix::zeros(1, 1)
            }
        };

        let mut c0 = problem.objective().clone();
        if problem.sense() == Sense::Maximize {
            c0.neg_mut();
        }
        let c_scale = c0.norm().max(1.0);
        c0 /= c_scale;
        let mut c: Vec<DMatrix<f64>> = (0..nblocks).map(zero_block).collect();
        c[0] = c0;

        let mut a = Vec::with_capacity(1 + k);
        let mut b = DVector::zeros(1 + k);
        let mut row: Vec<DMatrix<f64>> = (0..nblocks).map(zero_block).collect();
        row[0] = DMatrix::identity(n, n);
        let norm = (n as f64).sqrt();
        row[0] /= norm;
        b[0] = 1.0 / norm;
        a.push(row);

        for (idx, con) in problem.constraints().iter().enumerate() {
            let mut row: Vec<DMatrix<f64>> = (0..nblocks).map(zero_block).collect();
            row[0] = con.matrix.clone();
            row[1 + idx][(0, 0)] = match con.relation {
                Relation::LessEqual => 1.0,
                Relation::GreaterEqual => -1.0,
            };
            let norm = row.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
            for m in row.iter_mut() {
                *m /= norm;
            }
            b[1 + idx] = con.bound / norm;
            a.push(row);
        }
        Self { c, a, b, c_scale }
    }

    fn nblocks(&self) -> usize {
        self.c.len()
    }

    fn ncons(&self) -> usize {
        self.b.len()
    }

    fn apply(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.ncons(),
            self.a.iter().map(|row| block_dot(row, x)),
        )
    }

    fn adjoint(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.c.iter().map(|m| m.scale(0.0)).collect();
        for (i, row) in self.a.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * y[i];
            }
        }
        out
    }
}

fn block_dot(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn block_norm(a: &[DMatrix<f64>]) -> f64 {
    a.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Some `F` with `F Fᵀ = M`: the Cholesky factor, or, when rounding has
/// pushed tiny eigenvalues below zero, `V diag(√λ)` with eigenvalues floored
/// at `1e−14 λ_max`.
fn factor(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if let Some(c) = m.clone().cholesky() {
        return Some(c.unpack());
    }
    let eig = SymmetricEigen::new(m.clone());
    let top = eig.eigenvalues.max();
    if !(top > 0.0) || !top.is_finite() {
        return None;
    }
    let floor = 1e-14 * top;
    let sqrt = eig.eigenvalues.map(|l| l.max(floor).sqrt());
    Some(eig.eigenvectors * DMatrix::from_diagonal(&sqrt))
}

/// Nesterov-Todd scaling of one block: `T⁻¹ X T⁻ᵀ = Tᵀ Z T = diag(λ)`.
struct NtScaling {
    t: DMatrix<f64>,
    t_inv: DMatrix<f64>,
    g: DMatrix<f64>,
    lambda: DVector<f64>,
}

impl NtScaling {
    fn new(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Self> {
        let l = factor(x)?;
        let r = factor(z)?;
        let svd = (r.transpose() * &l).svd(true, true);
        let v = svd.v_t?.transpose();
        let lambda = svd.singular_values;
        if lambda.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return None;
        }
        let inv_sqrt = DMatrix::from_diagonal(&lambda.map(|s| 1.0 / s.sqrt()));
        let sqrt = DMatrix::from_diagonal(&lambda.map(f64::sqrt));
        let t = &l * &v * &inv_sqrt;
        // T⁻¹ = Σ^{1/2} Vᵀ L⁻¹
        let l_inv = l.clone().try_inverse()?;
        if l_inv.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let t_inv = &sqrt * v.transpose() * l_inv;
        let g = &t * t.transpose();
        Some(Self {
            t,
            t_inv,
            g,
            lambda,
        })
    }

    fn to_scaled_x(&self, dx: &DMatrix<f64>) -> DMatrix<f64> {
        &self.t_inv * dx * self.t_inv.transpose()
    }

    fn to_scaled_z(&self, dz: &DMatrix<f64>) -> DMatrix<f64> {
        self.t.transpose() * dz * &self.t
    }
}

/// Largest `α` with `Λ + α S ⪰ 0`, capped at `f64::INFINITY`.
fn max_step(lambda: &DVector<f64>, scaled: &DMatrix<f64>) -> f64 {
    let n = lambda.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = scaled[(i, j)] / (lambda[i] * lambda[j]).sqrt();
        }
    }
    symmetrize(&mut m);
    let min_eig = SymmetricEigen::new(m).eigenvalues.min();
    if min_eig < 0.0 {
        -1.0 / min_eig
    } else {
        f64::INFINITY
    }
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
    dz: Vec<DMatrix<f64>>,
}

pub fn solve_sdp(problem: &SdpProblem, options: &SolverOptions) -> SdpSolution {
    let sf = StandardForm::build(problem);
    let nb = sf.nblocks();
    let m = sf.ncons();
    let total_dim: usize = sf.c.iter().map(|c| c.nrows()).sum();
    let start = (total_dim as f64).sqrt().max(10.0);

    let mut x: Vec<DMatrix<f64>> = sf
        .c
        .iter()
        .map(|c| DMatrix::identity(c.nrows(), c.nrows()) * start)
        .collect();
    let mut z = x.clone();
    let mut y = DVector::zeros(m);
    let b_norm = sf.b.norm();
    let c_norm = block_norm(&sf.c);
    let tol = options.tol;

    let finish = |x: &[DMatrix<f64>],
                  y: &DVector<f64>,
                  status: SdpStatus,
                  iterations: usize,
                  detail: Option<String>| {
        let mut w = x[0].clone();
        symmetrize(&mut w);
        let pobj = block_dot(&sf.c, x) * sf.c_scale;
        let dobj = sf.b.dot(y) * sf.c_scale;
        SdpSolution {
            objective_value: problem.evaluate(&w),
            w,
            status,
            duality_gap: (pobj - dobj).abs(),
            iterations,
            detail,
        }
    };

    let mut stalled = 0usize;
    for iter in 0..options.max_iterations {
        let ax = sf.apply(&x);
        let rp = &sf.b - &ax;
        let aty = sf.adjoint(&y);
        let rd: Vec<DMatrix<f64>> = (0..nb).map(|k| &sf.c[k] - &aty[k] - &z[k]).collect();
        let xz: f64 = block_dot(&x, &z);
        let mu = xz / total_dim as f64;
        let pobj = block_dot(&sf.c, &x);
        let dobj = sf.b.dot(&y);

        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = block_norm(&rd) / (1.0 + c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        if pinf <= tol && dinf <= tol && gap <= tol && xz / (1.0 + pobj.abs()) <= 10.0 * tol {
            return finish(&x, &y, SdpStatus::Optimal, iter, None);
        }

        // Farkas certificate for primal infeasibility: a dual ray with
        // bᵀy > 0 and Σ yᵢAᵢ ⪯ 0.
        if dobj > 0.0 {
            let ray = block_norm(&(0..nb).map(|k| &aty[k] + &z[k]).collect::<Vec<_>>());
            if ray / dobj < 1e-8 || dobj > 1e10 {
                return finish(
                    &x,
                    &y,
                    SdpStatus::Infeasible,
                    iter,
                    Some(format!(
                        "primal infeasible: dual ray with bᵀy = {dobj:.3e}, ‖Aᵀy + Z‖/bᵀy = {:.3e}",
                        ray / dobj
                    )),
                );
            }
        }

        let scalings: Option<Vec<NtScaling>> =
            (0..nb).map(|k| NtScaling::new(&x[k], &z[k])).collect();
        let Some(scalings) = scalings else {
            return finish(
                &x,
                &y,
                SdpStatus::NumericalFailure,
                iter,
                Some("iterate lost positive definiteness".into()),
            );
        };

        // Schur complement M_ij = <A_i, G A_j G>.
        let gag: Vec<Vec<DMatrix<f64>>> = sf
            .a
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&scalings)
                    .map(|(a, s)| &s.g * a * &s.g)
                    .collect()
            })
            .collect();
        let mut schur = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = block_dot(&sf.a[i], &gag[j]);
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let Some(schur_chol) = schur.cholesky() else {
            return finish(
                &x,
                &y,
                SdpStatus::NumericalFailure,
                iter,
                Some("Schur complement is not positive definite".into()),
            );
        };
        let g_rd_g: Vec<DMatrix<f64>> = scalings
            .iter()
            .zip(&rd)
            .map(|(s, r)| &s.g * r * &s.g)
            .collect();
        let rhs_base: DVector<f64> =
            DVector::from_iterator(m, (0..m).map(|i| rp[i] + block_dot(&sf.a[i], &g_rd_g)));

        let solve_direction = |rc: &[DMatrix<f64>]| -> Direction {
            let tkt: Vec<DMatrix<f64>> = scalings
                .iter()
                .zip(rc)
                .map(|(s, rc)| {
                    let n = s.lambda.len();
                    let k = DMatrix::from_fn(n, n, |i, j| rc[(i, j)] / (s.lambda[i] + s.lambda[j]));
                    &s.t * k * s.t.transpose()
                })
                .collect();
            let rhs = DVector::from_iterator(
                m,
                (0..m).map(|i| rhs_base[i] - block_dot(&sf.a[i], &tkt)),
            );
            let dy = schur_chol.solve(&rhs);
            let aty = sf.adjoint(&dy);
            let dz: Vec<DMatrix<f64>> = (0..nb).map(|k| &rd[k] - &aty[k]).collect();
            let dx: Vec<DMatrix<f64>> = (0..nb)
                .map(|k| {
                    let mut d = &tkt[k] - &scalings[k].g * &dz[k] * &scalings[k].g;
                    symmetrize(&mut d);
                    d
                })
                .collect();
            Direction { dx, dy, dz }
        };

        let step_lengths = |d: &Direction| -> (f64, f64, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
            let mut ap = f64::INFINITY;
            let mut ad = f64::INFINITY;
            let mut sx = Vec::with_capacity(nb);
            let mut sz = Vec::with_capacity(nb);
            for k in 0..nb {
                let s = &scalings[k];
                let dxs = s.to_scaled_x(&d.dx[k]);
                let dzs = s.to_scaled_z(&d.dz[k]);
                ap = ap.min(max_step(&s.lambda, &dxs));
                ad = ad.min(max_step(&s.lambda, &dzs));
                sx.push(dxs);
                sz.push(dzs);
            }
            (ap, ad, sx, sz)
        };

        // Predictor.
        let rc_aff: Vec<DMatrix<f64>> = scalings
            .iter()
            .map(|s| DMatrix::from_diagonal(&s.lambda.map(|l| -2.0 * l * l)))
            .collect();
        let aff = solve_direction(&rc_aff);
        let (ap, ad, sx_aff, sz_aff) = step_lengths(&aff);
        let ap = ap.min(1.0);
        let ad = ad.min(1.0);
        let mut mu_aff = 0.0;
        for k in 0..nb {
            let xa = &x[k] + &aff.dx[k] * ap;
            let za = &z[k] + &aff.dz[k] * ad;
            mu_aff += xa.dot(&za);
        }
        mu_aff /= total_dim as f64;
        let sigma = (mu_aff.max(0.0) / mu).powi(3).clamp(0.0, 1.0);

        // Corrector.
        let rc: Vec<DMatrix<f64>> = (0..nb)
            .map(|k| {
                let s = &scalings[k];
                let n = s.lambda.len();
                let cross = &sx_aff[k] * &sz_aff[k];
                let mut rc = DMatrix::from_diagonal(
                    &s.lambda.map(|l| 2.0 * sigma * mu - 2.0 * l * l),
                );
                rc -= &cross + cross.transpose();
                debug_assert_eq!(rc.nrows(), n);
                rc
            })
            .collect();
        let dir = solve_direction(&rc);
        let (ap, ad, _, _) = step_lengths(&dir);
        let ap = (options.step_fraction * ap).min(1.0);
        let ad = (options.step_fraction * ad).min(1.0);

        if !(ap.is_finite() && ad.is_finite()) || dir.dy.iter().any(|v| !v.is_finite()) {
            return finish(
                &x,
                &y,
                SdpStatus::NumericalFailure,
                iter,
                Some("non-finite search direction".into()),
            );
        }
        if ap < 1e-8 && ad < 1e-8 {
            stalled += 1;
            if stalled >= 5 {
                return finish(
                    &x,
                    &y,
                    SdpStatus::NumericalFailure,
                    iter,
                    Some("step length stalled".into()),
                );
            }
        } else {
            stalled = 0;
        }

        for k in 0..nb {
            x[k] += &dir.dx[k] * ap;
            z[k] += &dir.dz[k] * ad;
            symmetrize(&mut x[k]);
            symmetrize(&mut z[k]);
        }
        y += &dir.dy * ad;
    }

    finish(
        &x,
        &y,
        SdpStatus::NumericalFailure,
        options.max_iterations,
        Some(format!(
            "no convergence within {} iterations",
            options.max_iterations
        )),
    )
}
