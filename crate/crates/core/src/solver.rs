//! Dense complex linear solvers: restarted GMRES with optional Jacobi
//! (left diagonal) scaling, partial-pivot LU, and full spectra.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, RealField};

use crate::assembly::SystemMatrix;
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    Gmres,
    Lu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Target for `|M x - b| / |b|`.
    pub tolerance: f64,
    pub restart: usize,
    /// Limit on the total number of Arnoldi steps.
    pub max_iterations: usize,
    pub preconditioner: Preconditioner,
    pub method: SolverMethod,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            restart: 200,
            max_iterations: 2000,
            preconditioner: Preconditioner::Jacobi,
            method: SolverMethod::Gmres,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Parameter(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.restart == 0 {
            return Err(Error::Parameter("restart length must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// True relative residual `|M x - b| / |b|` of the returned solution.
    pub relative_residual: f64,
    pub wall_time: Duration,
    /// Relative residual of the (preconditioned) iteration, starting with
    /// the initial guess; empty for direct solves.
    pub history: Vec<f64>,
}

fn zero<T: Real>() -> C<T> {
    C::new(T::zero(), T::zero())
}

fn norm<T: Real>(v: &[C<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

fn dotc<T: Real>(a: &[C<T>], b: &[C<T>]) -> C<T> {
    a.iter().zip(b).fold(zero(), |s, (x, y)| s + x.conj() * *y)
}

fn true_residual<T: Real>(apply: &impl Fn(&[C<T>]) -> Vec<C<T>>, x: &[C<T>], b: &[C<T>]) -> f64 {
    let ax = apply(x);
    let r: Vec<_> = b.iter().zip(&ax).map(|(p, q)| *p - *q).collect();
    (norm(&r) / norm(b)).to_f64_lossy()
}

/// Inverse diagonal for Jacobi scaling.
pub fn jacobi_scaling<T: Real>(diag: &[C<T>]) -> Result<Vec<C<T>>> {
    diag.iter()
        .enumerate()
        .map(|(i, d)| {
            if d.norm() == T::zero() {
                Err(Error::Preconditioner(format!("zero diagonal entry at row {i}")))
            } else {
                Ok(d.inv())
            }
        })
        .collect()
}

/// Restarted GMRES on `P A x = P b` with `P = diag(scale)` (identity when
/// `scale` is `None`).
pub fn gmres<T: Real>(
    apply: impl Fn(&[C<T>]) -> Vec<C<T>>,
    b: &[C<T>],
    scale: Option<&[C<T>]>,
    opts: &SolveOptions,
) -> Result<(Vec<C<T>>, SolveReport)> {
    opts.validate()?;
    let start = Instant::now();
    let n = b.len();
    let mut x = vec![zero::<T>(); n];
    let precond = |v: &mut [C<T>]| {
        if let Some(s) = scale {
            for (vi, si) in v.iter_mut().zip(s) {
                *vi *= *si;
            }
        }
    };
    if norm(b) == T::zero() {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                wall_time: start.elapsed(),
                history: vec![0.0],
            },
        ));
    }
    let mut pb = b.to_vec();
    precond(&mut pb);
    let pb_norm = norm(&pb);
    let m = opts.restart.min(n.max(1));
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut inner_tol = opts.tolerance;
    loop {
        // r = P (b - A x)
        let ax = apply(&x);
        let mut r: Vec<_> = b.iter().zip(&ax).map(|(p, q)| *p - *q).collect();
        precond(&mut r);
        let beta = norm(&r);
        let rel = (beta / pb_norm).to_f64_lossy();
        if history.is_empty() {
            history.push(rel);
        }
        if rel <= inner_tol {
            let tr = true_residual(&apply, &x, b);
            if tr <= opts.tolerance {
                return Ok((
                    x,
                    SolveReport {
                        iterations,
                        relative_residual: tr,
                        wall_time: start.elapsed(),
                        history,
                    },
                ));
            }
            inner_tol *= 0.5 * opts.tolerance / tr;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::Convergence {
                iterations,
                residual: true_residual(&apply, &x, b),
                history,
            });
        }
        let inv = T::one() / beta;
        let mut basis: Vec<Vec<C<T>>> = vec![r.iter().map(|v| *v * inv).collect()];
        let mut h: Vec<Vec<C<T>>> = Vec::with_capacity(m);
        let mut cs: Vec<T> = Vec::with_capacity(m);
        let mut sn: Vec<C<T>> = Vec::with_capacity(m);
        let mut g = vec![zero::<T>(); m + 1];
        g[0] = C::new(beta, T::zero());
        let mut k = 0;
        while k < m && iterations < opts.max_iterations {
            let mut w = apply(&basis[k]);
            precond(&mut w);
            let mut col = vec![zero::<T>(); k + 2];
            for (j, v) in basis.iter().enumerate() {
                let hj = dotc(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= hj * *vi;
                }
                col[j] = hj;
            }
            let wn = norm(&w);
            col[k + 1] = C::new(wn, T::zero());
            for j in 0..k {
                let t = col[j] * cs[j] + sn[j] * col[j + 1];
                col[j + 1] = -sn[j].conj() * col[j] + col[j + 1] * cs[j];
                col[j] = t;
            }
            let (a, bb) = (col[k], col[k + 1]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if a.norm() == T::zero() {
                (T::zero(), if bb.norm() == T::zero() { C::new(T::one(), T::zero()) } else { bb.conj() / bb.norm() })
            } else {
                (a.norm() / den, (a / a.norm()) * bb.conj() / den)
            };
            col[k] = a * c + s * bb;
            col[k + 1] = zero();
            g[k + 1] = -s.conj() * g[k];
            g[k] *= c;
            cs.push(c);
            sn.push(s);
            h.push(col);
            iterations += 1;
            k += 1;
            let rel = (g[k].norm() / pb_norm).to_f64_lossy();
            history.push(rel);
            if rel <= inner_tol || wn == T::zero() {
                break;
            }
            let winv = T::one() / wn;
            basis.push(w.into_iter().map(|v| v * winv).collect());
        }
        // back substitution for the k x k upper triangle
        let mut y = vec![zero::<T>(); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += *yj * *vi;
            }
        }
    }
}

/// Partial-pivot LU solve of a dense system.
pub fn lu_solve<T: Real + RealField>(a: DMatrix<C<T>>, b: &[C<T>]) -> Result<Vec<C<T>>> {
    let rhs = DVector::from_column_slice(b);
    a.lu()
        .solve(&rhs)
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::Degenerate("singular matrix in LU solve".into()))
}

/// Solves `M x = b` with the requested method.
pub fn solve<T: Real + RealField>(
    m: &SystemMatrix<T>,
    b: &[C<T>],
    opts: &SolveOptions,
) -> Result<(Vec<C<T>>, SolveReport)> {
    opts.validate()?;
    if b.len() != m.dim() {
        return Err(Error::Parameter(format!(
            "right-hand side has length {} but the matrix has dimension {}",
            b.len(),
            m.dim()
        )));
    }
    match opts.method {
        SolverMethod::Gmres => {
            let scale = match opts.preconditioner {
                Preconditioner::Jacobi => Some(jacobi_scaling(&m.diagonal())?),
                Preconditioner::None => None,
            };
            gmres(|v| m.matvec(v), b, scale.as_deref(), opts)
        }
        SolverMethod::Lu => {
            let start = Instant::now();
            let x = lu_solve(m.to_dense(), b)?;
            let relative_residual = if norm(b) == T::zero() {
                0.0
            } else {
                true_residual(&|v: &[C<T>]| m.matvec(v), &x, b)
            };
            Ok((
                x,
                SolveReport {
                    iterations: 1,
                    relative_residual,
                    wall_time: start.elapsed(),
                    history: Vec::new(),
                },
            ))
        }
    }
}

/// Default dimension cap for dense spectra.
pub const EIGEN_CAP: usize = 6000;

/// Eigenvalues of a dense complex matrix from its Schur form.
pub fn eigenvalues<T: Real + RealField>(a: DMatrix<C<T>>) -> Vec<C<T>> {
    let (_, t) = a.schur().unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Spectrum of `M` or of `diag(M)^-1 M`.
pub fn eigen_diagnostics<T: Real + RealField>(
    m: &SystemMatrix<T>,
    preconditioned: bool,
    cap: usize,
) -> Result<Vec<C<T>>> {
    if m.dim() > cap {
        return Err(Error::Size { dim: m.dim(), cap });
    }
    let mut a = m.to_dense();
    if preconditioned {
        let s = jacobi_scaling(&m.diagonal())?;
        for (i, si) in s.iter().enumerate() {
            a.row_mut(i).iter_mut().for_each(|v| *v *= *si);
        }
    }
    Ok(eigenvalues(a))
}

/// Writes `iteration,relative_residual` rows.
pub fn write_residuals(path: impl AsRef<Path>, history: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let err = |e| Error::io(path, e);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(err)?);
    writeln!(f, "iteration,relative_residual").map_err(err)?;
    for (i, r) in history.iter().enumerate() {
        writeln!(f, "{i},{r:.6e}").map_err(err)?;
    }
    f.flush().map_err(err)
}
