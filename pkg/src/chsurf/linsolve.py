"""Sparse linear algebra: SPD solves and the coupled block system.

Matrices are scipy CSR throughout.  The coupled system assembled at
every time step is

    [ d0 * M   tau * A ] [u]   [rhs_u]
    [    -A        M   ] [w] = [rhs_w]

and is nonsymmetric, so the default path is a sparse LU factorisation;
an optional GMRES path with block-diagonal preconditioning is kept for
larger problems.  Solves are deterministic for a fixed thread setup.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import LinearSolveError

DEFAULT_TOL = 1e-12
BLOCK_RESIDUAL_TOL = 1e-10


def _as_csr(matrix) -> sp.csr_matrix:
    m = sp.csr_matrix(matrix)
    m.sum_duplicates()
    m.sort_indices()
    return m


def solve_spd(A, b: np.ndarray, tol: float = DEFAULT_TOL,
              method: str = "factorize") -> np.ndarray:
    """Solve a symmetric positive definite system to a relative residual.

    method "factorize" uses a sparse LU (exact up to roundoff); "cg" runs
    conjugate gradients with Jacobi preconditioning, capped at 10 N
    iterations.  The final residual is always verified.
    """
    A = _as_csr(A)
    b = np.asarray(b, dtype=float)
    n = A.shape[0]
    scale = np.linalg.norm(b)
    if scale == 0.0:
        return np.zeros(n)
    if method == "factorize":
        x = spla.spsolve(A.tocsc(), b)
    elif method == "cg":
        diag = A.diagonal()
        if np.any(diag <= 0.0):
            raise LinearSolveError("matrix is not positive definite (bad diagonal)")
        precond = spla.LinearOperator((n, n), matvec=lambda r: r / diag)
        x, info = spla.cg(A, b, rtol=min(tol, 1e-13), atol=0.0,
                          maxiter=10 * n, M=precond)
        if info > 0:
            raise LinearSolveError(f"CG did not converge within {10 * n} iterations")
    else:
        raise LinearSolveError(f"unknown SPD solver method {method!r}")
    residual = np.linalg.norm(A @ x - b) / scale
    if residual > max(tol, 1e-11):
        raise LinearSolveError(f"SPD solve residual {residual:.3e} exceeds {tol:.1e}")
    return x


@dataclass(frozen=True)
class BlockSystem:
    """Assembled 2N x 2N coupled matrix plus its building blocks."""

    matrix: sp.csr_matrix
    mass: sp.csr_matrix
    stiffness: sp.csr_matrix
    delta0: float
    tau: float
    n: int

    def blocks(self) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        """Return the original mass and stiffness blocks."""
        return self.mass, self.stiffness


def build_block_system(delta0: float, tau: float, M, A) -> BlockSystem:
    M = _as_csr(M)
    A = _as_csr(A)
    n = M.shape[0]
    if A.shape != (n, n):
        raise LinearSolveError("mass and stiffness blocks disagree in size")
    matrix = sp.bmat([[delta0 * M, tau * A], [-A, M]], format="csr")
    return BlockSystem(matrix=matrix, mass=M, stiffness=A,
                       delta0=float(delta0), tau=float(tau), n=n)


def solve_block(delta0: float, tau: float, M, A, rhs_u: np.ndarray,
                rhs_w: np.ndarray, method: str = "lu"):
    """Solve the coupled step system and report per-block residuals.

    Returns (u, w, (res_u, res_w)) where the residuals are relative to the
    corresponding right-hand side blocks.  Raises on singular systems or
    iterative breakdown.
    """
    if delta0 <= 0.0 or tau <= 0.0:
        raise LinearSolveError("delta0 and tau must be positive")
    system = build_block_system(delta0, tau, M, A)
    rhs = np.concatenate([np.asarray(rhs_u, dtype=float),
                          np.asarray(rhs_w, dtype=float)])
    if rhs.shape[0] != 2 * system.n:
        raise LinearSolveError("right-hand side does not match the block size")
    if method == "lu":
        try:
            lu = spla.splu(system.matrix.tocsc())
            x = lu.solve(rhs)
        except RuntimeError as exc:  # singular factorisation
            raise LinearSolveError(f"block factorisation failed: {exc}") from exc
    elif method == "gmres":
        x = _solve_block_gmres(system, rhs)
    else:
        raise LinearSolveError(f"unknown block solver method {method!r}")
    if not np.all(np.isfinite(x)):
        raise LinearSolveError("block solve produced non-finite values")
    n = system.n
    u, w = x[:n], x[n:]
    res = system.matrix @ x - rhs
    res_u = _relative(res[:n], rhs[:n])
    res_w = _relative(res[n:], rhs[n:])
    return u, w, (res_u, res_w)


def _relative(residual: np.ndarray, reference: np.ndarray) -> float:
    scale = np.linalg.norm(reference)
    if scale == 0.0:
        return float(np.linalg.norm(residual))
    return float(np.linalg.norm(residual) / scale)


def _solve_block_gmres(system: BlockSystem, rhs: np.ndarray) -> np.ndarray:
    """Restarted GMRES with the block-diagonal [M, M] preconditioner."""
    mass_lu = spla.splu(system.mass.tocsc())
    n = system.n

    def precond(r):
        return np.concatenate([mass_lu.solve(r[:n]) / system.delta0,
                               mass_lu.solve(r[n:])])

    op = spla.LinearOperator((2 * n, 2 * n), matvec=precond)
    x, info = spla.gmres(system.matrix, rhs, M=op, rtol=1e-12, atol=0.0,
                         restart=50, maxiter=200)
    if info != 0:
        raise LinearSolveError(f"GMRES failed to converge (info={info})")
    return x
