"""Linearized operators around a stationary profile.

Linearizing the evolution around a profile Phi splits into two radial
Schrodinger-type operators acting on the real and imaginary parts of
the perturbation:

    L_plus  = omega - Lap - p Phi^(p-1) - (2*-1) Phi^(2*-2)
    L_minus = omega - Lap -   Phi^(p-1) -        Phi^(2*-2)

Both are tridiagonal on the radial grid (self-adjoint in the weighted
inner product).  This module owns their assembly, in row form for
banded direct solves and in symmetrized form for eigensolvers, plus the
eigen-pipeline that extracts the single unstable direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal, eigvalsh_tridiagonal, \
    solve_banded

from .errors import DomainError, IllConditioned, NonConvergence, \
    PositiveInfimum
from .functionals import ModelParams, nonlinearity_prime, nonlinearity_ratio
from .grid import RadialField, RadialGrid, inner_real, norm_H1, norm_L2


def lplus_rows(grid: RadialGrid, params: ModelParams, phi_values: np.ndarray):
    """Row diagonals (lower, main, upper) of L_plus for banded solvers."""
    lower, main, upper = grid.laplacian_rows()
    pot = nonlinearity_prime(phi_values, params)
    return -lower, params.omega - main - pot, -upper


def lminus_rows(grid: RadialGrid, params: ModelParams, phi_values: np.ndarray):
    """Row diagonals (lower, main, upper) of L_minus for banded solvers."""
    lower, main, upper = grid.laplacian_rows()
    pot = nonlinearity_ratio(phi_values, params)
    return -lower, params.omega - main - pot, -upper


def lplus_sym_tridiag(grid: RadialGrid, params: ModelParams,
                      phi_values: np.ndarray):
    """(main, off) diagonals of the w-symmetrized L_plus; same spectrum."""
    main, off = grid.sym_laplacian_tridiag()
    pot = nonlinearity_prime(phi_values, params)
    return params.omega - main - pot, -off


def lminus_sym_tridiag(grid: RadialGrid, params: ModelParams,
                       phi_values: np.ndarray):
    """(main, off) diagonals of the w-symmetrized L_minus; same spectrum."""
    main, off = grid.sym_laplacian_tridiag()
    pot = nonlinearity_ratio(phi_values, params)
    return params.omega - main - pot, -off


def tridiag_matvec(rows, v: np.ndarray) -> np.ndarray:
    """Apply a tridiagonal operator given as (lower, main, upper) rows."""
    lower, main, upper = rows
    out = main * v
    out[:-1] = out[:-1] + upper * v[1:]
    out[1:] = out[1:] + lower * v[:-1]
    return out


def sym_tridiag_matvec(main: np.ndarray, off: np.ndarray,
                       v: np.ndarray) -> np.ndarray:
    """Apply a symmetric tridiagonal operator given as (main, off)."""
    out = main * v
    out[:-1] = out[:-1] + off * v[1:]
    out[1:] = out[1:] + off * v[:-1]
    return out


@dataclass(frozen=True)
class LinearizedOperators:
    """Assembled tridiagonal forms of L_plus / L_minus around a profile.

    Row triples feed banded direct solves; (main, off) pairs are the
    w-symmetrized forms sharing the same spectrum.  `kernel_residual`
    is ||L_minus Phi|| / ||Phi||_H1 and `potential_identity` the relative
    norm of L_plus Phi + (p-1) Phi^p + (2*-2) Phi^(2*-1); both restate
    the stationarity of Phi and certify the assembly.
    """

    grid: RadialGrid
    params: ModelParams
    phi: np.ndarray
    plus_rows: tuple
    minus_rows: tuple
    plus_sym: tuple
    minus_sym: tuple
    kernel_residual: float
    potential_identity: float


def assemble_operators(gs) -> LinearizedOperators:
    """Build L_plus / L_minus around a converged combined-model profile.

    Parameters
    ----------
    gs : GroundState
        Output of `solve_phi`; must include the critical power.

    Returns
    -------
    LinearizedOperators
        Row and symmetrized tridiagonal forms plus assembly certificates.
    """
    if not gs.includes_critical:
        raise DomainError(
            "linearized operators are defined for the combined model; "
            "got a profile solved with the critical power suppressed")
    grid = gs.profile.grid
    prm = gs.params
    phi = np.ascontiguousarray(gs.profile.values.real)

    plus_rows = lplus_rows(grid, prm, phi)
    minus_rows = lminus_rows(grid, prm, phi)
    plus_sym = lplus_sym_tridiag(grid, prm, phi)
    minus_sym = lminus_sym_tridiag(grid, prm, phi)

    phi_f = gs.profile
    w = grid.w
    lm_phi = tridiag_matvec(minus_rows, phi)
    kernel_residual = float(np.sqrt(np.sum(w * lm_phi**2)))
    kernel_residual /= norm_H1(phi_f)

    qq = prm.two_star
    drive = (prm.p - 1.0) * phi**prm.p + (qq - 2.0) * phi**(qq - 1.0)
    lp_phi = tridiag_matvec(plus_rows, phi)
    potential_identity = float(
        np.sqrt(np.sum(w * (lp_phi + drive)**2))
        / np.sqrt(np.sum(w * drive**2)))

    ops = LinearizedOperators(
        grid=grid, params=prm, phi=phi,
        plus_rows=plus_rows, minus_rows=minus_rows,
        plus_sym=plus_sym, minus_sym=minus_sym,
        kernel_residual=kernel_residual,
        potential_identity=potential_identity)
    if kernel_residual > 1e-5 or potential_identity > 1e-5:
        raise NonConvergence(
            f"operator assembly certificates failed: |L_minus Phi| = "
            f"{kernel_residual:.3e} (H1-relative), potential identity "
            f"residual = {potential_identity:.3e}; the profile is not a "
            f"converged stationary point")
    return ops


def _project(v: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Remove the span{psi} component (psi unit, euclidean)."""
    return v - psi * (psi @ v)


class _DeflatedMinusSolver:
    """Apply A_minus^{-1} on the orthogonal complement of span{psi}.

    Preconditioned conjugate gradient with kernel deflation: the right
    hand side, every search direction, and every preconditioner output
    are projected off the (near-)kernel vector psi, so the iteration
    never meets the singular direction.  Preconditioner: banded solve of
    A_minus + omega I, which is safely positive definite.
    """

    def __init__(self, minus_sym, psi: np.ndarray, omega: float,
                 tol: float = 1e-10, maxiter: int = 400):
        self.main, self.off = minus_sym
        self.psi = psi
        self.tol = tol
        self.maxiter = maxiter
        n = self.main.size
        ab = np.zeros((3, n))
        ab[0, 1:] = self.off
        ab[1, :] = self.main + omega
        ab[2, :-1] = self.off
        self._ab = ab
        self.last_iterations = 0

    def _precond(self, r: np.ndarray) -> np.ndarray:
        return _project(solve_banded((1, 1), self._ab, r,
                                     check_finite=False), self.psi)

    def __call__(self, b: np.ndarray) -> np.ndarray:
        b = _project(b, self.psi)
        bnorm = float(np.linalg.norm(b))
        if bnorm == 0.0:
            return np.zeros_like(b)
        x = np.zeros_like(b)
        r = b.copy()
        z = self._precond(r)
        p = z.copy()
        rz = float(r @ z)
        for it in range(1, self.maxiter + 1):
            ap = _project(sym_tridiag_matvec(self.main, self.off, p),
                          self.psi)
            pap = float(p @ ap)
            if pap <= 0.0 or not np.isfinite(pap):
                # Curvature lost to round-off; fine iff already converged
                # to near the floor, fatal otherwise.
                if float(np.linalg.norm(r)) <= 1e-9 * bnorm:
                    self.last_iterations = it
                    return _project(x, self.psi)
                raise IllConditioned(
                    f"kernel-complement solve lost positivity "
                    f"(p.Ap = {pap:.3e}) at relative residual "
                    f"{np.linalg.norm(r) / bnorm:.3e}")
            alpha = rz / pap
            x += alpha * p
            r -= alpha * ap
            if float(np.linalg.norm(r)) <= self.tol * bnorm:
                self.last_iterations = it
                return _project(x, self.psi)
            z = self._precond(r)
            rz_new = float(r @ z)
            p = z + (rz_new / rz) * p
            rz = rz_new
        raise IllConditioned(
            f"kernel-complement solve for L_minus stalled after "
            f"{self.maxiter} iterations (reached "
            f"{np.linalg.norm(r) / bnorm:.3e} relative, target "
            f"{self.tol:.1e})")


def _pentadiag_shift_ab(minus_sym, plus_sym, sigma: float) -> np.ndarray:
    """Banded storage of A_minus @ A_plus - sigma*I for solve_banded."""
    m1, o1 = minus_sym
    m2, o2 = plus_sym
    n = m1.size
    up2 = o1[:-1] * o2[1:]
    up1 = m1[:-1] * o2 + o1 * m2[1:]
    diag = m1 * m2 - sigma
    diag[1:] += o1 * o2
    diag[:-1] += o1 * o2
    lo1 = o1 * m2[:-1] + m1[1:] * o2
    lo2 = o1[1:] * o2[:-1]
    ab = np.zeros((5, n))
    ab[0, 2:] = up2
    ab[1, 1:] = up1
    ab[2, :] = diag
    ab[3, :-1] = lo1
    ab[4, :-2] = lo2
    return ab


def _coarse_dense_seed(ops: LinearizedOperators, n_coarse: int = 512):
    """Dense solve of the constrained pencil on a coarsened grid.

    Coarsens the handed operators (not the profile): the diagonal
    potentials are recovered from the symmetrized main diagonals and
    resampled onto an n_coarse grid with the same box, so a modified
    pencil is seeded faithfully.  The coarse A_minus is eigendecomposed,
    its kernel cluster deflated, and the constrained Rayleigh problem
    reduced to a small dense symmetric eigenproblem.  Returns (nu_seed,
    seed values on the fine grid nodes).
    """
    grid = ops.grid
    if grid.n <= n_coarse:
        coarse = grid
        pm, po = ops.plus_sym
        mm, mo = ops.minus_sym
    else:
        coarse = RadialGrid(d=grid.d, n=n_coarse, r_max=grid.r_max)
        lap_main, _ = grid.sym_laplacian_tridiag()
        pot_plus = ops.params.omega - lap_main - ops.plus_sym[0]
        pot_minus = ops.params.omega - lap_main - ops.minus_sym[0]
        lap_main_c, lap_off_c = coarse.sym_laplacian_tridiag()
        pm = ops.params.omega - lap_main_c - np.interp(coarse.r, grid.r,
                                                       pot_plus)
        mm = ops.params.omega - lap_main_c - np.interp(coarse.r, grid.r,
                                                       pot_minus)
        po = mo = -lap_off_c

    lam, q = eigh_tridiagonal(mm, mo)
    keep = lam > 1e-10 * lam.max()
    dropped = int((~keep).sum())
    if dropped == 0 or dropped > 3:
        raise NonConvergence(
            f"coarse A_minus spectrum has {dropped} kernel-cluster "
            f"eigenvalues; expected a single near-zero kernel")
    lam1, q1 = lam[keep], q[:, keep]

    s = q1 * np.sqrt(lam1)[None, :]
    a_plus = np.diag(pm)
    idx = np.arange(pm.size - 1)
    a_plus[idx, idx + 1] = po
    a_plus[idx + 1, idx] = po
    h = s.T @ a_plus @ s
    h = 0.5 * (h + h.T)
    evals, evecs = eigh(h, check_finite=False, overwrite_a=True,
                        subset_by_index=(0, 0))
    nu_seed = float(evals[0])
    u_t = s @ evecs[:, 0]
    u_vals = u_t / np.sqrt(coarse.w)
    if coarse is grid:
        seed = u_vals
    else:
        seed = np.interp(grid.r, coarse.r, u_vals)
    return nu_seed, seed


@dataclass(frozen=True)
class SpectralData:
    """Unstable eigenpair of the linearized flow around Phi.

    nu is the infimum of the constrained Rayleigh quotient (negative in
    the unstable regime), mu = sqrt(-nu) the exponential rate, f1/f2 the
    real mode pair normalized so 2(f1, f2) = 1 with (Phi, f2) < 0, and
    `minimizer` the unit-norm minimizer u (f1 is a negative multiple of
    it).  `diagnostics` records the certificate residuals.
    """

    params: ModelParams
    nu: float
    mu: float
    f1: RadialField
    f2: RadialField
    minimizer: RadialField
    diagnostics: dict


def solve_mu(ops: LinearizedOperators, gs, *, tol: float = 1e-10,
             maxiter: int = 120) -> SpectralData:
    """Extract the unstable eigenvalue and mode pair of -iL.

    Minimizes <L_plus u, u> / <L_minus^{-1} u, u> over real radial u
    with (u, Phi) = 0: a coarse dense solve of the deflated pencil seeds
    a locally-optimal projected conjugate-gradient descent on the fine
    grid (shift preconditioner from the coarse eigenvalue; L_minus^{-1}
    applied by deflated conjugate-gradient solves).  The mode pair is
    f1 = -u, f2 = -sqrt(-nu) L_minus^{-1} u up to the kernel component
    fixed by (Phi', f2) = 0, jointly scaled so 2(f1, f2) = 1 and sign-
    flipped so (Phi, f2) < 0.

    Parameters
    ----------
    ops : LinearizedOperators
        Output of `assemble_operators`.
    gs : GroundState
        The profile the operators were built from (supplies Phi').
    tol : float
        Scale-free eigenresidual target for the descent.

    Returns
    -------
    SpectralData

    Raises
    ------
    PositiveInfimum
        If the constrained infimum comes out nonnegative.
    IllConditioned
        If a kernel-complement solve fails.
    NonConvergence
        If the descent stalls or a mode certificate fails.
    """
    grid, prm = ops.grid, ops.params
    if gs.profile.grid is not grid and not gs.profile.grid.same_geometry(grid):
        raise DomainError("ground state and operators live on different grids")
    w = grid.w
    sw = np.sqrt(w)
    psi = sw * ops.phi
    psi /= np.linalg.norm(psi)

    phi_prime = gs.omega_derivative
    if phi_prime is None:
        from .groundstate import solve_phi_prime
        phi_prime = solve_phi_prime(gs)

    pm, po = ops.plus_sym
    mm, mo = ops.minus_sym
    bsolve = _DeflatedMinusSolver(ops.minus_sym, psi, prm.omega, tol=1e-12)

    nu_seed, seed = _coarse_dense_seed(ops)
    sigma = 1.15 * nu_seed if nu_seed < 0 else -abs(nu_seed) - 1.0
    ab5 = _pentadiag_shift_ab(ops.minus_sym, ops.plus_sym, sigma)

    def precond(r):
        t = sym_tridiag_matvec(mm, mo, _project(r, psi))
        t = solve_banded((2, 2), ab5, t, check_finite=False)
        return _project(t, psi)

    x = _project(sw * seed, psi)
    x /= np.linalg.norm(x)
    ax = sym_tridiag_matvec(pm, po, x)
    bx = bsolve(x)
    rho = float(x @ ax) / float(x @ bx)
    p_dir = None
    res = np.inf
    iterations = 0
    best = None  # (res, x, ax, bx, rho); round-off floor sits above tol
    stalled = 0
    for iterations in range(1, maxiter + 1):
        r = _project(ax - rho * bx, psi)
        res = float(np.linalg.norm(r)
                    / (abs(rho) * np.linalg.norm(bx) + np.linalg.norm(ax)))
        if best is None or res < best[0]:
            best = (res, x, ax, bx, rho)
            stalled = 0
        else:
            # No progress: the preconditioned correction has hit the
            # round-off floor and further steps only amplify noise.
            stalled += 1
            if stalled >= 3:
                res, x, ax, bx, rho = best
                break
        if res < tol:
            break
        wvec = precond(r)
        cols = [x, wvec] if p_dir is None else [x, wvec, p_dir]
        v_basis, _ = np.linalg.qr(np.column_stack(cols))
        for attempt in (v_basis, v_basis[:, :2]):
            av = np.column_stack([sym_tridiag_matvec(pm, po, attempt[:, j])
                                  for j in range(attempt.shape[1])])
            bv = np.column_stack([bsolve(attempt[:, j])
                                  for j in range(attempt.shape[1])])
            a_g = attempt.T @ av
            b_g = attempt.T @ bv
            a_g = 0.5 * (a_g + a_g.T)
            b_g = 0.5 * (b_g + b_g.T)
            try:
                evals, y = eigh(a_g, b_g)
                break
            except np.linalg.LinAlgError:
                continue
        else:
            raise IllConditioned(
                "projected Rayleigh-Ritz system is numerically singular")
        x_new = attempt @ y[:, 0]
        p_dir = _project(x_new - x * float(x @ x_new), psi)
        pn = float(np.linalg.norm(p_dir))
        p_dir = p_dir / pn if pn > 1e-13 else None
        x = _project(x_new, psi)
        x /= np.linalg.norm(x)
        ax = sym_tridiag_matvec(pm, po, x)
        bx = bsolve(x)
        rho = float(x @ ax) / float(x @ bx)
    else:
        res, x, ax, bx, rho = best
    nu = float(rho)
    if np.isfinite(nu) and nu >= 0.0:
        # The Ritz value is non-increasing along the descent, so a
        # nonnegative value at termination means no negative direction
        # was found whether or not the residual converged.
        raise PositiveInfimum(
            f"constrained Rayleigh infimum is nonnegative (nu = {nu:.6e}); "
            f"no unstable direction at omega = {prm.omega:g}")
    if not (np.isfinite(nu) and np.isfinite(res)) or res > max(tol, 3e-8):
        raise NonConvergence(
            f"Rayleigh-quotient descent stalled: residual {res:.3e} after "
            f"{iterations} iterations (target {tol:.1e})")
    mu = float(np.sqrt(-nu))

    # Mode pair: f1 = -u; f2 solves L_minus f2 = mu f1 with the kernel
    # component pinned by (Phi', f2) = 0.
    f1_v = -x / sw
    f2_v = mu * bsolve(-x) / sw
    phip_v = phi_prime.values.real
    phi_v = ops.phi

    def dot_w(a, b):
        return float(np.sum(w * a * b))

    alpha = -dot_w(phip_v, f2_v) / dot_w(phip_v, phi_v)
    f2_v = f2_v + alpha * phi_v

    pair = dot_w(f1_v, f2_v)
    if pair <= 0.0:
        raise NonConvergence(
            f"mode pairing degenerate: (f1, f2) = {pair:.3e} <= 0")
    s = 1.0 / np.sqrt(2.0 * pair)
    f1_v = s * f1_v
    f2_v = s * f2_v
    if dot_w(phi_v, f2_v) > 0.0:
        f1_v, f2_v = -f1_v, -f2_v

    u_v = -f1_v / np.sqrt(dot_w(f1_v, f1_v))

    # Certificates, all recomputed from the row forms.
    lp_f1 = tridiag_matvec(ops.plus_rows, f1_v)
    lm_f2 = tridiag_matvec(ops.minus_rows, f2_v)
    norm_w = lambda a: float(np.sqrt(np.sum(w * a * a)))
    r1 = norm_w(lp_f1 + mu * f2_v) / max(norm_w(lp_f1), mu * norm_w(f2_v))
    r2 = norm_w(lm_f2 - mu * f1_v) / max(norm_w(lm_f2), mu * norm_w(f1_v))
    pairing = 2.0 * dot_w(f1_v, f2_v)
    orth_phi_f1 = dot_w(phi_v, f1_v) / (norm_w(phi_v) * norm_w(f1_v))
    orth_phip_f2 = dot_w(phip_v, f2_v) / (norm_w(phip_v) * norm_w(f2_v))
    sign_phi_f2 = dot_w(phi_v, f2_v)
    bx_final = bsolve(x)
    rayleigh_check = float(x @ ax) / float(x @ bx_final)
    closure_vec = sym_tridiag_matvec(mm, mo, ax) - nu * x
    closure = float(np.linalg.norm(closure_vec)) / abs(nu)

    diagnostics = {
        "iterations": iterations,
        "eigen_residual": res,
        "nu_seed": nu_seed,
        "mode_residual_plus": r1,
        "mode_residual_minus": r2,
        "pairing": pairing,
        "orth_phi_f1": orth_phi_f1,
        "orth_phip_f2": orth_phip_f2,
        "sign_phi_f2": sign_phi_f2,
        "rayleigh_dual": abs(rayleigh_check - nu) / abs(nu),
        "closure": closure,
        "lminus_solve_iterations": bsolve.last_iterations,
    }

    bad = []
    if r1 > 1e-4:
        bad.append(f"|L+f1 + mu f2| = {r1:.3e} rel (limit 1e-4)")
    if r2 > 1e-4:
        bad.append(f"|L-f2 - mu f1| = {r2:.3e} rel (limit 1e-4)")
    if abs(pairing - 1.0) > 1e-6:
        bad.append(f"2(f1,f2) = {pairing:.9f} (limit 1 +/- 1e-6)")
    if abs(orth_phi_f1) > 1e-6:
        bad.append(f"(Phi,f1) = {orth_phi_f1:.3e} rel (limit 1e-6)")
    if abs(orth_phip_f2) > 1e-6:
        bad.append(f"(Phi',f2) = {orth_phip_f2:.3e} rel (limit 1e-6)")
    if sign_phi_f2 >= 0.0:
        bad.append(f"(Phi,f2) = {sign_phi_f2:.3e} not negative")
    if bad:
        raise NonConvergence("mode certificates failed: " + "; ".join(bad))

    return SpectralData(
        params=prm, nu=nu, mu=mu,
        f1=RadialField(grid, f1_v), f2=RadialField(grid, f2_v),
        minimizer=RadialField(grid, u_v), diagnostics=diagnostics)


def operator_certificates(ops: LinearizedOperators) -> dict:
    """Eigenvalue-count certificates for the assembled operators.

    Returns the two smallest eigenvalues of L_minus with the overlap of
    the bottom eigenvector against Phi (non-negativity with kernel
    exactly along the profile), the negative eigenvalues of L_plus
    (exactly one in the unstable regime), and how many L_plus
    eigenvalues fall inside the +/- 1e-6 * scale window around zero
    (none: non-degeneracy).  The window scale is the low-lying spectral
    scale max(|lambda_min|, omega) -- a matrix-norm scale would grow
    like 1/h^2 and swallow genuine modes near the continuum edge omega.
    """
    grid = ops.grid
    mm, mo = ops.minus_sym
    pm, po = ops.plus_sym
    psi = np.sqrt(grid.w) * ops.phi
    psi /= np.linalg.norm(psi)

    vals, vecs = eigh_tridiagonal(mm, mo, select="i", select_range=(0, 1))
    kernel_overlap = abs(float(vecs[:, 0] @ psi))

    bound = float(np.max(np.abs(pm)) + 2.0 * np.max(np.abs(po)))
    negs = eigvalsh_tridiagonal(pm, po, select="v",
                                select_range=(-10.0 * bound, 0.0))
    scale = max(float(np.min(negs)) * -1.0 if negs.size else 0.0,
                ops.params.omega)
    window = eigvalsh_tridiagonal(
        pm, po, select="v",
        select_range=(-1e-6 * scale, 1e-6 * scale))

    return {
        "lminus_kernel_eig": float(vals[0]),
        "lminus_kernel_overlap": kernel_overlap,
        "lminus_lambda1": float(vals[1]),
        "lplus_negative_count": int(negs.size),
        "lplus_negative_eigs": [float(v) for v in negs],
        "lplus_zero_window_count": int(window.size),
        "lplus_scale": scale,
    }


def rayleigh_quotient(ops: LinearizedOperators, u) -> float:
    """<L_plus u, u> / <L_minus^{-1} u, u> for u projected off Phi.

    The independent evaluation route for the eigenvalue returned by
    `solve_mu`; homogeneous of degree zero in u.
    """
    vals = u.values.real if isinstance(u, RadialField) else np.asarray(u)
    grid = ops.grid
    sw = np.sqrt(grid.w)
    psi = sw * ops.phi
    psi /= np.linalg.norm(psi)
    ut = _project(sw * vals, psi)
    nrm = float(np.linalg.norm(ut))
    if nrm < 1e-14 * float(np.linalg.norm(sw * vals) + 1e-300):
        raise DomainError("field is entirely along Phi; quotient undefined")
    pm, po = ops.plus_sym
    bsolve = _DeflatedMinusSolver(ops.minus_sym, psi, ops.params.omega,
                                  tol=1e-12)
    num = float(ut @ sym_tridiag_matvec(pm, po, ut))
    den = float(ut @ bsolve(ut))
    return num / den


def ratio_lemma_check(spec: SpectralData, gs) -> float:
    """mu |(Phi, f2)| / |(Phi^(2*-1), f1)|, +inf if the denominator
    degenerates below 1e-12 of its natural scale."""
    phi = gs.profile
    grid = phi.grid
    qq = gs.params.two_star
    phi_crit = RadialField(grid, phi.values.real ** (qq - 1.0))
    num = spec.mu * abs(inner_real(phi, spec.f2))
    den = abs(inner_real(phi_crit, spec.f1))
    scale = norm_L2(phi_crit) * norm_L2(spec.f1)
    if den < 1e-12 * scale:
        return float("inf")
    return num / den
