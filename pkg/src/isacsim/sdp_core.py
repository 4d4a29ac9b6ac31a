"""Dense primal-dual interior-point solver for small block-structured SDPs.

Problems are stated over named Hermitian PSD matrix blocks plus nonnegative
scalars, with a real linear objective and linear trace constraints
(<=, ==, >=).  Complex Hermitian data is lowered to a real symmetric problem
via the standard embedding

    H  ->  [[Re H, -Im H], [Im H, Re H]]

with a factor-of-2 correction on coefficient matrices so objective and
constraint values coincide; solutions are mapped back to complex form.

The solver is an infeasible-start Mehrotra predictor-corrector method with
Nesterov-Todd scaling, dense factorizations, and nonnegative slack conversion
of inequalities.  Instances are immutable; a solve is single-threaded and
deterministic, so independent solves can run freely in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

_DEBUG = False

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_MAX_ITERATIONS = "max_iterations"
STATUS_NUMERICAL_FAILURE = "numerical_failure"

SENSE_LE = "<="
SENSE_EQ = "=="
SENSE_GE = ">="

_HERM_TOL = 1e-12
# dual objective beyond this, with a stagnant primal residual, is treated as an
# infeasibility certificate (measured on the internally equilibrated problem)
_INFEASIBLE_DOBJ = 1e8
_STAGNANT_WINDOW = 10


@dataclass(frozen=True)
class SolverOptions:
    gap_tol: float = 1e-7
    feas_tol: float = 1e-7
    max_iterations: int = 100
    step_fraction: float = 0.99  # fraction-to-boundary factor


@dataclass(frozen=True)
class Constraint:
    """One linear trace constraint: sum of matrix/scalar terms vs rhs."""

    matrix_terms: dict  # block name -> Hermitian coefficient matrix
    scalar_terms: dict  # scalar name -> real coefficient
    rhs: float
    sense: str  # one of "<=", "==", ">="
    tag: str = ""


@dataclass
class SdpProblem:
    """Block SDP: named Hermitian PSD blocks, nonnegative scalars, trace constraints.

    blocks: list of (name, dimension); scalars: list of names.
    objective_* hold the (single) linear objective; sense is "maximize" or
    "minimize".  meta is free-form assembly bookkeeping (e.g. unit scales).
    """

    blocks: list
    scalars: list
    objective_matrices: dict
    objective_scalars: dict
    sense: str
    constraints: list
    meta: dict = field(default_factory=dict)

    def block_dim(self, name):
        for bname, dim in self.blocks:
            if bname == name:
                return dim
        raise ValidationError(f"unknown block {name!r}")

    def validate(self):
        if not self.blocks and not self.scalars:
            raise ValidationError("problem declares no variables")
        if self.sense not in ("maximize", "minimize"):
            raise ValidationError(f"bad objective sense {self.sense!r}")
        names = [b for b, _ in self.blocks]
        if len(set(names)) != len(names) or len(set(self.scalars)) != len(self.scalars):
            raise ValidationError("duplicate variable names")
        for name, dim in self.blocks:
            if dim < 1:
                raise ValidationError(f"block {name!r} has dimension {dim}")
        for where, mats in [("objective", self.objective_matrices)] + [
            (f"constraint {j} ({con.tag})", con.matrix_terms)
            for j, con in enumerate(self.constraints)
        ]:
            for bname, mat in mats.items():
                dim = self.block_dim(bname)
                a = np.asarray(mat)
                if a.shape != (dim, dim):
                    raise ValidationError(f"{where}: coefficient for {bname!r} has shape {a.shape}")
                asym = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
                if asym > _HERM_TOL * (1.0 + np.max(np.abs(a))):
                    raise ValidationError(f"{where}: coefficient for {bname!r} not Hermitian (asym={asym:g})")
        declared = set(self.scalars)
        for sname in self.objective_scalars:
            if sname not in declared:
                raise ValidationError(f"objective references unknown scalar {sname!r}")
        for j, con in enumerate(self.constraints):
            if con.sense not in (SENSE_LE, SENSE_EQ, SENSE_GE):
                raise ValidationError(f"constraint {j}: bad sense {con.sense!r}")
            for sname in con.scalar_terms:
                if sname not in declared:
                    raise ValidationError(f"constraint {j} references unknown scalar {sname!r}")
        return self


@dataclass
class SdpSolution:
    block_values: dict
    scalar_values: dict
    objective: float
    status: str
    duality_gap: float
    residuals: np.ndarray  # per-constraint signed violation (positive = violated)
    iterations: int
    info: dict = field(default_factory=dict)


def _embed(mat):
    """Complex Hermitian n x n -> real symmetric 2n x 2n."""
    a = np.asarray(mat, dtype=complex)
    re, im = a.real, a.imag
    return np.block([[re, -im], [im, re]])


def _unembed(xhat, n):
    """Back-map a real symmetric 2n x 2n block value to complex Hermitian n x n.

    Exact Hermitian by construction: the real part is the symmetric average of
    the diagonal quadrants, the imaginary part the antisymmetric average of the
    off-diagonal ones.
    """
    x11 = xhat[:n, :n]
    x12 = xhat[:n, n:]
    x21 = xhat[n:, :n]
    x22 = xhat[n:, n:]
    re = (x11 + x22) / 2.0
    re = (re + re.T) / 2.0
    im = (x21 - x12) / 2.0
    im = (im - im.T) / 2.0
    return re + 1j * im


def realify(problem: SdpProblem) -> SdpProblem:
    """Replace every n x n Hermitian block by its 2n x 2n real embedding.

    Coefficient matrices are mapped as T(A)/2 so that
    <T(A)/2, T(X)> = Re Tr(A X) = Tr(A X); objective and constraint values of
    the embedded problem therefore coincide with the complex ones, and
    solutions are reported back in complex form via the retained quadrant map
    (see _unembed).
    """
    problem.validate()
    blocks = [(name, 2 * dim) for name, dim in problem.blocks]

    def conv(mats):
        return {name: _embed(m) / 2.0 for name, m in mats.items()}

    constraints = [
        Constraint(conv(con.matrix_terms), dict(con.scalar_terms), con.rhs, con.sense, con.tag)
        for con in problem.constraints
    ]
    return SdpProblem(
        blocks=blocks,
        scalars=list(problem.scalars),
        objective_matrices=conv(problem.objective_matrices),
        objective_scalars=dict(problem.objective_scalars),
        sense=problem.sense,
        constraints=constraints,
        meta=dict(problem.meta),
    )


# ---------------------------------------------------------------------------
# standard-form compilation
# ---------------------------------------------------------------------------


class _Std:
    """min sum_b <C_b,X_b> + c.u  s.t.  sum_b <A_jb,X_b> + a_j.u = b_j, X PSD, u >= 0.

    Holds the equilibrated real data: every row is divided by its max
    coefficient magnitude and the objective by its own; both transforms leave
    the optimizing variables unchanged and are undone when reporting.
    """

    def __init__(self, real_problem, n_user_scalars):
        self.dims = [dim for _, dim in real_problem.blocks]
        nb = len(self.dims)
        cons = real_problem.constraints
        m = len(cons)
        self.flip = -1.0 if real_problem.sense == "maximize" else 1.0

        block_index = {name: i for i, (name, _) in enumerate(real_problem.blocks)}
        scal_index = {name: i for i, name in enumerate(real_problem.scalars)}
        self.n_user = n_user_scalars
        n_slack = sum(1 for c in cons if c.sense != SENSE_EQ)
        self.p = n_user_scalars + n_slack

        cs = 0.0
        for mat in real_problem.objective_matrices.values():
            if mat.size:
                cs = max(cs, float(np.max(np.abs(mat))))
        for v in real_problem.objective_scalars.values():
            cs = max(cs, abs(float(v)))
        self.cs = cs if cs > 0 else 1.0

        self.C = [np.zeros((d, d)) for d in self.dims]
        for name, mat in real_problem.objective_matrices.items():
            self.C[block_index[name]] = self.flip * np.asarray(mat, float) / self.cs
        self.c = np.zeros(self.p)
        for name, v in real_problem.objective_scalars.items():
            self.c[scal_index[name]] = self.flip * float(v) / self.cs

        self.rows_mat = []
        self.Alp = np.zeros((m, self.p))
        self.b = np.zeros(m)
        self.row_scale = np.ones(m)
        slack = n_user_scalars
        for j, con in enumerate(cons):
            r = 0.0
            for mat in con.matrix_terms.values():
                if mat.size:
                    r = max(r, float(np.max(np.abs(mat))))
            for v in con.scalar_terms.values():
                r = max(r, abs(float(v)))
            r = max(r, abs(float(con.rhs)))
            if r <= 0.0:
                r = 1.0
            self.row_scale[j] = r
            terms = {}
            for name, mat in con.matrix_terms.items():
                terms[block_index[name]] = np.asarray(mat, float) / r
            self.rows_mat.append(terms)
            for name, v in con.scalar_terms.items():
                self.Alp[j, scal_index[name]] = float(v) / r
            self.b[j] = float(con.rhs) / r
            if con.sense == SENSE_LE:
                self.Alp[j, slack] = 1.0
                slack += 1
            elif con.sense == SENSE_GE:
                self.Alp[j, slack] = -1.0
                slack += 1

        self.touch = [[] for _ in range(nb)]
        for j, terms in enumerate(self.rows_mat):
            for bidx in terms:
                self.touch[bidx].append(j)
        self.m = m
        self.ntot = sum(self.dims) + self.p

    # -- operators ---------------------------------------------------------

    def apply_A(self, X, u):
        out = self.Alp @ u if self.p else np.zeros(self.m)
        for j, terms in enumerate(self.rows_mat):
            acc = 0.0
            for bidx, mat in terms.items():
                acc += float(np.sum(mat * X[bidx]))
            out[j] += acc
        return out

    def apply_AT(self, y):
        out = [np.zeros((d, d)) for d in self.dims]
        for bidx, rows in enumerate(self.touch):
            for j in rows:
                out[bidx] += y[j] * self.rows_mat[j][bidx]
        return out, (self.Alp.T @ y if self.p else np.zeros(0))

    def pobj(self, X, u):
        val = float(self.c @ u) if self.p else 0.0
        for Cb, Xb in zip(self.C, X):
            val += float(np.sum(Cb * Xb))
        return val


# ---------------------------------------------------------------------------
# interior-point core
# ---------------------------------------------------------------------------


def _classify_stall(pres, it, opt):
    """Decide what a dead-stalled iteration means.

    The in-loop infeasibility rule needs the dual objective to clear 1e8, but
    the cone boundary can block dual progress long before that.  When the
    iteration dies late with the primal residual still orders of magnitude
    above tolerance, no primal-feasible point was approachable and the stall
    is best explained by infeasibility; anything else is an iteration limit.
    """
    if it >= 15 and pres > 1e3 * opt.feas_tol:
        return STATUS_INFEASIBLE
    return STATUS_MAX_ITERATIONS


def _chol_with_jitter(a):
    scale = max(float(np.mean(np.abs(np.diag(a)))), 1e-300)
    bump = 0.0
    for k in range(7):
        try:
            return np.linalg.cholesky(a + bump * np.eye(a.shape[0]))
        except np.linalg.LinAlgError:
            bump = scale * 10.0 ** (-14 + 2 * k)
    return None


def _nt_scaling(Xb, Sb):
    """NT scaling of one block: returns (R, Rinv, W, lam, Lx) with W S W = X."""
    Lx = _chol_with_jitter(Xb)
    Ls = _chol_with_jitter(Sb)
    if Lx is None or Ls is None:
        return None
    U, sv, Vt = np.linalg.svd(Ls.T @ Lx)
    sv = np.maximum(sv, 1e-150)
    sq = np.sqrt(sv)
    R = (Lx @ Vt.T) / sq[None, :]
    Rinv = (U / sq[None, :]).T @ Ls.T
    W = R @ R.T
    return R, Rinv, W, sv, Lx


def _max_step_block(Lx, dX):
    rhs = np.linalg.solve(Lx, dX)
    E = np.linalg.solve(Lx, rhs.T)
    E = (E + E.T) / 2.0
    lmin = float(np.linalg.eigvalsh(E)[0])
    if lmin >= -1e-300:
        return np.inf
    return 1.0 / (-lmin)


def _max_step_vec(u, du):
    neg = du < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-u[neg] / du[neg]))


def _ipm(sf: _Std, opt: SolverOptions):
    dims, p, m = sf.dims, sf.p, sf.m
    bmax = 1.0 + (float(np.max(np.abs(sf.b))) if m else 0.0)
    cmax = 1.0 + max(
        [float(np.max(np.abs(C))) for C in sf.C if C.size] + ([float(np.max(np.abs(sf.c)))] if p else [0.0])
    )
    tau_p = bmax  # 1 + max |rhs|
    tau_d = cmax
    X = [tau_p * np.eye(d) for d in dims]
    S = [tau_d * np.eye(d) for d in dims]
    u = np.full(p, tau_p)
    su = np.full(p, tau_d)
    y = np.zeros(m)
    mu_init = tau_p * tau_d

    merit_hist = []
    mu_hist = []
    pres_hist = []
    status = STATUS_MAX_ITERATIONS
    it = 0
    n_center = 0
    n_diverge = 0

    def residuals(X, u, S, su, y):
        rp = sf.b - sf.apply_A(X, u)
        ATy, ATly = sf.apply_AT(y)
        Rd = [Cb - At - Sb for Cb, At, Sb in zip(sf.C, ATy, S)]
        rdu = sf.c - ATly - su
        gap = float(u @ su)
        for Xb, Sb in zip(X, S):
            gap += float(np.sum(Xb * Sb))
        mu = gap / sf.ntot
        pres = float(np.max(np.abs(rp))) / bmax if m else 0.0
        dres = 0.0
        for R_ in Rd:
            if R_.size:
                dres = max(dres, float(np.max(np.abs(R_))))
        if p:
            dres = max(dres, float(np.max(np.abs(rdu))))
        dres /= cmax
        return rp, Rd, rdu, mu, pres, dres

    for it in range(1, opt.max_iterations + 1):
        rp, Rd, rdu, mu, pres, dres = residuals(X, u, S, su, y)
        pobj = sf.pobj(X, u)
        dobj = float(sf.b @ y)
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        merit = mu * sf.ntot  # the duality (complementarity) gap
        merit_hist.append(merit)
        mu_hist.append(mu)
        pres_hist.append(pres)

        if not np.isfinite(merit):
            status = STATUS_NUMERICAL_FAILURE
            break
        if pres <= opt.feas_tol and dres <= opt.feas_tol and relgap <= opt.gap_tol:
            status = STATUS_OPTIMAL
            break
        # diverging dual objective while the primal residual has made no real
        # progress toward feasibility over the trailing window: treat as a
        # certificate of primal infeasibility
        if abs(dobj) > _INFEASIBLE_DOBJ and len(pres_hist) > _STAGNANT_WINDOW:
            floor = 1e-6 * (1.0 + pres_hist[0])
            if all(v > floor for v in pres_hist[-_STAGNANT_WINDOW:]):
                status = STATUS_INFEASIBLE
                break

        # NT scaling per block; LP part scales elementwise
        scal = []
        failed = False
        for Xb, Sb in zip(X, S):
            ntb = _nt_scaling(Xb, Sb)
            if ntb is None:
                failed = True
                break
            scal.append(ntb)
        if failed:
            status = STATUS_NUMERICAL_FAILURE
            break
        w2 = u / su if p else np.zeros(0)
        w = np.sqrt(w2)
        lam_lp = np.sqrt(u * su)

        # Schur complement  M[j,k] = sum_b <A_jb, W_b A_kb W_b> + sum_i a_ji w2_i a_ki
        Mmat = (sf.Alp * w2[None, :]) @ sf.Alp.T if p else np.zeros((m, m))
        for bidx, rows in enumerate(sf.touch):
            if not rows:
                continue
            Wb = scal[bidx][2]
            Ys = [Wb @ sf.rows_mat[j][bidx] @ Wb for j in rows]
            for jj, j in enumerate(rows):
                Aj = sf.rows_mat[j][bidx]
                for kk in range(jj, len(rows)):
                    k = rows[kk]
                    val = float(np.sum(Aj * Ys[kk]))
                    Mmat[j, k] += val
                    if k != j:
                        Mmat[k, j] += val
        Lm = _chol_with_jitter(Mmat) if m else None
        if m and Lm is None:
            status = STATUS_NUMERICAL_FAILURE
            break

        def schur_solve(rhs):
            z = np.linalg.solve(Lm, rhs)
            out = np.linalg.solve(Lm.T, z)
            # one round of iterative refinement against the unjittered matrix;
            # near the central-path limit the Schur system is ill enough that
            # this visibly lowers the noise floor of the residuals
            r = rhs - Mmat @ out
            z = np.linalg.solve(Lm, r)
            return out + np.linalg.solve(Lm.T, z)

        def direction(Rv, rv_lp):
            # rhs_j = rp_j + sum_b <A_jb, W Rd W - Rv> + sum_i a_ji (w2 rdu - rv_lp)_i
            rhs = rp.copy()
            Zs = [scal[b][2] @ Rd[b] @ scal[b][2] - Rv[b] for b in range(len(dims))]
            for j, terms in enumerate(sf.rows_mat):
                acc = 0.0
                for bidx, mat in terms.items():
                    acc += float(np.sum(mat * Zs[bidx]))
                rhs[j] += acc
            if p:
                rhs += sf.Alp @ (w2 * rdu - rv_lp)
            dy = schur_solve(rhs) if m else np.zeros(0)
            ATdy, ATldy = sf.apply_AT(dy)
            dS = [Rd[b] - ATdy[b] for b in range(len(dims))]
            dsu = rdu - ATldy
            dX = []
            for b in range(len(dims)):
                Wb = scal[b][2]
                v = Rv[b] - Wb @ dS[b] @ Wb
                dX.append((v + v.T) / 2.0)
            du = rv_lp - w2 * dsu
            return dX, du, dy, dS, dsu

        # predictor (affine scaling) direction: target lambda -> 0
        Rv_aff = [-Xb for Xb in X]
        rv_aff = -u
        dXa, dua, dya, dSa, dsua = direction(Rv_aff, rv_aff)

        ap = min(
            [1.0] + [_max_step_block(scal[b][4], dXa[b]) for b in range(len(dims))] + [_max_step_vec(u, dua)]
        )
        Ls_list = [_chol_with_jitter(Sb) for Sb in S]
        if any(L is None for L in Ls_list):
            status = STATUS_NUMERICAL_FAILURE
            break
        ad = min(
            [1.0]
            + [_max_step_block(Ls_list[b], dSa[b]) for b in range(len(dims))]
            + [_max_step_vec(su, dsua)]
        )
        gap_aff = float((u + ap * dua) @ (su + ad * dsua)) if p else 0.0
        for b in range(len(dims)):
            gap_aff += float(np.sum((X[b] + ap * dXa[b]) * (S[b] + ad * dSa[b])))
        mu_aff = max(gap_aff / sf.ntot, 0.0)
        sigma = min(max((mu_aff / mu) ** 3 if mu > 0 else 0.0, 1e-8), 0.99)

        def combined_direction(sig, with_corrector):
            # D = sig*mu*lam^-1 - lam - Linv_lam(H(dlam_x dlam_s)), last term
            # only in the Mehrotra corrector
            Rv = []
            for b in range(len(dims)):
                R, Rinv, Wb, lam, _ = scal[b]
                D = np.diag(sig * mu / lam - lam)
                if with_corrector:
                    G = Rinv @ dXa[b] @ Rinv.T
                    Hm = R.T @ dSa[b] @ R
                    Pm = (G @ Hm + Hm @ G) / 2.0
                    denom = (lam[:, None] + lam[None, :]) / 2.0
                    D = D - Pm / denom
                D = (D + D.T) / 2.0
                Rv.append(R @ D @ R.T)
            if p:
                d_lp = sig * mu / lam_lp - lam_lp
                if with_corrector:
                    d_lp = d_lp - (dua * dsua) / lam_lp
                rv_lp = w * d_lp
            else:
                rv_lp = np.zeros(0)
            return direction(Rv, rv_lp)

        def bounded_steps(dX, du, dS, dsu):
            apm = min(
                [np.inf]
                + [_max_step_block(scal[b][4], dX[b]) for b in range(len(dims))]
                + [_max_step_vec(u, du)]
            )
            adm = min(
                [np.inf]
                + [_max_step_block(Ls_list[b], dS[b]) for b in range(len(dims))]
                + [_max_step_vec(su, dsu)]
            )
            return min(1.0, opt.step_fraction * apm), min(1.0, opt.step_fraction * adm)

        def try_steps(dX, du, dy, dS, dsu, trials):
            # accept only steps where gap and both residuals are non-increasing
            for ap, ad in trials:
                Xn = [X[b] + ap * dX[b] for b in range(len(dims))]
                un = u + ap * du
                Sn = [S[b] + ad * dS[b] for b in range(len(dims))]
                sun = su + ad * dsu
                yn = y + ad * dy
                _, _, _, mun, presn, dresn = residuals(Xn, un, Sn, sun, yn)
                if _DEBUG:
                    print(f"    try ap={ap:.3e} ad={ad:.3e} mu={mun:.3e} pres={presn:.3e} dres={dresn:.3e}")
                # floors absorb fp noise around exact zeros (residuals are
                # normalized, mu is in internal objective units); once a
                # residual sits below half the feasibility tolerance it is
                # allowed to float inside that band, since direction noise
                # from the ill-conditioned Schur system stops being monotone
                # there
                ok = (
                    mun <= mu + 1e-12 * mu_init
                    and presn <= max(pres + 1e-12, 0.5 * opt.feas_tol)
                    and dresn <= max(dres + 1e-12, 0.5 * opt.feas_tol)
                )
                if ok and np.isfinite(mun + presn + dresn):
                    return Xn, un, Sn, sun, yn
            return None

        dX, du, dy, dS, dsu = combined_direction(sigma, True)
        ap0, ad0 = bounded_steps(dX, du, dS, dsu)
        if _DEBUG:
            print(f"  it={it} mu={mu:.3e} pres={pres:.3e} dres={dres:.3e} sigma={sigma:.3e} "
                  f"mu_aff={mu_aff:.3e} ap0={ap0:.3e} ad0={ad0:.3e}")
        amin = min(ap0, ad0)
        trials = [(ap0, ad0)] + [(amin * 0.5 ** k, amin * 0.5 ** k) for k in range(9)]
        stepped = try_steps(dX, du, dy, dS, dsu, trials)
        if stepped is None:
            # retreat to a pure centering direction: its gap derivative is
            # (sig-1)*gap < 0, so some equal step length must be accepted
            dXc, duc, dyc, dSc, dsuc = combined_direction(max(sigma, 0.5), False)
            apc, adc = bounded_steps(dXc, duc, dSc, dsuc)
            ac = min(apc, adc)
            stepped = try_steps(
                dXc, duc, dyc, dSc, dsuc, [(ac * 0.5 ** k, ac * 0.5 ** k) for k in range(12)]
            )
            n_center += 1
        if stepped is None:
            # last resort: pursue a diverging dual objective (infeasibility
            # certificate) with the Mehrotra step, otherwise give up
            new_dobj = float(sf.b @ (y + ad0 * dy))
            if abs(new_dobj) > max(10.0, abs(dobj)):
                stepped = (
                    [X[b] + ap0 * dX[b] for b in range(len(dims))],
                    u + ap0 * du,
                    [S[b] + ad0 * dS[b] for b in range(len(dims))],
                    su + ad0 * dsu,
                    y + ad0 * dy,
                )
                n_diverge += 1
            else:
                status = _classify_stall(pres, it, opt)
                break
        X, u, S, su, y = stepped

    else:
        it = opt.max_iterations

    pobj = sf.pobj(X, u)
    dobj = float(sf.b @ y)
    if status == STATUS_MAX_ITERATIONS:
        _, _, _, _, pres_f, _ = residuals(X, u, S, su, y)
        status = _classify_stall(pres_f, it, opt)
    info = {
        "merit_history": merit_hist,
        "mu_history": mu_hist,
        "primal_residual_history": pres_hist,
        "centering_steps": n_center,
        "divergence_steps": n_diverge,
    }
    return X, u, y, pobj, dobj, status, it, info


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------


def evaluate_objective(problem, block_values, scalar_values):
    val = 0.0
    for name, mat in problem.objective_matrices.items():
        val += float(np.real(np.sum(np.conj(np.asarray(mat)) * block_values[name])))
    for name, c in problem.objective_scalars.items():
        val += float(c) * float(scalar_values[name])
    return val


def evaluate_constraint(problem, con, block_values, scalar_values):
    """Returns (real lhs value, imaginary residue magnitude)."""
    val = 0.0 + 0.0j
    for name, mat in con.matrix_terms.items():
        val += np.sum(np.conj(np.asarray(mat)) * block_values[name])
    for name, c in con.scalar_terms.items():
        val += float(c) * float(scalar_values[name])
    return float(np.real(val)), abs(float(np.imag(val)))


def solve(problem: SdpProblem, options: SolverOptions = None) -> SdpSolution:
    """Solve a block SDP; deterministic for identical inputs.

    Status semantics: optimal means primal/dual residuals and relative duality
    gap are within tolerances on the equilibrated problem; infeasible reports a
    diverging-dual certificate (dual objective run past 1e8 with the primal
    residual stuck); max_iterations and numerical_failure mean tolerances were
    not met.
    """
    options = options or SolverOptions()
    problem.validate()
    rp = realify(problem)
    sf = _Std(rp, len(problem.scalars))
    X, u, y, pobj_int, dobj_int, status, iters, info = _ipm(sf, options)

    block_values = {}
    for (name, dim), Xb in zip(problem.blocks, X):
        block_values[name] = _unembed(Xb, dim)
    scalar_values = {name: float(max(u[i], 0.0)) for i, name in enumerate(problem.scalars)}

    objective = evaluate_objective(problem, block_values, scalar_values)
    duality_gap = abs(pobj_int - dobj_int) * sf.cs

    residuals = np.zeros(len(problem.constraints))
    imag_residue = 0.0
    for j, con in enumerate(problem.constraints):
        lhs, imag = evaluate_constraint(problem, con, block_values, scalar_values)
        imag_residue = max(imag_residue, imag)
        if con.sense == SENSE_LE:
            residuals[j] = lhs - con.rhs
        elif con.sense == SENSE_GE:
            residuals[j] = con.rhs - lhs
        else:
            residuals[j] = lhs - con.rhs
    info = dict(info)
    info["imag_residue"] = imag_residue
    info["primal_objective_internal"] = pobj_int
    info["dual_objective_internal"] = dobj_int

    return SdpSolution(
        block_values=block_values,
        scalar_values=scalar_values,
        objective=objective,
        status=status,
        duality_gap=duality_gap,
        residuals=residuals,
        iterations=iters,
        info=info,
    )


@dataclass
class ResidualReport:
    violations: np.ndarray  # signed, positive = violated (equalities: lhs - rhs)
    max_violation: float  # max over rows of violation / (1 + |rhs|), equalities by abs
    min_eigenvalues: dict  # block name -> smallest eigenvalue
    objective: float
    imag_residue: float


def check_residuals(problem: SdpProblem, solution: SdpSolution) -> ResidualReport:
    """Recompute per-constraint violations and block eigenvalue floors.

    Pure function of its inputs.  max_violation is normalized per row by
    1 + |rhs| so it is comparable against the solver's feasibility tolerance.
    """
    problem.validate()
    for name, dim in problem.blocks:
        if name not in solution.block_values:
            raise ValidationError(f"solution missing block {name!r}")
        if np.asarray(solution.block_values[name]).shape != (dim, dim):
            raise ValidationError(f"solution block {name!r} has wrong shape")
    for name in problem.scalars:
        if name not in solution.scalar_values:
            raise ValidationError(f"solution missing scalar {name!r}")

    viol = np.zeros(len(problem.constraints))
    max_rel = 0.0
    imag_residue = 0.0
    for j, con in enumerate(problem.constraints):
        lhs, imag = evaluate_constraint(problem, con, solution.block_values, solution.scalar_values)
        imag_residue = max(imag_residue, imag)
        if con.sense == SENSE_LE:
            v = lhs - con.rhs
            rel = max(v, 0.0)
        elif con.sense == SENSE_GE:
            v = con.rhs - lhs
            rel = max(v, 0.0)
        else:
            v = lhs - con.rhs
            rel = abs(v)
        viol[j] = v
        max_rel = max(max_rel, rel / (1.0 + abs(con.rhs)))

    min_eigs = {}
    for name, _ in problem.blocks:
        mat = np.asarray(solution.block_values[name])
        h = (mat + mat.conj().T) / 2.0
        min_eigs[name] = float(np.linalg.eigvalsh(h)[0]) if h.size else 0.0
    for name in problem.scalars:
        min_eigs[name] = float(solution.scalar_values[name])

    obj = evaluate_objective(problem, solution.block_values, solution.scalar_values)
    return ResidualReport(viol, max_rel, min_eigs, obj, imag_residue)


# ---------------------------------------------------------------------------
# debug dump (SDPDUMP v1)
# ---------------------------------------------------------------------------


def _write_matrix(lines, mat):
    a = np.asarray(mat, dtype=complex)
    for row in a:
        lines.append(" ".join(f"{v.real:.17g} {v.imag:.17g}" for v in row))


def _read_matrix(lines, pos, dim):
    rows = []
    for i in range(dim):
        toks = lines[pos + i].split()
        vals = [float(t) for t in toks]
        rows.append([complex(vals[2 * j], vals[2 * j + 1]) for j in range(dim)])
    return np.array(rows), pos + dim


def dump_problem(problem: SdpProblem, path):
    """Write a problem instance to a structured text file for offline inspection."""
    lines = ["SDPDUMP v1", f"sense {problem.sense}", f"blocks {len(problem.blocks)}"]
    for name, dim in problem.blocks:
        lines.append(f"{name} {dim}")
    lines.append(f"scalars {len(problem.scalars)}")
    lines.extend(problem.scalars)
    lines.append(f"objective_matrices {len(problem.objective_matrices)}")
    for name, mat in problem.objective_matrices.items():
        lines.append(name)
        _write_matrix(lines, mat)
    lines.append(f"objective_scalars {len(problem.objective_scalars)}")
    for name, v in problem.objective_scalars.items():
        lines.append(f"{name} {float(v):.17g}")
    lines.append(f"constraints {len(problem.constraints)}")
    for con in problem.constraints:
        lines.append(f"constraint {con.sense} {float(con.rhs):.17g} {con.tag}")
        lines.append(f"matrix_terms {len(con.matrix_terms)}")
        for name, mat in con.matrix_terms.items():
            lines.append(name)
            _write_matrix(lines, mat)
        lines.append(f"scalar_terms {len(con.scalar_terms)}")
        for name, v in con.scalar_terms.items():
            lines.append(f"{name} {float(v):.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_problem(path) -> SdpProblem:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "SDPDUMP v1":
        raise ValidationError(f"{path}: not an SDPDUMP v1 file")
    pos = 1
    sense = lines[pos].split()[1]
    pos += 1
    nblocks = int(lines[pos].split()[1])
    pos += 1
    blocks = []
    dims = {}
    for _ in range(nblocks):
        name, dim = lines[pos].rsplit(" ", 1)
        blocks.append((name, int(dim)))
        dims[name] = int(dim)
        pos += 1
    nscal = int(lines[pos].split()[1])
    pos += 1
    scalars = lines[pos : pos + nscal]
    pos += nscal
    nom = int(lines[pos].split()[1])
    pos += 1
    obj_m = {}
    for _ in range(nom):
        name = lines[pos]
        pos += 1
        mat, pos = _read_matrix(lines, pos, dims[name])
        obj_m[name] = mat
    nos = int(lines[pos].split()[1])
    pos += 1
    obj_s = {}
    for _ in range(nos):
        name, v = lines[pos].rsplit(" ", 1)
        obj_s[name] = float(v)
        pos += 1
    ncon = int(lines[pos].split()[1])
    pos += 1
    constraints = []
    for _ in range(ncon):
        parts = lines[pos].split(" ", 3)
        sense_c, rhs = parts[1], float(parts[2])
        tag = parts[3] if len(parts) > 3 else ""
        pos += 1
        nmt = int(lines[pos].split()[1])
        pos += 1
        mats = {}
        for _ in range(nmt):
            name = lines[pos]
            pos += 1
            mat, pos = _read_matrix(lines, pos, dims[name])
            mats[name] = mat
        nst = int(lines[pos].split()[1])
        pos += 1
        scals = {}
        for _ in range(nst):
            name, v = lines[pos].rsplit(" ", 1)
            scals[name] = float(v)
            pos += 1
        constraints.append(Constraint(mats, scals, rhs, sense_c, tag))
    return SdpProblem(blocks, scalars, obj_m, obj_s, sense, constraints)
