"""Embedded linear and integer programming.

``solve_lp`` is a bounded-variable revised simplex method for
maximization problems with ``<=`` and ``==`` rows.  The basis inverse
is kept as a sparse LU factorization (SuperLU) plus a product-form eta
file that is rebuilt every ``_REFACTOR_EVERY`` pivots.  Pricing is
Dantzig's rule with a switch to Bland's rule after a run of degenerate
pivots, which guarantees termination.  All tie-breaks are by lowest
column index, so solves are bit-reproducible.

``solve_mip`` wraps the LP solver in depth-first branch and bound on a
declared set of integer variables.  Each node re-solves its LP from the
parent's optimal basis (``resolve_lp``), which is what makes trees with
thousands of nodes affordable; any numerical trouble falls back to a
cold solve of that node.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

SENSE_LE = 0
SENSE_EQ = 1

_SENSE_FROM_STR = {"<=": SENSE_LE, "==": SENSE_EQ, "=": SENSE_EQ}

# default tolerances; callers can widen tol_feas per solve
TOL_FEAS = 1e-7
TOL_INT = 1e-6
_TOL_PRICE = 1e-9
_TOL_PIVOT = 1e-9
_TIE_TOL = 1e-9
_DEGEN_LIMIT = 50
_REFACTOR_EVERY = 100


class SimplexError(RuntimeError):
    """Numerical failure or unsupported problem shape in the LP solver."""


class NodeLimitExceeded(RuntimeError):
    """Branch and bound exhausted its node budget.

    Carries the best feasible solution found so far (``incumbent``,
    possibly None), the gap between the best open bound and the
    incumbent objective (``bound_gap``), and ``nodes_explored``.
    """

    def __init__(self, incumbent: "MipSolution | None", bound_gap: float,
                 nodes_explored: int) -> None:
        self.incumbent = incumbent
        self.bound_gap = bound_gap
        self.nodes_explored = nodes_explored
        have = "an incumbent" if incumbent is not None else "no incumbent"
        super().__init__(
            f"node limit reached after {nodes_explored} nodes with {have} "
            f"(remaining bound gap {bound_gap:g})"
        )


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class MipStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


class LinearProgram:
    """max objective @ x  subject to  A x (<=|==) rhs,  lower <= x <= upper."""

    __slots__ = ("objective", "a_matrix", "senses", "rhs", "lower", "upper")

    def __init__(self, objective, a_matrix, senses, rhs, lower, upper) -> None:
        self.objective = np.asarray(objective, dtype=float).ravel()
        n = self.objective.size
        if sp.issparse(a_matrix):
            self.a_matrix = a_matrix.tocsr().astype(float)
        else:
            self.a_matrix = sp.csr_matrix(
                np.asarray(a_matrix, dtype=float).reshape(-1, n)
            )
        self.senses = np.asarray(senses, dtype=np.int8).ravel()
        self.rhs = np.asarray(rhs, dtype=float).ravel()
        self.lower = np.asarray(lower, dtype=float).ravel()
        self.upper = np.asarray(upper, dtype=float).ravel()
        self._validate()

    def _validate(self) -> None:
        m, n = self.a_matrix.shape
        if self.objective.size != n:
            raise ValueError("objective length does not match column count")
        if self.senses.size != m or self.rhs.size != m:
            raise ValueError("senses/rhs length does not match row count")
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("bounds length does not match column count")
        if not np.all((self.senses == SENSE_LE) | (self.senses == SENSE_EQ)):
            raise ValueError("senses must be SENSE_LE or SENSE_EQ")
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("rhs must be finite")
        if not np.all(np.isfinite(self.objective)):
            raise ValueError("objective must be finite")
        if not (np.all(np.isfinite(self.lower)) and np.all(np.isfinite(self.upper))):
            raise ValueError("variable bounds must be finite")
        if np.any(self.lower > self.upper):
            j = int(np.flatnonzero(self.lower > self.upper)[0])
            raise ValueError(f"variable {j} has lower > upper")

    @property
    def num_vars(self) -> int:
        return self.objective.size

    @property
    def num_rows(self) -> int:
        return self.a_matrix.shape[0]

    @classmethod
    def from_rows(
        cls,
        objective: Sequence[float],
        constraints: Sequence[tuple[Sequence[float], str, float]],
        bounds: Sequence[tuple[float, float]],
    ) -> "LinearProgram":
        """Small-problem constructor with dense rows and "<="/"==" senses."""
        n = len(objective)
        rows = np.zeros((len(constraints), n))
        senses = np.zeros(len(constraints), dtype=np.int8)
        rhs = np.zeros(len(constraints))
        for r, (coeffs, sense, b) in enumerate(constraints):
            rows[r, :] = coeffs
            try:
                senses[r] = _SENSE_FROM_STR[sense]
            except KeyError:
                raise ValueError(f"row {r}: unknown sense {sense!r}") from None
            rhs[r] = b
        lo = [b[0] for b in bounds]
        up = [b[1] for b in bounds]
        return cls(objective, rows, senses, rhs, lo, up)

    def with_bounds(self, lower, upper) -> "LinearProgram":
        """Same rows and objective with replacement variable bounds."""
        return LinearProgram(
            self.objective, self.a_matrix, self.senses, self.rhs, lower, upper
        )

    def format_debug(self) -> str:
        """Human-readable dump, intended for small programs in tests/logs."""

        def expr(coeffs: np.ndarray, idx: np.ndarray) -> str:
            terms = [f"{c:+g}*x{j}" for j, c in zip(idx, coeffs) if c != 0.0]
            return " ".join(terms) if terms else "0"

        lines = [f"maximize {expr(self.objective, np.arange(self.num_vars))}"]
        csr = self.a_matrix
        for r in range(self.num_rows):
            lo, hi = csr.indptr[r], csr.indptr[r + 1]
            op = "<=" if self.senses[r] == SENSE_LE else "=="
            lines.append(
                f"  row{r}: {expr(csr.data[lo:hi], csr.indices[lo:hi])} "
                f"{op} {self.rhs[r]:g}"
            )
        for j in range(self.num_vars):
            lines.append(f"  {self.lower[j]:g} <= x{j} <= {self.upper[j]:g}")
        return "\n".join(lines)


@dataclass(frozen=True)
class LpSolution:
    """Solver result.

    ``basis`` and ``at_upper`` describe the final simplex basis of an
    optimal solve (None when unavailable); feeding them to
    ``resolve_lp`` re-solves a bound-modified copy of the same program
    far faster than a cold solve.  ``reduced_costs`` holds the final
    objective reduced costs of the structural variables.
    """

    status: LpStatus
    x: np.ndarray | None
    objective: float | None
    iterations: int = 0
    basis: np.ndarray | None = None
    at_upper: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None


@dataclass(frozen=True)
class MipSolution:
    status: MipStatus
    x: np.ndarray | None
    objective: float | None
    nodes_explored: int = 0


# nonbasic-at-lower / nonbasic-at-upper / basic markers
_NB_LO, _NB_UP, _BASIC = 0, 1, 2


class _RevisedSimplex:
    """One solve of a bounded-variable LP; see module docstring."""

    def __init__(
        self,
        lp: LinearProgram,
        tol_feas: float,
        max_iters: int | None,
        start: tuple[np.ndarray, np.ndarray] | None = None,
    ):
        self.lp = lp
        self.tol_feas = float(tol_feas)
        m, n = lp.num_rows, lp.num_vars
        self.m, self.n = m, n

        if np.any(np.isneginf(lp.lower) & np.isposinf(lp.upper)):
            raise SimplexError("free variables (both bounds infinite) unsupported")

        le = lp.senses == SENSE_LE
        slack_up = np.where(le, np.inf, 0.0)
        self.b = lp.rhs.astype(float)

        if start is None:
            self._init_cold(lp, m, n, le, slack_up)
        else:
            self._init_warm(lp, m, n, slack_up, start)

        self.etas: list[tuple[int, np.ndarray]] = []
        self.lu = None
        self.iters = 0
        self.max_iters = max_iters or max(2000, 50 * (m + self.ncols))
        self._refactor()

    def _init_cold(self, lp, m, n, le, slack_up) -> None:
        # initial nonbasic point: each structural sits at a finite bound
        x0 = np.where(np.isfinite(lp.lower), lp.lower, lp.upper)
        status0 = np.where(np.isfinite(lp.lower), _NB_LO, _NB_UP).astype(np.int8)

        resid = lp.rhs - lp.a_matrix @ x0
        # a row starts feasible if its slack value fits the slack bounds
        ok = np.where(le, resid >= -self.tol_feas, np.abs(resid) <= self.tol_feas)
        bad_rows = np.flatnonzero(~ok)
        k = bad_rows.size
        self.k_art = k

        cols = [lp.a_matrix.tocsc(), sp.identity(m, format="csc")]
        if k:
            art = sp.csc_matrix(
                (np.sign(resid[bad_rows]), (bad_rows, np.arange(k))), shape=(m, k)
            )
            cols.append(art)
        self.A = sp.hstack(cols, format="csc")
        self.AT = self.A.T.tocsr()
        self.ncols = n + m + k

        self.lower = np.concatenate([lp.lower, np.zeros(m), np.zeros(k)])
        self.upper = np.concatenate([lp.upper, slack_up, np.full(k, np.inf)])
        self.cost2 = np.concatenate([lp.objective, np.zeros(m + k)])
        self.cost1 = np.zeros(self.ncols)
        self.cost1[n + m:] = -1.0

        self.x = np.concatenate([x0, np.zeros(m + k)])
        self.status = np.concatenate(
            [status0, np.full(m, _NB_LO, dtype=np.int8), np.zeros(k, dtype=np.int8)]
        )
        self.basis = np.arange(n, n + m)
        self.x[n:n + m] = np.where(ok, resid, 0.0)
        self.status[self.basis[ok]] = _BASIC
        if k:
            art_cols = np.arange(n + m, n + m + k)
            self.basis[bad_rows] = art_cols
            self.x[art_cols] = np.abs(resid[bad_rows])
            self.status[art_cols] = _BASIC

    def _init_warm(self, lp, m, n, slack_up, start) -> None:
        # adopt a prior basis; no artificials, dual iterations repair
        # whatever primal infeasibility the new bounds introduced
        self.k_art = 0
        self.A = sp.hstack(
            [lp.a_matrix.tocsc(), sp.identity(m, format="csc")], format="csc"
        )
        self.AT = self.A.T.tocsr()
        self.ncols = n + m

        self.lower = np.concatenate([lp.lower, np.zeros(m)])
        self.upper = np.concatenate([lp.upper, slack_up])
        self.cost2 = np.concatenate([lp.objective, np.zeros(m)])
        self.cost1 = np.zeros(self.ncols)

        basis0 = np.asarray(start[0], dtype=int)
        if (
            basis0.shape != (m,)
            or np.unique(basis0).size != m
            or basis0.min(initial=0) < 0
            or basis0.max(initial=-1) >= self.ncols
        ):
            raise SimplexError("starting basis does not fit this program")
        at_up = np.asarray(start[1], dtype=bool)
        if at_up.shape != (self.ncols,):
            raise SimplexError("starting bound statuses do not fit this program")
        at_up = at_up & np.isfinite(self.upper)

        self.basis = basis0.copy()
        self.status = np.where(at_up, _NB_UP, _NB_LO).astype(np.int8)
        self.status[self.basis] = _BASIC
        self.x = self.lower.copy()
        self.x[at_up] = self.upper[at_up]
        self.x[self.basis] = 0.0  # refreshed from the factorization next

    # -- basis inverse ------------------------------------------------

    def _refactor(self) -> None:
        try:
            self.lu = splu(self.A[:, self.basis].tocsc())
        except RuntimeError as exc:
            raise SimplexError(f"singular basis: {exc}") from exc
        self.etas = []
        # refresh basic values from the nonbasic point to shed drift
        xn = self.x.copy()
        xn[self.basis] = 0.0
        self.x[self.basis] = self.lu.solve(self.b - self.A @ xn)

    def _ftran(self, col: np.ndarray) -> np.ndarray:
        u = self.lu.solve(col)
        for r, eta in self.etas:
            t = u[r]
            if t != 0.0:
                u += eta * t
                u[r] = eta[r] * t
        return u

    def _btran(self, vec: np.ndarray) -> np.ndarray:
        v = vec.astype(float, copy=True)
        for r, eta in reversed(self.etas):
            v[r] = float(eta @ v)
        return self.lu.solve(v, trans="T")

    def _column(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        a, b = self.A.indptr[j], self.A.indptr[j + 1]
        col[self.A.indices[a:b]] = self.A.data[a:b]
        return col

    # -- simplex iterations -------------------------------------------

    def _run(self, cost: np.ndarray) -> str:
        degen_run = 0
        bland = False
        movable = self.upper > self.lower
        while True:
            if self.iters >= self.max_iters:
                raise SimplexError(f"iteration limit {self.max_iters} exceeded")
            self.iters += 1

            y = self._btran(cost[self.basis])
            z = cost - self.AT @ y
            improving = movable & (
                ((self.status == _NB_LO) & (z > _TOL_PRICE))
                | ((self.status == _NB_UP) & (z < -_TOL_PRICE))
            )
            if not improving.any():
                return "optimal"
            if bland:
                q = int(np.flatnonzero(improving)[0])
            else:
                q = int(np.argmax(np.where(improving, np.abs(z), 0.0)))
            t = 1.0 if self.status[q] == _NB_LO else -1.0

            w = self._ftran(self._column(q))
            d = -t * w  # movement of basic values per unit step of x[q]

            xb = self.x[self.basis]
            lob = self.lower[self.basis]
            upb = self.upper[self.basis]
            lim = np.full(self.m, np.inf)
            dec = d < -_TOL_PIVOT
            lim[dec] = (lob[dec] - xb[dec]) / d[dec]
            inc = (d > _TOL_PIVOT) & np.isfinite(upb)
            lim[inc] = (upb[inc] - xb[inc]) / d[inc]
            np.maximum(lim, 0.0, out=lim)  # degenerate steps, not negative ones

            theta_basic = float(lim.min()) if self.m else math.inf
            theta_self = float(self.upper[q] - self.lower[q])

            if theta_self <= theta_basic + _TIE_TOL:
                if math.isinf(theta_self):
                    return "unbounded"
                # bound flip: x[q] crosses to its other bound, basis unchanged
                self.x[self.basis] = xb + theta_self * d
                to_up = self.status[q] == _NB_LO
                self.x[q] = self.upper[q] if to_up else self.lower[q]
                self.status[q] = _NB_UP if to_up else _NB_LO
                degen_run = 0
                bland = False
                continue
            if math.isinf(theta_basic):
                return "unbounded"

            cand = np.flatnonzero(lim <= theta_basic + _TIE_TOL)
            if bland:
                r = int(cand[np.argmin(self.basis[cand])])
            else:
                # stability first (largest pivot), then lowest variable index
                order = np.lexsort((self.basis[cand], -np.abs(w[cand])))
                r = int(cand[order[0]])

            theta = max(theta_basic, 0.0)
            self.x[self.basis] = xb + theta * d
            leaving = int(self.basis[r])
            hit_lower = d[r] < 0.0
            self.x[leaving] = lob[r] if hit_lower else upb[r]
            self.status[leaving] = _NB_LO if hit_lower else _NB_UP
            self.x[q] = (
                self.lower[q] if t > 0 else self.upper[q]
            ) + t * theta
            self.status[q] = _BASIC
            self.basis[r] = q

            pivot = w[r]
            eta = -w / pivot
            eta[r] = 1.0 / pivot
            self.etas.append((r, eta))
            if len(self.etas) >= _REFACTOR_EVERY:
                self._refactor()

            if theta <= 1e-10:
                degen_run += 1
                if degen_run >= _DEGEN_LIMIT:
                    bland = True
            else:
                degen_run = 0
                bland = False

    def _repair_run(self) -> str:
        """Pivot until every basic value fits its bounds.

        Composite phase 1 from an arbitrary (typically inherited) basis:
        maximize the negated total bound violation of the basic
        variables.  Total violation never increases, so a basis that is
        one bound change away from feasible is repaired in a handful of
        pivots.  Returns "feasible" or "infeasible".
        """
        movable = self.upper > self.lower
        degen_run = 0
        bland = False
        while True:
            xb = self.x[self.basis]
            lob = self.lower[self.basis]
            upb = self.upper[self.basis]
            below = xb < lob - self.tol_feas
            above = np.isfinite(upb) & (xb > upb + self.tol_feas)
            if not (below.any() or above.any()):
                return "feasible"
            if self.iters >= self.max_iters:
                raise SimplexError(f"iteration limit {self.max_iters} exceeded")
            self.iters += 1

            # +1 pulls an under-lower basic up, -1 pulls an over-upper down
            cost = np.zeros(self.ncols)
            cost[self.basis[below]] = 1.0
            cost[self.basis[above]] = -1.0

            y = self._btran(cost[self.basis])
            z = cost - self.AT @ y
            improving = movable & (
                ((self.status == _NB_LO) & (z > _TOL_PRICE))
                | ((self.status == _NB_UP) & (z < -_TOL_PRICE))
            )
            if not improving.any():
                return "infeasible"  # violation is at its minimum, still positive
            if bland:
                q = int(np.flatnonzero(improving)[0])
            else:
                q = int(np.argmax(np.where(improving, np.abs(z), 0.0)))
            t = 1.0 if self.status[q] == _NB_LO else -1.0

            w = self._ftran(self._column(q))
            d = -t * w

            # ratio limits: feasible basics stop at their usual bound,
            # violated basics stop on reaching the bound they violate
            feas = ~(below | above)
            lim = np.full(self.m, np.inf)
            to_lower = np.zeros(self.m, dtype=bool)
            dec = feas & (d < -_TOL_PIVOT)
            lim[dec] = (lob[dec] - xb[dec]) / d[dec]
            to_lower[dec] = True
            inc = feas & (d > _TOL_PIVOT) & np.isfinite(upb)
            lim[inc] = (upb[inc] - xb[inc]) / d[inc]
            rise = below & (d > _TOL_PIVOT)
            lim[rise] = (lob[rise] - xb[rise]) / d[rise]
            to_lower[rise] = True
            drop = above & (d < -_TOL_PIVOT)
            lim[drop] = (upb[drop] - xb[drop]) / d[drop]
            np.maximum(lim, 0.0, out=lim)

            theta_basic = float(lim.min()) if self.m else math.inf
            theta_self = float(self.upper[q] - self.lower[q])

            if theta_self <= theta_basic + _TIE_TOL:
                if math.isinf(theta_self):
                    # violation decreases without limit: cannot happen
                    # while any violated basic has a finite target
                    raise SimplexError("unbounded feasibility repair")
                self.x[self.basis] = xb + theta_self * d
                to_up = self.status[q] == _NB_LO
                self.x[q] = self.upper[q] if to_up else self.lower[q]
                self.status[q] = _NB_UP if to_up else _NB_LO
                degen_run = 0
                bland = False
                continue
            if math.isinf(theta_basic):
                raise SimplexError("unbounded feasibility repair")

            cand = np.flatnonzero(lim <= theta_basic + _TIE_TOL)
            if bland:
                r = int(cand[np.argmin(self.basis[cand])])
            else:
                order = np.lexsort((self.basis[cand], -np.abs(w[cand])))
                r = int(cand[order[0]])

            theta = max(theta_basic, 0.0)
            self.x[self.basis] = xb + theta * d
            leaving = int(self.basis[r])
            self.x[leaving] = lob[r] if to_lower[r] else upb[r]
            self.status[leaving] = _NB_LO if to_lower[r] else _NB_UP
            self.x[q] = (
                self.lower[q] if t > 0 else self.upper[q]
            ) + t * theta
            self.status[q] = _BASIC
            self.basis[r] = q

            pivot = w[r]
            if abs(pivot) < _TOL_PIVOT:
                raise SimplexError("repair pivot element vanished")
            eta = -w / pivot
            eta[r] = 1.0 / pivot
            self.etas.append((r, eta))
            if len(self.etas) >= _REFACTOR_EVERY:
                self._refactor()

            if theta <= 1e-10:
                degen_run += 1
                if degen_run >= _DEGEN_LIMIT:
                    bland = True
            else:
                degen_run = 0
                bland = False

    # -- driver ---------------------------------------------------------

    def solve(self) -> LpSolution:
        n, m = self.n, self.m
        if self.k_art:
            outcome = self._run(self.cost1)
            if outcome != "optimal":
                raise SimplexError("phase 1 reported unbounded")
            self._refactor()
            infeas = float(self.x[n + m:].sum())
            if infeas > self.tol_feas * (1.0 + float(np.abs(self.b).max(initial=0.0))):
                return LpSolution(LpStatus.INFEASIBLE, None, None, self.iters)
            # lock the artificials out of any further pivoting
            self.upper[n + m:] = 0.0
            nonbasic_art = self.status[n + m:] != _BASIC
            self.x[n + m:][nonbasic_art] = 0.0

        outcome = self._run(self.cost2)
        if outcome == "unbounded":
            return LpSolution(LpStatus.UNBOUNDED, None, None, self.iters)
        return self._finish()

    def solve_warm(self) -> LpSolution:
        verdict = self._repair_run()
        if verdict == "infeasible":
            return LpSolution(LpStatus.INFEASIBLE, None, None, self.iters)
        outcome = self._run(self.cost2)
        if outcome == "unbounded":
            return LpSolution(LpStatus.UNBOUNDED, None, None, self.iters)
        return self._finish()

    def _finish(self) -> LpSolution:
        n, m = self.n, self.m
        self._refactor()
        self._check_consistency()
        x = np.clip(self.x[:n], self.lp.lower, self.lp.upper)
        obj = float(self.lp.objective @ x)
        if np.any(self.basis >= n + m):
            basis = at_upper = None  # an artificial stayed basic at zero
        else:
            basis = self.basis.copy()
            at_upper = (self.status[:n + m] == _NB_UP).copy()
        y = self._btran(self.cost2[self.basis])
        z = (self.cost2 - self.AT @ y)[:n]
        return LpSolution(LpStatus.OPTIMAL, x, obj, self.iters, basis, at_upper, z)

    def _check_consistency(self) -> None:
        tol = 100.0 * self.tol_feas
        low_viol = float(np.max(self.lower - self.x, initial=0.0))
        up_ok = np.isfinite(self.upper)
        up_viol = float(np.max((self.x - self.upper)[up_ok], initial=0.0))
        row_viol = float(np.max(np.abs(self.A @ self.x - self.b), initial=0.0))
        if max(low_viol, up_viol, row_viol) > tol:
            raise SimplexError(
                f"solution failed validation: bound violation "
                f"{max(low_viol, up_viol):.3e}, row residual {row_viol:.3e}"
            )


def _solve_trivial(lp: LinearProgram) -> LpSolution:
    # no rows: push every variable to its objective-preferred bound
    pick_up = lp.objective > 0.0
    x = np.where(pick_up, lp.upper, lp.lower)
    zero = lp.objective == 0.0
    x[zero] = np.where(np.isfinite(lp.lower[zero]), lp.lower[zero], lp.upper[zero])
    if not np.all(np.isfinite(x[lp.objective != 0.0])):
        return LpSolution(LpStatus.UNBOUNDED, None, None, 0)
    x = np.where(np.isfinite(x), x, 0.0)
    return LpSolution(LpStatus.OPTIMAL, x, float(lp.objective @ x), 0)


def solve_lp(
    lp: LinearProgram,
    *,
    tol_feas: float = TOL_FEAS,
    max_iters: int | None = None,
) -> LpSolution:
    """Maximize the program exactly; status is optimal/infeasible/unbounded.

    Deterministic: identical inputs produce identical pivot sequences,
    hence bit-identical solutions.
    """
    if lp.num_rows == 0:
        return _solve_trivial(lp)
    return _RevisedSimplex(lp, tol_feas, max_iters).solve()


def resolve_lp(
    lp: LinearProgram,
    basis: np.ndarray,
    at_upper: np.ndarray,
    *,
    tol_feas: float = TOL_FEAS,
    max_iters: int | None = None,
) -> LpSolution:
    """Re-solve a bound-modified program from a previous optimal basis.

    ``basis``/``at_upper`` must come from an LpSolution of a program
    with the same rows, columns, and objective; only the variable
    bounds may differ.  A feasibility-repair pass patches up the
    inherited basis, then primal iterations finish the solve.  Raises
    SimplexError when the basis cannot be reused; callers should fall
    back to ``solve_lp``.
    """
    if lp.num_rows == 0:
        return _solve_trivial(lp)
    solver = _RevisedSimplex(lp, tol_feas, max_iters, start=(basis, at_upper))
    return solver.solve_warm()


def solve_mip(
    lp: LinearProgram,
    integer_vars: Iterable[int],
    node_limit: int = 1_000_000,
    *,
    tol_int: float = TOL_INT,
    objective_is_integral: bool = False,
    warm_start_x: np.ndarray | None = None,
    branch_groups: Iterable[Iterable[int]] | None = None,
) -> MipSolution:
    """Depth-first branch and bound for binary integer programs.

    Branches on the most fractional declared variable (ties to the
    lowest index), exploring the child nearer the fractional value
    first.  ``objective_is_integral`` tightens pruning when every
    integral solution is known to have an integer objective value.
    ``warm_start_x`` may carry a known feasible integral point; it
    seeds the incumbent so pruning starts immediately.  Raises
    NodeLimitExceeded past ``node_limit`` LP solves.

    ``branch_groups`` lists sets of integer variables of which at most
    one can be 1 in any feasible point (the program must already
    enforce that).  When the branch variable lies in a group, one
    child per settable member pins that member to 1 and one child
    zeroes the whole group, which splits such structure far faster
    than a two-way bound split.
    """
    int_vars = np.array(sorted(set(int(j) for j in integer_vars)), dtype=int)
    if int_vars.size and (int_vars[0] < 0 or int_vars[-1] >= lp.num_vars):
        raise ValueError("integer_vars outside the variable range")
    if int_vars.size and (
        np.any(lp.lower[int_vars] < -1e-9) or np.any(lp.upper[int_vars] > 1.0 + 1e-9)
    ):
        raise ValueError("integer variables must have bounds within [0, 1]")
    int_set = set(int_vars.tolist())
    group_of: dict[int, tuple[int, ...]] = {}
    for raw in branch_groups or ():
        grp = tuple(int(j) for j in raw)
        if any(j not in int_set for j in grp):
            raise ValueError("branch group members must be integer variables")
        for j in grp:
            group_of[j] = grp

    best_x: np.ndarray | None = None
    best_obj = -math.inf
    if warm_start_x is not None:
        xw = np.asarray(warm_start_x, dtype=float).ravel()
        if xw.size != lp.num_vars:
            raise ValueError("warm start length does not match column count")
        resid = lp.a_matrix @ xw - lp.rhs
        feas = np.where(lp.senses == SENSE_LE, resid, np.abs(resid))
        ok = (
            (not feas.size or float(feas.max()) <= TOL_FEAS)
            and np.all(xw >= lp.lower - TOL_FEAS)
            and np.all(xw <= lp.upper + TOL_FEAS)
            and (not int_vars.size
                 or float(np.abs(xw[int_vars] - np.round(xw[int_vars])).max()) <= tol_int)
        )
        if not ok:
            raise ValueError("warm start is not a feasible integral point")
        best_x = xw.copy()
        best_obj = float(lp.objective @ xw)
        if objective_is_integral:
            best_obj = float(np.round(best_obj))
    nodes = 0
    # variable bounds shared by every node; root reduced-cost fixing
    # tightens these globally as the incumbent improves
    glo = lp.lower.copy()
    gup = lp.upper.copy()
    root_info: tuple[float, np.ndarray, np.ndarray] | None = None

    def keep_margin() -> float:
        # minimum bound improvement a node must offer over the incumbent
        return (1.0 - 10.0 * tol_int) if objective_is_integral else 1e-9

    def apply_root_fixing() -> None:
        # a variable whose root reduced cost proves that flipping it
        # cannot beat the incumbent by a whole unit is pinned for good
        if root_info is None or best_x is None or not objective_is_integral:
            return
        root_bound, root_x, rc = root_info
        cutoff = best_obj + keep_margin()
        at_lo = (root_x[int_vars] <= tol_int) & (gup[int_vars] > glo[int_vars])
        kill = at_lo & (root_bound + rc[int_vars] < cutoff)
        gup[int_vars[kill]] = glo[int_vars[kill]]
        at_up = (root_x[int_vars] >= 1.0 - tol_int) & (gup[int_vars] > glo[int_vars])
        keep = at_up & (root_bound - rc[int_vars] < cutoff)
        glo[int_vars[keep]] = gup[int_vars[keep]]

    # stack entries: (bound patches, parent LP bound, parent basis); LIFO
    Start = tuple[np.ndarray, np.ndarray] | None
    stack: list[tuple[tuple[tuple[int, float, float], ...], float, Start]] = [
        ((), math.inf, None)
    ]

    def open_bound(extra: float = -math.inf) -> float:
        bounds = [pb for _, pb, _ in stack]
        bounds.append(extra)
        return max(bounds) if bounds else -math.inf

    while stack:
        patches, parent_bound, start = stack.pop()
        if best_x is not None and parent_bound < best_obj + keep_margin():
            continue
        if nodes >= node_limit:
            incumbent = None
            if best_x is not None:
                incumbent = MipSolution(MipStatus.OPTIMAL, best_x, best_obj, nodes)
            gap = open_bound(parent_bound) - (best_obj if best_x is not None else -math.inf)
            raise NodeLimitExceeded(incumbent, gap, nodes)

        lo = glo.copy()
        up = gup.copy()
        conflict = False
        for j, a, b in patches:
            # a root fixing may have retired this subtree outright
            lo[j], up[j] = max(a, glo[j]), min(b, gup[j])
            conflict = conflict or lo[j] > up[j]
        if conflict or np.any(lo > up):
            continue
        child = lp.with_bounds(lo, up)
        sol = None
        if start is not None:
            try:
                sol = resolve_lp(child, start[0], start[1])
            except SimplexError:
                sol = None  # cold solve below
        if sol is None:
            sol = solve_lp(child)
        nodes += 1
        if sol.status == LpStatus.INFEASIBLE:
            continue
        if sol.status == LpStatus.UNBOUNDED:
            raise SimplexError("unbounded relaxation in branch and bound")
        bound = float(sol.objective)
        if not patches and root_info is None and sol.reduced_costs is not None:
            # the fixing test needs the raw (unfloored) root bound
            root_info = (bound, sol.x.copy(), sol.reduced_costs.copy())
            apply_root_fixing()
        if objective_is_integral:
            # integral solutions cannot exceed the floored relaxation bound
            bound = float(math.floor(bound + 10.0 * tol_int))
        if best_x is not None and bound < best_obj + keep_margin():
            continue

        frac = np.abs(sol.x[int_vars] - np.round(sol.x[int_vars])) if int_vars.size else np.array([])
        if frac.size == 0 or float(frac.max()) <= tol_int:
            if bound > best_obj + 1e-12 or best_x is None:
                best_x = sol.x.copy()
                raw = float(lp.objective @ sol.x)
                best_obj = float(np.round(raw)) if objective_is_integral else raw
                apply_root_fixing()
            continue

        # prefer the most fractional grouped variable: settling a whole
        # group prunes far more than one interior bound split
        cand = [
            p for p in np.nonzero(frac > tol_int)[0]
            if int(int_vars[p]) in group_of
        ]
        if cand:
            q = int(int_vars[max(cand, key=lambda p: float(frac[p]))])
        else:
            q = int(int_vars[int(np.argmax(frac))])
        seed: Start = None
        if sol.basis is not None:
            seed = (sol.basis, sol.at_upper)
        grp = group_of.get(q)
        if grp is not None:
            # one child per member still allowed to be 1, plus a child
            # rejecting the whole group; largest member value explored
            # first (it sits on top of the stack)
            members = [k for k in grp if up[k] > 0.5]
            stack.append((
                patches + tuple((k, lo[k], min(up[k], 0.0)) for k in members),
                bound,
                seed,
            ))
            for k in sorted(members, key=lambda k: (float(sol.x[k]), k)):
                stack.append(
                    (patches + ((k, max(lo[k], 1.0), up[k]),), bound, seed)
                )
            continue
        xq = float(sol.x[q])
        fl = math.floor(xq)
        down = patches + ((q, lo[q], min(up[q], float(fl))),)
        upc = patches + ((q, max(lo[q], float(fl + 1)), up[q]),)
        if xq - fl <= 0.5:
            near, far = down, upc
        else:
            near, far = upc, down
        stack.append((far, bound, seed))
        stack.append((near, bound, seed))

    if best_x is None:
        return MipSolution(MipStatus.INFEASIBLE, None, None, nodes)
    return MipSolution(MipStatus.OPTIMAL, best_x, best_obj, nodes)
