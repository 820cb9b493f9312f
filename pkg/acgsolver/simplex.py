"""
Revised primal simplex for the restricted master problem

Minimisation over nonnegative variables with <=, = and >= rows, dynamic
column addition, zero-fixing of columns and dual extraction. The basis is
held as a sparse LU factorisation (scipy) updated in product form between
refactorisations; the previous optimal basis is reused as a warm start.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .error_handling import LpModelError, NumericalFailure, UnknownColumn
from .utils import Deadline

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 32


class Sense(Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class LpSolution:
    """Primal values per user column, duals per row (zero-length when the model has no rows)"""
    status: LpStatus
    objective: float
    primal: np.ndarray
    duals: np.ndarray
    iterations: int = 0
    warm_started: bool = False

    @property
    def optimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL


# Basis entries are keyed so they survive column additions:
# ("x", j) user column, ("s", i) slack of row i, ("a", i) artificial of row i.
BasisKey = Tuple[str, int]


class _Factor:
    """LU of a basis matrix plus a product-form eta file"""

    def __init__(self, basis_matrix: sp.csc_matrix):
        try:
            self.lu = splu(basis_matrix, permc_spec="COLAMD")
        except RuntimeError as e:
            raise NumericalFailure(f"singular basis: {e}") from None
        self.etas: List[Tuple[int, np.ndarray]] = []

    def ftran(self, rhs: np.ndarray) -> np.ndarray:
        x = self.lu.solve(rhs)
        for r, w in self.etas:
            xr = x[r] / w[r]
            x -= w * xr
            x[r] = xr
        return x

    def btran(self, rhs: np.ndarray) -> np.ndarray:
        v = rhs.astype(float, copy=True)
        for r, w in reversed(self.etas):
            vr = v[r]
            v[r] = (vr - (v @ w - vr * w[r])) / w[r]
        return self.lu.solve(v, trans="T")

    def push(self, r: int, w: np.ndarray):
        self.etas.append((r, w.copy()))


@dataclass
class _Assembled:
    A: sp.csc_matrix
    b: np.ndarray
    cost: np.ndarray
    n_user: int
    keys: List[BasisKey]
    index: Dict[BasisKey, int]
    artificial: np.ndarray       # bool mask
    capped: np.ndarray           # bool mask: must stay at zero
    barred: np.ndarray           # bool mask: may not enter
    initial_basis: List[int] = field(default_factory=list)


class LpModel:
    """Sparse LP model; row and column ids are dense and stable"""

    def __init__(self):
        self.row_sense: List[Sense] = []
        self.row_rhs: List[float] = []
        self.col_obj: List[float] = []
        self.col_rows: List[Dict[int, float]] = []
        self.fixed: Dict[int, float] = {}
        self._basis: Optional[List[BasisKey]] = None

    @property
    def row_count(self) -> int:
        return len(self.row_rhs)

    @property
    def column_count(self) -> int:
        return len(self.col_obj)

    def add_row(self, sense: Sense, rhs: float, coeffs: Optional[Mapping[int, float]] = None) -> int:
        """Append a row; coefficients may reference existing columns"""
        row = len(self.row_rhs)
        self.row_sense.append(Sense(sense))
        self.row_rhs.append(float(rhs))
        for col, value in (coeffs or {}).items():
            self._check_column(col)
            if value != 0.0:
                self.col_rows[col][row] = float(value)
        self._basis = None
        return row

    def add_column(self, objective: float, row_coeffs: Optional[Mapping[int, float]] = None) -> int:
        """Append a column; the current basis stays a valid warm start"""
        coeffs: Dict[int, float] = {}
        for row, value in (row_coeffs or {}).items():
            if not 0 <= row < len(self.row_rhs):
                raise LpModelError(f"column references unknown row {row}")
            if value != 0.0:
                coeffs[row] = float(value)
        self.col_obj.append(float(objective))
        self.col_rows.append(coeffs)
        return len(self.col_obj) - 1

    def fix(self, col: int, value: float = 0.0):
        """Pin a column to zero until `unfix`; other values are rejected"""
        self._check_column(col)
        if value != 0.0:
            raise LpModelError(f"only zero-fixing is supported, got {value}")
        self.fixed[col] = 0.0

    def unfix(self, col: int):
        """Release a fixed column; a no-op for free columns"""
        self._check_column(col)
        self.fixed.pop(col, None)

    def is_fixed(self, col: int) -> bool:
        return col in self.fixed

    def _check_column(self, col: int):
        if not 0 <= col < len(self.col_obj):
            raise UnknownColumn(f"unknown column {col}")

    # -- solving ---------------------------------------------------------

    def _assemble(self) -> _Assembled:
        m = len(self.row_rhs)
        n = len(self.col_obj)
        b = np.asarray(self.row_rhs, dtype=float)

        keys: List[BasisKey] = [("x", j) for j in range(n)]
        rows: List[int] = []
        cols: List[int] = []
        vals: List[float] = []
        for j, coeffs in enumerate(self.col_rows):
            for i, v in coeffs.items():
                rows.append(i)
                cols.append(j)
                vals.append(v)

        initial: List[int] = []
        slack_of: Dict[int, int] = {}
        for i, sense in enumerate(self.row_sense):
            if sense == Sense.EQ:
                continue
            col = len(keys)
            keys.append(("s", i))
            slack_of[i] = col
            rows.append(i)
            cols.append(col)
            vals.append(1.0 if sense == Sense.LE else -1.0)

        art_start = len(keys)
        for i in range(m):
            keys.append(("a", i))
            rows.append(i)
            cols.append(art_start + i)
            vals.append(1.0 if b[i] >= 0 else -1.0)

        total = len(keys)
        A = sp.csc_matrix((vals, (rows, cols)), shape=(m, total), dtype=float)

        for i, sense in enumerate(self.row_sense):
            if sense == Sense.LE and b[i] >= 0:
                initial.append(slack_of[i])
            elif sense == Sense.GE and b[i] <= 0:
                initial.append(slack_of[i])
            else:
                initial.append(art_start + i)

        cost = np.zeros(total)
        cost[:n] = self.col_obj

        artificial = np.zeros(total, dtype=bool)
        artificial[art_start:] = True
        fixed = np.zeros(total, dtype=bool)
        for j in self.fixed:
            fixed[j] = True

        return _Assembled(
            A=A, b=b, cost=cost, n_user=n, keys=keys,
            index={k: idx for idx, k in enumerate(keys)},
            artificial=artificial,
            capped=artificial | fixed,
            barred=artificial | fixed,
            initial_basis=initial,
        )

    def solve(self, deadline: Optional[Deadline] = None, max_iterations: Optional[int] = None) -> LpSolution:
        """Solve the model; reuses the last optimal basis when it is still primal feasible"""
        asm = self._assemble()
        m = len(asm.b)
        n = asm.n_user

        if m == 0:
            return self._solve_rowless(asm)

        if max_iterations is None:
            max_iterations = 50 * (m + len(asm.keys))

        basis = self._warm_basis(asm)
        warm = basis is not None
        iterations = 0

        for bland in (False, True):
            try:
                if basis is None:
                    basis = list(asm.initial_basis)
                    phase1_cost = asm.artificial.astype(float)
                    # phase-1 artificials are not capped
                    status, basis, its = _iterate(asm, phase1_cost, basis, asm.barred, asm.capped & ~asm.artificial,
                                                  deadline, max_iterations, bland)
                    iterations += its
                    if status == "limit":
                        return self._limit(asm, basis, iterations, warm)
                    factor = _Factor(asm.A[:, basis])
                    x_b = factor.ftran(asm.b)
                    infeasibility = float(phase1_cost[basis] @ np.maximum(x_b, 0.0))
                    if infeasibility > FEAS_TOL * (1.0 + float(np.abs(asm.b).max())):
                        logger.debug("phase 1 ended with infeasibility %.3g", infeasibility)
                        self._basis = None
                        return LpSolution(LpStatus.INFEASIBLE, np.inf, np.zeros(n), np.zeros(m), iterations, warm)

                status, basis, its = _iterate(asm, asm.cost, basis, asm.barred, asm.capped,
                                              deadline, max_iterations, bland)
                iterations += its
                break
            except NumericalFailure:
                if bland:
                    raise
                logger.warning("numerical trouble in simplex, restarting cold with Bland's rule")
                basis = None
                warm = False

        if status == "limit":
            return self._limit(asm, basis, iterations, warm)
        if status == "unbounded":
            self._basis = None
            return LpSolution(LpStatus.UNBOUNDED, -np.inf, np.zeros(n), np.zeros(m), iterations, warm)

        factor = _Factor(asm.A[:, basis])
        x_b = np.maximum(factor.ftran(asm.b), 0.0)
        duals = factor.btran(asm.cost[basis])
        primal = np.zeros(n)
        for pos, col in enumerate(basis):
            if col < n:
                primal[col] = x_b[pos]
        self._basis = [asm.keys[c] for c in basis]
        objective = float(asm.cost[:n] @ primal)
        return LpSolution(LpStatus.OPTIMAL, objective, primal, duals, iterations, warm)

    def _warm_basis(self, asm: _Assembled) -> Optional[List[int]]:
        """The previous basis mapped onto the current columns, or None if it is no longer primal feasible"""
        if self._basis is None or len(self._basis) != len(asm.b):
            return None
        try:
            basis = [asm.index[k] for k in self._basis]
        except KeyError:
            return None
        try:
            factor = _Factor(asm.A[:, basis])
        except NumericalFailure:
            return None
        x_b = factor.ftran(asm.b)
        if np.any(x_b < -FEAS_TOL * (1.0 + np.abs(asm.b).max())):
            return None
        if np.any(x_b[asm.capped[basis]] > FEAS_TOL):
            return None
        return basis

    def _limit(self, asm: _Assembled, basis: List[int], iterations: int, warm: bool) -> LpSolution:
        # best-effort primal of the last basis; duals are not meaningful here
        m = len(asm.b)
        n = asm.n_user
        primal = np.zeros(n)
        try:
            x_b = np.maximum(_Factor(asm.A[:, basis]).ftran(asm.b), 0.0)
            for pos, col in enumerate(basis):
                if col < n:
                    primal[col] = x_b[pos]
        except NumericalFailure:
            pass
        return LpSolution(LpStatus.ITERATION_LIMIT, float(asm.cost[:n] @ primal),
                          primal, np.zeros(m), iterations, warm)

    def _solve_rowless(self, asm: _Assembled) -> LpSolution:
        n = asm.n_user
        free = [j for j in range(n) if j not in self.fixed]
        if any(asm.cost[j] < -OPT_TOL for j in free):
            return LpSolution(LpStatus.UNBOUNDED, -np.inf, np.zeros(n), np.zeros(0))
        return LpSolution(LpStatus.OPTIMAL, 0.0, np.zeros(n), np.zeros(0))


def _iterate(asm: _Assembled,
             cost: np.ndarray,
             basis: List[int],
             barred: np.ndarray,
             capped: np.ndarray,
             deadline: Optional[Deadline],
             max_iterations: int,
             bland: bool) -> Tuple[str, List[int], int]:
    """Primal simplex iterations from a primal feasible basis"""
    A = asm.A
    m, total = A.shape
    AT = A.T.tocsr()
    basis = list(basis)
    factor = _Factor(A[:, basis])
    stall_limit = 3 * (m + total)
    stall = 0
    best_obj = np.inf
    in_basis = np.zeros(total, dtype=bool)
    in_basis[basis] = True

    for iteration in range(max_iterations):
        if deadline is not None and deadline.expired():
            return "limit", basis, iteration

        x_b = factor.ftran(asm.b)
        c_b = cost[basis]
        obj = float(c_b @ x_b)
        if obj < best_obj - 1e-12:
            best_obj = obj
            stall = 0
        else:
            stall += 1
            if stall > stall_limit and not bland:
                logger.debug("no objective progress for %d iterations, switching to Bland's rule", stall)
                bland = True

        y = factor.btran(c_b)
        reduced = cost - AT @ y
        eligible = (~in_basis) & (~barred) & (reduced < -OPT_TOL)
        candidates = np.flatnonzero(eligible)
        if candidates.size == 0:
            return "optimal", basis, iteration
        if bland:
            q = int(candidates[0])
        else:
            q = int(candidates[np.argmin(reduced[candidates])])

        column = A[:, q].toarray().ravel()
        w = factor.ftran(column)

        basis_arr = np.asarray(basis)
        cap = capped[basis_arr]
        ratios = np.full(m, np.inf)
        blocking = (~cap) & (w > PIVOT_TOL)
        ratios[blocking] = np.maximum(x_b[blocking], 0.0) / w[blocking]
        # zero-capped basics leave as soon as the entering column moves them
        ratios[cap & (np.abs(w) > PIVOT_TOL)] = 0.0
        best_ratio = ratios.min()
        if not np.isfinite(best_ratio):
            return "unbounded", basis, iteration

        ties = np.flatnonzero(ratios <= best_ratio + 1e-12)
        if bland:
            leave = int(ties[np.argmin(basis_arr[ties])])
        else:
            leave = int(ties[np.argmax(np.abs(w[ties]))])

        logger.debug("pivot: in %d out %d ratio %.3g", q, basis[leave], best_ratio)
        in_basis[basis[leave]] = False
        in_basis[q] = True
        basis[leave] = q
        if len(factor.etas) >= REFACTOR_EVERY:
            factor = _Factor(A[:, basis])
        else:
            factor.push(leave, w)

    return "limit", basis, max_iterations


def solve(m: LpModel, deadline: Optional[Deadline] = None) -> LpSolution:
    """Function forms of the `LpModel` methods"""
    return m.solve(deadline)


def add_column(m: LpModel, objective: float, row_coeffs: Mapping[int, float]) -> int:
    return m.add_column(objective, row_coeffs)


def fix(m: LpModel, col: int, value: float = 0.0):
    m.fix(col, value)


def unfix(m: LpModel, col: int):
    m.unfix(col)
