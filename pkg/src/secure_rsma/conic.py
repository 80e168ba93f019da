"""Small conic modeling layer over a real variable vector, solved with Clarabel.

Variables are slices of one real vector ``x``.  A complex variable of size n
occupies 2n entries, interleaved ``(re_0, im_0, re_1, im_1, ...)``.  Affine
expressions are dense coefficient rows plus a constant; complex-valued
expressions simply carry complex coefficients, and ``.real`` / ``.imag``
split them back into real rows.

Constraint blocks, each holding a list of real affine rows ``e``:

* ``eq``    all ``e == 0``
* ``nonneg`` all ``e >= 0``
* ``soc``   ``||e[1:]|| <= e[0]``
* ``rsoc``  ``||e[2:]||**2 <= e[0] * e[1]``, ``e[0], e[1] >= 0``
* ``exp``   ``e[1] * exp(e[0] / e[1]) <= e[2]``

Blocks carry a ``tag`` naming the constraint family, used in infeasibility
diagnostics.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import clarabel
import numpy as np
from scipy import sparse

logger = logging.getLogger(__name__)


class Affine:
    __slots__ = ("coef", "const")

    def __init__(self, coef, const=0.0):
        self.coef = np.asarray(coef)
        self.const = const

    @classmethod
    def constant(cls, value) -> "Affine":
        return cls(np.zeros(0), value)

    @staticmethod
    def _lift(other) -> "Affine":
        return other if isinstance(other, Affine) else Affine.constant(other)

    def _padded(self, n):
        if self.coef.shape[0] == n:
            return self.coef
        return np.pad(self.coef, (0, n - self.coef.shape[0]))

    def __add__(self, other):
        other = self._lift(other)
        n = max(self.coef.shape[0], other.coef.shape[0])
        return Affine(self._padded(n) + other._padded(n), self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return Affine(-self.coef, -self.const)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, scalar):
        if isinstance(scalar, Affine):
            raise TypeError("product of affine expressions is not affine")
        return Affine(self.coef * scalar, self.const * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    @property
    def real(self) -> "Affine":
        return Affine(np.real(self.coef), float(np.real(self.const)))

    @property
    def imag(self) -> "Affine":
        return Affine(np.imag(self.coef), float(np.imag(self.const)))

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.coef) or isinstance(self.const, complex)

    def value(self, x):
        return self._padded(len(x)) @ x + self.const

    def __repr__(self):
        return f"Affine(nnz={np.count_nonzero(self.coef)}, const={self.const})"


def total(exprs: Iterable) -> Affine:
    out = Affine.constant(0.0)
    for e in exprs:
        out = out + e
    return out


def split_real(exprs: Iterable[Affine]) -> list[Affine]:
    """Real rows whose squared norm equals the sum of ``|e|**2``."""
    rows = []
    for e in exprs:
        if e.is_complex:
            rows += [e.real, e.imag]
        else:
            rows.append(e)
    return rows


@dataclass
class Variable:
    name: str
    start: int
    size: int
    is_complex: bool
    lb: float | None = None
    ub: float | None = None

    @property
    def width(self) -> int:
        return 2 * self.size if self.is_complex else self.size

    def __getitem__(self, i) -> Affine:
        if not -self.size <= i < self.size:
            raise IndexError(i)
        i %= self.size
        if self.is_complex:
            coef = np.zeros(self.start + 2 * i + 2, complex)
            coef[self.start + 2 * i] = 1.0
            coef[self.start + 2 * i + 1] = 1j
        else:
            coef = np.zeros(self.start + i + 1)
            coef[self.start + i] = 1.0
        return Affine(coef)

    @property
    def e(self) -> Affine:
        if self.size != 1:
            raise ValueError(f"{self.name} is not scalar")
        return self[0]

    def inner(self, c) -> Affine:
        """``c^H x`` as a (complex) affine expression."""
        c = np.asarray(c)
        if c.shape != (self.size,):
            raise ValueError(f"inner: expected {self.size} coefficients, got {c.shape}")
        cc = np.conj(c)
        if self.is_complex:
            coef = np.zeros(self.start + 2 * self.size, complex)
            coef[self.start::2] = cc
            coef[self.start + 1::2] = 1j * cc
        else:
            coef = np.zeros(self.start + self.size, cc.dtype)
            coef[self.start:] = cc
        return Affine(coef)

    def entries(self) -> list[Affine]:
        return [self[i] for i in range(self.size)]


@dataclass
class Block:
    kind: str
    rows: list[Affine]
    tag: str


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_TROUBLE = "numerical_trouble"


@dataclass
class SolveResult:
    status: Status
    values: dict = field(default_factory=dict)
    objective: float = float("nan")
    residual: float = float("nan")
    x: np.ndarray | None = None
    diagnostic: str = ""

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL

    def __getitem__(self, name):
        return self.values[name]


class ConicProgram:
    def __init__(self):
        self.n = 0
        self.variables: dict[str, Variable] = {}
        self.blocks: list[Block] = []
        self.objective = Affine.constant(0.0)
        self.sense = "min"

    def variable(self, name, size=1, *, complex=False, lb=None, ub=None) -> Variable:
        if name in self.variables:
            raise ValueError(f"duplicate variable {name}")
        if complex and (lb is not None or ub is not None):
            raise ValueError("bounds apply to real variables only")
        var = Variable(name, self.n, size, complex, lb, ub)
        self.variables[name] = var
        self.n += var.width
        if lb is not None:
            self.add_block("nonneg", [e - lb for e in var.entries()], f"{name}.lb")
        if ub is not None:
            self.add_block("nonneg", [ub - e for e in var.entries()], f"{name}.ub")
        return var

    def add_block(self, kind, rows: Sequence[Affine], tag="") -> Block:
        rows = [Affine._lift(r) for r in rows]
        if any(r.is_complex for r in rows):
            raise ValueError(f"{tag}: cone rows must be real; split complex terms first")
        block = Block(kind, rows, tag)
        self.blocks.append(block)
        return block

    def add_eq(self, lhs, rhs=0.0, tag="") -> Block:
        return self.add_block("eq", [Affine._lift(lhs) - rhs], tag)

    def add_ge(self, lhs, rhs=0.0, tag="") -> Block:
        return self.add_block("nonneg", [Affine._lift(lhs) - rhs], tag)

    def add_le(self, lhs, rhs=0.0, tag="") -> Block:
        return self.add_block("nonneg", [Affine._lift(rhs) - lhs], tag)

    def add_soc(self, t, xs: Sequence[Affine], tag="") -> Block:
        return self.add_block("soc", [Affine._lift(t), *split_real(xs)], tag)

    def add_rsoc(self, y, z, xs: Sequence[Affine], tag="") -> Block:
        return self.add_block("rsoc", [Affine._lift(y), Affine._lift(z), *split_real(xs)], tag)

    def add_exp(self, x, y, z, tag="") -> Block:
        return self.add_block("exp", [Affine._lift(x), Affine._lift(y), Affine._lift(z)], tag)

    def maximize(self, expr):
        self.objective, self.sense = Affine._lift(expr), "max"

    def minimize(self, expr):
        self.objective, self.sense = Affine._lift(expr), "min"

    # -- compilation -------------------------------------------------------

    def _cone_rows(self, block: Block) -> list[Affine]:
        if block.kind == "rsoc":
            y, z, *xs = block.rows
            return [y + z, y - z, *[2 * r for r in xs]]
        return block.rows

    def compile(self):
        """Clarabel data ``(P, q, A, b, cones, row_tags)`` with ``s = b - A x``."""
        rows, cones, tags = [], [], []
        for block in self.blocks:
            brows = self._cone_rows(block)
            rows += brows
            tags += [block.tag] * len(brows)
            n = len(brows)
            if block.kind == "eq":
                cones.append(clarabel.ZeroConeT(n))
            elif block.kind == "nonneg":
                cones.append(clarabel.NonnegativeConeT(n))
            elif block.kind in ("soc", "rsoc"):
                cones.append(clarabel.SecondOrderConeT(n))
            elif block.kind == "exp":
                cones.append(clarabel.ExponentialConeT())
            else:
                raise ValueError(f"unknown block kind {block.kind}")
        A = np.zeros((len(rows), self.n))
        b = np.zeros(len(rows))
        for i, r in enumerate(rows):
            A[i] = -r._padded(self.n)
            b[i] = r.const
        sign = -1.0 if self.sense == "max" else 1.0
        q = sign * self.objective.real._padded(self.n)
        P = sparse.csc_matrix((self.n, self.n))
        return P, q, sparse.csc_matrix(A), b, cones, tags

    def violation(self, block: Block, x) -> float:
        v = np.array([r.value(x) for r in block.rows], dtype=float)
        if block.kind == "eq":
            return float(np.max(np.abs(v)))
        if block.kind == "nonneg":
            return float(max(0.0, -v.min()))
        if block.kind == "soc":
            return float(max(0.0, np.linalg.norm(v[1:]) - v[0]))
        if block.kind == "rsoc":
            viol = max(0.0, -v[0], -v[1])
            return float(max(viol, (v[2:] @ v[2:] - v[0] * v[1]) / max(1.0, abs(v[0]) + abs(v[1]))))
        if block.kind == "exp":
            xx, y, z = v
            if y <= 0:
                return float(max(0.0, -y, xx, -z))
            return float(max(0.0, y * np.exp(min(xx / y, 700.0)) - z))
        raise ValueError(block.kind)

    def max_violation(self, x) -> float:
        return max((self.violation(b, x) for b in self.blocks), default=0.0)

    def unpack(self, x) -> dict:
        out = {}
        for name, var in self.variables.items():
            chunk = x[var.start:var.start + var.width]
            if var.is_complex:
                chunk = chunk[0::2] + 1j * chunk[1::2]
            out[name] = float(chunk[0]) if var.size == 1 and not var.is_complex else chunk.copy()
        return out

    def dump(self, path: str | Path) -> None:
        """Sparse text dump, format described in the README; rows follow ``s = b - A x``."""
        P, q, A, b, _, tags = self.compile()
        A = A.tocoo()
        lines = ["# conic program v1", f"vars {self.n}"]
        for var in self.variables.values():
            kind = "complex" if var.is_complex else "real"
            lines.append(f"var {var.name} {var.start} {var.size} {kind}")
        lines.append(f"objective {self.sense} {float(np.real(self.objective.const))!r}")
        lines += [f"c {j} {v!r}" for j, v in enumerate(q) if v != 0]
        row = 0
        for block in self.blocks:
            n = len(self._cone_rows(block))
            cone = "soc" if block.kind == "rsoc" else block.kind
            lines.append(f"block {cone} {block.tag or '-'} {row} {n}")
            row += n
        lines += [f"A {i} {j} {v!r}" for i, j, v in zip(A.row, A.col, A.data)]
        lines += [f"b {i} {v!r}" for i, v in enumerate(b) if v != 0]
        Path(path).write_text("\n".join(lines) + "\n")


# -- encodings -------------------------------------------------------------

def _weighted(terms) -> list[Affine]:
    out = []
    for term in terms:
        weight, expr = term if isinstance(term, tuple) else (1.0, term)
        if weight < 0:
            raise ValueError("indefinite quadratic: negative weight on a squared term")
        if weight > 0:
            out.append(Affine._lift(expr) * np.sqrt(weight))
    return out


def encode_quad_le_affine(prog: ConicProgram, terms, rhs, tag="") -> Block:
    """``sum_i w_i |z_i|^2 <= rhs`` as a rotated cone ``(rhs, 1, z)``.

    ``terms`` holds affine ``z_i`` or ``(w_i, z_i)`` pairs with ``w_i >= 0``.
    """
    zs = _weighted(terms)
    if not zs:
        return prog.add_ge(rhs, 0.0, tag)
    return prog.add_rsoc(rhs, 1.0, zs, tag)


def encode_quad_over_var(prog: ConicProgram, terms, denom: Variable, bound, tag="") -> Block:
    """``sum_i w_i |z_i|^2 / denom <= bound`` as a rotated cone ``(denom, bound, z)``."""
    if denom.size != 1 or denom.is_complex:
        raise ValueError("denominator must be a real scalar variable")
    if denom.lb is None or denom.lb < 0:
        raise ValueError(f"denominator {denom.name} needs a declared lower bound >= 0")
    zs = _weighted(terms)
    if not zs:
        return prog.add_ge(bound, 0.0, tag)
    return prog.add_rsoc(denom.e, bound, zs, tag)


# -- solving ---------------------------------------------------------------

_STATUS = {
    "Solved": Status.OPTIMAL,
    "PrimalInfeasible": Status.INFEASIBLE,
    "AlmostPrimalInfeasible": Status.INFEASIBLE,
    "DualInfeasible": Status.UNBOUNDED,
    "AlmostDualInfeasible": Status.UNBOUNDED,
}


def _infeasibility_diagnostic(z, tags) -> str:
    weight: dict[str, float] = {}
    for zi, tag in zip(np.abs(z), tags):
        family = tag.split("[")[0]
        weight[family] = weight.get(family, 0.0) + zi
    tot = sum(weight.values()) or 1.0
    ranked = sorted(weight.items(), key=lambda kv: -kv[1])
    top = [f"{name} ({w / tot:.0%})" for name, w in ranked[:3] if w / tot > 0.05]
    return "binding constraint families: " + ", ".join(top)


def solve(prog: ConicProgram, tol: float = 1e-8, max_iter: int = 200) -> SolveResult:
    P, q, A, b, cones, tags = prog.compile()
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = max_iter
    settings.tol_gap_abs = settings.tol_gap_rel = settings.tol_feas = tol
    try:
        sol = clarabel.DefaultSolver(P, q, A, b, cones, settings).solve()
    except Exception as exc:  # solver-side panics surface as numerical trouble
        logger.warning("clarabel failed: %s", exc)
        return SolveResult(Status.NUMERICAL_TROUBLE, diagnostic=str(exc))
    name = str(sol.status)
    status = _STATUS.get(name, Status.NUMERICAL_TROUBLE)
    x = np.asarray(sol.x)
    if status is Status.INFEASIBLE:
        return SolveResult(status, diagnostic=_infeasibility_diagnostic(np.asarray(sol.z), tags))
    if name == "AlmostSolved" or (status is Status.OPTIMAL):
        residual = prog.max_violation(x)
        if name == "AlmostSolved":
            status = Status.OPTIMAL if residual <= 1e-6 else Status.NUMERICAL_TROUBLE
        obj = float(np.real(prog.objective.value(x)))
        return SolveResult(status, prog.unpack(x), obj, residual, x, name)
    return SolveResult(status, diagnostic=name)
