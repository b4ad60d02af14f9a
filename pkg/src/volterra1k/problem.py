"""Equation instances and their solvability diagnostics.

A :class:`Problem` describes one first-kind Volterra equation

    integral_0^t K(t, s) x(s) ds = f(t),   0 <= t <= T,   f(0) = 0,

whose kernel K is pieced together from smooth kernels K_1 .. K_n on the
strips between consecutive curves 0 = alpha_0(t) < alpha_1(t) < ... <
alpha_{n-1}(t) < alpha_n(t) = t, all curves emanating from the origin.
Only the n-1 interior curves are stored.

The diagnostics quantify how well-posed an instance is:

* ``D(0) < 1`` is a sufficient (not necessary) condition for a unique
  local continuous solution, with
  D(t) = sum_i |alpha_i'(t) / K_n(t,t)| * |K_i(t,alpha_i(t)) - K_{i+1}(t,alpha_i(t))|
* ``B(j) = K_n(0,0) + sum_i alpha_i'(0)^(1+j) * (K_i(0,0) - K_{i+1}(0,0))``
  vanishing for some j >= 0 signals possible non-uniqueness (solutions
  with free constants)
* the denominator of the starting value x(0), which the stepping solver
  divides by, must be nonzero.

None of the diagnostics abort anything: benchmark problems violating
``D(0) < 1`` still converge, so violations are reported as warnings and
only hard structural defects (ordering, endpoint conditions) make a
problem invalid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import DomainError, Expr, differentiate, evaluate, parse

__all__ = [
    "Problem",
    "Diagnostics",
    "ValidationError",
    "KernelDiagonalError",
    "validate",
    "compute_D0",
    "compute_Bj",
    "x0_denominator",
]

ENDPOINT_TOL = 1e-12     # |f(0)|, |alpha_i(0)| must stay below this
B_FLAG_TOL = 1e-10       # |B(j)| below this is flagged
ORDERING_SAMPLES = 1000  # uniform sample of (0, T] for the ordering check


class ValidationError(ValueError):
    """A problem violates its structural invariants."""


class KernelDiagonalError(ArithmeticError):
    """K_n(0,0) vanishes, so D(0) is undefined."""


@dataclass(frozen=True, kw_only=True)
class Problem:
    """One equation instance; immutable after construction."""

    T: float
    kernels: tuple[Expr, ...]          # K_1 .. K_n, functions of (t, s)
    curves: tuple[Expr, ...] = ()      # alpha_1 .. alpha_{n-1}, functions of t
    rhs: Expr = field()                # f(t)
    exact: Expr | None = None          # optional reference solution for errors
    label: str | None = None

    def __post_init__(self):
        if not self.kernels:
            raise ValueError("at least one kernel piece is required")
        if len(self.kernels) != len(self.curves) + 1:
            raise ValueError(
                f"{len(self.kernels)} kernels require {len(self.kernels) - 1} "
                f"interior curves, got {len(self.curves)}"
            )
        if not (self.T > 0):
            raise ValueError(f"horizon T must be positive, got {self.T}")
        object.__setattr__(self, "kernels", tuple(self.kernels))
        object.__setattr__(self, "curves", tuple(self.curves))

    @classmethod
    def from_strings(
        cls,
        *,
        T: float,
        kernels: list[str],
        curves: list[str] = (),
        rhs: str,
        exact: str | None = None,
        label: str | None = None,
    ) -> "Problem":
        return cls(
            T=float(T),
            kernels=tuple(parse(k) for k in kernels),
            curves=tuple(parse(c) for c in curves),
            rhs=parse(rhs),
            exact=None if exact is None else parse(exact),
            label=label,
        )

    @property
    def n(self) -> int:
        return len(self.kernels)

    def piece_bounds(self, t: float) -> list[float]:
        """[0, alpha_1(t), ..., alpha_{n-1}(t), t] — integration bounds at t."""
        return [0.0, *(evaluate(c, t=t) for c in self.curves), float(t)]

    def curve_slopes_at_origin(self) -> tuple[float, ...]:
        """(alpha_1'(0), ..., alpha_{n-1}'(0)), computed symbolically."""
        return tuple(evaluate(differentiate(c, "t"), t=0.0) for c in self.curves)


@dataclass(frozen=True)
class Diagnostics:
    """Well-posedness report. ``messages`` hold invariant violations (the
    problem is unusable), ``warnings`` hold advisories that never block."""

    d0: float
    x0_denominator: float
    b: list[float]
    ordering_ok: bool
    messages: list[str]
    warnings: list[str]


def _kernel_at_origin(p: Problem, i: int) -> float:
    """K_i(0, 0) with i 1-based."""
    return evaluate(p.kernels[i - 1], t=0.0, s=0.0)


def compute_D0(p: Problem) -> float:
    """D(0) >= 0; the sufficient-condition threshold is D(0) < 1.

    Curve slopes at the origin are taken symbolically (one-sided numeric
    differentiation at the boundary would lose accuracy). Raises
    :class:`KernelDiagonalError` when |K_n(0,0)| < 1e-12.
    """
    kn = _kernel_at_origin(p, p.n)
    if abs(kn) < 1e-12:
        raise KernelDiagonalError(f"K_n(0,0) = {kn!r} is (nearly) zero")
    slopes = p.curve_slopes_at_origin()
    total = 0.0
    for i, slope in enumerate(slopes, start=1):
        jump = _kernel_at_origin(p, i) - _kernel_at_origin(p, i + 1)
        total += abs(slope / kn) * abs(jump)
    return total


def compute_Bj(p: Problem, j_max: int = 5) -> list[float]:
    """[B(0), ..., B(j_max)]; near-zero entries hint at non-uniqueness."""
    if j_max < 0:
        raise ValueError("j_max must be >= 0")
    kn = _kernel_at_origin(p, p.n)
    slopes = p.curve_slopes_at_origin()
    jumps = [
        _kernel_at_origin(p, i) - _kernel_at_origin(p, i + 1)
        for i in range(1, p.n)
    ]
    return [
        kn + sum(slope ** (1 + j) * jump for slope, jump in zip(slopes, jumps))
        for j in range(j_max + 1)
    ]


def x0_denominator(p: Problem) -> float:
    """sum_i K_i(0,0) * (alpha_i'(0) - alpha_{i-1}'(0)), with the implicit
    alpha_0' = 0 and alpha_n' = 1. The solver divides f'(0) by this."""
    slopes = (0.0, *p.curve_slopes_at_origin(), 1.0)
    return sum(
        _kernel_at_origin(p, i) * (slopes[i] - slopes[i - 1])
        for i in range(1, p.n + 1)
    )


def validate(p: Problem) -> Diagnostics:
    """Check invariants and compute all diagnostics; never raises for
    expression evaluation failures (they become messages instead)."""
    messages: list[str] = []
    warnings: list[str] = []

    try:
        f0 = evaluate(p.rhs, t=0.0)
        if abs(f0) > ENDPOINT_TOL:
            messages.append(f"f(0) = {f0!r} but the equation requires f(0) = 0")
    except DomainError as exc:
        messages.append(f"f(t) not evaluable at t=0: {exc}")

    for i, curve in enumerate(p.curves, start=1):
        try:
            a0 = evaluate(curve, t=0.0)
            if abs(a0) > ENDPOINT_TOL:
                messages.append(
                    f"alpha_{i}(0) = {a0!r} but every curve must start at the origin"
                )
        except DomainError as exc:
            messages.append(f"alpha_{i} not evaluable at t=0: {exc}")

    messages.extend(_ordering_violations(p))
    ordering_ok = not messages

    try:
        d0 = compute_D0(p)
        if d0 >= 1.0:
            warnings.append(
                f"D(0) = {d0:.6g} >= 1: the sufficient condition D(0) < 1 for a "
                "unique local solution is not met (the scheme may still converge)"
            )
    except KernelDiagonalError as exc:
        d0 = math.inf
        warnings.append(f"D(0) undefined: {exc}")
    except DomainError as exc:
        d0 = math.inf
        messages.append(f"D(0) not evaluable: {exc}")
        ordering_ok = False

    try:
        b = compute_Bj(p)
        for j, bj in enumerate(b):
            if abs(bj) < B_FLAG_TOL:
                warnings.append(
                    f"B({j}) = {bj!r} is (nearly) zero: the solution may contain "
                    "free constants (non-uniqueness risk)"
                )
    except DomainError as exc:
        b = []
        messages.append(f"B(j) not evaluable: {exc}")
        ordering_ok = False

    try:
        den = x0_denominator(p)
        if abs(den) <= 1e-12:
            warnings.append(
                f"x(0) denominator = {den!r} is (nearly) zero: the stepping "
                "solver will refuse this problem"
            )
    except DomainError as exc:
        den = math.nan
        messages.append(f"x(0) denominator not evaluable: {exc}")
        ordering_ok = False

    warnings.extend(_slope_advisories(p))

    return Diagnostics(
        d0=d0,
        x0_denominator=den,
        b=b,
        ordering_ok=ordering_ok,
        messages=messages,
        warnings=warnings,
    )


def _ordering_violations(p: Problem) -> list[str]:
    """Sampled check of 0 < alpha_1(t) < ... < alpha_{n-1}(t) < t on (0, T]."""
    ts = np.linspace(0.0, p.T, ORDERING_SAMPLES + 1)[1:]
    rows = [np.zeros_like(ts)]
    names = ["0"]
    for i, curve in enumerate(p.curves, start=1):
        try:
            vals = np.broadcast_to(np.asarray(evaluate(curve, t=ts)), ts.shape)
        except DomainError as exc:
            return [f"alpha_{i} not evaluable on (0, {p.T}]: {exc}"]
        rows.append(vals)
        names.append(f"alpha_{i}")
    rows.append(ts)
    names.append("t")

    out = []
    for lower, upper, lo_name, up_name in zip(rows, rows[1:], names, names[1:]):
        bad = lower >= upper
        if bad.any():
            t_bad = ts[bad][0]
            out.append(
                f"curve ordering violated: {lo_name}(t) >= {up_name}(t) "
                f"at t = {t_bad!r} (need strict {lo_name} < {up_name} on (0, T])"
            )
    return out


def _slope_advisories(p: Problem) -> list[str]:
    """The stepping theory assumes 0 < alpha_1'(0) <= ... <= alpha_{n-1}'(0) < 1;
    violations are survivable, so they only warn."""
    try:
        slopes = p.curve_slopes_at_origin()
    except DomainError as exc:
        return [f"curve slopes at the origin not evaluable: {exc}"]
    out = []
    if slopes:
        if slopes[0] <= 0.0:
            out.append(f"alpha_1'(0) = {slopes[0]!r} is not positive")
        if any(a > b for a, b in zip(slopes, slopes[1:])):
            out.append(f"curve slopes at the origin are not non-decreasing: {slopes}")
        if slopes[-1] >= 1.0:
            out.append(
                f"alpha_{p.n - 1}'(0) = {slopes[-1]!r} >= 1: the last curve is "
                "tangent to or steeper than the diagonal at the origin"
            )
    return out
