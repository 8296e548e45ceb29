"""Throughput bounds for one adaptive user sharing a channel with one legacy user.

The lower bound comes from the back-off-after-collision randomized policy
(``pi_lb``); the upper bound from the stochastic shortest path (SSP) over the
largest backlog the legacy queue could hold, ``W``. Every closed form here has
a numerical twin used as an oracle in the tests:

===========================  =================================
closed form                  oracle
===========================  =================================
:func:`lower_bound_throughput`  :func:`pi_lb_steady_state`
:func:`v1_closed_form`          :func:`solve_bellman_linear`
:func:`sigma_star`              :func:`value_iteration_oracle`
===========================  =================================
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

HALF_BRANCH_EPS = 1e-9
DEFAULT_Y_CAP = 10_000
PLATEAU_RUN = 64


class DomainError(ValueError):
    pass


class SearchCapError(RuntimeError):
    """The Y search reached its cap without observing a decrease."""


class ConvergenceError(RuntimeError):
    pass


def _check_rate(lam: float, *, open_interval: bool = False) -> float:
    lam = float(lam)
    if open_interval:
        if not 0.0 < lam < 1.0:
            raise DomainError(f"rate must lie in (0, 1), got {lam}")
    elif not 0.0 <= lam <= 1.0:
        raise DomainError(f"rate must lie in [0, 1], got {lam}")
    return lam


def lower_bound_throughput(lam: float) -> float:
    """Adaptive throughput of ``pi_lb`` at its best transmit probability."""
    lam = _check_rate(lam)
    if lam == 0.0:
        return 1.0
    if lam == 1.0:
        return 0.0
    if lam <= 1.0 / 3.0:
        return 1.0 - 2.0 * lam
    return (1.0 - lam) ** 2 / (4.0 * lam)


def optimal_transmit_prob(lam: float) -> float:
    lam = _check_rate(lam)
    if lam <= 1.0 / 3.0:
        return 1.0
    return (1.0 - lam) / (2.0 * lam)


def _v1_exact(lam: Fraction, y: int) -> Fraction:
    if abs(lam - Fraction(1, 2)) < HALF_BRANCH_EPS:
        half = Fraction(1, 2)
        return (half ** (y - 1) + y - Fraction(3, 2)) / (half ** y - half)
    q = 1 - lam
    num = (2 - 4 * lam) * (lam * q) ** (y - 1) + 2 * lam * q ** (y - 1) - lam ** (y - 1)
    den = (1 - 2 * lam) * (lam ** (y - 1) - 1) * q ** (y - 1)
    return num / den


def _to_float(x: Fraction) -> float:
    try:
        return float(x)
    except OverflowError:
        return -math.inf if x < 0 else math.inf


def _check_y(y) -> int:
    if int(y) != y or y < 2:
        raise DomainError(f"Y must be an integer >= 2, got {y}")
    return int(y)


def v1_closed_form(lam: float, y: int) -> float:
    """Cost-to-go of state 1 under the threshold policy that first idles at ``y``.

    Evaluated in exact rational arithmetic on the binary value of ``lam`` and
    rounded once, so the result is the double nearest the true value. The
    ``lam = 1/2`` formula is used whenever ``|lam - 1/2| < 1e-9``.
    """
    lam = _check_rate(lam, open_interval=True)
    return _to_float(_v1_exact(Fraction(lam), _check_y(y)))


def solve_bellman_linear(lam: float, y: int) -> np.ndarray:
    """Solve the policy-evaluation equations of the threshold policy; returns ``V(0..y)``.

    States ``1..y-1`` transmit, state ``y`` idles, ``V(0) = 0``. Row ``x`` of
    the transmit equations is the first to involve ``V(x + 1)``, so forward
    substitution writes every ``V(x)`` as ``a_x + b_x V(1)`` and the idle
    equation then fixes ``V(1)``. The arithmetic is exact: in floating point
    this system has condition number of order ``|V(1)|``, which reaches 1e50
    for ``lam`` near 1.
    """
    lam = _check_rate(lam, open_interval=True)
    y = _check_y(y)
    lam = Fraction(lam)
    q = 1 - lam
    a = [Fraction(0)] * (y + 1)
    b = [Fraction(0)] * (y + 1)
    b[1] = Fraction(1)
    for x in range(1, y):
        # V(x) = sum_{k=1..x} lam q^(x-k) (V(k+1) - 2); isolate the k = x term
        rest_a = sum((lam * q ** (x - k) * (a[k + 1] - 2) for k in range(1, x)), Fraction(0))
        rest_b = sum((lam * q ** (x - k) * b[k + 1] for k in range(1, x)), Fraction(0))
        a[x + 1] = (a[x] - rest_a) / lam + 2
        b[x + 1] = (b[x] - rest_b) / lam
    # V(y) = q^y (V(1) - 1) + sum_{k=1..y} lam q^(y-k) (V(k) - 1)
    weights = [lam * q ** (y - k) for k in range(1, y + 1)]
    coef = b[y] - q ** y - sum(w * b[k] for w, k in zip(weights, range(1, y + 1)))
    const = -q ** y + sum(w * (a[k] - 1) for w, k in zip(weights, range(1, y + 1))) - a[y]
    if coef == 0:
        raise ConvergenceError(f"Bellman system singular at lambda={float(lam)}, Y={y}")
    v1 = const / coef
    return np.array([0.0] + [_to_float(a[x] + b[x] * v1) for x in range(1, y + 1)])


def _v1_float(lam: float, y: int) -> float:
    # general branch divided through by (1 - lam)^(y - 1)
    if abs(lam - 0.5) < HALF_BRANCH_EPS:
        return (0.5 ** (y - 1) + y - 1.5) / (0.5 ** y - 0.5)
    try:
        lp = lam ** (y - 1)
        num = (2.0 - 4.0 * lam) * lp + 2.0 * lam - (lam / (1.0 - lam)) ** (y - 1)
        return num / ((1.0 - 2.0 * lam) * (lp - 1.0))
    except OverflowError:
        return -math.inf


def sigma_star(lam: float, y_cap: int = DEFAULT_Y_CAP) -> tuple[float, int]:
    """Maximise V(1) over the threshold ``Y`` by a linear search.

    V(1) is unimodal in Y, so the search ends at the first strict decrease of
    the double-precision values. For small ``lam`` the curve flattens below
    one ulp long before it turns (the true maximiser sits near ``ln 2 / lam``);
    a run of ``PLATEAU_RUN`` identical values is then taken as the maximum.
    The returned value is the correctly rounded V(1) at the chosen ``Y``.
    """
    lam = _check_rate(lam, open_interval=True)
    if y_cap < 3:
        raise DomainError("y_cap must be at least 3")
    best_y = 2
    prev = _v1_float(lam, 2)
    run = 0
    for y in range(3, y_cap + 1):
        cur = _v1_float(lam, y)
        if cur < prev:
            return v1_closed_form(lam, best_y), best_y
        if cur == prev:
            run += 1
            if run >= PLATEAU_RUN:
                return v1_closed_form(lam, best_y), best_y
        else:
            run = 0
            best_y = y
        prev = cur
    raise SearchCapError(f"no decrease of V(1) observed up to Y={y_cap} at lambda={lam}")


def upper_bound_throughput(lam: float, y_cap: int = DEFAULT_Y_CAP) -> float:
    lam = _check_rate(lam)
    if lam == 0.0:
        return 1.0
    if lam == 1.0:
        return 0.0
    sigma, _ = sigma_star(lam, y_cap)
    return 1.0 / (1.0 - sigma)


@dataclass(frozen=True)
class BoundsResult:
    lam: float
    mu_lb: float
    p_star: float
    sigma_star: float
    y_star: int
    mu_ub: float


def bounds_result(lam: float, y_cap: int = DEFAULT_Y_CAP) -> BoundsResult:
    """All bound quantities for one rate; the endpoints 0 and 1 are constants."""
    lam = _check_rate(lam)
    if lam == 0.0:
        return BoundsResult(0.0, 1.0, 1.0, 0.0, 2, 1.0)
    if lam == 1.0:
        return BoundsResult(1.0, 0.0, 0.0, -math.inf, 2, 0.0)
    sigma, y_star = sigma_star(lam, y_cap)
    return BoundsResult(lam, lower_bound_throughput(lam), optimal_transmit_prob(lam),
                        sigma, y_star, 1.0 / (1.0 - sigma))


# -- SSP model and value iteration ------------------------------------------

def transition_probs(lam: float, x: int, transmit: bool) -> dict[int, float]:
    """Untruncated next-state law of the SSP from state ``x >= 1``."""
    q = 1.0 - lam
    if transmit:
        out = {0: q ** x}
        for y in range(2, x + 2):
            out[y] = lam * q ** (x + 1 - y)
    else:
        out = {1: q ** (x - 1)}
        for y in range(2, x + 1):
            out[y] = lam * q ** (x - y)
    return out


@dataclass(frozen=True)
class SspModel:
    """SSP truncated at ``x_max``; mass that would leave is lumped onto ``x_max``.

    Row ``x`` of ``p_tx``/``p_idle`` is the next-state law; ``r_tx``/``r_idle``
    the expected one-stage reward. State 0 is absorbing with zero reward.
    """

    lam: float
    x_max: int
    p_tx: np.ndarray
    p_idle: np.ndarray
    r_tx: np.ndarray
    r_idle: np.ndarray


def ssp_model(lam: float, x_max: int) -> SspModel:
    lam = _check_rate(lam, open_interval=True)
    n = x_max + 1
    p_tx = np.zeros((n, n))
    p_idle = np.zeros((n, n))
    p_tx[0, 0] = p_idle[0, 0] = 1.0
    for x in range(1, n):
        for y, pr in transition_probs(lam, x, True).items():
            p_tx[x, min(y, x_max)] += pr
        for y, pr in transition_probs(lam, x, False).items():
            p_idle[x, min(y, x_max)] += pr
    x = np.arange(n)
    r_tx = -2.0 * (1.0 - (1.0 - lam) ** x)
    r_idle = -np.ones(n)
    r_tx[0] = r_idle[0] = 0.0
    return SspModel(lam, x_max, p_tx, p_idle, r_tx, r_idle)


def _value_iteration(model: SspModel, tol: float, max_iter: int) -> np.ndarray:
    v = np.zeros(model.x_max + 1)
    for _ in range(max_iter):
        new = np.maximum(model.r_tx + model.p_tx @ v, model.r_idle + model.p_idle @ v)
        new[0] = 0.0
        if np.max(np.abs(new - v)) < tol:
            return new
        v = new
    raise ConvergenceError(f"value iteration did not converge in {max_iter} sweeps")


def value_iteration_oracle(lam: float, x_max: int = 200, tol: float = 1e-10,
                           max_iter: int = 2_000_000, auto_extend: bool = True,
                           x_max_limit: int = 6400) -> float:
    """Optimal V(1) of the truncated SSP by plain value iteration over both actions."""
    lam = _check_rate(lam, open_interval=True)
    if x_max < 50:
        raise DomainError("x_max must be at least 50")
    v1 = _value_iteration(ssp_model(lam, x_max), tol, max_iter)[1]
    while auto_extend and 2 * x_max <= x_max_limit:
        wider = _value_iteration(ssp_model(lam, 2 * x_max), tol, max_iter)[1]
        x_max *= 2
        if abs(wider - v1) <= tol:
            return wider
        v1 = wider
    return v1


# -- pi_lb Markov chain -----------------------------------------------------

class SteadyState(NamedTuple):
    throughput: float
    expected_backlog: float
    tail_mass: float
    warning: Optional[str] = None


def pi_lb_chain(lam: float, p: float, truncation: int) -> np.ndarray:
    """Transition matrix over (legacy backlog at slot start, backing-off flag).

    State index is ``2 * q + b``. Within a slot: arrival, decision, resolution.
    """
    k = truncation
    n = 2 * (k + 1)
    mat = np.zeros((n, n))
    for q in range(k + 1):
        for b in (0, 1):
            s = 2 * q + b
            for q_arr, pa in ((min(q + 1, k), lam), (q, 1.0 - lam)):
                if pa == 0.0:
                    continue
                p_tx = 0.0 if b else p
                if q_arr == 0:
                    mat[s, 0] += pa
                else:
                    mat[s, 2 * q_arr + 1] += pa * p_tx
                    mat[s, 2 * (q_arr - 1)] += pa * (1.0 - p_tx)
    return mat


def pi_lb_steady_state(lam: float, p: float, truncation: int = 500,
                       tail_tol: float = 1e-8) -> SteadyState:
    """Stationary throughput and legacy backlog of ``pi_lb`` with transmit probability ``p``."""
    lam = _check_rate(lam, open_interval=True)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if truncation < 10:
        raise DomainError("truncation must be at least 10")
    mat = pi_lb_chain(lam, p, truncation)
    n = mat.shape[0]
    a = mat.T - np.eye(n)
    a[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError("stationary system is singular") from exc
    if not np.all(np.isfinite(pi)):
        raise ConvergenceError("stationary solve produced non-finite values")
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    q = np.repeat(np.arange(truncation + 1), 2)
    throughput = pi[0] * (1.0 - lam) * p
    tail = pi[-2] + pi[-1]
    warning = "tail_mass" if tail > tail_tol else None
    return SteadyState(float(throughput), float(q @ pi), float(tail), warning)
