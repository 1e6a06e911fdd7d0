"""Parametric loss scaling law: L(N, D) = E + A/N^alpha + B/D^beta.

N is model parameters in millions, D training tokens in billions; the
fitted constants assume exactly those units.

Fitting: for fixed (alpha, beta) the model is linear in (E, A, B), so the
optimizer is a grid over (alpha, beta) in [0.05, 1.5]^2 at step 0.01 with
a closed-form inner solve, followed by derivative-free refinement of the
best grid point.  The constraints E >= 0, A > 0, B > 0 are handled by
solving every subset of pins (A and B pinned at a tiny positivity floor,
E at zero) and keeping the feasible candidate with the lowest residual
sum of squares; ties at grid level break toward the lowest alpha, then
the lowest beta.  Everything is closed-form numpy arithmetic, so a given
observation table always produces bit-identical fits.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

GRID_START = 0.05
GRID_STOP = 1.50
GRID_STEP = 0.01

#: Positivity floor used when the unconstrained solution would drive A or B
#: to zero or below (e.g. perfectly constant losses).
COEF_FLOOR = 1e-12

_EXP_LIMIT = 2.0  # PowerLawFit accepts exponents in (0, 2)
_MIN_OBSERVATIONS = 6

CSV_HEADER = ("n_params_millions", "d_tokens_billions", "loss")


class UnidentifiableFitError(ValueError):
    """The observations cannot pin down the fit (all N equal or all D equal)."""


class ObservationTableError(ValueError):
    """The observation CSV is malformed."""


@dataclass(frozen=True)
class LossObservation:
    """One training run: N (millions of params), D (billions of tokens), loss."""

    n_params: float
    d_tokens: float
    loss: float

    def __post_init__(self) -> None:
        if not (self.n_params > 0 and self.d_tokens > 0 and self.loss > 0):
            raise ValueError(
                f"observation fields must be positive, got "
                f"({self.n_params}, {self.d_tokens}, {self.loss})"
            )


@dataclass(frozen=True)
class PowerLawFit:
    """Constants of L(N, D) = E + A/N^alpha + B/D^beta."""

    E: float
    A: float
    alpha: float
    B: float
    beta: float

    def __post_init__(self) -> None:
        if not self.E >= 0:
            raise ValueError(f"E must be >= 0, got {self.E}")
        if not (self.A > 0 and self.B > 0):
            raise ValueError(f"A and B must be positive, got A={self.A}, B={self.B}")
        if not (0 < self.alpha < _EXP_LIMIT and 0 < self.beta < _EXP_LIMIT):
            raise ValueError(
                f"exponents must lie in (0, {_EXP_LIMIT}), got "
                f"alpha={self.alpha}, beta={self.beta}"
            )


@dataclass(frozen=True)
class FitReport:
    """A fit plus its diagnostics on the data it was fitted to."""

    fit: PowerLawFit
    r_squared: float
    residuals: tuple[float, ...]  # predicted - actual, per observation


def evaluate(fit: PowerLawFit, n_params: float, d_tokens: float) -> float:
    """Predicted loss at N million parameters and D billion tokens (float64)."""
    if not (n_params > 0 and d_tokens > 0):
        raise ValueError(f"N and D must be positive, got ({n_params}, {d_tokens})")
    return float(fit.E + fit.A * n_params ** -fit.alpha + fit.B * d_tokens ** -fit.beta)


def r_squared(fit: PowerLawFit, observations) -> float:
    """1 - SS_res/SS_tot; for SS_tot = 0, 1.0 if residuals vanish else 0.0."""
    obs = _as_observations(observations)
    if len(obs) < 2:
        raise ValueError(f"r_squared needs at least 2 observations, got {len(obs)}")
    actual = np.array([o.loss for o in obs])
    predicted = np.array([evaluate(fit, o.n_params, o.d_tokens) for o in obs])
    ss_res = float(np.sum((actual - predicted) ** 2))
    ss_tot = float(np.sum((actual - actual.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


def _as_observations(observations) -> list[LossObservation]:
    return [
        o if isinstance(o, LossObservation) else LossObservation(*o) for o in observations
    ]


@dataclass(frozen=True)
class _Sums:
    """Sufficient statistics of the linear inner problem at fixed exponents.

    Every field broadcasts: the grid pass uses u-sums shaped (na, 1) and
    v-sums shaped (1, nb); the scalar path uses plain floats.  Using one
    code path for both keeps grid selection and final solve bit-identical.
    """

    m: float
    SL: float
    SLL: float
    Su: np.ndarray
    Suu: np.ndarray
    SuL: np.ndarray
    Sv: np.ndarray
    Svv: np.ndarray
    SvL: np.ndarray
    Suv: np.ndarray


def _rss(s: _Sums, E, A, B):
    return (
        s.SLL
        + E * E * s.m
        + A * A * s.Suu
        + B * B * s.Svv
        - 2.0 * (E * s.SL + A * s.SuL + B * s.SvL)
        + 2.0 * (E * A * s.Su + E * B * s.Sv + A * B * s.Suv)
    )


def _candidates(s: _Sums):
    """All pin-subset solutions of min RSS s.t. E >= 0, A, B >= floor.

    Returns (rss, E, A, B) arrays with a leading candidate axis; infeasible
    or numerically undefined candidates carry rss = +inf.  Unconstrained
    first, fully pinned last, so index order is a deterministic tie-break
    from least to most constrained.
    """
    f = COEF_FLOOR
    with np.errstate(all="ignore"):
        # free (E, A, B): Cramer on the 3x3 normal equations
        det2uv = s.Suu * s.Svv - s.Suv * s.Suv
        det = (
            s.m * det2uv
            - s.Su * (s.Su * s.Svv - s.Suv * s.Sv)
            + s.Sv * (s.Su * s.Suv - s.Suu * s.Sv)
        )
        e1 = (
            s.SL * det2uv
            - s.Su * (s.SuL * s.Svv - s.Suv * s.SvL)
            + s.Sv * (s.SuL * s.Suv - s.Suu * s.SvL)
        ) / det
        a1 = (
            s.m * (s.SuL * s.Svv - s.SvL * s.Suv)
            - s.SL * (s.Su * s.Svv - s.Suv * s.Sv)
            + s.Sv * (s.Su * s.SvL - s.SuL * s.Sv)
        ) / det
        b1 = (
            s.m * (s.Suu * s.SvL - s.Suv * s.SuL)
            - s.Su * (s.Su * s.SvL - s.SuL * s.Sv)
            + s.SL * (s.Su * s.Suv - s.Suu * s.Sv)
        ) / det

        # E = 0: 2x2 in (A, B)
        a2 = (s.SuL * s.Svv - s.SvL * s.Suv) / det2uv
        b2 = (s.Suu * s.SvL - s.Suv * s.SuL) / det2uv

        # A pinned: 2x2 in (E, B)
        det3 = s.m * s.Svv - s.Sv * s.Sv
        r1 = s.SL - f * s.Su
        r2 = s.SvL - f * s.Suv
        e3 = (r1 * s.Svv - s.Sv * r2) / det3
        b3 = (s.m * r2 - s.Sv * r1) / det3

        # B pinned: 2x2 in (E, A)
        det4 = s.m * s.Suu - s.Su * s.Su
        r1 = s.SL - f * s.Sv
        r2 = s.SuL - f * s.Suv
        e4 = (r1 * s.Suu - s.Su * r2) / det4
        a4 = (s.m * r2 - s.Su * r1) / det4

        # E = 0, A pinned / E = 0, B pinned
        b5 = (s.SvL - f * s.Suv) / s.Svv
        a6 = (s.SuL - f * s.Suv) / s.Suu

        # A and B pinned
        e7 = (s.SL - f * s.Su - f * s.Sv) / s.m

        zero = np.zeros_like(det * 1.0)
        floor = np.full_like(zero, f)
        cand = [
            (e1, a1, b1, (e1 >= 0) & (a1 > 0) & (b1 > 0)),
            (zero, a2, b2, (a2 > 0) & (b2 > 0)),
            (e3, floor, b3, (e3 >= 0) & (b3 > 0)),
            (e4, a4, floor, (e4 >= 0) & (a4 > 0)),
            (zero, floor, b5, b5 > 0),
            (zero, a6, floor, a6 > 0),
            (e7, floor, floor, e7 >= 0),
            (zero, floor, floor, np.ones_like(det, dtype=bool)),
        ]
        rss = np.stack([_rss(s, E, A, B) for E, A, B, _ in cand])
        feasible = np.stack([np.broadcast_to(ok, rss.shape[1:]) for _, _, _, ok in cand])
        rss = np.where(feasible & np.isfinite(rss), rss, np.inf)
        E = np.stack([np.broadcast_to(E, rss.shape[1:]) for E, _, _, _ in cand])
        A = np.stack([np.broadcast_to(A, rss.shape[1:]) for _, A, _, _ in cand])
        B = np.stack([np.broadcast_to(B, rss.shape[1:]) for _, _, B, _ in cand])
    return rss, E, A, B


def _sums_for(N: np.ndarray, D: np.ndarray, L: np.ndarray,
              alphas: np.ndarray, betas: np.ndarray) -> _Sums:
    """Sufficient statistics for every (alpha, beta) pair, broadcast-shaped."""
    U = np.power(N[None, :], -alphas[:, None])  # (na, m)
    V = np.power(D[None, :], -betas[:, None])  # (nb, m)
    return _Sums(
        m=float(len(L)),
        SL=float(np.sum(L)),
        SLL=float(np.sum(L * L)),
        Su=U.sum(axis=1)[:, None],
        Suu=(U * U).sum(axis=1)[:, None],
        SuL=(U * L[None, :]).sum(axis=1)[:, None],
        Sv=V.sum(axis=1)[None, :],
        Svv=(V * V).sum(axis=1)[None, :],
        SvL=(V * L[None, :]).sum(axis=1)[None, :],
        Suv=(U[:, None, :] * V[None, :, :]).sum(axis=2),
    )


def _best_at(s: _Sums) -> tuple[float, float, float, float]:
    """Lowest-RSS feasible candidate at one (alpha, beta): (rss, E, A, B)."""
    rss, E, A, B = _candidates(s)

    def pick(arr: np.ndarray, k: int) -> float:
        return float(arr.reshape(arr.shape[0], -1)[k, 0])

    flat_rss = rss.reshape(rss.shape[0], -1)[:, 0]
    k = int(np.argmin(flat_rss))
    return float(flat_rss[k]), pick(E, k), pick(A, k), pick(B, k)


def fit(observations) -> FitReport:
    """Least-squares fit of (E, A, alpha, B, beta) to loss observations.

    Deterministic: identical observations give an identical FitReport.
    """
    obs = _as_observations(observations)
    if len(obs) < _MIN_OBSERVATIONS:
        raise ValueError(f"need at least {_MIN_OBSERVATIONS} observations, got {len(obs)}")
    N = np.array([o.n_params for o in obs], dtype=np.float64)
    D = np.array([o.d_tokens for o in obs], dtype=np.float64)
    L = np.array([o.loss for o in obs], dtype=np.float64)
    if len(set(N.tolist())) < 2 or len(set(D.tolist())) < 2:
        raise UnidentifiableFitError(
            "observations must span at least 2 distinct N and 2 distinct D"
        )

    steps = int(round((GRID_STOP - GRID_START) / GRID_STEP)) + 1
    alphas = (np.arange(steps) + round(GRID_START / GRID_STEP)) * GRID_STEP
    betas = alphas.copy()

    grid_sums = _sums_for(N, D, L, alphas, betas)
    rss, _, _, _ = _candidates(grid_sums)
    best = rss.min(axis=0)  # (na, nb)
    i, j = np.unravel_index(int(np.argmin(best)), best.shape)
    grid_rss = float(best[i, j])
    grid_point = (float(alphas[i]), float(betas[j]))

    def objective(x: np.ndarray) -> float:
        s = _sums_for(N, D, L, np.array([x[0]]), np.array([x[1]]))
        return _best_at(s)[0]

    eps = 1e-3
    res = minimize(
        objective,
        x0=np.array(grid_point),
        method="Nelder-Mead",
        bounds=[(eps, _EXP_LIMIT - eps)] * 2,
        options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 2000},
    )
    if res.fun < grid_rss:
        alpha, beta = float(res.x[0]), float(res.x[1])
    else:
        alpha, beta = grid_point
    _, E, A, B = _best_at(_sums_for(N, D, L, np.array([alpha]), np.array([beta])))

    law = PowerLawFit(E=max(E, 0.0), A=max(A, COEF_FLOOR), alpha=alpha,
                      B=max(B, COEF_FLOOR), beta=beta)
    residuals = tuple(evaluate(law, o.n_params, o.d_tokens) - o.loss for o in obs)
    return FitReport(fit=law, r_squared=r_squared(law, obs), residuals=residuals)


def read_observations_csv(path) -> list[LossObservation]:
    """Parse `n_params_millions,d_tokens_billions,loss` rows into observations."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row and any(field.strip() for field in row)]
    if not rows:
        raise ObservationTableError("empty observation table")
    header = tuple(field.strip() for field in rows[0])
    if header != CSV_HEADER:
        raise ObservationTableError(
            f"expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}"
        )
    if len(rows) == 1:
        raise ObservationTableError("observation table has a header but no rows")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise ObservationTableError(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            values = [float(field) for field in row]
        except ValueError:
            raise ObservationTableError(
                f"line {lineno}: non-numeric field in {row!r}"
            ) from None
        try:
            out.append(LossObservation(*values))
        except ValueError as exc:
            raise ObservationTableError(f"line {lineno}: {exc}") from None
    return out
