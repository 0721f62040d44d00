"""Seeded random instance generators.

Randomness comes from numpy's PCG64. Each QP draw phase gets its own child
stream of ``SeedSequence([seed, attempt])`` so that changing, say, the size of
one phase never shifts the numbers drawn in another:

    phase 0: orthogonal factor U (QR of a standard normal matrix)
    phase 1: eigenvalue profile d
    phase 2: planted optimum xbar
    phase 3: multiplier ybar
    phase 4: bound multipliers zbar

Projection instances use a single stream, drawing lower, upper and x0 in that
order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DenseSymmetricMatrix, GeneralizedSimplex, KktCertificate, QpProblem
from .errors import DegenerateInstance

MAX_RETRIES = 10
_QP_PHASES = 5


@dataclass(frozen=True)
class QpInstanceSpec:
    n: int
    cond: float = 1e2
    ratio: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.cond < 1:
            raise ValueError("cond must be >= 1")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError("ratio must lie in (0, 1)")


@dataclass(frozen=True)
class GeneratedQp:
    problem: QpProblem
    xbar: np.ndarray
    ybar: float
    zbar: np.ndarray
    d: np.ndarray
    spec: QpInstanceSpec
    lipschitz: float
    attempt: int = 0

    @property
    def certificate(self):
        return KktCertificate(self.xbar, self.ybar, self.zbar)

    def relerr(self, x):
        return float(np.linalg.norm(x - self.xbar) / (1.0 + np.linalg.norm(self.xbar)))

    def metadata(self):
        return {
            "generator": "qp",
            "n": self.spec.n,
            "cond": self.spec.cond,
            "ratio": self.spec.ratio,
            "seed": self.spec.seed,
            "attempt": self.attempt,
            "lipschitz": self.lipschitz,
            "ybar": self.ybar,
        }


def gen_projection_instance(n, seed=0):
    """Random projection instance: returns (feasible_set, point_to_project)."""
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng(seed)
    lower = np.maximum(0.0, rng.standard_normal(n))
    upper = lower + rng.random(n)
    b = float(np.sum(lower + upper) / 2.0)
    x0 = rng.random(n)
    return GeneralizedSimplex(b, lower, upper), x0


def _eigen_profile(rng, n, cond):
    hi = int(np.floor(cond))
    d = rng.integers(1, hi, size=n, endpoint=True).astype(np.float64)
    i_min = int(np.argmin(d))
    i_max = int(np.argmax(d))
    if i_max == i_min:
        i_max = (i_min + 1) % n
    d[i_min] = 1.0
    d[i_max] = float(cond)
    return d


def gen_qp_instance(spec):
    """QP with a planted KKT triple (xbar, ybar, zbar).

    Q = U Diag(d) U^T / ||U Diag(d) U^T||_F with d integer in [1, cond]
    (one entry forced to 1, one to cond); bounds are tight at xbar on
    {xbar_i <= -ratio} (lower) and {xbar_i >= ratio} (upper), and
    c = -Q xbar + ybar e + zbar.
    """
    n = spec.n
    for attempt in range(MAX_RETRIES + 1):
        phases = np.random.SeedSequence([spec.seed, attempt]).spawn(_QP_PHASES)
        rngs = [np.random.default_rng(s) for s in phases]

        U, _ = np.linalg.qr(rngs[0].standard_normal((n, n)))
        d = _eigen_profile(rngs[1], n, spec.cond)
        Qt = (U * d) @ U.T
        Qt = 0.5 * (Qt + Qt.T)
        fro = float(np.linalg.norm(Qt))
        Q = Qt / fro

        xbar = rngs[2].uniform(-1.0, 1.0, n)
        j_low = xbar <= -spec.ratio
        j_up = xbar >= spec.ratio
        if np.all(j_low | j_up):
            continue
        ybar = float(rngs[3].standard_normal())
        zdraw = rngs[4].random(n)
        zbar = np.where(j_low, zdraw, np.where(j_up, -zdraw, 0.0))

        lower = np.where(j_low, xbar, -1.0)
        upper = np.where(j_up, xbar, 1.0)
        b = float(xbar.sum())
        c = -(Q @ xbar) + ybar + zbar
        problem = QpProblem(DenseSymmetricMatrix(Q), c, GeneralizedSimplex(b, lower, upper))
        return GeneratedQp(
            problem=problem,
            xbar=xbar,
            ybar=ybar,
            zbar=zbar,
            d=d,
            spec=spec,
            lipschitz=float(d.max()) / fro,
            attempt=attempt,
        )
    raise DegenerateInstance(f"no free coordinate after {MAX_RETRIES} retries: {spec}")


def random_spd_qp(n, seed=0, min_eig=0.1, box=(-1.0, 1.0)):
    """Small dense SPD QP on a random generalized simplex (test and oracle use)."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    Q = A @ A.T / n + min_eig * np.eye(n)
    c = rng.standard_normal(n)
    lower = box[0] + 0.5 * rng.random(n)
    upper = box[1] - 0.5 * rng.random(n)
    b = float(lower.sum() + rng.uniform(0.1, 0.9) * (upper.sum() - lower.sum()))
    return QpProblem(DenseSymmetricMatrix(Q), c, GeneralizedSimplex(b, lower, upper))
