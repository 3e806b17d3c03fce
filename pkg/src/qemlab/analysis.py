"""Closed forms and bound evaluation: SSO fidelity, the non-fault-tolerant
Hadamard error rate, the detection threshold 1/(ec+1), and the logical
error / post-selection-rate bounds with their ratio diagnostics.

Binomial tail terms are evaluated through log-gamma and summed in log
space, so block counts up to ~10^4 stay finite and the d ratios can be
compared far below the double-precision underflow of the raw quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import gammaln, logsumexp


@dataclass(frozen=True)
class BoundInputs:
    """(d, t, h, p) describing an encoded run of a t+h gate payload."""

    d: int
    t: int
    h: int
    p: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("distance must be >= 1")
        if self.t < 0 or self.h < 0:
            raise ValueError("gate counts must be nonnegative")
        if not 0.0 <= self.p < 1.0:
            raise ValueError("p must lie in [0, 1)")
        if self.t + self.h < 1:
            raise ValueError("payload must contain at least one gate")

    @property
    def c(self) -> int:
        return self.t + 3 * self.h


@dataclass(frozen=True)
class BoundReport:
    pl_upper: float
    ps_lower: float
    ratio: float
    threshold: float
    below_threshold: bool

    def to_row(self) -> dict:
        return {
            "pl_upper": self.pl_upper,
            "ps_lower": self.ps_lower,
            "ratio": self.ratio,
            "threshold": self.threshold,
            "below_threshold": self.below_threshold,
        }


def sso(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    """Squared statistical overlap (sum_i sqrt(a_i b_i))**2 over the union
    of outcomes; missing keys contribute 0."""
    if not a or not b:
        raise ValueError("sso needs two nonempty distributions")
    for name, dist in (("a", a), ("b", b)):
        if any(v < 0 for v in dist.values()):
            raise ValueError(f"distribution {name} has a negative entry")
        total = sum(dist.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"distribution {name} sums to {total}; renormalize counts first")
    overlap = 0.0
    for key in set(a) | set(b):
        overlap += math.sqrt(a.get(key, 0.0) * b.get(key, 0.0))
    return min(1.0, overlap * overlap)


def normalized(counts: Mapping[str, float]) -> dict[str, float]:
    """Counts -> distribution; drops zero-weight keys."""
    total = sum(counts.values())
    if total <= 0:
        raise ValueError("cannot normalize an empty histogram")
    return {k: v / total for k, v in counts.items() if v > 0}


def nonft_h_logical_error(p: float) -> float:
    """Post-selected logical error rate of the 2-qubit encoded circuit
    |+>_L -> noisy non-FT H, with mixing-convention depolarizing of rate p
    on each gate: p(2 + (-2 + p)p) / (2 + 2(-1 + p)p)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return p * (2.0 + (-2.0 + p) * p) / (2.0 + 2.0 * (-1.0 + p) * p)


def threshold(c: int) -> float:
    """Physical error rate below which the d ratio diagnostics shrink: 1/(ec+1)."""
    if c < 1:
        raise ValueError("c must be >= 1")
    return 1.0 / (math.e * c + 1.0)


def _log_binom_pmf(n: int, j: np.ndarray, p: float) -> np.ndarray:
    logc = gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1)
    with np.errstate(divide="ignore"):
        return logc + j * np.log(p) + (n - j) * np.log1p(-p)


def _log_pl_upper(d: int, c: int, h: int, p: float) -> float:
    if p == 0.0:
        return -math.inf
    n = c * d
    parts = []
    if n >= d:
        j = np.arange(d, n + 1, dtype=float)
        parts.append(logsumexp(_log_binom_pmf(n, j, p)))
    if h > 0:
        pd = p ** d
        m = np.arange(1, h + 1, dtype=float)
        parts.append(logsumexp(_log_binom_pmf(h, m, pd)))
    if not parts:
        return -math.inf
    return float(logsumexp(parts))


def _log_ps_lower(d: int, c: int, h: int, p: float) -> float:
    return c * d * math.log1p(-p) + h * math.log1p(-(p ** d))


def pl_upper(d: int, c: int, h: int, p: float) -> float:
    """Upper bound on the logical error rate of a d-encoded c-budget run:

        sum_{j=d}^{cd} C(cd,j) p^j (1-p)^(cd-j)
      + sum_{m=1}^{h}  C(h,m) (p^d)^m (1-p^d)^(h-m)

    Returned raw (it is only a bound and may exceed 1).
    """
    _validate_bound_args(d, c, h, p)
    return math.exp(_log_pl_upper(d, c, h, p))


def ps_lower(d: int, c: int, h: int, p: float) -> float:
    """Lower bound on the post-selection rate: probability of no fault,
    (1-p)^(cd) (1-p^d)^h."""
    _validate_bound_args(d, c, h, p)
    return math.exp(_log_ps_lower(d, c, h, p))


def _validate_bound_args(d: int, c: int, h: int, p: float) -> None:
    if d < 1 or c < 1 or h < 0:
        raise ValueError("need d >= 1, c >= 1, h >= 0")
    if not 0.0 <= p < 1.0:
        raise ValueError("p must lie in [0, 1)")


def ratio_report(inputs: BoundInputs) -> BoundReport:
    """Evaluate both bounds and their ratio for one (d, t, h, p) point.

    The ratio is computed in log space, so it stays meaningful when both
    bounds underflow doubles.
    """
    d, c, h, p = inputs.d, inputs.c, inputs.h, inputs.p
    log_pl = _log_pl_upper(d, c, h, p)
    log_ps = _log_ps_lower(d, c, h, p)
    ratio = 0.0 if log_pl == -math.inf else math.exp(log_pl - log_ps)
    thr = threshold(c)
    return BoundReport(
        pl_upper=math.exp(log_pl) if log_pl > -math.inf else 0.0,
        ps_lower=math.exp(log_ps),
        ratio=ratio,
        threshold=thr,
        below_threshold=p < thr,
    )


def min_d_for_epsilon(c: int, h: int, p: float, epsilon: float, *, d_cap: int = 199) -> int:
    """Smallest odd d whose bound ratio drops below epsilon.

    Requires p below the threshold for this c; searches odd d only (where
    majority decoding is meaningful) up to d_cap.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if p >= threshold(c):
        raise ValueError(
            f"p={p} is not below the threshold {threshold(c):.6f} for c={c}")
    t = max(c - 3 * h, 0)
    if t + 3 * h != c:
        raise ValueError("c - 3h must be nonnegative to recover a gate split")
    for d in range(1, d_cap + 1, 2):
        report = ratio_report(BoundInputs(d=d, t=t, h=h, p=p))
        if report.ratio < epsilon:
            return d
    raise ValueError(f"no odd d <= {d_cap} reaches ratio < {epsilon}")


def monotonicity_check(m_max: int, c_max: int) -> bool:
    """Exhaustively verify 1 < (ec+1)^m (1 - 1/(ec+1))^c on the integer grid
    1 <= m <= m_max, 1 <= c <= c_max."""
    if m_max < 1 or c_max < 1:
        raise ValueError("grid bounds must be >= 1")
    for c in range(1, c_max + 1):
        base = math.e * c + 1.0
        log_factor = c * math.log1p(-1.0 / base)
        for m in range(1, m_max + 1):
            if m * math.log(base) + log_factor <= 0.0:
                return False
    return True
