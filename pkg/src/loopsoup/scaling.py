"""Discrete renewal law of the closed edges, its conditioning to hit a level,
the limiting subordinator, and the h-transform bridge conditioned to
terminate at 1.

The renewal hitting probabilities are
    C(m) = ((1 - e^{-2r}) / (1 - e^{-2(m+1)r}))^alpha,    C(0) = 1,
with the r = 0 limit C(m) = (m+1)^{-alpha}.  The jump pmf w solves the
renewal equation C(m) = sum_j w(j) C(m-j) and may be defective (mass
escaping to infinity); conditioning on hitting a level renormalizes it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import QuadratureSpec, integrate, log_gamma, log_sinh


def hitting_coefficients(alpha: float, r: float, N: int) -> np.ndarray:
    """C(0..N): probability that the renewal set contains m, given it contains 0."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    if N < 1:
        raise ValueError("N must be at least 1")
    m = np.arange(N + 1, dtype=float)
    if r == 0.0:
        return (m + 1.0) ** (-alpha)
    return (np.expm1(-2.0 * r) / np.expm1(-2.0 * (m + 1.0) * r)) ** alpha


def invert_renewal(C: np.ndarray) -> np.ndarray:
    """Jump pmf w(1..N) from hitting probabilities via the renewal recursion.

    w[0] is 0 by convention.  Raises if any w(m) < -1e-12, which signals an
    inconsistent C sequence.
    """
    C = np.asarray(C, dtype=float)
    if abs(C[0] - 1.0) > 1e-12:
        raise ValueError("C(0) must equal 1")
    N = C.size - 1
    w = np.zeros(N + 1)
    for m in range(1, N + 1):
        w[m] = C[m] - np.dot(w[1:m], C[m - 1:0:-1])
    if w.min() < -1e-12:
        raise ValueError(f"negative jump mass {w.min():.3e}: inconsistent C")
    np.clip(w, 0.0, None, out=w)
    return w


@dataclass(frozen=True)
class RenewalLaw:
    """Renewal jump law with precomputed hitting probabilities up to a horizon."""

    alpha: float
    r: float
    horizon: int
    C: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)

    @staticmethod
    def build(alpha: float, r: float, horizon: int) -> "RenewalLaw":
        C = hitting_coefficients(alpha, r, horizon)
        w = invert_renewal(C)
        return RenewalLaw(alpha=alpha, r=r, horizon=horizon, C=C, w=w)

    def conditioned_jump_pmf(self, state: int, n: int) -> np.ndarray:
        """pmf over jumps 1..n-state for the process conditioned to hit n."""
        gap = n - state
        probs = self.w[1:gap + 1] * self.C[gap - 1::-1]
        return probs / self.C[gap]


def sample_conditioned_renewal(law: RenewalLaw, n: int, rng) -> np.ndarray:
    """One increasing renewal path 0 = s_0 < ... < s_k = n conditioned to hit n.

    From state m the next jump j has probability w(j) C(n-m-j) / C(n-m); the
    cumulative weights are scanned in blocks so the cost per jump is
    proportional to the jump size, not to n.
    """
    if n > law.horizon:
        raise ValueError("n exceeds the precomputed horizon")
    if np.min(law.C[:n + 1]) <= 0.0:
        raise ValueError("C must be positive up to n")
    rng = np.random.default_rng(rng)
    w, C = law.w, law.C
    path = [0]
    m = 0
    block = 4096
    while m < n:
        gap = n - m
        target = rng.random() * C[gap]
        acc = 0.0
        jump = gap  # fallback: numerical slack pushes us to the full gap
        for lo in range(1, gap + 1, block):
            hi = min(lo + block - 1, gap)
            seg = w[lo:hi + 1] * C[gap - lo::-1][:hi - lo + 1]
            csum = np.cumsum(seg)
            if acc + csum[-1] >= target:
                jump = lo + int(np.searchsorted(acc + csum, target))
                break
            acc += csum[-1]
        m += jump
        path.append(m)
    return np.asarray(path, dtype=np.int64)


def sample_renewal_overshoot(law: RenewalLaw, level: int, n_paths: int, rng) -> np.ndarray:
    """First renewal points strictly above `level` for unconditioned paths.

    Vectorized over paths; jumps are drawn by inverse cdf of w.  Requires a
    non-defective w (r > 0).
    """
    rng = np.random.default_rng(rng)
    cum = np.cumsum(law.w)
    if cum[-1] < 1.0 - 1e-4:
        raise ValueError("defective jump law: overshoot may never happen")
    pos = np.zeros(n_paths, dtype=np.int64)
    active = np.arange(n_paths)
    while active.size:
        jumps = np.searchsorted(cum, rng.random(active.size) * cum[-1], side="left")
        pos[active] += jumps
        active = active[pos[active] <= level]
    return pos


# ---------------------------------------------------------------------------
# limiting subordinator
# ---------------------------------------------------------------------------

_SERIES_SWITCH = 1e-6  # use kappa -> 0 expansions when sqrt(kappa)*scale < this


@dataclass(frozen=True)
class SubordinatorLaw:
    """Increasing pure-jump process with potential density
    u(x) = (2 sqrt(k) / (1 - e^{-2 sqrt(k) x}))^alpha (x^{-alpha} at k = 0)."""

    kappa: float
    alpha: float

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError("kappa must be nonnegative")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    @property
    def _s(self) -> float:
        return math.sqrt(self.kappa)

    def potential_density(self, x: float) -> float:
        """u(x) for x > 0; diverges like x^{-alpha} at 0 (zero drift)."""
        if x <= 0.0:
            raise ValueError("x must be positive")
        s = self._s
        if s * x < _SERIES_SWITCH:
            # (2s/(1-e^{-2sx}))^a = x^{-a} (1 + sx + O((sx)^2))^a
            return x ** -self.alpha * math.exp(self.alpha * s * x)
        return (2.0 * s / -math.expm1(-2.0 * s * x)) ** self.alpha

    def levy_density(self, t: float) -> float:
        """Density of the jump intensity measure at t > 0."""
        if t <= 0.0:
            raise ValueError("t must be positive")
        a, s = self.alpha, self._s
        pref = (1.0 - a) * math.sin(a * math.pi) / math.pi
        if s * t < _SERIES_SWITCH:
            # e^{2s(a-1)t} (2s/(1-e^{-2st}))^{2-a} = t^{a-2} e^{a s t} (1 + O((st)^2))
            return pref * t ** (a - 2.0) * math.exp(a * s * t)
        return pref * math.exp(2.0 * s * (a - 1.0) * t) * (2.0 * s / -math.expm1(-2.0 * s * t)) ** (2.0 - a)

    def levy_tail(self, t: float) -> float:
        """Mass of jumps exceeding t > 0."""
        if t <= 0.0:
            raise ValueError("t must be positive")
        a, s = self.alpha, self._s
        pref = math.sin(a * math.pi) / math.pi
        if s * t < _SERIES_SWITCH:
            ratio = t * math.exp(s * t)  # expm1(2st)/(2s) to first order
        elif 2.0 * s * t > 700.0:
            return pref * math.exp((a - 1.0) * 2.0 * s * t) * (2.0 * s) ** (1.0 - a)
        else:
            ratio = math.expm1(2.0 * s * t) / (2.0 * s)
        return pref * ratio ** (a - 1.0)

    def laplace_exponent(self, lam: float) -> float:
        """Phi(lambda) = (2 sqrt(k))^{1-alpha} / Beta(lambda/(2 sqrt(k)), 1-alpha).

        The kappa -> 0 regime uses the asymptotic Beta expansion, giving the
        stable limit lambda^{1-alpha} / Gamma(1-alpha).
        """
        if lam <= 0.0:
            raise ValueError("lambda must be positive")
        a, s = self.alpha, self._s
        b = 1.0 - a
        if s == 0.0 or lam / (2.0 * s) > 1e6:
            # Gamma(x+b)/Gamma(x) = x^b (1 + b(b-1)/(2x) + b(b-1)(b-2)(3b-1)/(24x^2) + ...)
            # avoids the cancellation of two huge log-gammas; error O(x^-3)
            corr = 1.0
            if s > 0.0:
                x = lam / (2.0 * s)
                corr += (b * (b - 1.0) / (2.0 * x)
                         + b * (b - 1.0) * (b - 2.0) * (3.0 * b - 1.0) / (24.0 * x * x))
            return lam ** b * corr * math.exp(-log_gamma(b))
        x = lam / (2.0 * s)
        log_beta_val = log_gamma(x) + log_gamma(b) - log_gamma(x + b)
        return (2.0 * s) ** b * math.exp(-log_beta_val)

    def hitting_density(self, a: float, x: float) -> float:
        """Density at x of the position when first exceeding level a (0 < a < x).

        No atom sits at a itself; the closed form is
        (sqrt(k)/pi) sin(alpha pi) e^{alpha sqrt(k) x} sinh(sqrt(k) a)^{1-alpha}
          / (sinh(sqrt(k) x) sinh(sqrt(k)(x-a))^{1-alpha}).
        """
        if a <= 0.0:
            raise ValueError("level must be positive")
        if x <= a:
            return 0.0
        al, s = self.alpha, self._s
        pref = math.sin(al * math.pi) / math.pi
        if s * x < _SERIES_SWITCH:
            return pref * a ** (1.0 - al) / (x * (x - a) ** (1.0 - al))
        log_val = (math.log(s) + al * s * x + (1.0 - al) * log_sinh(s * a)
                   - log_sinh(s * x) - (1.0 - al) * log_sinh(s * (x - a)))
        return pref * math.exp(log_val)

    def hitting_cdf_grid(self, a: float, xs: np.ndarray) -> np.ndarray:
        """Cumulative hitting law on an increasing grid starting at a.

        The density has an (x - a)^(alpha - 1) singularity at the level, so the
        integration runs in the variable t = (x - a)^alpha where the
        transformed integrand is bounded; trapezoid sums are then accurate.
        """
        al = self.alpha
        ts = (xs - a) ** al
        # keep x - a above float resolution of a so the t -> 0 limit evaluates
        t_floor = (1e-12 * max(a, 1.0)) ** al

        def transformed(t):
            # the integrand tends to a positive constant as t -> 0
            t = max(t, t_floor)
            x = a + t ** (1.0 / al)
            return self.hitting_density(a, x) * t ** (1.0 / al - 1.0) / al

        vals = np.array([transformed(t) for t in ts])
        cdf = np.concatenate([[0.0], np.cumsum((vals[1:] + vals[:-1]) / 2.0 * np.diff(ts))])
        return np.minimum(cdf, 1.0)


@dataclass(frozen=True)
class ConditionedBridgeLaw:
    """Subordinator h-transformed to have left limit 1 at its lifetime.

    Semigroup weight u(1-y)/u(1-x); realized for sampling as the discrete
    renewal path conditioned to hit an internal resolution, rescaled to [0, 1].
    """

    base: SubordinatorLaw

    def bridge_weight(self, x: float, y: float) -> float:
        """h-transform weight u(1-y)/u(1-x) for 0 <= x <= y < 1."""
        if not 0.0 <= x <= y:
            raise ValueError("need 0 <= x <= y")
        if y >= 1.0:
            raise ValueError("the bridge lives strictly below 1")
        if x == y:
            return 1.0
        return self.base.potential_density(1.0 - y) / self.base.potential_density(1.0 - x)

    def renewal_approximation(self, n_approx: int) -> RenewalLaw:
        """Discrete renewal law at resolution n_approx matching this bridge."""
        r = math.sqrt(self.base.kappa) / n_approx
        return RenewalLaw.build(self.base.alpha, r, n_approx)

    def sample_bridge_path(self, n_approx: int, rng,
                           law: RenewalLaw | None = None) -> np.ndarray:
        """One sampled path range as scaled points in [0, 1], ending exactly at 1."""
        if law is None:
            law = self.renewal_approximation(n_approx)
        path = sample_conditioned_renewal(law, n_approx, rng)
        return path / float(n_approx)


def bridge_crossing_joint_density(kappa: float, alpha: float, a: float, b: float,
                                  x: float, y: float) -> float:
    """Joint density, under the bridge law, of (position when first exceeding a,
    1 - position just before first exceeding 1-b), at (x, y).

    Supported on the chain 0 < a < x < 1-y < 1-b < 1; zero elsewhere.
    """
    if not (0.0 < a and 0.0 < b and a + b < 1.0):
        raise ValueError("need a, b > 0 with a + b < 1")
    if not (a < x < 1.0 - y < 1.0 - b):
        return 0.0
    s = math.sqrt(kappa)
    if s == 0.0:
        raise ValueError("requires kappa > 0")
    sin_a = math.sin(alpha * math.pi)
    log_val = (math.log(kappa) - 2.0 * math.log(math.pi) + 2.0 * math.log(sin_a)
               + alpha * log_sinh(s)
               - alpha * log_sinh(s * (1.0 - x - y))
               - log_sinh(s * x) - log_sinh(s * y)
               + (1.0 - alpha) * (log_sinh(s * a) + log_sinh(s * b)
                                  - log_sinh(s * (x - a)) - log_sinh(s * (y - b))))
    return math.exp(log_val)


# ---------------------------------------------------------------------------
# half-line facts at kappa = 0
# ---------------------------------------------------------------------------

def halfline_gap_pgf(alpha: float, s: float) -> float:
    """Generating function of the first closed-edge gap on the unkilled half-line.

    Equals 1 - s / Li_alpha(s) for 0 < s < 1.
    """
    from .numerics import polylog

    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    return 1.0 - s / polylog(alpha, s)


def escape_probability(alpha: float) -> float:
    """P[the first gap is infinite] = 1 / zeta(alpha), for alpha > 1."""
    from .numerics import riemann_zeta

    if alpha <= 1.0:
        raise ValueError("escape requires alpha > 1")
    return 1.0 / riemann_zeta(alpha)
