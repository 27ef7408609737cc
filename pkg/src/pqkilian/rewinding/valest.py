"""Value estimation by alternating the win projector and the |+_R> projector.

Two simulation routes produce the same outcome law and post-state law:

``direct``
    Runs every measurement on the reduced workspace with the compiled
    kernel.  Cost is linear in ``t`` so it is meant for moderate ``t``.
``spectral``
    Uses the eigenbasis ``chi_j`` of the value operator.  The Jordan
    subspaces of the two projectors are spanned by ``u (x) chi_j`` and its
    image under the win projector with ``p_j = 1/4 + a_j/2``, so the
    transcript law is a mixture of MWDist(p_j) and the post-state is a
    closed-form combination of the ``chi_j``.  Cost does not depend on ``t``
    (apart from the short tail loop), and the sampler can condition on the
    estimate landing inside or outside a window, which Repair needs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .. import kernels
from ..errors import InvalidParameter, PostSelectionFailed
from ..quantum.alternating import count_repeats
from ..quantum.core import StateVector
from ..rng import as_generator
from .game import GameModel

WINDOW_TOL = 1e-9
_ENUMERATE_LIMIT = 1 << 20


def chernoff_samples(eps: float, delta: float) -> float:
    """``log(1/(2 delta)) / (2 eps^2)`` with the natural log."""
    return math.log(1 / (2 * delta)) / (2 * eps * eps)


@dataclass(frozen=True)
class ValEstParams:
    eps: float
    delta: float

    def __post_init__(self):
        if not (0 < self.eps < 1 and 0 < self.delta < 1):
            raise InvalidParameter("eps and delta must lie in (0, 1)")

    @property
    def t(self) -> int:
        a = math.ceil(chernoff_samples(self.eps / 2, self.delta / 4) / 2)
        b = math.ceil(math.log(self.delta / 2) / math.log(5 / 8))
        return max(a, b, 1)

    def estimate(self, repeats: int) -> float:
        return repeats / self.t - 0.5

    def repeats_of(self, estimate: float) -> int:
        return int(round((estimate + 0.5) * self.t))

    def window(self, estimate: float, width: float | None = None) -> tuple[int, int]:
        """Closed repeat-count interval ``{X : |X/t - 1/2 - estimate| <= width}``."""
        width = self.eps if width is None else width
        t = self.t
        x0 = (estimate + 0.5) * t
        lo = max(0, math.ceil(x0 - t * width - WINDOW_TOL))
        hi = min(2 * t, math.floor(x0 + t * width + WINDOW_TOL))
        return lo, hi


@dataclass
class ValEstOutcome:
    estimate: float
    state: np.ndarray
    repeats: int
    last_bit: int
    tail_steps: int
    tail_ok: bool
    branch: int | None = None
    bits: np.ndarray | None = field(default=None, repr=False)


def _vec(state) -> np.ndarray:
    v = state.data if isinstance(state, StateVector) else np.asarray(state, dtype=complex)
    return v / np.linalg.norm(v)


def window_mass(n: int, p, lo: int, hi: int, inside: bool = True):
    """``Pr[lo <= Bin(n, p) <= hi]`` (or its complement), vectorised over p."""
    p = np.asarray(p, dtype=float)
    if inside:
        if hi < lo:
            return np.zeros_like(p)
        return np.clip(stats.binom.cdf(hi, n, p) - stats.binom.cdf(lo - 1, n, p), 0.0, 1.0)
    below = stats.binom.cdf(lo - 1, n, p) if lo > 0 else np.zeros_like(p)
    above = stats.binom.sf(hi, n, p)
    return np.clip(below + above, 0.0, 1.0)


def _lower_tail(n, p, m, g):
    """Sample Bin(n, p) conditioned on X <= m."""
    u = 1.0 - g.random()
    return int(stats.binom.ppf(u * stats.binom.cdf(m, n, p), n, p))


def sample_binomial(n: int, p: float, g, window: tuple[int, int] | None = None,
                    inside: bool = True) -> int:
    if window is None:
        return int(g.binomial(n, p))
    lo, hi = window
    if inside:
        if hi - lo < _ENUMERATE_LIMIT:
            ks = np.arange(lo, hi + 1)
            lw = stats.binom.logpmf(ks, n, p)
            w = np.exp(lw - lw.max())
            return int(ks[g.choice(len(ks), p=w / w.sum())])
        a, b = stats.binom.cdf(lo - 1, n, p), stats.binom.cdf(hi, n, p)
        return int(stats.binom.ppf(a + (1 - g.random()) * (b - a), n, p))
    below = stats.binom.cdf(lo - 1, n, p) if lo > 0 else 0.0
    above = stats.binom.sf(hi, n, p) if hi < n else 0.0
    if below + above <= 0:
        raise PostSelectionFailed("no mass outside the window")
    if g.random() * (below + above) < below:
        return _lower_tail(n, p, lo - 1, g)
    return n - _lower_tail(n, 1 - p, n - hi - 1, g)


def _tail(p: float, max_pairs: int, g) -> tuple[int, int, bool]:
    """Continue MWDist(p) from a 0 until a |+> outcome equals 1.

    Returns ``(repeats, steps, success)``.
    """
    steps = reps = 0
    bit = 0
    chunk = 64
    while steps < 2 * max_pairs:
        m = min(chunk, 2 * max_pairs - steps)
        flips = (g.random(m) >= p).astype(np.int64)
        seq = (bit + np.cumsum(flips)) % 2
        pos = np.arange(steps + 1, steps + m + 1)
        hit = np.nonzero((pos % 2 == 0) & (seq == 1))[0]
        if hit.size:
            h = hit[0] + 1
            return reps + int(h - flips[:h].sum()), steps + int(h), True
        reps += int(m - flips.sum())
        bit = int(seq[-1])
        steps += m
        chunk *= 2
    return reps, steps, False


class ValEst:
    """The value-estimation measurement for one game model."""

    def __init__(self, model: GameModel, params: ValEstParams, method: str = "spectral"):
        if method not in ("direct", "spectral"):
            raise InvalidParameter(f"unknown method {method!r}")
        self.model = model
        self.params = params
        self.method = method
        a, chi = model.spectrum
        self.a = a
        self.chi = chi
        self.p = 0.25 + a / 2

    @property
    def t(self) -> int:
        return self.params.t

    def measure(self, state, rng=None) -> ValEstOutcome:
        g = as_generator(rng)
        if self.method == "direct":
            return self._direct(_vec(state), g)
        return self.sample(state, g)

    __call__ = measure

    # ------------------------------------------------------------ direct

    def _direct(self, psi: np.ndarray, g) -> ValEstOutcome:
        G, u = self.model.workspace
        d = self.model.dim
        t = self.t
        X = np.kron(u, psi)
        bits, X = kernels.workspace_alternate(G, u, X, d, t, False, g.random(2 * t))
        reps = count_repeats(bits)
        last = int(bits[-1])
        tail_steps, tail_ok = 0, True
        if last == 0:
            tb, X = kernels.workspace_alternate(G, u, X, d, t, True, g.random(2 * t))
            tail_steps = len(tb)
            tail_ok = bool(tb[-1] == 1)
            last = int(tb[-1])
        blocks = X.reshape(len(u), d)
        weights = np.einsum("ij,ij->i", blocks.conj(), blocks).real
        c = int(g.choice(len(u), p=weights / weights.sum()))
        out = blocks[c] / math.sqrt(weights[c])
        return ValEstOutcome(self.params.estimate(reps), out, reps, last, tail_steps, tail_ok,
                             branch=c, bits=bits)

    # ---------------------------------------------------------- spectral

    def acceptance(self, estimate: float, inside: bool = True) -> np.ndarray:
        """Per-eigenvector probability that the estimate falls in the window around ``estimate``."""
        lo, hi = self.params.window(estimate)
        return window_mass(2 * self.t, self.p, lo, hi, inside)

    def acceptance_operator(self, estimate: float) -> np.ndarray:
        """``<0|A_p|0>`` on the game register: ``chi diag(F) chi^dagger``."""
        F = self.acceptance(estimate)
        return (self.chi * F) @ self.chi.conj().T

    def sample(self, state, rng=None, condition: tuple[float, bool] | None = None) -> ValEstOutcome:
        """Spectral ValEst, optionally conditioned on ``(estimate, inside)``."""
        g = as_generator(rng)
        psi = _vec(state)
        t = self.t
        e = self.chi.conj().T @ psi
        w = np.abs(e) ** 2
        window = None
        if condition is not None:
            centre, inside = condition
            window = self.params.window(centre)
            w = w * window_mass(2 * t, self.p, *window, inside=inside)
        total = w.sum()
        if total <= 1e-300:
            raise PostSelectionFailed("conditioning event has zero probability")
        j = int(g.choice(len(w), p=w / total))
        pj = float(self.p[j])
        main = sample_binomial(2 * t, pj, g, window, condition[1] if condition else True)
        reps, flips = main, 2 * t - main
        last = 1 if flips % 2 == 0 else 0
        tail_steps, tail_ok = 0, True
        if last == 0:
            tr, tail_steps, tail_ok = _tail(pj, t, g)
            reps += tr
            flips += tail_steps - tr
            last = int(tail_ok)
        out, branch = self._post_state(e, reps, flips, last, g)
        return ValEstOutcome(self.params.estimate(main), out, main, last, tail_steps, tail_ok, branch)

    def _post_state(self, e, reps, flips, last, g):
        p = self.p
        with np.errstate(divide="ignore"):
            logmag = np.log(np.abs(e)) + 0.5 * reps * np.log(p) + 0.5 * flips * np.log1p(-p)
        finite = np.isfinite(logmag)
        mag = np.zeros_like(p)
        mag[finite] = np.exp(logmag[finite] - logmag[finite].max())
        c = mag * np.exp(1j * np.angle(e))
        c /= np.linalg.norm(c)
        if last == 1:
            return self.chi @ c, None
        # state lies in the |+_R>-rejecting half of every Jordan block
        Y = self.chi @ (c / np.sqrt(p * (1 - p)))
        Yp = self.chi @ (c * np.sqrt(p / (1 - p)))
        G, u = self.model.workspace
        hs = [u[0] * (Y - Yp), -u[1] * Yp]
        hs += [u[2 + r] * (P @ Y - Yp) for r, P in enumerate(self.model.win_projectors)]
        weights = np.array([np.vdot(h, h).real for h in hs])
        b = int(g.choice(len(hs), p=weights / weights.sum()))
        return hs[b] / math.sqrt(weights[b]), b

    def law(self, state) -> tuple[np.ndarray, np.ndarray]:
        """Mixture weights ``|<chi_j|psi>|^2`` and Jordan values ``p_j``."""
        e = self.chi.conj().T @ _vec(state)
        return np.abs(e) ** 2, self.p.copy()


def val_est(model: GameModel, eps: float, delta: float, state, rng=None,
            method: str = "direct") -> ValEstOutcome:
    return ValEst(model, ValEstParams(eps, delta), method).measure(state, rng)
