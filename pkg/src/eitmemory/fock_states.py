"""Truncated Fock-space states and their photon-number statistics."""

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln, ndtr
from scipy.stats import poisson

from .errors import TruncationError

EPS_TRUNC = 1e-12
MAX_MEAN_PHOTONS = 400.0
NORM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class StoredState:
    """Normalised amplitudes ``C_n`` for ``n = 0 .. n_max``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).ravel()
        if amps.size == 0:
            raise ValueError("a state needs at least one amplitude")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised (sum |C_n|^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize=True):
        amps = np.asarray(amplitudes, dtype=np.complex128).ravel()
        if normalize:
            norm = np.sqrt(np.sum(np.abs(amps) ** 2))
            if norm == 0.0:
                raise ValueError("cannot normalise the zero vector")
            amps = amps / norm
        return cls(amps)

    @property
    def n_max(self) -> int:
        return self.amplitudes.size - 1

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_dict(self):
        return {
            "n_max": self.n_max,
            "amplitudes": [[float(c.real), float(c.imag)] for c in self.amplitudes],
        }

    @classmethod
    def from_dict(cls, doc):
        pairs = doc["amplitudes"]
        if len(pairs) != int(doc["n_max"]) + 1:
            raise ValueError("n_max does not match the number of amplitudes")
        amps = np.array([complex(re, im) for re, im in pairs])
        return cls.from_amplitudes(amps, normalize=True)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "StoredState":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class PhotonStats:
    mean: float
    variance: float
    central_moments: np.ndarray = field(repr=False)


def _truncate(amps, eps):
    """Cut at the smallest n_max whose tail mass is below ``eps``; renormalise."""
    p = np.abs(amps) ** 2
    p = p / p.sum()
    # beyond[n] = mass strictly above n
    beyond = np.concatenate([np.cumsum(p[::-1])[::-1][1:], [0.0]])
    n_max = int(np.argmax(beyond < eps))
    kept = amps[: n_max + 1]
    return kept / np.sqrt(np.sum(np.abs(kept) ** 2))


def _coherent_amplitudes(alpha: complex, n_cap: int) -> np.ndarray:
    n = np.arange(n_cap + 1)
    r = abs(alpha)
    if r == 0.0:
        out = np.zeros(n_cap + 1, dtype=np.complex128)
        out[0] = 1.0
        return out
    log_mod = -0.5 * r * r + n * np.log(r) - 0.5 * gammaln(n + 1)
    return np.exp(log_mod) * np.exp(1j * n * np.angle(alpha))


def _cap_for(alpha: complex, eps: float, max_mean: float) -> int:
    mean = abs(alpha) ** 2
    if mean > max_mean:
        raise TruncationError(
            f"|alpha|^2 = {mean:g} exceeds the truncation budget {max_mean:g}")
    if mean == 0.0:
        return 1
    return int(poisson.isf(eps * 1e-4, mean)) + 8


def make_coherent(alpha: complex, eps: float = EPS_TRUNC,
                  max_mean: float = MAX_MEAN_PHOTONS) -> StoredState:
    alpha = complex(alpha)
    amps = _coherent_amplitudes(alpha, _cap_for(alpha, eps, max_mean))
    return StoredState(_truncate(amps, eps))


def make_cat(alpha: complex, eta: float, theta: float, eps: float = EPS_TRUNC,
             max_mean: float = MAX_MEAN_PHOTONS) -> StoredState:
    """``N0 (|alpha> + exp(eta + i theta) |-alpha>)``.

    For ``eta > 0`` the weights are rescaled by ``exp(-eta)`` so that very
    large ``eta`` approaches ``|-alpha>`` without overflow.
    """
    if not (np.isfinite(eta) and np.isfinite(theta)):
        raise ValueError("eta and theta must be finite")
    alpha = complex(alpha)
    if eta > 0:
        a, b = np.exp(-eta), np.exp(1j * theta)
    else:
        a, b = 1.0, np.exp(eta + 1j * theta)
    overlap = np.exp(-2.0 * abs(alpha) ** 2)  # <alpha|-alpha>
    norm2 = abs(a) ** 2 + abs(b) ** 2 + 2.0 * (np.conj(a) * b).real * overlap
    if norm2 <= 1e-300:
        raise ValueError("the two branches cancel; the cat state is empty")
    coh = _coherent_amplitudes(alpha, _cap_for(alpha, eps, max_mean))
    sign = (-1.0) ** np.arange(coh.size)
    amps = coh * (a + b * sign) / np.sqrt(norm2)
    return StoredState(_truncate(amps, eps))


def make_uniform(M: int) -> StoredState:
    if M < 0:
        raise ValueError("M must be non-negative")
    return StoredState(np.full(M + 1, 1.0 / np.sqrt(M + 1), dtype=np.complex128))


def make_fock(n: int) -> StoredState:
    if n < 0:
        raise ValueError("photon number must be non-negative")
    amps = np.zeros(n + 1, dtype=np.complex128)
    amps[n] = 1.0
    return StoredState(amps)


def photon_stats(state: StoredState, max_order: int = 4) -> PhotonStats:
    """Mean, variance and central moments ``E[(n - <n>)^k]``, k = 0..max_order."""
    p = state.probabilities
    n = np.arange(p.size, dtype=np.float64)
    mean = float(p @ n)
    dev = n - mean
    moments = np.array([float(p @ dev ** k) for k in range(max_order + 1)])
    variance = max(moments[2], 0.0) if max_order >= 2 else max(float(p @ dev ** 2), 0.0)
    return PhotonStats(mean=mean, variance=variance, central_moments=moments)


def normalized_deviation(state: StoredState):
    """Support values of ``Z = (n - <n>)/<dn^2>^(1/2)`` and their weights."""
    stats = photon_stats(state, 2)
    if stats.variance <= 0.0:
        raise ValueError("Z is undefined for a state with zero variance")
    n = np.arange(state.n_max + 1, dtype=np.float64)
    return (n - stats.mean) / np.sqrt(stats.variance), state.probabilities


def cat_with_variance(variance: float, eta: float = 0.0, theta: float = 0.0,
                      eps: float = EPS_TRUNC) -> StoredState:
    """Real-amplitude cat state whose photon-number variance equals ``variance``."""
    from scipy.optimize import brentq

    def gap(a):
        return photon_stats(make_cat(a, eta, theta, eps), 2).variance - variance

    hi = max(2.0, 2.0 * np.sqrt(variance))
    alpha = brentq(gap, 1e-3, hi, xtol=1e-14)
    return make_cat(alpha, eta, theta, eps)


# ---------------------------------------------------------------------------
# admissibility diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailFit:
    delta: float
    C: float
    chi: float
    max_log_residual: float
    feasible: bool


@dataclass(frozen=True)
class TailReport:
    variance: float
    tail_mass_zero: bool
    fits: tuple
    best: Optional[TailFit]

    @property
    def light_tailed(self) -> bool:
        return self.tail_mass_zero or self.best is not None


@dataclass(frozen=True)
class AdmissibilityReport:
    grid: np.ndarray
    variances: np.ndarray
    tails: tuple
    ks_successive: np.ndarray
    ks_gaussian: np.ndarray

    @property
    def light_tailed(self) -> bool:
        return all(t.light_tailed for t in self.tails)

    @property
    def converging(self) -> bool:
        d = self.ks_successive[np.isfinite(self.ks_successive)]
        return d.size > 0 and bool(np.all(np.diff(d) < 0))


def tail_mass(state: StoredState):
    """Distances ``u_k`` and ``T(u_k) = sum_{|n-<n>| >= u_k} |C_n|^2``."""
    p = state.probabilities
    n = np.arange(p.size, dtype=np.float64)
    dist = np.abs(n - p @ n)
    order = np.argsort(dist)
    d_sorted, p_sorted = dist[order], p[order]
    # mass at distance >= d_sorted[i]
    upper = np.cumsum(p_sorted[::-1])[::-1]
    keep = np.concatenate([[True], d_sorted[1:] != d_sorted[:-1]])
    u, T = d_sorted[keep], upper[keep]
    positive = u > 1e-12
    return u[positive], T[positive]


def fit_tail(state: StoredState, deltas=(0.5, 1.0, 1.5, 2.0),
             floor: float = 1e-10, slack: float = 10.0) -> TailReport:
    """Envelope ``C exp(-chi u^delta)`` fits to the tail mass.

    ``(log C, chi)`` come from least squares on ``log T`` over points with
    ``T >= floor``.  A fit is feasible when ``chi > 0`` and the envelope
    under-shoots the data by at most a factor ``slack``; the reported ``C`` is
    then raised until the envelope dominates every positive tail point.
    """
    variance = photon_stats(state, 2).variance
    u, T = tail_mass(state)
    pos = T > 0
    u_all, T_all = u[pos], T[pos]
    if u_all.size == 0:
        return TailReport(variance, True, (), None)
    sel = T_all >= floor
    u_fit, T_fit = u_all[sel], T_all[sel]
    fits = []
    for delta in deltas:
        if u_fit.size < 2:
            fits.append(TailFit(delta, np.nan, np.nan, np.inf, False))
            continue
        X = u_fit ** delta
        A = np.column_stack([np.ones_like(X), -X])
        (log_c, chi), *_ = np.linalg.lstsq(A, np.log(T_fit), rcond=None)
        resid = np.log(T_fit) - (log_c - chi * X)
        worst = float(resid.max())
        ok = bool(chi > 0 and worst <= np.log(slack))
        lift = float(np.max(np.log(T_all) - (log_c - chi * u_all ** delta)))
        fits.append(TailFit(delta, float(np.exp(log_c + max(lift, 0.0))),
                            float(chi), worst, ok))
    feasible = [f for f in fits if f.feasible]
    best = min(feasible, key=lambda f: f.max_log_residual) if feasible else None
    return TailReport(variance, False, tuple(fits), best)


def _cdf_on(values, weights, points):
    order = np.argsort(values)
    v, c = values[order], np.cumsum(weights[order])
    idx = np.searchsorted(v, points, side="right")
    return np.where(idx > 0, c[np.maximum(idx - 1, 0)], 0.0)


def kolmogorov_distance(z1, p1, z2, p2) -> float:
    """sup_y |F1(y) - F2(y)| for two discrete distributions."""
    pts = np.union1d(z1, z2)
    return float(np.max(np.abs(_cdf_on(z1, p1, pts) - _cdf_on(z2, p2, pts))))


def gaussian_distance(z, p) -> float:
    """sup_y |F(y) - Phi(y)|, checking both sides of every jump."""
    order = np.argsort(z)
    zs, cs = z[order], np.cumsum(p[order])
    phi = ndtr(zs)
    left = np.concatenate([[0.0], cs[:-1]])
    return float(max(np.max(np.abs(cs - phi)), np.max(np.abs(left - phi))))


def admissibility_report(family: Callable[[float], StoredState],
                      variance_grid: Sequence[float], **fit_options) -> AdmissibilityReport:
    """Light-tail envelope fits and weak-convergence diagnostics for a family.

    ``family`` maps each grid value (nominally the target variance) to a
    state.  Kolmogorov distances are ``nan`` where Z is undefined.
    """
    grid = np.asarray(variance_grid, dtype=np.float64)
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError("variance grid must be strictly increasing")
    states = [family(v) for v in grid]
    tails = tuple(fit_tail(s, **fit_options) for s in states)
    variances = np.array([t.variance for t in tails])
    zs = [normalized_deviation(s) if t.variance > 0 else None
          for s, t in zip(states, tails)]
    ks_gauss = np.array([gaussian_distance(*z) if z is not None else np.nan for z in zs])
    ks_succ = np.full(max(len(states) - 1, 0), np.nan)
    for i in range(len(states) - 1):
        if zs[i] is not None and zs[i + 1] is not None:
            ks_succ[i] = kolmogorov_distance(*zs[i], *zs[i + 1])
    return AdmissibilityReport(grid, variances, tails, ks_succ, ks_gauss)


def family(kind: str, eta: float = 0.0, theta: float = 0.0) -> Callable[[float], StoredState]:
    """Named state families parametrised by (approximate) photon-number variance."""
    if kind == "coherent":
        return lambda v: make_coherent(np.sqrt(v))
    if kind == "cat":
        return lambda v: cat_with_variance(v, eta, theta)
    if kind == "uniform":
        # discrete uniform on 0..M has variance ((M+1)^2 - 1)/12
        return lambda v: make_uniform(max(int(round(np.sqrt(12 * v + 1) - 1)), 0))
    if kind == "fock":
        return lambda v: make_fock(int(round(v)))
    raise ValueError(f"unknown state family {kind!r}")
