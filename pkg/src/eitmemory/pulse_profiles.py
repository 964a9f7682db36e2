"""Control-pulse waveforms, mixing angle and adiabatic pulse factors."""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError

# fixed factors for the Gaussian xi = 1000 pulse; both exceed the window-average bound of 1
REFERENCE_KAPPA = 3.2
REFERENCE_ZETA = 2.7

CONVENTIONS = ("definition", "reference")
CONVERGENCE_TOL = 1e-8
ADIABATIC_THRESHOLD = 10.0


def simpson_weights(n_points: int) -> np.ndarray:
    """Composite Simpson weights on a unit-length uniform grid (sum to 1)."""
    if n_points < 3 or n_points % 2 == 0:
        raise ValueError("Simpson's rule needs an odd number of points >= 3")
    w = np.ones(n_points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / (3.0 * (n_points - 1))


@dataclass(frozen=True, eq=False)
class PulseProfile:
    """``Omega(t) / sqrt(N g^2)`` tabulated on a uniform grid over [0, tau_d].

    The grid must have ``4m + 1`` points so that the mid-window node (where a
    mirrored waveform may have a kink) is a Simpson panel boundary at both the
    full and the half resolution.
    """

    t: np.ndarray
    waveform: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=np.float64)
        w = np.array(self.waveform, dtype=np.float64)
        if t.ndim != 1 or t.shape != w.shape:
            raise ValueError("t and waveform must be 1-d arrays of equal length")
        if t.size < 5 or (t.size - 1) % 4:
            raise ValueError("grid must have 4m + 1 points (m >= 1)")
        if t[0] != 0.0 or t[-1] <= 0.0:
            raise ValueError("grid must run from 0 to tau_d > 0")
        h = np.diff(t)
        if np.max(np.abs(h - h.mean())) > 1e-9 * t[-1]:
            raise ValueError("grid must be uniform")
        if not np.all(w > 0) or not np.all(np.isfinite(w)):
            raise ValueError("waveform must be finite and strictly positive")
        if np.max(np.abs(w - w[::-1])) > 1e-9 * np.max(w):
            raise ValueError("waveform must be mirror symmetric about tau_d/2")
        t.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "waveform", w)

    @property
    def tau_d(self) -> float:
        return float(self.t[-1])

    @property
    def grid_points(self) -> int:
        return self.t.size

    def mixing_angle(self, coupling_ratio: float = 1.0) -> np.ndarray:
        """theta(t) with ``tan theta = sqrt(coupling_ratio) / waveform``.

        ``coupling_ratio`` is ``sum_k g_k^2 / (N g^2)``; 1 gives the
        homogeneous angle.
        """
        return np.arctan2(np.sqrt(coupling_ratio), self.waveform)

    def sin2_theta(self, coupling_ratio: float = 1.0) -> np.ndarray:
        w2 = self.waveform ** 2
        return coupling_ratio / (coupling_ratio + w2)

    def sin2_2theta(self, coupling_ratio: float = 1.0) -> np.ndarray:
        w2 = self.waveform ** 2
        return 4.0 * coupling_ratio * w2 / (coupling_ratio + w2) ** 2

    def quadrature_weights(self) -> np.ndarray:
        """Weights ``q`` with ``q @ f`` = time average of ``f`` over the window."""
        return simpson_weights(self.grid_points)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "omega_over_sqrt_sum_g2"])
        for ti, wi in zip(self.t, self.waveform):
            writer.writerow([f"{ti:.17g}", f"{wi:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, source) -> "PulseProfile":
        """Load from a path or text stream with columns ``t, omega_over_sqrt_sum_g2``."""
        if hasattr(source, "read"):
            rows = list(csv.DictReader(source))
        else:
            with open(source, newline="") as fh:
                rows = list(csv.DictReader(fh))
        try:
            t = [float(r["t"]) for r in rows]
            w = [float(r["omega_over_sqrt_sum_g2"]) for r in rows]
        except KeyError as exc:
            raise ValueError(f"pulse CSV is missing column {exc}") from None
        return cls(np.array(t), np.array(w))


@dataclass(frozen=True)
class PulseFactors:
    kappa_theta: float
    zeta_theta: float
    convention: str = "definition"

    @property
    def alpha_theta(self) -> float:
        return self.kappa_theta - 0.5


def _round_grid(grid_points: int) -> int:
    return 4 * ((grid_points - 1 + 3) // 4) + 1


def gaussian_pulse(xi: float, tau_d: float, grid_points: int = 4001) -> PulseProfile:
    """Gaussian store-in ramp mirrored for retrieval.

    On the store-in half ``w(t) = xi exp(-2 ln(xi) (t / (tau_d/2))^2)``, falling
    from ``xi`` at t = 0 to ``1/xi`` at mid-window.  ``grid_points`` is rounded
    up to the next value of the form 4m + 1.
    """
    if not xi > 1.0:
        raise ValueError("xi must exceed 1 for the mixing angle to sweep")
    if not tau_d > 0:
        raise ValueError("tau_d must be positive")
    if grid_points < 1000:
        raise ValueError("grid_points must be at least 1000")
    n = _round_grid(grid_points)
    t = np.linspace(0.0, tau_d, n)
    half = (n - 1) // 2
    s = t[: half + 1] / (0.5 * tau_d)
    first = xi * np.exp(-2.0 * np.log(xi) * s * s)
    w = np.concatenate([first, first[-2::-1]])
    return PulseProfile(t, w)


def constant_pulse(level: float, tau_d: float, grid_points: int = 1001) -> PulseProfile:
    n = _round_grid(grid_points)
    return PulseProfile(np.linspace(0.0, tau_d, n), np.full(n, float(level)))


def _averages(profile: PulseProfile, coupling_ratio: float = 1.0):
    fine = profile.quadrature_weights()
    coarse = simpson_weights((profile.grid_points + 1) // 2)
    s2 = profile.sin2_theta(coupling_ratio)
    s22 = profile.sin2_2theta(coupling_ratio)
    return ((fine @ s2, coarse @ s2[::2]), (fine @ s22, coarse @ s22[::2]))


def pulse_factors(profile: PulseProfile, convention: str = "definition",
                  tol: float = CONVERGENCE_TOL) -> PulseFactors:
    """Adiabatic pulse factors kappa (mean sin^2 theta) and zeta (mean sin^2 2theta).

    ``definition`` integrates the normalised window averages by Simpson's rule
    and checks them against the half-resolution grid; ``reference``
    returns the fixed reference values 3.2 and 2.7.
    """
    if convention in ("paper", "reference"):
        return PulseFactors(REFERENCE_KAPPA, REFERENCE_ZETA, "reference")
    if convention != "definition":
        raise ValueError(f"unknown pulse convention {convention!r}")
    (k_f, k_c), (z_f, z_c) = _averages(profile)
    for name, fine, coarse in (("kappa", k_f, k_c), ("zeta", z_f, z_c)):
        if abs(fine - coarse) > tol:
            raise QuadratureError(
                f"{name}_theta not converged: {fine!r} vs {coarse!r} at half grid")
    return PulseFactors(float(k_f), float(z_f), "definition")


def adiabatic_scale(N: int, g: float, n_max: int) -> float:
    """``sqrt(n_max / (N g^2))``, the time scale the adiabatic condition compares to."""
    return float(np.sqrt(n_max / (N * g * g)))


def adiabatic_margin(params, tau_d: float, n_max: int) -> float:
    """``min(tau_d, 1/|Delta|) / sqrt(n_max / (N g^2))``.

    Callers compare the result against a threshold (``ADIABATIC_THRESHOLD``)
    to decide whether the ``>>`` condition holds.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    inv_delta = np.inf if params.Delta == 0 else 1.0 / abs(params.Delta)
    return float(min(tau_d, inv_delta) / adiabatic_scale(params.N, params.g, n_max))


def is_adiabatic(margin: float, threshold: float = ADIABATIC_THRESHOLD) -> bool:
    return margin >= threshold
