"""Hot inner loops, in two flavours.

Every kernel exists as a vectorised numpy function (``np_*``) and as an
explicit-loop function compiled with numba (``nb_*``).  The public names
(``exact_unit_phases``, ``overlap_squared``, ``quadratic_form_sum``) point at
the numba versions unless numba is missing or ``EITMEMORY_DISABLE_JIT`` is set
to a truthy value before import.

Both flavours are always importable so the benchmark and the tests can
compare them directly.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

_FLAG = os.environ.get("EITMEMORY_DISABLE_JIT", "").strip().lower()
HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


# ---------------------------------------------------------------------------
# per-realization unit Berry phase (photon number n = 1)
# ---------------------------------------------------------------------------

def np_exact_unit_phases(detunings, couplings, sum_g2_ref, tau_s, tau_d,
                         waveform, weights):
    """Unit-photon Berry phase for each row of a block of realizations.

    ``weights`` are normalised quadrature weights on the driving grid (they sum
    to one), so ``weights @ f`` is the time average of ``f`` over the window.
    The mixing angle of each realization uses its own sum of squared
    couplings: ``sin^2 theta = r / (r + w^2)`` with ``r = sum g^2 / sum_g2_ref``.
    """
    g2 = couplings * couplings
    s2 = g2.sum(axis=1)
    weighted = (g2 * detunings).sum(axis=1) / s2
    r = (s2 / sum_g2_ref)[:, None]
    w2 = (waveform * waveform)[None, :]
    drive = (r / (r + w2)) @ weights
    return -weighted * (tau_s + tau_d * drive)


def _loop_exact_unit_phases(detunings, couplings, sum_g2_ref, tau_s, tau_d,
                            waveform, weights):
    n_real, n_atoms = detunings.shape
    n_grid = waveform.shape[0]
    out = np.empty(n_real)
    w2 = waveform * waveform
    for i in range(n_real):
        s2 = 0.0
        sgd = 0.0
        for j in range(n_atoms):
            gg = couplings[i, j] * couplings[i, j]
            s2 += gg
            sgd += gg * detunings[i, j]
        r = s2 / sum_g2_ref
        drive = 0.0
        for k in range(n_grid):
            drive += weights[k] * (r / (r + w2[k]))
        out[i] = -(sgd / s2) * (tau_s + tau_d * drive)
    return out


# ---------------------------------------------------------------------------
# |<phi_in|phi_out>|^2 for photon-number-linear phases
# ---------------------------------------------------------------------------

def np_overlap_squared(probs, phases):
    """``|sum_n p_n exp(i n phi)|^2`` for every phase in ``phases``."""
    n = np.arange(probs.shape[0], dtype=np.float64)
    arg = np.outer(phases, n)
    re = np.cos(arg) @ probs
    im = np.sin(arg) @ probs
    return re * re + im * im


def _loop_overlap_squared(probs, phases):
    m = probs.shape[0]
    out = np.empty(phases.shape[0])
    for i in range(phases.shape[0]):
        phi = phases[i]
        re = 0.0
        im = 0.0
        for n in range(m):
            p = probs[n]
            if p != 0.0:
                re += p * np.cos(n * phi)
                im += p * np.sin(n * phi)
        out[i] = re * re + im * im
    return out


# ---------------------------------------------------------------------------
# nested sum over difference vectors with a quadratic form
# ---------------------------------------------------------------------------

def np_quadratic_form_sum(dists, offsets, gamma0, q, compensated):
    """Sum over d in Z^k of prod_j A_j(d_j) cos(gamma0 1.d) exp(-d.Q.d).

    ``dists`` is a (k, L) array of difference distributions (zero padded),
    ``offsets[j]`` the value of ``d_j`` at column 0.
    """
    k, width = dists.shape
    axes = [np.arange(width, dtype=np.float64) + offsets[j] for j in range(k)]
    grids = np.meshgrid(*axes, indexing="ij", sparse=True)
    weight = np.ones((1,) * k)
    for j in range(k):
        shape = [1] * k
        shape[j] = width
        weight = weight * dists[j].reshape(shape)
    quad = 0.0
    total = 0.0
    for a in range(k):
        for b in range(k):
            if q[a, b] != 0.0:
                quad = quad + q[a, b] * grids[a] * grids[b]
        total = total + grids[a]
    term = weight * np.exp(-quad)
    if not compensated:
        term = term * np.cos(gamma0 * total)
    return float(np.sum(term))


def _loop_quadratic_form_sum(dists, offsets, gamma0, q, compensated):
    k, width = dists.shape
    idx = np.zeros(k, dtype=np.int64)
    d = np.empty(k)
    acc = 0.0
    while True:
        w = 1.0
        for j in range(k):
            w *= dists[j, idx[j]]
            if w == 0.0:
                break
        if w != 0.0:
            s = 0.0
            for j in range(k):
                d[j] = idx[j] + offsets[j]
                s += d[j]
            quad = 0.0
            for a in range(k):
                qa = 0.0
                for b in range(k):
                    qa += q[a, b] * d[b]
                quad += d[a] * qa
            t = w * np.exp(-quad)
            if not compensated:
                t *= np.cos(gamma0 * s)
            acc += t
        # odometer increment, last axis fastest
        j = k - 1
        while j >= 0:
            idx[j] += 1
            if idx[j] < width:
                break
            idx[j] = 0
            j -= 1
        if j < 0:
            break
    return acc


if HAVE_NUMBA:
    _jit = numba.njit(cache=True, nogil=True)
    nb_exact_unit_phases = _jit(_loop_exact_unit_phases)
    nb_overlap_squared = _jit(_loop_overlap_squared)
    nb_quadratic_form_sum = _jit(_loop_quadratic_form_sum)
else:  # pragma: no cover
    nb_exact_unit_phases = _loop_exact_unit_phases
    nb_overlap_squared = _loop_overlap_squared
    nb_quadratic_form_sum = _loop_quadratic_form_sum


if USE_NUMBA:
    exact_unit_phases = nb_exact_unit_phases
    overlap_squared = nb_overlap_squared
    quadratic_form_sum = nb_quadratic_form_sum
else:
    exact_unit_phases = np_exact_unit_phases
    overlap_squared = np_overlap_squared
    quadratic_form_sum = np_quadratic_form_sum


def backend():
    return "numba" if USE_NUMBA else "numpy"
