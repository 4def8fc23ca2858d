"""Independent oracles the tests check production code against.

Everything in this module is implemented from first principles, without
importing the algorithms under test: a quaternion engine for rotations, a
run-length step scanner, an exhaustive warping-path DTW, and a central
finite-difference Jacobian.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numba import njit

# --- quaternion engine -------------------------------------------------------

def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0:
        return np.array([1.0, 0.0, 0.0, 0.0])
    half = 0.5 * angle
    return np.concatenate([[math.cos(half)], math.sin(half) * axis / n])


def quat_from_rotvec(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return quat_from_axis_angle(a, float(np.linalg.norm(a)))


def quat_mul(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_rotate(q: np.ndarray, v) -> np.ndarray:
    """Active rotation of v by q (q * [0, v] * conj(q))."""
    qv = np.concatenate([[0.0], np.asarray(v, dtype=float)])
    conj = q * np.array([1.0, -1.0, -1.0, -1.0])
    return quat_mul(quat_mul(q, qv), conj)[1:]


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    return np.column_stack([quat_rotate(q, e) for e in np.eye(3)])


def oracle_rotation(a) -> np.ndarray:
    """The matrix the production V(a) must produce.

    Pinned by the gyro-integration contract: a constant body rate ``w``
    applied for time ``T`` takes a world-to-body orientation ``C`` to
    ``R(wT)^T C`` where ``R`` is the active quaternion rotation, so
    ``V(a) = R(a)^T``.
    """
    return quat_to_matrix(quat_from_rotvec(a)).T


def oracle_gyro_integration(w, dt: float, n_steps: int, c0: np.ndarray) -> np.ndarray:
    """True world-to-body orientation after ``n_steps`` of constant rate ``w``."""
    q = quat_from_rotvec(np.asarray(w, dtype=float) * dt * n_steps)
    return quat_to_matrix(q).T @ c0


# --- independent step scanner -------------------------------------------------

def naive_step_scan(flags, times, min_flight: float = 0.2) -> list[float]:
    """Run-length reading of the step detector's contract.

    A maximal motion run entered from stance emits the pre-run time once
    the run has lasted ``min_flight`` before the next stance sample.  The
    terminal step is the last sample if stationary, otherwise the entry
    point of the last stance-entered motion run (or the first sample if
    motion never started from stance).
    """
    flags = [bool(x) for x in flags]
    times = [float(x) for x in times]
    n = len(flags)
    if n == 0:
        return []
    taus = []
    last_entry = 0  # index of t_nLast in the figure's terms
    i = 1
    if not flags[0]:
        # leading motion run: flight accumulates from the first sample, and
        # the entry marker keeps its initial value (the first sample)
        j = 1
        while j < n and not flags[j]:
            j += 1
        if j < n and times[j - 1] - times[0] >= min_flight:
            taus.append(times[0])
        i = j
    while i < n:
        if not flags[i] and flags[i - 1]:
            start = i - 1
            j = i
            while j < n and not flags[j]:
                j += 1
            last_entry = start
            if j < n and times[j - 1] - times[start] >= min_flight:
                taus.append(times[start])
            i = j
        else:
            i += 1
    taus.append(times[-1] if flags[-1] else times[last_entry])
    return taus


@njit(cache=True)
def naive_step_scan_batch(flags: np.ndarray, dt: float, min_flight: float) -> np.ndarray:
    """Fingerprints of the run-length scanner over a batch of sequences.

    ``flags`` is (m, n) boolean; returns one polynomial hash of the emitted
    step indices per row, for exhaustive cross-checks against the
    production detector.
    """
    m, n = flags.shape
    out = np.zeros(m, dtype=np.uint64)
    for r in range(m):
        fp = np.uint64(1469598103934665603)
        last_entry = 0
        i = 1
        if not flags[r, 0]:
            j = 1
            while j < n and not flags[r, j]:
                j += 1
            if j < n and (j - 1) * dt >= min_flight:
                fp = (fp * np.uint64(1099511628211)) ^ np.uint64(1)
            i = j
        while i < n:
            if (not flags[r, i]) and flags[r, i - 1]:
                start = i - 1
                j = i
                while j < n and not flags[r, j]:
                    j += 1
                last_entry = start
                if j < n and (j - 1 - start) * dt >= min_flight:
                    fp = (fp * np.uint64(1099511628211)) ^ np.uint64(start + 1)
                i = j
            else:
                i += 1
        terminal = (n - 1) if flags[r, n - 1] else last_entry
        fp = (fp * np.uint64(1099511628211)) ^ np.uint64(terminal + 1)
        out[r] = fp
    return out


def step_indices_fingerprint(taus: np.ndarray, times: np.ndarray) -> int:
    """Same hash as the batch scanner, from emitted step times."""
    fp = 1469598103934665603
    for tau in taus:
        idx = int(np.argmin(np.abs(times - tau)))
        fp = ((fp * 1099511628211) & 0xFFFFFFFFFFFFFFFF) ^ (idx + 1)
    return fp


# --- exhaustive DTW -----------------------------------------------------------

def dtw_exhaustive(a: np.ndarray, b: np.ndarray) -> float:
    """Minimum accumulated cost over all monotone boundary-matched warpings."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = a.shape[0], b.shape[0]

    def cost(i, j):
        return float(np.linalg.norm(a[i] - b[j]))

    @lru_cache(maxsize=None)
    def best(i, j):
        if i == 0 and j == 0:
            return cost(0, 0)
        options = []
        if i > 0:
            options.append(best(i - 1, j))
        if j > 0:
            options.append(best(i, j - 1))
        if i > 0 and j > 0:
            options.append(best(i - 1, j - 1))
        return min(options) + cost(i, j)

    result = best(n - 1, m - 1)
    best.cache_clear()
    return result


def enumerate_warping_costs(a: np.ndarray, b: np.ndarray) -> list[float]:
    """Costs of every monotone warping path (for tiny paths only)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = a.shape[0], b.shape[0]
    results = []

    def walk(i, j, acc):
        acc = acc + float(np.linalg.norm(a[i] - b[j]))
        if i == n - 1 and j == m - 1:
            results.append(acc)
            return
        if i + 1 < n:
            walk(i + 1, j, acc)
        if j + 1 < m:
            walk(i, j + 1, acc)
        if i + 1 < n and j + 1 < m:
            walk(i + 1, j + 1, acc)

    walk(0, 0, 0.0)
    return results


# --- finite differences ---------------------------------------------------------

def central_jacobian(func, x0: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of a vector function at ``x0``."""
    x0 = np.asarray(x0, dtype=float)
    f0 = np.asarray(func(x0))
    jac = np.zeros((f0.size, x0.size))
    for k in range(x0.size):
        dx = np.zeros_like(x0)
        dx[k] = eps
        jac[:, k] = (np.asarray(func(x0 + dx)) - np.asarray(func(x0 - dx))) / (2.0 * eps)
    return jac
