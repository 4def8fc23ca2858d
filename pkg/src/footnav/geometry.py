"""Rotation and frame primitives shared by the mechanization and the filter.

Conventions
-----------
The world frame XYU is right-handed with the third axis pointing up, so the
gravity vector is ``(0, 0, -g0)``.  An orientation matrix ``C`` maps world
coordinates into sensor (body) coordinates; its transpose resolves body
vectors in the world frame, e.g. ``C.T @ f + g`` is the world acceleration
of a sensor measuring specific force ``f``.

:func:`skew` uses the layout::

    [[  0,  b3, -b2],
     [-b3,   0,  b1],
     [ b2, -b1,   0]]

which is the negative of the conventional cross-product matrix.  With that
layout ``rotation_from_vector_angle(w * dt) @ C`` advances a world-to-body
orientation by one gyro sample: a constant body rate integrated this way
reproduces the true orientation (pinned by the quaternion oracle in the
test suite).
"""

from __future__ import annotations

import numpy as np

from .errors import NotARotation

DEFAULT_GRAVITY = 9.81  # m/s^2, magnitude of g; the U axis points up

# Below this rotation angle (rad) the Rodrigues form switches to its
# two-term series to avoid dividing by the angle.
SMALL_ANGLE = 1e-12

_EYE3 = np.eye(3)


def gravity_vector(g0: float = DEFAULT_GRAVITY) -> np.ndarray:
    """Gravity in the world frame: ``(0, 0, -g0)``."""
    return np.array([0.0, 0.0, -g0])


def skew(b) -> np.ndarray:
    """Antisymmetric matrix of ``b`` in the layout documented above.

    ``skew(b) @ b`` is exactly zero for every ``b``.
    """
    b1, b2, b3 = np.asarray(b, dtype=float)
    return np.array([
        [0.0, b3, -b2],
        [-b3, 0.0, b1],
        [b2, -b1, 0.0],
    ])


def rotation_from_vector_angle(a) -> np.ndarray:
    """Rotation matrix ``V(a)`` for the vector-angle ``a``.

    ``V(a) = exp(skew(a))``: angle ``|a|`` about the axis ``a/|a|`` with the
    sign fixed by the skew layout above.  Exact Rodrigues closed form; for
    ``|a| < SMALL_ANGLE`` the two-term series ``I + S + S^2/2`` is used so
    the zero vector maps to the identity without a division.
    """
    a = np.asarray(a, dtype=float)
    s = skew(a)
    theta = float(np.linalg.norm(a))
    if theta < SMALL_ANGLE:
        return _EYE3 + s + 0.5 * (s @ s)
    # (1 - cos t)/t^2 via the half-angle form, stable for small t
    half_sinc = np.sin(0.5 * theta) / (0.5 * theta)
    return _EYE3 + (np.sin(theta) / theta) * s + (0.5 * half_sinc * half_sinc) * (s @ s)


def rotation_to_vector_angle(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`rotation_from_vector_angle` (matrix log).

    Returns the vector-angle ``a`` with ``|a| <= pi``.  Input must be a
    proper rotation; behaviour on arbitrary matrices is undefined.
    """
    v = np.asarray(v, dtype=float)
    cos_theta = np.clip((np.trace(v) - 1.0) / 2.0, -1.0, 1.0)
    theta = float(np.arccos(cos_theta))
    # antisymmetric part in the skew layout: b = (V[1,2], V[2,0], V[0,1])
    w = 0.5 * np.array([v[1, 2] - v[2, 1], v[2, 0] - v[0, 2], v[0, 1] - v[1, 0]])
    if theta < 1e-7:
        return w  # sin t ~ t
    if np.pi - theta < 1e-6:
        # near pi the antisymmetric part vanishes; recover the axis from
        # the symmetric part V ~ 2 n n^T - I (sign from w where usable)
        m = 0.5 * (v + v.T)
        axis = np.sqrt(np.clip((np.diag(m) + 1.0) / 2.0, 0.0, None))
        k = int(np.argmax(axis))
        if axis[k] > 0:
            for j in range(3):
                if j != k:
                    axis[j] = m[k, j] / (2.0 * axis[k]) if axis[j] > 0 else axis[j]
            axis = axis / np.linalg.norm(axis)
        if np.dot(axis, w) < 0:
            axis = -axis
        return theta * axis
    return (theta / np.sin(theta)) * w


def orthonormalize(c: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix to ``c`` (Frobenius norm, SVD projection).

    Idempotent on exact rotations.  Raises :class:`NotARotation` when the
    projection lands on a reflection (non-positive determinant).
    """
    u, _, vt = np.linalg.svd(np.asarray(c, dtype=float))
    r = u @ vt
    if np.linalg.det(r) <= 0.0:
        raise NotARotation("projection of the input has non-positive determinant")
    return r


def is_rotation(c: np.ndarray, tol: float = 1e-9) -> bool:
    """True when ``c`` is orthonormal with determinant +1 within ``tol``."""
    c = np.asarray(c, dtype=float)
    if c.shape != (3, 3) or not np.all(np.isfinite(c)):
        return False
    if np.linalg.norm(c.T @ c - _EYE3) >= tol:
        return False
    return abs(np.linalg.det(c) - 1.0) < tol
