"""Rotation-group kinematics in exponential coordinates.

A rotation is parametrized as R = exp(hat(theta)) for theta in R^3.  The
left Jacobian maps coordinate rates to the spatial angular velocity:
hat(omega_spatial) = dR/dt R^T with omega_spatial = left_jacobian(theta) @
thetadot; the transpose is the right (body-frame) Jacobian.  Closed forms
switch to series below a small-angle cutoff.

These sit inside the integrator's residual loop, so the 3-vector paths are
written with scalar arithmetic instead of matrix products.
"""

import math

import numpy as np

_SMALL = 1e-4


def hat(w):
    w = np.asarray(w, dtype=float)
    return np.array([
        [0.0, -w[2], w[1]],
        [w[2], 0.0, -w[0]],
        [-w[1], w[0], 0.0],
    ])


def _jacobian_coefficients(sq):
    angle = math.sqrt(sq)
    if angle < _SMALL:
        b = 0.5 - sq / 24.0
        c = 1.0 / 6.0 - sq / 120.0
    else:
        b = (1.0 - math.cos(angle)) / sq
        c = (angle - math.sin(angle)) / (sq * angle)
    return b, c


def exp_map(theta):
    """Rodrigues formula for exp(hat(theta))."""
    theta = np.asarray(theta, dtype=float)
    sq = float(theta @ theta)
    angle = math.sqrt(sq)
    k = hat(theta)
    if angle < _SMALL:
        a = 1.0 - sq / 6.0
        b = 0.5 - sq / 24.0
    else:
        a = math.sin(angle) / angle
        b = (1.0 - math.cos(angle)) / sq
    return np.eye(3) + a * k + b * (k @ k)


def left_jacobian(theta):
    """J with hat(J @ thetadot) = (d/dt exp(hat(theta))) exp(-hat(theta))."""
    t0, t1, t2 = float(theta[0]), float(theta[1]), float(theta[2])
    sq = t0 * t0 + t1 * t1 + t2 * t2
    b, c = _jacobian_coefficients(sq)
    # J = (1 - c sq) I + c theta theta^T + b hat(theta).
    d = 1.0 - c * sq
    return np.array([
        [d + c * t0 * t0, c * t0 * t1 - b * t2, c * t0 * t2 + b * t1],
        [c * t1 * t0 + b * t2, d + c * t1 * t1, c * t1 * t2 - b * t0],
        [c * t2 * t0 - b * t1, c * t2 * t1 + b * t0, d + c * t2 * t2],
    ])


def _apply(theta, w, sign):
    t0, t1, t2 = float(theta[0]), float(theta[1]), float(theta[2])
    w0, w1, w2 = float(w[0]), float(w[1]), float(w[2])
    sq = t0 * t0 + t1 * t1 + t2 * t2
    b, c = _jacobian_coefficients(sq)
    b *= sign
    x0 = t1 * w2 - t2 * w1
    x1 = t2 * w0 - t0 * w2
    x2 = t0 * w1 - t1 * w0
    y0 = t1 * x2 - t2 * x1
    y1 = t2 * x0 - t0 * x2
    y2 = t0 * x1 - t1 * x0
    return np.array([w0 + b * x0 + c * y0,
                     w1 + b * x1 + c * y1,
                     w2 + b * x2 + c * y2])


def apply_left_jacobian(theta, w):
    """left_jacobian(theta) @ w without forming the matrix."""
    return _apply(theta, w, 1.0)


def apply_left_jacobian_t(theta, w):
    """left_jacobian(theta).T @ w, i.e. the body-frame Jacobian applied."""
    return _apply(theta, w, -1.0)


def spatial_velocity(theta, thetadot):
    """Spatial angular velocity of the coordinate path, J(theta) thetadot."""
    return apply_left_jacobian(theta, thetadot)
