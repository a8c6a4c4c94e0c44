"""Builders for the bundled example systems.

Each template documents its coordinates, parameters, and structural facts
(constraint rank, degenerate momentum components) and builds a fully
assembled LagrangeDiracSystem.  Builders are pure; systems come out fresh
each call.
"""

import math

import numpy as np

from . import rotation
from .induced import DistributionField, InterconnectionSpec, unconstrained
from .mechanics import (CallableLagrangian, LagrangeDiracSystem,
                        PolynomialForce, PolynomialLagrangian,
                        central_difference_gradient, zero_force)


class UnknownSystemError(KeyError):
    pass


class BadParameterError(ValueError):
    pass


class SystemTemplate:
    """A named builder with defaulted parameters and structural metadata."""

    __slots__ = ("name", "parameters", "positive", "nonnegative",
                 "description", "facts", "_build")

    def __init__(self, name, parameters, build, description, facts,
                 positive=(), nonnegative=()):
        self.name = name
        self.parameters = dict(parameters)
        self.positive = tuple(positive)
        self.nonnegative = tuple(nonnegative)
        self.description = description
        self.facts = dict(facts)
        self._build = build

    def resolve(self, params=None):
        merged = dict(self.parameters)
        for key, value in (params or {}).items():
            if key not in merged:
                raise BadParameterError(
                    f"{self.name}: unknown parameter {key!r}; "
                    f"accepts {sorted(merged)}"
                )
            merged[key] = float(value)
        for key in self.positive:
            if not merged[key] > 0:
                raise BadParameterError(f"{self.name}: {key} must be > 0")
        for key in self.nonnegative:
            if merged[key] < 0:
                raise BadParameterError(f"{self.name}: {key} must be >= 0")
        return merged

    def build(self, params=None) -> LagrangeDiracSystem:
        merged = self.resolve(params)
        system = self._build(merged)
        system.name = self.name
        system.metadata.update(self.facts)
        system.metadata["parameters"] = merged
        return system

    def summary(self):
        return {
            "name": self.name,
            "parameters": dict(self.parameters),
            "description": self.description,
            "facts": dict(self.facts),
        }


def _quadratic_terms(n, masses=(), springs=()):
    """Terms 1/2 m v_i^2 and -1/2 k (x_j - x_i)^2 (or -1/2 k x_i^2)."""
    terms = []
    for i, m in masses:
        e = [0] * n
        e[i] = 2
        terms.append((0.5 * m, (0,) * n, tuple(e)))
    for spec in springs:
        if len(spec) == 2:
            i, k = spec
            e = [0] * n
            e[i] = 2
            terms.append((-0.5 * k, tuple(e), (0,) * n))
        else:
            i, j, k = spec
            ei, ej, eij = [0] * n, [0] * n, [0] * n
            ei[i] = 2
            ej[j] = 2
            eij[i] = 1
            eij[j] = 1
            terms.append((-0.5 * k, tuple(ei), (0,) * n))
            terms.append((-0.5 * k, tuple(ej), (0,) * n))
            terms.append((k, tuple(eij), (0,) * n))
    return terms


def _build_harmonic(p):
    lag = PolynomialLagrangian(1, _quadratic_terms(1, masses=[(0, p["m"])],
                                                   springs=[(0, p["k"])]))
    spec = InterconnectionSpec([unconstrained(1)])
    return LagrangeDiracSystem(lag, zero_force(1), spec)


def _build_damped(p):
    system = _build_harmonic({"m": p["m"], "k": p["k"]})
    system.force = PolynomialForce(1, [(0, -p["r"], (0,), (1,))])
    return system


def _build_mass_spring(p):
    # Coordinates (x1, x2, xbar2, x3): two primitive units sharing the
    # massless boundary point xbar2 = x2 through one coupling row.
    terms = _quadratic_terms(
        4,
        masses=[(0, p["m1"]), (1, p["m2"]), (3, p["m3"])],
        springs=[(0, p["k1"]), (0, 1, p["k2"]), (2, 3, p["k3"])],
    )
    lag = PolynomialLagrangian(4, terms)
    spec = InterconnectionSpec(
        [unconstrained(2), unconstrained(2)],
        DistributionField(4, [[0.0, 1.0, -1.0, 0.0]]),
    )
    return LagrangeDiracSystem(lag, zero_force(4), spec)


def _circuit1_lagrangian(p):
    # Coordinates (qR, qL, qS1); only the inductor stores kinetic energy.
    return PolynomialLagrangian(3, [(0.5 * p["L"], (0, 0, 0), (0, 2, 0))])


def _circuit2_lagrangian(p):
    # Coordinates (qS2, qC); the capacitor charge enters the Lagrangian.
    return PolynomialLagrangian(2, [(0.5 / p["C"], (0, 2), (0, 0))])


def _build_rlc(p):
    # Coordinates (qR, qL, qS1, qS2, qC); current-law rows per circuit and
    # one port-matching coupling row.  Port forces appear as multipliers.
    lag = PolynomialLagrangian(5, [
        (0.5 * p["L"], (0, 0, 0, 0, 0), (0, 2, 0, 0, 0)),
        (0.5 / p["C"], (0, 0, 0, 0, 2), (0, 0, 0, 0, 0)),
    ])
    field1 = DistributionField(3, [[1.0, -1.0, 1.0]])
    field2 = DistributionField(2, [[-1.0, 1.0]])
    coupling = DistributionField(5, [[0.0, 0.0, 1.0, -1.0, 0.0]])
    spec = InterconnectionSpec([field1, field2], coupling)
    force = PolynomialForce(5, [(0, -p["R"], (0,) * 5, (1, 0, 0, 0, 0))])
    return LagrangeDiracSystem(lag, force, spec)


def _build_lc(p):
    return _build_rlc({"R": 0.0, "L": p["L"], "C": p["C"]})


def _build_rlc_primitive_1(p):
    lag = _circuit1_lagrangian(p)
    spec = InterconnectionSpec([DistributionField(3, [[1.0, -1.0, 1.0]])])
    force = PolynomialForce(3, [
        (0, -p["R"], (0, 0, 0), (1, 0, 0)),
        (2, p["f_s1"], (0, 0, 0), (0, 0, 0)),
    ])
    return LagrangeDiracSystem(lag, force, spec)


def _build_rlc_primitive_2(p):
    lag = _circuit2_lagrangian(p)
    spec = InterconnectionSpec([DistributionField(2, [[-1.0, 1.0]])])
    force = PolynomialForce(2, [(0, -p["f_s2"], (0, 0), (0, 0))])
    return LagrangeDiracSystem(lag, force, spec)


_THETA = slice(2, 5)
_U = slice(5, 8)
_RECENTER_ANGLE = 0.5 * math.pi


def _ball_lagrangian(p):
    i1, i2, m3 = p["I1"], p["I2"], p["m3"]

    def value(q, v):
        omega = rotation.spatial_velocity(q[_THETA], v[_THETA])
        return (0.5 * i1 * v[0] ** 2 + 0.5 * i2 * v[1] ** 2
                + m3 * float(omega @ omega)
                + 0.5 * m3 * float(v[_U] @ v[_U]))

    def grad_v(q, v):
        theta = q[_THETA]
        omega = rotation.spatial_velocity(theta, v[_THETA])
        out = np.zeros(8)
        out[0] = i1 * v[0]
        out[1] = i2 * v[1]
        out[_THETA] = 2.0 * m3 * rotation.apply_left_jacobian_t(theta, omega)
        out[_U] = m3 * v[_U]
        return out

    def grad_q(q, v):
        # Only the rotation coordinates enter the kinetic energy.
        out = np.zeros(8)
        thdot = v[_THETA]

        def rot_energy(th):
            omega = rotation.spatial_velocity(th, thdot)
            return m3 * float(omega @ omega)

        out[_THETA] = central_difference_gradient(rot_energy, q[_THETA])
        return out

    return CallableLagrangian(8, value, grad_q=grad_q, grad_v=grad_v)


def _ball_coupling(base_rotation):
    def rows(q):
        m = base_rotation @ rotation.left_jacobian(q[_THETA])
        u1, u2 = q[5], q[6]
        gear = [1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        # Contact-point velocity of the ball matches the table surface:
        # in-plane components of (-omega x k + udot) equal s2dot k x u.
        contact_x = [0.0, u2, -m[1, 0], -m[1, 1], -m[1, 2], 1.0, 0.0, 0.0]
        contact_y = [0.0, -u1, m[0, 0], m[0, 1], m[0, 2], 0.0, 1.0, 0.0]
        return np.array([gear, contact_x, contact_y])

    return DistributionField(8, rows, row_count=3)


def _ball_chart_update(params, base_rotation):
    m3 = params["m3"]

    def update(system, state):
        theta = state.q[_THETA]
        if float(np.linalg.norm(theta)) <= _RECENTER_ANGLE:
            return None
        jac = rotation.left_jacobian(theta)
        new_base = base_rotation @ rotation.exp_map(theta)
        new_state = state.copy()
        new_state.q[_THETA] = 0.0
        new_state.v[_THETA] = jac.T @ state.v[_THETA]
        new_state.p[_THETA] = 2.0 * m3 * new_state.v[_THETA]
        return _assemble_ball(params, new_base), new_state

    return update


def _assemble_ball(p, base_rotation=None):
    if base_rotation is None:
        base_rotation = np.eye(3)
    lag = _ball_lagrangian(p)
    holonomic = DistributionField(6, [[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]])
    spec = InterconnectionSpec(
        [unconstrained(1), unconstrained(1), holonomic],
        _ball_coupling(base_rotation),
    )
    force = PolynomialForce(8, [(0, p["tau"], (0,) * 8, (0,) * 8)])
    system = LagrangeDiracSystem(lag, force, spec,
                                 chart_update=_ball_chart_update(p, base_rotation))
    system.metadata["base_rotation"] = base_rotation
    return system


def _build_rolling_ball(p):
    # Coordinates (s1, s2, theta1..3, u1..3): two table angles, exponential
    # rotation coordinates of the unit ball, and its center position.
    return _assemble_ball(p)


_TEMPLATES = [
    SystemTemplate(
        "harmonic", {"m": 1.0, "k": 1.0}, _build_harmonic,
        "One-dimensional oscillator in implicit form.",
        {"config_dim": 1, "constraint_rank": 0, "degenerate_momenta": []},
        positive=("m", "k"),
    ),
    SystemTemplate(
        "damped", {"m": 1.0, "k": 1.0, "r": 0.5}, _build_damped,
        "Oscillator with a linear damping force.",
        {"config_dim": 1, "constraint_rank": 0, "degenerate_momenta": []},
        positive=("m", "k"), nonnegative=("r",),
    ),
    SystemTemplate(
        "mass-spring",
        {"m1": 1.0, "m2": 1.0, "m3": 1.0, "k1": 1.0, "k2": 1.0, "k3": 1.0},
        _build_mass_spring,
        "Three-mass spring chain torn into two units sharing a massless "
        "boundary point; one coupling row ties the boundary velocities.",
        {"config_dim": 4, "constraint_rank": 1, "degenerate_momenta": [2],
         "coordinates": ["x1", "x2", "xbar2", "x3"]},
        positive=("m1", "m2", "m3", "k1", "k2", "k3"),
    ),
    SystemTemplate(
        "rlc", {"R": 1.0, "L": 1.0, "C": 1.0}, _build_rlc,
        "Resistor-inductor circuit and capacitor circuit joined across "
        "matched ports; current-law rows constrain charges, port forces "
        "arise as coupling multipliers.",
        {"config_dim": 5, "constraint_rank": 3, "constraint_kernel_dim": 2,
         "degenerate_momenta": [0, 2, 3, 4],
         "coordinates": ["qR", "qL", "qS1", "qS2", "qC"]},
        positive=("L", "C"), nonnegative=("R",),
    ),
    SystemTemplate(
        "lc", {"L": 1.0, "C": 1.0}, _build_lc,
        "The port-joined circuit with the resistor branch shorted (R = 0).",
        {"config_dim": 5, "constraint_rank": 3, "constraint_kernel_dim": 2,
         "degenerate_momenta": [0, 2, 3, 4]},
        positive=("L", "C"),
    ),
    SystemTemplate(
        "rlc-primitive-1", {"R": 1.0, "L": 1.0, "f_s1": 0.0},
        _build_rlc_primitive_1,
        "Resistor-inductor circuit alone, with an explicit port force.",
        {"config_dim": 3, "constraint_rank": 1, "degenerate_momenta": [0, 2]},
        positive=("L",), nonnegative=("R",),
    ),
    SystemTemplate(
        "rlc-primitive-2", {"C": 1.0, "f_s2": 0.0}, _build_rlc_primitive_2,
        "Capacitor circuit alone, with an explicit port force.",
        {"config_dim": 2, "constraint_rank": 1, "degenerate_momenta": [0, 1]},
        positive=("C",),
    ),
    SystemTemplate(
        "rolling-ball",
        {"I1": 1.0, "I2": 1.0, "m3": 4.0 * math.pi / 3.0, "tau": 0.1},
        _build_rolling_ball,
        "Unit ball rolling without slip on a rotating table geared to a "
        "driven table; exponential rotation coordinates with chart "
        "re-centering past half pi.",
        {"config_dim": 8, "constraint_rank": 4,
         "coordinates": ["s1", "s2", "th1", "th2", "th3", "u1", "u2", "u3"]},
        positive=("I1", "I2", "m3"),
    ),
]

_BY_NAME = {t.name: t for t in _TEMPLATES}


def list_builtins():
    """Template summaries for every bundled system."""
    return [t.summary() for t in _TEMPLATES]


def get_template(name) -> SystemTemplate:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise UnknownSystemError(
            f"unknown system {name!r}; available: {sorted(_BY_NAME)}"
        ) from None


def build_builtin(name, params=None) -> LagrangeDiracSystem:
    return get_template(name).build(params)
