"""Config-file schema: validation, system building, and template export.

Configs are JSON documents with four sections: ``system`` (a builtin name
plus parameters, or a custom polynomial system), ``integrator``,
``initial``, and optional ``output``.  Validation is strict: unknown keys
anywhere are rejected with a path into the document, before any
computation runs.
"""

import json

import numpy as np

from .induced import DistributionField, InterconnectionSpec, unconstrained
from .integrator import IntegratorConfig
from .library import get_template
from .mechanics import (LagrangeDiracSystem, PolynomialForce,
                        PolynomialLagrangian)

OUTPUT_FIELDS = ("t", "q", "v", "p", "mu", "E", "power_residual",
                 "constraint_residual_max", "newton_iters")


class ConfigError(ValueError):
    """Schema violation; the message carries a path into the document."""


def _fail(path, message):
    raise ConfigError(f"{path}: {message}")


def _require_keys(obj, path, required, optional=()):
    if not isinstance(obj, dict):
        _fail(path, "expected an object")
    for key in obj:
        if key not in required and key not in optional:
            _fail(path, f"unknown key {key!r}")
    for key in required:
        if key not in obj:
            _fail(path, f"missing required key {key!r}")


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, "expected a number")
    return float(value)


def _vector(value, path, length=None):
    if not isinstance(value, list) or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
    ):
        _fail(path, "expected a list of numbers")
    if length is not None and len(value) != length:
        _fail(path, f"expected length {length}, got {len(value)}")
    return [float(x) for x in value]


def _exponents(value, path, length):
    if not isinstance(value, list) or not all(
        isinstance(x, int) and not isinstance(x, bool) and x >= 0 for x in value
    ):
        _fail(path, "expected a list of non-negative integers")
    if len(value) != length:
        _fail(path, f"expected length {length}, got {len(value)}")
    return tuple(value)


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return validate_config(raw)


def validate_config(raw):
    _require_keys(raw, "config", required=("system",),
                  optional=("integrator", "initial", "output"))
    system = raw["system"]
    _require_keys(system, "system", required=(), optional=("builtin", "params",
                                                           "custom"))
    if ("builtin" in system) == ("custom" in system):
        _fail("system", "give exactly one of 'builtin' or 'custom'")
    if "builtin" in system:
        if not isinstance(system["builtin"], str):
            _fail("system.builtin", "expected a string")
        params = system.get("params", {})
        if not isinstance(params, dict):
            _fail("system.params", "expected an object")
        for key, value in params.items():
            _number(value, f"system.params.{key}")
    else:
        if "params" in system:
            _fail("system.params", "only valid with a builtin system")
        _validate_custom(system["custom"])
    if "integrator" in raw:
        _validate_integrator(raw["integrator"])
    if "initial" in raw:
        _require_keys(raw["initial"], "initial", required=("q0", "v0"))
        _vector(raw["initial"]["q0"], "initial.q0")
        _vector(raw["initial"]["v0"], "initial.v0")
    if "output" in raw:
        _require_keys(raw["output"], "output", required=(),
                      optional=("path", "fields"))
        if "path" in raw["output"] and not isinstance(raw["output"]["path"], str):
            _fail("output.path", "expected a string")
        fields = raw["output"].get("fields")
        if fields is not None:
            if not isinstance(fields, list) or not all(
                isinstance(f, str) for f in fields
            ):
                _fail("output.fields", "expected a list of field names")
            for f in fields:
                if f not in OUTPUT_FIELDS:
                    _fail("output.fields",
                          f"unknown field {f!r}; valid: {list(OUTPUT_FIELDS)}")
    return raw


def _validate_row(row, path, width):
    if isinstance(row, dict):
        _require_keys(row, path, required=("constant",),
                      optional=("linear_in_q",))
        _vector(row["constant"], f"{path}.constant", width)
        if "linear_in_q" in row:
            matrix = row["linear_in_q"]
            if not isinstance(matrix, list) or len(matrix) != width:
                _fail(f"{path}.linear_in_q", f"expected {width} rows")
            for i, mrow in enumerate(matrix):
                _vector(mrow, f"{path}.linear_in_q[{i}]", width)
    else:
        _vector(row, path, width)


def _validate_rows(rows, path, width):
    if not isinstance(rows, list):
        _fail(path, "expected a list of constraint rows")
    for i, row in enumerate(rows):
        _validate_row(row, f"{path}[{i}]", width)


def _validate_custom(custom):
    path = "system.custom"
    _require_keys(custom, path, required=("dimension", "lagrangian"),
                  optional=("subsystems", "constraints", "forces", "coupling"))
    dim = custom["dimension"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        _fail(f"{path}.dimension", "expected a positive integer")
    subsystems = custom.get("subsystems", [dim])
    if (not isinstance(subsystems, list) or not subsystems or not all(
        isinstance(d, int) and not isinstance(d, bool) and d >= 1
        for d in subsystems
    )):
        _fail(f"{path}.subsystems", "expected a list of positive integers")
    if sum(subsystems) != dim:
        _fail(f"{path}.subsystems", f"must sum to dimension {dim}")
    lagrangian = custom["lagrangian"]
    if not isinstance(lagrangian, list):
        _fail(f"{path}.lagrangian", "expected a list of terms")
    for i, term in enumerate(lagrangian):
        tpath = f"{path}.lagrangian[{i}]"
        _require_keys(term, tpath, required=("coeff",),
                      optional=("q_exps", "v_exps"))
        _number(term["coeff"], f"{tpath}.coeff")
        for key in ("q_exps", "v_exps"):
            if key in term:
                _exponents(term[key], f"{tpath}.{key}", dim)
    constraints = custom.get("constraints")
    if constraints is not None:
        if len(subsystems) == 1:
            _validate_rows(constraints, f"{path}.constraints", subsystems[0])
        else:
            if not isinstance(constraints, list) or len(constraints) != len(subsystems):
                _fail(f"{path}.constraints",
                      "expected one row list per subsystem")
            for i, (rows, width) in enumerate(zip(constraints, subsystems)):
                _validate_rows(rows, f"{path}.constraints[{i}]", width)
    if "coupling" in custom:
        _validate_rows(custom["coupling"], f"{path}.coupling", dim)
    forces = custom.get("forces", [])
    if not isinstance(forces, list):
        _fail(f"{path}.forces", "expected a list of terms")
    for i, term in enumerate(forces):
        tpath = f"{path}.forces[{i}]"
        _require_keys(term, tpath, required=("component", "coeff"),
                      optional=("q_exps", "v_exps"))
        comp = term["component"]
        if not isinstance(comp, int) or isinstance(comp, bool) or not (
            0 <= comp < dim
        ):
            _fail(f"{tpath}.component", f"expected an index in [0, {dim})")
        _number(term["coeff"], f"{tpath}.coeff")
        for key in ("q_exps", "v_exps"):
            if key in term:
                _exponents(term[key], f"{tpath}.{key}", dim)


def _validate_integrator(section):
    _require_keys(section, "integrator", required=(),
                  optional=("scheme", "h", "t_final", "newton_tol",
                            "newton_max_iter"))
    if "scheme" in section and section["scheme"] not in (
        "implicit-midpoint", "backward-euler"
    ):
        _fail("integrator.scheme",
              "expected 'implicit-midpoint' or 'backward-euler'")
    for key in ("h", "t_final", "newton_tol"):
        if key in section and _number(section[key], f"integrator.{key}") <= 0:
            _fail(f"integrator.{key}", "must be positive")
    if "newton_max_iter" in section:
        v = section["newton_max_iter"]
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            _fail("integrator.newton_max_iter", "expected a positive integer")


def _rows_field(rows, width):
    """A DistributionField from a validated list of constant/affine rows."""
    if not rows:
        return unconstrained(width)
    constant = [r for r in rows if not isinstance(r, dict)]
    if len(constant) == len(rows):
        return DistributionField(width, np.array(constant, dtype=float))
    parts = []
    for row in rows:
        if isinstance(row, dict):
            c = np.asarray(row["constant"], dtype=float)
            m = np.asarray(row.get("linear_in_q",
                                   np.zeros((width, width))), dtype=float)
            parts.append((c, m))
        else:
            parts.append((np.asarray(row, dtype=float), np.zeros((width, width))))

    def omega(q):
        return np.vstack([c + m @ q for c, m in parts])

    return DistributionField(width, omega, row_count=len(parts))


def build_system(config) -> LagrangeDiracSystem:
    system = config["system"]
    if "builtin" in system:
        return get_template(system["builtin"]).build(system.get("params"))
    custom = system["custom"]
    dim = custom["dimension"]
    subsystems = custom.get("subsystems", [dim])
    zeros = (0,) * dim
    terms = [(t["coeff"], tuple(t.get("q_exps", zeros)),
              tuple(t.get("v_exps", zeros))) for t in custom["lagrangian"]]
    lagrangian = PolynomialLagrangian(dim, terms)
    constraints = custom.get("constraints")
    if constraints is None:
        per_subsystem = [[] for _ in subsystems]
    elif len(subsystems) == 1:
        per_subsystem = [constraints]
    else:
        per_subsystem = constraints
    fields = [_rows_field(rows, width)
              for rows, width in zip(per_subsystem, subsystems)]
    coupling = _rows_field(custom.get("coupling", []), dim)
    spec = InterconnectionSpec(fields, coupling)
    force_terms = [(t["component"], t["coeff"], tuple(t.get("q_exps", zeros)),
                    tuple(t.get("v_exps", zeros)))
                   for t in custom.get("forces", [])]
    force = PolynomialForce(dim, force_terms)
    return LagrangeDiracSystem(lagrangian, force, spec, name="custom")


def integrator_settings(config, overrides=None):
    """IntegratorConfig plus the final time, with CLI overrides applied."""
    section = dict(config.get("integrator", {}))
    for key, value in (overrides or {}).items():
        if value is not None:
            section[key] = value
    _validate_integrator(section)
    if "h" not in section or "t_final" not in section:
        _fail("integrator", "simulation needs both 'h' and 't_final'")
    cfg = IntegratorConfig(
        scheme=section.get("scheme", "implicit-midpoint"),
        h=float(section["h"]),
        newton_tol=float(section.get("newton_tol", 1e-12)),
        newton_max_iter=int(section.get("newton_max_iter", 50)),
    )
    return cfg, float(section["t_final"])


def initial_conditions(config, system):
    if "initial" not in config:
        _fail("initial", "simulation needs an 'initial' section")
    n = system.config_dim
    q0 = _vector(config["initial"]["q0"], "initial.q0", n)
    v0 = _vector(config["initial"]["v0"], "initial.v0", n)
    return np.array(q0), np.array(v0)


def _field_rows_as_lists(field, q):
    return [[float(x) for x in row] for row in field.rows(q)]


def export_template(name, params=None):
    """A config 'system' section that rebuilds the named template.

    Polynomial templates export their full custom representation; systems
    with closed-form Lagrangians export as builtin references.
    """
    template = get_template(name)
    merged = template.resolve(params)
    system = template.build(params)
    if system.lagrangian.polynomial_data() is None or not all(
        f.is_constant for f in list(system.constraints.fields)
        + [system.constraints.coupling]
    ):
        return {"builtin": name, "params": merged}
    dims = [f.config_dim for f in system.constraints.fields]
    q = np.zeros(system.config_dim)
    constraints = [
        _field_rows_as_lists(f, q[:f.config_dim]) for f in system.constraints.fields
    ]
    custom = {
        "dimension": system.config_dim,
        "subsystems": dims,
        "lagrangian": [
            {"coeff": c, "q_exps": list(qe), "v_exps": list(ve)}
            for c, qe, ve in system.lagrangian.terms()
        ],
        "constraints": constraints if len(dims) > 1 else constraints[0],
        "coupling": _field_rows_as_lists(system.constraints.coupling, q),
        "forces": [
            {"component": comp, "coeff": c, "q_exps": list(qe), "v_exps": list(ve)}
            for comp, c, qe, ve in system.force.terms()
        ],
    }
    return {"custom": custom}
