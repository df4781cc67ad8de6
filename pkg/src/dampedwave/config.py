"""Run configuration: dataclasses, named profiles, YAML loading.

A run is described by one YAML document with sections ``space``,
``graph``, ``time``, ``init``, ``forcing``, ``newton`` plus the optional
top-level keys ``lambda``, ``output_every``, ``label``.  Initial data
are named profiles ("zero", "constant:c", "sine:k[:amp]",
"cosine:k[:amp]", "ramp") or a CSV column ("csv:path:col"); forcing is
"zero", "constant:c", or a sampled time-by-node CSV table
("table:path").
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import yaml

from .errors import ConfigError
from .graphs import (
    GraphKind,
    MonotoneGraph,
    RegularizedPotential,
    family_beta,
    family_dbeta,
    family_j,
    moreau,
    yosida,
    yosida_derivative,
)
from .grid import DIRICHLET, NEUMANN, Grid, regularize_initial


@dataclass(frozen=True)
class Reaction:
    """The regularized reaction used inside the implicit solver.

    For the indicator and logarithmic graphs this is the Yosida
    approximant at ``epsilon`` together with the Moreau envelope as its
    potential.  The piecewise-linear family is used verbatim (its own
    beta is the regularizer), in which case ``epsilon`` is the family
    index eps_param and the boundary-layer width scales like eps_param
    instead of sqrt(epsilon).
    """

    graph: MonotoneGraph
    epsilon: float
    layer_width: float

    def beta(self, u):
        if self.graph.kind == GraphKind.FAMILY:
            return family_beta(self.graph.r_threshold, self.graph.eps_param, u)
        return yosida(RegularizedPotential(self.graph, self.epsilon), u)

    def dbeta(self, u):
        if self.graph.kind == GraphKind.FAMILY:
            return family_dbeta(self.graph.r_threshold, self.graph.eps_param, u)
        return yosida_derivative(RegularizedPotential(self.graph, self.epsilon), u)

    def pot(self, u):
        if self.graph.kind == GraphKind.FAMILY:
            return family_j(self.graph.r_threshold, self.graph.eps_param, u)
        return moreau(RegularizedPotential(self.graph, self.epsilon), u)

    def scalar_fns(self):
        """Plain-float beta and dbeta closures for the homogeneous fast path."""
        if self.graph.kind == GraphKind.INDICATOR:
            eps = self.epsilon

            def b(r):
                if r > 1.0:
                    return (r - 1.0) / eps
                if r < -1.0:
                    return (r + 1.0) / eps
                return 0.0

            def db(r):
                return 1.0 / eps if (r >= 1.0 or r <= -1.0) else 0.0

            return b, db
        if self.graph.kind == GraphKind.FAMILY:
            rt = self.graph.r_threshold
            slope = 1.0 / (self.graph.eps_param ** 2)

            def b(r):
                if r > rt:
                    return slope * (r - rt)
                if r < -rt:
                    return slope * (r + rt)
                return 0.0

            def db(r):
                return slope if (r >= rt or r <= -rt) else 0.0

            return b, db

        def b(r):
            return float(self.beta(np.array([r]))[0])

        def db(r):
            return float(self.dbeta(np.array([r]))[0])

        return b, db


def make_reaction(graph: MonotoneGraph, epsilon: float | None) -> Reaction:
    if graph.kind == GraphKind.FAMILY:
        ep = graph.eps_param
        return Reaction(graph, ep, layer_width=math.pi * ep)
    if epsilon is None or epsilon <= 0.0:
        raise ConfigError("graph.epsilon", "must be a positive real")
    return Reaction(graph, epsilon, layer_width=math.pi * math.sqrt(epsilon))


# ---------------------------------------------------------------------------
# profiles


def profile_field(grid: Grid, spec) -> np.ndarray:
    """Materialize a named initial-data profile on the grid nodes."""
    if isinstance(spec, np.ndarray):
        grid.check_field(spec, "profile")
        return np.array(spec, dtype=float)
    if not isinstance(spec, str):
        raise ConfigError("init", f"profile must be a string or array, got {spec!r}")
    parts = spec.split(":")
    name = parts[0]
    x = grid.x
    L = grid.length
    try:
        if name == "zero":
            return np.zeros(grid.n_nodes)
        if name == "constant":
            return float(parts[1]) * np.ones(grid.n_nodes)
        if name == "sine":
            k = int(parts[1])
            amp = float(parts[2]) if len(parts) > 2 else 1.0
            return amp * np.sin(k * math.pi * x / L)
        if name == "cosine":
            k = int(parts[1])
            amp = float(parts[2]) if len(parts) > 2 else 1.0
            return amp * np.cos(k * math.pi * x / L)
        if name == "ramp":
            return x / L
        if name == "csv":
            path, col = parts[1], int(parts[2])
            vals = _read_csv_column(path, col)
            if len(vals) != grid.n_nodes:
                raise ConfigError(
                    "init", f"csv column has {len(vals)} rows, grid needs {grid.n_nodes}"
                )
            return np.asarray(vals, dtype=float)
    except (IndexError, ValueError) as exc:
        raise ConfigError("init", f"bad profile spec {spec!r}: {exc}") from exc
    raise ConfigError("init", f"unknown profile {name!r}")


def _read_csv_column(path: str, col: int) -> list[float]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                out.append(float(row[col]))
            except ValueError:
                continue  # header line
    return out


def forcing_function(grid: Grid, spec) -> Callable[[float], np.ndarray] | None:
    """Build g(t) -> field, or None for zero forcing."""
    if spec is None or spec == "zero":
        return None
    if isinstance(spec, (int, float)):
        g = float(spec) * np.ones(grid.n_nodes)
        return lambda t: g
    if isinstance(spec, str):
        parts = spec.split(":")
        if parts[0] == "constant":
            try:
                g = float(parts[1]) * np.ones(grid.n_nodes)
            except (IndexError, ValueError) as exc:
                raise ConfigError("forcing", f"bad spec {spec!r}") from exc
            return lambda t: g
        if parts[0] == "table":
            return _table_forcing(grid, parts[1])
        if parts[0] in ("sine", "cosine", "ramp"):
            # time-constant spatial profile
            g = profile_field(grid, spec)
            return lambda t: g
        raise ConfigError("forcing", f"unknown forcing {spec!r}")
    raise ConfigError("forcing", f"unknown forcing {spec!r}")


def _table_forcing(grid: Grid, path: str):
    """Sampled forcing: column 0 is time, remaining columns are node values."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                continue
    table = np.asarray(rows)
    if table.ndim != 2 or table.shape[1] != grid.n_nodes + 1:
        raise ConfigError(
            "forcing", f"table needs {grid.n_nodes + 1} columns (t + nodes)"
        )
    times = table[:, 0]
    values = table[:, 1:]

    def g(t: float) -> np.ndarray:
        i = np.searchsorted(times, t)
        if i == 0:
            return values[0]
        if i >= len(times):
            return values[-1]
        w = (t - times[i - 1]) / (times[i] - times[i - 1])
        return (1.0 - w) * values[i - 1] + w * values[i]

    return g


# ---------------------------------------------------------------------------
# the run configuration


@dataclass(frozen=True)
class SimConfig:
    length: float = 1.0
    n_nodes: int = 1
    bc: str = NEUMANN
    graph_kind: str = "indicator"
    epsilon: float | None = 1e-3
    r_threshold: float | None = None
    eps_param: float | None = None
    T: float = 1.0
    dt: float = 1e-3
    theta: float = 1.0
    u0: object = "zero"
    u1: object = "zero"
    forcing: object = "zero"
    lam: float = 0.0
    newton_tol: float = 1e-10
    newton_max_iter: int = 50
    output_every: int = 1
    regularize_u0: bool = True
    label: str = ""

    def validate(self) -> "SimConfig":
        if self.length <= 0:
            raise ConfigError("space.length", "must be positive")
        if self.bc not in (DIRICHLET, NEUMANN):
            raise ConfigError("space.bc", f"must be dirichlet or neumann, got {self.bc!r}")
        if self.n_nodes < 3 and not (self.n_nodes == 1 and self.bc == NEUMANN):
            raise ConfigError("space.n_nodes", "must be >= 3 (or 1 with Neumann bc)")
        if self.graph_kind not in ("indicator", "logarithmic", "family"):
            raise ConfigError("graph.kind", f"unknown kind {self.graph_kind!r}")
        if self.graph_kind == "family":
            if self.r_threshold is None or not 0.0 < self.r_threshold <= 1.0:
                raise ConfigError("graph.r_threshold", "must lie in (0, 1]")
            if self.eps_param is None or self.eps_param <= 0.0:
                raise ConfigError("graph.eps_param", "must be positive")
        elif self.epsilon is None or self.epsilon <= 0.0:
            raise ConfigError("graph.epsilon", "must be a positive real")
        if self.T <= 0:
            raise ConfigError("time.T", "must be positive")
        if self.dt <= 0:
            raise ConfigError("time.dt", "must be positive")
        if self.dt > self.T:
            raise ConfigError("time.dt", "must not exceed time.T")
        if not 0.5 <= self.theta <= 1.0:
            raise ConfigError("time.theta", "must lie in [1/2, 1]")
        if self.lam < 0:
            raise ConfigError("lambda", "must be nonnegative")
        if self.newton_tol <= 0:
            raise ConfigError("newton.tol", "must be positive")
        if self.newton_max_iter < 1:
            raise ConfigError("newton.max_iter", "must be >= 1")
        if self.output_every < 1:
            raise ConfigError("output_every", "must be >= 1")
        return self

    # -- derived objects ----------------------------------------------------

    def grid(self) -> Grid:
        return Grid(self.length, self.n_nodes, self.bc)

    def graph(self) -> MonotoneGraph:
        kind = GraphKind(self.graph_kind)
        if kind == GraphKind.FAMILY:
            return MonotoneGraph(kind, self.r_threshold, self.eps_param)
        return MonotoneGraph(kind)

    def reaction(self) -> Reaction:
        return make_reaction(self.graph(), self.epsilon)

    def initial_fields(self, grid: Grid | None = None):
        grid = grid or self.grid()
        u0 = profile_field(grid, self.u0)
        u1 = profile_field(grid, self.u1)
        if self.regularize_u0:
            u0 = regularize_initial(grid, u0, self.reaction().epsilon)
        return u0, u1

    def forcing_fn(self, grid: Grid | None = None):
        return forcing_function(grid or self.grid(), self.forcing)

    def with_epsilon(self, epsilon: float, dt: float | None = None) -> "SimConfig":
        """Sweep helper: moves the regularization index, optionally the step."""
        kw = {"dt": dt if dt is not None else self.dt}
        if self.graph_kind == "family":
            kw["eps_param"] = epsilon
        else:
            kw["epsilon"] = epsilon
        return replace(self, **kw)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "space": {"length": self.length, "n_nodes": self.n_nodes, "bc": self.bc},
            "graph": {"kind": self.graph_kind},
            "time": {"T": self.T, "dt": self.dt, "theta": self.theta},
            "init": {"u0": _spec_repr(self.u0), "u1": _spec_repr(self.u1)},
            "forcing": _spec_repr(self.forcing),
            "newton": {"tol": self.newton_tol, "max_iter": self.newton_max_iter},
            "lambda": self.lam,
            "output_every": self.output_every,
            "regularize_u0": self.regularize_u0,
            "label": self.label,
        }
        if self.graph_kind == "family":
            d["graph"]["r_threshold"] = self.r_threshold
            d["graph"]["eps_param"] = self.eps_param
        else:
            d["graph"]["epsilon"] = self.epsilon
        return d

    def config_hash(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


def _spec_repr(spec):
    if isinstance(spec, np.ndarray):
        return {"array": [float(v) for v in spec]}
    return spec


def _get(section: dict, sec_name: str, key: str, required=True, default=None):
    if key not in section:
        if required:
            raise ConfigError(f"{sec_name}.{key}", "missing required key")
        return default
    return section[key]


def from_dict(doc: dict) -> SimConfig:
    """Build and validate a SimConfig from a parsed YAML document."""
    if not isinstance(doc, dict):
        raise ConfigError("document", "config must be a mapping")
    space = doc.get("space", {})
    graphd = doc.get("graph", {})
    timed = doc.get("time", {})
    initd = doc.get("init", {})
    newton = doc.get("newton", {})
    kind = _get(graphd, "graph", "kind")
    u0 = _get(initd, "init", "u0", required=False, default="zero")
    u1 = _get(initd, "init", "u1", required=False, default="zero")
    if isinstance(u0, dict) and "array" in u0:
        u0 = np.asarray(u0["array"], dtype=float)
    if isinstance(u1, dict) and "array" in u1:
        u1 = np.asarray(u1["array"], dtype=float)
    cfg = SimConfig(
        length=float(_get(space, "space", "length", required=False, default=1.0)),
        n_nodes=int(_get(space, "space", "n_nodes", required=False, default=1)),
        bc=str(_get(space, "space", "bc", required=False, default=NEUMANN)),
        graph_kind=str(kind),
        epsilon=_maybe_float(graphd.get("epsilon")),
        r_threshold=_maybe_float(graphd.get("r_threshold")),
        eps_param=_maybe_float(graphd.get("eps_param")),
        T=float(_get(timed, "time", "T")),
        dt=float(_get(timed, "time", "dt")),
        theta=float(_get(timed, "time", "theta", required=False, default=1.0)),
        u0=u0,
        u1=u1,
        forcing=doc.get("forcing", "zero"),
        lam=float(doc.get("lambda", 0.0)),
        newton_tol=float(_get(newton, "newton", "tol", required=False, default=1e-10)),
        newton_max_iter=int(
            _get(newton, "newton", "max_iter", required=False, default=50)
        ),
        output_every=int(doc.get("output_every", 1)),
        regularize_u0=bool(doc.get("regularize_u0", True)),
        label=str(doc.get("label", "")),
    )
    return cfg.validate()


def _maybe_float(v):
    return None if v is None else float(v)


def load_config(path) -> SimConfig:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError("file", f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError("file", f"cannot parse config {path}: {exc}") from exc
    return from_dict(doc)
