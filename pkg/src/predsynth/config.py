"""Problem configuration files for the command-line tool.

A configuration is a JSON object with the top-level fields ``agents``,
``kernel``, ``discrete``, ``query`` and ``run``.  It describes exactly one of

* a discrete problem: ``discrete`` only (a pool or a vertex tensor plus a panel);
* a continuous problem: ``agents`` and ``kernel``;
* a bridge problem: ``agents`` and ``kernel`` with ``run.n_values`` set.

Example::

    {
      "agents": [{"kind": "gaussian", "mean": 0.0, "stddev": 1.0}],
      "kernel": {"kind": "linear-gaussian", "intercept": 0.0, "weights": [1.0], "stddev": 1.0},
      "query": {"y": [1.0]},
      "run": {"n_values": [16, 32, 64], "threshold": 1e-3}
    }
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .continuous import DiracKernel, LinearGaussianKernel, MonteCarlo, Quadrature, SynthesisProblem, TableKernel
from .discrete import LinearPool, PiTensor, pool_to_pi
from .errors import PredsynthError
from .forecast_model import TEXT_ATOL, AgentPanel, EmpiricalAgent, GaussianAgent, GaussianMixtureAgent, MarginalMeans

TOP_LEVEL = ("agents", "kernel", "discrete", "query", "run")
RUN_DEFAULTS = {
    "seed": 0,
    "draws": 100_000,
    "nodes": 128,
    "method": "quadrature",
    "threads": 1,
    "threshold": 1e-3,
    "reference": "analytic",
}


class ConfigError(PredsynthError, ValueError):
    """Malformed configuration; carries the offending field and source line when known."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None, source: str | None = None):
        self.message = message
        self.field = field
        self.line = line
        self.source = source
        super().__init__(self.diagnostic())

    def diagnostic(self) -> str:
        where = self.source or "<config>"
        if self.line is not None:
            where = f"{where}:{self.line}"
        fld = f" [{self.field}]" if self.field else ""
        return f"{where}:{fld} {self.message}"


@dataclass
class ProblemConfig:
    kind: str
    agents: list[dict] = field(default_factory=list)
    kernel: dict | None = None
    discrete: dict | None = None
    query: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)
    base_dir: Path = field(default=Path("."), compare=False, repr=False)

    # -- builders -----------------------------------------------------------

    def build_agents(self):
        return tuple(_build_agent(a, i, self.base_dir) for i, a in enumerate(self.agents))

    def build_kernel(self):
        return _build_kernel(self.kernel, len(self.agents))

    def build_problem(self) -> SynthesisProblem:
        try:
            return SynthesisProblem(self.build_agents(), self.build_kernel())
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), field="kernel") from exc

    def build_method(self):
        r = self.run
        if r["method"] == "quadrature":
            return Quadrature(int(r["nodes"]))
        return MonteCarlo(int(r["draws"]), int(r["seed"]), int(r["threads"]))

    def build_discrete(self):
        """Return ``(pool or None, PiTensor, AgentPanel)``."""
        d = self.discrete
        try:
            panel = AgentPanel.from_arrays(np.atleast_2d(np.asarray(d["panel"], dtype=float)), atol=TEXT_ATOL)
            if "pi" in d:
                return None, PiTensor(np.asarray(d["pi"], dtype=float)), panel
            pool = LinearPool(d["p"], np.atleast_2d(np.asarray(d["lambda"], dtype=float)), MarginalMeans(d["mu"], atol=TEXT_ATOL))
            return pool, pool_to_pi(pool), panel
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(str(exc), field="discrete") from exc

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        out: dict[str, Any] = {}
        if self.agents:
            out["agents"] = self.agents
        if self.kernel is not None:
            out["kernel"] = self.kernel
        if self.discrete is not None:
            out["discrete"] = self.discrete
        out["query"] = self.query
        out["run"] = self.run
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _line_of(text: str | None, path: list[str]) -> int | None:
    """Line of the last key in ``path`` found by searching each key after the previous one."""
    if not text:
        return None
    pos, line = 0, None
    for key in path:
        m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
        if m:
            pos, line = m.end(), text.count("\n", 0, m.start()) + 1
    return line


def _num(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field=name)
    return float(value)


def _numlist(value, name: str) -> list[float]:
    if not isinstance(value, list):
        raise ConfigError(f"expected a list of numbers, got {value!r}", field=name)
    return [_num(v, name) for v in value]


def _require(obj: dict, key: str, prefix: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"expected an object, got {obj!r}", field=prefix)
    if key not in obj:
        raise ConfigError(f"missing field '{key}'", field=f"{prefix}.{key}" if prefix else key)
    return obj[key]


def _norm_agent(entry, i: int, base_dir: Path) -> dict:
    name = f"agents[{i}]"
    kind = _require(entry, "kind", name)
    if kind == "gaussian":
        return {"kind": kind, "mean": _num(_require(entry, "mean", name), f"{name}.mean"), "stddev": _num(_require(entry, "stddev", name), f"{name}.stddev")}
    if kind == "gaussian-mixture":
        comps = _require(entry, "components", name)
        if not isinstance(comps, list) or not comps:
            raise ConfigError("expected a non-empty list of components", field=f"{name}.components")
        out = []
        for j, c in enumerate(comps):
            cn = f"{name}.components[{j}]"
            out.append({k: _num(_require(c, k, cn), f"{cn}.{k}") for k in ("weight", "mean", "stddev")})
        return {"kind": kind, "components": out}
    if kind == "empirical":
        if "samples" in entry:
            return {"kind": kind, "samples": _numlist(entry["samples"], f"{name}.samples")}
        path = _require(entry, "path", name)
        p = Path(path)
        if not p.is_absolute():
            p = (base_dir / p).resolve()
        if not p.exists():
            raise ConfigError(f"sample file {str(p)!r} does not exist", field=f"{name}.path")
        return {"kind": kind, "path": str(p)}
    raise ConfigError(f"unknown agent kind {kind!r}", field=f"{name}.kind")


def _build_agent(entry: dict, i: int, base_dir: Path):
    name = f"agents[{i}]"
    try:
        kind = entry["kind"]
        if kind == "gaussian":
            return GaussianAgent(entry["mean"], entry["stddev"])
        if kind == "gaussian-mixture":
            c = entry["components"]
            return GaussianMixtureAgent([x["weight"] for x in c], [x["mean"] for x in c], [x["stddev"] for x in c])
        if "samples" in entry:
            return EmpiricalAgent(entry["samples"])
        return EmpiricalAgent(np.loadtxt(entry["path"], dtype=float, ndmin=1))
    except ConfigError:
        raise
    except (ValueError, TypeError, OSError) as exc:
        raise ConfigError(str(exc), field=name) from exc


def _norm_kernel(entry, K: int) -> dict:
    kind = _require(entry, "kind", "kernel")
    if kind == "linear-gaussian":
        return {
            "kind": kind,
            "intercept": _num(entry.get("intercept", 0.0), "kernel.intercept"),
            "weights": _numlist(_require(entry, "weights", "kernel"), "kernel.weights"),
            "stddev": _num(_require(entry, "stddev", "kernel"), "kernel.stddev"),
        }
    if kind == "dirac-passthrough":
        a = entry.get("agent", 0)
        if isinstance(a, bool) or not isinstance(a, int):
            raise ConfigError(f"expected an agent index, got {a!r}", field="kernel.agent")
        return {"kind": kind, "agent": a}
    if kind == "custom-table":
        table = _require(entry, "cdf", "kernel")
        if not isinstance(table, list):
            raise ConfigError("expected a list of rows", field="kernel.cdf")
        return {
            "kind": kind,
            "x_grid": _numlist(_require(entry, "x_grid", "kernel"), "kernel.x_grid"),
            "y_grid": _numlist(_require(entry, "y_grid", "kernel"), "kernel.y_grid"),
            "cdf": [_numlist(r, "kernel.cdf") for r in table],
        }
    raise ConfigError(f"unknown kernel kind {kind!r}", field="kernel.kind")


def _build_kernel(entry: dict, K: int):
    try:
        kind = entry["kind"]
        if kind == "linear-gaussian":
            return LinearGaussianKernel(entry["intercept"], entry["weights"], entry["stddev"])
        if kind == "dirac-passthrough":
            return DiracKernel(entry["agent"], arity=K)
        return TableKernel(entry["x_grid"], entry["y_grid"], entry["cdf"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), field="kernel") from exc


def _norm_discrete(entry) -> dict:
    if not isinstance(entry, dict):
        raise ConfigError("expected an object", field="discrete")
    panel = _require(entry, "panel", "discrete")
    out: dict[str, Any] = {"panel": [_numlist(r, "discrete.panel") for r in panel] if isinstance(panel, list) else _numlist(panel, "discrete.panel")}
    if "pi" in entry:
        out["pi"] = json.loads(json.dumps(entry["pi"]))
        try:
            np.asarray(out["pi"], dtype=float)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"tensor is not a rectangular numeric array: {exc}", field="discrete.pi") from exc
        return out
    out["p"] = _num(_require(entry, "p", "discrete"), "discrete.p")
    lam = _require(entry, "lambda", "discrete")
    mu = _require(entry, "mu", "discrete")
    if not isinstance(lam, list) or not isinstance(mu, list):
        raise ConfigError("lambda and mu must be lists of per-agent vectors", field="discrete")
    out["lambda"] = [_numlist(r, "discrete.lambda") for r in lam]
    out["mu"] = [_numlist(r, "discrete.mu") for r in mu]
    return out


def _norm_query(entry) -> dict:
    if entry is None:
        return {}
    if not isinstance(entry, dict):
        raise ConfigError("expected an object", field="query")
    out: dict[str, Any] = {}
    if "y" in entry:
        y = entry["y"]
        out["y"] = _numlist(y if isinstance(y, list) else [y], "query.y")
    if "quantiles" in entry:
        qs = _numlist(entry["quantiles"], "query.quantiles")
        if any(not 0 < q < 1 for q in qs):
            raise ConfigError("quantile levels must lie in (0, 1)", field="query.quantiles")
        out["quantiles"] = qs
    if "y_grid" in entry:
        g = entry["y_grid"]
        start = _num(_require(g, "start", "query.y_grid"), "query.y_grid.start")
        stop = _num(_require(g, "stop", "query.y_grid"), "query.y_grid.stop")
        num = _require(g, "num", "query.y_grid")
        if isinstance(num, bool) or not isinstance(num, int) or num < 2 or stop <= start:
            raise ConfigError("y_grid needs start < stop and an integer num >= 2", field="query.y_grid")
        out["y_grid"] = {"start": start, "stop": stop, "num": num}
    return out


def _norm_run(entry) -> dict:
    entry = {} if entry is None else entry
    if not isinstance(entry, dict):
        raise ConfigError("expected an object", field="run")
    out = dict(RUN_DEFAULTS)
    for key in ("seed", "draws", "nodes", "threads"):
        if key in entry:
            v = entry[key]
            if isinstance(v, bool) or not isinstance(v, int) or v < 0 or (key != "seed" and v < 1):
                raise ConfigError(f"expected a positive integer, got {v!r}", field=f"run.{key}")
            out[key] = v
    if "method" in entry:
        if entry["method"] not in ("quadrature", "monte-carlo"):
            raise ConfigError(f"method must be 'quadrature' or 'monte-carlo', got {entry['method']!r}", field="run.method")
        out["method"] = entry["method"]
    if "threshold" in entry:
        out["threshold"] = _num(entry["threshold"], "run.threshold")
    if "reference" in entry:
        ref = entry["reference"]
        if ref not in ("analytic", "quadrature") and (isinstance(ref, bool) or not isinstance(ref, (int, float))):
            raise ConfigError(f"reference must be 'analytic', 'quadrature' or a number, got {ref!r}", field="run.reference")
        out["reference"] = ref
    if "n_values" in entry:
        ns = entry["n_values"]
        if not isinstance(ns, list) or not ns or any(isinstance(v, bool) or not isinstance(v, int) or v < 1 for v in ns):
            raise ConfigError("n_values must be a non-empty list of positive integers", field="run.n_values")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigError("n_values must be strictly increasing", field="run.n_values")
        out["n_values"] = list(ns)
    return out


def parse_config(data: dict, base_dir: Path = Path("."), text: str | None = None, source: str | None = None) -> ProblemConfig:
    """Validate a decoded configuration and classify the problem it describes."""
    try:
        if not isinstance(data, dict):
            raise ConfigError("top level must be a JSON object")
        unknown = sorted(set(data) - set(TOP_LEVEL))
        if unknown:
            raise ConfigError(f"unknown top-level field(s): {', '.join(unknown)}", field=unknown[0])
        run = _norm_run(data.get("run"))
        query = _norm_query(data.get("query"))
        if "discrete" in data:
            if "agents" in data or "kernel" in data:
                raise ConfigError("a discrete problem cannot also declare agents or a kernel", field="discrete")
            cfg = ProblemConfig("discrete", discrete=_norm_discrete(data["discrete"]), query=query, run=run, base_dir=base_dir)
            cfg.build_discrete()
            return cfg
        agents = _require(data, "agents", "")
        if not isinstance(agents, list) or not agents:
            raise ConfigError("expected a non-empty list of agents", field="agents")
        norm_agents = [_norm_agent(a, i, base_dir) for i, a in enumerate(agents)]
        kernel = _norm_kernel(_require(data, "kernel", ""), len(norm_agents))
        kind = "bridge" if "n_values" in run else "continuous"
        cfg = ProblemConfig(kind, norm_agents, kernel, None, query, run, base_dir)
        cfg.build_problem()
        if kind == "bridge" and len(query.get("y", [])) != 1:
            raise ConfigError("a bridge problem needs exactly one query point in query.y", field="query.y")
        return cfg
    except ConfigError as exc:
        if exc.line is None and exc.field and text:
            # a missing key is anchored at its nearest enclosing key, else the top object
            exc.line = _line_of(text, [q.split("[")[0] for q in exc.field.split(".")]) or 1
        exc.source = source
        exc.args = (exc.diagnostic(),)
        raise


def load_config(path) -> ProblemConfig:
    """Read and validate a configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, line=exc.lineno, source=str(path)) from exc
    return parse_config(data, base_dir=path.parent, text=text, source=str(path))
