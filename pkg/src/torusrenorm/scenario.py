"""Run configurations: a scenario bundles the symbol, frequency, grids and
truncations an experiment needs, plus the bookkeeping (hash, seed) that makes
reruns reproducible.

The JSON schema is {"V": symbol-or-path, "omega": [...], "gamma": float,
"orders": N, "hbar": [...], "t": [...], "J": int} with optional "K_max",
"M_max", "tolerances", "out_dir", "seed". "V" is either an inline symbol
object or a path resolved relative to the scenario file.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ScenarioError
from .symbols import FrequencyVector, TorusSymbol

HASH_CHARS = 12


def _float_list(value, name: str) -> tuple:
    if not isinstance(value, (list, tuple)) or not value:
        raise ScenarioError(f"{name} must be a nonempty list")
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{name} entries must be numbers") from exc
    return out


@dataclass
class Scenario:
    """Validated configuration for the experiment subcommands."""

    v: TorusSymbol
    omega: tuple
    gamma_exp: float = 1.0
    orders: int = 2
    hbar_grid: tuple = (0.5,)
    t_grid: tuple = (0.05,)
    J: int = 32
    k_cap: int | None = None
    m_cap: int | None = None
    tolerances: dict = field(default_factory=dict)
    out_dir: str | None = None
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.v, TorusSymbol):
            raise ScenarioError("V must be a lattice symbol")
        self.omega = tuple(float(w) for w in self.omega)
        if len(self.omega) != self.v.d:
            raise ScenarioError("frequency dimension must match the symbol")
        if self.orders < 1:
            raise ScenarioError("orders must be >= 1")
        if self.J < 1:
            raise ScenarioError("J must be >= 1")
        self.hbar_grid = _float_list(self.hbar_grid, "hbar grid")
        self.t_grid = _float_list(self.t_grid, "t grid")
        if any(h <= 0 for h in self.hbar_grid):
            raise ScenarioError("hbar grid entries must be positive")
        if any(t < 0 for t in self.t_grid):
            raise ScenarioError("t grid entries must be nonnegative")
        for key, value in self.tolerances.items():
            if not (float(value) > 0):
                raise ScenarioError(f"tolerance {key!r} must be positive")
        self.seed = int(self.seed)

    def frequency(self) -> FrequencyVector:
        return FrequencyVector(self.omega, gamma_exp=self.gamma_exp)

    # The hash covers everything that affects the outputs, with the symbol
    # inlined so a scenario file that points at a path still hashes by value.
    def canonical_dict(self) -> dict:
        return {
            "V": self.v.to_json_dict(),
            "omega": list(self.omega),
            "gamma": self.gamma_exp,
            "orders": self.orders,
            "hbar": list(self.hbar_grid),
            "t": list(self.t_grid),
            "J": self.J,
            "K_max": self.k_cap,
            "M_max": self.m_cap,
            "tolerances": {k: float(v) for k, v in sorted(self.tolerances.items())},
            "seed": self.seed,
        }

    def canonical_json(self) -> str:
        return json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))

    def hash(self) -> str:
        digest = hashlib.sha256(self.canonical_json().encode()).hexdigest()
        return digest[:HASH_CHARS]

    @classmethod
    def from_json_dict(cls, payload, base_dir=None) -> "Scenario":
        if not isinstance(payload, dict):
            raise ScenarioError("scenario must be a JSON object")
        if "V" not in payload or "omega" not in payload:
            raise ScenarioError('scenario requires "V" and "omega"')
        raw_v = payload["V"]
        if isinstance(raw_v, str):
            path = Path(raw_v)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            if not path.exists():
                raise ScenarioError(f"symbol file not found: {path}")
            v = TorusSymbol.load_json(path)
        elif isinstance(raw_v, dict):
            try:
                v = TorusSymbol.from_json_dict(raw_v)
            except (KeyError, ValueError) as exc:
                raise ScenarioError(f"bad inline symbol: {exc}") from exc
        else:
            raise ScenarioError('"V" must be a path or an inline symbol object')
        omega = payload["omega"]
        if not isinstance(omega, (list, tuple)):
            omega = [omega]
        known = {
            "V", "omega", "gamma", "orders", "hbar", "t", "J",
            "K_max", "M_max", "tolerances", "out_dir", "seed",
        }
        extra = set(payload) - known
        if extra:
            raise ScenarioError(f"unknown scenario keys: {sorted(extra)}")
        return cls(
            v=v,
            omega=tuple(float(w) for w in omega),
            gamma_exp=float(payload.get("gamma", 1.0)),
            orders=int(payload.get("orders", 2)),
            hbar_grid=payload.get("hbar", [0.5]),
            t_grid=payload.get("t", [0.05]),
            J=int(payload.get("J", 32)),
            k_cap=payload.get("K_max"),
            m_cap=payload.get("M_max"),
            tolerances=dict(payload.get("tolerances", {})),
            out_dir=payload.get("out_dir"),
            seed=payload.get("seed", 0),
        )

    @classmethod
    def from_path(cls, path) -> "Scenario":
        path = Path(path)
        if not path.exists():
            raise ScenarioError(f"scenario file not found: {path}")
        try:
            with open(path, encoding="utf-8") as fh:
                payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
        return cls.from_json_dict(payload, base_dir=path.parent)


def resolve_out_dir(scenario_out, cli_out=None) -> Path:
    """Output base directory: flag wins, then OUT_DIR, then the scenario."""
    if cli_out:
        return Path(cli_out)
    env = os.environ.get("OUT_DIR")
    if env:
        return Path(env)
    if scenario_out:
        return Path(scenario_out)
    return Path("runs")


def worker_count() -> int:
    """Parallelism degree from WORKERS, default the logical core count."""
    raw = os.environ.get("WORKERS")
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ScenarioError("WORKERS must be an integer") from exc
        if n < 1:
            raise ScenarioError("WORKERS must be >= 1")
        return n
    return os.cpu_count() or 1


def cos_x_scenario(**overrides) -> Scenario:
    """The stock single-mode scenario used by the examples and the suite."""
    v = TorusSymbol.from_terms([((1,), (0,), 0.5), ((-1,), (0,), 0.5)])
    base = dict(
        v=v,
        omega=(1.0,),
        orders=2,
        hbar_grid=(1.0, 0.5, 0.1, 0.02),
        t_grid=(0.001, 0.005, 0.02, 0.05, 0.1),
        J=32,
    )
    base.update(overrides)
    return Scenario(**base)
