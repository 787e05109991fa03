"""Run configuration files: TOML (default) or JSON, parsed into a scenario plus run controls.

Every section and key is checked against a fixed schema, so a typo fails
loudly instead of silently falling back to a default.  Angles are radians
unless the key carries a ``_deg`` suffix, in which case the value is
converted once here.

Example::

    [environment]
    size = 64.0            # m, side of the square arena
    total_steps = 100
    horizon = 25           # steps per planning phase
    tau = 0.5              # s
    q = 0.001              # process-noise intensity

    [sensor]
    r_sense = 10.0         # m
    psi_deg = 94.0         # full field of view
    sigma_r = 0.15         # m
    sigma_b_deg = 5.0

    [team]
    n_robots = 5
    alpha = 2

    [targets]
    n_targets = 10
    position_var = 1.0     # m^2, prior variance per axis
    velocity_var = 0.05    # (m/s)^2

    [run]
    seeds = [0, 1, 2]
    modes = ["resilient", "nonresilient"]
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .models import ControlInput, RobotState, SensorParams
from .scenario import ObjectiveKind, PlannerConfig, PlannerMode, Scenario
from .sim import Mode

# section -> key -> (type, default); angle keys are listed by their radian name
SCHEMA: dict[str, dict[str, tuple[type | tuple[type, ...], Any]]] = {
    "environment": {
        "size": (float, 64.0),
        "total_steps": (int, 500),
        "horizon": (int, 25),
        "tau": (float, 0.5),
        "q": (float, 0.001),
    },
    "sensor": {
        "r_sense": (float, 10.0),
        "psi": (float, math.radians(94.0)),
        "sigma_r": (float, 0.15),
        "sigma_b": (float, math.radians(5.0)),
    },
    "team": {
        "n_robots": (int, 5),
        "alpha": (int, 2),
        "placement": (str, "grid"),
        "spacing": (float, 3.0),
        "robots": (list, None),
        "robot_order": (list, None),
        "permanent_removal": (bool, False),
    },
    "targets": {
        "n_targets": (int, 10),
        "position_var": (float, 1.0),
        "velocity_var": (float, 0.05),
        "means": (list, None),
    },
    "planner": {
        "mode": (str, "greedy"),
        "max_expansions": (int, 200_000),
        "objective": (str, "logdet"),
        "paper_literal_unicycle": (bool, False),
    },
    "controls": {
        "nu": (list, [1.0, 3.0]),
        "omega": (list, [0.0, -1.0, 1.0, -3.0, 3.0]),
    },
    "run": {
        "seeds": ((int, list), 10),
        "modes": (list, ["resilient", "nonresilient"]),
        "out": (str, "out"),
        "plots": (bool, True),
    },
}
ANGLE_KEYS = {("sensor", "psi"), ("sensor", "sigma_b")}


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration: every field explicit, angles in radians."""

    environment: dict
    sensor: dict
    team: dict
    targets: dict
    planner: dict
    controls: dict
    run: dict

    def seeds(self) -> list[int]:
        return parse_seeds(self.run["seeds"])

    def modes(self) -> list[Mode]:
        return [Mode(m) for m in self.run["modes"]]

    def semantic(self) -> dict:
        """Everything that can change results (output location and plotting excluded)."""
        d = asdict(self)
        d["run"] = {"seeds": self.seeds(), "modes": [m.value for m in self.modes()]}
        return d

    def digest(self) -> str:
        blob = json.dumps(self.semantic(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @property
    def placement(self) -> str:
        return self.team["placement"]

    def scenario(self) -> Scenario:
        return build_scenario(self)


def parse_seeds(spec: int | str | list) -> list[int]:
    """``10`` -> 0..9; ``"3-5"`` -> 3,4,5; ``"1,4"`` or ``[1, 4]`` -> 1,4."""
    if isinstance(spec, bool):
        raise ConfigError("seeds must be a count, a range or a list")
    if isinstance(spec, int):
        if spec < 1:
            raise ConfigError("seed count must be positive")
        return list(range(spec))
    if isinstance(spec, str):
        spec = spec.strip()
        if spec.isdigit():
            return parse_seeds(int(spec))
        if "-" in spec and "," not in spec:
            lo, hi = spec.split("-", 1)
            try:
                return list(range(int(lo), int(hi) + 1))
            except ValueError as exc:
                raise ConfigError(f"bad seed range {spec!r}") from exc
        spec = [s for s in spec.split(",") if s.strip()]
    try:
        seeds = [int(s) for s in spec]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad seed list {spec!r}") from exc
    if not seeds or any(s < 0 for s in seeds):
        raise ConfigError("seeds must be non-negative and non-empty")
    return seeds


def _coerce(section: str, key: str, value: Any, kind) -> Any:
    kinds = kind if isinstance(kind, tuple) else (kind,)
    if float in kinds and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if bool not in kinds and isinstance(value, bool):
        raise ConfigError(f"[{section}] {key}: expected {kinds[0].__name__}, got bool")
    if not isinstance(value, kinds):
        raise ConfigError(f"[{section}] {key}: expected {kinds[0].__name__}, got {type(value).__name__}")
    return value


def resolve(raw: dict) -> RunConfig:
    """Validate a parsed document against the schema and fill in defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a table")
    unknown = set(raw) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    out = {}
    for section, keys in SCHEMA.items():
        given = raw.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"[{section}] must be a table")
        resolved = {k: default for k, (_, default) in keys.items()}
        for key, value in given.items():
            name = key
            if key.endswith("_deg"):
                name = key[: -len("_deg")]
                if (section, name) not in ANGLE_KEYS:
                    raise ConfigError(f"[{section}] {key}: not an angle field")
                value = math.radians(_coerce(section, key, value, float))
            elif key not in keys:
                raise ConfigError(f"[{section}] unknown key {key!r}")
            resolved[name] = _coerce(section, key, value, keys[name][0])
        if section == "controls":
            resolved = {k: [float(_coerce(section, k, x, float)) for x in v] for k, v in resolved.items()}
        out[section] = resolved
    cfg = RunConfig(**out)
    cfg.seeds()
    valid = [m.value for m in Mode]
    if not cfg.run["modes"] or any(m not in valid for m in cfg.run["modes"]):
        raise ConfigError(f"modes must be a non-empty subset of {valid}")
    env = cfg.environment
    if env["horizon"] < 1 or env["total_steps"] < 1 or env["total_steps"] % env["horizon"]:
        raise ConfigError("total_steps must be a positive multiple of horizon")
    if cfg.team["spacing"] <= 0:
        raise ConfigError("[team] spacing must be positive")
    build_scenario(cfg)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    """Read a ``.toml`` or ``.json`` configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix.lower() == ".json":
            raw = json.loads(text)
        else:
            raw = tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return resolve(raw)


def _robot(entry: Any) -> RobotState:
    if isinstance(entry, dict):
        extra = set(entry) - {"x", "y", "theta", "theta_deg"}
        if extra or not {"x", "y"} <= set(entry):
            raise ConfigError(f"robot entries need x, y and theta or theta_deg; got {sorted(entry)}")
        theta = math.radians(entry["theta_deg"]) if "theta_deg" in entry else entry.get("theta", 0.0)
        return RobotState(float(entry["x"]), float(entry["y"]), float(theta))
    if isinstance(entry, list) and len(entry) == 3:
        return RobotState(*map(float, entry))
    raise ConfigError("robot entries are [x, y, theta] lists or {x, y, theta_deg} tables")


def build_scenario(cfg: RunConfig) -> Scenario:
    """Scenario described by a configuration (placeholder positions for grid placement)."""
    env, team, tg, pl = cfg.environment, cfg.team, cfg.targets, cfg.planner
    L = env["size"]
    if team["placement"] == "fixed":
        if team["robots"] is None or tg["means"] is None:
            raise ConfigError("fixed placement needs [team] robots and [targets] means")
        robots = tuple(_robot(r) for r in team["robots"])
        means = np.asarray(tg["means"], dtype=float)
        if means.ndim != 2 or means.shape[1] not in (2, 4):
            raise ConfigError("[targets] means must list [x, y] or [x, y, vx, vy] rows")
        if means.shape[1] == 2:
            means = np.hstack([means, np.zeros_like(means)])
    elif team["placement"] == "grid":
        if team["robots"] is not None or tg["means"] is not None:
            raise ConfigError("explicit positions require placement = \"fixed\"")
        if team["n_robots"] < 1 or tg["n_targets"] < 1:
            raise ConfigError("need at least one robot and one target")
        robots = tuple(RobotState(0.0, 0.0, 0.0) for _ in range(team["n_robots"]))
        means = np.tile([0.5 * L, 0.5 * L, 0.0, 0.0], (tg["n_targets"], 1))
    else:
        raise ConfigError(f"unknown placement {team['placement']!r}")
    if tg["position_var"] <= 0 or tg["velocity_var"] <= 0:
        raise ConfigError("prior variances must be positive")
    M = means.shape[0]
    cov = np.diag(np.tile([tg["position_var"]] * 2 + [tg["velocity_var"]] * 2, M))
    order = tuple(team["robot_order"]) if team["robot_order"] is not None else None
    controls = tuple(ControlInput(nu, om) for nu in cfg.controls["nu"] for om in cfg.controls["omega"])
    try:
        return Scenario(
            robots=robots,
            prior_mean=means.reshape(-1),
            prior_cov=cov,
            sensor=SensorParams(**cfg.sensor),
            controls=controls,
            tau=env["tau"],
            horizon=env["horizon"],
            q=env["q"],
            objective=ObjectiveKind(pl["objective"]),
            planner=PlannerConfig(PlannerMode(pl["mode"]), pl["max_expansions"]),
            alpha=team["alpha"],
            env_size=L,
            total_steps=env["total_steps"],
            paper_literal_unicycle=pl["paper_literal_unicycle"],
            permanent_removal=team["permanent_removal"],
            robot_order=order,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
