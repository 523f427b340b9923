"""Run configuration: schema, validation, and canonical hashing."""

import hashlib
import json

from .errors import ConfigError
from .mesh import generate_offset_annulus, generate_unit_square


_DEFAULTS = {
    "stability": {"C_stab": 1.0, "on_violation": "warn"},
    "seed": 0,
    "output_dir": "out",
}


class RunConfig:
    """Validated pipeline configuration.

    Construction collects every violated field and raises a single
    ConfigError naming all of them, so a bad file is fixable in one pass.
    """

    def __init__(self, raw):
        self.raw = dict(raw)
        problems = []

        def need(section, key, kind, pred=None, why=""):
            block = self.raw.get(section)
            if not isinstance(block, dict) or key not in block:
                problems.append(f"{section}.{key}: missing")
                return None
            value = block[key]
            if kind is float and isinstance(value, int):
                value = float(value)
            if not isinstance(value, kind):
                problems.append(f"{section}.{key}: expected {kind.__name__}")
                return None
            if pred is not None and not pred(value):
                problems.append(f"{section}.{key}: {why}")
                return None
            return value

        domain = self.raw.get("domain")
        self.domain = domain if isinstance(domain, dict) else {}
        dtype = self.domain.get("type")
        if dtype == "offset_annulus":
            for key in ("r1", "r2", "c1", "c2"):
                if not isinstance(self.domain.get(key), (int, float)):
                    problems.append(f"domain.{key}: missing or not a number")
            self.n_theta = need("mesh", "n_theta", int, lambda v: v >= 8, "must be >= 8")
            self.n_r = need("mesh", "n_r", int, lambda v: v >= 2, "must be >= 2")
        elif dtype == "unit_square":
            self.n_square = need("domain", "n", int, lambda v: v >= 2, "must be >= 2")
        else:
            problems.append("domain.type: must be 'offset_annulus' or 'unit_square'")

        self.nu = need("physics", "nu", float, lambda v: v > 0.0, "must be positive")
        self.dt = need("time", "dt", float, lambda v: v > 0.0, "must be positive")
        self.T = need("time", "T", float, lambda v: v > 0.0, "must be positive")
        self.snapshot_every = need("time", "snapshot_every", float,
                                   lambda v: v > 0.0, "must be positive")
        if self.dt and self.snapshot_every:
            k = self.snapshot_every / self.dt
            if abs(k - round(k)) > 1e-9 * max(1.0, abs(k)):
                problems.append(
                    "time.snapshot_every, time.dt: snapshot cadence is not an "
                    "integer multiple of the time step")
        if self.dt and self.T:
            k = self.T / self.dt
            if abs(k - round(k)) > 1e-9 * max(1.0, abs(k)):
                problems.append(
                    "time.T, time.dt: final time is not an integer multiple "
                    "of the time step")

        self.snapshot_eps = need("snapshot_ensemble", "eps", list,
                                 lambda v: len(v) > 0, "must be non-empty")
        self.online_eps = need("online_ensemble", "eps", list,
                               lambda v: len(v) > 0, "must be non-empty")
        for name, eps in (("snapshot_ensemble", self.snapshot_eps),
                          ("online_ensemble", self.online_eps)):
            if eps is not None and not all(isinstance(e, (int, float)) for e in eps):
                problems.append(f"{name}.eps: entries must be numbers")

        pod = self.raw.get("pod")
        self.pod_R = None
        if not isinstance(pod, dict) or "R" not in pod:
            problems.append("pod.R: missing")
        else:
            R = pod["R"]
            if isinstance(R, int):
                R = [R]
            if (not isinstance(R, list) or not R
                    or not all(isinstance(r, int) and r >= 1 for r in R)):
                problems.append("pod.R: must be a positive integer or list of them")
            else:
                self.pod_R = sorted(set(R))

        stability = dict(_DEFAULTS["stability"])
        stability.update(self.raw.get("stability") or {})
        self.c_stab = stability.get("C_stab")
        self.on_violation = stability.get("on_violation")
        if not isinstance(self.c_stab, (int, float)) or self.c_stab <= 0:
            problems.append("stability.C_stab: must be a positive number")
        if self.on_violation not in ("warn", "abort"):
            problems.append("stability.on_violation: must be 'warn' or 'abort'")

        self.seed = self.raw.get("seed", _DEFAULTS["seed"])
        if not isinstance(self.seed, int):
            problems.append("seed: must be an integer")
        self.output_dir = self.raw.get("output_dir", _DEFAULTS["output_dir"])
        if not isinstance(self.output_dir, str) or not self.output_dir:
            problems.append("output_dir: must be a non-empty string")

        if problems:
            raise ConfigError("invalid configuration: " + "; ".join(problems))

    def build_mesh(self):
        if self.domain["type"] == "unit_square":
            return generate_unit_square(self.n_square)
        return generate_offset_annulus(
            self.n_theta, self.n_r,
            float(self.domain["r1"]), float(self.domain["r2"]),
            float(self.domain["c1"]), float(self.domain["c2"]))

    def canonical_json(self):
        merged = dict(_DEFAULTS)
        merged.update(self.raw)
        merged["stability"] = {**_DEFAULTS["stability"],
                               **(self.raw.get("stability") or {})}
        return json.dumps(merged, sort_keys=True, separators=(",", ":"))

    def content_hash(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def validate_config(raw):
    return RunConfig(raw)


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return RunConfig(raw)
