"""Run configuration: TOML input, presets and validation.

Example::

    [chain]
    preset = "paper-40"        # or "senders-only", or explicit fields below
    # K = 2
    # bulk_coupling = 1.0      # paper-40 only: assumed uniform bulk bond
    # n_sites / channel1_length / K1 / K2 / couplings = [...]

    [vectors]
    v1 = [0.5, 0.5]
    v2 = [0.5, 0.5]

    [time]
    t = 26.441                 # or: sweep = [20.0, 30.0, 0.05]

    [solver]
    method = "exact"           # exact | angles | both
    seed = 0
    restarts = 32
    tolerance = 1e-9

    [angles]                   # optional: replay a fixed column
    alphas = [...]
    phis = [...]

    [output]
    path = "report.json"
"""

from __future__ import annotations

import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dynamics import ChainSpec, paper_chain_spec, senders_only_spec
from .errors import ConfigError, XXScalarError
from .hilbert import SubsystemLayout
from .tuner import AngleSet

PRESETS = ("senders-only", "paper-40")

# 40-node line: boundary pairs (0.55, 0.817) next to every channel end, weak
# junction 0.006. The bulk bond values are unknown; a uniform 1.0 is assumed
# (config knob ``bulk_coupling``).
FORTY_NODE = {
    "K": 2,
    "per_channel_length": 20,
    "junction_coupling": 0.006,
    "end_couplings": (0.55, 0.817),
    "bulk_coupling": 1.0,
}

SOLVERS = ("exact", "angles", "both")


@dataclass
class RunConfig:
    chain: dict = field(default_factory=lambda: {"preset": "senders-only", "K": 2})
    v1: list[float] | None = None
    v2: list[float] | None = None
    t: float | None = None
    sweep: tuple[float, float, float] | None = None
    solver: str = "exact"
    seed: int = 0
    restarts: int = 32
    tolerance: float = 1e-9
    angles: AngleSet | None = None
    output: str | None = None

    def build_chain(self) -> ChainSpec:
        return build_chain(self.chain)

    def time_grid(self) -> np.ndarray | None:
        if self.sweep is None:
            return None
        a, b, step = self.sweep
        return np.arange(a, b + step / 2, step)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["angles"] = None if self.angles is None else self.angles.to_dict()
        d["sweep"] = None if self.sweep is None else list(self.sweep)
        d["chain_resolved"] = self.build_chain().to_dict()
        return d


def build_chain(chain: dict) -> ChainSpec:
    preset = chain.get("preset")
    try:
        if preset == "senders-only":
            return senders_only_spec(int(chain.get("K", 2)))
        if preset == "paper-40":
            params = dict(FORTY_NODE)
            for key in ("K", "bulk_coupling", "junction_coupling", "per_channel_length"):
                if key in chain:
                    params[key] = chain[key]
            return paper_chain_spec(
                int(params["K"]),
                int(params["per_channel_length"]),
                float(params["junction_coupling"]),
                tuple(params["end_couplings"]),
                float(params["bulk_coupling"]),
            )
        if preset is not None:
            raise ConfigError(f"[chain] preset: unknown preset {preset!r}; choose from {PRESETS}")
        missing = [k for k in ("couplings", "channel1_length", "K") if k not in chain]
        if missing:
            raise ConfigError(f"[chain] missing keys {missing} (or set a preset)")
        couplings = [float(x) for x in chain["couplings"]]
        n = len(couplings) + 1
        K = int(chain["K"])
        layout = SubsystemLayout(
            n, K, int(chain["channel1_length"]), int(chain.get("K1", K)), int(chain.get("K2", K))
        )
        return ChainSpec(tuple(couplings), layout)
    except ConfigError:
        raise
    except (XXScalarError, TypeError, ValueError) as exc:
        raise ConfigError(f"[chain] {exc}") from exc


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"^\[([^\]]+)\]", stripped)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and re.match(rf"^{re.escape(key)}\s*=", stripped):
            return lineno
    return None


class _Validator:
    def __init__(self, text: str, source: str):
        self.text = text
        self.source = source

    def fail(self, section: str, key: str, msg: str):
        line = _line_of(self.text, section, key)
        where = f"{self.source}:{line}" if line else self.source
        raise ConfigError(f"{where}: [{section}] {key}: {msg}")


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    val = _Validator(text, source)
    cfg = RunConfig()
    known = {"chain", "vectors", "time", "solver", "angles", "output"}
    for section in raw:
        if section not in known:
            val.fail(section, "", f"unknown section; expected one of {sorted(known)}")

    if "chain" in raw:
        cfg.chain = dict(raw["chain"])

    vec = raw.get("vectors", {})
    for key in ("v1", "v2"):
        if key in vec:
            try:
                setattr(cfg, key, [float(x) for x in vec[key]])
            except (TypeError, ValueError):
                val.fail("vectors", key, "must be a list of numbers")

    tim = raw.get("time", {})
    if "t" in tim and "sweep" in tim:
        val.fail("time", "sweep", "give either t or sweep, not both")
    if "t" in tim:
        try:
            cfg.t = float(tim["t"])
        except (TypeError, ValueError):
            val.fail("time", "t", "must be a number")
    if "sweep" in tim:
        sw = tim["sweep"]
        if not (isinstance(sw, list) and len(sw) == 3):
            val.fail("time", "sweep", "must be [start, stop, step]")
        cfg.sweep = tuple(float(x) for x in sw)

    sol = raw.get("solver", {})
    if "method" in sol:
        cfg.solver = sol["method"]
    for key, conv in (("seed", int), ("restarts", int), ("tolerance", float)):
        if key in sol:
            try:
                setattr(cfg, key, conv(sol[key]))
            except (TypeError, ValueError):
                val.fail("solver", key, f"must be {conv.__name__}")

    if "angles" in raw:
        a = raw["angles"]
        try:
            cfg.angles = AngleSet(tuple(a["alphas"]), tuple(a["phis"]))
        except KeyError as exc:
            val.fail("angles", exc.args[0], "missing")
        except XXScalarError as exc:
            val.fail("angles", "phis", str(exc))

    if "output" in raw and "path" in raw["output"]:
        cfg.output = str(raw["output"]["path"])

    try:
        validate(cfg)
    except ConfigError as exc:
        loc = getattr(exc, "location", None)
        if loc:
            val.fail(*loc)
        raise ConfigError(f"{source}: {exc}") from exc
    return cfg


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config(text, str(p))


def _bad(section: str, key: str, msg: str) -> ConfigError:
    exc = ConfigError(f"[{section}] {key}: {msg}")
    exc.location = (section, key, msg)
    return exc


def validate(cfg: RunConfig) -> None:
    """Semantic checks on a (possibly CLI-overridden) config."""
    spec = build_chain(cfg.chain)
    K = spec.K
    for key in ("v1", "v2"):
        v = getattr(cfg, key)
        if v is None:
            continue
        if len(v) != K:
            raise _bad("vectors", key, f"has {len(v)} components, chain has K={K}")
        if float(np.dot(v, v)) >= 1.0:
            raise _bad("vectors", key, "norm must be < 1")
    if cfg.t is not None and cfg.t < 0:
        raise _bad("time", "t", "must be >= 0")
    if cfg.sweep is not None:
        a, b, step = cfg.sweep
        if step <= 0 or b < a or a < 0:
            raise _bad("time", "sweep", "need 0 <= start <= stop and step > 0")
    if cfg.solver not in SOLVERS:
        raise _bad("solver", "method", f"must be one of {SOLVERS}")
    if cfg.restarts < 1:
        raise _bad("solver", "restarts", "must be >= 1")
    if not cfg.tolerance > 0:
        raise _bad("solver", "tolerance", "must be > 0")
    if cfg.angles is not None:
        P = spec.layout.n_er * (spec.layout.n_er - 1) // 2
        if cfg.angles.P != P:
            raise _bad("angles", "phis", f"need P={P} phis for this extended receiver")
