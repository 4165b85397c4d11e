"""Run configuration: a JSON document with one section per stage.

Every field has a default, unknown keys are rejected, and values are checked
with the dotted path of the offending field in the message.  ``to_dict``
and ``from_dict`` round-trip exactly.
"""
from __future__ import annotations

import dataclasses
import json
import math
import warnings
from dataclasses import dataclass, field

from .errors import ConfigError
from .evolution import OBSERVABLES
from .kernel import ROUTES
from .well import WellParams

__all__ = [
    "WellSection",
    "DriveSection",
    "KernelSection",
    "EvolveSection",
    "ScanSection",
    "OracleSection",
    "OutputSection",
    "RunConfig",
    "load_config",
    "BETA_WARN",
    "BETA_MAX",
]

BETA_WARN = 1.0
BETA_MAX = 10.0
FORMATS = ("csv", "json")


def _num(path, v, *, positive=False, nonneg=False, integer=False, allow_none=False):
    if v is None and allow_none:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    if integer:
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"{path}: expected an integer, got {v!r}")
        v = int(v)
    elif not math.isfinite(v):
        raise ConfigError(f"{path}: must be finite, got {v!r}")
    else:
        v = float(v)
    if positive and not v > 0:
        raise ConfigError(f"{path}: must be > 0, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(f"{path}: must be >= 0, got {v!r}")
    return v


@dataclass(frozen=True)
class WellSection:
    m: float = 1.0
    k1: float = 1.0
    k2: float = 1.0
    hbar: float = 1.0

    def params(self) -> WellParams:
        return WellParams(m=self.m, k1=self.k1, k2=self.k2, hbar=self.hbar)


@dataclass(frozen=True)
class DriveSection:
    gamma: float = 0.05
    omega: float = 1.0
    xi0: float = 0.0
    # energy-basis amplitudes; entries are numbers or [re, im] pairs
    initial: tuple | None = None


@dataclass(frozen=True)
class KernelSection:
    route: str = "fourier"
    truncation: int | None = None
    alpha: float = 1.5
    xi_start: float = 0.0
    xi_stop: float = 4 * math.pi
    n_points: int = 201


@dataclass(frozen=True)
class EvolveSection:
    periods: float = 1.0
    samples: int = 65
    # None: single-shot propagator from xi0; k: k product steps per sample gap
    steps_per_sample: int | None = None
    snapshots: tuple = ()
    snapshot_points: int = 401


@dataclass(frozen=True)
class ScanSection:
    omega_start: float = 0.5
    omega_stop: float = 1.5
    omega_step: float = 0.05
    observable: str = "depletion"
    n_periods: int = 10
    samples_per_period: int = 16
    steps_per_sample: int | None = 1
    pair: tuple = (0, 1)
    harmonic: int = 1
    workers: int = 1
    reference: bool = False

    def omegas(self) -> list[float]:
        if self.omega_stop < self.omega_start:
            return []
        n = int(math.floor((self.omega_stop - self.omega_start) / self.omega_step + 1e-9)) + 1
        return [self.omega_start + i * self.omega_step for i in range(n)]


@dataclass(frozen=True)
class OracleSection:
    grid_points: int = 4001
    periods: float = 1.0
    samples: int = 65


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    format: str = "csv"
    figures: bool = True


_SECTIONS = {
    "well": WellSection,
    "drive": DriveSection,
    "kernel": KernelSection,
    "evolve": EvolveSection,
    "scan": ScanSection,
    "oracle": OracleSection,
    "output": OutputSection,
}


@dataclass(frozen=True)
class RunConfig:
    well: WellSection = field(default_factory=WellSection)
    n_states: int = 8
    drive: DriveSection = field(default_factory=DriveSection)
    kernel: KernelSection = field(default_factory=KernelSection)
    evolve: EvolveSection = field(default_factory=EvolveSection)
    scan: ScanSection = field(default_factory=ScanSection)
    oracle: OracleSection = field(default_factory=OracleSection)
    output: OutputSection = field(default_factory=OutputSection)

    def __post_init__(self):
        _validate(self)

    def to_dict(self) -> dict:
        out = {"n_states": self.n_states}
        for name in _SECTIONS:
            sec = dataclasses.asdict(getattr(self, name))
            out[name] = {k: _plain(v) for k, v in sec.items()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be a JSON object")
        unknown = set(data) - set(_SECTIONS) - {"n_states"}
        if unknown:
            raise ConfigError(f"config: unknown key(s) {sorted(unknown)}")
        kw = {}
        if "n_states" in data:
            kw["n_states"] = data["n_states"]
        for name, sec_cls in _SECTIONS.items():
            raw = data.get(name, {})
            if not isinstance(raw, dict):
                raise ConfigError(f"{name}: must be an object")
            names = {f.name for f in dataclasses.fields(sec_cls)}
            bad = set(raw) - names
            if bad:
                raise ConfigError(f"{name}: unknown key(s) {sorted(bad)}")
            kw[name] = sec_cls(**{k: _frozen(v) for k, v in raw.items()})
        return cls(**kw)

    def replace(self, **changes) -> "RunConfig":
        """Copy with top-level fields or ``section__field`` entries replaced."""
        top = {}
        per = {}
        for key, val in changes.items():
            if "__" in key:
                sec, f = key.split("__", 1)
                per.setdefault(sec, {})[f] = val
            else:
                top[key] = val
        for sec, vals in per.items():
            top[sec] = dataclasses.replace(getattr(self, sec), **vals)
        return dataclasses.replace(self, **top)

    def beta_for(self, omega: float) -> float:
        p = self.well.params()
        return self.drive.gamma * p.ell / (p.hbar * omega)


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


def _frozen(v):
    if isinstance(v, list):
        return tuple(_frozen(x) for x in v)
    return v


def _check_beta(path, beta):
    if beta > BETA_MAX:
        raise ConfigError(f"{path}: beta = {beta:.4g} exceeds {BETA_MAX:g}")
    if beta > BETA_WARN:
        warnings.warn(f"{path}: beta = {beta:.4g} > {BETA_WARN:g}; the kernel series need many terms",
                      stacklevel=3)


def _validate(c: RunConfig):
    w = c.well
    for k in ("m", "k1", "k2", "hbar"):
        _num(f"well.{k}", getattr(w, k), positive=True)
    _num("n_states", c.n_states, positive=True, integer=True)

    d = c.drive
    _num("drive.gamma", d.gamma, nonneg=True)
    _num("drive.omega", d.omega, positive=True)
    _num("drive.xi0", d.xi0)
    if d.initial is not None:
        if not isinstance(d.initial, tuple) or len(d.initial) != c.n_states:
            raise ConfigError(f"drive.initial: expected {c.n_states} amplitudes")
        amps = []
        for i, a in enumerate(d.initial):
            if isinstance(a, tuple):
                if len(a) != 2:
                    raise ConfigError(f"drive.initial[{i}]: complex entries are [re, im]")
                amps.append(complex(_num(f"drive.initial[{i}][0]", a[0]), _num(f"drive.initial[{i}][1]", a[1])))
            else:
                amps.append(complex(_num(f"drive.initial[{i}]", a)))
        norm = math.sqrt(sum(abs(a) ** 2 for a in amps))
        if abs(norm - 1.0) > 1e-12:
            raise ConfigError(f"drive.initial: vector must be normalised (norm {norm:.15g})")
    _check_beta("drive", c.beta_for(d.omega))

    k = c.kernel
    if k.route not in ROUTES:
        raise ConfigError(f"kernel.route: expected one of {list(ROUTES)}, got {k.route!r}")
    if k.truncation is not None:
        lo = 1 if k.route == "fourier" else 0
        if _num("kernel.truncation", k.truncation, integer=True) < lo:
            raise ConfigError(f"kernel.truncation: must be >= {lo} for route {k.route}")
    _num("kernel.alpha", k.alpha)
    _num("kernel.xi_start", k.xi_start)
    _num("kernel.xi_stop", k.xi_stop)
    if _num("kernel.n_points", k.n_points, integer=True) < 1:
        raise ConfigError("kernel.n_points: must be >= 1")

    e = c.evolve
    _num("evolve.periods", e.periods, positive=True)
    if _num("evolve.samples", e.samples, integer=True) < 2:
        raise ConfigError("evolve.samples: must be >= 2")
    if e.steps_per_sample is not None and _num("evolve.steps_per_sample", e.steps_per_sample, integer=True) < 1:
        raise ConfigError("evolve.steps_per_sample: must be >= 1 or null")
    if not isinstance(e.snapshots, tuple):
        raise ConfigError("evolve.snapshots: expected a list of phases")
    for i, s in enumerate(e.snapshots):
        _num(f"evolve.snapshots[{i}]", s)
    if _num("evolve.snapshot_points", e.snapshot_points, integer=True) < 2:
        raise ConfigError("evolve.snapshot_points: must be >= 2")

    s = c.scan
    _num("scan.omega_start", s.omega_start, positive=True)
    _num("scan.omega_stop", s.omega_stop, positive=True)
    _num("scan.omega_step", s.omega_step, positive=True)
    if s.observable not in OBSERVABLES:
        raise ConfigError(f"scan.observable: expected one of {list(OBSERVABLES)}, got {s.observable!r}")
    for name in ("n_periods", "samples_per_period", "workers"):
        if _num(f"scan.{name}", getattr(s, name), integer=True) < 1:
            raise ConfigError(f"scan.{name}: must be >= 1")
    if s.steps_per_sample is not None and _num("scan.steps_per_sample", s.steps_per_sample, integer=True) < 1:
        raise ConfigError("scan.steps_per_sample: must be >= 1 or null")
    if not (isinstance(s.pair, tuple) and len(s.pair) == 2):
        raise ConfigError("scan.pair: expected [l, m]")
    for i, v in enumerate(s.pair):
        if not 0 <= _num(f"scan.pair[{i}]", v, integer=True) < c.n_states:
            raise ConfigError(f"scan.pair[{i}]: must lie in 0..{c.n_states - 1}")
    _num("scan.harmonic", s.harmonic, nonneg=True, integer=True)
    if not isinstance(s.reference, bool):
        raise ConfigError("scan.reference: expected true or false")
    omegas = s.omegas()
    if omegas:
        _check_beta("scan", c.beta_for(min(omegas)))

    o = c.oracle
    if _num("oracle.grid_points", o.grid_points, integer=True) < 2000:
        raise ConfigError("oracle.grid_points: must be >= 2000")
    _num("oracle.periods", o.periods, positive=True)
    if _num("oracle.samples", o.samples, integer=True) < 2:
        raise ConfigError("oracle.samples: must be >= 2")

    out = c.output
    if not isinstance(out.dir, str) or not out.dir:
        raise ConfigError("output.dir: expected a non-empty path")
    if out.format not in FORMATS:
        raise ConfigError(f"output.format: expected one of {list(FORMATS)}, got {out.format!r}")
    if not isinstance(out.figures, bool):
        raise ConfigError("output.figures: expected true or false")


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    try:
        return RunConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
