"""Run configuration: schema, loading, and construction of model objects."""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .certificate import NonlinearitySpec
from .errors import ConfigurationError
from .functions import nonlinearity, signal, spatial, vector_field
from .galerkin.model import Disturbance, SimConfig
from .system import CascadeSystem

Matrix = Union[float, list[float], list[list[float]]]


class Handle(BaseModel):
    """A named built-in function plus its parameters (extra keys)."""

    model_config = ConfigDict(extra="allow")
    kind: str

    @property
    def params(self) -> dict[str, Any]:
        return dict(self.model_extra or {})


def _square(value: Matrix, name: str) -> np.ndarray:
    M = np.atleast_2d(np.asarray(value, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be a square matrix or a scalar")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemBlock(_Strict):
    a: float = Field(gt=0)
    l: float = Field(gt=0)
    C: Matrix
    P: Matrix
    B: Handle
    D: Handle

    @field_validator("C", "P")
    @classmethod
    def _check_square(cls, v, info):
        _square(v, info.field_name)
        return v


class NonlinearityBlock(_Strict):
    mode: Literal["lipschitz", "general"] = "lipschitz"
    sigma: float = 0.0
    L: float = Field(default=0.0, ge=0)
    alpha: float = 0.0
    q: float = 1.5
    c0: float = 0.0
    zeta: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    f: Handle = Handle(kind="zero")
    X: Handle = Handle(kind="zero")


class SignalBlock(_Strict):
    kind: str = "zero"
    amplitude: float = 1.0
    freq: Optional[float] = None
    phase: Optional[float] = None
    rate: Optional[float] = None
    file: Optional[str] = None


class DisturbanceBlock(_Strict):
    d1: SignalBlock = SignalBlock()
    d2: SignalBlock = SignalBlock()
    d_inf: float = Field(default=0.0, ge=0)
    ramp_time: float = Field(default=0.0, ge=0)


class InitialBlock(_Strict):
    phi: Handle = Handle(kind="zero")
    x0: Optional[list[float]] = None


class NumericsBlock(_Strict):
    m: int = 401
    N: int = Field(default=48, ge=1)
    dt: float = Field(default=1e-3, gt=0)
    T: float = Field(default=50.0, ge=0)
    record_dt: float = Field(default=0.1, gt=0)
    scheme: Literal["etdrk2", "imex-euler"] = "etdrk2"
    residual_rtol: float = Field(default=1e-6, gt=0)
    stale_rtol: float = Field(default=1e-4, gt=0)
    audit_samples: int = 100_000
    audit_range: tuple[float, float] = (1e-4, 1e4)
    seed: int = 0

    @field_validator("m")
    @classmethod
    def _odd(cls, v):
        if v < 3 or v % 2 == 0:
            raise ValueError("grid node count must be odd and >= 3")
        return v


class OutputBlock(_Strict):
    dir: str = "."
    formats: list[Literal["json", "text"]] = ["json", "text"]
    report_name: str = "report"
    trajectory_name: str = "trajectory.csv"
    sweep_name: str = "sweep.csv"


class RunConfig(_Strict):
    system: SystemBlock
    nonlinearity: NonlinearityBlock = NonlinearityBlock()
    disturbance: DisturbanceBlock = DisturbanceBlock()
    initial: InitialBlock = InitialBlock()
    numerics: NumericsBlock = NumericsBlock()
    output: OutputBlock = OutputBlock()

    # -- construction of model objects ---------------------------------

    def cascade(self) -> CascadeSystem:
        s = self.system
        return CascadeSystem(
            s.a, s.l, _square(s.C, "C"),
            _resolve(lambda: spatial(s.B.kind, s.l, **s.B.params), "system.B"),
            _resolve(lambda: spatial(s.D.kind, s.l, **s.D.params), "system.D"),
        )

    @property
    def P(self) -> np.ndarray:
        return _square(self.system.P, "P")

    def scalar_nonlinearity(self):
        f = self.nonlinearity.f
        return _resolve(lambda: nonlinearity(f.kind, **f.params), "nonlinearity.f")

    def vector_field(self):
        X = self.nonlinearity.X
        return _resolve(lambda: vector_field(X.kind, **X.params), "nonlinearity.X")

    def spec(self) -> NonlinearitySpec:
        nb = self.nonlinearity
        f = self.scalar_nonlinearity()
        return NonlinearitySpec(
            mode=nb.mode, sigma=nb.sigma, L=nb.L, alpha=nb.alpha, q=nb.q, c0=nb.c0, zeta=nb.zeta,
            delta1=nb.delta1, delta2=nb.delta2, f0=f.f0, f1=f.f1, X=self.vector_field(),
        )

    def disturbance_model(self) -> Disturbance:
        db = self.disturbance

        def build(block: SignalBlock, name: str):
            params = {k: v for k, v in block.model_dump().items() if k not in ("kind", "amplitude") and v is not None}
            return _resolve(lambda: signal(block.kind, block.amplitude, db.ramp_time, **params), f"disturbance.{name}")

        return Disturbance(build(db.d1, "d1"), build(db.d2, "d2"), db.d_inf)

    def phi(self):
        h = self.initial.phi
        fn = _resolve(lambda: spatial(h.kind, self.system.l, **h.params), "initial.phi")
        return lambda z: fn(z)[:, 0]

    def x0(self) -> np.ndarray:
        n = self.P.shape[0]
        if self.initial.x0 is None:
            return np.zeros(n)
        x0 = np.asarray(self.initial.x0, dtype=float)
        if x0.size != n:
            raise ConfigurationError(f"initial.x0: expected {n} entries, got {x0.size}")
        return x0

    def sim_config(self) -> SimConfig:
        nb = self.numerics
        return SimConfig(N=nb.N, dt=nb.dt, T=nb.T, record_dt=nb.record_dt, scheme=nb.scheme)

    def echo(self) -> dict:
        return self.model_dump(mode="json")


def _resolve(build, where: str):
    try:
        return build()
    except KeyError as exc:
        raise ConfigurationError(f"{where}: missing parameter {exc.args[0]!r}") from None
    except TypeError as exc:
        raise ConfigurationError(f"{where}: {exc}") from None
    except ConfigurationError as exc:
        raise ConfigurationError(f"{where}: {exc}") from None


def format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"  {loc}: {err['msg']}")
    return "invalid configuration:\n" + "\n".join(lines)


def parse_config(data: Any) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("configuration must be a mapping with a 'system' block")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(format_validation_error(exc)) from None


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: not valid YAML: {exc}") from None
    cfg = parse_config(data)
    # sample files are resolved relative to the config file
    return _rebase_files(cfg, path.parent)


def _rebase_files(cfg: RunConfig, base: Path) -> RunConfig:
    def fix(h):
        f = getattr(h, "file", None) if not isinstance(h, Handle) else h.params.get("file")
        if f is None or Path(f).is_absolute():
            return h
        new = str((base / f).resolve())
        if isinstance(h, Handle):
            return Handle(kind=h.kind, **{**h.params, "file": new})
        return h.model_copy(update={"file": new})

    s = cfg.system.model_copy(update={"B": fix(cfg.system.B), "D": fix(cfg.system.D)})
    d = cfg.disturbance.model_copy(update={"d1": fix(cfg.disturbance.d1), "d2": fix(cfg.disturbance.d2)})
    i = cfg.initial.model_copy(update={"phi": fix(cfg.initial.phi)})
    return cfg.model_copy(update={"system": s, "disturbance": d, "initial": i})


def bundled_example_path() -> Path:
    return Path(__file__).with_name("data") / "example.cfg"


def load_example() -> RunConfig:
    return load_config(bundled_example_path())


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.echo(), sort_keys=False)
