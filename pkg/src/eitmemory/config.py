"""Run configuration: one JSON document per run, validated strictly."""

import json
import math
from importlib import resources
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .disorder_ensemble import SystemParams

SUBCOMMANDS = ("pulse-factors", "fidelity", "reliability", "figure2", "figure3a",
               "figure3b", "tradeoff", "detuning", "appendix-b")

# angular-frequency unit / time unit; any reciprocal pair keeps the maths unit-free
UNIT_PAIRS = {"MHz/us": ("MHz", "us"), "GHz/ns": ("GHz", "ns"),
              "kHz/ms": ("kHz", "ms"), "Hz/s": ("Hz", "s")}


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ParamsSection(_Strict):
    N: int = Field(gt=0)
    Delta: float
    delta_Delta: float = Field(ge=0)
    g: float = Field(gt=0)
    delta_g: float = Field(ge=0)

    @model_validator(mode="after")
    def _physical(self):
        self.build()
        return self

    def build(self) -> SystemParams:
        return SystemParams(self.N, self.Delta, self.delta_Delta, self.g, self.delta_g)


class ProtocolSection(_Strict):
    tau_s: float = Field(ge=0)
    tau_d: float = Field(gt=0)
    xi: float = Field(1000.0, gt=1)
    grid_points: int = Field(4001, ge=1000)
    convention: Literal["definition", "reference", "paper"] = "definition"


class StateSection(_Strict):
    kind: Literal["coherent", "cat", "uniform", "fock", "file"] = "coherent"
    alpha: float = 2.0
    alpha_phase: float = 0.0
    eta: float = 0.0
    theta: float = 0.0
    variance: Optional[float] = Field(None, gt=0)
    M: int = Field(10, ge=0)
    n: int = Field(0, ge=0)
    path: Optional[str] = None

    @model_validator(mode="after")
    def _file_needs_path(self):
        if self.kind == "file" and not self.path:
            raise ValueError("state kind 'file' needs a path")
        return self


class FidelityOptions(_Strict):
    method: Literal["analytic", "mc", "series", "bound", "all"] = "analytic"
    phase_mode: Literal["exact", "linear"] = "linear"
    samples: int = Field(10_000, ge=1000)
    compensated: bool = True
    series_order: int = Field(4, ge=0, le=8)


class ReliabilityOptions(_Strict):
    mode: Literal["sync", "repeater", "custom"] = "sync"
    k: int = Field(3, ge=1)
    rho_file: Optional[str] = None
    compensated: bool = True


class TradeoffOptions(_Strict):
    target_fidelity: float = Field(0.9, gt=0, lt=1)
    solve_for: Literal["tau_s", "tau_d", "capacity"] = "tau_s"
    capacity: float = Field(1.0, ge=0)
    convention: Literal["literal", "gamma", "both"] = "both"


class DetectionOptions(_Strict):
    tau_s_de: float = Field(1000.0, gt=0)
    tau_d_de: float = Field(1.0, gt=0)
    alpha_theta: float = 2.7
    mode: Literal["naive", "berry"] = "naive"


class Figure2Options(_Strict):
    alpha_max: float = Field(8.0, gt=0)
    alpha_step: float = Field(0.25, gt=0)
    delta_tau_s_max: float = Field(200.0, gt=0)
    delta_tau_s_points: int = Field(101, ge=2)


class Figure3aOptions(_Strict):
    eta: float = 1.0
    theta: float = math.pi
    alpha_min: float = Field(1.0, gt=0)
    alpha_max: float = Field(12.0, gt=0)
    alpha_points: int = Field(45, ge=2)
    levels: List[float] = [0.9, 0.8, 0.6, 0.4]


class Figure3bOptions(_Strict):
    variance: float = Field(10.0, gt=0)
    x_min: float = Field(1e-3, gt=0)
    x_max: float = Field(100.0, gt=0)
    points: int = Field(61, ge=2)
    series_order: int = Field(4, ge=0, le=8)


class AdmissibilityOptions(_Strict):
    family: Literal["coherent", "cat", "uniform", "fock"] = "coherent"
    eta: float = 0.0
    theta: float = 0.0
    variances: List[float] = [4.0, 16.0, 64.0, 144.0]


class RunConfig(_Strict):
    subcommand: Literal[SUBCOMMANDS]
    seed: int = Field(ge=0)
    params: ParamsSection
    protocol: ProtocolSection
    units: Literal[tuple(UNIT_PAIRS)] = "MHz/us"
    workers: Optional[int] = Field(None, ge=1)
    output: Optional[str] = None
    state: StateSection = StateSection()
    fidelity: FidelityOptions = FidelityOptions()
    reliability: ReliabilityOptions = ReliabilityOptions()
    tradeoff: TradeoffOptions = TradeoffOptions()
    detection: DetectionOptions = DetectionOptions()
    figure2: Figure2Options = Figure2Options()
    figure3a: Figure3aOptions = Figure3aOptions()
    figure3b: Figure3bOptions = Figure3bOptions()
    admissibility: AdmissibilityOptions = AdmissibilityOptions()

    @property
    def freq_unit(self) -> str:
        return UNIT_PAIRS[self.units][0]

    @property
    def time_unit(self) -> str:
        return UNIT_PAIRS[self.units][1]

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists one message per offending field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


def validate_config(document: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(document)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<document>"
            msgs.append(f"{loc}: {err['msg']}")
        raise ConfigError(msgs) from None


def load_document(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def preset_names() -> List[str]:
    files = resources.files("eitmemory") / "presets"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    path = resources.files("eitmemory") / "presets" / f"{name}.json"
    if not path.is_file():
        raise ConfigError([f"preset: unknown preset {name!r} (have {', '.join(preset_names())})"])
    return json.loads(path.read_text())
