"""
Scenario document model.

A scenario is a small INI-like document:

    # comment
    name = fpd_default
    [grid]
    nx = 128
    [model]
    kind = FPD
    v = ramp_to_point(cx=0.5, cy=0.5, slope=1)
    [initial]
    u = gaussian(cx=0.3, cy=0.3, sigma=0.05, amplitude=1)

Sections and keys (defaults in brackets):
    name                  scenario label ["scenario"]
    [grid]   nx, ny       cell counts >= 4 [64, 64]
             lx, ly       extents > 0 [1.0, 1.0]
    [model]  kind         FPD, SPD or KS [FPD]
             D_w, D_p     diffusivities > 0 [1.0, 1.0]
             chi          chemotactic sensitivity >= 0 [1.0]
             delta        evaporation rate >= 0 [1.0]
             N, P, c, v   coefficient builders [constant(0), constant(1), constant(0), constant(0)]
             food_feedback  SPD -uc coupling on/off [true]
             blowup_factor  KS growth flag at this multiple of the initial max [settings]
    [initial] u, w        population builders [constant(0)]
             p, c, rho    optional builders (SPD pheromone, SPD food, KS density)
    [run]    t_end        final time > 0 [1.0]
             snapshot_every  steps between snapshots [10]
             dt_max, cfl, elliptic_rel_tol  numerical controls [settings]
             seed         seed of randomized builders [0]
             output_dir   where `run` writes results ["output"]

A builder is `name(arg, ..., key=value)` or a bare number (= constant).
"""

import math
import re
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PrivateAttr

from config import settings

#Positional parameter names of every builder, in order
BUILDER_SIGNATURES: Dict[str, Tuple[str, ...]] = {
    "constant": ("value",),
    "gaussian": ("cx", "cy", "sigma", "amplitude"),
    "bump": ("cx", "cy", "sigma", "mass"),
    "disk": ("cx", "cy", "radius", "inside", "outside"),
    "ramp_to_point": ("cx", "cy", "slope"),
    "random_bumps": ("count", "sigma", "amplitude"),
    "snapshot": ("path",),
}
BUILDER_DEFAULTS: Dict[str, Dict[str, float]] = {
    "gaussian": {"amplitude": 1.0},
    "bump": {"mass": 1.0},
    "disk": {"inside": 1.0, "outside": 0.0},
    "random_bumps": {"amplitude": 1.0},
}

_CALL = re.compile(r"^\s*([A-Za-z_]\w*)\s*\((.*)\)\s*$")


def _format_number(value: float) -> str:
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


#Parsed builder expression: name plus named arguments
class BuilderSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    args: Dict[str, Union[float, str]]

    #Canonical text form, name(key=value, ...)
    def canonical(self) -> str:
        parts = []
        for key in BUILDER_SIGNATURES[self.name]:
            value = self.args[key]
            parts.append(f"{key}={value if isinstance(value, str) else _format_number(value)}")
        return f"{self.name}({', '.join(parts)})"


#Parse `name(a, b, key=value)` or a bare number
def parse_builder(text: str) -> BuilderSpec:
    text = text.strip()
    try:
        return BuilderSpec(name="constant", args={"value": float(text)})
    except ValueError:
        pass

    match = _CALL.match(text)
    if not match:
        raise ValueError(f"'{text}' is not a builder expression")
    name, body = match.group(1), match.group(2).strip()
    if name not in BUILDER_SIGNATURES:
        raise ValueError(f"unknown builder '{name}', expected one of {sorted(BUILDER_SIGNATURES)}")

    signature = BUILDER_SIGNATURES[name]
    args: Dict[str, Union[float, str]] = {}
    tokens = [t.strip() for t in body.split(",")] if body else []
    for position, token in enumerate(tokens):
        if "=" in token:
            key, raw = (s.strip() for s in token.split("=", 1))
        elif position < len(signature):
            key, raw = signature[position], token
        else:
            raise ValueError(f"too many arguments for {name}()")
        if key not in signature:
            raise ValueError(f"{name}() has no argument '{key}'")
        if key in args:
            raise ValueError(f"{name}() argument '{key}' given twice")
        if name == "snapshot":
            args[key] = raw.strip("'\"")
            continue
        try:
            number = float(raw)
        except ValueError:
            raise ValueError(f"{name}() argument '{key}' must be a number, got '{raw}'")
        if not math.isfinite(number):
            raise ValueError(f"{name}() argument '{key}' must be finite")
        args[key] = number

    for key, value in BUILDER_DEFAULTS.get(name, {}).items():
        args.setdefault(key, value)
    missing = [key for key in signature if key not in args]
    if missing:
        raise ValueError(f"{name}() is missing {', '.join(missing)}")

    if name in ("gaussian", "bump", "random_bumps") and args["sigma"] <= 0:
        raise ValueError(f"{name}() needs sigma > 0")
    if name == "disk" and args["radius"] < 0:
        raise ValueError("disk() needs radius >= 0")
    if name == "random_bumps" and (args["count"] < 1 or not float(args["count"]).is_integer()):
        raise ValueError("random_bumps() needs an integer count >= 1")
    return BuilderSpec(name=name, args=args)


def _canonical_builder(value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    return parse_builder(str(value)).canonical()


BuilderExpr = Annotated[str, BeforeValidator(_canonical_builder)]
OptionalBuilderExpr = Annotated[Optional[str], BeforeValidator(_canonical_builder)]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSection(_Section):
    nx: int = Field(64, ge=4)
    ny: int = Field(64, ge=4)
    lx: float = Field(1.0, gt=0)
    ly: float = Field(1.0, gt=0)


class ModelSection(_Section):
    kind: Literal["FPD", "SPD", "KS"] = "FPD"
    D_w: float = 1.0
    D_p: float = 1.0
    chi: float = 1.0
    delta: float = 1.0
    N: BuilderExpr = "constant(value=0)"
    P: BuilderExpr = "constant(value=1)"
    c: BuilderExpr = "constant(value=0)"
    v: BuilderExpr = "constant(value=0)"
    food_feedback: bool = True
    blowup_factor: float = Field(default_factory=lambda: settings.blowup_factor, gt=1)


class InitialSection(_Section):
    u: BuilderExpr = "constant(value=0)"
    w: BuilderExpr = "constant(value=0)"
    p: OptionalBuilderExpr = None
    c: OptionalBuilderExpr = None
    rho: OptionalBuilderExpr = None


class RunSection(_Section):
    t_end: float = Field(1.0, gt=0)
    snapshot_every: int = Field(10, ge=1)
    dt_max: float = Field(default_factory=lambda: settings.dt_max, gt=0)
    cfl: float = Field(default_factory=lambda: settings.cfl, gt=0, lt=1)
    seed: int = Field(0, ge=0)
    output_dir: str = "output"
    elliptic_rel_tol: float = Field(default_factory=lambda: settings.elliptic_rel_tol, gt=0, le=1e-2)


#Validated scenario; unknown sections or keys are rejected
class Scenario(_Section):
    name: str = "scenario"
    grid: GridSection = Field(default_factory=GridSection)
    model: ModelSection = Field(default_factory=ModelSection)
    initial: InitialSection = Field(default_factory=InitialSection)
    run: RunSection = Field(default_factory=RunSection)
    _advisories: List[str] = PrivateAttr(default_factory=list)

    #Non-fatal findings of the last validation (nest-drift direction)
    @property
    def advisories(self) -> List[str]:
        return list(self._advisories)

    #Builder expressions in a fixed order; the index seeds randomized builders
    def builder_items(self):
        for section in ("model", "initial"):
            block = getattr(self, section)
            for key in type(block).model_fields:
                value = getattr(block, key)
                if key != "kind" and (isinstance(value, str) or value is None):
                    yield section, key, value
