from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union
from loguru import logger
from pydantic import ValidationError

from src.models.params import FINITE_MASS, HYPOTHESIS_H_PLUS, validate_initial, validate_params
from src.scenario.builders import build_problem
from src.scenario.schema import Scenario
from src.solvers.errors import HypothesisError, ScenarioParseError

SECTIONS = ("grid", "model", "initial", "run")


def _strip_comment(line: str) -> str:
    if line.lstrip().startswith("#"):
        return ""
    # trailing comments need whitespace before the hash
    index = line.find(" #")
    return line if index < 0 else line[:index]


#Split the document into {section: {key: value}} with the line of every entry
def _tokenize(text: str) -> Tuple[Dict, Dict[Tuple[str, ...], int]]:
    document: Dict = {}
    lines: Dict[Tuple[str, ...], int] = {}
    section: Optional[str] = None

    for number, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioParseError(f"malformed section header '{line}'", number)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ScenarioParseError(f"unknown section [{section}]", number)
            if section in document:
                raise ScenarioParseError(f"section [{section}] appears twice", number)
            document[section] = {}
            lines[(section,)] = number
            continue
        if "=" not in line:
            raise ScenarioParseError(f"expected 'key = value', got '{line}'", number)

        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ScenarioParseError("missing key before '='", number)
        target = document if section is None else document[section]
        if key in target:
            raise ScenarioParseError(f"key '{key}' given twice", number)
        target[key] = value
        lines[(key,) if section is None else (section, key)] = number
    return document, lines


def _error_line(loc: Tuple, lines: Dict[Tuple[str, ...], int]) -> Optional[int]:
    path = tuple(str(part) for part in loc)
    while path:
        if path in lines:
            return lines[path]
        path = path[:-1]
    return None


#Build every field of the scenario and check the sign hypotheses; returns advisories
def check_scenario(scenario: Scenario, base_dir: Optional[Union[str, Path]] = None) -> List[str]:
    problem = build_problem(scenario, base_dir=base_dir)
    advisories = validate_params(problem.params)
    initial = problem.initial
    if scenario.model.kind == "KS":
        rho = initial["rho0"]
        if rho.min() < 0:
            raise HypothesisError("initial rho must be nonnegative", FINITE_MASS)
    else:
        m0 = validate_initial(initial["u0"], initial["w0"])
        logger.debug(f"Scenario '{scenario.name}' initial mass {m0:.6e}")
        for key in ("p0", "c0"):
            field = initial.get(key)
            if field is not None and field.min() < 0:
                raise HypothesisError(f"initial {key[0]} must be nonnegative", HYPOTHESIS_H_PLUS)
    scenario._advisories = advisories
    return advisories


#Parse and validate a scenario document; unknown sections or keys are errors
def parse_scenario(text: str, base_dir: Optional[Union[str, Path]] = None, validate: bool = True) -> Scenario:
    document, lines = _tokenize(text)
    try:
        scenario = Scenario.model_validate(document)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ScenarioParseError(f"{location}: {first['msg']}", _error_line(first["loc"], lines)) from e

    if validate:
        check_scenario(scenario, base_dir=base_dir)
    return scenario


#Read and parse a scenario file; snapshot builders resolve relative to its folder
def load_scenario(path: Union[str, Path], validate: bool = True) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise OSError(f"cannot read scenario '{path}': {e.strerror or e}") from e
    logger.info(f"Loading scenario {path}")
    return parse_scenario(text, base_dir=path.parent, validate=validate)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


#Canonical serializer: fixed section and key order, every value explicit
def dump_scenario(scenario: Scenario) -> str:
    out = [f"name = {scenario.name}"]
    for section in SECTIONS:
        block = getattr(scenario, section)
        out.append("")
        out.append(f"[{section}]")
        for key in type(block).model_fields:
            value = getattr(block, key)
            if value is None:
                continue
            out.append(f"{key} = {_format_value(value)}")
    return "\n".join(out) + "\n"
