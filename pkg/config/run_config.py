import io
import logging
import math
import os
import re
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, List, Mapping, Optional, Tuple

from dotenv import dotenv_values

from config.settings import (DEFAULT_EPS_CONST, DEFAULT_LAMBDA_TURNS, DEFAULT_N_MAX, DEFAULT_RADII,
                             DEFAULT_SHIFT_WINDOW, DEFAULT_TAU0, DEFAULT_TAU1, DEFAULT_TAU2,
                             DEFAULT_TOLERANCE, FIRST_ORDER_DEPTH, HOCHSCHILD_DEPTH, OUTPUT_DIR,
                             SCAN_DEPTH)
from utils.errors import ParameterError
from utils.lattice import SpinStructure, reflection_margin

logger = logging.getLogger(__name__)

COMMANDS = ("verify", "spectrum", "classify", "hochschild", "resolvent")
OUTPUT_FORMATS = ("json", "csv", "text")


@dataclass
class RunConfig:
    """Parameters of one CLI run. Defaults: n_max=6, lambda=(sqrt5-1)/2 turns, tau=(1,i), tol=1e-12"""

    command: str = "verify"
    n_max: int = DEFAULT_N_MAX
    spins: Tuple[SpinStructure, ...] = (SpinStructure(),)
    lambda_turns: float = DEFAULT_LAMBDA_TURNS
    phi: float = 0.0
    psi: float = 0.0
    theta: float = 0.0
    tau1: complex = DEFAULT_TAU1
    tau2: complex = DEFAULT_TAU2
    tau0: complex = DEFAULT_TAU0
    eps_const: complex = DEFAULT_EPS_CONST
    tolerance: float = DEFAULT_TOLERANCE
    depth: Optional[int] = None
    out: str = OUTPUT_DIR
    output_format: str = "json"
    hochschild: bool = False
    counterexample: bool = False
    k_window: int = DEFAULT_SHIFT_WINDOW
    radii: Tuple[float, ...] = DEFAULT_RADII

    def echo(self) -> Dict[str, Any]:
        """Flat, JSON-ready view of every parameter in declaration order"""
        result: Dict[str, Any] = {}
        for item in fields(self):
            value = getattr(self, item.name)
            if item.name == "spins":
                value = [spin.label for spin in value]
            elif isinstance(value, complex):
                value = format_complex(value)
            elif isinstance(value, tuple):
                value = list(value)
            result[item.name] = value
        return result


def parse_complex(text: str) -> complex:
    """Python complex literal, with `i` accepted as the imaginary unit ('i', '1+2i', '-0.5i')"""
    cleaned = str(text).strip().replace(" ", "")
    if not cleaned:
        raise ParameterError("Empty complex value")
    cleaned = re.sub(r"(^|[+\-(])i(\)?)$", r"\g<1>1j\g<2>", cleaned)
    cleaned = re.sub(r"i(\)?)$", r"j\g<1>", cleaned)
    try:
        value = complex(cleaned)
    except ValueError as e:
        raise ParameterError(f"Cannot parse complex value '{text}'") from e
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ParameterError(f"Complex value must be finite, got '{text}'")
    return value


def format_complex(value: complex) -> str:
    return f"{value.real:.17g}{value.imag:+.17g}i"


def _parse_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError as e:
        raise ParameterError(f"Cannot parse number '{text}'") from e
    if not math.isfinite(value):
        raise ParameterError(f"Number must be finite, got '{text}'")
    return value


def _parse_int(text: str) -> int:
    try:
        return int(str(text).strip())
    except ValueError as e:
        raise ParameterError(f"Cannot parse integer '{text}'") from e


def _parse_bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ParameterError(f"Cannot parse boolean '{text}'")


def _parse_spins(text: str) -> Tuple[SpinStructure, ...]:
    if text.strip().lower() == "all":
        return tuple(SpinStructure.all())
    return tuple(SpinStructure.parse(chunk) for chunk in text.split(";") if chunk.strip())


def parse_radii(text: str) -> Tuple[float, ...]:
    return tuple(_parse_float(chunk) for chunk in text.split(",") if chunk.strip())


_KEY_PARSERS = {
    "command": str,
    "n_max": _parse_int,
    "spins": _parse_spins,
    "spin": _parse_spins,
    "lambda_turns": _parse_float,
    "lambda": _parse_float,
    "phi": _parse_float,
    "psi": _parse_float,
    "theta": _parse_float,
    "tau1": parse_complex,
    "tau2": parse_complex,
    "tau0": parse_complex,
    "eps_const": parse_complex,
    "tolerance": _parse_float,
    "depth": _parse_int,
    "out": str,
    "format": str,
    "output_format": str,
    "hochschild": _parse_bool,
    "counterexample": _parse_bool,
    "k_window": _parse_int,
    "radii": parse_radii,
}

_KEY_ALIASES = {"spin": "spins", "lambda": "lambda_turns", "format": "output_format"}


def typed_config_values(raw: Mapping[str, Optional[str]], source: str = "<config>") -> Dict[str, Any]:
    """Typed RunConfig fields from raw dotenv pairs; keys may use '-' or '_'"""
    values: Dict[str, Any] = {}
    for raw_key, text in raw.items():
        key = raw_key.replace("-", "_").lower()
        if key not in _KEY_PARSERS:
            raise ParameterError(f"{source}: unknown key '{raw_key}'")
        if text is None:
            raise ParameterError(f"{source}: key '{raw_key}' has no value, expected 'key = value'")
        values[_KEY_ALIASES.get(key, key)] = _KEY_PARSERS[key](text)
    return values


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    return typed_config_values(dotenv_values(stream=io.StringIO(text), interpolate=False), source)


def load_config_file(path: str) -> Dict[str, Any]:
    if not os.path.exists(path):
        raise ParameterError(f"Config file not found: {path}")
    logger.info(f"Loading run config from {path}")
    return typed_config_values(dotenv_values(path, interpolate=False, encoding="utf-8"), source=path)


def build_run_config(file_values: Optional[Dict[str, Any]] = None,
                     flag_values: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Defaults, then the config file, then flags; None-valued flags are ignored"""
    merged: Dict[str, Any] = {}
    merged.update(file_values or {})
    merged.update({key: value for key, value in (flag_values or {}).items() if value is not None})
    unknown = sorted(set(merged) - {item.name for item in fields(RunConfig)})
    if unknown:
        raise ParameterError(f"Unknown config keys: {', '.join(unknown)}")
    config = replace(RunConfig(), **merged)
    validate_run_config(config)
    return config


def required_n_max(config: RunConfig, spin: SpinStructure) -> int:
    """Smallest window whose deepest mask for this command is non-empty"""
    margin = reflection_margin(spin)
    scan = SCAN_DEPTH if (config.phi or config.psi) else 0
    if config.command == "verify":
        return max(1, (FIRST_ORDER_DEPTH if config.depth is None else config.depth) + margin)
    if config.command == "hochschild":
        return max(1, (HOCHSCHILD_DEPTH if config.depth is None else config.depth) + margin, scan)
    if config.command == "spectrum" and config.hochschild:
        return max(HOCHSCHILD_DEPTH + margin, scan)
    return 1


def validate_run_config(config: RunConfig):
    problems: List[str] = []
    if config.command not in COMMANDS:
        problems.append(f"command must be one of {', '.join(COMMANDS)} (got '{config.command}')")
    if not isinstance(config.n_max, int) or config.n_max < 1:
        problems.append(f"n_max must be a positive integer (got {config.n_max})")
    if not config.spins:
        problems.append("at least one spin structure is required")
    if not config.tolerance > 0:
        problems.append(f"tolerance must be positive (got {config.tolerance})")
    if config.depth is not None and config.depth < 0:
        problems.append(f"depth must be non-negative (got {config.depth})")
    if config.output_format not in OUTPUT_FORMATS:
        problems.append(f"format must be one of {', '.join(OUTPUT_FORMATS)} (got '{config.output_format}')")
    if config.k_window < 0:
        problems.append(f"k_window must be non-negative (got {config.k_window})")
    if not config.radii or any(r <= 0 for r in config.radii):
        problems.append(f"radii must be positive (got {list(config.radii)})")
    for name in ("lambda_turns", "phi", "psi", "theta"):
        value = getattr(config, name)
        if not isinstance(value, (int, float)) or not math.isfinite(value):
            problems.append(f"{name} must be a finite number (got {value})")

    # Mask depths only make sense once n_max and the depth override are sane
    if not problems:
        for spin in config.spins:
            needed = required_n_max(config, spin)
            if config.n_max < needed:
                problems.append(f"n_max={config.n_max} is too small for {config.command} with spin "
                                f"{spin.label}: needs at least {needed}")

    if problems:
        raise ParameterError(f"Invalid run config: {'; '.join(problems)}")
