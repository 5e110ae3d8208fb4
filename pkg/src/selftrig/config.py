"""
JSON run configuration.

Example::

    {
      "system": {"A": [[1, 1, 0], [-2, 0, 4], [5, 4, -7]],
                 "B": [[-1], [0], [1]],
                 "x0": [-2, 3, 5]},
      "feedback": {"K": [[8.38, 26.36, 10.38]]},
      "certificate": {"alpha": 2.18, "w0_multiplier": 1.3, "P": [[...]]},
      "solver": {"max_iter": 50, "beta": 0.35, ...},
      "sim": {"T_s": 0.001, "horizon": 7.0, "settle_threshold": 0.05},
      "output": {"directory": "out", "formats": ["csv", "json"]}
    }

``solver``, ``sim`` and ``output`` may be omitted. A first-order system may
add a ``scalar`` block with ``c`` and ``q``.
"""

from dataclasses import dataclass, field
import json
from pathlib import Path

from .certificate import make_certificate
from .exceptions import ConfigError, SelfTrigError
from .plant import Feedback, LtiSystem
from .predictor import SolverParams
from .simulator import SimConfig

__all__ = ["RunConfig", "parse_config", "load_config"]

OUTPUT_FORMATS = ("csv", "json")


@dataclass
class RunConfig:
    sys: LtiSystem
    fb: Feedback
    cert: object
    params: SolverParams = field(default_factory=SolverParams)
    sim: SimConfig = field(default_factory=SimConfig)
    out_dir: str = "out"
    formats: tuple = OUTPUT_FORMATS
    scalar: dict = None
    source: str = None


def _block(raw, name, required=True):
    if name not in raw:
        if required:
            raise ConfigError(f"{name}: missing block")
        return {}
    block = raw[name]
    if not isinstance(block, dict):
        raise ConfigError(f"{name}: expected an object")
    return block


def _field(block, section, name, required=True):
    if name not in block:
        if required:
            raise ConfigError(f"{section}.{name}: missing")
        return None
    return block[name]


def _unknown(block, section, allowed):
    extra = sorted(set(block) - set(allowed))
    if extra:
        raise ConfigError(f"{section}: unknown field(s) {', '.join(extra)}")


def load_config(raw, source=None):
    """Validate an already-decoded configuration mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")

    sysb = _block(raw, "system")
    _unknown(sysb, "system", ("A", "B", "x0"))
    A, B, x0 = (_field(sysb, "system", k) for k in ("A", "B", "x0"))
    try:
        sys = LtiSystem(A=A, B=B, x0=x0)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"system: {exc}") from exc

    fbb = _block(raw, "feedback")
    _unknown(fbb, "feedback", ("K",))
    K = _field(fbb, "feedback", "K")
    try:
        fb = Feedback(K=K)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"feedback.K: {exc}") from exc
    if fb.K.shape != (sys.m, sys.n):
        raise ConfigError(f"feedback.K: shape {fb.K.shape} does not match (m, n) = {(sys.m, sys.n)}")

    solb = _block(raw, "solver", required=False)
    _unknown(solb, "solver", SolverParams.__dataclass_fields__)
    try:
        params = SolverParams(**solb)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"solver: {exc}") from exc

    simb = _block(raw, "sim", required=False)
    _unknown(simb, "sim", SimConfig.__dataclass_fields__)
    try:
        sim = SimConfig(**{k: float(v) for k, v in simb.items()})
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"sim: {exc}") from exc

    certb = _block(raw, "certificate")
    _unknown(certb, "certificate", ("alpha", "w0_multiplier", "w0_absolute", "P", "slack"))
    alpha = _field(certb, "certificate", "alpha")
    has_mult, has_abs = "w0_multiplier" in certb, "w0_absolute" in certb
    if has_mult == has_abs:
        raise ConfigError("certificate: exactly one of w0_multiplier / w0_absolute is required")
    try:
        cert = make_certificate(
            sys,
            fb,
            float(alpha),
            P=certb.get("P"),
            w0_multiplier=certb.get("w0_multiplier"),
            w0_absolute=certb.get("w0_absolute"),
            slack=certb.get("slack"),
        )
    except (SelfTrigError, ValueError, TypeError) as exc:
        raise ConfigError(f"certificate: {exc}") from exc

    outb = _block(raw, "output", required=False)
    _unknown(outb, "output", ("directory", "formats"))
    formats = tuple(outb.get("formats", OUTPUT_FORMATS))
    bad = [f for f in formats if f not in OUTPUT_FORMATS]
    if bad:
        raise ConfigError(f"output.formats: unsupported {bad}; choose from {list(OUTPUT_FORMATS)}")

    scalar = raw.get("scalar")
    if scalar is not None:
        if sys.n != 1 or sys.m != 1:
            raise ConfigError("scalar: only valid for a first-order single-input system")
        _unknown(scalar, "scalar", ("c", "q"))

    return RunConfig(
        sys=sys,
        fb=fb,
        cert=cert,
        params=params,
        sim=sim,
        out_dir=str(outb.get("directory", "out")),
        formats=formats,
        scalar=scalar,
        source=source,
    )


def parse_config(path):
    """Read and validate a JSON configuration file.

    Raises
    ------
    ConfigError
        With the offending field named in the message.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc
    return load_config(raw, source=str(path))
