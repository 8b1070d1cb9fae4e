"""Experiment configuration: defaults, key = value files, precedence, validation.

Precedence, lowest first: built-in defaults, the config file, the
REGPERC_WORKERS environment variable (worker count only), explicit CLI
flags.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

from lark import Lark, Transformer
from lark.exceptions import UnexpectedInput

from .errors import ConfigError, RegPercError, TooLarge, UnknownCommand, ValidationError
from .formats import format_float
from .gaussian_wave import MAX_BALL_SIZE, WaveModel, ball_size
from .parallel import workers_from_env
from .regular_graph import GENERATORS, check_graph_parameters, restart_limit
from .spectral import DEFAULT_MAX_N

COMMANDS = (
    "generate",
    "spectrum",
    "sweep",
    "critical-curve",
    "model-phi",
    "model-critical",
    "sample-wave",
    "fig5",
    "sharpening",
    "plot",
)

# ---------------------------------------------------------------------------
# Grammar loading (cached)
# ---------------------------------------------------------------------------

_GRAMMAR_PATH = Path(__file__).parent / "config.lark"
_lark_parser: Lark | None = None


def _get_parser() -> Lark:
    global _lark_parser
    if _lark_parser is None:
        _lark_parser = Lark(
            _GRAMMAR_PATH.read_text(encoding="utf-8"),
            parser="lalr",
            propagate_positions=True,
        )
    return _lark_parser


class _EntryCollector(Transformer):
    def start(self, items):
        return list(items)

    def entry(self, items):
        key = items[0]
        raw = str(items[1]).strip() if len(items) > 1 else ""
        return str(key), raw, key.line, key.column


# ---------------------------------------------------------------------------
# Value codecs
# ---------------------------------------------------------------------------

def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(p) for p in _split(raw))


def _float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(p) for p in _split(raw))


def _split(raw: str) -> list[str]:
    return [p.strip() for p in raw.split(",") if p.strip()]


def _show(value: Any) -> str:
    if isinstance(value, tuple):
        return ",".join(_show(v) for v in value)
    if isinstance(value, float):
        return format_float(value)
    return str(value)


_PARSERS: dict[str, Callable[[str], Any]] = {
    "int": int,
    "float": float,
    "str": str,
    "tuple[int, ...]": _int_list,
    "tuple[float, ...]": _float_list,
}


@dataclass
class ExperimentConfig:
    """Every tunable parameter of every subcommand, with desk-scale defaults.

    ``lam`` is spelled ``lambda`` in config files.
    """
    n: int = 1000
    d: int = 3
    seed: int = 0
    realizations: int = 10
    lambda_bins: int = 16
    lam: float = 0.0
    lambda_grid: tuple[float, ...] = ()
    lambda_step: float = 0.2
    kmax: int = 10
    radius: int = 4
    count: int = 1000
    quad_nodes: int = 128
    truncation: float = 8.0
    tol: float = 1e-3
    smoothing_window: int = 11
    generator: str = "pairing"
    restarts: str = "fixed"
    sizes: tuple[int, ...] = (100, 250, 1000)
    samples: int = 20
    workers: int = 1
    out: str = ""
    source: str | None = field(default=None, compare=False, repr=False)

    # -- file form ---------------------------------------------------------

    @staticmethod
    def key_for(name: str) -> str:
        return "lambda" if name == "lam" else name

    @classmethod
    def field_for(cls, key: str) -> str:
        return "lam" if key == "lambda" else key

    @classmethod
    def _fields(cls) -> dict[str, dataclasses.Field]:
        return {f.name: f for f in fields(cls) if f.name != "source"}

    @classmethod
    def field_names(cls) -> frozenset[str]:
        return frozenset(cls._fields())

    def to_text(self) -> str:
        lines = [f"{self.key_for(name)} = {_show(getattr(self, name))}" for name in self._fields()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str | None = None) -> ExperimentConfig:
        return cls(source=source, **cls.parse_entries(text))

    @classmethod
    def from_file(cls, path: str | Path) -> ExperimentConfig:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e.strerror}", flag="--config") from e
        return cls.from_text(text, source=str(path))

    @classmethod
    def parse_entries(cls, text: str) -> dict[str, Any]:
        """Typed values keyed by field name; later duplicates win."""
        if not text.endswith("\n"):
            text += "\n"
        try:
            tree = _get_parser().parse(text)
        except UnexpectedInput as e:
            raise ConfigError(
                "malformed config line",
                line=getattr(e, "line", None),
                column=getattr(e, "column", None),
            ) from e
        known = cls._fields()
        values: dict[str, Any] = {}
        for key, raw, line, column in _EntryCollector().transform(tree):
            name = cls.field_for(key)
            if name not in known:
                raise ConfigError(f"unknown key {key!r}", flag=key, line=line, column=column)
            kind = str(known[name].type)
            if kind == "str":
                values[name] = raw
                continue
            try:
                values[name] = _PARSERS[kind](raw)
            except ValueError:
                raise ConfigError(
                    f"cannot read {raw!r} as {kind}", flag=key, line=line, column=column
                ) from None
        return values

    # -- precedence --------------------------------------------------------

    @classmethod
    def resolve(cls, path: str | Path | None = None, flags: dict[str, Any] | None = None) -> ExperimentConfig:
        """defaults < file < REGPERC_WORKERS < explicit flags (None means unset)."""
        config = cls.from_file(path) if path else cls()
        env_workers = workers_from_env()
        if env_workers is not None:
            config.workers = env_workers
        for name, value in (flags or {}).items():
            if value is None:
                continue
            if name not in cls._fields():
                raise ConfigError(f"unknown setting {name!r}")
            setattr(config, name, value)
        return config

    # -- validation --------------------------------------------------------

    def check(self, command: str) -> list[RegPercError]:
        """All precondition violations for ``command`` (empty when valid)."""
        if command not in COMMANDS:
            return [UnknownCommand(f"unknown command {command!r}")]
        errors: list[RegPercError] = []

        def attempt(fn: Callable[[], Any]) -> None:
            try:
                fn()
            except ValidationError as e:
                errors.append(e)

        def need(ok: bool, flag: str, message: str) -> None:
            if not ok:
                errors.append(ValidationError(message, flag=flag))

        need(self.workers >= 1, "--workers", "worker count must be positive")
        graph_commands = ("generate", "spectrum", "sweep", "critical-curve", "fig5")

        if command in graph_commands:
            attempt(lambda: check_graph_parameters(self.n, self.d, self.seed))
            need(self.generator in GENERATORS, "--generator", f"unknown generator {self.generator!r}")
            attempt(lambda: restart_limit(self.d, self.restarts))
        if command in ("spectrum", "sweep", "critical-curve", "fig5") and self.n > DEFAULT_MAX_N:
            errors.append(TooLarge(f"n={self.n} exceeds the eigendecomposition cap {DEFAULT_MAX_N}", flag="--n"))
        if command in ("sweep", "model-phi", "sample-wave"):
            attempt(lambda: WaveModel(self.lam, self.d))
        if command in ("critical-curve", "fig5"):
            need(self.realizations >= 1, "--realizations", "realizations must be positive")
            need(self.lambda_bins >= 1, "--lambda-bins", "lambda_bins must be positive")
        if command in ("sweep", "critical-curve", "fig5", "sharpening"):
            need(
                self.smoothing_window >= 1 and self.smoothing_window % 2 == 1,
                "--window", "smoothing window must be a positive odd integer",
            )
        if command == "model-phi":
            need(self.kmax >= 0, "--kmax", "kmax must be nonnegative")
        if command in ("model-critical", "fig5"):
            need(self.quad_nodes >= 32, "--quad-nodes", "quad_nodes must be at least 32")
            need(self.truncation >= 6, "--truncation", "truncation must be at least 6")
            need(self.tol > 0, "--tol", "tol must be positive")
            need(self.lambda_step > 0, "--lambda-step", "lambda_step must be positive")
            if self.d >= 3:
                edge = 2.0 * math.sqrt(self.d - 1)
                bad = [x for x in self.lambda_grid if not -edge < x < edge]
                need(not bad, "--lambda-grid", f"grid points outside the open spectrum: {bad}")
            else:
                attempt(lambda: WaveModel(0.0, self.d))
        if command == "sample-wave":
            need(self.count >= 1, "--count", "count must be positive")
            need(self.radius >= 0, "--radius", "radius must be nonnegative")
            if self.d >= 3 and self.radius >= 0 and ball_size(self.d, self.radius) > MAX_BALL_SIZE:
                errors.append(TooLarge(f"ball of radius {self.radius} exceeds {MAX_BALL_SIZE} vertices", flag="--radius"))
        if command == "sharpening":
            need(bool(self.sizes), "--sizes", "sizes must not be empty")
            need(self.samples >= 1, "--samples", "samples must be positive")
            need(self.generator in GENERATORS, "--generator", f"unknown generator {self.generator!r}")
            attempt(lambda: restart_limit(self.d, self.restarts))
            for n in self.sizes:
                attempt(lambda n=n: check_graph_parameters(n, self.d, self.seed))
                if n > DEFAULT_MAX_N:
                    errors.append(TooLarge(f"size {n} exceeds the eigendecomposition cap {DEFAULT_MAX_N}", flag="--sizes"))
        return errors

    def validate(self, command: str) -> ExperimentConfig:
        """Raise the first violation found by :meth:`check`."""
        errors = self.check(command)
        if errors:
            raise errors[0]
        return self
