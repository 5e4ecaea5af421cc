"""Run configuration: one flat, typed key = value file per run.

Grammar (documented in the README): one ``key = value`` pair per line,
``#`` starts a comment line, blank lines are ignored. Values are typed by
the field they set: int, float, bool (``true``/``false``) or bare string.
Unknown and duplicate keys are rejected so typos cannot pass silently.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything a run needs; every field has a working default.

    A fully defaulted config fits standard-suite phantom 0 at 32x32 with the
    seco model. ``epochs = -1`` resolves per model kind (1000 for the sine
    family, 2000 for relu_pe and gauss); ``lr_steps = -1`` resolves to
    epochs // 3.
    """

    model: str = "seco"
    layers: int = 5
    hidden: int = 256
    omega0: float = 30.0
    classes: int = 0
    class_layers: int = 3
    class_hidden: int = 128
    cond_layers: int = 2
    cond_hidden: int = 64
    pe_frequencies: int = 128
    pe_scale: float = 10.0
    gauss_scale: float = 10.0
    beta: float = 1.0
    lambda_neg: float = 1.0
    epochs: int = -1
    lr0: float = 1e-4
    lr_gamma: float = 0.1
    lr_steps: int = -1
    batch: int = 0
    factor: float = 2.0
    seed: int = 0
    freeze_conditioner: bool = False
    image: str = ""
    mask: str = ""
    out: str = ""
    phantom_index: int = 0
    height: int = 32
    width: int = 32
    models: str = "seco,siren"

    def validate(self) -> None:
        from .models import MODEL_KINDS

        if self.model not in MODEL_KINDS:
            raise ConfigError(f"model must be one of {MODEL_KINDS}, got {self.model!r}")
        if self.layers < 2:
            raise ConfigError("layers must be >= 2")
        for name in ("hidden", "class_layers", "class_hidden", "cond_layers",
                     "cond_hidden", "height", "width"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.beta < 0 or self.lambda_neg < 0:
            raise ConfigError("beta and lambda_neg must be non-negative")
        if self.lr0 <= 0:
            raise ConfigError("lr0 must be positive")
        if not 0.0 < self.lr_gamma <= 1.0:
            raise ConfigError("lr_gamma must lie in (0, 1]")
        if self.epochs < -1:
            raise ConfigError("epochs must be >= 0, or -1 for the model default")
        if self.pe_frequencies < 0 or self.batch < 0:
            raise ConfigError("pe_frequencies and batch must be >= 0")
        if not 0 <= self.phantom_index < 5:
            raise ConfigError("phantom_index must lie in [0, 5)")

    def resolved_epochs(self) -> int:
        if self.epochs >= 0:
            return self.epochs
        return 1000 if self.model in ("seco", "seco_no_semantic", "siren") else 2000

    def resolved_lr_steps(self, epochs: int | None = None) -> int:
        if self.lr_steps >= 1:
            return self.lr_steps
        epochs = self.resolved_epochs() if epochs is None else epochs
        return max(1, epochs // 3)

    def model_list(self) -> list[str]:
        return [m.strip() for m in self.models.split(",") if m.strip()]


_FIELD_TYPES = {f.name: type(getattr(RunConfig(), f.name))
                for f in dataclasses.fields(RunConfig)}


def _parse_value(key: str, raw: str, pytype: type):
    if pytype is bool:
        if raw == "true":
            return True
        if raw == "false":
            return False
        raise ConfigError(f"{key}: expected true/false, got {raw!r}")
    if pytype is int:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if pytype is float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    return raw


def parse_config(text: str) -> RunConfig:
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
        values[key] = _parse_value(key, raw, _FIELD_TYPES[key])
    cfg = dataclasses.replace(RunConfig(), **values)
    cfg.validate()
    return cfg


def format_config(cfg: RunConfig) -> str:
    lines = []
    for f in dataclasses.fields(RunConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())


def save_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(format_config(cfg))
