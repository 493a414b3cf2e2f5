"""Experiment configuration: one JSON-serializable tree, overridable from
the process environment.

Environment overrides use the ``BEAC_`` prefix with ``SECTION__FIELD``
naming for nested sections, e.g. ``BEAC_TRAIN__EPOCHS=40``,
``BEAC_MODEL__VARIANT=bc``, ``BEAC_ENV__SIGMA=0.05``; top-level fields are
addressed directly (``BEAC_N_DEMOS=50``). Values parse according to the
field's declared type, and unknown names or unparsable values produce
errors naming the offending variable.
"""

from __future__ import annotations

import dataclasses
import json
import typing
from dataclasses import dataclass, field

from .data import canonical_dumps
from .env import EnvConfig
from .models import ModelConfig
from .training import TrainConfig

ENV_PREFIX = "BEAC_"


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvConfig = field(default_factory=EnvConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    n_demos: int = 100        # episodes per collected dataset
    demo_seed: int = 0        # first episode seed; episode i uses demo_seed + i
    task_only: bool = False   # collect demos with no exploration phase
    eval_episodes: int = 10
    eval_seed_base: int = 10_000  # disjoint from demo seeds
    holdout_frac: float = 0.2
    split_seed: int = 0

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["env"] = self.env.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        sections = {"env": EnvConfig, "model": ModelConfig, "train": TrainConfig}
        kw = {}
        for key, value in d.items():
            if key in sections:
                _check_fields(sections[key], value, section=key)
                kw[key] = (EnvConfig.from_dict(value) if key == "env"
                           else sections[key](**value))
            else:
                kw[key] = value
        _check_fields(cls, kw, section=None)
        return cls(**kw)


def _check_fields(cls, d: dict, section: str | None) -> None:
    known = {f.name for f in dataclasses.fields(cls)}
    for name in d:
        if name not in known:
            where = f"section '{section}'" if section else "config"
            raise ValueError(f"unknown field '{name}' in {where}")


def load_config(path: str) -> ExperimentConfig:
    with open(path) as f:
        return ExperimentConfig.from_dict(json.load(f))


def save_config(path: str, config: ExperimentConfig) -> None:
    with open(path, "w") as f:
        f.write(canonical_dumps(config.to_dict()) + "\n")


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _convert(raw: str, typ, varname: str):
    origin = typing.get_origin(typ)
    if origin is tuple:
        return tuple(float(x) for x in raw.split(","))
    if typ is bool:
        low = raw.strip().lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ValueError(f"{varname}: invalid bool {raw!r}")
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
    except ValueError:
        raise ValueError(f"{varname}: invalid {typ.__name__} {raw!r}") from None
    return raw


def apply_env_overrides(config: ExperimentConfig,
                        environ: dict[str, str]) -> ExperimentConfig:
    sections = {"env": EnvConfig, "model": ModelConfig, "train": TrainConfig}
    hints = {name: typing.get_type_hints(cls) for name, cls in sections.items()}
    hints["_top"] = typing.get_type_hints(ExperimentConfig)
    updates: dict[str, dict] = {name: {} for name in sections}
    top: dict = {}

    for var, raw in sorted(environ.items()):
        if not var.startswith(ENV_PREFIX):
            continue
        spec = var[len(ENV_PREFIX):].lower()
        if "__" in spec:
            section, name = spec.split("__", 1)
            if section not in sections:
                raise ValueError(f"{var}: unknown config section '{section}'")
            if name not in hints[section]:
                raise ValueError(f"{var}: unknown field '{name}' in section '{section}'")
            updates[section][name] = _convert(raw, hints[section][name], var)
        else:
            if spec in sections:
                raise ValueError(f"{var}: section overrides need a field, "
                                 f"e.g. {var}__EPOCHS")
            if spec not in hints["_top"] :
                raise ValueError(f"{var}: unknown config field '{spec}'")
            top[spec] = _convert(raw, hints["_top"][spec], var)

    for section, vals in updates.items():
        if vals:
            top[section] = dataclasses.replace(getattr(config, section), **vals)
    return dataclasses.replace(config, **top) if top else config
