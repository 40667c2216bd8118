"""Flat ``key = value`` config files.

Blank lines and ``#`` comments are ignored.  Training files use the
:class:`~plmcl.training.TrainConfig` field names (``lambda`` is accepted
for ``lam``).  Sweep files may add ``sweep.*`` axis keys and ``data.*``
keys naming :class:`~plmcl.datagen.SyntheticSpec` fields.
"""

from __future__ import annotations

import dataclasses
import typing
from pathlib import Path

from .datagen import SyntheticSpec
from .training import TrainConfig


class ConfigError(ValueError):
    pass


ALIASES = {"lambda": "lam"}
SWEEP_KEYS = ("settings", "losses", "seeds")


def read_pairs(path) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{path}: line {lineno} is not 'key = value'")
        if key in pairs:
            raise ConfigError(f"{path}: line {lineno} repeats key {key!r}")
        pairs[key] = value
    return pairs


def _convert(raw: str, annotation, key: str):
    hints = typing.get_args(annotation) or (annotation,)
    optional = type(None) in hints or "None" in str(annotation)
    if optional and raw.lower() in ("none", "auto", ""):
        return None
    kind = str(annotation)
    try:
        if "bool" in kind:
            lowered = raw.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if "int" in kind:
            return int(raw)
        if "float" in kind:
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}") from None
    return raw


def _build(cls, values: dict[str, str], where: str):
    field_types = {f.name: f.type for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, raw in values.items():
        name = ALIASES.get(key, key)
        if name not in field_types:
            raise ConfigError(f"{where}: unknown key {key!r}")
        kwargs[name] = _convert(raw, field_types[name], key)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_train_config(values: dict[str, str], where: str = "config") -> TrainConfig:
    return _build(TrainConfig, values, where)


def parse_synthetic_spec(values: dict[str, str], where: str = "spec") -> SyntheticSpec:
    return _build(SyntheticSpec, values, where)


def load_train_config(path) -> TrainConfig:
    return parse_train_config(read_pairs(path), str(path))


def load_synthetic_spec(path) -> SyntheticSpec:
    return parse_synthetic_spec(read_pairs(path), str(path))


def _parse_setting(token: str):
    name, _, frac = token.partition(":")
    name = name.strip().lower()
    if not frac:
        return name, 1.0
    frac = frac.strip()
    value = float(frac[:-1]) / 100 if frac.endswith("%") else float(frac)
    return name, value


def load_sweep_config(path):
    """Split a sweep file into ``(base TrainConfig, axes dict, SyntheticSpec)``.

    Axis values are comma separated: ``sweep.settings = sspl:0.2, sspl:40%, fspl``,
    ``sweep.losses = plmcl, an`` and ``sweep.seeds = 0, 1, 2``.
    """
    pairs = read_pairs(path)
    train_keys = {k: v for k, v in pairs.items() if "." not in k}
    data_keys = {k[5:]: v for k, v in pairs.items() if k.startswith("data.")}
    sweep_keys = {k[6:]: v for k, v in pairs.items() if k.startswith("sweep.")}
    stray = [k for k in pairs if "." in k and not k.startswith(("data.", "sweep."))]
    if stray:
        raise ConfigError(f"{path}: unknown key {stray[0]!r}")
    for key in sweep_keys:
        if key not in SWEEP_KEYS:
            raise ConfigError(f"{path}: unknown key 'sweep.{key}'")
    base = parse_train_config(train_keys, str(path))
    spec = parse_synthetic_spec(data_keys, str(path))
    split = lambda raw: [t.strip() for t in raw.split(",") if t.strip()]  # noqa: E731
    try:
        axes = {
            "settings": [_parse_setting(t) for t in split(sweep_keys.get("settings", ""))]
            or [(base.setting, base.fraction)],
            "losses": split(sweep_keys.get("losses", "")) or [base.loss],
            "seeds": [int(t) for t in split(sweep_keys.get("seeds", ""))] or [base.seed],
        }
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    for name, fraction in axes["settings"]:
        try:
            dataclasses.replace(base, setting=name, fraction=fraction)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    for loss in axes["losses"]:
        try:
            dataclasses.replace(base, loss=loss)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return base, axes, spec


def dump_config(config: TrainConfig) -> str:
    lines = []
    for key, value in config.to_dict().items():
        key = "lambda" if key == "lam" else key
        lines.append(f"{key} = {'none' if value is None else value}")
    return "\n".join(lines) + "\n"
