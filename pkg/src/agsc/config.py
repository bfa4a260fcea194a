"""Experiment configuration (TOML) and run manifests.

A configuration file looks like::

    seed = 7
    out = "runs/en"
    languages = ["en"]
    structures = ["simple", "across_pp", "across_rc"]
    word_variant = "original"      # original | short | both

    [model]
    path = "model.agsc"            # or leave out [model] and give [train]

    [train]
    mode = "alm"
    n_layers = 4
    hidden_dim = 64

Unknown keys are rejected. Relative paths resolve against the file's
directory. A manifest written by a previous run can stand in for the
configuration file; its embedded snapshot is used.
"""

from __future__ import annotations

import hashlib
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import DataError
from .stimuli.lexicon import LANGUAGES
from .stimuli.templates import STRUCTURES

VARIANT_CHOICES = ("original", "short", "both")
POLICY_CHOICES = ("subject", "verb_slot")


class ConfigError(DataError):
    pass


@dataclass(frozen=True)
class TrainSpec:
    mode: str = "alm"
    n_layers: int = 4
    hidden_dim: int = 64
    n_heads: int = 4
    ff_dim: int = 256
    max_len: int = 16
    corpus_size: int = 50000
    steps: int = 2000
    lr: float = 3e-3
    batch_size: int = 64
    mask_rate: float = 0.15
    warmup_frac: float = 0.05
    languages: tuple = ()

    def validate(self) -> None:
        if self.mode not in ("alm", "mlm"):
            raise ConfigError(f"train.mode must be 'alm' or 'mlm', got {self.mode!r}")
        for name in ("n_layers", "hidden_dim", "n_heads", "ff_dim", "max_len", "corpus_size", "steps", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"train.{name} must be positive")
        if self.hidden_dim % self.n_heads:
            raise ConfigError("train.hidden_dim must be divisible by train.n_heads")
        if not self.lr > 0 or not 0 < self.mask_rate < 1 or not 0 <= self.warmup_frac < 1:
            raise ConfigError("train.lr, train.mask_rate or train.warmup_frac out of range")
        _check_languages(self.languages, "train.languages")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    out: str
    model_path: str | None = None
    train: TrainSpec | None = None
    languages: tuple = ("en",)
    structures: tuple = ("simple", "across_pp", "across_rc")
    word_variant: str = "original"
    max_n: int = 200
    fraction: float = 0.05
    top_n: int = 30
    k_step: int | None = None
    position_policy: str | int = "subject"
    overlap_iters: int = 10000
    train_fraction: float = 0.7
    lexicons: tuple = ()
    random_init: bool = False
    source: str | None = field(default=None, compare=False)

    @property
    def variants(self) -> tuple:
        return ("original", "short") if self.word_variant == "both" else (self.word_variant,)

    @property
    def train_languages(self) -> tuple:
        return (self.train.languages or self.languages) if self.train else self.languages

    def validate(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an integer in [0, 2^64)")
        if (self.model_path is None) == (self.train is None):
            raise ConfigError("give exactly one of [model] path or [train]")
        if self.train is not None:
            self.train.validate()
        if self.model_path is not None and not Path(self.model_path).is_file():
            raise ConfigError(f"model file {self.model_path} does not exist")
        for path in self.lexicons:
            if not Path(path).is_file():
                raise ConfigError(f"lexicon file {path} does not exist")
        _check_languages(self.languages, "languages")
        if not self.languages:
            raise ConfigError("languages must not be empty")
        if not self.structures or any(s not in STRUCTURES for s in self.structures):
            raise ConfigError(f"structures must be a non-empty subset of {STRUCTURES}")
        if self.word_variant not in VARIANT_CHOICES:
            raise ConfigError(f"word_variant must be one of {VARIANT_CHOICES}")
        if self.max_n < 1:
            raise ConfigError("max_n must be positive")
        if not 0 < self.fraction <= 1:
            raise ConfigError("fraction must lie in (0, 1]")
        if self.top_n < 1:
            raise ConfigError("top_n must be positive")
        if self.k_step is not None and self.k_step < 1:
            raise ConfigError("k_step must be positive")
        if not (self.position_policy in POLICY_CHOICES or (isinstance(self.position_policy, int) and self.position_policy >= 0)):
            raise ConfigError(f"position_policy must be one of {POLICY_CHOICES} or a token index")
        if self.overlap_iters < 1000:
            raise ConfigError("overlap_iters must be at least 1000")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if not isinstance(self.random_init, bool):
            raise ConfigError("random_init must be true or false")

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("source")
        for k in ("languages", "structures", "lexicons"):
            d[k] = list(d[k])
        if self.train is not None:
            d["train"]["languages"] = list(self.train.languages)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        train = d.pop("train", None)
        cfg = cls(
            **{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()},
            train=TrainSpec(**{**train, "languages": tuple(train.get("languages", ()))}) if train else None,
        )
        cfg.validate()
        return cfg

    def with_overrides(self, **kw) -> "ExperimentConfig":
        cfg = replace(self, **{k: v for k, v in kw.items() if v is not None})
        cfg.validate()
        return cfg


def _check_languages(langs, name) -> None:
    bad = [lang for lang in langs if lang not in LANGUAGES]
    if bad:
        raise ConfigError(f"{name}: unknown languages {bad}")


_TOP_KEYS = {f.name for f in fields(ExperimentConfig)} - {"model_path", "train", "source"} | {"model", "train"}
_TRAIN_KEYS = {f.name for f in fields(TrainSpec)}


def _resolve(base: Path, p: str) -> str:
    path = Path(p)
    return str(path if path.is_absolute() else (base / path))


def parse_config(data: dict, base_dir: Path, source: str | None = None) -> ExperimentConfig:
    """Validate a parsed TOML document; strict about keys and types."""
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    if "seed" not in data:
        raise ConfigError("seed is mandatory")
    kw: dict = {"seed": data["seed"], "out": _resolve(base_dir, data.get("out", "run"))}
    model = data.get("model")
    if model is not None:
        if not isinstance(model, dict) or set(model) != {"path"}:
            raise ConfigError("[model] takes exactly one key, path")
        kw["model_path"] = _resolve(base_dir, model["path"])
    train = data.get("train")
    if train is not None:
        if not isinstance(train, dict):
            raise ConfigError("[train] must be a table")
        bad = set(train) - _TRAIN_KEYS
        if bad:
            raise ConfigError(f"unknown [train] keys: {sorted(bad)}")
        kw["train"] = TrainSpec(**{**train, "languages": tuple(train.get("languages", ()))})
    for key in ("languages", "structures", "lexicons"):
        if key in data:
            if not isinstance(data[key], list):
                raise ConfigError(f"{key} must be a list")
            kw[key] = tuple(_resolve(base_dir, p) for p in data[key]) if key == "lexicons" else tuple(data[key])
    for key in ("word_variant", "max_n", "fraction", "top_n", "k_step", "position_policy", "overlap_iters", "train_fraction", "random_init"):
        if key in data:
            kw[key] = data[key]
    if "fraction" in kw or "train_fraction" in kw:
        for key in ("fraction", "train_fraction"):
            if key in kw and not isinstance(kw[key], (int, float)):
                raise ConfigError(f"{key} must be a number")
    for key in ("max_n", "top_n", "overlap_iters"):
        if key in kw and (not isinstance(kw[key], int) or isinstance(kw[key], bool)):
            raise ConfigError(f"{key} must be an integer")
    if kw.get("k_step") == 0:
        kw["k_step"] = None
    cfg = ExperimentConfig(**kw, source=source)
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    """Read a TOML configuration or the snapshot inside a run manifest."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    if path.suffix == ".json":
        try:
            doc = json.loads(raw)
            snap = doc["config"]
        except (ValueError, KeyError, TypeError):
            raise ConfigError(f"{path} is not a run manifest") from None
        problems = verify_inputs(doc)
        if problems:
            raise ConfigError("manifest inputs changed: " + "; ".join(problems))
        cfg = ExperimentConfig.from_json(snap)
        return replace(cfg, source=str(path))
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, path.resolve().parent, str(path))


# ---------------------------------------------------------------- manifests


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def atomic_write(path, data: bytes | str) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


@dataclass
class RunManifest:
    config: dict
    version: str
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)
    wall_clock: dict = field(default_factory=dict)

    def stage(self, name: str, status: str, seconds: float | None = None, error: str | None = None) -> None:
        entry = {"status": status}
        if seconds is not None:
            entry["seconds"] = round(seconds, 3)
        if error:
            entry["error"] = error
        self.stages[name] = entry

    def add_outputs(self, root: Path, paths) -> None:
        for p in paths:
            p = Path(p)
            self.outputs[str(p.relative_to(root))] = sha256_file(p)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True) + "\n"


def write_manifest(manifest: RunManifest, path) -> Path:
    return atomic_write(path, manifest.to_json())


def read_manifest(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from None


def verify_inputs(doc: dict) -> list[str]:
    problems = []
    for p, digest in doc.get("inputs", {}).items():
        if not Path(p).is_file():
            problems.append(f"{p} is missing")
        elif sha256_file(p) != digest:
            problems.append(f"{p} checksum mismatch")
    return problems


def verify_manifest(path) -> list[str]:
    """Every recorded input and output checksum that no longer matches."""
    path = Path(path)
    doc = read_manifest(path)
    problems = verify_inputs(doc)
    for rel, digest in doc.get("outputs", {}).items():
        p = path.parent / rel
        if not p.is_file():
            problems.append(f"{rel} is missing")
        elif sha256_file(p) != digest:
            problems.append(f"{rel} checksum mismatch")
    return problems
