"""Configuration dataclasses and the flat ``key = value`` run-config format.

Run config files hold one ``key = value`` pair per line; ``#`` starts a
comment. Lists are comma separated. Relative paths resolve against the
config file's directory. Unknown keys are errors. Keys:

==================  ==============================================  =========================
key                 meaning                                         default
==================  ==============================================  =========================
run_name            output subdirectory name                        run
output_dir          root directory for checkpoints and reports      runs
train_path          training corpus                                 (required)
dev_path            development corpus (early stopping)             train_path
test_path           evaluation corpus                               (none)
train_embeddings    external H0 file aligned with train_path        (none)
dev_embeddings      external H0 file aligned with dev_path          (none)
test_embeddings     external H0 file aligned with test_path         (none)
variant             MLP_Thresholded, MLP_Full, SeqRNN, TreeRNN,     AddrMLP
                    AddrMLP
use_attention       attend over the sentence encoding               true
max_depth           maximum category depth                          6
max_seq_len         SeqRNN emission cap                             32
threshold           MLP_Thresholded frequency cutoff                10
encoder             birnn or external                               birnn
embed_dim           word embedding width                            64
hidden_dim          hidden width d                                  64
dropout             dropout rate on MLP hidden layer and encoder    0.2
batch_size          sentences per batch                             8
max_epochs          epoch budget                                    10
patience            stop after this many epochs without dev gain    (none)
stop_at_accuracy    stop once dev accuracy reaches this value       (none)
lr                  AdamW learning rate                             1e-4
weight_decay        AdamW decoupled weight decay                    0.01
seeds               comma-separated restart seeds                   14112, 36125, 92225
==================  ==============================================  =========================
"""
from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field, fields
from pathlib import Path

from .category import DEFAULT_MAX_DEPTH
from .errors import ConfigError

DEFAULT_SEEDS = (14112, 36125, 92225)


class Variant(str, enum.Enum):
    MLP_THRESHOLDED = "MLP_Thresholded"
    MLP_FULL = "MLP_Full"
    SEQ_RNN = "SeqRNN"
    TREE_RNN = "TreeRNN"
    ADDR_MLP = "AddrMLP"

    @property
    def constructive(self) -> bool:
        return self in (Variant.SEQ_RNN, Variant.TREE_RNN, Variant.ADDR_MLP)


class EncoderMode(str, enum.Enum):
    BIRNN = "birnn"
    EXTERNAL = "external"


@dataclass
class EncoderConfig:
    mode: EncoderMode = EncoderMode.BIRNN
    embed_dim: int = 64
    hidden_dim: int = 64

    def __post_init__(self):
        self.mode = EncoderMode(self.mode)
        if self.hidden_dim < 1 or self.embed_dim < 1:
            raise ConfigError("embed_dim and hidden_dim must be >= 1")


@dataclass
class DecoderConfig:
    variant: Variant = Variant.ADDR_MLP
    use_attention: bool = True
    max_depth: int = DEFAULT_MAX_DEPTH
    max_seq_len: int = 32
    threshold: int = 10
    dropout: float = 0.2

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if self.max_seq_len < 1:
            raise ConfigError("max_seq_len must be >= 1")

    @property
    def vocab_threshold(self) -> int:
        return self.threshold if self.variant is Variant.MLP_THRESHOLDED else 1


@dataclass
class TrainConfig:
    batch_size: int = 8
    max_epochs: int = 10
    lr: float = 1e-4
    weight_decay: float = 0.01
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    patience: int | None = None
    stop_at_accuracy: float | None = None

    def __post_init__(self):
        self.seeds = tuple(self.seeds)
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")


@dataclass
class RunConfig:
    train_path: Path | None = None
    dev_path: Path | None = None
    test_path: Path | None = None
    train_embeddings: Path | None = None
    dev_embeddings: Path | None = None
    test_embeddings: Path | None = None
    run_name: str = "run"
    output_dir: Path = Path("runs")
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    train: TrainConfig = field(default_factory=TrainConfig)


def _bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt(parse):
    return lambda s: None if s.lower() in ("none", "") else parse(s)


def _seeds(s: str):
    return tuple(int(x) for x in s.split(",") if x.strip())


# key -> (section, attribute, parser)
_KEYS = {
    "run_name": (None, "run_name", str),
    "output_dir": (None, "output_dir", Path),
    "train_path": (None, "train_path", Path),
    "dev_path": (None, "dev_path", Path),
    "test_path": (None, "test_path", Path),
    "train_embeddings": (None, "train_embeddings", Path),
    "dev_embeddings": (None, "dev_embeddings", Path),
    "test_embeddings": (None, "test_embeddings", Path),
    "encoder": ("encoder", "mode", EncoderMode),
    "embed_dim": ("encoder", "embed_dim", int),
    "hidden_dim": ("encoder", "hidden_dim", int),
    "variant": ("decoder", "variant", Variant),
    "use_attention": ("decoder", "use_attention", _bool),
    "max_depth": ("decoder", "max_depth", int),
    "max_seq_len": ("decoder", "max_seq_len", int),
    "threshold": ("decoder", "threshold", int),
    "dropout": ("decoder", "dropout", float),
    "batch_size": ("train", "batch_size", int),
    "max_epochs": ("train", "max_epochs", int),
    "patience": ("train", "patience", _opt(int)),
    "stop_at_accuracy": ("train", "stop_at_accuracy", _opt(float)),
    "lr": ("train", "lr", float),
    "weight_decay": ("train", "weight_decay", float),
    "seeds": ("train", "seeds", _seeds),
}
_PATH_KEYS = {k for k, (_, _, p) in _KEYS.items() if p is Path}


def parse_run_config(text: str, base_dir: Path | None = None) -> RunConfig:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not eq or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        parser = _KEYS[key][2]
        try:
            v = parser(val)
        except ValueError as e:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {e}") from None
        if key in _PATH_KEYS and base_dir is not None and not v.is_absolute():
            v = base_dir / v
        values[key] = v

    sections = {"encoder": {}, "decoder": {}, "train": {}}
    top = {}
    for key, v in values.items():
        section, attr, _ = _KEYS[key]
        (sections[section] if section else top)[attr] = v
    try:
        cfg = RunConfig(
            encoder=EncoderConfig(**sections["encoder"]),
            decoder=DecoderConfig(**sections["decoder"]),
            train=TrainConfig(**sections["train"]),
            **top,
        )
    except ConfigError as e:
        raise ConfigError(f"invalid configuration: {e}") from None
    if cfg.train_path is None:
        raise ConfigError("missing required key 'train_path'")
    if cfg.dev_path is None:
        cfg.dev_path = cfg.train_path
        cfg.dev_embeddings = cfg.dev_embeddings or cfg.train_embeddings
    if cfg.encoder.mode is EncoderMode.EXTERNAL:
        for k in ("train_embeddings", "dev_embeddings"):
            if getattr(cfg, k) is None:
                raise ConfigError(f"encoder = external requires {k!r}")
        if cfg.test_path is not None and cfg.test_embeddings is None:
            raise ConfigError("encoder = external requires 'test_embeddings' when test_path is set")
    return cfg


def load_run_config(path) -> RunConfig:
    path = Path(path)
    return parse_run_config(path.read_text(encoding="utf-8"), path.parent)


def to_jsonable(obj):
    """Dataclass/enum/path tree to plain JSON values."""
    if dataclasses.is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x) for x in obj]
    return obj
