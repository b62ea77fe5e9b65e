import dataclasses
import enum
import typing
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional

from src.exceptions import ConfigError


class TaskSchema(str, enum.Enum):
    bwe = "bwe"
    m2s = "m2s"


class CorpusSourceSchema(str, enum.Enum):
    synthetic = "synthetic"
    directory = "directory"


class ConditionSchema(str, enum.Enum):
    prior = "prior"
    file = "file"
    seed = "seed"


class ModelPresetSchema(str, enum.Enum):
    small = "small"
    medium = "medium"
    stereo = "stereo"
    tiny = "tiny"


@dataclass
class AutoencoderSection:
    preset: str = "tiny"
    checkpoint: Optional[str] = None
    training_steps: int = 400
    overrides: Dict[str, Any] = field(default_factory=dict)


@dataclass
class SyntheticSection:
    min_notes: int = 2
    max_notes: int = 4
    min_f0_hz: float = 110.0
    max_f0_hz: float = 660.0
    harmonic_rolloff: float = 1.2
    noise_level: float = 0.05
    ambience_level: float = 0.25
    peak: float = 0.5


@dataclass
class CorpusSection:
    source: str = "synthetic"
    directory: Optional[str] = None
    clips: int = 96
    clip_seconds: float = 2.0
    stereo: bool = False
    test_fraction: float = 0.25
    synthetic: SyntheticSection = field(default_factory=SyntheticSection)


@dataclass
class ModelSection:
    preset: str = "small"
    overrides: Dict[str, Any] = field(default_factory=dict)


@dataclass
class EncoderSection:
    num_blocks: int = 2
    hidden_dim: int = 768


@dataclass
class DiscriminatorSection:
    internal_channels: int = 256


@dataclass
class EvaluationSection:
    stft_resolutions: List[List[int]] = field(
        default_factory=lambda: [[512, 50, 240], [1024, 120, 600], [2048, 240, 1200]]
    )
    mel_fft_size: int = 2048
    mel_hop: int = 512
    mel_bins: int = 128
    lambdas: List[float] = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    plot: bool = True


@dataclass
class ExternalRow:
    """
    Externally rendered outputs, one WAV per held-out clip in clip order.
    """

    label: str
    directory: str


@dataclass
class ExperimentManifest:
    experiment_id: str = "experiment"
    task: str = "bwe"
    seed: int = 0
    output_dir: Optional[str] = None
    autoencoder: AutoencoderSection = field(default_factory=AutoencoderSection)
    corpus: CorpusSection = field(default_factory=CorpusSection)
    model: ModelSection = field(default_factory=ModelSection)
    encoder: EncoderSection = field(default_factory=EncoderSection)
    discriminator: DiscriminatorSection = field(default_factory=DiscriminatorSection)
    training: Dict[str, Any] = field(default_factory=dict)
    evaluation: EvaluationSection = field(default_factory=EvaluationSection)
    external_rows: List[ExternalRow] = field(default_factory=list)

    def __post_init__(self):
        if self.task not in TaskSchema.__members__:
            raise ConfigError("task", f"must be one of {list(TaskSchema.__members__)}")
        if self.corpus.source not in CorpusSourceSchema.__members__:
            raise ConfigError(
                "corpus.source",
                f"must be one of {list(CorpusSourceSchema.__members__)}",
            )
        if self.model.preset not in ModelPresetSchema.__members__:
            raise ConfigError(
                "model.preset", f"must be one of {list(ModelPresetSchema.__members__)}"
            )
        if not 0 < self.corpus.test_fraction < 1:
            raise ConfigError("corpus.test_fraction", "must lie strictly between 0 and 1")

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @staticmethod
    def from_tree(tree: Optional[Mapping[str, Any]]) -> "ExperimentManifest":
        return build_section(ExperimentManifest, tree, prefix="")


def build_section(cls, tree: Optional[Mapping[str, Any]], prefix: str):
    """
    Builds a config dataclass from a YAML tree, recursing into nested sections.
    Unknown keys raise ConfigError naming the dotted key.
    """
    if tree is None:
        tree = {}
    if not isinstance(tree, Mapping):
        raise ConfigError(prefix.rstrip(".") or "<root>", "expected a mapping")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in tree.items():
        if key not in known:
            raise ConfigError(f"{prefix}{key}", "unknown config key")
        hint = hints[key]
        if dataclasses.is_dataclass(hint):
            value = build_section(hint, value, prefix=f"{prefix}{key}.")
        elif typing.get_origin(hint) in (list, List) and dataclasses.is_dataclass(
            typing.get_args(hint)[0]
        ):
            value = [
                build_section(typing.get_args(hint)[0], item, prefix=f"{prefix}{key}.{i}.")
                for i, item in enumerate(value or [])
            ]
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as error:
        raise ConfigError(prefix.rstrip(".") or "<root>", str(error)) from error
