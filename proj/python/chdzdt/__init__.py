"""Character-level word encoder: tokenizer, preprocessing, training and metrics."""

import json

from . import _core
from ._core import (
    CharVocab,
    ConfigError,
    Error,
    InputError,
    Normalizer,
    ari,
    kendall,
    kmeans,
    load_lexicon,
    pearson,
    silhouette,
    spearman,
    toy_lexicon,
    toy_root_clusters,
)

__version__ = _core.__version__


def _dumps(cfg):
    return "" if cfg is None else json.dumps(cfg)


class Model:
    """A float32 encoder. Configs are plain dicts with ModelConfig keys."""

    def __init__(self, native):
        self._m = native

    @classmethod
    def create(cls, config=None):
        return cls(_core.Model.create(_dumps(config)))

    @classmethod
    def load(cls, path):
        return cls(_core.Model.load(str(path)))

    def save(self, path):
        self._m.save(str(path))

    @property
    def config(self):
        return json.loads(self._m.config_json)

    @property
    def dim(self):
        return self._m.dim

    def num_params(self):
        return self._m.num_params()

    def embed(self, words):
        return self._m.embed(list(words))

    def acs(self, clusters):
        return self._m.acs([(root, list(members)) for root, members in clusters])


def count_params(config):
    return _core.count_params(_dumps(config))


def train(lexicon, model_config=None, train_config=None):
    """Trains a fresh model on (word, labels) rows; returns (Model, log records)."""
    init = _core.Model.create(_dumps(model_config))
    native, log = _core.train(list(lexicon), init, _dumps(train_config))
    return Model(native), [json.loads(line) for line in log.splitlines()]


__all__ = [
    "CharVocab",
    "ConfigError",
    "Error",
    "InputError",
    "Model",
    "Normalizer",
    "ari",
    "count_params",
    "kendall",
    "kmeans",
    "load_lexicon",
    "pearson",
    "silhouette",
    "spearman",
    "toy_lexicon",
    "toy_root_clusters",
    "train",
]
