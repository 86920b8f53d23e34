import copy
import hashlib
import os

import yaml

import dgm


logger = dgm.logger.getChild(__name__)


class Config:

    def __init__(self, path):

        if not os.path.exists(path):
            raise FileNotFoundError(path)
        self._config_path = path

        self._load_config()

    def _load_config(self):

        with open(self._config_path, 'r') as stream:
            config = yaml.load(stream, yaml.SafeLoader)

        if config is None:
            config = {}

        if not isinstance(config, dict):
            raise ValueError(
                "{} must contain a key-value mapping".format(
                    self._config_path))

        self._config = config

    def __getitem__(self, key):

        self._load_config()

        if key in self._config.keys():
            return self._config[key]
        else:
            raise KeyError(key)

    def __contains__(self, key):

        return key in self._config

    def get(self, key, default=None):

        try:
            return self[key]
        except KeyError:
            return default

    def keys(self):

        self._load_config()

        return list(self._config.keys())

    def __repr__(self):

        return self._config.__repr__()


PRESETS = {
    'toy': {'d': 64,
            'layers': 2,
            'heads': 4,
            'lam': 1.0,
            'learning_rate': 1e-3,
            'batch_size': 32,
            'epochs': 200,
            'clip_norm': 2.0},
    'large': {'d': 1024,
              'layers': 2,
              'heads': 4,
              'lam': 1.0,
              'learning_rate': 5e-5,
              'batch_size': 16,
              'epochs': 5,
              'clip_norm': 2.0},
}

# alternative preset names
PRESET_ALIASES = {'paper': 'large'}

ABLATION_FLAGS = ('disable_explicit_graph', 'disable_implicit_graph',
                  'disable_rule_marker')


class TrainConfig:
    """Training configuration

    Numeric fields must be positive, except `lam`, `learning_rate` and
    `span_weight`, which must be nonnegative. `seed` is mandatory.

    Parameters
    ----------
    seed : int
        Seed for parameter initialization and data shuffling
    d : int, optional
        Hidden dimension
    layers : int, optional
        Number of gated GCN layers
    heads : int, optional
        Number of attention heads of the implicit graph encoder
    lam : float, optional
        Weight of the entailment loss
    learning_rate : float, optional
    batch_size : int, optional
    epochs : int, optional
    clip_norm : float, optional
        Maximum global gradient norm
    span_weight : float, optional
        Weight of the span extraction loss during training
    max_length : int, optional
        Maximum input sequence length
    span_argmin : bool, optional
        Select spans by minimum score instead of maximum score
    disable_explicit_graph : bool, optional
    disable_implicit_graph : bool, optional
    disable_rule_marker : bool, optional
    beta1, beta2, adam_eps : float, optional
        Adam moment decay rates and denominator offset

    """

    _defaults = dict(PRESETS['toy'],
                     span_weight=1.0,
                     max_length=256,
                     span_argmin=False,
                     disable_explicit_graph=False,
                     disable_implicit_graph=False,
                     disable_rule_marker=False,
                     beta1=0.9,
                     beta2=0.999,
                     adam_eps=1e-8)

    _int_fields = ('d', 'layers', 'heads', 'batch_size', 'epochs',
                   'max_length')
    _positive_fields = ('clip_norm', 'beta1', 'beta2', 'adam_eps')
    _nonnegative_fields = ('lam', 'learning_rate', 'span_weight')
    _bool_fields = ('span_argmin',) + ABLATION_FLAGS

    def __init__(self, seed=None, **kwargs):

        if seed is None:
            raise ValueError("seed must be specified")

        unknown = set(kwargs) - set(self._defaults)
        if unknown:
            raise ValueError(
                "Unknown configuration keys: {}".format(sorted(unknown)))

        values = dict(self._defaults)
        values.update(kwargs)

        self.seed = int(seed)

        for k, v in values.items():
            setattr(self, k, v)

        self._validate()

    def _validate(self):

        for k in self._int_fields:
            v = getattr(self, k)
            if isinstance(v, bool) or int(v) != v or v <= 0:
                raise ValueError("{} must be a positive integer".format(k))
            setattr(self, k, int(v))

        for k in self._positive_fields:
            v = float(getattr(self, k))
            if not v > 0 or v == float('inf'):
                raise ValueError("{} must be positive and finite".format(k))
            setattr(self, k, v)

        for k in self._nonnegative_fields:
            v = float(getattr(self, k))
            if not v >= 0 or v == float('inf'):
                raise ValueError(
                    "{} must be nonnegative and finite".format(k))
            setattr(self, k, v)

        for k in self._bool_fields:
            if not isinstance(getattr(self, k), bool):
                raise ValueError("{} must be true or false".format(k))

        if self.d % self.heads != 0:
            raise ValueError(
                "d ({}) must be divisible by heads ({})".format(
                    self.d, self.heads))

        if self.beta1 >= 1 or self.beta2 >= 1:
            raise ValueError("beta1 and beta2 must be less than 1")

    @classmethod
    def preset(cls, name, seed, **overrides):
        """Returns a configuration built from a named preset

        Parameters
        ----------
        name : {'toy', 'large', 'paper'}
            'paper' is another name of 'large'
        seed : int
        overrides : dict
            Values replacing preset values

        Returns
        -------
        TrainConfig

        """

        key = PRESET_ALIASES.get(name, name)
        if key not in PRESETS:
            raise ValueError("Unknown preset: {}".format(name))

        values = dict(PRESETS[key])
        values.update(overrides)

        return cls(seed=seed, **values)

    @classmethod
    def from_mapping(cls, mapping):

        values = dict(mapping)
        preset = values.pop('preset', None)
        seed = values.pop('seed', None)

        if preset is not None:
            return cls.preset(preset, seed, **values)

        return cls(seed=seed, **values)

    @classmethod
    def from_yaml(cls, path):
        """Reads a configuration from a flat YAML file

        The file may name a ``preset`` whose values are overridden by the
        remaining keys.

        Parameters
        ----------
        path : str

        Returns
        -------
        TrainConfig

        """

        config = Config(path)

        logger.info("Reading training configuration from {}".format(path))

        return cls.from_mapping({k: config[k] for k in config.keys()})

    def to_dict(self):

        values = {k: getattr(self, k) for k in self._defaults}
        values['seed'] = self.seed

        return values

    def to_yaml(self):

        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def fingerprint(self):
        """Returns the SHA-256 digest of the canonical YAML form of this
        configuration

        Returns
        -------
        str

        """

        return hashlib.sha256(self.to_yaml().encode('utf-8')).hexdigest()

    def replace(self, **kwargs):
        """Returns a copy of this configuration with some values replaced"""

        values = self.to_dict()
        values.update(kwargs)

        return self.__class__.from_mapping(values)

    def ablation_flags(self):

        return {k: getattr(self, k) for k in ABLATION_FLAGS}

    def __eq__(self, other):

        if not isinstance(other, TrainConfig):
            return NotImplemented

        return self.to_dict() == other.to_dict()

    def __repr__(self):

        return 'TrainConfig({})'.format(
            ', '.join('{}={!r}'.format(k, v)
                      for k, v in sorted(self.to_dict().items())))

    def __copy__(self):

        return self.replace()

    def __deepcopy__(self, memo):

        return copy.copy(self)
