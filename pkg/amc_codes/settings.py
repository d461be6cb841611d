"""
Tunables for the command line pipeline.

``DEFAULTS`` < config file < environment (THREADS, SEED) < command line
flags. The config file holds ``key = value`` lines with ``#`` comments.
"""
import configparser
import logging
import os

from .exceptions import ImproperlyConfigured

logger = logging.getLogger(__name__)

DEFAULTS = {
    'exact_cap': 6,
    'ris_trials': 100000,
    'seed': None,
    'threads': None,
    'cluster_weight': 2,
    'bp_max_iter': 50,
    'rounds': 9,
    'cycle': '1212',
    'basis': 'Z',
    'x_check_coupling': 'xcx',
    'prune_below': 1e-15,
    'window': None,
    'detectors': 'both',
    'shots': 10000,
    'p': 0.001,
    'chunk_shots': 1024,
    'max_enumeration': 5e7,
}

ENVIRONMENT = {'THREADS': 'threads', 'SEED': 'seed'}

_CHOICES = {
    'cycle': ('1111', '1212', '1234'),
    'basis': ('Z', 'X'),
    'x_check_coupling': ('cx', 'xcx'),
    'detectors': ('both', 'z'),
}
_POSITIVE = ('exact_cap', 'ris_trials', 'threads', 'bp_max_iter', 'rounds', 'window', 'shots',
             'chunk_shots', 'max_enumeration')
_INTEGERS = ('exact_cap', 'ris_trials', 'seed', 'threads', 'cluster_weight', 'bp_max_iter',
             'rounds', 'window', 'shots', 'chunk_shots')


def _scalar(text):
    """TOML-like scalar: quoted string, none, true/false, int, float, else the bare string."""
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in '"\'':
        return text[1:-1]
    lowered = text.lower()
    if lowered in ('none', 'null', ''):
        return None
    if lowered in ('true', 'false'):
        return lowered == 'true'
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def load_config(path):
    parser = configparser.ConfigParser(comment_prefixes=('#',), inline_comment_prefixes=('#',),
                                       delimiters=('=',))
    parser.optionxform = str
    try:
        with open(path) as handle:
            parser.read_string('[amc]\n' + handle.read(), source=str(path))
    except OSError as exc:
        raise ImproperlyConfigured('cannot read config file {}: {}'.format(path, exc)) from exc
    except configparser.Error as exc:
        raise ImproperlyConfigured('malformed config file {}: {}'.format(path, exc)) from exc
    options = {key.replace('-', '_'): _scalar(value) for key, value in parser['amc'].items()}
    logger.debug(f"load_config: {sorted(options)} from {path}")
    return options


def environment_options(environ=None):
    environ = os.environ if environ is None else environ
    return {key: _scalar(environ[name]) for name, key in ENVIRONMENT.items() if environ.get(name)}


class Settings:
    """Validated options; unknown keys and out-of-range values are ImproperlyConfigured."""

    def __init__(self, options=None):
        options = dict(options or {})
        unknown = sorted(set(options) - set(DEFAULTS))
        if unknown:
            raise ImproperlyConfigured('{} is not a known setting'.format(unknown[0]))
        self._values = {key: self._validate(key, options.get(key, default)) for key, default in DEFAULTS.items()}

    @classmethod
    def load(cls, config=None, environ=None, **flags):
        """Merge every source; flags that are None do not override."""
        options = {}
        if config:
            options.update(load_config(config))
        options.update(environment_options(environ))
        options.update({key: value for key, value in flags.items() if value is not None})
        return cls(options)

    def _validate(self, key, value):
        if value is None:
            return None
        if key in _CHOICES:
            value = str(value)
            if key == 'basis':
                value = value.upper()
            if value not in _CHOICES[key]:
                raise ImproperlyConfigured('{} must be one of {}, got {!r}'.format(key, _CHOICES[key], value))
            return value
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ImproperlyConfigured('{} must be a number, got {!r}'.format(key, value))
        if key in _INTEGERS:
            if int(value) != value:
                raise ImproperlyConfigured('{} must be an integer, got {!r}'.format(key, value))
            value = int(value)
        if key in _POSITIVE and value < 1:
            raise ImproperlyConfigured('{} must be positive, got {!r}'.format(key, value))
        if key == 'seed' and value < 0:
            raise ImproperlyConfigured('seed must be non-negative, got {!r}'.format(value))
        if key == 'cluster_weight' and value < 0:
            raise ImproperlyConfigured('cluster_weight must be non-negative, got {!r}'.format(value))
        if key in ('p', 'prune_below') and not 0 <= value < 1:
            raise ImproperlyConfigured('{} must lie in [0, 1), got {!r}'.format(key, value))
        return value

    def __getitem__(self, key):
        return self._values[key]

    def __getattr__(self, key):
        try:
            return self.__dict__['_values'][key]
        except KeyError:
            raise AttributeError(key) from None

    def get(self, key, default=None):
        value = self._values.get(key)
        return default if value is None else value

    def as_dict(self):
        return dict(self._values)

    @property
    def distance_method(self):
        return f"exact:{self.exact_cap},ris:{self.ris_trials}"
