"""
This file contains the sectioned key-value config format, used by model, train and cli.

Grammar:
    # comment            (';' works too)
    [section]            or [stage.N]
    key = value
"""
import logging
import re
from collections import OrderedDict
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from .exceptions import ConfigError

__all__ = ['Config', 'parse_config', 'read_config', 'write_config', 'format_config', 'SECTION_KEYS']

logger = logging.getLogger('spikelab')

SECTION_KEYS = {
    'model': {'preset', 'name', 'timesteps', 'num_classes', 'input_channels', 'input_height', 'input_width',
              'beta', 'v_th', 'surrogate_alpha', 'neuron', 'mlp_ratio', 'ssa_scale', 'shortcut'},
    'stage': {'patch_embed', 'token_mixer', 'blocks', 'channels', 'shortcut'},
    'train': {'epochs', 'batch_size', 'lr', 'weight_decay', 'smoothing', 'seed', 'optimizer', 'momentum',
              'warmup_epochs', 'schedule'},
    'data': {'dataset', 'train_size', 'test_size', 'size', 'mode', 'seed'},
    'energy': {'zero_input', 'samples'},
}

MAX_STAGES = 3

_SECTION_RE = re.compile(r'^\[\s*([a-z_]+)(?:\.(\d+))?\s*\]$')
_ENTRY_RE = re.compile(r'^([a-z_][a-z0-9_]*)\s*=\s*(.*)$')

_TRUE_VALUES = {'1', 'true', 'yes', 'on'}
_FALSE_VALUES = {'0', 'false', 'no', 'off'}


def _check_section(name, lineno=None):  # type: (str, Optional[int]) -> None
    base, _, index = name.partition('.')
    if base not in SECTION_KEYS:
        raise ConfigError("Unknown section '%s'" % name, lineno)
    if base == 'stage':
        if not index.isdigit():
            raise ConfigError("Stage section must be numbered like [stage.1]", lineno)
        if not 1 <= int(index) <= MAX_STAGES:
            raise ConfigError("Stage index must be in range 1..%d, got %s" % (MAX_STAGES, index), lineno)
    elif index:
        raise ConfigError("Section '%s' can't be numbered" % base, lineno)


def _check_key(section, key, lineno=None):  # type: (str, str, Optional[int]) -> None
    if key not in SECTION_KEYS[section.partition('.')[0]]:
        raise ConfigError("Unknown key '%s' in section [%s]" % (key, section), lineno)


class Config(object):
    """
    Parsed config. Keeps values as strings together with their line numbers,
    so that typed getters can report where a bad value came from.
    """
    __slots__ = ['_sections', 'source']

    def __init__(self, source='<string>'):  # type: (str) -> None
        self._sections = OrderedDict()  # type: Dict[str, Dict[str, Tuple[str, Optional[int]]]]
        self.source = source

    def __contains__(self, section):  # type: (str) -> bool
        return section in self._sections

    def sections(self):  # type: () -> List[str]
        return list(self._sections)

    def stage_sections(self):  # type: () -> List[Tuple[int, str]]
        """
        :return: A sorted list of (stage index, section name) tuples
        """
        result = []
        for name in self._sections:
            base, _, index = name.partition('.')
            if base == 'stage':
                result.append((int(index), name))
        return sorted(result)

    def items(self, section):  # type: (str) -> List[Tuple[str, str]]
        return [(key, value) for key, (value, _) in self._sections.get(section, {}).items()]

    def add_section(self, section, lineno=None):  # type: (str, Optional[int]) -> None
        _check_section(section, lineno)
        if section in self._sections:
            raise ConfigError("Duplicate section [%s]" % section, lineno)
        self._sections[section] = OrderedDict()

    def set(self, section, key, value, lineno=None, override=False):
        # type: (str, str, Any, Optional[int], bool) -> None
        if section not in self._sections:
            self.add_section(section, lineno)
        _check_key(section, key, lineno)
        entries = self._sections[section]
        if key in entries and not override:
            raise ConfigError("Duplicate key '%s' in section [%s]" % (key, section), lineno)
        entries[key] = (str(value).strip(), lineno)

    def apply_override(self, assignment):  # type: (str) -> None
        """
        Applies a command line override like "train.lr=0.01" or "stage.2.token_mixer=ssa"
        :param assignment: String section.key=value
        :return: None
        """
        path, sep, value = assignment.partition('=')
        if not sep:
            raise ConfigError("Override '%s' must look like section.key=value" % assignment)
        section, dot, key = path.strip().rpartition('.')
        if not dot or not section or not key:
            raise ConfigError("Override '%s' must look like section.key=value" % assignment)
        if section not in self._sections:
            _check_section(section)
            self._sections[section] = OrderedDict()
        self.set(section, key, value, override=True)
        logger.debug('Config override %s.%s = %s' % (section, key, value.strip()))

    def has(self, section, key):  # type: (str, str) -> bool
        return key in self._sections.get(section, {})

    def _lookup(self, section, key):  # type: (str, str) -> Tuple[Optional[str], Optional[int]]
        return self._sections.get(section, {}).get(key, (None, None))

    def _convert(self, section, key, default, converter, type_name):
        # type: (str, str, Any, Callable[[str], Any], str) -> Any
        value, lineno = self._lookup(section, key)
        if value is None:
            return default
        try:
            return converter(value)
        except (TypeError, ValueError):
            raise ConfigError("[%s] %s must be %s, got '%s'" % (section, key, type_name, value), lineno)

    def get(self, section, key, default=None):  # type: (str, str, Optional[str]) -> Optional[str]
        value, _ = self._lookup(section, key)
        return default if value is None else value

    def get_int(self, section, key, default=None):  # type: (str, str, Optional[int]) -> Optional[int]
        return self._convert(section, key, default, int, 'an integer')

    def get_float(self, section, key, default=None):  # type: (str, str, Optional[float]) -> Optional[float]
        return self._convert(section, key, default, float, 'a number')

    def get_bool(self, section, key, default=None):  # type: (str, str, Optional[bool]) -> Optional[bool]
        def converter(value):
            lowered = value.lower()
            if lowered in _TRUE_VALUES:
                return True
            if lowered in _FALSE_VALUES:
                return False
            raise ValueError(value)

        return self._convert(section, key, default, converter, 'a boolean')

    def check(self, section, key, condition, message):  # type: (str, str, bool, str) -> None
        """
        Raises ConfigError, pointing to the line the key was read from, if condition is False
        """
        if not condition:
            _, lineno = self._lookup(section, key)
            raise ConfigError("[%s] %s %s" % (section, key, message), lineno)


def parse_config(text, source='<string>'):  # type: (str, str) -> Config
    """
    Parses config text
    :param text: Config content
    :param source: Source name for log messages
    :return: Config instance
    :raises ConfigError: On any syntax or schema problem. Error carries a line number.
    """
    config = Config(source=source)
    section = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line[0] in '#;':
            continue

        if line.startswith('['):
            match = _SECTION_RE.match(line)
            if match is None:
                raise ConfigError("Malformed section header '%s'" % line, lineno)
            base, index = match.groups()
            section = base if index is None else '%s.%s' % (base, index)
            config.add_section(section, lineno)
            continue

        match = _ENTRY_RE.match(line)
        if match is None:
            raise ConfigError("Expected 'key = value', got '%s'" % line, lineno)
        if section is None:
            raise ConfigError("Entry '%s' appears before any section" % match.group(1), lineno)
        config.set(section, match.group(1), match.group(2), lineno)

    logger.debug('Parsed config %s: sections %s' % (source, ', '.join(config.sections())))
    return config


def read_config(path):  # type: (str) -> Config
    try:
        with open(path, 'r') as f:
            text = f.read()
    except (IOError, OSError) as e:
        raise ConfigError("Can't read config '%s': %s" % (path, e))
    return parse_config(text, source=path)


def format_config(sections):  # type: (Iterable[Tuple[str, Iterable[Tuple[str, Any]]]]) -> str
    """
    Renders sections into config text
    :param sections: Iterable of (section name, iterable of (key, value)) pairs.
        Values are converted with str(), floats with repr() to be parsed back bit-exactly.
    :return: Config text, parseable with parse_config()
    """
    chunks = []
    for section, entries in sections:
        _check_section(section)
        lines = ['[%s]' % section]
        for key, value in entries:
            _check_key(section, key)
            if isinstance(value, bool):
                value = 'true' if value else 'false'
            elif isinstance(value, float):
                value = repr(value)
            lines.append('%s = %s' % (key, value))
        chunks.append('\n'.join(lines))
    return '\n\n'.join(chunks) + '\n'


def write_config(config, path):  # type: (Config, str) -> None
    with open(path, 'w') as f:
        f.write(format_config((section, config.items(section)) for section in config.sections()))
