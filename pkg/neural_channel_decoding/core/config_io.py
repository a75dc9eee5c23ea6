"""
config_io.py
Flat ``key = value`` configuration files for the command line, and the
options-to-argv conversion that makes every manifest replayable.
"""
import argparse
import configparser
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List

logger = logging.getLogger(__name__)

_SECTION = 'nnd'


def normalize_key(key: str) -> str:
    """``train-ebn0`` and ``train_ebn0`` name the same option."""
    return key.strip().lower().replace('-', '_')


def read_config_file(path) -> Dict[str, str]:
    """
    Read a section-less INI file into ``{option_dest: text}``.

    Blank lines and ``#``/``;`` comments are ignored. A repeated key is an error.
    """
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, strict=True, delimiters=('=',))
    parser.optionxform = normalize_key
    text = path.read_text(encoding='utf-8')
    try:
        parser.read_string(f"[{_SECTION}]\n{text}", source=str(path))
    except configparser.Error as e:
        raise ValueError(f"{path}: invalid config file: {e}")
    values = {key: value.strip() for key, value in parser.items(_SECTION)}
    logger.debug(f"Loaded {len(values)} option(s) from {path}")
    return values


def _option_actions(parser: argparse.ArgumentParser) -> Dict[str, argparse.Action]:
    return {action.dest: action for action in parser._actions
            if action.option_strings and action.dest != 'help'}


def apply_config_defaults(parser: argparse.ArgumentParser, values: Dict[str, str],
                          ignore: Iterable[str] = ()) -> List[str]:
    """
    Install config-file values as parser defaults so explicit flags still win.

    String defaults go through the option's ``type`` conversion when parsed,
    exactly like values typed on the command line. Returns the keys applied.
    """
    actions = _option_actions(parser)
    ignored = set(ignore)
    unknown = sorted(key for key in values if key not in actions and key not in ignored)
    if unknown:
        raise ValueError(f"unknown option(s) in config file: {', '.join(unknown)}")
    defaults: Dict[str, Any] = {}
    for key, text in values.items():
        if key in ignored:
            continue
        action = actions[key]
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            lowered = text.lower()
            if lowered not in ('true', 'false', 'yes', 'no', '1', '0', 'on', 'off'):
                raise ValueError(f"config option {key} must be a boolean, got {text!r}")
            defaults[key] = lowered in ('true', 'yes', '1', 'on')
        else:
            defaults[key] = text
    parser.set_defaults(**defaults)
    return sorted(defaults)


def options_to_argv(parser: argparse.ArgumentParser, options: Dict[str, Any]) -> List[str]:
    """
    Render resolved options as an explicit flag list for ``parser``.

    Options equal to ``None`` or ``False`` are left out; list values are joined
    with commas, which is what the list-valued flags accept.
    """
    argv: List[str] = []
    for dest, action in _option_actions(parser).items():
        if dest not in options:
            continue
        value = options[dest]
        flag = next((s for s in action.option_strings if s.startswith('--')), action.option_strings[0])
        if isinstance(action, argparse._StoreTrueAction):
            if value:
                argv.append(flag)
            continue
        if value is None or value is False:
            continue
        if isinstance(value, (list, tuple)):
            value = ','.join(repr(v) if isinstance(v, float) else str(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        argv.append(f"{flag}={value}")
    return argv
