# -*- coding: utf-8 -*-
"""
Run configuration: a sectioned `key = value` file read with configparser
against a typed schema.  Unknown sections or keys and ill-typed values are
rejected before any computation; :meth:`RunConfig.to_text` writes back the
fully resolved configuration.

Example::

    [run]
    seed = 7

    [corpus]
    path = molguide/examples/toy_corpus.smi
    property_column = 1

    [guidance]
    w_c = 6
    w_a = 3
"""

from __future__ import absolute_import, division, print_function, unicode_literals

import configparser
import io
from collections import OrderedDict

from molguide.toolkit import InvalidConfigValue, UnknownConfigKey, format_float, str2bool


def _none_or(parser):
    def parse(text):
        if text.strip().lower() in ("", "none"):
            return None
        return parser(text)

    parse.__name__ = "optional " + parser.__name__
    return parse


def _choice(*options):
    def parse(text):
        value = text.strip()
        if value not in options:
            raise ValueError("expected one of " + ", ".join(options))
        return value

    parse.__name__ = "one of " + "|".join(options)
    return parse


def _float_list(text):
    text = text.strip()
    if not text:
        return []
    return [float(v) for v in text.split(",")]


def _int_list(text):
    text = text.strip()
    if not text:
        return []
    return [int(v) for v in text.split(",")]


def _str_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _column_list(text):
    """Comma list of 1-based column numbers and inclusive ranges like '2-4'."""
    out = []
    for part in _str_list(text):
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if any(c < 1 for c in out):
        raise ValueError("column numbers start at 1")
    return out


def _threshold(text):
    value = text.strip().lower()
    if value == "median":
        return value
    return float(value)


def _target(text):
    value = text.strip().lower()
    if value == "flip":
        return value
    return _float_list(value)


def _str(text):
    return text.strip()


def _bool(text):
    return str2bool(text.strip())


# section -> key -> (parser, default text)
SCHEMA = OrderedDict(
    [
        ("run", OrderedDict([("seed", (int, "0")), ("progress", (_bool, "false"))])),
        (
            "corpus",
            OrderedDict(
                [
                    ("path", (_str, "")),
                    ("property_column", (_none_or(int), "1")),
                    ("condition_columns", (_column_list, "")),
                    ("radius", (int, "2")),
                    ("width", (int, "2048")),
                ]
            ),
        ),
        (
            "pairs",
            OrderedDict(
                [
                    ("mode", (_choice("threshold", "condition"), "threshold")),
                    ("threshold", (_threshold, "median")),
                    ("cos_cutoff", (float, "0.5")),
                    ("max_pairs", (int, "3")),
                    ("balance", (_bool, "false")),
                ]
            ),
        ),
        (
            "codec",
            OrderedDict(
                [
                    ("kind", (_choice("pca", "gaussian_mixture"), "pca")),
                    ("dim", (int, "16")),
                    ("path", (_str, "")),
                ]
            ),
        ),
        ("schedule", OrderedDict([("T", (int, "1000")), ("s", (float, "0.008"))])),
        (
            "model",
            OrderedDict(
                [
                    ("hidden", (_int_list, "128,128,128")),
                    ("time_dim", (int, "32")),
                    ("cond_proj_dim", (int, "32")),
                    ("align_hidden", (int, "64")),
                    ("align_space", (_choice("fingerprint", "latent"), "fingerprint")),
                    ("align_dim", (int, "16")),
                ]
            ),
        ),
        (
            "train",
            OrderedDict(
                [
                    ("pairs", (_str, "")),
                    ("learning_rate", (float, "0.001")),
                    ("epochs", (int, "100")),
                    ("batch_size", (int, "512")),
                    ("gamma", (float, "0.0")),
                    ("p_uncond", (float, "0.1")),
                    ("tau", (float, "0.8")),
                    ("ema_decay", (_none_or(float), "none")),
                    ("warmup_epochs", (int, "0")),
                    ("dropout_rate", (float, "0.0")),
                    ("patience", (_none_or(int), "none")),
                ]
            ),
        ),
        (
            "curriculum",
            OrderedDict(
                [
                    ("percentiles", (_float_list, "")),
                    ("thresholds", (_float_list, "")),
                    ("cos_cutoffs", (_float_list, "")),
                    ("learning_rates", (_float_list, "")),
                    ("epochs", (_int_list, "")),
                ]
            ),
        ),
        (
            "guidance",
            OrderedDict(
                [
                    ("mode", (_choice("compositional", "standard"), "compositional")),
                    ("w", (float, "1.0")),
                    ("w_c", (float, "1.0")),
                    ("w_a", (float, "1.0")),
                ]
            ),
        ),
        (
            "sampler",
            OrderedDict(
                [
                    ("sigma_rule", (_choice("ddpm", "ddim"), "ddpm")),
                    ("ddim_eta", (float, "0.0")),
                    ("edit_t_star", (int, "500")),
                ]
            ),
        ),
        (
            "edit",
            OrderedDict(
                [
                    ("checkpoint", (_str, "")),
                    ("codec", (_str, "")),
                    ("seeds", (_str, "")),
                    ("method", (_choice("model", "nearest_target", "random_target", "reconstruction"), "model")),
                    ("target", (_target, "flip")),
                    ("samples_per_seed", (int, "1")),
                    ("num_seeds", (int, "200")),
                ]
            ),
        ),
        (
            "sample",
            OrderedDict(
                [
                    ("checkpoint", (_str, "")),
                    ("codec", (_str, "")),
                    ("num_samples", (int, "100")),
                    ("condition", (_float_list, "")),
                    ("target_label", (_str, "")),
                ]
            ),
        ),
        (
            "eval",
            OrderedDict(
                [
                    ("generations", (_str, "")),
                    ("metrics", (_str_list, "validity,uniqueness,novelty,diversity,edit")),
                    ("threshold", (_threshold, "median")),
                    ("references", (_str, "")),
                    ("embeddings", (_str_list, "")),
                    ("spaces", (_str_list, "ECFP")),
                    ("retrieval_k", (_int_list, "1,2,3")),
                    ("retrieval_n", (int, "3")),
                    ("knn_k", (_int_list, "1,3,5")),
                    ("binders", (_str, "")),
                    ("hit_threshold", (float, "0.0")),
                    ("top_fraction", (float, "0.05")),
                    ("divergence", (_choice("l2", "cosine"), "l2")),
                    ("lam", (float, "0.0")),
                ]
            ),
        ),
        (
            "sweep",
            OrderedDict(
                [
                    ("w_c", (_float_list, "0,1,3,6,12")),
                    ("w_a", (_float_list, "0,1,3")),
                    ("t_star", (_int_list, "500")),
                    ("seeds", (_int_list, "0")),
                    ("workers", (int, "1")),
                ]
            ),
        ),
        (
            "synthetic",
            OrderedDict(
                [
                    ("D", (int, "2")),
                    ("separation", (float, "3.0")),
                    ("offset", (float, "3.0")),
                    ("spread", (float, "0.6")),
                    ("num_points", (int, "1000")),
                ]
            ),
        ),
    ]
)


class RunConfig:
    """Typed view of a run configuration file.

    Args:
       * **raw** (dict): section -> key -> text, as written in the file

    Values are reachable as ``cfg["section"]["key"]`` or ``cfg.get("section", "key")``.
    """

    def __init__(self, raw=None):
        raw = raw or {}
        self.raw = OrderedDict()
        self.values = OrderedDict()
        for section in raw:
            if section not in SCHEMA:
                raise UnknownConfigKey("Warning! Unknown config section [" + section + "]")
            for key in raw[section]:
                if key not in SCHEMA[section]:
                    raise UnknownConfigKey("Warning! Unknown config key [" + section + "] " + key)
        for section, keys in SCHEMA.items():
            self.raw[section] = OrderedDict()
            self.values[section] = OrderedDict()
            for key, (parser, default) in keys.items():
                text = raw.get(section, {}).get(key, default)
                try:
                    value = parser(text)
                except (ValueError, TypeError) as e:
                    raise InvalidConfigValue(
                        "Warning! [" + section + "] " + key + " = '" + text + "' is not valid (" + str(e) + ")"
                    )
                self.raw[section][key] = text.strip()
                self.values[section][key] = value

    @classmethod
    def from_string(cls, text):
        parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise InvalidConfigValue("Warning! Malformed config: " + str(e).splitlines()[0])
        raw = OrderedDict((s, OrderedDict(parser.items(s))) for s in parser.sections())
        return cls(raw)

    @classmethod
    def from_file(cls, path):
        with io.open(path, "r", encoding="utf-8") as f:
            return cls.from_string(f.read())

    def __getitem__(self, section):
        return self.values[section]

    def get(self, section, key):
        return self.values[section][key]

    def set(self, section, key, value):
        """Overrides one key (used by --seed-override); `value` is parsed like file text."""
        raw = OrderedDict((s, OrderedDict(v)) for s, v in self.raw.items())
        raw[section][key] = value if isinstance(value, str) else _as_text(value)
        other = RunConfig(raw)
        self.raw, self.values = other.raw, other.values

    def to_text(self):
        """The fully resolved configuration in the file format."""
        lines = []
        for section, keys in self.raw.items():
            lines.append("[" + section + "]")
            for key, text in keys.items():
                lines.append(key + " = " + text)
            lines.append("")
        return "\n".join(lines)

    def to_dict(self):
        return OrderedDict((s, OrderedDict(v)) for s, v in self.raw.items())

    def write(self, path):
        with io.open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.to_text())


def _as_text(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)
