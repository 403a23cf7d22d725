# Copyright 2026 The pipesim Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Pipeline-parallel training simulator."""

import json
import os

from . import _core
from ._core import ConfigError, DimensionError, NumericError, predict_weights, version_difference

__all__ = [
    "ConfigError",
    "DimensionError",
    "NumericError",
    "bubble_stats",
    "makespan",
    "normalize_config",
    "predict_weights",
    "run",
    "timeline",
    "validate_timeline",
    "version_difference",
]


def timeline(schedule, depth, n_batches, micro_batches=1):
    """Events of a schedule as a list of dicts with slot, stage, kind, mb, micro."""
    return json.loads(_core.timeline_json(schedule, depth, n_batches, micro_batches))


def validate_timeline(schedule, depth, n_batches, micro_batches=1):
    return _core.validate_timeline(schedule, depth, n_batches, micro_batches)


def bubble_stats(schedule, depth, n_batches, micro_batches=1):
    return json.loads(_core.bubble_stats_json(schedule, depth, n_batches, micro_batches))


def makespan(schedule, depth, n_batches, micro_batches=1, forward_costs=None, backward_costs=None):
    return _core.makespan(schedule, depth, n_batches, micro_batches, forward_costs, backward_costs)


def _config_text(config):
    if isinstance(config, (str, os.PathLike)):
        with open(config, encoding="utf-8") as f:
            return f.read()
    return json.dumps(config)


def normalize_config(config):
    """Parse a config (dict or path) and return it with every default filled in."""
    return json.loads(_core.normalize_config_json(_config_text(config)))


def run(config, out_dir=None):
    """Run one experiment from a config dict or JSON file path and return its report.

    With ``out_dir`` the run directory is also written and its path is
    returned under ``output_dir``.
    """
    return json.loads(_core.run_json(_config_text(config), None if out_dir is None else os.fspath(out_dir)))
