# Copyright 2026 The recallprobe Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Thin Python wrapper over the recallprobe C++ core."""

import json
import os

from . import _recallprobe
from ._recallprobe import ConfigError, ContractError, Error, IoError, ParseError

__all__ = [
    "ConfigError",
    "ContractError",
    "Error",
    "IoError",
    "ParseError",
    "evaluate_group",
    "fold_key",
    "generate_template",
    "metrics",
    "normalize",
    "parse_catalog",
    "run_stage",
    "write_fixture",
]

normalize = _recallprobe.normalize
fold_key = _recallprobe.fold_key


def evaluate_group(outcomes, queries=None, target="target"):
    """Classify one query group. outcomes[i] is True when query i recalled the target."""
    outcomes = [bool(y) for y in outcomes]
    if queries is None:
        queries = ["q%d" % i for i in range(len(outcomes))]
    return json.loads(_recallprobe.evaluate_group(target, list(queries), outcomes))


def metrics(reported, confirmed, total):
    """R_fp and E_tc from entry counts; undefined ratios have value None."""
    return json.loads(_recallprobe.metrics_from_counts(reported, confirmed, total))


def parse_catalog(data, format="csv"):
    if isinstance(data, str):
        data = data.encode("utf-8")
    return json.loads(_recallprobe.parse_catalog(data, format))


def generate_template(shop):
    return json.loads(_recallprobe.generate_template(json.dumps(shop)))


def write_fixture(directory, seed=None, http_port=8088):
    args = {"http_port": http_port}
    if seed is not None:
        args["seed"] = seed
    _recallprobe.write_fixture(os.fspath(directory), **args)


def run_stage(stage, config_path):
    """Run one pipeline stage; returns (exit_code, messages)."""
    return _recallprobe.run_stage(stage, os.fspath(config_path))
