"""Trace maps, Krein extensions and point-interaction spectra."""

import json

from ._tracesum import (
    TracesumError,
    delta_prime_spectrum,
    delta_spectrum,
    gram_flat,
    gram_grushin,
    gram_interval,
    oracle_spectrum,
    run,
)

__all__ = [
    "TracesumError",
    "delta_prime_spectrum",
    "delta_spectrum",
    "gram_flat",
    "gram_grushin",
    "gram_interval",
    "oracle_spectrum",
    "run",
    "run_json",
]


def run_json(command, config, *extra):
    """Run a CLI command on a config file and decode its JSON artifact."""
    status, out, err = run([command, "--config", str(config), "--format", "json", *extra])
    if status == 1:
        raise TracesumError(err.strip())
    return status, json.loads(out)
