"""Experiment config files: a flat key = value grammar.

Channels and users are repeated blocks: each `channel.kind` line opens a
new channel (its `channel.on_mean` / `channel.off_mean` lines follow), and
each `user.rate` line opens a new user (an optional `user.entry` follows,
defaulting to 0).  Scalar keys may appear once each:

    policy.L0, policy.C, policy.epsilon        (epsilon optional)
    experiment.horizon, experiment.runs, experiment.seed,
    experiment.baseline                        (analytic | simulated)

`#` starts a comment; blank lines are ignored.  manifest_lines() emits a
parsed config back in the same grammar with every default resolved, so a
result file's header doubles as a reusable config.
"""

from __future__ import annotations

from pathlib import Path

from .channels import DETERMINISTIC, GEOMETRIC, ChannelParams, PeriodDistribution
from .errors import ConfigError
from .experiment import ExperimentConfig, UserSpec

_SCALAR_KEYS = {
    "policy.L0": int,
    "policy.C": int,
    "policy.epsilon": float,
    "experiment.horizon": int,
    "experiment.runs": int,
    "experiment.seed": int,
    "experiment.baseline": str,
}
_KINDS = {GEOMETRIC: GEOMETRIC, DETERMINISTIC: DETERMINISTIC}


def _parse_value(where: str, key: str, raw: str, typ):
    try:
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: {key} expects {typ.__name__}, got {raw!r}") from exc


def parse_config(path, require_feasible: bool = True) -> ExperimentConfig:
    """Read and validate an experiment config file.

    With require_feasible=False the rate-region check is skipped so that
    feasibility itself can be reported (the region-check command); every
    other constraint is still enforced.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

    scalars: dict[str, object] = {}
    channels: list[dict] = []
    users: list[dict] = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{path}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{where}: expected 'key = value', got {raw_line!r}")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not raw:
            raise ConfigError(f"{where}: missing value for {key}")
        if key == "channel.kind":
            kind = _KINDS.get(raw.lower())
            if kind is None:
                raise ConfigError(
                    f"{where}: channel.kind must be geometric or deterministic, got {raw!r}"
                )
            channels.append({"kind": kind, "where": where})
        elif key in ("channel.on_mean", "channel.off_mean"):
            if not channels:
                raise ConfigError(f"{where}: {key} before any channel.kind")
            field = key.split(".", 1)[1]
            if field in channels[-1]:
                raise ConfigError(f"{where}: duplicate {key} for channel {len(channels) - 1}")
            channels[-1][field] = _parse_value(where, key, raw, float)
        elif key == "user.rate":
            users.append({"rate": _parse_value(where, key, raw, float), "where": where})
        elif key == "user.entry":
            if not users:
                raise ConfigError(f"{where}: user.entry before any user.rate")
            if "entry" in users[-1]:
                raise ConfigError(f"{where}: duplicate user.entry for user {len(users) - 1}")
            users[-1]["entry"] = _parse_value(where, key, raw, int)
        elif key in _SCALAR_KEYS:
            if key in scalars:
                raise ConfigError(f"{where}: duplicate key {key}")
            scalars[key] = _parse_value(where, key, raw, _SCALAR_KEYS[key])
        else:
            raise ConfigError(f"{where}: unknown key {key!r}")

    channel_params = []
    for i, ch in enumerate(channels):
        for field in ("on_mean", "off_mean"):
            if field not in ch:
                raise ConfigError(f"{ch['where']}: channel {i} is missing channel.{field}")
        try:
            channel_params.append(
                ChannelParams(
                    PeriodDistribution(ch["kind"], ch["on_mean"]),
                    PeriodDistribution(ch["kind"], ch["off_mean"]),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"{ch['where']}: channel {i}: {exc}") from exc
    user_specs = tuple(UserSpec(rate=u["rate"], entry=u.get("entry", 0)) for u in users)

    kwargs: dict = {}
    if "policy.L0" in scalars:
        kwargs["L0"] = scalars["policy.L0"]
    if "policy.C" in scalars:
        kwargs["C"] = scalars["policy.C"]
    if "policy.epsilon" in scalars:
        kwargs["epsilon"] = scalars["policy.epsilon"]
    if "experiment.horizon" in scalars:
        kwargs["horizon"] = scalars["experiment.horizon"]
    if "experiment.runs" in scalars:
        kwargs["runs"] = scalars["experiment.runs"]
    if "experiment.seed" in scalars:
        kwargs["seed"] = scalars["experiment.seed"]
    if "experiment.baseline" in scalars:
        kwargs["baseline"] = str(scalars["experiment.baseline"]).lower()
    try:
        return ExperimentConfig(
            channels=tuple(channel_params),
            users=user_specs,
            validate_region=require_feasible,
            **kwargs,
        )
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def manifest_lines(config: ExperimentConfig) -> list[str]:
    """The resolved config, re-serialized in the config grammar."""
    lines: list[str] = []
    for ch in config.channels:
        if ch.on.kind != ch.off.kind:
            # the file grammar keys kind per channel; emit the on kind and
            # annotate (mixed kinds are constructible only from code)
            lines.append(f"channel.kind = {ch.on.kind}  # off: {ch.off.kind}")
        else:
            lines.append(f"channel.kind = {ch.on.kind}")
        lines.append(f"channel.on_mean = {ch.on.mean!r}")
        lines.append(f"channel.off_mean = {ch.off.mean!r}")
    for u in config.users:
        lines.append(f"user.rate = {u.rate!r}")
        lines.append(f"user.entry = {u.entry}")
    lines.append(f"policy.L0 = {config.L0}")
    lines.append(f"policy.C = {config.C}")
    if config.users:
        lines.append(f"policy.epsilon = {config.resolved_epsilon()!r}")
    lines.append(f"experiment.horizon = {config.horizon}")
    lines.append(f"experiment.runs = {config.runs}")
    lines.append(f"experiment.seed = {config.seed}")
    lines.append(f"experiment.baseline = {config.baseline}")
    return lines
