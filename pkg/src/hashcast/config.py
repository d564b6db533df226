"""Scenario and sweep configuration with strict validation.

Configs load from JSON.  Unknown keys and invalid combinations are rejected
with an error naming the offending key, so a typo never silently falls back
to a default.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from fractions import Fraction

from .verification import SetParams

MODES = ("vericom", "baseline")
TOPOLOGIES = ("random-connected", "chain", "star")
TRUST_MODES = ("trusted", "untrusted")
ATTACKS = ("none", "false-verification", "fake-transaction", "dropping")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    mode: str = "vericom"
    num_iot_nodes: int = 30
    num_backbone: int = 5
    backbone_topology: str = "random-connected"
    link_delay_ms: float = 1.0
    backbone_capacity: int = 0  # 0 = auto: ceil(num_iot_nodes / num_backbone)
    num_validators: int = 10
    n: int = 1
    m: int = 1
    block_size: int = 10
    tx_count: int = 100
    tf: str = "0.5"
    epochs: int = 1
    gamma_ms: float = 100.0
    tx_interval_ms: float = 1.0
    epoch_margin_ms: float = 200.0
    rui_period_ms: float = 250.0
    trust_mode: str = "trusted"
    attack: str = "none"
    adversary_ids: tuple[int, ...] = ()
    drop_rate: float = 1.0
    seed: int = 1
    payload_size: int = 510
    verify_cost_ms: float = 0.1
    auditor: bool = True
    monitor_window_ms: float = 500.0
    monitor_group_size: int = 2
    access_delay_min_ms: float = 1.0
    access_delay_max_ms: float = 2.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.backbone_topology not in TOPOLOGIES:
            raise ConfigError(
                f"backbone_topology must be one of {TOPOLOGIES}, got {self.backbone_topology!r}"
            )
        if self.trust_mode not in TRUST_MODES:
            raise ConfigError(
                f"trust_mode must be one of {TRUST_MODES}, got {self.trust_mode!r}"
            )
        if self.attack not in ATTACKS:
            raise ConfigError(f"attack must be one of {ATTACKS}, got {self.attack!r}")
        for key in ("num_iot_nodes", "num_backbone", "num_validators", "block_size", "epochs"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be positive")
        if self.tx_count <= 0:
            raise ConfigError("tx_count must be positive")
        if self.num_validators > self.num_iot_nodes:
            raise ConfigError("num_validators cannot exceed num_iot_nodes")
        if self.backbone_capacity < 0:
            raise ConfigError("backbone_capacity must be non-negative (0 = auto)")
        if self.payload_size < 0:
            raise ConfigError("payload_size must be non-negative")
        if not (0.0 <= self.drop_rate <= 1.0):
            raise ConfigError("drop_rate must be within [0, 1]")
        for key in (
            "link_delay_ms",
            "gamma_ms",
            "tx_interval_ms",
            "epoch_margin_ms",
            "rui_period_ms",
            "monitor_window_ms",
            "access_delay_min_ms",
            "access_delay_max_ms",
        ):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key} must be positive")
        if self.access_delay_max_ms < self.access_delay_min_ms:
            raise ConfigError("access_delay_max_ms must be >= access_delay_min_ms")
        if self.verify_cost_ms < 0:
            raise ConfigError("verify_cost_ms must be non-negative")
        try:
            Fraction(self.tf)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"tf is not a valid number: {self.tf!r}") from exc
        if Fraction(self.tf) < 0:
            raise ConfigError("tf must be non-negative")
        try:
            SetParams(n=self.n, m=self.m, num_validators=self.ring_size)
        except ValueError as exc:
            raise ConfigError(f"set parameters are inadmissible: {exc}") from exc
        self._validate_attack()

    def _validate_attack(self) -> None:
        if self.attack == "none":
            return
        if self.mode != "vericom":
            raise ConfigError("attack scenarios are defined for vericom mode only")
        if not self.adversary_ids:
            raise ConfigError(f"attack {self.attack!r} requires adversary_ids")
        if self.attack == "dropping":
            if self.trust_mode != "untrusted":
                raise ConfigError("attack 'dropping' requires trust_mode = untrusted")
            bad = [i for i in self.adversary_ids if not (0 <= i < self.num_backbone)]
            if bad:
                raise ConfigError(f"adversary_ids name nonexistent backbone nodes: {bad}")
            if len(set(self.adversary_ids)) >= self.num_backbone:
                raise ConfigError("cannot mark the whole backbone as dropping")
        else:
            bad = [i for i in self.adversary_ids if not (0 <= i < self.num_validators)]
            if bad:
                raise ConfigError(f"adversary_ids name nonexistent validators: {bad}")

    @property
    def tf_value(self) -> Fraction:
        return Fraction(self.tf)

    @property
    def ring_size(self) -> int:
        """Range owners per epoch: the alphabet caps the ring at 62.

        Validator-role nodes beyond the cap stay in the verifier pool's
        routing tables but do not register for a range.
        """
        return min(self.num_validators, 62)

    @property
    def capacity(self) -> int:
        if self.backbone_capacity > 0:
            return self.backbone_capacity
        extra = 1 if self.auditor else 0
        return -(-(self.num_iot_nodes + extra) // self.num_backbone)

    def txs_in_epoch(self, epoch: int) -> int:
        base, rem = divmod(self.tx_count, self.epochs)
        return base + (1 if epoch < rem else 0)

    def epoch_length_ms(self) -> float:
        per_epoch = max(self.txs_in_epoch(e) for e in range(self.epochs))
        return self.gamma_ms + per_epoch * self.tx_interval_ms + self.epoch_margin_ms

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config key: {unknown[0]}")
        values = dict(data)
        if "adversary_ids" in values:
            values["adversary_ids"] = tuple(values["adversary_ids"])
        if "tf" in values:
            values["tf"] = str(values["tf"])
        try:
            return cls(**values)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["adversary_ids"] = list(self.adversary_ids)
        return out

    def with_overrides(self, **overrides) -> "ScenarioConfig":
        return dataclasses.replace(self, **overrides)


SWEEP_PARAMETERS = ("num_iot_nodes", "num_backbone", "num_validators")


@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig
    parameter: str
    values: tuple[int, ...]
    modes: tuple[str, ...] = ("vericom",)
    repetitions: int = 1
    seed_base: int = 1

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(
                f"swept parameter must be one of {SWEEP_PARAMETERS}, got {self.parameter!r}"
            )
        if not self.values:
            raise ConfigError("sweep values must not be empty")
        for mode in self.modes:
            if mode not in MODES:
                raise ConfigError(f"sweep mode {mode!r} is not valid")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        # Every derived config must validate up front.
        for _, _ in self.expand():
            pass

    def expand(self) -> list[tuple[str, ScenarioConfig]]:
        """All derived configs in deterministic spec order."""
        runs = []
        for mode in self.modes:
            for value in self.values:
                for rep in range(self.repetitions):
                    seed = self.seed_base + rep
                    config = self.base.with_overrides(
                        mode=mode, seed=seed, **{self.parameter: value}
                    )
                    runs.append((f"{mode}:{self.parameter}={value}:rep={rep}", config))
        return runs

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        known = {"base", "parameter", "values", "modes", "repetitions", "seed_base"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown sweep key: {unknown[0]}")
        if "base" not in data or "parameter" not in data or "values" not in data:
            raise ConfigError("sweep spec requires base, parameter, and values")
        base = ScenarioConfig.from_dict(data["base"])
        return cls(
            base=base,
            parameter=data["parameter"],
            values=tuple(data["values"]),
            modes=tuple(data.get("modes", ("vericom",))),
            repetitions=data.get("repetitions", 1),
            seed_base=data.get("seed_base", 1),
        )


def load_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return ScenarioConfig.from_dict(data)


def load_sweep(path: str) -> SweepSpec:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: sweep spec must be a JSON object")
    return SweepSpec.from_dict(data)
