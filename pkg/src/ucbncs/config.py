"""Flat experiment configuration: defaults, JSON round-trip, validation.

The default scenario is open-loop unstable (|A_star| > 1) so that learning
matters, while the allowable box is tight enough that every candidate's
gain stabilizes the true plant on average; the scenario passes its own
margin check with eta = 0.12, epsilon = 0.05.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

from .jmls import CandidateTheta, CostWeights
from .ofu import ParameterBox
from .simulate import NOISE_KINDS, AlgoConfig, SystemTruth

# Dataclass attribute -> config document key ("lambda" is a Python keyword).
_KEY_OF_FIELD = {"lam": "lambda"}
_FIELD_OF_KEY = {v: k for k, v in _KEY_OF_FIELD.items()}


@dataclass
class ExperimentConfig:
    A_star: float = 1.2
    B_star: float = 1.0
    p_star: float = 0.9
    sigma_w: float = 1.0
    Q: float = 1.0
    R: float = 1.0
    x0: float = 0.0
    noise_kind: str = "gaussian"
    T: int = 10_000
    lam: float = 1.0
    delta: float = 0.05
    L: int = 50
    alpha: float = 2.5
    eta: float = 0.12
    epsilon: float = 0.05
    theta_box: tuple[float, float, float, float, float, float] = (
        0.8,
        1.6,
        0.8,
        1.2,
        0.8,
        0.98,
    )
    grid_points: int = 21
    seed: int = 0
    n_runs: int = 200
    out_path: str = "out"

    def __post_init__(self):
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(
                f"noise_kind must be one of {NOISE_KINDS}, got {self.noise_kind!r}"
            )
        box = tuple(float(v) for v in self.theta_box)
        if len(box) != 6:
            raise ValueError(
                f"theta_box must hold six bounds (A_lo, A_hi, B_lo, B_hi, p_lo, p_hi), "
                f"got {len(box)} values"
            )
        object.__setattr__(self, "theta_box", box)
        self.T = int(self.T)
        self.L = int(self.L)
        self.grid_points = int(self.grid_points)
        self.seed = int(self.seed)
        self.n_runs = int(self.n_runs)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in doc.items():
            name = _FIELD_OF_KEY.get(key, key)
            if name not in known or key in _KEY_OF_FIELD:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[name] = value
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict):
            raise ValueError(f"config file {path} must hold a JSON object")
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        doc = {}
        for f in fields(self):
            key = _KEY_OF_FIELD.get(f.name, f.name)
            value = getattr(self, f.name)
            doc[key] = list(value) if isinstance(value, tuple) else value
        return doc

    def dump(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    # Builders for the simulation-facing objects.

    def truth(self) -> SystemTruth:
        return SystemTruth(
            theta_star=CandidateTheta(self.A_star, self.B_star, self.p_star),
            weights=CostWeights(self.Q, self.R, self.sigma_w),
            x0=self.x0,
            noise_kind=self.noise_kind,
        )

    def box(self) -> ParameterBox:
        a_lo, a_hi, b_lo, b_hi, p_lo, p_hi = self.theta_box
        return ParameterBox(
            A_range=(a_lo, a_hi),
            B_range=(b_lo, b_hi),
            p_range=(p_lo, p_hi),
            grid_points_per_axis=self.grid_points,
        )

    def algo_config(self) -> AlgoConfig:
        return AlgoConfig(
            lam=self.lam,
            delta=self.delta,
            L=self.L,
            alpha=self.alpha,
            T=self.T,
            box=self.box(),
        )
