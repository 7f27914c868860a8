"""Network parameters (defaults are the published settings)."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import yaml

from .features import LOCATION_FEATURES, MOTOR_FEATURES


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    n_o: int = 100
    n_a: int = 400

    ws_o: int = 40
    ws_a: int = 30

    sto_min: int = 22
    sto_max: int = 31
    stl: int = 50
    st_fail: int = 40
    noise_o: int = 2
    noise_a: int = 2
    learn_at: float = 55

    tnb_fired_o: int = 12
    tnb_learning_o: int = 6
    tnb_query_o: int = 6
    tnb_fired_a: int = 4
    tnb_learning_a: int = 4
    tnb_query_a: int = 4

    boost_param_o: float = 50
    boost_param_a: float = 800
    last_spiked_o_max: int = 2000
    last_spiked_a_max: int = 20000

    # synapse growth rate curves: tanh((-sum + offset) / slope) + shift
    sgr_lo: tuple[float, float, float] = (300.0, 150.0, 2.0)
    sgr_a: tuple[float, float, float] = (400.0, 300.0, 1.2)

    min_coef_mod_cnx: float = 1.0
    max_coef_mod_cnx: float = 2.0

    @property
    def n_l(self) -> int:
        return len(LOCATION_FEATURES)

    @property
    def n_m(self) -> int:
        return len(MOTOR_FEATURES)

    def validate(self) -> Params:
        problems = []
        if self.n_o < 1 or self.n_a < 1:
            problems.append("layer sizes must be positive")
        if self.tnb_learning_o > self.n_o or self.tnb_fired_o > self.n_o or self.tnb_query_o > self.n_o:
            problems.append("O-layer target counts must not exceed n_o")
        if max(self.tnb_fired_a, self.tnb_learning_a, self.tnb_query_a) > self.n_a:
            problems.append("A-layer target counts must not exceed n_a")
        if min(self.tnb_fired_o, self.tnb_learning_o, self.tnb_query_o,
               self.tnb_fired_a, self.tnb_learning_a, self.tnb_query_a) < 1:
            problems.append("target counts must be >= 1")
        if self.ws_o <= self.noise_o:
            problems.append("ws_o must exceed noise_o")
        if self.ws_a <= self.noise_a:
            problems.append("ws_a must exceed noise_a")
        if not 0 < self.sto_min <= self.sto_max:
            problems.append("need 0 < sto_min <= sto_max")
        if self.sto_max >= self.ws_o:
            problems.append("sto_max must be below ws_o or O-neurons can never fire")
        if self.boost_param_o <= 0 or self.boost_param_a <= 0:
            problems.append("boost parameters must be positive")
        if self.last_spiked_o_max < 1 or self.last_spiked_a_max < 1:
            problems.append("last-spike initialisation bounds must be >= 1")
        if not self.min_coef_mod_cnx <= self.max_coef_mod_cnx:
            problems.append("min_coef_mod_cnx must not exceed max_coef_mod_cnx")
        for name, (_, slope, shift) in (("sgr_lo", self.sgr_lo), ("sgr_a", self.sgr_a)):
            if slope <= 0 or shift <= 1:
                # tanh > -1, so shift > 1 keeps every growth rate positive
                problems.append(f"{name} needs slope > 0 and shift > 1")
        if problems:
            raise ParameterError("invalid parameters: " + "; ".join(problems))
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> Params:
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ParameterError(f"unknown parameters: {', '.join(unknown)}")
        data = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return replace(cls(), **data).validate()


def load_params(path: str | Path | None) -> Params:
    if path is None:
        return Params()
    path = Path(path)
    text = path.read_text()
    data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    return Params.from_dict(data or {})
