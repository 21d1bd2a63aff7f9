"""Scenario files: schema, validation and construction of the network model."""

import json
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .config import DEFAULT_TOL
from .errors import ArgumentError, UnsupportedEncoding
from .model import MultiplicativeUnitary, NetworkModel
from .protocol import SIGMA_Z_HALF, ghz_vector, mixed_private_state, product_plus_state, weighted_eigen_state
from .qcore import DensityState, eig_hermitian

ComplexPair = Tuple[float, float]
MatrixLiteral = List[List[ComplexPair]]
TASKS = ("analyze", "noise_sweep", "simulate", "certify")


class ScenarioError(Exception):
    """Config file is unreadable or violates the schema; message names the field."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class EncodingSpec(_Strict):
    generator: Union[Literal["sigma_z_half"], MatrixLiteral] = "sigma_z_half"
    weights: Optional[List[int]] = None

    @field_validator("weights")
    @classmethod
    def _positive(cls, v):
        if v is not None and any(w < 1 for w in v):
            raise ValueError("node weights must be integers >= 1")
        return v


class StateSpec(_Strict):
    kind: Literal["ghz", "product_plus", "weighted_eigen", "mixed", "matrix"] = "ghz"
    alpha: ComplexPair = (2**-0.5, 0.0)
    beta: ComplexPair = (2**-0.5, 0.0)
    coeffs: Optional[List[ComplexPair]] = None
    gamma0: Optional[float] = None
    diag: Optional[Dict[str, float]] = None
    matrix: Optional[MatrixLiteral] = None

    @model_validator(mode="after")
    def _fields_for_kind(self):
        if self.kind == "weighted_eigen" and self.coeffs is None:
            raise ValueError("state.coeffs is required for kind 'weighted_eigen'")
        if self.kind == "mixed" and self.gamma0 is None:
            raise ValueError("state.gamma0 is required for kind 'mixed'")
        if self.kind == "matrix" and self.matrix is None:
            raise ValueError("state.matrix is required for kind 'matrix'")
        return self


class NoiseSpec(_Strict):
    channel: Literal["dephasing", "depolarizing", "amplitude_damping", "erasure"]
    eta: List[float] = Field(min_length=1)
    stage: Literal["before_sampling", "after_sampling"] = "before_sampling"
    locality: Optional[Literal["per_node", "global_map"]] = None

    @field_validator("eta")
    @classmethod
    def _unit_interval(cls, v):
        if any(not 0.0 <= e <= 1.0 for e in v):
            raise ValueError("every eta must lie in [0, 1]")
        return sorted(v)

    @model_validator(mode="after")
    def _default_locality(self):
        if self.locality is None:
            self.locality = "global_map" if self.channel == "depolarizing" else "per_node"
        if self.locality == "global_map" and self.channel != "depolarizing":
            raise ValueError("global_map locality is only defined for depolarizing")
        return self


class SimulationSpec(_Strict):
    shots: int = Field(100_000, ge=1)
    repetitions: int = Field(200, ge=1)


class ToleranceSpec(_Strict):
    privacy: float = Field(DEFAULT_TOL.privacy, gt=0)
    sweep_privacy: float = Field(1e-6, gt=0)
    rank_rel: float = Field(DEFAULT_TOL.rank_rel, gt=0)


class Scenario(_Strict):
    name: str
    task: Optional[Literal["analyze", "noise_sweep", "simulate", "certify"]] = None
    d: int = Field(ge=1, le=8)
    encoding: EncodingSpec = EncodingSpec()
    state: StateSpec = StateSpec()
    theta: List[float]
    function_weights: Optional[List[float]] = None
    povm: Optional[Literal["x_basis"]] = None
    checks: List[Literal["rank_one", "derivative_norm", "unitary"]] = ["rank_one", "derivative_norm"]
    noise: Optional[NoiseSpec] = None
    simulation: SimulationSpec = SimulationSpec()
    tolerances: ToleranceSpec = ToleranceSpec()
    seed: int = Field(0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _cross_fields(self):
        if len(self.theta) != self.d:
            raise ValueError(f"theta has {len(self.theta)} entries, expected d = {self.d}")
        if any(not np.isfinite(t) for t in self.theta):
            raise ValueError("theta entries must be finite")
        if self.encoding.weights is not None and len(self.encoding.weights) != self.d:
            raise ValueError("encoding.weights length must equal d")
        if self.function_weights is not None:
            if len(self.function_weights) != self.d:
                raise ValueError("function_weights length must equal d")
            if not any(w != 0 for w in self.function_weights):
                raise ValueError("function_weights must not be all zero")
        return self

    @property
    def node_weights(self):
        return self.encoding.weights or [1] * self.d

    @property
    def w(self):
        if self.function_weights is not None:
            return [float(x) for x in self.function_weights]
        om = self.node_weights
        if len(set(om)) == 1:
            return [1.0 / self.d] * self.d
        return [float(x) for x in om]


def _matrix(literal, where):
    a = np.array(literal, dtype=float)
    if a.ndim != 3 or a.shape[2] != 2 or a.shape[0] != a.shape[1]:
        raise ScenarioError(f"{where}: expected a square matrix of [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def _format_validation_error(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"field {loc}: {e['msg']}")
    return "; ".join(lines)


def parse_scenario(text: str, source="<config>") -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{source}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise ScenarioError(f"{source}: top level must be a JSON object")
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(f"{source}: {_format_validation_error(e)}") from None


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ScenarioError(f"{path}: cannot read config ({e.strerror})") from None
    return parse_scenario(text, str(path))


def generator_matrix(sc: Scenario) -> np.ndarray:
    if sc.encoding.generator == "sigma_z_half":
        return SIGMA_Z_HALF
    return _matrix(sc.encoding.generator, "encoding.generator")


def build_model(sc: Scenario) -> NetworkModel:
    """Network model described by ``sc``; raises ScenarioError on inconsistent specs."""
    try:
        h = generator_matrix(sc)
        om = sc.node_weights
        n = h.shape[0]
        n_factors = int(sum(om))
        dims = (n,) * n_factors
        st = sc.state
        if st.kind in ("ghz", "product_plus", "mixed") and n != 2:
            raise ScenarioError(f"state.kind {st.kind!r} needs a qubit generator")
        if st.kind == "ghz":
            rho0 = DensityState.from_vector(ghz_vector(n_factors, complex(*st.alpha), complex(*st.beta)), dims)
        elif st.kind == "product_plus":
            rho0 = product_plus_state(n_factors)
        elif st.kind == "mixed":
            ghz = ghz_vector(n_factors, complex(*st.alpha), complex(*st.beta))
            rho0 = mixed_private_state(st.gamma0, ghz, st.diag or {})
        elif st.kind == "weighted_eigen":
            vecs = eig_hermitian(h).eigenvectors
            rho0 = weighted_eigen_state(om, [complex(*c) for c in st.coeffs], vecs)
        else:
            rho0 = DensityState(_matrix(st.matrix, "state.matrix"), dims)
        return NetworkModel(tuple(MultiplicativeUnitary(h, w) for w in om), rho0)
    except (ArgumentError, UnsupportedEncoding) as e:
        raise ScenarioError(f"inconsistent scenario: {e}") from None
