"""Discrete HMM parameter container, validation and serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidModel

ROW_TOL = 1e-9
PROB_FLOOR = 1e-12


def _frozen(values, ndim):
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise InvalidModel(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HmmModel:
    """Parameter triple of a discrete HMM.

    Attributes
    ----------
    pi : (N_s,) initial state distribution
    A : (N_s, N_s) transitions, ``A[i, j] = P(z_t = j | z_{t-1} = i)``
    B : (N_s, N_v) emissions, ``B[i, k] = P(y_t = k | z_t = i)``

    Arrays are copied and made read-only on construction. Construction does
    not validate; call :func:`validate_model` (or :meth:`validated`).
    """

    pi: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pi", _frozen(self.pi, 1))
        object.__setattr__(self, "A", _frozen(self.A, 2))
        object.__setattr__(self, "B", _frozen(self.B, 2))

    @property
    def num_states(self) -> int:
        return self.pi.shape[0]

    @property
    def num_symbols(self) -> int:
        return self.B.shape[1]

    def validated(self) -> "HmmModel":
        validate_model(self)
        return self

    def allclose(self, other: "HmmModel", atol: float = 1e-12) -> bool:
        return (
            self.A.shape == other.A.shape
            and self.B.shape == other.B.shape
            and np.allclose(self.pi, other.pi, rtol=0, atol=atol)
            and np.allclose(self.A, other.A, rtol=0, atol=atol)
            and np.allclose(self.B, other.B, rtol=0, atol=atol)
        )

    def to_dict(self) -> dict:
        return {
            "num_states": self.num_states,
            "num_symbols": self.num_symbols,
            "pi": self.pi.tolist(),
            "A": self.A.tolist(),
            "B": self.B.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "HmmModel":
        try:
            model = cls(pi=doc["pi"], A=doc["A"], B=doc["B"])
            ns, nv = int(doc["num_states"]), int(doc["num_symbols"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidModel(f"malformed model document: {exc}") from exc
        if (ns, nv) != (model.num_states, model.num_symbols):
            raise InvalidModel(
                f"declared sizes ({ns}, {nv}) do not match arrays "
                f"({model.num_states}, {model.num_symbols})"
            )
        return model.validated()


def validate_model(model: HmmModel) -> None:
    """Raise :class:`InvalidModel` naming the first violated constraint."""
    ns = model.pi.shape[0]
    if ns < 1:
        raise InvalidModel("num_states must be positive")
    if model.A.shape != (ns, ns):
        raise InvalidModel(f"A has shape {model.A.shape}, expected ({ns}, {ns})")
    if model.B.shape[0] != ns or model.B.shape[1] < 1:
        raise InvalidModel(f"B has shape {model.B.shape}, expected ({ns}, N_v>0)")
    for name, arr in (("pi", model.pi), ("A", model.A), ("B", model.B)):
        if not np.all(np.isfinite(arr)):
            raise InvalidModel(f"{name} contains non-finite entries")
        bad = np.argwhere((arr < 0.0) | (arr > 1.0))
        if bad.size:
            idx = tuple(int(k) for k in bad[0])
            raise InvalidModel(f"{name}{list(idx)} = {arr[idx]!r} outside [0, 1]")
    total = float(model.pi.sum())
    if abs(total - 1.0) > ROW_TOL:
        raise InvalidModel(f"pi sums to {total:.12g}")
    for name, arr in (("A", model.A), ("B", model.B)):
        sums = arr.sum(axis=1)
        for row, s in enumerate(sums):
            if abs(s - 1.0) > ROW_TOL:
                raise InvalidModel(f"{name} row {row} sums to {float(s):.12g}")


def floor_model(model: HmmModel, floor: float = PROB_FLOOR) -> HmmModel:
    """Lift entries below ``floor`` up to it and renormalize their rows."""

    def fix(arr):
        arr = np.asarray(arr, dtype=np.float64)
        low = arr < floor
        if not low.any():
            return arr
        arr = np.where(low, floor, arr)
        return arr / arr.sum(axis=-1, keepdims=True)

    return HmmModel(pi=fix(model.pi), A=fix(model.A), B=fix(model.B))


def random_model(num_states: int, num_symbols: int, rng: np.random.Generator) -> HmmModel:
    """Draw every row of pi, A and B from a flat Dirichlet."""
    pi = rng.dirichlet(np.ones(num_states))
    A = rng.dirichlet(np.ones(num_states), size=num_states)
    B = rng.dirichlet(np.ones(num_symbols), size=num_states)
    return HmmModel(pi=pi, A=A, B=B)


def reference_model() -> HmmModel:
    """The three-state, three-symbol model used in the recognition study."""
    return HmmModel(
        pi=[0.3, 0.3, 0.4],
        A=[[0.8, 0.19, 0.01], [0.01, 0.8, 0.19], [0.19, 0.01, 0.8]],
        B=[[0.6, 0.3, 0.1], [0.1, 0.6, 0.3], [0.3, 0.1, 0.6]],
    )


def save_model(model: HmmModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2) + "\n")


def load_model(path) -> HmmModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidModel(f"{path}: not valid JSON ({exc})") from exc
    return HmmModel.from_dict(doc)
