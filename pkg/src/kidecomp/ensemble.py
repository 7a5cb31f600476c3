"""Signal-source model: a weighted finite ensemble of density matrices.

Includes validation, the average state, restriction onto the support of
the average state, and a JSON file format with explicit [re, im] entry
pairs (human-inspectable, bit-stable round trips).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError
from .linalg import DEFAULT_TOL, as_complex_matrix, eig_hermitian, frob, hermitize


@dataclass(frozen=True)
class Violation:
    locus: str
    message: str
    residual: float


@dataclass(frozen=True)
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"locus": v.locus, "message": v.message, "residual": v.residual}
                for v in self.violations
            ],
        }


@dataclass(frozen=True)
class Ensemble:
    """States ``states[i]`` emitted with probabilities ``probs[i]``."""

    probs: np.ndarray
    states: np.ndarray  # shape (num_states, dim, dim)

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))
        object.__setattr__(self, "states", np.asarray(self.states, dtype=complex))
        if self.states.ndim != 3 or self.states.shape[1] != self.states.shape[2]:
            raise ValueError(f"states must have shape (m, d, d), got {self.states.shape}")
        if self.probs.ndim != 1 or len(self.probs) != len(self.states):
            raise ValueError("probs and states lengths differ")
        if len(self.probs) == 0:
            raise ValueError("ensemble needs at least one entry")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return len(self.probs)

    def __iter__(self):
        return zip(self.probs, self.states)


def density_matrix_violations(rho: np.ndarray, tol: float, locus: str) -> list[Violation]:
    """Check Hermiticity, positivity and unit trace of one state."""
    out = []
    scale = max(frob(rho), 1.0)
    herm_res = frob(rho - rho.conj().T) / scale
    if herm_res > tol:
        out.append(Violation(locus, "not Hermitian", herm_res))
        return out  # eigenvalue checks are meaningless past this point
    lam = np.linalg.eigvalsh(hermitize(rho))
    window = tol * max(1.0, float(lam[-1]))
    if lam[0] < -window:
        out.append(Violation(locus, "not positive semidefinite", float(-lam[0])))
    tr_res = abs(float(np.trace(rho).real) - 1.0)
    if tr_res > tol:
        out.append(Violation(locus, "trace differs from 1", tr_res))
    return out


def validate(e: Ensemble, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Report every violated ensemble invariant (empty report means valid)."""
    violations: list[Violation] = []
    for i, p in enumerate(e.probs):
        if p <= 0:
            violations.append(Violation(f"states[{i}].p", "probability not positive", float(-p)))
    psum_res = abs(float(np.sum(e.probs)) - 1.0)
    if psum_res > tol:
        violations.append(Violation("states[*].p", "probabilities do not sum to 1", psum_res))
    for i, rho in enumerate(e.states):
        violations.extend(density_matrix_violations(rho, tol, f"states[{i}].matrix"))
    return ValidationReport(violations)


def require_valid(e: Ensemble, tol: float = DEFAULT_TOL) -> None:
    report = validate(e, tol)
    if not report.ok:
        v = report.violations[0]
        raise ValidationError(f"{v.locus}: {v.message} (residual {v.residual:.3e})")


def average_state(e: Ensemble) -> np.ndarray:
    """The mixture sum_i p_i rho_i."""
    return hermitize(np.einsum("i,ijk->jk", e.probs, e.states))


@dataclass(frozen=True)
class SupportFrame:
    """Isometry from the support of the average state back into the ambient space."""

    ambient_dim: int
    rank: int
    isometry: np.ndarray  # (ambient_dim, rank), orthonormal columns

    def embed(self, m: np.ndarray) -> np.ndarray:
        """Lift a support-space operator to the ambient space."""
        return self.isometry @ m @ self.isometry.conj().T

    def restrict(self, m: np.ndarray) -> np.ndarray:
        return self.isometry.conj().T @ m @ self.isometry


def support_restrict(e: Ensemble, tol: float = DEFAULT_TOL) -> tuple[SupportFrame, Ensemble]:
    """Restrict the ensemble onto the support of its average state.

    Eigenvalues of the average state at or below tol times the largest
    are treated as zero. A full-rank average state yields the identity
    frame, so the restricted ensemble is the input unchanged.
    """
    rho = average_state(e)
    d = e.dim
    eig = eig_hermitian(rho, tol)
    lam, vec = eig.values, eig.vectors
    keep = lam > tol * float(lam[-1])
    rank = int(np.sum(keep))
    if rank == d:
        frame = SupportFrame(ambient_dim=d, rank=d, isometry=np.eye(d, dtype=complex))
        return frame, e
    order = np.argsort(lam[keep])[::-1]
    iso = vec[:, keep][:, order]
    frame = SupportFrame(ambient_dim=d, rank=rank, isometry=iso)
    restricted = []
    for rho_i in e.states:
        r = hermitize(frame.restrict(rho_i))
        r = r / float(np.trace(r).real)  # support cut discards <= tol mass
        restricted.append(r)
    return frame, Ensemble(probs=e.probs.copy(), states=np.stack(restricted))


# ---------------------------------------------------------------------------
# file format


def _complex_to_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _matrix_to_pairs(m: np.ndarray) -> list:
    return [[_complex_to_pair(z) for z in row] for row in m]


def _pairs_to_matrix(rows, dim: int, locus: str) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != dim:
        raise ParseError(f"{locus}: expected {dim} rows")
    out = np.empty((dim, dim), dtype=complex)
    for r, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise ParseError(f"{locus}[{r}]: expected {dim} columns")
        for c, entry in enumerate(row):
            if (
                not isinstance(entry, list)
                or len(entry) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            ):
                raise ParseError(f"{locus}[{r}][{c}]: expected a [re, im] pair")
            out[r, c] = complex(entry[0], entry[1])
    return out


def write_ensemble(e: Ensemble) -> bytes:
    """Serialize to the JSON ensemble format (full float precision)."""
    doc = {
        "dim": e.dim,
        "states": [
            {"p": float(p), "matrix": _matrix_to_pairs(rho)} for p, rho in e
        ],
    }
    return (json.dumps(doc, indent=1) + "\n").encode("utf-8")


def read_ensemble(data: bytes, tol: float = DEFAULT_TOL) -> Ensemble:
    """Parse and validate the JSON ensemble format.

    Structural problems raise ParseError naming the locus; a well-formed
    file describing an invalid ensemble raises ValidationError.
    """
    try:
        doc = json.loads(data.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level: expected an object")
    unknown = set(doc) - {"dim", "states"}
    if unknown:
        raise ParseError(f"top level: unknown key {sorted(unknown)[0]!r}")
    if "dim" not in doc or "states" not in doc:
        raise ParseError("top level: keys 'dim' and 'states' are required")
    dim = doc["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ParseError("dim: expected a positive integer")
    if not isinstance(doc["states"], list) or not doc["states"]:
        raise ParseError("states: expected a non-empty list")
    probs, states = [], []
    for i, entry in enumerate(doc["states"]):
        locus = f"states[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(f"{locus}: expected an object")
        unknown = set(entry) - {"p", "matrix"}
        if unknown:
            raise ParseError(f"{locus}: unknown key {sorted(unknown)[0]!r}")
        if "p" not in entry or "matrix" not in entry:
            raise ParseError(f"{locus}: keys 'p' and 'matrix' are required")
        p = entry["p"]
        if not isinstance(p, (int, float)) or isinstance(p, bool):
            raise ParseError(f"{locus}.p: expected a number")
        probs.append(float(p))
        states.append(_pairs_to_matrix(entry["matrix"], dim, f"{locus}.matrix"))
    e = Ensemble(probs=np.asarray(probs), states=np.stack(states))
    require_valid(e, tol)
    return e


def load_ensemble(path, tol: float = DEFAULT_TOL) -> Ensemble:
    with open(path, "rb") as fh:
        return read_ensemble(fh.read(), tol)


def save_ensemble(path, e: Ensemble) -> None:
    with open(path, "wb") as fh:
        fh.write(write_ensemble(e))

