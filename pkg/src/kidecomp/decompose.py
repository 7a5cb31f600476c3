"""Canonical block decomposition of an ensemble into classical, nonclassical
and redundant parts.

The pipeline restricts the ensemble onto the support of its average
state, factors the operator algebra generated by the restricted states
into irreducible blocks, reads off per-state weights and block states,
and finally merges blocks that carry proportional weights and unitarily
equal irreducible states. The merged structure is the coarsest one in
which every state takes the form

    rho_i = directsum_l  q[i,l] * (rho_J[i,l] tensor rho_K[l])

with rho_K[l] independent of i and the rho_J[i,l] admitting no common
finer block split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .algebra import block_form_split, commutant, generate_algebra, irrep_decompose
from .ensemble import (
    Ensemble,
    SupportFrame,
    require_valid,
    support_restrict,
    _matrix_to_pairs,
    _pairs_to_matrix,
)
from .errors import FormViolation, ParseError
from .linalg import DEFAULT_TOL, frob, hermitize, polar_unitary

__all__ = [
    "KIBlock",
    "KIDecomposition",
    "ki_decompose",
    "mergeable",
    "verify",
    "remove_redundancy",
    "VerificationReport",
    "decomposition_to_doc",
    "decomposition_from_doc",
    "write_decomposition",
    "read_decomposition",
]


@dataclass(frozen=True)
class KIBlock:
    """One summand: C^n (nonclassical factor) tensor C^k (redundant factor).

    q[i] is the probability weight of state i on this block; rho_J[i] is
    the normalized n x n block state (None where q[i] = 0). rho_K is the
    shared k x k redundant state, stored once because it does not depend
    on i. The isometry maps C^n tensor C^k into the support space,
    columns ordered (a, j) -> a*k + j.
    """

    n: int
    k: int
    isometry: np.ndarray
    rho_K: np.ndarray
    q: np.ndarray
    rho_J: list[np.ndarray | None]

    def compress(self, m: np.ndarray) -> np.ndarray:
        return self.isometry.conj().T @ m @ self.isometry

    def embed(self, m: np.ndarray) -> np.ndarray:
        return self.isometry @ m @ self.isometry.conj().T


@dataclass(frozen=True)
class KIDecomposition:
    frame: SupportFrame
    blocks: list[KIBlock]
    p_block: np.ndarray
    rho_J_avg: list[np.ndarray]

    @property
    def num_states(self) -> int:
        return len(self.blocks[0].q)

    def reconstruct(self, i: int) -> np.ndarray:
        """Ambient-space state assembled from the block data of state i."""
        r = self.frame.rank
        acc = np.zeros((r, r), dtype=complex)
        for b in self.blocks:
            if b.q[i] > 0 and b.rho_J[i] is not None:
                acc += b.embed(b.q[i] * np.kron(b.rho_J[i], b.rho_K))
        return self.frame.embed(acc)


# ---------------------------------------------------------------------------
# construction


def _extract_block_data(block_iso: np.ndarray, n: int, k: int, states: np.ndarray, tol: float):
    """Per-state weights and normalized J states of one pre-merge block."""
    q = np.zeros(len(states))
    sigmas: list[np.ndarray | None] = []
    for i, rho in enumerate(states):
        comp = block_iso.conj().T @ rho @ block_iso
        factor, resid = block_form_split(comp, n, k)
        if resid > max(tol, 1e3 * np.finfo(float).eps) * max(1.0, frob(comp)):
            raise FormViolation(
                f"state {i} violates the (J factor) x (identity on K) form by {resid:.3e}"
            )
        weight = float(np.trace(factor).real) * k
        if weight <= tol:
            sigmas.append(None)
            continue
        q[i] = weight
        sigmas.append(hermitize(factor * (k / weight)))
    return q, sigmas


def _support_set(q: np.ndarray) -> tuple[int, ...]:
    return tuple(int(i) for i in np.nonzero(q > 0)[0])


def _intertwiner_candidate(sig_a: list, sig_b: list, support: tuple[int, ...], tol: float):
    """Solve V sigma_a[i] = sigma_b[i] V over the support; None if no direction exists."""
    n = sig_a[support[0]].shape[0]
    if n == 1:
        return np.eye(1, dtype=complex)
    eye = np.eye(n, dtype=complex)
    rows = []
    for i in support:
        rows.append(np.kron(eye, sig_a[i].T) - np.kron(sig_b[i], eye))
    stack = np.concatenate(rows, axis=0)
    _, s, vh = np.linalg.svd(stack)
    scale = max(float(s[0]), 1.0)
    if s[-1] > np.sqrt(tol) * scale:
        return None
    return polar_unitary(vh[-1].conj().reshape(n, n))


def mergeable(a: KIBlock, b: KIBlock, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, float] | None:
    """Merge witness (V, c) for two blocks of one decomposition, or None.

    Blocks merge when they have equal J dimension, identical index sets
    of contributing states, weights related by one constant c > 0, and a
    single unitary V carrying every J state of `a` onto the matching J
    state of `b`. Near-threshold cases resolve toward not merging.
    """
    if a.n != b.n:
        return None
    support = _support_set(a.q)
    if support != _support_set(b.q) or not support:
        return None
    qa = a.q[list(support)]
    qb = b.q[list(support)]
    c = float(np.dot(qb, qa) / np.dot(qa, qa))
    if c <= 0:
        return None
    if np.max(np.abs(qb - c * qa) / qb) > tol:
        return None
    v = _intertwiner_candidate(a.rho_J, b.rho_J, support, tol)
    if v is None:
        return None
    for i in support:
        resid = frob(v @ a.rho_J[i] @ v.conj().T - b.rho_J[i])
        if resid > tol * max(1.0, frob(b.rho_J[i])):
            return None
    return v, c


def _merge(a: KIBlock, b: KIBlock, v: np.ndarray, c: float) -> KIBlock:
    """Fold block b into block a after rotating b's J factor by v."""
    r = a.isometry.shape[0]
    rotated = b.isometry @ np.kron(v, np.eye(b.k, dtype=complex))
    cols_a = a.isometry.reshape(r, a.n, a.k)
    cols_b = rotated.reshape(r, b.n, b.k)
    iso = np.concatenate([cols_a, cols_b], axis=2).reshape(r, a.n * (a.k + b.k))
    k = a.k + b.k
    rho_k = np.zeros((k, k), dtype=complex)
    rho_k[: a.k, : a.k] = a.rho_K
    rho_k[a.k :, a.k :] = c * b.rho_K
    rho_k /= 1.0 + c
    return KIBlock(
        n=a.n,
        k=k,
        isometry=iso,
        rho_K=rho_k,
        q=a.q * (1.0 + c),
        rho_J=a.rho_J,
    )


def _canonicalize_redundant_factor(block: KIBlock) -> KIBlock:
    """Rotate the K basis so rho_K is diagonal with descending eigenvalues."""
    lam, vec = np.linalg.eigh(hermitize(block.rho_K))
    order = np.argsort(lam)[::-1]
    lam, vec = lam[order], vec[:, order]
    for j in range(vec.shape[1]):  # deterministic column phases
        pivot = vec[np.argmax(np.abs(vec[:, j])), j]
        if abs(pivot) > 0:
            vec[:, j] *= abs(pivot) / pivot
    iso = block.isometry @ np.kron(np.eye(block.n, dtype=complex), vec)
    return KIBlock(
        n=block.n,
        k=block.k,
        isometry=iso,
        rho_K=np.diag(np.clip(lam, 0.0, None)).astype(complex),
        q=block.q,
        rho_J=block.rho_J,
    )


def _block_key(block: KIBlock):
    # descending n, descending k, ascending weight of the first state
    return (-block.n, -block.k, float(block.q[0]))


def _merge_to_fixpoint(blocks: list[KIBlock], tol: float) -> list[KIBlock]:
    blocks = sorted(blocks, key=_block_key)
    changed = True
    while changed:
        changed = False
        for ia in range(len(blocks)):
            for ib in range(ia + 1, len(blocks)):
                witness = mergeable(blocks[ia], blocks[ib], tol)
                if witness is not None:
                    merged = _merge(blocks[ia], blocks[ib], *witness)
                    del blocks[ib]
                    blocks[ia] = merged
                    blocks.sort(key=_block_key)
                    changed = True
                    break
            if changed:
                break
    return blocks


def ki_decompose(e: Ensemble, seed: int = 0, tol: float = DEFAULT_TOL) -> KIDecomposition:
    """Compute the canonical block decomposition of a valid ensemble.

    Pipeline: restrict onto the support of the average state, generate
    the operator algebra of the restricted states, split it into
    irreducible blocks, extract per-state weights and J states, then
    greedily merge weight-proportional unitarily-equal blocks to a
    fixpoint. Output block order and phases are canonical, so identical
    (input, seed, tol) gives identical output.
    """
    require_valid(e, tol)
    frame, er = support_restrict(e, tol)
    alg = generate_algebra(list(er.states), er.dim, tol)
    irreps = irrep_decompose(alg, seed, tol)
    blocks: list[KIBlock] = []
    for ib in irreps:
        q, sigmas = _extract_block_data(ib.isometry, ib.n, ib.k, er.states, tol)
        blocks.append(
            KIBlock(
                n=ib.n,
                k=ib.k,
                isometry=ib.isometry,
                rho_K=np.eye(ib.k, dtype=complex) / ib.k,
                q=q,
                rho_J=sigmas,
            )
        )
    blocks = _merge_to_fixpoint(blocks, tol)
    blocks = [_canonicalize_redundant_factor(b) for b in blocks]
    blocks.sort(key=_block_key)

    p_block = np.array([float(np.dot(e.probs, b.q)) for b in blocks])
    rho_j_avg = []
    for b in blocks:
        acc = np.zeros((b.n, b.n), dtype=complex)
        for i, p in enumerate(e.probs):
            if b.q[i] > 0 and b.rho_J[i] is not None:
                acc += p * b.q[i] * b.rho_J[i]
        rho_j_avg.append(hermitize(acc / np.dot(e.probs, b.q)))
    d = KIDecomposition(frame=frame, blocks=blocks, p_block=p_block, rho_J_avg=rho_j_avg)

    worst = max(frob(d.reconstruct(i) - e.states[i]) for i in range(len(e)))
    if worst > max(tol, 1e4 * np.finfo(float).eps) * max(1.0, max(frob(s) for s in e.states)):
        raise FormViolation(f"reconstruction residual {worst:.3e} exceeds tolerance")
    return d


# ---------------------------------------------------------------------------
# verification and redundancy removal


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    residual: float
    detail: str = ""


@dataclass(frozen=True)
class VerificationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [
                {"name": c.name, "ok": c.ok, "residual": c.residual, "detail": c.detail}
                for c in self.checks
            ],
        }


def verify(
    d: KIDecomposition,
    e: Ensemble,
    tol: float = DEFAULT_TOL,
    *,
    channels: int = 20,
    env_dim: int = 2,
    seed: int = 0,
) -> VerificationReport:
    """Check a decomposition against its ensemble; reports, never raises.

    Covered: per-state reconstruction, weight normalization, per-block
    irreducibility of the J states, pairwise non-mergeability, and
    preservation of every state under random structure-respecting
    channels (identity on J, unitary on K plus environment, environment
    traced out).
    """
    from . import oracles  # local import; oracles builds on this module

    checks: list[CheckResult] = []
    thr = max(tol, 1e-8)

    def guarded(name, fn):
        # a structurally broken document must surface as a failed check,
        # not as an exception out of a reporting operation
        try:
            checks.append(fn())
        except Exception as exc:  # noqa: BLE001
            checks.append(CheckResult(name, False, float("inf"), f"check crashed: {exc}"))

    def check_reconstruction():
        recon = max(frob(d.reconstruct(i) - e.states[i]) for i in range(len(e)))
        return CheckResult("reconstruction", recon <= thr, recon)

    def check_weight_rows():
        qrows = max(abs(float(sum(b.q[i] for b in d.blocks)) - 1.0) for i in range(len(e)))
        return CheckResult("weight_rows_sum_to_1", qrows <= thr, qrows)

    def check_irreducible(l, b):
        def run():
            gens = [b.rho_J[i] for i in _support_set(b.q) if b.rho_J[i] is not None]
            if not gens:
                return CheckResult(f"irreducible_block_{l}", False, float("inf"), "no states")
            alg = generate_algebra(gens, b.n, tol)
            comm_dim = commutant(alg, tol).size
            return CheckResult(
                f"irreducible_block_{l}",
                comm_dim == 1,
                float(comm_dim - 1),
                f"commutant dimension {comm_dim}",
            )

        return run

    def check_mergeable():
        hits = []
        for ia in range(len(d.blocks)):
            for ib in range(ia + 1, len(d.blocks)):
                if mergeable(d.blocks[ia], d.blocks[ib], tol) is not None:
                    hits.append((ia, ib))
        return CheckResult(
            "pairwise_non_mergeable",
            not hits,
            float(len(hits)),
            f"mergeable pairs: {hits}" if hits else "",
        )

    def check_channels():
        worst = 0.0
        for r in range(channels):
            chan = oracles.random_form2_channel(d, env_dim=env_dim, seed=seed * 1000 + r)
            for rho in e.states:
                worst = max(worst, frob(chan.apply(rho) - rho))
        return CheckResult("channel_preservation", worst <= thr, worst)

    guarded("reconstruction", check_reconstruction)
    guarded("weight_rows_sum_to_1", check_weight_rows)
    for l, b in enumerate(d.blocks):
        guarded(f"irreducible_block_{l}", check_irreducible(l, b))
    guarded("pairwise_non_mergeable", check_mergeable)
    guarded("channel_preservation", check_channels)

    return VerificationReport(checks)


def remove_redundancy(d: KIDecomposition, e: Ensemble) -> Ensemble:
    """Ensemble carrying only the classical and nonclassical parts.

    Each state is replaced by the direct sum over blocks of its weighted
    J states; the shared K factors are dropped. Re-decomposing the
    result gives k = 1 on every block and zero redundant information,
    while the classical and nonclassical parts are unchanged.
    """
    dims = [b.n for b in d.blocks]
    total = int(sum(dims))
    offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    states = []
    for i in range(len(e)):
        acc = np.zeros((total, total), dtype=complex)
        for l, b in enumerate(d.blocks):
            if b.q[i] > 0 and b.rho_J[i] is not None:
                s = offsets[l]
                acc[s : s + b.n, s : s + b.n] = b.q[i] * b.rho_J[i]
        states.append(hermitize(acc))
    return Ensemble(probs=e.probs.copy(), states=np.stack(states))


# ---------------------------------------------------------------------------
# serialization


def decomposition_to_doc(d: KIDecomposition) -> dict:
    return {
        "ambient_dim": d.frame.ambient_dim,
        "support_rank": d.frame.rank,
        "frame": _matrix_to_pairs(d.frame.isometry) if d.frame.rank else [],
        "blocks": [
            {
                "n": b.n,
                "k": b.k,
                "p": float(p),
                "isometry": _matrix_to_pairs(b.isometry),
                "rho_K": _matrix_to_pairs(b.rho_K),
                "q": [float(x) for x in b.q],
                "rho_J": [
                    None if s is None else _matrix_to_pairs(s) for s in b.rho_J
                ],
                "rho_J_avg": _matrix_to_pairs(avg),
            }
            for b, p, avg in zip(d.blocks, d.p_block, d.rho_J_avg)
        ],
    }


def _rect_pairs_to_matrix(rows, nrows: int, ncols: int, locus: str) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != nrows:
        raise ParseError(f"{locus}: expected {nrows} rows")
    out = np.empty((nrows, ncols), dtype=complex)
    for r, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != ncols:
            raise ParseError(f"{locus}[{r}]: expected {ncols} columns")
        for c, entry in enumerate(row):
            if not isinstance(entry, list) or len(entry) != 2:
                raise ParseError(f"{locus}[{r}][{c}]: expected a [re, im] pair")
            out[r, c] = complex(entry[0], entry[1])
    return out


def decomposition_from_doc(doc: dict) -> KIDecomposition:
    """Rebuild a decomposition from its JSON document.

    Intentionally lenient: invariants are not enforced here, so a
    corrupted document round-trips into an object that `verify` can
    then report on.
    """
    if isinstance(doc, dict) and "result" in doc and "blocks" not in doc:
        doc = doc["result"]  # accept a whole report wrapper
    try:
        ambient = int(doc["ambient_dim"])
        rank = int(doc["support_rank"])
        frame_mat = _rect_pairs_to_matrix(doc["frame"], ambient, rank, "frame")
        frame = SupportFrame(ambient_dim=ambient, rank=rank, isometry=frame_mat)
        blocks, p_block, avgs = [], [], []
        for bi, bdoc in enumerate(doc["blocks"]):
            n, k = int(bdoc["n"]), int(bdoc["k"])
            iso = _rect_pairs_to_matrix(bdoc["isometry"], rank, n * k, f"blocks[{bi}].isometry")
            rho_k = _pairs_to_matrix(bdoc["rho_K"], k, f"blocks[{bi}].rho_K")
            q = np.asarray([float(x) for x in bdoc["q"]])
            rho_j = [
                None if s is None else _pairs_to_matrix(s, n, f"blocks[{bi}].rho_J[{si}]")
                for si, s in enumerate(bdoc["rho_J"])
            ]
            blocks.append(KIBlock(n=n, k=k, isometry=iso, rho_K=rho_k, q=q, rho_J=rho_j))
            p_block.append(float(bdoc["p"]))
            avgs.append(_pairs_to_matrix(bdoc["rho_J_avg"], n, f"blocks[{bi}].rho_J_avg"))
        return KIDecomposition(
            frame=frame, blocks=blocks, p_block=np.asarray(p_block), rho_J_avg=avgs
        )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed decomposition document: {exc}") from exc


def write_decomposition(d: KIDecomposition) -> bytes:
    return (json.dumps(decomposition_to_doc(d), indent=1) + "\n").encode("utf-8")


def read_decomposition(data: bytes) -> KIDecomposition:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"decomposition file: {exc}") from exc
    return decomposition_from_doc(doc)
