"""Two-ion DFS code: encoding, logical operators, and error classification.

The code space of a pair is span{|0_L> = |down,up>, |1_L> = |up,down>}.
With |up> = |0> and qubit i the slower factor of the pair, |0_L> sits at
index 2 and |1_L> at index 1 of the pair's 4-dimensional space.

Any Hermitian two-qubit coupling splits over a 16-operator basis into
three buckets: operators that act trivially on the code space (DFS),
operators that map the code space to its complement (leakage), and the
logical triple Xbar/Ybar/Zbar (unwanted encoded rotations).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import (
    SIGMA, OperatorSum, PauliTerm, kron_all, spectral_norm, to_dense,
)

CODE_ZERO_INDEX = 2  # |down, up>
CODE_ONE_INDEX = 1   # |up, down>

DFS_LABELS = ("II", "ZZ", "Zsum", "Xtilde", "Ytilde")
LOGI_LABELS = ("Xbar", "Ybar", "Zbar")
LEAK_LABELS = ("XI", "IX", "YI", "IY", "XZ", "ZX", "YZ", "ZY")
ALL_LABELS = DFS_LABELS + LOGI_LABELS + LEAK_LABELS

# each basis operator as weighted two-site Pauli strings
BASIS_TEMPLATES: dict[str, tuple[tuple[str, complex], ...]] = {
    "II": (("II", 1.0),),
    "ZZ": (("ZZ", 1.0),),
    "Zsum": (("ZI", 0.5), ("IZ", 0.5)),
    "Xtilde": (("XX", 0.5), ("YY", -0.5)),
    "Ytilde": (("YX", 0.5), ("XY", 0.5)),
    "Xbar": (("XX", 0.5), ("YY", 0.5)),
    "Ybar": (("YX", 0.5), ("XY", -0.5)),
    "Zbar": (("ZI", 0.5), ("IZ", -0.5)),
    **{lab: ((lab, 1.0),) for lab in LEAK_LABELS},
}


class SupportError(ValueError):
    """Operator support extends beyond the declared pair."""


@dataclass(frozen=True)
class DfsRegister:
    """Ordered disjoint qubit pairs inside a physical register."""

    pairs: tuple[tuple[int, int], ...]
    width: int

    def __post_init__(self):
        seen = set()
        for i, j in self.pairs:
            if not (0 <= i < j < self.width):
                raise ValueError(f"bad pair ({i},{j}) for width {self.width}")
            if i in seen or j in seen:
                raise ValueError("pairs must be disjoint")
            seen.update((i, j))

    @property
    def n_logical(self) -> int:
        return len(self.pairs)


def _pair_register(pair) -> DfsRegister:
    i, j = pair
    return DfsRegister(((min(i, j), max(i, j)),), max(i, j) + 1)


def _embed_template(label: str, pair: tuple[int, int], width: int,
                    coefficient: complex = 1.0,
                    bath_slot: str | None = None) -> OperatorSum:
    i, j = pair
    terms = []
    for two_site, c in BASIS_TEMPLATES[label]:
        factors = ["I"] * width
        factors[i], factors[j] = two_site[0], two_site[1]
        terms.append(PauliTerm(tuple(factors), c * coefficient, bath_slot))
    return OperatorSum(width, terms)


def basis_operator(label: str, pair: tuple[int, int] = (0, 1),
                   width: int = 2) -> OperatorSum:
    """One of the 16 classification basis operators, embedded at `pair`."""
    if label not in BASIS_TEMPLATES:
        raise KeyError(f"unknown basis label {label!r}")
    return _embed_template(label, pair, width)


def logical_operators(pair: tuple[int, int],
                      width: int) -> tuple[OperatorSum, OperatorSum, OperatorSum]:
    """Encoded (Xbar, Ybar, Zbar) for the pair; each annihilates the
    complement span{|down,down>, |up,up>}."""
    return (_embed_template("Xbar", pair, width),
            _embed_template("Ybar", pair, width),
            _embed_template("Zbar", pair, width))


def tilde_operators(pair: tuple[int, int],
                    width: int) -> tuple[OperatorSum, OperatorSum]:
    """(Xtilde, Ytilde): annihilate the code space, act as encoded X, Y on
    the complement."""
    return (_embed_template("Xtilde", pair, width),
            _embed_template("Ytilde", pair, width))


@dataclass(frozen=True)
class ErrorDecomposition:
    """Coefficients of a single-pair coupling on the 16-operator basis,
    bucketed into DFS / leakage / logical parts."""

    pair: tuple[int, int]
    width: int
    dfs_part: OperatorSum
    leak_part: OperatorSum
    logi_part: OperatorSum
    coefficients: dict

    def recomposed(self) -> OperatorSum:
        return self.dfs_part + self.leak_part + self.logi_part

    def bucket_of(self, label: str) -> str:
        if label in DFS_LABELS:
            return "DFS"
        if label in LOGI_LABELS:
            return "Logi"
        return "Leak"


def classify(h: OperatorSum, pair: tuple[int, int] | None = None) -> ErrorDecomposition:
    """Exact decomposition of a coupling supported on one pair.

    Raises SupportError if any term touches qubits outside the pair.
    """
    if pair is None:
        support = sorted({q for t in h.terms for q, f in enumerate(t.factors) if f != "I"})
        if len(support) == 2:
            pair = (support[0], support[1])
        elif h.width == 2:
            pair = (0, 1)
        else:
            raise SupportError(
                "cannot infer the pair; pass it explicitly")
    i, j = pair
    coeffs: dict[tuple[str, str | None], complex] = {}
    two_site: dict[tuple[str, str | None], complex] = {}
    for t in h.terms:
        for q, f in enumerate(t.factors):
            if f != "I" and q not in (i, j):
                raise SupportError(f"term {t!r} is supported outside pair {pair}")
        key = (t.factors[i] + t.factors[j], t.bath_slot)
        two_site[key] = two_site.get(key, 0j) + t.coefficient
    slots = sorted({s for _, s in two_site}, key=lambda s: (s is not None, s or ""))

    def c(lab, slot):
        return two_site.get((lab, slot), 0j)

    for slot in slots:
        coeffs[("II", slot)] = c("II", slot)
        coeffs[("ZZ", slot)] = c("ZZ", slot)
        coeffs[("Zsum", slot)] = c("ZI", slot) + c("IZ", slot)
        coeffs[("Zbar", slot)] = c("ZI", slot) - c("IZ", slot)
        coeffs[("Xbar", slot)] = c("XX", slot) + c("YY", slot)
        coeffs[("Xtilde", slot)] = c("XX", slot) - c("YY", slot)
        coeffs[("Ybar", slot)] = c("YX", slot) - c("XY", slot)
        coeffs[("Ytilde", slot)] = c("YX", slot) + c("XY", slot)
        for lab in LEAK_LABELS:
            coeffs[(lab, slot)] = c(lab, slot)

    def bucket(labels):
        out = OperatorSum.zero(h.width)
        for (lab, slot), v in coeffs.items():
            if lab in labels and v != 0:
                out = out + _embed_template(lab, pair, h.width, v, slot)
        return out

    return ErrorDecomposition(
        pair=pair, width=h.width,
        dfs_part=bucket(DFS_LABELS),
        leak_part=bucket(LEAK_LABELS),
        logi_part=bucket(LOGI_LABELS),
        coefficients=coeffs,
    )


def logical_error_norms(dec: ErrorDecomposition, bath_dim: int = 1,
                        bindings: dict | None = None) -> dict[str, float]:
    """Spectral norms of the Xbar/Ybar/Zbar components and the leakage part."""
    out = {}
    for lab in LOGI_LABELS:
        op = OperatorSum.zero(dec.width)
        for (l, slot), v in dec.coefficients.items():
            if l == lab and v != 0:
                op = op + _embed_template(lab, dec.pair, dec.width, v, slot)
        out[lab] = spectral_norm(to_dense(op, bath_dim, bindings))
    out["Leak"] = spectral_norm(to_dense(dec.leak_part, bath_dim, bindings))
    return out


# ---------------------------------------------------------------------------
# states


def code_isometry(register: DfsRegister) -> np.ndarray:
    """Columns are the encoded computational basis states, pair 0 slowest."""
    dim = 2 ** register.width
    n = register.n_logical
    v = np.zeros((dim, 2 ** n), dtype=complex)
    for b in range(2 ** n):
        bits_phys = [0] * register.width  # 0 = up, spectators stay |up>
        for ell, (i, j) in enumerate(register.pairs):
            bit = (b >> (n - 1 - ell)) & 1
            # |0_L> = |down, up>, |1_L> = |up, down>
            bits_phys[i], bits_phys[j] = (1, 0) if bit == 0 else (0, 1)
        idx = 0
        for q in range(register.width):
            idx = (idx << 1) | bits_phys[q]
        v[idx, b] = 1.0
    return v


def encode(logical_state: np.ndarray, register: DfsRegister) -> np.ndarray:
    """Map a logical state vector into the physical register (norm-preserving)."""
    psi = np.asarray(logical_state, dtype=complex).ravel()
    if psi.size != 2 ** register.n_logical:
        raise ValueError(
            f"logical dimension {psi.size} != 2^{register.n_logical}")
    return code_isometry(register) @ psi


def leakage_probability(state: np.ndarray, register: DfsRegister,
                        bath_dim: int = 1) -> float:
    """1 - <P_DFS> with P_DFS projecting every pair onto its code space."""
    v = code_isometry(register)
    p_sys = v @ v.conj().T
    proj = np.kron(p_sys, np.eye(bath_dim, dtype=complex)) if bath_dim > 1 else p_sys
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        val = np.vdot(state, proj @ state).real
    else:
        val = np.trace(proj @ state).real
    return float(min(1.0, max(0.0, 1.0 - val)))


# ---------------------------------------------------------------------------
# dense generator analysis

_TWO_SITE_DENSE = {
    a + b: kron_all(SIGMA[a], SIGMA[b]) for a in "IXYZ" for b in "IXYZ"
}


def pauli_bath_blocks(h: np.ndarray, bath_dim: int) -> dict[str, np.ndarray]:
    """Write a two-qubit (x) bath operator as sum_P P (x) M_P; return the M_P."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (4 * bath_dim, 4 * bath_dim):
        raise ValueError("expected a (4*bath_dim) square matrix")
    h4 = h.reshape(4, bath_dim, 4, bath_dim)
    return {lab: np.einsum("ji,jaib->ab", p.conj(), h4) / 4
            for lab, p in _TWO_SITE_DENSE.items()}


def bucket_operators(h: np.ndarray, bath_dim: int) -> dict[str, np.ndarray]:
    """Dense DFS/Leak/Xbar/Ybar/Zbar components of a two-qubit (x) bath operator."""
    m = pauli_bath_blocks(h, bath_dim)

    def lift(label_weights):
        out = np.zeros_like(np.asarray(h, dtype=complex))
        for lab, w in label_weights:
            out += np.kron(_TWO_SITE_DENSE[lab], w)
        return out

    xbar = lift([("XX", (m["XX"] + m["YY"]) / 2), ("YY", (m["XX"] + m["YY"]) / 2)])
    ybar = lift([("YX", (m["YX"] - m["XY"]) / 2), ("XY", -(m["YX"] - m["XY"]) / 2)])
    zbar = lift([("ZI", (m["ZI"] - m["IZ"]) / 2), ("IZ", -(m["ZI"] - m["IZ"]) / 2)])
    leak = lift([(lab, m[lab]) for lab in LEAK_LABELS])
    dfs = lift([
        ("II", m["II"]), ("ZZ", m["ZZ"]),
        ("ZI", (m["ZI"] + m["IZ"]) / 2), ("IZ", (m["ZI"] + m["IZ"]) / 2),
        ("XX", (m["XX"] - m["YY"]) / 2), ("YY", -(m["XX"] - m["YY"]) / 2),
        ("YX", (m["YX"] + m["XY"]) / 2), ("XY", (m["YX"] + m["XY"]) / 2),
    ])
    return {"DFS": dfs, "Leak": leak, "Xbar": xbar, "Ybar": ybar, "Zbar": zbar}


def bucket_norms(h: np.ndarray, bath_dim: int) -> dict[str, float]:
    """Spectral norms of the five buckets of a two-qubit (x) bath operator."""
    return {k: spectral_norm(v) for k, v in bucket_operators(h, bath_dim).items()}


def block_collective_residual(h: np.ndarray, width: int, bath_dim: int,
                              blocks: tuple[tuple[int, ...], ...]) -> float:
    """Norm of what remains after removing bath-only and per-block collective
    dephasing components from a width-qubit (x) bath operator."""
    h = np.asarray(h, dtype=complex)
    dim_sys = 2 ** width
    h4 = h.reshape(dim_sys, bath_dim, dim_sys, bath_dim)
    resid = h.copy()
    m_i = np.einsum("iaib->ab", h4) / dim_sys
    resid = resid - np.kron(np.eye(dim_sys, dtype=complex), m_i)
    for block in blocks:
        zs = sum(to_dense(OperatorSum.single(width, q, "Z")) for q in block)
        m_s = np.einsum("ji,jaib->ab", zs.conj(), h4) / np.trace(zs @ zs).real
        resid = resid - np.kron(zs, m_s)
    return spectral_norm(resid)
