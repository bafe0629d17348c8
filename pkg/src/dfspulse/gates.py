"""Two- and four-ion entangling gate family and hardware scalar formulas.

The two-ion gate is U_ij(theta, phi_i, phi_j) = exp(i theta X_phi_i (x) X_phi_j)
with X_phi = X cos(phi) + Y sin(phi).  Restricted to the pair's code space it
depends on the phases only through dphi = phi_i - phi_j.  The four-ion variant
U4 = exp(-i theta X^(x4)) entangles two encoded qubits.

Hardware formulas are pure scalar functions; frequencies in rad/s, times in
seconds, everything else dimensionless.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dfs import DfsRegister, _pair_register, code_isometry, logical_operators
from .pauli import (
    SIGMA, OperatorSum, PauliTerm, embed_sites, kron_all, spectral_norm,
    to_dense,
)


class LeakageError(ValueError):
    """A unitary expected to preserve the code space does not."""

    def __init__(self, off_block_norm: float):
        super().__init__(
            f"input does not preserve the code space (off-block norm {off_block_norm:.3e})")
        self.off_block_norm = off_block_norm


@dataclass(frozen=True)
class SmGateSpec:
    """Rotation angle and per-ion laser phases for a 2- or 4-ion gate."""

    theta: float
    phis: tuple[float, ...]
    ions: tuple[int, ...] = (0, 1)

    def __post_init__(self):
        if len(self.ions) not in (2, 4):
            raise ValueError("gate acts on 2 or 4 ions")
        if len(self.phis) != len(self.ions):
            raise ValueError("one phase per ion required")
        object.__setattr__(self, "phis", tuple(float(p) for p in self.phis))
        object.__setattr__(self, "ions", tuple(int(i) for i in self.ions))

    @property
    def delta_phi(self) -> float:
        """phi_i - phi_j of the first pair."""
        return self.phis[0] - self.phis[1]

    @property
    def phi_sum(self) -> float:
        """phi_i + phi_j of the first pair."""
        return self.phis[0] + self.phis[1]

    @property
    def delta_phi_34(self) -> float:
        if len(self.ions) != 4:
            raise ValueError("second pair only exists for 4-ion gates")
        return self.phis[2] - self.phis[3]


def x_phi(phi: float) -> OperatorSum:
    """Single-qubit X cos(phi) + Y sin(phi); Hermitian and involutory."""
    return OperatorSum(1, (
        PauliTerm(("X",), np.cos(phi)),
        PauliTerm(("Y",), np.sin(phi)),
    ))


def x_phi_dense(phi: float) -> np.ndarray:
    return np.cos(phi) * SIGMA["X"] + np.sin(phi) * SIGMA["Y"]


def sm_unitary(spec: SmGateSpec) -> np.ndarray:
    """Closed form cos(theta) I + i sin(theta) X_phi_i (x) X_phi_j (4x4)."""
    if len(spec.ions) != 2:
        raise ValueError("sm_unitary is the two-ion gate; use u4 for four ions")
    xx = np.kron(x_phi_dense(spec.phis[0]), x_phi_dense(spec.phis[1]))
    return np.cos(spec.theta) * np.eye(4, dtype=complex) + 1j * np.sin(spec.theta) * xx


def sm_gate_dense(spec: SmGateSpec, width: int) -> np.ndarray:
    """The gate embedded into a width-qubit register at its ion indices."""
    mat = sm_unitary(spec) if len(spec.ions) == 2 else u4(spec)
    return embed_sites(mat, spec.ions, width)


def sm_decompose(spec: SmGateSpec) -> dict[str, complex]:
    """Coefficients of the two-ion gate on {I, Xbar, Ybar, Xtilde, Ytilde}."""
    if len(spec.ions) != 2:
        raise ValueError("decomposition applies to the two-ion gate")
    th, d, s = spec.theta, spec.delta_phi, spec.phi_sum
    return {
        "I": complex(np.cos(th)),
        "Xbar": 1j * np.sin(th) * np.cos(d),
        "Ybar": 1j * np.sin(th) * np.sin(d),
        "Xtilde": 1j * np.sin(th) * np.cos(s),
        "Ytilde": 1j * np.sin(th) * np.sin(s),
    }


def dfs_restrict(u: np.ndarray, register: DfsRegister | tuple[int, int],
                 tol: float = 1e-10) -> np.ndarray:
    """Code-space block of a register unitary, in the encoded basis.

    Raises LeakageError when the unitary does not block-preserve the code
    space to within `tol`.
    """
    if not isinstance(register, DfsRegister):
        register = _pair_register(register)
    u = np.asarray(u, dtype=complex)
    if u.shape != (2 ** register.width,) * 2:
        raise ValueError("unitary dimension does not match register width")
    v = code_isometry(register)
    block = v.conj().T @ u @ v
    off = u @ v - v @ block
    off_norm = spectral_norm(off)
    if off_norm > tol:
        raise LeakageError(off_norm)
    return block


def logical_gate(axis: str, theta: float,
                 pair: tuple[int, int] = (0, 1)) -> list[SmGateSpec]:
    """Gate program (matrix-product order) whose code-space action is
    exp(i theta axis-bar)."""
    def gate(th, dphi):
        return SmGateSpec(th, (dphi, 0.0), pair)

    if axis == "X":
        return [gate(theta, 0.0)]
    if axis == "Y":
        return [gate(theta, np.pi / 2)]
    if axis == "Z":
        return [gate(np.pi / 4, np.pi / 2), gate(theta, 0.0), gate(-np.pi / 4, np.pi / 2)]
    raise ValueError(f"axis must be X, Y, or Z, got {axis!r}")


def program_unitary(program: list[SmGateSpec], width: int) -> np.ndarray:
    """Dense product of a gate program, first list entry leftmost."""
    out = np.eye(2 ** width, dtype=complex)
    for spec in program:
        out = out @ sm_gate_dense(spec, width)
    return out


def u4(spec: SmGateSpec) -> np.ndarray:
    """Four-ion gate exp(-i theta X_phi1 (x) ... (x) X_phi4), 16x16.

    theta = pi/4 is the standard entangling choice; other values are allowed
    (non-standard generalization).
    """
    if len(spec.ions) != 4:
        raise ValueError("u4 needs 4 ions")
    m = kron_all(*(x_phi_dense(p) for p in spec.phis))
    return np.cos(spec.theta) * np.eye(16, dtype=complex) - 1j * np.sin(spec.theta) * m


def u4_dfs_target(spec: SmGateSpec) -> np.ndarray:
    """Expected code-space block of u4: exp(-i theta Xbar_d12 (x) Xbar_d34)."""
    def xbar_code(dphi):
        # code-space block of cos(d) Xbar + sin(d) Ybar
        xb, yb, _ = logical_operators((0, 1), 2)
        reg = DfsRegister(((0, 1),), 2)
        v = code_isometry(reg)
        m = np.cos(dphi) * to_dense(xb) + np.sin(dphi) * to_dense(yb)
        return v.conj().T @ m @ v

    gen = np.kron(xbar_code(spec.delta_phi), xbar_code(spec.delta_phi_34))
    vals, vecs = np.linalg.eigh(gen)
    return (vecs * np.exp(-1j * spec.theta * vals)) @ vecs.conj().T


def u4_encoded(spec: SmGateSpec) -> np.ndarray:
    """Encoded-generator variant exp(-i theta Xbar_d12 (x) Xbar_d34), 16x16.

    Unlike the bare product gate this commutes with Sum_i Z_i on the whole
    space (and the two agree on the code space); it is the form the
    decoupling analysis assumes.
    """
    if len(spec.ions) != 4:
        raise ValueError("u4_encoded needs 4 ions")

    def xbar_dphi(pair, dphi):
        xb, yb, _ = logical_operators(pair, 4)
        return np.cos(dphi) * to_dense(xb) + np.sin(dphi) * to_dense(yb)

    gen = xbar_dphi((0, 1), spec.delta_phi) @ xbar_dphi((2, 3), spec.delta_phi_34)
    vals, vecs = np.linalg.eigh(gen)
    mat = (vecs * np.exp(-1j * spec.theta * vals)) @ vecs.conj().T
    if spec.ions != (0, 1, 2, 3):
        mat = embed_sites(mat, spec.ions, max(spec.ions) + 1)
    return mat


# ---------------------------------------------------------------------------
# hardware scalar formulas


@dataclass(frozen=True)
class HardwareParams:
    """Ion-trap drive parameters. Frequencies in rad/s."""

    eta: float = 0.1
    omega_rabi: float = 2 * np.pi * 5e6
    detuning: float = 2 * np.pi * 50e6
    n_mean: float = 0.0
    k_int: int = 1
    n_ions: int = 2

    def __post_init__(self):
        if self.eta <= 0 or self.omega_rabi <= 0 or self.k_int < 1:
            raise ValueError("require eta > 0, omega_rabi > 0, k_int >= 1")


def tau_sm(p: HardwareParams) -> float:
    """Time to prepare a maximally entangled pair: pi sqrt(K) / (eta Omega)."""
    return np.pi * np.sqrt(p.k_int) / (p.eta * p.omega_rabi)


@dataclass(frozen=True)
class LambDickeCheck:
    product: float            # (n+1) eta^2, must be << 1
    infidelity_scale: float   # eta^4


def lamb_dicke_margin(p: HardwareParams) -> LambDickeCheck:
    return LambDickeCheck(product=(p.n_mean + 1) * p.eta ** 2,
                          infidelity_scale=p.eta ** 4)


def off_resonant_penalty(p: HardwareParams) -> float:
    """Fidelity loss (N/2)(Omega/delta)^2 from direct off-resonant coupling."""
    if p.detuning == 0:
        raise ValueError("detuning must be nonzero")
    if p.omega_rabi >= abs(p.detuning):
        warnings.warn("Omega >= delta: outside the perturbative regime",
                      stacklevel=2)
    return (p.n_ions / 2) * (p.omega_rabi / p.detuning) ** 2


@dataclass(frozen=True)
class CancellationCheck:
    delta_required: float
    eta_required: float
    lamb_dicke_compatible: bool


def cancellation_constraints(m: int, p: HardwareParams,
                             k_prime: int = 1) -> CancellationCheck:
    """Joint pulse-duration constraints for exact off-resonant cancellation.

    delta = m K' Omega is harmless, but eta = m sqrt(K) >= 1 for any
    m, K >= 1, which breaks the Lamb-Dicke requirement; the two conditions
    are incompatible.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    eta_req = m * np.sqrt(p.k_int)
    return CancellationCheck(
        delta_required=m * k_prime * p.omega_rabi,
        eta_required=eta_req,
        lamb_dicke_compatible=bool(eta_req < 1),
    )
