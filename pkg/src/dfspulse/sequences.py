"""Decoupling pulse sequences: builders, exact propagation, serialization.

A `PulseSequence` stores events in matrix-product order: the first event in
the list is the leftmost factor of the propagator, i.e. the *last* one
applied.  This mirrors the bracket notation [tau, P, tau, Pdag], which read
right to left means "apply Pdag, evolve tau, apply P, evolve tau".

Instantaneous pulses are the idealized encoded exponentials
    P   = exp(-i pi/2 Xbar)      PDAG = exp(+i pi/2 Xbar)
    PI  = exp(+-i pi Xbar) = Z1 Z2
    Q   = exp(-i pi/2 Ybar)      QDAG = exp(+i pi/2 Ybar)
    LAM = exp(+-i pi Ybar) = Z1 Z2
Drives model weak continuous gate Hamiltonians that act together with the
system-bath coupling.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .dfs import logical_operators
from .gates import SmGateSpec, sm_gate_dense, x_phi
from .pauli import (
    OperatorSum, PauliTerm, NonUnitaryError, expm_i, is_unitary, to_dense,
)

PULSE_LABELS = ("P", "PDAG", "PI", "Q", "QDAG", "LAM")

_LABEL_GENERATOR = {
    # label -> (generator picker, time argument of expm_i)
    "P": ("Xbar", np.pi / 2),
    "PDAG": ("Xbar", -np.pi / 2),
    "PI": ("Xbar", np.pi),
    "Q": ("Ybar", np.pi / 2),
    "QDAG": ("Ybar", -np.pi / 2),
    "LAM": ("Ybar", np.pi),
}


class SerializationError(ValueError):
    """Sequence contains an event without a text form."""


@dataclass(frozen=True)
class Free:
    """Free evolution under the ambient Hamiltonian for time tau."""

    tau: float

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")


@dataclass(frozen=True)
class NamedPulse:
    """Simultaneous product of named encoded pulses, one per (label, pair)."""

    ops: tuple[tuple[str, tuple[int, int]], ...]

    def __post_init__(self):
        for label, pair in self.ops:
            if label not in PULSE_LABELS:
                raise ValueError(f"unknown pulse label {label!r}")
            if len(pair) != 2:
                raise ValueError("pulse pair must have two ions")


@dataclass(frozen=True)
class SmPulse:
    """Instantaneous pulse given as an explicit gate spec."""

    spec: SmGateSpec


@dataclass(frozen=True, eq=False)
class RawPulse:
    """Instantaneous pulse given as an explicit system unitary."""

    matrix: np.ndarray

    def __post_init__(self):
        if not is_unitary(np.asarray(self.matrix, dtype=complex)):
            raise NonUnitaryError("RawPulse matrix must be unitary")


@dataclass(frozen=True)
class Drive:
    """Continuous drive: evolve under amplitude * h_sys + ambient Hamiltonian."""

    h_sys: OperatorSum
    tau: float
    amplitude: float
    axis: str | None = None      # set by combined_gate, used for serialization
    pair: tuple[int, int] | None = None
    phi: float = 0.0

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")


Event = Free | NamedPulse | SmPulse | RawPulse | Drive


@dataclass(frozen=True)
class PulseSequence:
    """Ordered pulse program; events in matrix-product order."""

    events: tuple

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        timed = [e for e in self.events if isinstance(e, (Free, Drive))]
        if timed and self.cycle_time <= 0:
            raise ValueError("sequences with timed events need cycle_time > 0")

    @property
    def cycle_time(self) -> float:
        return sum(e.tau for e in self.events if isinstance(e, (Free, Drive)))

    def pulse_count(self) -> int:
        return sum(1 for e in self.events if not isinstance(e, Free))

    def __mul__(self, other: "PulseSequence") -> "PulseSequence":
        return PulseSequence(self.events + other.events)


def named_pulse(label: str, pair: tuple[int, int] = (0, 1),
                width: int = 2) -> np.ndarray:
    """Dense system unitary of a named encoded pulse."""
    if label not in _LABEL_GENERATOR:
        raise KeyError(f"unknown pulse label {label!r}")
    which, t = _LABEL_GENERATOR[label]
    xb, yb, _ = logical_operators(pair, width)
    gen = xb if which == "Xbar" else yb
    return expm_i(to_dense(gen), t)


# ---------------------------------------------------------------------------
# sequence builders


def parity_kick(r: np.ndarray, tau: float) -> PulseSequence:
    """[tau, R, tau, Rdag]: cancels ambient terms that anticommute with R."""
    r = np.asarray(r, dtype=complex)
    if not is_unitary(r):
        raise NonUnitaryError("parity-kick pulse must be unitary")
    return PulseSequence((Free(tau), RawPulse(r), Free(tau), RawPulse(r.conj().T)))


def symmetrize_pair(tau: float, pair: tuple[int, int] = (0, 1)) -> PulseSequence:
    """[tau, P, tau, PDAG]: turns general two-ion dephasing into collective
    dephasing, exactly when the bath has no free Hamiltonian."""
    return PulseSequence((
        Free(tau), NamedPulse((("P", pair),)),
        Free(tau), NamedPulse((("PDAG", pair),)),
    ))


def symmetrize_block4(tau: float, n_ions: int) -> PulseSequence:
    """Two-stage symmetrization creating block-of-4 collective dephasing.

    Stage 1 flips nearest-neighbour differentials with pair pulses; stage 2
    flips the surviving next-nearest differentials, with the nnn couplings
    restricted to each disjoint 4-ion block.
    """
    if n_ions % 4 != 0:
        raise ValueError("n_ions must be a multiple of 4")
    nn = tuple((2 * j, 2 * j + 1) for j in range(n_ions // 2))
    nnn = tuple(p for k in range(n_ions // 4)
                for p in ((4 * k, 4 * k + 2), (4 * k + 1, 4 * k + 3)))
    # X_nn = (x)_pairs exp(+i pi/2 Xbar) = product of PDAG pulses
    xnn = NamedPulse(tuple(("PDAG", p) for p in nn))
    xnn_d = NamedPulse(tuple(("P", p) for p in nn))
    xnnn = NamedPulse(tuple(("PDAG", p) for p in nnn))
    xnnn_d = NamedPulse(tuple(("P", p) for p in nnn))
    inner = (Free(tau), xnn, Free(tau), xnn_d)
    return PulseSequence(inner + (xnnn,) + inner + (xnnn_d,))


def leak_elim_cycle(tau: float, pair: tuple[int, int] = (0, 1)) -> PulseSequence:
    """[tau, PI, tau, PI]: the pi pulse Z1 Z2 cancels every leakage coupling."""
    pi = NamedPulse((("PI", pair),))
    return PulseSequence((Free(tau), pi, Free(tau), pi))


def four_pulse_cycle(tau: float, pair: tuple[int, int] = (0, 1)) -> PulseSequence:
    """[tau, PI, tau, P, tau, PI, tau, PDAG]: first order keeps only the DFS
    part and the Xbar coupling."""
    pi = NamedPulse((("PI", pair),))
    return PulseSequence((
        Free(tau), pi, Free(tau), NamedPulse((("P", pair),)),
        Free(tau), pi, Free(tau), NamedPulse((("PDAG", pair),)),
    ))


def ten_pulse_cycle(tau: float, pair: tuple[int, int] = (0, 1)) -> PulseSequence:
    """Q-conjugated double four-pulse cycle; first order keeps only the DFS part."""
    block = four_pulse_cycle(tau, pair).events
    return PulseSequence(
        block + (NamedPulse((("QDAG", pair),)),)
        + block + (NamedPulse((("Q", pair),)),))


def _drive_hamiltonian(axis: str, pair: tuple[int, int], width: int,
                       phi: float) -> OperatorSum:
    """X_phi (x) X_phi for axis X (encoded +Xbar); for axis Y the first ion
    gets phi + pi/2 so dphi = +pi/2 and the encoded generator is +Ybar."""
    phi_i = phi if axis == "X" else phi + np.pi / 2
    a = x_phi(phi_i)
    b = x_phi(phi)
    i, j = pair
    terms = []
    for ta in a.terms:
        for tb in b.terms:
            factors = ["I"] * width
            factors[i], factors[j] = ta.factors[0], tb.factors[0]
            terms.append(PauliTerm(tuple(factors), ta.coefficient * tb.coefficient))
    return OperatorSum(width, terms)


def combined_gate(axis: str, t: float, omega_drive: float,
                  pair: tuple[int, int] = (0, 1), width: int = 2,
                  phi: float = 0.0) -> PulseSequence:
    """Logic gate merged with decoupling: four weak drive quarters interleaved
    with strong pulses that commute with the drive.

    Bath off, the code-space action is exp(-i omega_drive * t * axis-bar).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if axis == "X":
        big, half = ("PI", pair), ("P", pair)
    elif axis == "Y":
        big, half = ("LAM", pair), ("Q", pair)
    else:
        raise ValueError("combined_gate supports axes X and Y; synthesize Z "
                         "via euler_rotation")
    h = _drive_hamiltonian(axis, pair, width, phi)
    drv = Drive(h, t / 4, omega_drive, axis=axis, pair=pair, phi=phi)
    half_dag = (half[0] + "DAG", pair)
    return PulseSequence((
        drv, NamedPulse((big,)), drv, NamedPulse((half,)),
        drv, NamedPulse((big,)), drv, NamedPulse((half_dag,)),
    ))


def euler_rotation(alpha: float, beta: float, gamma: float,
                   omega_drive: float, pair: tuple[int, int] = (0, 1),
                   width: int = 2) -> PulseSequence:
    """X-Y-X factor sequence: code-space action (bath off) equals
    exp(-i alpha Xbar) exp(-i beta Ybar) exp(-i gamma Xbar).

    Zero-angle factors are elided; the emitted program never exceeds
    24 pulses (8 per factor).
    """
    events: tuple = ()
    for axis, angle in (("X", alpha), ("Y", beta), ("X", gamma)):
        angle = math.fmod(angle, 2 * np.pi)
        if angle < 0:
            angle += 2 * np.pi
        if abs(angle) < 1e-15 or abs(angle - 2 * np.pi) < 1e-15:
            continue
        events += combined_gate(axis, angle / omega_drive, omega_drive,
                                pair, width).events
    return PulseSequence(events)


def euler_angles_xyx(target: np.ndarray) -> tuple[float, float, float]:
    """Angles (alpha, beta, gamma) with, up to global phase,
    target = Gx(alpha) Gy(beta) Gx(gamma), where Gx(a) = exp(-i a sigma_x)
    and Gy(b) = exp(+i b sigma_y) are the code-space pulse primitives."""
    u = np.asarray(target, dtype=complex)
    det = np.linalg.det(u)
    u = u / np.sqrt(det)  # SU(2) up to sign
    had = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    v = had @ u @ had  # x <-> z axis swap
    # ZYZ extraction: v = Rz(a) Ry(b) Rz(c)
    b = 2 * np.arctan2(abs(v[1, 0]), abs(v[0, 0]))
    if abs(v[0, 0]) > 1e-12 and abs(v[1, 0]) > 1e-12:
        a = -np.angle(v[0, 0]) + np.angle(v[1, 0])
        c = -np.angle(v[0, 0]) - np.angle(v[1, 0])
    elif abs(v[0, 0]) > 1e-12:
        a = -2 * np.angle(v[0, 0])
        c = 0.0
    else:
        a = 2 * np.angle(v[1, 0])
        c = 0.0
    # U = H V H = Rx(a) Ry(-b) Rx(c); Gx(t) = Rx(2t), Gy(t) = Ry(-2t)
    return a / 2, b / 2, c / 2


# ---------------------------------------------------------------------------
# propagation


@dataclass(frozen=True)
class EvolutionModel:
    """Ambient Hamiltonian for sequence propagation: width qubits (x) bath."""

    width: int
    bath_dim: int = 1
    h_static: np.ndarray | None = None  # full-dimension H_SB + H_B, rad/s

    def __post_init__(self):
        dim = (2 ** self.width) * self.bath_dim
        h = self.h_static
        if h is None:
            h = np.zeros((dim, dim), dtype=complex)
        h = np.asarray(h, dtype=complex)
        if h.shape != (dim, dim):
            raise ValueError(f"h_static must be {dim}x{dim}")
        object.__setattr__(self, "h_static", h)

    @classmethod
    def from_opsum(cls, h: OperatorSum, bath_dim: int = 1,
                   bindings: dict | None = None,
                   h_bath: np.ndarray | None = None) -> "EvolutionModel":
        mat = to_dense(h, bath_dim, bindings)
        if h_bath is not None:
            mat = mat + np.kron(np.eye(2 ** h.width, dtype=complex),
                                np.asarray(h_bath, dtype=complex))
        return cls(h.width, bath_dim, mat)

    @property
    def dim(self) -> int:
        return (2 ** self.width) * self.bath_dim

    def lift(self, sys_mat: np.ndarray) -> np.ndarray:
        """System operator extended by the bath identity."""
        if self.bath_dim == 1:
            return np.asarray(sys_mat, dtype=complex)
        return np.kron(np.asarray(sys_mat, dtype=complex),
                       np.eye(self.bath_dim, dtype=complex))


def event_unitary(event, model: EvolutionModel, cache: dict | None = None) -> np.ndarray:
    """Dense propagator of a single event under the model."""
    key = None
    if cache is not None:
        key = _cache_key(event)
        if key in cache:
            return cache[key]
    if isinstance(event, Free):
        u = expm_i(model.h_static, event.tau)
    elif isinstance(event, Drive):
        h = model.h_static + event.amplitude * model.lift(to_dense(event.h_sys))
        u = expm_i(h, event.tau)
    elif isinstance(event, NamedPulse):
        sys = np.eye(2 ** model.width, dtype=complex)
        for label, pair in event.ops:
            sys = sys @ named_pulse(label, pair, model.width)
        u = model.lift(sys)
    elif isinstance(event, SmPulse):
        u = model.lift(sm_gate_dense(event.spec, model.width))
    elif isinstance(event, RawPulse):
        u = model.lift(event.matrix)
    else:
        raise TypeError(f"unknown event {event!r}")
    if cache is not None and key is not None:
        cache[key] = u
    return u


def _cache_key(event):
    if isinstance(event, Free):
        return ("free", event.tau)
    if isinstance(event, NamedPulse):
        return ("named", event.ops)
    if isinstance(event, Drive):
        return ("drive", event.tau, event.amplitude, event.axis,
                event.pair, event.phi, event.h_sys)
    if isinstance(event, SmPulse):
        return ("sm", event.spec)
    return ("raw", id(event))


def propagator(seq: PulseSequence, model: EvolutionModel) -> np.ndarray:
    """Ordered product of event propagators (first event leftmost)."""
    cache: dict = {}
    out = np.eye(model.dim, dtype=complex)
    for event in seq.events:
        out = out @ event_unitary(event, model, cache)
    return out


# ---------------------------------------------------------------------------
# text form

_PULSE_RE = re.compile(r"^([A-Z]+)@(\d+):(\d+)$")


def seq_to_text(seq: PulseSequence) -> str:
    """Line-oriented text form, e.g. ``[tau=1e-07, PI@0:1, tau=1e-07, P@0:1]``."""
    parts = []
    for e in seq.events:
        if isinstance(e, Free):
            parts.append(f"tau={e.tau!r}")
        elif isinstance(e, NamedPulse):
            parts.append("*".join(f"{lab}@{i}:{j}" for lab, (i, j) in e.ops))
        elif isinstance(e, Drive):
            if e.axis is None or e.pair is None:
                raise SerializationError("generic drives have no text form")
            parts.append(
                f"DRIVE(axis={e.axis};pair={e.pair[0]}:{e.pair[1]};"
                f"tau={e.tau!r};amp={e.amplitude!r};phi={e.phi!r})")
        elif isinstance(e, SmPulse):
            s = e.spec
            phis = ",".join(repr(p) for p in s.phis)
            ions = ",".join(str(i) for i in s.ions)
            parts.append(f"SM(theta={s.theta!r};phis={phis};ions={ions})")
        else:
            raise SerializationError(f"event {type(e).__name__} has no text form")
    return "[" + ", ".join(parts) + "]"


def seq_from_text(text: str, width: int = 2) -> PulseSequence:
    """Parse the text form produced by seq_to_text."""
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ValueError("sequence text must be bracketed")
    body = text[1:-1].strip()
    events: list = []
    if not body:
        return PulseSequence(())
    for token in _split_top(body):
        token = token.strip()
        if token.startswith("tau="):
            events.append(Free(float(token[4:])))
        elif token.startswith("DRIVE("):
            fields = dict(kv.split("=", 1) for kv in token[6:-1].split(";"))
            pi, pj = fields["pair"].split(":")
            pair = (int(pi), int(pj))
            axis = fields["axis"]
            phi = float(fields.get("phi", "0"))
            h = _drive_hamiltonian(axis, pair, width, phi)
            events.append(Drive(h, float(fields["tau"]), float(fields["amp"]),
                                axis=axis, pair=pair, phi=phi))
        elif token.startswith("SM("):
            fields = dict(kv.split("=", 1) for kv in token[3:-1].split(";"))
            events.append(SmPulse(SmGateSpec(
                float(fields["theta"]),
                tuple(float(x) for x in fields["phis"].split(",")),
                tuple(int(x) for x in fields["ions"].split(",")))))
        else:
            ops = []
            for factor in token.split("*"):
                m = _PULSE_RE.match(factor.strip())
                if not m:
                    raise ValueError(f"cannot parse pulse token {factor!r}")
                ops.append((m.group(1), (int(m.group(2)), int(m.group(3)))))
            events.append(NamedPulse(tuple(ops)))
    return PulseSequence(tuple(events))


def _split_top(body: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        out.append("".join(cur))
    return out
