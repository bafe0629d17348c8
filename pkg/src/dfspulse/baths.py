"""Bath models, thermal formulas, and trajectory-based decoherence metrics.

Two bath registers are kept deliberately separate:

* abstract finite-dimensional quantum baths (`DephasingBath`, `VibBath`)
  for the exactness theorems and generator analysis, and
* classical stochastic dephasing with a 1/f^alpha spectrum
  (`SpectralNoise`) for T2 scans.

The classical noise is a seeded sum of cosines with log-spaced frequencies,
Gaussian amplitudes matched to the target spectral density, and uniform
phases; free-evolution segments are integrated in closed form.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dfs import CODE_ONE_INDEX, CODE_ZERO_INDEX
from .pauli import OperatorSum, PauliTerm, spectral_norm, to_dense
from .sequences import Drive, Free, PulseSequence, RawPulse, SmPulse, named_pulse

HBAR = 1.054571817e-34   # J s
KB = 1.380649e-23        # J / K

_TRAJ_CHUNK = 25  # fixed chunking keeps results independent of worker count


# ---------------------------------------------------------------------------
# quantum baths


@dataclass(frozen=True)
class DephasingBath:
    """Two-qubit dephasing bath: Z1 (x) b1 + Z2 (x) b2 (+ bath Hamiltonian)."""

    b1: np.ndarray
    b2: np.ndarray
    h_bath: np.ndarray | None = None

    def __post_init__(self):
        for name in ("b1", "b2"):
            m = np.asarray(getattr(self, name), dtype=complex)
            if np.abs(m - m.conj().T).max() > 1e-10 * max(1.0, np.abs(m).max()):
                raise ValueError(f"{name} must be Hermitian")
            object.__setattr__(self, name, m)
        if self.h_bath is not None:
            object.__setattr__(self, "h_bath", np.asarray(self.h_bath, dtype=complex))

    @property
    def dim(self) -> int:
        return self.b1.shape[0]

    @property
    def b_col(self) -> np.ndarray:
        return (self.b1 + self.b2) / 2

    @property
    def b_dif(self) -> np.ndarray:
        return (self.b1 - self.b2) / 2

    def hamiltonian(self, pair: tuple[int, int] = (0, 1), width: int = 2) -> np.ndarray:
        """Dense H_SB + H_B on the width-qubit (x) bath space."""
        i, j = pair
        z_i = to_dense(OperatorSum.single(width, i, "Z"))
        z_j = to_dense(OperatorSum.single(width, j, "Z"))
        h = np.kron(z_i, self.b1) + np.kron(z_j, self.b2)
        if self.h_bath is not None:
            h = h + np.kron(np.eye(2 ** width, dtype=complex), self.h_bath)
        return h


@dataclass(frozen=True)
class VibBath:
    """Damped vibrational mode: system oscillator exchanging quanta with
    bath modes.  All frequencies in rad/s; Hamiltonians carry rad/s units."""

    gamma: float
    mode_freqs: tuple[float, ...]
    omega0: float
    n_trunc: int
    temperature: float

    def __post_init__(self):
        if self.n_trunc < 2:
            raise ValueError("n_trunc must be at least 2")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        object.__setattr__(self, "mode_freqs", tuple(float(w) for w in self.mode_freqs))


@dataclass(frozen=True)
class ThermalNumbers:
    n_mean: float
    t_dec: float  # infinite when gamma == 0


def thermal_numbers(v: VibBath) -> ThermalNumbers:
    """Mean occupation n(T) and thermal decoherence time 1/(gamma(1+2n))."""
    if v.temperature <= 0:
        raise ValueError("temperature must be positive")
    x = HBAR * v.omega0 / (KB * v.temperature)
    n = 1.0 / math.expm1(x)
    t_dec = math.inf if v.gamma == 0 else 1.0 / (v.gamma * (1 + 2 * n))
    return ThermalNumbers(n_mean=n, t_dec=t_dec)


@dataclass(frozen=True)
class TimescaleCheck:
    satisfied: bool
    margin: float


def timescale_check(dt: float, omega_c: float, t_dec: float,
                    threshold: float = 10.0) -> TimescaleCheck:
    """Pulse-interval condition dt << min(1/omega_c, t_dec); the "much less"
    is encoded as margin >= threshold."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    limit = t_dec if omega_c == 0 else min(1.0 / omega_c, t_dec)
    margin = limit / dt
    return TimescaleCheck(satisfied=bool(margin >= threshold), margin=float(margin))


def _ladder(n: int) -> np.ndarray:
    a = np.zeros((n, n), dtype=complex)
    for k in range(1, n):
        a[k - 1, k] = math.sqrt(k)
    return a


def vib_hamiltonian(v: VibBath) -> OperatorSum:
    """Exchange coupling of the system mode to each bath mode, plus the mode
    energies, as an OperatorSum over oscillator slots (no qubits).

    Use vib_bindings(v) for the dense slot operators and layout.
    """
    terms = [PauliTerm((), v.omega0, "num_sys")]
    for k, w in enumerate(v.mode_freqs):
        terms.append(PauliTerm((), w, f"num_bath{k}"))
        terms.append(PauliTerm((), v.gamma, f"exchange{k}"))
    return OperatorSum(0, tuple(terms))


def vib_bindings(v: VibBath) -> tuple[tuple[int, ...], dict[str, np.ndarray]]:
    """(layout, bindings) realizing the oscillator slots on truncated Fock
    spaces, system mode first."""
    n = v.n_trunc
    modes = 1 + len(v.mode_freqs)
    a = _ladder(n)
    num = a.conj().T @ a

    def embed(op, which):
        mats = [np.eye(n, dtype=complex)] * modes
        mats[which] = op
        out = np.array([[1]], dtype=complex)
        for m in mats:
            out = np.kron(out, m)
        return out

    bindings = {"num_sys": embed(num, 0)}
    for k in range(len(v.mode_freqs)):
        bindings[f"num_bath{k}"] = embed(num, 1 + k)
        mats = [np.eye(n, dtype=complex)] * modes
        mats[0] = a
        mats[1 + k] = a.conj().T
        down_up = np.array([[1]], dtype=complex)
        for m in mats:
            down_up = np.kron(down_up, m)
        bindings[f"exchange{k}"] = down_up + down_up.conj().T
    return (n,) * modes, bindings


def total_excitation(v: VibBath) -> np.ndarray:
    """Dense total quantum number; commutes with vib_hamiltonian exactly."""
    _, bindings = vib_bindings(v)
    out = bindings["num_sys"].copy()
    for k in range(len(v.mode_freqs)):
        out = out + bindings[f"num_bath{k}"]
    return out


def qubit_motional_error(pair: tuple[int, int] = (0, 1), width: int = 2,
                         bath_slot: str = "motional") -> OperatorSum:
    """(Y_i + Y_j) (x) bath slot: the leakage coupling left by a decohered
    vibrational mode during gate drive."""
    return (OperatorSum.single(width, pair[0], "Y", 1.0, bath_slot)
            + OperatorSum.single(width, pair[1], "Y", 1.0, bath_slot))


def bch_bound(h_s: np.ndarray, h_sb: np.ndarray, h_b: np.ndarray,
              t: float) -> dict[str, float]:
    """Second-order combination error bound for the weak-drive parity kick.

    bound = t^2 ||[H_SB, H_S] + [H_SB, H_B]|| / 2;
    t_max_weak = 1 / sqrt(||H_S|| ||H_SB||).
    """
    h_s, h_sb, h_b = (np.asarray(m, dtype=complex) for m in (h_s, h_sb, h_b))
    comm = (h_sb @ h_s - h_s @ h_sb) + (h_sb @ h_b - h_b @ h_sb)
    omega = spectral_norm(h_s)
    gamma_sb = spectral_norm(h_sb)
    t_max = math.inf if omega * gamma_sb == 0 else 1.0 / math.sqrt(omega * gamma_sb)
    return {"bound": 0.5 * t ** 2 * spectral_norm(comm), "t_max_weak": t_max}


# ---------------------------------------------------------------------------
# classical 1/f^alpha noise


@dataclass(frozen=True)
class SpectralNoise:
    """Stationary Gaussian dephasing-rate process with PSD ~ 1/omega^alpha on
    [omega_min, omega_max].  `amplitude` is the RMS rate (rad/s)."""

    alpha: float
    omega_min: float
    omega_max: float
    amplitude: float
    n_harmonics: int = 64
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.omega_min < self.omega_max:
            raise ValueError("require 0 < omega_min < omega_max")
        if self.n_harmonics < 8:
            raise ValueError("n_harmonics must be at least 8")

    def frequencies(self) -> np.ndarray:
        """Deterministic log-spaced grid over [omega_min, omega_max]."""
        k = (np.arange(self.n_harmonics) + 0.5) / self.n_harmonics
        return self.omega_min * (self.omega_max / self.omega_min) ** k

    def variances(self) -> np.ndarray:
        """Per-harmonic amplitude variances matching PSD ~ omega^-alpha."""
        w = self.frequencies() ** (1.0 - self.alpha)
        return 2.0 * self.amplitude ** 2 * w / w.sum()

    def draw(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """(amplitudes, phases) for one trajectory."""
        amps = rng.normal(size=self.n_harmonics) * np.sqrt(self.variances())
        phases = rng.uniform(0.0, 2 * np.pi, size=self.n_harmonics)
        return amps, phases

    def trajectory_rng(self, traj_index: int, stream: int = 0) -> np.random.Generator:
        """Per-trajectory generator; independent of execution order."""
        return np.random.default_rng([self.seed, stream, traj_index])


def sample_1f_trajectory(s: SpectralNoise, horizon: float,
                         dt_sample: float) -> tuple[np.ndarray, np.ndarray]:
    """One realization sampled on a uniform grid; deterministic given seed."""
    if dt_sample >= 2 * np.pi / s.omega_max:
        raise ValueError("dt_sample violates the Nyquist guard 2*pi/omega_max")
    t = np.arange(0.0, horizon, dt_sample)
    amps, phases = s.draw(s.trajectory_rng(0))
    values = np.cos(np.multiply.outer(t, s.frequencies()) + phases) @ amps
    return t, values


def _segment_integrals(noise: SpectralNoise, boundaries: np.ndarray,
                       amps: np.ndarray, phases: np.ndarray,
                       block: int = 4096) -> np.ndarray:
    """Exact integrals of the cosine-sum process over consecutive segments.

    amps/phases have shape (ntraj, nh); returns (ntraj, nsegments).
    Boundary evaluation is blocked to bound peak memory.
    """
    om = noise.frequencies()
    weights = amps / om  # antiderivative coefficients
    nb = boundaries.size
    anti = np.empty((amps.shape[0], nb))
    for lo in range(0, nb, block):
        hi = min(lo + block, nb)
        arg = np.multiply.outer(boundaries[lo:hi], om)[None, :, :] + phases[:, None, :]
        anti[:, lo:hi] = np.einsum("tbk,tk->tb", np.sin(arg), weights)
    return np.diff(anti, axis=1)


# diagonal Z generators on the pair's 4-dim space, basis (uu, ud, du, dd)
_Z1_DIAG = np.array([1.0, 1.0, -1.0, -1.0])
_Z2_DIAG = np.array([1.0, -1.0, 1.0, -1.0])


@dataclass(frozen=True)
class DephasingResult:
    times: np.ndarray
    coherence: np.ndarray
    t2: float  # inf when the curve never crosses 1/e


def _t2_from_curve(times: np.ndarray, coherence: np.ndarray) -> float:
    """First 1/e crossing, linearly interpolated."""
    target = 1.0 / np.e
    below = np.nonzero(coherence < target)[0]
    if below.size == 0:
        return math.inf
    k = below[0]
    if k == 0:
        return float(times[0])
    t0, t1 = times[k - 1], times[k]
    c0, c1 = coherence[k - 1], coherence[k]
    return float(t0 + (c0 - target) / (c0 - c1) * (t1 - t0))


def _check_storage_sequence(seq: PulseSequence) -> list:
    events = list(seq.events)
    if not any(isinstance(e, Free) for e in events):
        raise ValueError("storage sequences need at least one free segment")
    for e in events:
        if isinstance(e, (Drive, SmPulse, RawPulse)):
            raise ValueError("dephasing_run supports Free and named pulses only")
    return events


def dephasing_run(seq: PulseSequence, noise: SpectralNoise, n_traj: int,
                  pair: tuple[int, int] = (0, 1), n_cycles: int = 200,
                  mode: str = "differential", seed: int | None = None,
                  jobs: int = 1, record_every: int = 1) -> DephasingResult:
    """Ensemble average of the encoded off-diagonal coherence under classical
    dephasing, with the pulse sequence repeated `n_cycles` times.

    mode: "collective" (same rate on both ions), "differential" (opposite),
    or "independent" (two independent processes).  Coherence is normalized to
    its initial value; the returned t2 is the interpolated 1/e crossing.
    """
    if mode not in ("collective", "differential", "independent"):
        raise ValueError(f"unknown noise mode {mode!r}")
    if n_traj < 1:
        raise ValueError("n_traj must be positive")
    events = _check_storage_sequence(seq)
    master_seed = noise.seed if seed is None else seed

    # per-cycle template: ('free', index) segments and pulse matrices
    frees = [e.tau for e in events if isinstance(e, Free)]
    pulses = {}
    template = []
    fidx = 0
    for e in events:
        if isinstance(e, Free):
            template.append(("free", fidx))
            fidx += 1
        else:
            key = e.ops
            if key not in pulses:
                mat = np.eye(4, dtype=complex)
                for label, p in e.ops:
                    if set(p) != set(pair):
                        raise ValueError("storage pulses must act on the stored pair")
                    mat = mat @ named_pulse(label, (0, 1), 2)
                pulses[key] = mat
            template.append(("pulse", key))
    cycle_time = sum(frees)

    # all segment boundaries across the run
    seg_times = np.concatenate([[0.0], np.tile(frees, n_cycles)]).cumsum()

    record_idx = np.arange(0, n_cycles + 1, record_every)
    times = record_idx * cycle_time

    base = SpectralNoise(noise.alpha, noise.omega_min, noise.omega_max,
                         noise.amplitude, noise.n_harmonics, master_seed)

    def run_chunk(start: int, stop: int) -> np.ndarray:
        count = stop - start
        if mode == "independent":
            draws1 = [base.draw(base.trajectory_rng(i, 1)) for i in range(start, stop)]
            draws2 = [base.draw(base.trajectory_rng(i, 2)) for i in range(start, stop)]
            int1 = _segment_integrals(base, seg_times,
                                      np.array([d[0] for d in draws1]),
                                      np.array([d[1] for d in draws1]))
            int2 = _segment_integrals(base, seg_times,
                                      np.array([d[0] for d in draws2]),
                                      np.array([d[1] for d in draws2]))
        else:
            draws = [base.draw(base.trajectory_rng(i)) for i in range(start, stop)]
            ints = _segment_integrals(base, seg_times,
                                      np.array([d[0] for d in draws]),
                                      np.array([d[1] for d in draws]))
            if mode == "collective":
                int1, int2 = ints, ints
            else:
                int1, int2 = ints, -ints
        # evolve (count, 4) states; initial (|0L> + |1L>)/sqrt(2)
        psi = np.zeros((count, 4), dtype=complex)
        psi[:, CODE_ZERO_INDEX] = 1 / np.sqrt(2)
        psi[:, CODE_ONE_INDEX] = 1 / np.sqrt(2)
        off = np.empty(record_idx.size, dtype=complex)
        rec = 0
        if record_idx[rec] == 0:
            off[rec] = (psi[:, CODE_ZERO_INDEX] * psi[:, CODE_ONE_INDEX].conj()).sum()
            rec += 1
        seg = 0
        for cyc in range(n_cycles):
            for kind, key in template:
                if kind == "free":
                    phase = (np.outer(int1[:, seg], _Z1_DIAG)
                             + np.outer(int2[:, seg], _Z2_DIAG)) / 2
                    psi = psi * np.exp(-1j * phase)
                    seg += 1
                else:
                    psi = psi @ pulses[key].T
            if rec < record_idx.size and record_idx[rec] == cyc + 1:
                off[rec] = (psi[:, CODE_ZERO_INDEX] * psi[:, CODE_ONE_INDEX].conj()).sum()
                rec += 1
        return off

    starts = list(range(0, n_traj, _TRAJ_CHUNK))
    bounds = [(s, min(s + _TRAJ_CHUNK, n_traj)) for s in starts]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(lambda b: run_chunk(*b), bounds))
    else:
        chunks = [run_chunk(*b) for b in bounds]
    total = np.zeros(record_idx.size, dtype=complex)
    for c in chunks:  # fixed combination order keeps results jobs-independent
        total += c
    coherence = np.abs(total) / n_traj * 2.0
    coherence = coherence / coherence[0]
    return DephasingResult(times=times, coherence=coherence,
                           t2=_t2_from_curve(times, coherence))


@dataclass(frozen=True)
class ScanRow:
    dt: float
    t2_base: float
    t2_pulsed: float
    gain: float
    n_traj: int
    seed: int


def suppression_scan(seq_family, dt_grid, noise: SpectralNoise, n_traj: int,
                     t_max: float, mode: str = "differential",
                     seed: int | None = None, jobs: int = 1) -> list[ScanRow]:
    """T2 gain of `seq_family(dt)` over a pulse-interval grid.

    The baseline is pulse-free storage on a fine recording grid; t_max caps
    every run's simulated horizon.
    """
    dt_grid = list(dt_grid)
    if len(dt_grid) < 4:
        raise ValueError("dt grid needs at least 4 points")
    master_seed = noise.seed if seed is None else seed
    dt_base = min(dt_grid)
    base_seq = PulseSequence((Free(dt_base),))
    # grow the pulse-free horizon until the 1/e crossing is resolved
    horizon = t_max / 64
    base = None
    while True:
        n_base = max(4, int(math.ceil(horizon / dt_base)))
        base = dephasing_run(base_seq, noise, n_traj, n_cycles=n_base, mode=mode,
                             seed=master_seed, jobs=jobs,
                             record_every=max(1, n_base // 4000))
        if math.isfinite(base.t2) or horizon >= t_max:
            break
        horizon = min(t_max, 4 * horizon)
    rows = []
    for dt in dt_grid:
        seq = seq_family(dt)
        cyc = seq.cycle_time
        n_cycles = max(4, int(math.ceil(t_max / cyc)))
        res = dephasing_run(seq, noise, n_traj, n_cycles=n_cycles, mode=mode,
                            seed=master_seed, jobs=jobs,
                            record_every=max(1, n_cycles // 4000))
        gain = res.t2 / base.t2 if math.isfinite(res.t2) and math.isfinite(base.t2) else math.inf
        rows.append(ScanRow(dt=dt, t2_base=base.t2, t2_pulsed=res.t2,
                            gain=gain, n_traj=n_traj, seed=master_seed))
    return rows
