"""Shot-level Monte Carlo estimators.

Three samplers share the same recording convention: each shot produces a
denominator sample a_s (a product of gadget-ancilla X outcomes, or the
sampled-stabilizer outcome for plain symmetry expansion) and a numerator
sample b_s = a_s times the observable outcome.  The estimate is the ratio of
the two sample means; its uncertainty is propagated with the delta method
from the empirical covariance of (a, b).

Each shot draws from an independent random stream derived from the master
seed and the shot index, so results are reproducible bit for bit and do not
depend on evaluation order.  Gadget ancillas are measured immediately after
their controlled gate: every ancilla interacts exactly once, so this is
statistically identical to deferring all measurements to the end while
keeping the simulated register at n + 1 qubits.  The gadget step exploits
that further: with the ancilla X-measured and traced out straight away, the
conditional system state is a closed-form combination of the four stabilizer
products, so the joint register is never materialised (the equivalence is
pinned by tests against the explicit construction).
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .codes import StabilizerCode, TransversalGate
from .density import (
    DensityMatrix,
    _depolarize_array_all,
    measure_projective,
    shot_stream,
)
from .exact import CircuitSpec, GadgetSchedule, VirtualQecConfig
from .pauli import PauliString

#: With fewer than this many standard deviations between the denominator mean
#: and zero, the ratio is withheld instead of divided.
DENOMINATOR_SIGMAS = 3.0

_PROB_FLOOR = 1e-14


@dataclass(frozen=True)
class ShotRecord:
    """One shot: denominator sample, numerator sample, sampled index pairs."""

    a: int
    b: int
    indices: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class EstimatorResult:
    """Aggregated ratio estimate with delta-method uncertainty."""

    a_mean: float
    b_mean: float
    ratio: float | None
    variance: float | None
    shots: int
    seed: int
    denominator_ok: bool
    target_eps: float | None = None
    predicted_shots: float | None = None

    @property
    def stderr(self) -> float | None:
        return None if self.variance is None else math.sqrt(max(self.variance, 0.0))


def _aggregate(
    a: np.ndarray,
    b: np.ndarray,
    seed: int,
    target_eps: float | None,
    scale: float = 1.0,
) -> EstimatorResult:
    n = len(a)
    a_mean = float(a.mean())
    b_mean = float(b.mean())
    ok = abs(a_mean) >= DENOMINATOR_SIGMAS * scale / math.sqrt(n)
    ratio = variance = None
    if ok:
        ratio = b_mean / a_mean
        if n > 1:
            cov = np.cov(a, b, ddof=1)
            s_aa, s_ab, s_bb = float(cov[0, 0]), float(cov[0, 1]), float(cov[1, 1])
            variance = (s_bb - 2.0 * ratio * s_ab + ratio**2 * s_aa) / (n * a_mean**2)
    predicted = None
    if target_eps is not None and ok:
        predicted = 1.0 / (target_eps**2 * a_mean**2)
    return EstimatorResult(
        a_mean=a_mean,
        b_mean=b_mean,
        ratio=ratio,
        variance=variance,
        shots=n,
        seed=seed,
        denominator_ok=ok,
        target_eps=target_eps,
        predicted_shots=predicted,
    )


def _pauli_projectors(p: PauliString) -> tuple[np.ndarray, np.ndarray]:
    if not p.is_hermitian():
        raise ValueError(f"{p} is not Hermitian and cannot be measured")
    dense = p.to_dense()
    eye = np.eye(dense.shape[0])
    return (eye + dense) / 2.0, (eye - dense) / 2.0


def _pauli_outcome(data: np.ndarray, dense_obs: np.ndarray, rng: np.random.Generator) -> int:
    """Sampled +-1 outcome of measuring a Hermitian Pauli; no post-state needed."""
    val = float(np.einsum("ij,ji->", data, dense_obs).real)
    p_plus = min(1.0, max(0.0, (1.0 + val) / 2.0))
    if p_plus < _PROB_FLOOR:
        return -1
    if 1.0 - p_plus < _PROB_FLOOR:
        return +1
    return +1 if rng.random() < p_plus else -1


# -- symmetry expansion --------------------------------------------------------


def se_estimate(
    rho: DensityMatrix,
    code: StabilizerCode,
    observable: PauliString,
    shots: int,
    seed: int,
    target_eps: float | None = None,
) -> EstimatorResult:
    """Symmetry-expansion estimate of the post-selected expectation value.

    Per shot a stabilizer element is drawn uniformly and measured jointly
    with the observable (two sequential compatible projective measurements);
    the outcome pair feeds the ratio estimator.
    """
    if shots < 1:
        raise ValueError("need at least one shot")
    if abs(rho.trace() - 1.0) > 1e-8:
        raise ValueError("symmetry expansion expects a normalized input state")
    for g in code.generators:
        if not observable.commutes(g):
            raise ValueError(f"observable {observable} anticommutes with {g}")
    group = code.group()
    obs_proj = _pauli_projectors(observable)
    elem_proj = [_pauli_projectors(el) for el in group]
    a = np.empty(shots, dtype=np.float64)
    b = np.empty(shots, dtype=np.float64)
    for s in range(shots):
        rng = shot_stream(seed, s)
        i = int(rng.integers(len(group)))
        outcome, post = measure_projective(rho, elem_proj[i], rng)
        obs_outcome, _ = measure_projective(post, obs_proj, rng)
        a[s] = outcome
        b[s] = outcome * obs_outcome
    return _aggregate(a, b, seed, target_eps)


# -- virtual detection ---------------------------------------------------------


def _gadget_shot(
    data: np.ndarray,
    code: StabilizerCode,
    variant: str,
    gadget_p: float | None,
    ancilla_p: float | None,
    rng: np.random.Generator,
) -> tuple[int, np.ndarray, tuple[int, int]]:
    """One physical projection gadget on a trace-1 system state.

    Samples the stabilizer indices, couples a fresh |+> ancilla through the
    controlled stabilizer, measures it in the X basis immediately and traces
    it out.  For ancilla outcome m the conditional system state is

        [A00 + A11 + m f (A01 + A10)] / (2 p_m),    p_m = (1 + m f c) / 2,

    where the A blocks are the gadget's stabilizer products, c is the real
    trace of the off-diagonal block sum and f collects the depolarizing
    damping of the ancilla coherences.
    """
    group = code.group()
    i = int(rng.integers(len(group)))
    j = int(rng.integers(len(group)))
    si, sj = group[i], group[j]
    n = code.n

    damping = 1.0
    if ancilla_p:
        # n sequential single-qubit depolarizings on the ancilla compose into
        # one; only the |0><1| / |1><0| blocks survive the X expectation.
        damping *= (1.0 - ancilla_p) ** n
    if gadget_p:
        if variant != "single_control":
            raise ValueError("gadget noise is modelled for the single_control variant")
        damping *= 1.0 - gadget_p

    if variant == "single_control":
        sigma = data if si.is_identity else si.sandwich(data)
        if gadget_p:
            sigma = _depolarize_array_all(sigma, gadget_p, n)
        right = sj.mul_matrix_right(sigma)  # sigma S_j
        left = sj.mul_matrix_left(sigma)  # S_j sigma
        conj = sj.mul_matrix_left(right)  # S_j sigma S_j
        diag = sigma + conj
        off = right + left
    elif variant == "two_controls":
        if ancilla_p:
            raise ValueError("ancilla noise is modelled for the single_control variant")
        a00 = data if si.is_identity else si.sandwich(data)
        a11 = data if sj.is_identity else sj.sandwich(data)
        tmp = sj.mul_matrix_right(data)
        a01 = si.mul_matrix_left(tmp)  # S_i rho S_j
        a10 = sj.mul_matrix_left(si.mul_matrix_right(data))  # S_j rho S_i
        diag = a00 + a11
        off = a01 + a10
    else:
        raise ValueError(f"unknown gadget variant {variant!r}")

    c = float(np.trace(off).real)
    p_plus = min(1.0, max(0.0, (1.0 + damping * c) / 2.0))
    if p_plus < _PROB_FLOOR:
        m = -1
    elif 1.0 - p_plus < _PROB_FLOOR:
        m = +1
    else:
        m = +1 if rng.random() < p_plus else -1
    post = (diag + (m * damping) * off) / (2.0 * (1.0 + m * damping * c))
    if gadget_p:
        post = _depolarize_array_all(post, gadget_p, n)
    return m, post, (i, j)


def _layer_superop(code: StabilizerCode, gate: TransversalGate, p: float) -> np.ndarray:
    """Superoperator of one layer (gate then per-qubit noise), cached per code.

    Only built for registers of up to 5 qubits, where the dim**2 x dim**2
    matrix is small; one matmul then replaces the per-qubit channel chain.
    Row-major vec convention: the map rho -> A rho B is kron(A, B.T).
    """
    cache = getattr(code, "_layer_superops", None)
    if cache is None:
        cache = {}
        setattr(code, "_layer_superops", cache)
    key = (gate.label, p)
    op = cache.get(key)
    if op is None:
        dim = 1 << code.n
        u = code.transversal_unitary(gate)
        op = np.kron(u, u.conj())
        if p > 0.0:
            total = np.empty_like(op)
            for col in range(dim * dim):
                mat = op[:, col].reshape(dim, dim)
                total[:, col] = _depolarize_array_all(mat, p, code.n).reshape(-1)
            op = total
        cache[key] = op
    return op


def _apply_layer(
    data: np.ndarray, code: StabilizerCode, gate: TransversalGate, p: float
) -> np.ndarray:
    if code.n <= 5:
        op = _layer_superop(code, gate, p)
        dim = data.shape[0]
        return (op @ data.reshape(-1)).reshape(dim, dim)
    u = code.transversal_unitary(gate)
    out = u @ data @ u.conj().T
    if p > 0.0:
        out = _depolarize_array_all(out, p, code.n)
    return out


def vqed_shot_run(
    spec: CircuitSpec, schedule: GadgetSchedule, rng: np.random.Generator | int
) -> ShotRecord:
    """Simulate one shot of the virtually-detected circuit.

    Channels are applied exactly; randomness enters through the stabilizer
    index draws and the sampled measurement outcomes.
    """
    if isinstance(rng, (int, np.integer)):
        rng = shot_stream(int(rng), 0)
    points = set(schedule.points(spec.depth))
    noise = spec.noise
    data = np.outer(spec.code.logical_zero(), spec.code.logical_zero().conj())
    sign = 1
    indices: list[tuple[int, int]] = []

    def fire(state: np.ndarray) -> np.ndarray:
        nonlocal sign
        m, state, ij = _gadget_shot(
            state, spec.code, schedule.variant, noise.gadget_p, noise.ancilla_p, rng
        )
        sign *= m
        indices.append(ij)
        return state

    if 0 in points:
        data = fire(data)
    for layer, gate in enumerate(spec.gates, start=1):
        data = _apply_layer(data, spec.code, gate, noise.gate_p)
        if layer in points:
            data = fire(data)
    obs_outcome = _pauli_outcome(data, spec.observable.to_dense(), rng)
    return ShotRecord(a=sign, b=sign * obs_outcome, indices=tuple(indices))


def vqed_estimate(
    spec: CircuitSpec,
    schedule: GadgetSchedule,
    shots: int,
    seed: int,
    target_eps: float | None = None,
) -> EstimatorResult:
    """Aggregate independent virtual-detection shots into a ratio estimate."""
    if shots < 1:
        raise ValueError("need at least one shot")
    a = np.empty(shots, dtype=np.float64)
    b = np.empty(shots, dtype=np.float64)
    for s in range(shots):
        rec = vqed_shot_run(spec, schedule, shot_stream(seed, s))
        a[s] = rec.a
        b[s] = rec.b
    return _aggregate(a, b, seed, target_eps)


# -- virtual error correction ---------------------------------------------------


def virtual_qec_sample(
    rho: DensityMatrix,
    code: StabilizerCode,
    cfg: VirtualQecConfig,
    observable: PauliString,
    shots: int,
    seed: int,
    target_eps: float | None = None,
    variant: str = "single_control",
) -> EstimatorResult:
    """Monte Carlo estimate of the virtually error-corrected expectation value.

    Per shot a syndrome is drawn uniformly from the configured subset, its
    recovery is applied, one projection gadget runs, and the observable is
    measured.  Samples are weighted by the subset size, so the denominator
    estimates the captured probability mass (1 for the full syndrome set).
    """
    if shots < 1:
        raise ValueError("need at least one shot")
    for g in code.generators:
        if not observable.commutes(g):
            raise ValueError(f"observable {observable} anticommutes with {g}")
    weight = float(len(cfg.syndromes))
    obs_dense = observable.to_dense()
    recoveries = [cfg.table.recovery(s) for s in cfg.syndromes]
    a = np.empty(shots, dtype=np.float64)
    b = np.empty(shots, dtype=np.float64)
    for s in range(shots):
        rng = shot_stream(seed, s)
        r = recoveries[int(rng.integers(len(recoveries)))]
        recovered = r.sandwich(rho.data)
        m, post, _ = _gadget_shot(recovered, code, variant, None, None, rng)
        obs_outcome = _pauli_outcome(post, obs_dense, rng)
        a[s] = weight * m
        b[s] = weight * m * obs_outcome
    return _aggregate(a, b, seed, target_eps, scale=weight)
