"""The eight verification tests, the dispatching round, and the product test.

Exact mode computes acceptance by analytic branch summation over measurement
outcomes; nothing is ever estimated by averaging samples.  Accept and reject
masses are accumulated through *separate* branch sums so that rejection
probabilities far below double resolution of 1 survive (an acceptance of
1 - 1e-70 rounds to 1.0, but its rejection branch sum is a healthy 1e-70).

Sampled mode realizes one branch of the same tree per shot, drawing from a
counter-based stream, so exact and sampled modes share a single source of
branch probabilities.

Where a projection can fail, failure is an absorbing *accept* branch
contributing its full probability mass (tests 3 and 5); the sequence test's
label uncompute step is a pure bookkeeping contraction because the two label
registers are perfectly correlated after the equal-label projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .instances import GsconInstance, energy_of, prepare_state_from_circuit
from .states import (
    RegisteredState,
    RegisterShape,
    ShapeMismatchError,
    _apply_matrix_axes,
    conditional_state,
    project_onto,
    projection_deficit,
    register_distribution,
    swap_test_reject_prob,
    tensor_with,
    uniform_vector,
)
from .witnesses import WITNESS_DPS, ForgedWitnesses, WitnessS, WitnessU

MODE_EXACT = "exact"
MODE_SAMPLED = "sampled"

TEST_NAMES = {
    1: "swap-u",
    2: "unique",
    3: "uniform",
    4: "swap-s",
    5: "sequence",
    6: "start",
    7: "end",
    8: "low",
}


@dataclass(frozen=True)
class TestOutcome:
    test_id: object  # 1..8, "ROUND" or "PRODUCT"
    mode: str
    accept_probability: object | None = None  # float or mpf, exact mode
    reject_probability: object | None = None
    verdict: str | None = None  # "accept" / "reject", sampled mode
    trace: tuple = ()
    seed: int | None = None
    trial: int | None = None

    def __post_init__(self):
        if self.accept_probability is not None:
            if not -1e-9 <= float(self.accept_probability) <= 1 + 1e-9:
                raise ValueError(f"acceptance probability {self.accept_probability} outside [0, 1]")

    @property
    def accepted(self) -> bool | None:
        return None if self.verdict is None else self.verdict == "accept"

    def record(self) -> str:
        """One-line serialization: id, mode, probabilities/verdict, seed, trace."""

        def fmt(v):
            if v is None:
                return "-"
            if isinstance(v, mpmath.mpf):
                return mpmath.nstr(v, 17)
            return repr(v) if isinstance(v, float) else str(v)

        trace = ";".join(f"{k}={fmt(v)}" for k, v in self.trace) or "-"
        return (
            f"test={self.test_id} mode={self.mode} accept={fmt(self.accept_probability)} "
            f"reject={fmt(self.reject_probability)} verdict={fmt(self.verdict)} "
            f"seed={fmt(self.seed)} trial={fmt(self.trial)} trace={trace}"
        )


def _unpack(witnesses) -> tuple[WitnessU, WitnessU, WitnessS, WitnessS]:
    if isinstance(witnesses, ForgedWitnesses):
        return witnesses.as_tuple()
    u, up, s, sp = witnesses
    return u, up, s, sp


def _outcome(test_id, mode, accept, reject, verdict=None, trace=(), stream=None):
    seed = getattr(stream, "seed", None) if stream is not None else None
    trial = getattr(stream, "trial", None) if stream is not None else None
    return TestOutcome(test_id, mode, accept, reject, verdict, tuple(trace), seed, trial)


def _verdict(accepted: bool) -> str:
    return "accept" if accepted else "reject"


# ---------------------------------------------------------------------------
# tests 1 and 4: swap consistency
# ---------------------------------------------------------------------------


def _swap_test(test_id, a: RegisteredState, b: RegisteredState, mode, stream):
    q = swap_test_reject_prob(a, b)
    if mode == MODE_EXACT:
        return _outcome(test_id, mode, 1 - q, q, trace=(("swap_reject", q),))
    rejected = stream.bernoulli(float(q))
    return _outcome(test_id, mode, None, None, _verdict(not rejected), (("swap_reject", float(q)),), stream)


def test1_swap_u(witnesses, inst, *, mode=MODE_EXACT, stream=None) -> TestOutcome:
    u, up, _, _ = _unpack(witnesses)
    return _swap_test(1, u.state, up.state, mode, stream)


def test4_swap_s(witnesses, inst, *, mode=MODE_EXACT, stream=None) -> TestOutcome:
    _, _, s, sp = _unpack(witnesses)
    return _swap_test(4, s.state, sp.state, mode, stream)


# ---------------------------------------------------------------------------
# test 2: label/gate measurements agree and decode
# ---------------------------------------------------------------------------


def _unique_reject_prob(u: WitnessU, up: WitnessU, inst: GsconInstance):
    """Branch sum over joint outcomes; never formed as 1 - accept."""
    pa = u.outcome_probabilities()
    pb = up.outcome_probabilities()
    n_set = len(inst.gate_set)
    G = inst.G
    reject = 0.0
    for i in range(u.label_dim):
        for g in range(G):
            for g2 in range(G):
                if g != g2 or g >= n_set:
                    reject = reject + pa[i, g] * pb[i, g2]
    return reject


def test2_unique(witnesses, inst, *, mode=MODE_EXACT, stream=None) -> TestOutcome:
    u, up, _, _ = _unpack(witnesses)
    if mode == MODE_EXACT:
        rej = _unique_reject_prob(u, up, inst)
        return _outcome(2, mode, 1 - rej, rej, trace=(("joint_mismatch", rej),))
    pa = np.asarray(u.outcome_probabilities(), dtype=np.float64).ravel()
    pb = np.asarray(up.outcome_probabilities(), dtype=np.float64).ravel()
    fa = stream.choice(pa)
    fb = stream.choice(pb)
    G = inst.G
    la, ga = divmod(fa, G)
    lb, gb = divmod(fb, G)
    ok = la != lb or (ga == gb and ga < len(inst.gate_set))
    trace = (("labels", (la, lb)), ("gates", (ga, gb)))
    return _outcome(2, mode, None, None, _verdict(ok), trace, stream)


# ---------------------------------------------------------------------------
# test 3: uniform gate register, then uniform labels
# ---------------------------------------------------------------------------


def _uniform_branch_probs(u: WitnessU, inst: GsconInstance):
    gbar = uniform_vector(inst.G, extended=u.state.extended)
    p_gbar, post = project_onto(u.state, 1, gbar)
    if post is None:
        return p_gbar, None
    lbar = uniform_vector(u.label_dim, extended=u.state.extended)
    q_label = projection_deficit(post, 0, lbar)
    return p_gbar, q_label


def test3_uniform(witnesses, inst, *, mode=MODE_EXACT, stream=None) -> TestOutcome:
    u, _, _, _ = _unpack(witnesses)
    p_gbar, q_label = _uniform_branch_probs(u, inst)
    trace = (("gate_uniform_prob", p_gbar), ("label_nonuniform_prob", q_label))
    if mode == MODE_EXACT:
        if q_label is None:
            return _outcome(3, mode, 1.0, 0.0, trace=trace)
        rej = p_gbar * q_label
        return _outcome(3, mode, 1 - rej, rej, trace=trace)
    if not stream.bernoulli(float(p_gbar)):
        return _outcome(3, mode, None, None, "accept", (("gate_projection", "failed, accept"),), stream)
    rejected = q_label is not None and stream.bernoulli(float(q_label))
    return _outcome(3, mode, None, None, _verdict(not rejected), trace, stream)


# ---------------------------------------------------------------------------
# test 5: probabilistic shift-and-gate, then swap against the second copy
# ---------------------------------------------------------------------------


def _sequence_branch_probs(u: WitnessU, s: WitnessS, sp: WitnessS, inst: GsconInstance):
    """(gate-projection prob, label-match prob, final swap reject prob).

    Later entries are None when an earlier projection has no surviving mass.
    For honest witnesses the joint projection success is exactly 1/(2mG):
    1/G for the gate projection times 1/(2m) for the label match.
    """
    if u.state.extended != s.state.extended or s.state.extended != sp.state.extended:
        raise ShapeMismatchError("witnesses must share one precision level")
    ext = u.state.extended
    joint = tensor_with(u.state, s.state)  # (2m, G, 2m, 2 ... 2)
    t = np.array(joint.as_tensor(), copy=True)
    n_set = len(inst.gate_set)
    for g in range(min(inst.G, n_set)):  # out-of-set encodings act as identity
        gate = inst.gate_set[g]
        axes = tuple(2 + tq for tq in gate.targets)  # sliced layout: (2m, 2m, data...)
        t[:, g] = _apply_matrix_axes(t[:, g], gate.matrix, axes)
    controlled = RegisteredState(joint.shape, t.ravel(), check=False)

    gbar = uniform_vector(inst.G, extended=ext)
    p_gate, post = project_onto(controlled, 1, gbar)
    if post is None:
        return p_gate, None, None, None
    # drop the gate register (it is exactly |gbar> after the projection)
    reduced = np.tensordot(np.conj(gbar), post.as_tensor(), axes=([0], [1]))  # (2m, 2m, data...)

    two_m = u.label_dim
    diag = np.array([reduced[i, i] for i in range(two_m)])  # (2m, data...)
    p_label = (np.abs(diag) ** 2).sum()
    if float(p_label) < 1e-15:
        return p_gate, p_label, None, None
    diag = diag / (mpmath.sqrt(p_label) if ext else math.sqrt(p_label))
    shifted = np.roll(diag, 1, axis=0)  # cyclic label shift, 2m -> 1
    t_prime = RegisteredState(RegisterShape((two_m,) + (2,) * inst.n), shifted.ravel(), check=False)
    q_swap = swap_test_reject_prob(t_prime, sp.state)
    return p_gate, p_label, q_swap, t_prime


def test5_sequence(witnesses, inst, *, mode=MODE_EXACT, stream=None) -> TestOutcome:
    u, _, s, sp = _unpack(witnesses)
    p_gate, p_label, q_swap, _ = _sequence_branch_probs(u, s, sp, inst)
    trace = (("gate_projection_prob", p_gate), ("label_match_prob", p_label), ("swap_reject", q_swap))
    if mode == MODE_EXACT:
        if p_label is None or q_swap is None:
            return _outcome(5, mode, 1.0, 0.0, trace=trace)
        rej = p_gate * p_label * q_swap
        return _outcome(5, mode, 1 - rej, rej, trace=trace)
    if not stream.bernoulli(float(p_gate)):
        return _outcome(5, mode, None, None, "accept", (("gate_projection", "failed, accept"),), stream)
    if p_label is None or not stream.bernoulli(float(p_label)):
        return _outcome(5, mode, None, None, "accept", (("label_projection", "failed, accept"),), stream)
    rejected = q_swap is not None and stream.bernoulli(float(q_swap))
    return _outcome(5, mode, None, None, _verdict(not rejected), trace, stream)


# ---------------------------------------------------------------------------
# tests 6 and 7: boundary states
# ---------------------------------------------------------------------------


def _boundary_branch_probs(s: WitnessS, inst: GsconInstance, which: str):
    target = 0 if which == "psi" else inst.m
    probs = register_distribution(s.state, 0)
    p_label = probs[target]
    if float(p_label) < 1e-15:
        return target, p_label, None
    _, data = conditional_state(s.state, 0, target, drop=True)
    anchor = prepare_state_from_circuit(inst, which, extended=s.state.extended)
    return target, p_label, swap_test_reject_prob(data, anchor)


def _boundary_test(test_id, which, s, inst, mode, stream):
    target, p_label, q = _boundary_branch_probs(s, inst, which)
    trace = (("label_prob", p_label), ("swap_reject", q))
    if mode == MODE_EXACT:
        if q is None:
            return _outcome(test_id, mode, 1.0, 0.0, trace=trace)
        rej = p_label * q
        return _outcome(test_id, mode, 1 - rej, rej, trace=trace)
    probs = np.clip(np.asarray(register_distribution(s.state, 0), dtype=np.float64), 0, 1)
    lab = stream.choice(probs)
    if lab != target:
        return _outcome(test_id, mode, None, None, "accept", (("label", lab),), stream)
    rejected = q is not None and stream.bernoulli(float(q))
    return _outcome(test_id, mode, None, None, _verdict(not rejected), (("label", lab), ("swap_reject", q)), stream)


def test6_start(witnesses, inst, *, mode=MODE_EXACT, stream=None) -> TestOutcome:
    _, _, s, _ = _unpack(witnesses)
    return _boundary_test(6, "psi", s, inst, mode, stream)


def test7_end(witnesses, inst, *, mode=MODE_EXACT, stream=None) -> TestOutcome:
    _, _, s, _ = _unpack(witnesses)
    return _boundary_test(7, "phi", s, inst, mode, stream)


# ---------------------------------------------------------------------------
# test 8: energy of a random sequence entry
# ---------------------------------------------------------------------------


def _low_energy_table(s: WitnessS, inst: GsconInstance):
    """(label probabilities, per-label energies). reject = sum p_i E_i / R."""
    probs = register_distribution(s.state, 0)
    energies = []
    for i in range(s.label_dim):
        p, data = conditional_state(s.state, 0, i, drop=True)
        energies.append(0.0 if data is None else energy_of(inst, data))
    return probs, energies


def test8_low(witnesses, inst, *, mode=MODE_EXACT, stream=None) -> TestOutcome:
    _, _, s, _ = _unpack(witnesses)
    probs, energies = _low_energy_table(s, inst)
    rej = sum(p * e for p, e in zip(probs, energies)) / inst.R
    trace = (("mean_energy_over_R", rej),)
    if mode == MODE_EXACT:
        return _outcome(8, mode, 1 - rej, rej, trace=trace)
    lab = stream.choice(np.clip(np.asarray(probs, dtype=np.float64), 0, 1))
    term = min(int(stream.uniform() * inst.R), inst.R - 1)
    _, data = conditional_state(s.state, 0, int(lab), drop=True)
    if data is None:
        return _outcome(8, mode, None, None, "accept", (("label", lab),), stream)
    t = data.as_tensor()
    hterm = inst.terms[term]
    p_term = float((np.conj(t) * _apply_matrix_axes(t, hterm.matrix, hterm.support)).sum().real)
    rejected = stream.bernoulli(min(max(p_term, 0.0), 1.0))
    return _outcome(8, mode, None, None, _verdict(not rejected), (("label", lab), ("term", term)), stream)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

TEST_FUNCTIONS = {
    1: test1_swap_u,
    2: test2_unique,
    3: test3_uniform,
    4: test4_swap_s,
    5: test5_sequence,
    6: test6_start,
    7: test7_end,
    8: test8_low,
}


def run_test(test_id: int, witnesses, inst, *, mode=MODE_EXACT, stream=None) -> TestOutcome:
    if mode == MODE_SAMPLED and stream is None:
        raise ValueError("sampled mode needs a counter stream")
    parts = _unpack(witnesses)
    if any(w.state.extended for w in parts):
        # extended amplitudes carry WITNESS_DPS digits; arithmetic must too,
        # or the branch sums measure rounding noise instead of the deviation
        with mpmath.workdps(max(mpmath.mp.dps, WITNESS_DPS)):
            return TEST_FUNCTIONS[test_id](witnesses, inst, mode=mode, stream=stream)
    return TEST_FUNCTIONS[test_id](witnesses, inst, mode=mode, stream=stream)


def run_protocol_round(witnesses, inst, ledger, *, mode=MODE_EXACT, stream=None) -> TestOutcome:
    """One verifier round: pick test i with probability p_i, run it.

    Exact mode returns the total acceptance sum(p_i * a_i) in the ledger's
    extended precision, with the per-test exact probabilities in the trace.
    """
    if mode == MODE_EXACT:
        with mpmath.workdps(max(mpmath.mp.dps, 120)):
            # sum(p_i a_i) evaluated through its complement 1 - sum(p_i rej_i):
            # the rejection side is a sum of small positives and stays exact
            # where the acceptance side would round to 1.
            total_rej = mpmath.mpf(0)
            trace = []
            for i in range(1, 9):
                out = run_test(i, witnesses, inst, mode=MODE_EXACT)
                total_rej += ledger.p[i - 1] * mpmath.mpf(out.reject_probability)
                trace.append((f"accept_{i}", out.accept_probability))
                trace.append((f"reject_{i}", out.reject_probability))
            return _outcome("ROUND", MODE_EXACT, 1 - total_rej, total_rej, trace=tuple(trace))
    pick = stream.choice(ledger.p_float())
    out = run_test(pick + 1, witnesses, inst, mode=MODE_SAMPLED, stream=stream)
    return _outcome("ROUND", MODE_SAMPLED, None, None, out.verdict, (("test", pick + 1),) + out.trace, stream)


# ---------------------------------------------------------------------------
# product test over two composite witnesses
# ---------------------------------------------------------------------------


def product_test(composite_a, composite_b, *, mode=MODE_EXACT, stream=None) -> TestOutcome:
    """Pairwise swap tests between corresponding parts of two 4-part products.

    Accept iff all four part-wise swap tests accept; exact probability is the
    product of the four (1 + overlap^2)/2 factors.  Only product-form inputs
    (explicit 4-tuples of states) are supported; a jointly entangled composite
    is outside the desk-scale exact path.
    """
    parts_a = [w.state if hasattr(w, "state") else w for w in composite_a]
    parts_b = [w.state if hasattr(w, "state") else w for w in composite_b]
    if len(parts_a) != 4 or len(parts_b) != 4:
        raise ShapeMismatchError("product test expects two 4-part composites")
    rejects = []
    for a, b in zip(parts_a, parts_b):
        if a.shape.dims != b.shape.dims:
            raise ShapeMismatchError(f"component layouts differ: {a.shape.dims} vs {b.shape.dims}")
        rejects.append(swap_test_reject_prob(a, b))
    trace = tuple((f"swap_reject_{k+1}", q) for k, q in enumerate(rejects))
    if mode == MODE_EXACT:
        accept = 1
        for q in rejects:
            accept = accept * (1 - q)
        return _outcome("PRODUCT", mode, accept, 1 - accept, trace=trace)
    ok = all(not stream.bernoulli(float(q)) for q in rejects)
    return _outcome("PRODUCT", mode, None, None, _verdict(ok), trace, stream)
