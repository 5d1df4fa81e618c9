import json

import numpy as np
import pytest

from relim.core import ActionSpace, ContextSpace, InputError, RegressorClass
from relim.harness.diagnostics import (
    diag_lemma3,
    diag_lemma4,
    exact_regret_sq,
    random_triple,
    run_diagnostics,
)
from relim.instances import Instance, random_nontrivial


def enumerate_moments(instance, f_index, table):
    """Exact E[Y], E[(f - f*)^2], Var[Y] by summing over (x, a, r)."""
    f = instance.regressors.tables[f_index]
    fs = instance.means
    m1 = m2 = gap = 0.0
    for x, wx in enumerate(instance.contexts.weights):
        for a in range(instance.K):
            pa = wx * table[x, a]
            if pa == 0:
                continue
            gap += pa * (f[x, a] - fs[x, a]) ** 2
            for r, pr in ((1.0, fs[x, a]), (0.0, 1 - fs[x, a])):
                y = (f[x, a] - r) ** 2 - (fs[x, a] - r) ** 2
                m1 += pa * pr * y
                m2 += pa * pr * y * y
    return m1, gap, m2 - m1 * m1


def _half_instance():
    tables = np.array([[[0.5, 0.5]], [[1.0, 0.5]]])
    return Instance(ContextSpace.uniform(1), ActionSpace(2), RegressorClass(tables), truth_index=0)


def test_enumeration_case_one_eighth():
    inst = _half_instance()
    uniform = np.array([[0.5, 0.5]])
    m1, gap, _ = enumerate_moments(inst, 1, uniform)
    assert m1 == 0.125 and gap == 0.125
    rep = diag_lemma3(inst, 1, uniform, 100_000, np.random.default_rng(0))
    assert abs(rep.mean_Y - 0.125) <= 3 * rep.se_Y
    assert abs(rep.mean_sq_gap - 0.125) <= 3 * rep.se_sq_gap + 1e-12
    assert not rep.identity_flag and not rep.variance_flag


def test_truth_gives_identically_zero_Y():
    inst = _half_instance()
    rep = diag_lemma3(inst, 0, np.array([[0.3, 0.7]]), 2000, np.random.default_rng(0))
    assert rep.mean_Y == 0.0 and rep.var_Y == 0.0 and rep.se_Y == 0.0
    rep = diag_lemma4(inst, 0, np.array([[0.5, 0.5]]), 2000, np.random.default_rng(0))
    assert rep.regret_sq == 0.0 and not rep.transfer_flag


def test_sample_count_and_index_checks():
    inst = _half_instance()
    with pytest.raises(InputError):
        diag_lemma3(inst, 1, np.array([[0.5, 0.5]]), 999, np.random.default_rng(0))
    with pytest.raises(InputError):
        diag_lemma3(inst, 2, np.array([[0.5, 0.5]]), 1000, np.random.default_rng(0))
    with pytest.raises(InputError):
        diag_lemma3(inst, 1, np.array([[0.6, 0.6]]), 1000, np.random.default_rng(0))


def test_lemma4_audit_rejects_starved_exploration():
    inst = _half_instance()
    # pi_f = action 0 gets probability 0.1 -> E[1/p] = 10 > K = 2
    with pytest.raises(InputError, match="exceeds K"):
        diag_lemma4(inst, 1, np.array([[0.1, 0.9]]), 2000, np.random.default_rng(0))


@pytest.mark.parametrize("index", range(8))
def test_monte_carlo_agrees_with_enumeration(index):
    inst, f, table, rng = random_triple(5, index, "lemma3")
    m1, gap, var = enumerate_moments(inst, f, table)
    assert m1 == pytest.approx(gap, abs=1e-12)  # the identity itself, exactly
    assert var <= 4 * m1 + 1e-12
    rep = diag_lemma3(inst, f, table, 50_000, rng)
    assert abs(rep.mean_Y - m1) <= 4 * rep.se_Y + 1e-12


def test_exact_regret_sq():
    tables = np.array([[[0.6, 0.4], [0.5, 0.5]], [[0.1, 0.9], [0.5, 0.5]]])
    inst = Instance(ContextSpace.uniform(2), ActionSpace(2), RegressorClass(tables), truth_index=0)
    assert exact_regret_sq(inst, 1) == pytest.approx(0.01)


def test_nontrivial_uniform_over_active_exploration():
    inst = random_nontrivial(4, 5, 2, 20)
    pols = inst.regressors.argmax_policy
    table = np.zeros((inst.num_contexts, inst.K))
    for x in range(inst.num_contexts):
        acts = np.unique(pols[:, x])
        table[x, acts] = 1 / acts.size
    f = (inst.truth_index + 1) % inst.N
    rep = diag_lemma4(inst, f, table, 20_000, np.random.default_rng(0))
    assert not rep.transfer_flag
    assert enumerate_moments(inst, f, table)[0] >= 1 / 20


def test_symmetric_pair_transfer():
    tables = np.array([[[0.7, 0.3]], [[0.3, 0.7]]])
    inst = Instance(ContextSpace.uniform(1), ActionSpace(2), RegressorClass(tables), truth_index=0)
    rep = diag_lemma4(inst, 1, np.array([[0.5, 0.5]]), 20_000, np.random.default_rng(1))
    assert rep.regret_sq == pytest.approx(0.16)
    assert rep.regret_sq <= rep.transfer_rhs and not rep.transfer_flag


def test_run_diagnostics_writes_report(tmp_path):
    out = tmp_path / "d.json"
    summary = run_diagnostics("lemma4", 3, 2000, master_seed=1, out_path=out)
    on_disk = json.loads(out.read_text())
    assert on_disk["triples"] == 3 and len(on_disk["reports"]) == 3
    assert summary["transfer_flags"] == on_disk["transfer_flags"]
    with pytest.raises(InputError):
        run_diagnostics("lemma9", 1, 2000)
