"""Edge behaviors: degenerate thresholds, absorbing branches, odd registers."""

import json
import math

import numpy as np
import pytest

from ffgscon.cli import main as cli_main
from ffgscon.fixtures import get_fixture
from ffgscon.harness import CSV_HEADER, build_witnesses, run_lemma_suite
from ffgscon.instances import (
    GsconInstance,
    HamiltonianTerm,
    gate_h,
    gate_i,
    gate_x,
    instance_from_dict,
    instance_to_dict,
    save_instance,
    validate_instance,
)
from ffgscon.ledger import derive_parameters
from ffgscon.states import RegisteredState, RegisterShape
from ffgscon.verifier import run_test
from ffgscon.witnesses import WitnessS, WitnessU, forge_composed


def test_degenerate_eta3_zero_is_perfectly_complete():
    # eta3 = 0: the end test loses its honest slack and c' reaches 1,
    # with no special-casing anywhere in the formulas
    fx = get_fixture("idle")
    base = fx.instance
    inst = GsconInstance(
        n=base.n, m=base.m, terms=base.terms,
        eta2=base.eta2, eta3=0.0, eta4=base.eta4, delta=base.delta,
        psi_circuit=base.psi_circuit, phi_circuit=base.phi_circuit, gate_set=base.gate_set,
    )
    assert validate_instance(inst).ok
    led = derive_parameters(inst)
    assert led.c_prime_deficit == 0
    assert led.c_prime_lower == 1
    assert led.gap_lower > 0
    w = build_witnesses(inst, fx.certificate)
    out = run_test(7, w, inst)
    assert abs(float(out.accept_probability) - 1.0) < 1e-12
    rep = run_lemma_suite(inst, fx.certificate, "idle-eta3-zero")
    assert all(r.passed for r in rep.lemma_rows)


def test_uniform_test_accepts_when_gate_projection_dies():
    # gate register orthogonal to the uniform superposition: the projection
    # fails surely, which is an absorbing accept branch
    fx = get_fixture("idle")
    inst = fx.instance
    two_m, G = 2 * inst.m, inst.G
    row = np.array([1, -1, 0, 0]) / math.sqrt(2)  # (|I> - |X>)/sqrt2 per label
    amps = np.kron(np.full(two_m, 1 / math.sqrt(two_m)), row)
    u = WitnessU(RegisteredState(RegisterShape((two_m, G)), amps))
    w = build_witnesses(inst, fx.certificate)
    out = run_test(3, (u, w[1], w[2], w[3]), inst)
    assert float(out.accept_probability) == 1.0


def test_sequence_test_accepts_when_controlled_branches_cancel():
    # test 5 projects only after applying the encoded gates; with data |+>
    # the I and X branches coincide, so (|I> - |X>)/sqrt2 makes the gate
    # projection fail surely and the absorbing accept branch takes all mass
    fx = get_fixture("idle")
    inst = fx.instance
    two_m, G = 2 * inst.m, inst.G
    row = np.array([1, -1, 0, 0]) / math.sqrt(2)
    u = WitnessU(RegisteredState(RegisterShape((two_m, G)), np.kron(np.full(two_m, 1 / math.sqrt(two_m)), row)))
    plus = np.array([1, 1]) / math.sqrt(2)
    s = WitnessS(RegisteredState(RegisterShape((two_m, 2)), np.kron(np.full(two_m, 1 / math.sqrt(two_m)), plus)))
    out5 = run_test(5, (u, WitnessU(u.state), s, WitnessS(s.state)), inst)
    assert float(out5.accept_probability) == 1.0
    assert dict(out5.trace)["label_match_prob"] is None


def test_padded_gate_register_serializes():
    base = get_fixture("idle").instance
    inst = GsconInstance(
        n=base.n, m=base.m, terms=base.terms,
        eta2=base.eta2, eta3=base.eta3, eta4=base.eta4, delta=base.delta,
        psi_circuit=base.psi_circuit, phi_circuit=base.phi_circuit,
        gate_set=base.gate_set, gate_register_dim=len(base.gate_set) + 3,
    )
    doc = instance_to_dict(inst)
    back = instance_from_dict(doc)
    assert back.gate_register_dim == inst.G == len(base.gate_set) + 3
    assert validate_instance(back).ok


def test_shrunken_gate_register_flagged():
    base = get_fixture("idle").instance
    inst = GsconInstance(
        n=base.n, m=base.m, terms=base.terms,
        eta2=base.eta2, eta3=base.eta3, eta4=base.eta4, delta=base.delta,
        psi_circuit=base.psi_circuit, phi_circuit=base.phi_circuit,
        gate_set=base.gate_set, gate_register_dim=2,
    )
    rep = validate_instance(inst)
    assert any("gate register" in c.name and not c.passed for c in rep.checks)


def test_forge_composed_rejects_empty():
    fx = get_fixture("idle")
    with pytest.raises(ValueError):
        forge_composed(fx.instance, fx.certificate, ())


def test_cli_file_instance_with_certificate(tmp_path, capsys):
    fx = get_fixture("bell-flip")
    path = tmp_path / "bf.json"
    save_instance(fx.instance, path)
    rc = cli_main([
        "verify", str(path), "--certificate", "3", "--mode", "exact",
        "--out", str(tmp_path / "r.json"),
    ])
    assert rc == 0
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["config"]["certificate"] == [3]
    # with the honest certificate every test row accepts perfectly except test 7's slack
    accepts = {row["test_id"]: row["exact_accept"] for row in doc["tests"] if row["section"] == "test"}
    assert float(accepts[1]) == 1.0 and float(accepts[6]) == 1.0
    capsys.readouterr()


def test_cli_lemmas_csv_report(tmp_path, capsys):
    out = tmp_path / "lemmas.csv"
    assert cli_main(["lemmas", "idle", "--out", str(out), "--format", "csv"]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == CSV_HEADER
    lemma_lines = [ln for ln in lines if ln.startswith("lemma,")]
    assert len(lemma_lines) == 8
    assert all(";pass;" in ln or ln.endswith("pass;") or ";pass" in ln for ln in lemma_lines)
    capsys.readouterr()


def test_cli_non_closed_gate_set_exits_one(tmp_path, capsys):
    from ffgscon.instances import gate_ry

    inst = GsconInstance(
        n=1, m=1, terms=(HamiltonianTerm(np.diag([0.0, 1.0]), (0,)),),
        eta2=0.5, eta3=0.25, eta4=0.75, delta=0.25,
        psi_circuit=(), phi_circuit=(), gate_set=(gate_ry(0.3, 0), gate_ry(0.9, 0)),
    )
    path = tmp_path / "open.json"
    save_instance(inst, path)
    assert cli_main(["lemmas", str(path)]) == 1
    assert "adjoint" in capsys.readouterr().err


def test_cli_malformed_instance_file_exits_one(tmp_path, capsys):
    path = tmp_path / "junk.json"
    path.write_text("{nope")
    assert cli_main(["validate", str(path)]) == 1
    capsys.readouterr()


def test_validation_failure_exit_code_on_lemmas(tmp_path, capsys):
    bad = GsconInstance(
        n=1, m=1, terms=(HamiltonianTerm(np.diag([0.0, 1.0]), (0,)),),
        eta2=0.5, eta3=0.25, eta4=0.75, delta=0.25,
        psi_circuit=(gate_x(0),),  # excited start state
        phi_circuit=(), gate_set=(gate_i(0), gate_x(0), gate_h(0)),
    )
    path = tmp_path / "bad.json"
    save_instance(bad, path)
    assert cli_main(["lemmas", str(path)]) == 1
    capsys.readouterr()


def test_cli_reports_byte_identical_across_processes(tmp_path):
    import subprocess
    import sys

    outs = []
    for k, workers in enumerate((1, 3)):
        out = tmp_path / f"rep{k}.json"
        cmd = [
            sys.executable, "-m", "ffgscon.cli", "verify", "idle",
            "--mode", "both", "--trials", "8000", "--seed", "77",
            "--workers", str(workers), "--out", str(out),
        ]
        res = subprocess.run(cmd, capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
