import io
import json

import numpy as np
import pytest

from gnsq import instances
from gnsq.stochastic import StochSolverConfig, scheme3_run
from gnsq.trace import Event, TraceRecord, read_jsonl, write_jsonl

FIELDS = [
    "k",
    "f1hat",
    "g1hat_batch",
    "step_norm",
    "prox_grad_norm",
    "L_k",
    "tau_k",
    "eta_k",
    "n_L_probes",
    "batch_indices",
    "event",
    "wall_ns",
]


def test_field_names_are_stable():
    assert list(json.loads(TraceRecord(k=0, f1hat=1.0).to_json())) == FIELDS


def test_round_trip_of_a_full_record():
    rec = TraceRecord(
        k=3,
        f1hat=0.1 + 0.2,
        g1hat_batch=1e-300,
        step_norm=5e-324,
        prox_grad_norm=1.0 / 3.0,
        L_k=2.0**60,
        tau_k=0.7,
        eta_k=1.9,
        n_L_probes=4,
        batch_indices=(2, 5, 9),
        event=Event.STALL,
        wall_ns=123456789,
    )
    assert TraceRecord.from_json(rec.to_json()) == rec


def test_round_trip_of_a_run():
    p = instances.trig_system(5, seed=1, m=9)
    state = scheme3_run(p, StochSolverConfig(b=3, seed=2, max_outer=30, timing=True), np.full(5, 0.5))
    buffer = io.StringIO()
    write_jsonl(state.trace, buffer)
    buffer.seek(0)
    assert list(read_jsonl(buffer)) == state.trace
    assert buffer.getvalue() == state.jsonl()


def test_records_reject_non_finite_residuals():
    with pytest.raises(ValueError):
        TraceRecord(k=0, f1hat=float("nan"))


def test_serialization_refuses_nan_fields():
    with pytest.raises(ValueError):
        TraceRecord(k=0, f1hat=1.0, step_norm=float("nan")).to_json()


def test_unknown_fields_are_rejected():
    with pytest.raises(ValueError):
        TraceRecord.from_dict({"k": 0, "f1hat": 1.0, "extra": 1})


def test_iteration_counter_increases_along_a_run():
    p = instances.trig_system(5, seed=1, m=9)
    state = scheme3_run(p, StochSolverConfig(b=3, seed=2, max_outer=30), np.full(5, 0.5))
    ks = [r.k for r in state.trace]
    assert all(b > a for a, b in zip(ks, ks[1:]))
