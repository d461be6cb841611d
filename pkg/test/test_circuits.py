import numpy as np
import pytest
import stim

from amc_codes.circuits import (
    MOMENTS,
    X_TYPE,
    Z_TYPE,
    Cycle,
    RoundSchedule,
    apply_error_model,
    build_memory_circuit,
    build_round,
    data_qubits,
    divides_all,
    drop_order,
    dropped_matrices,
    from_text,
    noise_sites,
    round_matrices,
    schedule_is_valid,
    to_text,
)
from amc_codes.exceptions import ParseError
from amc_codes.gf2 import rank
from amc_codes.search import REFERENCE_TABLE, build_table_row


def sample_detectors(circuit, shots=32):
    return circuit.compile_detector_sampler(seed=1).sample(shots, separate_observables=True)


def test_cycle_parse_and_drops():
    assert Cycle.parse("1212").drops == (1, 2, 1, 2)
    assert Cycle.parse(Cycle.C1111) is Cycle.C1111
    assert Cycle.C1234.drop_for(5) == 2
    with pytest.raises(ValueError, match="unsupported cycle"):
        Cycle.parse("1313")


def test_dropped_matrices_shapes_and_d_blocks(code_42):
    hx_r, hz_r, permutation = dropped_matrices(code_42, 1)
    assert hx_r.shape == (21, 42)
    assert hz_r.shape == (21, 42)
    assert sorted(permutation.tolist()) == list(range(42))
    d_block = code_42.source.elements[3].regular_rep().to_dense()
    dense = hx_r.to_dense()
    for i in range(3):
        assert np.array_equal(dense[7 * i:7 * (i + 1), 7 * i:7 * (i + 1)], d_block)


@pytest.mark.parametrize("drop", [1, 2, 3, 4])
def test_build_round_is_a_valid_measurement(code_42, drop):
    schedule = build_round(code_42, drop)
    assert len(schedule) == MOMENTS
    assert len(schedule.gates()) == 2 * 21 * 6
    assert all(len(moment) == 42 for moment in schedule.moments)
    assert schedule_is_valid(schedule, code_42.hx, code_42.hz)


def test_schedule_missing_a_gate_is_invalid(code_42):
    schedule = build_round(code_42, 1)
    moments = [schedule.moments[0][1:]] + list(schedule.moments[1:])
    broken = RoundSchedule(1, moments, schedule.x_rows, schedule.z_rows)
    assert not schedule_is_valid(broken, code_42.hx, code_42.hz)


def test_schedule_with_two_gates_on_one_qubit_is_invalid(code_42):
    schedule = build_round(code_42, 1)
    first = list(schedule.moments[0])
    kind, row, q = first[0]
    first.append((kind, row + 1, q))
    broken = RoundSchedule(1, [tuple(first)] + list(schedule.moments[1:]), schedule.x_rows, schedule.z_rows)
    assert not schedule_is_valid(broken, code_42.hx, code_42.hz)


def test_round_matrices_keep_three_block_rows(code_42):
    hx_r, hz_r = round_matrices(code_42, 2)
    assert hx_r.shape == hz_r.shape == (21, 42)


CYCLIC_ROWS = [row for row in REFERENCE_TABLE if row.exponents is not None and row.ell != 30]


@pytest.mark.parametrize("row", CYCLIC_ROWS, ids=lambda row: row.label)
def test_dropped_rounds_keep_full_rank(row):
    code = build_table_row(row)
    elements = code.source.elements
    order = drop_order(code)
    assert sorted(order) == [0, 1, 2, 3]
    assert divides_all(elements, order[0])
    full_x, full_z = rank(code.hx), rank(code.hz)
    for drop in range(1, 5):
        if drop > 1 and not divides_all(elements, order[drop - 1]):
            continue
        hx_r, hz_r, _ = dropped_matrices(code, drop)
        assert (rank(hx_r), rank(hz_r)) == (full_x, full_z), f"drop {drop}"


def test_drop_order_moves_a_dividing_element_into_the_first_drop():
    code = build_table_row(next(row for row in REFERENCE_TABLE if row.ell == 14))
    # 1+x^2 and 1+x^6 both share (1+x)^2 with x^14 + 1; 1+x and 1+x^5 only 1+x
    assert [divides_all(code.source.elements, i) for i in range(4)] == [True, False, True, False]
    assert drop_order(code) == (2, 3, 1, 0)


def test_drop_order_keeps_the_natural_order_when_the_last_element_divides(code_42):
    assert drop_order(code_42) == (3, 2, 1, 0)


def test_drop_order_warns_without_a_dividing_element(caplog):
    code = build_table_row(next(row for row in REFERENCE_TABLE if row.ell == 30))
    assert drop_order(code) == (3, 2, 1, 0)
    assert "lose rank" in caplog.text


def test_cycle_1111_round_one_syndrome_map_is_full_rank(code_42):
    hx_r, hz_r = round_matrices(code_42, Cycle.C1111.drop_for(0))
    assert rank(hx_r) == rank(code_42.hx)
    assert rank(hz_r) == rank(code_42.hz)


def test_circuits_need_a_level_two_d4_code(small_code):
    with pytest.raises(ValueError, match="D=4"):
        build_round(small_code, 1)


@pytest.mark.parametrize("cycle", ["1111", "1212", "1234"])
@pytest.mark.parametrize("basis, coupling", [("Z", "cx"), ("X", "cx"), ("Z", "xcx")])
def test_noiseless_memory_circuit_has_deterministic_detectors(code_42, cycle, basis, coupling):
    circuit = build_memory_circuit(code_42, cycle, basis, rounds=5, x_check_coupling=coupling)
    dets, obs = sample_detectors(circuit)
    assert circuit.num_observables == 6
    assert not dets.any()
    assert not obs.any()


def test_memory_circuit_detector_count_for_repeated_drop(code_42):
    circuit = build_memory_circuit(code_42, "1111", "Z", rounds=3)
    # 21 absolute Z detectors, 42 comparisons, 28 final
    assert circuit.num_detectors == 21 + 42 + 28
    assert circuit.num_qubits == 42 + 28 + 28


def test_memory_circuit_detector_coordinates_count_rounds(code_42):
    circuit = build_memory_circuit(code_42, "1212", "Z", rounds=4)
    coords = circuit.get_detector_coordinates()
    rounds = {c[0] for c in coords.values()}
    types = {c[1] for c in coords.values()}
    assert rounds == {1, 2, 3, 4}
    assert types == {Z_TYPE, X_TYPE}


def test_memory_circuit_rejects_bad_arguments(code_42):
    with pytest.raises(ValueError):
        build_memory_circuit(code_42, basis="Y")
    with pytest.raises(ValueError):
        build_memory_circuit(code_42, x_check_coupling="cz")
    with pytest.raises(ValueError):
        build_memory_circuit(code_42, rounds=1)


def test_data_qubits_from_coordinates(code_42):
    circuit = build_memory_circuit(code_42, rounds=2)
    assert data_qubits(circuit) == list(range(42))


def test_apply_error_model_with_zero_noise_is_a_copy(code_42):
    circuit = build_memory_circuit(code_42, rounds=2)
    noisy = apply_error_model(circuit, 0)
    assert noisy == circuit
    assert noisy is not circuit


def test_apply_error_model_rejects_invalid_probabilities(code_42):
    circuit = build_memory_circuit(code_42, rounds=2)
    for p in (-0.1, 1.0):
        with pytest.raises(ValueError):
            apply_error_model(circuit, p)


def test_apply_error_model_rejects_repeat_blocks():
    circuit = stim.Circuit("REPEAT 2 {\n    H 0\n}")
    with pytest.raises(ValueError, match="REPEAT"):
        apply_error_model(circuit, 0.01)


@pytest.mark.parametrize("coupling, x_errors, z_errors", [("xcx", 4, 0), ("cx", 2, 2)])
def test_apply_error_model_noise_locations(code_42, coupling, x_errors, z_errors):
    rounds = 3
    circuit = build_memory_circuit(code_42, "1111", "Z", rounds=rounds, x_check_coupling=coupling)
    counts = noise_sites(apply_error_model(circuit, 0.001))
    assert counts["DEPOLARIZE1"] == 42 * rounds
    assert counts["DEPOLARIZE2"] == 2 * 2 * 21 * 6 * (rounds - 1)
    # bit flips around Z-basis measure-resets, phase flips around X-basis ones
    assert counts.get("X_ERROR", 0) == x_errors * 21 * (rounds - 1)
    assert counts.get("Z_ERROR", 0) == z_errors * 21 * (rounds - 1)


def test_default_x_check_coupling_uses_xcx_gates(code_42):
    circuit = build_memory_circuit(code_42, rounds=2)
    names = {instruction.name for instruction in circuit.flattened()}
    assert "XCX" in names and "MRX" not in names


def test_to_text_and_from_text(code_42):
    circuit = build_memory_circuit(code_42, rounds=2)
    assert from_text(to_text(circuit)) == circuit
    with pytest.raises(ParseError):
        from_text("NOT_A_GATE 0")
