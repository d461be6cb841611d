import math

import numpy as np
import pytest
import stim

from amc_codes.analysis import INFINITE
from amc_codes.circuits import X_TYPE, Z_TYPE, apply_error_model, build_memory_circuit
from amc_codes.dem import DetectorErrorModel, Fault, circuit_distance, combine, extract_dem
from amc_codes.exceptions import InvariantError, ParseError


@pytest.fixture(scope="module")
def noisy_42(code_42):
    return apply_error_model(build_memory_circuit(code_42, "1212", "Z", rounds=3), 0.001)


@pytest.fixture(scope="module")
def dem_42(noisy_42):
    return extract_dem(noisy_42)


def test_combine_is_xor_probability():
    assert combine(0.1, 0.2) == pytest.approx(0.1 * 0.8 + 0.2 * 0.9)
    assert combine(0.0, 0.3) == 0.3


def test_identical_signatures_merge_and_empty_ones_vanish():
    dem = DetectorErrorModel([
        Fault(0.1, (1, 0), ()),
        Fault(0.2, (0, 1), ()),
        Fault(0.3, (), ()),
        Fault(0.05, (2,), (0,)),
    ], num_detectors=3, num_observables=1)
    assert len(dem) == 2
    assert dem.faults[0].signature == ((0, 1), ())
    assert dem.faults[0].probability == pytest.approx(combine(0.1, 0.2))
    assert dem.faults[1].observables == (0,)


def test_tiny_probabilities_are_pruned():
    dem = DetectorErrorModel([Fault(1e-20, (0,), ()), Fault(0.01, (1,), ())], 2, 0)
    assert [f.detectors for f in dem] == [(1,)]


def test_faults_are_validated():
    with pytest.raises(ValueError, match="repeats"):
        DetectorErrorModel([Fault(0.1, (0, 0), ())], 1, 0)
    with pytest.raises(ValueError, match="out of range"):
        DetectorErrorModel([Fault(0.1, (3,), ())], 2, 0)


def test_check_matrices():
    dem = DetectorErrorModel([Fault(0.1, (0, 2), (0,)), Fault(0.2, (1,), ())], 3, 1)
    H, L = dem.check_matrices()
    assert H.toarray().tolist() == [[1, 0], [0, 1], [1, 0]]
    assert L.toarray().tolist() == [[1, 0]]


def test_noiseless_circuit_has_empty_model(code_42):
    dem = extract_dem(build_memory_circuit(code_42, rounds=2))
    assert len(dem) == 0
    assert circuit_distance(dem).value == INFINITE


def test_extract_dem_reports_non_deterministic_detectors():
    circuit = stim.Circuit("H 0\nX_ERROR(0.1) 0\nM 0\nDETECTOR rec[-1]")
    with pytest.raises(InvariantError):
        extract_dem(circuit)


def test_extracted_model_has_coordinates_and_observables(dem_42, noisy_42):
    assert dem_42.num_detectors == noisy_42.num_detectors
    assert dem_42.num_observables == 6
    assert set(dem_42.detector_rounds().tolist()) == {1, 2, 3}
    assert set(dem_42.detector_types().tolist()) == {Z_TYPE, X_TYPE}
    assert all(0 < f.probability < 0.5 for f in dem_42)
    assert all(f.detectors or f.observables for f in dem_42)


def test_restrict_keeps_one_check_type(dem_42):
    restricted = dem_42.restrict(Z_TYPE)
    kept = int((dem_42.detector_types() == Z_TYPE).sum())
    assert restricted.num_detectors == kept
    assert set(restricted.detector_types().tolist()) == {Z_TYPE}
    assert restricted.num_observables == dem_42.num_observables
    assert sum(f.probability for f in restricted) <= sum(f.probability for f in dem_42)


def test_text_round_trip_preserves_faults_and_coordinates(dem_42):
    again = DetectorErrorModel.from_text(dem_42.to_text())
    assert [f.signature for f in again] == [f.signature for f in dem_42]
    assert np.allclose(again.probabilities, dem_42.probabilities)
    assert again.coords == dem_42.coords
    assert math.isclose(again.probabilities.sum(), dem_42.probabilities.sum())


def test_from_text_rejects_garbage():
    with pytest.raises(ParseError):
        DetectorErrorModel.from_text("error(0.1) Q3")


def test_circuit_distance_of_repetition_chain():
    faults = [Fault(0.01, (0,), (0,)), Fault(0.01, (0, 1), ()), Fault(0.01, (1,), ())]
    dem = DetectorErrorModel(faults, 2, 1)
    distance = circuit_distance(dem, "exact:5", threads=1)
    assert distance.value == 3
    assert distance.exact


def test_circuit_distance_warns_on_undetectable_logical_faults(caplog):
    dem = DetectorErrorModel([Fault(0.01, (), (0,)), Fault(0.01, (0,), ())], 1, 1)
    assert circuit_distance(dem, "exact:3", threads=1).value == 1
    assert "without any detector" in caplog.text


@pytest.mark.slow
def test_circuit_distance_of_42_6_4_memory_circuit(dem_42):
    distance = circuit_distance(dem_42, "exact:6")
    assert distance.value == 4


@pytest.mark.slow
def test_circuit_distance_of_66_6_6_memory_circuit(code_66):
    circuit = apply_error_model(build_memory_circuit(code_66, "1212", "Z", rounds=4), 0.001)
    assert circuit_distance(extract_dem(circuit), "exact:6").value == 6


def test_sampled_single_fault_matches_its_signature():
    circuit = stim.Circuit("""
        R 0 1 2
        X_ERROR(0.25) 1
        CX 0 2 1 2
        MR 2
        M 0 1
        DETECTOR rec[-3]
        DETECTOR rec[-1]
        OBSERVABLE_INCLUDE(0) rec[-2]
    """)
    dets, _ = circuit.compile_detector_sampler(seed=2).sample(200, separate_observables=True)
    [fault] = extract_dem(circuit).faults
    fired = dets[dets.any(axis=1)]
    assert len(fired) > 0
    assert all(np.flatnonzero(row).tolist() == list(fault.detectors) for row in fired)
