"""
Monte Carlo sampling of detector and observable bits, from a noisy circuit
(stim's Pauli-frame sampler) or directly from a detector error model.

Shots are split into fixed blocks of ``chunk_shots``. Block b draws from its
own stream, seeded by ``SeedSequence(seed, spawn_key=(b,))``, so results
depend on ``(seed, shots, chunk_shots)`` only and not on the thread count.
"""
import json
import logging
from functools import partial

import numpy as np
import stim

from . import parallel
from .version import VERSION

logger = logging.getLogger(__name__)

CHUNK_SHOTS = 1024


def _block_seed(seed, block):
    return int(np.random.SeedSequence(seed, spawn_key=(block,)).generate_state(1, dtype=np.uint64)[0])


def _blocks(shots, chunk_shots):
    if shots < 1:
        raise ValueError(f"shots must be at least 1, got {shots}")
    if chunk_shots < 1:
        raise ValueError(f"chunk_shots must be at least 1, got {chunk_shots}")
    return [(b, min(chunk_shots, shots - start)) for b, start in enumerate(range(0, shots, chunk_shots))]


def resolve_seed(seed):
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (1 << 63))
        logger.info(f"sampling with fresh seed {seed}")
    return int(seed)


def _circuit_block(text, seed, block):
    index, shots = block
    sampler = stim.Circuit(text).compile_detector_sampler(seed=_block_seed(seed, index))
    dets, obs = sampler.sample(shots, separate_observables=True)
    return dets.astype(np.uint8), obs.astype(np.uint8)


def _dem_block(text, seed, block):
    index, shots = block
    sampler = stim.DetectorErrorModel(text).compile_sampler(seed=_block_seed(seed, index))
    dets, obs, _ = sampler.sample(shots)
    return dets.astype(np.uint8), obs.astype(np.uint8)


def _gather(results, num_detectors, num_observables):
    if not results:
        return np.zeros((0, num_detectors), np.uint8), np.zeros((0, num_observables), np.uint8)
    dets = np.concatenate([d.reshape(-1, num_detectors) for d, _ in results], axis=0)
    obs = np.concatenate([o.reshape(-1, num_observables) for _, o in results], axis=0)
    return dets, obs


def sample(circuit, shots, seed=None, threads=None, chunk_shots=CHUNK_SHOTS):
    """(detectors: shots x num_detectors, observables: shots x num_observables) as uint8."""
    seed = resolve_seed(seed)
    blocks = _blocks(shots, chunk_shots)
    results = parallel.run_parallel(partial(_circuit_block, str(circuit), seed), blocks, threads)
    logger.debug(f"sample: {shots} shots in {len(blocks)} blocks, seed {seed}")
    return _gather(results, circuit.num_detectors, circuit.num_observables)


def sample_from_dem(dem, shots, seed=None, threads=None, chunk_shots=CHUNK_SHOTS):
    """Each fault fires independently with its probability; signatures are XORed."""
    seed = resolve_seed(seed)
    blocks = _blocks(shots, chunk_shots)
    if not len(dem):
        return (np.zeros((shots, dem.num_detectors), np.uint8), np.zeros((shots, dem.num_observables), np.uint8))
    results = parallel.run_parallel(partial(_dem_block, dem.to_text(), seed), blocks, threads)
    logger.debug(f"sample_from_dem: {shots} shots in {len(blocks)} blocks, seed {seed}")
    return _gather(results, dem.num_detectors, dem.num_observables)


def write_packed(path, dets, obs, **header):
    """
    Bits transposed to one row per detector (then per observable), each row
    packed 8 shots per byte, little-endian bit order. The JSON header goes to
    ``path + '.json'``.
    """
    dets = np.asarray(dets, dtype=np.uint8)
    obs = np.asarray(obs, dtype=np.uint8)
    shots = dets.shape[0]
    if obs.shape[0] != shots:
        raise ValueError(f"{shots} detector shots but {obs.shape[0]} observable shots")
    rows = np.concatenate([dets.T, obs.T], axis=0)
    packed = np.packbits(rows, axis=1, bitorder='little')
    with open(path, 'wb') as handle:
        handle.write(packed.tobytes())
    meta = dict(header, shots=int(shots), num_detectors=int(dets.shape[1]), num_observables=int(obs.shape[1]),
                version=VERSION)
    with open(f'{path}.json', 'w') as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)
    logger.info(f"write_packed: {shots} shots to {path}")


def read_packed(path):
    """(detectors, observables, header) as written by ``write_packed``."""
    with open(f'{path}.json') as handle:
        header = json.load(handle)
    shots, n_det, n_obs = header['shots'], header['num_detectors'], header['num_observables']
    width = (shots + 7) // 8
    raw = np.fromfile(path, dtype=np.uint8)
    if raw.size != (n_det + n_obs) * width:
        raise ValueError(f"{path}: expected {(n_det + n_obs) * width} bytes, found {raw.size}")
    rows = np.unpackbits(raw.reshape(n_det + n_obs, width), axis=1, count=shots, bitorder='little')
    return rows[:n_det].T.copy(), rows[n_det:].T.copy(), header

