"""Monte Carlo experiment drivers: distillation, memory, and CNOT-block runs.

Each driver builds the circuit, derives the error mechanisms and matching
graphs once, then streams sampled shot batches through the iterative decoder,
accumulating acceptance/error counts with Wilson-score confidence intervals.
Results serialize to CSV or JSON rows with the full parameter set and seed, so
any row can be reproduced exactly.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .builders import (NoiseModel, build_cnot_subcircuit_experiment,
                       build_distillation_circuit, build_memory_circuit)
from .circuit import Circuit, validate_annotations
from .decoder import IterativeConfig, IterativeDecoder, predict_outcome
from .dem import enumerate_error_mechanisms
from .protocols import (FIFTEEN_TO_ONE, SEVEN_TO_ONE, build_protocol,
                        sample_logical_shots)
from .sampler import sample


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (default 95%)."""
    if n == 0:
        return (0.0, 1.0)
    ph = k / n
    denom = 1 + z * z / n
    centre = (ph + z * z / (2 * n)) / denom
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: str = SEVEN_TO_ONE
    d: int = 3
    p_circuit: float = 1e-3
    p_in: float = 0.0
    shots: int = 10_000
    seed: int = 0
    max_iters: int = 3
    rounds: int = 5          # memory baseline only

    def __post_init__(self):
        if self.protocol not in (SEVEN_TO_ONE, FIFTEEN_TO_ONE):
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.d < 3 or self.d % 2 == 0:
            raise ValueError("d must be odd and >= 3")
        if self.shots < 1:
            raise ValueError("shots must be positive")

    def noise(self) -> NoiseModel:
        return NoiseModel(self.p_circuit, self.p_in)


@dataclass
class ExperimentStats:
    """Accumulated counts with derived rates and 95% intervals."""
    shots: int = 0
    accepted: int = 0
    errors: int = 0          # output errors among accepted shots
    iteration_hist: dict[int, int] = field(default_factory=dict)
    seconds: float = 0.0

    def record(self, accepted: bool, error: bool, iters: int) -> None:
        self.shots += 1
        self.iteration_hist[iters] = self.iteration_hist.get(iters, 0) + 1
        if accepted:
            self.accepted += 1
            if error:
                self.errors += 1

    @property
    def p_accept(self) -> float:
        return self.accepted / self.shots if self.shots else 0.0

    @property
    def discard_ratio(self) -> float:
        return 1.0 - self.p_accept

    @property
    def p_out(self) -> float:
        return self.errors / self.accepted if self.accepted else 0.0

    def p_out_interval(self) -> tuple[float, float]:
        return wilson_interval(self.errors, self.accepted)

    def accept_interval(self) -> tuple[float, float]:
        return wilson_interval(self.accepted, self.shots)


@dataclass
class DecodingPipeline:
    """Circuit + mechanisms + decoder, reusable across noise sweeps of the
    same structure."""
    circuit: Circuit
    decoder: IterativeDecoder

    @classmethod
    def build(cls, circuit: Circuit) -> "DecodingPipeline":
        validate_annotations(circuit)
        mechanisms = enumerate_error_mechanisms(circuit)
        return cls(circuit=circuit, decoder=IterativeDecoder(circuit, mechanisms))


def _bits_to_int(column: np.ndarray) -> int:
    out = 0
    for i, b in enumerate(column):
        if b:
            out |= 1 << i
    return out


def run_distillation(config: ExperimentConfig,
                     pipeline: DecodingPipeline | None = None) -> ExperimentStats:
    """Full surface-code distillation Monte Carlo at one parameter point."""
    t0 = time.time()
    spec = build_protocol(config.protocol)
    if pipeline is None:
        circ = build_distillation_circuit(spec, config.d, config.noise())
        pipeline = DecodingPipeline.build(circ)
    circ, dec = pipeline.circuit, pipeline.decoder
    itc = IterativeConfig(max_global_iters=config.max_iters)
    stats = ExperimentStats()
    batch = sample(circ, config.shots, config.seed)
    det = batch.unpack(batch.det_bits)
    chk = batch.unpack(batch.check_bits)
    obs = batch.unpack(batch.obs_bits)
    for s in range(config.shots):
        res = dec.decode_shot(dec.syndrome_masks(det[:, s]), itc)
        accepted, _, error = predict_outcome(
            res, _bits_to_int(chk[:, s]), _bits_to_int(obs[:, s]))
        stats.record(accepted, error, res.iterations_used)
    stats.seconds = time.time() - t0
    return stats


def run_memory_baseline(config: ExperimentConfig) -> ExperimentStats:
    """Single-patch |0> memory logical error rate (every shot "accepted")."""
    t0 = time.time()
    circ = build_memory_circuit(config.d, config.rounds, config.noise())
    pipeline = DecodingPipeline.build(circ)
    itc = IterativeConfig(max_global_iters=config.max_iters)
    stats = ExperimentStats()
    batch = sample(circ, config.shots, config.seed)
    det = batch.unpack(batch.det_bits)
    obs = batch.unpack(batch.obs_bits)
    for s in range(config.shots):
        res = pipeline.decoder.decode_shot(pipeline.decoder.syndrome_masks(det[:, s]), itc)
        wrong = bool((res.obs_mask & 1) != obs[0, s])
        stats.record(True, wrong, res.iterations_used)
    stats.seconds = time.time() - t0
    return stats


def run_subcircuit(config: ExperimentConfig) -> dict[int, ExperimentStats]:
    """Per-patch Pauli-web failure rates of the CNOT block.

    Runs both benchmark bases; each patch's observable lives in exactly one of
    the two runs, so the result maps every patch to one ExperimentStats."""
    spec = build_protocol(config.protocol)
    itc = IterativeConfig(max_global_iters=config.max_iters)
    out: dict[int, ExperimentStats] = {}
    for basis in ("Z", "X"):
        t0 = time.time()
        circ = build_cnot_subcircuit_experiment(spec, config.d, config.noise(), basis)
        pipeline = DecodingPipeline.build(circ)
        per_obs = [ExperimentStats() for _ in circ.observables]
        batch = sample(circ, config.shots, config.seed)
        det = batch.unpack(batch.det_bits)
        obs = batch.unpack(batch.obs_bits)
        for s in range(config.shots):
            res = pipeline.decoder.decode_shot(
                pipeline.decoder.syndrome_masks(det[:, s]), itc)
            for o, st in enumerate(per_obs):
                wrong = bool(((res.obs_mask >> o) & 1) != obs[o, s])
                st.record(True, wrong, res.iterations_used)
        dt = time.time() - t0
        for o, st in enumerate(per_obs):
            st.seconds = dt
            out[circ.observables[o].id] = st
    return out


def run_logical(config: ExperimentConfig) -> ExperimentStats:
    """Logical-level (noise-free code) protocol Monte Carlo."""
    t0 = time.time()
    acc, err = sample_logical_shots(config.protocol, config.p_in, config.shots,
                                    np.random.default_rng(config.seed))
    stats = ExperimentStats(shots=config.shots, accepted=int(acc.sum()),
                            errors=int((acc & err).sum()),
                            iteration_hist={1: config.shots})
    stats.seconds = time.time() - t0
    return stats


def qubit_cycles(kind: str, d: int) -> int:
    """Spacetime cost of one distillation run in data-qubit-rounds."""
    spec = build_protocol(kind)
    rounds = len(spec.cnot_layers) + 2  # init round + one per barrier + consumption
    return spec.num_data * d * d * rounds + spec.num_resources * d * d


RESULT_FIELDS = ("experiment", "protocol", "d", "p_circuit", "p_in", "shots",
                 "accepted", "errors", "p_accept", "p_out", "ci_lo", "ci_hi",
                 "discard_ratio", "seed", "seconds")


def result_row(experiment: str, config: ExperimentConfig,
               stats: ExperimentStats) -> dict:
    lo, hi = stats.p_out_interval()
    return {
        "experiment": experiment,
        "protocol": config.protocol,
        "d": config.d,
        "p_circuit": config.p_circuit,
        "p_in": config.p_in,
        "shots": stats.shots,
        "accepted": stats.accepted,
        "errors": stats.errors,
        "p_accept": round(stats.p_accept, 10),
        "p_out": round(stats.p_out, 10),
        "ci_lo": round(lo, 10),
        "ci_hi": round(hi, 10),
        "discard_ratio": round(stats.discard_ratio, 10),
        "seed": config.seed,
        "seconds": round(stats.seconds, 3),
    }


def emit_results(rows: list[dict], fmt: str = "csv") -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=RESULT_FIELDS)
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()
