"""Fixed-length read simulation with substitution and undetermined-base errors.

No insertions or deletions: every read has exactly ``read_length`` bases,
so reads stay in one Hamming graph.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seqspace import N_CODE, Sequence, as_sequence, decode


@dataclass(frozen=True)
class ReadSimConfig:
    read_length: int = 101
    coverage: float = 6.0
    # Illumina-like magnitudes; not taken from any particular simulator
    sub_rate: float = 0.004
    n_rate: float = 0.0005
    seed: int = 0

    def __post_init__(self):
        if self.read_length < 3:
            raise ValueError("read_length must be >= 3")
        if self.coverage <= 0:
            raise ValueError("coverage must be positive")
        if not (0 <= self.sub_rate <= 1 and 0 <= self.n_rate <= 1 and self.sub_rate + self.n_rate <= 1):
            raise ValueError("need 0 <= sub_rate, n_rate and sub_rate + n_rate <= 1")

    def n_reads(self, genome_length: int) -> int:
        # round half up, not banker's rounding
        return int(np.floor(self.coverage * genome_length / self.read_length + 0.5))


@dataclass(frozen=True)
class SimulatedRead:
    read_id: str
    seq: Sequence
    offset: int
    source: str

    def header(self, idx: int) -> str:
        return f"src={self.source} off={self.offset} idx={idx}"


def simulate_read_codes(genome_codes: np.ndarray, cfg: ReadSimConfig, rng,
                        n: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(reads, offsets)`` as an ``(n, read_length)`` code array and offsets.

    ``n`` overrides the coverage-derived read count.
    """
    g = np.asarray(genome_codes, dtype=np.int8)
    length = cfg.read_length
    if len(g) < length:
        raise ValueError(f"genome of length {len(g)} is shorter than read_length {length}")
    n = cfg.n_reads(len(g)) if n is None else n
    offsets = rng.integers(0, len(g) - length + 1, size=n)
    reads = g[offsets[:, None] + np.arange(length)[None, :]]
    u = rng.random(reads.shape)
    shift = rng.integers(1, 4, size=reads.shape)
    sub = u < cfg.sub_rate
    # a different base: shift by 1..3 modulo 4 (an N source base gets any base)
    base = np.where(reads == N_CODE, shift, (reads + shift) % 4)
    reads = np.where(sub, base, reads)
    reads = np.where((u >= cfg.sub_rate) & (u < cfg.sub_rate + cfg.n_rate), N_CODE, reads).astype(np.int8)
    return reads, offsets


def simulate_reads(genome, cfg: ReadSimConfig = ReadSimConfig(), rng=None, source: str = "genome") -> list[SimulatedRead]:
    """Sample ``round(coverage * |genome| / read_length)`` reads at uniform offsets.

    Each base is independently replaced by a different random base with
    probability ``sub_rate`` or by N with probability ``n_rate``.
    """
    genome = as_sequence(genome)
    rng = np.random.default_rng(cfg.seed if rng is None else rng)
    reads, offsets = simulate_read_codes(genome.codes, cfg, rng)
    return [SimulatedRead(f"{source}_{i}", Sequence(decode(r)), int(o), source)
            for i, (r, o) in enumerate(zip(reads, offsets))]


def write_reads_fasta(reads, path) -> None:
    with open(path, "w") as fh:
        for i, r in enumerate(reads):
            fh.write(f">{r.header(i)}\n{r.seq}\n")


def parse_read_header(header: str) -> dict[str, str]:
    """Fields of a ``src=<id> off=<offset> idx=<i>`` header."""
    out = {}
    for tok in header.split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            out[k] = v
    return out
