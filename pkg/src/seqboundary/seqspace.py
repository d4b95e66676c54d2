"""Sequences, alphabets and the Hamming graph they live on.

Every sequence is also available as an ``int8`` code array using the fixed
map A=0, C=1, G=2, T=3, N=4, so vectorised code (classifiers, neighbor
enumeration) never has to look at characters.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator

import numpy as np

BASES = "ACGTN"
CODE = {b: i for i, b in enumerate(BASES)}
N_CODE = 4

_ENCODE = np.full(256, -1, dtype=np.int8)
for _i, _b in enumerate(BASES):
    _ENCODE[ord(_b)] = _i
    _ENCODE[ord(_b.lower())] = _i
_DECODE = np.frombuffer(BASES.encode(), dtype=np.uint8)


class FastaFormatError(ValueError):
    """Raised for malformed FASTA/FASTQ/plain read files."""


@dataclass(frozen=True)
class Alphabet:
    """An ordered subset of ``ACGTN``.

    ``DNA`` and ``DNA_N`` are the two alphabets used on real reads; smaller
    ones (e.g. ``Alphabet("AC")``) are handy for exhaustively enumerable toy
    spaces.
    """

    symbols: str

    def __post_init__(self):
        if not self.symbols:
            raise ValueError("alphabet must not be empty")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError(f"duplicate symbols in alphabet {self.symbols!r}")
        bad = [s for s in self.symbols if s not in CODE]
        if bad:
            raise ValueError(f"unsupported symbols {bad!r}; alphabet must be drawn from {BASES}")
        if list(self.symbols) != sorted(self.symbols, key=CODE.__getitem__):
            raise ValueError(f"alphabet symbols must follow the order {BASES}")

    @property
    def includes_n(self) -> bool:
        return "N" in self.symbols

    @cached_property
    def codes(self) -> np.ndarray:
        return np.array([CODE[s] for s in self.symbols], dtype=np.int8)

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, ch) -> bool:
        return ch in self.symbols


DNA = Alphabet("ACGT")
DNA_N = Alphabet("ACGTN")


def encode(bases: str) -> np.ndarray:
    """Characters to codes; lowercase folded. Unknown characters map to -1."""
    return _ENCODE[np.frombuffer(bases.encode("ascii", "replace"), dtype=np.uint8)]


def decode(codes) -> str:
    return _DECODE[np.asarray(codes, dtype=np.intp)].tobytes().decode()


@dataclass(frozen=True)
class Sequence:
    """An immutable, validated string over an :class:`Alphabet`."""

    bases: str
    alphabet: Alphabet = DNA_N

    def __post_init__(self):
        bases = self.bases.upper()
        for i, ch in enumerate(bases):
            if ch not in self.alphabet.symbols:
                raise ValueError(
                    f"illegal character {self.bases[i]!r} at offset {i + 1} "
                    f"(alphabet {self.alphabet.symbols})"
                )
        object.__setattr__(self, "bases", bases)

    @classmethod
    def from_codes(cls, codes, alphabet: Alphabet = DNA_N) -> "Sequence":
        return cls(decode(codes), alphabet)

    @cached_property
    def codes(self) -> np.ndarray:
        out = encode(self.bases)
        out.flags.writeable = False
        return out

    def __len__(self) -> int:
        return len(self.bases)

    def __getitem__(self, item):
        return self.bases[item]

    def __str__(self) -> str:
        return self.bases

    def __eq__(self, other):
        if isinstance(other, Sequence):
            return self.bases == other.bases
        if isinstance(other, str):
            return self.bases == other.upper()
        return NotImplemented

    def __hash__(self):
        return hash(self.bases)


@dataclass(frozen=True)
class NeighborSet:
    origin: Sequence
    members: tuple[Sequence, ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[Sequence]:
        return iter(self.members)

    def __contains__(self, item) -> bool:
        return item in self.members


def as_sequence(x, alphabet: Alphabet = DNA_N) -> Sequence:
    return x if isinstance(x, Sequence) else Sequence(str(x), alphabet)


# --------------------------------------------------------------------------
# Hamming graph
# --------------------------------------------------------------------------

def hamming_distance(a, b) -> int:
    a, b = str(a).upper(), str(b).upper()
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} != {len(b)}")
    return sum(x != y for x, y in zip(a, b))


def _substitutions(codes: np.ndarray, alphabet: Alphabet) -> tuple[np.ndarray, np.ndarray]:
    """Positions and replacement codes of every neighbor, position-major."""
    sym = alphabet.codes
    # a site holding a symbol outside the alphabet (an N in no-N mode) can
    # take every alphabet symbol
    keep = sym[None, :] != codes[:, None]
    pos = np.nonzero(keep)[0]
    repl = np.broadcast_to(sym, keep.shape)[keep]
    return pos, repl


def neighbor_count(codes, alphabet: Alphabet = DNA_N) -> int:
    codes = np.asarray(codes)
    inside = np.isin(codes, alphabet.codes).sum()
    return int(len(codes) * len(alphabet) - inside)


def neighbor_codes(codes, alphabet: Alphabet = DNA_N) -> np.ndarray:
    """All Hamming-1 neighbors as an ``(M, L)`` code array.

    Order: position-major, then alphabet order, skipping the current base.
    """
    codes = np.asarray(codes, dtype=np.int8)
    pos, repl = _substitutions(codes, alphabet)
    out = np.repeat(codes[None, :], len(pos), axis=0)
    out[np.arange(len(pos)), pos] = repl
    return out


def neighbor_at(codes, index: int, alphabet: Alphabet = DNA_N) -> np.ndarray:
    """The ``index``-th neighbor in :func:`neighbor_codes` order."""
    codes = np.asarray(codes, dtype=np.int8)
    pos, repl = _substitutions(codes, alphabet)
    out = codes.copy()
    out[pos[index]] = repl[index]
    return out


def neighbors(x, alphabet: Alphabet = DNA_N) -> NeighborSet:
    if not isinstance(x, Sequence):
        x = str(x)
        x = Sequence(x, alphabet if set(x.upper()) <= set(alphabet.symbols) else DNA_N)
    if len(x) < 1:
        raise ValueError("sequence must be non-empty")
    member_alphabet = x.alphabet if set(alphabet.symbols) <= set(x.alphabet.symbols) else DNA_N
    members = tuple(Sequence(decode(row), member_alphabet) for row in neighbor_codes(x.codes, alphabet))
    return NeighborSet(x, members)


def hamming_path(a, b, order: Iterable[int] | None = None) -> list[Sequence]:
    """Shortest path from ``a`` to ``b`` replacing one differing site at a time.

    ``order`` lists the differing sites (0-based) in replacement order;
    the default is left to right.
    """
    a, b = as_sequence(a), as_sequence(b)
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} != {len(b)}")
    diff = [i for i in range(len(a)) if a[i] != b[i]]
    order = diff if order is None else list(order)
    if sorted(order) != diff:
        raise ValueError(f"order {order} is not a permutation of the differing sites {diff}")
    cur = list(a.bases)
    path = [a]
    for i in order:
        cur[i] = b[i]
        path.append(Sequence("".join(cur), a.alphabet))
    return path


def hamming_path_codes(a, b) -> np.ndarray:
    """Left-to-right Hamming path as a ``(k+1, L)`` code array."""
    a = np.asarray(a, dtype=np.int8)
    b = np.asarray(b, dtype=np.int8)
    diff = np.nonzero(a != b)[0]
    path = np.repeat(a[None, :], len(diff) + 1, axis=0)
    # row j has the first j differing sites replaced
    mask = np.arange(1, len(diff) + 1)[:, None] >= np.arange(1, len(diff) + 1)[None, :]
    rows, cols = np.nonzero(mask)
    path[rows + 1, diff[cols]] = b[diff[cols]]
    return path


def random_sequence(length: int, alphabet: Alphabet = DNA, rng: np.random.Generator | int | None = None) -> Sequence:
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = np.random.default_rng(rng)
    return Sequence(decode(rng.choice(alphabet.codes, size=length)), alphabet)


def random_codes(n: int, length: int, alphabet: Alphabet = DNA, rng=None) -> np.ndarray:
    """``n`` uniform random sequences as an ``(n, length)`` code array."""
    rng = np.random.default_rng(rng)
    return alphabet.codes[rng.integers(len(alphabet), size=(n, length))]


# --------------------------------------------------------------------------
# File ingestion
# --------------------------------------------------------------------------

def _check(ident: str, body: str, alphabet: Alphabet) -> Sequence:
    up = body.upper()
    for i, ch in enumerate(up):
        if ch not in alphabet.symbols:
            raise FastaFormatError(f"record {ident!r}: illegal character {body[i]!r} at offset {i + 1}")
    return Sequence(up, alphabet)


def parse_fasta(path, alphabet: Alphabet = DNA_N) -> list[tuple[str, Sequence]]:
    """Read a (possibly line-wrapped, multi-record) FASTA file."""
    with open(path) as fh:
        return _parse_fasta_text(fh.read(), path, alphabet)


def _parse_fasta_text(text: str, path, alphabet: Alphabet) -> list[tuple[str, Sequence]]:
    records: list[tuple[str, Sequence]] = []
    ident = None
    chunks: list[str] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith(">"):
            if ident is not None:
                records.append((ident, _check(ident, "".join(chunks), alphabet)))
            ident = line[1:].strip()
            if not ident:
                raise FastaFormatError(f"{path}:{lineno}: empty FASTA header")
            chunks = []
        elif ident is None:
            raise FastaFormatError(f"{path}:{lineno}: sequence data before the first '>' header")
        else:
            chunks.append(line)
    if ident is not None:
        records.append((ident, _check(ident, "".join(chunks), alphabet)))
    return records


def _parse_fastq(lines: list[str], path, alphabet: Alphabet) -> list[tuple[str, Sequence]]:
    lines = [ln.rstrip("\n") for ln in lines if ln.strip()]
    if len(lines) % 4:
        raise FastaFormatError(f"{path}: truncated FASTQ record")
    out = []
    for i in range(0, len(lines), 4):
        head, seq, plus = lines[i], lines[i + 1].strip(), lines[i + 2]
        if not head.startswith("@") or not plus.startswith("+"):
            raise FastaFormatError(f"{path}:{i + 1}: malformed FASTQ record")
        out.append((head[1:].strip(), _check(head[1:].strip(), seq, alphabet)))
    return out


def read_sequences(path, alphabet: Alphabet = DNA_N) -> list[tuple[str, Sequence]]:
    """Load reads from FASTA, FASTQ or a plain one-sequence-per-line file.

    Blank lines and ``#``/``;`` comment lines are skipped; identifiers are ``line<N>``.
    FASTQ qualities are discarded.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path) as fh:
        lines = fh.readlines()     # read once: ``path`` may be a pipe
    first = next((ln for ln in lines if ln.strip() and ln[0] not in "#;"), "")
    if first.startswith(">"):
        return _parse_fasta_text("".join(lines), path, alphabet)
    if first.startswith("@"):
        return _parse_fastq(lines, path, alphabet)
    out = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line[0] in "#;":
            continue
        ident = f"line{lineno}"
        out.append((ident, _check(ident, line, alphabet)))
    return out


def stack_codes(seqs) -> np.ndarray:
    """Equal-length sequences (str or Sequence) to an ``(n, L)`` code array."""
    seqs = [str(s) for s in seqs]
    if not seqs:
        return np.zeros((0, 0), dtype=np.int8)
    lengths = {len(s) for s in seqs}
    if len(lengths) != 1:
        raise ValueError(f"sequences have differing lengths {sorted(lengths)}")
    arr = encode("".join(seqs)).reshape(len(seqs), -1)
    if (arr < 0).any():
        raise ValueError("illegal character in sequence")
    return arr
