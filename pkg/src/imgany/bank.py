"""Embedding banks: immutable word -> embedding stores built from lexica.

A bank materializes one lexicon (entity nouns or attribute adjectives) as
a word list plus a float32 embedding matrix, persisted in a small
self-describing binary format:

    magic   5 bytes  b"IMGB1" (4-byte family tag + 1 version digit)
    kind    u8       0 = noun, 1 = adjective
    flags   u8       bit0: embeddings stored unit-normalized
    dim     u32 LE
    count   u64 LE
    count * [word_len u16 LE | word UTF-8 | keep u8]
    count * dim float32 LE, row-major
    crc32   u32 LE over every byte after the magic

Entries are stored sorted lexicographically by word, which makes bank
files (and therefore retrieval tie-breaks) independent of ingest order.
Saving and loading round-trip bit-exactly. Loaded banks are immutable and
safe to share across threads; the adjective filter returns a re-indexed
view, never a mutated bank.
"""
from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Union

import numpy as np

from .core import normalize
from .errors import (
    BadMagicError,
    ChecksumMismatchError,
    DimMismatchError,
    DuplicateWordError,
    EmptyInputError,
    EmptyLexiconError,
    NonFiniteError,
    ParseError,
    TruncatedFileError,
    ValidationError,
    VersionUnsupportedError,
    WrongKindError,
    ZeroVectorError,
)

MAGIC_FAMILY = b"IMGB"
MAGIC = b"IMGB1"
BANK_KINDS = ("noun", "adjective")
MAX_WORD_BYTES = 255
_KIND_CODES = {"noun": 0, "adjective": 1}
_KIND_NAMES = {code: kind for kind, code in _KIND_CODES.items()}
_FLAG_NORMALIZED = 0x01


@dataclass(frozen=True, eq=False)
class LexiconEntry:
    """One lexicon word with its embedding and (for adjectives) keep verdict."""

    word: str
    kind: str
    embedding: np.ndarray
    keep: bool = True

    def __post_init__(self):
        if not isinstance(self.word, str) or not self.word:
            raise ValidationError("word must be a nonempty string", code="BadWord")
        if len(self.word.encode("utf-8")) > MAX_WORD_BYTES:
            raise ValidationError(f"word {self.word[:32]!r}... exceeds {MAX_WORD_BYTES} bytes",
                                  code="BadWord")
        if self.kind not in BANK_KINDS:
            raise ValidationError(f"kind must be one of {BANK_KINDS}", code="BadKind")
        vec = np.array(normalize(self.embedding), dtype=np.float64)
        vec.setflags(write=False)
        object.__setattr__(self, "embedding", vec)


@dataclass(frozen=True)
class BankHeader:
    kind: str
    dim: int
    count: int
    normalized: bool = True


@dataclass(frozen=True, eq=False)
class EmbeddingBank:
    """Immutable bank; position in ``words`` is the persisted bank index."""

    kind: str
    words: tuple[str, ...]
    keep: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        keep = np.asarray(self.keep, dtype=bool)
        matrix = np.asarray(self.matrix, dtype=np.float32)
        if matrix.ndim != 2 or len(self.words) != matrix.shape[0] or len(self.words) != keep.shape[0]:
            raise ValidationError("words, keep and matrix disagree on entry count", code="BadBank")
        keep.setflags(write=False)
        if matrix.flags.writeable:
            matrix.setflags(write=False)
        object.__setattr__(self, "keep", keep)
        object.__setattr__(self, "matrix", matrix)

    @property
    def count(self) -> int:
        return len(self.words)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def kept_count(self) -> int:
        return int(np.count_nonzero(self.keep))

    @property
    def header(self) -> BankHeader:
        return BankHeader(kind=self.kind, dim=self.dim, count=self.count, normalized=True)

    def entries(self) -> Iterator[LexiconEntry]:
        for i, word in enumerate(self.words):
            yield LexiconEntry(word=word, kind=self.kind,
                               embedding=self.matrix[i].astype(np.float64),
                               keep=bool(self.keep[i]))


@dataclass(frozen=True, eq=False)
class FilteredBankView:
    """Read-only projection of a bank onto a subset of its entries.

    Surviving entries keep their relative order; positions re-index from
    zero, so retrieval hits refer to the view, with ``base_index`` mapping
    back to the underlying bank for diagnostics.
    """

    base: EmbeddingBank
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1 or (idx.size > 1 and np.any(np.diff(idx) <= 0)):
            raise ValidationError("view indices must be strictly increasing", code="BadView")
        if idx.flags.writeable:
            idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def kind(self) -> str:
        return self.base.kind

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def count(self) -> int:
        return int(self.indices.shape[0])

    @cached_property
    def words(self) -> tuple[str, ...]:
        return tuple(self.base.words[i] for i in self.indices)

    @cached_property
    def matrix(self) -> np.ndarray:
        gathered = self.base.matrix[self.indices]
        gathered.setflags(write=False)
        return gathered

    def base_index(self, view_index: int) -> int:
        return int(self.indices[view_index])


BankLike = Union[EmbeddingBank, FilteredBankView]


def build_bank(entries: Iterable[LexiconEntry], kind: str) -> EmbeddingBank:
    """Assemble an immutable bank: validate, sort by word, renormalize."""
    if kind not in BANK_KINDS:
        raise ValidationError(f"kind must be one of {BANK_KINDS}", code="BadKind")
    entries = list(entries)
    if not entries:
        raise EmptyLexiconError("cannot build a bank from an empty lexicon")
    seen: set[str] = set()
    dim = entries[0].embedding.shape[0]
    for e in entries:
        if e.kind != kind:
            raise WrongKindError(f"entry {e.word!r} has kind {e.kind!r}, expected {kind!r}")
        if e.embedding.shape[0] != dim:
            raise DimMismatchError(
                f"entry {e.word!r} has dim {e.embedding.shape[0]}, expected {dim}")
        if e.word in seen:
            raise DuplicateWordError(f"duplicate word {e.word!r}")
        seen.add(e.word)
    entries.sort(key=lambda e: e.word)
    matrix = np.empty((len(entries), dim), dtype=np.float32)
    for i, e in enumerate(entries):
        matrix[i] = normalize(e.embedding)
    keep = np.ones(len(entries), dtype=bool) if kind == "noun" else \
        np.array([e.keep for e in entries], dtype=bool)
    return EmbeddingBank(kind=kind, words=tuple(e.word for e in entries),
                         keep=keep, matrix=matrix)


def save_bank(bank: EmbeddingBank, path) -> None:
    """Write the bit-exact v1 bank file (see module docstring for layout)."""
    payload = bytearray()
    payload += struct.pack("<BB", _KIND_CODES[bank.kind], _FLAG_NORMALIZED)
    payload += struct.pack("<IQ", bank.dim, bank.count)
    for word, keep in zip(bank.words, bank.keep):
        raw = word.encode("utf-8")
        payload += struct.pack("<H", len(raw))
        payload += raw
        payload += struct.pack("<B", 1 if keep else 0)
    payload += np.ascontiguousarray(bank.matrix, dtype="<f4").tobytes()
    crc = zlib.crc32(bytes(payload)) & 0xFFFFFFFF
    Path(path).write_bytes(MAGIC + bytes(payload) + struct.pack("<I", crc))


def load_bank(path) -> EmbeddingBank:
    """Read and verify a v1 bank file; round-trips ``save_bank`` bit-exactly."""
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC):
        raise TruncatedFileError(f"{path}: file shorter than the magic")
    if data[:4] != MAGIC_FAMILY:
        raise BadMagicError(f"{path}: not a bank file (magic {data[:4]!r})")
    if data[4:5] != MAGIC[4:5]:
        raise VersionUnsupportedError(f"{path}: unsupported bank version {data[4:5]!r}")
    if len(data) < len(MAGIC) + 14 + 4:
        raise TruncatedFileError(f"{path}: header incomplete")

    body = memoryview(data)[len(MAGIC):-4]
    (crc_stored,) = struct.unpack("<I", data[-4:])

    off = 0

    def take(n: int, what: str) -> memoryview:
        nonlocal off
        if off + n > len(body):
            raise TruncatedFileError(f"{path}: truncated while reading {what}")
        chunk = body[off:off + n]
        off += n
        return chunk

    kind_code, flags = struct.unpack("<BB", take(2, "kind/flags"))
    if kind_code not in _KIND_NAMES:
        raise ValidationError(f"{path}: unknown bank kind code {kind_code}", code="BadKind")
    if not flags & _FLAG_NORMALIZED:
        raise VersionUnsupportedError(f"{path}: v1 banks must store normalized embeddings")
    dim, count = struct.unpack("<IQ", take(12, "dim/count"))
    if dim < 1:
        raise ValidationError(f"{path}: dim must be >= 1", code="BadHeader")
    if count < 1:
        raise EmptyLexiconError(f"{path}: bank holds no entries")

    words: list[str] = []
    keep = np.empty(count, dtype=bool)
    for i in range(count):
        (word_len,) = struct.unpack("<H", take(2, f"word length {i}"))
        raw = take(word_len, f"word {i}")
        try:
            words.append(str(raw, "utf-8"))
        except UnicodeDecodeError:
            raise ValidationError(f"{path}: word {i} is not valid UTF-8", code="BadWord") from None
        keep[i] = take(1, f"keep flag {i}")[0] != 0

    matrix_bytes = count * dim * 4
    raw_matrix = take(matrix_bytes, "embedding matrix")
    if off != len(body):
        raise TruncatedFileError(f"{path}: file length does not match its header")
    if zlib.crc32(body) & 0xFFFFFFFF != crc_stored:
        raise ChecksumMismatchError(f"{path}: CRC32 mismatch")

    matrix = np.frombuffer(raw_matrix, dtype="<f4").reshape(count, dim)
    return EmbeddingBank(kind=_KIND_NAMES[kind_code], words=tuple(words),
                         keep=keep, matrix=matrix)


def import_jsonl(path, kind: str) -> list[LexiconEntry]:
    """Parse one entry per JSONL line: {"word", "embedding", "keep"?}.

    Embeddings are normalized on ingest; the keep flag defaults to true
    and is honored for adjectives only (nouns always keep).
    """
    if kind not in BANK_KINDS:
        raise ValidationError(f"kind must be one of {BANK_KINDS}", code="BadKind")
    entries: list[LexiconEntry] = []
    seen: set[str] = set()
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise ParseError(str(err), line=lineno) from None
            if not isinstance(obj, dict):
                raise ParseError("expected a JSON object", line=lineno)
            word = obj.get("word")
            if not isinstance(word, str) or not word:
                raise ParseError("missing or empty \"word\"", line=lineno)
            keep = obj.get("keep", True)
            if not isinstance(keep, bool):
                raise ParseError("\"keep\" must be a boolean", line=lineno)
            emb = obj.get("embedding")
            if not isinstance(emb, list) or not emb or \
                    not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in emb):
                raise ParseError("missing or non-numeric \"embedding\"", line=lineno)
            try:
                vec = normalize(np.asarray(emb, dtype=np.float64))
            except (ZeroVectorError, NonFiniteError, EmptyInputError) as err:
                raise ParseError(f"bad embedding: {err}", line=lineno) from None
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise DimMismatchError(
                    f"line {lineno}: embedding dim {vec.shape[0]} != {dim}")
            if word in seen:
                raise DuplicateWordError(f"duplicate word {word!r} (line {lineno})")
            seen.add(word)
            try:
                entry = LexiconEntry(word=word, kind=kind, embedding=vec,
                                     keep=True if kind == "noun" else keep)
            except ValidationError as err:
                raise ParseError(str(err), line=lineno) from None
            entries.append(entry)
    return entries


def apply_adjective_filter(bank: EmbeddingBank, enabled: bool) -> BankLike:
    """Keep-flag view over an adjective bank; identity when disabled."""
    if bank.kind != "adjective":
        raise WrongKindError(f"adjective filter applied to a {bank.kind} bank")
    if not enabled:
        return bank
    return FilteredBankView(base=bank, indices=np.flatnonzero(bank.keep))
