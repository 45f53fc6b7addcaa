"""Class-per-directory event datasets: manifests, splits, pairing, conversion."""

from __future__ import annotations

import hashlib
import os
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .codecs import EXTENSIONS, normalize_format, read_events
from .errors import EmptyDatasetError, EvShiftError, NotADirectoryDatasetError
from .metrics import features_from_tensor
from .representations import ReprConfig, represent
from .tensorio import write_tensor

TENSOR_SUFFIX = ".ten"


@dataclass(frozen=True)
class Entry:
    class_name: str
    sample_id: str
    relative_path: str
    format: str

    @property
    def key(self) -> tuple[str, str]:
        return self.class_name, self.sample_id

    def line(self) -> str:
        return "\t".join((self.class_name, self.sample_id, self.relative_path, self.format))


@dataclass
class Manifest:
    root: Path
    entries: list[Entry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def checksum(self) -> str:
        h = hashlib.sha256()
        for e in self.entries:
            h.update(e.line().encode() + b"\n")
        return h.hexdigest()

    @property
    def classes(self) -> list[str]:
        return sorted({e.class_name for e in self.entries})

    def path(self, entry: Entry) -> Path:
        return self.root / entry.relative_path

    def save(self, path: str | os.PathLike) -> None:
        Path(path).write_text("".join(e.line() + "\n" for e in self.entries))

    @classmethod
    def load(cls, path: str | os.PathLike, root: str | os.PathLike) -> "Manifest":
        entries = []
        for line in Path(path).read_text().splitlines():
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"bad manifest line: {line!r}")
            entries.append(Entry(*parts))
        return cls(Path(root), entries)


def scan_dataset(root: str | os.PathLike, format: str = "evt1") -> Manifest:
    """Entries for ``root/<class>/<sample><ext>`` in lexicographic order."""
    root = Path(root)
    if not root.is_dir():
        raise NotADirectoryDatasetError(f"{root} is not a directory")
    fmt = normalize_format(format)
    ext = EXTENSIONS[fmt]
    entries = []
    for class_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for f in sorted(class_dir.iterdir()):
            if f.is_file() and f.suffix.lower() == ext:
                entries.append(Entry(class_dir.name, f.stem, f"{class_dir.name}/{f.name}", fmt))
    if not entries:
        raise EmptyDatasetError(f"no {ext} samples under {root}")
    return Manifest(root, entries)


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.8
    val: float = 0.1
    test: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        ratios = (self.train, self.val, self.test)
        if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
            raise ValueError(f"split ratios must be >= 0 and sum to 1, got {ratios}")


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split_manifest(manifest: Manifest, spec: SplitSpec | None = None) -> tuple[Manifest, Manifest, Manifest]:
    """Stratified shuffle split; rounding remainders go to train.

    Each class is shuffled with its own generator seeded from ``spec.seed``
    and the class name, so adding a class does not reshuffle the others.
    Each part keeps the manifest's order.
    """
    spec = spec or SplitSpec()
    spec.validate()
    by_class: dict[str, list[int]] = {}
    for i, e in enumerate(manifest.entries):
        by_class.setdefault(e.class_name, []).append(i)
    parts: list[list[int]] = [[], [], []]
    for name in sorted(by_class):
        idx = np.array(by_class[name])
        rng = np.random.default_rng([spec.seed, zlib.crc32(name.encode())])
        idx = idx[rng.permutation(idx.size)]
        n = idx.size
        n_test = min(_round_half_up(spec.test * n), n)
        n_val = min(_round_half_up(spec.val * n), n - n_test)
        n_train = n - n_val - n_test
        parts[0].extend(idx[:n_train].tolist())
        parts[1].extend(idx[n_train:n_train + n_val].tolist())
        parts[2].extend(idx[n_train + n_val:].tolist())
    return tuple(
        Manifest(manifest.root, [manifest.entries[i] for i in sorted(p)]) for p in parts
    )


@dataclass
class PairedManifest:
    pairs: list[tuple[Entry, Entry]]
    unmatched_source: list[Entry]
    unmatched_target: list[Entry]


def pair_manifests(source: Manifest, target: Manifest) -> PairedManifest:
    """Match entries on (class, sample id); pairs follow source order."""
    tmap = {e.key: e for e in target.entries}
    skeys = {e.key for e in source.entries}
    pairs = [(e, tmap[e.key]) for e in source.entries if e.key in tmap]
    return PairedManifest(
        pairs=pairs,
        unmatched_source=[e for e in source.entries if e.key not in tmap],
        unmatched_target=[e for e in target.entries if e.key not in skeys],
    )


@dataclass
class EntryResult:
    entry: Entry
    status: str  # "ok", "skipped" or "failed"
    reason: str = ""
    output: str = ""


@dataclass
class ConversionReport:
    results: list[EntryResult]
    wall_time: float

    def _count(self, status: str) -> int:
        return sum(1 for r in self.results if r.status == status)

    @property
    def converted(self) -> int:
        return self._count("ok")

    @property
    def skipped(self) -> int:
        return self._count("skipped")

    @property
    def failed(self) -> int:
        return self._count("failed")

    @property
    def outputs(self) -> int:
        return self.converted + self.skipped

    def lines(self) -> list[str]:
        out = [f"{r.entry.line()}\t{r.status}\t{r.reason}" for r in self.results]
        out.append(
            f"# converted={self.converted} skipped={self.skipped} failed={self.failed} "
            f"wall_time_s={self.wall_time:.3f}"
        )
        return out

    def save(self, path: str | os.PathLike) -> None:
        Path(path).write_text("\n".join(self.lines()) + "\n")


def resolve_threads(threads: int) -> int:
    if threads == 0:
        return os.cpu_count() or 1
    if threads < 0:
        raise ValueError("threads must be >= 0")
    return threads


def ordered_map(fn: Callable, items: Iterable, threads: int = 1) -> list:
    """``map`` over a bounded thread pool; results keep input order."""
    items = list(items)
    threads = resolve_threads(threads)
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def output_path(out_root: str | os.PathLike, entry: Entry) -> Path:
    return Path(out_root) / entry.class_name / (entry.sample_id + TENSOR_SUFFIX)


def convert_dataset(
    manifest: Manifest,
    repr_config: ReprConfig | None = None,
    out_root: str | os.PathLike = "converted",
    threads: int = 1,
    geometry: tuple[int, int] | None = None,
) -> ConversionReport:
    """Write one TEN1 tensor per entry under ``out_root/<class>/``.

    Entries whose output is newer than their input are skipped. Per-entry
    failures are recorded in the report, never raised.
    """
    repr_config = repr_config or ReprConfig()
    repr_config.validate()
    w, h = geometry if geometry else (None, None)
    start = time.perf_counter()

    def work(entry: Entry) -> EntryResult:
        src = manifest.path(entry)
        dst = output_path(out_root, entry)
        try:
            if dst.exists() and dst.stat().st_mtime_ns >= src.stat().st_mtime_ns:
                return EntryResult(entry, "skipped", "up to date", str(dst))
            stream = read_events(src, entry.format, width=w, height=h)
            tensor = represent(stream, repr_config)
            dst.parent.mkdir(parents=True, exist_ok=True)
            tmp = dst.with_name(dst.name + ".tmp")
            write_tensor(tensor, tmp)
            os.replace(tmp, dst)
            return EntryResult(entry, "ok", "", str(dst))
        except (EvShiftError, OSError, ValueError) as exc:
            return EntryResult(entry, "failed", f"{type(exc).__name__}: {exc}".replace("\t", " "))

    results = ordered_map(work, manifest.entries, threads)
    return ConversionReport(results, time.perf_counter() - start)


def extract_features(
    manifest: Manifest,
    repr_config: ReprConfig | None = None,
    pool_mode: str = "channel_stats",
    threads: int = 1,
    geometry: tuple[int, int] | None = None,
) -> np.ndarray:
    """One pooled multi-view feature vector per entry, in manifest order."""
    repr_config = repr_config or ReprConfig()
    repr_config.validate()
    w, h = geometry if geometry else (None, None)

    def work(entry: Entry) -> np.ndarray:
        stream = read_events(manifest.path(entry), entry.format, width=w, height=h)
        return features_from_tensor(represent(stream, repr_config), pool_mode)

    return np.stack(ordered_map(work, manifest.entries, threads))
