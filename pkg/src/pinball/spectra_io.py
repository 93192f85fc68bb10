"""Artifact persistence, quantum-data ingestion and spectrum matching.

Formats
-------
orbit DB      JSON lines; a header ``{"schema": 1, "d_over_r", "max_len"}``
              followed by one record per prime orbit.
resonances    CSV ``re_k,im_k,re_lambda,im_lambda,residual,order,band,reliable``.
residue map   long CSV ``q,p,re,im,abs`` plus a JSON sidecar, optional PGM.
quantum data  CSV ``re_k,im_k[,husimi_path,label]``.
report        JSON with ``pairs``, ``unmatched_classical``,
              ``unmatched_quantum`` and ``stats``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .billiard import Word
from .errors import ParseError, SchemaMismatch
from .ruelle_map import ResidueMap

SCHEMA = 1
RESONANCE_COLUMNS = ("re_k", "im_k", "re_lambda", "im_lambda", "residual", "order", "band", "reliable")
MAP_COLUMNS = ("q", "p", "re", "im", "abs")


def fmt(x: float) -> str:
    return "%.12g" % x


# ---------------------------------------------------------------------------
# Orbit database
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OrbitRecord:
    """Persisted summary of one prime orbit."""

    word: str
    length: float
    stability: float
    n_reflections: int
    n0: int
    n1: int
    residual: float
    section: tuple

    @classmethod
    def from_orbit(cls, orbit) -> "OrbitRecord":
        w = orbit.word.symbols if isinstance(orbit.word, Word) else str(orbit.word)
        return cls(
            word=w,
            length=float(orbit.length),
            stability=float(orbit.stability),
            n_reflections=len(w),
            n0=w.count("0"),
            n1=w.count("1"),
            residual=float(orbit.residual),
            section=tuple((float(q), float(p)) for q, p in orbit.section),
        )

    def to_json(self) -> dict:
        return {
            "word": self.word,
            "L": self.length,
            "lambda": self.stability,
            "n_reflections": self.n_reflections,
            "n0": self.n0,
            "n1": self.n1,
            "residual": self.residual,
            "section": [list(pt) for pt in self.section],
        }

    @classmethod
    def from_json(cls, d: dict) -> "OrbitRecord":
        return cls(
            word=d["word"],
            length=float(d["L"]),
            stability=float(d["lambda"]),
            n_reflections=int(d["n_reflections"]),
            n0=int(d["n0"]),
            n1=int(d["n1"]),
            residual=float(d["residual"]),
            section=tuple((float(q), float(p)) for q, p in d["section"]),
        )


def orbit_db_filename(d_over_r: float, max_len: int) -> str:
    return f"orbits_dR{d_over_r:g}_N{int(max_len)}.jsonl"


def save_orbit_db(path, d_over_r: float, max_len: int, orbits: Iterable) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps({"schema": SCHEMA, "d_over_r": float(d_over_r), "max_len": int(max_len)})]
    for o in orbits:
        rec = o if isinstance(o, OrbitRecord) else OrbitRecord.from_orbit(o)
        lines.append(json.dumps(rec.to_json()))
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)
    return path


def load_orbit_db(path, d_over_r: float | None = None, max_len: int | None = None) -> list[OrbitRecord]:
    """Load an orbit DB, checking its header against the requested system."""
    path = Path(path)
    with path.open() as fh:
        header = json.loads(fh.readline())
        if header.get("schema") != SCHEMA:
            raise SchemaMismatch(f"{path}: schema {header.get('schema')!r}, expected {SCHEMA}")
        if d_over_r is not None and header.get("d_over_r") != float(d_over_r):
            raise SchemaMismatch(f"{path}: d_over_r {header.get('d_over_r')} != {d_over_r}")
        if max_len is not None and header.get("max_len") != int(max_len):
            raise SchemaMismatch(f"{path}: max_len {header.get('max_len')} != {max_len}")
        return [OrbitRecord.from_json(json.loads(line)) for line in fh if line.strip()]


def cached_orbits(d_over_r: float, max_len: int, cache_dir=None, log=None) -> list[OrbitRecord]:
    """Orbit records for (d_over_r, max_len), solving and caching on a miss."""
    from .billiard import build_system, solve_orbits

    if cache_dir is not None:
        path = Path(cache_dir) / orbit_db_filename(d_over_r, max_len)
        if path.exists():
            if log:
                log(f"using cached orbits {path}")
            return load_orbit_db(path, d_over_r, max_len)
    records = [OrbitRecord.from_orbit(o) for o in solve_orbits(build_system(d_over_r), max_len)]
    if cache_dir is not None:
        save_orbit_db(path, d_over_r, max_len, records)
        if log:
            log(f"wrote {path}")
    return records


# ---------------------------------------------------------------------------
# Resonances
# ---------------------------------------------------------------------------


def resonances_csv(resonances: Sequence) -> str:
    buf = io.StringIO()
    buf.write(",".join(RESONANCE_COLUMNS) + "\n")
    for r in resonances:
        k, lam = r.k, r.lam
        rel = 1 if r.reliable else 0
        row = [fmt(k.real), fmt(k.imag), fmt(lam.real), fmt(lam.imag), fmt(r.residual), str(r.order), str(r.band), str(rel)]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def save_resonances(path, resonances: Sequence) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(resonances_csv(resonances))
    return path


def load_resonances(path):
    """Read a resonance CSV back into :class:`~pinball.zeta.Resonance` objects."""
    from .zeta import Resonance

    path = Path(path)
    out = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != RESONANCE_COLUMNS:
            raise SchemaMismatch(f"{path}: unexpected header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                lam = complex(float(row[2]), float(row[3]))
                out.append(Resonance(lam=lam, residual=float(row[4]), order=int(row[5]), band=int(row[6]), reliable=bool(int(row[7]))))
            except (ValueError, IndexError) as exc:
                raise ParseError(lineno, str(exc)) from exc
    return out


# ---------------------------------------------------------------------------
# Residue maps
# ---------------------------------------------------------------------------


def save_map(path, rmap: ResidueMap, pgm: bool = False) -> Path:
    """Write the long-format CSV, the JSON sidecar and optionally a PGM heatmap."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write(",".join(MAP_COLUMNS) + "\n")
    for i, q in enumerate(rmap.q):
        for j, p in enumerate(rmap.p):
            v = rmap.values[i, j]
            buf.write(f"{fmt(q)},{fmt(p)},{fmt(v.real)},{fmt(v.imag)},{fmt(abs(v))}\n")
    path.write_text(buf.getvalue())
    max_abs = float(np.abs(rmap.values).max()) if rmap.values.size else 0.0
    k = rmap.resonance.k
    side = {
        "schema": SCHEMA,
        "n_q": len(rmap.q),
        "n_p": len(rmap.p),
        "sigma": rmap.sigma,
        "kernel_width": rmap.width,
        "re_k": k.real,
        "im_k": k.imag,
        "max_abs": max_abs,
        "metadata": rmap.metadata,
    }
    path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
    if pgm:
        write_pgm(path.with_suffix(".pgm"), np.abs(rmap.values), max_abs)
    return path


def write_pgm(path, magnitude: np.ndarray, max_abs: float) -> Path:
    """8-bit binary PGM; columns run along q, rows from p = +1 down to p = -1."""
    img = magnitude.T[::-1]
    scaled = np.zeros(img.shape, dtype=np.uint8) if max_abs == 0 else np.round(255.0 * img / max_abs).astype(np.uint8)
    h, w = scaled.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + scaled.tobytes())
    return Path(path)


def load_map(path):
    """Read a map CSV and its sidecar; returns (q, p, values, sidecar)."""
    path = Path(path)
    side = json.loads(path.with_suffix(".json").read_text())
    if side.get("schema") != SCHEMA:
        raise SchemaMismatch(f"{path}: schema {side.get('schema')!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    n_q, n_p = side["n_q"], side["n_p"]
    q = data[::n_p, 0]
    p = data[:n_p, 1]
    values = (data[:, 2] + 1j * data[:, 3]).reshape(n_q, n_p)
    return q, p, values, side


# ---------------------------------------------------------------------------
# Quantum data and matching
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuantumRecord:
    k: complex
    husimi_path: str | None = None
    label: str | None = None


def load_quantum_csv(path) -> list[QuantumRecord]:
    """Parse externally computed quantum resonances.

    Raises FileNotFoundError for a missing file and ParseError (with the
    1-based line number) for malformed rows.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"quantum data file {path} not found")
    out = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return out
        cols = [h.strip() for h in header]
        if cols[:2] != ["re_k", "im_k"]:
            raise ParseError(1, f"header must start with re_k,im_k, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                k = complex(float(row[0]), float(row[1]))
            except (ValueError, IndexError) as exc:
                raise ParseError(lineno, f"cannot parse {row!r}") from exc
            if not (math.isfinite(k.real) and math.isfinite(k.imag)):
                raise ParseError(lineno, "non-finite k")
            if k.imag > 0:
                raise ParseError(lineno, "scattering resonances need Im(k) <= 0")
            extra = dict(zip(cols[2:], (c.strip() for c in row[2:])))
            out.append(QuantumRecord(k=k, husimi_path=extra.get("husimi_path") or None, label=extra.get("label") or None))
    return out


@dataclass
class ComparisonReport:
    pairs: list = field(default_factory=list)  # (classical k, quantum k, distance)
    unmatched_classical: list = field(default_factory=list)
    unmatched_quantum: list = field(default_factory=list)
    radius: float = 0.1

    @property
    def stats(self) -> dict:
        d = [p[2] for p in self.pairs]
        return {
            "n_matched": len(d),
            "n_unmatched_classical": len(self.unmatched_classical),
            "n_unmatched_quantum": len(self.unmatched_quantum),
            "max_distance": max(d) if d else None,
            "mean_distance": (math.fsum(d) / len(d)) if d else None,
            "radius": self.radius,
        }

    def to_json(self) -> dict:
        def c(z):
            return [z.real, z.imag]

        return {
            "schema": SCHEMA,
            "pairs": [{"ck": c(a), "qk": c(b), "dist": dist} for a, b, dist in self.pairs],
            "unmatched_classical": [c(z) for z in self.unmatched_classical],
            "unmatched_quantum": [c(z) for z in self.unmatched_quantum],
            "stats": self.stats,
        }


def _as_k(items) -> list[complex]:
    out = []
    for it in items:
        out.append(complex(it.k) if hasattr(it, "k") else complex(it))
    return out


def _key(z: complex):
    return (z.real, z.imag)


def match_spectra(classical, quantum, radius: float = 0.1) -> ComparisonReport:
    """Greedy nearest-pair matching by ascending distance, injective both ways."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    ck = sorted(_as_k(classical), key=_key)
    qk = sorted(_as_k(quantum), key=_key)
    cand = []
    for i, a in enumerate(ck):
        for j, b in enumerate(qk):
            dist = abs(a - b)
            if dist <= radius:
                cand.append((dist, i, j))
    cand.sort()
    used_c, used_q, pairs = set(), set(), []
    for dist, i, j in cand:
        if i in used_c or j in used_q:
            continue
        used_c.add(i)
        used_q.add(j)
        pairs.append((ck[i], qk[j], dist))
    pairs.sort(key=lambda t: _key(t[0]))
    return ComparisonReport(
        pairs=pairs,
        unmatched_classical=[z for i, z in enumerate(ck) if i not in used_c],
        unmatched_quantum=[z for j, z in enumerate(qk) if j not in used_q],
        radius=radius,
    )


def save_report(path, report: ComparisonReport) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_json(), indent=2) + "\n")
    return path
