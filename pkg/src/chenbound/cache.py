"""Persistent cache of Psi rows and their I maxima.

One CSV file per numerical configuration; the file name carries a hash of
the tolerances so results computed under different settings never mix.
Columns are ``i,s,s_prime,k1,k2,k3,kind,phi_max,phi_low,psi_value``; ``kind``
is ``Psi1``/``Psi2`` for the row value or ``I1``/``I2`` for an individual
maximum, in which case ``i`` is the integral index and ``psi_value`` its
maximum.
"""

from __future__ import annotations

import csv
import hashlib
import os
import tempfile
import threading
from dataclasses import asdict
from pathlib import Path

from . import wu
from .wu import MaxResult, WuConfig, WuParams

HEADER = ["i", "s", "s_prime", "k1", "k2", "k3", "kind", "phi_max", "phi_low", "psi_value"]


def config_key(cfg: WuConfig) -> str:
    blob = repr(sorted(asdict(cfg).items()))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _params_key(p: WuParams) -> tuple:
    return tuple(_fmt(v) for v in (p.s, p.s_prime, p.k1, p.k2, p.k3))


class PsiCache:
    def __init__(self, directory: str | os.PathLike, cfg: WuConfig = wu.DEFAULT_WU):
        self.directory = Path(directory)
        self.cfg = cfg
        self.path = self.directory / f"psi_{config_key(cfg)}.csv"
        self._lock = threading.Lock()
        self._rows: dict[tuple, dict] = {}
        self._order: list[tuple] = []
        self.hits = self.misses = 0
        if self.path.exists():
            with open(self.path, newline="") as fh:
                reader = csv.DictReader(fh)
                if reader.fieldnames != HEADER:
                    raise ValueError(f"{self.path} does not have the expected header")
                for row in reader:
                    self._put(row)

    def _key(self, row: dict) -> tuple:
        return (row["kind"], row["i"], row["s"], row["s_prime"], row["k1"], row["k2"], row["k3"])

    def _put(self, row: dict) -> None:
        k = self._key(row)
        if k not in self._rows:
            self._order.append(k)
        self._rows[k] = row

    def _get(self, kind: str, i: int, p: WuParams) -> dict | None:
        return self._rows.get((kind, str(i)) + _params_key(p))

    def _flush(self) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".psi-", suffix=".csv")
        with os.fdopen(fd, "w", newline="") as fh:
            w = csv.DictWriter(fh, HEADER, lineterminator="\n")
            w.writeheader()
            for k in self._order:
                w.writerow(self._rows[k])
        os.replace(tmp, self.path)

    def _row(self, kind: str, i: int, p: WuParams, phi_max, phi_low, value) -> dict:
        s, sp, k1, k2, k3 = _params_key(p)
        return {"i": str(i), "s": s, "s_prime": sp, "k1": k1, "k2": k2, "k3": k3, "kind": kind,
                "phi_max": _fmt(phi_max), "phi_low": _fmt(phi_low), "psi_value": _fmt(value)}

    @staticmethod
    def _max(row: dict) -> MaxResult:
        return MaxResult(float(row["phi_max"]), float(row["psi_value"]), float(row["phi_low"]))

    def psi1(self, p: WuParams, cfg: WuConfig | None = None) -> dict:
        self._check(cfg)
        with self._lock:
            head, m = self._get("Psi1", 1, p), self._get("I1", 1, p)
        if head and m:
            self.hits += 1
            return {"value": float(head["psi_value"]), "i1": self._max(m)}
        self.misses += 1
        parts = wu.psi1_parts(p.s, p.s_prime, self.cfg)
        mr = parts["i1"]
        with self._lock:
            self._put(self._row("I1", 1, p, mr.phi_max, mr.phi_low, mr.value))
            self._put(self._row("Psi1", 1, p, mr.phi_max, mr.phi_low, parts["value"]))
            self._flush()
        return parts

    def psi2(self, p: WuParams, cfg: WuConfig | None = None) -> dict:
        self._check(cfg)
        idx = range(9, self.cfg.i2_upper + 1)
        with self._lock:
            head = self._get("Psi2", 0, p)
            comps = {i: self._get("I2", i, p) for i in idx}
        if head and all(comps.values()):
            self.hits += 1
            return {"value": float(head["psi_value"]), "i2": {i: self._max(r) for i, r in comps.items()}}
        self.misses += 1
        parts = wu.psi2_parts(p, self.cfg)
        with self._lock:
            for i, mr in parts["i2"].items():
                self._put(self._row("I2", i, p, mr.phi_max, mr.phi_low, mr.value))
            self._put(self._row("Psi2", 0, p, None, None, parts["value"]))
            self._flush()
        return parts

    def _check(self, cfg: WuConfig | None) -> None:
        if cfg is not None and cfg != self.cfg:
            raise ValueError("cache was opened for a different configuration")

    def __len__(self) -> int:
        return len(self._rows)
