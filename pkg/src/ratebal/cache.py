"""Content-addressed on-disk store of designed quantizers."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Iterable

from ratebal import __version__
from ratebal.models import ObservationModel
from ratebal.quantizer import Design, DesignConfig, MonotoneQuantizer, design_coordinate_descent

ENV_VAR = "RATEBAL_CACHE_DIR"


def _design_job(args: tuple[str, float, int, DesignConfig]) -> Design:
    kind, m, rate, cfg = args
    return design_coordinate_descent(ObservationModel(kind, m), rate, cfg)


class DesignCache:
    """Designs keyed by a hash of ``(kind, m, rate, config, version)``.

    Without an explicit directory (or ``RATEBAL_CACHE_DIR``) the cache lives in
    a temporary directory removed by :meth:`close`.
    """

    def __init__(self, directory: str | os.PathLike | None = None):
        directory = directory or os.environ.get(ENV_VAR)
        self._tmp = None
        if directory is None:
            self._tmp = tempfile.TemporaryDirectory(prefix="ratebal-")
            directory = self._tmp.name
        self.root = Path(directory)
        self.root.mkdir(parents=True, exist_ok=True)

    def close(self):
        if self._tmp is not None:
            self._tmp.cleanup()
            self._tmp = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    @staticmethod
    def key(model: ObservationModel, rate: int, cfg: DesignConfig) -> str:
        blob = json.dumps({"kind": model.kind, "m": repr(model.m), "rate": rate,
                           "cfg": dataclasses.asdict(cfg), "version": __version__}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def _path(self, model, rate, cfg) -> Path:
        return self.root / f"{self.key(model, rate, cfg)}.json"

    def load(self, model: ObservationModel, rate: int, cfg: DesignConfig) -> Design | None:
        path = self._path(model, rate, cfg)
        if not path.exists():
            return None
        rec = json.loads(path.read_text())
        return Design(MonotoneQuantizer(rate, tuple(rec["thresholds"])), rec["distance"])

    def store(self, model: ObservationModel, rate: int, cfg: DesignConfig, design: Design):
        path = self._path(model, rate, cfg)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps({"kind": model.kind, "m": model.m, "rate": rate,
                                   "thresholds": list(design.quantizer.thresholds),
                                   "distance": design.distance}))
        tmp.replace(path)

    def get(self, model: ObservationModel, rate: int, cfg: DesignConfig) -> Design:
        design = self.load(model, rate, cfg)
        if design is None:
            design = design_coordinate_descent(model, rate, cfg)
            self.store(model, rate, cfg, design)
        return design

    def prefetch(self, pairs: Iterable[tuple[ObservationModel, int]], cfg: DesignConfig, workers: int = 1):
        """Design every missing ``(model, rate)`` pair, fanning out over ``workers`` processes."""
        todo = sorted({(mo.kind, mo.m, r) for mo, r in pairs
                       if self.load(mo, r, cfg) is None})
        if not todo:
            return
        jobs = [(kind, m, r, cfg) for kind, m, r in todo]
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_design_job, jobs))
        else:
            results = [_design_job(j) for j in jobs]
        for (kind, m, r, _), design in zip(jobs, results):
            self.store(ObservationModel(kind, m), r, cfg, design)
