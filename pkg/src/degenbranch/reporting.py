"""Deterministic persistence of experiment outputs.

Raw samples stream to JSON lines (one record per sample); the summary is
a single JSON document.  All floats serialize with 17 significant
digits, so parsing the text recovers the exact 64-bit values and file
digests are bit-stable across runs with equal seeds.  The manifest is
the only file rewritten in place: it starts in the ``running`` state and
is finalized on completion, so a truncated run is detectable.
"""

import hashlib
import json
import os
import time
from dataclasses import dataclass, field

from . import __version__
from .seeding import DERIVATION_RULE

MANIFEST_NAME = "manifest.json"
SAMPLES_NAME = "samples.jsonl"
SUMMARY_NAME = "summary.json"
VARIANCES_CSV_NAME = "variances.csv"


def canonical_json(obj) -> str:
    """Sorted-key JSON with round-trip-exact float formatting.

    Floats are written with 17 significant digits (value-exact for
    64-bit IEEE); the stdlib encoder cannot be told to do this, so the
    document is assembled directly.
    """
    parts = []
    _emit(obj, parts)
    return "".join(parts)


def _emit(obj, parts) -> None:
    if obj is None or isinstance(obj, (bool, str, int)):
        parts.append(json.dumps(obj))
    elif isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            raise ValueError("non-finite float in output document")
        parts.append(format(obj, ".17g"))
    elif isinstance(obj, dict):
        parts.append("{")
        for i, key in enumerate(sorted(obj, key=str)):
            if i:
                parts.append(",")
            parts.append(json.dumps(str(key)))
            parts.append(":")
            _emit(obj[key], parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, item in enumerate(obj):
            if i:
                parts.append(",")
            _emit(item, parts)
        parts.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def sample_record(sample) -> dict:
    return {
        "n": sample.n,
        "t": sample.t,
        "replicate": sample.replicate_id,
        "value": sample.value,
        "L": list(sample.half_widths),
        "centering_mode": sample.centering_mode.value,
        "accuracy_flag": sample.accuracy_flag,
    }


def write_samples_jsonl(samples, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(canonical_json(sample_record(sample)))
            fh.write("\n")


def write_summary(report, config_echo: dict, path: str) -> None:
    doc = {"results": report.to_dict(), "run_info": {
        "tool_version": __version__,
        "config": config_echo,
    }}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(doc))
        fh.write("\n")


def results_digest(report) -> str:
    """Digest of the statistical content only (excludes runtime metadata)."""
    doc = report.to_dict()
    doc.pop("runtime_seconds", None)
    return hashlib.sha256(canonical_json(doc).encode("utf-8")).hexdigest()


def write_variances_csv(report, path: str) -> None:
    rows = ["n,t,variance,ci_low,ci_high,unnormalized_variance"]
    for n in report.n_schedule:
        per_t = report.variances[n]
        for t, entry in per_t.items():
            unnorm = report.unnormalized_variances.get(n, "")
            tail = format(unnorm, ".17g") if t == report.t_grid[-1] else ""
            rows.append(",".join([
                str(n), format(t, ".17g"),
                format(entry["variance"], ".17g"),
                format(entry["ci"][0], ".17g"),
                format(entry["ci"][1], ".17g"),
                tail,
            ]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    config: dict
    master_seed: int
    tool_version: str = __version__
    seed_derivation_rule: str = DERIVATION_RULE
    status: str = "running"
    started_at: str = ""
    finished_at: str = ""
    output_digests: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "master_seed": self.master_seed,
            "tool_version": self.tool_version,
            "seed_derivation_rule": self.seed_derivation_rule,
            "status": self.status,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "output_digests": self.output_digests,
        }


def start_manifest(config_echo: dict, master_seed: int, out_dir: str) -> RunManifest:
    manifest = RunManifest(config=config_echo, master_seed=master_seed,
                           started_at=_now())
    _write_manifest(manifest, out_dir)
    return manifest


def finalize_manifest(manifest: RunManifest, out_dir: str, digests: dict) -> None:
    manifest.status = "complete"
    manifest.finished_at = _now()
    manifest.output_digests = digests
    _write_manifest(manifest, out_dir)


def _write_manifest(manifest: RunManifest, out_dir: str) -> None:
    with open(os.path.join(out_dir, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        fh.write(canonical_json(manifest.to_dict()))
        fh.write("\n")


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
