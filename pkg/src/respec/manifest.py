"""Run manifests: every command that writes outputs also writes a manifest
recording the resolved configuration, seeds, input digests and output
files, so a run can be reproduced bit-exactly from its manifest alone."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__


def file_digest(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return "sha256:" + h.hexdigest()


def write_manifest(out_dir, command: list[str], config: dict,
                   inputs: list, outputs: list[str],
                   timings: dict | None = None,
                   with_times: bool = True) -> Path:
    """Write manifest.json next to the outputs and return its path.

    With timing suppressed (the normalization mode), every timing value is
    zeroed so that two runs of the same configuration produce
    byte-identical manifests.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    timings = dict(timings or {})
    if not with_times:
        timings = {k: 0.0 for k in timings}
    doc = {
        "tool": f"respec {__version__}",
        "command": list(command),
        "config": config,
        "inputs": {str(p): file_digest(p) for p in inputs},
        "outputs": sorted(outputs),
        "timings": timings,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_manifest(out_dir) -> dict:
    path = Path(out_dir) / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"no manifest at {path}")
    return json.loads(path.read_text())


def verify_input_digests(manifest: dict) -> list[str]:
    """Paths whose current content no longer matches the recorded digest."""
    stale = []
    for path, digest in manifest.get("inputs", {}).items():
        try:
            current = file_digest(path)
        except OSError:
            stale.append(path)
            continue
        if current != digest:
            stale.append(path)
    return stale
