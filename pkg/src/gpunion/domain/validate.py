"""Job spec validation against type invariants and the trusted-image allow-list."""

from __future__ import annotations

import re

from gpunion.domain.types import JobSpec
from gpunion.errors import DigestNotTrusted, MalformedDigest, NonPositiveResource

_SHA256_RE = re.compile(r"^[0-9a-f]{64}$")


def validate_job_spec(spec: JobSpec, allow_list: set[str]) -> None:
    """Raise a ValidationError subclass on the first violated constraint.

    A spec is acceptable iff all type invariants hold and its image digest is
    on the allow-list of trusted images.
    """
    if not _SHA256_RE.match(spec.image_digest):
        raise MalformedDigest(f"image digest must be 64 lowercase hex chars: {spec.image_digest!r}")
    if spec.image_digest not in allow_list:
        raise DigestNotTrusted(f"image digest not on the trusted allow-list: {spec.image_digest}")
    if spec.gpu_memory_mib_required <= 0:
        raise NonPositiveResource("gpu_memory_mib_required must be positive")
    if spec.checkpoint_interval_s <= 0:
        raise NonPositiveResource("checkpoint_interval_s must be positive")
    if spec.estimated_duration_s <= 0:
        raise NonPositiveResource("estimated_duration_s must be positive")
    if spec.min_compute_capability[0] < 1:
        raise NonPositiveResource("min compute capability major must be >= 1")
    if spec.affinity_window_s < 0:
        raise NonPositiveResource("affinity_window_s must be nonnegative")
