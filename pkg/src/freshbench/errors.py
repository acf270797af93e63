"""Exception types shared across the pipeline."""

from __future__ import annotations


class FreshbenchError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FreshbenchError):
    """Invalid configuration. Carries every violation found, not just the first."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DumpReadError(FreshbenchError):
    """Dump source unreadable or decompression failed mid-stream."""


class StoreError(FreshbenchError):
    """Claim store missing, corrupt, or not writable."""


class CacheMissError(FreshbenchError):
    """Offline mode hit an uncached request."""


class PageMissingError(FreshbenchError):
    """Wikipedia page does not exist in the target language."""


class TransientFetchError(FreshbenchError):
    """HTTP failure that survived all retries; the item can be skipped and retried later."""


class AssemblyError(FreshbenchError):
    """A sample could not be assembled from its parts (count mismatch, colliding options)."""


class InsufficientPoolError(FreshbenchError):
    """Distractor or noise pool too small after filtering."""

    def __init__(self, sample_id, needed, available, what="distractors"):
        self.sample_id = sample_id
        self.needed = needed
        self.available = available
        super().__init__(
            f"sample {sample_id}: needed {needed} {what}, only {available} eligible"
        )


class TranscriptMissError(FreshbenchError):
    """Strict replay hit a prompt absent from the transcript."""


class AgreementUndefinedError(FreshbenchError):
    """Chance-corrected agreement coefficient undefined (1 - Pe == 0)."""


class StageFailure(FreshbenchError):
    """Fatal pipeline failure carrying the stage name and offending item."""

    def __init__(self, stage: str, item: str, reason: str):
        self.stage = stage
        self.item = item
        super().__init__(f"stage {stage} failed on {item}: {reason}")
