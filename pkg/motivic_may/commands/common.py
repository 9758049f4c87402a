"""Shared plumbing for the commands: dataset, cache and sequence loading."""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

from motivic_may.config import ProfileBounds, Settings
from motivic_may.errors import CacheMissError, ConfigError
from motivic_may.services.e1 import build_e1, get_profile
from motivic_may.services.hashing import dataset_hash
from motivic_may.services.pages import E_INFINITY, SpectralSequence, build_sequence, page_key
from motivic_may.services.storage import PageStorage, load_sequence
from motivic_may.services.tables import Dataset, load_dataset

logger = logging.getLogger(__name__)


def parse_through(value: Optional[str]) -> Optional[int]:
    """Last page to compute.

    ``E<r>`` and a bare ``<r>`` name the page itself.  ``d<r>`` means through
    the differential d_r, so the last page is E_{r+1}; ``d32`` reaches E∞.
    None keeps the profile default.
    """
    if value is None:
        return None
    text = value.strip().lower()
    if text in ("inf", "infinity", "einf"):
        return E_INFINITY
    after_differential = text.startswith("d")
    if text[:1] in ("d", "e"):
        text = text[1:]
    try:
        r = int(text)
    except ValueError:
        raise ConfigError(f"cannot read page {value!r}; use d<r>, E<r>, <r> or inf")
    if r < 1:
        raise ConfigError(f"page must be at least 1, got {r}")
    if after_differential:
        return page_key(r + 1)
    return min(r, E_INFINITY)


@dataclass
class Context:
    """One invocation: validated settings plus lazily loaded dataset and cache."""

    settings: Settings

    @cached_property
    def dataset(self) -> Dataset:
        return load_dataset(self.settings.dataset_dir)

    @cached_property
    def data_hash(self) -> str:
        return dataset_hash(self.settings.dataset_dir)

    @cached_property
    def storage(self) -> PageStorage:
        return PageStorage(str(self.settings.cache_dir))

    def bounds(self, profile: str, s_max: Optional[int] = None, f_max: Optional[int] = None,
               through: Optional[int] = None) -> ProfileBounds:
        base = self.settings.bounds_for(profile)
        return ProfileBounds(
            s_max=base.s_max if s_max is None else s_max,
            f_max=base.f_max if f_max is None else f_max,
            through=base.through if through is None else through,
        )

    def sequence(self, profile: str, bounds: ProfileBounds) -> SpectralSequence:
        """A sequence object with no pages yet."""
        prof = get_profile(profile)
        e1 = build_e1(prof, bounds.s_max, bounds.f_max)
        return build_sequence(prof, e1, self.dataset, bounds.s_max, bounds.f_max, bounds.through,
                              workers=self.settings.workers, strict=self.settings.strict,
                              check_well_defined=self.settings.check_well_defined,
                              check_completeness=self.settings.check_completeness)

    def cached_sequence(self, profile: str, bounds: ProfileBounds) -> SpectralSequence:
        """Pages restored from the cache, or CacheMissError naming the compute command."""
        seq = self.sequence(profile, bounds)
        if not load_sequence(self.storage, seq, self.data_hash):
            raise CacheMissError(profile, compute_hint(profile, bounds))
        return seq


def compute_hint(profile: str, bounds: ProfileBounds) -> str:
    return (f"compute --profile {profile} --max-stem {bounds.s_max} --max-f {bounds.f_max} "
            f"--through E{bounds.through}")
