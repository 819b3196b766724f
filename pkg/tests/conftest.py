"""Test-wide configuration: a relaxed hypothesis profile for CI boxes."""

from hypothesis import settings

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")
