"""Shared pytest setup: a deterministic hypothesis profile."""
from hypothesis import HealthCheck, settings

settings.register_profile(
    "morrey",
    derandomize=True,
    database=None,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("morrey")
