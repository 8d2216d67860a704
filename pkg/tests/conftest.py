from hypothesis import HealthCheck, settings

# numeric property tests re-use fairly heavy constructors; the suite caps
# example counts itself, so disable the per-example deadline globally.
settings.register_profile(
    "covlab",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("covlab")
