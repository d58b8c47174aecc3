import math

from hypothesis import HealthCheck, settings

from ccdlab.model import TWO_PI

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

MHZ = TWO_PI * 1e6
US = 1e-6
HALF_PI = math.pi / 2
