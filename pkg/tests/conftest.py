import pytest
from hypothesis import HealthCheck, settings

from bipalloc import EdgeId, FailureEvent, ProblemInstance, ServiceTrace

settings.register_profile(
    "deterministic",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("deterministic")


# The fully worked 2x2 example used throughout: distances row-major
# [47, 17, 11, 2], capacities [26, 839], demands 97 then 78, and one
# failure of flat edge 3 (consumer 1, producer 0) after the first demand.
WORKED_DISTANCES = [47, 17, 11, 2]
WORKED_CAPACITIES = [26, 839]
WORKED_DEMANDS = [97, 78]

WORKED_TEXT = """\
no of consumers: 2
no of producers: 2
edge distances
47
17
11
2
producer capacities
26
839
consumer demands
97
78
Number of edge failures: 1
1 <- demand #
3 <- edge #
"""

WORKED_LP = """\
min: 47x1+17x2+11x3+2x4;
x1+x3<=26;
x2+x4<=839;
x1+x2=97;
x3+x4=78;
"""


@pytest.fixture
def worked_instance():
    return ProblemInstance(2, 2, WORKED_DISTANCES, WORKED_CAPACITIES)


@pytest.fixture
def worked_trace():
    return ServiceTrace(
        demands=[(0, 97.0), (1, 78.0)],
        failures=[FailureEvent(1, EdgeId(1, 0))],
    )


def adversarial_family(x, r1, r2):
    """Two consumers, two producers, both columns priced x and x+5, cheap
    producer capacity pinned to the first demand (r1 < r2)."""
    assert r1 < r2
    instance = ProblemInstance(2, 2, [x, x + 5, x, x + 5], [r1, r1 + r2])
    trace = ServiceTrace(demands=[(0, float(r1)), (1, float(r2))])
    return instance, trace
