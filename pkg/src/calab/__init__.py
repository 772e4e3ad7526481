"""calab: a one-dimensional cellular automaton laboratory.

Exact block-map engine (cyclic and light-cone-windowed configurations), a
five-stage counter machine over a flag x tape x pulse product alphabet, and
seeded Monte Carlo estimators for measure-level questions (image measures,
Cesaro means, mixing gaps, trace-ball measures, entropy rates).
"""

__version__ = "0.3.0"

from .symbolic import (  # noqa: F401
    Alphabet,
    CyclicConfiguration,
    Cylinder,
    Word,
    WindowConfiguration,
    cylinder_of,
    distance,
    shift,
)
from .engine import (  # noqa: F401
    BlockMapAutomaton,
    CompositeAutomaton,
    TableAutomaton,
    check_locality,
    check_shift_commutation,
    compose,
    identity_automaton,
    permutation_automaton,
    shift_automaton,
    step,
    step_window,
)
from .counter import counter_machine, tape_soup  # noqa: F401
from .measures import (  # noqa: F401
    Atomic,
    Bernoulli,
    ProductMeasure,
    cesaro_mean,
    cesaro_panel,
    cylinder_probability,
    estimate_image_cylinder,
    mixing_gap,
    uniform_measure,
)
from .stability import classify, column_trace, find_blocking_word, sensitivity_probe, trace_ball_estimates  # noqa: F401
from .orbits import detect_orbit, estimate_column_entropy, periodic_density_probe, splice_periodic_point  # noqa: F401
