"""fintrace: synthetic financial behavior traces and online trace classification.

The package has three layers:

* a relational trace model (grounded literals, states, action/state traces)
  with observability filtering,
* four trace distance functions and an instance-based (kNN) online
  classifier plus a decision-tree baseline,
* a goal-driven simulator that generates labeled traces of standard and
  money-laundering customer behavior, and an experiment harness.
"""

__version__ = "0.1.0"

GENERATOR_TAG = f"fintrace/{__version__}"
