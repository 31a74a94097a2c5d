"""Day-ahead energy management for an electric-bus charging depot.

Solves the station's day-ahead scheduling MILP under uncertain solar power,
electricity prices, and bus state of charge, then builds a data-driven
polynomial-chaos surrogate of the minimum-cost map so cost distributions can
be estimated from thousands of scenarios without re-solving the MILP.
"""

__version__ = "0.1.0"
