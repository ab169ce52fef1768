"""Demand flexibility of clustered geothermal heat pumps in distribution networks."""

__version__ = "0.1.0"
