"""Equilibration lab: exact-diagonalization checks of quantum equilibration
bounds on finite-dimensional systems."""

# Standard Library
import sys

# Third Party
from aws_lambda_powertools import Logger

__version__ = "0.1.0"

# Parent logger; modules attach with Logger(service="eqlab", child=True)
logger = Logger(service="eqlab", stream=sys.stderr)
