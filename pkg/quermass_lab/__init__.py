"""Quermassintegrals of lambda-concave bodies and the inequalities between them"""

__version__ = "0.1.0"
