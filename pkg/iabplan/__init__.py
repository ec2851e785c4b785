"""
Planning and simulation of two-hop integrated access and backhaul (IAB)
mmWave networks: stochastic geometry, link budgets, coverage evaluation,
deployment optimization, BAP routing and the experiment harness.
"""

__version__ = "0.1.0"
