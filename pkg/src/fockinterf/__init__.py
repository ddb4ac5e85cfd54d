"""Exact photon-number-basis simulation of multi-crystal nonlinear interferometers."""
