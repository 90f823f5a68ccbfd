"""Repeated interaction systems: reduced dynamics, adiabatic evolution and entropy production."""
