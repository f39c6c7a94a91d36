"""Analytic meshes shared by the test suite."""
