"""Factories wiring the services into runs: argument parser, pipeline and worker pool."""
