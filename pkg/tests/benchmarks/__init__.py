"""Benchmarks for sill."""
