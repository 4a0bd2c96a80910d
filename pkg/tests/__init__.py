"""Tests for sill."""
