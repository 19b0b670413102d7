"""Tests for llnsim."""
