"""Tests for rankmap."""
