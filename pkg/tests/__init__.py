"""Test suite for AVASR."""
