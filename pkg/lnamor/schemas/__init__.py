"""Pydantic models for run configuration and report files."""
