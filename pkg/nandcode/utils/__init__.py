"""Utility helpers for the nandcode package."""
