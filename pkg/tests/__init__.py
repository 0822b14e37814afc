"""Test package for the ORKL MCP server."""
