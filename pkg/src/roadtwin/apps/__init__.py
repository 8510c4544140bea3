"""Executables: vehicle-agent, twin-server, and the scenario fixture tool."""
