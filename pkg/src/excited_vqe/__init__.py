"""Excited-state VQE workbench on an exact statevector simulator."""
