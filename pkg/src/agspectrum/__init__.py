"""Spectral arcs of finite-gap Schrodinger operators with complex potentials."""
