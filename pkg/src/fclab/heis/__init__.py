"""Rank-one free-boson testbed: Fock modules with nilpotent charge
extensions, intertwining operators, their products and iterates, and the
structural checks run on them."""
