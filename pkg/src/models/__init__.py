"""
Data Models package for the PLDM toolchain
"""

# This file makes the models directory a Python package
