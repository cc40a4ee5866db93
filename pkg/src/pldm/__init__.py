"""
PLDM world model: networks, training objective and training loop.
"""
