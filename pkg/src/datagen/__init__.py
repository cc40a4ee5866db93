"""
Offline dataset generation and dataset files.
"""
