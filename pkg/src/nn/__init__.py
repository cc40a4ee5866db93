"""
Minimal numpy tensor library with reverse-mode autodiff, layers, Adam and checkpoints.
"""
