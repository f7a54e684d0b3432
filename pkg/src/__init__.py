"""
reflectseg - Source Package

Core modules for semi-supervised segmentation training with a mean teacher,
error reflection and multi-scale puzzle mixing.
"""
