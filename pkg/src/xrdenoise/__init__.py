"""Structure-aware denoising lab for low-dose radiographs.

A dual-decoder U-Net (plain and Laplacian-enhanced skip paths blended by a
learned per-pixel softmax) trained on synthetic Poisson-Gaussian
degradations of deterministic chest-radiograph phantoms.
"""

__version__ = "0.1.0"
