"""
Sketch3D - sketch-to-3D face generation at desk scale
U-Net sketch-to-mask translation aligned with a frozen tri-plane mask-to-3D teacher
"""

__version__ = "1.0.0"
