"""Weapon detection by an ensemble of per-part CNN classifiers.

Each weapon component gets its own small binary CNN; an arbitrary image is
scanned with a sliding window, every window is scored by every part
network, and the per-part detections are aggregated into an alert
decision, a heatmap, and fused bounding boxes.
"""

__version__ = "0.1.0"
