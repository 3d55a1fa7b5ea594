"""Optical-flow collision proxy for small vehicles.

flowguard turns macroblock motion vectors from a forward camera into steering
overrides: a wire codec for the vector stream, flow-field preprocessing, a
small trainable convolutional network, a dataset pipeline with automatic
labeling, an Ackermann vehicle simulator with synthetic flow rendering, and
the frame-skipping runtime plus link protocols that tie them together.
"""

__version__ = "0.1.0"
