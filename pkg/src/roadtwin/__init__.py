"""roadtwin: vehicle-to-infrastructure safety telemetry with a desk-scale digital twin.

A vehicle-side agent turns detection/depth streams into per-object safety
metrics (TTC, THW, speed, yaw), uplinks them over a lossy datagram link in
a compact binary format, and an infrastructure-side twin reconstructs the
scene, re-classifies safety, tracks link quality, and relays operator
alerts back to the on-board display.
"""

__version__ = "0.1.0"
