"""
ssmdrive

An end-to-end driving model built from bidirectional selective state-space
layers: camera tokens, task queries and a memory of past frames are
serialized by scan orders and decoded into detections, map elements, motion
forecasts and an ego plan.
"""

import os

__version__ = "0.1.0"

os.environ.setdefault("SSMDRIVE_THREADS", str(os.cpu_count() or 1))
# evaluation parallelises across episodes; keep each worker's BLAS single-threaded
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")
