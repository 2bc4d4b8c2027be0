"""rankmap - optimal rank-constrained encoder-decoder mappings."""

__version__ = "0.1.0"
__author__ = "LiveData Inc"
__description__ = "Closed-form Bayes-optimal low-rank linear and affine mappings"
