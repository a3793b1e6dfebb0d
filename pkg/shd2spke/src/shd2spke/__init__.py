"""Offline converter from SHD/SSC HDF5 archives to SPKE event files."""

from .convert import ConvertError, convert, split_train_valid
from .spke import Sample, SpkeFile, SpkeError, read, write

__version__ = "0.1.0"
