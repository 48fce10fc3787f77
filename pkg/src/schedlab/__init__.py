"""schedlab: runtime prediction and duration-informed scheduling for HPC
job traces."""

__version__ = "0.1.0"
