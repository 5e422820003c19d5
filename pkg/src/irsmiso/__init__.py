"""Joint beamforming and IRS phase-shift design for power minimisation in MU-MISO downlinks."""

__version__ = "0.1.0"
