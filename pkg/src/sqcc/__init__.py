"""Modelling and optimization of simultaneous quantum-classical CV-QKD links."""
from .baseline import ChannelModel, ProtocolConfig, QosTarget, RateReport, sqcc_key_rate
from .dual import dual_key_rate, tap_ber
from .gaussian import TwoModeCovariance, holevo_bound, key_rate, mutual_information, plob_bound, takeoka_bound
from .ideal import effective_params, ideal_ber, ideal_key_rate
from .optimize import SearchGrid, SweepFixed, loss_sweep, optimize_point, photon_landscape
from .scissor import scissor_ber, scissor_key_rate, scissor_moments

__version__ = "0.1.0"
